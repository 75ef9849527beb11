import cofforge.constants as cfconst
from cofforge.version import __version__
from cofforge.options import SimConfig, GenerationPlan, PipelineConfig, load_config
from cofforge.scene_sim import simulate_scene, brute_force_facts, SceneAnnotation
from cofforge.frame_align import build_alignment, remap_annotations, SourceTimeline
from cofforge.cof_synth import synth_batch
from cofforge.cof_real import VideoAnnotation, build_prompt, parse_generation, to_cof_samples
from cofforge.client import ReplayClient, RemoteClient
from cofforge.curate import validate, rebalance, dedup, manifest, read_dataset, write_dataset
from cofforge.sample import CofSample
from cofforge.trace_eval import extract_frame_refs, extract_answer, mra, score
from cofforge.results import MetricReport
