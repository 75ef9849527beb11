"""
cof-forge command line: simulate, align, synth, real-gen, curate,
trace-stats, eval and the chained pipeline.

Usage errors exit 2. Data errors exit 1 after printing
``error: <locator>: <message>`` for the first offending record.
"""
import argparse
import json
import os
import sys

import cofforge.constants as const

from .client import make_client
from .cof_real import read_videos, generate_real, VideoAnnotation
from .cof_synth import synth_batch
from .curate import (curate_samples, derive_variant, manifest, print_manifest,
                     read_dataset, write_dataset, write_rejects, VARIANTS)
from .errors import CofForgeError
from .frame_align import align_records
from .log import print_method, print_stage, print_count, print_warning
from .options import load_config
from .printing import histogram_rows
from .results import add_reports
from .scene_sim import simulate_scenes, write_scenes, SceneAnnotation
from .trace_eval import (Prediction, read_predictions, read_tasks, score,
                         reference_histogram)
from .utils import iter_jsonl, write_jsonl
from .version import __version__

################################################################################
# helpers                                                                      #
################################################################################
def parse_seeds(text):
  """'a..b' (inclusive) or a single integer."""
  try:
    if '..' in text:
      a, b = text.split('..', 1)
      a, b = int(a), int(b)
    else:
      a = b = int(text)
  except ValueError:
    raise argparse.ArgumentTypeError("seeds must look like 'a..b' or 'n', got '%s'"%(text))
  if b < a:
    raise argparse.ArgumentTypeError("empty seed range '%s'"%(text))
  return list(range(a, b+1))

def write_run_manifest(out, command, inputs, config, seeds, counts, outputs):
  """
  Writes <out>.run.json. Returns False when a declared output is missing.
  No timestamps, so identical runs write identical manifests.
  """
  record = {'command': command, 'version': __version__,
            'inputs': [str(p) for p in inputs],
            'config_hash': config.config_hash() if config is not None else None,
            'seeds': seeds, 'counts': counts,
            'outputs': [str(p) for p in outputs]}
  with open(str(out)+".run.json", 'w', encoding='utf-8') as f:
    f.write(json.dumps(record, indent=2, sort_keys=True)+"\n")
  return all(os.path.exists(p) for p in outputs)

def read_annotations(path):
  """Scene or video records, told apart by their id field."""
  out = []
  for i,r in iter_jsonl(path):
    if 'scene_id' in r:
      out.append(SceneAnnotation.from_dict(r, path, i))
    else:
      out.append(VideoAnnotation.from_dict(r, path, i))
  return out

def write_dropped(path, dropped):
  with open(path, 'w', encoding='utf-8') as f:
    for ref,reason in dropped:
      f.write("%s\t%s\n"%(ref, reason))

def write_trace_stats(path, predictions):
  hist = reference_histogram(predictions)
  n = len(predictions)
  record = {'n_predictions': n, 'histogram': hist,
            'zero_ref_fraction': hist['0']/n if n else 0.0}
  with open(path, 'w', encoding='utf-8') as f:
    f.write(json.dumps(record, indent=2, sort_keys=True)+"\n")
  with open(str(path)+".csv", 'w', encoding='utf-8') as f:
    f.write("\n".join(histogram_rows([('predictions', hist)]))+"\n")
  return record

def _align(records, config, out, report):
  aligned, dropped = align_records(records, config.max_duration_s, config.frame_budget,
                                   config.verbose, config.jobs)
  n = write_jsonl(out, (a.to_dict() for a in aligned))
  write_dropped(report, dropped)
  if dropped:
    print_warning("%d of %d records dropped during alignment, see %s"
                  %(len(dropped), len(records), report))
  return aligned, dropped, n

def _config(args, **overrides):
  path = getattr(args, 'config', None)
  if getattr(args, 'quiet', False):
    overrides.update(verbose=False, progress=False)
  return load_config(path, **overrides)

################################################################################
# subcommands                                                                  #
################################################################################
def cmd_simulate(args, env):
  config = _config(args, jobs=args.jobs)
  print_stage("simulate %d scenes"%(len(args.seeds)))
  scenes = simulate_scenes(config.sim, args.seeds, config.jobs)
  n = write_scenes(args.out, scenes)
  print_count("scenes", n)
  return write_run_manifest(args.out, 'simulate', [args.config] if args.config else [],
                            config, args.seeds, {'scenes': n}, [args.out])

def cmd_align(args, env):
  config = _config(args, max_duration_s=args.max_duration, frame_budget=args.budget,
                   jobs=args.jobs)
  print_stage("align %s"%(args.inp))
  records = read_annotations(args.inp)
  aligned, dropped, n = _align(records, config, args.out, args.report)
  print_count("aligned", n)
  print_count("dropped", len(dropped))
  return write_run_manifest(args.out, 'align', [args.inp], config, [],
                            {'aligned': n, 'dropped': len(dropped)}, [args.out, args.report])

def cmd_synth(args, env):
  config = load_config(args.plan, seed=args.seed, jobs=args.jobs)
  print_stage("synth %s"%(args.scenes))
  scenes = [r for r in read_annotations(args.scenes) if isinstance(r, SceneAnnotation)]
  skipped = []
  samples = synth_batch(scenes, config.plan, config.seed, skipped, config.jobs,
                        config.progress and not args.quiet, config.verbose and not args.quiet)
  n = write_dataset(samples, args.out)
  print_count("samples", n)
  print_count("skipped instances", len(skipped))
  inputs = [args.scenes] + ([args.plan] if args.plan else [])
  return write_run_manifest(args.out, 'synth', inputs, config, [config.seed],
                            {'scenes': len(scenes), 'samples': n, 'skipped': len(skipped)},
                            [args.out])

def cmd_real_gen(args, env):
  config = _config(args, client=args.client, fixtures=args.fixtures,
                   max_in_flight=args.max_in_flight)
  print_stage("real-gen %s (%s client)"%(args.annotations, config.client))
  videos = read_videos(args.annotations)
  client = make_client(config, env)
  samples, rejects = generate_real(videos, client, config)
  n = write_dataset(samples, args.out)
  write_rejects(rejects, args.rejects)
  print_count("samples", n)
  print_count("rejects", len(rejects))
  inputs = [args.annotations] + ([config.fixtures] if config.client == 'replay' else [])
  return write_run_manifest(args.out, 'real-gen', inputs, config, [],
                            {'videos': len(videos), 'samples': n, 'rejects': len(rejects)},
                            [args.out, args.rejects])

def cmd_curate(args, env):
  config = _config(args, target_zero_ref_fraction=args.target_zero_frac, seed=args.seed)
  inputs = [p for p in args.inp.split(',') if p]
  print_stage("curate %s"%(", ".join(inputs)))
  samples = []
  for path in inputs:
    samples += read_dataset(path)
  dataset, rejects = curate_samples(samples, config.target_zero_ref_fraction,
                                    config.seed, config.verbose)
  dataset = derive_variant(dataset, args.variant)
  n = write_dataset(dataset, args.out)
  rejects_path = args.rejects or str(args.out)+".rejects.jsonl"
  write_rejects(rejects, rejects_path)
  man = manifest(dataset)
  man.write(args.manifest)
  print_manifest(man)
  return write_run_manifest(args.out, 'curate', inputs, config, [config.seed],
                            {'input': len(samples), 'rejected': len(rejects), 'dataset': n},
                            [args.out, args.manifest, rejects_path])

def cmd_trace_stats(args, env):
  print_stage("trace-stats %s"%(args.preds))
  preds = read_predictions(args.preds)
  record = write_trace_stats(args.out, preds)
  print_count("predictions", record['n_predictions'])
  return write_run_manifest(args.out, 'trace-stats', [args.preds], None, [],
                            {'predictions': len(preds)}, [args.out])

def cmd_eval(args, env):
  """Scores each tasks/preds pair on its own and merges the reports."""
  print_stage("eval %s"%(", ".join(args.preds)))
  report = None
  n_tasks = n_preds = 0
  for tasks_path, preds_path in zip(args.tasks, args.preds):
    tasks = read_tasks(tasks_path)
    preds = read_predictions(preds_path)
    report = add_reports(report, score(tasks, preds))
    n_tasks += len(tasks)
    n_preds += len(preds)
  report.write(args.report)
  report.print_summary()
  return write_run_manifest(args.report, 'eval', args.tasks + args.preds, None, [],
                            {'tasks': n_tasks, 'predictions': n_preds,
                             'no_answer': report.no_answer, 'missing': report.missing},
                            [args.report])

def _resolve(path, base):
  if path is None or os.path.isabs(path):
    return path
  return os.path.join(base, path)

def cmd_pipeline(args, env):
  """simulate -> align -> synth, align -> real-gen -> curate -> manifest -> trace-stats."""
  config = _config(args)
  base = os.path.dirname(os.path.abspath(args.config))
  config.real_annotations = _resolve(config.real_annotations, base)
  config.fixtures = _resolve(config.fixtures, base)
  out_dir = args.out_dir or config.out_dir
  os.makedirs(out_dir, exist_ok=True)
  path = lambda name: os.path.join(out_dir, name)
  counts = {}
  print_method("cof-forge pipeline")

  print_stage("simulate")
  seeds = list(range(config.scene_seed_start, config.scene_seed_start+config.n_scenes))
  scenes = simulate_scenes(config.sim, seeds, config.jobs)
  counts['scenes'] = write_scenes(path('scenes.jsonl'), scenes)

  print_stage("align scenes")
  scenes, dropped, counts['scenes_aligned'] = _align(scenes, config, path('scenes_aligned.jsonl'),
                                                     path('scenes_dropped.tsv'))

  print_stage("synth")
  skipped = []
  synth = synth_batch(scenes, config.plan, config.seed, skipped, config.jobs,
                      config.progress, config.verbose)
  counts['synth_samples'] = write_dataset(synth, path('synth.jsonl'))
  counts['synth_skipped'] = len(skipped)
  outputs = [path('scenes.jsonl'), path('scenes_aligned.jsonl'), path('synth.jsonl')]
  inputs = [args.config]

  real = []
  if config.real_annotations:
    print_stage("align videos")
    videos = read_videos(config.real_annotations)
    videos, dropped, counts['videos_aligned'] = _align(videos, config, path('videos_aligned.jsonl'),
                                                       path('videos_dropped.tsv'))
    print_stage("real-gen")
    client = make_client(config, env)
    real, rejects = generate_real(videos, client, config)
    counts['real_samples'] = write_dataset(real, path('real.jsonl'))
    counts['real_rejects'] = write_rejects(rejects, path('real_rejects.jsonl'))
    outputs += [path('videos_aligned.jsonl'), path('real.jsonl')]
    inputs += [config.real_annotations, config.fixtures]

  print_stage("curate")
  dataset, rejects = curate_samples(real + synth, config.target_zero_ref_fraction,
                                    config.seed, config.verbose)
  counts['dataset'] = write_dataset(dataset, path('dataset.jsonl'))
  counts['dataset_rejects'] = write_rejects(rejects, path('dataset_rejects.jsonl'))
  man = manifest(dataset)
  man.write(path('manifest.json'))
  print_manifest(man)

  print_stage("trace-stats")
  write_trace_stats(path('trace_stats.json'),
                    [Prediction(s.sample_id, s.reasoning_text) for s in dataset])
  outputs += [path('dataset.jsonl'), path('manifest.json'), path('trace_stats.json')]
  return write_run_manifest(path('pipeline'), 'pipeline', inputs, config, seeds, counts, outputs)

################################################################################
# entry points                                                                 #
################################################################################
def build_parser():
  parser = argparse.ArgumentParser(prog='cof-forge',
                                   description='Chain-of-frames dataset generation, curation and evaluation.')
  parser.add_argument('--version', action='version', version='%(prog)s '+__version__)
  sub = parser.add_subparsers(dest='command', metavar='command')
  sub.required = True

  def add(name, func, help):
    p = sub.add_parser(name, help=help)
    p.set_defaults(func=func)
    p.add_argument('--quiet', action='store_true', help='no progress or skip logs')
    return p

  p = add('simulate', cmd_simulate, 'generate synthetic scene annotations')
  p.add_argument('--config', default=None)
  p.add_argument('--seeds', type=parse_seeds, required=True, help="inclusive range a..b")
  p.add_argument('--jobs', type=int, default=None, help='worker threads')
  p.add_argument('--out', required=True)

  p = add('align', cmd_align, 'clip, downsample and re-index annotations')
  p.add_argument('--config', default=None)
  p.add_argument('--max-duration', type=float, default=None, help='seconds (default %g)'%(const.max_duration_s))
  p.add_argument('--budget', type=int, default=None, help='frames (default %d)'%(const.frame_budget))
  p.add_argument('--jobs', type=int, default=None, help='worker threads')
  p.add_argument('--in', dest='inp', required=True)
  p.add_argument('--out', required=True)
  p.add_argument('--report', required=True, help='dropped records, one "<id>\\t<reason>" per line')

  p = add('synth', cmd_synth, 'template samples from aligned scenes')
  p.add_argument('--scenes', required=True)
  p.add_argument('--plan', default=None, help='config file with plan.* keys')
  p.add_argument('--seed', type=int, default=None)
  p.add_argument('--jobs', type=int, default=None, help='worker threads')
  p.add_argument('--out', required=True)

  p = add('real-gen', cmd_real_gen, 'generated samples from aligned video captions')
  p.add_argument('--config', default=None)
  p.add_argument('--annotations', required=True)
  p.add_argument('--client', choices=['replay','remote'], default=None)
  p.add_argument('--fixtures', default=None)
  p.add_argument('--max-in-flight', type=int, default=None)
  p.add_argument('--out', required=True)
  p.add_argument('--rejects', required=True)

  p = add('curate', cmd_curate, 'filter, deduplicate and rebalance samples')
  p.add_argument('--config', default=None)
  p.add_argument('--in', dest='inp', required=True, help='comma-separated dataset files')
  p.add_argument('--target-zero-frac', type=float, default=None)
  p.add_argument('--seed', type=int, default=None)
  p.add_argument('--variant', choices=VARIANTS, default='cof')
  p.add_argument('--out', required=True)
  p.add_argument('--manifest', required=True)
  p.add_argument('--rejects', default=None)

  p = add('trace-stats', cmd_trace_stats, 'frame-reference histogram of predictions')
  p.add_argument('--preds', required=True)
  p.add_argument('--out', required=True)

  p = add('eval', cmd_eval, 'score predictions against benchmark tasks')
  p.add_argument('--tasks', nargs='+', required=True, help='one or more task files')
  p.add_argument('--preds', nargs='+', required=True, help='one prediction file per task file')
  p.add_argument('--report', required=True)

  p = add('pipeline', cmd_pipeline, 'run every stage from a config file')
  p.add_argument('--config', required=True)
  p.add_argument('--out-dir', default=None)
  return parser

def run_subcommand(argv, env=None):
  """
  Runs one subcommand and returns its exit status: 0 when the declared
  outputs exist, 1 on a data error, 2 on a usage error.
  """
  env = dict(os.environ) if env is None else env
  parser = build_parser()
  try:
    args = parser.parse_args(argv)
    if args.command == 'eval' and len(args.tasks) != len(args.preds):
      parser.error("eval needs one --preds file per --tasks file")
  except SystemExit as e:
    return e.code if isinstance(e.code, int) else 2
  try:
    ok = args.func(args, env)
  except CofForgeError as e:
    sys.stderr.write("error: %s\n"%(e))
    return 1
  except OSError as e:
    sys.stderr.write("error: %s: %s\n"%(e.filename, e.strerror))
    return 1
  if not ok:
    sys.stderr.write("error: %s did not produce its outputs\n"%(args.command))
    return 1
  return 0

def main():
  sys.exit(run_subcommand(sys.argv[1:]))

if __name__ == "__main__":
  main()
