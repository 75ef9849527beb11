import inspect
import json
import hashlib
import re

import cofforge.constants as const
from .errors import ConfigError

# a comment starts at "#" at the beginning of a line or after whitespace
_COMMENT = re.compile(r"(^|\s)#.*$")

def _require(cond, message):
  if not cond:
    raise ConfigError(message)

class SimConfig(object):
  """
  Parameters of the kinematic scene generator.

  Lengths are scene units, times seconds. The camera sees the axis-aligned
  box [bounds_lo, bounds_hi]; an object is visible when its center lies in
  the box.
  """

  def __init__(self, n_objects_min=3, n_objects_max=6, n_frames=128, fps=25.0,
               bounds_lo=(-3.,-3.,0.), bounds_hi=(3.,3.,3.), speed_min=0.5,
               speed_max=2.0, radius_min=0.2, radius_max=0.4, restitution=1.0,
               moving_fraction=0.6, allow_entry=True, entry_fraction=0.35,
               allow_exit=True, epsilon_v=const.epsilon_v):

    # object population #
    self.n_objects_min = int(n_objects_min)
    self.n_objects_max = int(n_objects_max)
    _require(1 <= self.n_objects_min <= self.n_objects_max,
             "object count range is empty")
    _require(self.n_objects_max <= const.max_unique_objects,
             "%d objects cannot have unique display names (at most %d)"
             %(self.n_objects_max, const.max_unique_objects))
    self.radius_min = float(radius_min)
    self.radius_max = float(radius_max)
    _require(0. < self.radius_min <= self.radius_max, "radius range is empty")

    # timeline #
    self.n_frames = int(n_frames)
    self.fps = float(fps)
    _require(self.n_frames >= 2, "n_frames must be at least 2")
    _require(self.fps > 0., "fps must be positive")

    # camera box #
    self.bounds_lo = tuple(float(x) for x in bounds_lo)
    self.bounds_hi = tuple(float(x) for x in bounds_hi)
    _require(len(self.bounds_lo) == 3 and len(self.bounds_hi) == 3,
             "camera bounds must be 3-vectors")
    _require(all(lo < hi for lo,hi in zip(self.bounds_lo, self.bounds_hi)),
             "camera bounds are empty")

    # motion #
    self.speed_min = float(speed_min)
    self.speed_max = float(speed_max)
    _require(0. < self.speed_min <= self.speed_max, "speed range is empty")
    self.restitution = float(restitution)
    _require(0. <= self.restitution <= 1., "restitution must lie in [0,1]")
    self.moving_fraction = float(moving_fraction)
    _require(0. <= self.moving_fraction <= 1., "moving_fraction must lie in [0,1]")
    self.epsilon_v = float(epsilon_v)
    _require(self.epsilon_v > 0., "epsilon_v must be positive")

    # entry / exit behavior #
    self.allow_entry = bool(allow_entry)
    self.entry_fraction = float(entry_fraction)
    _require(0. <= self.entry_fraction <= 1., "entry_fraction must lie in [0,1]")
    self.allow_exit = bool(allow_exit)

  @property
  def duration(self):
    return (self.n_frames-1)/self.fps

  def to_dict(self):
    return dict(self.__dict__)

class GenerationPlan(object):
  """Which synthetic templates run, and how many instances per scene."""

  def __init__(self, object_count_collision=True, object_count_motion=True,
               object_count_temporal=True, appearance_order=True,
               relative_distance=True, appearance_per_scene=2,
               temporal_per_scene=2, distance_per_scene=2, subset_min=2,
               subset_max=4, epsilon_v=const.epsilon_v):
    self.object_count_collision = bool(object_count_collision)
    self.object_count_motion = bool(object_count_motion)
    self.object_count_temporal = bool(object_count_temporal)
    self.appearance_order = bool(appearance_order)
    self.relative_distance = bool(relative_distance)
    self.appearance_per_scene = int(appearance_per_scene)
    self.temporal_per_scene = int(temporal_per_scene)
    self.distance_per_scene = int(distance_per_scene)
    _require(min(self.appearance_per_scene, self.temporal_per_scene,
                 self.distance_per_scene) >= 0, "per-scene counts must be non-negative")
    self.subset_min = int(subset_min)
    self.subset_max = int(subset_max)
    _require(2 <= self.subset_min <= self.subset_max <= 4,
             "appearance subsets hold between 2 and 4 objects")
    self.epsilon_v = float(epsilon_v)
    _require(self.epsilon_v > 0., "epsilon_v must be positive")

  @classmethod
  def only(cls, *categories, **kwargs):
    """Plan that enables just the given categories."""
    flags = dict((c, c in categories) for c in const.synth_categories)
    flags.update(kwargs)
    return cls(**flags)

  def enabled(self, category):
    return getattr(self, category)

  def to_dict(self):
    return dict(self.__dict__)

class PipelineConfig(object):
  """
  Options for the whole pipeline: alignment, curation, the generation
  client and the nested simulator / template settings.
  """

  def __init__(self, max_duration_s=const.max_duration_s, frame_budget=const.frame_budget,
               target_zero_ref_fraction=const.target_zero_ref_fraction, seed=0,
               n_scenes=20, scene_seed_start=0, client='replay', model='llama-3.1-8b-instruct',
               temperature=const.temperature, max_new_tokens=const.max_new_tokens,
               max_in_flight=const.max_in_flight, max_tries=const.max_tries,
               backoff_base=const.backoff_base, timeout_s=60.0, instruction=None,
               requests_per_video=1, jobs=1, progress=True, verbose=True,
               real_annotations=None, fixtures=None, out_dir='cof_out',
               sim=None, plan=None):

    # alignment #
    self.max_duration_s = float(max_duration_s)
    self.frame_budget = int(frame_budget)
    _require(self.max_duration_s > 0., "max_duration_s must be positive")
    _require(self.frame_budget >= 2, "frame_budget must be at least 2")

    # curation #
    self.target_zero_ref_fraction = float(target_zero_ref_fraction)
    _require(0. <= self.target_zero_ref_fraction <= 1.,
             "target_zero_ref_fraction must lie in [0,1]")

    # seeds #
    self.seed = int(seed)
    self.n_scenes = int(n_scenes)
    self.scene_seed_start = int(scene_seed_start)
    _require(self.n_scenes > 0, "n_scenes must be positive")

    # generation client #
    assert(client in ['replay','remote']), "client must be replay or remote"
    self.client = client
    self.model = model
    self.temperature = float(temperature)
    _require(self.temperature >= 0., "temperature must be non-negative")
    self.max_new_tokens = int(max_new_tokens)
    self.max_in_flight = int(max_in_flight)
    self.max_tries = int(max_tries)
    self.backoff_base = float(backoff_base)
    self.timeout_s = float(timeout_s)
    _require(min(self.max_new_tokens, self.max_in_flight, self.max_tries) > 0,
             "generation limits must be positive")
    _require(self.backoff_base >= 0. and self.timeout_s > 0., "invalid retry timing")
    if instruction is not None:
      _require(len(str(instruction).strip()) > 0, "instruction override is empty")
    self.instruction = instruction
    self.requests_per_video = int(requests_per_video)
    _require(self.requests_per_video > 0, "requests_per_video must be positive")

    # run options #
    self.jobs = int(jobs)
    _require(self.jobs > 0, "jobs must be positive")
    self.progress = bool(progress)
    self.verbose = bool(verbose)

    # paths #
    self.real_annotations = real_annotations
    self.fixtures = fixtures
    self.out_dir = out_dir

    # nested settings #
    self.sim = sim if sim is not None else SimConfig()
    self.plan = plan if plan is not None else GenerationPlan()

  def to_dict(self):
    out = dict((k, v) for k,v in self.__dict__.items() if k not in ('sim','plan'))
    out['sim'] = self.sim.to_dict()
    out['plan'] = self.plan.to_dict()
    return out

  def config_hash(self):
    canon = json.dumps(self.to_dict(), sort_keys=True, separators=(',',':'))
    return hashlib.sha256(canon.encode('utf-8')).hexdigest()

################################################################################
# plain-text key = value files                                                 #
################################################################################
def parse_value(text):
  """int, float, bool, comma-separated floats, or the raw string."""
  low = text.lower()
  if low in ('true','yes','on'):
    return True
  if low in ('false','no','off'):
    return False
  if low in ('none','null'):
    return None
  for cast in (int, float):
    try:
      return cast(text)
    except ValueError:
      pass
  if ',' in text:
    try:
      return tuple(float(x) for x in text.strip('()[] ').split(','))
    except ValueError:
      pass
  return text

def parse_config_text(text, path='<config>'):
  """
  Parses ``key = value`` lines into (top, sim, plan) keyword dicts.

  Raises
  ------
  ConfigError
    on a line without ``=`` or an unknown key, citing the line.
  """
  known = {
    '': set(inspect.signature(PipelineConfig.__init__).parameters) - {'self','sim','plan'},
    'sim': set(inspect.signature(SimConfig.__init__).parameters) - {'self'},
    'plan': set(inspect.signature(GenerationPlan.__init__).parameters) - {'self'},
  }
  sections = {'': {}, 'sim': {}, 'plan': {}}
  for i,raw in enumerate(text.splitlines(), 1):
    line = _COMMENT.sub("", raw).strip()
    if not line:
      continue
    if '=' not in line:
      raise ConfigError("expected 'key = value'", "%s:%d"%(path, i))
    key, value = [s.strip() for s in line.split('=', 1)]
    section, _, name = key.rpartition('.')
    if section not in sections or name not in known[section]:
      raise ConfigError("unknown key '%s'"%(key), "%s:%d"%(path, i))
    sections[section][name] = parse_value(value)
  return sections[''], sections['sim'], sections['plan']

def load_config(path=None, **overrides):
  """Builds a PipelineConfig from a config file plus keyword overrides."""
  top, sim, plan = {}, {}, {}
  if path is not None:
    with open(path, 'r', encoding='utf-8') as f:
      top, sim, plan = parse_config_text(f.read(), str(path))
  top.update(dict((k, v) for k,v in overrides.items() if v is not None))
  try:
    return PipelineConfig(sim=SimConfig(**sim), plan=GenerationPlan(**plan), **top)
  except ConfigError as e:
    if e.locator is None and path is not None:
      e.locator = str(path)
    raise
  except AssertionError as e:
    raise ConfigError(str(e), str(path) if path is not None else None)
