"""
Chain-of-frames samples from synthetic scene annotations, written with
fixed templates: object count (collisions, moving objects, collisions after
an entry), appearance order and relative distance.

Scenes must already be aligned, so every "Frame <n>" names a frame the
model receives.
"""
import math
import zlib
import numpy as np

from scipy.spatial.distance import cdist

import cofforge.constants as const

from .errors import (NoEntryEvent, AmbiguousOrder, NoSuchEvent,
                     TooFewNeighbors, DistanceTie)
from .log import Progress
from .options import GenerationPlan
from .sample import make_sample
from .template import Template
from .utils import speeds, ordered_map

COLLISION_QUESTION = "How many collisions happen in this video?"
MOVING_QUESTION = "How many moving objects are in the video?"
TEMPORAL_QUESTION = "After the %s enters the scene, how many collisions happen?"
ORDER_QUESTION = "what is the appearance order of %s in the video?"
DISTANCE_QUESTION = ("Measuring from the closest point of each object, when %s %s the scene, "
                     "which of these objects (%s) is closest to the %s?")
ACTIONS = ('enters', 'exits')

def _collision_step(scene, event):
  a, b = event.pair
  return "A collision happens in Frame %d between %s and %s"%(
    event.frame_id, scene.name(a), scene.name(b))

################################################################################
# renderers: (question, steps, answer)                                         #
################################################################################
def render_collision_count(scene):
  steps = [_collision_step(scene, c) for c in scene.collisions]
  if not steps:
    steps = ["No collisions are observed in the video."]
  return (COLLISION_QUESTION, steps,
          "%d collisions happen in this video."%(len(scene.collisions)))

def moving_frames(scene, epsilon_v=const.epsilon_v):
  """{object_id: first visible frame with speed > epsilon_v} for moving objects."""
  fast = (speeds(scene.velocities) > epsilon_v) & scene.visible
  out = {}
  for o in scene.objects:
    idx = np.flatnonzero(fast[:,o.object_id])
    if len(idx):
      out[o.object_id] = int(idx[0])+1
  return out

def render_moving_count(scene, epsilon_v=const.epsilon_v):
  cited = moving_frames(scene, epsilon_v)
  steps = ["%s is moving in Frame %d"%(scene.name(o), f) for o,f in sorted(cited.items())]
  if not steps:
    steps = ["No moving objects are observed in the video."]
  return MOVING_QUESTION, steps, "%d moving objects are in the video."%(len(cited))

def render_temporal_count(scene, anchor_object_id):
  f0 = scene.first_visible(anchor_object_id)
  if f0 is None or f0 == 1:
    raise NoEntryEvent("%s never enters the scene"%(scene.name(anchor_object_id)))
  anchor = scene.name(anchor_object_id)
  after = [c for c in scene.collisions if c.frame_id >= f0]
  steps = ["The %s enters the scene in Frame %d"%(anchor, f0)]
  steps += [_collision_step(scene, c) for c in after]
  answer = "%d collisions happen after the %s enters the scene."%(len(after), anchor)
  return TEMPORAL_QUESTION%(anchor), steps, answer

def render_appearance_order(scene, object_subset):
  subset = [int(o) for o in object_subset]
  if not 2 <= len(subset) <= 4 or len(set(subset)) != len(subset):
    raise ValueError("appearance order needs 2 to 4 distinct objects")
  first = {}
  for o in subset:
    f = scene.first_visible(o)
    if f is None:
      raise NoSuchEvent("%s never appears"%(scene.name(o)))
    first[o] = f
  if len(set(first.values())) != len(subset):
    raise AmbiguousOrder("two objects first appear in the same frame")
  names = [scene.name(o) for o in subset]
  steps = ["%s appears in Frame %d"%(scene.name(o), first[o]) for o in subset]
  answer = ", ".join(scene.name(o) for o in sorted(subset, key=lambda o: first[o]))
  return ORDER_QUESTION%(", ".join(names)), steps, answer

def surface_distances(scene, frame_id, target, others):
  """Center distance minus both radii, floored at 0, from target to others."""
  pos = scene.positions[frame_id-1]
  d = cdist(pos[[target]], pos[others])[0]
  radii = np.array([scene.radius(o) for o in others])
  return np.maximum(d - scene.radius(target) - radii, 0.)

def render_relative_distance(scene, target_object_id, action):
  if action not in ACTIONS:
    raise ValueError("action must be one of %s"%(", ".join(ACTIONS)))
  t = target_object_id
  f = scene.entry_frame(t) if action == 'enters' else scene.exit_frame(t)
  if f is None:
    raise NoSuchEvent("%s never %s the scene"%(scene.name(t), action))
  others = [o for o in scene.visible_at(f) if o != t]
  if len(others) < 2:
    raise TooFewNeighbors("%d visible neighbors in frame %d"%(len(others), f))
  dist = surface_distances(scene, f, t, others)
  shown = ["%.2f"%(d) for d in dist]
  best = int(np.argmin(dist))
  if shown.count(shown[best]) > 1:
    raise DistanceTie("closest neighbors tie at %s"%(shown[best]))
  target = scene.name(t)
  question = DISTANCE_QUESTION%(target, action, ", ".join(scene.name(o) for o in others), target)
  steps = ["The %s %s the scene in Frame %d. In Frame %d, the distance between %s and %s is %s."
           %(target, action, f, f, target, scene.name(o), s) for o,s in zip(others, shown)]
  return question, steps, scene.name(others[best])

################################################################################
# single-sample generators                                                     #
################################################################################
def _sample(scene, category, rendered, index=0):
  question, steps, answer = rendered
  sid = "%s/%s/%d"%(scene.scene_id, category, index)
  return make_sample(sid, scene.scene_id, 'synth', category, question, steps,
                     answer, scene.n_frames)

def gen_collision_count(scene):
  return _sample(scene, 'object_count_collision', render_collision_count(scene))

def gen_moving_count(scene, epsilon_v=const.epsilon_v):
  return _sample(scene, 'object_count_motion', render_moving_count(scene, epsilon_v))

def gen_temporal_count(scene, anchor_object_id):
  """Raises NoEntryEvent."""
  return _sample(scene, 'object_count_temporal', render_temporal_count(scene, anchor_object_id))

def gen_appearance_order(scene, object_subset):
  """Raises AmbiguousOrder or NoSuchEvent."""
  return _sample(scene, 'appearance_order', render_appearance_order(scene, object_subset))

def gen_relative_distance(scene, target_object_id, action):
  """Raises NoSuchEvent, TooFewNeighbors or DistanceTie."""
  return _sample(scene, 'relative_distance',
                 render_relative_distance(scene, target_object_id, action))

################################################################################
# templates                                                                    #
################################################################################
class CollisionCount(Template):
  category = 'object_count_collision'

  def candidates(self, scene, rng):
    return [None]

  def render(self, scene, arg):
    return render_collision_count(scene)

class MovingCount(Template):
  category = 'object_count_motion'

  def candidates(self, scene, rng):
    return [None]

  def render(self, scene, arg):
    return render_moving_count(scene, self.plan.epsilon_v)

class TemporalCount(Template):
  category = 'object_count_temporal'

  def candidates(self, scene, rng):
    return [int(o) for o in rng.permutation(len(scene.objects))]

  def limit(self):
    return self.plan.temporal_per_scene

  def render(self, scene, arg):
    return render_temporal_count(scene, arg)

class AppearanceOrder(Template):
  category = 'appearance_order'

  def candidates(self, scene, rng):
    """Distinct object subsets; the order inside a subset is random."""
    nobj = len(scene.objects)
    if nobj < 2:
      return []
    hi = min(self.plan.subset_max, nobj)
    lo = min(self.plan.subset_min, hi)
    total = sum(math.comb(nobj, k) for k in range(lo, hi+1))
    out = []
    seen = set()
    while len(out) < min(self.plan.appearance_per_scene, total):
      size = int(rng.integers(lo, hi+1))
      pick = [int(o) for o in rng.choice(nobj, size=size, replace=False)]
      if frozenset(pick) not in seen:
        seen.add(frozenset(pick))
        out.append(pick)
    return out

  def render(self, scene, arg):
    return render_appearance_order(scene, arg)

class RelativeDistance(Template):
  category = 'relative_distance'

  def candidates(self, scene, rng):
    pairs = [(o.object_id, a) for o in scene.objects for a in ACTIONS]
    return [pairs[int(i)] for i in rng.permutation(len(pairs))]

  def limit(self):
    return self.plan.distance_per_scene

  def render(self, scene, arg):
    return render_relative_distance(scene, *arg)

TEMPLATES = (CollisionCount, MovingCount, TemporalCount, AppearanceOrder, RelativeDistance)

################################################################################
# batches                                                                      #
################################################################################
def scene_rng(seed, scene_id):
  """Generator of one scene, independent of batch order and worker count."""
  return np.random.default_rng([int(seed), zlib.crc32(scene_id.encode('utf-8'))])

def synth_scene(scene, plan, seed, verbose=False):
  """Samples and skip records of one scene."""
  rng = scene_rng(seed, scene.scene_id)
  samples = []
  skipped = []
  for cls in TEMPLATES:
    if plan.enabled(cls.category):
      samples += cls(plan).generate(scene, rng, skipped, verbose)
  return samples, skipped

def synth_batch(scenes, plan=None, seed=0, skipped=None, jobs=1, progress=False, verbose=False):
  """
  Applies every enabled template to every scene.

  Deterministic given seed for any jobs value: samples are sorted by
  (scene_id, category, sample index) before being returned.

  Parameters
  ----------
  scenes: list of SceneAnnotation
  plan: GenerationPlan
  seed: int
  skipped: list or None
    receives (scene_id, category, reason) for every skipped instance
  jobs: int
    scenes processed concurrently

  Returns
  -------
  list of CofSample
  """
  plan = plan if plan is not None else GenerationPlan()
  scenes = list(scenes)
  work = lambda scene: synth_scene(scene, plan, seed, verbose)
  bar = Progress(len(scenes), progress)
  if jobs > 1:
    results = ordered_map(work, scenes, jobs)
  else:
    results = []
    for i,scene in enumerate(scenes):
      bar.update(i)
      results.append(work(scene))
  bar.done()

  samples = []
  for new, skips in results:
    samples += new
    if skipped is not None:
      skipped += skips
  order = dict((c, i) for i,c in enumerate(const.categories))
  samples.sort(key=lambda s: (s.video_ref, order[s.category], int(s.sample_id.rsplit('/', 1)[1])))
  return samples
