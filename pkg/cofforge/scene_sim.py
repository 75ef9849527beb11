"""
Deterministic kinematic generator of synthetic scene annotations.

Each object carries fixed properties (shape, material, color, radius) and,
for every frame, a visibility flag, a center position and a velocity.
Objects move on straight lines; when two visible objects first overlap the
collision is recorded at that frame and their velocities are exchanged
along the line of centers, scaled by the restitution coefficient.
"""
import math
import numpy as np
from dataclasses import dataclass

from numba import jit

import cofforge.constants as const

from .errors import ConfigError, DatasetFormatError
from .integrator import Integrator
from .utils import unit, to_list, write_jsonl, iter_jsonl, check_fields, ordered_map

@jit(nopython=True)
def inside_box(pos, lo, hi):
  """Visibility of every center in pos (n,3) for the box [lo, hi]."""
  n = pos.shape[0]
  out = np.zeros(n, dtype=np.bool_)
  for i in range(n):
    inside = True
    for k in range(3):
      if pos[i,k] < lo[k] or pos[i,k] > hi[k]:
        inside = False
    out[i] = inside
  return out

@jit(nopython=True)
def center_distances(pos):
  """Symmetric matrix of center distances for pos (n,3)."""
  n = pos.shape[0]
  d = np.zeros((n,n))
  for i in range(n):
    for j in range(i+1,n):
      s = 0.0
      for k in range(3):
        s += (pos[i,k]-pos[j,k])**2
      d[i,j] = np.sqrt(s)
      d[j,i] = d[i,j]
  return d

@dataclass(frozen=True)
class ObjectSpec:
  object_id: int
  shape: str
  material: str
  color: str
  radius: float

  def __post_init__(self):
    if self.shape not in const.shapes:
      raise ValueError("unknown shape '%s'"%(self.shape))
    if self.material not in const.materials:
      raise ValueError("unknown material '%s'"%(self.material))
    if self.color not in const.colors:
      raise ValueError("unknown color '%s'"%(self.color))
    if not self.radius > 0.:
      raise ValueError("radius must be positive")

  @property
  def name(self):
    return "%s %s %s"%(self.color, self.material, self.shape)

  def to_dict(self):
    return {'object_id': self.object_id, 'shape': self.shape,
            'material': self.material, 'color': self.color, 'radius': self.radius}

@dataclass(frozen=True)
class ObjectState:
  object_id: int
  inside_camera: bool
  position: tuple
  velocity: tuple

  def to_dict(self):
    return {'object_id': self.object_id, 'inside_camera': self.inside_camera,
            'position': list(self.position), 'velocity': list(self.velocity)}

@dataclass(frozen=True)
class CollisionEvent:
  frame_id: int
  pair: tuple

  def __post_init__(self):
    a, b = self.pair
    if a == b:
      raise ValueError("a collision needs two distinct objects")
    object.__setattr__(self, 'pair', (min(a,b), max(a,b)))

  def to_dict(self):
    return {'frame_id': self.frame_id, 'pair': list(self.pair)}

class SceneAnnotation(object):
  """
  Raw annotation of one synthetic video.

  Per-frame states are held as arrays: positions and velocities of shape
  (n_frames, n_objects, 3) and visibility of shape (n_frames, n_objects).
  ``frames`` exposes them as lists of ObjectState.
  """

  def __init__(self, scene_id, fps, n_frames, objects, positions, velocities,
               visible, collisions):
    self.scene_id = str(scene_id)
    self.fps = float(fps)
    self.n_frames = int(n_frames)
    self.objects = list(objects)
    self.positions = np.asarray(positions, dtype=float)
    self.velocities = np.asarray(velocities, dtype=float)
    self.visible = np.asarray(visible, dtype=bool)
    self.collisions = sorted(collisions, key=lambda c: (c.frame_id, c.pair))
    self.check()

  def check(self):
    """Checks the type invariants; raises ValueError."""
    nobj = len(self.objects)
    if self.fps <= 0. or self.n_frames < 1:
      raise ValueError("%s: fps and n_frames must be positive"%(self.scene_id))
    if [o.object_id for o in self.objects] != list(range(nobj)):
      raise ValueError("%s: object ids must be contiguous from 0"%(self.scene_id))
    if len(set(o.name for o in self.objects)) != nobj:
      raise ValueError("%s: object display names are not unique"%(self.scene_id))
    shape = (self.n_frames, nobj)
    if self.positions.shape != shape+(3,) or self.velocities.shape != shape+(3,) \
       or self.visible.shape != shape:
      raise ValueError("%s: every frame needs one state per object"%(self.scene_id))
    seen = set()
    for c in self.collisions:
      if not 1 <= c.frame_id <= self.n_frames:
        raise ValueError("%s: collision frame %d out of range"%(self.scene_id, c.frame_id))
      if max(c.pair) >= nobj:
        raise ValueError("%s: collision names an unknown object"%(self.scene_id))
      if not self.visible[c.frame_id-1, list(c.pair)].all():
        raise ValueError("%s: collision at frame %d has an object out of camera"
                         %(self.scene_id, c.frame_id))
      key = (c.frame_id, c.pair)
      if key in seen:
        raise ValueError("%s: duplicate collision %s"%(self.scene_id, key))
      seen.add(key)

  def __repr__(self):
    return "SceneAnnotation(%s, %d objects, %d frames, %d collisions)"%(
      self.scene_id, len(self.objects), self.n_frames, len(self.collisions))

  def __eq__(self, other):
    if not isinstance(other, SceneAnnotation):
      return NotImplemented
    return (self.scene_id == other.scene_id and self.fps == other.fps and
            self.n_frames == other.n_frames and self.objects == other.objects and
            np.array_equal(self.positions, other.positions) and
            np.array_equal(self.velocities, other.velocities) and
            np.array_equal(self.visible, other.visible) and
            self.collisions == other.collisions)

  @property
  def frames(self):
    return [[self.state(f, o.object_id) for o in self.objects]
            for f in range(1, self.n_frames+1)]

  def state(self, frame_id, object_id):
    k = frame_id-1
    return ObjectState(object_id, bool(self.visible[k,object_id]),
                       tuple(to_list(self.positions[k,object_id])),
                       tuple(to_list(self.velocities[k,object_id])))

  def name(self, object_id):
    return self.objects[object_id].name

  def radius(self, object_id):
    return self.objects[object_id].radius

  ### visibility events ###
  def first_visible(self, object_id):
    idx = np.flatnonzero(self.visible[:,object_id])
    if len(idx) == 0:
      return None
    return int(idx[0])+1

  def entry_frame(self, object_id):
    """First frame f > 1 where the object is visible and was not at f-1."""
    vis = self.visible[:,object_id]
    idx = np.flatnonzero(vis[1:] & ~vis[:-1])
    if len(idx) == 0:
      return None
    return int(idx[0])+2

  def exit_frame(self, object_id):
    """First frame f > 1 where the object is not visible and was at f-1."""
    vis = self.visible[:,object_id]
    idx = np.flatnonzero(~vis[1:] & vis[:-1])
    if len(idx) == 0:
      return None
    return int(idx[0])+2

  def visible_at(self, frame_id):
    return [int(o) for o in np.flatnonzero(self.visible[frame_id-1])]

  ### serialization ###
  def to_dict(self):
    frames = []
    for k in range(self.n_frames):
      frames.append([{'object_id': o.object_id,
                      'inside_camera': bool(self.visible[k,o.object_id]),
                      'position': to_list(self.positions[k,o.object_id]),
                      'velocity': to_list(self.velocities[k,o.object_id])}
                     for o in self.objects])
    return {'scene_id': self.scene_id, 'fps': self.fps, 'n_frames': self.n_frames,
            'objects': [o.to_dict() for o in self.objects], 'frames': frames,
            'collisions': [c.to_dict() for c in self.collisions]}

  @classmethod
  def from_dict(cls, record, path=None, line=None):
    check_fields(record, ('scene_id','fps','n_frames','objects','frames','collisions'), path, line)
    try:
      objects = []
      for o in record['objects']:
        check_fields(o, ('object_id','shape','material','color','radius'), path, line)
        objects.append(ObjectSpec(int(o['object_id']), o['shape'], o['material'],
                                  o['color'], float(o['radius'])))
      nf, nobj = len(record['frames']), len(objects)
      positions = np.zeros((nf,nobj,3))
      velocities = np.zeros((nf,nobj,3))
      visible = np.zeros((nf,nobj), dtype=bool)
      for k,frame in enumerate(record['frames']):
        if len(frame) != nobj:
          raise ValueError("frame %d holds %d states for %d objects"%(k+1, len(frame), nobj))
        for s in frame:
          check_fields(s, ('object_id','inside_camera','position','velocity'), path, line)
          o = int(s['object_id'])
          visible[k,o] = bool(s['inside_camera'])
          positions[k,o] = s['position']
          velocities[k,o] = s['velocity']
      collisions = []
      for c in record['collisions']:
        check_fields(c, ('frame_id','pair'), path, line)
        collisions.append(CollisionEvent(int(c['frame_id']), tuple(int(x) for x in c['pair'])))
      return cls(record['scene_id'], record['fps'], record['n_frames'], objects,
                 positions, velocities, visible, collisions)
    except (ValueError, TypeError, IndexError, KeyError) as e:
      raise DatasetFormatError("invalid scene record (%s)"%(e), path, line)

def write_scenes(path, scenes):
  return write_jsonl(path, (s.to_dict() for s in scenes))

def read_scenes(path):
  return [SceneAnnotation.from_dict(r, path, i) for i,r in iter_jsonl(path)]

################################################################################
# dynamics                                                                     #
################################################################################
def _resolve_collision(ode, i, j, restitution):
  """Equal-mass impulse along the line of centers."""
  n = unit(ode.y[j] - ode.y[i])
  if n is None:
    n = unit(ode.v[i] - ode.v[j])
    if n is None:
      return
  approach = float(np.dot(ode.v[i] - ode.v[j], n))
  if approach <= 0.:
    return
  imp = 0.5*(1.+restitution)*approach
  ode.set_velocity(i, ode.v[i] - imp*n)
  ode.set_velocity(j, ode.v[j] + imp*n)

def run_scene(config, objects, positions, velocities, scene_id='scene'):
  """
  Runs the dynamics from explicit initial conditions.

  Parameters
  ----------
  config: SimConfig
  objects: list of ObjectSpec
  positions, velocities: array-like (n_objects, 3)
    state at frame 1
  scene_id: string

  Returns
  -------
  SceneAnnotation
  """
  nobj = len(objects)
  nf = config.n_frames
  radii = np.array([o.radius for o in objects], dtype=float)
  lo = np.array(config.bounds_lo, dtype=float)
  hi = np.array(config.bounds_hi, dtype=float)

  ode = Integrator(1./config.fps)
  ode._set_y_value(np.reshape(positions, (nobj,3)), np.reshape(velocities, (nobj,3)), 0.)

  P = np.zeros((nf,nobj,3))
  V = np.zeros((nf,nobj,3))
  vis = np.zeros((nf,nobj), dtype=bool)
  in_contact = set()
  collisions = []
  for k in range(nf):
    inside = inside_box(ode.y, lo, hi)
    dist = center_distances(ode.y)
    for i in range(nobj):
      for j in range(i+1,nobj):
        if not dist[i,j] < radii[i]+radii[j]:
          in_contact.discard((i,j))
          continue
        if (i,j) in in_contact or not (inside[i] and inside[j]):
          continue
        in_contact.add((i,j))
        collisions.append(CollisionEvent(k+1, (i,j)))
        _resolve_collision(ode, i, j, config.restitution)
    P[k] = ode.y
    V[k] = ode.v
    vis[k] = inside
    if k < nf-1:
      ode.integrate()

  return SceneAnnotation(scene_id, config.fps, nf, objects, P, V, vis, collisions)

def _stays_inside(pos, vel, config, radius):
  end = pos + vel*config.duration
  for p in (pos, end):
    for ax in range(2):
      if p[ax] < config.bounds_lo[ax]+radius or p[ax] > config.bounds_hi[ax]-radius:
        return False
  return True

def _sample_initial(config, rng, radius, placed):
  """Initial (position, velocity) of one object."""
  lo = np.array(config.bounds_lo)
  hi = np.array(config.bounds_hi)
  z = min(max(lo[2]+radius, lo[2]), hi[2])
  entering = config.allow_entry and rng.random() < config.entry_fraction
  for attempt in range(100):
    speed = rng.uniform(config.speed_min, config.speed_max)
    if entering:
      side = int(rng.integers(4))
      ax, lat = side//2, 1-side//2
      inward = 1. if side%2 == 0 else -1.
      angle = rng.uniform(-0.25*np.pi, 0.25*np.pi)
      t_in = rng.uniform(0.1, 0.5)*config.duration
      vel = np.zeros(3)
      vel[ax] = inward*speed*np.cos(angle)
      vel[lat] = speed*np.sin(angle)
      pos = np.array([0., 0., z])
      edge = lo[ax] if inward > 0 else hi[ax]
      pos[ax] = edge - vel[ax]*t_in
      pos[lat] = rng.uniform(lo[lat]+radius, hi[lat]-radius)
      if not config.allow_exit and not _stays_inside(pos + vel*t_in, vel, config, 0.):
        continue
    else:
      pos = np.array([rng.uniform(lo[0]+radius, hi[0]-radius),
                      rng.uniform(lo[1]+radius, hi[1]-radius), z])
      vel = np.zeros(3)
      if rng.random() < config.moving_fraction:
        angle = rng.uniform(0., 2.*np.pi)
        vel[0] = speed*np.cos(angle)
        vel[1] = speed*np.sin(angle)
        if not config.allow_exit and not _stays_inside(pos, vel, config, radius):
          vel = np.zeros(3)
    if all(np.linalg.norm(pos-p) >= radius+r+0.05 for p,r in placed):
      return pos, vel
  return pos, vel

def simulate_scene(config, seed, scene_id=None):
  """
  Samples a scene from the config and runs its dynamics.

  Fully determined by (config, seed).

  Raises
  ------
  ConfigError
    when the config cannot produce unique display names.
  """
  if config.n_objects_max > const.max_unique_objects:
    raise ConfigError("%d objects cannot have unique display names"%(config.n_objects_max))
  rng = np.random.default_rng(seed)
  nobj = int(rng.integers(config.n_objects_min, config.n_objects_max+1))
  combos = rng.choice(const.max_unique_objects, size=nobj, replace=False)
  objects = []
  placed = []
  positions = np.zeros((nobj,3))
  velocities = np.zeros((nobj,3))
  for i,c in enumerate(combos):
    color, material, shape = const.attribute_combos[int(c)]
    radius = float(rng.uniform(config.radius_min, config.radius_max))
    objects.append(ObjectSpec(i, shape, material, color, radius))
    positions[i], velocities[i] = _sample_initial(config, rng, radius, placed)
    placed.append((positions[i], radius))
  if scene_id is None:
    scene_id = "scene_%d"%(seed)
  return run_scene(config, objects, positions, velocities, scene_id)

def simulate_scenes(config, seeds, jobs=1):
  """One scene per seed, in seed order for any jobs value."""
  return ordered_map(lambda seed: simulate_scene(config, seed), list(seeds), jobs)

################################################################################
# brute-force facts                                                            #
################################################################################
@dataclass
class SceneFacts:
  """Facts recomputed from a scene by exhaustive scanning."""
  scene: SceneAnnotation
  collision_count: int
  collisions: list
  first_visible: dict
  entry_frame: dict
  exit_frame: dict
  moving: frozenset
  epsilon_v: float

  @property
  def collision_frames(self):
    return [f for f,_ in self.collisions]

  def distances(self, frame_id, target):
    """Center distances from target to every other visible object at frame_id."""
    states = [self.scene.state(frame_id, o.object_id) for o in self.scene.objects]
    tpos = states[target].position
    out = {}
    for s in states:
      if s.object_id != target and s.inside_camera:
        out[s.object_id] = math.dist(tpos, s.position)
    return out

def _placed_overlaps(origin, sampled, frames):
  """
  Overlap episodes of the source scene moved onto the sampled frames: the
  first frame at or after the overlap with both objects in camera, else the
  last such frame before it.
  """
  out = []
  for f,pair in scan_overlaps(origin):
    both = [k for k,states in enumerate(frames, 1)
            if states[pair[0]].inside_camera and states[pair[1]].inside_camera]
    if not both:
      continue
    later = [k for k in both if sampled[k-1] >= f]
    k = later[0] if later else both[-1]
    if (k, pair) not in out:
      out.append((k, pair))
  return sorted(out)

def brute_force_facts(scene, epsilon_v=const.epsilon_v, origin=None):
  """
  Recomputes collision count, first-visible frames, entry / exit frames and
  the moving set by scanning every frame of the scene.

  Collisions are rescanned from raw positions, never read from
  ``scene.collisions``.

  Parameters
  ----------
  scene: SceneAnnotation
  epsilon_v: float
  origin: (SceneAnnotation, sequence of int), optional
    simulator scene that ``scene`` was sampled from and the original frame
    of every frame of ``scene``. Required for aligned scenes, whose skipped
    frames hide overlaps.
  """
  frames = scene.frames
  nobj = len(scene.objects)
  if origin is None:
    collisions = scan_overlaps(scene)
  else:
    collisions = _placed_overlaps(origin[0], list(origin[1]), frames)
  first_visible = dict((o, None) for o in range(nobj))
  entry = dict((o, None) for o in range(nobj))
  exit_ = dict((o, None) for o in range(nobj))
  moving = set()
  prev = None
  for f,states in enumerate(frames, 1):
    for s in states:
      o = s.object_id
      if s.inside_camera:
        if first_visible[o] is None:
          first_visible[o] = f
        if prev is not None and not prev[o].inside_camera and entry[o] is None:
          entry[o] = f
        if math.sqrt(sum(v*v for v in s.velocity)) > epsilon_v:
          moving.add(o)
      elif prev is not None and prev[o].inside_camera and exit_[o] is None:
        exit_[o] = f
    prev = states
  return SceneFacts(scene, len(collisions), collisions, first_visible, entry, exit_,
                    frozenset(moving), epsilon_v)

def scan_overlaps(scene):
  """
  Collision events recomputed from raw positions: the first frame of every
  overlap episode between two visible objects. Meaningful for scenes straight
  out of the simulator (aligned scenes skip frames).
  """
  events = []
  touching = set()
  for f,states in enumerate(scene.frames, 1):
    for a in states:
      for b in states:
        if b.object_id <= a.object_id:
          continue
        pair = (a.object_id, b.object_id)
        d = math.dist(a.position, b.position)
        if d >= scene.radius(a.object_id) + scene.radius(b.object_id):
          touching.discard(pair)
        elif pair not in touching and a.inside_camera and b.inside_camera:
          touching.add(pair)
          events.append((f, pair))
  return events
