import os
import numpy as np
import pytest

from cofforge.options import SimConfig
from cofforge.scene_sim import ObjectSpec, SceneAnnotation, CollisionEvent, run_scene

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')
DEMO = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'demo')

def fixture_path(name):
  return os.path.join(FIXTURES, name)

def make_object(i, color='red', material='metal', shape='sphere', radius=0.5):
  return ObjectSpec(i, shape, material, color, radius)

def wide_config(n_frames=10, fps=1.0, **kwargs):
  return SimConfig(n_frames=n_frames, fps=fps, bounds_lo=(-10.,-10.,-1.),
                   bounds_hi=(10.,10.,1.), **kwargs)

def two_sphere_scene():
  """Radius-0.5 spheres at x = -5 and +5 closing at 1 unit/s each, fps = 1."""
  objects = [make_object(0, 'red'), make_object(1, 'blue')]
  pos = [[-5.,0.,0.], [5.,0.,0.]]
  vel = [[1.,0.,0.], [-1.,0.,0.]]
  return run_scene(wide_config(), objects, pos, vel, 'two_spheres')

def hand_scene(objects, visible, positions=None, collisions=(), scene_id='hand', fps=1.0):
  """
  Scene from an explicit visibility table (n_frames, n_objects); objects
  rest at the given positions (n_objects, 3) in every frame.
  """
  visible = np.asarray(visible, dtype=bool)
  nf, nobj = visible.shape
  if positions is None:
    positions = np.zeros((nobj,3))
    positions[:,0] = 3.*np.arange(nobj)
  P = np.repeat(np.asarray(positions, dtype=float)[None], nf, axis=0)
  V = np.zeros((nf,nobj,3))
  events = [CollisionEvent(f, pair) for f,pair in collisions]
  return SceneAnnotation(scene_id, fps, nf, objects, P, V, visible, events)

def visible_from(first_frames, n_frames):
  """Visibility table where object i is visible from first_frames[i] on (None: never)."""
  vis = np.zeros((n_frames, len(first_frames)), dtype=bool)
  for i,f in enumerate(first_frames):
    if f is not None:
      vis[f-1:,i] = True
  return vis

@pytest.fixture
def two_spheres():
  return two_sphere_scene()
