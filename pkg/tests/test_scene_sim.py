import json
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cofforge.errors import ConfigError, DatasetFormatError
from cofforge.options import SimConfig
from cofforge.scene_sim import (ObjectSpec, CollisionEvent, SceneAnnotation, simulate_scene,
                                brute_force_facts, scan_overlaps, run_scene, inside_box,
                                read_scenes, write_scenes)

from conftest import make_object, wide_config, two_sphere_scene, hand_scene, visible_from

def test_two_spheres_collide_at_frame_6(two_spheres):
  assert [(c.frame_id, c.pair) for c in two_spheres.collisions] == [(6, (0,1))]
  facts = brute_force_facts(two_spheres)
  assert facts.collision_count == 1
  assert scan_overlaps(two_spheres) == [(6, (0,1))]

def test_two_spheres_reverse_along_line_of_centers(two_spheres):
  v = two_spheres.velocities
  assert np.allclose(v[4,0], [1.,0.,0.]) and np.allclose(v[4,1], [-1.,0.,0.])
  assert np.allclose(v[5,0], [-1.,0.,0.]) and np.allclose(v[5,1], [1.,0.,0.])
  # they separate afterwards and never collide again
  assert two_spheres.positions[-1,0,0] < -3. and two_spheres.positions[-1,1,0] > 3.

def test_restitution_scales_reflection():
  objects = [make_object(0, 'red'), make_object(1, 'blue')]
  scene = run_scene(wide_config(restitution=0.5), objects,
                    [[-5.,0.,0.],[5.,0.,0.]], [[1.,0.,0.],[-1.,0.,0.]])
  assert np.allclose(scene.velocities[5,0], [-0.5,0.,0.])
  assert np.allclose(scene.velocities[5,1], [0.5,0.,0.])

def test_stationary_single_object():
  scene = run_scene(wide_config(), [make_object(0)], [[0.,0.,0.]], [[0.,0.,0.]])
  assert scene.collisions == []
  assert scene.visible.all()
  assert scene.first_visible(0) == 1
  facts = brute_force_facts(scene)
  assert facts.moving == frozenset()
  assert facts.distances(3, 0) == {}

def test_object_entering_flips_visibility_once():
  scene = run_scene(wide_config(), [make_object(0)], [[-12.,0.,0.]], [[1.,0.,0.]])
  vis = scene.visible[:,0]
  assert list(vis[:3]) == [False, False, True]
  assert np.sum(vis[1:] != vis[:-1]) == 1
  assert scene.entry_frame(0) == 3
  assert brute_force_facts(scene).entry_frame[0] == 3

def test_collision_ignored_outside_camera():
  objects = [make_object(0, 'red'), make_object(1, 'blue')]
  scene = run_scene(wide_config(), objects, [[15.,0.,0.],[19.,0.,0.]],
                    [[1.,0.,0.],[-1.,0.,0.]])
  assert scene.collisions == []

def test_display_names_unique():
  with pytest.raises(ValueError):
    SceneAnnotation('dup', 1., 2, [make_object(0), make_object(1)], np.zeros((2,2,3)),
                    np.zeros((2,2,3)), np.ones((2,2), dtype=bool), [])

def test_object_spec_vocabulary():
  assert make_object(0, 'gray', 'rubber', 'cylinder').name == "gray rubber cylinder"
  with pytest.raises(ValueError):
    ObjectSpec(0, 'cone', 'metal', 'red', 0.3)

def test_collision_pair_is_unordered():
  assert CollisionEvent(4, (3,1)).pair == (1,3)
  with pytest.raises(ValueError):
    CollisionEvent(4, (2,2))

def test_too_many_objects_rejected():
  with pytest.raises(ConfigError):
    SimConfig(n_objects_min=3, n_objects_max=49)

def test_simulate_is_deterministic():
  config = SimConfig()
  assert simulate_scene(config, 7) == simulate_scene(config, 7)
  assert simulate_scene(config, 7).scene_id == "scene_7"

@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**63-1))
def test_simulated_scene_invariants(seed):
  config = SimConfig()
  scene = simulate_scene(config, seed)
  names = [o.name for o in scene.objects]
  assert len(set(names)) == len(names)
  assert [o.object_id for o in scene.objects] == list(range(len(names)))
  lo = np.array(config.bounds_lo)
  hi = np.array(config.bounds_hi)
  for k in range(scene.n_frames):
    assert np.array_equal(scene.visible[k], inside_box(scene.positions[k], lo, hi))
  for c in scene.collisions:
    assert scene.visible[c.frame_id-1, c.pair[0]] and scene.visible[c.frame_id-1, c.pair[1]]
  assert brute_force_facts(scene).collision_count == len(scene.collisions)
  assert scan_overlaps(scene) == [(c.frame_id, c.pair) for c in scene.collisions]

def test_frames_view_matches_arrays(two_spheres):
  frames = two_spheres.frames
  assert len(frames) == two_spheres.n_frames
  assert all(len(states) == 2 for states in frames)
  assert frames[5][0].velocity == (-1.,0.,0.)

def test_scene_file_round_trip(tmp_path):
  scenes = [simulate_scene(SimConfig(n_frames=20), s) for s in range(3)]
  path = str(tmp_path/'scenes.jsonl')
  assert write_scenes(path, scenes) == 3
  assert read_scenes(path) == scenes

def test_scene_file_rejects_unknown_field(tmp_path):
  record = two_sphere_scene().to_dict()
  record['camera'] = 'front'
  path = tmp_path/'bad.jsonl'
  path.write_text(json.dumps(record)+"\n")
  with pytest.raises(DatasetFormatError) as err:
    read_scenes(str(path))
  assert err.value.line == 1

def test_collision_needs_both_objects_in_camera():
  objects = [make_object(0, 'red'), make_object(1, 'blue')]
  with pytest.raises(ValueError):
    hand_scene(objects, visible_from([1,5], 8), collisions=[(4,(0,1))])

def test_facts_rescan_positions_instead_of_recorded_collisions():
  # objects rest 3 units apart, so the recorded collision never overlaps
  objects = [make_object(0, 'red'), make_object(1, 'blue')]
  scene = hand_scene(objects, visible_from([1,1], 8), collisions=[(4,(0,1))])
  assert brute_force_facts(scene).collision_count == 0
