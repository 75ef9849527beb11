import re
import numpy as np
import pytest

import cofforge.constants as const
from cofforge.cof_synth import (gen_collision_count, gen_moving_count, gen_temporal_count,
                                gen_appearance_order, gen_relative_distance, synth_batch,
                                COLLISION_QUESTION, AppearanceOrder)
from cofforge.curate import validate
from cofforge.errors import (NoEntryEvent, AmbiguousOrder, NoSuchEvent, TooFewNeighbors,
                             DistanceTie)
from cofforge.frame_align import align_records, build_alignment, timeline_of, remap_annotations
from cofforge.options import SimConfig, GenerationPlan
from cofforge.scene_sim import simulate_scene, brute_force_facts, run_scene
from cofforge.trace_eval import extract_frame_refs, FRAME_REF

from conftest import make_object, hand_scene, visible_from, wide_config, two_sphere_scene

COLORS = ('red', 'blue', 'green', 'brown')

def objects(n):
  return [make_object(i, COLORS[i]) for i in range(n)]

def test_collision_count(two_spheres):
  s = gen_collision_count(two_spheres)
  assert s.question == COLLISION_QUESTION
  assert s.reasoning == ["A collision happens in Frame 6 between red metal sphere and blue metal sphere"]
  assert s.answer == "1 collisions happen in this video."
  assert s.frame_refs == [6]

def test_collision_count_two_events():
  scene = hand_scene(objects(3), visible_from([1,1,1], 20), collisions=[(6,(0,1)), (14,(1,2))])
  s = gen_collision_count(scene)
  assert s.answer == "2 collisions happen in this video."
  assert s.frame_refs == [6, 14]

def test_zero_collision_scene():
  scene = hand_scene(objects(2), visible_from([1,1], 10))
  s = gen_collision_count(scene)
  assert s.answer == "0 collisions happen in this video."
  assert s.frame_refs == []
  assert validate(s)

def test_simultaneous_collisions_cite_frame_once():
  scene = hand_scene(objects(4), visible_from([1,1,1,1], 10), collisions=[(5,(0,1)), (5,(2,3))])
  s = gen_collision_count(scene)
  assert len(s.reasoning) == 2
  assert all("Frame 5" in step for step in s.reasoning)
  assert s.frame_refs == [5]

def test_moving_count(two_spheres):
  s = gen_moving_count(two_spheres)
  assert s.question == "How many moving objects are in the video?"
  assert s.answer == "2 moving objects are in the video."
  assert s.frame_refs == [1]

def test_moving_count_all_stationary():
  s = gen_moving_count(hand_scene(objects(3), visible_from([1,1,1], 8)))
  assert s.answer == "0 moving objects are in the video."
  assert s.frame_refs == []

def test_object_set_in_motion_by_collision_is_cited_late():
  objs = [make_object(0, 'red'), make_object(1, 'blue')]
  scene = run_scene(wide_config(), objs, [[-5.5,0.,0.],[0.,0.,0.]], [[1.,0.,0.],[0.,0.,0.]])
  s = gen_moving_count(scene)
  assert s.answer == "2 moving objects are in the video."
  cited = [int(re.search(r'Frame (\d+)', step).group(1)) for step in s.reasoning
           if step.startswith("blue")]
  assert cited[0] >= scene.collisions[0].frame_id

def test_temporal_count():
  scene = hand_scene(objects(3), visible_from([1,1,10], 20), collisions=[(6,(0,1)), (14,(0,1))])
  s = gen_temporal_count(scene, 2)
  assert s.question == "After the green metal sphere enters the scene, how many collisions happen?"
  assert s.reasoning[0] == "The green metal sphere enters the scene in Frame 10"
  assert s.answer == "1 collisions happen after the green metal sphere enters the scene."
  assert s.frame_refs == [10, 14]

def test_temporal_count_without_later_collisions():
  scene = hand_scene(objects(3), visible_from([1,1,10], 20), collisions=[(6,(0,1))])
  s = gen_temporal_count(scene, 2)
  assert s.answer.startswith("0 collisions")
  assert s.frame_refs == [10]

def test_temporal_count_on_aligned_scene_keeps_entry_collision():
  # the collision at the entry frame must not land on a frame before the entry
  scene = hand_scene(objects(2), visible_from([1,3], 8), collisions=[(3,(0,1))])
  aligned = remap_annotations(scene, build_alignment(timeline_of(scene), 8., 4))
  s = gen_temporal_count(aligned, 1)
  assert s.reasoning[0] == "The blue metal sphere enters the scene in Frame 3"
  assert s.answer == "1 collisions happen after the blue metal sphere enters the scene."
  assert s.frame_refs == [3]

def test_temporal_count_needs_entry():
  scene = hand_scene(objects(2), visible_from([1,None], 10))
  with pytest.raises(NoEntryEvent):
    gen_temporal_count(scene, 0)
  with pytest.raises(NoEntryEvent):
    gen_temporal_count(scene, 1)

def test_appearance_subsets_are_distinct():
  scene = hand_scene(objects(3), visible_from([1,3,5], 10))
  plan = GenerationPlan(appearance_per_scene=10)
  subsets = AppearanceOrder(plan).candidates(scene, np.random.default_rng(0))
  # C(3,2) + C(3,3) subsets exist
  assert len(subsets) == 4
  assert len(set(frozenset(s) for s in subsets)) == 4

def test_appearance_order():
  scene = hand_scene(objects(3), visible_from([3,7,1], 10))
  s = gen_appearance_order(scene, [0,1,2])
  assert s.question == ("what is the appearance order of red metal sphere, blue metal sphere, "
                        "green metal sphere in the video?")
  assert s.reasoning == ["red metal sphere appears in Frame 3", "blue metal sphere appears in Frame 7",
                         "green metal sphere appears in Frame 1"]
  assert s.answer == "green metal sphere, red metal sphere, blue metal sphere"
  assert s.frame_refs == [1, 3, 7]

def test_appearance_order_sorted_pair():
  scene = hand_scene(objects(2), visible_from([2,5], 10))
  s = gen_appearance_order(scene, [0,1])
  assert s.answer == "red metal sphere, blue metal sphere"

def test_appearance_order_ambiguous():
  scene = hand_scene(objects(2), visible_from([1,1], 10))
  with pytest.raises(AmbiguousOrder):
    gen_appearance_order(scene, [0,1])

def distance_scene():
  # target (0) enters at frame 10; neighbors at surface distances 2.17 and 5.90
  positions = [[0.,0.,0.], [3.17,0.,0.], [-6.9,0.,0.]]
  return hand_scene(objects(3), visible_from([10,1,1], 12), positions)

def test_relative_distance():
  s = gen_relative_distance(distance_scene(), 0, 'enters')
  assert s.question == ("Measuring from the closest point of each object, when red metal sphere "
                        "enters the scene, which of these objects (blue metal sphere, green metal sphere) "
                        "is closest to the red metal sphere?")
  assert s.reasoning[0] == ("The red metal sphere enters the scene in Frame 10. In Frame 10, the distance "
                            "between red metal sphere and blue metal sphere is 2.17.")
  assert s.reasoning[1].endswith("green metal sphere is 5.90.")
  assert s.answer == "blue metal sphere"
  assert s.frame_refs == [10]

def test_relative_distance_tie():
  positions = [[0.,0.,0.], [3.,0.,0.], [-3.,0.,0.]]
  scene = hand_scene(objects(3), visible_from([10,1,1], 12), positions)
  with pytest.raises(DistanceTie):
    gen_relative_distance(scene, 0, 'enters')

def test_relative_distance_missing_event():
  with pytest.raises(NoSuchEvent):
    gen_relative_distance(distance_scene(), 0, 'exits')

def test_relative_distance_needs_two_neighbors():
  scene = hand_scene(objects(2), visible_from([10,1], 12))
  with pytest.raises(TooFewNeighbors):
    gen_relative_distance(scene, 0, 'enters')

def test_batch_with_only_collisions():
  plan = GenerationPlan.only('object_count_collision')
  samples = synth_batch([two_sphere_scene()], plan, seed=3)
  assert len(samples) == 1
  assert samples[0].category == 'object_count_collision'

def test_batch_is_deterministic_and_schedule_free():
  scenes = [simulate_scene(SimConfig(), s) for s in range(12)]
  scenes, _ = align_records(scenes)
  a = synth_batch(scenes, GenerationPlan(), seed=5)
  b = synth_batch(list(reversed(scenes)), GenerationPlan(), seed=5, jobs=4)
  assert [x.to_dict() for x in a] == [x.to_dict() for x in b]

def test_batch_logs_skips():
  scene = hand_scene(objects(2), visible_from([1,1], 10))
  skipped = []
  synth_batch([scene], GenerationPlan(), seed=0, skipped=skipped)
  reasons = set(r for _,_,r in skipped)
  assert 'ambiguous_order' in reasons
  assert 'no_entry_event' in reasons

################################################################################
# oracle equivalence battery                                                   #
################################################################################
def object_id(scene, name):
  return [o.object_id for o in scene.objects if o.name == name][0]

def oracle_answer(sample, scene, facts):
  """Re-derives the answer of a sample from brute-force facts."""
  q = sample.question
  if sample.category == 'object_count_collision':
    return "%d collisions happen in this video."%(facts.collision_count)
  if sample.category == 'object_count_motion':
    return "%d moving objects are in the video."%(len(facts.moving))
  if sample.category == 'object_count_temporal':
    name = re.match(r"After the (.+) enters the scene", q).group(1)
    f0 = facts.first_visible[object_id(scene, name)]
    n = sum(1 for f in facts.collision_frames if f >= f0)
    return "%d collisions happen after the %s enters the scene."%(n, name)
  if sample.category == 'appearance_order':
    names = re.match(r"what is the appearance order of (.+) in the video\?", q).group(1).split(", ")
    ids = sorted((object_id(scene, n) for n in names), key=lambda o: facts.first_visible[o])
    return ", ".join(scene.name(o) for o in ids)
  if sample.category == 'relative_distance':
    m = re.search(r"when (.+) (enters|exits) the scene", q)
    t = object_id(scene, m.group(1))
    f = facts.entry_frame[t] if m.group(2) == 'enters' else facts.exit_frame[t]
    dist = dict((o, d - scene.radius(t) - scene.radius(o)) for o,d in facts.distances(f, t).items())
    return scene.name(min(dist, key=dist.get))
  raise AssertionError(sample.category)

def test_oracle_equivalence_on_thousand_scenes():
  scenes = [simulate_scene(SimConfig(), seed) for seed in range(1000)]
  aligned, dropped = align_records(scenes)
  assert dropped == []
  samples = synth_batch(aligned, GenerationPlan(), seed=11)
  by_id = dict((s.scene_id, s) for s in aligned)
  raw = dict((s.scene_id, s) for s in scenes)
  facts = {}
  for s in aligned:
    sampled = build_alignment(timeline_of(raw[s.scene_id])).sampled_original_ids
    facts[s.scene_id] = brute_force_facts(s, origin=(raw[s.scene_id], sampled))
    assert facts[s.scene_id].collisions == [(c.frame_id, c.pair) for c in s.collisions]
  categories = set()
  for sample in samples:
    scene = by_id[sample.video_ref]
    assert sample.answer == oracle_answer(sample, scene, facts[scene.scene_id])
    assert sorted(set(extract_frame_refs("\n".join(sample.reasoning)))) == sample.frame_refs
    assert FRAME_REF.search(sample.question) is None
    assert all(1 <= f <= scene.n_frames for f in sample.frame_refs)
    assert validate(sample)
    categories.add(sample.category)
  assert categories == set(const.synth_categories)
