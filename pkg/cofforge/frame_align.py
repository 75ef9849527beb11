"""
Frame ID alignment: map frames to timestamps, clip to the model's maximum
duration while keeping every annotated frame, downsample to a frame budget
and re-index the annotated frame IDs.

Frame f of a video at fps frames/second has timestamp f/fps; the video
spans [0, n_frames/fps].
"""
import math
import numpy as np
from dataclasses import dataclass

import cofforge.constants as const

from .cof_real import VideoAnnotation
from .errors import EmptyTimeline, SpanExceeded, UnmappedFrame
from .scene_sim import SceneAnnotation, CollisionEvent
from .utils import round_half_down, ordered_map
from .log import print_skip

# tolerance in frame units for window membership
EPS = 1.e-6

@dataclass(frozen=True)
class SourceTimeline:
  n_frames: int
  fps: float
  annotated_ids: tuple

  def __post_init__(self):
    ids = tuple(int(f) for f in self.annotated_ids)
    object.__setattr__(self, 'annotated_ids', ids)
    if self.fps <= 0.:
      raise ValueError("fps must be positive")
    if any(b <= a for a,b in zip(ids[:-1], ids[1:])):
      raise ValueError("annotated ids must be strictly increasing")
    if ids and (ids[0] < 1 or ids[-1] > self.n_frames):
      raise ValueError("annotated ids must lie in [1, n_frames]")

  def timestamp(self, frame_id):
    return frame_id/self.fps

  @property
  def duration(self):
    return self.n_frames/self.fps

@dataclass(frozen=True)
class AlignmentMap:
  window: tuple
  sampled_original_ids: tuple
  id_map: dict

  @property
  def K(self):
    return len(self.sampled_original_ids)

  @property
  def length(self):
    return self.window[1] - self.window[0]

  @property
  def fps(self):
    """Frame rate of the aligned clip."""
    return self.K/self.length

  def new_id(self, original_id):
    try:
      return self.id_map[original_id]
    except KeyError:
      raise UnmappedFrame("frame %d has no aligned id"%(original_id))

  def is_identity(self, n_frames):
    return self.sampled_original_ids == tuple(range(1, n_frames+1)) and \
           all(k == v for k,v in self.id_map.items())

def _sample_window(f_lo, f_hi, start, length, fps, frame_budget):
  """frame_budget frames at uniform timestamps inside [f_lo, f_hi]."""
  if f_hi - f_lo + 1 <= frame_budget:
    return list(range(f_lo, f_hi+1))
  picks = []
  for i in range(frame_budget):
    s = start + i*length/frame_budget
    picks.append(min(max(round_half_down(s*fps), f_lo), f_hi))
  # force strictly increasing picks that stay inside the window
  for i in range(1, frame_budget):
    picks[i] = max(picks[i], picks[i-1]+1)
  picks[-1] = min(picks[-1], f_hi)
  for i in range(frame_budget-2, -1, -1):
    picks[i] = min(picks[i], picks[i+1]-1)
  return picks

def _nearest(sampled, frame_id):
  """Index of the sampled frame nearest to frame_id; ties go to the earlier."""
  pos = int(np.searchsorted(sampled, frame_id))
  if pos == 0:
    return 0
  if pos == len(sampled):
    return len(sampled)-1
  if frame_id - sampled[pos-1] <= sampled[pos] - frame_id:
    return pos-1
  return pos

def _collision_slot(sampled, visible, event):
  """
  New ID of a collision: the first sampled frame at or after the original
  where both objects are visible, else the last such frame before it.
  None when the pair is never visible together in the sampled frames.
  """
  a, b = event.pair
  both = np.flatnonzero(visible[:,a] & visible[:,b])
  if len(both) == 0:
    return None
  later = both[np.asarray(sampled)[both] >= event.frame_id]
  if len(later):
    return int(later[0])+1
  return int(both[-1])+1

def build_alignment(timeline, max_duration_s=const.max_duration_s, frame_budget=const.frame_budget):
  """
  Clips and downsamples a timeline.

  The window starts at the earliest annotated timestamp and extends
  max_duration_s, shifted left when that overshoots the end of the video.

  Parameters
  ----------
  timeline: SourceTimeline
  max_duration_s: float
  frame_budget: int

  Returns
  -------
  AlignmentMap

  Raises
  ------
  EmptyTimeline
    no frames or no annotated frames.
  SpanExceeded
    the annotated frames span more than max_duration_s.
  """
  if frame_budget < 2:
    raise ValueError("frame_budget must be at least 2")
  if timeline.n_frames < 1 or not timeline.annotated_ids:
    raise EmptyTimeline("timeline has no annotated frames")
  fps = timeline.fps
  first, last = timeline.annotated_ids[0], timeline.annotated_ids[-1]
  if (last - first) > max_duration_s*fps + EPS:
    raise SpanExceeded("annotated frames span %.3f s > %.3f s"
                       %((last-first)/fps, max_duration_s))

  t_end = timeline.duration
  start = min(timeline.timestamp(first), max(0., t_end - max_duration_s))
  end = min(start + max_duration_s, t_end)
  f_lo = max(1, int(math.ceil(start*fps - EPS)))
  f_hi = min(timeline.n_frames, int(math.floor(end*fps + EPS)))

  sampled = _sample_window(f_lo, f_hi, start, end-start, fps, frame_budget)
  id_map = dict((f, _nearest(sampled, f)+1) for f in timeline.annotated_ids)
  return AlignmentMap((start, end), tuple(sampled), id_map)

def timeline_of(annotation):
  """SourceTimeline of a video (captioned frames) or a scene (all frames)."""
  if isinstance(annotation, SceneAnnotation):
    return SourceTimeline(annotation.n_frames, annotation.fps,
                          tuple(range(1, annotation.n_frames+1)))
  if isinstance(annotation, VideoAnnotation):
    return SourceTimeline(annotation.n_frames, annotation.fps,
                          tuple(f for f,_ in annotation.captions))
  raise TypeError("cannot align %s"%(type(annotation).__name__))

def remap_annotations(annotation, amap):
  """
  Rewrites an annotation onto the aligned clip.

  Captions or collisions whose frames collapse onto one new ID are merged
  in their original order (captions joined by a single space). A collision
  lands on a sampled frame where both of its objects are visible; one whose
  pair is never visible together in the sampled frames is dropped.

  Raises
  ------
  UnmappedFrame
  """
  if isinstance(annotation, VideoAnnotation):
    captions = []
    for f,text in annotation.captions:
      new = amap.new_id(f)
      if captions and captions[-1][0] == new:
        captions[-1] = (new, captions[-1][1]+" "+text)
      else:
        captions.append((new, text))
    if amap.is_identity(annotation.n_frames):
      return VideoAnnotation(annotation.video_id, annotation.duration_s,
                             annotation.fps, captions, annotation.n_frames)
    return VideoAnnotation(annotation.video_id, amap.length, amap.fps, captions, amap.K)

  if isinstance(annotation, SceneAnnotation):
    idx = [f-1 for f in amap.sampled_original_ids]
    visible = annotation.visible[idx]
    collisions = []
    seen = set()
    for c in annotation.collisions:
      new = _collision_slot(amap.sampled_original_ids, visible, c)
      if new is None:
        continue
      event = CollisionEvent(new, c.pair)
      if (event.frame_id, event.pair) not in seen:
        seen.add((event.frame_id, event.pair))
        collisions.append(event)
    if amap.is_identity(annotation.n_frames):
      fps = annotation.fps
    else:
      fps = amap.fps
    return SceneAnnotation(annotation.scene_id, fps, amap.K, annotation.objects,
                           annotation.positions[idx], annotation.velocities[idx],
                           visible, collisions)

  raise TypeError("cannot remap %s"%(type(annotation).__name__))

def record_id(annotation):
  if isinstance(annotation, SceneAnnotation):
    return annotation.scene_id
  return annotation.video_id

def _align_one(annotation, max_duration_s, frame_budget):
  """(aligned annotation, None) or (None, drop reason)."""
  try:
    amap = build_alignment(timeline_of(annotation), max_duration_s, frame_budget)
    return remap_annotations(annotation, amap), None
  except (SpanExceeded, EmptyTimeline, UnmappedFrame) as e:
    return None, "%s: %s"%(type(e).__name__, e.message)

def align_records(annotations, max_duration_s=const.max_duration_s,
                  frame_budget=const.frame_budget, verbose=False, jobs=1):
  """
  Aligns a batch. Unalignable records are dropped, not truncated. Output
  keeps input order for any jobs value.

  Returns
  -------
  aligned: list of annotations
  dropped: list of (record id, reason)
  """
  annotations = list(annotations)
  work = lambda ann: _align_one(ann, max_duration_s, frame_budget)
  aligned = []
  dropped = []
  for ann,(out,reason) in zip(annotations, ordered_map(work, annotations, jobs)):
    if reason is None:
      aligned.append(out)
      continue
    dropped.append((record_id(ann), reason))
    if verbose:
      print_skip(record_id(ann), 'align', reason)
  return aligned, dropped
