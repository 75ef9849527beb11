from dataclasses import dataclass, field, asdict

import cofforge.constants as const
from .errors import DatasetFormatError
from .trace_eval import extract_frame_refs
from .utils import check_fields

FIELDS = ('sample_id', 'video_ref', 'source', 'category', 'question',
          'reasoning', 'answer', 'frame_refs', 'n_frames')

@dataclass
class CofSample:
  """
  One (question, frame-aware reasoning, answer) training record.

  n_frames is K, the frame count of the aligned video the sample's frame
  references index into. Invariants are checked by curate.validate, not
  here, so rejected samples stay representable.
  """
  sample_id: str
  video_ref: str
  source: str
  category: str
  question: str
  reasoning: list = field(default_factory=list)
  answer: str = ''
  frame_refs: list = field(default_factory=list)
  n_frames: int = const.frame_budget

  def __post_init__(self):
    if self.source not in const.sources:
      raise ValueError("unknown source '%s'"%(self.source))
    if self.category not in const.categories:
      raise ValueError("unknown category '%s'"%(self.category))
    self.reasoning = [str(s) for s in self.reasoning]
    self.frame_refs = [int(f) for f in self.frame_refs]
    self.n_frames = int(self.n_frames)

  @property
  def reasoning_text(self):
    return "\n".join(self.reasoning)

  @property
  def nrefs(self):
    return len(self.frame_refs)

  def to_dict(self):
    return asdict(self)

  @classmethod
  def from_dict(cls, record, path=None, line=None):
    check_fields(record, FIELDS, path, line)
    if not isinstance(record['reasoning'], list) or not isinstance(record['frame_refs'], list):
      raise DatasetFormatError("reasoning and frame_refs must be lists", path, line)
    try:
      return cls(**record)
    except (TypeError, ValueError) as e:
      raise DatasetFormatError(str(e), path, line)

def make_sample(sample_id, video_ref, source, category, question, reasoning, answer, n_frames):
  """Builds a sample whose frame_refs are read off its reasoning."""
  refs = sorted(extract_frame_refs("\n".join(reasoning)))
  return CofSample(sample_id, video_ref, source, category, question,
                   list(reasoning), answer, refs, n_frames)
