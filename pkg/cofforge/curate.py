"""
Final dataset assembly: validation, deduplication, zero-reference
rebalancing, statistics and the training-trace variants.
"""
import json
import math
import numpy as np
from copy import deepcopy
from dataclasses import dataclass, field

import cofforge.constants as const

from .errors import EmptyDataset
from .log import print_skip, print_count
from .printing import format_table, histogram_rows
from .sample import CofSample
from .trace_eval import FRAME_REF, extract_frame_refs, strip_frame_refs
from .utils import iter_jsonl, write_jsonl

REASONS = ('empty_question', 'question_reference', 'empty_reasoning',
           'empty_answer', 'out_of_range', 'ref_mismatch')
VARIANTS = ('cof', 'cot', 'qa')

@dataclass(frozen=True)
class Verdict:
  accepted: bool
  reason: str = None

  def __bool__(self):
    return self.accepted

ACCEPT = Verdict(True)

def validate(sample, n_frames=None):
  """
  Checks a sample against the record invariants.

  Parameters
  ----------
  sample: CofSample
  n_frames: int
    K of the sample's aligned video, defaults to sample.n_frames

  Returns
  -------
  Verdict
  """
  K = sample.n_frames if n_frames is None else n_frames
  if not sample.question.strip():
    return Verdict(False, 'empty_question')
  if FRAME_REF.search(sample.question):
    return Verdict(False, 'question_reference')
  if not any(s.strip() for s in sample.reasoning):
    return Verdict(False, 'empty_reasoning')
  if not sample.answer.strip():
    return Verdict(False, 'empty_answer')
  if any(f < 1 or f > K for f in sample.frame_refs):
    return Verdict(False, 'out_of_range')
  if sorted(set(sample.frame_refs)) != sorted(extract_frame_refs(sample.reasoning_text)) or \
     len(set(sample.frame_refs)) != len(sample.frame_refs):
    return Verdict(False, 'ref_mismatch')
  return ACCEPT

def reject_record(sample, reason):
  return {'ref': sample.sample_id, 'reason': reason, 'sample': sample.to_dict()}

def filter_samples(samples, verbose=False):
  """Splits samples into (accepted, reject records)."""
  kept = []
  rejects = []
  for s in samples:
    verdict = validate(s)
    if verdict:
      kept.append(s)
    else:
      rejects.append(reject_record(s, verdict.reason))
      if verbose:
        print_skip(s.sample_id, s.category, verdict.reason)
  return kept, rejects

def dedup(samples):
  """Drops samples repeating a (video_ref, question) pair; first occurrence wins."""
  seen = set()
  out = []
  for s in samples:
    key = (s.video_ref, s.question)
    if key not in seen:
      seen.add(key)
      out.append(s)
  return out

def zero_ref_quota(n_referenced, target):
  """Largest zero-reference count z with z/(z+n_referenced) <= target."""
  if target >= 1.:
    return None
  # the 1e-9 keeps exact quotients like 0.2*4/0.8 from rounding down
  return int(math.floor(target*n_referenced/(1.-target) + 1.e-9))

def rebalance(samples, target_zero_ref_fraction=const.target_zero_ref_fraction, seed=0):
  """
  Subsamples zero-reference samples down to a target fraction.

  Referenced samples are all kept. Zero-reference samples are drawn
  uniformly without replacement from a generator seeded with seed, and
  the input order of everything kept is preserved.

  Raises
  ------
  EmptyDataset
  """
  if not samples:
    raise EmptyDataset("nothing to rebalance")
  zero = [i for i,s in enumerate(samples) if not s.frame_refs]
  quota = zero_ref_quota(len(samples)-len(zero), target_zero_ref_fraction)
  if quota is None or quota >= len(zero):
    return list(samples)
  rng = np.random.default_rng(seed)
  chosen = set(int(i) for i in rng.choice(zero, size=quota, replace=False)) if quota else set()
  return [s for i,s in enumerate(samples) if s.frame_refs or i in chosen]

def curate_samples(samples, target_zero_ref_fraction=const.target_zero_ref_fraction,
                   seed=0, verbose=False):
  """validate -> dedup -> rebalance. Returns (dataset, reject records)."""
  kept, rejects = filter_samples(samples, verbose)
  kept = dedup(kept)
  if not kept:
    raise EmptyDataset("every sample was rejected")
  return rebalance(kept, target_zero_ref_fraction, seed), rejects

################################################################################
# statistics                                                                   #
################################################################################
@dataclass
class DatasetManifest:
  total: int
  by_source: dict
  by_category: dict
  zero_ref_fraction: float
  histogram: dict
  source_histograms: dict = field(default_factory=dict)

  def check(self):
    """Conservation of counts."""
    if sum(self.by_source.values()) != self.total or \
       sum(self.by_category.values()) != self.total or \
       sum(self.histogram.values()) != self.total:
      raise ValueError("manifest counts do not sum to the total")

  def to_dict(self):
    return {
      'total': self.total,
      'by_source': dict(self.by_source),
      'by_category': dict(self.by_category),
      'zero_ref_fraction': self.zero_ref_fraction,
      'histogram': dict(self.histogram),
      'source_histograms': deepcopy(self.source_histograms),
      'reference_composition': {'total': const.reference_total,
                                'real': const.reference_real,
                                'synth': const.reference_synth},
    }

  def table(self):
    rows = [[src, n] for src,n in sorted(self.by_source.items())]
    rows += [[cat, n] for cat,n in sorted(self.by_category.items())]
    rows.append(['total', self.total])
    out = [format_table(['group','samples'], rows), ""]
    hrows = [[b, self.histogram[b]] + [self.source_histograms[s][b] for s in sorted(self.source_histograms)]
             for b in const.histogram_bins]
    out.append(format_table(['refs','all'] + sorted(self.source_histograms), hrows))
    out.append("")
    out.append("zero-reference fraction: %.4f"%(self.zero_ref_fraction))
    return "\n".join(out)

  def write(self, path):
    """Writes the json manifest, its text table (.txt) and histogram rows (.csv)."""
    with open(path, 'w', encoding='utf-8') as f:
      f.write(json.dumps(self.to_dict(), indent=2, sort_keys=True)+"\n")
    with open(str(path)+".txt", 'w', encoding='utf-8') as f:
      f.write(self.table()+"\n")
    with open(str(path)+".csv", 'w', encoding='utf-8') as f:
      hists = [('all', self.histogram)]
      hists += [(s, h) for s,h in sorted(self.source_histograms.items())]
      f.write("\n".join(histogram_rows(hists))+"\n")

def manifest(samples):
  """
  Counts, zero-reference fraction and distinct-reference histograms
  (bins 0..10 and 11+) of a dataset.

  Raises
  ------
  EmptyDataset
  """
  if not samples:
    raise EmptyDataset("cannot describe an empty dataset")
  by_source = {}
  by_category = {}
  hist = const.empty_histogram()
  source_hists = {}
  zero = 0
  for s in samples:
    by_source[s.source] = by_source.get(s.source, 0) + 1
    by_category[s.category] = by_category.get(s.category, 0) + 1
    b = const.histogram_bin(len(set(s.frame_refs)))
    hist[b] += 1
    source_hists.setdefault(s.source, const.empty_histogram())[b] += 1
    if not s.frame_refs:
      zero += 1
  man = DatasetManifest(len(samples), by_source, by_category, zero/len(samples),
                        hist, source_hists)
  man.check()
  return man

def print_manifest(man):
  for src in sorted(man.by_source):
    print_count("%s samples"%(src), man.by_source[src])
  print_count("total samples", man.total)

################################################################################
# training-trace variants                                                      #
################################################################################
def derive_variant(samples, variant):
  """
  Rewrites samples into one training-trace variant.

  cof: unchanged frame-referenced reasoning.
  cot: every frame reference replaced by a generic mention of the video,
       frame_refs cleared.
  qa: reasoning dropped, question and answer only.
  """
  if variant not in VARIANTS:
    raise ValueError("unknown variant '%s' (choose from %s)"%(variant, ", ".join(VARIANTS)))
  out = []
  for s in samples:
    s = deepcopy(s)
    if variant == 'cot':
      s.reasoning = [strip_frame_refs(step) for step in s.reasoning]
      s.frame_refs = []
    elif variant == 'qa':
      s.reasoning = []
      s.frame_refs = []
    out.append(s)
  return out

################################################################################
# dataset files                                                                #
################################################################################
def write_dataset(samples, path):
  return write_jsonl(path, (s.to_dict() for s in samples))

def read_dataset(path):
  """
  Raises
  ------
  DatasetFormatError
    citing the line of a malformed record or an unknown field.
  """
  return [CofSample.from_dict(r, path, i) for i,r in iter_jsonl(path)]

def write_rejects(rejects, path):
  return write_jsonl(path, rejects)
