import json
import numpy as np
from copy import deepcopy

import cofforge.constants as const
from .log import print_basic
from .printing import format_table, histogram_rows

def add_reports(report1, report2):
  """
  Merges the tallies of report2 into report1. Used to reduce reports
  scored on separate chunks of predictions.

  Parameters
  ----------
  report1: MetricReport or None
    Container report.
  report2: MetricReport
    Report to add to the container.
  """
  if report1 is None:
    return deepcopy(report2)
  for split,tally in report2.splits.items():
    own = report1._split(split)
    for key in ('n','no_answer','missing'):
      own[key] += tally[key]
    own['scores'] += tally['scores']
    for b,n in tally['histogram'].items():
      own['histogram'][b] += n
  for kind,scores in report2.kinds.items():
    report1.kinds.setdefault(kind, []).extend(scores)
  return report1

class MetricReport(object):
  """
  Per-split and aggregate benchmark scores.

  Split score is the mean over its tasks (accuracy for choice and binary
  tasks, MRA for numeric ones). The overall score is the unweighted mean
  of split scores. Frame-reference histograms count predictions only, so
  tasks without a prediction add to the split but not to any histogram.
  """

  def __init__(self):
    self.splits = {}
    self.kinds = {}

  def _split(self, split):
    if split not in self.splits:
      self.splits[split] = {'n': 0, 'scores': [], 'no_answer': 0, 'missing': 0,
                            'histogram': const.empty_histogram()}
    return self.splits[split]

  def add(self, split, kind, score, nrefs, no_answer=False, missing=False):
    """
    Records one task.

    Parameters
    ----------
    split: str
    kind: str
    score: float
      in [0,1]
    nrefs: int or None
      distinct frame references of the prediction, None when missing
    """
    tally = self._split(split)
    tally['n'] += 1
    tally['scores'].append(float(score))
    if no_answer:
      tally['no_answer'] += 1
    if missing:
      tally['missing'] += 1
    if nrefs is not None:
      tally['histogram'][const.histogram_bin(nrefs)] += 1
    self.kinds.setdefault(kind, []).append(float(score))

  def split_score(self, split):
    return float(np.mean(self.splits[split]['scores']))

  @property
  def split_scores(self):
    return dict((s, self.split_score(s)) for s in sorted(self.splits))

  @property
  def overall(self):
    if not self.splits:
      return 0.0
    return float(np.mean([self.split_score(s) for s in sorted(self.splits)]))

  @property
  def kind_scores(self):
    return dict((k, float(np.mean(v))) for k,v in sorted(self.kinds.items()))

  @property
  def n_tasks(self):
    return sum(t['n'] for t in self.splits.values())

  @property
  def no_answer(self):
    return sum(t['no_answer'] for t in self.splits.values())

  @property
  def missing(self):
    return sum(t['missing'] for t in self.splits.values())

  @property
  def histogram(self):
    hist = const.empty_histogram()
    for tally in self.splits.values():
      for b,n in tally['histogram'].items():
        hist[b] += n
    return hist

  def to_dict(self):
    return {
      'overall': self.overall,
      'n_tasks': self.n_tasks,
      'no_answer': self.no_answer,
      'missing': self.missing,
      'splits': dict((s, {'score': self.split_score(s), 'n': t['n'],
                          'no_answer': t['no_answer'], 'missing': t['missing'],
                          'histogram': dict(t['histogram'])})
                     for s,t in sorted(self.splits.items())),
      'kinds': self.kind_scores,
      'histogram': self.histogram,
    }

  def table(self):
    rows = [[s, t['n'], "%.4f"%(self.split_score(s)), t['no_answer'], t['missing']]
            for s,t in sorted(self.splits.items())]
    rows.append(['overall', self.n_tasks, "%.4f"%(self.overall), self.no_answer, self.missing])
    return format_table(['split','tasks','score','no_answer','missing'], rows)

  def write(self, path):
    """Writes the json report, its text table (.txt) and histogram rows (.csv)."""
    with open(path, 'w', encoding='utf-8') as f:
      f.write(json.dumps(self.to_dict(), indent=2, sort_keys=True)+"\n")
    with open(str(path)+".txt", 'w', encoding='utf-8') as f:
      f.write(self.table()+"\n")
    with open(str(path)+".csv", 'w', encoding='utf-8') as f:
      hists = [('all', self.histogram)]
      hists += [(s, t['histogram']) for s,t in sorted(self.splits.items())]
      f.write("\n".join(histogram_rows(hists))+"\n")

  def print_summary(self):
    print_basic(self.table())
