"""
Frame references in reasoning traces, answer extraction and benchmark
scoring (accuracy, binary accuracy, mean relative accuracy).

A frame reference is the token "frame" (any case, optionally plural)
followed by an optional hyphen or a single space and a decimal integer
>= 1: "Frame 7", "frame-10", "Frame-3", "frames 4". Only the integer
adjacent to the token is read, so "Frames 3 and 5" references frame 3.
"""
import math
import re
from dataclasses import dataclass, field

from numba import jit, double

import cofforge.constants as const

from .errors import NoAnswerFound, ZeroGold, UnknownTask, DatasetFormatError
from .results import MetricReport
from .utils import iter_jsonl, check_fields

FRAME_REF = re.compile(r'\bframes?(?:-| )?(\d+)', re.IGNORECASE)
_PREP_REF = re.compile(r'\b(?:(in|at|during|from|by|of)\s+)?(frames?(?:-| )?\d+)', re.IGNORECASE)
_ANSWER = re.compile(r'\banswer\b', re.IGNORECASE)
_LETTER = re.compile(r'\b([A-Z])\b')
_YES_NO = re.compile(r'\b(yes|no)\b', re.IGNORECASE)
_NUMBER = re.compile(r'-?\d+(?:\.\d+)?')

KINDS = ('multiple_choice', 'binary_yes_no', 'numeric')

COT_INSTRUCTION = "\n".join([
  "Given a video and a question, Start reasoning step-by-step like this:",
  "Point out key frames from the video relevant to the question.",
  "Break down the reasoning from those frames to the answer.",
  "Conclude your reasoning to the answer.",
])

################################################################################
# frame references                                                             #
################################################################################
def frame_ref_spans(text):
  """(start, end) of the digits of every grammar match, frame 0 included."""
  return [m.span(1) for m in FRAME_REF.finditer(text)]

def extract_frame_refs(text):
  """Distinct frame IDs in order of first mention."""
  refs = []
  seen = set()
  for m in FRAME_REF.finditer(text):
    f = int(m.group(1))
    if f >= 1 and f not in seen:
      seen.add(f)
      refs.append(f)
  return refs

def count_frame_refs(text):
  return len(extract_frame_refs(text))

def strip_frame_refs(text):
  """
  Replaces every frame reference by a generic mention of the video:
  "In Frame 1 the cube moves" becomes "In the video the cube moves".
  """
  def generic(m):
    prep = m.group(1)
    if prep:
      return prep+" the video"
    head = text[:m.start()].rstrip()
    if not head or head[-1] in '.!?:\n':
      return "The video"
    return "the video"
  return _PREP_REF.sub(generic, text)

def build_eval_prompt(question, n_frames=None):
  """
  Chain-of-thought inference prompt. With n_frames, the frames are
  announced by interleaved "Frame-<n>: <image>" identifier lines.
  """
  lines = []
  if n_frames:
    lines += ["Frame-%d: <image>"%(i) for i in range(1, n_frames+1)]
  lines += [COT_INSTRUCTION, "", "Question: %s"%(question)]
  return "\n".join(lines)

################################################################################
# tasks and predictions                                                        #
################################################################################
@dataclass
class EvalTask:
  task_id: str
  kind: str
  gold: object
  split: str
  options: list = field(default_factory=list)

  def __post_init__(self):
    if self.kind not in KINDS:
      raise ValueError("unknown task kind '%s'"%(self.kind))
    if self.kind == 'multiple_choice':
      labels = [str(o[0]) for o in self.options]
      expected = [chr(ord('A')+i) for i in range(len(labels))]
      if len(labels) < 2 or labels != expected:
        raise ValueError("%s: options must be labeled A, B, C, ..."%(self.task_id))
      if self.gold not in labels:
        raise ValueError("%s: gold '%s' is not an option"%(self.task_id, self.gold))
    elif self.kind == 'binary_yes_no':
      self.gold = str(self.gold).lower()
      if self.gold not in ('yes','no'):
        raise ValueError("%s: binary gold must be yes or no"%(self.task_id))
    else:
      self.gold = float(self.gold)
      if not math.isfinite(self.gold):
        raise ValueError("%s: numeric gold must be finite"%(self.task_id))

  @property
  def labels(self):
    return [str(o[0]) for o in self.options]

@dataclass
class Prediction:
  task_id: str
  raw_text: str

def read_tasks(path):
  tasks = []
  for i,r in iter_jsonl(path):
    check_fields(r, ('task_id','kind','gold','split'), path, i, optional=('options',))
    try:
      tasks.append(EvalTask(str(r['task_id']), r['kind'], r['gold'], str(r['split']),
                            [tuple(o) for o in r.get('options', [])]))
    except (ValueError, TypeError) as e:
      raise DatasetFormatError(str(e), path, i)
  return tasks

def read_predictions(path):
  preds = []
  for i,r in iter_jsonl(path):
    check_fields(r, ('task_id','raw_text'), path, i)
    preds.append(Prediction(str(r['task_id']), str(r['raw_text'])))
  return preds

################################################################################
# answer extraction                                                            #
################################################################################
def extract_answer(raw_text, kind, labels=None):
  """
  Reads the final answer out of a free-form output.

  multiple_choice: option letter on the last line containing "answer",
    else the last standalone option letter.
  binary_yes_no: last yes / no.
  numeric: last number that is not part of a frame reference.

  Raises
  ------
  NoAnswerFound
  """
  if kind == 'multiple_choice':
    labels = set(labels) if labels else set('ABCD')
    for line in reversed(raw_text.splitlines()):
      m = _ANSWER.search(line)
      if m is None:
        continue
      for letter in _LETTER.findall(line[m.end():]):
        if letter in labels:
          return letter
    letters = [l for l in _LETTER.findall(raw_text) if l in labels]
    if letters:
      return letters[-1]
  elif kind == 'binary_yes_no':
    found = _YES_NO.findall(raw_text)
    if found:
      return found[-1].lower()
  elif kind == 'numeric':
    carve = frame_ref_spans(raw_text)
    values = []
    for m in _NUMBER.finditer(raw_text):
      if any(m.start() < e and s < m.end() for s,e in carve):
        continue
      values.append(float(m.group(0)))
    if values:
      return values[-1]
  else:
    raise ValueError("unknown task kind '%s'"%(kind))
  raise NoAnswerFound("no %s answer found"%(kind))

################################################################################
# metrics                                                                      #
################################################################################
@jit(double(double, double, double[:]), nopython=True)
def relative_accuracy(pred, gold, thresholds):
  rel = abs(pred - gold)/abs(gold)
  hits = 0
  for i in range(thresholds.shape[0]):
    if rel < 1.0 - thresholds[i]:
      hits += 1
  return hits/thresholds.shape[0]

def mra(pred, gold):
  """
  Mean relative accuracy over the confidence thresholds 0.50, 0.55, ..., 0.95
  with a strict inequality at each threshold.

  Raises
  ------
  ZeroGold
  """
  pred = float(pred)
  gold = float(gold)
  if not (math.isfinite(pred) and math.isfinite(gold)):
    raise ValueError("mra needs finite values")
  if gold == 0.:
    raise ZeroGold("mra is undefined for a zero ground truth")
  return float(relative_accuracy(pred, gold, const.mra_thresholds))

def score_one(task, raw_text):
  """Score of one prediction; raises NoAnswerFound."""
  answer = extract_answer(raw_text, task.kind, task.labels)
  if task.kind == 'numeric':
    return mra(answer, task.gold)
  return 1.0 if answer == task.gold else 0.0

def score(tasks, predictions):
  """
  Scores predictions against tasks.

  Split scores are means over their tasks; the overall score is the
  unweighted mean of split scores. Tasks without a prediction and
  predictions without an extractable answer score 0 and are tallied.

  Raises
  ------
  UnknownTask
  """
  by_id = dict((t.task_id, t) for t in tasks)
  preds = {}
  for p in predictions:
    if p.task_id not in by_id:
      raise UnknownTask("prediction for unknown task '%s'"%(p.task_id), p.task_id)
    preds[p.task_id] = p

  report = MetricReport()
  # tasks are visited in a fixed order so the report never depends on input order
  for tid in sorted(by_id):
    task = by_id[tid]
    p = preds.get(tid)
    if p is None:
      report.add(task.split, task.kind, 0.0, None, missing=True)
      continue
    nrefs = count_frame_refs(p.raw_text)
    try:
      report.add(task.split, task.kind, score_one(task, p.raw_text), nrefs)
    except NoAnswerFound:
      report.add(task.split, task.kind, 0.0, nrefs, no_answer=True)
  return report

def reference_histogram(predictions):
  """Distinct frame-reference counts of predictions, binned 0..10 and 11+."""
  hist = const.empty_histogram()
  for p in predictions:
    hist[const.histogram_bin(count_frame_refs(p.raw_text))] += 1
  return hist
