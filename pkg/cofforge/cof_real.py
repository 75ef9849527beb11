"""
Real-video branch: frame-captioned annotations are written into a
generation prompt, completed by a generation client, and the
**Question** / **Reasoning** / **Answer** blocks of the completion are
parsed into CofSamples.
"""
import re
from dataclasses import dataclass, field

from .client import GenerationRequest
from .curate import validate, reject_record
from .errors import DatasetFormatError, MalformedCompletion
from .log import print_skip, Progress
from .sample import make_sample
from .utils import iter_jsonl, check_fields

PROMPT_INSTRUCTION = "\n".join([
  "Ask a question based on the narrative that is provided for a video. The questions should be answerable from the video description.",
  "Start reasoning step-by-step like this:",
  "Point out key elements from the video relevant to the question.",
  "Break down the reasoning from those elements to the answer.",
  "Include specific frame numbers as references to support your reasoning.",
  "Answer clearly.",
  "**Question**:",
  "**Reasoning**:",
  "**Answer**:",
])

MARKERS = ('Question', 'Reasoning', 'Answer')
_MARKER = re.compile(r'\*\*(Question|Reasoning|Answer)\*\*:')
_ENUM = re.compile(r'^(?:\d+[.)]|[-*•])(?=\s|$)\s*')
_BLANK_LINE = re.compile(r'\n[ \t]*\n')

################################################################################
# annotations                                                                  #
################################################################################
@dataclass
class VideoAnnotation:
  """
  Frame-captioned annotation of a real video. captions is a list of
  (frame_id, text) with 1-based, strictly increasing frame ids.
  """
  video_id: str
  duration_s: float
  fps: float
  captions: list
  n_frames: int = None

  def __post_init__(self):
    self.captions = [(int(f), str(c)) for f,c in self.captions]
    self.duration_s = float(self.duration_s)
    self.fps = float(self.fps)
    if self.duration_s <= 0. or self.fps <= 0.:
      raise ValueError("%s: duration and fps must be positive"%(self.video_id))
    if not self.captions:
      raise ValueError("%s: no captions"%(self.video_id))
    ids = [f for f,_ in self.captions]
    if ids[0] < 1 or any(b <= a for a,b in zip(ids[:-1], ids[1:])):
      raise ValueError("%s: caption frame ids must be 1-based and strictly increasing"%(self.video_id))
    if self.n_frames is None:
      self.n_frames = max(int(round(self.duration_s*self.fps)), ids[-1])
    self.n_frames = int(self.n_frames)
    if ids[-1] > self.n_frames:
      raise ValueError("%s: caption frame %d beyond n_frames"%(self.video_id, ids[-1]))

  def to_dict(self):
    return {'video_id': self.video_id, 'duration_s': self.duration_s, 'fps': self.fps,
            'captions': [[f,c] for f,c in self.captions], 'n_frames': self.n_frames}

  @classmethod
  def from_dict(cls, record, path=None, line=None):
    check_fields(record, ('video_id','duration_s','fps','captions'), path, line,
                 optional=('n_frames',))
    try:
      return cls(str(record['video_id']), record['duration_s'], record['fps'],
                 [tuple(c) for c in record['captions']], record.get('n_frames'))
    except (TypeError, ValueError) as e:
      raise DatasetFormatError(str(e), path, line)

def read_videos(path):
  return [VideoAnnotation.from_dict(r, path, i) for i,r in iter_jsonl(path)]

################################################################################
# prompt                                                                       #
################################################################################
def build_prompt(annotation, instruction=None):
  """
  Instruction block, a blank line, then one "Frame <id>: <caption>" line
  per caption. No trailing newline.
  """
  head = PROMPT_INSTRUCTION if instruction is None else instruction.rstrip()
  lines = [head, ""]
  lines += ["Frame %d: %s"%(f, c) for f,c in annotation.captions]
  return "\n".join(lines)

################################################################################
# completion parsing                                                           #
################################################################################
@dataclass(frozen=True)
class Triplet:
  question: str
  reasoning: tuple
  answer: str

@dataclass
class ParseResult:
  triplets: list = field(default_factory=list)
  rejects: list = field(default_factory=list)

def split_steps(text):
  """Non-empty lines with leading enumeration tokens removed."""
  steps = []
  for line in text.splitlines():
    step = _ENUM.sub('', line.strip()).strip()
    if step:
      steps.append(step)
  return steps

def parse_generation(text):
  """
  Splits a completion into (question, reasoning steps, answer) triplets.

  A triplet starts at each **Question**: marker and must carry exactly the
  markers Question, Reasoning, Answer in that order, each with non-empty
  content. An answer ends at its first blank line. Anything else is a
  MalformedCompletion reject; the other triplets of the text are kept.
  Never raises.

  Returns
  -------
  ParseResult
  """
  result = ParseResult()
  hits = list(_MARKER.finditer(text or ''))
  if not hits:
    result.rejects.append(MalformedCompletion("no Question/Reasoning/Answer markers", "triplet 1"))
    return result

  groups = []
  for m in hits:
    if m.group(1) == 'Question' or not groups:
      groups.append([])
    groups[-1].append(m)

  for k,group in enumerate(groups):
    locator = "triplet %d"%(k+1)
    end = groups[k+1][0].start() if k+1 < len(groups) else len(text)
    names = tuple(m.group(1) for m in group)
    if names != MARKERS:
      result.rejects.append(MalformedCompletion(
        "markers %s, expected Question, Reasoning, Answer"%(", ".join(names)), locator))
      continue
    bounds = [m.end() for m in group]
    stops = [group[1].start(), group[2].start(), end]
    question = text[bounds[0]:stops[0]].strip()
    steps = split_steps(text[bounds[1]:stops[1]])
    answer = _BLANK_LINE.split(text[bounds[2]:stops[2]].strip(), 1)[0].strip()
    if not question or not steps or not answer:
      empty = [n for n,v in zip(MARKERS, (question, steps, answer)) if not v]
      result.rejects.append(MalformedCompletion("empty %s"%(", ".join(empty)), locator))
      continue
    result.triplets.append(Triplet(question, tuple(steps), answer))
  return result

################################################################################
# samples                                                                      #
################################################################################
def to_cof_samples(video_id, triplets, n_frames, start=0):
  """
  Turns parsed triplets into real_free_form samples.

  Samples failing validation (a frame reference in the question, a
  reference beyond n_frames, ...) go to the reject stream with their reason.

  Returns
  -------
  samples: list of CofSample
  rejects: list of reject records
  """
  samples = []
  rejects = []
  for i,t in enumerate(triplets, start):
    s = make_sample("%s/real/%d"%(video_id, i), video_id, 'real', 'real_free_form',
                    t.question, list(t.reasoning), t.answer, n_frames)
    verdict = validate(s)
    if verdict:
      samples.append(s)
    else:
      rejects.append(reject_record(s, verdict.reason))
  return samples, rejects

def generation_requests(annotations, config):
  reqs = []
  for ann in annotations:
    prompt = build_prompt(ann, config.instruction)
    for i in range(config.requests_per_video):
      reqs.append(GenerationRequest(ann.video_id, prompt, config.max_new_tokens,
                                    config.temperature, i))
  return reqs

def generate_real(annotations, client, config):
  """
  Runs the real-video branch on aligned annotations.

  Parameters
  ----------
  annotations: list of VideoAnnotation
    already remapped onto aligned frame ids
  client: GenerationClient
  config: PipelineConfig

  Returns
  -------
  samples: list of CofSample
  rejects: list of reject records (malformed completions and invalid samples)
  """
  by_id = dict((a.video_id, a) for a in annotations)
  reqs = generation_requests(annotations, config)
  responses = client.complete_many(reqs, config.max_in_flight)

  samples = []
  rejects = []
  counter = {}
  progress = Progress(len(responses), config.progress)
  for i,resp in enumerate(responses):
    progress.update(i)
    ann = by_id[resp.video_id]
    parsed = parse_generation(resp.text)
    for err in parsed.rejects:
      key = reqs[i].key
      rejects.append({'ref': "%s %s"%(key, err.locator), 'reason': 'malformed_completion',
                      'detail': err.message})
      if config.verbose:
        print_skip(key, 'real_free_form', err.message)
    start = counter.get(ann.video_id, 0)
    new, bad = to_cof_samples(ann.video_id, parsed.triplets, ann.n_frames, start)
    counter[ann.video_id] = start + len(parsed.triplets)
    samples += new
    rejects += bad
    if config.verbose:
      for r in bad:
        print_skip(r['ref'], 'real_free_form', r['reason'])
  progress.done()
  return samples, rejects
