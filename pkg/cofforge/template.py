from abc import ABCMeta, abstractmethod

from .errors import TemplateSkip
from .log import print_skip
from .sample import make_sample

class Template(metaclass=ABCMeta):
  """Abstract base class for question templates over scene annotations."""

  category = None

  def __init__(self, plan):
    """
    Parameters
    ----------
    plan : GenerationPlan
    """
    self.plan = plan

  @abstractmethod
  def candidates(self, scene, rng):
    """Arguments to try for a scene, in order."""

  @abstractmethod
  def render(self, scene, arg):
    """(question, reasoning steps, answer) for one argument; raises TemplateSkip."""

  def limit(self):
    """Largest number of samples per scene, None for no limit."""
    return None

  def generate(self, scene, rng, skipped=None, verbose=False):
    """
    Renders candidates until the per-scene limit is reached. Skipped
    candidates are appended to skipped as (scene_id, category, reason).
    """
    samples = []
    limit = self.limit()
    for arg in self.candidates(scene, rng):
      if limit is not None and len(samples) >= limit:
        break
      try:
        question, steps, answer = self.render(scene, arg)
      except TemplateSkip as e:
        if skipped is not None:
          skipped.append((scene.scene_id, self.category, e.reason))
        if verbose:
          print_skip(scene.scene_id, self.category, "%s (%s)"%(e.reason, e.message))
        continue
      sid = "%s/%s/%d"%(scene.scene_id, self.category, len(samples))
      samples.append(make_sample(sid, scene.scene_id, 'synth', self.category,
                                 question, steps, answer, scene.n_frames))
    return samples
