"""
Exceptions raised by cofforge. Every error can carry a locator (a
``path:line`` pair or a record id) that the command line prints.
"""

class CofForgeError(Exception):

  def __init__(self, message, locator=None):
    super(CofForgeError, self).__init__(message)
    self.message = message
    self.locator = locator

  def __str__(self):
    if self.locator is None:
      return self.message
    return "%s: %s"%(self.locator, self.message)

class ConfigError(CofForgeError, ValueError):
  pass

### alignment ###
class EmptyTimeline(CofForgeError):
  pass

class SpanExceeded(CofForgeError):
  pass

class UnmappedFrame(CofForgeError):
  pass

### template skips ###
class TemplateSkip(CofForgeError):
  reason = 'skip'

class NoEntryEvent(TemplateSkip):
  reason = 'no_entry_event'

class AmbiguousOrder(TemplateSkip):
  reason = 'ambiguous_order'

class NoSuchEvent(TemplateSkip):
  reason = 'no_such_event'

class TooFewNeighbors(TemplateSkip):
  reason = 'too_few_neighbors'

class DistanceTie(TemplateSkip):
  reason = 'distance_tie'

### real-video branch ###
class MalformedCompletion(CofForgeError):
  pass

class ProviderError(CofForgeError):

  def __init__(self, status, message, locator=None):
    super(ProviderError, self).__init__("provider returned %s: %s"%(status, message), locator)
    self.status = status

class TransientProviderError(ProviderError):
  pass

class ReplayMiss(CofForgeError):
  pass

### curation and io ###
class EmptyDataset(CofForgeError):
  pass

class DatasetFormatError(CofForgeError):

  def __init__(self, message, path=None, line=None):
    locator = None
    if path is not None:
      locator = "%s:%s"%(path, line) if line is not None else str(path)
    elif line is not None:
      locator = "line %d"%(line)
    super(DatasetFormatError, self).__init__(message, locator)
    self.path = path
    self.line = line

### evaluation ###
class NoAnswerFound(CofForgeError):
  pass

class ZeroGold(CofForgeError, ValueError):
  pass

class UnknownTask(CofForgeError):
  pass
