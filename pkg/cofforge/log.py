import sys

def print_basic(line):
  sys.stdout.write(str(line)+"\n")
  sys.stdout.flush()

def _banner(title):
  pad = " "*int((40-2-len(title))/2)
  sys.stdout.write("#"*40+"\n")
  sys.stdout.write("#"+pad+title+pad+" #"+"\n")
  sys.stdout.write("#"*40+"\n")

def print_method(line):
  _banner(line)
  sys.stdout.flush()

def print_stage(line):
  sys.stdout.write("==> %s <==\n"%(line))
  sys.stdout.flush()

def print_progress(percent,tau):
  sys.stdout.write("%.0f Percent done"%(percent)+"."*10+"%.8f\n"%(tau))
  sys.stdout.flush()

def print_time(tau):
  sys.stdout.write("Elapsed time: %.8f\n"%(tau))
  sys.stdout.flush()

def print_count(label, n):
  sys.stdout.write("%-28s %d\n"%(label+":", n))
  sys.stdout.flush()

def print_skip(ref, category, reason):
  sys.stdout.write("skip %s [%s]: %s\n"%(ref, category, reason))
  sys.stdout.flush()

def print_warning(line):
  """Banner followed by the warning text; used for records a stage drops."""
  _banner("Warning")
  sys.stdout.write(line+"\n")
  sys.stdout.flush()

class Progress(object):
  """Prints ten evenly spaced progress lines over a loop of ntot items."""

  def __init__(self, ntot, enabled=True):
    from time import time
    self._time = time
    self.ntot = ntot
    self.enabled = enabled
    self.every = max(1, int(ntot/10))
    self.btime = time()

  def update(self, i):
    if self.enabled and self.ntot >= 10 and i%self.every==0:
      print_progress((100*i/self.ntot), (self._time()-self.btime))

  def done(self):
    if self.enabled:
      print_time(self._time()-self.btime)
