import numpy as np

class Integrator(object):
  """
  Exact linear advance of object centers.

  Every object keeps an anchor (position, time) from its last velocity
  change, and its position at time t is anchor + v*(t - t_anchor). There is
  no sub-stepping, so positions never accumulate per-frame round-off.
  """

  def __init__(self, dt):
    """
    Parameters
    ----------
    dt: float
      time between consecutive frames
    """
    self.dt = dt
    self.y = None
    self.v = None
    self.t = None

  def _set_y_value(self, y, v, t):
    """
    Sets positions and velocities at a time. Used for the initial
    condition.
    """
    self.y = np.array(y, dtype=float)
    self.v = np.array(v, dtype=float)
    self.t = t
    self.tstart = t
    self.nstep = 0
    self.y0 = self.y.copy()
    self.t0 = np.full(self.y.shape[0], t, dtype=float)

  def set_velocity(self, i, v):
    """Changes the velocity of object i, re-anchoring it at the current position."""
    self.y0[i] = self.y[i]
    self.t0[i] = self.t
    self.v[i] = v

  def integrate(self):
    """Advances every object by one frame."""
    self.nstep += 1
    self.t = self.tstart + self.nstep*self.dt
    self.y = self.y0 + self.v*(self.t - self.t0)[:,None]
