"""Exception hierarchy shared by all modules."""


class ShockLabError(Exception):
    """Base class for every error raised by shocklab."""


class GridMismatchError(ShockLabError, ValueError):
    """Two fields on different grids were combined."""


class NonFiniteError(ShockLabError, ValueError):
    """A field contained NaN or infinite values."""


class OutOfRangeError(ShockLabError, ValueError):
    """A query fell outside the sampled domain or value range.

    Raised by monotone inversion when the target level is not attained,
    which in tracking means the shock has left the window.
    """


class NotAShockError(ShockLabError, ValueError):
    """Tail integrals do not decay on the truncated domain."""


class DegenerateEnsembleError(ShockLabError, ValueError):
    """All importance weights vanished, or the ensemble is too small."""


class SchemeAbort(ShockLabError, RuntimeError):
    """A time step violated a stability or structural precondition.

    Parameters
    ----------
    message : str
        What went wrong.
    t : float, optional
        Simulation time at which the abort happened.
    snapshot : dict, optional
        Name -> array of the offending state, for post-mortem inspection.
    """

    def __init__(self, message, t=None, snapshot=None):
        if t is not None:
            message = f"{message} (t={t:.6g})"
        super().__init__(message)
        self.t = t
        self.snapshot = snapshot or {}
