"""
Exception classes shared by the simulation, analysis and command-line stages
"""


class StringModelError(Exception):
    """Base class for every error raised by the moving-string toolkit"""


class OutOfRange(StringModelError, ValueError):
    """A physical parameter lies outside its admissible range; key names it"""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class HypothesisViolated(StringModelError):
    """A theorem's hypotheses (v < v_c, delta > 0, ...) do not hold"""


class DegenerateInitialData(StringModelError, ValueError):
    """Both initial profiles are identically zero"""


class IncompatibleProfile(StringModelError, ValueError):
    """A profile does not vanish at the fixed eyelets or is malformed"""


class EpsilonInfeasible(StringModelError, ValueError):
    """epsilon lies outside the window where the BIBO bound is defined"""


class EmptyFeasibleSet(StringModelError):
    """No epsilon satisfies the BIBO window constraints"""


class FormMismatch(StringModelError):
    """The two algebraic forms of V disagree beyond round-off"""


class GridMismatch(StringModelError, ValueError):
    """Fields that must share a grid live on different grids"""


class NonFiniteState(StringModelError):
    """The state contains NaN or Inf; t is the time of the failing step"""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t = {t:.6g})")
        self.t = t


class SolverFailure(StringModelError):
    """The tridiagonal velocity solve failed"""


class TensionNonpositive(StringModelError):
    """The boundary tension model evaluated to T(1, t) <= 0"""


class NonPositiveV(StringModelError, ValueError):
    """Cannot take log V: V reached the round-off floor inside the fit window"""


class InsufficientSamples(StringModelError, ValueError):
    """Too few samples for the requested analysis"""


class InvalidLevels(StringModelError, ValueError):
    """Refinement levels are not a doubling sequence of at least three grids"""


class ConfigError(StringModelError, ValueError):
    """Invalid scenario configuration; key is the dotted key path"""

    def __init__(self, key, reason):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason
