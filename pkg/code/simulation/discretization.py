"""
Uniform-grid spatial operators for the damped moving string
Both nonlinear terms are assembled in conservative flux form so that the
discrete summation-by-parts identities hold exactly
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from string_errors import GridMismatch, OutOfRange

MIN_CELLS = 8


@dataclass(frozen=True)
class GridSpec:
    """Uniform mesh on [0, 1] with n cells, nodes x_i = i*h"""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_CELLS:
            raise OutOfRange(f"grid needs an integer n >= {MIN_CELLS}, got {self.n}")
        object.__setattr__(self, 'n', int(self.n))

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def nodes(self):
        return np.linspace(0.0, 1.0, self.n + 1)

    @property
    def midpoints(self):
        return (np.arange(self.n) + 0.5) / self.n


@dataclass(frozen=True)
class Field:
    """Nodal samples (length n+1) of y or w on a grid"""

    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n + 1,):
            raise GridMismatch(
                f"field of shape {values.shape} does not fit grid n={self.grid.n}")
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    def is_dirichlet(self):
        return self.values[0] == 0.0 and self.values[-1] == 0.0


@dataclass(frozen=True)
class HalfField:
    """Samples at the midpoints x_{i+1/2} (length n)"""

    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise GridMismatch(
                f"half field of shape {values.shape} does not fit grid n={self.grid.n}")
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)


def same_grid(*fields):
    """Return the common grid of the given fields or raise GridMismatch"""
    grid = fields[0].grid
    for field in fields[1:]:
        if field.grid != grid:
            raise GridMismatch(f"grid n={field.grid.n} differs from n={grid.n}")
    return grid


def sample(func, grid):
    """Sample a callable f(x) at the grid nodes"""
    return Field(np.asarray(func(grid.nodes), dtype=float), grid)


# Array kernels used by the operators below and by the time steppers

def _grad(values, h):
    return np.diff(values) / h


def _div(flux, h):
    out = np.zeros(flux.size + 1)
    out[1:-1] = np.diff(flux) / h
    return out


def _d1_central(values, h):
    return np.gradient(values, h, edge_order=2)


def _d1_upwind(values, h):
    out = np.empty_like(values)
    out[1:] = np.diff(values) / h
    out[0] = (values[1] - values[0]) / h
    return out


def _d2(values, h):
    out = np.zeros_like(values)
    out[1:-1] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / h**2
    return out


def gradient_half(y):
    """s_{i+1/2} = (y_{i+1} - y_i)/h, exact for affine y"""
    return HalfField(_grad(y.values, y.grid.h), y.grid)


def flux_divergence(q):
    """Discrete d/dx of a half-node flux; boundary rows are left at zero"""
    return Field(_div(q.values, q.grid.h), q.grid)


def first_derivative_central(u):
    """Central differences inside, second-order one-sided at the ends"""
    return Field(_d1_central(u.values, u.grid.h), u.grid)


def first_derivative_upwind(u):
    """First-order backward differences, for advection with v close to 1"""
    return Field(_d1_upwind(u.values, u.grid.h), u.grid)


def second_derivative_central(u):
    """Three-point second difference inside; boundary rows zero"""
    return Field(_d2(u.values, u.grid.h), u.grid)


def trapezoid(u, rule='trapezoid'):
    """Integral over [0, 1] of a nodal field (composite trapezoid or Simpson)"""
    if rule == 'trapezoid':
        return float(integrate.trapezoid(u.values, dx=u.grid.h))
    if rule == 'simpson':
        return float(integrate.simpson(u.values, dx=u.grid.h))
    raise ValueError(f"unknown quadrature rule '{rule}'")


def midpoint_sum(q):
    """Midpoint-rule integral over [0, 1] of a half-node quantity"""
    return float(q.grid.h * np.sum(q.values))


def acceleration_values(y, w, params, h, forcing=None, advection='central'):
    """Array version of rhs_acceleration, used inside the time steppers"""
    s = _grad(y, h)
    s_w = _grad(w, h)
    if advection == 'central':
        w_x = _d1_central(w, h)
    elif advection == 'upwind':
        w_x = _d1_upwind(w, h)
    else:
        raise ValueError(f"unknown advection scheme '{advection}'")

    a = (-2.0 * params.delta * w
         - 2.0 * params.v * w_x
         + (1.0 - params.v**2) * _d2(y, h)
         + 0.5 * params.b * _div(s**3, h)
         + params.eta * _div(s**2 * s_w, h))
    if forcing is not None:
        a = a + forcing
    a[0] = 0.0
    a[-1] = 0.0
    return a


def rhs_acceleration(y, w, params, forcing=None, advection='central'):
    """
    Right-hand side w_t of the first-order system

    Parameters
    ----------
    y, w : Field
        Displacement and velocity on the same grid
    params : StringParams
        v, b, delta, eta
    forcing : array or Field, optional
        F evaluated at the nodes at the current time
    advection : str
        'central' (default) or 'upwind' for the 2v*w_x term

    Returns
    -------
    Field
        Interior nodes carry the acceleration, boundary nodes carry 0
    """
    grid = same_grid(y, w)
    if isinstance(forcing, Field):
        same_grid(y, forcing)
        forcing = forcing.values
    values = acceleration_values(y.values, w.values, params, grid.h,
                                 forcing=forcing, advection=advection)
    return Field(values, grid)
