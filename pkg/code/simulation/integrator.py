"""
Time integration of the first-order system y_t = w, w_t = rhs_acceleration

Two schemes:
    explicit_rk4  classical four-stage Runge-Kutta
    imex_cn       drift-kick-drift; every term linear in w (viscous,
                  gyroscopic, Kelvin-Voigt with frozen coefficient) is
                  treated by Crank-Nicolson in one tridiagonal solve
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from discretization import (Field, GridSpec, _d2, _div, _grad,
                            acceleration_values)
from string_errors import NonFiniteState, SolverFailure, TensionNonpositive
from string_model import (ForcingSpec, ManufacturedSolution, ProfileSpec,
                          StringParams, energy_E, evaluate_profile,
                          lyapunov_V, sample_profile)

SCHEMES = ('explicit_rk4', 'imex_cn')


@dataclass(frozen=True)
class BoundaryModel:
    """
    fixed_fixed: y = w = 0 at both eyelets
    velocity_feedback: y = w = 0 at x = 0 and T(1,t)*y_x(1,t) = -k_v*y_t(1,t),
    with T = 1 - v^2 ('linear') or 1 - v^2 + (b/2)y_x^2 + eta*y_x*y_xt ('nonlinear')
    """

    kind: str = 'fixed_fixed'
    k_v: float = None
    tension_model: str = 'linear'

    def __post_init__(self):
        if self.kind not in ('fixed_fixed', 'velocity_feedback'):
            raise ValueError(f"unknown boundary kind '{self.kind}'")
        if self.kind == 'velocity_feedback':
            if self.k_v is None or not self.k_v > 0:
                raise ValueError(f"velocity feedback needs a gain k_v > 0, got {self.k_v}")
        if self.tension_model not in ('linear', 'nonlinear'):
            raise ValueError(f"unknown tension model '{self.tension_model}'")

    @classmethod
    def fixed_fixed(cls, tension_model='linear'):
        return cls('fixed_fixed', tension_model=tension_model)

    @classmethod
    def velocity_feedback(cls, k_v, tension_model='linear'):
        return cls('velocity_feedback', k_v=float(k_v), tension_model=tension_model)

    @property
    def is_feedback(self):
        return self.kind == 'velocity_feedback'


@dataclass(frozen=True)
class SimConfig:
    params: StringParams
    grid: GridSpec = field(default_factory=lambda: GridSpec(256))
    f: ProfileSpec = field(default_factory=ProfileSpec)
    g: ProfileSpec = field(default_factory=ProfileSpec)
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    scheme: str = 'imex_cn'
    t_end: float = 10.0
    cfl_safety: float = 0.5
    output_stride: int = 100
    boundary: BoundaryModel = field(default_factory=BoundaryModel)
    mms: ManufacturedSolution = None
    advection: str = 'central'

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got '{self.scheme}'")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if int(self.output_stride) != self.output_stride or self.output_stride < 1:
            raise ValueError(f"output_stride must be a positive integer, got {self.output_stride}")
        if self.advection not in ('central', 'upwind'):
            raise ValueError(f"unknown advection scheme '{self.advection}'")

    @property
    def effective_forcing(self):
        if self.mms is not None:
            return mms_source(self.mms, self.params)
        return self.forcing

    def with_changes(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class SimState:
    t: float
    y: Field
    w: Field


@dataclass(frozen=True)
class EnergySample:
    t: float
    E: float
    V: float
    sup_y: float
    dVdt_est: float = None


@dataclass
class Trajectory:
    """States at the output times plus one EnergySample per state"""

    config: SimConfig
    times: np.ndarray
    y: np.ndarray
    w: np.ndarray
    samples: list
    wall_time: float = 0.0

    def __len__(self):
        return len(self.times)

    def state(self, k):
        grid = self.config.grid
        return SimState(float(self.times[k]), Field(self.y[k], grid), Field(self.w[k], grid))

    @property
    def final_state(self):
        return self.state(len(self) - 1)


# Manufactured solutions

def mms_source(manufactured, params):
    """
    Forcing F* that makes the manufactured y* an exact solution:

        F* = y*_tt + 2 delta y*_t + 2 v y*_xt - (1 - v^2 + 3/2 b y*_x^2) y*_xx
             - eta (2 y*_x y*_xx y*_xt + y*_x^2 y*_xxt)
    """
    return ForcingSpec('manufactured', manufactured=manufactured, params=params)


def initial_state(config):
    """Sampled f, g (or y*(x, 0), y*_t(x, 0) for manufactured runs)"""
    grid = config.grid
    if config.mms is not None:
        d = config.mms.derivatives(grid.nodes, 0.0)
        y, w = Field(d['y'], grid), Field(d['y_t'], grid)
    else:
        y, w = sample_profile(config.f, grid), sample_profile(config.g, grid)
    return SimState(0.0, y, w)


def _forcing_at(forcing, grid, t):
    if forcing.kind == 'zero':
        return None
    return evaluate_profile(forcing, grid.nodes, t)


# Boundary conditions

def _one_sided_gradient(u, h):
    return (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)


def _feedback_velocity(y, w, model, params, h):
    """Boundary velocity w_n solving the discrete Robin condition, and T(1, t)"""
    g = _one_sided_gradient(y, h)
    T0 = 1.0 - params.v**2
    if model.tension_model == 'linear':
        return -T0 * g / model.k_v, T0
    T0 = T0 + 0.5 * params.b * g**2
    r = -4.0 * w[-2] + w[-3]
    w_n = -(T0 * g + params.eta * g**2 * r / (2.0 * h)) / \
        (model.k_v + 3.0 * params.eta * g**2 / (2.0 * h))
    tension = T0 + params.eta * g * (3.0 * w_n + r) / (2.0 * h)
    return w_n, tension


def _enforce(y, w, model, params, h):
    y = y.copy()
    w = w.copy()
    y[0] = 0.0
    w[0] = 0.0
    if model.is_feedback:
        w_n, tension = _feedback_velocity(y, w, model, params, h)
        if not tension > 0:
            raise TensionNonpositive(f"boundary tension T(1,t) = {tension:.6g} <= 0")
        w[-1] = w_n
    else:
        y[-1] = 0.0
        w[-1] = 0.0
    return y, w


def apply_boundary(state, model, grid, params=None):
    """
    Impose the boundary model on a state.

    For velocity feedback the one-sided second-order gradient at x = 1 is
    used in T*y_x = -k_v*w_n and the relation is solved for w_n; y_n then
    moves with w_n. The nonlinear tension model is linear in w_n as well.
    """
    if model.is_feedback and params is None:
        raise ValueError("velocity feedback needs the string parameters")
    y, w = _enforce(state.y.values, state.w.values, model, params, grid.h)
    return SimState(state.t, Field(y, grid), Field(w, grid))


def boundary_tension(state, model, params, grid):
    """(T(1, t), one-sided y_x(1, t)) for the configured tension model"""
    h = grid.h
    y, w = state.y.values, state.w.values
    g = _one_sided_gradient(y, h)
    tension = 1.0 - params.v**2
    if model.tension_model == 'nonlinear':
        tension += 0.5 * params.b * g**2 + params.eta * g * _one_sided_gradient(w, h)
    return tension, g


def boundary_power(state, model, params, grid):
    """T(1,t) y_x(1,t) y_t(1,t); equals -k_v w_n^2 on a state that satisfies the feedback law"""
    if not model.is_feedback:
        return 0.0
    tension, g = boundary_tension(state, model, params, grid)
    return float(tension * g * state.w.values[-1])


# Time step control

def stable_dt(state, config):
    """
    cfl_safety * min(h/(c_max + 2v), h^2/(2 eta max s^2)), the second
    (explicit Kelvin-Voigt diffusion) limit only for explicit_rk4, and the
    boundary relaxation limit h*k_v/T for feedback runs
    """
    p = config.params
    h = config.grid.h
    s2 = float(np.max(_grad(state.y.values, h)**2))
    c_max = np.sqrt(1.0 - p.v**2 + 1.5 * p.b * s2)
    dt = h / (c_max + 2.0 * p.v)
    if config.scheme == 'explicit_rk4':
        dt = min(dt, h**2 / (2.0 * p.eta * s2 + np.finfo(float).eps))
    if config.boundary.is_feedback:
        tension, _ = boundary_tension(state, config.boundary, p, config.grid)
        dt = min(dt, h * config.boundary.k_v / max(abs(tension), np.finfo(float).eps))
    return config.cfl_safety * dt


def _check_finite(y, w, t):
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
        raise NonFiniteState("state contains NaN or Inf", t)


# Explicit scheme

def step_rk4(state, dt, config, forcing=None):
    """Classical RK4 step; boundary values are re-imposed after every stage"""
    p = config.params
    h = config.grid.h
    model = config.boundary
    forcing = config.effective_forcing if forcing is None else forcing
    t = state.t

    def rhs(tau, y, w):
        F = _forcing_at(forcing, config.grid, tau)
        return w, acceleration_values(y, w, p, h, forcing=F, advection=config.advection)

    y0, w0 = state.y.values, state.w.values
    ky1, kw1 = rhs(t, y0, w0)
    y1, w1 = _enforce(y0 + 0.5 * dt * ky1, w0 + 0.5 * dt * kw1, model, p, h)
    ky2, kw2 = rhs(t + 0.5 * dt, y1, w1)
    y2, w2 = _enforce(y0 + 0.5 * dt * ky2, w0 + 0.5 * dt * kw2, model, p, h)
    ky3, kw3 = rhs(t + 0.5 * dt, y2, w2)
    y3, w3 = _enforce(y0 + dt * ky3, w0 + dt * kw3, model, p, h)
    ky4, kw4 = rhs(t + dt, y3, w3)

    y_new = y0 + dt / 6.0 * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4)
    w_new = w0 + dt / 6.0 * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4)
    _check_finite(y_new, w_new, t + dt)
    y_new, w_new = _enforce(y_new, w_new, model, p, h)
    return SimState(t + dt, Field(y_new, config.grid), Field(w_new, config.grid))


# Semi-implicit scheme

def _velocity_operator(coeff, params, h, advection):
    """Tridiagonal coefficients (lower, diag, upper) of w -> -2 delta w - 2v w_x + eta (c w_x)_x"""
    c_minus = coeff[:-1]
    c_plus = coeff[1:]
    kv_minus = params.eta * c_minus / h**2
    kv_plus = params.eta * c_plus / h**2
    if advection == 'central':
        lower = params.v / h + kv_minus
        diag = -2.0 * params.delta - kv_minus - kv_plus
        upper = -params.v / h + kv_plus
    else:
        lower = 2.0 * params.v / h + kv_minus
        diag = -2.0 * params.delta - 2.0 * params.v / h - kv_minus - kv_plus
        upper = kv_plus
    return lower, diag, upper


def solve_implicit_velocity(w, force, coeff, dt, params, h,
                            boundary=(0.0, 0.0), advection='central'):
    """
    Crank-Nicolson update of the velocity

        (I - dt/2 B) w_new = (I + dt/2 B) w + dt*force

    B holds the viscous, gyroscopic and Kelvin-Voigt terms (coeff = s^2 at
    the half nodes, length n). Boundary rows are identities carrying the
    prescribed boundary velocities. The matrix is diagonally dominant for
    dt <= h/v and any delta, eta >= 0.
    """
    w = np.asarray(w, dtype=float)
    size = w.size
    lower, diag, upper = _velocity_operator(np.asarray(coeff, dtype=float), params, h, advection)

    Bw = np.zeros(size)
    Bw[1:-1] = lower * w[:-2] + diag * w[1:-1] + upper * w[2:]

    rhs = w + 0.5 * dt * Bw + dt * np.asarray(force, dtype=float)
    rhs[0], rhs[-1] = boundary

    banded = np.zeros((3, size))
    banded[1, :] = 1.0
    banded[1, 1:-1] = 1.0 - 0.5 * dt * diag
    banded[0, 2:] = -0.5 * dt * upper
    banded[2, :-2] = -0.5 * dt * lower

    try:
        w_new = linalg.solve_banded((1, 1), banded, rhs)
    except (linalg.LinAlgError, ValueError) as e:
        raise SolverFailure(f"tridiagonal velocity solve failed: {e}") from e
    if not np.all(np.isfinite(w_new)):
        raise SolverFailure("tridiagonal velocity solve returned non-finite values")
    return w_new


def step_imex(state, dt, config, forcing=None):
    """
    Drift-kick-drift step.

    Half drift y_half = y + dt/2 w, then a Crank-Nicolson kick of w with the
    position forces ((1 - v^2) y_xx, cubic flux, F) taken at y_half and the
    Kelvin-Voigt coefficient s^2 frozen at y_half, then the second half drift
    with the new velocity. Reduces to Stormer-Verlet when eta = delta = v = 0.
    """
    p = config.params
    h = config.grid.h
    model = config.boundary
    forcing = config.effective_forcing if forcing is None else forcing
    t = state.t

    y, w = state.y.values, state.w.values
    y_half, w_bc = _enforce(y + 0.5 * dt * w, w, model, p, h)
    s_half = _grad(y_half, h)

    force = (1.0 - p.v**2) * _d2(y_half, h) + 0.5 * p.b * _div(s_half**3, h)
    F = _forcing_at(forcing, config.grid, t + 0.5 * dt)
    if F is not None:
        force = force + F
    force[0] = force[-1] = 0.0

    w_new = solve_implicit_velocity(w_bc, force, s_half**2, dt, p, h,
                                    boundary=(w_bc[0], w_bc[-1]),
                                    advection=config.advection)
    y_new = y_half + 0.5 * dt * w_new
    _check_finite(y_new, w_new, t + dt)
    y_new, w_new = _enforce(y_new, w_new, model, p, h)
    return SimState(t + dt, Field(y_new, config.grid), Field(w_new, config.grid))


# Driver

def _energy_sample(state, params):
    return EnergySample(
        t=float(state.t),
        E=energy_E(state.y, state.w, params),
        V=lyapunov_V(state.y, state.w, params),
        sup_y=float(np.max(np.abs(state.y.values))),
    )


def output_times(t_end, output_stride):
    """k/output_stride for k = 0, 1, ... up to t_end (t_end appended if off-grid)"""
    count = int(np.floor(t_end * output_stride + 1e-9))
    times = np.arange(count + 1) / output_stride
    if t_end - times[-1] > 1e-12 * max(1.0, t_end):
        times = np.append(times, t_end)
    return times


def run(config, verbose=False):
    """
    Integrate from t = 0 to t_end, recording the state and its energies at
    every output time. Steps are clipped so that output times are hit exactly.
    """
    start = time.time()
    step = step_rk4 if config.scheme == 'explicit_rk4' else step_imex
    forcing = config.effective_forcing
    grid = config.grid
    p = config.params

    if verbose:
        print(f"1. Sampling initial data (n={grid.n}, scheme={config.scheme})...")
    state = apply_boundary(initial_state(config), config.boundary, grid, p)

    targets = output_times(config.t_end, config.output_stride)
    ys = np.empty((len(targets), grid.n + 1))
    ws = np.empty((len(targets), grid.n + 1))
    samples = []

    def record(k, s):
        ys[k] = s.y.values
        ws[k] = s.w.values
        samples.append(_energy_sample(s, p))

    record(0, state)
    if verbose:
        print(f"2. Integrating to t = {config.t_end} ({len(targets) - 1} output intervals)...")

    n_steps = 0
    report_every = max(1, (len(targets) - 1) // 10)
    for k, target in enumerate(targets[1:], 1):
        while True:
            remaining = target - state.t
            if remaining <= 1e-12 * max(1.0, target):
                break
            dt = stable_dt(state, config)
            last = dt >= remaining
            state = step(state, min(dt, remaining), config, forcing)
            n_steps += 1
            if last:
                state = SimState(float(target), state.y, state.w)
                break
        record(k, state)
        if verbose and k % report_every == 0:
            print(f"   t = {target:.3f}  E = {samples[-1].E:.6e}  V = {samples[-1].V:.6e}")

    elapsed = time.time() - start
    if verbose:
        print(f"3. Done: {n_steps} steps in {elapsed:.1f} s")

    return Trajectory(config=config, times=targets, y=ys, w=ws,
                      samples=samples, wall_time=elapsed)
