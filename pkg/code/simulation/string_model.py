"""
Physical parameters, initial/forcing profiles and the closed-form functionals
and constants of the damped nonlinear moving string:

    y_tt + 2*delta*y_t + 2*v*y_xt = [1 - v^2 + (3/2)*b*y_x^2]*y_xx
                                    + eta*(y_x^2*y_xt)_x + F

on 0 < x < 1 with fixed eyelets y(0, t) = y(1, t) = 0.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from discretization import (Field, GridSpec, HalfField, gradient_half,
                            midpoint_sum, same_grid, trapezoid)
from string_errors import (DegenerateInitialData, EmptyFeasibleSet,
                           EpsilonInfeasible, FormMismatch, GridMismatch,
                           HypothesisViolated, IncompatibleProfile, OutOfRange)

# relative agreement required between the two algebraic forms of V
FORM_TOLERANCE = 1e-12
NOISE_MODES = 8


@dataclass(frozen=True)
class StringParams:
    """v: axial speed, b: cubic stiffness, delta: viscous, eta: Kelvin-Voigt"""

    v: float
    b: float
    delta: float
    eta: float

    def __post_init__(self):
        for name in ('v', 'b', 'delta', 'eta'):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) \
                    or not math.isfinite(value):
                raise OutOfRange(f"{name} must be a finite number, got {value!r}", key=name)
            object.__setattr__(self, name, float(value))
        if not 0.0 <= self.v < 1.0:
            raise OutOfRange(f"v must satisfy 0 <= v < 1, got {self.v}", key='v')
        if self.b <= 0.0:
            raise OutOfRange(f"b must be positive, got {self.b}", key='b')
        if self.delta < 0.0:
            raise OutOfRange(f"delta must be nonnegative, got {self.delta}", key='delta')
        if self.eta < 0.0:
            raise OutOfRange(f"eta must be nonnegative, got {self.eta}", key='eta')

    def with_changes(self, **changes):
        values = {'v': self.v, 'b': self.b, 'delta': self.delta, 'eta': self.eta}
        values.update(changes)
        return StringParams(**values)


def validate_params(raw):
    """
    Build StringParams from a mapping {v, b, delta, eta} or a tuple
    (v, b, delta, eta). Rejects out-of-range values, never clamps.
    """
    if isinstance(raw, StringParams):
        return raw
    if isinstance(raw, dict):
        unknown = set(raw) - {'v', 'b', 'delta', 'eta'}
        if unknown:
            raise OutOfRange(f"unknown parameter(s): {sorted(unknown)}")
        missing = {'v', 'b', 'delta', 'eta'} - set(raw)
        if missing:
            raise OutOfRange(f"missing parameter(s): {sorted(missing)}")
        return StringParams(**raw)
    values = tuple(raw)
    if len(values) != 4:
        raise OutOfRange(f"expected (v, b, delta, eta), got {len(values)} values")
    return StringParams(*values)


# Profiles and forcing

@dataclass(frozen=True)
class ProfileSpec:
    """Initial displacement f or velocity g; always zero at x = 0 and x = 1"""

    kind: str = 'zero'
    modes: tuple = ()
    center: float = 0.5
    width: float = 0.5
    amplitude: float = 0.0
    power: float = 1.0
    values: tuple = ()

    def __post_init__(self):
        if self.kind == 'sine_modes':
            modes = tuple((float(a), int(k)) for a, k in self.modes)
            if not modes or any(k < 1 for _, k in modes):
                raise IncompatibleProfile("sine_modes needs (amplitude, mode >= 1) pairs")
            object.__setattr__(self, 'modes', modes)
        elif self.kind == 'bump':
            if self.width <= 0 or self.center - self.width / 2 < 0 \
                    or self.center + self.width / 2 > 1:
                raise IncompatibleProfile(
                    f"bump support [{self.center - self.width / 2}, "
                    f"{self.center + self.width / 2}] must lie inside [0, 1]")
        elif self.kind == 'poly_bump':
            if self.power < 1:
                raise IncompatibleProfile("poly_bump power must be >= 1")
        elif self.kind == 'sampled':
            values = tuple(float(u) for u in self.values)
            if len(values) < MIN_SAMPLED_NODES:
                raise IncompatibleProfile("sampled profile needs at least 9 nodes")
            if values[0] != 0.0 or values[-1] != 0.0:
                raise IncompatibleProfile("sampled profile must vanish at both ends")
            object.__setattr__(self, 'values', values)
        elif self.kind != 'zero':
            raise IncompatibleProfile(f"unknown profile kind '{self.kind}'")

    @classmethod
    def zero(cls):
        return cls('zero')

    @classmethod
    def sine_modes(cls, modes):
        return cls('sine_modes', modes=tuple(modes))

    @classmethod
    def sine(cls, amplitude, mode=1):
        return cls('sine_modes', modes=((amplitude, mode),))

    @classmethod
    def bump(cls, center, width, amplitude):
        return cls('bump', center=center, width=width, amplitude=amplitude)

    @classmethod
    def poly_bump(cls, amplitude, power=1.0):
        return cls('poly_bump', amplitude=amplitude, power=power)

    @classmethod
    def sampled(cls, values):
        return cls('sampled', values=tuple(values))

    def is_zero(self):
        if self.kind == 'zero':
            return True
        if self.kind == 'sine_modes':
            return all(a == 0.0 for a, _ in self.modes)
        if self.kind in ('bump', 'poly_bump'):
            return self.amplitude == 0.0
        return not any(self.values)

    def sup_abs(self):
        x = np.linspace(0.0, 1.0, 4001)
        return float(np.max(np.abs(evaluate_profile(self, x))))


MIN_SAMPLED_NODES = 9


@dataclass(frozen=True)
class ManufacturedSolution:
    """
    y*(x, t) = amplitude * sin(mode*pi*x) * T(t), with
    T = exp(-rate*t) ('exponential') or cos(rate*t) ('cosine')
    """

    amplitude: float = 1.0
    mode: int = 1
    time_kind: str = 'exponential'
    rate: float = 1.0

    def __post_init__(self):
        if self.time_kind not in ('exponential', 'cosine'):
            raise ValueError(f"unknown time_kind '{self.time_kind}'")
        if int(self.mode) != self.mode or self.mode < 1:
            raise ValueError("mode must be a positive integer")

    def _time(self, t):
        r = self.rate
        if self.time_kind == 'exponential':
            T = np.exp(-r * t)
            return T, -r * T, r**2 * T
        return np.cos(r * t), -r * np.sin(r * t), -r**2 * np.cos(r * t)

    def derivatives(self, x, t):
        """Dictionary of y, y_t, y_tt, y_x, y_xx, y_xt, y_xxt at (x, t)"""
        k = self.mode * np.pi
        T, T_t, T_tt = self._time(t)
        sin = self.amplitude * np.sin(k * x)
        cos = self.amplitude * np.cos(k * x)
        return {
            'y': sin * T, 'y_t': sin * T_t, 'y_tt': sin * T_tt,
            'y_x': k * cos * T, 'y_xx': -k**2 * sin * T,
            'y_xt': k * cos * T_t, 'y_xxt': -k**2 * sin * T_t,
        }

    def evaluate(self, x, t):
        return self.derivatives(x, t)['y']


@dataclass(frozen=True)
class ForcingSpec:
    """
    Distributed force F(x, t). Kinds: zero, separable (profile * A*sin(w t)),
    uniform_sinusoid (A*sin(w t)), bounded_noise (|F| <= A, seeded, held
    constant over bins of width hold) and manufactured (see mms_source).
    """

    kind: str = 'zero'
    amplitude: float = 0.0
    frequency: float = 0.0
    profile: ProfileSpec = field(default_factory=ProfileSpec)
    seed: int = None
    hold: float = 0.01
    manufactured: ManufacturedSolution = None
    params: StringParams = None

    def __post_init__(self):
        if self.kind not in ('zero', 'separable', 'uniform_sinusoid',
                             'bounded_noise', 'manufactured'):
            raise ValueError(f"unknown forcing kind '{self.kind}'")
        if self.kind == 'bounded_noise':
            if self.seed is None:
                raise ValueError("bounded_noise forcing requires an explicit seed")
            if self.amplitude < 0 or self.hold <= 0:
                raise ValueError("bounded_noise needs amplitude >= 0 and hold > 0")
        if self.kind == 'manufactured' and (self.manufactured is None or self.params is None):
            raise ValueError("manufactured forcing needs a descriptor and params")

    @classmethod
    def zero(cls):
        return cls('zero')

    @classmethod
    def separable(cls, profile, amplitude, frequency):
        return cls('separable', amplitude=amplitude, frequency=frequency, profile=profile)

    @classmethod
    def uniform_sinusoid(cls, amplitude, frequency):
        return cls('uniform_sinusoid', amplitude=amplitude, frequency=frequency)

    @classmethod
    def bounded_noise(cls, amplitude, seed, hold=0.01):
        return cls('bounded_noise', amplitude=amplitude, seed=int(seed), hold=hold)

    def is_zero(self):
        if self.kind == 'zero':
            return True
        if self.kind == 'separable':
            return self.amplitude == 0.0 or self.profile.is_zero()
        if self.kind in ('uniform_sinusoid', 'bounded_noise'):
            return self.amplitude == 0.0
        return False

    def sup_abs(self, t_max=10.0):
        """sup over (x, t) of |F|"""
        if self.kind == 'zero':
            return 0.0
        if self.kind == 'separable':
            return abs(self.amplitude) * self.profile.sup_abs()
        if self.kind in ('uniform_sinusoid', 'bounded_noise'):
            return abs(self.amplitude)
        x = np.linspace(0.0, 1.0, 401)
        return float(max(np.max(np.abs(evaluate_profile(self, x, t)))
                         for t in np.linspace(0.0, t_max, 401)))

    def l2_norm(self, t, n=1024):
        """Spatial L2 norm of F(., t) (trapezoid rule on n cells)"""
        x = np.linspace(0.0, 1.0, n + 1)
        values = evaluate_profile(self, x, t)
        return float(np.sqrt(integrate.trapezoid(values**2, dx=1.0 / n)))


@lru_cache(maxsize=4096)
def _noise_coefficients(seed, time_bin):
    rng = np.random.default_rng([seed, time_bin])
    c = rng.uniform(-1.0, 1.0, NOISE_MODES)
    total = np.sum(np.abs(c))
    return c / total if total > 0 else c


def _profile_values(spec, x):
    if spec.kind == 'zero':
        return np.zeros_like(x)
    if spec.kind == 'sine_modes':
        return sum(a * np.sin(k * np.pi * x) for a, k in spec.modes)
    if spec.kind == 'bump':
        z = (x - spec.center) / spec.width
        return np.where(np.abs(z) < 0.5, spec.amplitude * np.cos(np.pi * z)**2, 0.0)
    if spec.kind == 'poly_bump':
        return spec.amplitude * np.clip(x * (1.0 - x), 0.0, None)**spec.power
    source = np.linspace(0.0, 1.0, len(spec.values))
    return np.interp(x, source, np.asarray(spec.values))


def _forcing_values(spec, x, t):
    if spec.kind == 'zero':
        return np.zeros_like(x)
    if spec.kind == 'separable':
        return spec.amplitude * np.sin(spec.frequency * t) * evaluate_profile(spec.profile, x)
    if spec.kind == 'uniform_sinusoid':
        return np.full_like(x, spec.amplitude * np.sin(spec.frequency * t))
    if spec.kind == 'bounded_noise':
        c = _noise_coefficients(spec.seed, int(math.floor(t / spec.hold + 1e-9)))
        m = np.arange(1, NOISE_MODES + 1)
        return spec.amplitude * np.sin(np.pi * np.outer(x, m)) @ c
    d = spec.manufactured.derivatives(x, t)
    p = spec.params
    return (d['y_tt'] + 2.0 * p.delta * d['y_t'] + 2.0 * p.v * d['y_xt']
            - (1.0 - p.v**2 + 1.5 * p.b * d['y_x']**2) * d['y_xx']
            - p.eta * (2.0 * d['y_x'] * d['y_xx'] * d['y_xt'] + d['y_x']**2 * d['y_xxt']))


def evaluate_profile(spec, x, t=0.0):
    """
    Pointwise value of a ProfileSpec (t ignored) or ForcingSpec at (x, t).
    Profiles are exactly zero at x = 0 and x = 1.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(spec, ProfileSpec):
        out = np.where((x <= 0.0) | (x >= 1.0), 0.0, _profile_values(spec, x))
    elif isinstance(spec, ForcingSpec):
        out = np.asarray(_forcing_values(spec, x, t), dtype=float)
    else:
        raise TypeError(f"cannot evaluate {type(spec).__name__}")
    return float(out[0]) if scalar else out


def sample_profile(spec, grid):
    return Field(evaluate_profile(spec, grid.nodes), grid)


# Constants

@dataclass(frozen=True)
class BoundConstants:
    K: float
    v_c: float
    lam: float


def critical_speed():
    """Positive root of 1 - v - v^2 = 0"""
    return (math.sqrt(5.0) - 1.0) / 2.0


def compute_K(params):
    """K = 1 + delta*max{(1 + 2 delta/pi)/(pi(1 - v^2)), 2 eta/b}"""
    p = params
    first = (1.0 + 2.0 * p.delta / math.pi) / (math.pi * (1.0 - p.v**2))
    return 1.0 + p.delta * max(first, 2.0 * p.eta / p.b)


def _require_decay_hypotheses(params):
    if params.v >= critical_speed():
        raise HypothesisViolated(
            f"v = {params.v} is not below the critical speed {critical_speed():.6f}")
    if params.delta <= 0.0:
        raise HypothesisViolated("the decay theorem needs viscous damping delta > 0")


def decay_rate(params):
    """Guaranteed exponent 2 delta (1 - v - v^2) / (K (1 - v^2))"""
    _require_decay_hypotheses(params)
    p = params
    return 2.0 * p.delta * (1.0 - p.v - p.v**2) / (compute_K(p) * (1.0 - p.v**2))


def dissipation_coefficient(params):
    """c in dV/dt <= -c E, c = 2 delta (1 - v - v^2)/(1 - v^2)"""
    _require_decay_hypotheses(params)
    p = params
    return 2.0 * p.delta * (1.0 - p.v - p.v**2) / (1.0 - p.v**2)


def bound_constants(params):
    try:
        lam = decay_rate(params)
    except HypothesisViolated:
        lam = 0.0
    return BoundConstants(K=compute_K(params), v_c=critical_speed(), lam=lam)


# Functionals

def _check_grid(y, w, grid):
    actual = same_grid(y, w)
    if grid is not None and grid != actual:
        raise GridMismatch(f"fields live on n={actual.n}, expected n={grid.n}")
    return actual


def _gradient_integrals(y):
    s = gradient_half(y).values
    h = y.grid.h
    return h * np.sum(s**2), h * np.sum(s**4)


def energy_E(y, w, params, grid=None, rule='trapezoid'):
    """
    E = int 1/2 w^2 + 1/2 (1 - v^2) y_x^2 + b/8 y_x^4 dx

    The w^2 term uses the trapezoid rule on the nodes, the gradient terms the
    midpoint rule on the half-node gradients.
    """
    grid = _check_grid(y, w, grid)
    sx2, sx4 = _gradient_integrals(y)
    kinetic = 0.5 * trapezoid(Field(w.values**2, grid), rule)
    return kinetic + 0.5 * (1.0 - params.v**2) * sx2 + params.b / 8.0 * sx4


def lyapunov_V_forms(y, w, params, grid=None, rule='trapezoid'):
    """V evaluated as E + delta*(...) and as the sum of four nonnegative terms"""
    grid = _check_grid(y, w, grid)
    p = params
    yv, wv = y.values, w.values
    sx2, sx4 = _gradient_integrals(y)

    def integral(values):
        return trapezoid(Field(values, grid), rule)

    energy = 0.5 * integral(wv**2) + 0.5 * (1.0 - p.v**2) * sx2 + p.b / 8.0 * sx4
    v_e_form = energy + p.delta * (integral(yv * wv) + p.delta * integral(yv**2)
                                   + p.eta / 4.0 * sx4)
    v_sum_form = (0.5 * integral((wv + p.delta * yv)**2)
                  + 0.5 * p.delta**2 * integral(yv**2)
                  + 0.5 * (1.0 - p.v**2) * sx2
                  + (p.b / 8.0 + p.delta * p.eta / 4.0) * sx4)
    return v_e_form, v_sum_form


def lyapunov_V(y, w, params, grid=None, rule='trapezoid'):
    """V from the sum-of-squares form, cross-checked against E + delta*(...)"""
    v_e_form, v_sum_form = lyapunov_V_forms(y, w, params, grid, rule)
    scale = max(abs(v_sum_form), abs(v_e_form), np.finfo(float).tiny)
    if abs(v_e_form - v_sum_form) > FORM_TOLERANCE * scale:
        raise FormMismatch(f"V forms disagree: {v_e_form!r} vs {v_sum_form!r}")
    return v_sum_form


def kv_dissipation(y, w, params, grid=None):
    """eta * int y_x^2 y_xt^2 dx on half nodes (the rate of energy loss when delta = 0)"""
    grid = _check_grid(y, w, grid)
    s = gradient_half(y).values
    s_w = gradient_half(w).values
    return params.eta * midpoint_sum(HalfField(s**2 * s_w**2, grid))


def _sample_initial(f, g, grid):
    if f.is_zero() and g.is_zero():
        raise DegenerateInitialData("at least one of f, g must be nonzero")
    return sample_profile(f, grid), sample_profile(g, grid)


def initial_V(f, g, params, grid, rule='trapezoid'):
    y, w = _sample_initial(f, g, grid)
    return lyapunov_V(y, w, params, grid, rule)


def initial_E(f, g, params, grid, rule='trapezoid'):
    y, w = _sample_initial(f, g, grid)
    return energy_E(y, w, params, grid, rule)


# Bounded-input bounded-output bound

def _epsilon_window(params):
    _require_decay_hypotheses(params)
    p = params
    K = compute_K(p)
    window = decay_rate(p)
    positivity = (2.0 * p.delta * (1.0 - p.v**2) - 2.0 * p.delta * p.v) / (K * (1.0 - p.v**2))
    return K, min(window, positivity)


def _bibo_radicand(params, K, eps):
    p = params
    denom = eps * ((2.0 * p.delta - eps * K) * (1.0 - p.v**2) - 2.0 * p.delta * p.v)
    return K / denom, denom


def bibo_bound(params, eps, f_x2_norm):
    """sqrt(K / (eps[(2 delta - eps K)(1 - v^2) - 2 delta v])) * ||F||_X2"""
    K, upper = _epsilon_window(params)
    if f_x2_norm < 0:
        raise OutOfRange(f"norm must be nonnegative, got {f_x2_norm}")
    if not 0.0 < eps < upper:
        raise EpsilonInfeasible(f"eps = {eps} outside the window (0, {upper:.6g})")
    radicand, denom = _bibo_radicand(params, K, eps)
    if denom <= 0.0:
        raise EpsilonInfeasible(f"eps = {eps} makes the denominator nonpositive")
    return math.sqrt(radicand) * f_x2_norm


def optimize_epsilon(params):
    """eps minimising the BIBO prefactor over the feasible window"""
    K, upper = _epsilon_window(params)
    if upper <= 0.0:
        raise EmptyFeasibleSet(f"no feasible epsilon for {params}")
    result = optimize.minimize_scalar(
        lambda eps: _bibo_radicand(params, K, eps)[0],
        bounds=(upper * 1e-9, upper * (1.0 - 1e-9)),
        method='bounded',
        options={'xatol': upper * 1e-9})
    return float(result.x)
