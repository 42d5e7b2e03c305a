"""
Energy and Lyapunov-functional checks on simulated trajectories
Exponential decay bound, sandwich 0 <= V <= K*E, dissipation inequality,
monotonicity of E or V
"""

import os
import sys
from dataclasses import asdict, dataclass, replace

import numpy as np
import pandas as pd
from scipy import stats

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'simulation'))

from integrator import EnergySample
from string_errors import InsufficientSamples, NonPositiveV
from string_model import (compute_K, decay_rate, dissipation_coefficient,
                          energy_E, lyapunov_V)

MIN_FIT_SAMPLES = 10


@dataclass(frozen=True)
class DecayReport:
    lambda_bound: float
    lambda_measured: float
    max_violation: float
    verdict: str
    tol: float
    rate_dominates: bool
    worst_t: float
    n_samples: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MonotoneReport:
    which: str
    verdict: str
    worst_uptick: float
    first_offence: tuple
    tol: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class InequalityReport:
    """Worst relative excess of one side over the other, PASS when <= tol"""

    check: str
    verdict: str
    max_excess: float
    worst_t: float
    tol: float

    def to_dict(self):
        return asdict(self)


def energy_series(traj, params=None):
    """
    One EnergySample per recorded state, with a centred finite-difference
    estimate of dV/dt on interior samples
    """
    params = traj.config.params if params is None else params
    series = []
    for k in range(len(traj)):
        state = traj.state(k)
        series.append(EnergySample(
            t=state.t,
            E=energy_E(state.y, state.w, params),
            V=lyapunov_V(state.y, state.w, params),
            sup_y=float(np.max(np.abs(state.y.values))),
        ))
    return with_rate_estimates(series)


def with_rate_estimates(series):
    if len(series) < 3:
        return list(series)
    t = np.array([s.t for s in series])
    V = np.array([s.V for s in series])
    rates = (V[2:] - V[:-2]) / (t[2:] - t[:-2])
    out = [series[0]]
    out += [replace(s, dVdt_est=float(r)) for s, r in zip(series[1:-1], rates)]
    out.append(series[-1])
    return out


def series_to_frame(series):
    return pd.DataFrame([asdict(s) for s in series], columns=['t', 'E', 'V', 'sup_y', 'dVdt_est'])


def _columns(series, which='V'):
    t = np.array([s.t for s in series], dtype=float)
    values = np.array([getattr(s, which) for s in series], dtype=float)
    return t, values


def fit_decay(series, window=None, which='V'):
    """
    Negated least-squares slope of ln V against t over the window
    (default: the middle 80% of the time span)
    """
    t, values = _columns(series, which)
    if len(t) == 0:
        raise InsufficientSamples("empty series")
    if window is None:
        span = t[-1] - t[0]
        window = (t[0] + 0.1 * span, t[0] + 0.9 * span)
    lo, hi = window
    slack = 1e-9 * max(1.0, abs(hi))
    mask = (t >= lo - slack) & (t <= hi + slack)
    if mask.sum() < MIN_FIT_SAMPLES:
        raise InsufficientSamples(
            f"{mask.sum()} samples in window [{lo:.4g}, {hi:.4g}], need {MIN_FIT_SAMPLES}")
    if np.any(values[mask] <= 0):
        raise NonPositiveV(f"{which} reached zero inside [{lo:.4g}, {hi:.4g}]; shrink the window")
    fit = stats.linregress(t[mask], np.log(values[mask]))
    return 0.0 - float(fit.slope)


def decay_bound_curve(series, lam):
    """V(0)*exp(-lam*(t - t0)) on the sample times; NaN when no rate is guaranteed"""
    t, V = _columns(series)
    if lam is None or len(t) == 0:
        return np.full(len(t), np.nan)
    return V[0] * np.exp(-lam * (t - t[0]))


def check_decay_bound(series, params, tol=0.02, window=None):
    lam = decay_rate(params)
    t, V = _columns(series)
    bound = decay_bound_curve(series, lam)
    with np.errstate(divide='ignore', invalid='ignore'):
        excess = np.where(bound > 0, V / bound - 1.0, np.where(V > 0, np.inf, 0.0))
    worst = int(np.argmax(excess))
    passed = bool(np.all(V <= (1.0 + tol) * bound))

    try:
        lam_measured = fit_decay(series, window)
    except (InsufficientSamples, NonPositiveV):
        lam_measured = None

    return DecayReport(
        lambda_bound=lam,
        lambda_measured=lam_measured,
        max_violation=float(excess[worst]),
        verdict='PASS' if passed else 'FAIL',
        tol=tol,
        rate_dominates=None if lam_measured is None else bool(lam_measured >= 0.95 * lam),
        worst_t=float(t[worst]),
        n_samples=len(t),
    )


def check_sandwich(series, params, tol=1e-3):
    """0 <= V <= K*E*(1 + tol) at every sample"""
    K = compute_K(params)
    t, V = _columns(series)
    _, E = _columns(series, 'E')
    upper = K * E
    with np.errstate(divide='ignore', invalid='ignore'):
        excess = np.where(upper > 0, V / upper - 1.0, np.where(V > 0, np.inf, 0.0))
    worst = int(np.argmax(excess))
    passed = bool(np.all(V >= 0) and np.all(V <= (1.0 + tol) * upper))
    return InequalityReport('sandwich', 'PASS' if passed else 'FAIL',
                            float(excess[worst]), float(t[worst]), tol)


def check_dissipation(series, params, tol=0.05):
    """dV/dt <= -c*E up to tol*c*E, using the centred estimates of dV/dt"""
    c = dissipation_coefficient(params)
    rows = [s for s in series if s.dVdt_est is not None and s.E > 0]
    if not rows:
        raise InsufficientSamples("no interior samples with a dV/dt estimate")
    t = np.array([s.t for s in rows])
    excess = np.array([(s.dVdt_est + c * s.E) / (c * s.E) for s in rows])
    worst = int(np.argmax(excess))
    return InequalityReport('dissipation', 'PASS' if excess[worst] <= tol else 'FAIL',
                            float(excess[worst]), float(t[worst]), tol)


def check_monotone(series, which='V', tol=1e-6):
    """PASS iff the functional never rises by more than tol (relative) between samples"""
    if which not in ('E', 'V'):
        raise ValueError(f"which must be 'E' or 'V', got '{which}'")
    t, values = _columns(series, which)
    if len(values) < 2:
        return MonotoneReport(which, 'PASS', 0.0, None, tol)

    before, after = values[:-1], values[1:]
    with np.errstate(divide='ignore', invalid='ignore'):
        upticks = np.where(before > 0, (after - before) / before,
                           np.where(after > before, np.inf, 0.0))
    offending = np.nonzero(after > before * (1.0 + tol))[0]
    first = None
    if offending.size:
        k = int(offending[0])
        first = (float(t[k]), float(t[k + 1]))
    return MonotoneReport(which, 'PASS' if first is None else 'FAIL',
                          float(np.max(upticks)), first, tol)
