"""
Evidence-gathering runs for questions the decay theory leaves open:
the string with Kelvin-Voigt damping only (delta = 0), free and forced, and
velocity-feedback control at the moving eyelet. These report measurements,
not stability verdicts.
"""

import os
import sys
import time
import traceback
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import integrate

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'simulation'))

from energy_analysis import check_monotone, energy_series, fit_decay
from integrator import BoundaryModel, boundary_power, run
from string_errors import OutOfRange
from string_model import evaluate_profile, kv_dissipation

N_WINDOWS = 10


@dataclass
class UndampedReport:
    forced: bool
    energy_drop: float
    dissipated: float
    forcing_work: float
    budget_error: float
    window_sup_y: list
    sup_y_trend: float
    monotone: object
    verdict: str

    def to_dict(self):
        return {
            'forced': self.forced,
            'energy_drop': self.energy_drop,
            'dissipated': self.dissipated,
            'forcing_work': self.forcing_work,
            'budget_error': self.budget_error,
            'window_sup_y': self.window_sup_y,
            'sup_y_trend': self.sup_y_trend,
            'monotone': None if self.monotone is None else self.monotone.to_dict(),
            'verdict': self.verdict,
        }


@dataclass
class ControlReport:
    table: pd.DataFrame
    best_gain: float
    verdict: str

    def to_dict(self):
        return {
            'best_gain': self.best_gain,
            'verdict': self.verdict,
            'gains': self.table.to_dict(orient='records'),
        }


def window_maxima(times, values, n_windows=N_WINDOWS):
    """max of values over n_windows equal time windows"""
    edges = np.linspace(times[0], times[-1], n_windows + 1)
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (times >= lo) & (times <= hi)
        out.append(float(np.max(values[mask])) if mask.any() else float('nan'))
    return out


def undamped_experiment(config, tol=1e-6, verbose=False, return_trajectory=False):
    """
    Kelvin-Voigt-only run. Unforced: E must not increase (within tol) and
    E(0) - E(T) must match the time-integrated dissipation. Forced: the
    budget includes the work of F, and only the sup|y| windows are reported.
    """
    params = config.params
    if params.delta != 0.0:
        raise OutOfRange(f"undamped experiments need delta = 0, got {params.delta}")
    forced = not config.effective_forcing.is_zero()

    traj = run(config, verbose=verbose)
    series = energy_series(traj, params)
    times = traj.times
    E = np.array([s.E for s in series])
    sup_y = np.array([s.sup_y for s in series])

    if verbose:
        print("4. Energy budget...")
    dissipation = np.array([kv_dissipation(traj.state(k).y, traj.state(k).w, params)
                            for k in range(len(traj))])
    dissipated = float(integrate.trapezoid(dissipation, times)) if len(times) > 1 else 0.0
    work = 0.0
    if forced and len(times) > 1:
        forcing = config.effective_forcing
        power = np.array([integrate.trapezoid(evaluate_profile(forcing, config.grid.nodes, t) * traj.w[k],
                                              dx=config.grid.h)
                          for k, t in enumerate(times)])
        work = float(integrate.trapezoid(power, times))

    drop = float(E[0] - E[-1])
    scale = max(abs(E[0]), dissipated, abs(work), np.finfo(float).tiny)
    budget_error = abs(drop - (dissipated - work)) / scale

    windows = window_maxima(times, sup_y)
    trend = windows[-1] / windows[0] if windows[0] > 0 else float('nan')

    monotone = None if forced else check_monotone(series, 'E', tol)
    verdict = 'EVIDENCE' if forced else monotone.verdict

    if verbose:
        print(f"   E(0) - E(T) = {drop:.6e}, dissipated = {dissipated:.6e}, work = {work:.6e}")
        print(f"   relative budget error = {budget_error:.3e}")
        print(f"   sup|y| late/early = {trend:.4g}")

    report = UndampedReport(forced=forced, energy_drop=drop, dissipated=dissipated,
                            forcing_work=work, budget_error=float(budget_error),
                            window_sup_y=windows, sup_y_trend=float(trend),
                            monotone=monotone, verdict=verdict)
    return (report, traj) if return_trajectory else report


def control_experiment(config, gains, power_tol=1e-12, verbose=True):
    """
    Velocity feedback at x = 1 for each gain: largest boundary power over the
    samples (must be <= 0 up to round-off) and the fitted decay rate of E
    """
    tension_model = config.boundary.tension_model
    if verbose:
        print("VELOCITY FEEDBACK GAIN SCAN")
        print(f"\n1. Gains: {list(gains)}  (tension model: {tension_model})")

    rows = []
    failed = []
    start_time = time.time()
    for i, k_v in enumerate(gains, 1):
        if verbose:
            print(f"\n[{i}/{len(gains)}] Processing: k_v = {k_v}")
        try:
            model = BoundaryModel.velocity_feedback(k_v, tension_model)
            cfg = config.with_changes(boundary=model)
            traj = run(cfg)
            series = energy_series(traj, cfg.params)
            powers = [boundary_power(traj.state(k), model, cfg.params, cfg.grid)
                      for k in range(len(traj))]
            scale = max(series[0].E, np.finfo(float).tiny)
            max_power = float(np.max(powers))
            try:
                rate = fit_decay(series, which='E')
            except Exception:
                rate = None
            rows.append({'k_v': float(k_v), 'max_boundary_power': max_power,
                         'power_ok': bool(max_power <= power_tol * scale),
                         'rate_E': rate, 'final_E': series[-1].E, 'error': None})
        except Exception as e:
            print(f"\n ERROR processing k_v = {k_v}:")
            print(f"   {str(e)}")
            traceback.print_exc()
            failed.append(k_v)
            rows.append({'k_v': float(k_v), 'max_boundary_power': None, 'power_ok': None,
                         'rate_E': None, 'final_E': None,
                         'error': f"{type(e).__name__}: {e}"})

    table = pd.DataFrame(rows, columns=['k_v', 'max_boundary_power', 'power_ok',
                                        'rate_E', 'final_E', 'error'])
    ok = table[table['error'].isna()]
    rated = ok.dropna(subset=['rate_E'])
    best = float(rated.loc[rated['rate_E'].astype(float).idxmax(), 'k_v']) if len(rated) else None

    if not ok['power_ok'].all():
        verdict = 'FAIL'
    elif failed:
        verdict = 'ERROR'
    else:
        verdict = 'PASS'

    if verbose:
        print("\nGAIN SCAN COMPLETE!")
        print(f"Total time: {time.time() - start_time:.1f} s")
        print(table.to_string(index=False))
        if failed:
            print("\nFailed gains:")
            for k_v in failed:
                print(f"   - {k_v}")

    return ControlReport(table=table, best_gain=best, verdict=verdict)
