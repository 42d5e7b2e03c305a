"""
Bounded-input bounded-output experiment for the forced string
Runs a forced simulation from rest and compares the measured sup|y| with
the displacement bound at the optimal epsilon
"""

import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'simulation'))

from integrator import run
from string_errors import IncompatibleProfile
from string_model import (bibo_bound, compute_K, decay_rate, evaluate_profile,
                          optimize_epsilon)

MIN_BIBO_STRIDE = 100


@dataclass(frozen=True)
class BiboReport:
    f_x2_norm: float
    f_xinf_norm: float
    sup_y_measured: float
    epsilon_star: float
    bound: float
    margin: float
    K: float
    verdict: str

    def to_dict(self):
        return asdict(self)


def forcing_norms(forcing, grid, times):
    """(X2, Xinf) norms of F over the sample times: sup_t ||F||_L2 and sup |F|"""
    if forcing.kind == 'zero':
        return 0.0, 0.0
    x2, xinf = 0.0, 0.0
    for t in times:
        values = evaluate_profile(forcing, grid.nodes, t)
        x2 = max(x2, forcing.l2_norm(t, n=grid.n))
        xinf = max(xinf, float(np.max(np.abs(values))))
    return x2, xinf


def bibo_experiment(config, verbose=False, return_trajectory=False):
    """Verdict PASS iff the measured sup|y| stays below the bound at epsilon*"""
    params = config.params
    decay_rate(params)
    if not (config.f.is_zero() and config.g.is_zero()) or config.mms is not None:
        raise IncompatibleProfile("forced BIBO runs start from zero initial data")
    if config.output_stride < MIN_BIBO_STRIDE:
        config = config.with_changes(output_stride=MIN_BIBO_STRIDE)

    eps_star = optimize_epsilon(params)
    if verbose:
        print(f"1. Optimal epsilon: {eps_star:.6g}")

    traj = run(config, verbose=verbose)
    f_x2, f_xinf = forcing_norms(config.forcing, config.grid, traj.times)
    sup_y = max(s.sup_y for s in traj.samples)
    bound = bibo_bound(params, eps_star, f_x2)

    if verbose:
        print(f"4. ||F||_X2 = {f_x2:.6g}, ||F||_Xinf = {f_xinf:.6g}")
        print(f"   sup|y| = {sup_y:.6g}, bound = {bound:.6g}")

    report = BiboReport(
        f_x2_norm=f_x2,
        f_xinf_norm=f_xinf,
        sup_y_measured=float(sup_y),
        epsilon_star=eps_star,
        bound=float(bound),
        margin=float(bound - sup_y),
        K=compute_K(params),
        verdict='PASS' if sup_y <= bound else 'FAIL',
    )
    return (report, traj) if return_trajectory else report
