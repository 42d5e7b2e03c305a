"""
Spatial convergence against a manufactured solution
"""

import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import integrate

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'simulation'))

from discretization import GridSpec
from integrator import run
from lemma_identities import validate_levels
from string_model import ManufacturedSolution, ProfileSpec


@dataclass
class ConvergenceReport:
    levels: list
    errors: list
    orders: list
    t_end: float
    expected_order: float
    order_tol: float
    verdict: str

    def to_frame(self):
        return pd.DataFrame({
            'n': self.levels,
            'l2_error': self.errors,
            'order': [None] + list(self.orders),
        })

    def to_dict(self):
        return {
            'levels': self.levels,
            'errors': self.errors,
            'orders': self.orders,
            't_end': self.t_end,
            'expected_order': self.expected_order,
            'order_tol': self.order_tol,
            'verdict': self.verdict,
        }


def level_error(config):
    """L2 distance between the simulated and manufactured y at t_end"""
    traj = run(config)
    nodes = config.grid.nodes
    exact = config.mms.evaluate(nodes, traj.times[-1])
    return float(np.sqrt(integrate.trapezoid((traj.y[-1] - exact)**2, dx=config.grid.h)))


def convergence_study(base, levels=(64, 128, 256), manufactured=None,
                      expected_order=2.0, order_tol=0.2, n_workers=1, verbose=False):
    """
    Run base on every level with the manufactured forcing attached and report
    the observed orders log2(e_k / e_(k+1))
    """
    levels = validate_levels(levels)
    if manufactured is None:
        manufactured = base.mms if base.mms is not None else ManufacturedSolution()
    configs = [base.with_changes(grid=GridSpec(n), mms=manufactured,
                                 f=ProfileSpec.zero(), g=ProfileSpec.zero()) for n in levels]

    if verbose:
        print(f"1. Running {len(levels)} levels: n = {levels} (t_end = {base.t_end})")
    start = time.time()
    errors = {}
    failed = []

    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = {n: pool.submit(level_error, cfg) for n, cfg in zip(levels, configs)}
            for n, future in futures.items():
                try:
                    errors[n] = future.result()
                except Exception as e:
                    print(f"   ERROR at n={n}: {e}")
                    failed.append((n, e))
    else:
        for n, cfg in zip(levels, configs):
            try:
                errors[n] = level_error(cfg)
                if verbose:
                    print(f"   n = {n:5d}  L2 error = {errors[n]:.6e}")
            except Exception as e:
                print(f"   ERROR at n={n}: {e}")
                traceback.print_exc()
                failed.append((n, e))

    if failed:
        print(f"Failed levels: {[n for n, _ in failed]}")
        raise failed[0][1]

    errs = [errors[n] for n in levels]
    orders = [float(np.log2(coarse / fine)) for coarse, fine in zip(errs[:-1], errs[1:])]
    passed = all(abs(order - expected_order) <= order_tol for order in orders)

    if verbose:
        print(f"2. Observed orders: {', '.join(f'{o:.3f}' for o in orders)}")
        print(f"   Finished in {time.time() - start:.1f} s")

    return ConvergenceReport(levels=levels, errors=errs, orders=orders, t_end=base.t_end,
                             expected_order=expected_order, order_tol=order_tol,
                             verdict='PASS' if passed else 'FAIL')
