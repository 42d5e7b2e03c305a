"""
Batch decay analysis over a list of axial speeds
Below the critical speed each run is checked against the guaranteed decay
bound; at or above it only the fitted rate is reported
"""

import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime

import pandas as pd

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'simulation'))

from energy_analysis import check_decay_bound, energy_series, fit_decay
from integrator import run
from string_errors import HypothesisViolated
from string_model import critical_speed

SWEEP_COLUMNS = ['v', 'lambda_bound', 'lambda_measured', 'max_violation', 'verdict', 'error']


def sweep_row(base, v, tol=0.02):
    """Simulate base at speed v and return one sweep row"""
    config = base.with_changes(params=base.params.with_changes(v=v))
    series = energy_series(run(config))
    if v >= critical_speed() or config.params.delta <= 0:
        try:
            measured = fit_decay(series)
        except Exception:
            measured = None
        return {'v': v, 'lambda_bound': None, 'lambda_measured': measured,
                'max_violation': None, 'verdict': HypothesisViolated.__name__, 'error': None}

    report = check_decay_bound(series, config.params, tol=tol)
    return {'v': v, 'lambda_bound': report.lambda_bound,
            'lambda_measured': report.lambda_measured,
            'max_violation': report.max_violation, 'verdict': report.verdict, 'error': None}


def _error_row(v, error):
    return {'v': v, 'lambda_bound': None, 'lambda_measured': None,
            'max_violation': None, 'verdict': 'ERROR', 'error': f"{type(error).__name__}: {error}"}


def sweep(base, v_values, tol=0.02, n_workers=1, verbose=True):
    """
    One decay analysis per speed. Failed runs are reported as ERROR rows
    with their message; the sweep itself never aborts.

    Returns
    -------
    pd.DataFrame
        Columns v, lambda_bound, lambda_measured, max_violation, verdict, error
    """
    v_values = [float(v) for v in v_values]
    if verbose:
        print("BATCH SPEED SWEEP")
        print(f"\n1. Speeds: {v_values} (critical speed {critical_speed():.6f})")
        print(f"   Started at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")

    rows = []
    failed = []
    start_time = time.time()

    if n_workers > 1 and v_values:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [(v, pool.submit(sweep_row, base, v, tol)) for v in v_values]
            for v, future in futures:
                try:
                    rows.append(future.result())
                except Exception as e:
                    print(f"   ERROR at v={v}: {e}")
                    rows.append(_error_row(v, e))
                    failed.append(v)
    else:
        for i, v in enumerate(v_values, 1):
            if verbose:
                print(f"\n[{i}/{len(v_values)}] Processing: v = {v}")
            try:
                rows.append(sweep_row(base, v, tol))
            except Exception as e:
                print(f"\n ERROR processing v = {v}:")
                print(f"   {str(e)}")
                traceback.print_exc()
                rows.append(_error_row(v, e))
                failed.append(v)

            if verbose and i % 2 == 0:
                elapsed = time.time() - start_time
                remaining = (len(v_values) - i) * elapsed / i
                print("PROGRESS UPDATE:")
                print(f"   Completed: {i}/{len(v_values)} ({i/len(v_values)*100:.1f}%)")
                print(f"   Failed: {len(failed)}")
                print(f"   Time elapsed: {elapsed:.1f} s")
                print(f"   Estimated remaining: {remaining:.1f} s")

    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)

    if verbose:
        print("\nSPEED SWEEP COMPLETE!")
        print(f"Total time: {time.time() - start_time:.1f} s")
        if len(table):
            print(table.to_string(index=False))
        if failed:
            print("\nFailed speeds:")
            for v in failed:
                print(f"   - {v}")

    return table
