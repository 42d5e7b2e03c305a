"""
Discrete residuals of the integration-by-parts identities behind the decay
proof, the Poincare-type inequality, and their grid-refinement behaviour.

For a displacement y and velocity w = y_t vanishing at both ends:

    r_a  int 2 w w_x                                    (= 0)
    r_b  int y_xx w + w_x y_x                           (= 0)
    r_c  int 3 y_x^2 y_xx w + y_x^3 w_x                 (= 0)
    r_d  int w (y_x^2 w_x)_x + int y_x^2 w_x^2          (= 0)
    r_e  int y_x^2 + int w^2 + 2 int y w_x              (>= 0, slack)
    r_f  int y y_xx + int y_x^2                         (= 0)
    r_g  int 3 y y_x^2 y_xx + int y_x^4                 (= 0)
    r_h  int y (y_x^2 w_x)_x + 1/4 int (y_x^4)_t        (= 0), (y_x^4)_t = 4 y_x^3 w_x

With central differences the flux-form residuals (a, b, d, f, h) telescope to
end-point terms of size h^2/4 [q u_xx] over x = 0, 1, where u is the field
multiplying the flux derivative. r_a vanishes identically, and when u_xx is
zero at both ends the rate rises above second order.
"""

import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from scipy import integrate

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'simulation'))

from discretization import GridSpec, same_grid, sample
from string_errors import GridMismatch, InvalidLevels

RESIDUAL_NAMES = ('r_a', 'r_b', 'r_c', 'r_d', 'r_e', 'r_f', 'r_g', 'r_h')
IDENTITY_NAMES = tuple(name for name in RESIDUAL_NAMES if name != 'r_e')

# residuals below this are exact discrete cancellations, not truncation error
ROUND_OFF_FLOOR = 1e-12

IDENTITY_PAIRS = {
    # no end-point symmetry, so every identity except r_a carries an h^2 term
    'skewed': (lambda x: x * (1.0 - x)**2, lambda x: x * (1.0 - x) * (1.0 + 2.0 * x)),
    'polybump': (lambda x: x * (1.0 - x), lambda x: np.sin(2.0 * np.pi * x)),
    'sine': (lambda x: np.sin(np.pi * x), lambda x: np.sin(np.pi * x)),
}


@dataclass(frozen=True)
class IdentityReport:
    n: int
    r_a: float
    r_b: float
    r_c: float
    r_d: float
    r_e: float
    r_f: float
    r_g: float
    r_h: float

    @property
    def residuals(self):
        return {name: getattr(self, name) for name in RESIDUAL_NAMES}

    def to_dict(self):
        return asdict(self)


@dataclass
class RefinementReport:
    pair: str
    table: pd.DataFrame
    ratios: pd.DataFrame
    verdict: str
    failures: list

    def to_dict(self):
        return {
            'pair': self.pair,
            'verdict': self.verdict,
            'failures': self.failures,
            'residuals': self.table.to_dict(orient='records'),
            'ratios': self.ratios.to_dict(orient='records'),
        }


def _derivative(u, h):
    return np.gradient(u, h, edge_order=2)


def lemma_residuals(y, w, grid=None):
    grid_actual = same_grid(y, w)
    if grid is not None and grid != grid_actual:
        raise GridMismatch(f"fields live on n={grid_actual.n}, expected n={grid.n}")
    h = grid_actual.h
    yv, wv = y.values, w.values

    def integral(values):
        return float(integrate.trapezoid(values, dx=h))

    y_x = _derivative(yv, h)
    y_xx = _derivative(y_x, h)
    w_x = _derivative(wv, h)
    kv_flux_x = _derivative(y_x**2 * w_x, h)

    return IdentityReport(
        n=grid_actual.n,
        r_a=integral(2.0 * wv * w_x),
        r_b=integral(y_xx * wv + w_x * y_x),
        r_c=integral(3.0 * y_x**2 * y_xx * wv + y_x**3 * w_x),
        r_d=integral(wv * kv_flux_x) + integral(y_x**2 * w_x**2),
        r_e=integral(y_x**2) + integral(wv**2) + 2.0 * integral(yv * w_x),
        r_f=integral(yv * y_xx) + integral(y_x**2),
        r_g=integral(3.0 * yv * y_x**2 * y_xx) + integral(y_x**4),
        r_h=integral(yv * kv_flux_x) + integral(y_x**3 * w_x),
    )


def poincare_slack(y):
    """(1/pi^2) int y_x^2 - int y^2; nonnegative up to O(h^2) for Dirichlet y"""
    h = y.grid.h
    y_x = _derivative(y.values, h)
    return float(integrate.trapezoid(y_x**2, dx=h) / np.pi**2
                 - integrate.trapezoid(y.values**2, dx=h))


def validate_levels(levels):
    levels = [int(n) for n in levels]
    if len(levels) < 3:
        raise InvalidLevels(f"need at least 3 refinement levels, got {levels}")
    for coarse, fine in zip(levels[:-1], levels[1:]):
        if fine != 2 * coarse:
            raise InvalidLevels(f"levels must double, got {coarse} -> {fine}")
    return levels


def identity_refinement(pair='polybump', levels=(64, 128, 256),
                        min_ratio=3.5, slack_floor=-1e-8, verbose=False):
    """
    Residuals of a named (y, w) pair on each level, the observed reduction
    factor per halving of h, and a verdict. A residual counts as converged
    when it shrinks by at least min_ratio per halving or sits below the
    round-off floor.
    """
    if pair not in IDENTITY_PAIRS:
        raise ValueError(f"unknown identity pair '{pair}', choose from {sorted(IDENTITY_PAIRS)}")
    levels = validate_levels(levels)
    y_func, w_func = IDENTITY_PAIRS[pair]

    if verbose:
        print(f"1. Evaluating residuals for pair '{pair}' on n = {levels}...")
    start = time.time()
    reports = []
    for n in levels:
        grid = GridSpec(n)
        reports.append(lemma_residuals(sample(y_func, grid), sample(w_func, grid), grid))
    table = pd.DataFrame([r.to_dict() for r in reports])

    failures = []
    ratio_rows = []
    for coarse, fine in zip(reports[:-1], reports[1:]):
        row = {'n_coarse': coarse.n, 'n_fine': fine.n}
        for name in IDENTITY_NAMES:
            r_coarse, r_fine = abs(getattr(coarse, name)), abs(getattr(fine, name))
            ratio = r_coarse / r_fine if r_fine > 0 else np.inf
            row[name] = ratio
            if r_fine >= ROUND_OFF_FLOOR and ratio < min_ratio:
                failures.append(f"{name}: ratio {ratio:.3f} from n={coarse.n} to n={fine.n}")
        ratio_rows.append(row)
    for report in reports:
        if report.r_e < slack_floor:
            failures.append(f"r_e: slack {report.r_e:.3e} < {slack_floor:g} at n={report.n}")

    if verbose:
        print(f"2. Residual table:\n{table.to_string(index=False)}")
        print(f"   Finished in {time.time() - start:.2f} s")
        for failure in failures:
            print(f"   FAILED {failure}")

    return RefinementReport(pair=pair, table=table, ratios=pd.DataFrame(ratio_rows),
                            verdict='FAIL' if failures else 'PASS', failures=failures)
