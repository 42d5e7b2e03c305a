"""
Command-line front end

    python run_scenarios.py decay --config ../../configs/reference_decay.ini --out ../../results/decay

Exit codes: 0 every verdict PASS, 1 some verdict FAIL, 2 error
"""

import os
import sys
import time
import traceback

CLI_DIR = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, CLI_DIR)
sys.path.insert(0, os.path.join(CLI_DIR, '..', 'simulation'))
sys.path.insert(0, os.path.join(CLI_DIR, '..', 'analysis'))

from batch_speed_sweep import sweep
from bibo_analysis import bibo_experiment
from convergence_study import convergence_study
from energy_analysis import (check_decay_bound, check_dissipation,
                             check_monotone, check_sandwich, energy_series)
from integrator import run
from lemma_identities import identity_refinement
from open_problems import control_experiment, undamped_experiment
from plot_results import plot_convergence, plot_energy_decay, plot_sweep
from scenario_config import parse_config
from string_errors import StringModelError
from string_model import bound_constants, decay_rate, initial_V
from write_outputs import RunManifest, write_outputs

ARTIFACT_VERSION = '1.0.0'

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


def exit_code(verdicts):
    """Total map from a verdict dictionary to {0, 1, 2}"""
    values = set(verdicts.values())
    if 'ERROR' in values:
        return EXIT_ERROR
    if 'FAIL' in values:
        return EXIT_FAIL
    return EXIT_PASS


# One function per command; each returns (reports, series, lam, tables, figures, verdicts)

def _simulate(request):
    config = request.config
    traj = run(config, verbose=True)
    series = energy_series(traj)
    constants = bound_constants(config.params)
    # lam is 0 outside the decay hypotheses
    lam = constants.lam or None
    report = {
        'n_samples': len(series),
        't_end': config.t_end,
        'E_initial': series[0].E, 'E_final': series[-1].E,
        'V_initial': series[0].V, 'V_final': series[-1].V,
        'sup_y_max': max(s.sup_y for s in series),
        'K': constants.K, 'v_c': constants.v_c, 'lambda_bound': lam,
        'verdict': 'PASS',
    }
    return {'simulate': report}, series, lam, {}, [], {'simulate': 'PASS'}


def _decay(request):
    config = request.config
    tol = request.analysis['tol']
    decay_rate(config.params)
    initial_V(config.f, config.g, config.params, config.grid)

    traj = run(config, verbose=True)
    series = energy_series(traj)
    decay = check_decay_bound(series, config.params, tol=tol)
    sandwich = check_sandwich(series, config.params)
    dissipation = check_dissipation(series, config.params)
    monotone = check_monotone(series, 'V', request.analysis['monotone_tol'])

    reports = {'decay': {**decay.to_dict(),
                         'sandwich': sandwich.to_dict(),
                         'dissipation': dissipation.to_dict(),
                         'monotone_V': monotone.to_dict()}}
    verdicts = {
        'decay_bound': decay.verdict,
        'decay_rate': 'PASS' if decay.rate_dominates else 'FAIL',
        'sandwich': sandwich.verdict,
        'dissipation': dissipation.verdict,
    }
    figures = []
    if request.plot:
        figures.append(plot_energy_decay(series, config.params,
                                         os.path.join(request.out_dir, 'energy_decay.png')))
    return reports, series, decay.lambda_bound, {}, figures, verdicts


def _bibo(request):
    report, traj = bibo_experiment(request.config, verbose=True, return_trajectory=True)
    series = energy_series(traj)
    return {'bibo': report.to_dict()}, series, None, {}, [], {'bibo': report.verdict}


def _identities(request):
    levels = request.analysis.get('levels')
    if levels is None:
        n = request.config.grid.n
        levels = [n // 2, n, 2 * n]
    report = identity_refinement(request.analysis['profile'], levels, verbose=True)
    return ({'identities': report.to_dict()}, None, None,
            {'identity_residuals': report.table, 'identity_ratios': report.ratios},
            [], {'identities': report.verdict})


def _undamped(request):
    report, traj = undamped_experiment(request.config, tol=request.analysis['monotone_tol'],
                                       verbose=True, return_trajectory=True)
    series = energy_series(traj)
    return {'undamped': report.to_dict()}, series, None, {}, [], {'undamped': report.verdict}


def _control(request):
    report = control_experiment(request.config, request.analysis['gains'])
    return ({'control': report.to_dict()}, None, None, {'control_gains': report.table},
            [], {'control': report.verdict})


def _sweep(request):
    table = sweep(request.config, request.analysis['v_values'], tol=request.analysis['tol'],
                  n_workers=request.analysis['workers'])
    verdicts = {f"v={row.v:g}": row.verdict for row in table.itertuples()}
    figures = []
    if request.plot and len(table):
        figures.append(plot_sweep(table, os.path.join(request.out_dir, 'sweep.png')))
    report = {'rows': table.to_dict(orient='records')}
    return {'sweep': report}, None, None, {'sweep': table}, figures, verdicts


def _converge(request):
    levels = request.analysis.get('levels') or [64, 128, 256]
    report = convergence_study(request.config, levels, manufactured=request.config.mms,
                               n_workers=request.analysis['workers'], verbose=True)
    figures = []
    if request.plot:
        figures.append(plot_convergence(report, os.path.join(request.out_dir, 'convergence.png')))
    return ({'convergence': report.to_dict()}, None, None, {'convergence': report.to_frame()},
            figures, {'convergence': report.verdict})


COMMAND_HANDLERS = {
    'simulate': _simulate,
    'decay': _decay,
    'bibo': _bibo,
    'identities': _identities,
    'undamped': _undamped,
    'control': _control,
    'sweep': _sweep,
    'converge': _converge,
}


def dispatch(request):
    """Run one command and write its outputs; returns (exit code, written files)"""
    start = time.time()
    os.makedirs(request.out_dir, exist_ok=True)
    print(f"{request.command.upper()}: output directory {request.out_dir}")

    reports, series, lam, tables, figures, verdicts = COMMAND_HANDLERS[request.command](request)

    manifest = RunManifest(command=request.command, config=request.sections,
                           artifact_version=ARTIFACT_VERSION,
                           wall_clock_seconds=time.time() - start,
                           verdicts=verdicts, argv=request.argv)
    written = write_outputs(reports, series, manifest, request.out_dir, lam=lam,
                            tables=tables, figures=figures)
    code = exit_code(verdicts)

    print("\nVerdicts:")
    for name, verdict in verdicts.items():
        print(f"   {name}: {verdict}")
    print(f"Wrote {len(written)} files to {request.out_dir} (exit code {code})")
    return code, written


def main(argv=None):
    try:
        request = parse_config(argv)
        code, _ = dispatch(request)
        return code
    except SystemExit as e:
        return EXIT_ERROR if e.code not in (0, None) else EXIT_PASS
    except StringModelError as e:
        print(f"ERROR ({type(e).__name__}): {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        print(f"ERROR ({type(e).__name__}): {e}", file=sys.stderr)
        traceback.print_exc()
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
