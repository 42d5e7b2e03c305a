"""
Static figures for decay runs, speed sweeps and convergence studies
"""

import os
import sys

import numpy as np
import matplotlib
matplotlib.use('Agg')  # Non-interactive backend
import matplotlib.pyplot as plt
import seaborn as sns

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'simulation'))

from string_errors import HypothesisViolated
from string_model import critical_speed, decay_rate

sns.set_style("whitegrid")


def _save(fig_file):
    os.makedirs(os.path.dirname(os.path.abspath(fig_file)), exist_ok=True)
    plt.savefig(fig_file, dpi=300, bbox_inches='tight')
    plt.close()
    print(f"Saved figure to: {fig_file}")
    return fig_file


def plot_energy_decay(series, params, fig_file):
    """E(t), V(t) and, when it applies, the bound V(0)exp(-lambda t) on a log axis"""
    t = np.array([s.t for s in series])
    V = np.array([s.V for s in series])
    E = np.array([s.E for s in series])

    fig, (ax_energy, ax_disp) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    ax_energy.semilogy(t, V, label='V(t)', linewidth=1.5)
    ax_energy.semilogy(t, E, label='E(t)', linewidth=1.0, alpha=0.8)
    try:
        lam = decay_rate(params)
        ax_energy.semilogy(t, V[0] * np.exp(-lam * (t - t[0])), 'k--',
                           label=f'V(0) exp(-{lam:.4f} t)')
    except HypothesisViolated:
        pass
    ax_energy.set_ylabel('Functional value', fontsize=12)
    ax_energy.legend()
    ax_energy.set_title(f'Energy decay: v={params.v}, delta={params.delta}, '
                        f'eta={params.eta}, b={params.b}', fontsize=13)

    ax_disp.plot(t, [s.sup_y for s in series], color='tab:red')
    ax_disp.set_xlabel('t', fontsize=12)
    ax_disp.set_ylabel('max |y|', fontsize=12)
    return _save(fig_file)


def plot_sweep(table, fig_file):
    """Guaranteed and fitted decay rates against the axial speed"""
    plt.figure(figsize=(8, 5))
    measured = table.dropna(subset=['lambda_measured'])
    plt.plot(measured['v'], measured['lambda_measured'].astype(float), 'o-',
             label='fitted rate')
    bounded = table.dropna(subset=['lambda_bound'])
    plt.plot(bounded['v'], bounded['lambda_bound'].astype(float), 's--',
             label='guaranteed rate')
    plt.axvline(critical_speed(), color='gray', linestyle=':', label='critical speed')
    plt.xlabel('axial speed v', fontsize=12)
    plt.ylabel('decay rate of V', fontsize=12)
    plt.legend()
    return _save(fig_file)


def plot_convergence(report, fig_file):
    plt.figure(figsize=(6, 5))
    h = 1.0 / np.array(report.levels, dtype=float)
    plt.loglog(h, report.errors, 'o-', label='L2 error')
    plt.loglog(h, report.errors[0] * (h / h[0])**2, 'k--', label='slope 2')
    plt.xlabel('h', fontsize=12)
    plt.ylabel('L2 error at t_end', fontsize=12)
    plt.legend()
    return _save(fig_file)
