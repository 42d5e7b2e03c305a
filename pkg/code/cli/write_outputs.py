"""
Writers for run artefacts: energy.csv, *_report.json, extra CSV tables,
run_log.txt and manifest.json (always written last)
"""

import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime

import numpy as np
import pandas as pd

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'analysis'))

from energy_analysis import decay_bound_curve, series_to_frame

SCHEMA_VERSION = 1
PASSING = ('PASS', 'EVIDENCE', 'HypothesisViolated')
ENERGY_COLUMNS = ['t', 'E', 'V', 'V_bound', 'sup_y']
CSV_OPTIONS = {'index': False, 'float_format': '%.17g', 'lineterminator': '\n', 'na_rep': ''}


@dataclass
class RunManifest:
    command: str
    config: dict
    artifact_version: str
    wall_clock_seconds: float
    outputs: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    argv: list = field(default_factory=list)
    created: str = field(default_factory=lambda: datetime.now().strftime('%Y-%m-%d %H:%M:%S'))

    def to_dict(self):
        return asdict(self)


def _jsonable(value):
    """Plain JSON types; NaN and infinities become null"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if value is pd.NA:
        return None
    return value


def _write_json(payload, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(_jsonable(payload), f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def energy_frame(series, lam=None):
    """t, E, V, V_bound, sup_y; V_bound = V(0)exp(-lam t) or empty without a bound"""
    frame = series_to_frame(series)
    frame['V_bound'] = decay_bound_curve(series, lam)
    return frame[ENERGY_COLUMNS]


def write_energy_csv(series, path, lam=None):
    energy_frame(series, lam).to_csv(path, **CSV_OPTIONS)
    return path


def write_table_csv(table, path):
    table.to_csv(path, **CSV_OPTIONS)
    return path


def write_report(name, report, out_dir):
    """{name}_report.json with a schema_version field"""
    payload = dict(report)
    payload['schema_version'] = SCHEMA_VERSION
    return _write_json(payload, os.path.join(out_dir, f'{name}_report.json'))


def write_run_log(out_dir, command, manifest, successful, failed):
    """Plain-text run log in the style of the batch logs"""
    path = os.path.join(out_dir, 'run_log.txt')
    params = manifest.config.get('params', {})
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(f"{command.upper()} RUN LOG\n")
        f.write(f"Date: {manifest.created}\n")
        f.write(f"Parameters: {', '.join(f'{k}={v}' for k, v in sorted(params.items()))}\n")
        f.write(f"Total checks: {len(successful) + len(failed)}\n")
        f.write(f"Successful: {len(successful)}\n")
        f.write(f"Failed: {len(failed)}\n")
        f.write(f"Total time: {manifest.wall_clock_seconds:.2f} seconds\n\n")
        f.write("SUCCESSFUL:\n")
        for item in successful:
            f.write(f"{item}\n")
        if failed:
            f.write("\nFAILED:\n")
            for item in failed:
                f.write(f"{item}\n")
    return path


def write_outputs(reports, series, manifest, out_dir, lam=None, tables=None, figures=()):
    """
    Write every artefact of one run into out_dir and return the file list.

    reports : dict name -> report dict (one {name}_report.json each)
    series  : EnergySamples for energy.csv, or None
    tables  : dict file stem -> DataFrame, written as CSV
    figures : paths of figures already saved in out_dir, listed in the manifest
    The manifest goes last so its presence marks a complete output set.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if series is not None:
        written.append(write_energy_csv(series, os.path.join(out_dir, 'energy.csv'), lam))
    for name, report in (reports or {}).items():
        written.append(write_report(name, report, out_dir))
    for stem, table in (tables or {}).items():
        written.append(write_table_csv(table, os.path.join(out_dir, f'{stem}.csv')))
    written.extend(figures)

    if written:
        successful = [f"{name}: {v}" for name, v in manifest.verdicts.items() if v in PASSING]
        failed = [f"{name}: {v}" for name, v in manifest.verdicts.items() if v not in PASSING]
        written.append(write_run_log(out_dir, manifest.command, manifest, successful, failed))

    manifest.outputs = [os.path.basename(p) for p in written] + ['manifest.json']
    _write_json(manifest.to_dict(), os.path.join(out_dir, 'manifest.json'))
    return written + [os.path.join(out_dir, 'manifest.json')]
