import json
import math
import os

import numpy as np
import pandas as pd
import pytest

from integrator import EnergySample
from write_outputs import (ENERGY_COLUMNS, SCHEMA_VERSION, RunManifest, _jsonable,
                           energy_frame, write_outputs, write_report)


def _manifest(verdicts=None):
    return RunManifest(command='decay', config={'params': {'v': 0.3, 'delta': 0.2}},
                       artifact_version='1.0.0', wall_clock_seconds=1.5,
                       verdicts=verdicts or {'decay_bound': 'PASS'}, argv=['decay'])


def _series():
    return [EnergySample(t, np.exp(-t), 1.2 * np.exp(-t), 0.2) for t in (0.0, 0.5, 1.0)]


def test_energy_frame_with_and_without_bound():
    frame = energy_frame(_series(), lam=0.5)
    assert list(frame.columns) == ENERGY_COLUMNS
    assert frame['V_bound'].iloc[0] == pytest.approx(1.2)
    assert frame['V_bound'].iloc[2] == pytest.approx(1.2 * math.exp(-0.5))
    assert energy_frame(_series())['V_bound'].isna().all()


def test_jsonable_handles_numpy_and_nan():
    out = _jsonable({'a': np.float64(np.nan), 'b': np.int64(3), 'c': (np.bool_(True), 1.5),
                     'd': float('inf')})
    assert out == {'a': None, 'b': 3, 'c': [True, 1.5], 'd': None}


def test_report_carries_schema_version(tmp_path):
    path = write_report('bibo', {'verdict': 'PASS', 'bound': 0.22}, str(tmp_path))
    payload = json.loads(open(path).read())
    assert payload['schema_version'] == SCHEMA_VERSION
    assert os.path.basename(path) == 'bibo_report.json'


def test_full_output_set(tmp_path):
    out_dir = str(tmp_path / 'decay')
    table = pd.DataFrame({'v': [0.0, 0.7], 'verdict': ['PASS', 'HypothesisViolated']})
    written = write_outputs({'decay': {'verdict': 'PASS', 'lambda_bound': 0.25}}, _series(),
                            _manifest(), out_dir, lam=0.25, tables={'sweep': table})
    names = [os.path.basename(p) for p in written]
    assert names == ['energy.csv', 'decay_report.json', 'sweep.csv', 'run_log.txt',
                     'manifest.json']

    energy = pd.read_csv(os.path.join(out_dir, 'energy.csv'))
    assert list(energy.columns) == ENERGY_COLUMNS
    assert len(energy) == 3
    with open(os.path.join(out_dir, 'energy.csv'), 'rb') as f:
        assert b'\r\n' not in f.read()

    manifest = json.loads(open(os.path.join(out_dir, 'manifest.json')).read())
    assert manifest['outputs'] == names
    assert manifest['verdicts'] == {'decay_bound': 'PASS'}
    assert manifest['config']['params']['v'] == 0.3

    log = open(os.path.join(out_dir, 'run_log.txt')).read()
    assert 'DECAY RUN LOG' in log
    assert 'Successful: 1' in log


def test_failed_verdicts_listed_in_log(tmp_path):
    write_outputs({'decay': {'verdict': 'FAIL'}}, None,
                  _manifest({'decay_bound': 'FAIL', 'sandwich': 'PASS'}), str(tmp_path))
    log = open(os.path.join(str(tmp_path), 'run_log.txt')).read()
    assert 'FAILED:\ndecay_bound: FAIL' in log


def test_manifest_only_when_nothing_else(tmp_path):
    written = write_outputs({}, None, _manifest(), str(tmp_path))
    assert [os.path.basename(p) for p in written] == ['manifest.json']
    assert not os.path.exists(os.path.join(str(tmp_path), 'run_log.txt'))


def test_energy_frame_of_empty_series():
    frame = energy_frame([], lam=0.5)
    assert list(frame.columns) == ENERGY_COLUMNS
    assert len(frame) == 0
