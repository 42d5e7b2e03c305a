"""
Scenario configuration: INI or JSON files (or a previous run's manifest.json)
plus command-line overrides, turned into a validated SimConfig

Sections (INI) / nested objects (JSON):
    params, grid, run, initial.f, initial.g, forcing, forcing.profile,
    boundary, mms, analysis
See docs/config_schema.md for every key.
"""

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass, field

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'simulation'))

from discretization import GridSpec
from integrator import SCHEMES, BoundaryModel, SimConfig
from string_errors import ConfigError, IncompatibleProfile, OutOfRange
from string_model import (ForcingSpec, ManufacturedSolution, ProfileSpec,
                          StringParams)

COMMANDS = ('simulate', 'decay', 'bibo', 'identities', 'undamped', 'control',
            'sweep', 'converge')


def _float_list(value):
    if isinstance(value, str):
        return [float(item) for item in value.replace(',', ' ').split()]
    return [float(item) for item in value]


def _int_list(value):
    return [int(item) for item in _float_list(value)]


def _modes(value):
    """'0.2:1, 0.05:3' or [[0.2, 1], [0.05, 3]]"""
    if isinstance(value, str):
        pairs = [item.split(':') for item in value.replace(',', ' ').split()]
    else:
        pairs = value
    return [[float(a), int(k)] for a, k in pairs]


PROFILE_KEYS = {'kind': str, 'amplitude': float, 'mode': int, 'modes': _modes,
                'center': float, 'width': float, 'power': float, 'values': _float_list}

SCHEMA = {
    'params': {'v': float, 'b': float, 'delta': float, 'eta': float},
    'grid': {'n': int},
    'run': {'scheme': str, 't_end': float, 'cfl_safety': float,
            'output_stride': int, 'advection': str},
    'initial.f': PROFILE_KEYS,
    'initial.g': PROFILE_KEYS,
    'forcing': {'kind': str, 'amplitude': float, 'frequency': float,
                'seed': int, 'hold': float},
    'forcing.profile': PROFILE_KEYS,
    'boundary': {'kind': str, 'k_v': float, 'tension_model': str},
    'mms': {'amplitude': float, 'mode': int, 'time_kind': str, 'rate': float},
    'analysis': {'tol': float, 'monotone_tol': float, 'gains': _float_list,
                 'levels': _int_list, 'v_values': _float_list, 'profile': str,
                 'workers': int},
}

DEFAULTS = {
    'params': {'v': 0.0, 'b': 1.0, 'delta': 0.0, 'eta': 0.0},
    'grid': {'n': 256},
    'run': {'scheme': 'imex_cn', 't_end': 10.0, 'cfl_safety': 0.5,
            'output_stride': 100, 'advection': 'central'},
    'analysis': {'tol': 0.02, 'monotone_tol': 1e-6, 'gains': [0.5, 1.0, 2.0],
                 'v_values': [0.0, 0.2, 0.4, 0.6],
                 'profile': 'polybump', 'workers': 1},
}

# named initial displacements selectable with --profile
NAMED_PROFILES = {
    'sine': {'kind': 'sine_modes', 'modes': [[0.2, 1]]},
    'bump': {'kind': 'bump', 'center': 0.5, 'width': 0.5, 'amplitude': 0.2},
    'polybump': {'kind': 'poly_bump', 'amplitude': 0.8, 'power': 1.0},
}


@dataclass
class ScenarioRequest:
    command: str
    config: SimConfig
    analysis: dict
    sections: dict
    out_dir: str = 'results'
    plot: bool = False
    source: str = None
    argv: list = field(default_factory=list)


def build_parser():
    parser = argparse.ArgumentParser(
        prog='run_scenarios.py',
        description='Simulate and verify the damped nonlinear moving string')
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--config', help='INI/JSON scenario file or a manifest.json')
    parser.add_argument('--out', default='results', help='output directory')
    parser.add_argument('--n', type=int)
    parser.add_argument('--scheme', choices=SCHEMES)
    parser.add_argument('--t-end', type=float, dest='t_end')
    parser.add_argument('--cfl', type=float, dest='cfl_safety')
    parser.add_argument('--stride', type=int, dest='output_stride')
    parser.add_argument('--v', type=float)
    parser.add_argument('--delta', type=float)
    parser.add_argument('--eta', type=float)
    parser.add_argument('--b', type=float)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--tol', type=float)
    parser.add_argument('--profile')
    parser.add_argument('--workers', type=int)
    parser.add_argument('--gains')
    parser.add_argument('--levels')
    parser.add_argument('--v-values', dest='v_values')
    parser.add_argument('--kv', type=float)
    parser.add_argument('--tension', choices=('linear', 'nonlinear'))
    parser.add_argument('--plot', action='store_true')
    return parser


# Reading files

def _flatten(tree, prefix=''):
    sections = {}
    for key, value in tree.items():
        name = f"{prefix}.{key}" if prefix else key
        if not isinstance(value, dict):
            raise ConfigError(name, "expected a section (object)")
        scalars = {k: v for k, v in value.items() if not isinstance(v, dict)}
        nested = {k: v for k, v in value.items() if isinstance(v, dict)}
        if scalars or not nested:
            sections.setdefault(name, {}).update(scalars)
        sections.update(_flatten(nested, name))
    return sections


def load_config_file(path):
    """Raw sections {section: {key: value}} from an INI, JSON or manifest file"""
    if not os.path.exists(path):
        raise ConfigError('config', f"file not found: {path}")
    if path.endswith('.json'):
        with open(path, 'r', encoding='utf-8') as f:
            try:
                tree = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError('config', f"invalid JSON: {e}") from e
        if 'artifact_version' in tree and 'config' in tree:
            tree = tree['config']
        return _flatten(tree)

    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding='utf-8')
    except configparser.Error as e:
        raise ConfigError('config', f"invalid INI file: {e}") from e
    return {section: dict(parser[section]) for section in parser.sections()}


def _typed_sections(raw):
    typed = {}
    for section, values in raw.items():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        typed[section] = {}
        for key, value in values.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            if value is None:
                continue
            try:
                typed[section][key] = SCHEMA[section][key](value)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"{section}.{key}", f"cannot parse {value!r}: {e}") from e
    return typed


def _flag_overrides(args):
    overrides = {}

    def put(section, key, value):
        if value is not None:
            overrides.setdefault(section, {})[key] = value

    for key in ('v', 'b', 'delta', 'eta'):
        put('params', key, getattr(args, key))
    put('grid', 'n', args.n)
    for key in ('scheme', 't_end', 'cfl_safety', 'output_stride'):
        put('run', key, getattr(args, key))
    put('forcing', 'seed', args.seed)
    put('analysis', 'tol', args.tol)
    put('analysis', 'workers', args.workers)
    put('analysis', 'profile', args.profile)
    put('analysis', 'gains', args.gains)
    put('analysis', 'levels', args.levels)
    put('analysis', 'v_values', args.v_values)
    if args.kv is not None:
        put('boundary', 'kind', 'velocity_feedback')
        put('boundary', 'k_v', args.kv)
    put('boundary', 'tension_model', args.tension)
    return overrides


def merge_sections(*layers):
    merged = {}
    for layer in layers:
        for section, values in layer.items():
            merged.setdefault(section, {}).update(values)
    return merged


# Building the SimConfig

def _profile(section, values):
    values = dict(values)
    kind = values.pop('kind', 'zero')
    try:
        if kind == 'zero':
            return ProfileSpec.zero()
        if kind == 'sine_modes':
            if 'modes' in values:
                return ProfileSpec.sine_modes(values['modes'])
            return ProfileSpec.sine(values.get('amplitude', 0.0), values.get('mode', 1))
        if kind == 'bump':
            return ProfileSpec.bump(values.get('center', 0.5), values.get('width', 0.5),
                                   values.get('amplitude', 0.0))
        if kind == 'poly_bump':
            return ProfileSpec.poly_bump(values.get('amplitude', 0.0), values.get('power', 1.0))
        if kind == 'sampled':
            return ProfileSpec.sampled(values.get('values', ()))
    except IncompatibleProfile as e:
        raise ConfigError(section, str(e)) from e
    raise ConfigError(f"{section}.kind", f"unknown profile kind '{kind}'")


def _forcing(sections, output_stride):
    values = sections.get('forcing', {})
    kind = values.get('kind', 'zero')
    amplitude = values.get('amplitude', 0.0)
    frequency = values.get('frequency', 0.0)
    if kind == 'zero':
        return ForcingSpec.zero()
    if kind == 'separable':
        profile = _profile('forcing.profile', sections.get('forcing.profile', {}))
        return ForcingSpec.separable(profile, amplitude, frequency)
    if kind == 'uniform_sinusoid':
        return ForcingSpec.uniform_sinusoid(amplitude, frequency)
    if kind == 'bounded_noise':
        if 'seed' not in values:
            raise ConfigError('forcing.seed', "an explicit seed is required for bounded_noise")
        return ForcingSpec.bounded_noise(amplitude, values['seed'],
                                         values.get('hold', 1.0 / output_stride))
    raise ConfigError('forcing.kind', f"unknown forcing kind '{kind}'")


def _boundary(values):
    kind = values.get('kind', 'fixed_fixed')
    try:
        if kind == 'fixed_fixed':
            return BoundaryModel.fixed_fixed(values.get('tension_model', 'linear'))
        if kind == 'velocity_feedback':
            return BoundaryModel.velocity_feedback(values.get('k_v', 0.0),
                                                   values.get('tension_model', 'linear'))
    except (TypeError, ValueError) as e:
        key = 'boundary.tension_model' if 'tension' in str(e) else 'boundary.k_v'
        raise ConfigError(key, str(e)) from e
    raise ConfigError('boundary.kind', f"unknown boundary kind '{kind}'")


def build_config(sections):
    """SimConfig from typed sections merged over DEFAULTS"""
    sections = merge_sections(DEFAULTS, sections)
    try:
        params = StringParams(**sections['params'])
    except OutOfRange as e:
        raise ConfigError(f"params.{e.key}", str(e)) from e

    try:
        grid = GridSpec(sections['grid']['n'])
    except OutOfRange as e:
        raise ConfigError('grid.n', str(e)) from e

    run_values = sections['run']
    mms = None
    if 'mms' in sections:
        try:
            mms = ManufacturedSolution(**sections['mms'])
        except (TypeError, ValueError) as e:
            raise ConfigError('mms', str(e)) from e

    try:
        return SimConfig(
            params=params,
            grid=grid,
            f=_profile('initial.f', sections.get('initial.f', {})),
            g=_profile('initial.g', sections.get('initial.g', {})),
            forcing=_forcing(sections, run_values['output_stride']),
            scheme=run_values['scheme'],
            t_end=run_values['t_end'],
            cfl_safety=run_values['cfl_safety'],
            output_stride=run_values['output_stride'],
            boundary=_boundary(sections.get('boundary', {})),
            mms=mms,
            advection=run_values['advection'],
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError('run', str(e)) from e


def parse_config(argv=None):
    """
    Parse command-line arguments (and the --config file they name) into a
    ScenarioRequest. Precedence: flags > file > defaults.
    """
    args = build_parser().parse_args(argv)
    file_sections = {}
    if args.config:
        file_sections = _typed_sections(load_config_file(args.config))
    sections = merge_sections(file_sections, _typed_sections(_flag_overrides(args)))

    # only the flag picks a named initial displacement; a manifest's analysis.profile does not
    profile = args.profile
    if profile is not None and args.command != 'identities' and 'initial.f' not in file_sections:
        if profile not in NAMED_PROFILES:
            raise ConfigError('analysis.profile', f"unknown profile '{profile}'")
        sections['initial.f'] = dict(NAMED_PROFILES[profile])

    # --kv alone scans its own gain
    if args.kv is not None and 'gains' not in sections.get('analysis', {}):
        sections.setdefault('analysis', {})['gains'] = [float(args.kv)]

    config = build_config(sections)
    effective = merge_sections(DEFAULTS, sections)
    return ScenarioRequest(command=args.command, config=config,
                           analysis=effective['analysis'], sections=effective,
                           out_dir=args.out, plot=args.plot, source=args.config,
                           argv=list(sys.argv[1:] if argv is None else argv))
