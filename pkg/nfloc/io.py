#!/usr/bin/env python
# file io.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
""" IO nfloc sub-package

Scenario configuration files and result files.

Configuration files are flat ``key = value`` text files, one pair per line,
``#`` starting a comment. Lists are comma separated, numbers accept ``pi``
expressions and users are written ``d:theta``::

    # two users at 8 m
    users = 8:pi/3, 8:pi/4
    n_t = 16
    t_max = 5e-9

Results are CSV files with a header line, floats written with their shortest
round-trip representation and ``inf`` for unbounded values.
"""

import ast
import csv
import json
import logging
import operator
import subprocess
from dataclasses import dataclass, fields, replace
from pathlib import Path
import numpy as np

from . import __version__
from .analog_design import DelaySearchConfig
from .channel import subcarrier_frequencies
from .errors import ParseError, ValidationError
from .estimator import SearchGrid
from .experiments import RunConfig, parse_scheme
from .geometry import ArrayGeometry
from .helpers import Scenario, DesignConfig
from .hybrid_array import CombinerLayout
from .joint import JointConfig

log = logging.getLogger(__name__)

_OPERATORS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
              ast.Div: operator.truediv, ast.Pow: operator.pow,
              ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {'pi': np.pi, 'inf': np.inf}

def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _OPERATORS:
        return _OPERATORS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPERATORS:
        return _OPERATORS[type(node.op)](_eval_node(node.operand))
    raise ValueError('unsupported expression')

def parse_number(text):
    """Evaluate a numeric expression such as ``5e-9``, ``pi/3`` or ``-inf``."""
    try:
        return float(_eval_node(ast.parse(text.strip(), mode='eval')))
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError) as e:
        raise ValueError('invalid number \'{}\''.format(text.strip())) from e

def _split(text):
    return [v.strip() for v in text.split(',') if v.strip()]

def _to_float(text):
    return parse_number(text)

def _to_int(text):
    try:
        return int(text.strip())
    except ValueError:
        pass
    value = parse_number(text)
    if not value.is_integer():
        raise ValueError('expected an integer, got \'{}\''.format(text.strip()))
    return int(value)

def _to_bool(text):
    value = text.strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError('expected a boolean, got \'{}\''.format(text.strip()))

def _to_floats(text):
    return tuple(parse_number(v) for v in _split(text))

def _to_ints(text):
    return tuple(_to_int(v) for v in _split(text))

def _to_users(text):
    users = []
    for item in _split(text):
        d, sep, theta = item.partition(':')
        if not sep:
            raise ValueError('expected d:theta, got \'{}\''.format(item))
        users.append((parse_number(d), parse_number(theta)))
    return tuple(users)

def _to_schemes(text):
    labels = _split(text)
    for label in labels:
        parse_scheme(label)
    return tuple(labels)

def _to_polar(text):
    users = _to_users(text)
    if len(users) != 1:
        raise ValueError('expected a single d:theta position')
    return users[0]

def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if np.isnan(value):
            return 'nan'
        if np.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return repr(value)
    return str(value)

def _fmt_value(value, name=None):
    if name == 'focal':
        return '{}:{}'.format(_fmt(value[0]), _fmt(value[1]))
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ', '.join('{}:{}'.format(_fmt(d), _fmt(t)) for d, t in value)
        return ', '.join(_fmt(v) for v in value)
    return _fmt(value)

@dataclass(frozen=True)
class ScenarioConfig:
    """Resolved scenario and experiment parameters.

    Defaults describe a 300 GHz carrier with 30 GHz bandwidth, 12
    subcarriers, 256 pilot samples and a 256 element half-wavelength array
    with 8 RF chains of 16 TTDs (5 ns range), two users at 8 m.
    """
    f_c: float = 300e9
    bandwidth: float = 30e9
    m: int = 12
    l: int = 256
    n: int = 256
    n_d: int = 8
    n_t: int = 16
    spacing: float = 5e-4
    t_max: float = 5e-9
    users: tuple = ((8., np.pi / 3), (8., np.pi / 4))
    snr_db: tuple = (-20., -15., -10., -5., 0., 5., 10.)
    schemes: tuple = ('random', 'ps_only', 'optimal', 'alternating')
    grid_d: tuple = (1., 20.)
    grid_theta: tuple = (0.1 * np.pi, 0.9 * np.pi)
    grid_counts: tuple = (64, 512)
    grid_levels: int = 3
    grid_refine: tuple = (17, 17)
    grid_shrink: float = .15
    grid_polish: bool = True
    ap_sweeps: int = 5
    joint_iterations: int = 10
    init_sweeps: int = 5
    joint_ap_sweeps: int = 1
    design_iters: int = 10
    design_tol: float = 1e-6
    phase_iters: int = 200
    phase_tol: float = 1e-8
    delay_grid: int = 64
    delay_sweeps: int = 10
    exact_trace: bool = False
    trials: int = 100
    chunk_size: int = 10
    seed: int = 0
    heatmap_snr_db: float = -10.
    heatmap_resolution: float = .1
    heatmap_area: tuple = (-10., 0., 10., 20.)
    focal: tuple = (8., np.pi / 3)
    convergence_snr_db: float = -5.
    convergence_priors: tuple = (np.inf, 0., .5, 1.)
    nt_list: tuple = (2, 4, 8, 16, 32)
    nt_snr_db: float = -5.
    m_list: tuple = (1, 2, 4, 8, 12, 16, 24)
    m_snr_db: tuple = (-5., -10.)
    trackmap_snr_db: float = -5.

    def validate(self):
        """Check the invariants of the configuration.

        Raises
        ------
        ValidationError
            Naming the first violated invariant.
        """
        checks = [
            (self.n % (self.n_d * self.n_t) == 0 if self.n_d > 0 and self.n_t > 0 else False,
             'divisibility: n = {} must be divisible by n_d * n_t = {} * {}'.format(self.n, self.n_d, self.n_t)),
            (self.bandwidth >= 0 and self.f_c > self.bandwidth / 2,
             'band: f_c = {} must exceed bandwidth / 2 = {}'.format(self.f_c, self.bandwidth / 2)),
            (self.m >= 1 and (self.m == 1 or self.bandwidth > 0),
             'subcarriers: m = {} with bandwidth {}'.format(self.m, self.bandwidth)),
            (self.l >= 1, 'samples: l = {} must be positive'.format(self.l)),
            (self.spacing > 0, 'spacing: {} must be positive'.format(self.spacing)),
            (self.t_max >= 0, 't_max: {} must be nonnegative'.format(self.t_max)),
            (len(self.users) >= 1, 'users: at least one user is required'),
            (all(d > 0 and 0 < t < np.pi for d, t in self.users),
             'users: positions must satisfy d > 0 and 0 < theta < pi, got {}'.format(self.users)),
            (self.focal[0] > 0 and 0 < self.focal[1] < np.pi, 'focal: invalid position {}'.format(self.focal)),
            (self.trials >= 1, 'trials: {} must be positive'.format(self.trials)),
            (self.chunk_size >= 1, 'chunk_size: {} must be positive'.format(self.chunk_size)),
            (self.heatmap_resolution > 0, 'heatmap_resolution: must be positive'),
            (len(self.heatmap_area) == 4, 'heatmap_area: expected xmin, ymin, xmax, ymax'),
            (all(p >= 0 for p in self.convergence_priors), 'convergence_priors: must be nonnegative'),
            (self.joint_iterations >= 0 and self.ap_sweeps >= 0, 'iterations: must be nonnegative'),
        ]
        for ok, what in checks:
            if not ok:
                msg = 'Invalid configuration, {}.'.format(what)
                log.error(msg)
                raise ValidationError(msg)
        try:
            self.grid()
            self.delay()
        except ValueError as e:
            raise ValidationError('Invalid configuration, {}'.format(e)) from e
        return self

    def band(self):
        return subcarrier_frequencies(self.f_c, self.bandwidth, self.m)

    def geometry(self):
        return ArrayGeometry(self.n, self.spacing)

    def layout(self):
        return CombinerLayout.from_antennas(self.n, self.n_d, self.n_t)

    def user_positions(self):
        """Polar positions of the users, shape (K, 2)."""
        return np.array(self.users, dtype=float)

    def grid(self):
        return SearchGrid(tuple(self.grid_d), tuple(self.grid_theta), tuple(self.grid_counts),
                          self.grid_levels, self.grid_shrink, tuple(self.grid_refine), self.grid_polish)

    def delay(self):
        return DelaySearchConfig(self.delay_grid, self.delay_sweeps)

    def design(self):
        return DesignConfig(self.design_iters, self.design_tol, self.phase_iters, self.phase_tol,
                            self.delay(), self.exact_trace)

    def joint(self):
        return JointConfig(self.joint_iterations, self.init_sweeps, self.joint_ap_sweeps, self.design())

    def schemes_list(self):
        return [parse_scheme(s) for s in self.schemes]

    def scenario(self, snr_db=None):
        """Scenario of the configuration at `snr_db` (first SNR if None)."""
        snr_db = self.snr_db[0] if snr_db is None else snr_db
        return Scenario(self.band(), self.geometry(), self.layout(), self.t_max,
                        self.user_positions(), float(snr_db), self.l, self.grid())

    def run_config(self, jobs=1, progress=False):
        return RunConfig(self.trials, self.seed, jobs, self.chunk_size, self.ap_sweeps, self.joint(), progress)

_CONVERTERS = {
    float: _to_float,
    int: _to_int,
    bool: _to_bool,
}

_TUPLE_CONVERTERS = {
    'users': _to_users,
    'schemes': _to_schemes,
    'focal': _to_polar,
    'grid_counts': _to_ints,
    'grid_refine': _to_ints,
    'nt_list': _to_ints,
    'm_list': _to_ints,
}

def _converter(f):
    if f.name in _TUPLE_CONVERTERS:
        return _TUPLE_CONVERTERS[f.name]
    if f.type in (tuple, 'tuple'):
        return _to_floats
    return _CONVERTERS[{'float': float, 'int': int, 'bool': bool}.get(f.type, f.type)]

def _parse_error(msg, lineno):
    error = ParseError(msg, lineno)
    log.error(str(error))
    return error

def parse_config_text(text):
    """Parse the content of a configuration file.

    Parameters
    ----------
    text : str
        The ``key = value`` lines.

    Returns
    -------
    config : ScenarioConfig
        Validated configuration, missing keys take the default values.

    Raises
    ------
    ParseError
        On a malformed line, an unknown key or an invalid value.
    ValidationError
        If the configuration violates an invariant.
    """
    known = {f.name: f for f in fields(ScenarioConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key = key.strip()
        if not sep:
            raise _parse_error('expected \'key = value\', got \'{}\''.format(line), lineno)
        if key not in known:
            raise _parse_error('unknown key \'{}\''.format(key), lineno)
        if key in values:
            raise _parse_error('duplicate key \'{}\''.format(key), lineno)
        try:
            values[key] = _converter(known[key])(value)
        except ValueError as e:
            raise _parse_error('invalid value for \'{}\': {}'.format(key, e), lineno) from e

    return ScenarioConfig(**values).validate()

def parse_config(path):
    """Load a configuration file, see :func:`parse_config_text`."""
    path = _get_verify_path(path)
    log.info('Loading configuration \'{}\'...'.format(path))
    return parse_config_text(path.read_text())

def dump_config(config):
    """Render a configuration in the ``key = value`` format."""
    lines = ['{} = {}'.format(f.name, _fmt_value(getattr(config, f.name), f.name)) for f in fields(config)]
    return '\n'.join(lines) + '\n'

def _get_verify_path(fname):
    fname = Path(fname)
    if not fname.is_file():
        msg = 'No such file: \'{}\''.format(fname)
        log.error(msg)
        raise IOError(msg)
    return fname

def write_csv(fname, columns, rows):
    """Write rows in a CSV file with a header line.

    Parameters
    ----------
    fname : str, Path
        Output file.
    columns : sequence of str
        Column names.
    rows : iterable of sequence
        Values, formatted with their shortest round-trip representation.

    Returns
    -------
    count : int
        Number of data rows written.
    """
    fname = Path(fname)
    count = 0
    with fname.open('w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                msg = 'Row of {} values for {} columns.'.format(len(row), len(columns))
                log.error(msg)
                raise ValueError(msg)
            writer.writerow([_fmt(v) for v in row])
            count += 1
    log.info('Wrote {} rows in \'{}\'.'.format(count, fname))
    return count

def read_csv(fname):
    """Read a CSV file written by :func:`write_csv`, values as strings."""
    with _get_verify_path(fname).open(newline='') as f:
        reader = csv.reader(f)
        header = next(reader)
        return header, [row for row in reader]

def dump_result(fname, result):
    """Write an experiment result (columns and rows) as CSV."""
    return write_csv(fname, result.columns, result.rows)

def dump_trajectory(fname, result):
    """Write an estimation trajectory as CSV."""
    return write_csv(fname, ('iteration', 'user', 'd_est', 'theta_est', 'x_est', 'y_est'), result.to_rows())

def describe_version():
    """Package version, with the git description when run from a checkout."""
    try:
        out = subprocess.run(['git', 'describe', '--always', '--dirty', '--tags'], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).parent)
        if out.returncode == 0 and out.stdout.strip():
            return '{}+{}'.format(__version__, out.stdout.strip())
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__

def write_manifest(fname, config, experiment, seed, outputs=()):
    """Write the run manifest (JSON) of an experiment.

    The resolved configuration is stored in the ``key = value`` format, it
    reproduces the run when fed back with the same seed.
    """
    manifest = {
        'experiment': experiment,
        'seed': int(seed),
        'version': describe_version(),
        'outputs': [str(o) for o in outputs],
        'config': dump_config(replace(config, seed=int(seed))),
    }
    Path(fname).write_text(json.dumps(manifest, indent=1) + '\n')
    log.info('Wrote manifest \'{}\'.'.format(fname))
    return manifest
