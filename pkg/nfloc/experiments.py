#!/usr/bin/env python
# file experiments.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Monte Carlo experiments.

Localization schemes compared over sweeps of SNR, TTD count and subcarrier
count, convergence of the joint localization, track maps and CRB heatmaps.

Trials are independent jobs. The seed of trial `n` of an experiment is
``derive_seed(seed, experiment, n)`` whatever the scheme and the sweep
point, so that all the schemes and sweep points see the same random draws.
The random starting combiner of every design is drawn from
``derive_seed(seed, 'design')``.
"""

import logging
import re
import time
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
import numpy as np
from tqdm.auto import tqdm

from .channel import steering_set, subcarrier_frequencies
from .errors import EmptyTrials
from .estimator import ap_localize, GridSteering, projector, residual_steering, combined_steering
from .fisher import crb_heatmap
from .geometry import polar_to_cartesian, check_polar, ArrayGeometry
from .helpers import Scenario
from .hybrid_array import CombinerLayout, combiner_matrices, narrowband, random_combiner
from .joint import JointConfig, joint_localize, warm_start_with_prior
from .analog_design import (build_design_objective, gram_matrix, init_rcg_state, riemannian_step,
                            optimize_delays, design_objective_value)
from .utils import derive_seed

log = logging.getLogger(__name__)

SCHEMES = ('random', 'ps_only', 'optimal', 'alternating', 'alternating_prior', 'single_carrier', 'narrowband')
NARROWBAND = 300e6

@dataclass(frozen=True)
class Scheme:
    """Localization scheme.

    Parameters
    ----------
    name : str
        One of ``random``, ``ps_only``, ``optimal``, ``alternating``,
        ``alternating_prior``, ``single_carrier`` and ``narrowband``.
    prior_std : float, optional
        Prior error of ``alternating_prior`` in meters.
    bandwidth : float, optional
        Bandwidth of ``narrowband`` in Hz.
    """
    name: str
    prior_std: float = None
    bandwidth: float = None

    def __post_init__(self):
        if self.name not in SCHEMES:
            msg = 'Unknown scheme \'{}\', expected one of {}.'.format(self.name, SCHEMES)
            log.error(msg)
            raise ValueError(msg)
        if self.name == 'alternating_prior' and (self.prior_std is None or self.prior_std < 0):
            msg = 'Scheme alternating_prior needs a nonnegative prior std, got {}.'.format(self.prior_std)
            log.error(msg)
            raise ValueError(msg)
        if self.name == 'narrowband' and self.bandwidth is None:
            object.__setattr__(self, 'bandwidth', NARROWBAND)

    @property
    def label(self):
        if self.name == 'alternating_prior':
            return '{}({})'.format(self.name, _fmt_number(self.prior_std))
        if self.name == 'narrowband':
            return '{}({})'.format(self.name, _fmt_number(self.bandwidth))
        return self.name

    @property
    def adaptive(self):
        """True if the combiner is designed from estimates during the trial."""
        return self.name in ('alternating', 'alternating_prior')

    def scenario(self, scenario):
        """The scenario as seen by the scheme."""
        if self.name == 'single_carrier':
            return scenario.with_band(n_subcarriers=1)
        if self.name == 'narrowband':
            return scenario.with_band(bandwidth=self.bandwidth)
        return scenario

def _fmt_number(value):
    value = float(value)
    return str(int(value)) if value.is_integer() and abs(value) < 1e15 else repr(value)

_SCHEME_RE = re.compile(r'^\s*(\w+)\s*(?:\(\s*([^)]*)\s*\))?\s*$')

def parse_scheme(text):
    """Parse a scheme label, e.g. ``optimal`` or ``alternating_prior(0.5)``."""
    match = _SCHEME_RE.match(text)
    if match is None:
        msg = 'Invalid scheme \'{}\'.'.format(text)
        log.error(msg)
        raise ValueError(msg)
    name, arg = match.groups()
    if name == 'alternating_prior':
        return Scheme(name, prior_std=float(arg) if arg else None)
    if name == 'narrowband':
        return Scheme(name, bandwidth=float(arg) if arg else None)
    if arg:
        msg = 'Scheme \'{}\' takes no parameter.'.format(name)
        log.error(msg)
        raise ValueError(msg)
    return Scheme(name)

def rmse(truth, estimates):
    """Root mean square position error.

    Parameters
    ----------
    truth : array (K, 2)
        True Cartesian positions.
    estimates : array (N_c, K, 2)
        Cartesian estimates of the trials.

    Returns
    -------
    rmse : float
        ``(1/K) sum_k sqrt((1/N_c) sum_n |p_k - p_k^(n)|^2)`` in meters.

    Raises
    ------
    EmptyTrials
        If there is no trial.
    """
    truth = np.asarray(truth, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    if estimates.size == 0 or estimates.shape[0] == 0:
        msg = 'RMSE of an empty set of trials.'
        log.error(msg)
        raise EmptyTrials(msg)
    if estimates.shape[1:] != truth.shape:
        msg = 'Estimates of shape {} for truth of shape {}.'.format(estimates.shape, truth.shape)
        log.error(msg)
        raise ValueError(msg)
    err2 = ((estimates - truth[None]) ** 2).sum(axis=-1)
    return float(np.sqrt(err2.mean(axis=0)).mean())

@dataclass(frozen=True)
class RunConfig:
    """Monte Carlo parameters.

    Parameters
    ----------
    n_trials : int
        Trials `N_c` per scheme and sweep point.
    seed : int
        Master seed.
    jobs : int
        Worker processes, 1 runs in process.
    chunk_size : int
        Trials per job.
    ap_sweeps : int
        AP sweeps `K_t` of the fixed-combiner schemes.
    joint : JointConfig
        Parameters of the adaptive schemes, its design parameters are used
        by every scheme.
    progress : bool
        Display progress bars.
    """
    n_trials: int = 100
    seed: int = 0
    jobs: int = 1
    chunk_size: int = 10
    ap_sweeps: int = 5
    joint: JointConfig = field(default_factory=JointConfig)
    progress: bool = False

    def __post_init__(self):
        if self.n_trials < 1:
            msg = 'At least one trial is required, n_trials = {}.'.format(self.n_trials)
            log.error(msg)
            raise EmptyTrials(msg)
        if self.jobs < 1 or self.chunk_size < 1:
            msg = 'Invalid jobs = {} or chunk_size = {}.'.format(self.jobs, self.chunk_size)
            log.error(msg)
            raise ValueError(msg)

    @property
    def design(self):
        return self.joint.design

@dataclass
class TrialResult:
    """Outcome of a trial: final estimate, trajectory and final CRB (adaptive schemes)."""
    index: int
    eta: np.ndarray
    trajectory: np.ndarray
    crb: float = None

@dataclass
class MonteCarloPoint:
    """Aggregated trials of a scheme at a sweep point.

    Parameters
    ----------
    scheme : str
        Scheme label.
    point : dict
        Sweep coordinates, e.g. ``{'snr_db': -5.0}``.
    rmse : float
        RMSE in meters.
    crb : float
        CRB in meters of the scheme combiner, RMS of the final combiners' CRB
        for adaptive schemes.
    n_trials : int
        Trial count `N_c`.
    runtime : float
        Accumulated trial time in seconds.
    trials : list of TrialResult
        Per-trial outcomes in trial order.
    """
    scheme: str
    point: dict
    rmse: float
    crb: float
    n_trials: int
    runtime: float
    trials: list = field(default_factory=list, repr=False)

@dataclass
class MonteCarloResult:
    """Result of an experiment, CSV ready."""
    experiment: str
    columns: tuple
    rows: list
    points: list = field(default_factory=list, repr=False)

@dataclass
class _Job:
    key: tuple
    scheme: Scheme
    scenario: Scenario
    combiner: object
    trials: list
    cfg: RunConfig

def _run_trial(job, cache, index, seed):
    scenario, scheme, cfg = job.scenario, job.scheme, job.cfg
    if scheme.name == 'alternating':
        res = joint_localize(scenario, cfg.joint, seed)
    elif scheme.name == 'alternating_prior':
        res = warm_start_with_prior(scenario, scheme.prior_std, cfg.joint, seed)
    else:
        batch = scenario.observe(job.combiner, seed)
        res = ap_localize(batch, job.combiner, scenario.band, scenario.geometry, scenario.n_users,
                          scenario.grid, cfg.ap_sweeps, cache=cache)
    bound = scenario.crb(res.combiners[-1]) if scheme.adaptive else None
    return TrialResult(index, res.eta, np.array(res.trajectory), bound)

def _run_job(job):
    start = time.perf_counter()
    cache = None
    if job.combiner is not None:
        cache = GridSteering(job.scenario.grid, job.combiner, job.scenario.band, job.scenario.geometry)
    results = [_run_trial(job, cache, index, seed) for index, seed in job.trials]
    return job.key, results, time.perf_counter() - start

def _map_jobs(jobs, cfg, desc=None):
    if cfg.jobs == 1:
        return [_run_job(job) for job in tqdm(jobs, desc=desc, disable=not cfg.progress)]
    with Pool(processes=cfg.jobs) as pool:
        return list(tqdm(pool.imap_unordered(_run_job, jobs), total=len(jobs), desc=desc,
                         disable=not cfg.progress))

def scheme_combiner(scheme, scenario, cfg):
    """Fixed combiner of a scheme, None for adaptive schemes.

    Parameters
    ----------
    scheme : Scheme
        The scheme.
    scenario : Scenario
        The scenario as seen by the scheme (see :meth:`Scheme.scenario`).
    cfg : RunConfig
        Monte Carlo parameters.

    Returns
    -------
    combiner : AnalogCombiner or None
        Random combiner for ``random``, phase-only design at the true
        positions for ``ps_only`` and full design at the true positions for
        the other fixed schemes.
    """
    if scheme.adaptive:
        return None
    start = scenario.random_combiner(np.random.default_rng(derive_seed(cfg.seed, 'design')))
    if scheme.name == 'random':
        return start
    if scheme.name == 'ps_only':
        start = narrowband(start)
    return scenario.design(scenario.users, start, cfg.design)

def _evaluate(experiment, tasks, cfg):
    """Run the trials of (scheme, point, scenario) tasks.

    Fixed combiners are designed once per scheme and design key (the part of
    the sweep point changing the design problem).
    """
    combiners = {}
    jobs = []
    seeds = [(n, derive_seed(cfg.seed, experiment, n)) for n in range(cfg.n_trials)]
    for t, (scheme, point, scenario, design_key) in enumerate(tasks):
        key = (scheme.label, design_key)
        if key not in combiners:
            combiners[key] = scheme_combiner(scheme, scenario, cfg)
        for start in range(0, cfg.n_trials, cfg.chunk_size):
            jobs.append(_Job((t, start), scheme, scenario, combiners[key],
                             seeds[start:start + cfg.chunk_size], cfg))

    log.info('{}: {} tasks, {} trials each, {} jobs.'.format(experiment, len(tasks), cfg.n_trials, len(jobs)))
    outcomes = _map_jobs(jobs, cfg, experiment)

    trials = [[] for _ in tasks]
    runtimes = np.zeros(len(tasks))
    for (t, _), results, runtime in outcomes:
        trials[t] += results
        runtimes[t] += runtime

    points = []
    for t, (scheme, point, scenario, design_key) in enumerate(tasks):
        results = sorted(trials[t], key=lambda r: r.index)
        estimates = np.array([polar_to_cartesian(r.eta) for r in results])
        error = rmse(polar_to_cartesian(scenario.users), estimates)
        if scheme.adaptive:
            bound = float(np.sqrt(np.mean([r.crb ** 2 for r in results])))
        else:
            bound = scenario.crb(combiners[(scheme.label, design_key)])
        points.append(MonteCarloPoint(scheme.label, point, error, bound, len(results), runtimes[t], results))
        log.info('{} {} {}: RMSE {:.4g} m, CRB {:.4g} m.'.format(experiment, scheme.label, point, error, bound))
    return points

def run_rmse_vs_snr(scenario, schemes, snr_list, cfg=None):
    """RMSE and CRB of the schemes over SNR.

    Returns
    -------
    result : MonteCarloResult
        Rows ``(snr_db, scheme, rmse_m, crb_m, n_trials)``.
    """
    cfg = RunConfig() if cfg is None else cfg
    tasks = []
    for snr in snr_list:
        for scheme in schemes:
            tasks.append((scheme, {'snr_db': float(snr)}, scheme.scenario(scenario.with_snr(snr)), None))
    points = _evaluate('rmse-vs-snr', tasks, cfg)
    rows = [(p.point['snr_db'], p.scheme, p.rmse, p.crb, p.n_trials) for p in points]
    return MonteCarloResult('rmse-vs-snr', ('snr_db', 'scheme', 'rmse_m', 'crb_m', 'n_trials'), rows, points)

def run_convergence(scenario, priors=(np.inf, 0., .5, 1.), cfg=None):
    """RMSE over the iterations of the joint localization.

    Parameters
    ----------
    scenario : Scenario
        The scenario, at the studied SNR.
    priors : sequence of float
        Prior errors in meters, `inf` for a random initial combiner.
    cfg : RunConfig, optional
        Monte Carlo parameters.

    Returns
    -------
    result : MonteCarloResult
        Rows ``(scheme, iteration, rmse_m)``. The ``random`` and ``optimal``
        references are constant over the iterations.
    """
    cfg = RunConfig() if cfg is None else cfg
    schemes = [Scheme('random'), Scheme('optimal')]
    for prior in priors:
        schemes.append(Scheme('alternating') if np.isinf(prior) else Scheme('alternating_prior', float(prior)))
    tasks = [(scheme, {}, scenario, None) for scheme in schemes]
    points = _evaluate('convergence', tasks, cfg)

    truth = polar_to_cartesian(scenario.users)
    rows = []
    for p in points:
        trajectories = np.array([polar_to_cartesian(r.trajectory) for r in p.trials])
        for it in range(cfg.joint.iterations + 1):
            if p.scheme not in ('random', 'optimal'):
                error = rmse(truth, trajectories[:, it])
            else:
                error = p.rmse
            rows.append((p.scheme, it, error))
    return MonteCarloResult('convergence', ('scheme', 'iteration', 'rmse_m'), rows, points)

@dataclass
class HeatmapResult:
    """CRB heatmap of a combiner focused on a point."""
    heatmap: object
    focal: np.ndarray
    combiner: object
    snr_db: float

    @property
    def rows(self):
        return self.heatmap.to_rows()

    def metadata(self):
        """Array and focal cells, minimum and median of the map.

        The cells of the arc at the focal distance (centers within half a
        cell of it) locate the angular focus: the per-chain subarrays are
        in far field beyond a meter, so the global minimum slides toward
        the array along the focused beam while the arc minimum stays on
        the focal point.
        """
        crb = self.heatmap.crb
        cx, cy = self.heatmap.centers()
        finite = np.where(np.isfinite(crb), crb, np.inf)
        i, j = np.unravel_index(np.argmin(finite), crb.shape)
        fx, fy = polar_to_cartesian(self.focal)
        fi = int(np.clip(np.searchsorted(self.heatmap.grid[0], fx) - 1, 0, cx.size - 1))
        fj = int(np.clip(np.searchsorted(self.heatmap.grid[1], fy) - 1, 0, cy.size - 1))
        step = max(np.diff(self.heatmap.grid[0])[0], np.diff(self.heatmap.grid[1])[0])
        arc = np.abs(np.hypot(cx[:, None], cy[None, :]) - self.focal[0]) <= step / 2
        ai, aj = np.unravel_index(np.argmin(np.where(arc, finite, np.inf)), crb.shape)
        arc_cell = [int(ai), int(aj)]
        return {
            'array_position': [0., 0.],
            'focal_polar': [float(v) for v in self.focal],
            'focal_xy': [float(fx), float(fy)],
            'focal_cell': [fi, fj],
            'focal_crb_m': float(crb[fi, fj]),
            'min_cell': [int(i), int(j)],
            'min_xy': [float(cx[i]), float(cy[j])],
            'min_crb_m': float(crb[i, j]),
            'median_crb_m': float(np.nanmedian(crb[np.isfinite(crb)])) if np.isfinite(crb).any() else float('inf'),
            'arc_min_cell': arc_cell,
            'arc_offset_cells': int(np.abs(np.subtract(arc_cell, [fi, fj])).max()),
            'snr_db': float(self.snr_db),
            'shape': list(crb.shape),
        }

def run_heatmap(scenario, focal=(8., np.pi / 3), area=((-10., 0.), (10., 20.)), resolution=.1,
                snr_db=-10., cfg=None, mem_limit=None):
    """CRB heatmap of a combiner designed for a focal point.

    Parameters
    ----------
    scenario : Scenario
        The scenario, its users are replaced by the focal point.
    focal : array (2,)
        Polar focal point.
    area : array (2, 2)
        Lower and upper corners in meters.
    resolution : float
        Cell size in meters.
    snr_db : float
        SNR of the user in every cell.
    cfg : RunConfig, optional
        Seed and design parameters.
    mem_limit : number, optional
        Memory limit of the evaluation.

    Returns
    -------
    result : HeatmapResult
        The heatmap and the designed combiner.
    """
    cfg = RunConfig() if cfg is None else cfg
    focal = check_polar(focal)[0]
    focused = replace(scenario, users=focal[None], snr_db=snr_db)
    combiner = scheme_combiner(Scheme('optimal'), focused, cfg)
    heatmap = crb_heatmap(area, resolution, combiner, focused.band, focused.geometry, snr_db, mem_limit=mem_limit)
    return HeatmapResult(heatmap, focal, combiner, snr_db)

def run_rmse_vs_nt(scenario, nt_list, schemes, cfg=None):
    """RMSE of the schemes over the TTD count per RF chain.

    Raises
    ------
    InvalidLayout
        If a TTD count does not divide the antennas of an RF chain.

    Returns
    -------
    result : MonteCarloResult
        Rows ``(n_t, scheme, rmse_m)``.
    """
    cfg = RunConfig() if cfg is None else cfg
    tasks = []
    for n_t in nt_list:
        sized = scenario.with_layout(int(n_t))
        for scheme in schemes:
            tasks.append((scheme, {'n_t': int(n_t)}, scheme.scenario(sized), int(n_t)))
    points = _evaluate('rmse-vs-nt', tasks, cfg)
    rows = [(p.point['n_t'], p.scheme, p.rmse) for p in points]
    return MonteCarloResult('rmse-vs-nt', ('n_t', 'scheme', 'rmse_m'), rows, points)

def run_rmse_vs_m(scenario, m_list, snr_list, schemes, cfg=None):
    """RMSE of the schemes over the subcarrier count and SNR.

    Returns
    -------
    result : MonteCarloResult
        Rows ``(m_subcarriers, snr_db, scheme, rmse_m)``.
    """
    cfg = RunConfig() if cfg is None else cfg
    tasks = []
    for m in m_list:
        banded = scenario.with_band(n_subcarriers=int(m))
        for snr in snr_list:
            for scheme in schemes:
                tasks.append((scheme, {'m_subcarriers': int(m), 'snr_db': float(snr)},
                              scheme.scenario(banded.with_snr(snr)), int(m)))
    points = _evaluate('rmse-vs-m', tasks, cfg)
    rows = [(p.point['m_subcarriers'], p.point['snr_db'], p.scheme, p.rmse) for p in points]
    return MonteCarloResult('rmse-vs-m', ('m_subcarriers', 'snr_db', 'scheme', 'rmse_m'), rows, points)

def run_trackmap(scenario, schemes=None, cfg=None):
    """Per-iteration estimates of every trial.

    Returns
    -------
    result : MonteCarloResult
        Rows ``(scheme, trial, iteration, user, x_est, y_est)``.
    """
    cfg = RunConfig() if cfg is None else cfg
    schemes = [Scheme('alternating'), Scheme('optimal')] if schemes is None else schemes
    tasks = [(scheme, {}, scheme.scenario(scenario), None) for scheme in schemes]
    points = _evaluate('trackmap', tasks, cfg)

    rows = []
    for p in points:
        for r in p.trials:
            for it, eta in enumerate(r.trajectory):
                for k, (x, y) in enumerate(polar_to_cartesian(eta)):
                    rows.append((p.scheme, r.index, it, k, x, y))
    return MonteCarloResult('trackmap', ('scheme', 'trial', 'iteration', 'user', 'x_est', 'y_est'), rows, points)

def _check(name, passed, detail):
    log.info('selftest {}: {} ({})'.format(name, 'ok' if passed else 'FAILED', detail))
    return (name, bool(passed), detail)

def selftest(seed=0):
    """Numerical invariants on a small scenario.

    Returns
    -------
    checks : list of tuple
        ``(name, passed, detail)`` per check.
    """
    rng = np.random.default_rng(derive_seed(seed, 'selftest'))
    band = subcarrier_frequencies(300e9, 30e9, 4)
    g = ArrayGeometry(128, 5e-4)
    layout = CombinerLayout.from_antennas(128, 2, 4)
    users = np.array([[3., np.pi / 3], [3., np.pi / 4]])
    checks = []

    c = random_combiner(layout, 5e-9, rng)
    Q = combiner_matrices(c, band.frequencies)
    err = np.abs(Q @ Q.conj().transpose(0, 2, 1) - layout.gain * np.eye(layout.n_rf)).max()
    checks.append(_check('combiner-orthogonality', err < 1e-10, 'max error {:.3g}'.format(err)))

    Q0 = combiner_matrices(narrowband(c), band.frequencies)
    checks.append(_check('narrowband-invariance', np.array_equal(Q0, Q0[[0] * band.n_subcarriers]), 't_max = 0'))

    X = rng.standard_normal((8, 3)) + 1j * rng.standard_normal((8, 3))
    P = projector(X)
    err = max(np.abs(P @ P - P).max(), np.abs(P @ X - X).max())
    checks.append(_check('projector', err < 1e-10, 'max error {:.3g}'.format(err)))

    st = steering_set(band, users, g)
    h_d, h_t = 1e-9 * users[:, 0], 1e-7
    num_d = (steering_set(band, users + np.c_[h_d, 0 * h_d], g, False).S
             - steering_set(band, users - np.c_[h_d, 0 * h_d], g, False).S) / (2 * h_d)
    num_t = (steering_set(band, users + [0, h_t], g, False).S
             - steering_set(band, users - [0, h_t], g, False).S) / (2 * h_t)
    err = max(np.linalg.norm(num_d - st.D) / np.linalg.norm(st.D),
              np.linalg.norm(num_t - st.B) / np.linalg.norm(st.B))
    checks.append(_check('steering-derivatives', err < 1e-5, 'relative error {:.3g}'.format(err)))

    obj = build_design_objective(st, band)
    gram = gram_matrix(c, obj)
    gram = gram / np.linalg.eigvalsh(gram)[-1]
    state = init_rcg_state(np.exp(1j * c.phases), gram)
    values = [state.value]
    for _ in range(30):
        state = riemannian_step(state, gram)
        values.append(state.value)
    steps = np.diff(values)
    modulus = np.abs(np.abs(state.a) - 1).max()
    checks.append(_check('rcg-monotone', (steps >= -1e-9 * abs(values[-1])).all() and modulus < 1e-14,
                         'objective {:.4g} -> {:.4g}'.format(values[0], values[-1])))

    before = design_objective_value(c, obj)
    after = design_objective_value(optimize_delays(c, obj), obj)
    checks.append(_check('delay-monotone', after >= before * (1 - 1e-9), '{:.4g} -> {:.4g}'.format(before, after)))

    scenario = Scenario(band, g, layout, 5e-9, users[:1], np.inf, 16)
    batch = scenario.observe(c, derive_seed(seed, 'selftest', 1))
    res = ap_localize(batch, c, band, g, 1, scenario.grid, 1)
    err = np.linalg.norm(polar_to_cartesian(res.eta) - polar_to_cartesian(users[:1]))
    checks.append(_check('noiseless-localization', err < 2e-2, 'error {:.3g} m'.format(err)))

    q = combined_steering(users, c, band, g)
    P_prev = np.array([projector(q[:1, m].T) for m in range(band.n_subcarriers)])
    qbar = residual_steering(q[1], P_prev)
    inner = np.abs(np.einsum('mi,mi->m', q[0].conj(), qbar))
    err = (inner / (np.linalg.norm(q[0], axis=-1) * np.linalg.norm(qbar, axis=-1))).max()
    checks.append(_check('residual-orthogonality', err < 1e-10, 'max inner product {:.3g}'.format(err)))

    return checks
