#!/usr/bin/env python
# file test_experiments.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Monte Carlo experiments tests.

"""

import numpy as np
import pytest
from dataclasses import replace
from nfloc import experiments as ex
from nfloc.analog_design import DelaySearchConfig
from nfloc.errors import EmptyTrials, InvalidLayout
from nfloc.fisher import CrbMap
from nfloc.helpers import DesignConfig
from nfloc.joint import JointConfig

@pytest.mark.parametrize('truth, estimates, expected', [
    ([[0., 0.]], [[[.3, .4]]], .5),
    ([[0., 0.], [1., 1.]], [[[.1, 0.], [1.3, 1.]]], .2),
    ([[0., 0.]], [[[1., 0.]], [[-1., 0.]]], 1.),
    ([[0., 0.]], [[[0., 0.]], [[0., 0.]]], 0.),
])
def test_rmse(truth, estimates, expected):
    assert ex.rmse(truth, estimates) == pytest.approx(expected)

def test_rmse_errors():
    with pytest.raises(EmptyTrials):
        ex.rmse([[0., 0.]], np.zeros((0, 1, 2)))
    with pytest.raises(ValueError):
        ex.rmse([[0., 0.]], np.zeros((3, 2, 2)))

@pytest.mark.parametrize('text, name, label', [
    ('random', 'random', 'random'),
    (' optimal ', 'optimal', 'optimal'),
    ('alternating_prior(0.5)', 'alternating_prior', 'alternating_prior(0.5)'),
    ('alternating_prior(1)', 'alternating_prior', 'alternating_prior(1)'),
    ('narrowband', 'narrowband', 'narrowband(300000000)'),
    ('narrowband(1e9)', 'narrowband', 'narrowband(1000000000)'),
    ('single_carrier', 'single_carrier', 'single_carrier'),
])
def test_parse_scheme(text, name, label):
    scheme = ex.parse_scheme(text)
    assert scheme.name == name
    assert scheme.label == label
    assert ex.parse_scheme(scheme.label) == scheme

@pytest.mark.parametrize('text', ['foo', 'optimal(1)', 'alternating_prior', 'alternating_prior(-1)', 'a b', ''])
def test_parse_scheme_invalid(text):
    with pytest.raises(ValueError):
        ex.parse_scheme(text)

def test_scheme_properties(small_scenario):
    assert ex.Scheme('alternating').adaptive
    assert ex.Scheme('alternating_prior', .5).adaptive
    assert not ex.Scheme('optimal').adaptive
    assert ex.Scheme('single_carrier').scenario(small_scenario).band.n_subcarriers == 1
    nb = ex.Scheme('narrowband').scenario(small_scenario).band
    assert nb.bandwidth == ex.NARROWBAND
    assert nb.n_subcarriers == small_scenario.band.n_subcarriers
    assert ex.Scheme('random').scenario(small_scenario) is small_scenario

def test_run_config_invalid():
    with pytest.raises(EmptyTrials):
        ex.RunConfig(n_trials=0)
    with pytest.raises(ValueError):
        ex.RunConfig(jobs=0)

@pytest.fixture
def cfg():
    design = DesignConfig(outer_iters=2, phase_iters=20, delay=DelaySearchConfig(n_grid=8, max_sweeps=2))
    joint = JointConfig(iterations=2, init_sweeps=2, ap_sweeps=1, design=design)
    return ex.RunConfig(n_trials=2, seed=3, chunk_size=1, ap_sweeps=2, joint=joint)

def test_scheme_combiner(small_scenario, cfg):
    assert ex.scheme_combiner(ex.Scheme('alternating'), small_scenario, cfg) is None
    random = ex.scheme_combiner(ex.Scheme('random'), small_scenario, cfg)
    again = ex.scheme_combiner(ex.Scheme('random'), small_scenario, cfg)
    assert (random.phases == again.phases).all()
    ps_only = ex.scheme_combiner(ex.Scheme('ps_only'), small_scenario, cfg)
    assert ps_only.t_max == 0 and (ps_only.delays == 0).all()

def test_run_rmse_vs_snr(small_scenario, cfg):
    schemes = [ex.Scheme('random'), ex.Scheme('optimal')]
    res = ex.run_rmse_vs_snr(small_scenario, schemes, [0., 10.], cfg)

    assert res.experiment == 'rmse-vs-snr'
    assert res.columns == ('snr_db', 'scheme', 'rmse_m', 'crb_m', 'n_trials')
    assert [r[:2] for r in res.rows] == [(0., 'random'), (0., 'optimal'), (10., 'random'), (10., 'optimal')]
    assert all(r[4] == 2 for r in res.rows)
    assert all(np.isfinite(r[2]) and r[3] > 0 for r in res.rows)
    # CRB of a fixed combiner scales with the noise amplitude
    assert res.rows[0][3] / res.rows[2][3] == pytest.approx(np.sqrt(10), rel=1e-6)

    again = ex.run_rmse_vs_snr(small_scenario, schemes, [0., 10.], cfg)
    assert again.rows == res.rows

def test_run_rmse_vs_snr_adaptive(small_scenario, cfg):
    res = ex.run_rmse_vs_snr(small_scenario, [ex.Scheme('alternating')], [0.], cfg)
    point = res.points[0]
    assert [t.index for t in point.trials] == [0, 1]
    assert all(t.trajectory.shape == (3, 2, 2) for t in point.trials)
    assert point.crb == pytest.approx(np.sqrt(np.mean([t.crb ** 2 for t in point.trials])))

def test_run_rmse_vs_nt_ps_only(small_scenario, cfg):
    res = ex.run_rmse_vs_nt(small_scenario.with_snr(0), [1, 2, 4], [ex.Scheme('ps_only')], cfg)
    assert [r[0] for r in res.rows] == [1, 2, 4]
    values = [r[2] for r in res.rows]
    assert values == pytest.approx([values[0]] * 3)

def test_run_rmse_vs_nt_invalid(small_scenario, cfg):
    with pytest.raises(InvalidLayout):
        ex.run_rmse_vs_nt(small_scenario, [3], [ex.Scheme('random')], cfg)

def test_run_rmse_vs_m(small_scenario, cfg):
    res = ex.run_rmse_vs_m(small_scenario, [1, 2], [0.], [ex.Scheme('random')], cfg)
    assert res.columns == ('m_subcarriers', 'snr_db', 'scheme', 'rmse_m')
    assert [r[:3] for r in res.rows] == [(1, 0., 'random'), (2, 0., 'random')]

def test_run_convergence(small_scenario, cfg):
    res = ex.run_convergence(small_scenario.with_snr(0), (np.inf, .5), cfg)
    schemes = [r[0] for r in res.rows]
    assert schemes == ['random'] * 3 + ['optimal'] * 3 + ['alternating'] * 3 + ['alternating_prior(0.5)'] * 3
    assert [r[1] for r in res.rows] == [0, 1, 2] * 4
    assert res.rows[0][2] == res.rows[2][2]

def test_run_trackmap(small_scenario, cfg):
    res = ex.run_trackmap(small_scenario, cfg=cfg)
    assert res.columns == ('scheme', 'trial', 'iteration', 'user', 'x_est', 'y_est')
    # trials x trajectory entries x users, per scheme
    assert len(res.rows) == 2 * 3 * 2 + 2 * 3 * 2

def test_run_heatmap(small_scenario, cfg):
    res = ex.run_heatmap(small_scenario, focal=(3., np.pi / 3), area=((-1., 0.), (1., 2.)),
                         resolution=.5, snr_db=0., cfg=cfg)
    assert res.heatmap.shape == (4, 4)
    assert len(res.rows) == 16
    meta = res.metadata()
    assert meta['shape'] == [4, 4]
    assert meta['array_position'] == [0., 0.]
    assert meta['focal_cell'] == [3, 3]
    assert meta['min_crb_m'] <= meta['median_crb_m']

def test_heatmap_focal_arc():
    grid = [np.linspace(-2., 2., 21), np.linspace(0., 4., 21)]
    crb = np.ones((20, 20))
    crb[10, 5] = .1
    crb[12, 15] = .5
    res = ex.HeatmapResult(CrbMap(grid, crb), np.array([3.1, np.pi / 2]), None, -10.)
    meta = res.metadata()
    assert meta['focal_cell'] == [10, 15]
    assert meta['min_cell'] == [10, 5]
    assert meta['arc_min_cell'] == [12, 15]
    assert meta['arc_offset_cells'] == 2

def test_selftest():
    checks = ex.selftest(0)
    assert [c[0] for c in checks] == ['combiner-orthogonality', 'narrowband-invariance', 'projector',
                                      'steering-derivatives', 'rcg-monotone', 'delay-monotone',
                                      'noiseless-localization', 'residual-orthogonality']
    failed = [c for c in checks if not c[1]]
    assert not failed, failed

@pytest.mark.slow
def test_parallel_jobs(small_scenario, cfg):
    schemes = [ex.Scheme('random')]
    serial = ex.run_rmse_vs_snr(small_scenario, schemes, [0.], cfg)
    parallel = ex.run_rmse_vs_snr(small_scenario, schemes, [0.], replace(cfg, jobs=2))
    assert parallel.rows == serial.rows

@pytest.fixture(scope='module')
def reference_cfg():
    return ex.RunConfig(n_trials=50, seed=0)

def _by_scheme(rows, column=2):
    return {r[1]: r[column] for r in rows}

@pytest.mark.slow
def test_heatmap_focusing(reference_scenario, reference_cfg):
    res = ex.run_heatmap(reference_scenario, resolution=.2, cfg=reference_cfg)
    meta = res.metadata()
    assert meta['shape'] == [100, 100]
    assert meta['focal_crb_m'] < meta['median_crb_m']
    # focused in angle: best cell of the focal distance arc next to the focal cell
    assert meta['arc_offset_cells'] <= 3

    focused = replace(reference_scenario, users=res.focal[None]).with_snr(-10)
    random = focused.random_combiner(np.random.default_rng(0))
    assert focused.crb(res.combiner) < focused.crb(random)

@pytest.mark.slow
def test_scheme_ordering(reference_scenario, reference_cfg):
    schemes = [ex.Scheme('random'), ex.Scheme('ps_only'), ex.Scheme('optimal')]
    res = ex.run_rmse_vs_snr(reference_scenario, schemes, [-5.], reference_cfg)
    rmse = {r[1]: r[2] for r in res.rows}
    crb = {r[1]: r[3] for r in res.rows}
    assert rmse['optimal'] < rmse['ps_only'] < rmse['random']
    assert rmse['optimal'] >= crb['optimal']

@pytest.mark.slow
def test_alternating_centimeter(reference_scenario, reference_cfg):
    schemes = [ex.Scheme('random'), ex.Scheme('alternating')]
    rmse = _by_scheme(ex.run_rmse_vs_snr(reference_scenario, schemes, [-5.], reference_cfg).rows)
    assert rmse['alternating'] < .1
    assert rmse['random'] > rmse['alternating']

@pytest.mark.slow
def test_bandwidth_effect(reference_scenario, reference_cfg):
    schemes = [ex.Scheme('ps_only'), ex.Scheme('optimal')]

    def gap(scenario, snr_db):
        rmse = _by_scheme(ex.run_rmse_vs_snr(scenario, schemes, [snr_db], reference_cfg).rows)
        return abs(rmse['ps_only'] - rmse['optimal']) / rmse['optimal']

    assert gap(reference_scenario.with_band(bandwidth=300e6), 0.) < .25
    assert gap(reference_scenario, -5.) > .25

@pytest.mark.slow
def test_ttd_count_trend(reference_scenario, reference_cfg):
    res = ex.run_rmse_vs_nt(reference_scenario.with_snr(-5), [2, 8, 16, 32], [ex.Scheme('optimal')], reference_cfg)
    values = [r[2] for r in res.rows]
    # Monte Carlo slack of 5% between neighbors
    assert all(b <= 1.05 * a for a, b in zip(values, values[1:]))
    assert values[-1] < values[0]

@pytest.mark.slow
def test_subcarrier_trend(reference_scenario, reference_cfg):
    schemes = [ex.Scheme('random'), ex.Scheme('ps_only'), ex.Scheme('optimal')]
    sc = reference_scenario.with_layout(8)
    res = ex.run_rmse_vs_m(sc, [1, 4, 12], [-5.], schemes, reference_cfg)
    rmse = {(r[0], r[2]): r[3] for r in res.rows}
    for s in ('random', 'ps_only', 'optimal'):
        values = [rmse[m, s] for m in (1, 4, 12)]
        assert all(b <= 1.05 * a for a, b in zip(values, values[1:]))
    assert rmse[12, 'ps_only'] - rmse[12, 'optimal'] > rmse[4, 'ps_only'] - rmse[4, 'optimal']
