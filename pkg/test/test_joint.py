#!/usr/bin/env python
# file test_joint.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Joint localization and design tests.

"""

import numpy as np
import pytest
from nfloc import joint
from nfloc.analog_design import DelaySearchConfig, design_objective_value
from nfloc.experiments import rmse
from nfloc.geometry import polar_to_cartesian
from nfloc.helpers import DesignConfig

@pytest.fixture
def cfg():
    design = DesignConfig(outer_iters=2, phase_iters=20, delay=DelaySearchConfig(n_grid=8, max_sweeps=2))
    return joint.JointConfig(iterations=2, init_sweeps=2, ap_sweeps=1, design=design)

def _error(eta, users):
    return np.linalg.norm(polar_to_cartesian(eta) - polar_to_cartesian(users), axis=-1).max()

def test_joint_config_invalid():
    with pytest.raises(ValueError):
        joint.JointConfig(iterations=-1)

def test_joint_without_iterations(small_scenario, cfg):
    cfg = joint.JointConfig(iterations=0, init_sweeps=1, design=cfg.design)
    res = joint.joint_localize(small_scenario, cfg, seed=0)
    assert res.n_iterations == 0
    assert len(res.objectives) == len(res.combiners) == 1
    assert (res.eta == res.trajectory[0]).all()

def test_joint_trajectory(small_scenario, cfg):
    res = joint.joint_localize(small_scenario, cfg, seed=0)
    assert res.n_iterations == 2
    assert len(res.trajectory) == len(res.objectives) == len(res.combiners) == 3
    assert (res.eta == res.trajectory[-1]).all()
    assert res.eta.shape == (2, 2)
    assert len(res.to_rows()) == 6

def test_joint_deterministic(small_scenario, cfg):
    sc = small_scenario.with_snr(0)
    a = joint.joint_localize(sc, cfg, seed=11)
    b = joint.joint_localize(sc, cfg, seed=np.random.SeedSequence(11))
    assert all((x == y).all() for x, y in zip(a.trajectory, b.trajectory))
    assert a.objectives == b.objectives

def test_joint_noiseless(small_scenario, cfg):
    res = joint.joint_localize(small_scenario, cfg, seed=2)
    order = np.argsort(res.eta[:, 1])[::-1]
    assert _error(res.eta[order], small_scenario.users) < 5e-2

def test_joint_initial_combiner(small_scenario, cfg, rng):
    start = small_scenario.random_combiner(rng)
    res = joint.joint_localize(small_scenario, cfg, seed=0, initial_combiner=start)
    assert res.combiners[0] is start

@pytest.mark.parametrize('std', [0., .5, 3.])
def test_perturb_positions(std, rng):
    eta = np.array([[8., np.pi / 3], [2., 3.]])
    out = joint.perturb_positions(eta, std, rng)
    assert out.shape == (2, 2)
    assert ((out[:, 1] > 0) & (out[:, 1] < np.pi)).all()
    if std == 0:
        assert np.allclose(out, eta)

def test_warm_start_invalid(small_scenario, cfg):
    with pytest.raises(ValueError):
        joint.warm_start_with_prior(small_scenario, -1., cfg, seed=0)

def test_warm_start(small_scenario, cfg):
    a = joint.warm_start_with_prior(small_scenario, .5, cfg, seed=4)
    b = joint.warm_start_with_prior(small_scenario, .5, cfg, seed=4)
    assert a.n_iterations == 2
    assert (a.eta == b.eta).all()

def _track(res, it):
    eta = res.trajectory[it]
    return polar_to_cartesian(eta[np.argsort(eta[:, 1])[::-1]])

def test_warm_start_perfect_prior(small_scenario, cfg):
    sc = small_scenario.with_snr(0)
    res = joint.warm_start_with_prior(sc, 0., cfg, seed=5)

    # same draws as the warm start: the prior, then the starting combiner
    rng = np.random.default_rng(np.random.SeedSequence(5).spawn(2)[0])
    prior = joint.perturb_positions(sc.users, 0., rng)
    assert np.allclose(prior, sc.users, rtol=1e-12)
    start = sc.random_combiner(rng)
    designed = sc.design(prior, start, cfg.design)
    assert (res.combiners[0].phases == designed.phases).all()
    assert (res.combiners[0].delays == designed.delays).all()

    # a perfect prior is the design at the true positions
    optimal = sc.design(sc.users, start, cfg.design)
    obj = sc.design_objective()
    assert design_objective_value(designed, obj) == pytest.approx(design_objective_value(optimal, obj), rel=1e-6)

@pytest.mark.slow
def test_joint_improves(small_scenario):
    sc = small_scenario.with_snr(0)
    cfg = joint.JointConfig(iterations=3, init_sweeps=3)
    runs = [joint.joint_localize(sc, cfg, seed=s) for s in range(16)]
    truth = polar_to_cartesian(sc.users)
    start = rmse(truth, [_track(r, 0) for r in runs])
    end = rmse(truth, [_track(r, -1) for r in runs])
    assert end < start

@pytest.mark.slow
def test_warm_start_ordering(small_scenario):
    sc = small_scenario.with_snr(-5)
    cfg = joint.JointConfig(iterations=0, init_sweeps=3)
    truth = polar_to_cartesian(sc.users)
    errors = {}
    for std in (0., .5, 1.):
        runs = [joint.warm_start_with_prior(sc, std, cfg, seed=s) for s in range(16)]
        errors[std] = rmse(truth, [_track(r, 0) for r in runs])
    assert errors[.5] <= 1.25 * errors[0.]
    assert errors[1.] >= errors[.5] / 1.25
