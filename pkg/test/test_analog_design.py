#!/usr/bin/env python
# file test_analog_design.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Analog combiner design tests.

"""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from nfloc import analog_design as ad
from nfloc.channel import steering_set, noise_model_from_snr, subcarrier_frequencies
from nfloc.geometry import ArrayGeometry
from nfloc.hybrid_array import CombinerLayout, random_combiner, make_combiner, combiner_matrices

@pytest.fixture
def users():
    return np.array([[3., np.pi / 3], [5., 1.2]])

@pytest.fixture
def steering(small_band, small_geometry, users):
    return steering_set(small_band, users, small_geometry)

@pytest.fixture
def objective(steering, small_band):
    return ad.build_design_objective(steering, small_band, noise_model_from_snr(steering, 0))

@pytest.fixture
def combiner(small_layout, rng):
    return random_combiner(small_layout, 1e-9, rng)

def _dense_value(combiner, obj):
    Q = combiner_matrices(combiner, obj.frequencies)
    return np.einsum('m,m->', obj.weights, np.linalg.norm(Q @ obj.V, axis=(1, 2)) ** 2)

def test_build_objective(steering, small_band):
    obj = ad.build_design_objective(steering, small_band)
    assert obj.V.shape == (4, 32, 2)
    assert np.allclose(obj.V, steering.D + steering.B)
    assert (obj.weights == 1).all()
    assert not obj.exact

    exact = ad.build_design_objective(steering, small_band, exact=True)
    assert exact.V.shape == (4, 32, 4)
    assert exact.exact

def test_objective_value(combiner, objective):
    assert ad.design_objective_value(combiner, objective) == pytest.approx(_dense_value(combiner, objective))

def test_exact_objective_value(combiner, steering, small_band):
    obj = ad.build_design_objective(steering, small_band, exact=True)
    Q = combiner_matrices(combiner, small_band.frequencies)
    expected = np.linalg.norm(Q @ steering.D) ** 2 + np.linalg.norm(Q @ steering.B) ** 2
    assert ad.design_objective_value(combiner, obj) == pytest.approx(expected)

def test_pruned_operators(combiner, objective):
    W = ad.pruned_operators(combiner, objective)
    assert W.shape == (4, 2, 2, 32)

    a = np.exp(1j * combiner.phases)
    Q = combiner_matrices(combiner, objective.frequencies)
    QV = Q @ objective.V
    assert np.allclose(np.einsum('mjin,n->mij', W, a), QV)

def test_gram_matrix(combiner, objective):
    gram = ad.gram_matrix(combiner, objective)
    W = ad.pruned_operators(combiner, objective)
    expected = np.einsum('m,mjin,mjio->no', objective.weights, W.conj(), W)
    assert gram.shape == (32, 32)
    assert np.allclose(gram, expected)
    assert np.allclose(gram, gram.conj().T)
    assert (gram[:16, 16:] == 0).all(), 'One block per RF chain'

    a = np.exp(1j * combiner.phases)
    value = np.vdot(a, gram @ a).real
    assert value == pytest.approx(ad.design_objective_value(combiner, objective))

def test_euclidean_gradient(rng):
    X = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    gram = X.conj().T @ X
    a = np.exp(2j * np.pi * rng.random(6))
    grad = ad.euclidean_gradient(a, gram)
    f = lambda x: np.vdot(x, gram @ x).real
    h = 1e-6
    for n in range(6):
        e = np.zeros(6)
        e[n] = h
        assert (f(a + e) - f(a - e)) / (2 * h) == pytest.approx(grad[n].real, rel=1e-6, abs=1e-6)
        assert (f(a + 1j * e) - f(a - 1j * e)) / (2 * h) == pytest.approx(grad[n].imag, rel=1e-6, abs=1e-6)

@given(st.integers(0, 2 ** 32 - 1))
def test_tangent_projection(seed):
    rng = np.random.default_rng(seed)
    a = np.exp(2j * np.pi * rng.random(8))
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    t = ad.tangent_projection(a, v)
    assert np.allclose(np.real(t * a.conj()), 0, atol=1e-12)
    assert np.allclose(ad.tangent_projection(a, t), t)

def test_retraction():
    a = np.array([2., -3j, 1 + 1j, 0.])
    r = ad.retraction(a)
    assert np.allclose(np.abs(r), 1)
    assert r[0] == 1 and r[1] == pytest.approx(-1j) and r[3] == 1
    assert np.angle(r[2]) == pytest.approx(np.pi / 4)

def test_rcg_monotone(combiner, objective):
    gram = ad.gram_matrix(combiner, objective)
    gram = gram / np.linalg.eigvalsh(gram)[-1]
    state = ad.init_rcg_state(np.exp(1j * combiner.phases), gram)
    values = [state.value]
    for _ in range(30):
        state = ad.riemannian_step(state, gram)
        values.append(state.value)
        assert np.abs(np.abs(state.a) - 1).max() < 1e-14
        assert np.vdot(state.grad, state.direction).real >= 0
    assert (np.diff(values) >= -1e-12).all()
    assert values[-1] > values[0]

def test_optimize_phases(combiner, objective):
    before = ad.design_objective_value(combiner, objective)
    out = ad.optimize_phases(combiner, objective)
    assert (out.delays == combiner.delays).all()
    assert ad.design_objective_value(out, objective) >= before * (1 - 1e-12)

def test_optimize_phases_rank_one():
    band = subcarrier_frequencies(300e9, 0, 1)
    g = ArrayGeometry(16, 5e-4)
    st_ = steering_set(band, [[2., 1.]], g)
    obj = ad.build_design_objective(st_, band)
    layout = CombinerLayout(1, 1, 16)
    start = random_combiner(layout, 0., np.random.default_rng(3))

    out = ad.optimize_phases(start, obj, max_iters=1000, tol=1e-14)
    optimum = np.sum(np.abs(obj.V[0, :, 0])) ** 2
    assert ad.design_objective_value(out, obj) == pytest.approx(optimum, rel=1e-3)

def test_optimize_phases_null_objective(combiner, objective):
    null = ad.DesignObjective(np.zeros_like(objective.V), objective.weights, objective.frequencies)
    assert ad.optimize_phases(combiner, null) is combiner

def test_delay_search_config():
    cfg = ad.DelaySearchConfig()
    s = cfg.search_set(5e-9)
    assert s.size == 65
    assert s[0] == 0 and s[-1] == 5e-9
    with pytest.raises(ValueError):
        ad.DelaySearchConfig(n_grid=0)
    with pytest.raises(ValueError):
        ad.DelaySearchConfig(max_sweeps=0)

def test_optimize_delays(small_layout, objective):
    start = make_combiner(small_layout, np.zeros(32), np.zeros((2, 4)), 5e-9)
    cfg = ad.DelaySearchConfig(n_grid=16)
    out = ad.optimize_delays(start, objective, cfg)

    assert (out.phases == start.phases).all()
    grid = cfg.search_set(5e-9)
    assert all(np.isclose(grid, t).any() for t in out.delays.ravel())
    assert ad.design_objective_value(out, objective) >= ad.design_objective_value(start, objective) * (1 - 1e-12)

def test_optimize_delays_monotone(combiner, objective):
    before = ad.design_objective_value(combiner, objective)
    after = ad.design_objective_value(ad.optimize_delays(combiner, objective), objective)
    assert after >= before * (1 - 1e-12)

def test_optimize_delays_narrowband(small_layout, objective, rng):
    start = random_combiner(small_layout, 0., rng)
    assert ad.optimize_delays(start, objective) is start

def test_single_ttd_delay_invariance(small_band, rng):
    g = ArrayGeometry(8, 5e-4)
    obj = ad.build_design_objective(steering_set(small_band, [[3., 1.]], g), small_band)
    c = random_combiner(CombinerLayout(1, 1, 8), 5e-9, rng)
    values = [ad.design_objective_value(c.with_delays([[t]]), obj) for t in (0., 1e-9, 3.3e-9)]
    assert values == pytest.approx([values[0]] * 3)

def test_alternate_design(combiner, objective):
    out, history = ad.alternate_design(combiner, objective, outer_iters=4, return_history=True)
    assert 2 <= len(history) <= 5
    assert history[0] == pytest.approx(ad.design_objective_value(combiner, objective))
    assert history[-1] == pytest.approx(ad.design_objective_value(out, objective))
    assert (np.diff(history) >= -1e-9 * history[-1]).all()
    assert history[-1] > history[0]

def test_alternate_design_narrowband(small_layout, objective, rng):
    start = random_combiner(small_layout, 0., rng)
    out = ad.alternate_design(start, objective, outer_iters=2)
    assert out.t_max == 0
    assert (out.delays == 0).all()

def test_objective_positions(steering, small_band, users, small_scenario):
    assert ad.build_design_objective(steering, small_band).eta is None
    obj = ad.build_design_objective(steering, small_band, eta=users)
    assert (obj.eta == users).all()
    assert (small_scenario.design_objective().eta == small_scenario.users).all()
    eta = [[4., 1.], [6., 2.]]
    assert small_scenario.design_objective(eta).eta == pytest.approx(np.array(eta))

def test_design_beats_random(combiner, objective, small_layout):
    draws = np.random.default_rng(7)
    best = max(ad.design_objective_value(random_combiner(small_layout, 1e-9, draws), objective)
               for _ in range(100))
    out = ad.alternate_design(combiner, objective)
    assert ad.design_objective_value(out, objective) > best

def _lift(c, layout):
    """Same combiner on a layout with more TTDs per RF chain."""
    ratio = layout.n_ttd // c.layout.n_ttd
    return make_combiner(layout, c.phases, np.repeat(c.delays, ratio, axis=1), c.t_max)

@pytest.mark.slow
def test_design_ttd_count(small_scenario):
    sc = small_scenario.with_snr(-5)
    obj = sc.design_objective()
    c = sc.with_layout(2).random_combiner(np.random.default_rng(2))
    values = []
    for n_t in (2, 4, 8, 16):
        layout = sc.with_layout(n_t).layout
        start = _lift(c, layout)
        if values:
            # a smaller TTD bank is a feasible point of the larger one
            assert ad.design_objective_value(start, obj) == pytest.approx(values[-1], rel=1e-9)
        c = ad.alternate_design(start, obj, outer_iters=4)
        values.append(ad.design_objective_value(c, obj))
    assert (np.diff(values) >= -1e-9 * values[-1]).all()
