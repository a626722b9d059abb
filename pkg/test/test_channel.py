#!/usr/bin/env python
# file test_channel.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Wideband near-field channel tests.

"""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from nfloc import channel
from nfloc.geometry import ArrayGeometry, SPEED_OF_LIGHT
from nfloc.errors import InvalidBand, ZeroSignal, DimensionMismatch, OriginDegenerate

@pytest.mark.parametrize('f_c, bandwidth, m, expected', [
    (300e9, 30e9, 12, (285e9, 315e9)),
    (300e9, 30e9, 1, (300e9, 300e9)),
    (300e9, 30e9, 2, (285e9, 315e9)),
    (300e9, 0, 1, (300e9, 300e9)),
])
def test_subcarrier_frequencies(f_c, bandwidth, m, expected):
    band = channel.subcarrier_frequencies(f_c, bandwidth, m)
    assert band.n_subcarriers == m
    assert band.frequencies[0] == pytest.approx(expected[0])
    assert band.frequencies[-1] == pytest.approx(expected[1])
    assert (np.diff(band.frequencies) > 0).all()

def test_subcarrier_spacing():
    band = channel.subcarrier_frequencies(300e9, 30e9, 12)
    assert np.diff(band.frequencies) == pytest.approx(np.full(11, 30e9 / 11))

@pytest.mark.parametrize('f_c, bandwidth, m', [
    (300e9, -1e9, 4),
    (10e9, 20e9, 4),
    (300e9, 30e9, 0),
    (300e9, 0, 4),
])
def test_subcarrier_frequencies_invalid(f_c, bandwidth, m):
    with pytest.raises(InvalidBand):
        channel.subcarrier_frequencies(f_c, bandwidth, m)

def test_path_gain():
    assert channel.path_gain(3e11, 8) == pytest.approx(9.947e-6, rel=1e-3)
    assert channel.path_gain(3e11, 16) == pytest.approx(channel.path_gain(3e11, 8) / 2)

@given(st.floats(1e9, 1e12))
def test_wave_phase_wavelength(f):
    assert channel.wave_phase(f, SPEED_OF_LIGHT / f) == pytest.approx(2 * np.pi)

@pytest.fixture
def users():
    return np.array([[3., np.pi / 3], [5., 1.2]])

def test_steering_set(small_band, small_geometry, users):
    st_ = channel.steering_set(small_band, users, small_geometry)
    assert st_.S.shape == (4, 32, 2)
    assert st_.D.shape == st_.S.shape and st_.B.shape == st_.S.shape
    assert st_.n_users == 2

    alpha = channel.path_gain(small_band.frequencies[:, None], users[None, :, 0])
    norms = np.sum(np.abs(st_.S) ** 2, axis=1)
    assert np.allclose(norms, 32 * alpha ** 2)

    assert np.allclose(st_.B[:, 0], 0), 'Reference element is angle-insensitive'

def test_steering_set_no_derivatives(small_band, small_geometry, users):
    st_ = channel.steering_set(small_band, users, small_geometry, derivatives=False)
    assert st_.D is None and st_.B is None

def test_steering_set_invalid(small_band, small_geometry):
    with pytest.raises(OriginDegenerate):
        channel.steering_set(small_band, [[0, 1]], small_geometry)

def _central_difference(band, g, eta, axis, h):
    up, down = eta.copy(), eta.copy()
    up[:, axis] += h
    down[:, axis] -= h
    s_up = channel.steering_set(band, up, g, False).S
    s_down = channel.steering_set(band, down, g, False).S
    return (s_up - s_down) / (2 * h)

@pytest.mark.parametrize('eta', [
    [[3., np.pi / 3]],
    [[8., np.pi / 4]],
    [[1.5, 2.5]],
    [[15., .4]],
])
def test_steering_derivatives(small_band, small_geometry, eta):
    eta = np.array(eta)
    st_ = channel.steering_set(small_band, eta, small_geometry)

    fd_d = _central_difference(small_band, small_geometry, eta, 0, 1e-9 * eta[0, 0])
    fd_t = _central_difference(small_band, small_geometry, eta, 1, 1e-7)

    assert np.allclose(fd_d, st_.D, rtol=1e-5, atol=1e-5 * np.abs(st_.D).max())
    assert np.allclose(fd_t, st_.B, rtol=1e-5, atol=1e-5 * np.abs(st_.B).max())

@given(st.floats(1., 20.), st.floats(.2, np.pi - .2))
def test_steering_derivatives_random(d, theta):
    band = channel.subcarrier_frequencies(300e9, 30e9, 3)
    g = ArrayGeometry(64, 5e-4)
    eta = np.array([[d, theta]])
    st_ = channel.steering_set(band, eta, g)

    fd_d = _central_difference(band, g, eta, 0, 1e-9 * d)
    fd_t = _central_difference(band, g, eta, 1, 1e-7)

    assert np.allclose(fd_d, st_.D, rtol=1e-5, atol=1e-5 * np.abs(st_.D).max())
    assert np.allclose(fd_t, st_.B, rtol=1e-5, atol=1e-5 * np.abs(st_.B).max())

@pytest.mark.parametrize('snr_db, power, n, expected', [
    (0, 4., 4, 1.),
    (-10, 4., 4, 10.),
    (10, 16., 16, .1),
])
def test_noise_variance_from_snr(snr_db, power, n, expected):
    x = np.full(n, np.sqrt(power / n), dtype=complex)
    assert channel.noise_variance_from_snr(snr_db, x, n) == pytest.approx(expected)

def test_noise_variance_zero_signal():
    with pytest.raises(ZeroSignal):
        channel.noise_variance_from_snr(0, np.zeros(4), 4)

@given(st.floats(-30, 30))
def test_noise_model_snr(snr_db):
    band = channel.subcarrier_frequencies(300e9, 30e9, 4)
    st_ = channel.steering_set(band, [[3., 1.]], ArrayGeometry(32, 5e-4), False)
    noise = channel.noise_model_from_snr(st_, snr_db)
    power = np.sum(np.abs(st_.S[..., 0]) ** 2, axis=-1)
    snr = power / (32 * noise.variances)
    assert np.allclose(snr, 10 ** (snr_db / 10), rtol=1e-12)
    assert noise.weights() == pytest.approx(1 / noise.variances)

def test_noise_model_noiseless(small_band, small_geometry):
    st_ = channel.steering_set(small_band, [[3., 1.]], small_geometry, False)
    noise = channel.noise_model_from_snr(st_, np.inf)
    assert noise.noiseless
    assert (noise.variances == 0).all()
    assert (noise.weights() == 1).all()

def test_pilot_symbols(rng):
    c = channel.pilot_symbols(100, 3, rng)
    assert c.shape == (100, 3)
    assert np.allclose(np.abs(c), 1)

def test_synthesize_noiseless(small_band, small_geometry):
    st_ = channel.steering_set(small_band, [[3., 1.]], small_geometry, False)
    noise = channel.noise_model_from_snr(st_, np.inf)
    snap = channel.synthesize_snapshots(st_, noise, 5, seed=1)

    assert snap.x.shape == (4, 5, 32)
    assert snap.n_samples == 5
    x_unit = snap.x / snap.symbols[None, :, 0, None]
    assert np.allclose(x_unit, st_.S[:, None, :, 0])

def test_synthesize_shared_symbols(small_band, small_geometry, users):
    st_ = channel.steering_set(small_band, users, small_geometry, False)
    noise = channel.noise_model_from_snr(st_, np.inf)
    snap = channel.synthesize_snapshots(st_, noise, 3, seed=2)
    expected = np.einsum('mnk,lk->mln', st_.S, snap.symbols)
    assert np.allclose(snap.x, expected)

def test_synthesize_deterministic(small_band, small_geometry, users):
    st_ = channel.steering_set(small_band, users, small_geometry, False)
    noise = channel.noise_model_from_snr(st_, 0)
    a = channel.synthesize_snapshots(st_, noise, 8, seed=7)
    b = channel.synthesize_snapshots(st_, noise, 8, seed=7)
    c = channel.synthesize_snapshots(st_, noise, 8, seed=8)
    assert (a.x == b.x).all() and (a.symbols == b.symbols).all()
    assert not np.allclose(a.x, c.x)

def test_synthesize_noise_variance():
    band = channel.subcarrier_frequencies(300e9, 0, 1)
    g = ArrayGeometry(4, 5e-4)
    st_ = channel.steering_set(band, [[3., 1.]], g, False)
    noise = channel.noise_model_from_snr(st_, -3)
    snap = channel.synthesize_snapshots(st_, noise, 100000, seed=0)
    z = snap.x - np.einsum('mnk,lk->mln', st_.S, snap.symbols)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(noise.variances[0], rel=.02)

def test_synthesize_errors(small_band, small_geometry):
    st_ = channel.steering_set(small_band, [[3., 1.]], small_geometry, False)
    with pytest.raises(ValueError):
        channel.synthesize_snapshots(st_, channel.NoiseModel(np.zeros(4)), 0)
    with pytest.raises(DimensionMismatch):
        channel.synthesize_snapshots(st_, channel.NoiseModel(np.zeros(3)), 4)
