#!/usr/bin/env python
# file channel.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Wideband near-field channel sub-package

Synthesis of the OFDM near-field channel: subcarrier grid, path gains,
spherical wavefront phases, steering matrices with their derivatives, pilot
symbols and noisy antenna-domain snapshots.

Stacks over subcarriers lead with the subcarrier axis, e.g. the steering
matrices of `K` users have shape ``(M, N, K)``.
"""

import logging
from dataclasses import dataclass
import numpy as np

from .geometry import SPEED_OF_LIGHT, element_distance, check_polar
from .errors import InvalidBand, ZeroSignal, DimensionMismatch
from .utils import db_to_linear

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class BandPlan:
    """OFDM band plan.

    Parameters
    ----------
    f_c : float
        Carrier frequency in Hz.
    bandwidth : float
        Bandwidth `B` in Hz.
    frequencies : ndarray (M,)
        Subcarrier frequencies in Hz, strictly increasing.
    """
    f_c: float
    bandwidth: float
    frequencies: np.ndarray

    @property
    def n_subcarriers(self):
        return self.frequencies.size

@dataclass(frozen=True)
class SteeringSet:
    """Steering matrices of the users and their derivatives.

    Parameters
    ----------
    S : ndarray (M, N, K)
        Steering matrices `S_m^d`.
    D : ndarray (M, N, K) or None
        Derivatives with respect to the distances.
    B : ndarray (M, N, K) or None
        Derivatives with respect to the angles.
    """
    S: np.ndarray
    D: np.ndarray = None
    B: np.ndarray = None

    @property
    def n_users(self):
        return self.S.shape[-1]

@dataclass(frozen=True)
class NoiseModel:
    """Additive white Gaussian noise.

    Parameters
    ----------
    variances : ndarray (M,)
        Noise variance per subcarrier. Zeros describe a noiseless setting.
    snr_db : float or None
        SNR the variances were derived from, if any.
    """
    variances: np.ndarray
    snr_db: float = None

    @property
    def noiseless(self):
        return not np.any(self.variances > 0)

    def weights(self):
        """Per-subcarrier weights ``1 / sigma_m^2``.

        Unit weights are returned for a noiseless model.
        """
        if self.noiseless or np.any(self.variances <= 0):
            return np.ones_like(self.variances)
        return 1. / self.variances

@dataclass(frozen=True)
class AntennaSnapshot:
    """Antenna-domain samples.

    Parameters
    ----------
    x : ndarray (M, L, N)
        Received samples per subcarrier and time sample.
    symbols : ndarray (L, K)
        Pilot symbols, shared by all the subcarriers of a time sample.
    """
    x: np.ndarray
    symbols: np.ndarray

    @property
    def n_samples(self):
        return self.x.shape[1]

def subcarrier_frequencies(f_c, bandwidth, n_subcarriers):
    """Uniform subcarrier grid over the band.

    The grid includes the band edges: ``f_m = f_c - B/2 + m B / (M - 1)``
    for ``m = 0 .. M-1``, a single subcarrier sits on the carrier.

    Parameters
    ----------
    f_c : float
        Carrier frequency in Hz.
    bandwidth : float
        Bandwidth in Hz.
    n_subcarriers : int
        Number of subcarriers `M`.

    Returns
    -------
    band : BandPlan
        The band plan.

    Raises
    ------
    InvalidBand
        If the bandwidth is negative or the band reaches 0 Hz.
    """
    if bandwidth < 0 or f_c <= bandwidth / 2:
        msg = 'Invalid band, f_c = {} Hz, B = {} Hz.'.format(f_c, bandwidth)
        log.error(msg)
        raise InvalidBand(msg)
    if n_subcarriers < 1:
        msg = 'At least one subcarrier is required, M = {}.'.format(n_subcarriers)
        log.error(msg)
        raise InvalidBand(msg)

    if n_subcarriers == 1:
        freqs = np.array([float(f_c)])
    else:
        freqs = f_c - bandwidth / 2 + np.arange(n_subcarriers) * bandwidth / (n_subcarriers - 1)

    if n_subcarriers > 1 and bandwidth == 0:
        msg = 'Zero bandwidth with {} subcarriers, frequencies are not distinct.'.format(n_subcarriers)
        log.error(msg)
        raise InvalidBand(msg)

    return BandPlan(float(f_c), float(bandwidth), freqs)

def path_gain(f, d):
    """Free-space path gain ``c / (4 pi f d)``."""
    return SPEED_OF_LIGHT / (4 * np.pi * np.asarray(f) * np.asarray(d))

def wave_phase(f, d_kn):
    """Propagation phase ``2 pi f d_kn / c`` in radians, not wrapped."""
    return 2 * np.pi * np.asarray(f) * np.asarray(d_kn) / SPEED_OF_LIGHT

def steering_set(band, eta, g, derivatives=True):
    """Steering matrices of users and their derivatives.

    Parameters
    ----------
    band : BandPlan
        The subcarriers.
    eta : array (K, 2)
        Polar positions of the users.
    g : ArrayGeometry
        The array.
    derivatives : bool
        Compute the derivatives `D_m` and `B_m`. Default is True.

    Returns
    -------
    steering : SteeringSet
        With ``S[m, n, k] = alpha_mk exp(-j v_mkn)`` and the derivatives::

            D[m, n, k] = -exp(-j v) (c / (4 pi f_m d_k^2)
                                     + j (d_k - r_n cos(theta_k)) / (2 d_k d_kn))
            B[m, n, k] = -exp(-j v) j r_n sin(theta_k) / (2 d_kn)
    """
    eta = check_polar(eta)
    f = band.frequencies[:, None, None]
    d, theta = eta[:, 0], eta[:, 1]

    d_kn = element_distance(eta, g).T[None]           # (1, N, K)
    phasor = np.exp(-1j * wave_phase(f, d_kn))        # (M, N, K)
    alpha = path_gain(f, d[None, None])               # (M, 1, K)
    S = alpha * phasor

    if not derivatives:
        return SteeringSet(S)

    r = g.offsets[None, :, None]
    D = -phasor * (alpha / d + 1j * (d - r * np.cos(theta)) / (2 * d * d_kn))
    B = -phasor * 1j * r * np.sin(theta) / (2 * d_kn)

    return SteeringSet(S, D, B)

def noise_variance_from_snr(snr_db, x, n_antennas):
    """Noise variance producing a given SNR at the antennas.

    Parameters
    ----------
    snr_db : float
        SNR ``10 log10(||x||^2 / (N sigma^2))`` in dB.
    x : array (N,)
        Noiseless antenna vector.
    n_antennas : int
        Number of antennas `N`.

    Returns
    -------
    sigma2 : float
        Noise variance.

    Raises
    ------
    ZeroSignal
        If `x` is zero.
    """
    power = np.vdot(x, x).real
    if power <= 0:
        msg = 'Zero reference signal, the SNR is undefined.'
        log.error(msg)
        raise ZeroSignal(msg)
    return power / (n_antennas * db_to_linear(snr_db))

def noise_model_from_snr(steering, snr_db):
    """Noise model of the users for a given antenna SNR.

    The reference signal of subcarrier `m` is the noiseless snapshot with
    all the symbols set to one, i.e. ``x_m = S_m 1``.

    Parameters
    ----------
    steering : SteeringSet
        Steering matrices of the users.
    snr_db : float
        SNR in dB, `inf` for a noiseless model.

    Returns
    -------
    noise : NoiseModel
        Per-subcarrier noise variances.
    """
    n_antennas = steering.S.shape[1]
    reference = steering.S.sum(axis=-1)
    if np.isposinf(snr_db):
        return NoiseModel(np.zeros(reference.shape[0]), float(snr_db))
    variances = np.array([noise_variance_from_snr(snr_db, x_m, n_antennas)
                          for x_m in reference])
    return NoiseModel(variances, float(snr_db))

def pilot_symbols(n_samples, n_users, rng):
    """Unit-modulus pilot symbols with uniform random phase, shape (L, K)."""
    return np.exp(2j * np.pi * rng.random((n_samples, n_users)))

def synthesize_snapshots(steering, noise, n_samples, seed=None):
    """Draw noisy antenna-domain snapshots.

    Parameters
    ----------
    steering : SteeringSet
        Steering matrices of the users.
    noise : NoiseModel
        Noise variances per subcarrier.
    n_samples : int
        Number of time samples `L`.
    seed : int, SeedSequence or Generator, optional
        Seed of the draw. Identical seeds give identical snapshots.

    Returns
    -------
    snapshot : AntennaSnapshot
        ``x_m(l) = S_m c(l) + z_m(l)``.
    """
    if n_samples < 1:
        msg = 'At least one sample is required, L = {}.'.format(n_samples)
        log.error(msg)
        raise ValueError(msg)
    n_sub, n_antennas, n_users = steering.S.shape
    if noise.variances.shape != (n_sub,):
        msg = 'Noise model has {} variances for {} subcarriers.'.format(noise.variances.size, n_sub)
        log.error(msg)
        raise DimensionMismatch(msg)

    rng = np.random.default_rng(seed)
    symbols = pilot_symbols(n_samples, n_users, rng)

    x = np.einsum('mnk,lk->mln', steering.S, symbols)
    scale = np.sqrt(noise.variances / 2)[:, None, None]
    shape = (n_sub, n_samples, n_antennas)
    x = x + scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    return AntennaSnapshot(x, symbols)
