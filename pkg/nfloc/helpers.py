#!/usr/bin/env python
# file helpers.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""High-level helper functions.

This module gathers the pieces of a localization scenario (band, array,
combiner layout, users and SNR) in a single :class:`Scenario` value and
offers the pipelines built on them: noisy observation through a combiner,
combiner design at assumed positions and CRB evaluation.
"""

import logging
from dataclasses import dataclass, field, replace
import numpy as np

from .analog_design import alternate_design, build_design_objective, DelaySearchConfig
from .channel import steering_set, noise_model_from_snr, synthesize_snapshots, subcarrier_frequencies
from .estimator import SearchGrid
from .fisher import fim_polar, crb
from .geometry import as_positions, check_polar
from .hybrid_array import combine, random_combiner, CombinerLayout

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class DesignConfig:
    """Parameters of the alternating combiner design.

    Parameters
    ----------
    outer_iters : int
        Maximal number of phase/delay alternations.
    tol : float
        Relative objective change stopping the alternation.
    phase_iters : int
        RCG steps per phase optimization.
    phase_tol : float
        RCG stopping tolerance.
    delay : DelaySearchConfig
        Delay grid search parameters.
    exact : bool
        Use the exact trace objective.
    """
    outer_iters: int = 10
    tol: float = 1e-6
    phase_iters: int = 200
    phase_tol: float = 1e-8
    delay: DelaySearchConfig = field(default_factory=DelaySearchConfig)
    exact: bool = False

@dataclass(frozen=True)
class Scenario:
    """Localization scenario.

    Parameters
    ----------
    band : BandPlan
        The subcarriers.
    geometry : ArrayGeometry
        The array.
    layout : CombinerLayout
        Partition of the array between RF chains, TTDs and phase shifters.
    t_max : float
        Maximum TTD delay in seconds.
    users : ndarray (K, 2)
        True polar positions of the users.
    snr_db : float
        Antenna SNR in dB.
    n_samples : int
        Pilot samples per observation `L`.
    grid : SearchGrid
        Search grid of the estimator.
    """
    band: object
    geometry: object
    layout: CombinerLayout
    t_max: float
    users: np.ndarray
    snr_db: float = -5.
    n_samples: int = 256
    grid: SearchGrid = field(default_factory=SearchGrid)

    def __post_init__(self):
        object.__setattr__(self, 'users', check_polar(self.users))
        if self.layout.n_antennas != self.geometry.n_antennas:
            msg = 'Layout of {} antennas for an array of {}.'.format(self.layout.n_antennas, self.geometry.n_antennas)
            log.error(msg)
            raise ValueError(msg)

    @property
    def n_users(self):
        return self.users.shape[0]

    def with_snr(self, snr_db):
        return replace(self, snr_db=float(snr_db))

    def with_band(self, bandwidth=None, n_subcarriers=None):
        """Scenario on another band around the same carrier."""
        bandwidth = self.band.bandwidth if bandwidth is None else bandwidth
        n_subcarriers = self.band.n_subcarriers if n_subcarriers is None else n_subcarriers
        return replace(self, band=subcarrier_frequencies(self.band.f_c, bandwidth, n_subcarriers))

    def with_layout(self, n_ttd):
        """Scenario with `n_ttd` TTDs per RF chain, the phase shifters adjusted."""
        return replace(self, layout=CombinerLayout.from_antennas(self.geometry.n_antennas, self.layout.n_rf, n_ttd))

    def steering(self, eta=None, derivatives=True):
        """Steering set at `eta`, the true positions if None."""
        eta = self.users if eta is None else as_positions(eta)
        return steering_set(self.band, eta, self.geometry, derivatives)

    def noise(self, snr_db=None):
        """Noise model of the true users at `snr_db` (the scenario SNR if None)."""
        snr_db = self.snr_db if snr_db is None else snr_db
        return noise_model_from_snr(self.steering(derivatives=False), snr_db)

    def random_combiner(self, rng):
        return random_combiner(self.layout, self.t_max, rng)

    def observe(self, combiner, seed=None, noise=None):
        """Draw pilot snapshots of the true users through `combiner`.

        Parameters
        ----------
        combiner : AnalogCombiner
            The combiner.
        seed : int or SeedSequence, optional
            Seed of the snapshots.
        noise : NoiseModel, optional
            Noise model, the scenario noise if None.

        Returns
        -------
        batch : ObservationBatch
            Combined samples and covariances.
        """
        noise = self.noise() if noise is None else noise
        x = synthesize_snapshots(self.steering(derivatives=False), noise, self.n_samples, seed)
        return combine(combiner, x, self.band.frequencies)

    def design_objective(self, eta=None, exact=False):
        """Design objective at `eta`, weighted by the scenario noise."""
        eta = self.users if eta is None else as_positions(eta)
        return build_design_objective(self.steering(eta), self.band, self.noise(), exact, eta)

    def design(self, eta, start, cfg=None):
        """Design a combiner for the positions `eta` from `start`.

        Parameters
        ----------
        eta : array (K, 2)
            Assumed positions.
        start : AnalogCombiner
            Starting combiner.
        cfg : DesignConfig, optional
            Design parameters.

        Returns
        -------
        combiner : AnalogCombiner
            The designed combiner.
        """
        cfg = DesignConfig() if cfg is None else cfg
        obj = self.design_objective(eta, cfg.exact)
        return alternate_design(start, obj, cfg.outer_iters, cfg.tol, cfg.phase_iters, cfg.phase_tol, cfg.delay)

    def crb(self, combiner, snr_db=None):
        """Position error bound of the true users through `combiner`, in meters."""
        fim = fim_polar(self.steering(), combiner, self.band, self.noise(snr_db))
        return crb(fim, self.users).crb
