#!/usr/bin/env python
# file joint.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Joint localization and combiner design.

Without knowledge of the user positions, the combiner is designed at the
current estimates and the users are localized again from fresh snapshots
received through the new combiner.
"""

import logging
from dataclasses import dataclass, field
import numpy as np

from .estimator import ap_localize, EstimationResult, GridSteering
from .geometry import polar_to_cartesian, cartesian_to_polar
from .helpers import DesignConfig

log = logging.getLogger(__name__)

__all__ = ['JointConfig', 'EstimationResult', 'joint_localize', 'warm_start_with_prior']

MIN_PRIOR_Y = 1e-2

@dataclass(frozen=True)
class JointConfig:
    """Parameters of the joint localization.

    Parameters
    ----------
    iterations : int
        Design/localization iterations `K_t`.
    init_sweeps : int
        AP sweeps of the initial localization with the random combiner.
    ap_sweeps : int
        AP sweeps per iteration.
    design : DesignConfig
        Combiner design parameters.
    """
    iterations: int = 10
    init_sweeps: int = 5
    ap_sweeps: int = 1
    design: DesignConfig = field(default_factory=DesignConfig)

    def __post_init__(self):
        if self.iterations < 0 or self.init_sweeps < 0 or self.ap_sweeps < 0:
            msg = 'Iteration counts must be nonnegative: {}.'.format(self)
            log.error(msg)
            raise ValueError(msg)

def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)

def joint_localize(scenario, cfg=None, seed=None, initial_combiner=None):
    """Alternate localization and combiner design.

    Parameters
    ----------
    scenario : Scenario
        The scenario, its users are the ground truth of the snapshots.
    cfg : JointConfig, optional
        Parameters, default if None.
    seed : int or SeedSequence, optional
        Seed of the run. Identical seeds give identical trajectories.
    initial_combiner : AnalogCombiner, optional
        Combiner of the initial localization, a random combiner if None.

    Returns
    -------
    result : EstimationResult
        Estimates after the initial localization and after every
        iteration, with the likelihood and the combiner of each entry.

    Notes
    -----
    An iteration designs the combiner at the current estimates, draws new
    snapshots through it and refines the estimates with AP sweeps started
    from the current estimates.
    """
    cfg = JointConfig() if cfg is None else cfg
    children = _seed_sequence(seed).spawn(cfg.iterations + 2)

    combiner = initial_combiner
    if combiner is None:
        combiner = scenario.random_combiner(np.random.default_rng(children[0]))

    def localize(combiner, child, sweeps, initial=None):
        batch = scenario.observe(combiner, child)
        cache = GridSteering(scenario.grid, combiner, scenario.band, scenario.geometry)
        return ap_localize(batch, combiner, scenario.band, scenario.geometry, scenario.n_users,
                           scenario.grid, sweeps, initial, cache)

    first = localize(combiner, children[1], cfg.init_sweeps)
    eta = first.eta
    result = EstimationResult(eta.copy(), [eta.copy()], [first.objectives[-1]], [combiner])
    log.debug('Joint initial estimate: {}.'.format(eta.tolist()))

    for it in range(cfg.iterations):
        combiner = scenario.design(eta, combiner, cfg.design)
        step = localize(combiner, children[it + 2], cfg.ap_sweeps, initial=eta)
        eta = step.eta
        result.trajectory.append(eta.copy())
        result.objectives.append(step.objectives[-1])
        result.combiners.append(combiner)
        log.debug('Joint iteration {}: {}.'.format(it + 1, eta.tolist()))

    result.eta = eta.copy()
    return result

def perturb_positions(eta, std, rng):
    """Gaussian perturbation of polar positions in the Cartesian plane.

    Perturbed positions are kept in front of the array.
    """
    p = polar_to_cartesian(eta) + std * rng.standard_normal(np.shape(eta))
    p[..., 1] = np.maximum(p[..., 1], MIN_PRIOR_Y)
    return cartesian_to_polar(p)

def warm_start_with_prior(scenario, prior_error_std, cfg=None, seed=None):
    """Joint localization started from a combiner designed at a noisy prior.

    Parameters
    ----------
    scenario : Scenario
        The scenario.
    prior_error_std : float
        Standard deviation in meters of the Gaussian error of the prior on
        each Cartesian coordinate.
    cfg : JointConfig, optional
        Parameters, default if None.
    seed : int or SeedSequence, optional
        Seed of the run.

    Returns
    -------
    result : EstimationResult
        As :func:`joint_localize`.
    """
    if prior_error_std < 0:
        msg = 'Negative prior standard deviation {}.'.format(prior_error_std)
        log.error(msg)
        raise ValueError(msg)
    cfg = JointConfig() if cfg is None else cfg
    prior_seed, run_seed = _seed_sequence(seed).spawn(2)

    rng = np.random.default_rng(prior_seed)
    prior = perturb_positions(scenario.users, prior_error_std, rng)
    start = scenario.random_combiner(rng)
    combiner = scenario.design(prior, start, cfg.design)
    log.debug('Prior {} for users {}.'.format(prior.tolist(), scenario.users.tolist()))

    return joint_localize(scenario, cfg, run_seed, initial_combiner=combiner)
