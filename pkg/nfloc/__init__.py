#!/usr/bin/env python
# file __init__.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Nfloc Module

Near-field wideband multi-user localization with TTD-based hybrid arrays:
channel synthesis, maximum likelihood localization, Cramer-Rao bounds,
analog combiner design and Monte Carlo experiments.

"""

__version__ = '0.1.0'

__all__ = ['utils', 'errors', 'geometry', 'channel', 'hybrid_array', 'estimator', 'fisher',
           'analog_design', 'helpers', 'joint', 'experiments', 'io']

from . import (utils, errors, geometry, channel, hybrid_array, estimator, fisher,
               analog_design, helpers, joint, experiments, io)
