#!/usr/bin/env python
# file utils.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""General utils functions.

This module contains the small helpers shared by the simulator: unit
conversions, phase wrapping, rectangular grids for heatmaps and the seed
splitting rule of the Monte Carlo experiments.

Notes
-----

Everything is well tested there.

"""

import logging
import zlib
import numpy as np

log = logging.getLogger(__name__)

def db_to_linear(value_db):
    """Convert a power ratio from decibels to linear scale.

    Parameters
    ----------
    value_db : scalar or ndarray
        Power ratio in dB. `inf` is accepted (noiseless setting).

    Returns
    -------
    value : scalar or ndarray
        Linear power ratio.
    """
    return np.power(10., np.asarray(value_db, dtype=float) / 10.)

def linear_to_db(value):
    """Convert a linear power ratio to decibels.

    See Also
    --------
    db_to_linear : Inverse conversion.
    """
    return 10. * np.log10(value)

def wrap_phase(phase):
    """Return the canonical representative of phases in [0, 2pi)."""
    wrapped = np.mod(phase, 2 * np.pi)
    # mod can round up to exactly 2pi for tiny negative inputs
    return np.where(wrapped >= 2 * np.pi, 0., wrapped)

def bbox(data):
    """Returns bounding box of data.

    Parameters
    ----------
    data : ndarray (n, 2)
        Planar points of shape (n, 2), i.e. (x, y).

    Returns
    -------
    bbox : ndarray
        Lower and upper points describing the bounding box such as::

        [[xmin, ymin],
         [xmax, ymax]]
    """
    return np.array((np.min(data, axis=0), np.max(data, axis=0)))

def _ui_step(step, spatial):
    '''Cell size management (a number or one value per axis).
    '''
    dims = spatial.shape[-1]
    steps = list(step) if np.ndim(step) else [step] * dims
    if len(steps) != dims:
        msg = 'Expected {} cell size(s), got \'{}\'.'.format(dims, step)
        log.error(msg)
        raise ValueError(msg)

    if any(s is None or not s > 0 for s in steps):
        msg = 'Cell sizes must be positive, step = \'{}\'.'.format(step)
        log.error(msg)
        raise ValueError(msg)
    return steps

def get_grid(area, step):
    '''Return grid bins of a rectangular area.

    Parameters
    ----------
    area : array (2, 2)
        Lower and upper corners of the area such as ``[[xmin, ymin], [xmax,
        ymax]]``, in meters.
    step : number or array or tuple
        The cell size, a number for square cells or a pair for
        anisotropic cells.

    Returns
    -------
    grid : list of ndarray
        Bin edges of axis `x` and `y`.

    Notes
    -----
    The number of cells along an axis is the rounded ratio of the axis
    extent by the step, so that a 20 m side with 0.1 m cells gives exactly
    200 cells despite float representation of 0.1.
    '''
    area = np.array(area, dtype=float)
    bb = bbox(area)
    step = _ui_step(step, area)

    grid = []
    for a_min, a_max, a_s in zip(bb[0], bb[1], step):
        bins = int(np.round((a_max - a_min) / a_s))
        if bins < 1:
            msg = 'Area extent smaller than the step, extent = {}, step = {}.'.format(a_max - a_min, a_s)
            log.error(msg)
            raise ValueError(msg)
        grid += [np.linspace(a_min, a_min + bins * a_s, bins + 1)]

    return grid

def cell_centers(grid):
    """Return the cell centers of a grid.

    Parameters
    ----------
    grid : list of ndarray
        Bin edges as returned by :func:`get_grid`.

    Returns
    -------
    centers : list of ndarray
        Centers of the cells along each axis.
    """
    return [(edges[:-1] + edges[1:]) / 2 for edges in grid]

def derive_seed(master, tag, *indices):
    """Derive the seed of a Monte Carlo job.

    The splitting rule is ``SeedSequence([master, crc32(tag), *indices])``
    so that any trial of any experiment can be replayed in isolation.

    Parameters
    ----------
    master : int
        Master seed of the run.
    tag : str
        Experiment or scheme tag.
    *indices : int
        Sweep index, trial index...

    Returns
    -------
    seed : numpy.random.SeedSequence
        Seed usable with :func:`numpy.random.default_rng`.
    """
    entropy = [int(master), zlib.crc32(tag.encode('utf-8'))]
    entropy += [int(i) for i in indices]
    return np.random.SeedSequence(entropy)
