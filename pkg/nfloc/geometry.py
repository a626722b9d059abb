#!/usr/bin/env python
# file geometry.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Geometry of the near-field localization scenario.

Coordinate systems, placement of the array elements and user to element
distances of the spherical wavefront model.

The uniform linear array lies on the `x` axis with its reference element at
the origin. The `n`-th element (0-based) sits at ``(r_n, 0)`` with
``r_n = n * spacing``. A user at polar position ``(d, theta)`` sits at
``(d cos(theta), d sin(theta))``, users live in the front half-plane
``0 < theta < pi``.

Positions of `K` users are handled as arrays of shape ``(K, 2)``: columns
``(d, theta)`` in polar coordinates and ``(x, y)`` in Cartesian
coordinates.
"""

import logging
from dataclasses import dataclass
import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import OriginDegenerate, AngleOutOfRange, IndexOutOfRange

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array.

    Parameters
    ----------
    n_antennas : int
        Number of elements `N`.
    spacing : float
        Inter-element spacing in meters.
    """
    n_antennas: int
    spacing: float

    def __post_init__(self):
        if self.n_antennas < 1 or self.spacing <= 0:
            msg = 'Invalid array geometry, N = {}, spacing = {}.'.format(self.n_antennas, self.spacing)
            log.error(msg)
            raise ValueError(msg)

    @property
    def offsets(self):
        """Element offsets `r_n` along the array axis, in meters."""
        return np.arange(self.n_antennas) * self.spacing

    @property
    def aperture(self):
        """Array aperture ``(N - 1) * spacing`` in meters."""
        return (self.n_antennas - 1) * self.spacing

def as_positions(positions):
    """Return positions as a float array of shape (K, 2)."""
    positions = np.array(positions, dtype=float)
    if positions.ndim == 1:
        positions = positions[None]
    if positions.shape[-1] != 2:
        msg = 'Positions must have 2 coordinates, shape = {}.'.format(positions.shape)
        log.error(msg)
        raise ValueError(msg)
    return positions

def check_polar(eta):
    """Validate polar positions.

    Parameters
    ----------
    eta : array (K, 2)
        Polar positions ``(d, theta)``.

    Returns
    -------
    eta : ndarray (K, 2)
        The validated positions.

    Raises
    ------
    OriginDegenerate
        If a distance is not strictly positive.
    AngleOutOfRange
        If an angle is outside ``(0, pi)``.
    """
    eta = as_positions(eta)
    if (eta[..., 0] <= 0).any():
        msg = 'Distances must be strictly positive, d = {}.'.format(eta[..., 0])
        log.error(msg)
        raise OriginDegenerate(msg)
    if ((eta[..., 1] <= 0) | (eta[..., 1] >= np.pi)).any():
        msg = 'Angles must lie in (0, pi), theta = {}.'.format(eta[..., 1])
        log.error(msg)
        raise AngleOutOfRange(msg)
    return eta

def polar_to_cartesian(eta):
    """Convert polar positions to Cartesian positions.

    Parameters
    ----------
    eta : array (..., 2)
        Polar positions ``(d, theta)``.

    Returns
    -------
    p : ndarray (..., 2)
        Cartesian positions ``(x, y) = (d cos(theta), d sin(theta))``.
    """
    eta = np.asarray(eta, dtype=float)
    d, theta = eta[..., 0], eta[..., 1]
    return np.stack((d * np.cos(theta), d * np.sin(theta)), axis=-1)

def cartesian_to_polar(p):
    """Convert Cartesian positions to polar positions.

    Parameters
    ----------
    p : array (..., 2)
        Cartesian positions ``(x, y)``.

    Returns
    -------
    eta : ndarray (..., 2)
        Polar positions ``(d, theta)``.

    Raises
    ------
    OriginDegenerate
        If a position is the origin.
    AngleOutOfRange
        If a position is not in the front half-plane ``y > 0``.
    """
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    d = np.hypot(x, y)
    if (d == 0).any():
        msg = 'Position at the array reference point, angle undefined.'
        log.error(msg)
        raise OriginDegenerate(msg)
    theta = np.arctan2(y, x)
    if ((theta <= 0) | (theta >= np.pi)).any():
        msg = 'Positions behind the array, theta = {}.'.format(theta)
        log.error(msg)
        raise AngleOutOfRange(msg)
    return np.stack((d, theta), axis=-1)

def element_positions(g):
    """Cartesian positions of the array elements, shape (N, 2)."""
    return np.stack((g.offsets, np.zeros(g.n_antennas)), axis=-1)

def element_distance(eta, g, n=None):
    """Distances between users and array elements.

    Parameters
    ----------
    eta : array (..., 2)
        Polar positions ``(d, theta)``.
    g : ArrayGeometry
        The array.
    n : int, optional
        Element index (0-based). If None, the distances to all the elements
        are returned.

    Returns
    -------
    d_kn : ndarray (...) or (..., N)
        ``sqrt(r_n^2 + d^2 - 2 r_n d cos(theta))`` in meters.

    Raises
    ------
    IndexOutOfRange
        If `n` does not name an element of the array.
    """
    eta = np.asarray(eta, dtype=float)
    if n is None:
        r = g.offsets
        d, theta = eta[..., 0, None], eta[..., 1, None]
    else:
        if not 0 <= n < g.n_antennas:
            msg = 'Element index {} out of range [0, {}).'.format(n, g.n_antennas)
            log.error(msg)
            raise IndexOutOfRange(msg)
        r = n * g.spacing
        d, theta = eta[..., 0], eta[..., 1]
    # clip guards the exact-cancellation case of a user sitting on an element
    sq = np.maximum(r ** 2 + d ** 2 - 2 * r * d * np.cos(theta), 0.)
    return np.sqrt(sq)

def fraunhofer_distance(g, f_c):
    """Fraunhofer distance ``2 D^2 / lambda`` of the array.

    Parameters
    ----------
    g : ArrayGeometry
        The array, its aperture is ``D = (N - 1) * spacing``.
    f_c : float
        Carrier frequency in Hz.

    Returns
    -------
    d_f : float
        Near-field boundary in meters.
    """
    wavelength = SPEED_OF_LIGHT / f_c
    return 2 * g.aperture ** 2 / wavelength
