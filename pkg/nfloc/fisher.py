#!/usr/bin/env python
# file fisher.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Fisher information and Cramer-Rao bounds.

Fisher information matrix (FIM) of the polar parameters ``[d_1..d_K,
theta_1..theta_K]`` seen through an analog combiner, its conversion to the
Cartesian positions ``[x_1..x_K, y_1..y_K]`` and the position error bound
``sqrt(tr(F_E^-1))`` in meters.

The noise of the combined samples of subcarrier `m` has covariance
``sigma_m^2 N_t N_s I``, the FIM of a snapshot is::

    F = 2 / (N_t N_s) sum_m 1 / sigma_m^2 Re{G_m^H G_m},  G_m = Q_m [D_m C, B_m C]

with ``C = diag(c)`` the pilot symbols, replaced by the identity in averaged
mode.
"""

import logging
from dataclasses import dataclass
import numpy as np
import humanize

from .channel import steering_set, path_gain
from .errors import OriginDegenerate, SingularFim
from .geometry import as_positions, cartesian_to_polar
from .hybrid_array import combiner_matrices
from .utils import db_to_linear, get_grid, cell_centers

log = logging.getLogger(__name__)

COND_LIMIT = 1e12

@dataclass(frozen=True)
class FimPolar:
    """Polar Fisher information matrix.

    Parameters
    ----------
    F : ndarray (2K, 2K)
        Real symmetric FIM, ordered ``[d_1..d_K, theta_1..theta_K]``.
    mode : str
        ``'averaged'`` or ``'instantaneous'``.
    """
    F: np.ndarray
    mode: str = 'averaged'

    @property
    def n_users(self):
        return self.F.shape[0] // 2

    @property
    def dd(self):
        k = self.n_users
        return self.F[:k, :k]

    @property
    def dtheta(self):
        k = self.n_users
        return self.F[:k, k:]

    @property
    def thetad(self):
        k = self.n_users
        return self.F[k:, :k]

    @property
    def thetatheta(self):
        k = self.n_users
        return self.F[k:, k:]

@dataclass(frozen=True)
class CrbReport:
    """Position error bound.

    Parameters
    ----------
    F_E : ndarray (2K, 2K)
        Cartesian FIM ordered ``[x_1..x_K, y_1..y_K]``.
    crb : float
        ``sqrt(tr(F_E^-1))`` in meters, `inf` if `F_E` is singular.
    per_user : ndarray (K,)
        Per-user bounds in meters.
    singular : bool
        True if the condition number of `F_E` exceeds the limit.
    """
    F_E: np.ndarray
    crb: float
    per_user: np.ndarray
    singular: bool = False

def fim_polar(steering, combiner, band, noise, symbols=None, n_samples=1):
    """Fisher information matrix of the polar user positions.

    Parameters
    ----------
    steering : SteeringSet
        Steering matrices with their derivatives at the evaluated positions.
    combiner : AnalogCombiner
        The analog combiner.
    band : BandPlan
        The subcarriers.
    noise : NoiseModel
        Noise variances, a noiseless model uses unit weights.
    symbols : array (K,), optional
        Pilot symbols of an instantaneous FIM. If None, the averaged FIM
        (unit symbols) is returned.
    n_samples : int
        Snapshot multiplier of the bound. Default is 1.

    Returns
    -------
    fim : FimPolar
        The FIM.
    """
    if steering.D is None or steering.B is None:
        msg = 'The FIM needs the steering derivatives.'
        log.error(msg)
        raise ValueError(msg)

    Q = combiner_matrices(combiner, band.frequencies)
    n_users = steering.n_users
    c = np.ones(n_users) if symbols is None else np.asarray(symbols).reshape(n_users)

    G = np.concatenate((np.matmul(Q, steering.D * c), np.matmul(Q, steering.B * c)), axis=-1)
    gram = np.einsum('mik,mil->mkl', G.conj(), G).real
    w = noise.weights()
    F = 2. * n_samples / combiner.layout.gain * np.einsum('m,mkl->kl', w, gram)
    F = (F + F.T) / 2

    return FimPolar(F, 'averaged' if symbols is None else 'instantaneous')

def jacobian_polar_to_cartesian(eta):
    """Jacobian of the polar parameters with respect to the Cartesian positions.

    Parameters
    ----------
    eta : array (K, 2)
        Polar positions.

    Returns
    -------
    J : ndarray (2K, 2K)
        ``J[i, j] = d eta_j / d p_i`` with ``p = [x..., y...]`` and ``eta =
        [d..., theta...]``, so that ``F_E = J F J^T``. The block of a user is::

            [[cos(theta), -sin(theta) / d],
             [sin(theta),  cos(theta) / d]]

    Raises
    ------
    OriginDegenerate
        If a distance is zero.
    """
    eta = as_positions(eta)
    d, theta = eta[:, 0], eta[:, 1]
    if (d == 0).any():
        msg = 'Jacobian undefined at the array reference point.'
        log.error(msg)
        raise OriginDegenerate(msg)

    k = eta.shape[0]
    idx = np.arange(k)
    J = np.zeros((2 * k, 2 * k))
    J[idx, idx] = np.cos(theta)
    J[idx, k + idx] = -np.sin(theta) / d
    J[k + idx, idx] = np.sin(theta)
    J[k + idx, k + idx] = np.cos(theta) / d
    return J

def _position_jacobian(eta):
    """Jacobian ``d p / d eta`` (rows p, columns eta)."""
    eta = as_positions(eta)
    d, theta = eta[:, 0], eta[:, 1]
    k = eta.shape[0]
    idx = np.arange(k)
    P = np.zeros((2 * k, 2 * k))
    P[idx, idx] = np.cos(theta)
    P[idx, k + idx] = -d * np.sin(theta)
    P[k + idx, idx] = np.sin(theta)
    P[k + idx, k + idx] = d * np.cos(theta)
    return P

def _singular(F, cond_limit):
    if not np.all(np.isfinite(F)):
        return True
    return not np.linalg.cond(F) <= cond_limit

def crb(fim, eta, cond_limit=COND_LIMIT, raise_singular=False):
    """Cartesian position error bound.

    Parameters
    ----------
    fim : FimPolar
        Polar FIM at `eta`.
    eta : array (K, 2)
        Polar positions.
    cond_limit : float
        Condition number above which `F_E` is declared singular.
    raise_singular : bool
        Raise instead of reporting an infinite bound. Default is False.

    Returns
    -------
    report : CrbReport
        The bound, `inf` sentinels if `F_E` is singular.

    Raises
    ------
    SingularFim
        If `F_E` is singular and `raise_singular` is set.
    """
    J = jacobian_polar_to_cartesian(eta)
    F_E = J @ fim.F @ J.T
    k = fim.n_users

    if _singular(F_E, cond_limit):
        msg = 'Singular Cartesian FIM, the CRB is unbounded.'
        if raise_singular:
            log.error(msg)
            raise SingularFim(msg)
        log.warning(msg)
        return CrbReport(F_E, np.inf, np.full(k, np.inf), True)

    C = np.linalg.inv(F_E)
    var = np.diag(C)
    per_user = np.sqrt(np.maximum(var[:k] + var[k:], 0.))
    return CrbReport(F_E, float(np.sqrt(max(np.trace(C), 0.))), per_user)

def cartesian_crb_matrix(fim, eta):
    """Cartesian CRB matrix ``(dp/deta) F^-1 (dp/deta)^T``.

    Equal to ``(J F J^T)^-1`` of :func:`crb` when `F` is invertible.
    """
    P = _position_jacobian(eta)
    return P @ np.linalg.inv(fim.F) @ P.T

@dataclass(frozen=True)
class CrbMap:
    """CRB heatmap.

    Parameters
    ----------
    grid : list of ndarray
        Cell edges along `x` and `y`.
    crb : ndarray (n_x, n_y)
        Bound of a user at each cell center, `nan` for cells behind the
        array and `inf` for singular cells.
    """
    grid: list
    crb: np.ndarray

    @property
    def shape(self):
        return self.crb.shape

    def centers(self):
        return cell_centers(self.grid)

    def to_rows(self):
        """Rows ``(x, y, crb)``, `x` major."""
        cx, cy = self.centers()
        xx, yy = np.meshgrid(cx, cy, indexing='ij')
        return list(zip(xx.ravel(), yy.ravel(), self.crb.ravel()))

def heatmap_insight(grid, band, g, chunk=256, mem_limit=None):
    """Log the size and the predicted memory usage of a heatmap evaluation.

    Parameters
    ----------
    grid : list of ndarray
        Cell edges of the heatmap.
    band : BandPlan
        The subcarriers.
    g : ArrayGeometry
        The array.
    chunk : int
        Cells evaluated at once.
    mem_limit : number, optional
        Maximal memory usage in bytes. A MemoryError is raised if the
        prediction exceeds it.

    Returns
    -------
    mem_usage : int
        Predicted peak memory usage in bytes.
    """
    n_cells = int(np.prod([x.size - 1 for x in grid]))
    # S, D and B of a chunk of cells, complex128
    mem_usage = 3 * 16 * band.n_subcarriers * g.n_antennas * min(chunk, n_cells) + 8 * n_cells

    lines = ['--- HEATMAP INSIGHT ---',
             'Grid shape:     \t{}'.format([x.size - 1 for x in grid]),
             'Number of cells:\t{}'.format(humanize.intword(n_cells)),
             'Predicted RAM usage:\t{}'.format(humanize.naturalsize(mem_usage, binary=True)),
             'Max allowed RAM usage:\t{}'.format(humanize.naturalsize(mem_limit, binary=True) if mem_limit else 'Not set'),
             '-----------------------']
    for l in lines:
        log.info(l)

    if mem_limit and mem_usage > mem_limit:
        msg = 'The memory requirement is higher than maximum authorized memory usage ({} needed).'.format(
            humanize.naturalsize(mem_usage, binary=True))
        log.error(msg)
        raise MemoryError(msg)

    return mem_usage

def _cell_crb(eta, combiner, band, g, snr_db):
    """Single user CRB of many cells at once, eta (G, 2)."""
    st = steering_set(band, eta, g)
    Q = combiner_matrices(combiner, band.frequencies)
    QD = np.matmul(Q, st.D)
    QB = np.matmul(Q, st.B)

    if np.isposinf(snr_db):
        w = np.ones((band.n_subcarriers, eta.shape[0]))
    else:
        # sigma_m^2 = alpha_m^2 / snr for a single user
        w = db_to_linear(snr_db) / path_gain(band.frequencies[:, None], eta[None, :, 0]) ** 2
    scale = 2. / combiner.layout.gain

    F = np.empty((eta.shape[0], 2, 2))
    F[:, 0, 0] = scale * np.einsum('mg,mig,mig->g', w, QD.conj(), QD).real
    F[:, 1, 1] = scale * np.einsum('mg,mig,mig->g', w, QB.conj(), QB).real
    F[:, 0, 1] = F[:, 1, 0] = scale * np.einsum('mg,mig,mig->g', w, QD.conj(), QB).real

    d, theta = eta[:, 0], eta[:, 1]
    J = np.empty_like(F)
    J[:, 0, 0] = np.cos(theta)
    J[:, 0, 1] = -np.sin(theta) / d
    J[:, 1, 0] = np.sin(theta)
    J[:, 1, 1] = np.cos(theta) / d
    F_E = J @ F @ J.transpose(0, 2, 1)

    out = np.full(eta.shape[0], np.inf)
    finite = np.isfinite(F_E).all(axis=(1, 2))
    ok = np.zeros_like(finite)
    if finite.any():
        ok[finite] = np.linalg.cond(F_E[finite]) <= COND_LIMIT
    if ok.any():
        C = np.linalg.inv(F_E[ok])
        out[ok] = np.sqrt(np.maximum(C[:, 0, 0] + C[:, 1, 1], 0.))
    return out

def crb_heatmap(area, resolution, combiner, band, g, snr_db, chunk=256, mem_limit=None):
    """CRB of a single user swept over a rectangular area.

    Parameters
    ----------
    area : array (2, 2)
        Lower and upper corners ``[[xmin, ymin], [xmax, ymax]]`` in meters.
    resolution : float
        Cell size in meters.
    combiner : AnalogCombiner
        Fixed combiner, typically focused on a designated point.
    band : BandPlan
        The subcarriers.
    g : ArrayGeometry
        The array.
    snr_db : float
        Antenna SNR of the user in every cell.
    chunk : int
        Cells evaluated at once.
    mem_limit : number, optional
        Memory limit of the evaluation, see :func:`heatmap_insight`.

    Returns
    -------
    heatmap : CrbMap
        Per-cell bound at the cell centers.
    """
    grid = get_grid(area, resolution)
    heatmap_insight(grid, band, g, chunk, mem_limit)

    cx, cy = cell_centers(grid)
    xx, yy = np.meshgrid(cx, cy, indexing='ij')
    points = np.stack((xx.ravel(), yy.ravel()), axis=-1)

    values = np.full(points.shape[0], np.nan)
    valid = np.flatnonzero(points[:, 1] > 0)
    if valid.size:
        eta = cartesian_to_polar(points[valid])
        for start in range(0, valid.size, chunk):
            sl = slice(start, start + chunk)
            values[valid[sl]] = _cell_crb(eta[sl], combiner, band, g, snr_db)

    n_singular = int(np.isinf(values).sum())
    if n_singular:
        log.warning('{} heatmap cells with singular FIM.'.format(n_singular))
    log.info('CRB heatmap of {} cells done.'.format(humanize.intcomma(values.size)))

    return CrbMap(grid, values.reshape(xx.shape))
