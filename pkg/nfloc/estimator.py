#!/usr/bin/env python
# file estimator.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Maximum likelihood localization.

Localization of `K` users from combined observations by maximizing the
projection likelihood ``sum_m tr(P[Q_m S_m(eta)] R_m)`` with alternating
projection: users are maximized one at a time over a coarse-to-fine polar
grid while the other users are held fixed.
"""

import logging
from dataclasses import dataclass, field
import numpy as np
from scipy.linalg import orth
from scipy.optimize import minimize

from .channel import steering_set
from .geometry import SPEED_OF_LIGHT, as_positions
from .hybrid_array import combiner_matrices

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
# relative gain needed to replace an incumbent estimate
KEEP_MARGIN = 1e-12

@dataclass(frozen=True)
class SearchGrid:
    """Coarse-to-fine search grid of the single user maximizer.

    Parameters
    ----------
    d_range : tuple of float
        Distance search interval in meters.
    theta_range : tuple of float
        Angle search interval in radians, inside (0, pi).
    counts : tuple of int
        Coarse grid sizes ``(G_d, G_theta)``. The angle step must stay below
        the beamwidth of the array, about ``2 / N`` radians.
    levels : int
        Number of refinement levels after the coarse grid.
    shrink : float
        Ratio between the window sizes of two successive levels, the first
        window being the whole search range.
    refine_counts : tuple of int
        Grid sizes of the refinement levels.
    polish : bool
        Finish with a local simplex ascent from the best grid point.
    polish_step : float
        Initial simplex size of the polish, in aperture phase cycles.
    polish_tol : float
        Simplex size stopping the polish, in aperture phase cycles.
    polish_iters : int
        Maximal number of polish iterations.
    chunk : int
        Number of grid points evaluated at once.
    """
    d_range: tuple = (1., 20.)
    theta_range: tuple = (0.1 * np.pi, 0.9 * np.pi)
    counts: tuple = (64, 512)
    levels: int = 3
    shrink: float = .15
    refine_counts: tuple = (17, 17)
    polish: bool = True
    polish_step: float = .05
    polish_tol: float = 1e-7
    polish_iters: int = 400
    chunk: int = 1024

    def __post_init__(self):
        d_lo, d_hi = self.d_range
        t_lo, t_hi = self.theta_range
        problems = []
        if not 0 < d_lo < d_hi:
            problems.append('d_range = {}'.format(self.d_range))
        if not 0 < t_lo < t_hi < np.pi:
            problems.append('theta_range = {}'.format(self.theta_range))
        if min(self.counts) < 2 or min(self.refine_counts) < 2:
            problems.append('counts = {}, refine_counts = {}'.format(self.counts, self.refine_counts))
        if self.levels < 0 or not 0 < self.shrink < 1:
            problems.append('levels = {}, shrink = {}'.format(self.levels, self.shrink))
        if self.polish_step <= 0 or self.polish_tol <= 0 or self.polish_iters < 1:
            problems.append('polish_step = {}, polish_tol = {}, polish_iters = {}'.format(
                self.polish_step, self.polish_tol, self.polish_iters))
        if problems:
            msg = 'Invalid search grid: {}.'.format(', '.join(problems))
            log.error(msg)
            raise ValueError(msg)

    @property
    def widths(self):
        """Extent ``(d_hi - d_lo, theta_hi - theta_lo)`` of the search range."""
        return np.array([self.d_range[1] - self.d_range[0], self.theta_range[1] - self.theta_range[0]])

    @property
    def resolution(self):
        """Cell size ``(delta_d, delta_theta)`` of the last grid level."""
        if self.levels == 0:
            return self.widths / (np.array(self.counts) - 1)
        return self.widths * self.shrink ** self.levels / (np.array(self.refine_counts) - 1)

    def coarse_points(self):
        """Coarse grid points (G_d G_theta, 2), distance-major order."""
        return _mesh(np.linspace(*self.d_range, self.counts[0]),
                     np.linspace(*self.theta_range, self.counts[1]))

    def window(self, center, level):
        """Search window of a refinement level centered on `center`.

        The window is shifted, not cropped, when it overflows the search
        range.
        """
        lo = np.array([self.d_range[0], self.theta_range[0]])
        hi = np.array([self.d_range[1], self.theta_range[1]])
        half = self.widths * self.shrink ** level / 2
        start = np.clip(np.asarray(center) - half, lo, hi - 2 * half)
        return start, start + 2 * half

def _mesh(ds, thetas):
    dd, tt = np.meshgrid(ds, thetas, indexing='ij')
    return np.stack((dd.ravel(), tt.ravel()), axis=-1)

@dataclass
class EstimationResult:
    """Localization output.

    Parameters
    ----------
    eta : ndarray (K, 2)
        Final polar estimates.
    trajectory : list of ndarray (K, 2)
        Estimates after the initialization and after every iteration.
    objectives : list of float
        Likelihood (or design objective) value per trajectory entry.
    combiners : list of AnalogCombiner
        Combiner used for every trajectory entry, when recorded.
    """
    eta: np.ndarray
    trajectory: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    combiners: list = field(default_factory=list)

    @property
    def n_iterations(self):
        return len(self.trajectory) - 1

    def to_rows(self):
        """Trajectory rows ``(iteration, user, d, theta, x, y)``."""
        rows = []
        for it, eta in enumerate(self.trajectory):
            for k, (d, theta) in enumerate(eta):
                rows.append((it, k, d, theta, d * np.cos(theta), d * np.sin(theta)))
        return rows

def projector(X, tol=RANK_TOL):
    """Orthogonal projector on the column space of `X`.

    Parameters
    ----------
    X : array (n, k) or (n,)
        The spanning vectors.
    tol : float
        Relative rank tolerance, singular values below ``tol * s_max`` are
        treated as zero.

    Returns
    -------
    P : ndarray (n, n)
        ``X (X^H X)^-1 X^H`` computed on the numerical column space.
    """
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] == 0:
        return np.zeros((X.shape[0], X.shape[0]), dtype=complex)
    U = orth(X, rcond=tol)
    if U.shape[1] < X.shape[1]:
        log.debug('Rank deficient projection, rank {} for {} columns.'.format(U.shape[1], X.shape[1]))
    return U @ U.conj().T

def combined_steering(eta, combiner, band, g, chunk=1024):
    """Combined steering vectors ``Q_m s_m(eta)``.

    Parameters
    ----------
    eta : array (G, 2)
        Polar positions.
    combiner : AnalogCombiner
        The analog combiner.
    band : BandPlan
        The subcarriers.
    g : ArrayGeometry
        The array.
    chunk : int
        Positions evaluated at once.

    Returns
    -------
    q : ndarray (G, M, N_d)
        Combined steering vectors.
    """
    eta = as_positions(eta)
    Q = combiner_matrices(combiner, band.frequencies)
    q = np.empty((eta.shape[0],) + Q.shape[:2], dtype=complex)
    for start in range(0, eta.shape[0], chunk):
        S = steering_set(band, eta[start:start + chunk], g, derivatives=False).S
        q[start:start + chunk] = np.matmul(Q, S).transpose(2, 0, 1)
    return q

def residual_steering(q, P_prev=None):
    """Residual of combined steering vectors off a projection.

    Parameters
    ----------
    q : array (..., M, N_d)
        Combined steering vectors ``Q_m s_m``.
    P_prev : array (M, N_d, N_d) or None
        Projector on the other users' combined steering, None for no user.

    Returns
    -------
    qbar : ndarray (..., M, N_d)
        ``(I - P_prev) q``.
    """
    if P_prev is None:
        return np.array(q)
    return q - np.einsum('mij,...mj->...mi', P_prev, q)

def _objective(q, P_prev, R, tol=RANK_TOL):
    qbar = residual_steering(q, P_prev)
    Rq = np.einsum('mij,...mj->...mi', R, qbar)
    num = np.einsum('...mi,...mi->...m', qbar.conj(), Rq).real
    den = np.einsum('...mi,...mi->...m', qbar.conj(), qbar).real
    ref = np.einsum('...mi,...mi->...m', q.conj(), q).real
    # a vanishing residual adds nothing, its subcarrier is skipped
    valid = den > tol ** 2 * ref
    ratio = np.divide(num, den, out=np.zeros_like(num), where=valid)
    return ratio.sum(axis=-1)

def single_user_objective(eta_k, P_prev, combiner, band, g, batch):
    """Single user projection objective.

    Parameters
    ----------
    eta_k : array (2,)
        Polar position of the user.
    P_prev : array (M, N_d, N_d) or None
        Projector on the other users' combined steering.
    combiner : AnalogCombiner
        The analog combiner.
    band : BandPlan
        The subcarriers.
    g : ArrayGeometry
        The array.
    batch : ObservationBatch
        Combined observations.

    Returns
    -------
    value : float
        ``sum_m tr(P[qbar_m] R_m)``.
    """
    q = combined_steering(eta_k, combiner, band, g)[0]
    return float(_objective(q, P_prev, batch.R))

def likelihood(eta, combiner, band, g, batch):
    """Projection likelihood ``sum_m tr(P[Q_m S_m(eta)] R_m)`` of all the users."""
    q = combined_steering(eta, combiner, band, g)
    P = _projectors(q)
    return float(np.einsum('mij,mji->', P, batch.R).real)

def _projectors(q_users):
    """Per-subcarrier projectors on the columns of q_users (K, M, N_d)."""
    n_sub, n_rf = q_users.shape[1:]
    if q_users.shape[0] == 0:
        return np.zeros((n_sub, n_rf, n_rf), dtype=complex)
    return np.array([projector(q_users[:, m].T) for m in range(n_sub)])

def _rank_one_projectors(qbar, tol=RANK_TOL, ref=None):
    """Projectors on single residual vectors qbar (M, N_d)."""
    norm2 = np.einsum('mi,mi->m', qbar.conj(), qbar).real
    ref = norm2 if ref is None else ref
    outer = np.einsum('mi,mj->mij', qbar, qbar.conj())
    valid = (norm2 > tol ** 2 * ref)[:, None, None]
    return np.divide(outer, norm2[:, None, None], out=np.zeros_like(outer), where=valid)

class GridSteering:
    """Combined steering of the coarse grid points for a fixed combiner.

    Building it is the costly part of a single user maximization, the cache
    is shared by all the maximizations using the same combiner.
    """
    def __init__(self, grid, combiner, band, g):
        self.points = grid.coarse_points()
        log.debug('Caching combined steering of {} grid points.'.format(self.points.shape[0]))
        self.q = combined_steering(self.points, combiner, band, g, grid.chunk)

def _to_phase(eta, aperture, wavelength):
    """Aperture phase coefficients, in cycles, of a polar position.

    Up to second order the phase of element ``r = t D`` is the polynomial
    ``-a t + b t^2`` with ``a = D cos(theta) / lambda`` and
    ``b = D^2 sin(theta)^2 / (2 lambda d)``. The returned pair
    ``(a - b, b / 4)`` weights the centered monomials ``t`` and
    ``(t - 1/2)^2`` evenly, which turns the range/angle ridge of the
    objective into a round basin.
    """
    d, theta = eta
    a = aperture / wavelength * np.cos(theta)
    b = aperture ** 2 / (2 * wavelength) * np.sin(theta) ** 2 / d
    return np.array([a - b, b / 4])

def _from_phase(x, aperture, wavelength):
    """Polar position of aperture phase coefficients, None outside the half plane."""
    b = 4 * x[1]
    u = (x[0] + b) * wavelength / aperture
    w = 2 * wavelength * b / aperture ** 2
    if not (-1 < u < 1 and w > 0):
        return None
    return np.array([(1 - u ** 2) / w, np.arccos(u)])

def _polish(eta, value, fun, grid, g, band):
    """Local simplex ascent of `fun` from `eta`, in aperture phase coordinates."""
    aperture, wavelength = g.aperture, SPEED_OF_LIGHT / band.f_c
    if aperture == 0:
        return eta, value
    lo = np.array([grid.d_range[0], grid.theta_range[0]])
    hi = np.array([grid.d_range[1], grid.theta_range[1]])

    def cost(x):
        p = _from_phase(x, aperture, wavelength)
        if p is None or (p < lo).any() or (p > hi).any():
            return np.inf
        return -fun(p)

    x0 = _to_phase(eta, aperture, wavelength)
    simplex = x0 + np.vstack((np.zeros(2), grid.polish_step * np.eye(2)))
    res = minimize(cost, x0, method='Nelder-Mead',
                   options=dict(initial_simplex=simplex, xatol=grid.polish_tol,
                                fatol=1e-14 * abs(value), maxiter=grid.polish_iters))
    if np.isfinite(res.fun) and -res.fun > value:
        return _from_phase(res.x, aperture, wavelength), float(-res.fun)
    return eta, value

def maximize_single_user(P_prev, combiner, band, g, batch, grid, cache=None, incumbent=None):
    """Maximize the single user objective on a coarse-to-fine grid.

    The coarse grid is evaluated entirely, then each refinement level
    searches a window centered on the best point found so far, the window
    shrinking by ``grid.shrink`` at every level. The best grid point is
    finally polished by a local simplex ascent.

    Parameters
    ----------
    P_prev : array (M, N_d, N_d) or None
        Projector on the other users' combined steering.
    combiner : AnalogCombiner
        The analog combiner.
    band : BandPlan
        The subcarriers.
    g : ArrayGeometry
        The array.
    batch : ObservationBatch
        Combined observations.
    grid : SearchGrid
        The search grid.
    cache : GridSteering, optional
        Cached coarse grid steering for `combiner`.
    incumbent : array (2,), optional
        Current estimate, kept unless a strictly better point is found.

    Returns
    -------
    eta_k : ndarray (2,)
        Best position found.
    value : float
        Objective value at `eta_k`.

    Notes
    -----
    Ties are broken towards the lowest distance, then the lowest angle.
    """
    if cache is None:
        cache = GridSteering(grid, combiner, band, g)

    def fun(eta_k):
        q = combined_steering(eta_k, combiner, band, g)[0]
        return float(_objective(q, P_prev, batch.R))

    values = _objective(cache.q, P_prev, batch.R)
    best = int(np.argmax(values))
    best_eta, best_value = cache.points[best].copy(), float(values[best])

    for level in range(1, grid.levels + 1):
        lo, hi = grid.window(best_eta, level)
        points = _mesh(np.linspace(lo[0], hi[0], grid.refine_counts[0]),
                       np.linspace(lo[1], hi[1], grid.refine_counts[1]))
        q = combined_steering(points, combiner, band, g, grid.chunk)
        values = _objective(q, P_prev, batch.R)
        i = int(np.argmax(values))
        if values[i] > best_value:
            best_eta, best_value = points[i].copy(), float(values[i])
        log.debug('Level {}: best {} objective {:.6g}.'.format(level, best_eta, best_value))

    if grid.polish:
        best_eta, best_value = _polish(best_eta, best_value, fun, grid, g, band)

    if incumbent is not None:
        incumbent = np.asarray(incumbent, dtype=float)
        value = fun(incumbent)
        if best_value <= value + KEEP_MARGIN * abs(value):
            return incumbent.copy(), value

    return best_eta, best_value

def ap_localize(batch, combiner, band, g, n_users, grid=None, sweeps=5, initial=None, cache=None):
    """Alternating projection localization of `n_users` users.

    Parameters
    ----------
    batch : ObservationBatch
        Combined observations.
    combiner : AnalogCombiner
        The analog combiner used for `batch`.
    band : BandPlan
        The subcarriers.
    g : ArrayGeometry
        The array.
    n_users : int
        Number of users `K`.
    grid : SearchGrid, optional
        Search grid, default grid if None.
    sweeps : int
        Number of refinement sweeps `K_t`.
    initial : array (K, 2), optional
        Starting estimates. If given the incremental initialization pass is
        skipped.
    cache : GridSteering, optional
        Cached coarse grid steering for `combiner`.

    Returns
    -------
    result : EstimationResult
        Final estimates, with the trajectory and the likelihood after the
        initialization and after every sweep.
    """
    if n_users < 1:
        msg = 'At least one user is required, K = {}.'.format(n_users)
        log.error(msg)
        raise ValueError(msg)
    grid = SearchGrid() if grid is None else grid
    cache = GridSteering(grid, combiner, band, g) if cache is None else cache
    n_sub, n_rf = batch.R.shape[:2]

    if initial is None:
        eta = np.zeros((n_users, 2))
        P = np.zeros((n_sub, n_rf, n_rf), dtype=complex)
        for k in range(n_users):
            eta[k], _ = maximize_single_user(P, combiner, band, g, batch, grid, cache)
            q = combined_steering(eta[k], combiner, band, g)[0]
            ref = np.einsum('mi,mi->m', q.conj(), q).real
            P = P + _rank_one_projectors(residual_steering(q, P), ref=ref)
            log.debug('Initial estimate of user {}: {}.'.format(k, eta[k]))
    else:
        eta = as_positions(initial).copy()

    result = EstimationResult(eta.copy(), [eta.copy()], [likelihood(eta, combiner, band, g, batch)])

    for t in range(sweeps):
        for k in range(n_users):
            others = np.delete(eta, k, axis=0)
            P_minus = _projectors(combined_steering(others, combiner, band, g)) if n_users > 1 else None
            eta[k], _ = maximize_single_user(P_minus, combiner, band, g, batch, grid, cache, incumbent=eta[k])
        result.trajectory.append(eta.copy())
        result.objectives.append(likelihood(eta, combiner, band, g, batch))
        log.debug('AP sweep {}: {} likelihood {:.6g}.'.format(t + 1, eta.tolist(), result.objectives[-1]))

    result.eta = eta.copy()
    return result
