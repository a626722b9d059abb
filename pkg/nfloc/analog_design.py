#!/usr/bin/env python
# file analog_design.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Analog combiner design.

The phases and delays of the hybrid array are chosen to maximize the trace
surrogate of the FIM::

    g = sum_m w_m || Q_m V_m ||_F^2,   V_m = D_m + B_m

with ``w_m = 1 / sigma_m^2``. With the delays fixed, `g` is a quadratic form
``a^H Gamma a`` of the unit-modulus phase shifter vector ``a = exp(j phi)``,
maximized by a Riemannian conjugate gradient (RCG) on the product of unit
circles. With the phases fixed, each delay is set by a one-dimensional grid
search. Both steps are alternated.
"""

import logging
from dataclasses import dataclass, replace
import numpy as np
from scipy.linalg import block_diag

from .geometry import as_positions
from .hybrid_array import block_weights, delay_phasors

log = logging.getLogger(__name__)

ARMIJO_STEP = 1.
ARMIJO_FACTOR = .5
ARMIJO_C = 1e-4
ARMIJO_MAX_BACKTRACKS = 30

@dataclass(frozen=True)
class DesignObjective:
    """Trace surrogate of the FIM at assumed positions.

    Parameters
    ----------
    V : ndarray (M, N, J)
        Columns ``u_mk = d_mk + b_mk`` (``J = K``) or, for the exact trace,
        ``[D_m, B_m]`` (``J = 2K``).
    weights : ndarray (M,)
        Subcarrier weights ``1 / sigma_m^2``.
    frequencies : ndarray (M,)
        Subcarrier frequencies in Hz.
    exact : bool
        True for the exact trace objective.
    eta : ndarray (K, 2) or None
        Assumed positions of the steering set, None when unknown.
    """
    V: np.ndarray
    weights: np.ndarray
    frequencies: np.ndarray
    exact: bool = False
    eta: np.ndarray = None

@dataclass(frozen=True)
class RcgState:
    """Iterate of the Riemannian conjugate gradient.

    Parameters
    ----------
    a : ndarray (N,)
        Unit-modulus iterate.
    value : float
        Objective at `a`.
    grad : ndarray (N,)
        Riemannian gradient at `a`.
    direction : ndarray (N,)
        Ascent direction.
    step : float
        Last accepted Armijo step.
    zeta : float
        Last Polak-Ribiere parameter.
    iteration : int
        Accepted steps so far.
    stalled : bool
        True if the last line search failed.
    """
    a: np.ndarray
    value: float
    grad: np.ndarray
    direction: np.ndarray
    step: float = 0.
    zeta: float = 0.
    iteration: int = 0
    stalled: bool = False

@dataclass(frozen=True)
class DelaySearchConfig:
    """Grid search of the TTD delays.

    Parameters
    ----------
    n_grid : int
        Number of intervals `Q` of the search set ``{0, t_max/Q, .., t_max}``.
    max_sweeps : int
        Maximal number of sweeps over the delays.
    """
    n_grid: int = 64
    max_sweeps: int = 10

    def __post_init__(self):
        if self.n_grid < 1 or self.max_sweeps < 1:
            msg = 'Invalid delay search, n_grid = {}, max_sweeps = {}.'.format(self.n_grid, self.max_sweeps)
            log.error(msg)
            raise ValueError(msg)

    def search_set(self, t_max):
        """Candidate delays, ``n_grid + 1`` values from 0 to `t_max`."""
        return np.linspace(0., t_max, self.n_grid + 1)

def build_design_objective(steering, band, noise=None, exact=False, eta=None):
    """Build the design objective from steering derivatives.

    Parameters
    ----------
    steering : SteeringSet
        Steering set with derivatives at the target positions.
    band : BandPlan
        The subcarriers.
    noise : NoiseModel, optional
        Noise variances, unit weights if None.
    exact : bool
        Use the exact trace ``||Q D||^2 + ||Q B||^2`` instead of
        ``||Q (D + B)||^2``. Default is False.
    eta : array (K, 2), optional
        Positions the steering set was evaluated at, kept in the objective.

    Returns
    -------
    obj : DesignObjective
        The objective.
    """
    if exact:
        V = np.concatenate((steering.D, steering.B), axis=-1)
    else:
        V = steering.D + steering.B
    weights = np.ones(band.n_subcarriers) if noise is None else noise.weights()
    eta = None if eta is None else as_positions(eta)
    return DesignObjective(V, weights, band.frequencies, exact=exact, eta=eta)

def _chain_columns(combiner, obj):
    """Rows of Q_m V_m restricted to each chain, shape (M, N_d, N / N_d, J)."""
    lay = combiner.layout
    return obj.V.reshape(obj.V.shape[0], lay.n_rf, -1, obj.V.shape[-1])

def design_objective_value(combiner, obj):
    """Design objective ``sum_m w_m tr(Q_m V_m V_m^H Q_m^H)``.

    Parameters
    ----------
    combiner : AnalogCombiner
        The combiner.
    obj : DesignObjective
        The objective.

    Returns
    -------
    value : float
        The objective.
    """
    w = block_weights(combiner, obj.frequencies)
    QV = np.einsum('mik,mikj->mij', w, _chain_columns(combiner, obj))
    return float(np.einsum('m,mij->', obj.weights, np.abs(QV) ** 2))

def _delay_rows(combiner, obj):
    """Delay phasor of each antenna, shape (M, N_d, N / N_d)."""
    lay = combiner.layout
    return np.repeat(delay_phasors(combiner, obj.frequencies), lay.n_ps, axis=-1)

def pruned_operators(combiner, obj):
    """Operators of the phase problem.

    Returns
    -------
    W : ndarray (M, J, N_d, N)
        ``W[m, j] a`` is column `j` of ``Q_m V_m`` for the phase vector
        ``a = exp(j phi)``. Entry ``(i, n)`` is ``T_m[i, l(n)] V_m[n, j]``
        on the antennas of chain `i` and zero elsewhere.
    """
    lay = combiner.layout
    t = _delay_rows(combiner, obj)
    u = t[..., None] * _chain_columns(combiner, obj)     # (M, N_d, span, J)
    n_sub, n_rf, span, n_col = u.shape
    W = np.zeros((n_sub, n_col, n_rf, lay.n_antennas), dtype=complex)
    for i in range(n_rf):
        W[:, :, i, i * span:(i + 1) * span] = u[:, i].transpose(0, 2, 1)
    return W

def gram_matrix(combiner, obj):
    """Hermitian matrix ``Gamma = sum_m w_m sum_j W_mj^H W_mj``, shape (N, N).

    `Gamma` is block diagonal, one block per RF chain.
    """
    t = _delay_rows(combiner, obj)
    u = t[..., None] * _chain_columns(combiner, obj)
    blocks = np.einsum('m,mikj,milj->ikl', obj.weights, u.conj(), u)
    return block_diag(*blocks)

def euclidean_gradient(a, gram):
    """Euclidean gradient ``2 Gamma a`` of ``a^H Gamma a``.

    The real and imaginary parts are the partial derivatives with respect to
    the real and imaginary parts of `a`.
    """
    return 2 * gram @ a

def _quadratic(a, gram):
    return float(np.vdot(a, gram @ a).real)

def tangent_projection(a, v):
    """Project `v` on the tangent space of the unit circles at `a`."""
    return v - np.real(v * a.conj()) * a

def retraction(a):
    """Normalize every entry to unit modulus, zeros are mapped to 1."""
    mag = np.abs(a)
    return np.where(mag > 0, a / np.where(mag > 0, mag, 1.), 1.)

def init_rcg_state(a, gram):
    """RCG state at `a`, the first direction is the Riemannian gradient."""
    a = retraction(np.asarray(a, dtype=complex))
    grad = tangent_projection(a, euclidean_gradient(a, gram))
    return RcgState(a, _quadratic(a, gram), grad, grad)

def riemannian_step(state, gram):
    """One ascent step of the Riemannian conjugate gradient.

    Parameters
    ----------
    state : RcgState
        Current iterate.
    gram : ndarray (N, N)
        Hermitian matrix of the objective ``a^H Gamma a``.

    Returns
    -------
    state : RcgState
        The next iterate. If the Armijo backtracking fails, the input state is
        returned with the `stalled` flag.

    Notes
    -----
    The step is accepted when ``g(R(a + e xi)) >= g(a) + c e Re<grad, xi>``.
    The next direction is ``grad' + zeta T(xi)`` with `T` the projection on
    the new tangent space and `zeta` the Polak-Ribiere parameter clipped at
    0. It falls back to ``grad'`` if it is not an ascent direction.
    """
    a, xi = state.a, state.direction
    slope = np.vdot(state.grad, xi).real

    step = ARMIJO_STEP
    for _ in range(ARMIJO_MAX_BACKTRACKS):
        a_new = retraction(a + step * xi)
        value = _quadratic(a_new, gram)
        if value >= state.value + ARMIJO_C * step * slope:
            break
        step *= ARMIJO_FACTOR
    else:
        log.debug('RCG line search stalled at iteration {}.'.format(state.iteration))
        return replace(state, stalled=True)

    grad = tangent_projection(a_new, euclidean_gradient(a_new, gram))
    old = np.vdot(state.grad, state.grad).real
    moved_grad = tangent_projection(a_new, state.grad)
    zeta = max(np.vdot(grad, grad - moved_grad).real / old, 0.) if old > 0 else 0.
    direction = grad + zeta * tangent_projection(a_new, xi)
    if np.vdot(grad, direction).real <= 0:
        direction, zeta = grad, 0.

    return RcgState(a_new, value, grad, direction, step, zeta, state.iteration + 1)

def optimize_phases(combiner, obj, max_iters=200, tol=1e-8):
    """Optimize the phase shifters with the delays fixed.

    Parameters
    ----------
    combiner : AnalogCombiner
        Starting combiner.
    obj : DesignObjective
        The objective.
    max_iters : int
        Maximal number of RCG steps.
    tol : float
        Relative objective change stopping the iterations.

    Returns
    -------
    combiner : AnalogCombiner
        The combiner with the best phases seen.
    """
    gram = gram_matrix(combiner, obj)
    scale = np.linalg.eigvalsh(gram)[-1]
    if not scale > 0:
        log.debug('Null design objective, phases left unchanged.')
        return combiner
    gram = gram / scale

    state = init_rcg_state(np.exp(1j * combiner.phases), gram)
    best = state
    for _ in range(max_iters):
        new = riemannian_step(state, gram)
        if new.stalled:
            log.debug('RCG stopped on a line search stall.')
            break
        converged = abs(new.value - state.value) < tol * abs(new.value)
        state = new
        if state.value > best.value:
            best = state
        if converged:
            break

    log.debug('RCG: {} steps, objective {:.6g}.'.format(state.iteration, best.value * scale))
    return combiner.with_phases(np.angle(best.a))

def optimize_delays(combiner, obj, cfg=None):
    """Optimize the TTD delays with the phases fixed.

    Delays are visited in row-major order ``(i, l)``, each one set to the best
    value of the search set holding the others. The current delay is kept
    unless a candidate strictly improves the objective. Sweeps are repeated
    until no delay changes.

    Parameters
    ----------
    combiner : AnalogCombiner
        Starting combiner.
    obj : DesignObjective
        The objective.
    cfg : DelaySearchConfig, optional
        Search parameters, default if None.

    Returns
    -------
    combiner : AnalogCombiner
        The combiner with the optimized delays.
    """
    cfg = DelaySearchConfig() if cfg is None else cfg
    lay = combiner.layout
    if combiner.t_max == 0:
        return combiner

    candidates = cfg.search_set(combiner.t_max)
    f = obj.frequencies
    cand_phasors = np.exp(2j * np.pi * f[:, None] * candidates[None])        # (M, Q+1)

    # per TTD partial sums of a_n V_m[n, j]
    aV = np.exp(1j * combiner.phases)[None, :, None] * obj.V
    z = aV.reshape(aV.shape[0], lay.n_rf, lay.n_ttd, lay.n_ps, -1).sum(axis=3)
    delays = combiner.delays.copy()
    P = delay_phasors(combiner, f)                                            # (M, N_d, N_t)
    rows = np.einsum('mil,milj->mij', P, z)
    w = obj.weights

    for sweep in range(cfg.max_sweeps):
        changed = 0
        for i in range(lay.n_rf):
            for l in range(lay.n_ttd):
                current = np.einsum('m,mj->', w, np.abs(rows[:, i]) ** 2)
                rest = rows[:, i] - P[:, i, l, None] * z[:, i, l]
                trial = rest[:, None] + cand_phasors[..., None] * z[:, i, l, None]   # (M, Q+1, J)
                values = np.einsum('m,mqj->q', w, np.abs(trial) ** 2)
                q = int(np.argmax(values))
                if values[q] > current * (1 + 1e-12) and candidates[q] != delays[i, l]:
                    delays[i, l] = candidates[q]
                    P[:, i, l] = cand_phasors[:, q]
                    rows[:, i] = trial[:, q]
                    changed += 1
        log.debug('Delay sweep {}: {} delays changed.'.format(sweep + 1, changed))
        if not changed:
            break

    return combiner.with_delays(delays)

def alternate_design(combiner, obj, outer_iters=10, tol=1e-6, phase_iters=200, phase_tol=1e-8,
                     delay_cfg=None, return_history=False):
    """Alternate phase and delay optimization.

    Parameters
    ----------
    combiner : AnalogCombiner
        Starting combiner, e.g. a random one.
    obj : DesignObjective
        The objective.
    outer_iters : int
        Maximal number of phase/delay alternations.
    tol : float
        Relative objective change stopping the alternation.
    phase_iters : int
        RCG steps per phase optimization.
    phase_tol : float
        RCG stopping tolerance.
    delay_cfg : DelaySearchConfig, optional
        Delay search parameters.
    return_history : bool
        Also return the objective after every alternation.

    Returns
    -------
    combiner : AnalogCombiner
        The designed combiner.
    history : list of float
        Objective at the start and after every alternation, only if
        `return_history` is set.
    """
    history = [design_objective_value(combiner, obj)]
    for it in range(outer_iters):
        combiner = optimize_phases(combiner, obj, phase_iters, phase_tol)
        if combiner.t_max > 0:
            combiner = optimize_delays(combiner, obj, delay_cfg)
        history.append(design_objective_value(combiner, obj))
        log.debug('Design iteration {}: objective {:.6g}.'.format(it + 1, history[-1]))
        if abs(history[-1] - history[-2]) < tol * abs(history[-1]):
            break

    log.info('Analog design done in {} iterations, objective {:.6g}.'.format(len(history) - 1, history[-1]))
    if return_history:
        return combiner, history
    return combiner
