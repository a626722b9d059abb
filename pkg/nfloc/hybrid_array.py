#!/usr/bin/env python
# file hybrid_array.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""TTD-based hybrid analog combiner.

The `N` antennas are split in `N_d` RF chains, each chain in `N_t` TTDs and
each TTD drives `N_s` phase shifters, ``N = N_d N_t N_s``. Antenna `n`
(0-based) belongs to TTD ``b = n // N_s`` of chain ``i = b // N_t``.

The combiner of subcarrier `m` is ``Q_m = T_m A`` with `A` the block
diagonal phase shifter matrix and `T_m` the block diagonal delay matrix with
entries ``exp(+j 2 pi f_m t_il)``.

Combiners are kept in structured form (phase and delay banks), the dense
matrices are materialized on demand.
"""

import logging
from dataclasses import dataclass, replace
import numpy as np

from .errors import LayoutMismatch, DimensionMismatch, InvalidLayout
from .utils import wrap_phase

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class CombinerLayout:
    """Partition of the antennas between RF chains, TTDs and phase shifters.

    Parameters
    ----------
    n_rf : int
        RF chains `N_d`.
    n_ttd : int
        TTDs per RF chain `N_t`.
    n_ps : int
        Phase shifters per TTD `N_s`.
    """
    n_rf: int
    n_ttd: int
    n_ps: int

    def __post_init__(self):
        if min(self.n_rf, self.n_ttd, self.n_ps) < 1:
            msg = 'Layout counts must be positive, got {}.'.format(self)
            log.error(msg)
            raise LayoutMismatch(msg)

    @classmethod
    def from_antennas(cls, n_antennas, n_rf, n_ttd):
        """Build the layout of `n_antennas`, deducing the phase shifters per TTD.

        Raises
        ------
        InvalidLayout
            If `n_antennas` is not divisible by ``n_rf * n_ttd``.
        """
        if n_rf < 1 or n_ttd < 1 or n_antennas % (n_rf * n_ttd):
            msg = 'N = {} is not divisible by N_d * N_t = {} * {}.'.format(n_antennas, n_rf, n_ttd)
            log.error(msg)
            raise InvalidLayout(msg)
        return cls(n_rf, n_ttd, n_antennas // (n_rf * n_ttd))

    @property
    def n_antennas(self):
        return self.n_rf * self.n_ttd * self.n_ps

    @property
    def n_groups(self):
        """Number of TTDs ``N_d N_t``."""
        return self.n_rf * self.n_ttd

    @property
    def gain(self):
        """Orthogonality gain ``N_t N_s``, ``Q_m Q_m^H = N_t N_s I``."""
        return self.n_ttd * self.n_ps

@dataclass(frozen=True)
class AnalogCombiner:
    """Phase and delay banks of the hybrid array.

    Parameters
    ----------
    layout : CombinerLayout
        The partition of the array.
    phases : ndarray (N,)
        Phase shifter phases in [0, 2pi).
    delays : ndarray (N_d, N_t)
        TTD delays in seconds, in [0, t_max].
    t_max : float
        Maximum delay of a TTD in seconds.
    """
    layout: CombinerLayout
    phases: np.ndarray
    delays: np.ndarray
    t_max: float

    def __post_init__(self):
        lay = self.layout
        if np.shape(self.phases) != (lay.n_antennas,):
            msg = 'Phase bank of shape {} for {} antennas.'.format(np.shape(self.phases), lay.n_antennas)
            log.error(msg)
            raise LayoutMismatch(msg)
        if np.shape(self.delays) != (lay.n_rf, lay.n_ttd):
            msg = 'Delay bank of shape {} for layout {}.'.format(np.shape(self.delays), lay)
            log.error(msg)
            raise LayoutMismatch(msg)
        if self.t_max < 0 or (self.delays < 0).any() or (self.delays > self.t_max).any():
            msg = 'Delays must lie in [0, t_max = {}].'.format(self.t_max)
            log.error(msg)
            raise LayoutMismatch(msg)

    @property
    def coefficients(self):
        """Phase shifter coefficients ``exp(j phi_n)``, shape (N_d, N_t, N_s)."""
        lay = self.layout
        return np.exp(1j * self.phases).reshape(lay.n_rf, lay.n_ttd, lay.n_ps)

    def with_phases(self, phases):
        """Return a copy of the combiner with new phases."""
        return replace(self, phases=wrap_phase(np.asarray(phases, dtype=float)))

    def with_delays(self, delays):
        """Return a copy of the combiner with new delays."""
        return replace(self, delays=np.clip(np.asarray(delays, dtype=float), 0., self.t_max))

def make_combiner(layout, phases, delays, t_max):
    """Build a combiner, wrapping the phases to [0, 2pi)."""
    return AnalogCombiner(layout, wrap_phase(np.asarray(phases, dtype=float)),
                          np.asarray(delays, dtype=float), float(t_max))

def random_combiner(layout, t_max, rng):
    """Random combiner.

    Phases are uniform on [0, 2pi) and delays uniform on [0, t_max].

    Parameters
    ----------
    layout : CombinerLayout
        The partition of the array.
    t_max : float
        Maximum delay in seconds.
    rng : numpy.random.Generator
        Random generator.
    """
    phases = 2 * np.pi * rng.random(layout.n_antennas)
    delays = t_max * rng.random((layout.n_rf, layout.n_ttd))
    return make_combiner(layout, phases, delays, t_max)

def narrowband(c):
    """Phase-only reduction of a combiner (all delays and t_max set to 0)."""
    return AnalogCombiner(c.layout, c.phases, np.zeros_like(c.delays), 0.)

def delay_phasors(c, freqs):
    """TTD phasors ``exp(j 2 pi f_m t_il)``, shape (M, N_d, N_t)."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    return np.exp(2j * np.pi * freqs[:, None, None] * c.delays[None])

def block_weights(c, freqs):
    """Nonzero entries of the combiners.

    Returns
    -------
    weights : ndarray (M, N_d, N / N_d)
        ``weights[m, i]`` holds the entries of row `i` of `Q_m` on the
        antennas of RF chain `i`, i.e. ``exp(j (phi_n + 2 pi f_m t_il))``.
    """
    lay = c.layout
    w = delay_phasors(c, freqs)[..., None] * c.coefficients[None]
    return w.reshape(w.shape[0], lay.n_rf, lay.n_ttd * lay.n_ps)

def build_phase_matrix(c):
    """Dense phase shifter matrix `A`, shape (N_d N_t, N).

    Row ``b`` holds ``exp(j phi_n)`` on the antennas ``b N_s .. (b+1) N_s - 1``.
    """
    lay = c.layout
    a = np.exp(1j * c.phases).reshape(lay.n_groups, lay.n_ps)
    A = np.zeros((lay.n_groups, lay.n_antennas), dtype=complex)
    for b in range(lay.n_groups):
        A[b, b * lay.n_ps:(b + 1) * lay.n_ps] = a[b]
    return A

def build_delay_matrix(c, f):
    """Dense delay matrix `T_m` at frequency `f`, shape (N_d, N_d N_t)."""
    lay = c.layout
    t = delay_phasors(c, f)[0]
    T = np.zeros((lay.n_rf, lay.n_groups), dtype=complex)
    for i in range(lay.n_rf):
        T[i, i * lay.n_ttd:(i + 1) * lay.n_ttd] = t[i]
    return T

def combiner_matrix(c, f):
    """Dense combiner ``Q_m = T_m A`` at frequency `f`, shape (N_d, N)."""
    return combiner_matrices(c, [f])[0]

def combiner_matrices(c, freqs):
    """Dense combiners of all the subcarriers, shape (M, N_d, N)."""
    lay = c.layout
    w = block_weights(c, freqs)
    span = lay.n_ttd * lay.n_ps
    Q = np.zeros((w.shape[0], lay.n_rf, lay.n_antennas), dtype=complex)
    for i in range(lay.n_rf):
        Q[:, i, i * span:(i + 1) * span] = w[:, i]
    return Q

@dataclass(frozen=True)
class ObservationBatch:
    """Combined observations.

    Parameters
    ----------
    y : ndarray (M, L, N_d)
        Digital samples per subcarrier and time sample.
    R : ndarray (M, N_d, N_d)
        Sample covariances ``(1/L) sum_l y_m(l) y_m(l)^H``.
    """
    y: np.ndarray
    R: np.ndarray

    @property
    def n_samples(self):
        return self.y.shape[1]

def sample_covariance(y):
    """Sample covariances of combined samples (M, L, N_d)."""
    return np.einsum('mli,mlj->mij', y, y.conj()) / y.shape[1]

def combine(c, x, freqs):
    """Apply the analog combiner to antenna snapshots.

    Parameters
    ----------
    c : AnalogCombiner
        The combiner.
    x : AntennaSnapshot or ndarray (M, L, N)
        Antenna-domain samples.
    freqs : array (M,)
        Subcarrier frequencies in Hz.

    Returns
    -------
    batch : ObservationBatch
        ``y_m(l) = Q_m x_m(l)`` and the sample covariances.

    Raises
    ------
    DimensionMismatch
        If the snapshots do not match the combiner or the band.
    """
    samples = getattr(x, 'x', x)
    freqs = np.atleast_1d(freqs)
    lay = c.layout
    if samples.ndim != 3 or samples.shape[0] != freqs.size or samples.shape[-1] != lay.n_antennas:
        msg = 'Snapshots of shape {} for {} subcarriers and {} antennas.'.format(samples.shape, freqs.size, lay.n_antennas)
        log.error(msg)
        raise DimensionMismatch(msg)

    w = block_weights(c, freqs)
    blocks = samples.reshape(samples.shape[0], samples.shape[1], lay.n_rf, -1)
    y = np.einsum('mlik,mik->mli', blocks, w)
    return ObservationBatch(y, sample_covariance(y))
