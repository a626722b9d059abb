#!/usr/bin/env python
# file errors.py
# author nfloc developers
# version 0.1
# date 19 oct. 2026
"""Exceptions raised by the nfloc package.

All the exceptions derive from :class:`ValueError` so that callers written
against plain `ValueError` checks keep working.
"""


class NflocError(ValueError):
    """Base class of nfloc errors."""


class OriginDegenerate(NflocError):
    """Position at the array reference point, angle undefined."""


class AngleOutOfRange(NflocError):
    """Azimuth outside the front half-plane (0, pi)."""


class IndexOutOfRange(NflocError):
    """Antenna index outside the array."""


class InvalidBand(NflocError):
    """Inconsistent band plan (negative bandwidth, band crossing 0 Hz...)."""


class ZeroSignal(NflocError):
    """Reference signal with zero power, SNR undefined."""


class LayoutMismatch(NflocError):
    """Combiner layout inconsistent with its coefficient banks."""


class DimensionMismatch(NflocError):
    """Array shapes do not match."""


class SingularFim(NflocError):
    """Fisher information matrix is numerically singular."""


class EmptyTrials(NflocError):
    """No Monte Carlo trial to reduce."""


class InvalidLayout(NflocError):
    """Antenna count not divisible by the RF chain and TTD counts."""


class ValidationError(NflocError):
    """Configuration violates an invariant."""


class ParseError(NflocError):
    """Malformed configuration file.

    Parameters
    ----------
    msg : str
        Description of the problem.
    lineno : int or None
        Line of the configuration file (1-based).
    """
    def __init__(self, msg, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            msg = 'line {}: {}'.format(lineno, msg)
        super().__init__(msg)
