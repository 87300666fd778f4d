"""Exact binomial identities behind the kernel expansion."""

from __future__ import annotations

from math import comb

from ..errors import InvalidArgument


def binom(alpha: int, gamma: int) -> int:
    """``C(alpha, gamma)``, zero unless ``0 <= gamma <= alpha``."""
    if gamma < 0 or alpha < 0 or gamma > alpha:
        return 0
    return comb(alpha, gamma)


def binomial_identity(m1: int, m2: int, a1: int) -> tuple:
    """Both sides of the alternating binomial identity.

    ``lhs = C(m1 + m2 - 2 - a1, m2 - 1)`` and
    ``rhs = sum_{j=0}^{a1} (-1)^j C(a1, j) C(m1 + m2 - 2 - j, m1 - 1)``,
    evaluated in exact integer arithmetic with :func:`binom`.

    Examples
    --------
    >>> binomial_identity(3, 2, 1)
    (2, 2)
    """
    for v in (m1, m2, a1):
        if int(v) != v or v < 0 or v > 64:
            raise InvalidArgument("arguments must be integers in [0, 64]")
    lhs = binom(m1 + m2 - 2 - a1, m2 - 1)
    rhs = sum((-1) ** j * binom(a1, j) * binom(m1 + m2 - 2 - j, m1 - 1) for j in range(a1 + 1))
    return lhs, rhs


def binomial_failures(upper: int = 12) -> list:
    """All ``(m1, m2, a1)`` in ``[0, upper]^3`` where the two sides differ."""
    return [(m1, m2, a1)
            for m1 in range(upper + 1) for m2 in range(upper + 1) for a1 in range(upper + 1)
            if len(set(binomial_identity(m1, m2, a1))) == 2]


def binomial_valid_region(m1: int, m2: int, a1: int) -> bool:
    """True when ``a1 <= m1 + m2 - 2`` or one of ``m1, m2`` vanishes.

    Outside this set the left side is zero by convention while the
    alternating sum is not, so the identity holds exactly on this set.
    """
    return m1 == 0 or m2 == 0 or a1 <= m1 + m2 - 2
