"""Reference computations that share no code with the package under test."""

from fractions import Fraction
from itertools import combinations
from math import comb

import mpmath


def ie_expected_rounds(n, packages, probs):
    """``E[Y] = sum_{A != {}} (-1)^(|A|+1) / (1 - P[package misses A])`` by brute force."""
    sets = [frozenset(p) for p in packages]
    total = Fraction(0)
    for r in range(1, n + 1):
        for A in combinations(range(1, n + 1), r):
            A = frozenset(A)
            miss = sum((w for p, w in zip(sets, probs) if not (p & A)), Fraction(0))
            total += (1 if r % 2 else -1) / (1 - miss)
    return total


def uniform_ie(n, s):
    return ie_expected_rounds(n, list(combinations(range(1, n + 1), s)), [Fraction(1, comb(n, s))] * comb(n, s))


def g_series(c, x, terms=60, dps=40):
    """Direct high-precision partial sum of the g series (``terms`` terms)."""
    with mpmath.workdps(dps):
        c, x = mpmath.mpf(c), mpmath.mpf(x)
        q = 1 - c
        return float(mpmath.fsum(1 - mpmath.exp(-q ** (i - x - 1)) - mpmath.exp(-q ** (-i - x))
                                 for i in range(1, terms + 1)))


def simplex_bisect(v, iters=200):
    """Projection onto the simplex by bisection on the threshold."""
    lo, hi = min(v) - 1.0, max(v)
    for _ in range(iters):
        mid = (lo + hi) / 2
        if sum(max(x - mid, 0.0) for x in v) > 1.0:
            lo = mid
        else:
            hi = mid
    return [max(x - hi, 0.0) for x in v]


def geometric_rotation_pmf(m, kmax):
    """``P[Y = k]`` for rotation: 0 at k=1, then geometric with success ``1 - 1/m`` from k=2."""
    out = [Fraction(0), Fraction(0)]
    for k in range(2, kmax + 1):
        out.append((1 - Fraction(1, m)) * Fraction(1, m) ** (k - 2))
    return out
