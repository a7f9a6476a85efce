"""Expected collection times for the named package distributions.

Every function takes a ``mode``:

``"exact"``
    returns a :class:`fractions.Fraction` (always reduced, positive denominator);
``"float"``
    returns a ``float``;
``"auto"`` (default)
    exact for ``n <= 64``, float beyond.

A value of either type is what the rest of the package calls an *exact value*.
"""

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from . import _kernels
from .errors import BudgetExceededError, InvalidParameterError, StateCollapseError, TruncationWarning

EXACT_AUTO_MAX_N = 64
MAX_CHAIN_STATES = 4000


def resolve_mode(mode, n):
    if mode == "auto":
        return "exact" if n <= EXACT_AUTO_MAX_N else "float"
    if mode not in ("exact", "float"):
        raise InvalidParameterError(f"mode must be 'exact', 'float' or 'auto', got {mode!r}")
    return mode


def _check_int(name, value, lo=None):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidParameterError(f"{name} must be an integer, got {value!r}")
    if lo is not None and value < lo:
        raise InvalidParameterError(f"{name} must be >= {lo}, got {value}")
    return int(value)


def _check_ns(n, s, s_min=1, s_max=None):
    n = _check_int("n", n, 1)
    s = _check_int("s", s)
    s_max = n if s_max is None else s_max
    if not s_min <= s <= s_max:
        raise InvalidParameterError(f"s={s} outside [{s_min}, {s_max}] for n={n}")
    return n, s


def _harmonic_range(lo, hi, mode):
    """Sum of 1/i for lo <= i <= hi."""
    if mode == "exact":
        # common-denominator accumulation is far cheaper than repeated Fraction adds
        num, den = 0, 1
        for i in range(lo, hi + 1):
            num, den = num * i + den, den * i
        return Fraction(num, den)
    return math.fsum(1.0 / i for i in range(lo, hi + 1))


def harmonic(n, mode="auto"):
    """The n-th harmonic number ``1 + 1/2 + ... + 1/n``."""
    n = _check_int("n", n, 1)
    return _harmonic_range(1, n, resolve_mode(mode, n))


def classical_expectation(n, mode="auto"):
    """Expected draws to collect ``n`` coupons drawn one at a time: ``n * H_n``."""
    n = _check_int("n", n, 1)
    return n * harmonic(n, mode)


def _hypergeom_rows_exact(n, s, d):
    total = comb(n, s)
    rows = []
    for m in range(d + 1):
        lo, hi = max(0, s - (n - m)), min(s, m)
        rows.append({m - i: Fraction(comb(m, i) * comb(n - m, s - i), total) for i in range(lo, hi + 1)})
    return rows


def uniform_recursion(n, s, mode="auto"):
    """Intermediates ``a_0..a_{n-s}``: expected further draws with ``k`` coupons missing.

    Only valid for ``k <= n - s``, the states reachable after the first draw.
    """
    n, s = _check_ns(n, s)
    mode = resolve_mode(mode, n)
    d = n - s
    if mode == "exact":
        total = comb(n, s)
        a = [Fraction(0)]
        for k in range(1, d + 1):
            lo, hi = max(0, s - (n - k)), min(s, k)
            acc = Fraction(total)
            stay = comb(n - k, s) if lo == 0 else 0
            for i in range(max(lo, 1), hi + 1):
                acc += comb(k, i) * comb(n - k, s - i) * a[k - i]
            a.append(acc / (total - stay))
        return a
    K = _kernels.hypergeom_kernel(n, s, d)
    a = np.zeros(d + 1)
    for k in range(1, d + 1):
        row = K[k, :k]
        a[k] = (1.0 + row @ a[:k]) / row.sum()
    return [float(x) for x in a]


def uniform_expectation(n, s, mode="auto"):
    """Expected rounds under the uniform distribution over all ``C(n, s)`` packages."""
    n, s = _check_ns(n, s)
    if s == n:
        return Fraction(1) if resolve_mode(mode, n) == "exact" else 1.0
    return 1 + uniform_recursion(n, s, mode)[n - s]


def uniform_expectation_ie(n, s, mode="auto"):
    """Inclusion-exclusion oracle ``sum_j (-1)^(j+1) C(n,j) / (1 - q_j)``.

    ``q_j = C(n-j, s) / C(n, s)`` is the chance a package misses ``j`` given coupons.
    The alternating terms grow like ``C(n, n/2)``, so the float path carries each
    term as a double-double ``hi + lo`` (both from integer division, hence
    correctly rounded) and sums the pairs with ``math.fsum``. Past ``n = 1000``
    terms come from log-gamma and accuracy degrades.
    """
    n, s = _check_ns(n, s, 1, None)
    if s >= n:
        raise InvalidParameterError("inclusion-exclusion oracle needs s <= n - 1 (use uniform_expectation)")
    mode = resolve_mode(mode, n)
    total = comb(n, s)
    if mode == "exact":
        acc = Fraction(0)
        for j in range(1, n + 1):
            term = Fraction(comb(n, j) * total, total - comb(n - j, s))
            acc += term if j % 2 else -term
        return acc
    terms = []
    log_total = math.lgamma(n + 1) - math.lgamma(s + 1) - math.lgamma(n - s + 1)
    for j in range(1, n + 1):
        miss = comb(n - j, s)
        if n <= 1000:
            a, b = comb(n, j) * total, total - miss
            hi = a / b
            hn, hd = hi.as_integer_ratio()
            lo = (a * hd - hn * b) / (b * hd)
            terms.extend((hi, lo) if j % 2 else (-hi, -lo))
            continue
        else:
            log_c = math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)
            log_q = (math.log(miss) - log_total) if miss else -math.inf
            t = math.exp(log_c - math.log(-math.expm1(log_q)))
        terms.append(t if j % 2 else -t)
    return math.fsum(terms)


def _check_arcs(n, s):
    n, s = _check_ns(n, s, 1, None)
    if s >= n:
        raise InvalidParameterError(f"arcs chain needs s <= n - 1, got s={s}, n={n}")
    if s < n // 2:
        raise StateCollapseError(f"state collapse invalid: missing coupons need not form one arc when s={s} < {n // 2}")
    return n, s


def arcs_recursion(n, s, mode="auto"):
    """Intermediates ``t_0..t_{n-s}`` of the missing-arc chain."""
    n, s = _check_arcs(n, s)
    mode = resolve_mode(mode, n)
    t = [Fraction(0)]
    for k in range(1, n - s + 1):
        p_stay = Fraction(n - (s + k - 1), n)
        p_mid = Fraction(2, n)
        p_all = Fraction(s - k + 1, n)
        acc = 1 + p_mid * sum(t[k - i] for i in range(1, k)) + p_all * t[0]
        t.append(acc / (1 - p_stay))
    return t if mode == "exact" else [float(x) for x in t]


def arcs_expectation(n, s, mode="auto"):
    """Expected rounds under the arcs distribution, from the missing-arc recursion."""
    n, s = _check_arcs(n, s)
    return 1 + arcs_recursion(n, s, mode)[n - s]


def arcs_closed_form(n, s, mode="auto"):
    """``1 + n^2 / (s (s + 1))``."""
    n, s = _check_arcs(n, s)
    value = 1 + Fraction(n * n, s * (s + 1))
    return value if resolve_mode(mode, n) == "exact" else float(value)


def near_decomposition_expectation(n, s, mode="auto"):
    """``m * H_m`` with ``m = ceil(n / s)`` equiprobable packages."""
    n, s = _check_ns(n, s, 1, None)
    if s >= n:
        raise InvalidParameterError(f"near-decomposition needs s <= n - 1, got s={s}, n={n}")
    m = -(-n // s)
    return classical_expectation(m, resolve_mode(mode, n))


def rotation_count(n, s):
    """Number of rotation packages, ``floor(n / (n - s))``."""
    return n // (n - s)


def rotation_expectation(n, s, mode="auto"):
    """``1 + 1 / (1 - 1/m)``: one draw, then geometric waiting for a different package."""
    n, s = _check_ns(n, s, 1, None)
    if s >= n:
        raise InvalidParameterError(f"rotation needs s <= n - 1, got s={s}, n={n}")
    m = rotation_count(n, s)
    if m < 2:
        raise InvalidParameterError(f"rotation degenerates for s={s} < n/2 (only one package)")
    value = 1 + 1 / (1 - Fraction(1, m))
    return value if resolve_mode(mode, n) == "exact" else float(value)


@dataclass(frozen=True)
class BoundsPair:
    lower: object
    upper: object

    def contains(self, value):
        return self.lower < value < self.upper


def expectation_bounds(n, s, mode="auto"):
    """Strict bounds ``H_n/(H_n - H_{n-s}) < E[Y] < 1 + H_{n-1}/(H_n - H_{n-s})``."""
    n, s = _check_ns(n, s, 2, None)
    if s > n - 1:
        raise InvalidParameterError(f"bounds need 2 <= s <= n - 1, got s={s}, n={n}")
    mode = resolve_mode(mode, n)
    gap = _harmonic_range(n - s + 1, n, mode)
    Hn = harmonic(n, mode)
    return BoundsPair(lower=Hn / gap, upper=1 + harmonic(n - 1, mode) / gap)


# ---------------------------------------------------------------------------
# Missing-count chain
# ---------------------------------------------------------------------------


def union_tail_bound(n, s, kmax):
    """Bound on ``sum_{k > kmax} P[X_k > 0]`` from ``P[X_k > 0] <= n ((n-s)/n)^k``."""
    q = (n - s) / n
    if q == 0.0:
        return 0.0
    return n * q ** (kmax + 1) / (1.0 - q)


@dataclass(frozen=True)
class MissingCountPmf:
    """Row ``k`` is the law of the number of unseen coupons after ``k`` uniform draws."""

    n: int
    s: int
    rows: object  # ndarray (kmax+1, n+1) in float mode, list of Fraction lists in exact mode
    mode: str
    truncation_bound: float
    tolerance: float

    @property
    def kmax(self):
        return len(self.rows) - 1

    @property
    def within_tolerance(self):
        return self.truncation_bound <= self.tolerance

    def row(self, k):
        return self.rows[k]

    def completion_cdf(self):
        """``P[Y <= k] = P[X_k = 0]`` for ``k = 0..kmax``."""
        return [r[0] for r in self.rows]

    def rounds_pmf(self):
        """``P[Y = k]`` for ``k = 0..kmax``."""
        cdf = self.completion_cdf()
        return [cdf[0]] + [cdf[k] - cdf[k - 1] for k in range(1, len(cdf))]

    def expected_rounds(self):
        """Tail-sum estimate of ``E[Y]``; off by at most ``truncation_bound``."""
        if self.mode == "exact":
            return sum((1 - c for c in self.completion_cdf()), Fraction(0))
        return math.fsum(1.0 - c for c in self.completion_cdf())


def _auto_kmax(n, s, tol, cap=100_000):
    k = 1
    while union_tail_bound(n, s, k) > tol:
        k += 1
        if k > cap:
            raise BudgetExceededError(f"more than {cap} rounds needed to reach tail bound {tol}")
    return k


def missing_count_pmf(n, s, kmax=None, mode="float", tol=1e-12):
    """Distribution of unseen coupons after each of the first ``kmax`` uniform draws.

    With ``kmax=None`` the horizon is chosen so the tail bound on ``E[Y]`` is within ``tol``.
    A user-supplied ``kmax`` that leaves the bound above ``tol`` is kept but flagged
    through :class:`TruncationWarning` and ``within_tolerance``.
    """
    n, s = _check_ns(n, s)
    if kmax is None:
        kmax = _auto_kmax(n, s, tol)
    kmax = _check_int("kmax", kmax, 0)
    mode = resolve_mode(mode, n)
    d = n - s
    bound = union_tail_bound(n, s, kmax)
    if bound > tol:
        warnings.warn(f"kmax={kmax} leaves tail bound {bound:.3g} above tolerance {tol:.3g}", TruncationWarning,
                      stacklevel=2)
    if mode == "exact":
        trans = _hypergeom_rows_exact(n, s, d)
        rows = [[Fraction(0)] * (n + 1)]
        rows[0][n] = Fraction(1)
        if kmax >= 1:
            first = [Fraction(0)] * (n + 1)
            first[d] = Fraction(1)
            rows.append(first)
        for _ in range(2, kmax + 1):
            prev = rows[-1]
            nxt = [Fraction(0)] * (n + 1)
            for m in range(d + 1):
                if prev[m]:
                    for m2, p in trans[m].items():
                        nxt[m2] += prev[m] * p
            rows.append(nxt)
        return MissingCountPmf(n, s, rows, mode, bound, tol)
    if d > MAX_CHAIN_STATES:
        raise BudgetExceededError(f"missing-count chain with {d + 1} states exceeds cap {MAX_CHAIN_STATES + 1}")
    K = _kernels.hypergeom_kernel(n, s, d)
    rows = np.zeros((kmax + 1, n + 1))
    rows[0, n] = 1.0
    if kmax >= 1:
        v = np.zeros(d + 1)
        v[d] = 1.0
        rows[1, : d + 1] = v
        for k in range(2, kmax + 1):
            v = v @ K
            rows[k, : d + 1] = v
    return MissingCountPmf(n, s, rows, mode, bound, tol)
