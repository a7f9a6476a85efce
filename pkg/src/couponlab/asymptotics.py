"""Asymptotic predictions for large ``n`` and the reference limit laws.

Three regimes of package size are covered: constant ``s`` (:func:`case1_prediction`),
``s = c n`` (:func:`case2_prediction`, built on :func:`g_eval`) and
``s = n - lambda n^{(t-1)/t}`` (:func:`case3_limit`).
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from . import exact
from .errors import InvalidParameterError

EXP_CUTOFF = 700.0
CASE2_TOL = 1e-9
LOG_SNAP = 1e-9


def _check_c(c):
    if not (isinstance(c, (int, float)) and 0.0 < c < 1.0):
        raise InvalidParameterError(f"c must lie in (0, 1), got {c!r}")
    return float(c)


def g_eval(c, x, tol=1e-12, return_terms=False):
    """The periodic correction ``g(x)`` of the ``s = c n`` regime.

    Sums ``1 - exp(-(1-c)^(i-x-1)) - exp(-(1-c)^(-i-x))`` over ``i >= 1`` and
    stops once the remaining first-part tail ``(1-c)^(I-x)/c`` plus the
    doubly-exponential second-part tail is at most ``tol``.

    Returns the value, or ``(value, I)`` with ``return_terms=True``.
    """
    c = _check_c(c)
    if not (isinstance(x, (int, float)) and 0.0 <= x < 1.0):
        raise InvalidParameterError(f"x must lie in [0, 1), got {x!r}")
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    lq = math.log1p(-c)  # log(1 - c) < 0
    growth = -lq
    terms = []
    i = 0
    while True:
        i += 1
        a = math.exp((i - x - 1) * lq)
        bexp = (-i - x) * lq  # log of (1-c)^(-i-x)
        b = math.exp(bexp) if bexp < EXP_CUTOFF else math.inf
        second = math.exp(-b) if b < EXP_CUTOFF else 0.0
        terms.append(-math.expm1(-a) - second)
        tail1 = math.exp((i - x) * lq) / c
        nb = b * math.exp(growth) if b < EXP_CUTOFF else math.inf
        if nb >= EXP_CUTOFF:
            tail2 = 0.0
        else:
            tail2 = math.exp(-nb) / -math.expm1(-(nb - b))
        if tail1 + tail2 <= tol:
            break
    val = math.fsum(terms)
    return (val, i) if return_terms else val


def g_curve(c, points=201, tol=1e-12):
    """Grid ``x = j / points`` for ``j = 0..points-1`` with ``g(x)``."""
    xs = [j / points for j in range(points)]
    return [(x, g_eval(c, x, tol)) for x in xs]


def g_curve_csv(cs=(0.01, 0.5, 0.99), points=201, tol=1e-12):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["c", "x", "g"])
    for c in cs:
        for x, g in g_curve(c, points, tol):
            w.writerow([repr(float(c)), repr(x), repr(g)])
    return buf.getvalue()


def case1_prediction(n, s):
    """``(n/s) H_n - ((s-1)/(2s)) H_n`` for constant package size ``s >= 2``."""
    n, s = exact._check_int("n", n, 1), exact._check_int("s", s, 1)
    if s < 2:
        raise InvalidParameterError(f"case I needs s >= 2, got {s}")
    if n <= s:
        raise InvalidParameterError(f"case I needs n > s, got n={n}, s={s}")
    Hn = exact.harmonic(n, "float")
    return (n / s) * Hn - ((s - 1) / (2 * s)) * Hn


@dataclass(frozen=True)
class CaseIIPrediction:
    n: int
    c: float
    k: int
    alpha: float
    g_value: float

    @property
    def prediction(self):
        return self.k + self.g_value


def _log_split(n, c):
    L = math.log(n) / -math.log1p(-c)
    r = round(L)
    if abs(L - r) <= LOG_SNAP * max(1.0, L):
        L = float(r)
    k = math.floor(L)
    return k, L - k


def case2_prediction(n, c):
    """``floor(log_{1/(1-c)} n) + g(alpha)`` with ``alpha`` the fractional part.

    Logarithms within ``1e-9`` (relative) of an integer snap to it, so exact
    powers of ``1/(1-c)`` give ``alpha = 0``.
    """
    n = exact._check_int("n", n, 2)
    c = _check_c(c)
    k, alpha = _log_split(n, c)
    return CaseIIPrediction(n, c, k, alpha, g_eval(c, alpha, CASE2_TOL))


@dataclass(frozen=True)
class CaseIIILimit:
    """Two-point limit law on ``{t, t+1}`` for ``s = n - lambda n^{(t-1)/t}``."""

    t: int
    lam: float

    @property
    def pmf(self):
        p = math.exp(-(self.lam ** self.t))
        return {self.t: p, self.t + 1: 1.0 - p}

    @property
    def expectation(self):
        p = math.exp(-(self.lam ** self.t))
        return self.t * p + (self.t + 1) * (1.0 - p)


def case3_limit(t, lam):
    t = exact._check_int("t", t, 0)
    if t < 2:
        raise InvalidParameterError(f"case III needs t >= 2, got {t}")
    if not (isinstance(lam, (int, float)) and lam > 0 and math.isfinite(lam)):
        raise InvalidParameterError(f"lambda must be positive, got {lam!r}")
    return CaseIIILimit(t, float(lam))


def case3_package_size(n, t, lam):
    """``s = round(n - lambda n^{(t-1)/t})``."""
    return int(round(n - lam * n ** ((t - 1) / t)))


def gumbel_cdf(x, mu=0.0, beta=1.0):
    if not beta > 0:
        raise InvalidParameterError(f"beta must be positive, got {beta!r}")
    return math.exp(-math.exp(-(x - mu) / beta))


def gumbel_scaled_threshold(n, s, t, x):
    """``(n/s)(log n + (t-1) log log n - log (t-1)! + x)``; ``s = 1`` is the classical scaling."""
    n = exact._check_int("n", n, 1)
    s = exact._check_int("s", s, 1)
    t = exact._check_int("t", t, 1)
    if n <= math.e:
        raise InvalidParameterError(f"log log n needs n > e, got n={n}")
    if s > n - 1:
        raise InvalidParameterError(f"need 1 <= s <= n - 1, got s={s}")
    ln = math.log(n)
    return (n / s) * (ln + (t - 1) * math.log(ln) - math.lgamma(t) + x)


def poisson_pmf(lam, kmax):
    """``P[Z = k]`` for ``k = 0..kmax``, ``Z ~ Poisson(lam)``."""
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be positive, got {lam!r}")
    return poisson.pmf(np.arange(kmax + 1), lam)


def _as_mapping(p):
    if isinstance(p, dict):
        return {k: float(v) for k, v in p.items()}
    return {k: float(v) for k, v in enumerate(p)}


def tv_distance(p, q):
    """Total variation ``(1/2) sum |p - q|`` of two sub-probability tables.

    Missing mass ``1 - sum`` of each table counts as one shared extra point.
    Tables are sequences (index = outcome) or mappings.
    """
    pm, qm = _as_mapping(p), _as_mapping(q)
    for name, m in (("p", pm), ("q", qm)):
        if any(v < 0 for v in m.values()):
            raise InvalidParameterError(f"{name} has negative entries")
    rp = 1.0 - math.fsum(pm.values())
    rq = 1.0 - math.fsum(qm.values())
    if rp < -1e-9 or rq < -1e-9:
        raise InvalidParameterError("table sums exceed 1")
    keys = set(pm) | set(qm)
    diff = math.fsum(abs(pm.get(k, 0.0) - qm.get(k, 0.0)) for k in keys)
    return 0.5 * (diff + abs(max(rp, 0.0) - max(rq, 0.0)))


# ---------------------------------------------------------------------------
# Prediction tables
# ---------------------------------------------------------------------------

TABLE_COLUMNS = ("n", "s", "prediction", "exact_or_mc", "difference")


def _table(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for r in rows:
        w.writerow([r["n"], r["s"], repr(r["prediction"]), repr(r["exact_or_mc"]), repr(r["difference"])])
    return buf.getvalue()


def case1_rows(ns, s=2):
    rows = []
    for n in ns:
        pred = case1_prediction(n, s)
        ex = exact.uniform_expectation(n, s, "float")
        rows.append({"n": n, "s": s, "prediction": pred, "exact_or_mc": ex, "difference": ex - pred})
    return rows


def case2_rows(ns, c=0.5):
    rows = []
    for n in ns:
        s = int(round(c * n))
        pred = case2_prediction(n, c).prediction
        ex = exact.uniform_expectation(n, s, "float")
        rows.append({"n": n, "s": s, "prediction": pred, "exact_or_mc": ex, "difference": ex - pred})
    return rows


def case3_rows(ns, t=2, lam=1.0):
    """Limit expectation against the missing-count chain at ``s = n - lambda n^{(t-1)/t}``."""
    lim = case3_limit(t, lam)
    rows = []
    for n in ns:
        s = case3_package_size(n, t, lam)
        ex = exact.missing_count_pmf(n, s).expected_rounds()
        rows.append({"n": n, "s": s, "prediction": lim.expectation, "exact_or_mc": ex,
                     "difference": ex - lim.expectation})
    return rows


def rows_to_csv(rows):
    return _table(rows)
