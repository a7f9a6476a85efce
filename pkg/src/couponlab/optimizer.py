"""Search for package distributions that beat uniform drawing.

The objective is the float subset-lattice DP over all ``C(n, s)`` packages.
Search is projected gradient descent with finite-difference gradients; the
returned point is rounded onto a ``1/10^6`` grid so its value can be
recomputed in exact arithmetic and shipped as a certificate.
"""

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np

from . import _kernels, exact
from .dist_engine import PackageDistribution, build_distribution, expected_rounds, format_prob
from .errors import BudgetExceededError, InvalidParameterError

MAX_SUPPORT = 256
MAX_N = 12
GRID = 10**6


def project_to_simplex(v):
    """Euclidean projection onto ``{p >= 0, sum p = 1}`` (sort-and-threshold)."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise InvalidParameterError("cannot project an empty vector")
    if not np.all(np.isfinite(v)):
        raise InvalidParameterError("vector has non-finite entries")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class OptimizationResult:
    n: int
    s: int
    best: PackageDistribution
    best_value: Fraction
    uniform_value: Fraction
    restarts: int
    iterations: int
    seed: int
    source: str
    float_value: float

    @property
    def improved(self):
        return self.best_value < self.uniform_value

    def to_certificate(self):
        doc = self.best.to_dict()
        doc.update({
            "value": format_prob(self.best_value),
            "uniform_value": format_prob(self.uniform_value),
            "improved": self.improved,
            "value_float": float(self.best_value),
            "source": self.source,
            "restarts": self.restarts,
            "iterations": self.iterations,
            "seed": self.seed,
        })
        return doc

    def to_json(self, **kwargs):
        return json.dumps(self.to_certificate(), **kwargs)


def _full_support(n, s):
    return [tuple(c + 1 for c in p) for p in combinations(range(n), s)]


def _check_size(n, s):
    n, s = exact._check_ns(n, s)
    if n > MAX_N:
        raise BudgetExceededError(f"optimizer needs n <= {MAX_N}, got {n}")
    if comb(n, s) > MAX_SUPPORT:
        raise BudgetExceededError(f"C({n},{s}) = {comb(n, s)} exceeds {MAX_SUPPORT} packages")
    return n, s


def named_challengers(n, s):
    """The named distributions defined at ``(n, s)``, keyed by kind."""
    out = {}
    if s < n:
        out["near_decomposition"] = build_distribution("near_decomposition", n, s)
        out["arcs"] = build_distribution("arcs", n, s)
        if 2 * s >= n:
            out["rotation"] = build_distribution("rotation", n, s)
    return out


def _embed(dist, index):
    p = np.zeros(len(index))
    for pk, w in zip(dist.packages, dist.probs):
        p[index[pk]] += float(w)
    return p


def rationalize(packages, p, n, s):
    """Round ``p`` to multiples of ``1/10^6`` summing to exactly 1 (largest remainder).

    Returns ``None`` when the rounded support no longer covers every coupon.
    """
    p = np.maximum(np.asarray(p, dtype=np.float64), 0.0)
    scaled = p / p.sum() * GRID
    units = np.floor(scaled).astype(np.int64)
    short = GRID - int(units.sum())
    order = np.argsort(-(scaled - units), kind="stable")
    units[order[:short]] += 1
    keep = np.flatnonzero(units)
    pk = tuple(packages[i] for i in keep)
    if len(set().union(*pk)) != n:
        return None
    return PackageDistribution(n, s, pk, tuple(Fraction(int(units[i]), GRID) for i in keep), "custom")


def _descend(obj, grad, p, iters, step):
    f = obj(p)
    for _ in range(iters):
        g = grad(p)
        if not np.all(np.isfinite(g)):
            break
        while step > 1e-14:
            cand = project_to_simplex(p - step * g)
            fc = obj(cand)
            if fc < f:
                p, f = cand, fc
                step *= 1.5
                break
            step *= 0.5
        else:
            break
    return p, f


def optimize_distribution(n, s, restarts=8, iters=200, step=0.05, seed=0, h=1e-6, backend=None):
    """Best distribution found over the full package support.

    Starts are the uniform point, every named distribution defined at
    ``(n, s)`` and Dirichlet(1) draws filling the remaining ``restarts``
    slots. Named starts are always run, so the result is never worse than
    the best of them. Ties go to the earlier start.
    """
    n, s = _check_size(n, s)
    for name, v in (("restarts", restarts), ("iters", iters)):
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 0:
            raise InvalidParameterError(f"{name} must be a nonnegative integer, got {v!r}")
    if not (step > 0 and math.isfinite(step)) or not h > 0:
        raise InvalidParameterError("step and h must be positive")
    seed = int(seed)
    packages = _full_support(n, s)
    index = {pk: i for i, pk in enumerate(packages)}
    masks = np.array([sum(1 << (c - 1) for c in pk) for pk in packages], dtype=np.int64)
    m = len(packages)

    def obj(p):
        return _kernels.objective(n, masks, p, backend=backend)

    def grad(p):
        return _kernels.fd_gradient(n, masks, p, h, backend=backend)

    named = named_challengers(n, s)
    starts = [("uniform", np.full(m, 1.0 / m))] + [(k, _embed(d, index)) for k, d in named.items()]
    ss = np.random.SeedSequence(seed)
    for j, child in enumerate(ss.spawn(max(0, restarts - len(starts)))):
        starts.append((f"dirichlet[{j}]", np.random.default_rng(child).dirichlet(np.ones(m))))

    best_src, best_p, best_f = None, None, math.inf
    for name, p0 in starts:
        p, f = _descend(obj, grad, p0, iters, step)
        if f < best_f:
            best_src, best_p, best_f = name, p, f

    uni = exact.uniform_expectation(n, s, "exact")
    candidates = []
    rat = rationalize(packages, best_p, n, s)
    if rat is not None:
        candidates.append((expected_rounds(rat, "exact"), best_src, rat))
    for k, d in named.items():
        candidates.append((expected_rounds(d, "exact"), k, d))
    candidates.append((uni, "uniform", build_distribution("uniform", n, s)))
    value, src, dist = min(candidates, key=lambda c: c[0])
    fval = expected_rounds(dist, "float", backend=backend)
    return OptimizationResult(n, s, dist, value, uni, len(starts), iters, seed, src, fval)


def improvement_certificate(n, s, optimize=False, seed=0, **kwargs):
    """Exactly checked distribution beating uniform at ``2 <= s <= n - 2``.

    The challenger follows the regime: near-decomposition for ``s < n // 2``,
    otherwise arcs, together with rotation when ``s > n / 2``. The exact
    minimum is returned, or the optimizer output if ``optimize`` is set and
    it does better.
    """
    n, s = exact._check_ns(n, s)
    if n > MAX_N:
        raise BudgetExceededError(f"certificates need n <= {MAX_N}")
    if s == n - 1:
        raise InvalidParameterError("no improvement over uniform exists at s = n - 1")
    if not 2 <= s <= n - 2:
        raise InvalidParameterError(f"certificates need 2 <= s <= n - 2, got s={s}")
    uni = exact.uniform_expectation(n, s, "exact")
    named = named_challengers(n, s)
    if s < n // 2:
        kinds = ["near_decomposition"]
    else:
        kinds = ["arcs"] + (["rotation"] if 2 * s > n else [])
    cands = [(expected_rounds(named[k], "exact"), k, named[k]) for k in kinds]
    value, src, dist = min(cands, key=lambda c: c[0])
    result = OptimizationResult(n, s, dist, value, uni, 0, 0, int(seed), src, float(value))
    if optimize:
        opt = optimize_distribution(n, s, seed=seed, **kwargs)
        if opt.best_value < result.best_value:
            result = opt
    return result


@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    value: Fraction
    uniform_value: Fraction
    improved: bool
    messages: tuple


def verify_certificate(doc):
    """Recompute a certificate's value and the uniform value in exact arithmetic."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    dist = PackageDistribution.from_dict(doc)
    if not dist.is_rational:
        raise InvalidParameterError("certificate probabilities must be rational strings")
    value = expected_rounds(dist, "exact")
    uni = exact.uniform_expectation(dist.n, dist.s, "exact")
    msgs = []
    if "value" in doc and Fraction(doc["value"]) != value:
        msgs.append(f"claimed value {doc['value']} differs from recomputed {format_prob(value)}")
    if "uniform_value" in doc and Fraction(doc["uniform_value"]) != uni:
        msgs.append(f"claimed uniform value {doc['uniform_value']} differs from {format_prob(uni)}")
    improved = value < uni
    if "improved" in doc and bool(doc["improved"]) != improved:
        msgs.append(f"claimed improved={doc['improved']} but recomputed {improved}")
    return VerificationResult(not msgs, value, uni, improved, tuple(msgs))
