"""Seeded simulation of the collection process.

Every trial owns an independent SplitMix64 stream keyed by ``(seed, trial)``,
so results are bit-identical for any thread count or batch split.
"""

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _accel, _kernels
from .dist_engine import PackageDistribution
from .errors import InvalidParameterError

BATCH_TRIALS = 1 << 20
CSV_COLUMNS = ("distribution", "n", "s", "trials", "seed", "mean", "stderr", "ci_lo", "ci_hi")


def _check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidParameterError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InvalidParameterError(f"seed must lie in [0, 2^64), got {seed}")
    return seed


def _check_trials(trials):
    if isinstance(trials, bool) or not isinstance(trials, (int, np.integer)) or trials < 1:
        raise InvalidParameterError(f"trials must be a positive integer, got {trials!r}")
    return int(trials)


def _sampler_args(dist):
    """``(uniform, pkg, cdf)`` arguments for the simulation kernel."""
    if dist.kind == "uniform":
        return True, np.zeros((1, 1), dtype=np.int64), np.ones(1)
    p = dist.float_probs()
    cdf = np.cumsum(p / p.sum())
    cdf[-1] = 1.0
    return False, dist.coupon_table(), cdf


def _run(dist, n, s, trials, seed, stop_k=0, threads=None, backend=None, trial_offset=0):
    uniform, pkg, cdf = _sampler_args(dist) if dist is not None else (True, np.zeros((1, 1), np.int64), np.ones(1))
    _accel.set_threads(threads)
    parts = []
    for start in range(0, trials, BATCH_TRIALS):
        m = min(BATCH_TRIALS, trials - start)
        parts.append(_kernels.simulate(n, s, uniform, pkg, cdf, seed, m, trial_offset + start, stop_k,
                                       backend=backend))
    return np.concatenate(parts)


def collection_times(dist: PackageDistribution, trials, seed, trial_offset=0, threads=None, backend=None):
    """Rounds-to-completion of trials ``trial_offset .. trial_offset + trials - 1``."""
    trials, seed = _check_trials(trials), _check_seed(seed)
    return _run(dist, dist.n, dist.s, trials, seed, threads=threads, backend=backend, trial_offset=trial_offset)


def sample_rounds(dist: PackageDistribution, rng_state):
    """Rounds until every coupon is seen, for one ``(seed, trial)`` stream."""
    seed, trial = rng_state
    trial = int(trial)
    if trial < 0:
        raise InvalidParameterError("trial index must be nonnegative")
    return int(collection_times(dist, 1, seed, trial_offset=trial)[0])


def _tally(values):
    vals, counts = np.unique(values, return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, counts)}


@dataclass(frozen=True)
class SimulationReport:
    """Summary of ``trials`` simulated collections.

    ``counts`` maps a round count to the number of trials that ended there;
    the mean and standard error come from exact integer sums over it.
    """

    distribution: str
    n: int
    s: int
    trials: int
    seed: int
    counts: dict

    @property
    def empirical_pmf(self):
        return {k: Fraction(c, self.trials) for k, c in sorted(self.counts.items())}

    @property
    def _moments(self):
        s1 = sum(k * c for k, c in self.counts.items())
        s2 = sum(k * k * c for k, c in self.counts.items())
        return s1, s2

    @property
    def mean(self):
        return float(Fraction(self._moments[0], self.trials))

    @property
    def std_error(self):
        N = self.trials
        if N < 2:
            return math.inf
        s1, s2 = self._moments
        var = Fraction(N * s2 - s1 * s1, N * (N - 1))
        return math.sqrt(var / N)

    @property
    def ci95(self):
        m, se = self.mean, self.std_error
        return (m - 1.96 * se, m + 1.96 * se)

    def tv_distance(self, pmf):
        """Total variation against a reference ``{k: P[Y = k]}`` mapping or sequence."""
        ref = dict(enumerate(pmf)) if not isinstance(pmf, dict) else pmf
        keys = set(ref) | set(self.counts)
        emp = self.empirical_pmf
        return 0.5 * math.fsum(abs(float(emp.get(k, 0)) - float(ref.get(k, 0))) for k in keys)

    def to_dict(self):
        lo, hi = self.ci95
        return {
            "distribution": self.distribution, "n": self.n, "s": self.s, "trials": self.trials, "seed": self.seed,
            "mean": self.mean, "stderr": self.std_error, "ci_lo": lo, "ci_hi": hi,
            "empirical_pmf": {str(k): f"{c}/{self.trials}" for k, c in sorted(self.counts.items())},
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def csv_row(self):
        d = self.to_dict()
        return [d[c] if not isinstance(d[c], float) else repr(d[c]) for c in CSV_COLUMNS]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerow(self.csv_row())
        return buf.getvalue()


def estimate_expected_rounds(dist: PackageDistribution, trials, seed, threads=None, backend=None):
    """Monte Carlo estimate of the expected collection time."""
    trials, seed = _check_trials(trials), _check_seed(seed)
    y = _run(dist, dist.n, dist.s, trials, seed, threads=threads, backend=backend)
    return SimulationReport(dist.kind, dist.n, dist.s, trials, seed, _tally(y))


def empirical_missing_pmf(n, s, k, trials, seed, threads=None, backend=None):
    """Empirical law of the unseen count after ``k`` uniform draws, as ``{count: Fraction}``."""
    trials, seed = _check_trials(trials), _check_seed(seed)
    for name, v, lo in (("n", n, 1), ("s", s, 1), ("k", k, 1)):
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < lo:
            raise InvalidParameterError(f"{name} must be an integer >= {lo}, got {v!r}")
    if s > n:
        raise InvalidParameterError(f"s={s} exceeds n={n}")
    x = _run(None, int(n), int(s), trials, seed, stop_k=int(k), threads=threads, backend=backend)
    return {v: Fraction(c, trials) for v, c in sorted(_tally(x).items())}
