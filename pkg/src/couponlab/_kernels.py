"""Hot numeric kernels, each in a numba and a vectorized-numpy flavour.

The public wrappers at the bottom dispatch on ``backend`` (see ``_accel``).
Both flavours of the Monte Carlo kernel consume the random stream in the same
order and are bit-identical; the floating-point kernels agree to rounding.
"""

import numpy as np

from ._accel import njit, prange, resolve_backend

# ---------------------------------------------------------------------------
# Counter-based RNG (SplitMix64 finalizer keyed per trial)
# ---------------------------------------------------------------------------

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
SH30 = np.uint64(30)
SH27 = np.uint64(27)
SH31 = np.uint64(31)
SH11 = np.uint64(11)
INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> SH30)) * MIX1
    z = (z ^ (z >> SH27)) * MIX2
    return z ^ (z >> SH31)


@njit(cache=True, inline="always")
def _trial_key(seedmix, trial):
    return _mix64(seedmix + np.uint64(trial + 1) * GOLDEN)


@njit(cache=True, inline="always")
def _uniform01(key, counter):
    return np.float64(_mix64(key + np.uint64(counter) * GOLDEN) >> SH11) * INV53


def _mix64_np(z):
    z = (z ^ (z >> SH30)) * MIX1
    z = (z ^ (z >> SH27)) * MIX2
    return z ^ (z >> SH31)


def seed_mix(seed):
    """Master-seed whitening; ``seed`` is any integer, reduced mod 2**64."""
    z = np.array([int(seed) % (1 << 64)], dtype=np.uint64)
    return _mix64_np(z)[0]


def trial_keys(seedmix, trials):
    t = np.asarray(trials, dtype=np.uint64)
    return _mix64_np(np.uint64(seedmix) + (t + np.uint64(1)) * GOLDEN)


def uniform01_np(keys, counters):
    x = _mix64_np(keys + counters.astype(np.uint64) * GOLDEN)
    return (x >> SH11).astype(np.float64) * INV53


# ---------------------------------------------------------------------------
# Subset-lattice DP: expected rounds from the empty collection
# ---------------------------------------------------------------------------


@njit(cache=True)
def _dp_numba(n, masks, probs):
    full = (1 << n) - 1
    E = np.zeros(full + 1)
    # any strict superset has a larger integer code, so descending order is topological
    for S in range(full - 1, -1, -1):
        leave = 0.0
        acc = 0.0
        for j in range(masks.shape[0]):
            T = S | masks[j]
            if T != S:
                leave += probs[j]
                acc += probs[j] * E[T]
        E[S] = (1.0 + acc) / leave
    return E[0]


def popcounts(n):
    states = np.arange(1 << n, dtype=np.int64)
    pc = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        pc += (states >> b) & 1
    return pc


def _dp_numpy(n, masks, probs):
    full = (1 << n) - 1
    E = np.zeros(full + 1)
    pc = popcounts(n)
    chunk = max(1, (1 << 22) // max(1, masks.size))
    # states of one popcount level only feed on higher levels
    for lvl in range(n - 1, -1, -1):
        level_states = np.flatnonzero(pc == lvl)
        for lo in range(0, level_states.size, chunk):
            st = level_states[lo: lo + chunk]
            T = st[:, None] | masks[None, :]
            w = np.where(T != st[:, None], probs[None, :], 0.0)
            E[st] = (1.0 + (w * E[T]).sum(axis=1)) / w.sum(axis=1)
    return E[0]


@njit(cache=True)
def _covered_numba(n, masks, probs):
    for b in range(n):
        tot = 0.0
        bit = np.int64(1) << b
        for j in range(masks.shape[0]):
            if masks[j] & bit:
                tot += probs[j]
        if tot <= 0.0:
            return False
    return True


def _covered_numpy(n, masks, probs):
    bits = (masks[:, None] >> np.arange(n)[None, :]) & 1
    return bool(np.all((bits * probs[:, None]).sum(axis=0) > 0.0))


@njit(cache=True)
def _objective_numba(n, masks, probs):
    tot = probs.sum()
    if not tot > 0.0:
        return np.inf
    p = probs / tot
    if not _covered_numba(n, masks, p):
        return np.inf
    return _dp_numba(n, masks, p)


def _objective_numpy(n, masks, probs):
    tot = probs.sum()
    if not tot > 0.0:
        return np.inf
    p = probs / tot
    if not _covered_numpy(n, masks, p):
        return np.inf
    return _dp_numpy(n, masks, p)


@njit(cache=True)
def _fd_grad_numba(n, masks, probs, h):
    m = probs.shape[0]
    g = np.empty(m)
    x = probs.copy()
    f0 = _objective_numba(n, masks, x)
    for i in range(m):
        xi = x[i]
        x[i] = xi + h
        fu = _objective_numba(n, masks, x)
        if xi >= h:
            x[i] = xi - h
            fd = _objective_numba(n, masks, x)
            g[i] = (fu - fd) / (2.0 * h)
        else:
            g[i] = (fu - f0) / h
        x[i] = xi
    return g


def _fd_grad_numpy(n, masks, probs, h):
    x = probs.astype(np.float64).copy()
    g = np.empty(x.size)
    f0 = _objective_numpy(n, masks, x)
    for i in range(x.size):
        xi = x[i]
        x[i] = xi + h
        fu = _objective_numpy(n, masks, x)
        if xi >= h:
            x[i] = xi - h
            g[i] = (fu - _objective_numpy(n, masks, x)) / (2.0 * h)
        else:
            g[i] = (fu - f0) / h
        x[i] = xi
    return g


# ---------------------------------------------------------------------------
# Forward iteration of the collected-set distribution
# ---------------------------------------------------------------------------


@njit(cache=True)
def _rounds_cdf_numba(n, masks, probs, kmax):
    full = (1 << n) - 1
    v = np.zeros(full + 1)
    v[0] = 1.0
    cdf = np.zeros(kmax + 1)
    for k in range(1, kmax + 1):
        w = np.zeros(full + 1)
        w[full] = v[full]
        for S in range(full):
            vs = v[S]
            if vs == 0.0:
                continue
            for j in range(masks.shape[0]):
                w[S | masks[j]] += vs * probs[j]
        v = w
        cdf[k] = v[full]
    residual = v[:full].sum()
    return cdf, residual


def _rounds_cdf_numpy(n, masks, probs, kmax):
    full = (1 << n) - 1
    v = np.zeros(full + 1)
    v[0] = 1.0
    cdf = np.zeros(kmax + 1)
    for k in range(1, kmax + 1):
        live = np.flatnonzero(v[:full])
        T = (live[:, None] | masks[None, :]).ravel()
        wts = (v[live][:, None] * probs[None, :]).ravel()
        w = np.bincount(T, weights=wts, minlength=full + 1)
        w[full] += v[full]
        v = w
        cdf[k] = v[full]
    return cdf, v[:full].sum()


# ---------------------------------------------------------------------------
# Hypergeometric transition kernel of the missing-count chain
# ---------------------------------------------------------------------------


@njit(cache=True)
def _hypergeom_kernel_numba(n, s, d):
    K = np.zeros((d + 1, d + 1))
    for m in range(d + 1):
        lo = max(0, s - (n - m))
        hi = min(s, m)
        vals = np.zeros(hi - lo + 1)
        mode = ((m + 1) * (s + 1)) // (n + 2)
        mode = min(max(mode, lo), hi)
        vals[mode - lo] = 1.0
        for i in range(mode, hi):
            vals[i + 1 - lo] = vals[i - lo] * ((m - i) * (s - i)) / ((i + 1.0) * (n - m - s + i + 1.0))
        for i in range(mode, lo, -1):
            vals[i - 1 - lo] = vals[i - lo] * (i * (n - m - s + i)) / ((m - i + 1.0) * (s - i + 1.0))
        tot = vals.sum()
        for i in range(lo, hi + 1):
            K[m, m - i] = vals[i - lo] / tot
    return K


def _hypergeom_kernel_numpy(n, s, d):
    K = np.zeros((d + 1, d + 1))
    for m in range(d + 1):
        lo = max(0, s - (n - m))
        hi = min(s, m)
        mode = min(max(((m + 1) * (s + 1)) // (n + 2), lo), hi)
        up_i = np.arange(mode, hi, dtype=np.float64)
        up = np.cumprod((m - up_i) * (s - up_i) / ((up_i + 1.0) * (n - m - s + up_i + 1.0)))
        dn_i = np.arange(mode, lo, -1, dtype=np.float64)
        dn = np.cumprod(dn_i * (n - m - s + dn_i) / ((m - dn_i + 1.0) * (s - dn_i + 1.0)))
        vals = np.concatenate([dn[::-1], [1.0], up])
        i = np.arange(lo, hi + 1)
        K[m, m - i] = vals / vals.sum()
    return K


# ---------------------------------------------------------------------------
# Monte Carlo collection process
# ---------------------------------------------------------------------------


@njit(cache=True)
def _one_trial(n, s, uniform, pkg, cdf, key, stop_k, stamp, perm, rec, seen_mark, draw_mark, unseen, tick):
    """Run one trial; returns (value, tick).  ``stamp`` is unique per trial."""
    comp = uniform and s > n // 2
    kd = n - s if comp else s
    counter = 0
    rounds = 0
    nseen = 0
    nun = n
    first = True
    npk = cdf.shape[0]
    while True:
        rounds += 1
        if uniform and kd == 1 and not comp:
            # one-element partial shuffle of the identity picks perm[r] == r
            counter += 1
            c = np.int64(_uniform01(key, counter) * n)
            if seen_mark[c] != stamp:
                seen_mark[c] = stamp
                nseen += 1
            nun = n - nseen
        elif uniform:
            for j in range(kd):
                counter += 1
                u = _uniform01(key, counter)
                r = j + np.int64(u * (n - j))
                rec[j] = r
                tmp = perm[j]
                perm[j] = perm[r]
                perm[r] = tmp
            if comp:
                if first:
                    for j in range(kd):
                        unseen[j] = perm[j]
                    nun = kd
                else:
                    tick += 1
                    for j in range(kd):
                        draw_mark[perm[j]] = tick
                    w = 0
                    for q in range(nun):
                        c = unseen[q]
                        if draw_mark[c] == tick:
                            unseen[w] = c
                            w += 1
                    nun = w
            else:
                for j in range(kd):
                    c = perm[j]
                    if seen_mark[c] != stamp:
                        seen_mark[c] = stamp
                        nseen += 1
                nun = n - nseen
            for j in range(kd - 1, -1, -1):
                r = rec[j]
                tmp = perm[j]
                perm[j] = perm[r]
                perm[r] = tmp
        else:
            counter += 1
            u = _uniform01(key, counter)
            lo = 0
            hi = npk
            while lo < hi:
                mid = (lo + hi) // 2
                if cdf[mid] > u:
                    hi = mid
                else:
                    lo = mid + 1
            idx = min(lo, npk - 1)
            for j in range(pkg.shape[1]):
                c = pkg[idx, j]
                if seen_mark[c] != stamp:
                    seen_mark[c] = stamp
                    nseen += 1
            nun = n - nseen
        first = False
        if stop_k > 0:
            if rounds == stop_k or nun == 0:
                return nun, tick
        elif nun == 0:
            return rounds, tick


@njit(cache=True, parallel=True)
def _mc_numba(n, s, uniform, pkg, cdf, seedmix, trial_offset, trials, stop_k, nchunks):
    out = np.empty(trials, dtype=np.int64)
    chunk = (trials + nchunks - 1) // nchunks
    for ci in prange(nchunks):
        lo = ci * chunk
        hi = min(trials, lo + chunk)
        if lo < hi:
            perm = np.arange(n).astype(np.int64)
            kd = max(s, n - s)
            rec = np.zeros(kd + 1, dtype=np.int64)
            seen_mark = np.zeros(n, dtype=np.int64)
            draw_mark = np.zeros(n, dtype=np.int64)
            unseen = np.zeros(n, dtype=np.int64)
            tick = np.int64(0)
            for t in range(lo, hi):
                gt = trial_offset + t
                key = _trial_key(seedmix, gt)
                val, tick = _one_trial(n, s, uniform, pkg, cdf, key, stop_k, gt + 1,
                                       perm, rec, seen_mark, draw_mark, unseen, tick)
                out[t] = val
    return out


def _mc_numpy(n, s, uniform, pkg, cdf, seedmix, trial_offset, trials, stop_k, nchunks):
    # nchunks is irrelevant here: batches are processed in lockstep
    out = np.empty(trials, dtype=np.int64)
    batch = max(1, min(trials, (1 << 22) // max(1, n)))
    comp = uniform and s > n // 2
    kd = n - s if comp else s
    npk = cdf.shape[0]
    for lo in range(0, trials, batch):
        hi = min(trials, lo + batch)
        B = hi - lo
        keys = trial_keys(seedmix, trial_offset + np.arange(lo, hi))
        counter = np.zeros(B, dtype=np.uint64)
        active = np.ones(B, dtype=bool)
        result = np.zeros(B, dtype=np.int64)
        seen = np.zeros((B, n), dtype=bool)
        nseen = np.zeros(B, dtype=np.int64)
        unseen_m = np.zeros((B, n), dtype=bool)
        rnd = 0
        while active.any():
            rnd += 1
            rows = np.flatnonzero(active)
            ar = np.arange(rows.size)
            if uniform:
                perm = np.tile(np.arange(n, dtype=np.int64), (rows.size, 1))
                for j in range(kd):
                    counter[rows] += np.uint64(1)
                    u = uniform01_np(keys[rows], counter[rows])
                    r = j + (u * (n - j)).astype(np.int64)
                    a = perm[ar, j].copy()
                    perm[ar, j] = perm[ar, r]
                    perm[ar, r] = a
                coupons = perm[:, :kd]
            else:
                counter[rows] += np.uint64(1)
                u = uniform01_np(keys[rows], counter[rows])
                idx = np.minimum(np.searchsorted(cdf, u, side="right"), npk - 1)
                coupons = pkg[idx]
            if comp:
                excl = np.zeros((rows.size, n), dtype=bool)
                excl[ar[:, None], coupons] = True
                if rnd == 1:
                    unseen_m[rows] = excl
                else:
                    unseen_m[rows] &= excl
                nun = unseen_m[rows].sum(axis=1)
            else:
                fresh = ~seen[rows[:, None], coupons]
                nseen[rows] += fresh.sum(axis=1)
                seen[rows[:, None], coupons] = True
                nun = n - nseen[rows]
            if stop_k > 0:
                fin = (nun == 0) | (rnd == stop_k)
                result[rows[fin]] = nun[fin]
            else:
                fin = nun == 0
                result[rows[fin]] = rnd
            active[rows[fin]] = False
        out[lo:hi] = result
    return out


# ---------------------------------------------------------------------------
# Dispatching wrappers
# ---------------------------------------------------------------------------


def dp_expected(n, masks, probs, backend=None):
    """Expected rounds from the empty set; ``probs`` must be normalized and covering."""
    masks = np.ascontiguousarray(masks, dtype=np.int64)
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    if resolve_backend(backend) == "numba":
        return float(_dp_numba(n, masks, probs))
    return float(_dp_numpy(n, masks, probs))


def objective(n, masks, probs, backend=None):
    """Expected rounds of ``probs / probs.sum()``; ``inf`` when coverage fails."""
    masks = np.ascontiguousarray(masks, dtype=np.int64)
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    if resolve_backend(backend) == "numba":
        return float(_objective_numba(n, masks, probs))
    return float(_objective_numpy(n, masks, probs))


def fd_gradient(n, masks, probs, h=1e-6, backend=None):
    masks = np.ascontiguousarray(masks, dtype=np.int64)
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    if resolve_backend(backend) == "numba":
        return _fd_grad_numba(n, masks, probs, float(h))
    return _fd_grad_numpy(n, masks, probs, float(h))


def rounds_cdf(n, masks, probs, kmax, backend=None):
    masks = np.ascontiguousarray(masks, dtype=np.int64)
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    if resolve_backend(backend) == "numba":
        cdf, res = _rounds_cdf_numba(n, masks, probs, int(kmax))
    else:
        cdf, res = _rounds_cdf_numpy(n, masks, probs, int(kmax))
    return cdf, float(res)


def hypergeom_kernel(n, s, d, backend=None):
    """Row ``m`` (0..d) holds P[m missing -> m' missing] after one uniform draw."""
    if resolve_backend(backend) == "numba":
        return _hypergeom_kernel_numba(int(n), int(s), int(d))
    return _hypergeom_kernel_numpy(int(n), int(s), int(d))


def simulate(n, s, uniform, pkg, cdf, seed, trials, trial_offset=0, stop_k=0, nchunks=64, backend=None):
    """Per-trial outcomes: rounds to completion, or unseen count after ``stop_k`` draws."""
    pkg = np.ascontiguousarray(pkg, dtype=np.int64)
    cdf = np.ascontiguousarray(cdf, dtype=np.float64)
    sm = seed_mix(seed)
    nchunks = max(1, min(int(nchunks), int(trials)))
    args = (int(n), int(s), bool(uniform), pkg, cdf, sm, int(trial_offset), int(trials), int(stop_k), nchunks)
    if resolve_backend(backend) == "numba":
        return _mc_numba(*args)
    return _mc_numpy(*args)
