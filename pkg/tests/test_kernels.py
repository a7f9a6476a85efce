import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from couponlab import _accel, _kernels as K
from couponlab.dist_engine import build_distribution

M64 = (1 << 64) - 1


def splitmix_output(state):
    """Pure-Python SplitMix64: output for a state already advanced by the increment."""
    z = state & M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


def test_mix_matches_reference_splitmix():
    # first output of SplitMix64 seeded with 0
    assert int(K._mix64(K.GOLDEN)) == 0xE220A8397B1DCDAF
    xs = np.array([1, 2**63, M64, 12345], dtype=np.uint64)
    assert [int(v) for v in K._mix64_np(xs)] == [splitmix_output(int(v)) for v in xs]


def test_uniform_stream_matches_python():
    sm = K.seed_mix(99)
    key = int(K.trial_keys(sm, np.array([5]))[0])
    ref = [(splitmix_output(key + c * 0x9E3779B97F4A7C15) >> 11) * 2.0**-53 for c in range(1, 6)]
    got = K.uniform01_np(np.full(5, key, dtype=np.uint64), np.arange(1, 6))
    assert list(got) == ref
    assert all(float(K._uniform01(np.uint64(key), c)) == r for c, r in zip(range(1, 6), ref))


def test_uniform_range():
    u = K.uniform01_np(K.trial_keys(K.seed_mix(1), np.arange(10000)), np.ones(10000, dtype=np.int64))
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01


def test_backend_resolution():
    assert _accel.resolve_backend("numpy") == "numpy"
    with pytest.raises(ValueError):
        _accel.resolve_backend("cuda")


def test_env_flag_selects_numpy():
    code = "from couponlab import _accel; print(_accel.resolve_backend())"
    env = dict(os.environ, COUPONLAB_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def _named(kind, n, s):
    d = build_distribution(kind, n, s)
    return d.masks(), d.float_probs()


@pytest.mark.parametrize("kind, n, s", [("uniform", 8, 3), ("arcs", 10, 4), ("near_decomposition", 9, 4)])
def test_dp_backends_agree(kind, n, s):
    m, p = _named(kind, n, s)
    a = K.dp_expected(n, m, p, backend="numba")
    b = K.dp_expected(n, m, p, backend="numpy")
    assert a == pytest.approx(b, rel=1e-13)


def test_objective_infinite_when_uncovered():
    m, p = _named("arcs", 6, 2)
    p = p.copy()
    p[[0, 5]] = 0.0  # arcs {1,2} and {6,1}: coupon 1 unreachable
    for b in ("numba", "numpy"):
        assert K.objective(6, m, p, backend=b) == np.inf


def test_fd_gradient_backends_agree():
    m, p = _named("uniform", 6, 2)
    rng = np.random.default_rng(3)
    q = rng.dirichlet(np.ones(p.size))
    g1 = K.fd_gradient(6, m, q, backend="numba")
    g2 = K.fd_gradient(6, m, q, backend="numpy")
    assert np.allclose(g1, g2, rtol=1e-6, atol=1e-7)
    # scale invariance of the normalized objective: gradient is orthogonal to p
    assert abs(g1 @ q) < 1e-4


def test_rounds_cdf_backends_agree():
    m, p = _named("arcs", 9, 3)
    c1, r1 = K.rounds_cdf(9, m, p, 30, backend="numba")
    c2, r2 = K.rounds_cdf(9, m, p, 30, backend="numpy")
    assert np.allclose(c1, c2, atol=1e-13) and r1 == pytest.approx(r2, abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 300).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))))
def test_hypergeom_rows_normalized(ns):
    n, s = ns
    d = n - s
    Kn = K.hypergeom_kernel(n, s, d, backend="numba")
    Kp = K.hypergeom_kernel(n, s, d, backend="numpy")
    assert np.allclose(Kn.sum(axis=1), 1.0, atol=1e-12)
    assert np.allclose(Kn, Kp, atol=1e-14)


@pytest.mark.parametrize("uniform_kind", [True, False])
def test_simulation_bit_identical(uniform_kind):
    if uniform_kind:
        args = (25, 17, True, np.zeros((1, 1), dtype=np.int64), np.ones(1))
    else:
        d = build_distribution("arcs", 12, 5)
        args = (12, 5, False, d.coupon_table(), np.cumsum(d.float_probs()))
    ref = K.simulate(*args, 2024, 3000, backend="numba", nchunks=64)
    for backend, chunks in [("numpy", 64), ("numba", 1), ("numba", 7), ("numpy", 3)]:
        assert np.array_equal(K.simulate(*args, 2024, 3000, backend=backend, nchunks=chunks), ref)
    # trial offsets address the same streams
    tail = K.simulate(*args, 2024, 1000, trial_offset=2000)
    assert np.array_equal(tail, ref[2000:])
