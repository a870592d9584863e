import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from conftest import random_zeros
from hardyphase.errors import InputError, NumericalError
from hardyphase.factorization import BlaschkeProduct
from hardyphase.generators import EXAMPLE1_ZERO, gen_example1, gen_example2, sample_function
from hardyphase.paraconjugate import (
    LaurentCoefficients,
    PoleSet,
    extract_inner_poles,
    extract_outer_poles,
    laurent_coeffs,
    mqpc_retrieve,
    numerical_rank,
    pr_boundary,
    zeros_from_poles,
)
from hardyphase.sampling import CircleGrid, RealSamples


def blaschke(zeros):
    return lambda z: np.prod([(z - a) / (1 - np.conj(a) * z) for a in zeros], axis=0)


def inner_mod(func, n, r):
    g = CircleGrid(n, r)
    return RealSamples(g, np.abs(func(g.points)))


def coeffs(func, n, r, N):
    return laurent_coeffs(pr_boundary(inner_mod(func, n, r)), N, r)


def max_match(found, truth):
    found, truth = np.asarray(found), np.asarray(truth)
    if found.size != truth.size:
        return np.inf
    cost = np.abs(found[:, None] - truth[None, :])
    i, j = linear_sum_assignment(cost)
    return cost[i, j].max()


def test_pr_examples():
    g = CircleGrid(16, 0.8)
    np.testing.assert_allclose(pr_boundary(RealSamples(g, np.full(16, 0.8))).values, 0.64)
    np.testing.assert_array_equal(pr_boundary(RealSamples(g, np.ones(16))).values, 1.0)
    p = pr_boundary(inner_mod(blaschke([0.5]), 16, 0.8))
    assert p.values[0] == pytest.approx(0.25, abs=1e-15)
    assert p.grid.rho == 1.0


def test_pr_rejects_negative():
    with pytest.raises(InputError):
        pr_boundary(RealSamples(CircleGrid(4, 0.5), [1, -1, 1, 1]))


def test_laurent_constant():
    lc = laurent_coeffs(RealSamples(CircleGrid(32, 1.0), np.ones(32)), 10, 0.8)
    assert lc[0] == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(np.delete(lc.coeffs, 10), 0.0, atol=1e-14)


def test_laurent_identity_factor():
    lc = coeffs(lambda z: z, 64, 0.8, 20)
    assert lc[0] == pytest.approx(0.64, abs=1e-14)
    np.testing.assert_allclose(np.delete(lc.coeffs, 20), 0.0, atol=1e-14)


def test_laurent_matches_dense_quadrature():
    a, r, N = 0.5, 0.8, 40
    lc = coeffs(blaschke([a]), 256, r, N)

    def P(z):
        return ((r * z - a) / (1 - np.conj(a) * r * z)) * ((1 - np.conj(a) * z / r) / (z / r - a))

    m = 8192
    t = 2 * np.pi * np.arange(m) / m
    vals = P(np.exp(1j * t))
    for k in range(-N, N + 1):
        ref = np.mean(vals * np.exp(-1j * k * t))
        assert abs(lc[k] - ref) <= 1e-10


def test_laurent_order_limit():
    pr = RealSamples(CircleGrid(16, 1.0), np.ones(16))
    laurent_coeffs(pr, 7, 0.5)
    with pytest.raises(InputError):
        laurent_coeffs(pr, 8, 0.5)
    with pytest.raises(IndexError):
        laurent_coeffs(pr, 7, 0.5)[8]


@settings(max_examples=20)
@given(st.integers(1, 10), st.floats(0.5, 0.95), st.integers(0, 2**32 - 1))
def test_hermitian_symmetry_and_real_c0(k, r, seed):
    zeros = random_zeros(np.random.default_rng(seed), k, 0.9, 0.05)
    lc = coeffs(blaschke(zeros), 512, r, 200)
    np.testing.assert_allclose(lc.negative, np.conj(lc.positive), atol=1e-10)
    assert abs(lc[0].imag) <= 1e-12 and lc[0].real > 0


@settings(max_examples=20)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_coefficient_decay(k, seed):
    zeros = random_zeros(np.random.default_rng(seed), k, 0.8, 0.05)
    r = 0.9
    lc = coeffs(blaschke(zeros), 1024, r, 200)
    assert abs(lc[200]) < 1e-6 * abs(lc[0])


def test_no_principal_part_gives_no_poles():
    lc = laurent_coeffs(RealSamples(CircleGrid(64, 1.0), np.ones(64)), 20, 0.8)
    ps = extract_inner_poles(lc)
    assert ps == PoleSet()


def test_single_pole():
    ps = extract_inner_poles(coeffs(blaschke([0.5]), 256, 0.8, 120))
    assert len(ps.inner_poles) == 1 and ps.origin_count == 0
    assert abs(ps.inner_poles[0] - 0.4) <= 1e-8


def test_origin_and_single_pole():
    f = lambda z: z * blaschke([0.5])(z)
    ps = extract_inner_poles(coeffs(f, 256, 0.8, 120))
    assert ps.origin_count == 1
    assert len(ps.inner_poles) == 1 and abs(ps.inner_poles[0] - 0.4) <= 1e-8


def test_origin_only_multiplicity():
    ps = extract_inner_poles(coeffs(lambda z: z**3, 128, 0.8, 60))
    assert ps.inner_poles == () and ps.origin_count == 3


def test_repeated_zero_merged():
    f = lambda z: blaschke([0.4j, 0.4j])(z)
    ps = extract_inner_poles(coeffs(f, 1024, 0.8, 200))
    assert len(ps.inner_poles) == 2
    assert ps.inner_poles[0] == ps.inner_poles[1]
    assert abs(ps.inner_poles[0] - 0.32j) <= 1e-4


def test_numerical_rank_rules():
    S = np.array([1.0, 0.5, 1e-9, 1e-19, 1e-20])
    assert numerical_rank(S, "threshold") == 2
    assert numerical_rank(S, "gap") == 3
    assert numerical_rank(S) == 3
    # noise just above the floor must not hide a clear gap
    assert numerical_rank(np.array([1.0, 3e-13, 2e-13, 1.5e-13]), "gap") == 1
    with pytest.raises(InputError):
        numerical_rank(S, "other")


def test_ill_conditioned_pencil_raises():
    # forcing rank 5 on a one-pole sequence keeps singular values at round-off
    lc = coeffs(blaschke([0.5]), 256, 0.8, 120)
    with pytest.raises(NumericalError, match="pole extraction unstable"):
        extract_inner_poles(lc, order=5)
    ps = extract_inner_poles(lc, order=5, allow_ill_conditioned=True)
    assert ps.condition > 1e12


def test_order_selection_recovers_small_last_pole():
    # ten zeros whose last Hankel singular value sits near 2e-13 relative
    rng = np.random.default_rng(71)
    zeros = random_zeros(rng, int(rng.integers(1, 11)), 0.8, 0.05)
    assert zeros.size == 10
    mf, _ = sample_function(blaschke(zeros), 1024, [0.9])
    res = mqpc_retrieve(mf, r=0.9)
    assert max_match(res.inner.all_zeros(), zeros) <= 1e-6
    # the bare pencil with the gap rule misses one
    assert len(res.extra["poles"].inner_poles) == 10
    plain = mqpc_retrieve(mf, r=0.9, polish=False)
    assert len(plain.inner.zeros) == 9


def test_noise_rank_rule():
    S = np.array([1.0, 1e-3, 2e-13, 3e-15, 2e-15, 1e-15])
    assert numerical_rank(S, "noise") == 3
    assert numerical_rank(np.array([1.0, 0.5, 0.1]), "noise") == 3


def test_zeros_from_poles_examples():
    assert zeros_from_poles(PoleSet((0.4,)), 0.8).zeros == (0.5,)
    assert zeros_from_poles(PoleSet((), 3), 0.8) == BlaschkeProduct(m=3)
    B = zeros_from_poles(PoleSet((0.4, 0.2j)), 0.8)
    np.testing.assert_allclose(B.zeros, [0.5, 0.25j])
    with pytest.raises(NumericalError, match="inconsistent pole radius"):
        zeros_from_poles(PoleSet((0.85,)), 0.8)


def test_outer_pole_family():
    zeros = [0.5, -0.3 + 0.4j]
    r = 0.8
    lc = coeffs(blaschke(zeros), 512, r, 200)
    outer = extract_outer_poles(lc)
    expected = [1 / (r * np.conj(a)) for a in zeros]
    assert max_match(outer, expected) <= 1e-6


def test_outer_only_measurements():
    mf, _ = sample_function(lambda z: 2.0 - z + 0.3 * z**2, 64, [0.8])
    res = mqpc_retrieve(mf)
    assert res.inner == BlaschkeProduct()
    assert res.final_error <= 1e-5


def test_example1():
    mf, _ = gen_example1(256, [0.7])
    res = mqpc_retrieve(mf, r=0.7)
    assert res.inner.m == 5 and len(res.inner.zeros) == 1
    assert abs(res.inner.zeros[0] - EXAMPLE1_ZERO) <= 1e-6
    assert res.final_error <= 1e-5


def test_example2_seeded():
    mf, _, zeros = gen_example2(1024, [0.8], seed=42)
    res = mqpc_retrieve(mf, r=0.8)
    assert max_match(res.inner.all_zeros(), zeros) <= 1e-4


def test_missing_circle():
    mf, _ = gen_example1(64, [0.5])
    with pytest.raises(InputError, match="interior circle at r missing"):
        mqpc_retrieve(mf, r=0.8)
    with pytest.raises(InputError):
        mqpc_retrieve(mf, r=1.0)


@settings(max_examples=15)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_pole_zero_duality(k, seed):
    zeros = random_zeros(np.random.default_rng(seed), k, 0.8, 0.05)
    mf, _ = sample_function(blaschke(zeros), 1024, [0.9])
    found = mqpc_retrieve(mf, r=0.9).inner.all_zeros()
    assert max_match(found, zeros) <= 1e-6


def test_r_independence():
    zeros = random_zeros(np.random.default_rng(5), 6, 0.6, 0.1)
    mf, _ = sample_function(blaschke(zeros), 1024, [0.7, 0.8, 0.9])
    found = [mqpc_retrieve(mf, r=r).inner.all_zeros() for r in (0.7, 0.8, 0.9)]
    assert max_match(found[0], found[1]) <= 1e-5
    assert max_match(found[1], found[2]) <= 1e-5
