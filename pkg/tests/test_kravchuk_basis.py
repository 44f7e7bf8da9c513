from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kravchuk_zeros.kravchuk_basis import (BASIS_N_MAX, BasisInstabilityError, analyze_coefficients, gram_deviation,
                                  kravchuk_functions, kravchuk_polynomials, log_binomial, synthesize,
                                  transform_via_basis)


def exact_kravchuk(n, l, N):
    """Q_n(l; N) = 2F1(-n, -l; -N; 2) in exact rational arithmetic."""
    total, term = Fraction(1), Fraction(1)
    for k in range(min(n, l)):
        term = term * Fraction(2 * (k - n) * (k - l), (k - N) * (k + 1))
        total += term
    return total


def test_q0_is_one_and_q1_is_linear():
    Q = kravchuk_polynomials(9)
    np.testing.assert_array_equal(Q[0], 1.0)
    np.testing.assert_allclose(Q[1], 1 - 2 * np.arange(10) / 9, rtol=1e-15)


@pytest.mark.parametrize("N", [1, 2, 4, 7, 12])
def test_polynomials_match_exact_hypergeometric(N):
    Q = kravchuk_polynomials(N)
    exact = np.array([[float(exact_kravchuk(n, l, N)) for l in range(N + 1)] for n in range(N + 1)])
    np.testing.assert_allclose(Q, exact, rtol=1e-12, atol=1e-12)


def test_orthogonality_small_case_tight():
    N = 4
    Q = kravchuk_polynomials(N)
    w = np.array([comb(N, l) for l in range(N + 1)], dtype=float)
    lhs = (Q * w) @ Q.T
    rhs = np.diag([2.0**N / comb(N, n) for n in range(N + 1)])
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_generating_identity_stated_point():
    N, z = 20, 0.3 + 0.2j
    Q = kravchuk_polynomials(N)
    C = np.array([comb(N, n) for n in range(N + 1)], dtype=float)
    lhs = (C * z ** np.arange(N + 1)) @ Q
    l = np.arange(N + 1)
    rhs = (1 - z) ** l * (1 + z) ** (N - l)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-8)


def test_log_binomial_matches_integer_binomials():
    for N in (1, 5, 30, 200):
        k = np.arange(N + 1)
        exact = np.array([np.log(float(comb(N, int(i)))) for i in k])
        np.testing.assert_allclose(log_binomial(N, k), exact, rtol=1e-13, atol=1e-11)


def test_gram_small_n_tight():
    assert gram_deviation(4).max() < 1e-13
    assert gram_deviation(20).max() < 1e-10
    q = kravchuk_functions(10)
    assert q.n_max == 10 and q.functions.shape == (11, 11)
    np.testing.assert_allclose(q.gram(), np.eye(11), atol=1e-13)


def test_gram_deviation_large_n_is_far_above_machine_precision():
    dev = gram_deviation(100)
    assert dev.shape == (101, 101)
    np.testing.assert_array_equal(dev, dev.T)
    assert dev[81].max() > 1e-12
    assert dev.max() > 1e6 * gram_deviation(20).max()


def test_basis_results_are_read_only():
    with pytest.raises(ValueError):
        kravchuk_polynomials(5)[0, 0] = 2.0


def test_analyze_basis_row_and_parseval(rng):
    q = kravchuk_functions(16).functions
    e3 = np.zeros(17)
    e3[3] = 1
    np.testing.assert_allclose(analyze_coefficients(q[3]), e3, atol=1e-10)
    y = rng.standard_normal(33) + 1j * rng.standard_normal(33)
    assert abs(np.linalg.norm(analyze_coefficients(y)) - np.linalg.norm(y)) < 1e-10 * np.linalg.norm(y)


def test_synthesize_inverts_analyze(rng):
    y = rng.standard_normal(21) + 1j * rng.standard_normal(21)
    np.testing.assert_allclose(synthesize(analyze_coefficients(y)), y, atol=1e-12)


def test_guard_refuses_large_n():
    with pytest.raises(BasisInstabilityError, match="orthogonality"):
        analyze_coefficients(np.ones(BASIS_N_MAX + 2))
    with pytest.raises(BasisInstabilityError):
        transform_via_basis(np.ones(BASIS_N_MAX + 2), 1.0, 0.0)
    assert analyze_coefficients(np.ones(BASIS_N_MAX + 2), n_max=100).shape == (BASIS_N_MAX + 2,)


def test_transform_via_basis_on_delta_closed_form():
    # y = delta_0 -> sum_n sqrt(C) q_n(0) cos^n sin^{N-n} e^{i n phi} = ((s + c e^{i phi}) / sqrt 2)^N
    N, theta, phi = 12, 1.1, 0.7
    y = np.zeros(N + 1)
    y[0] = 1
    s, c = np.sin(theta / 2), np.cos(theta / 2)
    expected = ((s + c * np.exp(1j * phi)) / np.sqrt(2)) ** N
    assert abs(transform_via_basis(y, theta, phi) - expected) < 1e-13


def test_transform_via_basis_broadcasts(rng):
    y = rng.standard_normal(9)
    th = np.linspace(0.1, 3.0, 4)[:, None]
    ph = np.linspace(0, 6, 5)[None, :]
    out = transform_via_basis(y, th, ph)
    assert out.shape == (4, 5)
    assert out[2, 3] == pytest.approx(transform_via_basis(y, th[2, 0], ph[0, 3]))


@settings(max_examples=30, deadline=None)
@given(N=st.integers(1, 30), zr=st.floats(-1.4, 1.4), zi=st.floats(-1.4, 1.4))
def test_generating_identity_property(N, zr, zi):
    z = complex(zr, zi)
    Q = kravchuk_polynomials(N)
    terms = np.array([comb(N, n) for n in range(N + 1)], dtype=float)[:, None] * (z ** np.arange(N + 1))[:, None] * Q
    lhs = terms.sum(axis=0)
    l = np.arange(N + 1)
    rhs = (1 - z) ** l * (1 + z) ** (N - l)
    scale = np.abs(terms).sum(axis=0)
    assert np.all(np.abs(lhs - rhs) <= 1e-8 * np.maximum(scale, np.abs(rhs)))
