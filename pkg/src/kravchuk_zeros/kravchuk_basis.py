"""Kravchuk polynomials and functions built by three-term recursion.

The recursion is numerically unstable for large N. This module keeps it as a
reference path for small N and exposes the loss of orthogonality as a
diagnostic; the stable transform lives in :mod:`kravchuk_zeros.kravchuk`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from ._validation import as_samples, check_positive_int

#: Largest N accepted by computations that rely on the recursion-built basis.
BASIS_N_MAX = 64


class BasisInstabilityError(ValueError):
    """Raised when a basis-path computation is requested above the guard."""


def log_binomial(N: int, k) -> np.ndarray:
    """Natural log of the binomial coefficient C(N, k) through log-gamma."""
    k = np.asarray(k, dtype=float)
    return gammaln(N + 1.0) - gammaln(k + 1.0) - gammaln(N - k + 1.0)


def _check_guard(N: int, n_max: int) -> None:
    if N > n_max:
        raise BasisInstabilityError(
            f"N={N} exceeds the basis guard {n_max}: the three-term recursion loses "
            "orthogonality at this size; use the closed-form transform instead"
        )


@lru_cache(maxsize=32)
def _polynomials(N: int) -> np.ndarray:
    t = np.arange(N + 1, dtype=float)
    Q = np.empty((N + 1, N + 1))
    Q[0] = 1.0
    # n = 0 step of the recursion: N Q_1 = (N - 2t) Q_0
    Q[1] = (N - 2 * t) / N
    for n in range(1, N):
        Q[n + 1] = ((N - 2 * t) * Q[n] - n * Q[n - 1]) / (N - n)
    Q.setflags(write=False)
    return Q


def kravchuk_polynomials(N: int) -> np.ndarray:
    """Kravchuk polynomials ``Q_n(l; N)`` for ``n, l = 0..N``.

    Built with ``(N - n) Q_{n+1}(t) = (N - 2t) Q_n(t) - n Q_{n-1}(t)``,
    starting from ``Q_0 = 1``; the n = 0 step defines ``Q_1 = 1 - 2t/N``.

    Parameters
    ----------
    N : int
        Degree, at least 1.

    Returns
    -------
    ndarray, shape (N + 1, N + 1)
        Row n holds ``Q_n(l; N)`` for ``l = 0..N``. Read-only.
    """
    N = check_positive_int(N, "N")
    return _polynomials(N)


@dataclass(frozen=True, eq=False)
class KravchukBasis:
    """Kravchuk functions of degree N as rows of a real matrix.

    Attributes
    ----------
    n_max : int
        The degree N.
    functions : ndarray, shape (N + 1, N + 1)
        Row n holds ``q_n(l; N)``, ``l = 0..N``.
    """

    n_max: int
    functions: np.ndarray

    def gram(self) -> np.ndarray:
        return self.functions @ self.functions.T


@lru_cache(maxsize=32)
def _functions(N: int) -> np.ndarray:
    Q = _polynomials(N)
    half_lc = 0.5 * log_binomial(N, np.arange(N + 1))
    scale = np.exp(half_lc[:, None] + half_lc[None, :] - 0.5 * N * np.log(2.0))
    q = scale * Q
    q.setflags(write=False)
    return q


def kravchuk_functions(N: int) -> KravchukBasis:
    """Orthonormal Kravchuk functions.

    ``q_n(l) = 2^{-N/2} sqrt(C(N, n)) Q_n(l) sqrt(C(N, l))``, binomials via
    log-gamma. The rows are orthonormal in exact arithmetic; in floating
    point they drift away from orthonormality as N grows.
    """
    N = check_positive_int(N, "N")
    return KravchukBasis(n_max=N, functions=_functions(N))


def gram_deviation(N: int) -> np.ndarray:
    """Matrix of ``|<q_m, q_n> - delta_mn|`` for the recursion-built basis.

    Returns
    -------
    ndarray, shape (N + 1, N + 1)
        Symmetric deviation matrix; its maximum summarizes the loss of
        orthonormality.
    """
    q = kravchuk_functions(N).functions
    return np.abs(q @ q.T - np.eye(N + 1))


def analyze_coefficients(y, *, n_max: int = BASIS_N_MAX) -> np.ndarray:
    """Coefficients ``(Qy)[n] = sum_l conj(y[l]) q_n(l)`` of y in the Kravchuk basis.

    Parameters
    ----------
    y : Signal or array_like
        Signal of length N + 1.
    n_max : int, default=BASIS_N_MAX
        Guard on N; larger inputs are refused because of the recursion's
        instability.

    Returns
    -------
    ndarray of complex, shape (N + 1,)

    Raises
    ------
    BasisInstabilityError
        If N > n_max.
    """
    ys = as_samples(y)
    N = ys.shape[0] - 1
    _check_guard(N, n_max)
    return kravchuk_functions(N).functions @ np.conj(ys)


def synthesize(coefficients, *, n_max: int = BASIS_N_MAX) -> np.ndarray:
    """Signal whose Kravchuk coefficients are `coefficients` (inverse of `analyze_coefficients`)."""
    c = as_samples(coefficients, name="coefficients")
    N = c.shape[0] - 1
    _check_guard(N, n_max)
    return np.conj(kravchuk_functions(N).functions.T @ c)


def transform_via_basis(y, theta, phi, *, n_max: int = BASIS_N_MAX) -> np.ndarray:
    """Kravchuk transform evaluated through the basis expansion.

    ``T(theta, phi) = sum_n sqrt(C(N, n)) cos^n(theta/2) sin^{N-n}(theta/2) e^{i n phi} (Qy)[n]``

    Parameters
    ----------
    y : Signal or array_like
        Signal of length N + 1, N <= n_max.
    theta, phi : array_like
        Broadcastable spherical coordinates (rad).

    Returns
    -------
    complex or ndarray of complex
        Transform values with the broadcast shape of theta and phi.
    """
    Qy = analyze_coefficients(y, n_max=n_max)
    N = Qy.shape[0] - 1
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    coef = np.sqrt(np.exp(log_binomial(N, np.arange(N + 1)))) * Qy
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    e = np.exp(1j * phi)
    # Horner in u = (c/s) e^{i phi} on the southern half, in 1/u on the northern half
    south = c <= s
    lead = np.where(south, s, c)
    ratio = np.where(south, c, s) / lead
    u = ratio * np.where(south, e, np.conj(e))
    acc = np.zeros(theta.shape, dtype=complex)
    for k in range(N + 1):
        acc = acc * u + np.where(south, coef[N - k], coef[k])
    out = acc * lead**N * np.where(south, 1.0, e**N)
    return out[()] if out.ndim == 0 else out
