"""Synthetic observations: smooth chirps, complex white Gaussian noise and their mixture."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_samples, check_positive_int, stream


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled complex signal of length N + 1.

    Parameters
    ----------
    samples : array_like of complex
        Sample values, at least two.
    t0 : float, default=0.0
        Time of the first sample, in seconds.
    dt : float, default=1.0
        Sampling step, in seconds.
    """

    samples: np.ndarray
    t0: float = 0.0
    dt: float = 1.0

    def __post_init__(self):
        arr = as_samples(self.samples, name="samples").copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if not math.isfinite(self.t0):
            raise ValueError("t0 must be finite")
        if not math.isfinite(self.norm()):
            raise ValueError("signal norm overflows")

    @property
    def N(self) -> int:
        """Degree N, i.e. the number of samples minus one."""
        return self.samples.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        """Sample times ``t0 + l * dt``."""
        return self.t0 + self.dt * np.arange(self.samples.shape[0])

    def norm(self) -> float:
        """Euclidean norm of the samples."""
        return float(np.linalg.norm(self.samples))

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.samples, dtype=dtype)


@dataclass(frozen=True)
class ChirpSpec:
    """Parameters of a linear chirp with a smooth compactly supported envelope.

    Parameters
    ----------
    f1, f2 : float
        Start and end frequencies (Hz).
    nu : float
        Half-duration of the chirp (s); the envelope vanishes for ``|t| >= nu``.
    window : float
        Total observation length (s), centred on t = 0.
    n_samples : int
        Number of samples N + 1.
    """

    f1: float = 0.5
    f2: float = 1.25
    nu: float = 15.0
    window: float = 40.0
    n_samples: int = 513

    def __post_init__(self):
        check_positive_int(self.n_samples, "n_samples", minimum=2)
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not 2 * self.nu <= self.window:
            raise ValueError(f"chirp duration 2*nu={2 * self.nu} exceeds window={self.window}")
        if not (self.f1 > 0 and self.f2 > 0):
            raise ValueError("frequencies must be positive")
        nyquist = self.n_samples / (2.0 * self.window)
        if max(self.f1, self.f2) >= nyquist:
            raise ValueError(
                f"max(f1, f2)={max(self.f1, self.f2)} Hz is not below the Nyquist limit {nyquist} Hz"
            )

    @property
    def dt(self) -> float:
        return self.window / (self.n_samples - 1)

    def times(self) -> np.ndarray:
        """Sample times ``-window/2 + l * window / N``."""
        N = self.n_samples - 1
        return -self.window / 2 + np.arange(N + 1) * (self.window / N)


def bump_envelope(t, nu: float) -> np.ndarray:
    """Smooth bump ``exp(1 - nu^2 / (nu^2 - t^2))`` on ``|t| < nu``, zero elsewhere.

    The bump equals 1 at t = 0 and is infinitely differentiable on the real line.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < nu
    ti = t[inside]
    out[inside] = np.exp(1.0 - nu**2 / (nu**2 - ti**2))
    return out


def make_chirp(spec: ChirpSpec) -> Signal:
    """Sample the chirp ``A_nu(t) sin(2 pi f(t) t)`` with ``f`` linear from f1 to f2.

    The instantaneous-frequency law is
    ``f(t) = f1 + (f2 - f1) (t + nu) / (2 nu)`` and the envelope is
    :func:`bump_envelope`, so samples vanish exactly outside ``(-nu, nu)``.

    Returns
    -------
    Signal
        Real-valued samples stored as complex numbers.
    """
    t = spec.times()
    freq = spec.f1 + (spec.f2 - spec.f1) * (t + spec.nu) / (2 * spec.nu)
    x = bump_envelope(t, spec.nu) * np.sin(2 * np.pi * freq * t)
    return Signal(x.astype(np.complex128), t0=float(t[0]), dt=spec.dt)


def sample_cwgn(n: int, seed, *, t0: float = 0.0, dt: float = 1.0) -> Signal:
    """Draw ``n`` samples of circular complex white Gaussian noise N_C(0, 1).

    Real and imaginary parts are independent with variance 1/2 each.

    Parameters
    ----------
    n : int
        Number of samples, at least 2.
    seed : int, SeedSequence or Generator
        Source of randomness; identical seeds give identical samples.
    t0, dt : float
        Time axis attached to the result.
    """
    n = check_positive_int(n, "n", minimum=2)
    rng = stream(seed)
    z = rng.standard_normal((2, n))
    return Signal((z[0] + 1j * z[1]) / math.sqrt(2.0), t0=t0, dt=dt)


def mix(x, xi, snr: float = 0.0, *, noiseless: bool = False) -> Signal:
    """Observation ``snr * x / ||x|| + xi / ||xi||``.

    Parameters
    ----------
    x : Signal or array_like
        Deterministic component.
    xi : Signal or array_like or None
        Noise component. Ignored (and may be None) when ``noiseless``.
    snr : float
        Non-negative signal-to-noise ratio. ``math.inf`` is accepted and
        treated as ``noiseless=True``.
    noiseless : bool, default=False
        Return the normalized deterministic signal alone.

    Returns
    -------
    Signal
        Carries the time axis of `x` when `x` is a Signal.

    Raises
    ------
    ValueError
        On a length mismatch, a negative snr or when both inputs vanish.
    """
    snr = float(snr)
    if math.isnan(snr) or snr < 0:
        raise ValueError(f"snr must be non-negative, got {snr}")
    if math.isinf(snr):
        noiseless = True
    t0 = getattr(x, "t0", getattr(xi, "t0", 0.0))
    dt = getattr(x, "dt", getattr(xi, "dt", 1.0))
    xs = as_samples(x, name="x")
    nx = np.linalg.norm(xs)
    if noiseless:
        if nx == 0:
            raise ValueError("noiseless mixture of a zero signal")
        return Signal(xs / nx, t0=t0, dt=dt)
    ns = as_samples(xi, name="xi")
    if ns.shape != xs.shape:
        raise ValueError(f"length mismatch: x has {xs.shape[0]} samples, xi has {ns.shape[0]}")
    nn = np.linalg.norm(ns)
    if nx == 0 and nn == 0:
        raise ValueError("both x and xi are zero")
    out = np.zeros_like(xs)
    if nn > 0:
        out += ns / nn
    if snr > 0 and nx > 0:
        out += snr * (xs / nx)
    return Signal(out, t0=t0, dt=dt)
