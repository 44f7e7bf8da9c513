"""Gaussian-window short-time Fourier transform baseline.

The spectrogram is computed on the signal's sample times and zeros are
located in Bargmann coordinates ``z = (omega + i t) / sqrt(2)``, in which the
zeros of the STFT of white noise form a stationary pattern of density 1/pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._validation import as_samples, check_positive_int
from .spatial_stats import CurveEstimate
from .zeros import extract_zeros_planar

#: Default number of frequencies in [0, Nyquist].
N_FREQS = 512
#: Default F radius cap (Bargmann units); see :func:`planar_f_radii`.
PLANAR_R_MAX = math.pi


def gaussian_window(t) -> np.ndarray:
    """Unit-norm circular Gaussian window ``pi^{-1/4} exp(-t^2 / 2)``."""
    t = np.asarray(t, dtype=float)
    return np.pi ** -0.25 * np.exp(-0.5 * t**2)


@dataclass(frozen=True, eq=False)
class PlanarSpectrogram:
    """``|V y(t, omega)|^2`` on a time x angular-frequency grid.

    Attributes
    ----------
    times : ndarray, shape (n_t,)
        Seconds.
    freqs : ndarray, shape (n_f,)
        Angular frequencies (rad/s).
    values : ndarray, shape (n_t, n_f)
    transform_values : ndarray of complex or None
    """

    times: np.ndarray
    freqs: np.ndarray
    values: np.ndarray
    transform_values: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (np.size(self.times), np.size(self.freqs)):
            raise ValueError("values shape does not match (times, freqs)")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("spectrogram values must be finite and non-negative")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "freqs", np.asarray(self.freqs, dtype=float))


def default_freqs(dt: float, n_freqs: int = N_FREQS) -> np.ndarray:
    """``n_freqs`` equispaced angular frequencies on [0, pi / dt]."""
    return np.linspace(0.0, np.pi / dt, check_positive_int(n_freqs, "n_freqs", minimum=2))


def _fft_length(freqs: np.ndarray, dt: float) -> int | None:
    """FFT size M when ``freqs = k * 2 pi / (M dt)``, otherwise None."""
    if freqs.size < 2 or freqs[0] != 0:
        return None
    step = freqs[1] - freqs[0]
    if step <= 0 or not np.allclose(np.diff(freqs), step, rtol=1e-12, atol=0):
        return None
    M = 2 * np.pi / (step * dt)
    Mi = round(M)
    if Mi < freqs.size or abs(M - Mi) > 1e-9 * M:
        return None
    return Mi


def gaussian_stft(y, times=None, freqs=None, *, keep_complex: bool = False) -> PlanarSpectrogram:
    """Riemann-sum STFT ``V(t, w) = sum_l conj(y[l]) g(t_l - t) e^{-i w t_l} dt``.

    Parameters
    ----------
    y : Signal or array_like
        Uniformly sampled signal; plain arrays use ``t0 = 0``, ``dt = 1``.
    times : array_like, optional
        Analysis times; default the sample times.
    freqs : array_like, optional
        Angular frequencies, default :func:`default_freqs`.
    keep_complex : bool, default=False

    Raises
    ------
    ValueError
        If a frequency exceeds the Nyquist limit ``pi / dt``.
    """
    ys = as_samples(y)
    t0 = float(getattr(y, "t0", 0.0))
    dt = float(getattr(y, "dt", 1.0))
    t_samples = t0 + dt * np.arange(ys.size)
    times = t_samples if times is None else np.asarray(times, dtype=float).ravel()
    freqs = default_freqs(dt) if freqs is None else np.asarray(freqs, dtype=float).ravel()
    if np.any(np.abs(freqs) > np.pi / dt * (1 + 1e-12)):
        raise ValueError(f"frequencies beyond the Nyquist limit {np.pi / dt} rad/s")
    windowed = gaussian_window(t_samples[None, :] - times[:, None]) * np.conj(ys)[None, :]
    M = _fft_length(freqs, dt)
    if M is not None:
        pad = (-ys.size) % M
        folded = np.pad(windowed, ((0, 0), (0, pad))).reshape(times.size, -1, M).sum(axis=1)
        V = np.fft.fft(folded, axis=1)[:, :freqs.size]
        V *= dt * np.exp(-1j * freqs * t0)[None, :]
    else:
        V = dt * windowed @ np.exp(-1j * np.outer(t_samples, freqs))
    values = V.real**2 + V.imag**2
    return PlanarSpectrogram(times, freqs, values, V if keep_complex else None)


def bargmann_coordinates(t, omega) -> np.ndarray:
    """Planar coordinates ``(omega / sqrt(2), t / sqrt(2))`` of ``z = (omega + i t) / sqrt(2)``."""
    return np.column_stack([np.asarray(omega, float) / math.sqrt(2), np.asarray(t, float) / math.sqrt(2)])


def planar_zeros(spec: PlanarSpectrogram, threshold_fraction: float = 0.075,
                 threshold_on: str = "power") -> np.ndarray:
    """Interior MGN zeros of a planar spectrogram, in Bargmann coordinates."""
    tw = extract_zeros_planar(spec.values, spec.times, spec.freqs, threshold_fraction,
                              threshold_on=threshold_on)
    return bargmann_coordinates(tw[:, 0], tw[:, 1])


def bargmann_window(spec: PlanarSpectrogram) -> tuple[float, float, float, float]:
    """Observation window ``(x_min, x_max, y_min, y_max)`` in Bargmann coordinates."""
    s = 1 / math.sqrt(2)
    return (spec.freqs[0] * s, spec.freqs[-1] * s, spec.times[0] * s, spec.times[-1] * s)


def planar_f_radii(r_max: float = PLANAR_R_MAX, n_radii: int = 10_000) -> np.ndarray:
    """Radius grid on [0, r_max] in Bargmann units.

    The default cap pi is the planar counterpart of the spherical cap
    ``2 pi / sqrt(N)``: both equal ``sqrt(pi)`` mean inter-zero spacings.
    """
    return np.linspace(0.0, r_max, check_positive_int(n_radii, "n_radii", minimum=2))


def planar_empty_space_f(points, window, radii, *, n_z: int | None = None) -> CurveEstimate:
    """Empty-space estimator with minus-sampling.

    Reference points form an m x m grid of cell midpoints over the window
    eroded by ``max(radii)``, ``m = ceil(4 sqrt(n_z))``; F(r) is the fraction
    of them whose nearest pattern point lies at distance < r.

    Parameters
    ----------
    points : array_like, shape (n, 2)
        Pattern in Bargmann coordinates.
    window : tuple of float
        ``(x_min, x_max, y_min, y_max)``.
    radii : array_like
        Increasing, starting at 0 or above.
    n_z : int, optional
        Count controlling the reference grid resolution; default len(points).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise ValueError("empty-space function of an empty pattern")
    r = np.asarray(radii, dtype=float)
    margin = float(r.max())
    x0, x1, y0, y1 = window
    x0, x1, y0, y1 = x0 + margin, x1 - margin, y0 + margin, y1 - margin
    if x1 <= x0 or y1 <= y0:
        raise ValueError("window is too small for the erosion margin")
    m = math.ceil(4 * math.sqrt(n_z if n_z is not None else pts.shape[0]))
    gx = x0 + (np.arange(m) + 0.5) * (x1 - x0) / m
    gy = y0 + (np.arange(m) + 0.5) * (y1 - y0) / m
    ref = np.column_stack([np.repeat(gx, m), np.tile(gy, m)])
    d, _ = cKDTree(pts).query(ref, k=1)
    d = np.sort(d)
    return CurveEstimate(r, np.searchsorted(d, r, side="left") / d.size, "F")


def fourier_f_curve(y, radii=None, *, threshold_fraction: float = 0.075,
                    threshold_on: str = "power", n_freqs: int = N_FREQS) -> CurveEstimate:
    """Spectrogram, zeros and minus-sampling F curve of one signal."""
    spec = gaussian_stft(y, freqs=default_freqs(float(getattr(y, "dt", 1.0)), n_freqs))
    pts = planar_zeros(spec, threshold_fraction, threshold_on)
    if radii is None:
        radii = planar_f_radii()
    return planar_empty_space_f(pts, bargmann_window(spec), radii)


def fourier_envelope_test(y, cfg):
    """Envelope test on zeros of the Gaussian STFT spectrogram.

    Same skeleton as :func:`kravchuk_zeros.detection.envelope_test`; only the
    F statistic is supported.
    """
    from .detection import envelope_test

    return envelope_test(y, cfg.replace(transform="fourier"))
