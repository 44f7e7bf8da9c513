"""Kravchuk transform on the sphere through its closed (generating-function) form.

For a signal ``y`` of length N + 1 and ``z = cot(theta/2) e^{i phi}``::

    T y(z) = (1 + |z|^2)^{-N/2} 2^{-N/2} sum_l sqrt(C(N, l)) conj(y[l]) (1 - z)^l (1 + z)^{N - l}

Multiplying through by ``sin^N(theta/2)`` gives the pole-free form used here,
with ``s = sin(theta/2)`` and ``c = cos(theta/2)``::

    T y(theta, phi) = 2^{-N/2} sum_l sqrt(C(N, l)) conj(y[l]) (s - c e^{i phi})^l (s + c e^{i phi})^{N - l}

Grids come in two frames. The *standard* frame uses the coordinates above.
The *rotated* frame is the same sphere seen through the rotation
``w = (1 - z) / (1 + z)``, an involution. In that frame

    T y = e^{-i N arg(1 + w)} (1 + |w|^2)^{-N/2} sum_l sqrt(C(N, l)) conj(y[l]) w^l

so each latitude ring of a product grid is one FFT of the sequence
``sqrt(C(N, l) p^l (1 - p)^{N - l}) conj(y[l])`` with ``p = cos^2(theta'/2)``.
The rotated colatitude tracks the sample index l, which makes it the natural
time axis, and its longitude acts as frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_samples, check_fraction, check_positive_int
from .kravchuk_basis import log_binomial

FRAMES = ("standard", "rotated")

# Horner evaluation needs the binomial scaling to stay representable;
# above this degree the grid paths switch to per-term log-domain sums.
_HORNER_N_MAX = 1500
_CHUNK = 1 << 18


def stereographic(theta, phi):
    """Map sphere coordinates to the plane, ``z = cot(theta/2) e^{i phi}``.

    Parameters
    ----------
    theta : array_like
        Colatitudes in (0, pi].
    phi : array_like
        Longitudes (rad).

    Raises
    ------
    ValueError
        If any theta equals 0 (the pole mapped to infinity) or lies outside [0, pi].
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(theta == 0):
        raise ValueError("theta = 0 is the pole sent to infinity by the stereographic map")
    if np.any((theta < 0) | (theta > np.pi)):
        raise ValueError("theta must lie in (0, pi]")
    z = np.cos(theta / 2) / np.sin(theta / 2) * np.exp(1j * phi)
    return z[()] if z.ndim == 0 else z


def inverse_stereographic(z):
    """Inverse of :func:`stereographic`; infinite modulus maps to theta = 0.

    Returns
    -------
    theta, phi : ndarray
        Colatitudes in [0, pi] and longitudes in [0, 2 pi).
    """
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    theta = 2.0 * np.arctan2(1.0, r)
    with np.errstate(invalid="ignore"):
        phi = np.where(np.isfinite(z), np.mod(np.angle(z), 2 * np.pi), 0.0)
    phi = np.where(phi >= 2 * np.pi, 0.0, phi)
    if theta.ndim == 0:
        return float(theta), float(phi)
    return theta, phi


def to_unit_vectors(theta, phi) -> np.ndarray:
    """Cartesian unit vectors of sphere points, shape ``(..., 3)``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def from_unit_vectors(v) -> tuple[np.ndarray, np.ndarray]:
    """Sphere coordinates of (not necessarily normalized) Cartesian vectors."""
    v = np.asarray(v, dtype=float)
    x, y, zc = v[..., 0], v[..., 1], v[..., 2]
    theta = np.arctan2(np.hypot(x, y), zc)
    phi = np.mod(np.arctan2(y, x), 2 * np.pi)
    phi = np.where(phi >= 2 * np.pi, 0.0, phi)
    return theta, phi


def rotate_frame(theta, phi) -> tuple[np.ndarray, np.ndarray]:
    """Switch between standard and rotated coordinates (the map is an involution).

    In Cartesian terms the rotation is ``(x, y, z) -> (-z, -y, -x)``, the
    half-turn that realizes ``w = (1 - z) / (1 + z)`` on the Riemann sphere.
    """
    v = to_unit_vectors(theta, phi)
    return from_unit_vectors(-v[..., ::-1])


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    """Product grid of colatitudes and longitudes, periodic in longitude.

    Parameters
    ----------
    thetas : array_like
        Strictly increasing colatitudes inside (0, pi).
    phis : array_like
        Equally spaced longitudes starting at 0 and covering [0, 2 pi).
    frame : {"standard", "rotated"}, default="standard"
        Coordinate frame in which the nodes are laid out. Zeros and
        curves are always reported in standard coordinates.
    """

    thetas: np.ndarray
    phis: np.ndarray
    frame: str = "standard"

    def __post_init__(self):
        th = np.array(self.thetas, dtype=float).ravel()
        ph = np.array(self.phis, dtype=float).ravel()
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        if th.size < 1 or ph.size < 1:
            raise ValueError("grid needs at least one colatitude and one longitude")
        if np.any(th <= 0) or np.any(th >= np.pi):
            raise ValueError("colatitudes must lie strictly inside (0, pi)")
        if np.any(np.diff(th) <= 0):
            raise ValueError("colatitudes must be strictly increasing")
        if ph[0] != 0:
            raise ValueError("longitudes must start at 0")
        step = 2 * np.pi / ph.size
        if not np.allclose(ph, step * np.arange(ph.size), rtol=0, atol=1e-12):
            raise ValueError("longitudes must be equally spaced over [0, 2 pi)")
        th.setflags(write=False)
        ph.setflags(write=False)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "phis", ph)

    @classmethod
    def equiangular(cls, n_theta: int, n_phi: int, frame: str = "standard") -> "SphericalGrid":
        """Grid with ``theta_i = (i + 1/2) pi / n_theta`` and ``phi_j = 2 pi j / n_phi``."""
        n_theta = check_positive_int(n_theta, "n_theta")
        n_phi = check_positive_int(n_phi, "n_phi")
        thetas = (np.arange(n_theta) + 0.5) * np.pi / n_theta
        phis = 2 * np.pi * np.arange(n_phi) / n_phi
        return cls(thetas, phis, frame)

    @classmethod
    def default(cls, N: int, factor: float = 16.0, aspect: int = 2, frame: str = "rotated") -> "SphericalGrid":
        """Default grid for degree N.

        ``ceil(factor sqrt(N))`` rows and ``aspect`` times as many columns,
        laid out in the rotated frame unless stated otherwise.
        """
        N = check_positive_int(N, "N")
        aspect = check_positive_int(aspect, "aspect")
        n_theta = max(3, math.ceil(factor * math.sqrt(N)))
        return cls.equiangular(n_theta, aspect * n_theta, frame=frame)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.thetas.size, self.phis.size)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates in the grid's own frame, each of shape ``self.shape``."""
        return np.meshgrid(self.thetas, self.phis, indexing="ij")

    def standard_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates expressed in the standard frame."""
        th, ph = self.nodes()
        if self.frame == "rotated":
            return rotate_frame(th, ph)
        return th, ph

    def to_standard(self, theta, phi) -> tuple[np.ndarray, np.ndarray]:
        """Convert coordinates given in this grid's frame to the standard frame."""
        if self.frame == "rotated":
            return rotate_frame(theta, phi)
        return np.asarray(theta, dtype=float), np.asarray(phi, dtype=float)

    def is_equiangular(self) -> bool:
        """Whether the colatitudes are the midpoints ``(i + 1/2) pi / n_theta``."""
        n = self.thetas.size
        return bool(np.allclose(self.thetas, (np.arange(n) + 0.5) * np.pi / n, rtol=0, atol=1e-12))

    def quadrature_weights(self, rule: str | None = None) -> np.ndarray:
        """Weights of a product rule for ``integral f sin(theta) dtheta dphi``.

        Parameters
        ----------
        rule : {"fejer", "trapezoid"}, optional
            ``"fejer"`` is Fejer's first rule in ``cos(theta)``, exact for
            polynomials of degree below n_theta on midpoint colatitudes.
            ``"trapezoid"`` is the trapezoid rule on the nodes augmented with
            both poles, where the integrand carries the vanishing factor
            ``sin(theta)``. By default Fejer's rule is used on equiangular
            grids and the trapezoid rule otherwise. The longitude rule is
            always the periodic trapezoid rule.
        """
        if rule is None:
            rule = "fejer" if self.is_equiangular() else "trapezoid"
        if rule == "fejer":
            if not self.is_equiangular():
                raise ValueError("Fejer's rule needs equiangular midpoint colatitudes")
            n = self.thetas.size
            j = np.arange(1, n // 2 + 1)
            corr = np.cos(2 * np.outer(self.thetas, j)) @ (2.0 / (4 * j**2 - 1))
            w_theta = (2.0 / n) * (1.0 - corr)
        elif rule == "trapezoid":
            ext = np.concatenate([[0.0], self.thetas, [np.pi]])
            w_theta = 0.5 * (ext[2:] - ext[:-2]) * np.sin(self.thetas)
        else:
            raise ValueError(f"unknown quadrature rule {rule!r}")
        w_phi = 2 * np.pi / self.phis.size
        return np.broadcast_to((w_theta * w_phi)[:, None], self.shape)


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Squared modulus of the Kravchuk transform on a spherical grid.

    Attributes
    ----------
    grid : SphericalGrid
    values : ndarray, shape grid.shape
        ``|T y|^2`` at the nodes.
    N : int
        Degree of the analysed signal.
    transform_values : ndarray of complex or None
        ``T y`` at the nodes when retained.
    """

    grid: SphericalGrid
    values: np.ndarray
    N: int
    transform_values: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("spectrogram values must be finite and non-negative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.transform_values is not None:
            tv = np.asarray(self.transform_values, dtype=complex)
            if tv.shape != self.grid.shape:
                raise ValueError("transform_values shape does not match grid")
            tv.setflags(write=False)
            object.__setattr__(self, "transform_values", tv)


def _half_log_binomials(N: int) -> np.ndarray:
    return 0.5 * log_binomial(N, np.arange(N + 1))


def _logdomain_sum(ys: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``2^{-N/2} sum_l sqrt(C(N,l)) conj(y_l) a^l b^{N-l}`` with each term in log form."""
    N = ys.shape[0] - 1
    ell = np.arange(N + 1)
    base = _half_log_binomials(N) - 0.5 * N * math.log(2.0)
    out = np.empty(a.shape, dtype=complex)
    fa, fb, fo = a.ravel(), b.ravel(), out.reshape(-1)
    step = max(1, _CHUNK // (N + 1))
    for start in range(0, fa.size, step):
        ac = fa[start:start + step, None]
        bc = fb[start:start + step, None]
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(ac))
            lb = np.log(np.abs(bc))
        # zero factors raised to a positive power give exactly zero terms
        mag = base + np.where(ell == 0, 0.0, ell * la) + np.where(ell == N, 0.0, (N - ell) * lb)
        phase = ell * np.angle(ac) + (N - ell) * np.angle(bc)
        terms = np.exp(mag + 1j * phase)
        fo[start:start + step] = terms @ np.conj(ys)
    return out


def _ab(theta, phi):
    s = np.sin(np.asarray(theta, dtype=float) / 2)
    c = np.cos(np.asarray(theta, dtype=float) / 2)
    e = np.exp(1j * np.asarray(phi, dtype=float))
    return s - c * e, s + c * e


def kravchuk_transform_point(y, theta, phi):
    """Kravchuk transform at sphere points, summed term by term in the log domain.

    Each term's magnitude is
    ``exp(log C(N,l)/2 + l log|1-z| + (N-l) log|1+z| - (N/2) log 2 - (N/2) log(1+|z|^2))``
    with its phase accumulated separately; terms with a vanishing factor
    ``1 - z`` or ``1 + z`` raised to a positive power are exactly zero.

    Parameters
    ----------
    y : Signal or array_like
        Signal of length N + 1, N >= 1.
    theta, phi : array_like
        Broadcastable coordinates in the standard frame; theta in [0, pi].

    Returns
    -------
    complex or ndarray of complex
    """
    ys = as_samples(y)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any((theta < 0) | (theta > np.pi)) or not np.all(np.isfinite(phi)):
        raise ValueError("theta must lie in [0, pi] and phi must be finite")
    a, b = _ab(*np.broadcast_arrays(theta, phi))
    out = _logdomain_sum(ys, np.atleast_1d(a), np.atleast_1d(b)).reshape(a.shape)
    return out[()] if out.ndim == 0 else out


def coherent_states(N: int, theta, phi) -> np.ndarray:
    """Coherent-state vectors with ``T y(theta, phi) = sum_l conj(y[l]) Psi[l]``.

    ``Psi[l] = 2^{-N/2} sqrt(C(N, l)) a^l b^{N - l}``, ``a = s - c e^{i phi}``,
    ``b = s + c e^{i phi}``; each vector has unit norm.

    Returns
    -------
    ndarray of complex, shape ``broadcast(theta, phi).shape + (N + 1,)``
    """
    N = check_positive_int(N, "N")
    a, b = _ab(*np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float)))
    ell = np.arange(N + 1)
    base = _half_log_binomials(N) - 0.5 * N * math.log(2.0)
    a = a[..., None]
    b = b[..., None]
    with np.errstate(divide="ignore"):
        la, lb = np.log(np.abs(a)), np.log(np.abs(b))
    mag = base + np.where(ell == 0, 0.0, ell * la) + np.where(ell == N, 0.0, (N - ell) * lb)
    return np.exp(mag + 1j * (ell * np.angle(a) + (N - ell) * np.angle(b)))


def _horner_standard(ys: np.ndarray, thetas: np.ndarray, phis: np.ndarray):
    """Standard-frame grid values through Horner's rule in ``w = a / b`` or ``b / a``."""
    N = ys.shape[0] - 1
    hl = _half_log_binomials(N)
    lcm = hl.max()
    coef = np.exp(hl - lcm) * np.conj(ys)
    shift = lcm - 0.5 * N * math.log(2.0)
    a, b = _ab(thetas[:, None], phis[None, :])
    inside = np.abs(a) <= np.abs(b)
    lead = np.where(inside, b, a)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(inside, a / b, b / a)
    w = np.where(np.isfinite(w), w, 0.0)
    p_in = np.zeros(a.shape, dtype=complex)
    p_out = np.zeros(a.shape, dtype=complex)
    for ell in range(N, -1, -1):
        p_in = p_in * w + coef[ell]
        p_out = p_out * w + coef[N - ell]
    P = np.where(inside, p_in, p_out)
    with np.errstate(divide="ignore"):
        log_mod = shift + N * np.log(np.abs(lead)) + np.log(np.abs(P))
    values = np.exp(2 * log_mod)
    phase = N * np.angle(lead) + np.angle(P)
    return values, np.sqrt(values) * np.exp(1j * phase)


def _fft_rotated(ys: np.ndarray, thetas: np.ndarray, n_phi: int):
    """Rotated-frame grid values, one FFT per colatitude ring."""
    N = ys.shape[0] - 1
    ell = np.arange(N + 1)
    log_p = 2 * np.log(np.cos(thetas / 2))
    log_q = 2 * np.log(np.sin(thetas / 2))
    logw = 0.5 * (2 * _half_log_binomials(N)[None, :] + ell[None, :] * log_p[:, None]
                  + (N - ell)[None, :] * log_q[:, None])
    seq = np.exp(logw) * np.conj(ys)[None, :]
    pad = (-(N + 1)) % n_phi
    folded = np.pad(seq, ((0, 0), (0, pad))).reshape(thetas.size, -1, n_phi).sum(axis=1)
    sums = np.fft.ifft(folded, axis=1) * n_phi
    values = sums.real**2 + sums.imag**2
    return values, sums


def kravchuk_spectrogram(y, grid: SphericalGrid | None = None, keep_complex: bool = False) -> Spectrogram:
    """Evaluate ``|T y|^2`` on every node of a spherical grid.

    Parameters
    ----------
    y : Signal or array_like
        Signal of length N + 1.
    grid : SphericalGrid, optional
        Evaluation grid; defaults to ``SphericalGrid.default(N)``.
    keep_complex : bool, default=False
        Also retain the complex transform values (needed by :func:`reconstruct`).

    Returns
    -------
    Spectrogram
    """
    ys = as_samples(y)
    N = ys.shape[0] - 1
    if grid is None:
        grid = SphericalGrid.default(N)
    if grid.frame == "rotated" and N <= _HORNER_N_MAX:
        values, sums = _fft_rotated(ys, grid.thetas, grid.phis.size)
        if keep_complex:
            th, ph = grid.nodes()
            one_w = 1 + np.cos(th / 2) / np.sin(th / 2) * np.exp(1j * ph)
            tv = np.exp(-1j * N * np.angle(one_w)) * sums
            # w = -1 is the standard north pole, where the phase follows the
            # standard longitude convention rather than arg(1 + w)
            pole = np.abs(one_w) < 1e-8
            if np.any(pole):
                sth, sph = grid.to_standard(th[pole], ph[pole])
                tv[pole] = kravchuk_transform_point(ys, sth, sph)
        else:
            tv = None
        return Spectrogram(grid, values, N, tv)
    if grid.frame == "standard" and N <= _HORNER_N_MAX:
        values = np.empty(grid.shape)
        tv = np.empty(grid.shape, dtype=complex) if keep_complex else None
        rows = max(1, _CHUNK // grid.phis.size)
        for start in range(0, grid.thetas.size, rows):
            sl = slice(start, start + rows)
            v, t = _horner_standard(ys, grid.thetas[sl], grid.phis)
            values[sl] = v
            if keep_complex:
                tv[sl] = t
        return Spectrogram(grid, values, N, tv)
    th, ph = grid.standard_nodes()
    t = kravchuk_transform_point(ys, th, ph)
    return Spectrogram(grid, np.abs(t) ** 2, N, t if keep_complex else None)


def _check_quadrature_grid(grid: SphericalGrid) -> None:
    if min(grid.shape) < 2:
        raise ValueError(f"quadrature needs at least 2 rows and 2 columns, grid is {grid.shape}")


def energy(spec: Spectrogram) -> float:
    """Energy of the signal recovered from its spectrogram.

    Computes ``(N + 1) / (4 pi) integral |T y|^2 dmu`` with the grid's
    default quadrature weights, which equals ``||y||^2``. On equiangular
    grids with more than N rows and more than 2N columns the rule is exact
    up to rounding. The factor N + 1 is the inverse of the squared norm
    of the functions ``(4 pi)^{-1/2} sqrt(C(N, n)) cos^n(theta/2) sin^{N-n}(theta/2) e^{i n phi}``
    in ``L^2(dmu)``.
    """
    _check_quadrature_grid(spec.grid)
    total = np.sum(spec.values * spec.grid.quadrature_weights())
    return float((spec.N + 1) * total / (4 * np.pi))


def reconstruct(spec: Spectrogram, N: int | None = None) -> np.ndarray:
    """Recover the signal from its complex transform by the resolution of the identity.

    ``y[l] = (N + 1) / (4 pi) integral conj(T y(theta, phi)) Psi_{theta, phi}[l] dmu``,
    evaluated with the grid's quadrature weights (see :func:`energy` for the
    factor N + 1).

    Returns
    -------
    ndarray of complex, shape (N + 1,)

    Raises
    ------
    ValueError
        If the spectrogram does not carry complex transform values.
    """
    if spec.transform_values is None:
        raise ValueError("reconstruction needs complex transform values (keep_complex=True)")
    N = spec.N if N is None else check_positive_int(N, "N")
    _check_quadrature_grid(spec.grid)
    th, ph = spec.grid.standard_nodes()
    g = (np.conj(spec.transform_values) * spec.grid.quadrature_weights()).ravel()
    th, ph = th.ravel(), ph.ravel()
    out = np.zeros(N + 1, dtype=complex)
    step = max(1, _CHUNK // (N + 1))
    for start in range(0, g.size, step):
        sl = slice(start, start + step)
        out += g[sl] @ coherent_states(N, th[sl], ph[sl])
    return out * ((N + 1) / (4 * np.pi))


def threshold_mask(spec: Spectrogram, fraction: float) -> np.ndarray:
    """Boolean mask of nodes with ``values >= fraction * max(values)``.

    Raises
    ------
    ValueError
        If the spectrogram vanishes everywhere.
    """
    fraction = check_fraction(fraction, "fraction")
    vmax = spec.values.max()
    if vmax <= 0:
        raise ValueError("threshold mask of an all-zero spectrogram")
    return spec.values >= fraction * vmax
