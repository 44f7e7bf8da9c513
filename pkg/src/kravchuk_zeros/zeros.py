"""Spectrogram zeros: Minimal Grid Neighbors extraction and polynomial-root oracles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree

from ._validation import as_samples, check_fraction, check_positive_int, stream
from .kravchuk_basis import analyze_coefficients, log_binomial
from .kravchuk import Spectrogram, inverse_stereographic, to_unit_vectors

#: Largest degree accepted by the companion-matrix root finder.
ROOT_N_MAX = 50
THRESHOLD_MODES = ("power", "amplitude")


class DegreeCollapseError(ValueError):
    """The leading polynomial coefficient vanishes; carries the effective degree."""

    def __init__(self, degree: int, effective_degree: int):
        self.degree = degree
        self.effective_degree = effective_degree
        super().__init__(
            f"leading coefficient vanishes: nominal degree {degree}, effective degree {effective_degree}"
        )


@dataclass(frozen=True, eq=False)
class PointPattern:
    """Finite set of points on the unit sphere, stored as (theta, phi) rows.

    Parameters
    ----------
    points : array_like, shape (n, 2)
        Colatitudes in [0, pi] and longitudes in [0, 2 pi).
    n_expected : int, optional
        Nominal number of points, e.g. the degree N for spectrogram zeros.
    require_distinct : bool, default=True
        Reject points closer than 1e-9 (chordal). Root oracles disable the
        check because repeated roots are legitimate there.
    """

    points: np.ndarray
    n_expected: int | None = None
    require_distinct: bool = True

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        th, ph = pts[:, 0], pts[:, 1]
        if np.any((th < 0) | (th > np.pi)):
            raise ValueError("colatitudes must lie in [0, pi]")
        if np.any((ph < 0) | (ph >= 2 * np.pi)):
            raise ValueError("longitudes must lie in [0, 2 pi)")
        if self.require_distinct and len(pts) > 1:
            if cKDTree(to_unit_vectors(th, ph)).query_pairs(1e-9):
                raise ValueError("pattern contains duplicate points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def thetas(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def phis(self) -> np.ndarray:
        return self.points[:, 1]

    def unit_vectors(self) -> np.ndarray:
        """Cartesian coordinates, shape (n, 3)."""
        return to_unit_vectors(self.thetas, self.phis)


def _threshold_level(values: np.ndarray, fraction: float, on: str) -> float:
    fraction = check_fraction(fraction, "threshold_fraction")
    if on not in THRESHOLD_MODES:
        raise ValueError(f"threshold mode must be one of {THRESHOLD_MODES}, got {on!r}")
    # values are squared moduli; an amplitude threshold squares the fraction
    return (fraction if on == "power" else fraction**2) * float(values.max())


def strict_local_minima(values, *, periodic_columns: bool = False, include_boundary: bool = True) -> np.ndarray:
    """Boolean mask of entries strictly below all of their (up to 8) neighbours.

    Parameters
    ----------
    values : array_like, shape (n_rows, n_cols)
    periodic_columns : bool, default=False
        Wrap the column index, as for longitudes on a sphere.
    include_boundary : bool, default=True
        If False, boundary entries (first/last row, and first/last column
        when columns are not periodic) are never reported.

    Notes
    -----
    Missing neighbours beyond the edge are ignored, which amounts to padding
    with +inf.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("values must be a 2-D array")
    P = np.pad(v, ((1, 1), (0, 0)), constant_values=np.inf)
    if periodic_columns:
        P = np.concatenate([P[:, -1:], P, P[:, :1]], axis=1)
    else:
        P = np.pad(P, ((0, 0), (1, 1)), constant_values=np.inf)
    n, m = v.shape
    mask = np.ones(v.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                mask &= v < P[1 + di:1 + di + n, 1 + dj:1 + dj + m]
    if not include_boundary:
        mask[0, :] = mask[-1, :] = False
        if not periodic_columns:
            mask[:, 0] = mask[:, -1] = False
    return mask


def extract_zeros_spherical(spec: Spectrogram, threshold_fraction: float = 0.075,
                            threshold_on: str = "power") -> PointPattern:
    """Minimal Grid Neighbors zeros of a spherical spectrogram.

    A node is reported when its value is strictly below its 8 neighbours
    (longitude wraps around; boundary rows compare only the neighbours they
    have) and below ``threshold_fraction`` times the maximum.

    Parameters
    ----------
    spec : Spectrogram
        Grid of at least 3 x 3 nodes.
    threshold_fraction : float, default=0.075
        Relative threshold in (0, 1).
    threshold_on : {"power", "amplitude"}, default="power"
        Apply the fraction to ``|T|^2`` or to ``|T|``.

    Returns
    -------
    PointPattern
        Zeros in standard coordinates, ordered by grid index.
    """
    if min(spec.grid.shape) < 3:
        raise ValueError(f"zero extraction needs a grid of at least 3 x 3, got {spec.grid.shape}")
    level = _threshold_level(spec.values, threshold_fraction, threshold_on)
    mask = strict_local_minima(spec.values, periodic_columns=True) & (spec.values < level)
    i, j = np.nonzero(mask)
    th, ph = spec.grid.to_standard(spec.grid.thetas[i], spec.grid.phis[j])
    return PointPattern(np.column_stack([th, ph]), n_expected=spec.N)


def extract_zeros_planar(values, x, y, threshold_fraction: float = 0.075, *,
                         threshold_on: str = "power", include_boundary: bool = False) -> np.ndarray:
    """Minimal Grid Neighbors zeros of a planar spectrogram.

    Parameters
    ----------
    values : array_like, shape (len(x), len(y))
        Non-negative spectrogram values.
    x, y : array_like
        Grid coordinates along the two axes.
    threshold_fraction : float, default=0.075
    threshold_on : {"power", "amplitude"}, default="power"
    include_boundary : bool, default=False
        Boundary nodes lack half of their neighbours; by default they are
        not reported.

    Returns
    -------
    ndarray, shape (n, 2)
        ``(x[i], y[j])`` for each zero.
    """
    v = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if v.shape != (x.size, y.size):
        raise ValueError(f"values shape {v.shape} does not match grid ({x.size}, {y.size})")
    level = _threshold_level(v, threshold_fraction, threshold_on)
    mask = strict_local_minima(v, include_boundary=include_boundary) & (v < level)
    i, j = np.nonzero(mask)
    return np.column_stack([x[i], y[j]])


def polynomial_roots(coeffs, *, rtol: float = 1e-12) -> np.ndarray:
    """Roots of ``sum_n a_n z^n`` as eigenvalues of the companion matrix.

    Raises
    ------
    DegreeCollapseError
        If ``|a_N| <= rtol * max|a_n|``.
    """
    a = as_samples(coeffs, name="coeffs")
    N = a.shape[0] - 1
    scale = np.max(np.abs(a))
    if scale == 0:
        raise DegreeCollapseError(N, 0)
    significant = np.nonzero(np.abs(a) > rtol * scale)[0]
    if significant[-1] < N:
        raise DegreeCollapseError(N, int(significant[-1]))
    C = np.zeros((N, N), dtype=complex)
    C[1:, :-1] = np.eye(N - 1)
    C[:, -1] = -a[:-1] / a[-1]
    return np.linalg.eigvals(C)


def polynomial_zeros_oracle(coeffs, *, n_max: int = ROOT_N_MAX) -> PointPattern:
    """Zeros of ``sum_n a_n z^n`` on the sphere through the inverse stereographic map.

    Parameters
    ----------
    coeffs : array_like of complex, shape (N + 1,)
        Ascending coefficients ``a_0 .. a_N`` with ``a_N != 0``.
    n_max : int, default=ROOT_N_MAX
        Conditioning guard on the degree.

    Returns
    -------
    PointPattern
        N points; repeated roots give repeated points.
    """
    a = as_samples(coeffs, name="coeffs")
    N = a.shape[0] - 1
    if N > n_max:
        raise ValueError(f"degree {N} exceeds the root-finding guard {n_max}")
    th, ph = inverse_stereographic(polynomial_roots(a))
    return PointPattern(np.column_stack([th, ph]), n_expected=N, require_distinct=False)


def transform_polynomial(y) -> np.ndarray:
    """Coefficients ``sqrt(C(N, n)) (Qy)[n]`` of the transform as a polynomial in z."""
    Qy = analyze_coefficients(y)
    N = Qy.shape[0] - 1
    return np.exp(0.5 * log_binomial(N, np.arange(N + 1))) * Qy


def sample_spherical_gaf_zeros(N: int, seed, *, n_max: int = ROOT_N_MAX) -> PointPattern:
    """Zeros of the spherical Gaussian analytic function ``sum_n xi_n sqrt(C(N, n)) z^n``.

    ``xi_n`` are i.i.d. N_C(0, 1). Drawn exactly through companion-matrix
    eigenvalues, hence the degree guard.
    """
    N = check_positive_int(N, "N")
    if N > n_max:
        raise ValueError(f"N={N} exceeds the root-finding guard {n_max}")
    rng = stream(seed)
    xi = (rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1)) / np.sqrt(2.0)
    coeffs = xi * np.exp(0.5 * log_binomial(N, np.arange(N + 1)))
    return polynomial_zeros_oracle(coeffs, n_max=n_max)


def match_patterns(p: PointPattern, q: PointPattern) -> tuple[np.ndarray, np.ndarray]:
    """One-to-one matching minimizing the total geodesic distance.

    Returns
    -------
    pairs : ndarray of int, shape (k, 2)
        Index pairs ``(i, j)`` with k = min(len(p), len(q)).
    distances : ndarray, shape (k,)
        Geodesic distance (rad) of each matched pair.
    """
    u, v = p.unit_vectors(), q.unit_vectors()
    cost = np.arccos(np.clip(u @ v.T, -1.0, 1.0))
    rows, cols = linear_sum_assignment(cost)
    return np.column_stack([rows, cols]), cost[rows, cols]
