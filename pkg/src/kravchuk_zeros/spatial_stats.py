"""Distances on the sphere and the Ripley K / empty-space F estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from ._validation import check_positive_int
from .kravchuk import to_unit_vectors
from .zeros import PointPattern

CURVE_KINDS = ("K", "F")
K_NORMALIZATIONS = ("printed", "moller")
DEFAULT_N_RADII = 10_000


def chordal_distance(p1, p2) -> np.ndarray:
    """Great-circle angle between sphere points given as (theta, phi).

    ``arccos(sin t1 sin t2 cos(p1 - p2) + cos t1 cos t2)`` with the cosine
    clamped to [-1, 1]. Inputs broadcast over leading dimensions.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    t1, f1 = p1[..., 0], p1[..., 1]
    t2, f2 = p2[..., 0], p2[..., 1]
    c = np.sin(t1) * np.sin(t2) * np.cos(f1 - f2) + np.cos(t1) * np.cos(t2)
    out = np.arccos(np.clip(c, -1.0, 1.0))
    return out[()] if out.ndim == 0 else out


def _angles_from_chords(chords: np.ndarray) -> np.ndarray:
    # 2 arcsin(|u - v| / 2) is the geodesic angle and stays accurate for tiny distances
    return 2.0 * np.arcsin(np.clip(chords / 2.0, 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class EvalGrid:
    """Reference points for the empty-space estimator.

    Attributes
    ----------
    points : ndarray, shape (n, 2)
        (theta, phi) of each reference point.
    """

    points: np.ndarray

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def unit_vectors(self) -> np.ndarray:
        return to_unit_vectors(self.points[:, 0], self.points[:, 1])


def make_eval_grid(n_z: int) -> EvalGrid:
    """Equal-area m x m grid with ``m = ceil(4 sqrt(n_z))``.

    Levels of ``cos(theta)`` are the midpoints of m equal subintervals of
    [-1, 1] and longitudes are ``2 pi j / m``, so every point represents the
    same area and plain averages over the grid estimate averages under the
    uniform measure.
    """
    n_z = check_positive_int(n_z, "n_z")
    m = math.ceil(4 * math.sqrt(n_z))
    cos_theta = 1.0 - (2.0 * np.arange(m) + 1.0) / m
    thetas = np.arccos(cos_theta)
    phis = 2 * np.pi * np.arange(m) / m
    th, ph = np.meshgrid(thetas, phis, indexing="ij")
    return EvalGrid(np.column_stack([th.ravel(), ph.ravel()]))


@dataclass(frozen=True, eq=False)
class CurveEstimate:
    """Functional statistic sampled on an increasing radius grid."""

    radii: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"kind must be one of {CURVE_KINDS}, got {self.kind!r}")
        if r.ndim != 1 or r.shape != v.shape:
            raise ValueError("radii and values must be 1-D arrays of equal length")
        if r.size > 1 and np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)


def k_radii(n_radii: int = DEFAULT_N_RADII) -> np.ndarray:
    """Default K radius grid on [0, pi]."""
    return np.linspace(0.0, np.pi, check_positive_int(n_radii, "n_radii", minimum=2))


def f_radii(N: int, n_radii: int = DEFAULT_N_RADII) -> np.ndarray:
    """Default F radius grid on [0, 2 pi / sqrt(N)]."""
    N = check_positive_int(N, "N")
    return np.linspace(0.0, 2 * np.pi / math.sqrt(N), check_positive_int(n_radii, "n_radii", minimum=2))


def _check_radii(radii) -> np.ndarray:
    r = np.asarray(radii, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("radii must be a non-empty 1-D array")
    if np.any(np.diff(r) <= 0) or r[0] < 0:
        raise ValueError("radii must be non-negative and strictly increasing")
    return r


def pair_distances(pattern: PointPattern) -> np.ndarray:
    """Sorted geodesic distances of the unordered distinct pairs."""
    return np.sort(_angles_from_chords(pdist(pattern.unit_vectors())))


def ripley_k(pattern: PointPattern, radii, normalization: str = "printed") -> CurveEstimate:
    """Ripley K estimator counting ordered pairs of distinct points.

    ``K(r) = c * #{(i, j), i != j : d(x_i, x_j) <= r}`` with
    ``c = (4 pi)^2 / n`` ("printed") or the Poisson-consistent
    ``c = 4 pi / n^2`` ("moller"), for which a uniform pattern has
    ``E K(r) ~ 2 pi (1 - cos r)``.

    Parameters
    ----------
    pattern : PointPattern
        At least one point; a single point gives an identically zero curve.
    radii : array_like
        Increasing, non-negative.
    normalization : {"printed", "moller"}, default="printed"

    Raises
    ------
    ValueError
        On an empty pattern or an unknown normalization.
    """
    r = _check_radii(radii)
    n = len(pattern)
    if n == 0:
        raise ValueError("Ripley K of an empty pattern")
    if normalization not in K_NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {K_NORMALIZATIONS}, got {normalization!r}")
    d = pair_distances(pattern) if n > 1 else np.empty(0)
    counts = 2.0 * np.searchsorted(d, r, side="right")
    c = (4 * np.pi) ** 2 / n if normalization == "printed" else 4 * np.pi / n**2
    return CurveEstimate(r, c * counts, "K")


def nearest_distances(pattern: PointPattern, grid: EvalGrid) -> np.ndarray:
    """Geodesic distance from each reference point to the closest pattern point."""
    if len(pattern) == 0:
        raise ValueError("nearest distances to an empty pattern")
    chords, _ = cKDTree(pattern.unit_vectors()).query(grid.unit_vectors(), k=1)
    return _angles_from_chords(chords)


def empty_space_f(pattern: PointPattern, grid: EvalGrid | None = None, radii=None) -> CurveEstimate:
    """Empty-space estimator: fraction of reference points within distance < r of the pattern.

    Parameters
    ----------
    pattern : PointPattern
        Non-empty.
    grid : EvalGrid, optional
        Defaults to ``make_eval_grid(len(pattern))``.
    radii : array_like, optional
        Defaults to ``f_radii(pattern.n_expected or len(pattern))``.
    """
    if len(pattern) == 0:
        raise ValueError("empty-space function of an empty pattern")
    if grid is None:
        grid = make_eval_grid(len(pattern))
    if radii is None:
        radii = f_radii(pattern.n_expected or len(pattern))
    r = _check_radii(radii)
    d = np.sort(nearest_distances(pattern, grid))
    return CurveEstimate(r, np.searchsorted(d, r, side="left") / d.size, "F")
