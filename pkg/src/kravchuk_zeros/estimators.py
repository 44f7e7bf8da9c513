"""scikit-learn style wrappers around the functional API.

Rows of ``X`` are signals of equal length N + 1 (complex arrays are
accepted). The wrappers hold no state beyond validated parameters and the
quantities learned from the signal length, so cloning and grid searches
behave as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_samples
from .detection import TestConfig, _envelope, signal_curves
from .kravchuk import SphericalGrid, kravchuk_spectrogram


def check_signals(X) -> np.ndarray:
    """Validate a batch of signals; returns a complex array of shape (n_signals, N + 1)."""
    if isinstance(X, (list, tuple)) and X and hasattr(X[0], "samples"):
        X = [s.samples for s in X]
    arr = np.asarray(X)
    if arr.ndim == 1:
        raise ValueError("expected a 2-D array of signals; reshape a single signal with X[None, :]")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array of signals, got shape {arr.shape}")
    return np.vstack([as_samples(row) for row in arr]) if arr.shape[0] else arr.astype(complex)


class _SignalLengthMixin:
    def _learn_length(self, X):
        X = check_signals(X)
        self.n_features_in_ = X.shape[1]
        return X

    def _check_length(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_signals(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} samples per signal, expected {self.n_features_in_}")
        return X


class KravchukSpectrogram(_SignalLengthMixin, TransformerMixin, BaseEstimator):
    """Transform signals into flattened Kravchuk spectrograms.

    Parameters
    ----------
    n_theta, n_phi : int, optional
        Grid size; by default the grid of ``SphericalGrid.default``.
    frame : {"rotated", "standard"}, default="rotated"
    grid_factor : float, default=16.0
        Used when ``n_theta`` is not given.
    """

    def __init__(self, n_theta=None, n_phi=None, frame="rotated", grid_factor=16.0):
        self.n_theta = n_theta
        self.n_phi = n_phi
        self.frame = frame
        self.grid_factor = grid_factor

    def fit(self, X, y=None):
        X = self._learn_length(X)
        N = X.shape[1] - 1
        if self.n_theta is None:
            grid = SphericalGrid.default(N, self.grid_factor)
            if self.frame != "rotated":
                grid = SphericalGrid.equiangular(*grid.shape, frame=self.frame)
        else:
            grid = SphericalGrid.equiangular(self.n_theta, self.n_phi or 2 * self.n_theta, self.frame)
        self.grid_ = grid
        return self

    def transform(self, X):
        """Spectrogram values, shape ``(n_signals, n_theta * n_phi)``."""
        X = self._check_length(X)
        return np.stack([kravchuk_spectrogram(x, self.grid_).values.ravel() for x in X])


class ZeroCurveTransformer(_SignalLengthMixin, TransformerMixin, BaseEstimator):
    """Map each signal to the K or F curve of its spectrogram zeros.

    Parameters follow :class:`kravchuk_zeros.detection.TestConfig`, except
    that its ``transform`` field is called ``representation`` here so that it
    does not shadow the ``transform`` method.
    """

    def __init__(self, statistic="F", representation="kravchuk", threshold_fraction=0.075, threshold_on="power",
                 n_radii=10_000, r_range=None, k_normalization="printed", grid_factor=16.0, grid_aspect=2,
                 grid_frame="rotated"):
        self.statistic = statistic
        self.representation = representation
        self.threshold_fraction = threshold_fraction
        self.threshold_on = threshold_on
        self.n_radii = n_radii
        self.r_range = r_range
        self.k_normalization = k_normalization
        self.grid_factor = grid_factor
        self.grid_aspect = grid_aspect
        self.grid_frame = grid_frame

    def _config(self) -> TestConfig:
        return TestConfig(statistic=self.statistic, transform=self.representation,
                          threshold_fraction=self.threshold_fraction, threshold_on=self.threshold_on,
                          n_radii=self.n_radii, r_range=self.r_range, k_normalization=self.k_normalization,
                          grid_factor=self.grid_factor, grid_aspect=self.grid_aspect, grid_frame=self.grid_frame)

    def fit(self, X, y=None):
        X = self._learn_length(X)
        self.config_ = self._config()
        self.radii_ = self.config_.radii(X.shape[1] - 1)
        return self

    def transform(self, X):
        """Curve values, shape ``(n_signals, n_radii)``."""
        X = self._check_length(X)
        return np.stack([signal_curves(x, self.config_)[self.statistic].values for x in X])


class EnvelopeTestDetector(_SignalLengthMixin, ClassifierMixin, BaseEstimator):
    """Signal detector: label 1 when the envelope test rejects white noise.

    Row i of ``X`` draws its null signals from the streams ``(seed, i, 1 + j)``,
    the same convention as trial i of a power experiment.

    Parameters
    ----------
    alpha, m, statistic, threshold_fraction, threshold_on, n_radii,
    r_range, k_normalization, grid_factor, grid_aspect, grid_frame
        See :class:`kravchuk_zeros.detection.TestConfig`.
    representation : {"kravchuk", "fourier"}, default="kravchuk"
        The ``transform`` field of the configuration.
    seed : int, default=0
    n_jobs : int, default=1
    """

    def __init__(self, alpha=0.05, m=199, statistic="F", representation="kravchuk", threshold_fraction=0.075,
                 threshold_on="power", n_radii=10_000, r_range=None, k_normalization="printed",
                 grid_factor=16.0, grid_aspect=2, grid_frame="rotated", seed=0, n_jobs=1):
        self.alpha = alpha
        self.m = m
        self.statistic = statistic
        self.representation = representation
        self.threshold_fraction = threshold_fraction
        self.threshold_on = threshold_on
        self.n_radii = n_radii
        self.r_range = r_range
        self.k_normalization = k_normalization
        self.grid_factor = grid_factor
        self.grid_aspect = grid_aspect
        self.grid_frame = grid_frame
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        """Validate parameters and record the signal length; no training happens."""
        self._learn_length(X)
        self.config_ = TestConfig(alpha=self.alpha, m=self.m, statistic=self.statistic, transform=self.representation,
                                  threshold_fraction=self.threshold_fraction, threshold_on=self.threshold_on,
                                  n_radii=self.n_radii, r_range=self.r_range,
                                  k_normalization=self.k_normalization, grid_factor=self.grid_factor,
                                  grid_aspect=self.grid_aspect, grid_frame=self.grid_frame, seed=self.seed)
        self.classes_ = np.array([0, 1])
        return self

    def test(self, X):
        """TestOutcome of every row."""
        X = self._check_length(X)
        return [_envelope(x, self.config_, (self.statistic,), self.seed, (i,), self.n_jobs)[self.statistic]
                for i, x in enumerate(X)]

    def decision_function(self, X):
        """Margin ``s_observed - s_(k)``; non-negative values reject."""
        return np.array([o.s_observed - o.s_null_sorted[o.k - 1] for o in self.test(X)])

    def predict(self, X):
        return (self.decision_function(X) >= 0).astype(int)
