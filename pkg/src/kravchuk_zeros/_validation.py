"""Input validation and random-stream helpers shared across modules."""

from __future__ import annotations

import numbers

import numpy as np


def as_samples(y, *, min_length: int = 2, name: str = "y") -> np.ndarray:
    """Return the samples of `y` as a 1-D complex128 array.

    Parameters
    ----------
    y : Signal or array_like
        A `Signal` instance or a sequence of (complex) samples.
    min_length : int, default=2
        Smallest accepted number of samples.
    name : str, default="y"
        Name used in error messages.

    Returns
    -------
    ndarray of complex128, shape (N + 1,)

    Raises
    ------
    ValueError
        If the input is not one-dimensional, too short or not finite.
    """
    samples = getattr(y, "samples", y)
    arr = np.asarray(samples)
    if arr.dtype == object:
        raise TypeError(f"{name} must contain numbers, got dtype object")
    arr = arr.astype(np.complex128, copy=False)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] < min_length:
        raise ValueError(f"{name} needs at least {min_length} samples, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite samples")
    return arr


def check_fraction(value, name: str) -> float:
    """Validate a scalar in the open interval (0, 1)."""
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return value


def check_positive_int(value, name: str, *, minimum: int = 1) -> int:
    """Validate an integer no smaller than `minimum`."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_seed(seed, name: str = "seed") -> int:
    """Validate a master seed: a non-negative integer."""
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise TypeError(f"{name} must be a non-negative integer, got {seed!r}")
    if seed < 0:
        raise ValueError(f"{name} must be non-negative, got {seed}")
    return int(seed)


def stream(seed, *key: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``(seed, *key)``.

    Streams are derived by counter from the master seed, so the draws of one
    stream never depend on how many other streams were used or in which
    order they were consumed.

    Parameters
    ----------
    seed : int, SeedSequence or Generator
        Master seed. A Generator is returned unchanged (``key`` must then
        be empty).
    *key : int
        Stream coordinates, e.g. ``(trial, role)``.
    """
    if isinstance(seed, np.random.Generator):
        if key:
            raise ValueError("stream keys cannot be combined with a Generator")
        return seed
    if isinstance(seed, np.random.SeedSequence):
        if key:
            seed = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
        return np.random.default_rng(seed)
    seed = check_seed(seed)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))
