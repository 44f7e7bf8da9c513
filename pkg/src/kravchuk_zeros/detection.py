"""Monte Carlo envelope test on spectrogram zeros and the power-estimation harness."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.integrate import trapezoid
from scipy.special import betainc

from ._validation import as_samples, check_positive_int, check_seed, stream
from .signal_model import ChirpSpec, Signal, make_chirp, mix, sample_cwgn
from .spatial_stats import (CURVE_KINDS, DEFAULT_N_RADII, K_NORMALIZATIONS, CurveEstimate, empty_space_f,
                            make_eval_grid, ripley_k)
from .kravchuk import FRAMES, SphericalGrid, kravchuk_spectrogram
from .zeros import THRESHOLD_MODES, extract_zeros_spherical

TRANSFORMS = ("kravchuk", "fourier")
# stream roles inside one trial: 0 is the data noise, 1 + i the i-th null draw
DATA_ROLE = 0


class ZeroExtractionError(RuntimeError):
    """No zeros were found in a spectrogram.

    Carries the draw index (-1 for the data) and, inside power runs, the
    trial index.
    """

    def __init__(self, draw: int, message: str = "no zeros extracted", trial: int | None = None):
        self.draw = draw
        self.trial = trial
        self.message = message
        which = "data" if draw < 0 else f"draw {draw}"
        where = which if trial is None else f"trial {trial}, {which}"
        super().__init__(f"{message} ({where})")

    def __reduce__(self):
        return (type(self), (self.draw, self.message, self.trial))


@dataclass(frozen=True)
class TestConfig:
    """Parameters of the envelope test.

    Parameters
    ----------
    alpha : float, default=0.05
        Level; ``alpha * (m + 1)`` must be an integer k.
    m : int, default=199
        Number of null (pure noise) draws.
    statistic : {"F", "K"}, default="F"
    r_range : tuple of float, optional
        Integration range ``(r1, r2)`` of the summary statistic. Default
        ``[0, 2 pi / sqrt(N)]`` for F, ``[0, pi]`` for K, and ``[0, pi]``
        in Bargmann units for the planar F.
    n_radii : int, default=10000
    seed : int, optional
        Master seed of the null draws; required by :func:`envelope_test`.
    threshold_fraction : float, default=0.075
    threshold_on : {"power", "amplitude"}, default="power"
    k_normalization : {"printed", "moller"}, default="printed"
    transform : {"kravchuk", "fourier"}, default="kravchuk"
    grid_factor : float, default=16.0
        Spherical grid has ``ceil(grid_factor sqrt(N))`` rows.
    grid_aspect : int, default=2
        Columns per row of the spherical grid.
    grid_frame : {"rotated", "standard"}, default="rotated"
    """

    __test__ = False  # keep pytest from collecting this class

    alpha: float = 0.05
    m: int = 199
    statistic: str = "F"
    r_range: tuple[float, float] | None = None
    n_radii: int = DEFAULT_N_RADII
    seed: int | None = None
    threshold_fraction: float = 0.075
    threshold_on: str = "power"
    k_normalization: str = "printed"
    transform: str = "kravchuk"
    grid_factor: float = 16.0
    grid_aspect: int = 2
    grid_frame: str = "rotated"

    def __post_init__(self):
        check_positive_int(self.m, "m")
        check_positive_int(self.n_radii, "n_radii", minimum=2)
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        ka = self.alpha * (self.m + 1)
        if abs(ka - round(ka)) > 1e-9 or round(ka) < 1:
            raise ValueError(f"alpha * (m + 1) = {ka} must be a positive integer")
        if self.statistic not in CURVE_KINDS:
            raise ValueError(f"statistic must be one of {CURVE_KINDS}, got {self.statistic!r}")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"transform must be one of {TRANSFORMS}, got {self.transform!r}")
        if self.transform == "fourier" and self.statistic != "F":
            raise ValueError("the Fourier baseline supports the F statistic only")
        if self.threshold_on not in THRESHOLD_MODES:
            raise ValueError(f"threshold_on must be one of {THRESHOLD_MODES}")
        if self.k_normalization not in K_NORMALIZATIONS:
            raise ValueError(f"k_normalization must be one of {K_NORMALIZATIONS}")
        if not 0 < self.threshold_fraction < 1:
            raise ValueError("threshold_fraction must lie in (0, 1)")
        if self.r_range is not None:
            r1, r2 = (float(v) for v in self.r_range)
            if not 0 <= r1 < r2:
                raise ValueError(f"r_range must satisfy 0 <= r1 < r2, got {self.r_range}")
            object.__setattr__(self, "r_range", (r1, r2))
        if self.seed is not None:
            check_seed(self.seed)
        if not self.grid_factor > 0:
            raise ValueError("grid_factor must be positive")
        check_positive_int(self.grid_aspect, "grid_aspect")
        if self.grid_frame not in FRAMES:
            raise ValueError(f"grid_frame must be one of {FRAMES}")

    def grid(self, N: int) -> SphericalGrid:
        """Spherical grid used for degree N."""
        return SphericalGrid.default(N, self.grid_factor, self.grid_aspect, self.grid_frame)

    @property
    def k(self) -> int:
        """Rank index ``alpha * (m + 1)``."""
        return int(round(self.alpha * (self.m + 1)))

    def replace(self, **changes) -> "TestConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["r_range"] = list(self.r_range) if self.r_range is not None else None
        d["k"] = self.k
        return d

    def radii(self, N: int, statistic: str | None = None) -> np.ndarray:
        """Radius grid of the chosen statistic for degree N."""
        statistic = statistic or self.statistic
        if self.r_range is not None:
            r1, r2 = self.r_range
        elif self.transform == "fourier":
            from .fourier_baseline import PLANAR_R_MAX

            r1, r2 = 0.0, PLANAR_R_MAX
        elif statistic == "F":
            r1, r2 = 0.0, 2 * math.pi / math.sqrt(N)
        else:
            r1, r2 = 0.0, math.pi
        return np.linspace(r1, r2, self.n_radii)


@dataclass(frozen=True, eq=False)
class TestOutcome:
    """Verdict of one envelope test.

    Attributes
    ----------
    s_observed : float
    s_null_sorted : ndarray
        Null statistics in decreasing order.
    k : int
    reject : bool
        ``s_observed >= s_null_sorted[k - 1]``.
    rank : int
        ``1 + #{nulls strictly above s_observed}``.
    statistic : str
    """

    __test__ = False

    s_observed: float
    s_null_sorted: np.ndarray
    k: int
    reject: bool
    rank: int
    statistic: str = "F"
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "statistic": self.statistic,
            "s_observed": self.s_observed,
            "s_null_sorted": [float(v) for v in self.s_null_sorted],
            "k": self.k,
            "rank": self.rank,
            "reject": self.reject,
            "seed": self.config.get("seed"),
        }


@dataclass(frozen=True)
class PowerReport:
    """Detection power estimated over independent trials."""

    n_detections: int
    n_trials: int
    beta_hat: float
    ci: tuple[float, float]
    level: float = 0.01
    statistic: str = "F"
    transform: str = "kravchuk"
    snr: float = 0.0
    N: int = 0
    duration: float = 0.0
    seed: int | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "statistic": self.statistic,
            "transform": self.transform,
            "snr": "inf" if math.isinf(self.snr) else self.snr,
            "N": self.N,
            "duration": self.duration,
            "n_detections": self.n_detections,
            "n_trials": self.n_trials,
            "beta_hat": self.beta_hat,
            "ci_lo": self.ci[0],
            "ci_hi": self.ci[1],
            "level": self.level,
            "seed": self.seed,
        }


def summary_statistic(curve: CurveEstimate, reference: CurveEstimate) -> float:
    """Quadratic distance ``sqrt(integral (S(r) - S_ref(r))^2 dr)`` by the trapezoid rule."""
    if curve.radii.shape != reference.radii.shape or not np.array_equal(curve.radii, reference.radii):
        raise ValueError("curves are sampled on different radius grids")
    diff = curve.values - reference.values
    return float(np.sqrt(trapezoid(diff * diff, curve.radii)))


def envelope_decision(s_observed: float, s_null, k: int) -> tuple[bool, int, np.ndarray]:
    """Rank decision: reject iff ``s_observed`` is at least the k-th largest null value.

    Returns
    -------
    reject : bool
    rank : int
        ``1 + #{s_null > s_observed}``.
    s_null_sorted : ndarray
        Decreasing order.
    """
    s_sorted = np.sort(np.asarray(s_null, dtype=float))[::-1]
    if not 1 <= k <= s_sorted.size:
        raise ValueError(f"k={k} outside 1..{s_sorted.size}")
    reject = bool(s_observed >= s_sorted[k - 1])
    rank = int(1 + np.count_nonzero(s_sorted > s_observed))
    return reject, rank, s_sorted


def envelope_from_curves(data_curve: CurveEstimate, null_curves, k: int, *, config: dict | None = None) -> TestOutcome:
    """Envelope test from precomputed curves.

    The reference is the mean of all m + 1 curves (data included) and every
    statistic, data and nulls alike, is measured against it.
    """
    null_curves = list(null_curves)
    stack = np.vstack([data_curve.values] + [c.values for c in null_curves])
    ref = CurveEstimate(data_curve.radii, stack.mean(axis=0), data_curve.kind)
    s_obs = summary_statistic(data_curve, ref)
    s_null = [summary_statistic(c, ref) for c in null_curves]
    reject, rank, s_sorted = envelope_decision(s_obs, s_null, k)
    return TestOutcome(s_obs, s_sorted, k, reject, rank, data_curve.kind, dict(config or {}))


def signal_curves(y, cfg: TestConfig, statistics=None, *, draw: int = -1) -> dict[str, CurveEstimate]:
    """Zeros of one signal's spectrogram and the requested curves.

    The zeros are extracted once and shared by all statistics.
    """
    statistics = tuple(statistics or (cfg.statistic,))
    ys = as_samples(y)
    N = ys.size - 1
    if cfg.transform == "fourier":
        from .fourier_baseline import fourier_f_curve

        if statistics != ("F",):
            raise ValueError("the Fourier baseline supports the F statistic only")
        try:
            return {"F": fourier_f_curve(y, cfg.radii(N, "F"), threshold_fraction=cfg.threshold_fraction,
                                         threshold_on=cfg.threshold_on)}
        except ValueError as exc:
            raise ZeroExtractionError(draw, str(exc)) from exc
    spec = kravchuk_spectrogram(ys, cfg.grid(N))
    zeros = extract_zeros_spherical(spec, cfg.threshold_fraction, cfg.threshold_on)
    if len(zeros) == 0:
        raise ZeroExtractionError(draw)
    out = {}
    for s in statistics:
        if s == "F":
            out[s] = empty_space_f(zeros, make_eval_grid(len(zeros)), cfg.radii(N, "F"))
        else:
            out[s] = ripley_k(zeros, cfg.radii(N, "K"), cfg.k_normalization)
    return out


def _null_curves(n_samples, t0, dt, cfg, statistics, seed, key_prefix, draws):
    out = []
    for i in draws:
        noise = sample_cwgn(n_samples, stream(seed, *key_prefix, 1 + i), t0=t0, dt=dt)
        out.append(signal_curves(noise, cfg, statistics, draw=i))
    return out


def _chunks(n: int, n_chunks: int) -> list[range]:
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _envelope(y, cfg, statistics, seed, key_prefix=(), n_jobs=1) -> dict[str, TestOutcome]:
    statistics = tuple(statistics)
    ys = as_samples(y)
    t0 = float(getattr(y, "t0", 0.0))
    dt = float(getattr(y, "dt", 1.0))
    data = signal_curves(y, cfg, statistics)
    if n_jobs == 1:
        nulls = _null_curves(ys.size, t0, dt, cfg, statistics, seed, key_prefix, range(cfg.m))
    else:
        parts = Parallel(n_jobs=n_jobs)(
            delayed(_null_curves)(ys.size, t0, dt, cfg, statistics, seed, key_prefix, r)
            for r in _chunks(cfg.m, 4 * max(1, abs(n_jobs)))
        )
        nulls = [c for part in parts for c in part]
    conf = cfg.replace(seed=seed).to_dict()
    return {s: envelope_from_curves(data[s], [n[s] for n in nulls], cfg.k, config={**conf, "statistic": s})
            for s in statistics}


def envelope_test(y, cfg: TestConfig, *, n_jobs: int = 1) -> TestOutcome:
    """Monte Carlo envelope test of ``H0: y is white noise``.

    The data and ``cfg.m`` seeded noise draws go through the same pipeline
    (spectrogram, MGN zeros, curve); the reference is the mean of all
    ``m + 1`` curves and H0 is rejected when the data statistic reaches the
    k-th largest null statistic.

    Parameters
    ----------
    y : Signal or array_like
    cfg : TestConfig
        Must carry a seed.
    n_jobs : int, default=1
        Worker processes for the null draws; results do not depend on it.

    Raises
    ------
    ZeroExtractionError
        If a spectrogram yields no zeros, with the draw index.
    """
    if cfg.seed is None:
        raise ValueError("envelope_test needs an explicit seed in the configuration")
    return _envelope(y, cfg, (cfg.statistic,), cfg.seed, (), n_jobs)[cfg.statistic]


def envelope_tests(y, cfg: TestConfig, statistics=("F", "K"), *, n_jobs: int = 1) -> dict[str, TestOutcome]:
    """Envelope tests for several statistics sharing the same zeros and null draws."""
    if cfg.seed is None:
        raise ValueError("envelope_tests needs an explicit seed in the configuration")
    return _envelope(y, cfg, statistics, cfg.seed, (), n_jobs)


def clopper_pearson(successes: int, trials: int, level: float = 0.01) -> tuple[float, float]:
    """Exact binomial interval with coverage ``1 - level``.

    Bounds invert the regularized incomplete beta function by bisection:
    ``lo`` solves ``I_p(x, n - x + 1) = level / 2`` and ``hi`` solves
    ``I_p(x + 1, n - x) = 1 - level / 2``.
    """
    trials = check_positive_int(trials, "trials")
    successes = check_positive_int(successes, "successes", minimum=0)
    if successes > trials:
        raise ValueError("successes cannot exceed trials")
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")

    def solve(a, b, target):
        lo, hi = 0.0, 1.0
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if betainc(a, b, mid) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    x, n = successes, trials
    p_lo = 0.0 if x == 0 else solve(x, n - x + 1, level / 2)
    p_hi = 1.0 if x == n else solve(x + 1, n - x, 1 - level / 2)
    return p_lo, p_hi


def _observation(signal: Signal, snr: float, seed: int, trial: int) -> Signal:
    if math.isinf(snr):
        return mix(signal, None, noiseless=True)
    noise = sample_cwgn(len(signal), stream(seed, trial, DATA_ROLE), t0=signal.t0, dt=signal.dt)
    return mix(signal, noise, snr)


def _trial(signal, snr, cfg, statistics, seed, trial):
    y = _observation(signal, snr, seed, trial)
    try:
        res = _envelope(y, cfg, statistics, seed, (trial,), 1)
    except ZeroExtractionError as exc:
        raise ZeroExtractionError(exc.draw, exc.message, trial) from exc
    return {s: res[s].reject for s in statistics}


def estimate_powers(signal_spec: ChirpSpec, snr: float, cfg: TestConfig, n_reps: int, master_seed: int,
                    statistics=("F", "K"), *, n_jobs: int = 1, level: float = 0.01,
                    progress=None) -> dict[str, PowerReport]:
    """Detection power for several statistics sharing the same trials.

    Trial t observes ``mix(chirp, noise_t, snr)`` and runs a fresh envelope
    test; noise of trial t comes from stream ``(master_seed, t, 0)`` and its
    i-th null draw from ``(master_seed, t, 1 + i)``, so results do not depend
    on ``n_jobs`` or on execution order.

    Parameters
    ----------
    signal_spec : ChirpSpec
    snr : float
        ``math.inf`` runs noiseless observations.
    cfg : TestConfig
        Its seed is ignored in favour of ``master_seed``.
    n_reps : int
    master_seed : int
    statistics : sequence of {"F", "K"}
    n_jobs : int, default=1
    level : float, default=0.01
        Clopper-Pearson level.
    progress : callable, optional
        Called with the number of finished trials (sequential runs only).
    """
    n_reps = check_positive_int(n_reps, "n_reps")
    master_seed = check_seed(master_seed)
    statistics = tuple(statistics)
    signal = make_chirp(signal_spec)
    if n_jobs == 1:
        results = []
        for t in range(n_reps):
            results.append(_trial(signal, snr, cfg, statistics, master_seed, t))
            if progress is not None:
                progress(t + 1)
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_trial)(signal, snr, cfg, statistics, master_seed, t) for t in range(n_reps)
        )
    out = {}
    for s in statistics:
        hits = sum(r[s] for r in results)
        conf = cfg.replace(statistic=s, seed=master_seed).to_dict()
        conf["signal"] = dataclasses.asdict(signal_spec)
        out[s] = PowerReport(
            n_detections=int(hits), n_trials=n_reps, beta_hat=hits / n_reps,
            ci=clopper_pearson(int(hits), n_reps, level), level=level, statistic=s,
            transform=cfg.transform, snr=float(snr), N=signal_spec.n_samples - 1,
            duration=2 * signal_spec.nu, seed=master_seed, config=conf,
        )
    return out


def estimate_power(signal_spec: ChirpSpec, snr: float, cfg: TestConfig, n_reps: int, master_seed: int,
                   *, n_jobs: int = 1, level: float = 0.01, progress=None) -> PowerReport:
    """Detection power of the envelope test with ``cfg.statistic``; see :func:`estimate_powers`."""
    return estimate_powers(signal_spec, snr, cfg, n_reps, master_seed, (cfg.statistic,), n_jobs=n_jobs,
                           level=level, progress=progress)[cfg.statistic]
