import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kravchuk_zeros.signal_model import ChirpSpec, Signal, bump_envelope, make_chirp, mix, sample_cwgn


def test_signal_validates_inputs():
    with pytest.raises(ValueError):
        Signal([1.0])
    with pytest.raises(ValueError):
        Signal([1.0, 2.0], dt=0.0)
    with pytest.raises(ValueError):
        Signal([1.0, np.nan])
    s = Signal([1, 2j, 3], t0=-1.0, dt=0.5)
    assert s.N == 2
    np.testing.assert_allclose(s.times, [-1.0, -0.5, 0.0])
    with pytest.raises(ValueError):
        s.samples[0] = 5


def test_chirpspec_invariants():
    with pytest.raises(ValueError):
        ChirpSpec(nu=0.0)
    with pytest.raises(ValueError):
        ChirpSpec(nu=25.0, window=40.0)
    # Nyquist of 513 samples over 40 s is 513 / 80 = 6.4125 Hz
    with pytest.raises(ValueError):
        ChirpSpec(f2=6.5)
    ChirpSpec(f2=6.4)


def test_chirp_figure_settings_shape_and_support():
    spec = ChirpSpec(f1=0.5, f2=1.25, nu=15, window=40, n_samples=513)
    x = make_chirp(spec)
    assert len(x) == 513
    assert np.all(x.samples.imag == 0)
    t = x.times
    np.testing.assert_allclose(t[[0, -1]], [-20.0, 20.0])
    assert np.all(x.samples[np.abs(t) >= 15] == 0)
    assert np.any(x.samples[np.abs(t) < 15] != 0)


def test_chirp_vanishes_exactly_at_support_boundary():
    # window / N = 40 / 512 puts t = 15 exactly on sample 448
    x = make_chirp(ChirpSpec(nu=15, window=40, n_samples=513))
    assert x.times[448] == 15.0
    assert x.samples[448] == 0.0


def test_bump_envelope_closed_form():
    t = np.array([-2.0, -1.0, 0.0, 0.5, 1.0, 3.0])
    expected = [0, 0, 1.0, math.exp(1 - 1 / (1 - 0.25)), 0, 0]
    np.testing.assert_allclose(bump_envelope(t, 1.0), expected, rtol=1e-15)


def test_pure_tone_zero_crossings():
    # f1 = f2 = f gives sin(2 pi f t) A(t); count sign changes of the sine on the support
    f, nu = 0.75, 15.0
    spec = ChirpSpec(f1=f, f2=f, nu=nu, window=40.0, n_samples=40001)
    x = make_chirp(spec).samples.real
    t = spec.times()
    inside = np.abs(t) < nu - 1e-6
    sign = np.sign(x[inside])
    sign = sign[sign != 0]
    crossings = np.count_nonzero(sign[1:] != sign[:-1])
    # a tone of frequency f crosses zero 2 f times per second
    assert abs(crossings - 2 * f * 2 * nu) <= 2
    np.testing.assert_allclose(x, bump_envelope(t, nu) * np.sin(2 * np.pi * f * t), atol=1e-15)


def test_cwgn_moments_and_determinism():
    s = sample_cwgn(100_000, 3).samples
    assert 0.99 <= np.mean(np.abs(s) ** 2) <= 1.01
    np.testing.assert_array_equal(sample_cwgn(64, 5).samples, sample_cwgn(64, 5).samples)
    assert not np.array_equal(sample_cwgn(64, 5).samples, sample_cwgn(64, 6).samples)
    two = sample_cwgn(2, 0).samples
    assert two.shape == (2,) and np.all(np.isfinite(two))


def test_cwgn_real_imaginary_covariance():
    draws = np.stack([sample_cwgn(256, np.random.default_rng(i)).samples for i in range(10_000)])
    parts = np.stack([draws.real.ravel(), draws.imag.ravel()])
    cov = np.cov(parts)
    np.testing.assert_allclose(cov, np.eye(2) / 2, atol=0.025)


def test_mix_zero_snr_is_normalized_noise():
    xi = sample_cwgn(32, 1)
    x = make_chirp(ChirpSpec(n_samples=32, f1=0.2, f2=0.3))
    np.testing.assert_allclose(mix(x, xi, 0.0).samples, xi.samples / np.linalg.norm(xi.samples))


def test_mix_norm_identity(rng):
    x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    xi = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    x *= 3 / np.linalg.norm(x)
    xi *= 7 / np.linalg.norm(xi)
    y = mix(x, xi, 2.0).samples
    xh, nh = x / 3, xi / 7
    expected = 4 + 1 + 2 * 2.0 * np.real(np.vdot(xh, nh))
    assert abs(np.linalg.norm(y) ** 2 - expected) < 1e-12


def test_mix_noiseless_flag():
    x = make_chirp(ChirpSpec())
    y = mix(x, None, noiseless=True)
    np.testing.assert_allclose(y.samples, x.samples / np.linalg.norm(x.samples))
    np.testing.assert_array_equal(mix(x, None, math.inf).samples, y.samples)
    assert y.t0 == x.t0 and y.dt == x.dt


def test_mix_errors():
    with pytest.raises(ValueError):
        mix(np.ones(4), np.ones(5), 1.0)
    with pytest.raises(ValueError):
        mix(np.zeros(4), np.zeros(4), 1.0)
    with pytest.raises(ValueError):
        mix(np.ones(4), np.ones(4), -1.0)
    # a zero signal falls back to normalized noise
    np.testing.assert_allclose(mix(np.zeros(4), 2 * np.ones(4), 3.0).samples, np.ones(4) / 2)


@settings(max_examples=50, deadline=None)
@given(c=st.floats(1e-6, 1e6), snr=st.floats(0, 20), seed=st.integers(0, 2**32 - 1))
def test_mix_invariant_to_signal_scale(c, snr, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    xi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    a = mix(c * x, xi, snr).samples
    b = mix(x, xi, snr).samples
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)
