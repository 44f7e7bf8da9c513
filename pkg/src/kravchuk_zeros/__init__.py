"""Kravchuk time-frequency transform, spectrogram zeros on the sphere and zero-based detection."""

__version__ = "0.1.0"

from .kravchuk_basis import (BASIS_N_MAX, BasisInstabilityError, KravchukBasis, analyze_coefficients, gram_deviation,
                    kravchuk_functions, kravchuk_polynomials, transform_via_basis)
from .detection import (PowerReport, TestConfig, TestOutcome, ZeroExtractionError, clopper_pearson,
                        envelope_test, envelope_tests, estimate_power, estimate_powers, summary_statistic)
from .fourier_baseline import PlanarSpectrogram, fourier_envelope_test, gaussian_stft
from .signal_model import ChirpSpec, Signal, make_chirp, mix, sample_cwgn
from .spatial_stats import (CurveEstimate, EvalGrid, chordal_distance, empty_space_f, make_eval_grid,
                            ripley_k)
from .kravchuk import (SphericalGrid, Spectrogram, energy, inverse_stereographic, kravchuk_spectrogram,
                        kravchuk_transform_point, reconstruct, stereographic, threshold_mask)
from .zeros import (PointPattern, extract_zeros_planar, extract_zeros_spherical, polynomial_zeros_oracle,
                    sample_spherical_gaf_zeros)
