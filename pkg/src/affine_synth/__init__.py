"""Affine synthesis and analysis operators on sampled grids.

Builds the affine system psi_{j,k}(x) = |det a_j|^{1/p} psi(a_j x - b k) for
expanding isotropic dilations, the synthesis/analysis operators between
mixed-norm coefficient spaces and Lebesgue/Hardy/Sobolev grid norms, the
discrete Riesz kernel and its sequence spaces, and a config-driven harness
that verifies every norm bound, commutation identity and scale-averaged
convergence statement at desk scale.
"""

from ._accel import BACKEND
from .geometry import (Box, DilationSchedule, Lattice, box1d,
                       check_exponential_expansion, dyadic_schedule, lattice,
                       lattice_points_touching, translate_support)
from .grids import (Grid, GridField, MeanWarning, VectorField,
                    field_from_function, field_from_spectrum,
                    fourier_multiplier, grid1d, h1_norm, load_field, lp_norm,
                    mean_value, multiindices, periodize, rescale_mb,
                    riesz_transform, riesz_transform_pv, save_field,
                    sobolev_norm, spectral_derivative)
from .harness import (ConfigError, ExperimentConfig, Report, emit_report,
                      load_config, run_experiment, shipped_configs)
from .operators import (CommensurabilityError, CoverageError, MassLossError,
                        OperatorContext, analyze, analyze_scale,
                        cesaro_partials, construct_coefficients,
                        deriv_synth_commutator_residual,
                        diff_analysis_commutator_residual, frame_reconstruct,
                        hardy_scale_averaged, mask_adapted, quasi_interpolant,
                        riesz_analysis_commutator_residual,
                        riesz_synth_commutator_residual, scale_averaged_approx,
                        sobolev_scale_averaged, synthesize, synthesize_scale)
from .sequences import (CoeffArray, CutoffSpec, KernelSeq, canonical,
                        convolve_seq, delta_seq, difference,
                        discrete_riesz_kernel, discretized_riesz_kernel,
                        export_kernel_csv, h1_mixed_norm, h1_seq_norm,
                        hilbert_sequence, mean_zero_check, mixed_norm,
                        seq_norm, sobolev_seq_norm, sup_mixed_norm,
                        spectral_helpers)
from .synthesizers import (NormParams, Synthesizer, bandlimited, bspline_form,
                           eta_rho, gaussian, indicator_cell, mexican_hat,
                           parse_synthesizer, periodization_majorant_norm,
                           quadrature_integral, tent)

__version__ = "0.1.0"
