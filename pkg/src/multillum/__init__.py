"""Imaging kernels, effective PSFs and sparsity resolution limits for multi-illumination imaging."""

__version__ = "0.1.0"

from .measures import DiscreteMeasure, GridFunction, NoiseBound, fourier_of_measure, min_amplitude, min_separation
from .optics import IlluminationSequence, Psf, evaluate_illumination, evaluate_psf, psf_autocorrelation
from .operator import (
    CameraGrid,
    ImageStack,
    add_noise,
    adjoint,
    discrete_kernel,
    forward,
    general_decode,
    imaging_kernel,
    quadrature_convergence,
)
from .spectral import (
    PsfMulti,
    bandpass_deconvolve,
    essential_cutoffs,
    synthesize_psf_multi,
    verify_frequency_stability,
    verify_perturbed_patterns,
)
from .adversarial import (
    AdversarialPair,
    MomentSystem,
    amplitude_bounds_audit,
    certify_pair,
    construct_pair,
    lagrange_weights,
    nullspace_amplitudes,
)
from .limits import (
    LimitQuery,
    cluster_limit,
    illumination_incoherence,
    location_limit_lower,
    location_limit_upper,
    number_limit_lower,
    number_limit_upper,
    unknown_pattern_limit,
)

__all__ = [
    "AdversarialPair",
    "CameraGrid",
    "DiscreteMeasure",
    "GridFunction",
    "IlluminationSequence",
    "ImageStack",
    "LimitQuery",
    "MomentSystem",
    "NoiseBound",
    "Psf",
    "PsfMulti",
    "add_noise",
    "adjoint",
    "amplitude_bounds_audit",
    "bandpass_deconvolve",
    "certify_pair",
    "cluster_limit",
    "construct_pair",
    "discrete_kernel",
    "essential_cutoffs",
    "evaluate_illumination",
    "evaluate_psf",
    "forward",
    "fourier_of_measure",
    "general_decode",
    "illumination_incoherence",
    "imaging_kernel",
    "lagrange_weights",
    "location_limit_lower",
    "location_limit_upper",
    "min_amplitude",
    "min_separation",
    "nullspace_amplitudes",
    "number_limit_lower",
    "number_limit_upper",
    "psf_autocorrelation",
    "quadrature_convergence",
    "synthesize_psf_multi",
    "unknown_pattern_limit",
    "verify_frequency_stability",
    "verify_perturbed_patterns",
]
