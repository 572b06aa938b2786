"""Filtered back projection with Besov-space error analysis.

Analytic ellipse phantoms, the smooth low-pass filters with their kernels,
the discrete FBP pipeline, moduli of continuity and Besov semi-norm
estimates, and the error sweeps that measure convergence rates.
"""

__version__ = "0.1.0"

from .besov import (
    BesovEstimate,
    ModulusCurve,
    TabulatedIncreasing,
    besov_seminorm,
    constant_c_alpha_q,
    modulus_curve,
    modulus_of_continuity,
    verify_lemma_embedding_inf,
    verify_lemma_embedding_p,
    verify_lemma_limit,
)
from .experiments import (
    NoiseSpec,
    SweepResult,
    add_noise,
    apriori_bandwidth,
    fit_loglog_slope,
    sweep_approximation,
    sweep_data_error,
    sweep_total_error,
)
from .fbp import FBPReconstructor, ReconstructionConfig, approximation_error, filter_sinogram, reconstruct
from .filters import (
    Divergent,
    Filter,
    RadialKernel,
    Window,
    bessel_j,
    hyp1f2,
    inv_fourier_filter,
    kernel_alpha_constant,
    kernel_moment,
    kernel_value,
    l1_norm_inv_fourier,
)
from .phantoms import Phantom, load_phantom, shepp_logan, smooth_phantom, unit_disk
from .transforms import Image, Sinogram, SinogramGrid, back_project, discrete_lp_norm, sample_sinogram

__all__ = [
    "__version__",
    "BesovEstimate",
    "ModulusCurve",
    "TabulatedIncreasing",
    "besov_seminorm",
    "constant_c_alpha_q",
    "modulus_curve",
    "modulus_of_continuity",
    "verify_lemma_embedding_inf",
    "verify_lemma_embedding_p",
    "verify_lemma_limit",
    "NoiseSpec",
    "SweepResult",
    "add_noise",
    "apriori_bandwidth",
    "fit_loglog_slope",
    "sweep_approximation",
    "sweep_data_error",
    "sweep_total_error",
    "FBPReconstructor",
    "ReconstructionConfig",
    "approximation_error",
    "filter_sinogram",
    "reconstruct",
    "Divergent",
    "Filter",
    "RadialKernel",
    "Window",
    "bessel_j",
    "hyp1f2",
    "inv_fourier_filter",
    "kernel_alpha_constant",
    "kernel_moment",
    "kernel_value",
    "l1_norm_inv_fourier",
    "Phantom",
    "load_phantom",
    "shepp_logan",
    "smooth_phantom",
    "unit_disk",
    "Image",
    "Sinogram",
    "SinogramGrid",
    "back_project",
    "discrete_lp_norm",
    "sample_sinogram",
]
