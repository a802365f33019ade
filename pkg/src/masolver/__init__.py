"""Linear inverse problems via measurement-aligned reverse diffusion.

Forward operators are held as SVD factors, the prior is an analytic
Gaussian mixture with an exact denoiser, and every per-step solve reduces
to diagonal scalings in the operator's singular bases.
"""

from .budget import (
    ModeBudget,
    NoisePolicy,
    apply_budget,
    draw_colored_noise,
    known_gaussian_budget,
    unknown_noise_weights,
)
from .core import (
    MasWeights,
    NearCancellationWarning,
    ddnm_projection,
    dense_posterior_mean,
    mas_posterior_mean,
    tmpd_scalar_posterior_mean,
)
from .degradations import CorruptionSpec, dct_quantize, measure, periodic_noise, quantize
from .exceptions import (
    ConfigError,
    DegenerateOperatorError,
    DimensionMismatchError,
    SolverAbortError,
    UnstableWeightsError,
)
from .metrics import MetricReport, psnr, ssim
from .operators import (
    ImageTensor,
    SpectralOperator,
    box_mask,
    build_block_downsample,
    build_channel_average,
    build_circular_blur,
    build_dense,
    build_identity,
    build_mask,
    random_mask,
    uniform_kernel,
)
from .prior import (
    DenoiserOutput,
    GaussianMixturePrior,
    denoise,
    exact_linear_posterior,
    prior_from_json,
    responsibilities,
    sample_prior,
    template_bank,
    template_bank_prior,
)
from .sampler import (
    DiffusionSchedule,
    MasConfig,
    RunRecord,
    StepCoeffs,
    rt2_policy,
    run,
    step_coeffs,
    vp_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CorruptionSpec",
    "DegenerateOperatorError",
    "DenoiserOutput",
    "DiffusionSchedule",
    "DimensionMismatchError",
    "GaussianMixturePrior",
    "ImageTensor",
    "MasConfig",
    "MasWeights",
    "MetricReport",
    "ModeBudget",
    "NearCancellationWarning",
    "NoisePolicy",
    "RunRecord",
    "SolverAbortError",
    "SpectralOperator",
    "StepCoeffs",
    "UnstableWeightsError",
    "apply_budget",
    "box_mask",
    "build_block_downsample",
    "build_channel_average",
    "build_circular_blur",
    "build_dense",
    "build_identity",
    "build_mask",
    "dct_quantize",
    "ddnm_projection",
    "denoise",
    "dense_posterior_mean",
    "draw_colored_noise",
    "exact_linear_posterior",
    "known_gaussian_budget",
    "mas_posterior_mean",
    "measure",
    "periodic_noise",
    "prior_from_json",
    "psnr",
    "quantize",
    "random_mask",
    "responsibilities",
    "rt2_policy",
    "run",
    "sample_prior",
    "ssim",
    "step_coeffs",
    "template_bank",
    "template_bank_prior",
    "tmpd_scalar_posterior_mean",
    "uniform_kernel",
    "unknown_noise_weights",
    "vp_schedule",
]
