"""Analytic Gaussian-mixture prior and its exact denoiser.

With an isotropic mixture prior, the conditional mean of the clean signal
given a noisy observation x_t = alpha * x0 + sigma * eps has a closed form:
per-component Gaussian conditioning blended by responsibilities.  This
stands in for a trained denoiser so every solver identity in the package is
testable end to end.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DimensionMismatchError
from . import imageio


@dataclass(frozen=True)
class GaussianMixturePrior:
    """Mixture of isotropic Gaussians: weights (J,), means (J, d), variances (J,)."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "means", np.atleast_2d(np.asarray(self.means, dtype=np.float64)))
        object.__setattr__(self, "variances", np.asarray(self.variances, dtype=np.float64))
        if self.weights.ndim != 1 or self.weights.size != self.means.shape[0]:
            raise ValueError("weights and means disagree on component count")
        if self.variances.shape != self.weights.shape:
            raise ValueError("one isotropic variance per component required")
        if np.any(self.weights < 0):
            raise ValueError("component weights must be non-negative")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("component weights must sum to 1")
        if np.any(self.variances <= 0):
            raise ValueError("component variances must be positive")
        if not (np.all(np.isfinite(self.means)) and np.all(np.isfinite(self.variances))):
            raise ValueError("prior parameters must be finite")

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def n_components(self):
        return self.weights.size

    def mixture_mean(self):
        return self.weights @ self.means

    def mixture_cov(self):
        """Exact covariance: sum_j w_j (tau_j^2 I + mu_j mu_j^T) - m m^T."""
        m = self.mixture_mean()
        cov = np.diag(np.full(self.dim, float(self.weights @ self.variances)))
        cov += (self.weights[:, None] * self.means).T @ self.means
        cov -= np.outer(m, m)
        return cov


@dataclass
class DenoiserOutput:
    mean: np.ndarray
    scalar_var: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.mean)) or not np.isfinite(self.scalar_var):
            raise ValueError("denoiser output must be finite")
        if self.scalar_var < 0:
            raise ValueError("posterior scalar variance must be non-negative")


def responsibilities(prior, x_t, alpha_t, sigma_t):
    """Posterior component probabilities of x_t under the noised mixture.

    Computed in the log domain with max subtraction; at small sigma_t the
    raw likelihoods underflow long before the ratios degenerate.
    """
    x_t = np.asarray(x_t, dtype=np.float64).ravel()
    if x_t.size != prior.dim:
        raise DimensionMismatchError("x_t", prior.dim, x_t.size)
    marg_var = alpha_t**2 * prior.variances + sigma_t**2
    diff = x_t[None, :] - alpha_t * prior.means
    sq = np.einsum("jd,jd->j", diff, diff)
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior.weights)  # -inf for zero-weight components
    log_w = log_prior - 0.5 * prior.dim * np.log(marg_var) - 0.5 * sq / marg_var
    log_w -= log_w.max()
    w = np.exp(log_w)
    return w / w.sum()


def denoise(prior, x_t, alpha_t, sigma_t):
    """Exact E[x0 | x_t] and the scalar posterior variance trace/d.

    Requires sigma_t > 0; the noiseless endpoint is the sampler's job.
    """
    if sigma_t <= 0:
        raise ValueError(f"sigma_t must be positive, got {sigma_t}")
    if alpha_t <= 0:
        raise ValueError(f"alpha_t must be positive, got {alpha_t}")
    x_t = np.asarray(x_t, dtype=np.float64).ravel()
    gamma = responsibilities(prior, x_t, alpha_t, sigma_t)
    marg_var = alpha_t**2 * prior.variances + sigma_t**2
    gain = alpha_t * prior.variances / marg_var  # per-component Kalman gain
    comp_means = prior.means + gain[:, None] * (x_t[None, :] - alpha_t * prior.means)
    comp_var = prior.variances * sigma_t**2 / marg_var  # per-coordinate
    mean = gamma @ comp_means
    # trace/d of the mixture covariance: within-component plus spread of means
    spread = np.einsum("jd,jd->j", comp_means, comp_means)
    scalar_var = float(gamma @ comp_var + (gamma @ spread - mean @ mean) / prior.dim)
    return DenoiserOutput(mean=mean, scalar_var=max(scalar_var, 0.0))


def sample_prior(prior, rng):
    """Draw one vector: component by weight, then an isotropic Gaussian."""
    j = int(rng.choice(prior.n_components, p=prior.weights))
    return prior.means[j] + np.sqrt(prior.variances[j]) * rng.standard_normal(prior.dim)


def exact_linear_posterior(prior, op, y, sigma_y):
    """Ground-truth Gaussian posterior of x0 | y for a one-component prior.

    Returns (mean, cov_diag_in_V): the posterior mean in signal space and
    the posterior covariance diagonal expressed in the operator's V basis
    (the covariance is exactly diagonal there for an isotropic prior).
    """
    if prior.n_components != 1:
        raise ValueError("exact posterior oracle requires a single-component prior")
    if sigma_y <= 0:
        raise ValueError("sigma_y must be positive")
    mu = prior.means[0]
    tau2 = float(prior.variances[0])
    y = np.asarray(y, dtype=np.float64).ravel()
    d = op.in_dim
    r = op.singulars.size
    s_full = np.zeros(d)
    s_full[:r] = op.singulars
    precision = 1.0 / tau2 + s_full**2 / sigma_y**2
    cov_diag = 1.0 / precision
    rhs = op.Vt(mu) / tau2
    zu = op.Ut(y)
    rhs[:r] += op.singulars * zu[:r] / sigma_y**2
    mean = op.V(cov_diag * rhs)
    return mean, cov_diag


# ---------------------------------------------------------------------------
# toy image priors
# ---------------------------------------------------------------------------


def template_bank(channels, height, width, n_components=8):
    """Procedural smooth template images in [0, 1], one per component.

    Gradients, blobs, stripes and rings at increasing indices; channels get
    slight per-channel offsets so color tasks are non-degenerate.
    """
    ys, xs = np.meshgrid(
        np.linspace(0.0, 1.0, height), np.linspace(0.0, 1.0, width), indexing="ij"
    )
    rad = np.hypot(ys - 0.5, xs - 0.5)
    fields = [
        0.15 + 0.7 * xs,
        0.15 + 0.7 * ys,
        0.15 + 0.35 * (xs + ys),
        0.2 + 0.7 * np.exp(-(rad**2) / 0.08),
        0.9 - 0.7 * np.exp(-(rad**2) / 0.15),
        0.5 + 0.35 * np.sin(2.0 * np.pi * xs),
        0.5 + 0.35 * np.sin(2.0 * np.pi * ys),
        0.5 + 0.4 * np.cos(6.0 * rad),
        0.2 + 0.6 * xs * ys,
        0.5 + 0.3 * np.sin(2.0 * np.pi * (xs - ys)),
    ]
    if n_components > len(fields):
        raise ValueError(f"template bank offers at most {len(fields)} components")
    bank = np.empty((n_components, channels * height * width))
    for j in range(n_components):
        img = np.repeat(fields[j][None, :, :], channels, axis=0)
        if channels == 3:
            img = img * np.array([1.0, 0.92, 0.84])[:, None, None]
        bank[j] = np.clip(img, 0.0, 1.0).ravel()
    return bank


def template_bank_prior(channels, height, width, n_components=8, tau=0.05, weights=None):
    means = template_bank(channels, height, width, n_components)
    if weights is None:
        weights = np.full(n_components, 1.0 / n_components)
    return GaussianMixturePrior(
        weights=weights,
        means=means,
        variances=np.full(n_components, float(tau) ** 2),
    )


def prior_from_json(source, base_dir=None):
    """Load a mixture description from a JSON file or dict.

    Schema: {"weights": [...], "variances": [...], "means": [...]} where
    each mean is either an inline flat array or a path to a PGM/PPM image
    (resolved against base_dir, defaulting to the JSON file's directory).
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        with open(path) as fh:
            desc = json.load(fh)
        if base_dir is None:
            base_dir = path.parent
    else:
        desc = source
    base_dir = Path(base_dir) if base_dir is not None else Path(".")
    means = []
    for entry in desc["means"]:
        if isinstance(entry, str):
            means.append(imageio.read_image(base_dir / entry).ravel())
        else:
            means.append(np.asarray(entry, dtype=np.float64).ravel())
    lengths = {m.size for m in means}
    if len(lengths) != 1:
        raise ValueError(f"mixture means disagree on dimension: {sorted(lengths)}")
    return GaussianMixturePrior(
        weights=np.asarray(desc["weights"], dtype=np.float64),
        means=np.vstack(means),
        variances=np.asarray(desc["variances"], dtype=np.float64),
    )
