"""Noise budgeting for measurement-aligned updates.

With Gaussian measurement noise of known scale, the measurement term of
the posterior mean leaks a predictable amount of that noise into the next
iterate.  Per V-mode, the leak standard deviation after one update is

    a_t * sigma_y * s / ((eta1 + 1) s^2 + eta2)

so damping the measurement term by lambda in (0, 1] and drawing fresh
noise with variance gamma keeps the total per-mode injection at c_t^2:

    (leak * lambda)^2 + gamma = c_t^2,  lambda as close to 1 as possible.

For unknown noise there is nothing to budget; instead the weights follow
the schedule eta2 = k * a_t / c_t, trusting the measurement early and
suppressing it as the iterates sharpen.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import MasWeights, _raise_or_warn
from .exceptions import UnstableWeightsError
from .operators import _as_vector

ETA1_BASE_RANGE = (-0.4, 0.1)


@dataclass(frozen=True)
class NoisePolicy:
    """How the sampler treats measurement noise."""

    kind: str  # noise_free | known_gaussian | unknown
    sigma_y: float = 0.0
    inflation: float = 1.2
    k: float = 0.0
    eta1_base: float = 0.0

    def __post_init__(self):
        if self.kind not in ("noise_free", "known_gaussian", "unknown"):
            raise ValueError(f"unknown noise policy kind {self.kind!r}")
        if self.sigma_y < 0:
            raise ValueError("sigma_y must be non-negative")
        if self.kind == "known_gaussian" and self.inflation < 1.0:
            raise ValueError("inflation must be >= 1")
        if self.k < 0:
            raise ValueError("k must be non-negative")
        lo, hi = ETA1_BASE_RANGE
        if not lo <= self.eta1_base <= hi:
            raise ValueError(f"eta1_base {self.eta1_base} outside [{lo}, {hi}]")

    @classmethod
    def noise_free(cls):
        return cls(kind="noise_free")

    @classmethod
    def known_gaussian(cls, sigma_y, inflation=1.2):
        return cls(kind="known_gaussian", sigma_y=sigma_y, inflation=inflation)

    @classmethod
    def unknown(cls, k, eta1_base=0.0):
        return cls(kind="unknown", k=k, eta1_base=eta1_base)

    @property
    def sigma_y_eff(self):
        """Budgeting noise scale, slightly inflated over the nominal value."""
        return self.inflation * self.sigma_y


@dataclass
class ModeBudget:
    """Per-V-mode damping factors and compensation variances."""

    lambdas: np.ndarray
    gammas: np.ndarray


def known_gaussian_budget(op, w, a_t, c_t, sigma_y_eff):
    """Damping that keeps the per-mode noise injection at exactly c_t^2."""
    if a_t < 0 or c_t < 0 or sigma_y_eff < 0:
        raise ValueError("a_t, c_t and sigma_y_eff must be non-negative")
    d = op.in_dim
    lambdas = np.empty(d)
    gammas = np.empty(d)
    bad = kernels.budget_modes(
        op.singulars, d, w.eta1, w.eta2, a_t, c_t, sigma_y_eff, op.rank_tol, lambdas, gammas
    )
    if bad >= 0:
        raise UnstableWeightsError(bad, float(op.singulars[bad]), w.eta1, w.eta2)
    return ModeBudget(lambdas=lambdas, gammas=gammas)


def apply_budget(op, m0t, y, w, budget):
    """Damped posterior mean plus the compensation variances for the sampler.

    Returns (x0_star, gammas); the sampler draws the extra noise with
    covariance V diag(gammas) V^T.
    """
    m0t = _as_vector(m0t, "m0t", op.in_dim)
    y = _as_vector(y, "y", op.out_dim)
    lambdas = _as_vector(budget.lambdas, "lambdas", op.in_dim)
    zm = op.Vt(m0t)
    zy = op.Ut(y)
    out = np.empty(op.in_dim)
    bad = kernels.budget_combine(zm, zy, op.singulars, w.eta1, w.eta2, op.rank_tol, lambdas, out)
    _raise_or_warn(op, w, bad, -1)
    return op.V(out), budget.gammas


def draw_colored_noise(op, gammas, rng):
    """Sample N(0, V diag(gammas) V^T) exactly: scale white noise in V-space."""
    eps = rng.standard_normal(op.in_dim)
    return op.V(np.sqrt(gammas) * eps)


def unknown_noise_weights(policy, a_t, c_t):
    """Schedule eta2 = k * a_t / c_t on top of the small constant eta1."""
    if c_t <= 0:
        raise ValueError("c_t must be positive; the deterministic final step is the sampler's job")
    eta2 = 0.0 if a_t == 0 else policy.k * a_t / c_t
    return MasWeights(eta1=policy.eta1_base, eta2=eta2)
