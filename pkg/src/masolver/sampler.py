"""Reverse-diffusion loop with pluggable posterior-mean policies.

Each step denoises the current iterate with the exact mixture denoiser,
replaces the denoiser output by a measurement-aligned posterior mean (or a
baseline: projection, scalar-covariance, or nothing), and renoises:

    x_{n-1} = a_t * x0_star + b_t * x_n + noise,  noise var c_t^2 per mode.

The noise scale c_t is treated as a standard deviation throughout.  The
final step has c_t = 0 and returns x0_star deterministically; the denoiser
is never queried at the clean endpoint.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import budget as budget_mod
from . import core, prior as prior_mod
from .exceptions import ConfigError, SolverAbortError
from .operators import _as_vector

METHODS = ("mas", "ddnm", "tmpd_scalar", "unconditional")


@dataclass(frozen=True)
class DiffusionSchedule:
    """Discrete (alpha_n, sigma_n) tables, n = 0..N, alpha_0 = 1, sigma_0 = 0."""

    alpha: np.ndarray
    sigma: np.ndarray
    variant: str = "simple_ancestral"  # or "ddim"
    ddim_eta: float = 0.85
    vp: bool = True

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=np.float64))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=np.float64))
        a, s = self.alpha, self.sigma
        if a.shape != s.shape or a.ndim != 1 or a.size < 2:
            raise ValueError("alpha and sigma must be equal-length vectors, N >= 1")
        if self.variant not in ("simple_ancestral", "ddim"):
            raise ValueError(f"unknown schedule variant {self.variant!r}")
        if not 0.0 <= self.ddim_eta <= 1.0:
            raise ValueError("ddim_eta must lie in [0, 1]")
        if a[0] != 1.0 or s[0] != 0.0:
            raise ValueError("schedule must start at alpha=1, sigma=0")
        if np.any(a <= 0) or np.any(a > 1) or np.any(s < 0):
            raise ValueError("alpha in (0, 1] and sigma >= 0 required")
        if np.any(np.diff(a) >= 0) or np.any(np.diff(s) <= 0):
            raise ValueError("alpha must decrease and sigma increase strictly in n")
        if self.vp and np.max(np.abs(a**2 + s**2 - 1.0)) > 1e-9:
            raise ValueError("variance-preserving schedule violates alpha^2 + sigma^2 = 1")

    @property
    def steps(self):
        return self.alpha.size - 1


def vp_schedule(steps, beta_min=0.1, beta_max=20.0, variant="simple_ancestral", ddim_eta=0.85):
    """Variance-preserving discretization of a linear-beta noising process.

    alpha(t) = exp(-t^2 (beta_max - beta_min)/4 - t beta_min / 2) on a
    uniform grid t_n = n / N; sigma = sqrt(1 - alpha^2).  At the default
    betas sigma_N is approximately 1.  Presets: steps = 20 and 200.
    """
    t = np.linspace(0.0, 1.0, steps + 1)
    log_alpha = -0.25 * t**2 * (beta_max - beta_min) - 0.5 * t * beta_min
    alpha = np.exp(log_alpha)
    sigma = np.sqrt(np.maximum(1.0 - alpha**2, 0.0))
    return DiffusionSchedule(alpha=alpha, sigma=sigma, variant=variant, ddim_eta=ddim_eta)


@dataclass(frozen=True)
class StepCoeffs:
    a_t: float
    b_t: float
    c_t: float


def step_coeffs(schedule, n):
    """Update coefficients for the transition n -> n-1.

    simple_ancestral renoises the posterior mean to the n-1 level;
    ddim interpolates with stochasticity ddim_eta (0 deterministic,
    1 matching the ancestral conditional variance on a VP schedule).
    """
    if not 1 <= n <= schedule.steps:
        raise ValueError(f"step index {n} outside 1..{schedule.steps}")
    a_prev, s_prev = schedule.alpha[n - 1], schedule.sigma[n - 1]
    if schedule.variant == "simple_ancestral":
        return StepCoeffs(a_t=float(a_prev), b_t=0.0, c_t=float(s_prev))
    a_n, s_n = schedule.alpha[n], schedule.sigma[n]
    inner = s_n**2 - (a_n * s_prev / a_prev) ** 2
    c = schedule.ddim_eta * (s_prev / s_n) * math.sqrt(max(inner, 0.0))
    b = math.sqrt(max(s_prev**2 - c**2, 0.0)) / s_n
    a = a_prev - b * a_n
    return StepCoeffs(a_t=float(a), b_t=float(b), c_t=float(c))


def rt2_policy(schedule, n, mode, denoiser_scalar_var=None):
    """Scalar stand-in for the signal covariance at step n.

    ratio:          sigma_n^2 / alpha_n^2 (prior-agnostic).
    tweedie_scalar: the denoiser-supplied posterior variance trace / d.
    """
    if mode == "ratio":
        return float(schedule.sigma[n] ** 2 / schedule.alpha[n] ** 2)
    if mode == "tweedie_scalar":
        if denoiser_scalar_var is None:
            raise ValueError("tweedie_scalar mode needs the denoiser output")
        return float(denoiser_scalar_var)
    raise ValueError(f"unknown rt2 mode {mode!r}")


@dataclass(frozen=True)
class MasConfig:
    """Posterior-mean policy selection for one run."""

    method: str = "mas"
    eta1: float = 0.0
    eta2: float = 0.0
    unsafe_eta2: bool = False
    rt2_mode: str = "ratio"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.rt2_mode not in ("ratio", "tweedie_scalar"):
            raise ConfigError(f"unknown rt2 mode {self.rt2_mode!r}")


@dataclass
class StepRecord:
    n: int
    eta1: float
    eta2: float
    residual: float
    prior_residual: float
    lambda_min: float | None = None
    lambda_mean: float | None = None
    x0_star: np.ndarray | None = None


@dataclass
class RunRecord:
    final_x0: np.ndarray
    trajectory: list[StepRecord] = field(default_factory=list)
    seed: int | None = None
    config_hash: str = ""


def _hash_run_config(op, schedule, config, policy, seed):
    payload = {
        "operator": [op.structure_tag, op.in_dim, op.out_dim],
        "alpha": schedule.alpha.tobytes().hex(),
        "sigma": schedule.sigma.tobytes().hex(),
        "variant": [schedule.variant, schedule.ddim_eta],
        "config": [config.method, config.eta1, config.eta2, config.rt2_mode],
        "policy": [policy.kind, policy.sigma_y, policy.inflation, policy.k, policy.eta1_base],
        "seed": seed,
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def run(op, y, prior, schedule, config, policy, rng, *, seed=None, config_hash=None,
        record_states=True):
    """Run the reverse loop and return the full record.

    y may be None only for the unconditional method.  Determinism contract:
    identical (operator, y, prior, schedule, config, policy, seed) produce a
    bit-identical record.
    """
    method = config.method
    if y is None:
        if method != "unconditional":
            raise ConfigError(f"method {method!r} requires a measurement")
    else:
        y = _as_vector(y, "y", op.out_dim)
    if method == "tmpd_scalar" and policy.kind == "unknown":
        raise ConfigError("tmpd_scalar needs a known noise level (noise_free or known_gaussian)")
    if prior.dim != op.in_dim:
        raise ConfigError(f"prior dimension {prior.dim} != operator input {op.in_dim}")

    n_steps = schedule.steps
    d = op.in_dim
    weights = None
    if method == "mas":
        weights = core.MasWeights(config.eta1, config.eta2, unsafe=config.unsafe_eta2)
    sigma_y = policy.sigma_y if policy.kind == "known_gaussian" else 0.0

    x = rng.standard_normal(d) * schedule.sigma[n_steps]
    trajectory = []
    for n in range(n_steps, 0, -1):
        den = prior_mod.denoise(prior, x, schedule.alpha[n], schedule.sigma[n])
        m0t = den.mean
        coeffs = step_coeffs(schedule, n)
        gammas = None
        lam_min = lam_mean = None
        eta1 = eta2 = float("nan")

        if method == "unconditional":
            x0_star = m0t
        elif method == "ddnm":
            x0_star = core.ddnm_projection(op, m0t, y)
        elif method == "tmpd_scalar":
            r_t2 = rt2_policy(schedule, n, config.rt2_mode, den.scalar_var)
            x0_star = core.tmpd_scalar_posterior_mean(op, m0t, r_t2, y, sigma_y)
        elif policy.kind == "unknown":
            if coeffs.c_t > 0:
                w = budget_mod.unknown_noise_weights(policy, coeffs.a_t, coeffs.c_t)
                x0_star = core.mas_posterior_mean(op, m0t, y, w)
                eta1, eta2 = w.eta1, w.eta2
            elif policy.k > 0:
                # deterministic step: eta2 = k*a/c -> inf, the update collapses to m0t
                x0_star = m0t
                eta1, eta2 = policy.eta1_base, float("inf")
            else:
                # k = 0 keeps eta2 = 0 all the way down (no suppression)
                w = core.MasWeights(policy.eta1_base, 0.0)
                x0_star = core.mas_posterior_mean(op, m0t, y, w)
                eta1, eta2 = w.eta1, w.eta2
        elif policy.kind == "known_gaussian":
            mode_budget = budget_mod.known_gaussian_budget(
                op, weights, coeffs.a_t, coeffs.c_t, policy.sigma_y_eff
            )
            x0_star, gammas = budget_mod.apply_budget(op, m0t, y, weights, mode_budget)
            eta1, eta2 = weights.eta1, weights.eta2
            lam_min = float(mode_budget.lambdas.min())
            lam_mean = float(mode_budget.lambdas.mean())
        else:  # mas, noise_free
            x0_star = core.mas_posterior_mean(op, m0t, y, weights)
            eta1, eta2 = weights.eta1, weights.eta2

        if coeffs.c_t > 0:
            if gammas is not None:
                noise = budget_mod.draw_colored_noise(op, gammas, rng)
            else:
                noise = coeffs.c_t * rng.standard_normal(d)
            x = coeffs.a_t * x0_star + coeffs.b_t * x + noise
        else:
            x = coeffs.a_t * x0_star + coeffs.b_t * x

        if not np.all(np.isfinite(x)):
            raise SolverAbortError(n)

        residual = prior_residual = float("nan")
        if y is not None:
            residual = float(np.linalg.norm(y - op.apply(x0_star)))
            prior_residual = float(np.linalg.norm(y - op.apply(m0t)))
        trajectory.append(
            StepRecord(
                n=n,
                eta1=eta1,
                eta2=eta2,
                residual=residual,
                prior_residual=prior_residual,
                lambda_min=lam_min,
                lambda_mean=lam_mean,
                x0_star=x0_star.copy() if record_states else None,
            )
        )

    if config_hash is None:
        config_hash = _hash_run_config(op, schedule, config, policy, seed)
    return RunRecord(final_x0=x, trajectory=trajectory, seed=seed, config_hash=config_hash)
