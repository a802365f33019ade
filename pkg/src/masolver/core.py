"""Closed-form posterior-mean solves in the operator's singular bases.

The central quantity is the minimizer of

    ||x - m||^2 + ||y - H x||^2_{W^{-1}},   W = eta1 * H H^T + eta2 * I,

which reduces per V-mode to

    x*_i = ((eta1 s^2 + eta2) m_i + s y_i) / ((eta1 + 1) s^2 + eta2).

Modes with s = 0 pass the denoiser coordinate through untouched.  When
eta1 s^2 + eta2 cancels exactly on an active mode the coefficients collapse
to (0, 1/s): the projection that replaces the observed component, so sweeps
over the weights stay continuous.  The combined denominator must stay
positive on every active mode; otherwise the solve is rejected.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .exceptions import UnstableWeightsError
from .operators import _as_vector


@dataclass(frozen=True)
class MasWeights:
    """Objective weights.  eta1 may be negative (overshooting); negative
    eta2 loses positivity guarantees and must be opted into via unsafe."""

    eta1: float
    eta2: float
    unsafe: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.eta1) and np.isfinite(self.eta2)):
            raise ValueError("weights must be finite")
        if self.eta2 < 0 and not self.unsafe:
            raise ValueError(
                "negative eta2 is only allowed with unsafe=True (no positivity guarantee)"
            )


class NearCancellationWarning(UserWarning):
    """eta1*s^2 + eta2 nearly cancels on some mode; noise gets amplified."""


def _raise_or_warn(op, w, bad, warn):
    if bad >= 0:
        raise UnstableWeightsError(bad, float(op.singulars[bad]), w.eta1, w.eta2)
    if warn >= 0:
        warnings.warn(
            f"eta1*s^2 + eta2 nearly cancels on mode {warn} "
            f"(s={op.singulars[warn]:.6g}); measurement noise is amplified",
            NearCancellationWarning,
            stacklevel=3,
        )


def mas_posterior_mean(op, m0t, y, w):
    """Weighted posterior mean via diagonal scalings in the SVD bases."""
    m0t = _as_vector(m0t, "m0t", op.in_dim)
    y = _as_vector(y, "y", op.out_dim)
    zm = op.Vt(m0t)
    zy = op.Ut(y)
    out = np.empty(op.in_dim)
    bad, warn = kernels.mas_combine(zm, zy, op.singulars, w.eta1, w.eta2, op.rank_tol, out)
    _raise_or_warn(op, w, bad, warn)
    return op.V(out)


def ddnm_projection(op, m0t, y):
    """Replace the observed component: m + pinv(H) (y - H m)."""
    m0t = _as_vector(m0t, "m0t", op.in_dim)
    y = _as_vector(y, "y", op.out_dim)
    return m0t + op.pinv_apply(y - op.apply(m0t))


def tmpd_scalar_posterior_mean(op, m0t, r_t2, y, sigma_y):
    """Posterior mean under a scalar signal covariance r_t2 * I.

    m + r_t2 H^T (r_t2 H H^T + sigma_y^2 I)^{-1} (y - H m), computed by
    scaling the U-space residual mode-wise.  Deliberately a different code
    path from mas_posterior_mean so the two can cross-check each other.
    """
    if r_t2 <= 0:
        raise ValueError(f"r_t2 must be positive, got {r_t2}")
    m0t = _as_vector(m0t, "m0t", op.in_dim)
    y = _as_vector(y, "y", op.out_dim)
    res = op.Ut(y - op.apply(m0t))
    s = op.singulars
    r = s.size
    nz = s > op.rank_tol
    coef = np.zeros(r)
    coef[nz] = r_t2 * s[nz] / (r_t2 * s[nz] ** 2 + sigma_y**2)
    modes = np.zeros(op.in_dim)
    modes[:r] = coef * res[:r]
    return m0t + op.V(modes)


def dense_posterior_mean(matrix, m0t, y, w):
    """Brute-force reference: materialize W and Y and solve directly.

    Rejects singular W; the degenerate limits are the SVD path's business.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    m, d = matrix.shape
    if d > 512:
        raise ValueError(f"dense reference is capped at d=512, got {d}")
    m0t = _as_vector(m0t, "m0t", d)
    y = _as_vector(y, "y", m)
    big_w = w.eta1 * (matrix @ matrix.T) + w.eta2 * np.eye(m)
    sv = np.linalg.svd(big_w, compute_uv=False)
    if sv.min() <= 1e-12 * max(sv.max(), 1.0):
        raise UnstableWeightsError(int(np.argmin(sv)), float("nan"), w.eta1, w.eta2)
    winv_y = np.linalg.solve(big_w, y)
    winv_h = np.linalg.solve(big_w, matrix)
    big_y = np.eye(d) + matrix.T @ winv_h
    return np.linalg.solve(big_y, m0t + matrix.T @ winv_y)
