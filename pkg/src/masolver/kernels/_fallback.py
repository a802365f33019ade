"""Pure-numpy reference implementations of the per-mode solver kernels.

These are the hot inner loops of every sampler step: given the measurement
and denoiser coordinates in the singular bases of the forward operator,
combine them mode by mode.  A compiled twin lives in ``_fast.pyx``; both
must implement identical semantics, including the degenerate branches:

* modes with singular value <= ``tol`` pass the denoiser coordinate through,
* modes where ``eta1*s^2 + eta2`` cancels exactly collapse to the
  pseudo-inverse (projection) limit,
* modes where ``(eta1+1)*s^2 + eta2 <= 0`` are reported as unstable.

Each function returns status indices instead of raising so the wrapper can
attach context (offending mode, warning text) in one place.
"""

import numpy as np

BACKEND = "numpy"

# relative slack under which eta1*s^2 + eta2 counts as a near-cancellation
NEAR_CANCEL_REL = 1e-8


def mas_combine(zm, zy, s, eta1, eta2, tol, out):
    """Mode-wise weighted posterior mean.

    out[i] = ((eta1*s^2 + eta2) * zm[i] + s * zy[i]) / ((eta1+1)*s^2 + eta2)
    for active modes, zm[i] elsewhere.

    Returns (bad_mode, warn_mode): index of the first mode with a
    non-positive combined denominator (else -1) and of the first
    near-cancelling mode (else -1).
    """
    d = zm.shape[0]
    r = s.shape[0]
    out[:] = zm
    active = s > tol
    idx = np.flatnonzero(active)
    if idx.size == 0:
        return -1, -1
    s_a = s[idx]
    s2 = s_a * s_a
    denom = eta1 * s2 + eta2
    total = denom + s2
    bad = -1
    nonpos = total <= 0.0
    if np.any(nonpos):
        bad = int(idx[np.argmax(nonpos)])
        return bad, -1
    warn = -1
    if not (eta1 == 0.0 and eta2 == 0.0):
        near = np.abs(denom) < NEAR_CANCEL_REL * s2
        if np.any(near):
            warn = int(idx[np.argmax(near)])
    out[idx] = (denom * zm[idx] + s_a * zy[idx]) / total
    return bad, warn


def budget_modes(s, d, eta1, eta2, a_t, c_t, sigma_y, tol, lambdas, gammas):
    """Per-mode damping factors and compensating noise variances.

    For active modes the measurement-leak standard deviation is
    thresh = a_t * sigma_y * s / ((eta1+1)*s^2 + eta2); the damping keeps
    (thresh*lambda)^2 + gamma == c_t^2 exactly.  Inactive modes get
    lambda = 1, gamma = c_t^2.

    Returns the first unstable mode index, or -1.
    """
    r = s.shape[0]
    c2 = c_t * c_t
    lambdas[:] = 1.0
    gammas[:] = c2
    idx = np.flatnonzero(s > tol)
    if idx.size == 0:
        return -1
    s_a = s[idx]
    s2 = s_a * s_a
    denom = (eta1 + 1.0) * s2 + eta2
    nonpos = denom <= 0.0
    if np.any(nonpos):
        return int(idx[np.argmax(nonpos)])
    thresh = a_t * sigma_y * s_a / denom
    clipped = c_t < thresh
    gam = c2 - thresh * thresh
    lam = np.ones_like(thresh)
    # avoid 0/0 when thresh == 0 (then clipped is False anyway)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_clip = c_t / thresh
    lam[clipped] = lam_clip[clipped]
    gam[clipped] = 0.0
    lambdas[idx] = lam
    gammas[idx] = gam
    return -1


def budget_combine(zm, zy, s, eta1, eta2, tol, lambdas, out):
    """Damped posterior mean: out = zm + lambda * (s*zy - s^2*zm) / total.

    Returns the first unstable mode index, or -1.
    """
    out[:] = zm
    idx = np.flatnonzero(s > tol)
    if idx.size == 0:
        return -1
    s_a = s[idx]
    s2 = s_a * s_a
    total = (eta1 + 1.0) * s2 + eta2
    nonpos = total <= 0.0
    if np.any(nonpos):
        return int(idx[np.argmax(nonpos)])
    out[idx] = zm[idx] + lambdas[idx] * (s_a * zy[idx] - s2 * zm[idx]) / total
    return -1
