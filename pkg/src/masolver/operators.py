"""Forward operators held as SVD factors with structured fast appliers.

Every operator H is represented as H = U @ Sigma @ Vt with orthogonal U, V
and a vector of singular values.  All solver formulas in this package
reduce to diagonal scalings between the two singular bases, so an operator
only has to expose the four factor applications U, Ut, V, Vt; the catalog
operators below (mask, block average, circular blur, channel average) do so
without ever materializing a matrix.

Mode layout convention: the first ``len(singulars)`` V-modes line up with
the U-modes of the same index; V-modes beyond that (the null space when
d > m) carry singular value zero.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .exceptions import DegenerateOperatorError, DimensionMismatchError

# singular values below RANK_TOL_REL * s_max count as zero
RANK_TOL_REL = 1e-10

# entry cap for materialized matrices (build_dense, to_dense)
DENSE_CAP_ENTRIES = 4096 * 4096

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)
_SQRT6 = math.sqrt(6.0)


@dataclass
class ImageTensor:
    """A (channels, height, width) real image, flattened on demand."""

    channels: int
    height: int
    width: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        expected = self.channels * self.height * self.width
        if self.data.size != expected:
            raise DimensionMismatchError("image data", expected, self.data.size)
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image data contains non-finite values")
        self.data = self.data.reshape(self.channels, self.height, self.width)

    @property
    def shape(self):
        return (self.channels, self.height, self.width)

    @property
    def flat(self):
        return self.data.ravel()

    @classmethod
    def from_flat(cls, vec, shape):
        c, h, w = shape
        return cls(c, h, w, np.asarray(vec, dtype=np.float64))


def _as_vector(x, name, expected):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != expected:
        raise DimensionMismatchError(name, expected, x.size)
    return x


class SpectralOperator:
    """Base class: subclasses implement the four factor applications."""

    structure_tag = "dense"

    def __init__(self, in_dim, out_dim, singulars, in_shape=None, out_shape=None):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.singulars = np.asarray(singulars, dtype=np.float64)
        if self.singulars.size != min(self.in_dim, self.out_dim):
            raise DimensionMismatchError(
                "singulars", min(self.in_dim, self.out_dim), self.singulars.size
            )
        if np.any(self.singulars < 0):
            raise ValueError("singular values must be non-negative")
        self.in_shape = in_shape
        self.out_shape = out_shape

    # factor applications, to be provided by subclasses ------------------
    def U(self, z):
        raise NotImplementedError

    def Ut(self, v):
        raise NotImplementedError

    def V(self, z):
        raise NotImplementedError

    def Vt(self, x):
        raise NotImplementedError

    # derived quantities -------------------------------------------------
    @property
    def rank_tol(self):
        s_max = float(self.singulars.max()) if self.singulars.size else 0.0
        return RANK_TOL_REL * s_max

    def apply(self, x):
        """H x through the factored path."""
        x = _as_vector(x, "apply input", self.in_dim)
        z = self.Vt(x)
        r = self.singulars.size
        out = np.zeros(self.out_dim)
        out[:r] = self.singulars * z[:r]
        return self.U(out)

    def adjoint(self, v):
        """H^T v = V Sigma^T U^T v."""
        v = _as_vector(v, "adjoint input", self.out_dim)
        zu = self.Ut(v)
        r = self.singulars.size
        out = np.zeros(self.in_dim)
        out[:r] = self.singulars * zu[:r]
        return self.V(out)

    def pinv_apply(self, v):
        """Pseudo-inverse: scale active modes by 1/s, drop the rest."""
        v = _as_vector(v, "pinv input", self.out_dim)
        zu = self.Ut(v)
        r = self.singulars.size
        out = np.zeros(self.in_dim)
        nz = self.singulars > self.rank_tol
        out[:r][nz] = zu[:r][nz] / self.singulars[nz]
        return self.V(out)

    def to_dense(self):
        """Materialize H column by column (tests and small oracles only)."""
        if self.in_dim * self.out_dim > DENSE_CAP_ENTRIES:
            raise DegenerateOperatorError(
                f"refusing to materialize {self.out_dim}x{self.in_dim} operator"
            )
        cols = np.empty((self.out_dim, self.in_dim))
        e = np.zeros(self.in_dim)
        for j in range(self.in_dim):
            e[j] = 1.0
            cols[:, j] = self.apply(e)
            e[j] = 0.0
        return cols


class IdentityOperator(SpectralOperator):
    structure_tag = "identity"

    def __init__(self, dim, shape=None):
        super().__init__(dim, dim, np.ones(dim), in_shape=shape, out_shape=shape)

    def U(self, z):
        return np.asarray(z, dtype=np.float64).copy()

    Ut = U
    V = U
    Vt = U


class MaskOperator(SpectralOperator):
    """Keep a subset of coordinates; V is the permutation kept-first."""

    structure_tag = "mask"

    def __init__(self, mask, in_shape=None):
        mask = np.asarray(mask, dtype=bool).ravel()
        if not mask.any():
            raise DegenerateOperatorError("mask keeps no entries")
        d = mask.size
        m = int(mask.sum())
        super().__init__(d, m, np.ones(m), in_shape=in_shape, out_shape=None)
        self.mask = mask
        kept = np.flatnonzero(mask)
        dropped = np.flatnonzero(~mask)
        self._perm = np.concatenate([kept, dropped])

    def U(self, z):
        return np.asarray(z, dtype=np.float64).copy()

    Ut = U

    def Vt(self, x):
        return np.asarray(x, dtype=np.float64)[self._perm]

    def V(self, z):
        out = np.empty(self.in_dim)
        out[self._perm] = z
        return out


class BlockDownsampleOperator(SpectralOperator):
    """f x f block averaging with an exact separable SVD.

    V is a per-block orthonormal DCT of the flattened block; the DC
    coefficient of each block (constant basis vector) carries the single
    nonzero singular value 1/f of that block's averaging row.
    """

    structure_tag = "block_downsample"

    def __init__(self, channels, height, width, factor):
        f = int(factor)
        if f < 1 or height % f or width % f:
            raise DegenerateOperatorError(
                f"factor {f} does not divide image {height}x{width}"
            )
        c = int(channels)
        hb, wb = height // f, width // f
        d = c * height * width
        m = c * hb * wb
        super().__init__(
            d,
            m,
            np.full(m, 1.0 / f),
            in_shape=(c, height, width),
            out_shape=(c, hb, wb),
        )
        self._f = f
        self._blocks_shape = (c, hb, wb)

    def U(self, z):
        return np.asarray(z, dtype=np.float64).copy()

    Ut = U

    def Vt(self, x):
        c, hb, wb = self._blocks_shape
        f = self._f
        img = np.asarray(x, dtype=np.float64).reshape(c, hb * f, wb * f)
        blocks = (
            img.reshape(c, hb, f, wb, f).transpose(0, 1, 3, 2, 4).reshape(c, hb, wb, f * f)
        )
        coeff = scipy.fft.dct(blocks, type=2, norm="ortho", axis=-1)
        return np.concatenate([coeff[..., 0].ravel(), coeff[..., 1:].ravel()])

    def V(self, z):
        c, hb, wb = self._blocks_shape
        f = self._f
        m = self.out_dim
        coeff = np.empty((c, hb, wb, f * f))
        coeff[..., 0] = np.reshape(z[:m], (c, hb, wb))
        coeff[..., 1:] = np.reshape(z[m:], (c, hb, wb, f * f - 1))
        blocks = scipy.fft.idct(coeff, type=2, norm="ortho", axis=-1)
        img = (
            blocks.reshape(c, hb, wb, f, f).transpose(0, 1, 3, 2, 4).reshape(c, hb * f, wb * f)
        )
        return img.ravel()


class _RealFourier2D:
    """Orthonormal real basis of an h x w grid built from DFT pairs.

    Mode layout per channel: self-conjugate frequencies first, then the
    real parts of one representative per conjugate pair, then the matching
    imaginary parts.  Circular convolutions are (block-)diagonal here.
    """

    def __init__(self, height, width):
        h, w = int(height), int(width)
        kr, kc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        flat = (kr * w + kc).ravel()
        conj = (((-kr) % h) * w + ((-kc) % w)).ravel()
        self.self_idx = np.flatnonzero(flat == conj)
        self.pair_idx = np.flatnonzero(flat < conj)
        self.pair_conj_idx = conj[self.pair_idx]
        self.n_self = self.self_idx.size
        self.n_pair = self.pair_idx.size
        self.shape = (h, w)
        self._norm = math.sqrt(h * w)

    def forward(self, imgs):
        """(c, h, w) -> (c, h*w) packed real coefficients."""
        c = imgs.shape[0]
        coeff = np.fft.fft2(imgs, axes=(-2, -1)).reshape(c, -1) / self._norm
        modes = np.empty((c, coeff.shape[1]))
        ns, npair = self.n_self, self.n_pair
        modes[:, :ns] = coeff[:, self.self_idx].real
        modes[:, ns : ns + npair] = _SQRT2 * coeff[:, self.pair_idx].real
        modes[:, ns + npair :] = _SQRT2 * coeff[:, self.pair_idx].imag
        return modes

    def inverse(self, modes):
        """(c, h*w) packed coefficients -> (c, h, w)."""
        c = modes.shape[0]
        h, w = self.shape
        ns, npair = self.n_self, self.n_pair
        coeff = np.zeros((c, h * w), dtype=np.complex128)
        coeff[:, self.self_idx] = modes[:, :ns]
        half = (modes[:, ns : ns + npair] + 1j * modes[:, ns + npair :]) / _SQRT2
        coeff[:, self.pair_idx] = half
        coeff[:, self.pair_conj_idx] = half.conj()
        imgs = np.fft.ifft2(coeff.reshape(c, h, w), axes=(-2, -1)) * self._norm
        return imgs.real

    def mode_values(self, freq_grid):
        """Map a full (h, w) frequency grid to the packed mode order."""
        v = np.asarray(freq_grid).ravel()
        return np.concatenate([v[self.self_idx], v[self.pair_idx], v[self.pair_idx]])


class CircularBlurOperator(SpectralOperator):
    """Circular 2-D convolution with a separable 1-D kernel.

    V is the packed real Fourier basis; U differs from V by the phase of
    the kernel spectrum (a rotation within each conjugate pair), so the
    factorization is exact for asymmetric kernels as well.
    """

    structure_tag = "circular_blur"

    def __init__(self, channels, height, width, kernel):
        kernel = np.asarray(kernel, dtype=np.float64).ravel()
        if kernel.size % 2 == 0:
            raise DegenerateOperatorError("blur kernel must have odd length")
        if not math.isclose(float(kernel.sum()), 1.0, abs_tol=1e-9):
            raise DegenerateOperatorError("blur kernel must sum to 1")
        if kernel.size > width or (height > 1 and kernel.size > height):
            raise DegenerateOperatorError(
                f"kernel of length {kernel.size} exceeds image axes {height}x{width}"
            )
        c = int(channels)
        d = c * height * width
        self._basis = _RealFourier2D(height, width)
        spec_r = self._axis_spectrum(kernel, height) if height > 1 else np.ones(height)
        spec_c = self._axis_spectrum(kernel, width)
        grid = np.outer(spec_r, spec_c)
        mags = np.abs(self._basis.mode_values(grid))
        grid_mag = np.abs(grid)
        phase = np.where(grid_mag > 0, grid / np.where(grid_mag > 0, grid_mag, 1.0), 1.0)
        super().__init__(
            d,
            d,
            np.tile(mags, c),
            in_shape=(c, height, width),
            out_shape=(c, height, width),
        )
        self._phase = phase
        self._channels = c
        if np.all(kernel >= 0) and mags.max() > 1.0 + 1e-12:
            raise AssertionError("mass-preserving kernel produced singular value > 1")

    @staticmethod
    def _axis_spectrum(kernel, n):
        center = (kernel.size - 1) // 2
        embedded = np.zeros(n)
        for j, v in enumerate(kernel):
            embedded[(j - center) % n] += v
        return np.fft.fft(embedded)

    def _imgs(self, vec):
        c = self._channels
        h, w = self._basis.shape
        return np.asarray(vec, dtype=np.float64).reshape(c, h, w)

    def _phase_filter(self, imgs, conjugate):
        p = self._phase.conj() if conjugate else self._phase
        return np.fft.ifft2(np.fft.fft2(imgs, axes=(-2, -1)) * p, axes=(-2, -1)).real

    def Vt(self, x):
        return self._basis.forward(self._imgs(x)).ravel()

    def V(self, z):
        c = self._channels
        return self._basis.inverse(np.asarray(z, dtype=np.float64).reshape(c, -1)).ravel()

    def U(self, z):
        c = self._channels
        imgs = self._basis.inverse(np.asarray(z, dtype=np.float64).reshape(c, -1))
        return self._phase_filter(imgs, conjugate=False).ravel()

    def Ut(self, v):
        imgs = self._phase_filter(self._imgs(v), conjugate=True)
        return self._basis.forward(imgs).ravel()


class ChannelAverageOperator(SpectralOperator):
    """Per-pixel RGB -> gray averaging; one mode per pixel with s = 1/sqrt(3)."""

    structure_tag = "channel_average"

    # orthonormal color basis, first row along (1,1,1)
    _M3 = np.array(
        [
            [1.0 / _SQRT3, 1.0 / _SQRT3, 1.0 / _SQRT3],
            [1.0 / _SQRT2, -1.0 / _SQRT2, 0.0],
            [1.0 / _SQRT6, 1.0 / _SQRT6, -2.0 / _SQRT6],
        ]
    )

    def __init__(self, height, width):
        hw = int(height) * int(width)
        super().__init__(
            3 * hw,
            hw,
            np.full(hw, 1.0 / _SQRT3),
            in_shape=(3, height, width),
            out_shape=(1, height, width),
        )
        self._hw = hw

    def U(self, z):
        return np.asarray(z, dtype=np.float64).copy()

    Ut = U

    def Vt(self, x):
        pix = np.asarray(x, dtype=np.float64).reshape(3, self._hw)
        return (self._M3 @ pix).ravel()

    def V(self, z):
        modes = np.asarray(z, dtype=np.float64).reshape(3, self._hw)
        return (self._M3.T @ modes).ravel()


class MatrixFactorOperator(SpectralOperator):
    """Operator from explicit orthogonal factors (dense catalog entry)."""

    structure_tag = "dense"

    def __init__(self, u, singulars, vt, in_shape=None, out_shape=None):
        u = np.asarray(u, dtype=np.float64)
        vt = np.asarray(vt, dtype=np.float64)
        super().__init__(vt.shape[0], u.shape[0], singulars, in_shape, out_shape)
        self._u = u
        self._vt = vt

    def U(self, z):
        return self._u @ z

    def Ut(self, v):
        return self._u.T @ v

    def V(self, z):
        return self._vt.T @ z

    def Vt(self, x):
        return self._vt @ x


# ---------------------------------------------------------------------------
# catalog builders
# ---------------------------------------------------------------------------


def build_identity(channels, height, width):
    shape = (int(channels), int(height), int(width))
    return IdentityOperator(shape[0] * shape[1] * shape[2], shape=shape)


def build_mask(shape, mask):
    """Keep the entries where ``mask`` is True."""
    c, h, w = shape
    mask = np.asarray(mask, dtype=bool).ravel()
    d = c * h * w
    if mask.size != d:
        raise DimensionMismatchError("mask", d, mask.size)
    return MaskOperator(mask, in_shape=(c, h, w))


def random_mask(shape, masked_fraction, rng):
    """Boolean keep-mask with exactly round(masked_fraction * d) entries removed."""
    c, h, w = shape
    d = c * h * w
    if not 0.0 <= masked_fraction < 1.0:
        raise DegenerateOperatorError(f"masked_fraction {masked_fraction} out of [0, 1)")
    n_masked = int(round(masked_fraction * d))
    mask = np.ones(d, dtype=bool)
    if n_masked:
        mask[rng.choice(d, size=n_masked, replace=False)] = False
    return mask


def box_mask(shape, top, left, box_height, box_width):
    """Keep-mask with a rectangular region removed (same box in every channel)."""
    c, h, w = shape
    if top < 0 or left < 0 or top + box_height > h or left + box_width > w:
        raise DegenerateOperatorError("box exceeds image bounds")
    mask = np.ones((c, h, w), dtype=bool)
    mask[:, top : top + box_height, left : left + box_width] = False
    return mask.ravel()


def build_block_downsample(channels, height, width, factor):
    return BlockDownsampleOperator(channels, height, width, factor)


def build_circular_blur(channels, height, width, kernel):
    return CircularBlurOperator(channels, height, width, kernel)


def uniform_kernel(size):
    size = int(size)
    if size % 2 == 0:
        raise DegenerateOperatorError("uniform kernel size must be odd")
    return np.full(size, 1.0 / size)


def build_channel_average(height, width, channels=3):
    if channels != 3:
        raise DegenerateOperatorError("channel averaging requires 3-channel input")
    return ChannelAverageOperator(height, width)


def build_dense(matrix, in_shape=None, out_shape=None):
    """Numeric SVD of an explicit matrix, size-capped."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise DegenerateOperatorError("expected a 2-D matrix")
    m, d = matrix.shape
    if m * d > DENSE_CAP_ENTRIES:
        raise DegenerateOperatorError(
            f"dense operator of {m}x{d} exceeds the {DENSE_CAP_ENTRIES}-entry cap"
        )
    if not np.all(np.isfinite(matrix)):
        raise DegenerateOperatorError("matrix contains non-finite entries")
    u, s, vt = np.linalg.svd(matrix, full_matrices=True)
    op = MatrixFactorOperator(u, s, vt, in_shape=in_shape, out_shape=out_shape)
    recon = (u[:, : s.size] * s) @ vt[: s.size]
    norm = np.linalg.norm(matrix)
    if np.linalg.norm(recon - matrix) > 1e-8 * max(norm, 1e-300):
        raise DegenerateOperatorError("SVD reconstruction check failed")
    return op
