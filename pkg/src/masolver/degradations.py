"""Measurement synthesis: forward application plus corruption.

Corruptions act in measurement space.  The structured ones (periodic
field, block-DCT quantization) need the measurement laid out as an image
and therefore require an operator with a known output shape.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .operators import _as_vector

# JPEG-style luminance quantization table, rescaled to unit pixel range
_LUMA_TABLE = (
    np.array(
        [
            [16, 11, 10, 16, 24, 40, 51, 61],
            [12, 12, 14, 19, 26, 58, 60, 55],
            [14, 13, 16, 24, 40, 57, 69, 56],
            [14, 17, 22, 29, 51, 87, 80, 62],
            [18, 22, 37, 56, 68, 109, 103, 77],
            [24, 35, 55, 64, 81, 104, 113, 92],
            [49, 64, 78, 87, 103, 121, 120, 101],
            [72, 92, 95, 98, 112, 100, 103, 99],
        ],
        dtype=np.float64,
    )
    / 255.0
)


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str = "none"
    sigma_y: float = 0.0
    fraction: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    axis: str = "row"
    bits: int = 8
    quality_proxy: float = 0.0
    clip: bool = False

    def __post_init__(self):
        valid = ("none", "gaussian", "salt_pepper", "periodic", "quantize", "dct_quantize")
        if self.kind not in valid:
            raise ValueError(f"unknown corruption kind {self.kind!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if self.amplitude < 0 or self.sigma_y < 0:
            raise ValueError("amplitude and sigma_y must be non-negative")
        if self.axis not in ("row", "col"):
            raise ValueError("axis must be 'row' or 'col'")

    @classmethod
    def none(cls):
        return cls()

    @classmethod
    def gaussian(cls, sigma_y):
        return cls(kind="gaussian", sigma_y=sigma_y)

    @classmethod
    def salt_pepper(cls, fraction, clip=False):
        return cls(kind="salt_pepper", fraction=fraction, clip=clip)

    @classmethod
    def periodic(cls, amplitude, frequency, axis="row"):
        return cls(kind="periodic", amplitude=amplitude, frequency=frequency, axis=axis)

    @classmethod
    def quantize(cls, bits):
        return cls(kind="quantize", bits=bits)

    @classmethod
    def dct_quantize(cls, quality_proxy):
        return cls(kind="dct_quantize", quality_proxy=quality_proxy)


def periodic_noise(shape, amplitude, frequency, axis="row"):
    """Sinusoidal additive field A sin(2 pi f pos / extent), flattened.

    The phase is zero and the wave runs along image rows by default; both
    are conventions, nothing in the tasks pins them down.
    """
    c, h, w = shape
    if axis == "row":
        wave = amplitude * np.sin(2.0 * np.pi * frequency * np.arange(h) / h)
        field = np.broadcast_to(wave[None, :, None], (c, h, w))
    else:
        wave = amplitude * np.sin(2.0 * np.pi * frequency * np.arange(w) / w)
        field = np.broadcast_to(wave[None, None, :], (c, h, w))
    return field.ravel().copy()


def quantize(values, bits):
    """Uniform mid-tread quantizer on [0, 1] with 2^bits levels.

    Values are clipped first; ties round toward the lower level so the
    operation is idempotent and the output lies exactly on the level grid.
    """
    levels = (1 << int(bits)) - 1
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    k = np.ceil(v * levels - 0.5)
    return k / levels


def dct_quantize(image, quality_proxy):
    """8x8 block-DCT coefficient quantization, a stand-in for JPEG loss.

    Per block: orthonormal DCT, divide by the luminance table scaled by
    quality_proxy, round, multiply back, inverse DCT.  quality_proxy = 0
    disables quantization.  Images whose sides are not multiples of 8 are
    edge-padded and cropped back.
    """
    image = np.asarray(image, dtype=np.float64)
    squeeze = image.ndim == 2
    if squeeze:
        image = image[None]
    c, h, w = image.shape
    if quality_proxy == 0:
        out = image.copy()
        return out[0] if squeeze else out
    pad_h = (-h) % 8
    pad_w = (-w) % 8
    padded = np.pad(image, ((0, 0), (0, pad_h), (0, pad_w)), mode="edge")
    hb, wb = padded.shape[1] // 8, padded.shape[2] // 8
    blocks = (
        padded.reshape(c, hb, 8, wb, 8).transpose(0, 1, 3, 2, 4).reshape(c, hb, wb, 8, 8)
    )
    coeff = scipy.fft.dctn(blocks, type=2, norm="ortho", axes=(-2, -1))
    steps = _LUMA_TABLE * quality_proxy
    coeff = np.round(coeff / steps) * steps
    blocks = scipy.fft.idctn(coeff, type=2, norm="ortho", axes=(-2, -1))
    padded = (
        blocks.reshape(c, hb, wb, 8, 8).transpose(0, 1, 3, 2, 4).reshape(c, hb * 8, wb * 8)
    )
    out = padded[:, :h, :w]
    return out[0] if squeeze else out


def _measurement_shape(op, kind):
    if op.out_shape is None:
        raise ValueError(
            f"{kind} corruption needs an image-shaped measurement "
            f"(operator {op.structure_tag!r} has no output shape)"
        )
    return op.out_shape


def measure(op, x0, spec, rng):
    """y = H x0 followed by the corruption, all in measurement space."""
    x0 = _as_vector(x0, "x0", op.in_dim)
    y = op.apply(x0)
    if spec.kind == "none":
        return y
    if spec.kind == "gaussian":
        return y + spec.sigma_y * rng.standard_normal(y.size)
    if spec.kind == "salt_pepper":
        count = int(round(spec.fraction * y.size))
        if count:
            idx = rng.choice(y.size, size=count, replace=False)
            y[idx] = rng.integers(0, 2, size=count) * 2.0 - 1.0
        if spec.clip:
            y = np.clip(y, 0.0, 1.0)
        return y
    if spec.kind == "periodic":
        shape = _measurement_shape(op, "periodic")
        return y + periodic_noise(shape, spec.amplitude, spec.frequency, spec.axis)
    if spec.kind == "quantize":
        return quantize(y, spec.bits)
    if spec.kind == "dct_quantize":
        c, h, w = _measurement_shape(op, "dct_quantize")
        return dct_quantize(y.reshape(c, h, w), spec.quality_proxy).ravel()
    raise AssertionError(f"unhandled corruption {spec.kind}")
