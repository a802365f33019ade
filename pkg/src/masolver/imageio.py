"""Binary PGM/PPM image I/O.

Dependency-free 8-bit round trips: values are clipped to [0, 1] and scaled
to 0..255 on write; reads return float arrays in [0, 1] shaped
(channels, height, width).  Files are written atomically (tmp + rename).
"""

import os

import numpy as np


def _to_bytes(img):
    return np.clip(np.rint(np.clip(img, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)


def write_image(path, img):
    """Write (1|3, h, w) or (h, w) data as binary PGM (gray) or PPM (rgb)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[None, :, :]
    if img.ndim != 3 or img.shape[0] not in (1, 3):
        raise ValueError(f"expected (1|3, h, w) image, got shape {img.shape}")
    c, h, w = img.shape
    magic = b"P5" if c == 1 else b"P6"
    payload = _to_bytes(img)
    if c == 3:
        payload = payload.transpose(1, 2, 0)  # interleave rgb per pixel
    header = b"%s\n%d %d\n255\n" % (magic, w, h)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())
    os.replace(tmp, path)


def read_image(path):
    """Read a binary PGM/PPM file into a float (c, h, w) array in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    # header is whitespace-separated tokens with '#' comments
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    magic, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported image magic {magic!r}")
    if maxval != 255:
        raise ValueError("only 8-bit images are supported")
    pos += 1  # single whitespace after maxval
    c = 1 if magic == b"P5" else 3
    raw = np.frombuffer(data, dtype=np.uint8, count=c * h * w, offset=pos)
    if c == 3:
        img = raw.reshape(h, w, 3).transpose(2, 0, 1)
    else:
        img = raw.reshape(1, h, w)
    return img.astype(np.float64) / 255.0
