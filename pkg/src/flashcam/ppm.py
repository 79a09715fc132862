"""Binary PPM (P6) and PGM (P5) image files, maxval 255 only.

Deliberately minimal: dependency-free, bit-exact round trips, and fixtures
small enough to construct by hand in tests. Grayscale P5 files decode to
three equal channels.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .capture import Image
from .errors import PpmFormatError


def write_ppm(img: Image, path: str | Path) -> None:
    if img.kind != "quantized" or img.bit_depth != 8:
        raise ValueError("write_ppm requires an 8-bit quantized image")
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.data.astype(np.uint8).tobytes())


def _read_tokens(blob: bytes, count: int) -> tuple[list[bytes], int]:
    """Read whitespace-separated header tokens, skipping '#' comments.

    Returns the tokens and the offset of the first raster byte (one
    whitespace byte after the last token).
    """
    tokens: list[bytes] = []
    i = 0
    n = len(blob)
    while len(tokens) < count:
        while i < n and blob[i:i + 1].isspace():
            i += 1
        if i < n and blob[i:i + 1] == b"#":
            while i < n and blob[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < n and not blob[i:i + 1].isspace() and blob[i:i + 1] != b"#":
            i += 1
        if start == i:
            raise PpmFormatError("truncated header")
        tokens.append(blob[start:i])
    if i >= n or not blob[i:i + 1].isspace():
        raise PpmFormatError("header not terminated by whitespace")
    return tokens, i + 1


def read_ppm(path: str | Path) -> Image:
    blob = Path(path).read_bytes()
    if len(blob) < 2 or blob[:2] not in (b"P6", b"P5"):
        raise PpmFormatError(f"{path}: not a binary PPM/PGM file (magic must be P6 or P5)")
    magic = blob[:2]
    try:
        tokens, data_start = _read_tokens(blob[2:], 3)
    except PpmFormatError as exc:
        raise PpmFormatError(f"{path}: {exc}") from None
    data_start += 2
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise PpmFormatError(f"{path}: non-numeric header field") from None
    if width <= 0 or height <= 0:
        raise PpmFormatError(f"{path}: non-positive dimensions {width}x{height}")
    if maxval != 255:
        raise PpmFormatError(f"{path}: unsupported maxval {maxval} (only 255)")
    channels = 3 if magic == b"P6" else 1
    expected = width * height * channels
    raster = blob[data_start:data_start + expected]
    if len(raster) != expected:
        raise PpmFormatError(
            f"{path}: truncated raster ({len(raster)} of {expected} bytes)")
    data = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels)
    if channels == 1:
        data = np.repeat(data, 3, axis=2)
    return Image(width, height, data.copy(), "quantized", bit_depth=8)
