"""SSIM and PSNR, plus time-series consistency reports.

SSIM follows the standard three-term form on a single luma plane
(0.299 R + 0.587 G + 0.114 B) with uniform square windows at stride 1:

    l = (2 ux uy + C1) / (ux^2 + uy^2 + C1)
    c = (2 sx sy + C2) / (sx^2 + sy^2 + C2)
    s = (sxy + C3) / (sx sy + C3)

with C1 = (k1 L)^2, C2 = (k2 L)^2 and C3 fixed at C2 / 2. With that C3 the
contrast and structure terms combine algebraically into
(2 sxy + C2) / (sx^2 + sy^2 + C2), which is what the implementation
evaluates; it avoids square roots entirely, so identical inputs score
exactly 1.0. Statistics are population moments (divide by n).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .capture import Image

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# Numeric stand-in for the infinite PSNR of identical images.
PSNR_CAP_DB = 99.0

CONDITION_AL = "AL"
CONDITION_NL = "NL"
CONDITION_HDR = "HDR"


@dataclass(frozen=True)
class SsimParams:
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0
    window: int = 8

    def __post_init__(self) -> None:
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be positive")
        if self.window < 2:
            raise ValueError("window must be at least 2 pixels")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2

    @property
    def c3(self) -> float:
        return self.c2 / 2.0


def luma(img: Image) -> np.ndarray:
    """Single-plane luma from quantized codes, as float64."""
    data = img.data.astype(np.float64)
    return (LUMA_WEIGHTS[0] * data[:, :, 0]
            + LUMA_WEIGHTS[1] * data[:, :, 1]
            + LUMA_WEIGHTS[2] * data[:, :, 2])


def _check_pair(x: Image, y: Image) -> None:
    if (x.width, x.height) != (y.width, y.height):
        raise ValueError(
            f"image dimensions differ: {x.width}x{x.height} vs {y.width}x{y.height}")


def _window_means(plane: np.ndarray, window: int) -> np.ndarray:
    view = np.lib.stride_tricks.sliding_window_view(plane, (window, window))
    return view.mean(axis=(2, 3))


def ssim(x: Image, y: Image, params: SsimParams = SsimParams()) -> float:
    """Mean SSIM over all stride-1 windows of the luma planes."""
    _check_pair(x, y)
    win = params.window
    if x.height < win or x.width < win:
        raise ValueError(f"images smaller than the {win}x{win} SSIM window")
    lx = luma(x)
    ly = luma(y)
    ux = _window_means(lx, win)
    uy = _window_means(ly, win)
    uxx = _window_means(lx * lx, win)
    uyy = _window_means(ly * ly, win)
    uxy = _window_means(lx * ly, win)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    cov = uxy - ux * uy
    c1, c2 = params.c1, params.c2
    lum = (2.0 * ux * uy + c1) / (ux * ux + uy * uy + c1)
    cs = (2.0 * cov + c2) / (vx + vy + c2)
    return float(np.mean(lum * cs))


def psnr(x: Image, y: Image, max_code: int | None = None) -> float:
    """10 log10(max^2 / MSE) across all channels; inf for identical images."""
    _check_pair(x, y)
    if max_code is None:
        max_code = x.max_code
    diff = x.data.astype(np.float64) - y.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_code * max_code / mse)


@dataclass(frozen=True)
class ReportRow:
    time_min: float
    condition: str
    ssim_pct: float
    psnr_db: float
    scene_scale: float


@dataclass(frozen=True)
class QualityReport:
    """Consistency of a frame series against a reference frame."""

    reference_id: str
    rows: tuple[ReportRow, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time_min", "condition", "ssim_pct", "psnr_db", "scene_scale"])
        for row in self.rows:
            writer.writerow([repr(row.time_min), row.condition, repr(row.ssim_pct),
                             repr(row.psnr_db), repr(row.scene_scale)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, reference_id: str = "") -> "QualityReport":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        expected = ["time_min", "condition", "ssim_pct", "psnr_db", "scene_scale"]
        if header != expected:
            raise ValueError(f"report CSV header must be {','.join(expected)}")
        rows = tuple(ReportRow(float(r[0]), r[1], float(r[2]), float(r[3]), float(r[4]))
                     for r in reader if r)
        return cls(reference_id, rows)

    def to_json(self) -> str:
        return json.dumps([{"time_min": r.time_min, "condition": r.condition,
                            "ssim_pct": r.ssim_pct, "psnr_db": r.psnr_db,
                            "scene_scale": r.scene_scale} for r in self.rows],
                          indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str, reference_id: str = "") -> "QualityReport":
        rows = tuple(ReportRow(float(r["time_min"]), str(r["condition"]),
                               float(r["ssim_pct"]), float(r["psnr_db"]),
                               float(r["scene_scale"]))
                     for r in json.loads(text))
        return cls(reference_id, rows)


def consistency_series(reference: Image,
                       frames: Sequence[tuple[float, str, Image]],
                       params: SsimParams = SsimParams(),
                       scene_scales: Sequence[float] | None = None,
                       reference_id: str = "reference") -> QualityReport:
    """One report row per frame: SSIM (as a percentage) and PSNR against
    the reference, in input order. PSNR is capped at 99 dB so identical
    frames stay numeric in exports.
    """
    if len(frames) == 0:
        raise ValueError("consistency_series needs at least one frame")
    if scene_scales is not None and len(scene_scales) != len(frames):
        raise ValueError("scene_scales length must match frames")
    rows = []
    for i, (time_min, condition, img) in enumerate(frames):
        _check_pair(reference, img)
        scale = float(scene_scales[i]) if scene_scales is not None else 0.0
        rows.append(ReportRow(
            time_min=float(time_min),
            condition=condition,
            ssim_pct=100.0 * ssim(reference, img, params),
            psnr_db=min(psnr(reference, img), PSNR_CAP_DB),
            scene_scale=scale,
        ))
    return QualityReport(reference_id, tuple(rows))
