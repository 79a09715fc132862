"""Camera pipeline: trigger timing, exposure, quantization, AE, HDR, blur.

Exposure is strictly linear: each pixel's signal is the sum of an ambient
term integrated over the full shutter time and a flash term integrated
over the flash-shutter overlap. Emitter patches add their own spectrum on
top, reflectance-free, over the full shutter. Noise and quantization are
applied in a separate, seedable step so every capture is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContainmentError
from .illumination import FlashUnit, flash_irradiance
from .scene import PatchMap, Scene, rasterize
from .spectral import (
    OpticsModel,
    SensorModel,
    SpectralCurve,
    channel_signals,
    constant_curve,
    require_common_grid,
)

# Hardware shutter floor: the global-shutter sensor goes down to 11 us.
MIN_SHUTTER_TIME = 11e-6

STEREO_RATE_MIN = 1.0
STEREO_RATE_MAX = 20.0


@dataclass(frozen=True)
class ExposureSettings:
    shutter_time: float
    f_number: float = 2.4
    gain_db: float = 0.0

    def __post_init__(self) -> None:
        if self.shutter_time < MIN_SHUTTER_TIME:
            raise ValueError(
                f"shutter_time {self.shutter_time} below hardware floor {MIN_SHUTTER_TIME}")
        if self.f_number < 2.4:
            raise ValueError("f_number must be >= 2.4")
        if self.gain_db < 0:
            raise ValueError("gain_db must be non-negative")

    @property
    def gain_linear(self) -> float:
        return 10.0 ** (self.gain_db / 20.0)


@dataclass(frozen=True)
class TriggerSchedule:
    """One frame period with shutter and flash windows, seconds from trigger."""

    frame_period: float
    shutter_window: tuple[float, float]
    flash_window: tuple[float, float]
    n_cameras: int = 2

    def __post_init__(self) -> None:
        if self.frame_period <= 0:
            raise ValueError("frame_period must be positive")
        for name, (start, end) in (("shutter_window", self.shutter_window),
                                   ("flash_window", self.flash_window)):
            if end <= start:
                raise ValueError(f"{name} is degenerate: {start}..{end}")
            if start < 0 or end > self.frame_period:
                raise ValueError(f"{name} does not fit in one frame period")
        if self.n_cameras < 1:
            raise ValueError("n_cameras must be at least 1")


@dataclass(frozen=True)
class Image:
    """W x H x 3 raster, either linear (float, >= 0) or quantized codes."""

    width: int
    height: int
    data: np.ndarray  # (H, W, 3)
    kind: str         # "linear" | "quantized"
    bit_depth: int = 8

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "quantized"):
            raise ValueError(f"kind must be 'linear' or 'quantized', got {self.kind!r}")
        if self.data.shape != (self.height, self.width, 3):
            raise ValueError(
                f"data shape {self.data.shape} does not match {self.height}x{self.width}x3")
        if self.kind == "linear":
            if not np.issubdtype(self.data.dtype, np.floating):
                raise ValueError("linear image data must be floating point")
            if not np.all(np.isfinite(self.data)) or (self.data < 0).any():
                raise ValueError("linear image values must be finite and >= 0")
        else:
            if not np.issubdtype(self.data.dtype, np.integer):
                raise ValueError("quantized image data must be integer codes")
            if (self.data < 0).any() or (self.data > self.max_code).any():
                raise ValueError("quantized codes out of range for bit depth")

    @property
    def max_code(self) -> int:
        return (1 << self.bit_depth) - 1

    def saturated_fraction(self) -> float:
        """Fraction of pixels with at least one channel at the maximum code."""
        if self.kind != "quantized":
            raise ValueError("saturated_fraction is defined on quantized images")
        return float(np.mean(np.any(self.data == self.max_code, axis=2)))


def linear_image(data: np.ndarray) -> Image:
    data = np.asarray(data, dtype=np.float64)
    h, w, _ = data.shape
    return Image(w, h, data, "linear")


def flash_overlap(shutter_window: tuple[float, float],
                  flash_window: tuple[float, float]) -> float:
    """Length of the intersection of the two intervals; 0 when disjoint."""
    lo = max(shutter_window[0], flash_window[0])
    hi = min(shutter_window[1], flash_window[1])
    return max(0.0, hi - lo)


def schedule_stereo(rate_hz: float, flash: FlashUnit,
                    shutter_time: float) -> TriggerSchedule:
    """Stereo trigger plan with the shutter centered inside the flash pulse.

    Centering maximizes the margin against trigger jitter on both sides, so
    the full shutter is always lit: overlap == shutter_time by construction.
    """
    if not (STEREO_RATE_MIN <= rate_hz <= STEREO_RATE_MAX):
        raise ValueError(
            f"rate {rate_hz} Hz outside supported range "
            f"[{STEREO_RATE_MIN:g}, {STEREO_RATE_MAX:g}] Hz")
    if shutter_time > flash.pulse_duration:
        raise ContainmentError(
            f"shutter cannot be contained in flash window "
            f"({shutter_time * 1e6:g} us > {flash.pulse_duration * 1e6:g} us)")
    period = 1.0 / rate_hz
    flash_window = (flash.pulse_start_offset,
                    flash.pulse_start_offset + flash.pulse_duration)
    center = flash.pulse_start_offset + flash.pulse_duration / 2.0
    half = shutter_time / 2.0
    return TriggerSchedule(period, (center - half, center + half), flash_window)


def expose(scene: Scene, day: SpectralCurve, flash: FlashUnit | None,
           settings: ExposureSettings, schedule: TriggerSchedule | None,
           sensor: SensorModel, optics: OpticsModel,
           patch_map: PatchMap | None = None) -> Image:
    """Linear, pre-noise, pre-quantization exposure of a scene.

    Patches are uniform, so signals are computed once per (patch, channel)
    and painted through the rasterized index map. The flash contribution is
    integrated over the flash-shutter overlap at each patch's depth; the
    ambient term and emitters use the full shutter time.
    """
    if flash is not None and schedule is None:
        raise ValueError("a flash capture needs a trigger schedule")
    pm = patch_map if patch_map is not None else rasterize(scene)
    optics_at = OpticsModel(settings.f_number, optics.focal_length)
    t = settings.shutter_time
    grid = day.grid

    overlap = 0.0
    flash_curves: dict[float, SpectralCurve] = {}
    if flash is not None and schedule is not None:
        overlap = flash_overlap(schedule.shutter_window, schedule.flash_window)
        for depth in sorted({p.depth for p in scene.patches}):
            flash_curves[depth] = flash_irradiance(flash, depth, grid)

    table = np.zeros((len(scene.patches), 3))
    for idx, patch in enumerate(scene.patches):
        refl = scene.reflectances[patch.reflectance_id]
        table[idx] = channel_signals(t, sensor, optics_at, day, refl)
        if overlap > 0.0:
            table[idx] += channel_signals(overlap, sensor, optics_at,
                                          flash_curves[patch.depth], refl)

    data = table[pm.patch_index]
    if scene.emitters:
        ones = constant_curve(1.0, grid)
        for idx, emitter in enumerate(scene.emitters):
            require_common_grid(day, emitter.spd)
            direct = channel_signals(t, sensor, optics_at,
                                     emitter.spd.scaled(emitter.scale), ones)
            data[pm.emitter_index == idx] += direct
    return Image(scene.width, scene.height, data, "linear")


def quantize(img: Image, sensor: SensorModel, settings: ExposureSettings,
             seed: int) -> Image:
    """Gain, noise, normalization and rounding to integer codes.

    Noise is Gaussian with variance read_noise_sigma^2 +
    shot_noise_scale * signal; rounding is half-up. Deterministic for a
    given seed.
    """
    if img.kind != "linear":
        raise ValueError("quantize expects a linear image")
    signal = img.data * settings.gain_linear
    if sensor.read_noise_sigma > 0 or sensor.shot_noise_scale > 0:
        rng = np.random.default_rng(seed)
        sigma = np.sqrt(sensor.read_noise_sigma ** 2
                        + sensor.shot_noise_scale * signal)
        signal = signal + sigma * rng.standard_normal(signal.shape)
    normalized = np.clip(signal / sensor.full_scale_signal, 0.0, 1.0)
    codes = np.floor(normalized * sensor.max_code + 0.5).astype(np.int64)
    codes = np.clip(codes, 0, sensor.max_code)
    dtype = np.uint8 if sensor.bit_depth == 8 else np.uint16
    return Image(img.width, img.height, codes.astype(dtype), "quantized",
                 bit_depth=sensor.bit_depth)


@dataclass(frozen=True)
class AutoExposeResult:
    """Outcome of the mid-gray search.

    `saturated` is set when the search hit a bound or when the returned
    exposure still leaves more than 1% of pixels at/above full scale;
    `underexposed` when the target is unreachable even at the longest
    allowed shutter (for instance a zero-illumination scene).
    """

    settings: ExposureSettings
    mean_signal: float
    converged: bool
    saturated: bool
    underexposed: bool
    saturated_fraction: float
    iterations: int


SATURATION_FLAG_FRACTION = 0.01


def auto_expose(scene: Scene, day: SpectralCurve, sensor: SensorModel,
                optics: OpticsModel, target_mean: float = 0.5,
                bounds: tuple[float, float] = (MIN_SHUTTER_TIME, 50e-3),
                flash: FlashUnit | None = None,
                stereo_rate_hz: float = 20.0) -> AutoExposeResult:
    """Bisection on log shutter time until the mean linear signal hits
    target_mean * full_scale (within 2%) or 16 iterations pass.

    Aperture stays at f/2.4 and gain at 0 dB; only T moves. With a flash
    supplied the probe captures are flash-synchronized (used for the
    one-time active-light calibration), which caps the search at the pulse
    duration so the shutter stays contained.
    """
    if not (0.0 < target_mean < 1.0):
        raise ValueError("target_mean must be in (0, 1)")
    t_min, t_max = bounds
    if t_min < MIN_SHUTTER_TIME:
        raise ValueError(f"lower bound {t_min} below hardware floor {MIN_SHUTTER_TIME}")
    if flash is not None:
        t_max = min(t_max, flash.pulse_duration)
    if t_max < t_min:
        raise ValueError("empty shutter-time search range")
    pm = rasterize(scene)

    def capture(t: float) -> tuple[ExposureSettings, Image]:
        st = ExposureSettings(t, 2.4, 0.0)
        sched = schedule_stereo(stereo_rate_hz, flash, t) if flash is not None else None
        return st, expose(scene, day, flash, st, sched, sensor, optics, patch_map=pm)

    target = target_mean * sensor.full_scale_signal
    tol = 0.02 * target

    def result(t: float, img: Image, settings: ExposureSettings, converged: bool,
               clamped: bool, underexposed: bool, iterations: int) -> AutoExposeResult:
        mean = float(np.mean(img.data)) * settings.gain_linear
        sat = float(np.mean(np.any(
            img.data * settings.gain_linear >= sensor.full_scale_signal, axis=2)))
        return AutoExposeResult(settings, mean, converged,
                                clamped or sat > SATURATION_FLAG_FRACTION,
                                underexposed, sat, iterations)

    settings_lo, img_lo = capture(t_min)
    mean_lo = float(np.mean(img_lo.data))
    if mean_lo > target + tol:
        # Scene too bright even at the shortest shutter.
        return result(t_min, img_lo, settings_lo, False, True, False, 0)
    if abs(mean_lo - target) <= tol:
        return result(t_min, img_lo, settings_lo, True, False, False, 0)

    settings_hi, img_hi = capture(t_max)
    mean_hi = float(np.mean(img_hi.data))
    if mean_hi < target - tol:
        # Even the longest shutter cannot reach the target.
        return result(t_max, img_hi, settings_hi, False, True, True, 0)
    if abs(mean_hi - target) <= tol:
        return result(t_max, img_hi, settings_hi, True, False, False, 0)

    lo, hi = math.log(t_min), math.log(t_max)
    best_img, best_settings = img_hi, settings_hi
    converged = False
    iterations = 0
    for iterations in range(1, 17):
        mid = math.exp(0.5 * (lo + hi))
        best_settings, best_img = capture(mid)
        mean = float(np.mean(best_img.data))
        if abs(mean - target) <= tol:
            converged = True
            break
        if mean < target:
            lo = math.log(mid)
        else:
            hi = math.log(mid)
    return result(best_settings.shutter_time, best_img, best_settings,
                  converged, False, False, iterations)


def _hat_weight(codes: np.ndarray, max_code: int) -> np.ndarray:
    """Triangular weight: 1 at mid-scale, 0 at code 0 and at max_code."""
    half = max_code / 2.0
    return 1.0 - np.abs(codes / half - 1.0)


def hdr_merge(brackets: list[tuple[Image, ExposureSettings]]) -> Image:
    """Merge exposure brackets into a linear radiance estimate.

    Each sample is linearized as code / (T * gain) and averaged with the
    triangular hat weight. Samples with zero total weight fall back to the
    longest unsaturated exposure; if every bracket is saturated the
    shortest one wins (it is the least-clipped lower bound).
    """
    if len(brackets) < 2:
        raise ValueError("hdr_merge needs at least two brackets")
    first = brackets[0][0]
    max_code = first.max_code
    for img, _ in brackets:
        if img.kind != "quantized":
            raise ValueError("hdr_merge expects quantized brackets")
        if (img.width, img.height) != (first.width, first.height):
            raise ValueError("bracket dimensions do not match")
        if img.bit_depth != first.bit_depth:
            raise ValueError("bracket bit depths do not match")

    num = np.zeros((first.height, first.width, 3))
    den = np.zeros_like(num)
    for img, settings in brackets:
        codes = img.data.astype(np.float64)
        w = _hat_weight(codes, max_code)
        num += w * codes / (settings.shutter_time * settings.gain_linear)
        den += w

    order = sorted(range(len(brackets)), key=lambda i: brackets[i][1].shutter_time)
    shortest_img, shortest_settings = brackets[order[0]]
    fallback = shortest_img.data.astype(np.float64) / (
        shortest_settings.shutter_time * shortest_settings.gain_linear)
    # Ascending shutter time: the last unsaturated write wins.
    for i in order:
        img, settings = brackets[i]
        codes = img.data.astype(np.float64)
        ok = codes < max_code
        fallback = np.where(ok, codes / (settings.shutter_time * settings.gain_linear),
                            fallback)

    merged = np.where(den > 0, num / np.where(den > 0, den, 1.0), fallback)
    return Image(first.width, first.height, merged, "linear")


def motion_blur_extent(camera_speed: float, shutter_time: float, depth: float,
                       optics: OpticsModel, sensor: SensorModel) -> float:
    """Image-plane translation in pixels for a constant-velocity platform."""
    if depth <= 0:
        raise ValueError("depth must be positive")
    return (camera_speed * shutter_time * optics.focal_length
            / (depth * sensor.pixel_pitch))


def blur_extent_map(scene: Scene, shutter_time: float, optics: OpticsModel,
                    sensor: SensorModel) -> np.ndarray:
    """Per-pixel blur extents from the scene's depth map and camera speed.

    Nearby patches smear more than the distant background; feed the result
    to apply_motion_blur.
    """
    pm = rasterize(scene)
    return (scene.camera_speed * shutter_time * optics.focal_length
            / (pm.depth * sensor.pixel_pitch))


def _box_filter_rows(data: np.ndarray, width: int) -> np.ndarray:
    """Horizontal box filter of odd or even width, edge-replicated."""
    left = (width - 1) // 2
    right = width // 2
    padded = np.pad(data, ((0, 0), (left, right), (0, 0)), mode="edge")
    csum = np.cumsum(padded, axis=1, dtype=np.float64)
    csum = np.concatenate([np.zeros_like(csum[:, :1]), csum], axis=1)
    return (csum[:, width:] - csum[:, :-width]) / width


def apply_motion_blur(img: Image, extents: np.ndarray) -> Image:
    """Per-pixel horizontal box blur with kernel width round(extent) + 1.

    Width 1 (extent below half a pixel) is the identity, so an 11 us
    capture from a moving platform comes back untouched.
    """
    if img.kind != "linear":
        raise ValueError("apply_motion_blur expects a linear image")
    extents = np.asarray(extents, dtype=np.float64)
    if extents.shape != (img.height, img.width):
        raise ValueError("extents shape must match the image")
    widths = np.rint(extents).astype(np.int64) + 1
    out = img.data.copy()
    for width in np.unique(widths):
        if width <= 1:
            continue
        mask = widths == width
        blurred = _box_filter_rows(img.data, int(width))
        out[mask] = blurred[mask]
    out = np.maximum(out, 0.0)
    return Image(img.width, img.height, out, "linear")
