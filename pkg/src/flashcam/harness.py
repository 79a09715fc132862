"""End-to-end experiments: the noon-to-sunset consistency sweep, the
sun-in-frame extreme scenario, and consistency analysis of image files.

The sweep captures, at every time step, a natural-light frame (fresh
auto-exposure), an HDR frame (bracketed around the auto-exposure, merged,
re-quantized) and an active-light frame (flash-synchronized, with a single
exposure chosen once at sweep start and frozen for the whole day). Each
condition's frames are scored against that condition's noon frame.

Noise is seeded per condition, not per step, so a condition whose optical
input does not change produces bit-identical frames; and two runs with the
same seed are byte-identical end to end.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .capture import (
    MIN_SHUTTER_TIME,
    AutoExposeResult,
    ExposureSettings,
    Image,
    auto_expose,
    expose,
    hdr_merge,
    quantize,
    schedule_stereo,
)
from .errors import ConfigError
from .illumination import DaylightModel, FlashUnit, daylight_irradiance, profile_from_csv
from .metrics import (
    CONDITION_AL,
    CONDITION_HDR,
    CONDITION_NL,
    QualityReport,
    ReportRow,
    SsimParams,
    consistency_series,
    luma,
)
from .ppm import read_ppm
from .scene import FOREGROUND_MAX_DEPTH, Scene, builtin_scene, load_scene, rasterize
from .spectral import DEFAULT_GRID, OpticsModel, SensorModel, WavelengthGrid

ALL_CONDITIONS = (CONDITION_AL, CONDITION_NL, CONDITION_HDR)
_CONDITION_SEED_INDEX = {CONDITION_AL: 0, CONDITION_NL: 1, CONDITION_HDR: 2}

# Reference exposure used when calibrating the sensor normalization.
CALIBRATION_SHUTTER = 1e-3
CALIBRATION_TARGET = 0.5


@dataclass(frozen=True)
class DaySweepConfig:
    """Configuration of the simulated noon-to-sunset experiment."""

    scene: Scene | str = "orchard_day"
    width: int = 256
    height: int = 192
    interval_min: float = 20.0
    day: DaylightModel = field(default_factory=DaylightModel)
    # The physical LED array is directional; a modest forward gain over the
    # isotropic baseline keeps the flash >= 100x ambient at 1 m while the
    # mid-gray exposure search still lands above the 11 us shutter floor.
    flash: FlashUnit = field(default_factory=lambda: FlashUnit(beam_gain=1.2))
    sensor: SensorModel | None = None
    optics: OpticsModel = field(default_factory=OpticsModel)
    conditions: tuple[str, ...] = ALL_CONDITIONS
    hdr_bracket_times: tuple[float, ...] | None = None
    hdr_bracket_factors: tuple[float, ...] = (0.25, 1.0, 4.0)
    seed: int = 0
    al_shutter_time: float | None = None
    nl_max_shutter: float = 50e-3
    target_mean: float = 0.5
    stereo_rate_hz: float = 20.0
    ssim_params: SsimParams = field(default_factory=SsimParams)
    grid: WavelengthGrid = DEFAULT_GRID

    def __post_init__(self) -> None:
        if self.interval_min <= 0:
            raise ConfigError("interval_min: must be positive")
        if not self.conditions:
            raise ConfigError("conditions: at least one of AL, NL, HDR required")
        for cond in self.conditions:
            if cond not in ALL_CONDITIONS:
                raise ConfigError(f"conditions: unknown condition {cond!r}")
        brackets = self.hdr_bracket_times or self.hdr_bracket_factors
        if CONDITION_HDR in self.conditions and len(brackets) < 2:
            raise ConfigError("hdr brackets: HDR needs at least two exposures")


@dataclass(frozen=True)
class SweepResult:
    times: tuple[float, ...]
    conditions: tuple[str, ...]
    frames: dict[tuple[float, str], Image]
    reports: dict[str, QualityReport]
    saturation_stats: dict[tuple[float, str], float]
    al_settings: ExposureSettings | None

    def merged_rows(self) -> tuple[ReportRow, ...]:
        """All conditions' rows, ordered by (time, condition)."""
        rows = [row for cond in self.conditions for row in self.reports[cond].rows]
        order = {c: i for i, c in enumerate(ALL_CONDITIONS)}
        return tuple(sorted(rows, key=lambda r: (r.time_min, order[r.condition])))

    def merged_report(self) -> QualityReport:
        return QualityReport("noon-per-condition", self.merged_rows())


@dataclass(frozen=True)
class ExtremeStats:
    condition: str
    shutter_time: float
    saturated_fraction: float
    foreground_contrast: float


@dataclass(frozen=True)
class ExtremeResult:
    frames: dict[str, Image]
    stats: dict[str, ExtremeStats]
    sun_area_fraction: float


def resolve_scene(config: DaySweepConfig) -> Scene:
    if isinstance(config.scene, Scene):
        return config.scene
    name = config.scene
    if name.endswith(".json"):
        return load_scene(name, config.grid)
    return builtin_scene(name, config.width, config.height, config.grid)


def calibrate_normalization(scene: Scene, day: DaylightModel, sensor: SensorModel,
                            optics: OpticsModel,
                            grid: WavelengthGrid = DEFAULT_GRID) -> SensorModel:
    """Pick the sensor normalization so the reference (noon, ambient-only,
    1 ms shutter) exposure puts the brightest foreground patch channel at
    50% of full scale. Makes scenarios with different scenes comparable.
    """
    ambient = daylight_irradiance(day, day.day_start, grid)
    probe = sensor.with_normalization(1.0)
    settings = ExposureSettings(CALIBRATION_SHUTTER)
    img = expose(scene, ambient, None, settings, None, probe, optics)
    pm = rasterize(scene)
    # Reflective foreground only: emitter pixels are light sources, not
    # subjects, and would wreck the reference level.
    foreground = (pm.depth <= scene.min_depth) & (pm.emitter_index < 0)
    brightest = float(np.max(img.data[foreground]))
    if brightest <= 0:
        raise ConfigError(
            "sensor.normalization_k: cannot calibrate against a dark reference "
            "scene; set normalization_k explicitly")
    k = CALIBRATION_TARGET * sensor.full_scale_signal / brightest
    return sensor.with_normalization(k)


def _condition_seed(base_seed: int, condition: str) -> int:
    seq = np.random.SeedSequence([int(base_seed), _CONDITION_SEED_INDEX[condition]])
    return int(seq.generate_state(1)[0])


def _sweep_times(day: DaylightModel, interval_min: float) -> tuple[float, ...]:
    span = day.day_end - day.day_start
    steps = int(math.floor(span / interval_min + 1e-9))
    return tuple(day.day_start + k * interval_min for k in range(steps + 1))


def calibrate_al_exposure(scene: Scene, day: DaylightModel, flash: FlashUnit,
                          sensor: SensorModel, optics: OpticsModel,
                          config: DaySweepConfig) -> AutoExposeResult:
    """One-time flash-on exposure search at sweep start, frozen afterwards."""
    ambient = daylight_irradiance(day, day.day_start, config.grid)
    return auto_expose(scene, ambient, sensor, optics,
                       target_mean=config.target_mean,
                       bounds=(MIN_SHUTTER_TIME, flash.pulse_duration),
                       flash=flash, stereo_rate_hz=config.stereo_rate_hz)


def _requantize(merged: Image, reference: ExposureSettings,
                sensor: SensorModel) -> Image:
    """Map a merged radiance estimate (codes per second) back to codes at
    the reference exposure time. No extra noise: the brackets carried it.
    """
    codes = merged.data * reference.shutter_time * reference.gain_linear
    codes = np.clip(np.floor(codes + 0.5), 0, sensor.max_code)
    dtype = np.uint8 if sensor.bit_depth == 8 else np.uint16
    return Image(merged.width, merged.height, codes.astype(dtype), "quantized",
                 bit_depth=sensor.bit_depth)


def _prepared(config: DaySweepConfig) -> tuple[Scene, SensorModel]:
    scene = resolve_scene(config)
    sensor = config.sensor
    if sensor is None:
        sensor = calibrate_normalization(scene, config.day, SensorModel(),
                                         config.optics, config.grid)
    return scene, sensor


def run_day_sweep(config: DaySweepConfig) -> SweepResult:
    """Simulate the full noon-to-sunset capture experiment."""
    scene, sensor = _prepared(config)
    times = _sweep_times(config.day, config.interval_min)
    seeds = {cond: _condition_seed(config.seed, cond) for cond in config.conditions}

    al_settings: ExposureSettings | None = None
    al_schedule = None
    if CONDITION_AL in config.conditions:
        if config.al_shutter_time is not None:
            al_settings = ExposureSettings(config.al_shutter_time)
        else:
            al_settings = calibrate_al_exposure(
                scene, config.day, config.flash, sensor, config.optics, config).settings
        al_schedule = schedule_stereo(config.stereo_rate_hz, config.flash,
                                      al_settings.shutter_time)

    frames: dict[tuple[float, str], Image] = {}
    saturation_stats: dict[tuple[float, str], float] = {}
    nl_bounds = (MIN_SHUTTER_TIME, config.nl_max_shutter)

    for t in times:
        ambient = daylight_irradiance(config.day, t, config.grid)
        for cond in config.conditions:
            if cond == CONDITION_AL:
                lin = expose(scene, ambient, config.flash, al_settings, al_schedule,
                             sensor, config.optics)
                frame = quantize(lin, sensor, al_settings, seeds[cond])
            elif cond == CONDITION_NL:
                ae = auto_expose(scene, ambient, sensor, config.optics,
                                 config.target_mean, nl_bounds)
                lin = expose(scene, ambient, None, ae.settings, None, sensor,
                             config.optics)
                frame = quantize(lin, sensor, ae.settings, seeds[cond])
            else:  # HDR
                ae = auto_expose(scene, ambient, sensor, config.optics,
                                 config.target_mean, nl_bounds)
                if config.hdr_bracket_times is not None:
                    bracket_times = config.hdr_bracket_times
                else:
                    bracket_times = tuple(
                        max(MIN_SHUTTER_TIME, f * ae.settings.shutter_time)
                        for f in config.hdr_bracket_factors)
                brackets = []
                for bt in bracket_times:
                    bs = ExposureSettings(bt)
                    blin = expose(scene, ambient, None, bs, None, sensor, config.optics)
                    brackets.append((quantize(blin, sensor, bs, seeds[cond]), bs))
                frame = _requantize(hdr_merge(brackets), ae.settings, sensor)
            frames[(t, cond)] = frame
            saturation_stats[(t, cond)] = frame.saturated_fraction()

    scales = [config.day.scale_at(t) for t in times]
    reports = {}
    for cond in config.conditions:
        series = [(t, cond, frames[(t, cond)]) for t in times]
        reports[cond] = consistency_series(
            frames[(times[0], cond)], series, config.ssim_params,
            scene_scales=scales, reference_id=f"{cond}@{times[0]:g}min")
    return SweepResult(times, tuple(config.conditions), frames, reports,
                       saturation_stats, al_settings)


def foreground_contrast(frame: Image, scene: Scene) -> float:
    """Std-dev of luma over foreground patches, emitter pixels excluded.

    Emitter-covered pixels show the light source, not the subject, so they
    say nothing about whether foreground detail survived the exposure.
    """
    pm = rasterize(scene)
    mask = (pm.depth <= FOREGROUND_MAX_DEPTH) & (pm.emitter_index < 0)
    return float(np.std(luma(frame)[mask]))


def run_extreme(config: DaySweepConfig) -> ExtremeResult:
    """Single AL and NL capture of a scene with the sun in frame."""
    scene, sensor = _prepared(config)
    if not scene.emitters:
        raise ValueError("extreme scenario requires a scene with an emitter patch")
    ambient = daylight_irradiance(config.day, config.day.day_start, config.grid)

    if config.al_shutter_time is not None:
        al_settings = ExposureSettings(config.al_shutter_time)
    else:
        al_settings = calibrate_al_exposure(
            scene, config.day, config.flash, sensor, config.optics, config).settings
    schedule = schedule_stereo(config.stereo_rate_hz, config.flash,
                               al_settings.shutter_time)
    al_lin = expose(scene, ambient, config.flash, al_settings, schedule,
                    sensor, config.optics)
    al_frame = quantize(al_lin, sensor, al_settings,
                        _condition_seed(config.seed, CONDITION_AL))

    nl_ae = auto_expose(scene, ambient, sensor, config.optics, config.target_mean,
                        (MIN_SHUTTER_TIME, config.nl_max_shutter))
    nl_lin = expose(scene, ambient, None, nl_ae.settings, None, sensor, config.optics)
    nl_frame = quantize(nl_lin, sensor, nl_ae.settings,
                        _condition_seed(config.seed, CONDITION_NL))

    pm = rasterize(scene)
    sun_area = float(np.mean(pm.emitter_index >= 0))
    frames = {CONDITION_AL: al_frame, CONDITION_NL: nl_frame}
    stats = {
        CONDITION_AL: ExtremeStats(CONDITION_AL, al_settings.shutter_time,
                                   al_frame.saturated_fraction(),
                                   foreground_contrast(al_frame, scene)),
        CONDITION_NL: ExtremeStats(CONDITION_NL, nl_ae.settings.shutter_time,
                                   nl_frame.saturated_fraction(),
                                   foreground_contrast(nl_frame, scene)),
    }
    return ExtremeResult(frames, stats, sun_area)


def analyze_directory(reference_path: str | Path, image_paths: list[str | Path],
                      params: SsimParams = SsimParams(),
                      condition: str = CONDITION_AL) -> QualityReport:
    """Consistency of decoded image files against a reference file.

    Times are the 0-based positions in `image_paths`; the report's
    scene_scale column is 0 (no illuminance measurement for real files).
    """
    reference = read_ppm(reference_path)
    frames = []
    for i, path in enumerate(image_paths):
        img = read_ppm(path)
        if (img.width, img.height) != (reference.width, reference.height):
            raise ValueError(
                f"{path}: dimensions {img.width}x{img.height} do not match "
                f"reference {reference.width}x{reference.height}")
        frames.append((float(i), condition, img))
    return consistency_series(reference, frames, params,
                              reference_id=str(reference_path))


# ---------------------------------------------------------------------------
# Config files

_DAY_KEYS = {"noon_illuminance", "noon_cct", "sunset_cct", "day_start", "day_end"}
_FLASH_KEYS = {"radiant_power", "cct", "pulse_duration", "pulse_start_offset",
               "reference_distance", "beam_gain"}
_SENSOR_KEYS = {"pixel_pitch", "normalization_k", "bit_depth", "full_scale_signal",
                "read_noise_sigma", "shot_noise_scale"}
_OPTICS_KEYS = {"f_number", "focal_length"}
_TOP_KEYS = {"scene", "width", "height", "interval_min", "day", "flash", "sensor",
             "optics", "conditions", "hdr_bracket_times", "hdr_bracket_factors",
             "seed", "al_shutter_time", "nl_max_shutter", "target_mean",
             "stereo_rate_hz", "ssim_window"}


def _section(data: dict, name: str, allowed: set[str]) -> dict:
    section = data.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"{name}: must be an object")
    for key in section:
        if key not in allowed and not (name == "day" and key == "profile_csv"):
            raise ConfigError(f"{name}.{key}: unknown field")
    return section


def config_from_dict(data: dict, base_dir: Path | None = None) -> DaySweepConfig:
    base_dir = base_dir or Path(".")
    for key in data:
        if key not in _TOP_KEYS:
            raise ConfigError(f"{key}: unknown field")

    day_kwargs = dict(_section(data, "day", _DAY_KEYS))
    profile_csv = day_kwargs.pop("profile_csv", None)
    if profile_csv is not None:
        day_kwargs["profile"] = profile_from_csv((base_dir / profile_csv).read_text())
    try:
        day = DaylightModel(**day_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"day: {exc}") from None

    flash_kwargs = dict(_section(data, "flash", _FLASH_KEYS))
    flash_kwargs.setdefault("beam_gain", 1.2)
    try:
        flash = FlashUnit(**flash_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"flash: {exc}") from None

    sensor = None
    if "sensor" in data:
        try:
            sensor = SensorModel(**_section(data, "sensor", _SENSOR_KEYS))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"sensor: {exc}") from None

    try:
        optics = OpticsModel(**_section(data, "optics", _OPTICS_KEYS))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"optics: {exc}") from None

    scene = data.get("scene", "orchard_day")
    if isinstance(scene, str) and scene.endswith(".json"):
        scene = str(base_dir / scene)

    kwargs: dict = {
        "scene": scene,
        "width": int(data.get("width", 256)),
        "height": int(data.get("height", 192)),
        "interval_min": float(data.get("interval_min", 20.0)),
        "day": day,
        "flash": flash,
        "sensor": sensor,
        "optics": optics,
        "seed": int(data.get("seed", 0)),
        "nl_max_shutter": float(data.get("nl_max_shutter", 50e-3)),
        "target_mean": float(data.get("target_mean", 0.5)),
        "stereo_rate_hz": float(data.get("stereo_rate_hz", 20.0)),
    }
    if "conditions" in data:
        kwargs["conditions"] = tuple(str(c) for c in data["conditions"])
    if data.get("hdr_bracket_times") is not None:
        kwargs["hdr_bracket_times"] = tuple(float(t) for t in data["hdr_bracket_times"])
    if data.get("hdr_bracket_factors") is not None:
        kwargs["hdr_bracket_factors"] = tuple(float(t) for t in data["hdr_bracket_factors"])
    if data.get("al_shutter_time") is not None:
        kwargs["al_shutter_time"] = float(data["al_shutter_time"])
    if "ssim_window" in data:
        kwargs["ssim_params"] = SsimParams(window=int(data["ssim_window"]))
    try:
        return DaySweepConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> DaySweepConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return config_from_dict(data, base_dir=path.parent)


def with_overrides(config: DaySweepConfig, seed: int | None = None,
                   conditions: tuple[str, ...] | None = None) -> DaySweepConfig:
    kwargs = {}
    if seed is not None:
        kwargs["seed"] = seed
    if conditions is not None:
        kwargs["conditions"] = conditions
    return replace(config, **kwargs) if kwargs else config
