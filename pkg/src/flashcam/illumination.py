"""Light-source models: time-varying daylight and the pulsed flash.

Both sources are approximated as normalized blackbody radiators; only a
correlated color temperature is known for either, and the blackbody shape
gives the right color ordering with one parameter. Magnitudes are applied
as separate scale factors: a cosine elevation profile for daylight and an
inverse-square point-source law for the flash.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    BOLTZMANN_CONSTANT,
    DEFAULT_GRID,
    PLANCK_CONSTANT,
    SPEED_OF_LIGHT,
    SpectralCurve,
    WavelengthGrid,
    require_common_grid,
    trapezoid_nm,
)

CCT_MIN = 1000.0
CCT_MAX = 20000.0


def blackbody_spd(cct: float, grid: WavelengthGrid = DEFAULT_GRID) -> SpectralCurve:
    """Planck's law on the grid, normalized to unit integral over the grid.

    Shape-only: magnitude is applied by the callers as a scale factor.
    """
    if not (CCT_MIN <= cct <= CCT_MAX):
        raise ValueError(f"cct must be within [{CCT_MIN}, {CCT_MAX}] K, got {cct}")
    lam_m = grid.wavelengths * 1e-9
    # B(lambda, T) = 2hc^2 / lambda^5 / (exp(hc / (lambda k T)) - 1)
    exponent = PLANCK_CONSTANT * SPEED_OF_LIGHT / (lam_m * BOLTZMANN_CONSTANT * cct)
    radiance = (2.0 * PLANCK_CONSTANT * SPEED_OF_LIGHT ** 2
                / (lam_m ** 5 * np.expm1(exponent)))
    curve = SpectralCurve(grid.start, grid.step, radiance)
    total = trapezoid_nm(curve)
    if total <= 0:
        raise ValueError("blackbody curve integrated to zero on this grid")
    return curve.scaled(1.0 / total)


@dataclass(frozen=True)
class DaylightModel:
    """Daylight over a simulated half-day, noon to sunset.

    Intensity follows noon_illuminance * cos(pi/2 * phase) where phase runs
    0 -> 1 over [day_start, day_end]; color temperature ramps linearly from
    noon_cct to sunset_cct. A measured (time_min, scale) profile can be
    supplied to replace the cosine. noon_illuminance 0 is allowed and turns
    the ambient term off entirely (flash-only studio conditions).
    """

    noon_illuminance: float = 1.0
    noon_cct: float = 6500.0
    sunset_cct: float = 2500.0
    day_start: float = 0.0
    day_end: float = 360.0
    profile: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.day_end <= self.day_start:
            raise ValueError("day_end must be after day_start")
        for name, cct in (("noon_cct", self.noon_cct), ("sunset_cct", self.sunset_cct)):
            if not (CCT_MIN <= cct <= CCT_MAX):
                raise ValueError(f"{name} must be within [{CCT_MIN}, {CCT_MAX}] K")
        if self.noon_illuminance < 0:
            raise ValueError("noon_illuminance must be non-negative")
        if self.profile is not None:
            if len(self.profile) < 2:
                raise ValueError("profile needs at least two (time, scale) points")
            times = [p[0] for p in self.profile]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("profile times must be strictly increasing")

    def _check_time(self, t: float) -> None:
        if not (self.day_start <= t <= self.day_end):
            raise ValueError(
                f"time {t} min outside day window [{self.day_start}, {self.day_end}]")

    def scale_at(self, t: float) -> float:
        self._check_time(t)
        if self.profile is not None:
            times = np.array([p[0] for p in self.profile])
            scales = np.array([p[1] for p in self.profile])
            return float(np.interp(t, times, scales))
        phase = (t - self.day_start) / (self.day_end - self.day_start)
        if phase >= 1.0:
            return 0.0
        return self.noon_illuminance * math.cos(0.5 * math.pi * phase)

    def cct_at(self, t: float) -> float:
        self._check_time(t)
        phase = (t - self.day_start) / (self.day_end - self.day_start)
        return self.noon_cct + (self.sunset_cct - self.noon_cct) * phase


def daylight_irradiance(model: DaylightModel, t: float,
                        grid: WavelengthGrid = DEFAULT_GRID) -> SpectralCurve:
    """Ambient spectral irradiance at t minutes from noon."""
    scale = model.scale_at(t)
    if scale == 0.0:
        return SpectralCurve(grid.start, grid.step, np.zeros(grid.count))
    return blackbody_spd(model.cct_at(t), grid).scaled(scale)


@dataclass(frozen=True)
class FlashUnit:
    """Pulsed flash: total radiant power, CCT, pulse timing, falloff model.

    The hardware this models drives its LED array with 200-250 us pulses;
    custom durations are accepted as long as they are positive. beam_gain
    scales on-axis irradiance above the isotropic baseline (the physical
    array is directional) without changing the inverse-square falloff.
    """

    radiant_power: float = 1200.0
    cct: float = 5600.0
    pulse_duration: float = 250e-6
    pulse_start_offset: float = 0.0
    reference_distance: float = 1.0
    beam_gain: float = 1.0

    def __post_init__(self) -> None:
        if self.radiant_power <= 0:
            raise ValueError("radiant_power must be positive")
        if self.pulse_duration <= 0:
            raise ValueError("pulse_duration must be positive")
        if self.reference_distance <= 0:
            raise ValueError("reference_distance must be positive")
        if self.beam_gain <= 0:
            raise ValueError("beam_gain must be positive")
        if not (CCT_MIN <= self.cct <= CCT_MAX):
            raise ValueError(f"cct must be within [{CCT_MIN}, {CCT_MAX}] K")

    def irradiance_scale(self, distance: float) -> float:
        if distance <= 0:
            raise ValueError("distance must be positive")
        return self.radiant_power * self.beam_gain / (4.0 * math.pi * (distance * distance))


def flash_irradiance(flash: FlashUnit, distance: float,
                     grid: WavelengthGrid = DEFAULT_GRID) -> SpectralCurve:
    """Flash spectral irradiance at the given subject distance.

    Isotropic-emitter inverse-square model: radiant_power * beam_gain
    spread over the sphere of radius `distance`.
    """
    return blackbody_spd(flash.cct, grid).scaled(flash.irradiance_scale(distance))


def combined_irradiance(day: SpectralCurve, flash_at_distance: SpectralCurve,
                        flash_overlap_fraction: float) -> SpectralCurve:
    """Pointwise day + flash * overlap_fraction on a shared grid.

    overlap_fraction is (flash-shutter overlap time) / (shutter time), as
    computed by the capture module's trigger scheduling.
    """
    grid = require_common_grid(day, flash_at_distance)
    if not (0.0 <= flash_overlap_fraction <= 1.0):
        raise ValueError("flash_overlap_fraction must be within [0, 1]")
    return SpectralCurve(
        grid.start, grid.step,
        day.samples + flash_at_distance.samples * flash_overlap_fraction)


def profile_from_csv(text: str) -> tuple[tuple[float, float], ...]:
    """Parse a measured daylight profile: CSV rows of time_min,scale."""
    rows: list[tuple[float, float]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if parts[0].strip().lower() == "time_min":
            continue
        rows.append((float(parts[0]), float(parts[1])))
    if len(rows) < 2:
        raise ValueError("daylight profile needs at least two rows")
    return tuple(rows)
