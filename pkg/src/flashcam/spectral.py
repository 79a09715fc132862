"""Wavelength-domain types and the pixel-signal integral.

The signal a pixel accumulates during an exposure is modeled as

    P = T * K * (l^2 / N^2) * integral( E(lambda) * R(lambda)
                                        / (h*c/lambda) * Q(lambda) ) dlambda

with T the shutter time, K a dimensionless normalization, l the pixel
pitch, N the lens f-number, E the source spectral power distribution,
R the surface reflectance and Q the per-channel quantum efficiency.
The h*c/lambda divisor converts radiant energy to a photon count, so the
integrand carries a factor lambda/(h*c); lambda is expressed in meters
inside that term and the quadrature runs over the grid in meters as well.

All curves live on uniform wavelength grids (nanometers) and must share a
grid before they can be combined; `resample` is the tool for that.
Quadrature is the trapezoidal rule with a fixed left-to-right summation
order, so results are deterministic regardless of threading.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import GridMismatchError, InvalidGridError

# CODATA 2018 exact definitions
PLANCK_CONSTANT = 6.62607015e-34     # J*s
SPEED_OF_LIGHT = 2.99792458e8        # m/s
BOLTZMANN_CONSTANT = 1.380649e-23    # J/K

CHANNELS = ("R", "G", "B")


@dataclass(frozen=True)
class PhysicalConstants:
    """Planck constant and speed of light, pinned to their CODATA values."""

    h: float = PLANCK_CONSTANT
    c: float = SPEED_OF_LIGHT

    def __post_init__(self) -> None:
        if self.h != PLANCK_CONSTANT or self.c != SPEED_OF_LIGHT:
            raise ValueError("physical constants are fixed at CODATA definitions")


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class WavelengthGrid:
    """Uniform wavelength grid: start + step * k for k in [0, count)."""

    start: float
    step: float
    count: int

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise InvalidGridError(f"lambda_step must be positive, got {self.step}")
        if self.count <= 0:
            raise InvalidGridError(f"grid needs at least one sample, got {self.count}")

    @property
    def wavelengths(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count, dtype=np.float64)

    @property
    def end(self) -> float:
        return self.start + self.step * (self.count - 1)


# Visible band, 5 nm sampling: enough resolution for smooth SPD / QE shapes.
DEFAULT_GRID = WavelengthGrid(380.0, 5.0, 81)


@dataclass(frozen=True)
class SpectralCurve:
    """Wavelength-sampled function on a uniform nm grid.

    Units depend on role: W*m^-2*nm^-1 for source SPDs, dimensionless in
    [0, 1] for reflectances and quantum efficiencies. The curve itself only
    enforces finiteness and non-negativity; role-specific range checks live
    with the types that own the curve (SensorModel, Scene).
    """

    lambda_start: float
    lambda_step: float
    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidGridError("samples must be a non-empty 1-D sequence")
        if self.lambda_step <= 0:
            raise InvalidGridError(f"lambda_step must be positive, got {self.lambda_step}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        if np.any(arr < 0):
            raise ValueError("samples must be non-negative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def grid(self) -> WavelengthGrid:
        return WavelengthGrid(self.lambda_start, self.lambda_step, self.samples.size)

    @property
    def wavelengths(self) -> np.ndarray:
        return self.grid.wavelengths

    def scaled(self, factor: float) -> "SpectralCurve":
        return SpectralCurve(self.lambda_start, self.lambda_step, self.samples * factor)

    def value_at(self, wavelength_nm: float) -> float:
        """Linear interpolation, zero outside the sampled support."""
        return float(np.interp(wavelength_nm, self.wavelengths, self.samples,
                               left=0.0, right=0.0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["lambda_nm", "value"])
        for lam, val in zip(self.wavelengths, self.samples):
            writer.writerow([repr(float(lam)), repr(float(val))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SpectralCurve":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["lambda_nm", "value"]:
            raise InvalidGridError("curve CSV must start with header 'lambda_nm,value'")
        lams: list[float] = []
        vals: list[float] = []
        for row in reader:
            if not row:
                continue
            lams.append(float(row[0]))
            vals.append(float(row[1]))
        if len(lams) < 2:
            raise InvalidGridError("curve CSV needs at least two samples")
        steps = np.diff(lams)
        step = steps[0]
        if step <= 0 or not np.allclose(steps, step, rtol=1e-9, atol=1e-9):
            raise InvalidGridError("curve CSV must use a uniform, increasing lambda grid")
        return cls(lams[0], float(step), np.asarray(vals))


def constant_curve(value: float, grid: WavelengthGrid = DEFAULT_GRID) -> SpectralCurve:
    return SpectralCurve(grid.start, grid.step, np.full(grid.count, float(value)))


def zero_curve(grid: WavelengthGrid = DEFAULT_GRID) -> SpectralCurve:
    return constant_curve(0.0, grid)


def gaussian_curve(center_nm: float, sigma_nm: float, peak: float,
                   base: float = 0.0, grid: WavelengthGrid = DEFAULT_GRID) -> SpectralCurve:
    lam = grid.wavelengths
    vals = base + peak * np.exp(-0.5 * ((lam - center_nm) / sigma_nm) ** 2)
    return SpectralCurve(grid.start, grid.step, vals)


def curves_share_grid(*curves: SpectralCurve) -> bool:
    first = curves[0].grid
    return all(c.grid == first for c in curves[1:])


def require_common_grid(*curves: SpectralCurve) -> WavelengthGrid:
    if not curves_share_grid(*curves):
        raise GridMismatchError(
            "curves are on different wavelength grids; resample them first")
    return curves[0].grid


def resample(curve: SpectralCurve, target_start: float, target_step: float,
             target_count: int) -> SpectralCurve:
    """Linear interpolation onto a new uniform grid, zero outside support."""
    target = WavelengthGrid(target_start, target_step, target_count)
    vals = np.interp(target.wavelengths, curve.wavelengths, curve.samples,
                     left=0.0, right=0.0)
    return SpectralCurve(target.start, target.step, vals)


def trapezoid_nm(curve: SpectralCurve) -> float:
    """Trapezoidal integral of a curve over its grid, dlambda in nm."""
    return _trapezoid(curve.samples, curve.lambda_step)


def _trapezoid(values: np.ndarray, step: float) -> float:
    if values.size < 2:
        return 0.0
    inner = float(np.sum(values[1:-1]))
    return step * (0.5 * values[0] + inner + 0.5 * values[-1])


def validate_unit_range(curve: SpectralCurve, name: str) -> None:
    """Reflectance and QE curves must stay within [0, 1]."""
    if float(np.max(curve.samples)) > 1.0:
        raise ValueError(f"{name} samples must lie in [0, 1]")


def default_quantum_efficiency(grid: WavelengthGrid = DEFAULT_GRID) -> dict[str, SpectralCurve]:
    """Plausible RGB sensor response: Gaussian bumps at 610/540/460 nm."""
    peaks = {"R": 610.0, "G": 540.0, "B": 460.0}
    return {ch: gaussian_curve(peaks[ch], 40.0, 0.8, grid=grid) for ch in CHANNELS}


_ALLOWED_BIT_DEPTHS = (8, 10, 12, 16)


@dataclass(frozen=True)
class SensorModel:
    """Everything the pixel-signal model needs from the sensor.

    `normalization_k` is dimensionless and is normally calibrated against a
    reference scene (see flashcam.harness.calibrate_normalization) so that
    simulated scenarios are comparable; the neutral default is 1.0.
    Noise defaults are small: read noise of half an 8-bit LSB plus a weak
    signal-proportional variance term standing in for shot noise.
    """

    pixel_pitch: float = 3.45e-6
    normalization_k: float = 1.0
    quantum_efficiency: Mapping[str, SpectralCurve] = field(
        default_factory=default_quantum_efficiency)
    bit_depth: int = 8
    full_scale_signal: float = 1.0
    read_noise_sigma: float = 0.5 / 255.0
    shot_noise_scale: float = 1e-5

    def __post_init__(self) -> None:
        if self.pixel_pitch <= 0:
            raise ValueError("pixel_pitch must be positive")
        if self.normalization_k <= 0:
            raise ValueError("normalization_k must be positive")
        if self.bit_depth not in _ALLOWED_BIT_DEPTHS:
            raise ValueError(f"bit_depth must be one of {_ALLOWED_BIT_DEPTHS}")
        if self.full_scale_signal <= 0:
            raise ValueError("full_scale_signal must be positive")
        if self.read_noise_sigma < 0 or self.shot_noise_scale < 0:
            raise ValueError("noise parameters must be non-negative")
        for ch in CHANNELS:
            if ch not in self.quantum_efficiency:
                raise ValueError(f"quantum_efficiency missing channel {ch}")
            validate_unit_range(self.quantum_efficiency[ch], f"quantum_efficiency[{ch}]")
        require_common_grid(*(self.quantum_efficiency[ch] for ch in CHANNELS))

    @property
    def max_code(self) -> int:
        return (1 << self.bit_depth) - 1

    def with_normalization(self, k: float) -> "SensorModel":
        return SensorModel(self.pixel_pitch, k, self.quantum_efficiency,
                           self.bit_depth, self.full_scale_signal,
                           self.read_noise_sigma, self.shot_noise_scale)


MIN_F_NUMBER = 2.4


@dataclass(frozen=True)
class OpticsModel:
    """Lens parameters; the f-number floor matches the hardware's f/2.4."""

    f_number: float = 2.4
    focal_length: float = 3.5e-3

    def __post_init__(self) -> None:
        if self.f_number < MIN_F_NUMBER:
            raise ValueError(f"f_number must be >= {MIN_F_NUMBER}")
        if self.focal_length <= 0:
            raise ValueError("focal_length must be positive")


def pixel_signal(exposure_time: float, sensor: SensorModel, optics: OpticsModel,
                 irradiance: SpectralCurve, reflectance: SpectralCurve,
                 channel: str) -> float:
    """Linear pixel signal for one channel.

    Trapezoidal quadrature of E * R * Q * lambda / (h*c) over the common
    grid, with lambda and dlambda in meters, times T * K * l^2 / N^2.
    """
    if exposure_time < 0:
        raise ValueError("exposure_time must be non-negative")
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}, got {channel!r}")
    qe = sensor.quantum_efficiency[channel]
    grid = require_common_grid(irradiance, reflectance, qe)
    lam_m = grid.wavelengths * 1e-9
    integrand = (irradiance.samples * reflectance.samples * qe.samples
                 * lam_m / (PLANCK_CONSTANT * SPEED_OF_LIGHT))
    integral = _trapezoid(integrand, grid.step * 1e-9)
    geometry = (sensor.pixel_pitch ** 2) / (optics.f_number ** 2)
    return exposure_time * sensor.normalization_k * geometry * integral


def channel_signals(exposure_time: float, sensor: SensorModel, optics: OpticsModel,
                    irradiance: SpectralCurve, reflectance: SpectralCurve) -> np.ndarray:
    """pixel_signal for all three channels, as an (R, G, B) array."""
    return np.array([pixel_signal(exposure_time, sensor, optics, irradiance,
                                  reflectance, ch) for ch in CHANNELS])
