"""Depth-annotated planar-patch scenes.

A scene is a painter's-ordered stack of axis-aligned rectangles, each with
a depth and a named reflectance. That is all the exposure, background
suppression and motion-blur effects need: per-pixel depth and reflectance.
Self-luminous emitter patches (the sun disk in the extreme tests) paint on
top and add their own spectrum directly, bypassing reflectance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SceneCoverageError, UnknownSceneError
from .illumination import blackbody_spd
from .spectral import (
    DEFAULT_GRID,
    SpectralCurve,
    WavelengthGrid,
    constant_curve,
    gaussian_curve,
    validate_unit_range,
)

BUILTIN_SCENES = ("orchard_day", "orchard_extreme", "flat_gray")

# Subjects inside the system's 0.5-1.5 m working range count as foreground.
FOREGROUND_MAX_DEPTH = 1.5


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle, half-open: [x0, x1) x [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        if self.x1 <= self.x0 or self.y1 <= self.y0:
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y1), slice(self.x0, self.x1)


@dataclass(frozen=True)
class ScenePatch:
    region: Rect
    depth: float
    reflectance_id: str
    label: str = ""

    def __post_init__(self) -> None:
        if self.depth <= 0:
            raise ValueError("patch depth must be positive")


@dataclass(frozen=True)
class EmitterPatch:
    """Self-luminous region: adds scale * spd directly to covered pixels."""

    region: Rect
    spd: SpectralCurve
    scale: float
    label: str = "sun"

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError("emitter scale must be positive")


@dataclass(frozen=True)
class Scene:
    width: int
    height: int
    patches: tuple[ScenePatch, ...]
    reflectances: dict[str, SpectralCurve]
    camera_speed: float = 0.4
    emitters: tuple[EmitterPatch, ...] = ()

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("scene dimensions must be positive")
        if self.camera_speed < 0:
            raise ValueError("camera_speed must be non-negative")
        if not self.patches:
            raise SceneCoverageError("scene has no patches")
        for patch in self.patches:
            self._check_bounds(patch.region)
            if patch.reflectance_id not in self.reflectances:
                raise ValueError(f"unknown reflectance_id {patch.reflectance_id!r}")
        for emitter in self.emitters:
            self._check_bounds(emitter.region)
        for name, curve in self.reflectances.items():
            validate_unit_range(curve, f"reflectance {name!r}")
        covered = np.zeros((self.height, self.width), dtype=bool)
        for patch in self.patches:
            covered[patch.region.slices()] = True
        if not covered.all():
            raise SceneCoverageError("scene leaves uncovered pixels")

    def _check_bounds(self, region: Rect) -> None:
        if region.x0 < 0 or region.y0 < 0 or region.x1 > self.width or region.y1 > self.height:
            raise ValueError(f"region {region} outside {self.width}x{self.height} image")

    @property
    def min_depth(self) -> float:
        return min(p.depth for p in self.patches)


@dataclass(frozen=True)
class PatchMap:
    """Rasterized scene: per-pixel patch index, depth and emitter index."""

    patch_index: np.ndarray    # (H, W) int32, index into scene.patches
    emitter_index: np.ndarray  # (H, W) int32, -1 where no emitter
    depth: np.ndarray          # (H, W) float64


def rasterize(scene: Scene) -> PatchMap:
    """Painter's-order rasterization; later patches overwrite earlier ones."""
    patch_index = np.full((scene.height, scene.width), -1, dtype=np.int32)
    for idx, patch in enumerate(scene.patches):
        patch_index[patch.region.slices()] = idx
    if (patch_index < 0).any():
        raise SceneCoverageError("scene leaves uncovered pixels")
    emitter_index = np.full((scene.height, scene.width), -1, dtype=np.int32)
    for idx, emitter in enumerate(scene.emitters):
        emitter_index[emitter.region.slices()] = idx
    depths = np.array([p.depth for p in scene.patches])
    return PatchMap(patch_index=patch_index, emitter_index=emitter_index,
                    depth=depths[patch_index])


def default_reflectances(grid: WavelengthGrid = DEFAULT_GRID) -> dict[str, SpectralCurve]:
    """Reflectance library for the builtin orchard scenes.

    Broad, high-base curves so that per-channel signals stay within a
    factor ~1.5 of the frame mean; that keeps mid-gray auto-exposure from
    clipping the brightest channel.
    """
    return {
        "fruit": gaussian_curve(620.0, 60.0, 0.26, base=0.30, grid=grid),
        "foliage": gaussian_curve(545.0, 55.0, 0.20, base=0.28, grid=grid),
        "background": constant_curve(0.30, grid),
        "gray18": constant_curve(0.18, grid),
    }


# Emitter scales for the extreme scene, relative to unit noon illuminance.
# The sun core overwhelms any converged daylight auto-exposure; the flare
# halo saturates daylight exposures but not a flash-length shutter.
SUN_CORE_SCALE = 25.0
SUN_FLARE_SCALE = 3.5


def _frac_rect(width: int, height: int, fx0: float, fy0: float,
               fx1: float, fy1: float) -> Rect:
    return Rect(round(fx0 * width), round(fy0 * height),
                round(fx1 * width), round(fy1 * height))


def _orchard_patches(width: int, height: int) -> tuple[ScenePatch, ...]:
    patches = [
        # Adjacent tree row: same foliage, three times farther away.
        ScenePatch(Rect(0, 0, width, height), 3.0, "foliage", "background"),
        ScenePatch(_frac_rect(width, height, 0.0, 0.10, 1.0, 0.90),
                   1.0, "foliage", "foliage"),
    ]
    for fy in (0.20, 0.45, 0.70):
        for fx in (0.06, 0.31, 0.56, 0.81):
            patches.append(ScenePatch(
                _frac_rect(width, height, fx, fy, fx + 0.10, fy + 0.10),
                1.0, "fruit", "fruit"))
    return tuple(patches)


def _sun_emitters(width: int, height: int,
                  grid: WavelengthGrid) -> tuple[EmitterPatch, ...]:
    solar = blackbody_spd(5778.0, grid)
    return (
        EmitterPatch(_frac_rect(width, height, 0.50, 0.0, 1.0, 0.30),
                     solar, SUN_FLARE_SCALE, "flare"),
        EmitterPatch(_frac_rect(width, height, 0.64, 0.005, 0.86, 0.095),
                     solar, SUN_CORE_SCALE, "sun"),
    )


def builtin_scene(name: str, width: int = 256, height: int = 192,
                  grid: WavelengthGrid = DEFAULT_GRID) -> Scene:
    """Builtin demo scenes: orchard_day, orchard_extreme, flat_gray."""
    if name == "flat_gray":
        return Scene(width, height,
                     (ScenePatch(Rect(0, 0, width, height), 1.0, "gray18", "gray"),),
                     default_reflectances(grid))
    if name == "orchard_day":
        return Scene(width, height, _orchard_patches(width, height),
                     default_reflectances(grid))
    if name == "orchard_extreme":
        return Scene(width, height, _orchard_patches(width, height),
                     default_reflectances(grid),
                     emitters=_sun_emitters(width, height, grid))
    raise UnknownSceneError(
        f"unknown scene {name!r}; builtins are {', '.join(BUILTIN_SCENES)}")


def _curve_from_spec(spec: dict, grid: WavelengthGrid, base_dir: Path) -> SpectralCurve:
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return constant_curve(float(spec["value"]), grid)
    if kind == "gaussian":
        return gaussian_curve(float(spec["center_nm"]), float(spec["sigma_nm"]),
                              float(spec["amplitude"]), base=float(spec.get("base", 0.0)),
                              grid=grid)
    if kind == "samples":
        curve = SpectralCurve(float(spec["lambda_start"]), float(spec["lambda_step"]),
                              np.asarray(spec["samples"], dtype=float))
        from .spectral import resample
        return resample(curve, grid.start, grid.step, grid.count)
    if kind == "csv":
        from .spectral import resample
        curve = SpectralCurve.from_csv((base_dir / spec["path"]).read_text())
        return resample(curve, grid.start, grid.step, grid.count)
    raise ValueError(f"unknown curve kind {kind!r}")


def scene_from_dict(data: dict, grid: WavelengthGrid = DEFAULT_GRID,
                    base_dir: Path | None = None) -> Scene:
    """Build a Scene from the documented JSON structure (docs/config.md)."""
    base_dir = base_dir or Path(".")
    width = int(data["width"])
    height = int(data["height"])
    reflectances = {name: _curve_from_spec(spec, grid, base_dir)
                    for name, spec in data.get("reflectances", {}).items()}
    if not reflectances:
        reflectances = default_reflectances(grid)
    patches = tuple(
        ScenePatch(Rect(*[int(v) for v in p["region"]]), float(p["depth"]),
                   str(p["reflectance"]), str(p.get("label", "")))
        for p in data["patches"])
    emitters = tuple(
        EmitterPatch(Rect(*[int(v) for v in e["region"]]),
                     blackbody_spd(float(e["cct"]), grid) if "cct" in e
                     else _curve_from_spec(e["spd"], grid, base_dir),
                     float(e["scale"]), str(e.get("label", "sun")))
        for e in data.get("emitters", []))
    return Scene(width, height, patches, reflectances,
                 camera_speed=float(data.get("camera_speed", 0.4)),
                 emitters=emitters)


def load_scene(path: str | Path, grid: WavelengthGrid = DEFAULT_GRID) -> Scene:
    path = Path(path)
    data = json.loads(path.read_text())
    return scene_from_dict(data, grid, base_dir=path.parent)
