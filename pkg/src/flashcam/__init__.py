"""flashcam: radiometric simulation of a flash-synchronized camera system
and image-consistency analysis (SSIM / PSNR time series).
"""

from .capture import (
    MIN_SHUTTER_TIME,
    AutoExposeResult,
    ExposureSettings,
    Image,
    TriggerSchedule,
    apply_motion_blur,
    auto_expose,
    blur_extent_map,
    expose,
    flash_overlap,
    hdr_merge,
    motion_blur_extent,
    quantize,
    schedule_stereo,
)
from .errors import (
    ConfigError,
    ContainmentError,
    GridMismatchError,
    InvalidGridError,
    PpmFormatError,
    SceneCoverageError,
    UnknownSceneError,
)
from .harness import (
    DaySweepConfig,
    ExtremeResult,
    SweepResult,
    analyze_directory,
    calibrate_normalization,
    load_config,
    run_day_sweep,
    run_extreme,
)
from .illumination import (
    DaylightModel,
    FlashUnit,
    blackbody_spd,
    combined_irradiance,
    daylight_irradiance,
    flash_irradiance,
)
from .metrics import (
    PSNR_CAP_DB,
    QualityReport,
    ReportRow,
    SsimParams,
    consistency_series,
    psnr,
    ssim,
)
from .ppm import read_ppm, write_ppm
from .scene import (
    EmitterPatch,
    Rect,
    Scene,
    ScenePatch,
    builtin_scene,
    load_scene,
    rasterize,
)
from .spectral import (
    DEFAULT_GRID,
    CHANNELS,
    OpticsModel,
    PhysicalConstants,
    SensorModel,
    SpectralCurve,
    WavelengthGrid,
    pixel_signal,
    resample,
)

__version__ = "0.1.0"
