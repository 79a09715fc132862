"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Criteria are numbered 1-10; every tolerance is pinned here.
"""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from flashcam.capture import (
    Image,
    ExposureSettings,
    expose,
    flash_overlap,
    motion_blur_extent,
    schedule_stereo,
)
from flashcam.cli import main as cli_main
from flashcam.errors import ContainmentError
from flashcam.harness import DaySweepConfig, run_day_sweep, run_extreme
from flashcam.illumination import FlashUnit, daylight_irradiance, flash_irradiance
from flashcam.metrics import QualityReport, SsimParams, psnr, ssim
from flashcam.illumination import DaylightModel
from flashcam.ppm import read_ppm, write_ppm
from flashcam.scene import builtin_scene, rasterize
from flashcam.spectral import (
    PLANCK_CONSTANT,
    SPEED_OF_LIGHT,
    OpticsModel,
    SensorModel,
    SpectralCurve,
    constant_curve,
    pixel_signal,
    trapezoid_nm,
)

from test_metrics import ssim_bruteforce


@contextmanager
def criterion(number: int, description: str):
    try:
        yield
    except Exception:
        print(f"ACCEPTANCE {number}: FAIL - {description}")
        raise
    print(f"ACCEPTANCE {number}: PASS - {description}")


def unit_sensor(k=1.0, pitch=1.0):
    qe = {ch: constant_curve(1.0) for ch in "RGB"}
    return SensorModel(pixel_pitch=pitch, normalization_k=k,
                       quantum_efficiency=qe)


def random_quantized(rng, h=16, w=16) -> Image:
    return Image(w, h, rng.integers(0, 256, (h, w, 3), dtype=np.uint8), "quantized")


@pytest.fixture(scope="module")
def default_sweep():
    start = time.perf_counter()
    result = run_day_sweep(DaySweepConfig())
    elapsed = time.perf_counter() - start
    return result, elapsed


def test_criterion_1_pixel_signal_quadrature():
    with criterion(1, "Eq-quadrature analytic case, T-linearity, 1/N^2 law"):
        start = time.perf_counter()
        sensor = unit_sensor()
        optics = OpticsModel(f_number=2.4)
        flat = constant_curve(1.0)
        # 5 nm grid vs analytic value and a 0.1 nm quadrature oracle.
        got = pixel_signal(1.0, sensor, optics, flat, flat, "R") * 2.4 ** 2
        analytic = ((780e-9) ** 2 - (380e-9) ** 2) / (
            2 * PLANCK_CONSTANT * SPEED_OF_LIGHT)
        fine = np.arange(380.0, 780.0 + 0.05, 0.1) * 1e-9
        oracle = float(np.trapezoid(fine / (PLANCK_CONSTANT * SPEED_OF_LIGHT), fine))
        assert abs(got - analytic) / analytic <= 1e-4
        assert abs(got - oracle) / oracle <= 1e-4

        rng = np.random.default_rng(17)
        for _ in range(100):
            sensor = unit_sensor(k=float(rng.uniform(0.1, 10.0)),
                                 pitch=float(rng.uniform(1e-6, 1e-5)))
            irr = SpectralCurve(380.0, 5.0, rng.uniform(0.0, 2.0, 81))
            refl = SpectralCurve(380.0, 5.0, rng.uniform(0.0, 1.0, 81))
            t = float(rng.uniform(1e-6, 1e-2))
            n = float(rng.uniform(2.4, 16.0))
            base = pixel_signal(t, sensor, OpticsModel(f_number=n), irr, refl, "G")
            assert pixel_signal(2 * t, sensor, OpticsModel(f_number=n),
                                irr, refl, "G") == pytest.approx(2 * base, rel=1e-12)
            assert pixel_signal(t, sensor, OpticsModel(f_number=2 * n),
                                irr, refl, "G") == pytest.approx(base / 4, rel=1e-12)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"criterion 1 took {elapsed:.2f}s"


def test_criterion_2_ssim_oracle_equivalence():
    with criterion(2, "SSIM brute-force equivalence, identity, symmetry, constant case"):
        rng = np.random.default_rng(23)
        params = SsimParams()
        for _ in range(50):
            x, y = random_quantized(rng), random_quantized(rng)
            assert ssim(x, y, params) == pytest.approx(
                ssim_bruteforce(x, y, params), abs=1e-10)
            assert ssim(x, y, params) == ssim(y, x, params)
        x = random_quantized(rng)
        assert ssim(x, x, params) == 1.0
        c100 = Image(16, 16, np.full((16, 16, 3), 100, dtype=np.uint8), "quantized")
        c200 = Image(16, 16, np.full((16, 16, 3), 200, dtype=np.uint8), "quantized")
        assert ssim(c100, c200, params) == pytest.approx(0.8001, abs=1e-4)


def test_criterion_3_psnr():
    with criterion(3, "PSNR +16-shift value and identical-image sentinel"):
        rng = np.random.default_rng(29)
        base = rng.integers(0, 224, (16, 16, 3), dtype=np.uint8)
        x = Image(16, 16, base, "quantized")
        y = Image(16, 16, (base + 16).astype(np.uint8), "quantized")
        assert psnr(x, y) == pytest.approx(24.05, abs=0.01)
        assert psnr(x, x) == math.inf
        from flashcam.metrics import consistency_series
        report = consistency_series(x, [(0.0, "AL", x)])
        assert report.rows[0].psnr_db == 99.0
        assert "99.0" in report.to_csv()


def test_criterion_4_inverse_square():
    with criterion(4, "Inverse-square falloff: exact 4x at 2d, 9x fg/bg through pipeline"):
        flash = FlashUnit()
        for d in (0.5, 1.0, 1.25):
            near = flash_irradiance(flash, d)
            far = flash_irradiance(flash, 2 * d)
            np.testing.assert_array_equal(near.samples, 4.0 * far.samples)

        scene = builtin_scene("orchard_day")
        sensor = SensorModel()
        dark = daylight_irradiance(DaylightModel(), 360.0)
        settings = ExposureSettings(20e-6)
        sched = schedule_stereo(20.0, flash, settings.shutter_time)
        img = expose(scene, dark, flash, settings, sched, sensor, OpticsModel())
        pm = rasterize(scene)
        fg = np.array([p.label == "foliage" for p in scene.patches])[pm.patch_index]
        bg = np.array([p.label == "background" for p in scene.patches])[pm.patch_index]
        ratio = img.data[fg].mean() / img.data[bg].mean()
        assert ratio == pytest.approx(9.0, rel=0.01)


def test_criterion_5_day_sweep_consistency(default_sweep):
    with criterion(5, "Day-sweep: AL >= 99 / spread < 1, NL <= 80 / wide spread, PSNR"):
        result, elapsed = default_sweep
        assert len(result.times) == 19
        frame = result.frames[(result.times[0], "AL")]
        assert (frame.width, frame.height) == (256, 192)
        assert elapsed < 30.0, f"19-step sweep took {elapsed:.1f}s"

        # Default config premise: flash at least 100x ambient at 1 m.
        config = DaySweepConfig()
        flash_total = trapezoid_nm(flash_irradiance(config.flash, 1.0))
        ambient_total = trapezoid_nm(daylight_irradiance(config.day, 0.0))
        assert flash_total / ambient_total >= 100.0

        al = [r.ssim_pct for r in result.reports["AL"].rows]
        nl = [r.ssim_pct for r in result.reports["NL"].rows]
        al_spread = max(al) - min(al)
        nl_spread = max(nl) - min(nl)
        assert min(al) >= 99.0
        assert al_spread < 1.0
        assert nl[-1] <= 80.0
        assert nl_spread > 10 * al_spread
        al_psnr = np.mean([r.psnr_db for r in result.reports["AL"].rows])
        nl_psnr = np.mean([r.psnr_db for r in result.reports["NL"].rows])
        assert al_psnr > nl_psnr

        again = run_day_sweep(DaySweepConfig())
        assert again.reports == result.reports
        for key, img in result.frames.items():
            np.testing.assert_array_equal(img.data, again.frames[key].data)


def test_criterion_6_extreme_scenario():
    with criterion(6, "Extreme scene: AL saturation confined, NL worse, AL contrast wins"):
        result = run_extreme(DaySweepConfig(scene="orchard_extreme"))
        al = result.stats["AL"]
        nl = result.stats["NL"]
        assert al.saturated_fraction <= result.sun_area_fraction + 0.01
        assert nl.saturated_fraction > al.saturated_fraction
        assert al.foreground_contrast > nl.foreground_contrast


def test_criterion_7_sync_feasibility():
    with criterion(7, "Trigger feasibility and documented rejections"):
        sched = schedule_stereo(20.0, FlashUnit(pulse_duration=250e-6), 11e-6)
        overlap = flash_overlap(sched.shutter_window, sched.flash_window)
        # 119.5 us and 130.5 us are not exact binary fractions; exact means
        # to the last ulp of the subtraction.
        assert overlap == pytest.approx(11e-6, abs=1e-17)
        with pytest.raises(ValueError, match="rate"):
            schedule_stereo(25.0, FlashUnit(), 11e-6)
        with pytest.raises(ContainmentError, match="contained"):
            schedule_stereo(20.0, FlashUnit(pulse_duration=250e-6), 300e-6)


def test_criterion_8_motion_blur():
    with criterion(8, "Motion-blur extents: 4.06 px at 10 ms, sub-0.01 px at 11 us"):
        optics = OpticsModel(focal_length=3.5e-3)
        sensor = SensorModel(pixel_pitch=3.45e-6)
        slow = motion_blur_extent(0.4, 10e-3, 1.0, optics, sensor)
        fast = motion_blur_extent(0.4, 11e-6, 1.0, optics, sensor)
        assert slow == pytest.approx(4.06, abs=0.01)
        assert fast < 0.01


def test_criterion_9_file_format_roundtrips(tmp_path):
    with criterion(9, "PPM and report CSV/JSON round trips"):
        rng = np.random.default_rng(31)
        path = tmp_path / "roundtrip.ppm"
        for _ in range(100):
            w = int(rng.integers(1, 32))
            h = int(rng.integers(1, 32))
            img = Image(w, h, rng.integers(0, 256, (h, w, 3), dtype=np.uint8),
                        "quantized")
            write_ppm(img, path)
            again = read_ppm(path)
            np.testing.assert_array_equal(again.data, img.data)

        from flashcam.metrics import consistency_series
        ref = random_quantized(rng)
        frames = [(20.0 * i, cond, random_quantized(rng))
                  for i, cond in enumerate(("AL", "NL", "HDR"))]
        report = consistency_series(ref, frames, scene_scales=[1.0, 0.7, 0.3])
        assert QualityReport.from_csv(report.to_csv(),
                                      reference_id=report.reference_id) == report
        assert QualityReport.from_json(report.to_json(),
                                       reference_id=report.reference_id) == report


def test_criterion_10_end_to_end_determinism(tmp_path):
    with criterion(10, "simulate twice with one seed: byte-identical frames and reports"):
        config = {"scene": "orchard_day", "width": 128, "height": 96,
                  "interval_min": 60, "seed": 11}
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config))
        outs = []
        for name in ("run_a", "run_b"):
            out_dir = tmp_path / name
            code = cli_main(["simulate", str(config_path), str(out_dir),
                             "--no-figures"])
            assert code == 0
            outs.append(out_dir)
        a, b = outs
        frames_a = sorted((a / "frames").glob("*.ppm"))
        frames_b = sorted((b / "frames").glob("*.ppm"))
        assert [p.name for p in frames_a] == [p.name for p in frames_b]
        assert len(frames_a) == 3 * 7
        for pa, pb in zip(frames_a, frames_b):
            assert pa.read_bytes() == pb.read_bytes(), pa.name
        for report in ("report.csv", "report.json", "saturation.csv"):
            assert (a / report).read_bytes() == (b / report).read_bytes()
