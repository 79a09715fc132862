import json

import numpy as np
import pytest

from flashcam.errors import ConfigError
from flashcam.harness import (
    DaySweepConfig,
    analyze_directory,
    calibrate_normalization,
    config_from_dict,
    load_config,
    run_day_sweep,
    run_extreme,
)
from flashcam.illumination import DaylightModel, FlashUnit
from flashcam.metrics import SsimParams
from flashcam.ppm import write_ppm
from flashcam.scene import builtin_scene
from flashcam.spectral import OpticsModel, SensorModel


def small_config(**kwargs):
    defaults = dict(width=48, height=36, interval_min=60.0, seed=7)
    defaults.update(kwargs)
    return DaySweepConfig(**defaults)


@pytest.fixture(scope="module")
def sweep_result():
    return run_day_sweep(small_config())


class TestDaySweep:
    def test_one_frame_per_time_and_condition(self, sweep_result):
        assert len(sweep_result.times) == 7  # 0..360 every 60 min
        assert set(sweep_result.conditions) == {"AL", "NL", "HDR"}
        assert len(sweep_result.frames) == 21

    def test_reports_align_with_frames(self, sweep_result):
        for cond in sweep_result.conditions:
            rows = sweep_result.reports[cond].rows
            assert [r.time_min for r in rows] == list(sweep_result.times)
            assert all(r.condition == cond for r in rows)

    def test_first_rows_are_reference_rows(self, sweep_result):
        for cond in sweep_result.conditions:
            first = sweep_result.reports[cond].rows[0]
            assert first.ssim_pct == 100.0
            assert first.psnr_db == 99.0

    def test_al_consistent_nl_drifts(self, sweep_result):
        al = [r.ssim_pct for r in sweep_result.reports["AL"].rows]
        nl = [r.ssim_pct for r in sweep_result.reports["NL"].rows]
        assert min(al) >= 99.0
        assert max(al) - min(al) < 1.0
        assert nl[-1] <= 80.0
        assert (max(nl) - min(nl)) > 10 * (max(al) - min(al))

    def test_al_psnr_beats_nl(self, sweep_result):
        al = np.mean([r.psnr_db for r in sweep_result.reports["AL"].rows])
        nl = np.mean([r.psnr_db for r in sweep_result.reports["NL"].rows])
        assert al > nl

    def test_deterministic_given_seed(self, sweep_result):
        again = run_day_sweep(small_config())
        for key, frame in sweep_result.frames.items():
            np.testing.assert_array_equal(frame.data, again.frames[key].data)
        assert again.reports == sweep_result.reports

    def test_condition_independence(self, sweep_result):
        partial = run_day_sweep(small_config(conditions=("AL", "NL")))
        assert partial.reports["AL"] == sweep_result.reports["AL"]
        assert partial.reports["NL"] == sweep_result.reports["NL"]

    def test_zero_ambient_al_frames_bit_identical(self):
        config = small_config(
            day=DaylightModel(noon_illuminance=0.0),
            sensor=SensorModel(normalization_k=7.8e5),
            conditions=("AL",),
        )
        result = run_day_sweep(config)
        first = result.frames[(result.times[0], "AL")]
        for t in result.times:
            np.testing.assert_array_equal(result.frames[(t, "AL")].data, first.data)
        assert all(r.ssim_pct == 100.0 for r in result.reports["AL"].rows)

    def test_more_flash_power_never_hurts_al_consistency(self, sweep_result):
        boosted = run_day_sweep(small_config(
            flash=FlashUnit(radiant_power=2400.0, beam_gain=1.2)))
        base_min = min(r.ssim_pct for r in sweep_result.reports["AL"].rows)
        boosted_min = min(r.ssim_pct for r in boosted.reports["AL"].rows)
        assert boosted_min >= base_min - 1e-9

    def test_merged_rows_ordered(self, sweep_result):
        rows = sweep_result.merged_rows()
        keys = [(r.time_min, r.condition) for r in rows]
        assert keys == sorted(keys, key=lambda k: (k[0], ("AL", "NL", "HDR").index(k[1])))

    def test_saturation_stats_present(self, sweep_result):
        assert set(sweep_result.saturation_stats) == set(sweep_result.frames)
        assert all(0.0 <= v <= 1.0 for v in sweep_result.saturation_stats.values())

    def test_fixed_al_shutter_honored(self):
        result = run_day_sweep(small_config(al_shutter_time=20e-6,
                                            conditions=("AL",)))
        assert result.al_settings.shutter_time == 20e-6


class TestCalibration:
    def test_reference_patch_hits_half_scale(self):
        scene = builtin_scene("orchard_day", 48, 36)
        sensor = calibrate_normalization(scene, DaylightModel(), SensorModel(),
                                         OpticsModel())
        from flashcam.capture import ExposureSettings, expose
        from flashcam.illumination import daylight_irradiance
        from flashcam.scene import rasterize
        ambient = daylight_irradiance(DaylightModel(), 0.0)
        img = expose(scene, ambient, None, ExposureSettings(1e-3), None,
                     sensor, OpticsModel())
        pm = rasterize(scene)
        fg = pm.depth <= scene.min_depth
        assert img.data[fg].max() == pytest.approx(0.5, rel=1e-9)

    def test_dark_reference_rejected(self):
        scene = builtin_scene("orchard_day", 16, 12)
        with pytest.raises(ConfigError):
            calibrate_normalization(scene, DaylightModel(noon_illuminance=0.0),
                                    SensorModel(), OpticsModel())


@pytest.fixture(scope="module")
def extreme_result():
    return run_extreme(small_config(scene="orchard_extreme"))


class TestExtreme:
    def test_al_saturation_confined_to_sun(self, extreme_result):
        assert extreme_result.stats["AL"].saturated_fraction <= \
            extreme_result.sun_area_fraction + 0.01

    def test_nl_saturates_more_than_al(self, extreme_result):
        assert extreme_result.stats["NL"].saturated_fraction > \
            extreme_result.stats["AL"].saturated_fraction

    def test_al_preserves_foreground_contrast(self, extreme_result):
        assert extreme_result.stats["AL"].foreground_contrast > \
            extreme_result.stats["NL"].foreground_contrast

    def test_requires_emitter_scene(self):
        with pytest.raises(ValueError):
            run_extreme(small_config(scene="orchard_day"))


class TestAnalyzeDirectory:
    def test_reference_only(self, tmp_path):
        rng = np.random.default_rng(0)
        ref = _write_random_ppm(tmp_path / "ref.ppm", rng)
        report = analyze_directory(tmp_path / "ref.ppm", [tmp_path / "ref.ppm"])
        assert len(report.rows) == 1
        assert report.rows[0].ssim_pct == 100.0

    def test_reference_plus_copy(self, tmp_path):
        rng = np.random.default_rng(1)
        ref = _write_random_ppm(tmp_path / "ref.ppm", rng)
        write_ppm(ref, tmp_path / "copy.ppm")
        report = analyze_directory(tmp_path / "ref.ppm",
                                   [tmp_path / "ref.ppm", tmp_path / "copy.ppm"])
        assert [r.ssim_pct for r in report.rows] == [100.0, 100.0]
        assert [r.time_min for r in report.rows] == [0.0, 1.0]

    def test_shifted_copy_psnr(self, tmp_path):
        rng = np.random.default_rng(2)
        ref = _write_random_ppm(tmp_path / "ref.ppm", rng, low=0, high=224)
        from flashcam.capture import Image
        shifted = Image(ref.width, ref.height,
                        (ref.data.astype(int) + 16).astype(np.uint8), "quantized")
        write_ppm(shifted, tmp_path / "shift.ppm")
        report = analyze_directory(tmp_path / "ref.ppm", [tmp_path / "shift.ppm"])
        assert report.rows[0].psnr_db == pytest.approx(24.05, abs=0.01)

    def test_dimension_mismatch_names_file(self, tmp_path):
        rng = np.random.default_rng(3)
        _write_random_ppm(tmp_path / "ref.ppm", rng)
        _write_random_ppm(tmp_path / "odd.ppm", rng, w=8, h=8)
        with pytest.raises(ValueError, match="odd.ppm"):
            analyze_directory(tmp_path / "ref.ppm", [tmp_path / "odd.ppm"])

    def test_missing_file_mentions_path(self, tmp_path):
        rng = np.random.default_rng(4)
        _write_random_ppm(tmp_path / "ref.ppm", rng)
        with pytest.raises(OSError):
            analyze_directory(tmp_path / "ref.ppm", [tmp_path / "nope.ppm"])


def _write_random_ppm(path, rng, w=16, h=16, low=0, high=256):
    from flashcam.capture import Image
    img = Image(w, h, rng.integers(low, high, (h, w, 3), dtype=np.uint8).astype(np.uint8),
                "quantized")
    write_ppm(img, path)
    return img


class TestConfigLoading:
    def test_defaults(self):
        config = config_from_dict({})
        assert config.interval_min == 20.0
        assert config.conditions == ("AL", "NL", "HDR")
        assert config.flash.beam_gain == 1.2

    def test_field_level_error_messages(self):
        with pytest.raises(ConfigError, match="day"):
            config_from_dict({"day": {"noon_cct": 100.0}})
        with pytest.raises(ConfigError, match="unknown field"):
            config_from_dict({"speed": 3})
        with pytest.raises(ConfigError, match="flash.watts"):
            config_from_dict({"flash": {"watts": 100}})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="missing.json"):
            load_config(tmp_path / "missing.json")

    def test_load_file_with_overrides(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({
            "scene": "flat_gray", "width": 32, "height": 24,
            "interval_min": 120, "seed": 3, "conditions": ["AL", "NL"],
            "sensor": {"normalization_k": 7.8e5},
            "flash": {"radiant_power": 900.0},
        }))
        config = load_config(path)
        assert config.scene == "flat_gray"
        assert config.sensor.normalization_k == 7.8e5
        assert config.flash.radiant_power == 900.0
        result = run_day_sweep(config)
        assert len(result.times) == 4

    def test_conditions_validated(self):
        with pytest.raises(ConfigError):
            config_from_dict({"conditions": ["XY"]})
        with pytest.raises(ConfigError):
            config_from_dict({"conditions": []})

    def test_ssim_window_plumbs_through(self):
        config = config_from_dict({"ssim_window": 4})
        assert config.ssim_params == SsimParams(window=4)
