import json

import numpy as np
import pytest

from flashcam.errors import SceneCoverageError, UnknownSceneError
from flashcam.scene import (
    Rect,
    Scene,
    ScenePatch,
    builtin_scene,
    default_reflectances,
    load_scene,
    rasterize,
    scene_from_dict,
)
from flashcam.spectral import constant_curve


def make_scene(patches, width=16, height=12, **kwargs):
    return Scene(width, height, tuple(patches),
                 {"gray": constant_curve(0.5)}, **kwargs)


class TestRasterize:
    def test_single_full_frame_patch(self):
        scene = make_scene([ScenePatch(Rect(0, 0, 16, 12), 1.0, "gray")])
        pm = rasterize(scene)
        assert (pm.patch_index == 0).all()
        assert (pm.depth == 1.0).all()

    def test_painters_order_later_wins(self):
        scene = make_scene([
            ScenePatch(Rect(0, 0, 16, 12), 2.0, "gray", "under"),
            ScenePatch(Rect(4, 2, 10, 8), 1.0, "gray", "over"),
        ])
        pm = rasterize(scene)
        assert pm.patch_index[5, 6] == 1
        assert pm.patch_index[0, 0] == 0

    def test_deterministic(self):
        scene = builtin_scene("orchard_day", 64, 48)
        a = rasterize(scene)
        b = rasterize(scene)
        np.testing.assert_array_equal(a.patch_index, b.patch_index)
        np.testing.assert_array_equal(a.emitter_index, b.emitter_index)

    def test_uncovered_scene_rejected(self):
        with pytest.raises(SceneCoverageError):
            make_scene([ScenePatch(Rect(0, 0, 8, 12), 1.0, "gray")])

    def test_region_must_fit_image(self):
        with pytest.raises(ValueError):
            make_scene([ScenePatch(Rect(0, 0, 20, 12), 1.0, "gray")])


class TestBuiltins:
    def test_flat_gray_definition(self):
        scene = builtin_scene("flat_gray")
        assert len(scene.patches) == 1
        refl = scene.reflectances[scene.patches[0].reflectance_id]
        np.testing.assert_array_equal(refl.samples, 0.18 * np.ones(81))

    def test_orchard_day_two_depth_modes(self):
        scene = builtin_scene("orchard_day")
        pm = rasterize(scene)
        depths = np.unique(pm.depth)
        np.testing.assert_array_equal(depths, [1.0, 3.0])
        # Foreground at 1 m, background row at 3 m: 9x flash falloff ratio.
        assert (3.0 / 1.0) ** 2 == 9.0

    def test_emitters_only_in_extreme(self):
        assert builtin_scene("orchard_day").emitters == ()
        extreme = builtin_scene("orchard_extreme")
        assert len(extreme.emitters) >= 1
        assert any(e.label == "sun" for e in extreme.emitters)

    def test_unknown_name(self):
        with pytest.raises(UnknownSceneError):
            builtin_scene("vineyard")

    def test_builtins_valid_at_odd_sizes(self):
        for name in ("orchard_day", "orchard_extreme", "flat_gray"):
            scene = builtin_scene(name, 123, 77)
            rasterize(scene)


class TestSceneJson:
    SCENE = {
        "width": 20,
        "height": 10,
        "camera_speed": 0.25,
        "reflectances": {
            "leaf": {"kind": "gaussian", "center_nm": 550, "sigma_nm": 40,
                     "amplitude": 0.4, "base": 0.1},
            "wall": {"kind": "constant", "value": 0.3},
        },
        "patches": [
            {"region": [0, 0, 20, 10], "depth": 2.5, "reflectance": "wall",
             "label": "back"},
            {"region": [2, 2, 10, 8], "depth": 1.0, "reflectance": "leaf",
             "label": "front"},
        ],
        "emitters": [
            {"region": [15, 0, 19, 3], "cct": 5778, "scale": 9.0, "label": "sun"},
        ],
    }

    def test_load_from_dict(self):
        scene = scene_from_dict(self.SCENE)
        assert scene.width == 20 and scene.height == 10
        assert scene.camera_speed == 0.25
        assert len(scene.patches) == 2
        assert scene.patches[1].depth == 1.0
        assert len(scene.emitters) == 1

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "scene.json"
        path.write_text(json.dumps(self.SCENE))
        scene = load_scene(path)
        pm = rasterize(scene)
        assert pm.patch_index[5, 5] == 1
        assert pm.emitter_index[1, 16] == 0

    def test_unknown_reflectance_rejected(self):
        bad = dict(self.SCENE, patches=[
            {"region": [0, 0, 20, 10], "depth": 1.0, "reflectance": "nope"}])
        with pytest.raises(ValueError):
            scene_from_dict(bad)


class TestDefaults:
    def test_reflectances_within_unit_range(self):
        for name, curve in default_reflectances().items():
            assert curve.samples.min() >= 0.0, name
            assert curve.samples.max() <= 1.0, name

    def test_depth_positive_enforced(self):
        with pytest.raises(ValueError):
            ScenePatch(Rect(0, 0, 4, 4), 0.0, "gray")
