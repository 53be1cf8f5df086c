"""Bundle directories, manifests, viewer export, and the display transform."""

import json

import numpy as np
import pytest

from relightkit import (
    BundleManifest,
    EnvMap,
    IntrinsicBundle,
    OlatStack,
    display_to_png8,
    downsample_env,
    export_viewer_bundle,
    load_bundle,
    load_olat,
    make_rig,
    read_manifest,
    render_olat,
    render_pbr,
    save_bundle,
    save_olat,
    tonemap_display,
)
from relightkit.bundles import MANIFEST_NAME, TONE_PIPELINE, VIEWER_YAWS
from relightkit.envmap import ENV_CONVENTION
from relightkit.formats import read_png

from conftest import flat_bundle


class TestTonemap:
    def test_zero_maps_to_zero(self):
        assert tonemap_display(np.zeros((2, 2, 3))).max() == 0.0

    def test_monotone(self):
        x = np.linspace(0.0, 20.0, 100)
        d = tonemap_display(x)
        assert np.all(np.diff(d) >= 0.0)
        assert np.all((d >= 0.0) & (d <= 1.0))
        # strictly increasing below saturation
        low = tonemap_display(np.linspace(0.0, 1.0, 50))
        assert np.all(np.diff(low) > 0.0)

    def test_saturates_at_one(self):
        assert float(tonemap_display(np.array([np.e - 1.0]))[0]) == pytest.approx(
            1.0, abs=1e-12)
        assert float(tonemap_display(np.array([100.0]))[0]) == 1.0

    def test_exposure_scales_radiance_before_the_log(self):
        rng = np.random.default_rng(60)
        x = rng.random((4, 4, 3)) * 3.0
        np.testing.assert_array_equal(tonemap_display(x, exposure=2.0),
                                      tonemap_display(2.0 * x, exposure=1.0))

    def test_exposure_validation(self):
        with pytest.raises(ValueError):
            tonemap_display(np.zeros(3), exposure=0.0)
        with pytest.raises(ValueError):
            tonemap_display(np.zeros(3), exposure=np.nan)

    def test_png8_quantization(self):
        d = np.array([0.0, 1.0, 1.0 / 255.0, 0.4 / 255.0, 254.5 / 255.0])
        np.testing.assert_array_equal(display_to_png8(d), [0, 255, 1, 0, 255])
        assert display_to_png8(d).dtype == np.uint8


class TestManifest:
    def test_json_round_trip(self):
        m = BundleManifest(kind="intrinsics", resolution=(32, 32),
                           encoding="pfm", files={"normal": "normal.pfm"},
                           extra={"note": [1, 2, 3]})
        again = BundleManifest.from_json(m.to_json())
        assert again == m

    def test_convention_stamped(self):
        m = BundleManifest(kind="intrinsics", resolution=(8, 8),
                           encoding="pfm", files={})
        assert json.loads(m.to_json())["convention"] == ENV_CONVENTION

    def test_convention_mismatch_rejected(self, tmp_path):
        m = BundleManifest(kind="intrinsics", resolution=(8, 8),
                           encoding="pfm", files={}, convention="other/v0")
        (tmp_path / MANIFEST_NAME).write_text(m.to_json())
        with pytest.raises(ValueError):
            read_manifest(tmp_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_manifest(tmp_path)


class TestBundleIO:
    def test_pfm_round_trip(self, tmp_path, sphere_bundle, random_env):
        d = tmp_path / "b"
        save_bundle(d, sphere_bundle, env=random_env)
        back, env = load_bundle(d)
        # PFM stores float32: round trip is exact at that precision
        np.testing.assert_allclose(back.normal, sphere_bundle.normal,
                                   atol=1e-6)
        np.testing.assert_allclose(back.albedo, sphere_bundle.albedo,
                                   rtol=1e-6)
        np.testing.assert_allclose(back.roughness, sphere_bundle.roughness,
                                   rtol=1e-6)
        np.testing.assert_allclose(back.f0, sphere_bundle.f0, rtol=1e-6)
        np.testing.assert_array_equal(back.fg_mask, sphere_bundle.fg_mask)
        np.testing.assert_allclose(env.texels, random_env.texels, rtol=1e-6)

    def test_env_optional(self, tmp_path, sphere_bundle):
        d = tmp_path / "noenv"
        m = save_bundle(d, sphere_bundle)
        assert "env" not in m.files
        _, env = load_bundle(d)
        assert env is None

    def test_png16_round_trip(self, tmp_path, sphere_bundle):
        d = tmp_path / "q"
        save_bundle(d, sphere_bundle, encoding="png16")
        back, _ = load_bundle(d)
        np.testing.assert_allclose(back.albedo, sphere_bundle.albedo,
                                   atol=1e-4)
        np.testing.assert_allclose(back.roughness, sphere_bundle.roughness,
                                   atol=1e-4)
        np.testing.assert_allclose(back.f0, sphere_bundle.f0, atol=1e-4)
        np.testing.assert_array_equal(back.fg_mask, sphere_bundle.fg_mask)

    def test_png16_normals_renormalized(self, tmp_path, sphere_bundle):
        d = tmp_path / "qn"
        save_bundle(d, sphere_bundle, encoding="png16")
        back, _ = load_bundle(d)
        fg = sphere_bundle.fg_mask
        norms = np.linalg.norm(back.normal[fg], axis=-1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-9)
        cos = np.clip(np.sum(back.normal * sphere_bundle.normal, axis=-1),
                      -1.0, 1.0)[fg]
        assert np.arccos(cos).max() < 1e-3  # radians

    def test_png16_rejects_out_of_range(self, tmp_path):
        bundle = flat_bundle(res=4)
        broken = bundle.normal.copy()
        broken[0, 0, 2] = 1.5  # packs to 1.25, outside unit range
        bad = IntrinsicBundle(normal=broken, albedo=bundle.albedo,
                              roughness=bundle.roughness, f0=bundle.f0,
                              fg_mask=bundle.fg_mask)
        with pytest.raises(ValueError):
            save_bundle(tmp_path / "bad", bad, encoding="png16")

    def test_bad_encoding_rejected(self, tmp_path, sphere_bundle):
        with pytest.raises(ValueError):
            save_bundle(tmp_path / "x", sphere_bundle, encoding="jpeg")

    def test_extra_metadata_preserved(self, tmp_path, sphere_bundle):
        d = tmp_path / "meta"
        save_bundle(d, sphere_bundle, extra={"scene": {"seed": 7}})
        assert read_manifest(d).extra == {"scene": {"seed": 7}}

    def test_kind_mismatch(self, tmp_path):
        rig = make_rig(3)
        stack = OlatStack(rig=rig, images=np.zeros((3, 4, 4, 3)))
        d = tmp_path / "olat"
        save_olat(d, stack)
        with pytest.raises(ValueError):
            load_bundle(d)


class TestOlatIO:
    def test_round_trip(self, tmp_path):
        rig = make_rig(7)
        bundle = flat_bundle(res=4)
        stack = render_olat(bundle, rig, intensity=2.5)
        d = tmp_path / "stack"
        save_olat(d, stack)
        back = load_olat(d)
        assert back.intensity == 2.5
        np.testing.assert_array_equal(back.rig.directions,
                                      stack.rig.directions)
        np.testing.assert_allclose(back.images, stack.images, atol=1e-6)

    def test_wrong_kind(self, tmp_path, sphere_bundle):
        d = tmp_path / "intr"
        save_bundle(d, sphere_bundle)
        with pytest.raises(ValueError):
            load_olat(d)


class TestDownsample:
    def test_energy_preserved(self, random_env):
        small = downsample_env(random_env, 16)
        assert small.height == 16 and small.width == 32
        np.testing.assert_allclose(small.total_energy(),
                                   random_env.total_energy(), rtol=1e-12)

    def test_constant_stays_constant(self):
        small = downsample_env(EnvMap.constant(2.0), 8)
        np.testing.assert_allclose(small.texels, 2.0, rtol=1e-12)

    def test_identity_factor(self, random_env):
        same = downsample_env(random_env, 32)
        np.testing.assert_allclose(same.texels, random_env.texels, rtol=1e-12)

    def test_validation(self, random_env):
        with pytest.raises(ValueError):
            downsample_env(random_env, 0)
        with pytest.raises(ValueError):
            downsample_env(random_env, 12)  # 32 % 12 != 0


class TestViewerExport:
    def test_layout_and_manifest(self, tmp_path, sphere_bundle, random_env):
        d = tmp_path / "viewer"
        m = export_viewer_bundle(d, sphere_bundle, random_env, exposure=1.5)
        for key in ("normal", "albedo", "roughness", "f0", "fg_mask", "env",
                    "env_hdr", "env_specular", "phong_1", "phong_16",
                    "phong_32", "phong_64", "reference_0", "reference_1",
                    "reference_2"):
            assert key in m.files, key
            assert (d / m.files[key]).exists(), key
        assert m.kind == "viewer"
        assert m.extra["tone_pipeline"] == TONE_PIPELINE == "log1p-gamma2.2-v1"
        assert m.extra["exposure"] == 1.5
        assert m.extra["phong_exponents"] == [1, 16, 32, 64]
        assert [r["yaw"] for r in m.extra["references"]] == list(VIEWER_YAWS)
        assert m.extra["env_size"] == [32, 64]
        assert m.extra["specular_env_size"] == [16, 32]

    def test_reference_zero_matches_direct_render(self, tmp_path,
                                                  sphere_bundle, random_env):
        d = tmp_path / "viewer0"
        m = export_viewer_bundle(d, sphere_bundle, random_env)
        ref = read_png(d / m.files["reference_0"])
        want = display_to_png8(tonemap_display(
            render_pbr(sphere_bundle, random_env).pbr))
        np.testing.assert_array_equal(ref, want)

    def test_references_differ_across_yaws(self, tmp_path, sphere_bundle,
                                           random_env):
        d = tmp_path / "viewery"
        m = export_viewer_bundle(d, sphere_bundle, random_env)
        r0 = read_png(d / m.files["reference_0"])
        r1 = read_png(d / m.files["reference_1"])
        assert (r0 != r1).any()

    def test_reproducible_bytes(self, tmp_path, sphere_bundle, random_env):
        d1 = tmp_path / "v1"
        d2 = tmp_path / "v2"
        m = export_viewer_bundle(d1, sphere_bundle, random_env)
        export_viewer_bundle(d2, sphere_bundle, random_env)
        for fname in list(m.files.values()) + [MANIFEST_NAME]:
            assert (d1 / fname).read_bytes() == (d2 / fname).read_bytes(), fname
