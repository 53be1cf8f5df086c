"""Renderer quadrature: furnace closure, BRDF cross-checks, linearity,
symmetry, and worker-count invariance."""

import numpy as np
import pytest

from relightkit import (
    EnvMap,
    IntrinsicBundle,
    Material,
    SceneSpec,
    TextureSpec,
    generate,
    relight,
    render_diffuse,
    render_pbr,
    render_specular,
)
from relightkit.brdf import eval_specular
from relightkit.envmap import solid_angles, texel_to_dir
from relightkit.utils import VIEW_DIR

from conftest import flat_bundle


def delta_env(row, col, value, height=32, width=64):
    t = np.zeros((height, width, 3))
    t[row, col] = value
    return EnvMap(t)


class TestFurnace:
    def test_flat_plane_recovers_albedo(self, uniform_env):
        bundle = flat_bundle(res=4, albedo=(0.5, 0.5, 0.5), f0=0.0)
        img = render_diffuse(bundle, uniform_env)
        assert np.abs(img - 0.5).max() / 0.5 < 0.01

    def test_sphere_recovers_albedo_everywhere(self, uniform_env):
        # every foreground normal sees the same uniform irradiance
        bundle = flat_bundle(res=3, albedo=(0.25, 0.5, 0.75), f0=0.0)
        rng = np.random.default_rng(6)
        n = rng.normal(size=(3, 3, 3))
        n /= np.linalg.norm(n, axis=-1, keepdims=True)
        tilted = IntrinsicBundle(normal=n, albedo=bundle.albedo,
                                 roughness=bundle.roughness, f0=bundle.f0,
                                 fg_mask=bundle.fg_mask)
        img = render_diffuse(tilted, uniform_env)
        want = np.array([0.25, 0.5, 0.75])
        assert np.abs(img - want).max() / want.min() < 0.01

    def test_black_env_renders_black(self, sphere_bundle):
        out = render_pbr(sphere_bundle, EnvMap.constant(0.0))
        np.testing.assert_array_equal(out.diffuse, 0.0)
        np.testing.assert_array_equal(out.specular, 0.0)
        np.testing.assert_array_equal(out.pbr, 0.0)


class TestSingleTexelOracle:
    """One lit texel: the quadrature reduces to a closed-form single term."""

    def test_diffuse_matches_hand_formula(self):
        bundle = flat_bundle(res=2, albedo=(0.8, 0.6, 0.4))
        r, c = 9, 17
        env = delta_env(r, c, (2.0, 3.0, 4.0))
        img = render_diffuse(bundle, env)
        l = texel_to_dir(r, c, 32, 64)
        omega = solid_angles(32, 64)[r]
        ndl = max(l[2], 0.0)
        want = np.array([0.8, 0.6, 0.4]) / np.pi * ndl * np.array([2.0, 3.0, 4.0]) * omega
        np.testing.assert_allclose(img, np.broadcast_to(want, img.shape),
                                   rtol=1e-12)

    def test_specular_matches_brdf_module(self):
        bundle = flat_bundle(res=2, albedo=(0.0, 0.0, 0.0), roughness=0.37,
                             f0=0.04)
        r, c = 12, 40
        env = delta_env(r, c, (1.5, 1.5, 1.5))
        img = render_specular(bundle, env)
        l = texel_to_dir(r, c, 32, 64)
        omega = solid_angles(32, 64)[r]
        mat = Material(albedo=(0, 0, 0), roughness=0.37, fresnel_f0=0.04)
        fs = eval_specular(np.array([0.0, 0.0, 1.0]), VIEW_DIR, l, mat)
        want = fs * max(l[2], 0.0) * 1.5 * omega
        np.testing.assert_allclose(img, want, rtol=1e-9)

    def test_backfacing_texel_contributes_zero(self):
        bundle = flat_bundle(res=2, albedo=(0.9, 0.9, 0.9), roughness=0.3,
                             f0=0.5)
        out = render_pbr(bundle, delta_env(30, 5, 100.0))  # deep south: n.l = 0
        np.testing.assert_array_equal(out.pbr, 0.0)


class TestLayers:
    def test_pbr_is_exact_sum(self, sphere_bundle, random_env):
        out = render_pbr(sphere_bundle, random_env)
        np.testing.assert_array_equal(out.pbr, out.diffuse + out.specular)

    def test_layers_match_single_calls(self, sphere_bundle, random_env):
        out = render_pbr(sphere_bundle, random_env)
        np.testing.assert_array_equal(out.diffuse,
                                      render_diffuse(sphere_bundle, random_env))
        np.testing.assert_array_equal(out.specular,
                                      render_specular(sphere_bundle, random_env))

    def test_specular_nonnegative(self, sphere_bundle, random_env):
        out = render_pbr(sphere_bundle, random_env)
        assert np.all(out.specular >= 0.0)
        assert np.all(out.pbr >= out.diffuse)

    def test_zero_f0_leaves_small_grazing_residue(self, uniform_env):
        # Schlick keeps the (1 - <v.h>)^5 tail even at f0 = 0; it must be
        # tiny compared to the diffuse signal but is not exactly zero
        bundle = flat_bundle(res=2, albedo=(0.5, 0.5, 0.5), roughness=0.5,
                             f0=0.0)
        out = render_pbr(bundle, uniform_env)
        assert out.specular.max() < 1e-3
        assert out.diffuse.min() > 0.4

    def test_black_material_diffuse_is_zero(self, uniform_env):
        bundle = flat_bundle(res=2, albedo=(0.0, 0.0, 0.0), f0=0.0)
        np.testing.assert_array_equal(render_diffuse(bundle, uniform_env), 0.0)

    def test_background_exactly_zero(self, sphere_bundle, random_env):
        out = render_pbr(sphere_bundle, random_env)
        bg = ~sphere_bundle.fg_mask
        assert bg.any()
        np.testing.assert_array_equal(out.pbr[bg], 0.0)
        np.testing.assert_array_equal(out.diffuse[bg], 0.0)
        np.testing.assert_array_equal(out.specular[bg], 0.0)


class TestMirrorHighlight:
    def test_specular_peak_at_half_vector(self):
        spec_sphere = generate(SceneSpec(
            kind="sphere", resolution=64, seed=3,
            albedo=TextureSpec(value=(0.0, 0.0, 0.0)),
            roughness=TextureSpec(value=1e-3),
            f0=TextureSpec(value=0.04)))
        r, c = 10, 20
        env = delta_env(r, c, 100.0)
        img = render_specular(spec_sphere, env).mean(axis=-1)
        peak = np.unravel_index(np.argmax(img), img.shape)
        l = texel_to_dir(r, c, 32, 64)
        h = (l + VIEW_DIR) / np.linalg.norm(l + VIEW_DIR)
        n_peak = spec_sphere.normal[peak]
        assert np.dot(n_peak, h) > np.cos(np.radians(5.0))


class TestLinearity:
    def test_env_additivity(self, sphere_bundle, random_env, uniform_env):
        combined = EnvMap(random_env.texels + uniform_env.texels)
        lhs = relight(sphere_bundle, combined)
        rhs = relight(sphere_bundle, random_env) + relight(sphere_bundle, uniform_env)
        scale = np.abs(rhs).max()
        assert np.abs(lhs - rhs).max() <= 1e-6 * scale

    def test_power_of_two_scaling_bit_exact(self, sphere_bundle, random_env):
        doubled = EnvMap(2.0 * random_env.texels)
        lhs = relight(sphere_bundle, doubled)
        rhs = 2.0 * relight(sphere_bundle, random_env)
        np.testing.assert_array_equal(lhs, rhs)

    def test_general_scaling_close(self, sphere_bundle, random_env):
        scaled = EnvMap(1.7 * random_env.texels)
        lhs = relight(sphere_bundle, scaled)
        rhs = 1.7 * relight(sphere_bundle, random_env)
        assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(rhs).max())


class TestSymmetry:
    def test_mirror_env_and_normals(self, sphere_bundle, random_env):
        # reflecting scene and lighting through the x = 0 plane fixes the
        # view direction, so every pixel must shade identically
        mirrored_env = EnvMap(random_env.texels[:, ::-1, :].copy())
        flipped = IntrinsicBundle(
            normal=sphere_bundle.normal * np.array([-1.0, 1.0, 1.0]),
            albedo=sphere_bundle.albedo,
            roughness=sphere_bundle.roughness,
            f0=sphere_bundle.f0,
            fg_mask=sphere_bundle.fg_mask)
        base = render_pbr(sphere_bundle, random_env).pbr
        mirr = render_pbr(flipped, mirrored_env).pbr
        assert np.abs(base - mirr).max() <= 1e-5 * max(1.0, np.abs(base).max())


class TestWorkers:
    def test_worker_count_does_not_change_bits(self, sphere_bundle, random_env):
        one = render_pbr(sphere_bundle, random_env, workers=1)
        two = render_pbr(sphere_bundle, random_env, workers=2)
        np.testing.assert_array_equal(one.pbr, two.pbr)
        np.testing.assert_array_equal(one.diffuse, two.diffuse)

    def test_more_workers_than_rows(self, random_env):
        bundle = flat_bundle(res=4)
        one = render_pbr(bundle, random_env, workers=1)
        many = render_pbr(bundle, random_env, workers=16)
        np.testing.assert_array_equal(one.pbr, many.pbr)

    def test_invalid_workers(self, sphere_bundle, random_env):
        with pytest.raises(ValueError):
            render_pbr(sphere_bundle, random_env, workers=0)


class TestEnvStride:
    def test_stride_one_is_default(self, sphere_bundle, random_env):
        full = render_pbr(sphere_bundle, random_env)
        strided = render_pbr(sphere_bundle, random_env, env_stride=1)
        np.testing.assert_array_equal(full.pbr, strided.pbr)

    def test_preview_stride_is_close(self, sphere_bundle, random_env):
        full = render_pbr(sphere_bundle, random_env).pbr
        fast = render_pbr(sphere_bundle, random_env, env_stride=4).pbr
        fg = sphere_bundle.fg_mask
        rel = np.abs(fast[fg] - full[fg]).mean() / full[fg].mean()
        assert rel < 0.25

    def test_invalid_stride(self, sphere_bundle, random_env):
        with pytest.raises(ValueError):
            render_pbr(sphere_bundle, random_env, env_stride=0)


class TestBundleValidation:
    def test_shape_mismatches_rejected(self):
        good = flat_bundle(res=4)
        with pytest.raises(ValueError):
            IntrinsicBundle(normal=good.normal[:2], albedo=good.albedo,
                            roughness=good.roughness, f0=good.f0,
                            fg_mask=good.fg_mask)
        with pytest.raises(ValueError):
            IntrinsicBundle(normal=good.normal, albedo=good.albedo,
                            roughness=good.roughness[..., None], f0=good.f0,
                            fg_mask=good.fg_mask)

    def test_non_finite_rejected(self):
        good = flat_bundle(res=4)
        bad_albedo = good.albedo.copy()
        bad_albedo[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            IntrinsicBundle(normal=good.normal, albedo=bad_albedo,
                            roughness=good.roughness, f0=good.f0,
                            fg_mask=good.fg_mask)

    def test_relight_is_pbr_layer(self, sphere_bundle, random_env):
        np.testing.assert_array_equal(
            relight(sphere_bundle, random_env),
            render_pbr(sphere_bundle, random_env).pbr)
