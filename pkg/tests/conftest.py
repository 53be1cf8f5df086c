"""Shared fixtures: small deterministic scenes and environments."""

from __future__ import annotations

import numpy as np
import pytest

from relightkit import EnvMap, IntrinsicBundle, SceneSpec, TextureSpec, generate


@pytest.fixture(scope="session")
def uniform_env() -> EnvMap:
    return EnvMap.constant(1.0)


@pytest.fixture(scope="session")
def random_env() -> EnvMap:
    rng = np.random.default_rng(20240814)
    return EnvMap(rng.random((32, 64, 3)) ** 2 * 2.0)


@pytest.fixture(scope="session")
def sphere_bundle() -> IntrinsicBundle:
    return generate(SceneSpec(kind="sphere", resolution=32, seed=7))


@pytest.fixture(scope="session")
def heightfield_bundle() -> IntrinsicBundle:
    return generate(SceneSpec(kind="heightfield", resolution=32, seed=11))


@pytest.fixture(scope="session")
def lambertian_sphere() -> IntrinsicBundle:
    """Uniform-albedo sphere with the specular channel switched off."""
    base = generate(SceneSpec(
        kind="sphere", resolution=32, seed=7,
        albedo=TextureSpec(kind="constant", value=(0.6, 0.5, 0.4))))
    return IntrinsicBundle(
        normal=base.normal,
        albedo=base.albedo,
        roughness=base.roughness,
        f0=np.zeros_like(base.f0),
        fg_mask=base.fg_mask,
    )


def flat_bundle(res: int = 4, albedo=(0.5, 0.5, 0.5), roughness: float = 0.5,
                f0: float = 0.0) -> IntrinsicBundle:
    """All-foreground plane facing the camera."""
    normal = np.zeros((res, res, 3))
    normal[..., 2] = 1.0
    return IntrinsicBundle(
        normal=normal,
        albedo=np.broadcast_to(np.asarray(albedo, dtype=np.float64),
                               (res, res, 3)).copy(),
        roughness=np.full((res, res), roughness),
        f0=np.full((res, res), f0),
        fg_mask=np.ones((res, res), dtype=bool),
    )
