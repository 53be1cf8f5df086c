"""relightkit: physically-based relighting and a synthetic light stage.

The package renders intrinsic image bundles (normals, albedo, roughness,
specular reflectance, foreground mask) under equirectangular environment
lighting with an energy-conserving microfacet model, pre-convolves
environments into diffuse/gloss shading maps, simulates one-light-at-a-time
capture rigs with photometric-stereo recovery, samples inpainting masks, and
scores results with the training-loss metric stack.
"""

from .brdf import (
    ROUGHNESS_FLOOR,
    SPECULAR_DENOM_EPS,
    Material,
    eval_brdf,
    eval_diffuse,
    eval_specular,
    ggx_distribution,
    schlick_fresnel,
    smith_geometry,
)
from .bundles import (
    BundleManifest,
    display_to_png8,
    downsample_env,
    export_viewer_bundle,
    load_bundle,
    load_olat,
    read_manifest,
    save_bundle,
    save_olat,
    tonemap_display,
)
from .envmap import (
    DEFAULT_ENV_HEIGHT,
    DEFAULT_ENV_WIDTH,
    ENV_CONVENTION,
    PHONG_EXPONENTS,
    ConvolvedEnvMap,
    EnvMap,
    convolve_phong,
    diffuse_shading,
    dir_to_texel,
    rotate_env,
    sample_env,
    solid_angles,
    texel_dirs,
    texel_to_dir,
)
from .formats import (
    ChecksumError,
    FormatError,
    HeaderError,
    PayloadError,
    UnsupportedError,
    read_hdr,
    read_pfm,
    read_png,
    write_hdr,
    write_pfm,
    write_png,
)
from .intrinsics import Diagnostics, recover_albedo, validate_bundle
from .lightstage import (
    LightRig,
    OlatStack,
    RigWeights,
    StereoResult,
    composite,
    make_rig,
    photometric_stereo,
    project_env_to_rig,
    render_olat,
)
from .masks import (
    Mask,
    MaskPolicy,
    apply_mask,
    gen_free_form,
    gen_outpaint,
    gen_patch,
    sample_mask,
    stroke_mask,
)
from .metrics import (
    LOSS_WEIGHTS,
    LossReport,
    composite_loss,
    l1,
    log_decode,
    log_encode,
    mae,
    mse,
    specular_weighted_l1,
    ssim,
)
from .render import (
    IntrinsicBundle,
    RenderOutput,
    relight,
    render_diffuse,
    render_pbr,
    render_specular,
)
from .scenes import SceneSpec, TextureSpec, generate

__version__ = "0.1.0"

__all__ = [
    "BundleManifest",
    "ChecksumError",
    "ConvolvedEnvMap",
    "DEFAULT_ENV_HEIGHT",
    "DEFAULT_ENV_WIDTH",
    "Diagnostics",
    "ENV_CONVENTION",
    "EnvMap",
    "FormatError",
    "HeaderError",
    "IntrinsicBundle",
    "LOSS_WEIGHTS",
    "LightRig",
    "LossReport",
    "Mask",
    "MaskPolicy",
    "Material",
    "OlatStack",
    "PHONG_EXPONENTS",
    "PayloadError",
    "ROUGHNESS_FLOOR",
    "RenderOutput",
    "RigWeights",
    "SPECULAR_DENOM_EPS",
    "SceneSpec",
    "StereoResult",
    "TextureSpec",
    "UnsupportedError",
    "apply_mask",
    "composite",
    "composite_loss",
    "convolve_phong",
    "diffuse_shading",
    "dir_to_texel",
    "display_to_png8",
    "downsample_env",
    "eval_brdf",
    "eval_diffuse",
    "eval_specular",
    "export_viewer_bundle",
    "gen_free_form",
    "gen_outpaint",
    "gen_patch",
    "generate",
    "ggx_distribution",
    "l1",
    "load_bundle",
    "load_olat",
    "log_decode",
    "log_encode",
    "mae",
    "make_rig",
    "mse",
    "photometric_stereo",
    "project_env_to_rig",
    "read_hdr",
    "read_manifest",
    "read_pfm",
    "read_png",
    "recover_albedo",
    "relight",
    "render_diffuse",
    "render_olat",
    "render_pbr",
    "render_specular",
    "rotate_env",
    "sample_env",
    "sample_mask",
    "save_bundle",
    "save_olat",
    "schlick_fresnel",
    "smith_geometry",
    "solid_angles",
    "specular_weighted_l1",
    "ssim",
    "stroke_mask",
    "texel_dirs",
    "texel_to_dir",
    "tonemap_display",
    "validate_bundle",
    "write_hdr",
    "write_pfm",
    "write_png",
    "__version__",
]
