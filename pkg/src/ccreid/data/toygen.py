"""Seeded synthetic multi-camera toy dataset.

Each "vehicle" is a procedurally drawn sprite (body, window, wheels and an
identity-coded marking strip) whose appearance is a pure function of
(vehicle_id, seed).  Each camera applies a style transform -- background
texture, hue rotation, additive brightness offset, resolution reduction --
that is a pure function of (camera_id, seed).  The same (identity, index)
therefore differs between two cameras only by the style transform, which
makes cross-camera bias measurable and translation quality checkable.

Brightness bookkeeping: backgrounds are normalized to mean 0.5 per channel
and the hue rotation is a rotation about the gray axis (it preserves
R+G+B per pixel), so the mean pixel brightness of a camera's images equals
the shared content mean plus that camera's brightness offset.  Palette and
offset bounds are chosen so no pixel clips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ccreid.data.manifest import DatasetManifest, ImageRecord, save_manifest
from ccreid.errors import ValidationError

N_TEXTURES = 4

# Gamut margins: content channels stay within [0.5 - CHROMA_MAX, 0.5 + CHROMA_MAX]
# after hue rotation, plus at most BRIGHTNESS_MAX from the camera offset.
CHROMA_MAX = 0.38
BRIGHTNESS_MAX = 0.10


@dataclass(frozen=True)
class CameraStyle:
    """Per-camera style parameters."""

    brightness_offset: float = 0.0  # additive, in [0,1] pixel units
    hue_degrees: float = 0.0        # rotation about the gray axis
    background_texture: int = 0     # index into the texture bank
    downscale: int = 1              # integer resolution-reduction factor


@dataclass(frozen=True)
class ToyGenSpec:
    """Parameters of one toy dataset generation run."""

    n_identities: int = 32
    n_cameras: int = 4
    images_per_id_per_camera: int = 2
    image_size: int = 64
    seed: int = 0
    camera_styles: tuple[CameraStyle, ...] | None = None

    def resolved_styles(self) -> tuple[CameraStyle, ...]:
        if self.camera_styles is not None:
            if len(self.camera_styles) != self.n_cameras:
                raise ValidationError(
                    f"{len(self.camera_styles)} camera styles for "
                    f"{self.n_cameras} cameras"
                )
            return tuple(self.camera_styles)
        return default_camera_styles(self.n_cameras, self.seed)


def default_camera_styles(n_cameras: int, seed: int) -> tuple[CameraStyle, ...]:
    """Distinct, well-separated styles: offsets and hue angles evenly spaced
    (camera order shuffled by the seed), round-robin backgrounds, one
    low-resolution camera out of every four."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xCA11)))
    if n_cameras == 1:
        return (CameraStyle(),)
    order = rng.permutation(n_cameras)
    offsets = np.linspace(-BRIGHTNESS_MAX * 0.9, BRIGHTNESS_MAX * 0.9, n_cameras)
    hues = np.linspace(-55.0, 55.0, n_cameras)
    styles = []
    for cam in range(n_cameras):
        k = int(order[cam])
        styles.append(
            CameraStyle(
                brightness_offset=float(offsets[k]),
                hue_degrees=float(hues[(k + 1) % n_cameras]),
                background_texture=cam % N_TEXTURES,
                downscale=2 if cam % 4 == 3 else 1,
            )
        )
    return tuple(styles)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, *key)))


def _identity_palette(vehicle_id: int, seed: int) -> dict:
    """Deterministic appearance parameters for one identity."""
    rng = _rng(seed, 1, vehicle_id)
    hue = (vehicle_id * 137.508 + rng.uniform(0, 20)) % 360.0  # golden-angle spacing
    body = _safe_color(hue, sat=rng.uniform(0.75, 1.0))
    accent = _safe_color((hue + 180.0) % 360.0, sat=rng.uniform(0.6, 1.0))
    bits = [(vehicle_id >> b) & 1 for b in range(6)]
    return {
        "body": body,
        "accent": accent,
        "window": np.array([0.30, 0.34, 0.40]),
        "wheel": np.array([0.22, 0.22, 0.22]),
        "bits": bits,
        "aspect": rng.uniform(0.42, 0.55),  # body height / width
    }


def _safe_color(hue_deg: float, sat: float) -> np.ndarray:
    """RGB color at mean 0.5 with chroma bounded so any hue rotation plus
    brightness offset stays inside [0,1]."""
    theta = math.radians(hue_deg)
    u = np.array([1.0, -0.5, -0.5]) / math.sqrt(1.5)  # orthonormal basis of the
    v = np.array([0.0, 1.0, -1.0]) / math.sqrt(2.0)   # plane orthogonal to gray
    radius = sat * CHROMA_MAX
    return 0.5 + radius * (math.cos(theta) * u + math.sin(theta) * v)


def _draw_sprite(vehicle_id: int, index: int, size: int, seed: int):
    """Render one vehicle sprite; returns (rgb [S,S,3], alpha mask [S,S])."""
    pal = _identity_palette(vehicle_id, seed)
    rng = _rng(seed, 2, vehicle_id, index)

    # small pose jitter per image index
    cx = 0.5 + rng.uniform(-0.06, 0.06)
    cy = 0.55 + rng.uniform(-0.05, 0.05)
    scale = rng.uniform(0.88, 1.0)

    w = 0.72 * scale
    h = pal["aspect"] * w
    yy, xx = np.mgrid[0:size, 0:size]
    x = (xx + 0.5) / size
    y = (yy + 0.5) / size

    rgb = np.zeros((size, size, 3))
    alpha = np.zeros((size, size), dtype=bool)

    def paint(mask, color):
        alpha[mask] = True
        rgb[mask] = color

    body = (np.abs(x - cx) < w / 2) & (np.abs(y - cy) < h / 2)
    paint(body, pal["body"])

    cabin = (np.abs(x - cx) < w * 0.28) & (y > cy - h * 0.95) & (y < cy - h / 2)
    paint(cabin, pal["body"])
    window = (np.abs(x - cx) < w * 0.22) & (y > cy - h * 0.82) & (y < cy - h * 0.55)
    paint(window, pal["window"])

    for wx in (cx - w * 0.30, cx + w * 0.30):
        wheel = (x - wx) ** 2 + (y - (cy + h / 2)) ** 2 < (0.075 * scale) ** 2
        paint(wheel, pal["wheel"])

    # identity-coded marking strip: 6 blocks along the body, one per id bit
    strip_y = (y > cy - h * 0.25) & (y < cy + h * 0.05)
    for b, bit in enumerate(pal["bits"]):
        if not bit:
            continue
        x0 = cx - w * 0.42 + b * (w * 0.84 / 6)
        block = strip_y & (x > x0) & (x < x0 + w * 0.84 / 7)
        paint(block, pal["accent"])

    return rgb, alpha


_TEXTURE_FREQS = ((5, 0), (0, 7), (4, 4), (6, -3))


def _background(texture_id: int, size: int, seed: int) -> np.ndarray:
    """Camera background: a fixed sinusoidal pattern, normalized to mean 0.5
    per channel so backgrounds never contribute a brightness bias."""
    fy, fx = _TEXTURE_FREQS[texture_id % N_TEXTURES]
    rng = _rng(seed, 3, texture_id)
    phase = rng.uniform(0, 2 * math.pi, size=3)
    amp = rng.uniform(0.08, 0.14, size=3)
    yy, xx = np.mgrid[0:size, 0:size]
    t = 2 * math.pi * (fy * yy + fx * xx) / size
    tex = np.stack([0.5 + amp[c] * np.sin(t + phase[c]) for c in range(3)], axis=-1)
    tex += 0.5 - tex.mean(axis=(0, 1), keepdims=True)
    return tex


def hue_rotation_matrix(degrees: float) -> np.ndarray:
    """Rotation about the gray axis (1,1,1)/sqrt(3); preserves R+G+B."""
    theta = math.radians(degrees)
    a = np.ones(3) / math.sqrt(3.0)
    cross = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return math.cos(theta) * np.eye(3) + math.sin(theta) * cross + (
        1 - math.cos(theta)
    ) * np.outer(a, a)


def apply_camera_style(content: np.ndarray, style: CameraStyle) -> np.ndarray:
    """Apply one camera's style transform to a float [0,1] HxWx3 image."""
    img = content @ hue_rotation_matrix(style.hue_degrees).T
    img = img + style.brightness_offset
    k = int(style.downscale)
    if k > 1:
        s = img.shape[0]
        if s % k:
            raise ValidationError(f"image size {s} not divisible by downscale {k}")
        img = img.reshape(s // k, k, s // k, k, 3).mean(axis=(1, 3))
        img = np.repeat(np.repeat(img, k, axis=0), k, axis=1)
    return img


def render_toy_image(spec: ToyGenSpec, vehicle_id: int, camera_id: int, index: int) -> np.ndarray:
    """Pure function (spec, id, camera, index) -> uint8 HxWx3 image."""
    styles = spec.resolved_styles()
    sprite, mask = _draw_sprite(vehicle_id, index, spec.image_size, spec.seed)
    bg = _background(styles[camera_id].background_texture, spec.image_size, spec.seed)
    content = np.where(mask[..., None], sprite, bg)
    img = apply_camera_style(content, styles[camera_id])
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def _record_split(spec: ToyGenSpec, vehicle_id: int, camera_id: int, index: int) -> str:
    """Last image of each (identity, camera) group is held out for testing;
    one held-out camera per identity (round-robin) provides the query."""
    if spec.images_per_id_per_camera == 1 or index < spec.images_per_id_per_camera - 1:
        return "train"
    if camera_id == vehicle_id % spec.n_cameras:
        return "query"
    return "gallery"


def generate_toy_dataset(spec: ToyGenSpec, out_dir: str | Path) -> DatasetManifest:
    """Write the full toy dataset and its manifest under out_dir.

    Regeneration with the same spec is bit-identical.  Returns the
    validated manifest (also saved as out_dir/manifest.jsonl).
    """
    if min(spec.n_identities, spec.n_cameras, spec.images_per_id_per_camera, spec.image_size) <= 0:
        raise ValidationError("all toy generation sizes must be positive")
    spec.resolved_styles()  # validates style count early
    out_dir = Path(out_dir)
    records = []
    for cam in range(spec.n_cameras):
        cam_dir = out_dir / "images" / f"c{cam:02d}"
        cam_dir.mkdir(parents=True, exist_ok=True)
        for vid in range(spec.n_identities):
            for idx in range(spec.images_per_id_per_camera):
                rel = f"images/c{cam:02d}/v{vid:04d}_i{idx:02d}.png"
                img = render_toy_image(spec, vid, cam, idx)
                Image.fromarray(img, mode="RGB").save(out_dir / rel, format="PNG")
                records.append(
                    ImageRecord(
                        path=rel,
                        vehicle_id=vid,
                        camera_id=cam,
                        split=_record_split(spec, vid, cam, idx),
                    )
                )
    manifest = DatasetManifest(
        records=sorted(records, key=lambda r: r.path),
        n_cameras=spec.n_cameras,
        name="toy",
        root=out_dir,
    )
    manifest.validate()
    save_manifest(manifest, out_dir / "manifest.jsonl")
    return manifest
