import hashlib
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from ccreid.data import (
    CameraStyle,
    ToyGenSpec,
    build_protocol,
    default_camera_styles,
    generate_toy_dataset,
)
from ccreid.data.toygen import apply_camera_style, hue_rotation_matrix, render_toy_image
from ccreid.errors import ValidationError

SMALL = ToyGenSpec(n_identities=6, n_cameras=3, images_per_id_per_camera=2, image_size=32, seed=11)


def dir_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_image_count(tmp_path):
    spec = ToyGenSpec(n_identities=32, n_cameras=4, images_per_id_per_camera=2,
                      image_size=16, seed=7)
    m = generate_toy_dataset(spec, tmp_path)
    assert len(m.records) == 256
    assert len(list((tmp_path / "images").rglob("*.png"))) == 256
    assert m.n_identities == 32


def test_regeneration_is_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    generate_toy_dataset(SMALL, a)
    generate_toy_dataset(SMALL, b)
    assert dir_digest(a) == dir_digest(b)


def test_identical_styles_give_identical_pixels(tmp_path):
    style = CameraStyle(brightness_offset=0.04, hue_degrees=30.0,
                        background_texture=1, downscale=1)
    spec = ToyGenSpec(n_identities=3, n_cameras=2, images_per_id_per_camera=1,
                      image_size=32, seed=5, camera_styles=(style, style))
    generate_toy_dataset(spec, tmp_path)
    for vid in range(3):
        a = np.asarray(Image.open(tmp_path / f"images/c00/v{vid:04d}_i00.png"))
        b = np.asarray(Image.open(tmp_path / f"images/c01/v{vid:04d}_i00.png"))
        assert np.array_equal(a, b)


def test_cross_camera_brightness_difference_matches_offsets(tmp_path):
    spec = ToyGenSpec(n_identities=8, n_cameras=3, images_per_id_per_camera=2,
                      image_size=32, seed=3)
    m = generate_toy_dataset(spec, tmp_path)
    styles = spec.resolved_styles()
    means = {}
    for cam in range(3):
        imgs = [np.asarray(Image.open(m.resolve(r)), dtype=np.float64)
                for r in m.records if r.camera_id == cam]
        means[cam] = np.mean(imgs)
    for a in range(3):
        for b in range(3):
            got = means[a] - means[b]
            want = 255.0 * (styles[a].brightness_offset - styles[b].brightness_offset)
            assert abs(got - want) <= 1.0, (a, b, got, want)


def test_no_pixel_clipping_with_default_styles():
    spec = ToyGenSpec(n_identities=4, n_cameras=4, images_per_id_per_camera=1,
                      image_size=32, seed=9)
    styles = spec.resolved_styles()
    from ccreid.data.toygen import _background, _draw_sprite

    for cam in range(4):
        for vid in range(4):
            sprite, mask = _draw_sprite(vid, 0, 32, spec.seed)
            bg = _background(styles[cam].background_texture, 32, spec.seed)
            content = np.where(mask[..., None], sprite, bg)
            img = apply_camera_style(content, styles[cam])
            assert img.min() >= 0.0 and img.max() <= 1.0


def test_hue_rotation_preserves_brightness():
    rng = np.random.default_rng(0)
    img = rng.uniform(0.2, 0.8, size=(8, 8, 3))
    rot = img @ hue_rotation_matrix(73.0).T
    np.testing.assert_allclose(rot.sum(axis=-1), img.sum(axis=-1), atol=1e-12)


def test_default_styles_are_distinct_and_pure():
    s1 = default_camera_styles(4, 21)
    s2 = default_camera_styles(4, 21)
    assert s1 == s2
    assert len({st.brightness_offset for st in s1}) == 4
    assert default_camera_styles(4, 22) != s1


def test_render_is_pure_function():
    spec = SMALL
    a = render_toy_image(spec, 2, 1, 0)
    b = render_toy_image(spec, 2, 1, 0)
    assert np.array_equal(a, b)


def test_invalid_spec_rejected(tmp_path):
    with pytest.raises(ValidationError):
        generate_toy_dataset(ToyGenSpec(n_identities=0), tmp_path)
    bad = ToyGenSpec(n_cameras=2, camera_styles=(CameraStyle(),))
    with pytest.raises(ValidationError):
        generate_toy_dataset(bad, tmp_path)


@pytest.fixture(scope="module")
def manifest(tmp_path_factory):
    return generate_toy_dataset(SMALL, tmp_path_factory.mktemp("toy"))


class TestProtocols:
    def test_no_train_records_in_protocol(self, manifest):
        for protocol in ("veri", "vehicleid"):
            q, g = build_protocol(manifest, protocol, seed=1)
            assert all(r.split != "train" for r in q + g)

    def test_veri_uses_fixed_splits(self, manifest):
        q, g = build_protocol(manifest, "veri")
        assert q == manifest.split("query")
        assert g == manifest.split("gallery")

    def test_vehicleid_gallery_one_per_identity(self, manifest):
        q, g = build_protocol(manifest, "vehicleid", seed=4)
        test_ids = {r.vehicle_id for r in manifest.split("query", "gallery")}
        assert len(g) == len(test_ids)
        assert len({r.vehicle_id for r in g}) == len(g)
        assert len(q) + len(g) == len(manifest.split("query", "gallery"))

    def test_vehicleid_draw_is_seeded(self, manifest):
        a = build_protocol(manifest, "vehicleid", seed=4)
        b = build_protocol(manifest, "vehicleid", seed=4)
        assert a == b
        probes_differ = any(
            build_protocol(manifest, "vehicleid", seed=s)[1] != a[1] for s in range(5, 15)
        )
        assert probes_differ

    def test_vehicleid_single_image_identity_is_gallery_only(self, tmp_path):
        from ccreid.data import DatasetManifest, ImageRecord

        m = DatasetManifest(
            records=[
                ImageRecord("a.png", 0, 0, "gallery"),
                ImageRecord("b.png", 1, 0, "gallery"),
                ImageRecord("c.png", 1, 1, "gallery"),
                ImageRecord("d.png", 1, 1, "query"),
            ],
            n_cameras=2,
        )
        q, g = build_protocol(m, "vehicleid", seed=0)
        assert len(g) == 2
        assert all(r.vehicle_id == 1 for r in q)
        assert len(q) == 2

    def test_empty_test_split_errors(self):
        from ccreid.data import DatasetManifest, ImageRecord

        m = DatasetManifest(records=[ImageRecord("a.png", 0, 0, "train")], n_cameras=1)
        with pytest.raises(ValidationError):
            build_protocol(m, "vehicleid", seed=0)
        with pytest.raises(ValidationError):
            build_protocol(m, "veri")
