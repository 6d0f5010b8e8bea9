import numpy as np
import pytest

from ccreid.data import ToyGenSpec, generate_toy_dataset
from ccreid.data.manifest import DatasetManifest, ImageRecord, save_manifest
from ccreid.errors import ValidationError
from ccreid.reidnet import ReidConfig, ReidModel
from ccreid.retrieval import ExtractConfig, extract

NET = ReidConfig(image_size=16, stem_channels=8, base_width=8, blocks=(1, 1),
                 bottleneck=False, embedding_dim=8)


@pytest.fixture(scope="module")
def toy(tmp_path_factory):
    spec = ToyGenSpec(n_identities=5, n_cameras=2, images_per_id_per_camera=1,
                      image_size=16, seed=17)
    return generate_toy_dataset(spec, tmp_path_factory.mktemp("toy"))


@pytest.fixture(scope="module")
def model():
    return ReidModel.build([0, 1, 2, 3, 4], NET, seed=1)


def test_one_descriptor_per_record_with_3d_length(toy, model):
    store, errors = extract(model, toy)
    assert errors == []
    assert len(store) == len(toy.records)
    assert store.dim == 3 * NET.embedding_dim
    assert store.vehicle_ids == [r.vehicle_id for r in toy.records]
    assert store.splits == [r.split for r in toy.records]


def test_extraction_is_deterministic(toy, model):
    a, _ = extract(model, toy)
    b, _ = extract(model, toy)
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_same_image_twice_gives_identical_descriptors(toy, model):
    rec = toy.records[0]
    store, _ = extract(model, toy, records=[rec, rec])
    np.testing.assert_array_equal(store.vectors[0], store.vectors[1])


def test_normalized_segments_have_unit_scaled_norms(toy, model):
    store, _ = extract(model, toy, config=ExtractConfig(alpha=0.5))
    d = store.dim // 3
    for seg, weight in ((0, 0.5), (1, 0.5), (2, 0.5)):
        norms = np.linalg.norm(store.vectors[:, seg * d:(seg + 1) * d], axis=1)
        np.testing.assert_allclose(norms, weight, atol=1e-5)


def test_unnormalized_extraction_differs(toy, model):
    a, _ = extract(model, toy, config=ExtractConfig(normalize_segments=True))
    b, _ = extract(model, toy, config=ExtractConfig(normalize_segments=False))
    assert not np.allclose(a.vectors, b.vectors)


def test_unreadable_image_collected_and_run_continues(toy, model, tmp_path):
    records = list(toy.records) + [ImageRecord("missing.png", 0, 0, "train")]
    broken = DatasetManifest(records=records, n_cameras=2, root=toy.root)
    store, errors = extract(model, broken, records=broken.records)
    assert len(errors) == 1
    assert "missing.png" in errors[0]
    assert len(store) == len(toy.records)


def test_bad_alpha_rejected(toy, model):
    with pytest.raises(ValidationError):
        extract(model, toy, config=ExtractConfig(alpha=2.0))
