import json

import pytest

from ccreid.data import DatasetManifest, ImageRecord, load_manifest, save_manifest
from ccreid.errors import ManifestError


def write_lines(path, lines):
    path.write_text("\n".join(json.dumps(obj) for obj in lines) + "\n")


HEADER = {"manifest_version": 1, "name": "t", "n_cameras": 2}


def rec(path, vid, cam, split="train"):
    return {"path": path, "vehicle_id": vid, "camera_id": cam, "split": split}


def test_load_valid_manifest(tmp_path):
    f = tmp_path / "m.jsonl"
    write_lines(f, [HEADER, rec("a.png", 0, 0), rec("b.png", 0, 1),
                    rec("c.png", 1, 0, "query"), rec("d.png", 1, 1, "gallery")])
    m = load_manifest(f)
    assert len(m.records) == 4
    assert m.n_cameras == 2
    assert m.n_identities == 2
    assert m.name == "t"


def test_empty_manifest_has_zero_records(tmp_path):
    f = tmp_path / "m.jsonl"
    write_lines(f, [HEADER])
    m = load_manifest(f)
    assert m.records == []
    assert m.n_identities == 0


def test_camera_out_of_range_names_line(tmp_path):
    f = tmp_path / "m.jsonl"
    write_lines(f, [HEADER, rec("a.png", 0, 0), rec("b.png", 0, 5)])
    with pytest.raises(ManifestError, match=r"m\.jsonl:3.*camera_id=5"):
        load_manifest(f)


def test_malformed_line_names_line(tmp_path):
    f = tmp_path / "m.jsonl"
    f.write_text(json.dumps(HEADER) + "\n{not json\n")
    with pytest.raises(ManifestError, match=r"m\.jsonl:2"):
        load_manifest(f)


def test_missing_header_rejected(tmp_path):
    f = tmp_path / "m.jsonl"
    write_lines(f, [rec("a.png", 0, 0)])
    with pytest.raises(ManifestError, match="header"):
        load_manifest(f)


def test_unknown_split_rejected(tmp_path):
    f = tmp_path / "m.jsonl"
    write_lines(f, [HEADER, rec("a.png", 0, 0, "probe")])
    with pytest.raises(ManifestError, match="split"):
        load_manifest(f)


def test_records_sorted_by_path(tmp_path):
    f = tmp_path / "m.jsonl"
    write_lines(f, [HEADER, rec("z.png", 0, 0), rec("a.png", 1, 1)])
    m = load_manifest(f)
    assert [r.path for r in m.records] == ["a.png", "z.png"]


def test_save_load_roundtrip(tmp_path):
    m = DatasetManifest(
        records=[
            ImageRecord("b.png", 1, 0, "gallery"),
            ImageRecord("a.png", 0, 1, "train"),
        ],
        n_cameras=2,
        name="rt",
    )
    path = save_manifest(m, tmp_path / "out" / "m.jsonl")
    loaded = load_manifest(path)
    assert loaded.n_cameras == 2
    assert [r.path for r in loaded.records] == ["a.png", "b.png"]
    assert loaded.records[0] == ImageRecord("a.png", 0, 1, "train")
