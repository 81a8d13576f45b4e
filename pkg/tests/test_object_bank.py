import json

import numpy as np
import pytest

from conftest import make_frames
from oracles import flood_fill_components
from scenesynth.change_detect import BinaryMask
from scenesynth.errors import DimensionError, SceneSynthError
from scenesynth.object_bank import (
    ObjectFilter,
    build_bank,
    components,
    extract_objects,
    load_bank,
    save_bank,
)

KEEP_ALL = ObjectFilter(min_area=1, max_area_fraction=1.0, reject_border_touching=False)


def _frame(h, w, seed=0, index=1):
    img = np.random.default_rng(seed).integers(0, 256, size=(h, w, 3), dtype=np.uint8)
    return make_frames([img], start=index)[0]


def test_empty_mask():
    f = _frame(10, 10)
    assert extract_objects(f, BinaryMask(np.zeros((10, 10), bool), 1), KEEP_ALL) == []


def test_solid_blob():
    f = _frame(20, 20)
    m = np.zeros((20, 20), bool)
    m[4:9, 6:11] = True
    objs = extract_objects(f, BinaryMask(m, 1), ObjectFilter(min_area=20))
    assert len(objs) == 1
    o = objs[0]
    assert (o.area, o.width, o.height, o.origin) == (25, 5, 5, (6, 4))
    assert np.array_equal(o.patch, f.pixels[4:9, 6:11])
    assert o.id == "f1_0"


def test_diagonal_touch_is_one_object():
    m = np.zeros((10, 10), bool)
    m[2:4, 2:4] = True
    m[4:6, 4:6] = True
    objs = extract_objects(_frame(10, 10), BinaryMask(m, 1), KEEP_ALL)
    assert len(objs) == 1 and objs[0].area == 8


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        extract_objects(_frame(10, 10), BinaryMask(np.zeros((10, 11), bool), 1))


def test_filter_rules():
    m = np.zeros((40, 40), bool)
    m[0:10, 5:15] = True      # touches top edge, area 100
    m[20:22, 20:22] = True    # area 4
    m[25:35, 25:35] = True    # area 100, interior
    f = _frame(40, 40)
    objs = extract_objects(f, BinaryMask(m, 1), ObjectFilter(min_area=50))
    assert [o.origin for o in objs] == [(25, 25)]
    objs = extract_objects(f, BinaryMask(m, 1), ObjectFilter(min_area=50, reject_border_touching=False))
    assert [o.origin for o in objs] == [(5, 0), (25, 25)]
    objs = extract_objects(f, BinaryMask(m, 1), ObjectFilter(min_area=1, max_area_fraction=50 / 1600))
    assert [o.area for o in objs] == [4]


def test_filter_validation():
    with pytest.raises(ValueError):
        ObjectFilter(min_area=0)
    with pytest.raises(ValueError):
        ObjectFilter(max_area_fraction=0)


def _oracle_check(mask):
    comps = list(components(mask))
    expected = flood_fill_components(mask)
    assert len(comps) == len(expected)
    covered = np.zeros_like(mask, dtype=int)
    for (cmask, (x, y, w, h)), pixels in zip(comps, expected):
        got = {(y + yy, x + xx) for yy, xx in zip(*np.nonzero(cmask))}
        assert got == set(pixels)
        ys = [p[0] for p in pixels]
        xs = [p[1] for p in pixels]
        assert (x, y, w, h) == (min(xs), min(ys), max(xs) - min(xs) + 1, max(ys) - min(ys) + 1)
        covered[y:y + h, x:x + w] += cmask
    assert np.array_equal(covered, mask.astype(int))


def test_components_match_flood_fill():
    rng = np.random.default_rng(3)
    for _ in range(100):
        _oracle_check(rng.random((32, 32)) < rng.uniform(0.1, 0.7))


def test_extraction_invariants():
    rng = np.random.default_rng(4)
    filt = ObjectFilter(min_area=5, max_area_fraction=0.2, reject_border_touching=True)
    for seed in range(30):
        f = _frame(32, 32, seed)
        m = rng.random((32, 32)) < 0.45
        for o in extract_objects(f, BinaryMask(m, 1), filt):
            x, y = o.origin
            assert 5 <= o.area <= 0.2 * 32 * 32
            assert x > 0 and y > 0 and x + o.width < 32 and y + o.height < 32
            assert o.mask[0].any() and o.mask[-1].any() and o.mask[:, 0].any() and o.mask[:, -1].any()
            window = f.pixels[y:y + o.height, x:x + o.width]
            assert np.array_equal(o.patch[o.mask], window[o.mask])
            assert np.array_equal(o.mask, m[y:y + o.height, x:x + o.width] & o.mask)


def _two_frame_bank():
    m1 = np.zeros((30, 30), bool)
    m1[5:10, 5:10] = True
    m2 = np.zeros((30, 30), bool)
    m2[3:8, 3:8] = True
    m2[15:25, 12:20] = True
    frames = [_frame(30, 30, 1, index=4), _frame(30, 30, 2, index=5)]
    masks = [BinaryMask(m1, 4), BinaryMask(m2, 5)]
    return build_bank(frames, masks, ObjectFilter(min_area=20), scene_id="toy"), frames, masks


def test_build_bank_additive_and_ids():
    bank, frames, masks = _two_frame_bank()
    assert [o.id for o in bank] == ["f4_0", "f5_0", "f5_1"]
    assert bank.frame_dims == (30, 30)
    again = build_bank(frames, masks, ObjectFilter(min_area=20), scene_id="toy")
    assert again == bank


def test_build_bank_empty():
    bank = build_bank([], [], scene_id="x")
    assert len(bank) == 0


def test_build_bank_misaligned():
    frames = [_frame(10, 10, index=1)]
    with pytest.raises(SceneSynthError):
        build_bank(frames, [BinaryMask(np.zeros((10, 10), bool), 2)])


def test_bank_roundtrip(tmp_path):
    bank, _, _ = _two_frame_bank()
    save_bank(bank, tmp_path / "bank")
    loaded = load_bank(tmp_path / "bank")
    assert loaded == bank
    assert [o.origin for o in loaded] == [o.origin for o in bank]


def test_load_bank_missing_crop(tmp_path):
    bank, _, _ = _two_frame_bank()
    save_bank(bank, tmp_path)
    (tmp_path / "f5_0_rgb.png").unlink()
    with pytest.raises(SceneSynthError, match="f5_0"):
        load_bank(tmp_path)


def test_load_bank_size_mismatch(tmp_path):
    bank, _, _ = _two_frame_bank()
    save_bank(bank, tmp_path)
    meta = json.loads((tmp_path / "manifest.json").read_text())
    meta["objects"][1]["size"] = [6, 5]
    (tmp_path / "manifest.json").write_text(json.dumps(meta))
    with pytest.raises(SceneSynthError, match="size"):
        load_bank(tmp_path)


def test_load_bank_without_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_bank(tmp_path)
