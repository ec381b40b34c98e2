import hashlib

import numpy as np
import pytest

from argus_forge import Image
from argus_forge.dataset import (
    N_OBJECTS,
    DatasetConfig,
    PlacementError,
    build_dataset,
    generate_base_images,
    load_manifest,
    render_object,
    splice,
)


def test_base_images_deterministic():
    a = generate_base_images(2, 32, 4)
    b = generate_base_images(2, 32, 4)
    assert all(x.pixels.tobytes() == y.pixels.tobytes() for x, y in zip(a, b))
    c = generate_base_images(2, 32, 5)
    assert not np.array_equal(a[0].pixels, c[0].pixels)
    assert not np.array_equal(a[0].pixels, a[1].pixels)


def test_base_histogram_non_degenerate():
    for im in generate_base_images(4, 64, 0):
        for ch in range(3):
            assert len(np.unique(im.pixels[..., ch])) >= 32


def test_square_area():
    base = generate_base_images(1, 64, 0)[0]
    rec = splice(base, 0, 16, 0, (10, 20))
    assert rec.mask.sum() == 256
    assert rec.mask[10:26, 20:36].all()


def test_pristine_passthrough():
    base = generate_base_images(1, 16, 0)[0]
    rec = splice(base, None)
    assert rec.image == base and not rec.mask.any()


def test_out_of_bounds():
    base = generate_base_images(1, 32, 0)[0]
    with pytest.raises(PlacementError):
        splice(base, 1, 16, 0, (20, 0))
    with pytest.raises(PlacementError):
        splice(base, 1, 16, 45, (0, 10))


@pytest.mark.parametrize("object_id", range(N_OBJECTS))
@pytest.mark.parametrize("size", [4, 8, 16, 32])
def test_mask_exactness(object_id, size):
    base = generate_base_images(1, 64, object_id)[0]
    rot = (object_id * 37 + size) % 360
    _, support = render_object(object_id, size, rot, 3)
    rec = splice(base, object_id, size, rot, (2, 3), seed=3)
    changed = np.any(rec.image.pixels != base.pixels, axis=-1)
    assert not np.any(changed & ~rec.mask)
    assert rec.mask.sum() == support.sum() > 0
    assert changed[rec.mask].mean() >= 0.99


def test_desk_dataset(tmp_path):
    m = build_dataset(DatasetConfig(seed=7), tmp_path / "d")
    assert len(m.train) == 32 and len(m.test) == 100
    sizes = [e["object_size"] for e in m.test]
    assert {s: sizes.count(s) for s in set(sizes)} == {4: 25, 8: 25, 16: 25, 32: 25}
    loaded = load_manifest(tmp_path / "d")
    assert loaded.digest() == m.digest()
    for e in loaded.test[:5]:
        assert loaded.load_image(e).shape == (64, 64, 3)
        assert loaded.load_mask(e).sum() > 0
    assert not loaded.load_mask(loaded.train[0]).any()
    assert len(list((tmp_path / "d" / "train").glob("*.png"))) == 32
    assert len(list((tmp_path / "d" / "test").glob("img_*.png"))) == 100


def test_regeneration_identical(tmp_path):
    cfg = DatasetConfig(train_count=3, test_count=4, image_size=32, sizes=(4, 8), seed=2)
    a = build_dataset(cfg, tmp_path / "a")
    b = build_dataset(cfg, tmp_path / "b")
    digest = lambda p: hashlib.sha256(p.read_bytes()).hexdigest()
    assert digest(a.path) == digest(b.path)
    for e in a.test:
        assert digest(tmp_path / "a" / e["image"]) == digest(tmp_path / "b" / e["image"])


def test_split_hygiene(tmp_path):
    m = build_dataset(DatasetConfig(train_count=6, test_count=6, image_size=32, sizes=(4,), seed=0), tmp_path / "d")
    train = {m.load_image(e).pixels.tobytes() for e in m.train}
    for e in m.test:
        assert m.load_image(e).pixels.tobytes() not in train
    assert all(e["object_id"] is None for e in m.train)


def test_paper_shaped_config():
    cfg = DatasetConfig.paper()
    assert (cfg.train_count, cfg.test_count, cfg.image_size) == (98, 500, 1000)
    assert cfg.sizes == (16, 32, 64, 128, 256)


def test_manifest_rejects_spliced_train(tmp_path):
    import json

    m = build_dataset(DatasetConfig(train_count=1, test_count=1, image_size=32, sizes=(4,)), tmp_path / "d")
    data = json.loads(m.path.read_text())
    data["splits"]["train"][0]["object_id"] = 3
    m.path.write_text(json.dumps(data))
    with pytest.raises(ValueError):
        load_manifest(m.path)


def test_ingest_user_directory(tmp_path):
    """A hand-written manifest over arbitrary PNGs loads and evaluates."""
    import json

    from argus_forge.image import write_mask_png, write_png

    root = tmp_path / "real"
    root.mkdir()
    write_png(root / "a.png", Image(np.full((8, 8, 3), 100)))
    mask = np.zeros((8, 8), bool)
    mask[2:4, 2:4] = True
    write_mask_png(root / "a_mask.png", mask)
    (root / "manifest.json").write_text(json.dumps({
        "version": 1, "seed": None,
        "splits": {"train": [], "test": [{"id": "a", "image": "a.png", "mask": "a_mask.png", "object_size": 2}]},
    }))
    m = load_manifest(root)
    np.testing.assert_array_equal(m.load_mask(m.test[0]), mask)
    assert m.sizes() == [2]
