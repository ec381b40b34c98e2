import hashlib
import json

import numpy as np
import pytest

from argus_forge.cli import main
from argus_forge.dataset import load_manifest
from argus_forge.ensemble import member_information_map, read_imap, write_imap
from argus_forge.image import read_mask_png, read_png
from argus_forge.training import CheckpointStore

SMALL_DATA = ["--train-count", "3", "--test-count", "4", "--image-size", "16", "--sizes", "2", "4"]
TINY_MODEL = ["--hidden-width", "6", "--blocks", "1", "--crop-size", "8", "--batch-size", "3"]


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["make-dataset", "--out", str(root / "data"), "--seed", "3", *SMALL_DATA]) == 0
    assert main(["train", "--manifest", str(root / "data"), "--out", str(root / "store"),
                 "--family", "gated", "--epochs", "4", "--seed", "1", *TINY_MODEL]) == 0
    return root


def test_make_dataset_reproducible(tmp_path):
    for name in ("a", "b"):
        assert main(["make-dataset", "--out", str(tmp_path / name), "--seed", "7", *SMALL_DATA]) == 0
    assert sha(tmp_path / "a" / "manifest.json") == sha(tmp_path / "b" / "manifest.json")
    echo = json.loads((tmp_path / "a" / "run_config.json").read_text())
    assert echo["options"]["seed"] == 7


def test_make_dataset_desk_defaults(tmp_path):
    assert main(["make-dataset", "--out", str(tmp_path / "d")]) == 0
    assert len(list((tmp_path / "d" / "train").glob("*.png"))) == 32
    assert len(list((tmp_path / "d" / "test").glob("img_*.png"))) == 100


def test_missing_out_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["make-dataset", "--seed", "1"])
    assert exc.value.code == 2
    assert "--out" in capsys.readouterr().err


def test_runtime_error_exit_code(tmp_path, capsys):
    assert main(["train", "--manifest", str(tmp_path / "nope"), "--out", str(tmp_path / "s")]) == 1
    assert "error" in capsys.readouterr().err


def test_train_schedule(small_run):
    store = CheckpointStore(small_run / "store")
    assert store.epochs == [2, 4]


def test_train_families_and_determinism(small_run, tmp_path):
    common = ["train", "--manifest", str(small_run / "data"), "--epochs", "4", "--seed", "1", *TINY_MODEL]
    assert main([*common, "--out", str(tmp_path / "again"), "--family", "gated"]) == 0
    assert sha(tmp_path / "again" / "index.json") == sha(small_run / "store" / "index.json")
    assert main([*common, "--out", str(tmp_path / "plain"), "--family", "pixelcnn"]) == 0
    a = json.loads((tmp_path / "plain" / "index.json").read_text())["config"]
    b = json.loads((small_run / "store" / "index.json").read_text())["config"]
    assert a != b and a["family"] == "pixelcnn"


def test_detect_single_member(small_run, tmp_path):
    manifest = load_manifest(small_run / "data")
    image_path = manifest.root / manifest.test[0]["image"]
    out = tmp_path / "det"
    assert main(["detect", "--store", str(small_run / "store"), "--image", str(image_path),
                 "--out", str(out), "--k", "1", "--ordering", "0", "--threshold", "inf"]) == 0
    store = CheckpointStore(small_run / "store")
    expected = member_information_map(store.load(4), 0, read_png(image_path))
    got = read_imap(out / f"{image_path.stem}.imap")
    np.testing.assert_array_equal(got, expected.astype(np.float32))
    assert not read_mask_png(out / f"{image_path.stem}_mask.png").any()
    assert (out / f"{image_path.stem}_heatmap.png").is_file()
    spec = json.loads((out / "ensemble.json").read_text())
    assert spec == [{"checkpoint": store.filename(4), "ordering": 0}]


def test_detect_rerun_identical(small_run, tmp_path):
    args = ["detect", "--store", str(small_run / "store"), "--manifest", str(small_run / "data"),
            "--k", "2", "--first-epoch", "2", "--seed", "5"]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").glob("*.imap"))
    assert len(files) == 4
    for name in files:
        assert sha(tmp_path / "a" / name) == sha(tmp_path / "b" / name)


def test_evaluate_oracle_maps(small_run, tmp_path, capsys):
    manifest = load_manifest(small_run / "data")
    maps = tmp_path / "maps"
    maps.mkdir()
    for e in manifest.test:
        write_imap(maps / f"{e['id']}.imap", manifest.load_mask(e).astype(float))
    assert main(["evaluate", "--manifest", str(small_run / "data"), "--maps", str(maps),
                 "--out", str(tmp_path / "rep")]) == 0
    table = capsys.readouterr().out
    assert table.count("100.0") == 3
    report = json.loads((tmp_path / "rep" / "report.json").read_text())
    assert report["average"] == pytest.approx(1.0)
    assert report["average"] == pytest.approx(np.mean(list(report["auc"].values())))


def test_evaluate_with_store(small_run, tmp_path):
    assert main(["evaluate", "--manifest", str(small_run / "data"), "--store", str(small_run / "store"),
                 "--k", "2", "--first-epoch", "2", "--out", str(tmp_path / "rep")]) == 0
    report = json.loads((tmp_path / "rep" / "report.json").read_text())
    assert set(report["auc"]) == {"2", "4"}
    assert report["average"] == pytest.approx(np.mean(list(report["auc"].values())))
    assert (tmp_path / "rep" / "pr_2.csv").is_file() and (tmp_path / "rep" / "pr_curves.png").is_file()


def test_evaluate_empty_stratum(small_run, tmp_path):
    manifest = load_manifest(small_run / "data")
    data = json.loads(manifest.path.read_text())
    data["config"]["sizes"] = [2, 4, 64]
    root = tmp_path / "data"
    root.mkdir()
    for e in data["splits"]["test"] + data["splits"]["train"]:
        for key in ("image", "mask"):
            if e.get(key):
                (root / e[key]).parent.mkdir(exist_ok=True)
                (root / e[key]).write_bytes((manifest.root / e[key]).read_bytes())
    (root / "manifest.json").write_text(json.dumps(data))
    maps = tmp_path / "maps"
    maps.mkdir()
    for e in manifest.test:
        write_imap(maps / f"{e['id']}.imap", manifest.load_mask(e).astype(float))
    with pytest.warns(UserWarning, match="size 64"):
        code = main(["evaluate", "--manifest", str(root), "--maps", str(maps), "--out", str(tmp_path / "rep")])
    assert code == 0
    report = json.loads((tmp_path / "rep" / "report.json").read_text())
    assert set(report["auc"]) == {"2", "4"}


def test_config_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 11, "make-dataset": {"train_count": 2, "test_count": 2,
                                                            "image_size": 16, "sizes": [4]}}))
    monkeypatch.setenv("ARGUS_FORGE_SEED", "5")
    assert main(["make-dataset", "--out", str(tmp_path / "a"), "--config", str(cfg), "--test-count", "1"]) == 0
    echo = json.loads((tmp_path / "a" / "run_config.json").read_text())["options"]
    assert echo["seed"] == 11 and echo["train_count"] == 2 and echo["test_count"] == 1
    cfg.write_text(json.dumps({"train_count": 1, "test_count": 0, "image_size": 16, "sizes": [4]}))
    assert main(["make-dataset", "--out", str(tmp_path / "b"), "--config", str(cfg)]) == 0
    assert json.loads((tmp_path / "b" / "run_config.json").read_text())["options"]["seed"] == 5
