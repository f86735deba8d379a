import json

import numpy as np
import pytest

from fencemask.cli import RunConfig, UsageError, config_from_args, build_parser, main, parse_sweep, run_command
from fencemask.fileio import load_image, read_report_csv, save_image


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def image_dir(tmp_path):
    src = tmp_path / "in"
    rng = np.random.default_rng(0)
    for i in range(6):
        save_image(rng.integers(0, 256, (30 + i, 40, 3), dtype=np.uint8), src / f"img{i}.png")
    save_image(rng.integers(0, 256, (20, 20, 1), dtype=np.uint8), src / "sub" / "gray.png")
    return src


def test_augment_zero_probability_copies_inputs(image_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["augment", "--input", str(image_dir), "--output", str(out), "--max-prob", "0"]) == 0
    records = [json.loads(line) for line in (out / "manifest.jsonl").read_text().splitlines()]
    assert len(records) == 7 and not any(r["applied"] for r in records)
    for r in records:
        assert (out / r["output"]).read_bytes() == (image_dir / r["input"]).read_bytes()


def test_augment_deterministic_across_workers(image_dir, tmp_path):
    args = ["augment", "--input", str(image_dir), "--seed", "11", "--w-min", "1", "--w-max", "3", "--fill", "9,8,7"]
    assert main(args + ["--output", str(tmp_path / "a"), "--workers", "1"]) == 0
    assert main(args + ["--output", str(tmp_path / "b"), "--workers", "8"]) == 0
    a, b = tree_bytes(tmp_path / "a"), tree_bytes(tmp_path / "b")
    assert a == b and len(a) == 8


def test_augment_manifest_complete(image_dir, tmp_path):
    out = tmp_path / "out"
    main(["augment", "--input", str(image_dir), "--output", str(out), "--max-prob", "0.5", "--max-epoch", "4",
          "--epoch", "2", "--method", "cutout", "--side", "8"])
    records = [json.loads(line) for line in (out / "manifest.jsonl").read_text().splitlines()]
    assert sorted(r["input"] for r in records) == sorted(
        p.relative_to(image_dir).as_posix() for p in image_dir.rglob("*.png"))
    for r in records:
        assert (r["params"] is None) == (not r["applied"])
        assert load_image(out / r["output"]).shape == load_image(image_dir / r["input"]).shape


def test_augment_rejects_nested_output(image_dir, capsys):
    assert main(["augment", "--input", str(image_dir), "--output", str(image_dir / "x")]) == 2
    assert "distinct" in capsys.readouterr().err


def test_augment_rejects_foreign_parameter(image_dir, tmp_path, capsys):
    assert main(["augment", "--input", str(image_dir), "--output", str(tmp_path / "o"), "--side", "4"]) == 1
    assert "do not apply" in capsys.readouterr().err


def test_augment_reports_corrupt_input(image_dir, tmp_path, capsys):
    (image_dir / "bad.png").write_bytes(b"\x89PNG\r\n\x1a\n garbage")
    assert main(["augment", "--input", str(image_dir), "--output", str(tmp_path / "o")]) == 1
    assert "bad.png" in capsys.readouterr().err


def test_config_file_with_flag_override(image_dir, tmp_path):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({"input": str(image_dir), "seed": 5, "max_prob": 0.0,
                                    "params": {"w_min": 1, "w_max": 2}}))
    ns = build_parser().parse_args(["augment", "--config", str(cfg_file), "--output", str(tmp_path / "o"),
                                    "--seed", "6", "--w-max", "3"])
    cfg = config_from_args(ns)
    assert cfg.seed == 6 and cfg.max_prob == 0.0 and cfg.params == {"w_min": 1.0, "w_max": 3.0}


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"seed": 1,\n oops}')
    ns = build_parser().parse_args(["augment", "--config", str(bad), "--output", str(tmp_path / "o")])
    with pytest.raises(UsageError, match="bad.json:2"):
        config_from_args(ns)


def test_parse_sweep():
    assert parse_sweep("w=1..4:1") == ("w", [1.0, 2.0, 3.0, 4.0])
    assert parse_sweep("keep_ratio=0.1..0.3:0.1") == ("keep_ratio", [0.1, 0.2, 0.3])
    with pytest.raises(UsageError):
        parse_sweep("w=4..1")


def test_gallery_outputs(tmp_path):
    out = tmp_path / "g"
    assert main(["gallery", "--output", str(out), "--method", "gridmask", "--size", "64x32",
                 "--sweep", "keep_ratio=0.25..0.75:0.25", "--period", "16"]) == 0
    records = [json.loads(line) for line in (out / "gallery.jsonl").read_text().splitlines()]
    assert len(records) == 3
    fracs = [r["occluded_fraction"] for r in records]
    assert fracs == sorted(fracs, reverse=True)
    mask = load_image(out / f"{records[0]['stem']}_mask.png")
    assert mask.shape == (32, 64, 1) and set(np.unique(mask)) <= {0, 255}
    assert load_image(out / f"{records[0]['stem']}_overlay.png").shape == (32, 64, 3)


def test_gallery_rejects_unknown_sweep(tmp_path):
    assert main(["gallery", "--output", str(tmp_path / "g"), "--sweep", "side=1..2"]) == 1


def test_study_on_annotation_file(tmp_path):
    imgs = tmp_path / "imgs"
    for i in range(2):
        save_image(np.zeros((64, 64, 3), np.uint8), imgs / f"{i}.png")
    ann = tmp_path / "ann.json"
    ann.write_text(json.dumps({
        "images": [{"id": i, "file_name": f"{i}.png", "width": 64, "height": 64} for i in range(2)],
        "annotations": [{"image_id": 0, "bbox": [5, 5, 8, 8]}, {"image_id": 1, "bbox": [40, 30, 10, 6]}],
    }))
    out = tmp_path / "out"
    assert main(["study", "--images", str(imgs), "--annotations", str(ann), "--output", str(out),
                 "--methods", "fencemask,cutout", "--seeds", "5", "--n-samples", "30", "--side", "10"]) == 0
    rows = read_report_csv(out / "report.csv")
    assert [r["method"] for r in rows] == ["fencemask", "cutout"]
    assert set(rows[0]) >= {"method", "global_occlusion", "failure_threshold", "failure_rate",
                            "n_images", "n_objects", "seeds"}
    doc = json.loads((out / "report.json").read_text())
    assert doc["reports"][0]["n_objects"] == 2 and len(doc["reports"][0]["per_object_occlusion"]) == 2


def test_study_missing_image_fails(tmp_path, capsys):
    ann = tmp_path / "ann.json"
    ann.write_text(json.dumps({"images": [{"id": 1, "file_name": "a.png", "width": 8, "height": 8}],
                               "annotations": []}))
    (tmp_path / "imgs").mkdir()
    assert main(["study", "--images", str(tmp_path / "imgs"), "--annotations", str(ann),
                 "--output", str(tmp_path / "o")]) == 1
    assert "a.png" in capsys.readouterr().err


def test_run_config_validation(tmp_path):
    with pytest.raises(UsageError):
        RunConfig("augment", output=str(tmp_path), seed=-1)
    with pytest.raises(UsageError):
        RunConfig("augment", output=str(tmp_path), method="mixup")
    with pytest.raises(UsageError):
        RunConfig("study", output=str(tmp_path), formats="csv,xml")


def test_run_command_returns_status(tmp_path):
    assert run_command(RunConfig("augment", output=str(tmp_path / "o"), input=str(tmp_path / "none"))) == 1
