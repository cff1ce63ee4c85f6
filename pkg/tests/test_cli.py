import hashlib
import json
import subprocess
import sys

import pytest

from aruba.cli import main
from aruba.weights import effective_number


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _err(capsys):
    lines = [json.loads(line) for line in capsys.readouterr().err.splitlines() if line]
    return [line for line in lines if "error" in line]


def test_weights_outputs(tmp_path, data_dir):
    out = tmp_path / "o"
    assert main(["weights", str(data_dir / "coco_small.json"), "--out", str(out)]) == 0
    doc = json.loads((out / "weights.json").read_text())
    assert set(doc["instances"]) == {"1", "2", "3", "4", "5", "10"}
    csv = (out / "weights.csv").read_text().splitlines()
    assert csv[0].startswith("# {")
    assert csv[1] == "instance_id,image_id,class_id,cluster,weight"
    assert len(csv) == 2 + 6


def test_weights_repeatable(tmp_path, data_dir):
    src = str(data_dir / "coco_small.json")
    for name in "ab":
        assert main(["weights", src, "--out", str(tmp_path / name), "--k", "3"]) == 0
    for f in ("weights.json", "weights.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_config_round_trip(tmp_path, data_dir):
    src = str(data_dir / "coco_small.json")
    a = tmp_path / "a"
    assert main(["weights", src, "--out", str(a), "--beta", "0.99", "--k", "2",
                 "--sigma", "1.5", "--window", "5"]) == 0
    b = tmp_path / "b"
    assert main(["weights", src, "--out", str(b), "--config", str(a / "weights.json")]) == 0
    assert (a / "weights.json").read_bytes() == (b / "weights.json").read_bytes()
    # explicit flags still override the file
    c = tmp_path / "c"
    assert main(["weights", src, "--out", str(c), "--config", str(a / "weights.json"),
                 "--beta", "0.9"]) == 0
    assert json.loads((c / "weights.json").read_text())["header"]["config"]["beta"] == 0.9


def test_identity_settings_give_per_bin_weights(tmp_path, repeated_coco):
    out = tmp_path / "o"
    assert main(["weights", str(repeated_coco), "--out", str(out), "--window", "1",
                 "--root", "1"]) == 0
    doc = json.loads((out / "weights.json").read_text())
    ws = sorted(c["weight"] for c in doc["classes"]["1"]["clusters"])
    expected = sorted(1 - 1 / effective_number(n, 0.9999, 1) for n in (30, 20, 5, 1))
    assert ws == pytest.approx(expected, rel=1e-11, abs=1e-15)


def test_inputs_untouched(tmp_path, data_dir):
    src = data_dir / "coco_small.json"
    before = _sha(src)
    assert main(["weights", str(src), "--out", str(tmp_path)]) == 0
    assert main(["analyze", str(src), "--out", str(tmp_path / "an")]) == 0
    assert _sha(src) == before


def test_missing_file_is_usage_error(tmp_path, capsys):
    assert main(["weights", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
    (err,) = _err(capsys)
    assert err["exit_code"] == 2


@pytest.mark.parametrize("flags", [["--beta", "1.0"], ["--k", "0"], ["--window", "4"],
                                   ["--jobs", "0"]])
def test_bad_config_exit_2(tmp_path, data_dir, capsys, flags):
    code = main(["weights", str(data_dir / "coco_small.json"), "--out", str(tmp_path)] + flags)
    assert code == 2
    (err,) = _err(capsys)
    assert err["error"] == "ConfigError"


def test_malformed_json_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"images": [}')
    assert main(["weights", str(bad), "--out", str(tmp_path / "o")]) == 1
    (err,) = _err(capsys)
    assert err["error"] == "ParseError"
    assert err["byte_offset"] == 12
    assert err["path"].endswith("bad.json")


def test_bad_record_reports_line(tmp_path, capsys):
    d = tmp_path / "vd"
    d.mkdir()
    (d / "img.txt").write_text("1,1,5,5,1,1,0,0\n1,1,-5,5,1,1,0,0\n")
    assert main(["weights", str(d), "--format", "visdrone", "--out", str(tmp_path / "o")]) == 1
    (err,) = _err(capsys)
    assert err["error"] == "RecordError" and err["line"] == 2


def test_unknown_flag_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["weights", "x.json", "--frobnicate"])
    assert exc.value.code == 2


def test_analyze_bundle(tmp_path, data_dir):
    out = tmp_path / "an"
    assert main(["analyze", str(data_dir / "coco_small.json"), "--out", str(out),
                 "--no-histograms", "--quantiles", "0.2"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["files"] == sorted(p.name for p in out.iterdir())
    assert not any(n.startswith("hist_") for n in summary["files"])
    assert list(summary["classes"]["1"]["head_tail_ratio"]) == ["0.2"]


def test_split_coco(tmp_path, split_coco):
    out = tmp_path / "sp"
    assert main(["split", str(split_coco), "--out", str(out)]) == 0
    counts = [len(json.loads((out / f"{n}.json").read_text())["annotations"])
              for n in ("small", "medium", "large")]
    assert counts == [3, 3, 3]
    manifest = json.loads((out / "split_manifest.json").read_text())
    assert manifest["counts"] == {"small": 3, "medium": 3, "large": 3}


def test_split_dota_directory(tmp_path, data_dir):
    out = tmp_path / "sp"
    assert main(["split", str(data_dir / "dota"), "--format", "dota", "--out", str(out),
                 "--thresholds", "50,150"]) == 0
    lines = [ln for p in out.rglob("*.txt") for ln in p.read_text().splitlines()]
    assert len(lines) == 5


def test_split_bad_thresholds(tmp_path, split_coco):
    assert main(["split", str(split_coco), "--out", str(tmp_path),
                 "--thresholds", "9216,1024"]) == 2


def test_synth_deterministic(tmp_path):
    for name in "ab":
        assert main(["synth", "--seed", "3", "--out", str(tmp_path / name)]) == 0
    for f in ("dataset.json", "annotations.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    doc = json.loads((tmp_path / "a" / "dataset.json").read_text())
    assert len(doc["instances"]) == 10_000


def test_synth_then_weights(tmp_path):
    assert main(["synth", "--seed", "1", "--out", str(tmp_path / "s")]) == 0
    for fmt, name in (("dump", "dataset.json"), ("coco", "annotations.json")):
        out = tmp_path / fmt
        assert main(["weights", str(tmp_path / "s" / name), "--format", fmt,
                     "--out", str(out), "--k", "5"]) == 0
    a = json.loads((tmp_path / "dump" / "weights.json").read_text())
    b = json.loads((tmp_path / "coco" / "weights.json").read_text())
    assert [c["weight"] for c in a["classes"]["0"]["clusters"]] == \
        [c["weight"] for c in b["classes"]["0"]["clusters"]]


def test_toy_train(tmp_path):
    out = tmp_path / "toy"
    assert main(["toy-train", "--seed", "0", "--out", str(out)]) == 0
    summary = json.loads((out / "toy_summary.json").read_text())
    assert summary["head"]["mean_error_aruba"] < summary["head"]["mean_error_uniform"]


def test_kernel(capsys):
    assert main(["kernel", "--window", "3", "--sigma", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "0 1.0"
    assert lines[0].startswith("-1 0.88249690258459")


def test_console_module(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "aruba.cli", "kernel", "--window", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "0 1.0\n"
