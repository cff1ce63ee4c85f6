import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aruba.harness import ClassLaw, SyntheticSpec, generate_synthetic, long_tail_spec
from aruba.ingest import load_coco
from aruba.report import analyze, gini, head_tail_ratio, svg_histogram
from aruba.weights import WeightConfig
from oracles import gini_pairwise


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=60))
def test_gini_matches_pairwise(values):
    if sum(values) == 0:
        assert gini(values) == 0.0
    else:
        assert gini(values) == pytest.approx(gini_pairwise(values), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 5, 100])
def test_gini_single_holder(n):
    assert gini([0] * (n - 1) + [7]) == pytest.approx((n - 1) / n)


@pytest.mark.parametrize("p,a,b", [(0.5, 1.0, 3.0), (0.25, 2.0, 10.0), (0.75, 5.0, 1.0)])
def test_gini_two_point(p, a, b):
    n = 400
    na = int(p * n)
    values = [a] * na + [b] * (n - na)
    expected = p * (1 - p) * abs(a - b) / (p * a + (1 - p) * b)
    assert gini(values) == pytest.approx(expected, rel=1e-12)


def test_gini_even():
    assert gini([4, 4, 4]) == 0.0


def test_uniform_sizes_low_gini(tmp_path):
    spec = SyntheticSpec(seed=4, classes=(ClassLaw(0, 100_000, "uniform", area_min=100,
                                                   area_max=10_000),))
    ds = generate_synthetic(spec)
    analyze(ds, tmp_path, WeightConfig(bins=20), clusters=False)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["classes"]["0"]["gini"] < 0.05


def test_head_tail_ratio():
    areas = [1, 1, 1, 2, 5, 9, 10]
    assert head_tail_ratio(areas, 0.1) == 3 / 1
    assert head_tail_ratio(areas, 0.25) == 4 / 2


def test_svg_well_formed():
    svg = svg_histogram([0, 1, 2, 3], [5, 0, 2], "a & b", log_y=True)
    root = ET.fromstring(svg)
    assert len(root.findall("{http://www.w3.org/2000/svg}rect")) == 3


def test_bundle_manifest(tmp_path, data_dir):
    ds = load_coco(data_dir / "coco_small.json")
    written = analyze(ds, tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    on_disk = sorted(p.name for p in tmp_path.iterdir())
    assert summary["files"] == on_disk == sorted(p.name for p in written)
    assert {"class_frequency.csv", "clusters.csv", "hist_1.csv", "hist_2.svg",
            "clusters_1.svg"} <= set(on_disk)


def test_bundle_toggles(tmp_path, data_dir):
    ds = load_coco(data_dir / "coco_small.json")
    analyze(ds, tmp_path, histograms=False, clusters=False)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["class_frequency.csv", "summary.json"]


def test_class_frequency_table(tmp_path, data_dir):
    ds = load_coco(data_dir / "coco_small.json")
    analyze(ds, tmp_path)
    lines = (tmp_path / "class_frequency.csv").read_text().splitlines()
    assert lines[0].startswith("# {")
    assert lines[1] == "class_id,name,count,ignored,fraction,class_balanced_weight"
    rows = [line.split(",") for line in lines[2:]]
    assert [(r[0], r[1], r[2], r[3]) for r in rows] == [("1", "car", "4", "0"),
                                                       ("2", "ship", "2", "1")]


def test_cluster_rows_cover_counts(tmp_path):
    ds = generate_synthetic(long_tail_spec(0, total=2000))
    analyze(ds, tmp_path, WeightConfig(k=8, bins=200))
    lines = (tmp_path / "clusters.csv").read_text().splitlines()[2:]
    counts = np.array([int(line.split(",")[4]) for line in lines])
    assert counts.sum() == 2000
