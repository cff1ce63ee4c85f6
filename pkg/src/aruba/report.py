"""Imbalance analysis reports: histograms, cluster tables, summary statistics."""

from __future__ import annotations

from collections import Counter
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from aruba.histogram import ClassSizeHistogram, class_histograms, segregate_by_class
from aruba.ingest import Dataset
from aruba.serialize import fmt_float, write_csv, write_json
from aruba.weights import WeightConfig, build_weight_table, class_balanced_weight

_PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
            "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd")


def gini(values) -> float:
    """Gini coefficient of non-negative values (0 = perfectly even)."""
    x = np.sort(np.asarray(values, dtype=float))
    n = len(x)
    total = x.sum()
    if n == 0 or total == 0:
        return 0.0
    i = np.arange(1, n + 1)
    return float(np.sum((2 * i - n - 1) * x) / (n * total))


def head_tail_ratio(areas, q: float) -> float:
    """Instances in the lowest ``q`` of the area range over those in the highest ``q``."""
    a = np.asarray(areas, dtype=float)
    lo, hi = a.min(), a.max()
    span = hi - lo
    head = np.count_nonzero(a <= lo + q * span)
    tail = np.count_nonzero(a >= hi - q * span)
    return float(head / tail)


def svg_histogram(edges, counts, title: str = "", log_y: bool = False,
                  colors=None, width: int = 640, height: int = 320) -> str:
    """Minimal standalone SVG bar chart; ``colors`` gives one fill per bar."""
    counts = np.asarray(counts, dtype=float)
    vals = np.log10(counts + 1.0) if log_y else counts
    top = vals.max() if len(vals) and vals.max() > 0 else 1.0
    pad_l, pad_b, pad_t = 50, 30, 24
    plot_w, plot_h = width - pad_l - 10, height - pad_b - pad_t
    bar_w = plot_w / max(len(vals), 1)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<text x="{pad_l}" y="16" font-size="13" font-family="sans-serif">'
             f'{escape(title)}</text>']
    for i, v in enumerate(vals):
        h = plot_h * v / top
        fill = colors[i] if colors is not None else _PALETTE[0]
        parts.append(f'<rect x="{pad_l + i * bar_w:.3f}" y="{pad_t + plot_h - h:.3f}" '
                     f'width="{bar_w:.3f}" height="{h:.3f}" fill="{fill}"/>')
    ylab = "log10(count + 1)" if log_y else "count"
    parts += [
        f'<line x1="{pad_l}" y1="{pad_t + plot_h}" x2="{pad_l + plot_w}" '
        f'y2="{pad_t + plot_h}" stroke="black"/>',
        f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{pad_t + plot_h}" stroke="black"/>',
        f'<text x="{pad_l}" y="{height - 8}" font-size="11" font-family="sans-serif">'
        f'area {fmt_float(edges[0])} .. {fmt_float(edges[-1])} px^2</text>',
        f'<text x="4" y="{pad_t + 10}" font-size="11" font-family="sans-serif">'
        f'{ylab} (max {fmt_float(counts.max() if len(counts) else 0)})</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def _write_text(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def analyze(dataset: Dataset, out_dir: str | Path, config: WeightConfig | None = None,
            quantiles=(0.1, 0.25), log_y: bool = True, histograms: bool = True,
            clusters: bool = True, run_config: dict | None = None) -> list[Path]:
    """Write the analysis bundle to ``out_dir`` and return the files written.

    ``summary.json`` lists every file of the bundle under ``files``.
    """
    config = config or WeightConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = {"config": run_config if run_config is not None else config.to_dict()}
    written: list[Path] = []

    buckets = segregate_by_class(dataset, config.include_ignored)
    hists: dict[int, ClassSizeHistogram] = class_histograms(dataset, config.bins,
                                                            config.include_ignored)
    ignored = Counter(o.class_id for o in dataset.instances if o.ignored)
    counts = {cid: len(items) for cid, items in buckets.items()}
    baseline = class_balanced_weight(counts, config.beta)
    total = sum(counts.values())
    written.append(write_csv(
        out / "class_frequency.csv",
        ["class_id", "name", "count", "ignored", "fraction", "class_balanced_weight"],
        [(cid, dataset.categories[cid], n, ignored.get(cid, 0), n / total, baseline[cid])
         for cid, n in counts.items()],
        comment=header))

    per_class = {}
    for cid, items in buckets.items():
        areas = np.array([a for _, a in items])
        h = hists[cid]
        per_class[str(cid)] = {
            "name": dataset.categories[cid],
            "count": len(areas),
            "area_min": float(areas.min()),
            "area_max": float(areas.max()),
            "area_median": float(np.median(areas)),
            "gini": gini(h.counts),
            "head_tail_ratio": {str(q): head_tail_ratio(areas, q) for q in quantiles},
        }
        if histograms:
            written.append(write_csv(
                out / f"hist_{cid}.csv", ["bin_lo", "bin_hi", "count"],
                zip(h.bin_edges[:-1], h.bin_edges[1:], h.counts), comment=header))
            written.append(_write_text(out / f"hist_{cid}.svg", svg_histogram(
                h.bin_edges, h.counts, f"{dataset.categories[cid]} (class {cid})", log_y)))

    if clusters:
        table = build_weight_table(dataset, config)
        rows = []
        for cid, res in table.classes.items():
            model, edges = res.model, res.histogram.bin_edges
            for s in range(model.k):
                a, b = model.boundaries[s], model.boundaries[s + 1]
                rows.append((cid, s, edges[a], edges[b], int(model.raw_count[s]),
                             float(model.amplified_count[s])))
            colors = [_PALETTE[s % len(_PALETTE)]
                      for s in model.cluster_of_bin(np.arange(res.histogram.m))]
            written.append(_write_text(out / f"clusters_{cid}.svg", svg_histogram(
                edges, res.histogram.counts,
                f"{dataset.categories[cid]} (class {cid}), {model.k} size clusters",
                log_y, colors)))
        written.append(write_csv(
            out / "clusters.csv",
            ["class_id", "cluster", "area_lo", "area_hi", "raw_count", "amplified_mass"],
            rows, comment=header))

    summary_path = out / "summary.json"
    files = sorted({p.name for p in written} | {summary_path.name})
    all_counts = [len(v) for v in buckets.values()]
    write_json(summary_path, {
        "header": header,
        "files": files,
        "instances": total,
        "class_gini": gini(all_counts),
        "classes": per_class,
    })
    written.append(summary_path)
    return written
