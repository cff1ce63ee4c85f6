"""Size-cluster effective numbers and regression-loss weights.

Per class: histogram -> Gaussian amplification -> exact 1D k-means ->
effective number of the cluster's amplified mass (with an n-th root) ->
``w = 1 - 1/E``. The class-balanced baseline weight is provided for
comparison reports.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from aruba import __version__
from aruba.cluster import ClusterModel, assign_instances, cluster_histogram
from aruba.errors import ConfigError, EmptyClusterError
from aruba.histogram import ClassSizeHistogram, class_histograms
from aruba.ingest import Dataset
from aruba.kernel import amplify, make_kernel

log = logging.getLogger(__name__)

# Ẽ below 1 by more than rounding means a genuinely fractional mass
_SUB_UNIT_TOL = 1e-9

NOTES = (
    "object size = annotated box area (w*h) or polygon shoelace area, in pixels^2",
    "ignored/difficult/crowd instances excluded unless include_ignored is set",
    "equal-width linear-area bins over each class's own [min, max] area range",
    "kernel taps exp(-i^2/(2 sigma^2)), i in [-(w-1)/2, (w-1)/2], zero-padded convolution",
    "clusters: exact weighted 1D k-means over bin centers, weights = amplified counts",
    "amplified cluster mass GA(n_ys) = sum of amplified bin values inside the cluster",
    "effective number E = (1 - beta^(mass^(1/root))) / (1 - beta); weight = 1 - 1/E",
    "clusters with no instances are dropped and receive no weight",
)


@dataclass(frozen=True)
class WeightConfig:
    beta: float = 0.9999
    root: int = 2
    k: int = 50
    window: int = 11
    sigma: float = 2.0
    bins: int = 1000
    normalize: bool = False
    weight_floor: float | None = None
    include_ignored: bool = False

    def __post_init__(self):
        validate_beta(self.beta)
        validate_root(self.root)
        for name in ("k", "bins"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        make_kernel(self.window, self.sigma)
        if self.weight_floor is not None and not (0 <= self.weight_floor < 1):
            raise ConfigError(f"weight floor must lie in [0, 1), got {self.weight_floor}")

    def to_dict(self) -> dict:
        return asdict(self)


def validate_beta(beta: float) -> None:
    if not isinstance(beta, (int, float, np.floating)) or not (0.0 <= beta < 1.0):
        raise ConfigError(f"beta must lie in [0, 1), got {beta!r}")


def validate_root(root: int) -> None:
    if isinstance(root, bool) or not isinstance(root, (int, np.integer)) or root < 1:
        raise ConfigError(f"root must be an integer >= 1, got {root!r}")


def effective_number(amplified_count, beta: float, root: int = 2):
    """Stabilized effective number ``(1 - beta**x) / (1 - beta)``, ``x = mass**(1/root)``.

    Evaluated as ``-expm1(x * log(beta)) / (1 - beta)`` so that beta close to 1
    does not cancel. Accepts scalars or arrays.
    """
    validate_beta(beta)
    validate_root(root)
    mass = np.asarray(amplified_count, dtype=float)
    if np.any(mass < 0) or not np.all(np.isfinite(mass)):
        raise ValueError("amplified count must be finite and non-negative")
    if root == 1:
        x = mass
    elif root == 2:
        x = np.sqrt(mass)
    else:
        x = mass ** (1.0 / root)
    if beta == 0:
        out = np.where(x > 0, 1.0, 0.0)
    else:
        out = -np.expm1(x * math.log(beta)) / (1.0 - beta)
        out = np.where(x == 1, 1.0, out)
    return float(out) if out.ndim == 0 else out


def cluster_weight(effective: float) -> float:
    """``1 - 1/E``; sub-unit effective numbers are clamped to 0."""
    if effective <= 0:
        raise EmptyClusterError("empty cluster has no weight")
    if effective < 1.0:
        if effective < 1.0 - _SUB_UNIT_TOL:
            log.warning("effective number %.6g < 1, weight clamped to 0", effective)
        return 0.0
    return 1.0 - 1.0 / effective


def class_balanced_weight(class_counts: dict, beta: float) -> dict:
    """Per-class baseline weights ``(1 - beta) / (1 - beta**n_y)``."""
    validate_beta(beta)
    out = {}
    for cls, n in class_counts.items():
        if n < 1:
            raise ValueError(f"class {cls!r}: count must be >= 1, got {n}")
        out[cls] = 1.0 / effective_number(n, beta, 1)
    return out


@dataclass(frozen=True)
class ClusterEntry:
    class_id: int
    cluster: int
    area_lo: float
    area_hi: float
    raw_count: int
    amplified_mass: float
    effective_number: float
    weight: float


@dataclass(frozen=True)
class ClassResult:
    class_id: int
    histogram: ClassSizeHistogram
    amplified: np.ndarray
    model: ClusterModel
    k_requested: int
    entries: tuple
    assignment: dict
    warnings: tuple = ()
    dropped: tuple = ()

    @property
    def k_used(self) -> int:
        return self.model.k


@dataclass(frozen=True)
class WeightTable:
    config: WeightConfig
    classes: dict
    instances: dict  # instance_id -> (class_id, cluster, weight)
    warnings: tuple = ()
    notes: tuple = NOTES

    @property
    def entries(self) -> list[ClusterEntry]:
        return [e for r in self.classes.values() for e in r.entries]

    def weight_of(self, instance_id: str) -> float:
        return self.instances[instance_id][2]

    def k_used(self) -> dict:
        return {cid: r.k_used for cid, r in self.classes.items()}


def _class_weights(hist: ClassSizeHistogram, config: WeightConfig, kernel) -> ClassResult:
    warnings = []
    amp = amplify(hist.counts, kernel)
    feasible = int(np.count_nonzero(amp > 0))
    k = min(config.k, feasible)
    if k < config.k:
        warnings.append(f"class {hist.class_id}: only {feasible} bins with positive mass, "
                        f"k reduced from {config.k} to {k}")
    model = cluster_histogram(hist, amp, k)
    assignment = assign_instances(hist, model)

    weights, dropped = {}, []
    eff = effective_number(model.amplified_count, config.beta, config.root)
    for s in range(model.k):
        if model.raw_count[s] == 0:
            dropped.append(s)
            continue
        e = float(eff[s])
        if e < 1.0 - _SUB_UNIT_TOL:
            warnings.append(f"class {hist.class_id} cluster {s}: effective number "
                            f"{e:.6g} < 1, weight clamped to 0")
        w = cluster_weight(e)
        if config.weight_floor is not None:
            w = max(w, config.weight_floor)
        weights[s] = w
    if config.normalize:
        n = sum(int(model.raw_count[s]) for s in weights)
        mean = sum(int(model.raw_count[s]) * w for s, w in weights.items()) / n
        if mean > 0:
            weights = {s: w / mean for s, w in weights.items()}
        else:
            warnings.append(f"class {hist.class_id}: all weights zero, normalization skipped")

    edges = hist.bin_edges
    entries = tuple(
        ClusterEntry(hist.class_id, s, float(edges[model.boundaries[s]]),
                     float(edges[model.boundaries[s + 1]]), int(model.raw_count[s]),
                     float(model.amplified_count[s]), float(eff[s]), weights[s])
        for s in sorted(weights))
    return ClassResult(hist.class_id, hist, amp, model, config.k, entries, assignment,
                       tuple(warnings), tuple(dropped))


def build_weight_table(dataset: Dataset, config: WeightConfig | None = None,
                       jobs: int = 1) -> WeightTable:
    config = config or WeightConfig()
    if config.beta == 0:
        log.warning("beta = 0: every weight is 0")
    kernel = make_kernel(config.window, config.sigma)
    hists = class_histograms(dataset, config.bins, config.include_ignored)
    order = sorted(hists)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(lambda c: _class_weights(hists[c], config, kernel), order))
    else:
        results = [_class_weights(hists[c], config, kernel) for c in order]

    classes, instances, warnings = {}, {}, []
    if config.beta == 0:
        warnings.append("beta = 0: every weight is 0")
    for res in results:
        classes[res.class_id] = res
        warnings.extend(res.warnings)
        w_by_cluster = {e.cluster: e.weight for e in res.entries}
        for iid, s in res.assignment.items():
            instances[iid] = (res.class_id, s, w_by_cluster[s])
    for msg in warnings:
        log.warning(msg)
    return WeightTable(config, classes, instances, tuple(warnings))


def weight_file_dict(table: WeightTable, dataset: Dataset, run_config: dict | None = None) -> dict:
    """JSON-ready weight file: header, per-class cluster tables, per-instance map."""
    header = {
        "tool": "aruba",
        "version": __version__,
        "config": run_config if run_config is not None else table.config.to_dict(),
        "weight_config": table.config.to_dict(),
        "k_used": {str(c): k for c, k in table.k_used().items()},
        "notes": list(table.notes),
        "warnings": list(table.warnings),
    }
    classes = {}
    for cid, res in table.classes.items():
        classes[str(cid)] = {
            "name": dataset.categories.get(cid, str(cid)),
            "k_requested": res.k_requested,
            "k_used": res.k_used,
            "dropped_empty_clusters": list(res.dropped),
            "clusters": [
                {"cluster": e.cluster, "area_lo": e.area_lo, "area_hi": e.area_hi,
                 "raw_count": e.raw_count, "amplified_mass": e.amplified_mass,
                 "effective_number": e.effective_number, "weight": e.weight}
                for e in res.entries
            ],
        }
    instances = {iid: {"class": c, "cluster": s, "weight": w}
                 for iid, (c, s, w) in table.instances.items()}
    return {"header": header, "classes": classes, "instances": instances}


def instance_rows(table: WeightTable, dataset: Dataset) -> list[tuple]:
    rows = []
    for inst in dataset.instances:
        if inst.instance_id in table.instances:
            c, s, w = table.instances[inst.instance_id]
            rows.append((inst.instance_id, inst.image_id, c, s, w))
    return rows
