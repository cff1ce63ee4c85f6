"""Class-wise segregation and equal-width area histograms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from aruba.errors import ConfigError, EmptyDatasetError
from aruba.ingest import Dataset


@dataclass(frozen=True)
class ClassSizeHistogram:
    """Equal-width histogram of one class's object areas.

    Bins are half-open ``[lo, hi)`` except the last one, which is closed.
    A class whose areas are all identical gets a single zero-width bin
    ``[a, a]`` regardless of the requested bin count.
    """

    class_id: int
    bin_edges: np.ndarray
    counts: np.ndarray
    bin_members: tuple

    @property
    def m(self) -> int:
        return len(self.counts)

    @property
    def centers(self) -> np.ndarray:
        return (self.bin_edges[:-1] + self.bin_edges[1:]) / 2.0

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def segregate_by_class(dataset: Dataset, include_ignored: bool = False) -> dict[int, list]:
    """Map ``class_id -> [(instance_id, area), ...]`` over retained instances."""
    buckets: dict[int, list] = {}
    for inst in dataset.retained(include_ignored):
        buckets.setdefault(inst.class_id, []).append((inst.instance_id, inst.area))
    if not buckets:
        raise EmptyDatasetError("dataset has no retained instances")
    return {cid: buckets[cid] for cid in sorted(buckets)}


def equal_width_edges(lo: float, hi: float, m: int) -> np.ndarray:
    # lo + span * (i/m): aligned edges of m and 2m bins are bit-identical
    edges = lo + (hi - lo) * (np.arange(m + 1) / m)
    edges[-1] = hi
    return edges


def bin_index(edges: np.ndarray, values) -> np.ndarray:
    """Bin of each value under the half-open / closed-last rule."""
    m = len(edges) - 1
    idx = np.searchsorted(edges, np.asarray(values, dtype=float), side="right") - 1
    return np.clip(idx, 0, m - 1)


def build_histogram(areas, bin_count: int, class_id: int = 0,
                    instance_ids=None) -> ClassSizeHistogram:
    if isinstance(bin_count, bool) or not isinstance(bin_count, (int, np.integer)) or bin_count < 1:
        raise ConfigError(f"bin count must be a positive integer, got {bin_count!r}")
    areas = np.asarray(areas, dtype=float)
    if areas.size == 0:
        raise EmptyDatasetError(f"class {class_id}: no areas to bin")
    if instance_ids is None:
        instance_ids = [str(i) for i in range(len(areas))]
    lo, hi = float(areas.min()), float(areas.max())
    if lo == hi:
        edges = np.array([lo, hi])
        idx = np.zeros(len(areas), dtype=int)
    else:
        edges = equal_width_edges(lo, hi, int(bin_count))
        idx = bin_index(edges, areas)
    m = len(edges) - 1
    counts = np.bincount(idx, minlength=m).astype(np.int64)
    members = [[] for _ in range(m)]
    for iid, b in zip(instance_ids, idx):
        members[b].append(iid)
    return ClassSizeHistogram(class_id, edges, counts, tuple(tuple(b) for b in members))


def class_histograms(dataset: Dataset, bin_count: int,
                     include_ignored: bool = False) -> dict[int, ClassSizeHistogram]:
    out = {}
    for cid, items in segregate_by_class(dataset, include_ignored).items():
        ids = [iid for iid, _ in items]
        out[cid] = build_histogram([a for _, a in items], bin_count, cid, ids)
    return out
