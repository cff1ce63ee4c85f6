"""Exact weighted 1D k-means over histogram bins.

In one dimension an optimal k-means partition of sorted points is a set of
contiguous runs, so the optimum is found by dynamic programming over cut
points instead of Lloyd iterations. No randomness is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from aruba.errors import ConfigError
from aruba.histogram import ClassSizeHistogram

# full (m+1)^2 cost matrix up to this many bins, column blocks beyond
_DENSE_LIMIT = 3000


@dataclass(frozen=True)
class ClusterModel:
    """``k`` contiguous bin runs; cluster ``s`` covers bins ``boundaries[s]:boundaries[s+1]``."""

    class_id: int
    k: int
    boundaries: np.ndarray
    centroids: np.ndarray
    raw_count: np.ndarray
    amplified_count: np.ndarray

    def cluster_of_bin(self, bins) -> np.ndarray:
        return np.searchsorted(self.boundaries, np.asarray(bins), side="right") - 1


def weighted_sse(x, w, boundaries) -> float:
    """Within-cluster weighted sum of squares, evaluated directly (two-pass)."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    total = 0.0
    for a, b in zip(boundaries[:-1], boundaries[1:]):
        ws = w[a:b]
        mass = ws.sum()
        if mass <= 0:
            continue
        mu = (ws * x[a:b]).sum() / mass
        total += float((ws * (x[a:b] - mu) ** 2).sum())
    return total


class _Costs:
    """Cost of making bins ``[j, i)`` one cluster, from prefix sums."""

    def __init__(self, x: np.ndarray, w: np.ndarray):
        span = x[-1] - x[0]
        z = (x - x[0]) / span if span > 0 else np.zeros_like(x)
        zero = np.zeros(1)
        self.s0 = np.concatenate([zero, np.cumsum(w)])
        self.s1 = np.concatenate([zero, np.cumsum(w * z)])
        self.s2 = np.concatenate([zero, np.cumsum(w * z * z)])
        self.pos = np.concatenate([[0], np.cumsum(w > 0)])
        self.m = len(x)
        self.dense = None
        self.dense = self.block(0, self.m + 1) if self.m <= _DENSE_LIMIT else None

    def block(self, i0: int, i1: int) -> np.ndarray:
        """Matrix ``C[j, i - i0]`` for ``i in [i0, i1)``; infeasible entries are inf."""
        if self.dense is not None:
            return self.dense[:, i0:i1]
        i = np.arange(i0, i1)
        W = self.s0[i][None, :] - self.s0[:, None]
        S = self.s1[i][None, :] - self.s1[:, None]
        Q = self.s2[i][None, :] - self.s2[:, None]
        P = self.pos[i][None, :] - self.pos[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            c = Q - S * S / W
        c = np.maximum(c, 0.0)
        c[P <= 0] = np.inf
        return c


def optimal_partition(x, w, k: int) -> np.ndarray:
    """Boundaries (length ``k+1``) of the minimum weighted-SSE interval partition.

    Every cluster holds at least one positive-weight point; zero-weight points
    join whichever run contains them. Ties go to the smaller start index of the
    last cluster.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    m = len(x)
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ConfigError(f"cluster count must be a positive integer, got {k!r}")
    if len(w) != m or m == 0:
        raise ValueError("centers and weights must be non-empty and equal length")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    if np.any(np.diff(x) < 0):
        raise ValueError("bin centers must be ascending")
    feasible = int(np.count_nonzero(w > 0))
    if k > feasible:
        raise ConfigError(
            f"k={k} exceeds the {feasible} bins with positive mass; use k <= {feasible}")

    costs = _Costs(x, w)
    chunk = max(1, 2_000_000 // (m + 1))
    prev = costs.block(0, m + 1)[0].copy()  # one cluster over [0, i)
    back = np.zeros((k, m + 1), dtype=np.int64)
    for t in range(1, k):
        cur = np.full(m + 1, np.inf)
        for i0 in range(0, m + 1, chunk):
            i1 = min(m + 1, i0 + chunk)
            total = prev[:, None] + costs.block(i0, i1)
            arg = np.argmin(total, axis=0)
            cur[i0:i1] = total[arg, np.arange(i1 - i0)]
            back[t, i0:i1] = arg
        prev = cur
    bounds = [m]
    for t in range(k - 1, 0, -1):
        bounds.append(int(back[t, bounds[-1]]))
    bounds.append(0)
    return np.array(bounds[::-1], dtype=np.int64)


def cluster_sizes(bin_centers, amplified, k: int, raw_counts=None,
                  class_id: int = 0) -> ClusterModel:
    centers = np.asarray(bin_centers, dtype=float)
    amp = np.asarray(amplified, dtype=float)
    bounds = optimal_partition(centers, amp, k)
    raw = np.zeros(len(centers), dtype=np.int64) if raw_counts is None \
        else np.asarray(raw_counts, dtype=np.int64)
    cents, raws, amps = [], [], []
    for a, b in zip(bounds[:-1], bounds[1:]):
        mass = amp[a:b].sum()
        cents.append((amp[a:b] * centers[a:b]).sum() / mass)
        raws.append(int(raw[a:b].sum()))
        amps.append(float(mass))
    return ClusterModel(class_id, int(k), bounds, np.array(cents),
                        np.array(raws, dtype=np.int64), np.array(amps))


def cluster_histogram(hist: ClassSizeHistogram, amplified, k: int) -> ClusterModel:
    return cluster_sizes(hist.centers, amplified, k, hist.counts, hist.class_id)


def assign_instances(hist: ClassSizeHistogram, model: ClusterModel) -> dict[str, int]:
    clusters = model.cluster_of_bin(np.arange(hist.m))
    return {iid: int(clusters[b]) for b, members in enumerate(hist.bin_members)
            for iid in members}


def lloyd_partition(x, w, k: int, rng: np.random.Generator, max_iter: int = 300) -> np.ndarray:
    """Weighted Lloyd iterations from a random start; returns interval boundaries.

    Only used as a baseline to check the exact partition against.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    support = np.flatnonzero(w > 0)
    cents = np.sort(x[rng.choice(support, size=k, replace=False)])
    labels = None
    for _ in range(max_iter):
        mids = (cents[:-1] + cents[1:]) / 2.0
        new = np.searchsorted(mids, x, side="left")
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        mass = np.bincount(labels, weights=w, minlength=k)
        sums = np.bincount(labels, weights=w * x, minlength=k)
        keep = mass > 0
        cents = np.where(keep, sums / np.where(keep, mass, 1.0), cents)
        cents = np.sort(cents)
    # labels are non-decreasing in x, so clusters are runs
    present = np.unique(labels)
    starts = [int(np.flatnonzero(labels == c)[0]) for c in present]
    return np.array(starts + [len(x)], dtype=np.int64)
