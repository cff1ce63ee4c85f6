"""Independent reference implementations used only by the tests.

None of these share code with the package: they are deliberately naive
(loops, enumeration, arbitrary precision) so they can check the fast paths.
"""

import itertools
import math

import mpmath
import numpy as np


def naive_amplify(counts, taps):
    m, w = len(counts), len(taps)
    h = (w - 1) // 2
    out = [0.0] * m
    for k in range(m):
        acc = 0.0
        for i in range(-h, h + 1):
            if 0 <= k + i < m:
                acc += taps[i + h] * counts[k + i]
        out[k] = acc
    return np.array(out)


def gaussian_taps_mp(window, sigma, dps=50):
    with mpmath.workdps(dps):
        h = (window - 1) // 2
        s = mpmath.mpf(sigma)
        return [mpmath.exp(-mpmath.mpf(i * i) / (2 * s * s)) for i in range(-h, h + 1)]


def effective_number_mp(mass, beta, root, dps=60):
    """(1 - beta**(mass**(1/root))) / (1 - beta) with ``dps`` significant digits to spare.

    beta is taken as its exact double; precision grows for tiny exponents so
    the literal formula does not cancel.
    """
    if mass == 0:
        return mpmath.mpf(0)
    extra = max(0, int(-math.log10(mass) / root) + 5)
    with mpmath.workdps(dps + extra):
        b = mpmath.mpf(beta)
        x = mpmath.mpf(mass) ** (mpmath.mpf(1) / root)
        return (1 - b ** x) / (1 - b)


def direct_sse(x, w, bounds):
    total = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        ws, xs = w[a:b], x[a:b]
        mass = sum(ws)
        if mass <= 0:
            continue
        mu = sum(wi * xi for wi, xi in zip(ws, xs)) / mass
        total += sum(wi * (xi - mu) ** 2 for wi, xi in zip(ws, xs))
    return total


def all_interval_partitions(m, k):
    for cuts in itertools.combinations(range(1, m), k - 1):
        yield (0,) + cuts + (m,)


def exhaustive_min_sse(x, w, k, sse):
    """Minimum ``sse`` over every interval partition whose clusters all carry mass."""
    best = math.inf
    for bounds in all_interval_partitions(len(x), k):
        if any(sum(w[a:b]) <= 0 for a, b in zip(bounds[:-1], bounds[1:])):
            continue
        best = min(best, sse(x, w, np.array(bounds)))
    return best


def brute_force_bins(values, edges):
    """Bin by linear scan over edges: [e_i, e_{i+1}) with the last bin closed."""
    m = len(edges) - 1
    counts = [0] * m
    for v in values:
        for i in range(m):
            last = i == m - 1
            if edges[i] <= v < edges[i + 1] or (last and edges[i] <= v <= edges[i + 1]):
                counts[i] += 1
                break
        else:
            raise AssertionError(f"value {v} outside edges")
    return counts


def triangle_fan_area(pts):
    """Signed-area sum over a fan of triangles from vertex 0 (equals shoelace)."""
    (x0, y0) = pts[0]
    acc = 0.0
    for (x1, y1), (x2, y2) in zip(pts[1:-1], pts[2:]):
        acc += (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
    return abs(acc) / 2.0


def gini_pairwise(values):
    x = np.asarray(values, dtype=float)
    n = len(x)
    return float(np.abs(x[:, None] - x[None, :]).sum() / (2 * n * n * x.mean()))
