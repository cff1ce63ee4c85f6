"""Peak-normalized discrete Gaussian kernel and Gaussian amplification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from aruba.errors import ConfigError


@dataclass(frozen=True)
class GaussianKernel:
    window: int
    sigma: float
    taps: np.ndarray

    @property
    def half(self) -> int:
        return (self.window - 1) // 2

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.half, self.half + 1)


def make_kernel(window: int, sigma: float) -> GaussianKernel:
    """Taps ``exp(-i**2 / (2 sigma**2))`` for ``i`` in ``[-(w-1)/2, (w-1)/2]``.

    The center tap is exactly 1, so the kernel already equals itself divided
    by its maximum.
    """
    if isinstance(window, bool) or not isinstance(window, (int, np.integer)):
        raise ConfigError(f"kernel window must be an integer, got {window!r}")
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"kernel window must be odd and >= 1, got {window}")
    if not (sigma > 0) or not np.isfinite(sigma):
        raise ConfigError(f"kernel sigma must be positive, got {sigma!r}")
    half = (window - 1) // 2
    i = np.arange(-half, half + 1, dtype=float)
    taps = np.exp(-(i * i) / (2.0 * float(sigma) ** 2))
    taps.setflags(write=False)
    return GaussianKernel(int(window), float(sigma), taps)


def amplify(counts, kernel: GaussianKernel) -> np.ndarray:
    """Zero-padded correlation ``GA[k] = sum_i taps[i] * counts[k + i]``.

    Direct summation, one shifted slice per tap.
    """
    b = np.asarray(counts, dtype=float)
    m = len(b)
    out = np.zeros(m)
    for off, tap in zip(kernel.offsets, kernel.taps):
        if abs(off) >= m:
            continue
        if off >= 0:
            out[: m - off] += tap * b[off:]
        else:
            out[-off:] += tap * b[: m + off]
    return out
