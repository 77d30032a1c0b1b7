"""Empirical distribution utilities, fit statistics and per-path seeding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParameterError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class Sample:
    values: np.ndarray
    sorted: bool = False

    @classmethod
    def of(cls, values) -> "Sample":
        v = np.sort(np.asarray(values, dtype=float).ravel())
        v.setflags(write=False)
        return cls(values=v, sorted=True)

    def __len__(self):
        return self.values.size

    def sorted_values(self) -> np.ndarray:
        return self.values if self.sorted else np.sort(self.values)


def _as_sample(sample) -> Sample:
    return sample if isinstance(sample, Sample) else Sample.of(sample)


def ks_distance(sample, cdf: Callable) -> float:
    """One-sample Kolmogorov-Smirnov distance ``sup |F_n - F|``.

    ``-inf`` entries are allowed and count as mass below every finite point.
    """
    x = _as_sample(sample).sorted_values()
    n = x.size
    if n == 0:
        raise ParameterError("empty sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(i / n - F)), np.max(np.abs((i - 1) / n - F))))


def ks_two_sample(x, y) -> float:
    """Two-sample Kolmogorov-Smirnov distance ``sup |F_x - F_y|``."""
    x = _as_sample(x).sorted_values()
    y = _as_sample(y).sorted_values()
    if x.size == 0 or y.size == 0:
        raise ParameterError("empty sample")
    pts = np.concatenate([x, y])
    fx = np.searchsorted(x, pts, side="right") / x.size
    fy = np.searchsorted(y, pts, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def ecdf(sample, points) -> np.ndarray:
    x = _as_sample(sample).sorted_values()
    return np.searchsorted(x, np.asarray(points, dtype=float), side="right") / max(x.size, 1)


def position_chisq(counts, probs) -> float:
    """Pearson statistic ``sum (c_i - N p_i)^2 / (N p_i)``."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if counts.shape != probs.shape:
        raise ParameterError("counts and probs differ in length")
    n = counts.sum()
    if n < 1:
        raise ParameterError("need at least one count")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ParameterError("probs must sum to 1")
    expected = n * probs
    if np.any(expected <= 0):
        raise ParameterError("zero expected count")
    return float(np.sum((counts - expected) ** 2 / expected))


def standard_error(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(v.std(ddof=1) / np.sqrt(v.size))


def seed_stream(master_seed: int, path_index: int) -> np.random.Generator:
    """Counter-based stream for one path: Philox keyed by ``(master_seed, path_index)``.

    The stream depends only on the pair, never on worker count or the order
    in which paths are run.
    """
    seq = np.random.SeedSequence(int(master_seed) & _MASK64, spawn_key=(int(path_index) & _MASK64,))
    return np.random.Generator(np.random.Philox(seq))
