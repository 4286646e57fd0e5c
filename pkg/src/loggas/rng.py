"""Deterministic, seedable randomness and basic Monte Carlo containers.

Streams are identified by ``(seed, stream_id)``; the same pair always
reproduces the same sequence, independent of worker count or chunking.
Parallel code assigns one ``stream_id`` per replica instead of sharing a
stream.  The stream-id space is carved by purpose via :func:`substream_id`
so that e.g. sampling replicas and permutation draws never collide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels
from .errors import DomainError

#: Purpose tags for substream_id (top 16 bits of the stream id).
PURPOSE_SAMPLING = 0
PURPOSE_PERMUTATION = 1
PURPOSE_DYNAMICS = 2
PURPOSE_INITIAL = 3


def substream_id(purpose, index=0):
    """Stream id for (purpose, index); 48 bits of index space per purpose."""
    if index < 0 or index >= (1 << 48):
        raise DomainError("substream index out of range")
    return (purpose << 48) | index


class RngStream:
    """A single random stream.

    Thin wrapper over the active kernel lane's core.  Not thread-safe by
    design (single-owner); all draws advance the stream state.
    """

    __slots__ = ("_core",)

    def __init__(self, seed, stream_id=0):
        self._core = kernels.RngCore(seed, stream_id)

    @property
    def seed(self):
        return self._core.seed

    @property
    def stream_id(self):
        return self._core.stream_id

    def uniform(self):
        """Uniform draw on [0, 1)."""
        return self._core.uniform()

    def normal(self):
        """Standard Gaussian draw (Box-Muller, pair-cached)."""
        return self._core.normal()

    def normals(self, k):
        """List of k standard Gaussian draws."""
        return self._core.normals(k)

    def substream(self, index, purpose=PURPOSE_SAMPLING):
        """Fresh stream with the same seed and a derived stream id."""
        return RngStream(self.seed, substream_id(purpose, index))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def sample_gaussian(rng, mean, variance):
    """Gaussian draw with the given mean and variance.

    Zero variance returns the mean exactly without consuming any draws.
    """
    if variance < 0.0:
        raise DomainError(f"variance must be >= 0, got {variance}")
    if variance == 0.0:
        return float(mean)
    return mean + math.sqrt(variance) * rng.normal()


def sample_chi(rng, k):
    """Chi draw with k > 0 (real) degrees of freedom; E[X^2] = k."""
    if k <= 0.0:
        raise DomainError(f"degrees of freedom must be > 0, got {k}")
    return rng._core.chi(k)


def sample_gamma(rng, shape, rate):
    """Gamma draw with the given shape and rate (mean shape/rate)."""
    if shape <= 0.0 or rate <= 0.0:
        raise DomainError(
            f"shape and rate must be > 0, got shape={shape}, rate={rate}"
        )
    return rng._core.gamma(shape) / rate


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo scalar estimate."""

    mean: float
    std_error: float
    n_samples: int

    def __post_init__(self):
        if self.std_error < 0.0:
            raise DomainError("std_error must be >= 0")
        if self.n_samples <= 0:
            raise DomainError("n_samples must be positive")


class MomentAccumulator:
    """Streaming mean/variance accumulator with associative merging.

    Welford updates; merging two accumulators gives the same result as
    accumulating their samples in any order, so chunked or threaded
    aggregation is schedule-independent.
    """

    __slots__ = ("count", "mean", "_m2")

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def add(self, x):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)

    def add_array(self, xs):
        import numpy as np

        xs = np.asarray(xs, dtype=float).ravel()
        if xs.size == 0:
            return
        other = MomentAccumulator()
        other.count = int(xs.size)
        other.mean = float(xs.mean())
        other._m2 = float(((xs - other.mean) ** 2).sum())
        self.merge(other)

    def merge(self, other):
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self._m2 = other.count, other.mean, other._m2
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self._m2 += other._m2 + delta * delta * self.count * other.count / n
        self.mean += delta * other.count / n
        self.count = n
        return self

    @property
    def variance(self):
        if self.count < 2:
            return 0.0
        return self._m2 / (self.count - 1)

    def estimate(self):
        """McEstimate of the mean with its standard error."""
        se = math.sqrt(self.variance / self.count) if self.count > 1 else 0.0
        return McEstimate(self.mean, se, self.count)


def mc_mean(values):
    """McEstimate of the mean of a 1D sample array."""
    acc = MomentAccumulator()
    acc.add_array(values)
    return acc.estimate()
