"""Self-organizing map training and winner-takes-all quantization.

A map is a rectangular grid of neurons, each holding a weight vector in
input space. Inference finds the best-matching unit (BMU): the neuron whose
weights minimize the squared Euclidean distance to the input, ties broken by
the lowest index. Training makes `epochs` shuffled passes over the data and,
for every sample, pulls each weight toward the sample:

    w_i += (x - w_i) * alpha * T(t) * exp(-d(i*, i)^2 / (2 * (theta * T(t))^2))

where T(t) is the per-epoch decay (linear 1 - t/E or exponential e^(-t/E)),
d(i*, i) is the grid distance from the BMU, and t runs from 0 to E - 1 so
the linear schedule never reaches zero width.

Weights are float32 end to end, matching the on-disk formats, so a trained
map round-trips through persistence without changing a single prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EmptyDataError, ShapeMismatchError
from .seeding import make_rng


class Decay(str, Enum):
    """Epoch decay schedule for learning rate and neighborhood width."""

    LINEAR = "linear"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class GridTopology:
    """Rectangular neuron grid; neuron i sits at (i // cols, i % cols)."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def n(self) -> int:
        return self.rows * self.cols

    def coords(self, i: int) -> tuple[int, int]:
        self.check_index(i)
        return divmod(i, self.cols)

    def check_index(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise ValueError(f"neuron index {i} out of range [0, {self.n})")

    def squared_grid_distances(self) -> np.ndarray:
        """(N, N) matrix of squared Euclidean distances between grid cells."""
        rows, cols = np.divmod(np.arange(self.n), self.cols)
        dr = rows[:, None] - rows[None, :]
        dc = cols[:, None] - cols[None, :]
        return (dr * dr + dc * dc).astype(np.float64)


def near_square_grid(n: int) -> GridTopology:
    """Default grid for n neurons: rows is the largest divisor of n <= sqrt(n)."""
    if n < 1:
        raise ValueError(f"neuron count must be positive, got {n}")
    rows = 1
    for q in range(1, math.isqrt(n) + 1):
        if n % q == 0:
            rows = q
    return GridTopology(rows, n // rows)


@dataclass(frozen=True)
class SomTrainConfig:
    """Hyperparameters for one training run.

    Args:
        epochs: Number of shuffled passes over the data, at least 1.
        alpha: Learning rate in (0, 1].
        theta: Neighborhood width scale in grid-distance units. None means
            "use max(rows, cols) / 2 of the grid being trained".
        decay: Schedule applied to both the learning rate and the width.
        seed: 64-bit seed driving initialization and per-epoch shuffling.
    """

    epochs: int
    alpha: float = 0.1
    theta: float | None = None
    decay: Decay = Decay.LINEAR
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.theta is not None and not self.theta > 0.0:
            raise ValueError(f"theta must be positive, got {self.theta}")


def resolved_theta(config: SomTrainConfig, topology: GridTopology) -> float:
    """The neighborhood width scale actually used for a given grid."""
    if config.theta is not None:
        return config.theta
    return max(topology.rows, topology.cols) / 2.0


def decay_factor(config: SomTrainConfig, t: int) -> float:
    """T(t) for epoch t; strictly positive because t stops at epochs - 1."""
    if not 0 <= t < config.epochs:
        raise ValueError(f"epoch index {t} out of range [0, {config.epochs})")
    if config.decay is Decay.LINEAR:
        return 1.0 - t / config.epochs
    return math.exp(-t / config.epochs)


def grid_distance(topology: GridTopology, i: int, j: int) -> float:
    """Euclidean distance between two neurons' grid coordinates."""
    ri, ci = topology.coords(i)
    rj, cj = topology.coords(j)
    return math.hypot(ri - rj, ci - cj)


def neighborhood(
    config: SomTrainConfig,
    topology: GridTopology,
    t: int,
    i_star: int,
    i: int,
) -> float:
    """Gaussian falloff exp(-d^2 / (2 * (theta * T(t))^2)); 1 at the BMU."""
    width = resolved_theta(config, topology) * decay_factor(config, t)
    d = grid_distance(topology, i_star, i)
    return math.exp(-(d * d) / (2.0 * width * width))


@dataclass
class Som:
    """A map: grid topology plus an (N, dim) float32 weight matrix.

    Treat a trained map as immutable; training returns a new instance.
    """

    grid: GridTopology
    weights: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float32)
        if w.ndim != 2:
            raise ValueError(f"weights must be 2-D, got shape {w.shape}")
        if w.shape[0] != self.grid.n:
            raise ShapeMismatchError(self.grid.n, w.shape[0], what="neuron count")
        if w.shape[1] < 1:
            raise ValueError("weight vectors must have at least one component")
        if not np.isfinite(w).all():
            raise ValueError("weights contain non-finite components")
        self.weights = w

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def _as_samples(data, dim: int | None = None) -> np.ndarray:
    """Canonicalize input samples to a float32 (m, d) matrix."""
    arr = np.ascontiguousarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D sample matrix, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ShapeMismatchError(dim, arr.shape[1])
    return arr


def _check_finite_samples(data: np.ndarray) -> None:
    finite = np.isfinite(data).all(axis=1)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise ValueError(f"sample {bad} has non-finite components")


def _squared_dists(weights: np.ndarray, xs: np.ndarray) -> np.ndarray:
    # Single distance kernel shared by every BMU path so that scalar and
    # batch quantization agree bitwise.
    diff = xs[:, None, :] - weights[None, :, :]
    return (diff * diff).sum(axis=2)


def bmu(som: Som, x) -> int:
    """Index of the best-matching unit for one input vector."""
    return int(bmu_batch(som, np.asarray(x, dtype=np.float32)[None, :])[0])


def bmu_batch(som: Som, xs, chunk: int = 256) -> np.ndarray:
    """BMU indices for a batch of input vectors, shape (m,) int32."""
    xs = _as_samples(xs, som.dim)
    _check_finite_samples(xs)
    out = np.empty(len(xs), dtype=np.int32)
    for start in range(0, len(xs), chunk):
        block = xs[start : start + chunk]
        out[start : start + len(block)] = np.argmin(
            _squared_dists(som.weights, block), axis=1
        )
    return out


def quantize_onehot(som: Som, x) -> np.ndarray:
    """One-hot N-vector with the single 1 at the BMU."""
    out = np.zeros(som.n, dtype=np.uint8)
    out[bmu(som, x)] = 1
    return out


def init_som(config: SomTrainConfig, dim: int, topology: GridTopology, data) -> Som:
    """Initialize weights by sampling training vectors with replacement."""
    samples = _as_samples(data, dim)
    if len(samples) == 0:
        raise EmptyDataError("cannot initialize a map from an empty dataset")
    rng = make_rng(config.seed)
    picks = rng.integers(0, len(samples), size=topology.n)
    return Som(topology, samples[picks].copy())


def train_som(som: Som, config: SomTrainConfig, data) -> Som:
    """Train a copy of `som` on `data`, online, one sample at a time.

    Per epoch the data is reshuffled with the config's seeded generator
    (one stream consumed across all epochs), and every sample updates all
    weights by (x - w) * alpha * T(t) * neighborhood(t, bmu, i).
    """
    samples = _as_samples(data, som.dim)
    _check_finite_samples(samples)
    if len(samples) == 0:
        raise EmptyDataError("cannot train on an empty dataset")

    weights = som.weights.copy()
    d2 = som.grid.squared_grid_distances()
    theta = resolved_theta(config, som.grid)
    rng = make_rng(config.seed)
    order = np.arange(len(samples))

    for t in range(config.epochs):
        scale = decay_factor(config, t)
        width = theta * scale
        # Row i* of this table is the per-neuron learning rate when i* wins.
        rates = (config.alpha * scale * np.exp(-d2 / (2.0 * width * width))).astype(
            np.float32
        )
        rng.shuffle(order)
        for s in order:
            x = samples[s]
            i_star = int(np.argmin(_squared_dists(weights, x[None, :])[0]))
            weights += (x - weights) * rates[i_star][:, None]

    return Som(som.grid, weights)


def quantization_error(som: Som, data, chunk: int = 256) -> float:
    """Mean Euclidean distance from each sample to its BMU weight vector."""
    samples = _as_samples(data, som.dim)
    if len(samples) == 0:
        raise EmptyDataError("quantization error needs at least one sample")
    total = 0.0
    for start in range(0, len(samples), chunk):
        block = samples[start : start + chunk]
        nearest = _squared_dists(som.weights, block).min(axis=1)
        total += float(np.sqrt(nearest.astype(np.float64)).sum())
    return total / len(samples)
