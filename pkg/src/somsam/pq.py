"""Product quantization: one self-organizing map per contiguous subspace.

An incoming vector of dimension k*d is split into k contiguous d-dimensional
subvectors; each subvector is quantized by its own map of N neurons. The
result is a sparse code of k active indices, one per block, equivalent to a
k*N-length binary vector holding exactly k ones. The quantizer therefore
addresses N^k cells of the product space with only k*N stored prototypes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyDataError, ShapeMismatchError
from .seeding import mix64
from .som import (
    GridTopology,
    Som,
    SomTrainConfig,
    _as_samples,
    _check_finite_samples,
    bmu_batch,
    init_som,
    near_square_grid,
    resolved_theta,
    train_som,
)


@dataclass(eq=False)
class SparseCode:
    """Active neuron per block: indices[j] is map j's winner."""

    k: int
    n_per_som: int
    indices: np.ndarray

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int32)
        if idx.shape != (self.k,):
            raise ShapeMismatchError((self.k,), idx.shape, what="index count")
        if self.k < 1 or self.n_per_som < 1:
            raise ValueError("k and n_per_som must be positive")
        if len(idx) and (idx.min() < 0 or idx.max() >= self.n_per_som):
            raise ValueError(
                f"indices must lie in [0, {self.n_per_som}), got {idx.tolist()}"
            )
        self.indices = idx

    def dense(self) -> np.ndarray:
        """k*N binary vector with ones at j*N + indices[j]."""
        out = np.zeros(self.k * self.n_per_som, dtype=np.uint8)
        out[np.arange(self.k) * self.n_per_som + self.indices] = 1
        return out

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(i) for i in self.indices)

    def __eq__(self, other):
        if not isinstance(other, SparseCode):
            return NotImplemented
        return (
            self.k == other.k
            and self.n_per_som == other.n_per_som
            and np.array_equal(self.indices, other.indices)
        )


@dataclass(eq=False)
class ProductQuantizer:
    """k trained maps plus the resolved hyperparameters that produced them."""

    soms: list[Som]
    config: SomTrainConfig

    def __post_init__(self):
        if not self.soms:
            raise ValueError("a product quantizer needs at least one map")
        d = self.soms[0].dim
        n = self.soms[0].n
        for j, som in enumerate(self.soms):
            if som.dim != d:
                raise ShapeMismatchError(d, som.dim, what=f"map {j} input dimension")
            if som.n != n:
                raise ShapeMismatchError(n, som.n, what=f"map {j} neuron count")

    @property
    def k(self) -> int:
        return len(self.soms)

    @property
    def subdim(self) -> int:
        return self.soms[0].dim

    @property
    def n_per_som(self) -> int:
        return self.soms[0].n

    @property
    def dim(self) -> int:
        return self.k * self.subdim


def split(x, k: int) -> list[np.ndarray]:
    """Split a vector into k contiguous equal-length subvectors."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {arr.shape}")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if arr.shape[0] % k != 0:
        raise ShapeMismatchError(
            f"a multiple of k={k}", arr.shape[0], what="vector length"
        )
    d = arr.shape[0] // k
    return [arr[j * d : (j + 1) * d] for j in range(k)]


def _split_columns(data: np.ndarray, k: int) -> list[np.ndarray]:
    if data.shape[1] % k != 0:
        raise ShapeMismatchError(
            f"a multiple of k={k}", data.shape[1], what="vector length"
        )
    d = data.shape[1] // k
    return [data[:, j * d : (j + 1) * d] for j in range(k)]


def train_pq(
    config: SomTrainConfig,
    k: int,
    n_per_som: int,
    data,
    grid: GridTopology | None = None,
) -> ProductQuantizer:
    """Train k maps, one per subspace, with seeds derived from config.seed.

    Map j trains on the j-th subvectors of every sample under seed
    mix64(config.seed, j), so the k trainings are independent streams but
    the whole quantizer is reproducible from the one base seed.
    """
    samples = _as_samples(data)
    if len(samples) == 0:
        raise EmptyDataError("cannot train a quantizer on an empty dataset")
    _check_finite_samples(samples)

    topology = grid if grid is not None else near_square_grid(n_per_som)
    if topology.n != n_per_som:
        raise ShapeMismatchError(n_per_som, topology.n, what="grid neuron count")
    base = replace(config, theta=resolved_theta(config, topology))

    soms = []
    for j, sub in enumerate(_split_columns(samples, k)):
        cfg = replace(base, seed=mix64(base.seed, j))
        try:
            som = train_som(init_som(cfg, sub.shape[1], topology, sub), cfg, sub)
        except (ValueError, ShapeMismatchError) as e:
            e.args = (f"map {j}: {e.args[0]}",) + e.args[1:]
            raise
        soms.append(som)
    return ProductQuantizer(soms, base)


def quantize(pq: ProductQuantizer, x) -> SparseCode:
    """Sparse code for one vector: per-block BMU indices."""
    return SparseCode(pq.k, pq.n_per_som, quantize_batch(pq, np.asarray(x)[None, :])[0])


def quantize_batch(pq: ProductQuantizer, xs, chunk: int = 256) -> np.ndarray:
    """Codes for a batch of vectors as an (m, k) int32 index matrix."""
    samples = _as_samples(xs, pq.dim)
    out = np.empty((len(samples), pq.k), dtype=np.int32)
    for j, sub in enumerate(_split_columns(samples, pq.k)):
        out[:, j] = bmu_batch(pq.soms[j], sub, chunk=chunk)
    return out


def codes_from_matrix(pq: ProductQuantizer, matrix: np.ndarray) -> list[SparseCode]:
    """Wrap rows of a quantize_batch result as SparseCode values."""
    return [SparseCode(pq.k, pq.n_per_som, row) for row in matrix]
