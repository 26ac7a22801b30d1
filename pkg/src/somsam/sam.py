"""Associative output layer: class rows over sparse-code columns.

The classifier is a growable matrix of M class rows by k*N code columns.
Learning a (code, label) pair touches exactly the k columns active in the
code: binary mode sets those bits (componentwise max, idempotent), integer
mode increments 32-bit counters (componentwise sum). Both updates commute,
so any interleaving, batching, or shard-and-merge of the same training
pairs produces the same matrix; adding a class never rewrites the rows of
previously learned classes.

Scoring a code reads the k active columns of every row and sums them, the
sparse equivalent of the full matrix-vector product against the code's
dense binary form. Binary rows are bit-packed into little-endian 64-bit
words and read with shift-and-mask; prediction is the argmax with ties
broken toward the lowest class id.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import (
    CounterOverflowError,
    EmptyClassifierError,
    ShapeMismatchError,
)
from .pq import SparseCode

U32_MAX = np.uint32(0xFFFFFFFF)
_ONE = np.uint64(1)
_BITS = _ONE << np.arange(64, dtype=np.uint64)


class ClassifierMode(str, Enum):
    BINARY = "binary"
    INTEGER = "integer"


class AssociativeClassifier:
    """Growable class-by-code connection matrix with winner-takes-all readout.

    Rows appear on demand: learning label c grows the matrix to c + 1 rows,
    leaving any intermediate never-trained rows all-zero.
    """

    def __init__(self, mode: ClassifierMode | str, k: int, n_per_som: int):
        if k < 1 or n_per_som < 1:
            raise ValueError(f"k and n_per_som must be positive, got {k}, {n_per_som}")
        self.mode = ClassifierMode(mode)
        self.k = k
        self.n_per_som = n_per_som
        self._cols = k * n_per_som
        self._row_width = (
            (self._cols + 63) // 64 if self.mode is ClassifierMode.BINARY else self._cols
        )
        self._matrix = np.zeros((0, self._row_width), dtype=self._dtype)
        self._samples = np.zeros(0, dtype=np.int64)

    @property
    def _dtype(self):
        return np.uint64 if self.mode is ClassifierMode.BINARY else np.uint32

    @property
    def num_classes(self) -> int:
        return self._matrix.shape[0]

    @property
    def samples_per_class(self) -> np.ndarray:
        return self._samples.copy()

    def copy(self) -> "AssociativeClassifier":
        out = AssociativeClassifier(self.mode, self.k, self.n_per_som)
        out._matrix = self._matrix.copy()
        out._samples = self._samples.copy()
        return out

    def __eq__(self, other):
        if not isinstance(other, AssociativeClassifier):
            return NotImplemented
        return (
            self.mode == other.mode
            and self.k == other.k
            and self.n_per_som == other.n_per_som
            and np.array_equal(self._matrix, other._matrix)
            and np.array_equal(self._samples, other._samples)
        )

    def _check_code(self, code: SparseCode) -> None:
        if code.k != self.k or code.n_per_som != self.n_per_som:
            raise ShapeMismatchError(
                (self.k, self.n_per_som),
                (code.k, code.n_per_som),
                what="code shape",
            )

    def _grow(self, num_rows: int) -> None:
        if num_rows <= self.num_classes:
            return
        pad = num_rows - self.num_classes
        self._matrix = np.vstack(
            [self._matrix, np.zeros((pad, self._row_width), dtype=self._dtype)]
        )
        self._samples = np.concatenate([self._samples, np.zeros(pad, dtype=np.int64)])

    def _active_columns(self, code: SparseCode) -> np.ndarray:
        return np.arange(self.k) * self.n_per_som + code.indices

    def learn(self, code: SparseCode, label: int) -> "AssociativeClassifier":
        """Store one (code, label) pair; O(k) cell touches."""
        self._check_code(code)
        if label < 0:
            raise ValueError(f"class label must be non-negative, got {label}")
        self._grow(label + 1)
        cols = self._active_columns(code)
        row = self._matrix[label]
        if self.mode is ClassifierMode.BINARY:
            np.bitwise_or.at(row, cols >> 6, _BITS[cols & 63])
        else:
            cells = row[cols]
            if (cells == U32_MAX).any():
                col = int(cols[np.argmax(cells == U32_MAX)])
                raise CounterOverflowError(
                    f"class {label} column {col} counter is at 2^32 - 1"
                )
            row[cols] = cells + 1
        self._samples[label] += 1
        return self

    def learn_batch(self, pairs) -> "AssociativeClassifier":
        """Fold learn over (code, label) pairs; all-or-nothing on error."""
        pairs = list(pairs)
        for i, (code, label) in enumerate(pairs):
            try:
                self._check_code(code)
                if label < 0:
                    raise ValueError(f"class label must be non-negative, got {label}")
            except (ShapeMismatchError, ValueError) as e:
                e.args = (f"pair {i}: {e.args[0]}",) + e.args[1:]
                raise
        staged = self.copy()
        for i, (code, label) in enumerate(pairs):
            try:
                staged.learn(code, label)
            except CounterOverflowError as e:
                raise CounterOverflowError(f"pair {i}: {e.args[0]}") from None
        self._matrix = staged._matrix
        self._samples = staged._samples
        return self

    def scores(self, code: SparseCode) -> np.ndarray:
        """Per-class scores, shape (M,) uint64: k column reads per class."""
        self._check_code(code)
        if self.num_classes == 0:
            raise EmptyClassifierError("no classes have been learned yet")
        out = np.zeros(self.num_classes, dtype=np.uint64)
        if self.mode is ClassifierMode.BINARY:
            for col in self._active_columns(code):
                out += (self._matrix[:, col >> 6] >> np.uint64(col & 63)) & _ONE
        else:
            out += self._matrix[:, self._active_columns(code)].sum(
                axis=1, dtype=np.uint64
            )
        return out

    def predict(self, code: SparseCode) -> int:
        """Class with the highest score; ties go to the lowest class id."""
        return int(np.argmax(self.scores(code)))

    def top_k(self, code: SparseCode, count: int) -> list[tuple[int, int]]:
        """Best `count` classes as (class_id, score), score desc then id asc."""
        if not 1 <= count <= self.num_classes:
            raise ValueError(
                f"count must be in [1, {self.num_classes}], got {count}"
            )
        s = self.scores(code).astype(np.int64)
        order = np.lexsort((np.arange(len(s)), -s))
        return [(int(c), int(s[c])) for c in order[:count]]

    def dense(self) -> np.ndarray:
        """Connection matrix as a plain (M, k*N) array of counts (or 0/1)."""
        if self.mode is ClassifierMode.INTEGER:
            return self._matrix.astype(np.uint32).copy()
        cols = np.arange(self._cols)
        bits = (self._matrix[:, cols >> 6] >> (cols & 63).astype(np.uint64)) & _ONE
        return bits.astype(np.uint32)

    # Persistence hooks: the raw row storage, bit-packed for binary mode.

    @property
    def packed_rows(self) -> np.ndarray:
        return self._matrix.copy()

    @classmethod
    def from_packed(
        cls,
        mode: ClassifierMode | str,
        k: int,
        n_per_som: int,
        rows: np.ndarray,
        samples_per_class,
    ) -> "AssociativeClassifier":
        out = cls(mode, k, n_per_som)
        rows = np.ascontiguousarray(rows, dtype=out._dtype)
        samples = np.ascontiguousarray(samples_per_class, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != out._row_width:
            raise ShapeMismatchError(
                (len(samples), out._row_width), rows.shape, what="row storage"
            )
        if samples.shape != (rows.shape[0],):
            raise ShapeMismatchError(
                (rows.shape[0],), samples.shape, what="sample counters"
            )
        out._matrix = rows.copy()
        out._samples = samples.copy()
        return out


def merge(a: AssociativeClassifier, b: AssociativeClassifier) -> AssociativeClassifier:
    """Combine two classifiers trained on disjoint (or overlapping) shards.

    Cellwise max for binary (bitwise OR on packed rows), cellwise sum for
    integer; the shorter matrix is padded with zero rows and sample counters
    add. merge(train(P1), train(P2)) equals train(P1 + P2).
    """
    if a.mode != b.mode or a.k != b.k or a.n_per_som != b.n_per_som:
        raise ShapeMismatchError(
            (a.mode.value, a.k, a.n_per_som),
            (b.mode.value, b.k, b.n_per_som),
            what="classifier shape",
        )
    out = AssociativeClassifier(a.mode, a.k, a.n_per_som)
    rows = max(a.num_classes, b.num_classes)
    am = np.vstack([a._matrix, np.zeros((rows - a.num_classes, a._row_width), a._dtype)])
    bm = np.vstack([b._matrix, np.zeros((rows - b.num_classes, b._row_width), b._dtype)])
    if a.mode is ClassifierMode.BINARY:
        out._matrix = np.bitwise_or(am, bm)
    else:
        summed = am.astype(np.int64) + bm.astype(np.int64)
        if (summed > int(U32_MAX)).any():
            raise CounterOverflowError("merged counter would exceed 2^32 - 1")
        out._matrix = summed.astype(np.uint32)
    out._samples = np.concatenate(
        [a._samples, np.zeros(rows - a.num_classes, np.int64)]
    ) + np.concatenate([b._samples, np.zeros(rows - b.num_classes, np.int64)])
    return out
