"""Feature files, normalization, synthetic data, and model persistence.

Two little-endian binary formats live here.

FVB feature file:
    bytes 0-3   magic "FVB1"
    bytes 4-7   u32 version (1)
    bytes 8-11  u32 vector dimension
    bytes 12-15 u32 record count
    bytes 16-19 u32 distinct label count (0 when unknown)
    then per record: u32 label, followed by `dim` float32 components

Model file:
    bytes 0-3   magic "SAMM"
    bytes 4-7   u32 version (1)
    u32 header length, then that many bytes of canonical JSON (mode, k, N,
    subdim, grid shapes, training hyperparameters with seed, class sample
    counters), then one float32 weight block per map, then the classifier
    rows (binary: bit-packed u64 words, bit c of word w is column 64*w + c;
    integer: u32 counters), then a u32 CRC-32 of every preceding byte.

Both writers are canonical: save, load, save again is byte-identical.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    BadVersionError,
    ChecksumError,
    DataFormatError,
    EmptyDataError,
    NonFiniteError,
    ShapeMismatchError,
    TruncatedError,
)
from .pq import ProductQuantizer
from .sam import AssociativeClassifier, ClassifierMode
from .seeding import make_rng
from .som import Decay, GridTopology, Som, SomTrainConfig

FVB_MAGIC = b"FVB1"
FVB_VERSION = 1
MODEL_MAGIC = b"SAMM"
MODEL_VERSION = 1

_HEADER = struct.Struct("<4sIIII")


@dataclass(eq=False)
class FeatureSet:
    """Labeled feature vectors: (n,) uint32 labels and (n, dim) float32 data."""

    labels: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ValueError(f"labels must be 1-D, got shape {labels.shape}")
        if labels.size and labels.dtype.kind in "if" and (labels < 0).any():
            raise ValueError("labels must be non-negative")
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise ValueError(f"vectors must be 2-D, got shape {vectors.shape}")
        if vectors.shape[1] < 1:
            raise ValueError("vectors must have at least one component")
        if vectors.shape[0] != labels.shape[0]:
            raise ShapeMismatchError(
                labels.shape[0], vectors.shape[0], what="record count"
            )
        if not np.isfinite(vectors).all():
            raise ValueError("vectors contain non-finite components")
        self.labels = np.ascontiguousarray(labels, dtype=np.uint32)
        self.vectors = vectors

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FeatureSet):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(
                self.vectors.view(np.uint32), other.vectors.view(np.uint32)
            )
        )


def _record_dtype(dim: int) -> np.dtype:
    return np.dtype([("label", "<u4"), ("vec", "<f4", (dim,))])


def features_to_bytes(fs: FeatureSet) -> bytes:
    distinct = int(np.unique(fs.labels).size)
    head = _HEADER.pack(FVB_MAGIC, FVB_VERSION, fs.dim, fs.n, distinct)
    body = np.empty(fs.n, dtype=_record_dtype(fs.dim))
    body["label"] = fs.labels
    body["vec"] = fs.vectors
    return head + body.tobytes()


def features_from_bytes(data: bytes) -> FeatureSet:
    if len(data) < _HEADER.size:
        raise TruncatedError(
            f"file is {len(data)} bytes, header needs {_HEADER.size}", len(data)
        )
    magic, version, dim, count, _distinct = _HEADER.unpack_from(data, 0)
    if magic != FVB_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {FVB_MAGIC!r}", 0)
    if version != FVB_VERSION:
        raise BadVersionError(f"unsupported version {version}", 4)
    if dim < 1:
        raise DataFormatError(f"dimension must be positive, got {dim}", 8)
    rec_size = 4 + 4 * dim
    expected = _HEADER.size + count * rec_size
    if len(data) < expected:
        bad_record = (len(data) - _HEADER.size) // rec_size
        raise TruncatedError(
            f"file ends inside record {bad_record} of {count}", len(data)
        )
    if len(data) > expected:
        raise DataFormatError(
            f"{len(data) - expected} trailing bytes after {count} records", expected
        )
    body = np.frombuffer(data, dtype=_record_dtype(dim), count=count, offset=_HEADER.size)
    vectors = body["vec"].reshape(count, dim)
    bad = np.argwhere(~np.isfinite(vectors))
    if len(bad):
        rec, comp = int(bad[0][0]), int(bad[0][1])
        offset = _HEADER.size + rec * rec_size + 4 + 4 * comp
        raise NonFiniteError(
            f"record {rec} component {comp} is not finite", offset
        )
    return FeatureSet(body["label"].copy(), vectors.copy())


def write_features(fs: FeatureSet, destination) -> None:
    """Write the FVB byte stream to a path or binary file object."""
    _write_bytes(features_to_bytes(fs), destination)


def read_features(source) -> FeatureSet:
    """Read and validate an FVB stream from a path, file object, or bytes."""
    return features_from_bytes(_read_bytes(source))


def l2_normalize(fs: FeatureSet) -> tuple[FeatureSet, int]:
    """Scale every vector to unit L2 norm.

    Exact-zero vectors cannot be normalized; they pass through unchanged and
    are reported via the returned skip count.
    """
    norms = np.linalg.norm(fs.vectors.astype(np.float64), axis=1)
    skipped = int((norms == 0.0).sum())
    safe = np.where(norms == 0.0, 1.0, norms)
    scaled = (fs.vectors.astype(np.float64) / safe[:, None]).astype(np.float32)
    return FeatureSet(fs.labels.copy(), scaled), skipped


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian class clusters: centers uniform in the unit hypercube."""

    num_classes: int
    dim: int
    samples_per_class: int
    cluster_spread: float
    seed: int = 0

    def __post_init__(self):
        if min(self.num_classes, self.dim, self.samples_per_class) < 1:
            raise ValueError("num_classes, dim, and samples_per_class must be >= 1")
        if self.cluster_spread < 0:
            raise ValueError(f"cluster_spread must be >= 0, got {self.cluster_spread}")


def generate_synthetic(spec: SyntheticSpec) -> FeatureSet:
    """Deterministic labeled clusters, class-major record order."""
    rng = make_rng(spec.seed)
    labels = np.repeat(
        np.arange(spec.num_classes, dtype=np.uint32), spec.samples_per_class
    )
    blocks = []
    for _ in range(spec.num_classes):
        center = rng.uniform(size=spec.dim)
        noise = rng.normal(0.0, spec.cluster_spread, size=(spec.samples_per_class, spec.dim))
        blocks.append(center + noise)
    return FeatureSet(labels, np.vstack(blocks).astype(np.float32))


def _config_to_json(config: SomTrainConfig) -> dict:
    return {
        "epochs": config.epochs,
        "alpha": config.alpha,
        "theta": config.theta,
        "decay": config.decay.value,
        "seed": config.seed,
    }


def _config_from_json(obj: dict) -> SomTrainConfig:
    return SomTrainConfig(
        epochs=obj["epochs"],
        alpha=obj["alpha"],
        theta=obj["theta"],
        decay=Decay(obj["decay"]),
        seed=obj["seed"],
    )


def model_to_bytes(pq: ProductQuantizer, clf: AssociativeClassifier) -> bytes:
    if clf.k != pq.k or clf.n_per_som != pq.n_per_som:
        raise ShapeMismatchError(
            (pq.k, pq.n_per_som), (clf.k, clf.n_per_som), what="classifier shape"
        )
    header = {
        "mode": clf.mode.value,
        "k": pq.k,
        "n_per_som": pq.n_per_som,
        "subdim": pq.subdim,
        "grids": [[som.grid.rows, som.grid.cols] for som in pq.soms],
        "train_config": _config_to_json(pq.config),
        "num_classes": clf.num_classes,
        "samples_per_class": [int(c) for c in clf.samples_per_class],
    }
    head_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    parts = [
        MODEL_MAGIC,
        struct.pack("<I", MODEL_VERSION),
        struct.pack("<I", len(head_bytes)),
        head_bytes,
    ]
    for som in pq.soms:
        parts.append(som.weights.astype("<f4").tobytes())
    rows = clf.packed_rows
    parts.append(rows.astype("<u8" if clf.mode is ClassifierMode.BINARY else "<u4").tobytes())
    payload = b"".join(parts)
    return payload + struct.pack("<I", zlib.crc32(payload))


def model_from_bytes(data: bytes) -> tuple[ProductQuantizer, AssociativeClassifier]:
    if len(data) < 12:
        raise TruncatedError(f"file is {len(data)} bytes, too short for a model", len(data))
    if data[0:4] != MODEL_MAGIC:
        raise BadMagicError(f"bad magic {data[0:4]!r}, expected {MODEL_MAGIC!r}", 0)
    (version,) = struct.unpack_from("<I", data, 4)
    if version != MODEL_VERSION:
        raise BadVersionError(f"unsupported version {version}", 4)
    (stored_crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) != stored_crc:
        raise ChecksumError("CRC-32 mismatch, file is corrupt", len(data) - 4)

    (head_len,) = struct.unpack_from("<I", data, 8)
    pos = 12
    if pos + head_len > len(data) - 4:
        raise TruncatedError("file ends inside the header block", len(data))
    try:
        header = json.loads(data[pos : pos + head_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataFormatError(f"unreadable header: {e}", pos) from None
    pos += head_len

    try:
        mode = ClassifierMode(header["mode"])
        k = int(header["k"])
        n_per_som = int(header["n_per_som"])
        subdim = int(header["subdim"])
        grids = [GridTopology(int(r), int(c)) for r, c in header["grids"]]
        config = _config_from_json(header["train_config"])
        num_classes = int(header["num_classes"])
        samples = np.asarray(header["samples_per_class"], dtype=np.int64)
    except (KeyError, TypeError, ValueError) as e:
        raise DataFormatError(f"invalid header field: {e}", 12) from None

    if len(grids) != k:
        raise ShapeMismatchError(k, len(grids), what="grid count")
    for g in grids:
        if g.n != n_per_som:
            raise ShapeMismatchError(n_per_som, g.n, what="grid neuron count")
    if samples.shape != (num_classes,):
        raise ShapeMismatchError((num_classes,), samples.shape, what="sample counters")

    weight_bytes = 4 * n_per_som * subdim
    soms = []
    for g in grids:
        if pos + weight_bytes > len(data) - 4:
            raise TruncatedError("file ends inside a weight block", len(data))
        w = np.frombuffer(data, dtype="<f4", count=n_per_som * subdim, offset=pos)
        soms.append(Som(g, w.reshape(n_per_som, subdim).copy()))
        pos += weight_bytes

    cols = k * n_per_som
    if mode is ClassifierMode.BINARY:
        row_width, cell = (cols + 63) // 64, 8
        row_dtype = "<u8"
    else:
        row_width, cell = cols, 4
        row_dtype = "<u4"
    rows_bytes = num_classes * row_width * cell
    if pos + rows_bytes != len(data) - 4:
        raise TruncatedError("classifier rows have the wrong length", len(data))
    rows = np.frombuffer(data, dtype=row_dtype, count=num_classes * row_width, offset=pos)

    pq = ProductQuantizer(soms, config)
    clf = AssociativeClassifier.from_packed(
        mode, k, n_per_som, rows.reshape(num_classes, row_width), samples
    )
    return pq, clf


def save_model(pq: ProductQuantizer, clf: AssociativeClassifier, destination) -> None:
    _write_bytes(model_to_bytes(pq, clf), destination)


def load_model(source) -> tuple[ProductQuantizer, AssociativeClassifier]:
    return model_from_bytes(_read_bytes(source))


def _write_bytes(data: bytes, destination) -> None:
    if isinstance(destination, (str, Path)):
        Path(destination).write_bytes(data)
    else:
        destination.write(data)


def _read_bytes(source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()


def require_records(fs: FeatureSet, what: str) -> FeatureSet:
    """Raise EmptyDataError when a feature set has no records."""
    if fs.n == 0:
        raise EmptyDataError(f"{what} contains no records")
    return fs
