"""Incremental classifier: product-quantizing maps + sparse associative layer.

Feature vectors are split into k contiguous subspaces, each quantized by its
own self-organizing map; the resulting k-hot sparse codes drive a growable
class-by-column connection matrix that learns in one pass, adds classes
without touching existing rows, and predicts by winner-takes-all scoring.
"""

from .dataio import (
    FeatureSet,
    SyntheticSpec,
    generate_synthetic,
    l2_normalize,
    load_model,
    read_features,
    save_model,
    write_features,
)
from .pq import ProductQuantizer, SparseCode, quantize, quantize_batch, split, train_pq
from .sam import AssociativeClassifier, ClassifierMode, merge
from .som import (
    Decay,
    GridTopology,
    Som,
    SomTrainConfig,
    bmu,
    decay_factor,
    grid_distance,
    init_som,
    near_square_grid,
    neighborhood,
    quantization_error,
    quantize_onehot,
    train_som,
)

__all__ = [
    "AssociativeClassifier",
    "ClassifierMode",
    "Decay",
    "FeatureSet",
    "GridTopology",
    "ProductQuantizer",
    "Som",
    "SomTrainConfig",
    "SparseCode",
    "SyntheticSpec",
    "bmu",
    "decay_factor",
    "generate_synthetic",
    "grid_distance",
    "init_som",
    "l2_normalize",
    "load_model",
    "merge",
    "near_square_grid",
    "neighborhood",
    "quantization_error",
    "quantize",
    "quantize_batch",
    "quantize_onehot",
    "read_features",
    "save_model",
    "split",
    "train_pq",
    "train_som",
    "write_features",
]
