"""Acceptance suite: one test per release criterion.

Each test prints a single [PASS]/[FAIL] line (visible with `pytest -s`) and
enforces both the stated tolerance (exact unless noted) and a wall-clock
budget. Oracles are independent of the code paths they check: dense matrix
products, exhaustive enumeration, known generating centers, and the
brute-force neighbor baseline.
"""

import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest

from somsam import cli, dataio
from somsam.pq import SparseCode, quantize_batch, train_pq
from somsam.sam import AssociativeClassifier, merge
from somsam.som import (
    GridTopology,
    Som,
    SomTrainConfig,
    bmu,
    init_som,
    quantization_error,
    train_som,
)


@contextmanager
def criterion(name, budget_s):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"[FAIL] {name}", flush=True)
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_s, f"{name}: {elapsed:.1f}s exceeded {budget_s}s budget"
    print(f"[PASS] {name} ({elapsed:.2f}s)", flush=True)


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    assert code == 0, f"command {argv} exited {code}"
    return out


def csv_rows(out):
    return [ln.split(",") for ln in out.strip().splitlines() if not ln.startswith("#")]


def accuracy(out, key):
    for row in csv_rows(out):
        if row[0] == "accuracy" and row[1] == key:
            return float(row[2])
    raise KeyError(key)


def random_code(rng, k, n):
    return SparseCode(k, n, rng.integers(0, n, size=k))


def test_code_validity_fuzz():
    """Every quantized output has exactly k active indices, one per block."""
    with criterion("code validity (10k fuzzed inputs)", 5.0):
        rng = np.random.default_rng(101)
        data = rng.normal(size=(100, 64)).astype(np.float32)
        pq = train_pq(SomTrainConfig(epochs=2, seed=1), 8, 16, data)
        inputs = rng.normal(size=(10_000, 64)).astype(np.float32)
        codes = quantize_batch(pq, inputs)

        assert codes.shape == (10_000, 8)
        assert codes.min() >= 0 and codes.max() < 16
        dense = np.zeros((len(codes), 8 * 16), dtype=np.uint8)
        flat = np.arange(8) * 16 + codes
        dense[np.arange(len(codes))[:, None], flat] = 1
        assert (dense.sum(axis=1) == 8).all()
        per_block = dense.reshape(len(codes), 8, 16).sum(axis=2)
        assert (per_block == 1).all()


def test_incremental_equals_batch():
    """Per-class, interleaved, and shard-merged training agree bitwise."""
    with criterion("incremental == batch (50 random sequences)", 30.0):
        rng = np.random.default_rng(202)
        for round_no in range(50):
            k = int(rng.integers(1, 17))
            n = int(rng.integers(2, 33))
            num_classes = int(rng.integers(2, 21))
            mode = "binary" if round_no % 2 == 0 else "integer"
            pairs = [
                (random_code(rng, k, n), int(c))
                for c in range(num_classes)
                for _ in range(int(rng.integers(1, 31)))
            ]

            sequential = AssociativeClassifier(mode, k, n)
            for c in range(num_classes):
                sequential.learn_batch([p for p in pairs if p[1] == c])

            shuffled = [pairs[i] for i in rng.permutation(len(pairs))]
            interleaved = AssociativeClassifier(mode, k, n).learn_batch(shuffled)

            half = len(pairs) // 2
            merged = merge(
                AssociativeClassifier(mode, k, n).learn_batch(pairs[:half]),
                AssociativeClassifier(mode, k, n).learn_batch(pairs[half:]),
            )

            assert sequential == interleaved == merged
            for _ in range(200):
                probe = random_code(rng, k, n)
                p = sequential.predict(probe)
                assert p == interleaved.predict(probe) == merged.predict(probe)


def test_sparse_scoring_equals_dense_product():
    """Sparse scoring equals the dense matrix-vector product, exhaustively."""
    with criterion("dense-oracle equivalence", 30.0):
        rng = np.random.default_rng(303)
        shapes = [(1, 16), (1, 64), (2, 8), (2, 32), (3, 4), (4, 4), (4, 8),
                  (6, 2), (8, 2)]
        for k, n in shapes:
            assert k * n <= 64
            for mode in ("binary", "integer"):
                clf = AssociativeClassifier(mode, k, n)
                dense = np.zeros((8, k * n), dtype=np.int64)
                for _ in range(60):
                    code, label = random_code(rng, k, n), int(rng.integers(0, 8))
                    clf.learn(code, label)
                    d = code.dense().astype(np.int64)
                    if mode == "binary":
                        dense[label] = np.maximum(dense[label], d)
                    else:
                        dense[label] += d
                for combo in itertools.product(range(n), repeat=k):
                    code = SparseCode(k, n, np.array(combo))
                    oracle = dense @ code.dense().astype(np.int64)
                    assert np.array_equal(clf.scores(code).astype(np.int64), oracle)

        # Larger instances, sampled rather than enumerated.
        k, n = 16, 32
        for mode in ("binary", "integer"):
            clf = AssociativeClassifier(mode, k, n)
            dense = np.zeros((8, k * n), dtype=np.int64)
            for _ in range(100):
                code, label = random_code(rng, k, n), int(rng.integers(0, 8))
                clf.learn(code, label)
                d = code.dense().astype(np.int64)
                if mode == "binary":
                    dense[label] = np.maximum(dense[label], d)
                else:
                    dense[label] += d
            for _ in range(500):
                code = random_code(rng, k, n)
                oracle = dense @ code.dense().astype(np.int64)
                assert np.array_equal(clf.scores(code).astype(np.int64), oracle)


def test_binary_self_score_law():
    """After training, every training sample scores exactly k for its class."""
    with criterion("binary self-score law", 5.0):
        spec = dataio.SyntheticSpec(10, 64, 30, 0.05, seed=404)
        fs, _ = dataio.l2_normalize(dataio.generate_synthetic(spec))
        pq = train_pq(SomTrainConfig(epochs=3, seed=5), 8, 16, fs.vectors)
        codes = quantize_batch(pq, fs.vectors)
        clf = AssociativeClassifier("binary", 8, 16)
        for row, label in zip(codes, fs.labels):
            clf.learn(SparseCode(8, 16, row), int(label))
        for row, label in zip(codes, fs.labels):
            assert clf.scores(SparseCode(8, 16, row))[int(label)] == 8


def test_integer_row_sum_law():
    """Row sum equals k * samples_per_class at every point of training."""
    with criterion("integer row-sum law", 5.0):
        rng = np.random.default_rng(505)
        k, n = 6, 10
        clf = AssociativeClassifier("integer", k, n)
        for _ in range(400):
            clf.learn(random_code(rng, k, n), int(rng.integers(0, 12)))
            sums = clf.dense().sum(axis=1, dtype=np.int64)
            assert np.array_equal(sums, k * clf.samples_per_class)


def test_som_sanity_on_known_clusters():
    """Training cuts quantization error by >= 80% and separates the clusters."""
    with criterion("SOM sanity (4 Gaussian clusters)", 5.0):
        centers = np.array(
            [[0.15, 0.15], [0.85, 0.15], [0.15, 0.85], [0.85, 0.85]]
        )  # min pairwise distance 0.7
        rng = np.random.default_rng(123)
        data = np.vstack(
            [c + rng.normal(0, 0.02, size=(100, 2)) for c in centers]
        ).astype(np.float32)

        cfg = SomTrainConfig(epochs=20, seed=0)
        topo = GridTopology(2, 2)
        som0 = init_som(cfg, 2, topo, data)
        som1 = train_som(som0, cfg, data)

        qe0 = quantization_error(som0, data)
        qe1 = quantization_error(som1, data)
        assert qe1 <= 0.2 * qe0, f"reduction only {1 - qe1 / qe0:.1%}"

        winners = {bmu(som1, c.astype(np.float32)) for c in centers}
        assert len(winners) == 4


def test_unit_norm_bmu_equals_dot_product_argmax():
    """Argmin Euclidean equals argmax dot product for unit-norm instances."""
    with criterion("unit-norm distance/dot-product equivalence", 5.0):
        rng = np.random.default_rng(606)
        checked = 0
        while checked < 1000:
            n, d = int(rng.integers(2, 12)), int(rng.integers(2, 9))
            w = rng.normal(size=(n, d))
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            x = rng.normal(size=d)
            x /= np.linalg.norm(x)
            dots = w @ x
            top = np.sort(dots)[-2:]
            if len(dots) > 1 and top[1] - top[0] < 1e-6:
                continue  # reject ties
            som = Som(GridTopology(1, n), w.astype(np.float32))
            assert bmu(som, x.astype(np.float32)) == int(np.argmax(dots))
            checked += 1


def test_desk_scale_end_to_end(tmp_path, capsys):
    """Synthetic 10-class run: strong accuracy, near the neighbor baseline."""
    with criterion("desk-scale end-to-end vs k-NN", 60.0):
        train = tmp_path / "train.fvb"
        test = tmp_path / "test.fvb"
        model = tmp_path / "model.samm"
        run_cli(
            capsys, "gen-synthetic", "--classes", "10", "--dim", "64",
            "--per-class", "50", "--test-per-class", "50", "--spread", "0.05",
            "--seed", "20260808", "--out", str(train), "--test-out", str(test),
        )
        run_cli(
            capsys, "train", "--features", str(train), "--k", "8", "--n", "16",
            "--epochs", "10", "--mode", "binary", "--seed", "7",
            "--out", str(model),
        )
        eval_out = run_cli(
            capsys, "eval", "--model", str(model), "--features", str(test),
            "--topk", "1,5",
        )
        knn_out = run_cli(
            capsys, "baseline-knn", "--features-train", str(train),
            "--features-test", str(test), "--knn-k", "5", "--topk", "1,5",
        )
        model_top1 = accuracy(eval_out, "top1")
        knn_top1 = accuracy(knn_out, "top1")
        assert model_top1 >= 0.95, f"top1 {model_top1}"
        assert abs(model_top1 - knn_top1) <= 0.05, (model_top1, knn_top1)


def test_incremental_learning_speed(capsys):
    """Adding the last class touches only its samples and is >= M/2 faster."""
    with criterion("incremental-learning speed", 120.0):
        out = run_cli(
            capsys, "bench-timing", "--classes", "20", "--per-class", "30",
            "--dim", "64", "--k", "8", "--n", "16", "--epochs", "3",
            "--reps", "30", "--seed", "11",
        )
        rows = csv_rows(out)
        checks = [r for r in rows if r[0] == "check"]
        assert checks and checks[0][-1] == "pass"
        assert int(checks[0][3]) == 30  # exactly the last class's samples
        ratios = [float(r[5]) for r in rows if r[0] == "ratio"]
        assert ratios and ratios[0] >= 10.0, f"ratio {ratios}"


def test_format_roundtrips_are_byte_identical():
    """FVB and model files survive save -> load -> save bit for bit."""
    with criterion("format round-trips (100 random instances)", 10.0):
        rng = np.random.default_rng(707)
        for _ in range(100):
            n = int(rng.integers(0, 30))
            dim = int(rng.integers(1, 12))
            fs = dataio.FeatureSet(
                rng.integers(0, 9, size=n).astype(np.uint32),
                rng.normal(size=(n, dim)).astype(np.float32),
            )
            blob = dataio.features_to_bytes(fs)
            assert dataio.features_to_bytes(dataio.features_from_bytes(blob)) == blob

        for i in range(100):
            k = int(rng.integers(1, 6))
            n = int(rng.integers(2, 9))
            dim = int(rng.integers(1, 5))
            grid = GridTopology(1, n)
            soms = [
                Som(grid, rng.normal(size=(n, dim)).astype(np.float32))
                for _ in range(k)
            ]
            cfg = SomTrainConfig(
                epochs=int(rng.integers(1, 6)),
                alpha=float(rng.uniform(0.05, 1.0)),
                theta=float(rng.uniform(0.1, 2.0)),
                seed=int(rng.integers(0, 2**63)),
            )
            from somsam.pq import ProductQuantizer

            pq = ProductQuantizer(soms, cfg)
            clf = AssociativeClassifier("binary" if i % 2 else "integer", k, n)
            for _ in range(int(rng.integers(0, 25))):
                clf.learn(random_code(rng, k, n), int(rng.integers(0, 6)))
            blob = dataio.model_to_bytes(pq, clf)
            assert dataio.model_to_bytes(*dataio.model_from_bytes(blob)) == blob


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
