"""Unit tests for subspace splitting, per-map training, and sparse codes."""

import itertools

import numpy as np
import pytest

from somsam.errors import ShapeMismatchError
from somsam.pq import (
    ProductQuantizer,
    SparseCode,
    quantize,
    quantize_batch,
    split,
    train_pq,
)
from somsam.seeding import mix64
from somsam.som import (
    GridTopology,
    Som,
    SomTrainConfig,
    init_som,
    near_square_grid,
    resolved_theta,
    train_som,
)


def make_pq(weight_blocks) -> ProductQuantizer:
    soms = [
        Som(GridTopology(1, len(w)), np.asarray(w, dtype=np.float32))
        for w in weight_blocks
    ]
    return ProductQuantizer(soms, SomTrainConfig(epochs=1, theta=1.0))


class TestSplit:
    def test_contiguous_thirds(self):
        parts = split(np.array([1, 2, 3, 4, 5, 6]), 3)
        assert [p.tolist() for p in parts] == [[1, 2], [3, 4], [5, 6]]

    def test_identity_split(self):
        x = np.array([1.0, 2.0, 3.0])
        (only,) = split(x, 1)
        assert np.array_equal(only, x)

    def test_indivisible_length(self):
        with pytest.raises(ShapeMismatchError) as err:
            split(np.zeros(10), 3)
        assert err.value.actual == 10
        assert "3" in str(err.value.expected)


class TestSparseCode:
    def test_dense_form(self):
        code = SparseCode(3, 4, [1, 0, 3])
        dense = code.dense()
        assert dense.tolist() == [0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1]
        assert dense.sum() == 3

    def test_rejects_out_of_range_index(self):
        with pytest.raises(ValueError):
            SparseCode(2, 4, [0, 4])

    def test_rejects_wrong_arity(self):
        with pytest.raises(ShapeMismatchError):
            SparseCode(3, 4, [0, 1])


class TestTrainPq:
    def test_single_subspace_reduces_to_plain_training(self):
        rng = np.random.default_rng(0)
        data = rng.normal(size=(30, 4)).astype(np.float32)
        base = SomTrainConfig(epochs=4, seed=17)
        pq = train_pq(base, 1, 6, data)

        topo = near_square_grid(6)
        cfg = SomTrainConfig(
            epochs=4, seed=mix64(17, 0), theta=resolved_theta(base, topo)
        )
        expected = train_som(init_som(cfg, 4, topo, data), cfg, data)
        assert np.array_equal(pq.soms[0].weights, expected.weights)

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        data = rng.normal(size=(40, 6)).astype(np.float32)
        cfg = SomTrainConfig(epochs=3, seed=5)
        a = train_pq(cfg, 3, 4, data)
        b = train_pq(cfg, 3, 4, data)
        for sa, sb in zip(a.soms, b.soms):
            assert np.array_equal(sa.weights, sb.weights)

    def test_maps_land_on_per_subspace_centroids(self):
        # Two tight clusters per subspace; each trained map should put its
        # two prototypes near the empirical cluster means (the oracle).
        rng = np.random.default_rng(2)
        sub_centers = [np.array([[0.0, 0.0], [1.0, 1.0]]),
                       np.array([[1.0, 0.0], [0.0, 1.0]])]
        n = 200
        picks = rng.integers(0, 2, size=(n, 2))
        data = np.hstack(
            [
                centers[picks[:, j]] + rng.normal(0, 0.01, size=(n, 2))
                for j, centers in enumerate(sub_centers)
            ]
        ).astype(np.float32)

        cfg = SomTrainConfig(epochs=20, seed=3)
        pq = train_pq(cfg, 2, 2, data)
        for j, centers in enumerate(sub_centers):
            sub = data[:, 2 * j : 2 * j + 2].astype(np.float64)
            assign = np.argmin(
                ((sub[:, None, :] - centers[None]) ** 2).sum(axis=2), axis=1
            )
            oracle = np.vstack([sub[assign == c].mean(axis=0) for c in (0, 1)])
            got = np.asarray(
                sorted(pq.soms[j].weights.tolist()), dtype=np.float64
            )
            want = np.asarray(sorted(oracle.tolist()))
            np.testing.assert_allclose(got, want, atol=0.05)

    def test_seed_derivation_gives_distinct_streams(self):
        rng = np.random.default_rng(4)
        data = np.hstack([rng.normal(size=(60, 3))] * 2).astype(np.float32)
        pq = train_pq(SomTrainConfig(epochs=2, seed=8), 2, 4, data)
        # Identical subspace data, different derived seeds: different inits.
        assert not np.array_equal(pq.soms[0].weights, pq.soms[1].weights)

    def test_dimension_not_divisible(self):
        data = np.zeros((5, 10), dtype=np.float32)
        with pytest.raises(ShapeMismatchError):
            train_pq(SomTrainConfig(epochs=1), 3, 2, data)


class TestQuantize:
    def test_exact_weight_match(self):
        pq = make_pq([[[1.0, 0.0], [0.0, 1.0]], [[2.0, 2.0], [3.0, 3.0]]])
        x = np.array([0.0, 1.0, 3.0, 3.0], dtype=np.float32)
        assert quantize(pq, x).as_tuple() == (1, 1)

    def test_hand_built_two_block_example(self):
        pq = make_pq([[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]]])
        x = np.array([0.9, 0.1, 0.1, 0.9], dtype=np.float32)
        assert quantize(pq, x).as_tuple() == (0, 1)

    def test_dense_popcount_is_k(self):
        rng = np.random.default_rng(5)
        pq = make_pq([rng.normal(size=(5, 3)) for _ in range(4)])
        for _ in range(100):
            x = rng.normal(size=12).astype(np.float32)
            assert quantize(pq, x).dense().sum() == 4

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(6)
        pq = make_pq([rng.normal(size=(7, 2)) for _ in range(3)])
        xs = rng.normal(size=(300, 6)).astype(np.float32)
        batch = quantize_batch(pq, xs)
        for i in range(len(xs)):
            assert tuple(batch[i]) == quantize(pq, xs[i]).as_tuple()

    def test_dimension_mismatch(self):
        pq = make_pq([[[0.0], [1.0]]])
        with pytest.raises(ShapeMismatchError):
            quantize(pq, np.zeros(3, dtype=np.float32))

    def test_subspace_independence(self):
        rng = np.random.default_rng(7)
        pq = make_pq([rng.normal(size=(6, 2)) for _ in range(4)])
        for _ in range(50):
            x = rng.normal(size=8).astype(np.float32)
            base = quantize(pq, x).indices
            j = int(rng.integers(0, 4))
            bumped = x.copy()
            bumped[2 * j : 2 * j + 2] += rng.normal(size=2).astype(np.float32)
            moved = quantize(pq, bumped).indices
            others = np.delete(np.arange(4), j)
            assert np.array_equal(base[others], moved[others])

    def test_addressable_cells_all_reachable(self):
        # k=2 maps of 2 one-dimensional prototypes address 2^2 = 4 cells.
        pq = make_pq([[[0.0], [1.0]], [[0.0], [1.0]]])
        seen = {
            quantize(pq, np.array(x, dtype=np.float32)).as_tuple()
            for x in itertools.product([0.0, 1.0], repeat=2)
        }
        assert len(seen) == pq.n_per_som ** pq.k
