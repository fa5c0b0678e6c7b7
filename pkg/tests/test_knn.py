import numpy as np
import pytest

from beamforming.codebook import BeamVector, PhaseCodebook
from beamforming.power import SignalModel, received_power
from channel.propagation import ChannelVector
from learning.knn import best_of_knn, knn, knn_bruteforce
from utils.exceptions import NeighborSearchError


def as_tuples(neighbors):
    return [tuple(int(i) for i in v.indices) for v in neighbors.vectors]


class TestKnn:
    def test_level_one_around_interior_point(self):
        result = knn(BeamVector([1, 1], 2), 4, rng=0)
        assert set(as_tuples(result)) == {(2, 1), (0, 1), (1, 2), (1, 0)}
        assert result.levels == [1, 1, 1, 1]
        assert not result.exhausted

    def test_boundary_blocks_downward_step(self):
        result = knn(BeamVector([0], 2), 3, rng=0)
        assert as_tuples(result) == [(1,)]
        assert result.exhausted
        assert result.requested == 3

    def test_single_neighbor_is_one_step_away(self):
        w = BeamVector([3, 0, 2, 1], 2)
        result = knn(w, 1, rng=5)
        (neighbor,) = result.vectors
        diff = np.abs(neighbor.indices - w.indices)
        assert diff.sum() == 1

    def test_never_returns_input_or_duplicates(self, rng):
        for _ in range(50):
            codebook = PhaseCodebook(3)
            w = BeamVector(rng.integers(8, size=6), 3)
            result = knn(w, 30, codebook, rng)
            keys = as_tuples(result)
            assert len(set(keys)) == len(keys)
            assert tuple(w.indices) not in keys

    def test_levels_are_exact(self, rng):
        w = BeamVector(rng.integers(8, size=10), 3)
        result = knn(w, 60, rng=rng)
        assert result.levels == sorted(result.levels)
        for vector, level in zip(result.vectors, result.levels):
            delta = vector.indices - w.indices
            assert np.count_nonzero(delta) == level
            assert set(np.abs(delta[delta != 0]).tolist()) <= {1}
            assert vector.indices.min() >= 0 and vector.indices.max() < 8

    def test_matches_bruteforce_per_level(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 5))
            codebook = PhaseCodebook(int(rng.integers(1, 4)))
            w = BeamVector(rng.integers(codebook.size, size=n), codebook.bits)
            everything = knn_bruteforce(w, 3**n, codebook)
            result = knn(w, 3**n, codebook, rng)
            assert result.by_level() == everything.by_level()
            assert len(result) == len(everything)

    def test_truncated_output_completes_lower_levels(self, rng):
        w = BeamVector([1, 2, 1], 2)
        truth = knn_bruteforce(w, 27, PhaseCodebook(2)).by_level()
        k = len(truth[1]) + 3
        found = knn(w, k, rng=rng).by_level()
        assert found[1] == truth[1]
        assert len(found[2]) == 3 and found[2] <= truth[2]

    def test_same_seed_same_order(self):
        w = BeamVector([3, 5, 7, 1, 0, 2], 3)
        assert as_tuples(knn(w, 12, rng=42)) == as_tuples(knn(w, 12, rng=42))

    def test_wrap_allows_crossing_boundary(self):
        result = knn(BeamVector([0], 2), 3, rng=0, wrap=True)
        assert set(as_tuples(result)) == {(1,), (3,)}

    def test_one_bit_wrap_has_single_move(self):
        result = knn(BeamVector([0, 1], 1), 5, rng=0, wrap=True)
        assert set(as_tuples(result)) == {(1, 1), (0, 0), (1, 0)}

    def test_operation_count_linear_in_k_and_n(self):
        n, k = 64, 8
        w = BeamVector(np.full(n, 7), 4)
        result = knn(w, k, rng=1)
        assert len(result) == k
        assert result.operations <= 4 * k * n

    def test_invalid_k(self):
        with pytest.raises(NeighborSearchError):
            knn(BeamVector([1], 2), 0)


class TestKnnBruteforce:
    def test_interior_level_sizes(self):
        levels = knn_bruteforce(BeamVector([1, 1], 2), 100).by_level()
        assert len(levels[1]) == 4
        assert len(levels[2]) == 4

    def test_corner_level_one(self):
        levels = knn_bruteforce(BeamVector([0, 0], 2), 100).by_level()
        assert levels[1] == {(1, 0), (0, 1)}

    def test_truncates_to_k(self):
        result = knn_bruteforce(BeamVector([1, 1], 2), 5)
        assert len(result) == 5
        assert result.levels == [1, 1, 1, 1, 2]

    def test_too_large(self):
        with pytest.raises(NeighborSearchError):
            knn_bruteforce(BeamVector(np.zeros(12, dtype=int), 2), 4)


class TestBestOfKnn:
    def test_single_candidate(self):
        w = BeamVector([2, 1], 2)
        assert best_of_knn([w], lambda idx: np.zeros(len(idx))) is w

    def test_constant_scorer_keeps_first(self):
        candidates = [BeamVector([0], 2), BeamVector([1], 2), BeamVector([2], 2)]
        assert best_of_knn(candidates, lambda idx: np.ones(len(idx))) is candidates[0]

    def test_true_power_scorer(self, rng):
        codebook = PhaseCodebook(2)
        sig = SignalModel()
        h = ChannelVector(rng.uniform(0.5, 1.5, 3) * np.exp(1j * rng.uniform(-np.pi, np.pi, 3)))
        w = BeamVector(rng.integers(4, size=3), 2)
        candidates = [w] + knn(w, 26, codebook, rng).vectors

        def scorer(indices):
            return np.array([received_power(BeamVector(row, 2), h, sig) for row in indices])

        chosen = best_of_knn(candidates, scorer)
        powers = [received_power(c, h, sig) for c in candidates]
        assert received_power(chosen, h, sig) == max(powers)

    def test_empty_candidates(self):
        with pytest.raises(NeighborSearchError):
            best_of_knn([], lambda idx: idx)

    def test_scorer_length_mismatch(self):
        with pytest.raises(NeighborSearchError):
            best_of_knn([BeamVector([0], 2), BeamVector([1], 2)], lambda idx: np.ones(1))
