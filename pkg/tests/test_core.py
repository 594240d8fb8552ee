from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given

from taskuq.core import (
    Categorical,
    Dataset,
    SecondOrderEnsemble,
    SimplexError,
    derive_seed,
    model_average,
    rng,
    validate_simplex,
)

from conftest import ensembles


class TestCategorical:
    def test_valid(self):
        c = Categorical([0.25, 0.75])
        assert c.K == 2
        assert not c.probs.flags.writeable

    @pytest.mark.parametrize("bad", [[1.0], [0.5, 0.6], [-0.1, 1.1], [np.nan, 1.0], [[0.5, 0.5]]])
    def test_invalid(self, bad):
        with pytest.raises(SimplexError):
            Categorical(bad)

    def test_equality_and_hash(self):
        assert Categorical([0.5, 0.5]) == Categorical(np.array([0.5, 0.5]))
        assert len({Categorical([0.5, 0.5]), Categorical([0.5, 0.5])}) == 1


class TestValidateSimplex:
    def test_accepts_unchanged(self):
        assert validate_simplex([0.5, 0.5]) == Categorical([0.5, 0.5])

    def test_renormalizes_drift(self):
        c = validate_simplex([0.5, 0.5 + 1e-12], 1e-9)
        assert c.probs.sum() == pytest.approx(1.0, abs=1e-15)

    def test_rejects(self):
        with pytest.raises(SimplexError, match="not a distribution"):
            validate_simplex([0.7, 0.7], 1e-9)

    def test_clips_tiny_negative(self):
        c = validate_simplex([-1e-12, 1.0 + 1e-12])
        assert c.probs[0] == 0.0

    def test_rejects_negative_beyond_tol(self):
        with pytest.raises(SimplexError):
            validate_simplex([-0.1, 1.1])


class TestModelAverage:
    def test_symmetric(self):
        Q = SecondOrderEnsemble(np.array([[1.0, 0.0], [0.0, 1.0]]))
        np.testing.assert_allclose(model_average(Q).probs, [0.5, 0.5])

    def test_single_member(self):
        Q = SecondOrderEnsemble(np.array([[0.7, 0.3]]))
        np.testing.assert_allclose(model_average(Q).probs, [0.7, 0.3])

    def test_weighted(self):
        Q = SecondOrderEnsemble(np.array([[0.6, 0.4], [0.2, 0.8]]), [0.25, 0.75])
        brute = 0.25 * np.array([0.6, 0.4]) + 0.75 * np.array([0.2, 0.8])
        np.testing.assert_allclose(model_average(Q).probs, [0.3, 0.7], atol=1e-15)
        np.testing.assert_allclose(model_average(Q).probs, brute, atol=1e-15)

    @given(ensembles())
    def test_is_categorical_and_weighted_mean(self, Q):
        avg = model_average(Q)
        brute = sum(w * m for w, m in zip(Q.weights, Q.members))
        np.testing.assert_allclose(avg.probs, brute, atol=1e-12)


class TestEnsemble:
    def test_from_categoricals(self):
        Q = SecondOrderEnsemble([Categorical([1, 0]), Categorical([0, 1])])
        assert (Q.M, Q.K) == (2, 2) and Q.is_uniform

    def test_bad_weights(self):
        with pytest.raises(SimplexError):
            SecondOrderEnsemble(np.array([[1.0, 0.0]]), [0.5])
        with pytest.raises(SimplexError):
            SecondOrderEnsemble(np.array([[1.0, 0.0], [0, 1]]), [0.5])

    def test_bad_member(self):
        with pytest.raises(SimplexError):
            SecondOrderEnsemble(np.array([[0.7, 0.7]]))

    def test_point_mass(self):
        Q = SecondOrderEnsemble.point_mass(Categorical([0.2, 0.8]))
        assert Q.M == 1 and Q.weights[0] == 1.0

    def test_members_are_copied(self):
        arr = np.array([[0.5, 0.5]])
        Q = SecondOrderEnsemble(arr)
        arr[0, 0] = 0.9
        assert Q.members[0, 0] == 0.5


class TestDataset:
    def test_basic(self):
        d = Dataset(np.zeros((3, 2)), [0, 1, 1], 2)
        assert (d.N, d.D) == (3, 2)
        assert d.subset([2]).labels.tolist() == [1]

    def test_caller_array_stays_writable(self):
        X = np.zeros((2, 2))
        Dataset(X, [0, 1], 2)
        X[0, 0] = 1.0

    @pytest.mark.parametrize(
        "X,y,K",
        [
            (np.zeros(3), [0, 0, 0], 2),
            (np.zeros((3, 1)), [0, 0], 2),
            (np.zeros((2, 1)), [0, 2], 2),
            (np.zeros((2, 1)), [0.5, 1.0], 2),
        ],
    )
    def test_invalid(self, X, y, K):
        with pytest.raises(ValueError):
            Dataset(X, y, K)


class TestRng:
    def test_reproducible(self):
        assert np.array_equal(rng(3, 1).random(5), rng(3, 1).random(5))

    def test_streams_differ(self):
        assert not np.array_equal(rng(3, 1).random(5), rng(3, 2).random(5))
        assert derive_seed(3, 1) != derive_seed(3, 2)

    def test_philox(self):
        assert isinstance(rng(0).bit_generator, np.random.Philox)

    def test_negative_seed(self):
        with pytest.raises(ValueError):
            rng(-1)
