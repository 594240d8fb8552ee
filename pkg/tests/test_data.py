from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from taskuq.data import (
    DataError,
    MixtureSpec,
    default_spec,
    gen_mixture,
    gen_ood_shift,
    load_csv,
    rare_region_spec,
    separated_spec,
    split,
)
from taskuq.trees import fit_bagged_trees


class TestSpec:
    def test_defaults(self):
        s = default_spec()
        assert (s.K, s.D) == (4, 4)
        np.testing.assert_allclose(s.class_priors, 0.25)

    def test_roundtrip(self):
        s = rare_region_spec().with_flip(0.2)
        t = MixtureSpec.from_dict(s.to_dict())
        assert t.to_dict() == s.to_dict()

    def test_scalar_scale(self):
        assert MixtureSpec([[0.0], [1.0]], 2.0).scales.tolist() == [[2.0], [2.0]]

    @pytest.mark.parametrize(
        "kw",
        [
            {"means": [[0.0]], "scales": [[1.0]]},
            {"means": [[0.0], [1.0]], "scales": [[1.0]]},
            {"means": [[0.0], [1.0]], "scales": [[1.0], [0.0]]},
            {"means": [[0.0], [1.0]], "scales": 1.0, "class_priors": [0.2, 0.2]},
            {"means": [[0.0], [1.0]], "scales": 1.0, "label_flip": 1.0},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            MixtureSpec(**kw)

    def test_from_dict_unknown_key(self):
        with pytest.raises(ValueError):
            MixtureSpec.from_dict({"means": [[0], [1]], "scales": 1, "noise": 0.1})


class TestGenerators:
    def test_deterministic(self):
        s = default_spec(0.1)
        assert gen_mixture(s, 50, 3) == gen_mixture(s, 50, 3)
        assert gen_mixture(s, 50, 3) != gen_mixture(s, 50, 4)

    def test_single_row(self):
        d = gen_mixture(default_spec(), 1, 0)
        assert (d.N, d.D) == (1, 4)

    def test_n_zero(self):
        with pytest.raises(ValueError):
            gen_mixture(default_spec(), 0, 0)

    @given(st.integers(0, 2**32), st.integers(1, 60))
    def test_shift_zero_is_identity(self, seed, n):
        s = default_spec(0.2)
        a, b = gen_mixture(s, n, seed), gen_ood_shift(s, 0.0, n, seed)
        assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)

    def test_shift_moves_first_axis(self):
        s = default_spec()
        a, b = gen_mixture(s, 30, 5), gen_ood_shift(s, 10.0, 30, 5)
        np.testing.assert_allclose(b.features[:, 0] - a.features[:, 0], 10 * s.scales.mean())
        np.testing.assert_array_equal(b.features[:, 1:], a.features[:, 1:])
        with pytest.raises(ValueError):
            gen_ood_shift(s, -1.0, 5, 0)

    def test_flip_rate_and_other_class(self):
        d = gen_mixture(default_spec(0.3), 20000, 0)
        clean = d.meta["clean_labels"]
        flipped = d.labels != clean
        assert flipped.mean() == pytest.approx(0.3, abs=0.015)
        # flips land uniformly on the other classes
        offsets = (d.labels[flipped] - clean[flipped]) % 4
        np.testing.assert_allclose(np.bincount(offsets, minlength=4)[1:] / flipped.sum(), 1 / 3, atol=0.02)

    def test_priors(self):
        d = gen_mixture(rare_region_spec(), 20000, 1)
        np.testing.assert_allclose(np.bincount(d.labels) / d.N, [0.44, 0.44, 0.06, 0.06], atol=0.015)

    def test_separated_is_learnable(self):
        s = separated_spec(0.0)
        losses = []
        for seed in range(3):
            tr, te = gen_mixture(s, 300, seed), gen_mixture(s, 500, seed + 100)
            model = fit_bagged_trees(tr, 20, 5, seed)
            losses.append(np.mean(model.predict_proba(te.features).argmax(1) != te.labels))
        assert max(losses) <= 0.02


class TestSplit:
    def test_sizes(self):
        d = gen_mixture(default_spec(), 10, 0)
        tr, te = split(d, 0.7, 1)
        assert (tr.N, te.N) == (7, 3)
        both = np.concatenate([tr.features, te.features])
        assert sorted(map(tuple, both)) == sorted(map(tuple, d.features))

    def test_reproducible(self):
        d = gen_mixture(default_spec(), 25, 0)
        assert split(d, 0.6, 9)[0] == split(d, 0.6, 9)[0]

    def test_degenerate(self):
        d = gen_mixture(default_spec(), 1, 0)
        with pytest.raises(ValueError, match="empty train split"):
            split(d, 0.5, 0)
        with pytest.raises(ValueError):
            split(d, 1.0, 0)


class TestCsv:
    def write(self, tmp_path, text):
        p = tmp_path / "d.csv"
        p.write_text(text)
        return p

    def test_labels_sorted_index(self, tmp_path):
        d = load_csv(self.write(tmp_path, "x,y,label\n1,2,a\n3,4,b\n5,6,a\n"), "label")
        assert d.labels.tolist() == [0, 1, 0]
        assert d.features.tolist() == [[1, 2], [3, 4], [5, 6]]
        assert d.meta["classes"] == ["a", "b"] and d.meta["columns"] == ["x", "y"]

    def test_label_column_anywhere(self, tmp_path):
        d = load_csv(self.write(tmp_path, "cls;f\nz;0.5\nb;1.5\n"), "cls", ";")
        assert d.labels.tolist() == [1, 0] and d.K == 2

    def test_one_row(self, tmp_path):
        assert load_csv(self.write(tmp_path, "f,label\n1.0,x\n"), "label").N == 1

    def test_non_numeric(self, tmp_path):
        with pytest.raises(DataError, match=r"row 3, column 'y'"):
            load_csv(self.write(tmp_path, "x,y,label\n1,2,a\n3,oops,b\n"), "label")

    def test_missing_column(self, tmp_path):
        with pytest.raises(DataError, match="missing label column"):
            load_csv(self.write(tmp_path, "x,y\n1,2\n"), "label")

    def test_empty(self, tmp_path):
        with pytest.raises(DataError, match="empty file"):
            load_csv(self.write(tmp_path, ""), "label")

    def test_ragged(self, tmp_path):
        with pytest.raises(DataError, match="row 2"):
            load_csv(self.write(tmp_path, "x,label\n1,a,extra\n"), "label")

    def test_no_rows(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(self.write(tmp_path, "x,label\n"), "label")
