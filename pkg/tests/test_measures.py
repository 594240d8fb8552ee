from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taskuq.core import SecondOrderEnsemble, UnsupportedOperation, model_average
from taskuq.measures import UncertaintyTriple, batch_decompose, decompose, decompose_members, jensen_gap
from taskuq.scoring import BUILTIN_RULES, ScoringRule, get_rule

from conftest import ensembles

LN2 = math.log(2)
OPPOSITE = SecondOrderEnsemble(np.array([[1.0, 0.0], [0.0, 1.0]]))


def oracle(rule, Q):
    """Definition evaluated member by member with plain loops."""
    rule = get_rule(rule)
    avg = model_average(Q).probs
    tu = sum(w * rule.expected_loss(avg, m) for w, m in zip(Q.weights, Q.members))
    au = sum(w * rule.entropy(m) for w, m in zip(Q.weights, Q.members))
    return tu, au, tu - au


class TestExamples:
    def test_log_opposite(self):
        t = decompose("log", OPPOSITE)
        assert (t.tu, t.au, t.eu) == pytest.approx((LN2, 0.0, LN2), abs=1e-12)

    def test_brier_opposite(self):
        t = decompose("brier", OPPOSITE)
        assert (t.tu, t.au, t.eu) == pytest.approx((0.5, 0.0, 0.5), abs=1e-12)

    @pytest.mark.parametrize("mode", ["generic", "closed_form", "auto"])
    def test_zero_one_tie(self, mode):
        Q = SecondOrderEnsemble(np.array([[0.6, 0.4], [0.4, 0.6]]))
        t = decompose("zero_one", Q, mode)
        assert (t.tu, t.au, t.eu) == pytest.approx((0.5, 0.4, 0.1), abs=1e-12)

    @pytest.mark.parametrize("name", BUILTIN_RULES)
    def test_point_mass_has_no_eu(self, name):
        Q = SecondOrderEnsemble.point_mass(np.array([0.2, 0.3, 0.5]))
        t = decompose(name, Q)
        assert t.eu == pytest.approx(0.0, abs=1e-15)
        assert t.tu == pytest.approx(get_rule(name).entropy([0.2, 0.3, 0.5]), abs=1e-12)

    def test_triple_access(self):
        t = decompose("log", OPPOSITE)
        assert isinstance(t, UncertaintyTriple)
        assert t["eu"] == t.eu and t.rule_name == "log"
        assert set(t.as_dict()) >= {"tu", "au", "eu"}


class TestModes:
    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            decompose("log", OPPOSITE, "fast")

    def test_closed_form_unknown_rule(self):
        class Custom(ScoringRule):
            name = "custom_abs"
            strictly_proper = False

            def scores(self, pred):
                return 1.0 - np.asarray(pred, dtype=float)

        with pytest.raises(ValueError):
            decompose(Custom(), OPPOSITE, "closed_form")
        t = decompose(Custom(), OPPOSITE, "auto")
        assert t.tu == pytest.approx(t.au + t.eu)

    @pytest.mark.parametrize("name", BUILTIN_RULES)
    @given(Q=ensembles())
    def test_generic_matches_closed_form(self, name, Q):
        a, b = decompose(name, Q, "generic"), decompose(name, Q, "closed_form")
        np.testing.assert_allclose([a.tu, a.au, a.eu], [b.tu, b.au, b.eu], atol=1e-9)

    @pytest.mark.parametrize("name", BUILTIN_RULES)
    @given(Q=ensembles())
    def test_matches_loop_oracle(self, name, Q):
        t = decompose(name, Q)
        np.testing.assert_allclose([t.tu, t.au, t.eu], oracle(name, Q), atol=1e-9)


class TestInvariants:
    @pytest.mark.parametrize("name", BUILTIN_RULES)
    @given(Q=ensembles())
    def test_identity_and_signs(self, name, Q):
        t = decompose(name, Q)
        assert abs(t.tu - (t.au + t.eu)) < 1e-9
        assert t.eu >= -1e-12 and t.au >= -1e-12

    @pytest.mark.parametrize("name", ["log", "brier"])
    @given(Q=ensembles())
    def test_eu_zero_iff_identical_members(self, name, Q):
        t = decompose(name, Q)
        support = Q.members[Q.weights > 0]
        if np.all(support == support[0]):
            assert t.eu == pytest.approx(0.0, abs=1e-12)
        elif t.eu < 1e-12:
            # only tiny member differences can give a numerically zero gap
            assert np.max(np.abs(support - support[0])) < 1e-4

    @given(Q=ensembles(), perm_seed=st.integers(0, 2**16))
    def test_member_order_irrelevant(self, Q, perm_seed):
        perm = np.random.default_rng(perm_seed).permutation(Q.M)
        P = SecondOrderEnsemble(Q.members[perm], Q.weights[perm])
        for name in BUILTIN_RULES:
            a, b = decompose(name, Q), decompose(name, P)
            np.testing.assert_allclose([a.tu, a.au, a.eu], [b.tu, b.au, b.eu], atol=1e-12)

    def test_zero_weight_member_ignored(self):
        Q = SecondOrderEnsemble(np.array([[1.0, 0.0], [0.0, 1.0]]), [1.0, 0.0])
        for name in BUILTIN_RULES:
            assert decompose(name, Q).eu == pytest.approx(0.0, abs=1e-15)

    def test_zero_one_eu_only_from_label_disagreement(self):
        Q = SecondOrderEnsemble(np.array([[0.9, 0.1], [0.6, 0.4]]))
        assert decompose("zero_one", Q).eu == 0.0


class TestJensenGap:
    def test_log_opposite(self):
        assert jensen_gap("log", OPPOSITE) == pytest.approx(LN2)

    def test_brier_point_mass(self):
        assert jensen_gap("brier", SecondOrderEnsemble.point_mass(np.array([0.3, 0.7]))) == pytest.approx(0.0, abs=1e-15)

    def test_brier_example(self):
        Q = SecondOrderEnsemble(np.array([[0.8, 0.2], [0.2, 0.8]]))
        # E[G] = -0.32, G(0.5, 0.5) = -0.5; mean squared deviation is 2 * 0.09
        assert jensen_gap("brier", Q) == pytest.approx(0.18, abs=1e-12)
        assert decompose("brier", Q, "generic").eu == pytest.approx(0.18, abs=1e-12)

    def test_zero_one_unsupported(self):
        with pytest.raises(UnsupportedOperation):
            jensen_gap("zero_one", OPPOSITE)

    @pytest.mark.parametrize("name", ["log", "brier"])
    @given(Q=ensembles())
    def test_equals_eu(self, name, Q):
        assert jensen_gap(name, Q) == pytest.approx(decompose(name, Q).eu, abs=1e-9)


class TestBatch:
    def test_empty(self):
        assert batch_decompose("log", []) == []

    def test_point_mass(self):
        theta = np.array([0.1, 0.9])
        (t,) = batch_decompose("brier", [SecondOrderEnsemble.point_mass(theta)])
        h = get_rule("brier").entropy(theta)
        assert (t.tu, t.au, t.eu) == pytest.approx((h, h, 0.0), abs=1e-15)

    def test_mixed_k(self):
        with pytest.raises(ValueError):
            batch_decompose("log", [OPPOSITE, SecondOrderEnsemble.point_mass(np.array([0.2, 0.3, 0.5]))])

    @pytest.mark.parametrize("name", BUILTIN_RULES)
    @settings(max_examples=20)
    @given(Qs=st.lists(ensembles(K=3), min_size=1, max_size=100))
    def test_identical_to_sequential(self, name, Qs):
        got = batch_decompose(name, Qs)
        want = [decompose(name, Q) for Q in Qs]
        assert [(t.tu, t.au, t.eu) for t in got] == [(t.tu, t.au, t.eu) for t in want]

    def test_hundred_random(self):
        from taskuq.checks import random_ensembles

        Qs = [Q for Q in random_ensembles(600, seed=5) if Q.K == 5][:100]
        assert len(Qs) == 100
        for name in BUILTIN_RULES:
            got = batch_decompose(name, Qs)
            want = [decompose(name, Q) for Q in Qs]
            assert [(t.tu, t.au, t.eu) for t in got] == [(t.tu, t.au, t.eu) for t in want]


def test_decompose_members_broadcasts():
    members = np.array([[[1.0, 0.0], [0.0, 1.0]], [[0.5, 0.5], [0.5, 0.5]]])
    tu, au, eu = decompose_members("log", members)
    np.testing.assert_allclose(tu, [LN2, LN2])
    np.testing.assert_allclose(au, [0.0, LN2])
    np.testing.assert_allclose(eu, [LN2, 0.0], atol=1e-15)
