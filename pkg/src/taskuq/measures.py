"""Total, aleatoric and epistemic uncertainty of a finite second-order
distribution under a scoring rule.

Two independent routes are provided:

* ``generic`` uses nothing but the rule's per-outcome losses::

      TU = sum_m w_m L(avg, theta_m)
      AU = sum_m w_m L(theta_m, theta_m)
      EU = TU - AU

* ``closed_form`` evaluates the textbook expressions for the built-in rules
  (Shannon entropy / KL, Gini impurity / squared distance, one minus max
  probability / top-label disagreement) without calling the rule at all.

The two must agree to rounding; the test-suite uses one as the oracle for
the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import entr, rel_entr

from .core import SecondOrderEnsemble, mean_members, uniform_weights
from .scoring import BrierScore, LogScore, ScoringRule, ZeroOneScore, get_rule

MODES = ("generic", "closed_form", "auto")
COMPONENTS = ("tu", "au", "eu")


@dataclass(frozen=True)
class UncertaintyTriple:
    tu: float
    au: float
    eu: float
    rule_name: str

    def __getitem__(self, component: str) -> float:
        if component not in COMPONENTS:
            raise KeyError(component)
        return getattr(self, component)

    def as_dict(self) -> dict:
        return {"rule": self.rule_name, "tu": self.tu, "au": self.au, "eu": self.eu}


def _wsum(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    # zero-weight members may carry inf/nan terms (e.g. KL to a zero of avg)
    with np.errstate(invalid="ignore"):
        terms = np.where(weights > 0, weights * values, 0.0)
    return terms.sum(axis=-1)


def _generic(rule: ScoringRule, members, weights, avg):
    avg_scores = rule.scores(avg)
    cross = np.einsum("...mk,...k->...m", members, avg_scores)
    tu = _wsum(weights, cross)
    au = _wsum(weights, rule.entropy(members))
    return tu, au, tu - au


def _closed_log(members, weights, avg):
    tu = entr(avg).sum(axis=-1)
    au = _wsum(weights, entr(members).sum(axis=-1))
    eu = _wsum(weights, rel_entr(members, avg[..., None, :]).sum(axis=-1))
    return tu, au, eu


def _closed_brier(members, weights, avg):
    tu = 1.0 - np.sum(avg**2, axis=-1)
    au = _wsum(weights, 1.0 - np.sum(members**2, axis=-1))
    eu = _wsum(weights, np.sum((avg[..., None, :] - members) ** 2, axis=-1))
    return tu, au, eu


def _closed_zero_one(members, weights, avg):
    top = np.argmax(avg, axis=-1)
    tu = 1.0 - np.max(avg, axis=-1)
    au = _wsum(weights, 1.0 - np.max(members, axis=-1))
    at_top = np.take_along_axis(members, top[..., None, None], axis=-1)[..., 0]
    eu = _wsum(weights, np.max(members, axis=-1) - at_top)
    return tu, au, eu


_CLOSED_FORMS = (
    (LogScore, _closed_log),
    (BrierScore, _closed_brier),
    (ZeroOneScore, _closed_zero_one),
)


def _closed_form_for(rule: ScoringRule):
    for cls, fn in _CLOSED_FORMS:
        if type(rule) is cls:
            return fn
    return None


def decompose_members(rule, members, weights=None, mode: str = "auto"):
    """Vectorized decomposition of ``(..., M, K)`` member probabilities.

    ``weights`` is ``None`` (uniform), shape ``(M,)`` or ``(..., M)``.
    Returns ``(tu, au, eu)`` arrays of shape ``(...)``.
    """
    rule = get_rule(rule)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    members = np.asarray(members, dtype=np.float64)
    if members.ndim < 2:
        raise ValueError(f"members must have shape (..., M, K), got {members.shape}")
    if weights is None:
        weights = uniform_weights(members.shape[-2])
    weights = np.asarray(weights, dtype=np.float64)
    avg = mean_members(members, weights)

    closed = _closed_form_for(rule)
    if mode == "closed_form" and closed is None:
        raise ValueError(f"no closed form for rule {rule.name!r}")
    if mode == "generic" or closed is None:
        return _generic(rule, members, weights, avg)
    return closed(members, weights, avg)


def decompose(rule, Q: SecondOrderEnsemble, mode: str = "auto") -> UncertaintyTriple:
    rule = get_rule(rule)
    tu, au, eu = decompose_members(rule, Q.members, Q.weights, mode)
    return UncertaintyTriple(float(tu), float(au), float(eu), rule.name)


def batch_decompose(rule, Qs: Sequence[SecondOrderEnsemble], mode: str = "auto") -> list[UncertaintyTriple]:
    """Decompose many ensembles at once; output order follows input order.

    Ensembles are grouped by member count and evaluated as stacked arrays,
    which reproduces :func:`decompose` bit for bit.
    """
    rule = get_rule(rule)
    if not Qs:
        return []
    ks = {Q.K for Q in Qs}
    if len(ks) > 1:
        raise ValueError(f"mixed class counts in batch: {sorted(ks)}")

    out: list[UncertaintyTriple | None] = [None] * len(Qs)
    by_m: dict[int, list[int]] = {}
    for i, Q in enumerate(Qs):
        by_m.setdefault(Q.M, []).append(i)
    for idx in by_m.values():
        members = np.stack([Qs[i].members for i in idx])
        weights = np.stack([Qs[i].weights for i in idx])
        tu, au, eu = decompose_members(rule, members, weights, mode)
        for j, i in enumerate(idx):
            out[i] = UncertaintyTriple(float(tu[j]), float(au[j]), float(eu[j]), rule.name)
    return out


def jensen_gap(rule, Q: SecondOrderEnsemble) -> float:
    """``E[G(theta)] - G(avg)`` for the rule's convex potential ``G``."""
    rule = get_rule(rule)
    avg = mean_members(Q.members, Q.weights)
    g_members = rule.potential(Q.members)
    return float(_wsum(Q.weights, g_members) - rule.potential(avg))
