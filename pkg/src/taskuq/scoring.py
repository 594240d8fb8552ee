"""Proper scoring rules (negatively oriented losses) over the simplex.

Every rule is defined by a single primitive, :meth:`ScoringRule.scores`,
which returns the loss of a prediction for *each* possible outcome. The
expected score, entropy, divergence and convex potential are derived from
it, so a user-defined rule only has to implement ``scores``.

All methods accept :class:`~taskuq.core.Categorical` objects or float arrays
of shape ``(..., K)`` and broadcast over leading axes.
"""

from __future__ import annotations

import numpy as np

from .core import Categorical, UnsupportedOperation

LOG_CLAMP = 1e-12


def _probs(x) -> np.ndarray:
    if isinstance(x, Categorical):
        return x.probs
    return np.asarray(x, dtype=np.float64)


def _check_same_k(a: np.ndarray, b: np.ndarray):
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: K={a.shape[-1]} vs K={b.shape[-1]}")


class ScoringRule:
    """Base class for scoring rules ``loss(pred, y)``.

    Subclasses implement :meth:`scores`. They may override :meth:`entropy`
    or :meth:`potential` with closed forms; the defaults go through
    :meth:`expected_loss`.
    """

    name: str = "rule"
    strictly_proper: bool = False

    def scores(self, pred) -> np.ndarray:
        """Loss of ``pred`` for every outcome, shape ``(..., K)``."""
        raise NotImplementedError

    def score(self, pred, y) -> np.ndarray | float:
        p = _probs(pred)
        y = np.asarray(y)
        K = p.shape[-1]
        if np.any(y < 0) or np.any(y >= K):
            raise ValueError(f"label out of range 0..{K - 1}: {y}")
        s = self.scores(p)
        out = np.take_along_axis(s, y[..., None].astype(np.int64), axis=-1)[..., 0]
        return float(out) if out.ndim == 0 else out

    def expected_loss(self, pred, truth):
        p, t = _probs(pred), _probs(truth)
        _check_same_k(p, t)
        out = np.sum(t * self.scores(p), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def entropy(self, truth):
        return self.expected_loss(truth, truth)

    def divergence(self, pred, truth):
        return self.expected_loss(pred, truth) - self.entropy(truth)

    def potential(self, theta):
        """Convex potential ``G = -entropy``; strictly proper rules only."""
        if not self.strictly_proper:
            raise UnsupportedOperation(f"{self.name}: no convex potential exposed")
        return -self.entropy(theta)

    def potential_grad(self, theta) -> np.ndarray:
        """Gradient of :meth:`potential` projected onto the simplex tangent
        space (components sum to zero)."""
        raise UnsupportedOperation(f"{self.name}: no potential gradient available")

    def __repr__(self):
        return f"<{type(self).__name__} {self.name!r}>"


def _project_tangent(g: np.ndarray) -> np.ndarray:
    return g - g.mean(axis=-1, keepdims=True)


class LogScore(ScoringRule):
    """``-log pred[y]`` with probabilities clamped to ``[clamp, 1]``."""

    name = "log"
    strictly_proper = True

    def __init__(self, clamp: float = LOG_CLAMP):
        self.clamp = clamp

    def scores(self, pred):
        return -np.log(np.clip(_probs(pred), self.clamp, 1.0))

    def potential_grad(self, theta):
        t = np.clip(_probs(theta), self.clamp, 1.0)
        return _project_tangent(np.log(t) + 1.0)


class BrierScore(ScoringRule):
    """Quadratic score ``sum_k (pred[k] - [k == y])**2``."""

    name = "brier"
    strictly_proper = True

    def scores(self, pred):
        p = _probs(pred)
        eye = np.eye(p.shape[-1])
        return np.sum((p[..., None, :] - eye) ** 2, axis=-1)

    def potential_grad(self, theta):
        return _project_tangent(2.0 * _probs(theta))


class ZeroOneScore(ScoringRule):
    """``1 - [argmax pred == y]``; ties go to the lowest class index.

    Proper but not strictly proper, so no potential is exposed.
    """

    name = "zero_one"
    strictly_proper = False

    def scores(self, pred):
        p = _probs(pred)
        hit = np.argmax(p, axis=-1)[..., None] == np.arange(p.shape[-1])
        return 1.0 - hit.astype(np.float64)


_REGISTRY: dict[str, ScoringRule] = {}


def register_rule(rule: ScoringRule, *, replace: bool = False) -> ScoringRule:
    if rule.name in _REGISTRY and not replace:
        raise ValueError(f"rule {rule.name!r} already registered")
    _REGISTRY[rule.name] = rule
    return rule


for _rule in (LogScore(), BrierScore(), ZeroOneScore()):
    register_rule(_rule)

BUILTIN_RULES = ("log", "brier", "zero_one")


def get_rule(rule) -> ScoringRule:
    """Look up a rule by name; rule instances pass through."""
    if isinstance(rule, ScoringRule):
        return rule
    try:
        return _REGISTRY[rule]
    except KeyError:
        raise ValueError(f"unknown scoring rule {rule!r}; known: {sorted(_REGISTRY)}") from None


def available_rules() -> list[str]:
    return sorted(_REGISTRY)


def score(rule, pred, y):
    return get_rule(rule).score(pred, y)


def expected_loss(rule, pred, truth):
    return get_rule(rule).expected_loss(pred, truth)


def entropy(rule, truth):
    return get_rule(rule).entropy(truth)


def divergence(rule, pred, truth):
    return get_rule(rule).divergence(pred, truth)


def potential(rule, theta):
    return get_rule(rule).potential(theta)
