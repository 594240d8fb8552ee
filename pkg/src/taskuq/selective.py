"""Selective prediction: loss-rejection curves and their area (AULC).

Instances are kept in order of *ascending* uncertainty, so the curve point
at keep-fraction ``k/n`` is the mean task loss of the ``k`` least uncertain
instances. The area is the exact Riemann sum over ``k = 1..n``::

    AULC = (1/n) * sum_k (1/k) * sum_{j<=k} c[order[j]]
         = (1/n) * sum_j w_j * c[order[j]],   w_j = sum_{k=j}^{n} 1/k

Because ``w`` is decreasing, the sum is minimized by sorting the costs
ascending (rearrangement inequality); :func:`brute_force_aulc` checks that
by enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import SecondOrderEnsemble, mean_members, uniform_weights
from .measures import COMPONENTS, decompose_members
from .scoring import get_rule

MAX_BRUTE_FORCE_N = 9


@dataclass(frozen=True, eq=False)
class RejectionCurve:
    alphas: np.ndarray
    losses: np.ndarray
    aulc: float
    order: np.ndarray
    instance_losses: np.ndarray

    @property
    def n(self) -> int:
        return self.alphas.size

    def rows(self):
        """``(alpha, loss)`` pairs, smallest keep-fraction first."""
        return list(zip(self.alphas.tolist(), self.losses.tolist()))


def _finite_vector(x, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{what} must be a vector, got shape {x.shape}")
    if np.any(np.isnan(x)):
        raise ValueError(f"{what} contain NaN")
    return x


def rejection_order(uncertainties) -> np.ndarray:
    """Stable ascending sort: most certain first, ties by original index."""
    u = _finite_vector(uncertainties, "uncertainties")
    return np.argsort(u, kind="stable")


def optimal_order(expected_losses) -> np.ndarray:
    """Order minimizing expected AULC: non-decreasing expected loss."""
    c = _finite_vector(expected_losses, "expected losses")
    return np.argsort(c, kind="stable")


def aulc_weights(n: int) -> np.ndarray:
    """Rearrangement weights ``w_j = sum_{k=j}^{n} 1/k`` for ``j = 1..n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    inv = 1.0 / np.arange(1, n + 1)
    return np.cumsum(inv[::-1])[::-1]


def weighted_cost(costs, order) -> float:
    """``S(order) = sum_j w_j * costs[order[j]]``, i.e. ``n * AULC``."""
    c = np.asarray(costs, dtype=np.float64)
    return float(np.dot(aulc_weights(c.size), c[np.asarray(order)]))


def brute_force_aulc(expected_losses) -> tuple[tuple[int, ...], float]:
    """Exhaustive minimum of ``S`` over all ``n!`` orderings.

    Returns the first minimizing permutation in lexicographic order and its
    value. Only for ``n <= 9``.
    """
    c = _finite_vector(expected_losses, "expected losses")
    n = c.size
    if n < 1:
        raise ValueError("need at least one cost")
    if n > MAX_BRUTE_FORCE_N:
        raise ValueError(f"n={n} too large for enumeration (max {MAX_BRUTE_FORCE_N})")
    w = aulc_weights(n)
    best_perm, best = None, np.inf
    for perm in itertools.permutations(range(n)):
        s = float(np.dot(w, c[list(perm)]))
        if s < best:
            best_perm, best = perm, s
    return best_perm, best


def loss_rejection_curve(per_instance_losses, uncertainties) -> RejectionCurve:
    c = _finite_vector(per_instance_losses, "losses")
    u = _finite_vector(uncertainties, "uncertainties")
    if c.size != u.size:
        raise ValueError(f"length mismatch: {c.size} losses vs {u.size} uncertainties")
    n = c.size
    if n == 0:
        raise ValueError("need at least one instance")
    order = rejection_order(u)
    k = np.arange(1, n + 1)
    losses = np.cumsum(c[order]) / k
    return RejectionCurve(
        alphas=k / n,
        losses=losses,
        aulc=float(losses.mean()),
        order=order,
        instance_losses=c,
    )


def _member_array(predictions) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(predictions, np.ndarray):
        return predictions, uniform_weights(predictions.shape[-2])
    Ms = {Q.M for Q in predictions}
    if len(Ms) != 1:
        raise ValueError("all ensembles must have the same number of members")
    members = np.stack([Q.members for Q in predictions])
    weights = np.stack([Q.weights for Q in predictions])
    return members, weights


def instance_task_losses(task_rule, members: np.ndarray, labels, weights=None) -> np.ndarray:
    """Task loss of the model average for each instance."""
    if weights is None:
        weights = uniform_weights(members.shape[-2])
    avg = mean_members(members, weights)
    return get_rule(task_rule).score(avg, np.asarray(labels))


def selective_experiment(
    predictions: Sequence[SecondOrderEnsemble] | np.ndarray,
    labels,
    unc_rule,
    unc_component: str,
    task_rule,
) -> RejectionCurve:
    """Loss-rejection curve for one (uncertainty rule, component, task rule).

    ``predictions`` is a list of ensembles with a common member count, or
    an ``(n, M, K)`` array of uniformly weighted member probabilities.
    """
    if unc_component not in COMPONENTS:
        raise ValueError(f"unknown component {unc_component!r}")
    members, weights = _member_array(predictions)
    labels = np.asarray(labels)
    if members.shape[0] != labels.shape[0]:
        raise ValueError(f"{members.shape[0]} predictions but {labels.shape[0]} labels")
    tu, au, eu = decompose_members(unc_rule, members, weights)
    u = {"tu": tu, "au": au, "eu": eu}[unc_component]
    c = instance_task_losses(task_rule, members, labels, weights)
    return loss_rejection_curve(c, u)
