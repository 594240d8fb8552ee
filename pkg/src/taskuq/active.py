"""Pool-based active learning with epistemic-uncertainty query strategies.

Each round the remaining pool is scored with the strategy's EU (or a
uniform random key), the ``query_budget`` highest-scoring instances are
labeled, and the bagged-trees learner is refit from scratch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, derive_seed, rng
from .measures import decompose_members
from .trees import BaggedTreesModel, fit_bagged_trees, predict_second_order

__all__ = [
    "STRATEGIES",
    "ActiveLearningConfig",
    "BaggedTreesModel",
    "LearningCurve",
    "fit_bagged_trees",
    "predict_second_order",
    "query_batch",
    "run_active_learning",
    "strategy_scores",
]

STRATEGIES = {
    "eu_log": "log",
    "eu_brier": "brier",
    "eu_zero_one": "zero_one",
    "random": None,
}


@dataclass(frozen=True)
class ActiveLearningConfig:
    initial_labeled: int = 50
    query_budget: int = 50
    rounds: int = 20
    strategy: str = "eu_zero_one"
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {sorted(STRATEGIES)}")
        if self.initial_labeled < 1 or self.query_budget < 1 or self.rounds < 0:
            raise ValueError("initial_labeled and query_budget must be >= 1, rounds >= 0")

    @property
    def labels_needed(self) -> int:
        return self.initial_labeled + self.rounds * self.query_budget


@dataclass(frozen=True, eq=False)
class LearningCurve:
    labeled_counts: np.ndarray
    task_losses: np.ndarray
    queried: tuple[np.ndarray, ...] = ()
    strategy: str = ""
    seed: int = 0

    def __eq__(self, other):
        return (
            isinstance(other, LearningCurve)
            and np.array_equal(self.labeled_counts, other.labeled_counts)
            and np.array_equal(self.task_losses, other.task_losses)
        )


def query_batch(scores, budget: int) -> np.ndarray:
    """Positions of the ``budget`` largest scores; ties go to the lowest
    position."""
    s = np.asarray(scores, dtype=np.float64)
    if budget < 0 or budget > s.size:
        raise ValueError(f"budget {budget} exceeds pool size {s.size}")
    return np.argsort(-s, kind="stable")[:budget]


def _test_loss(model: BaggedTreesModel, test: Dataset) -> float:
    pred = np.argmax(model.predict_proba(test.features), axis=1)
    return float(np.mean(pred != test.labels))


def strategy_scores(model: BaggedTreesModel, X: np.ndarray, strategy: str, g: np.random.Generator) -> np.ndarray:
    rule = STRATEGIES[strategy]
    if rule is None:
        return g.random(X.shape[0])
    _, _, eu = decompose_members(rule, model.predict_members(X))
    return eu


def run_active_learning(
    pool: Dataset,
    test: Dataset,
    config: ActiveLearningConfig,
    n_trees: int = 20,
    max_depth: int = 5,
) -> LearningCurve:
    if config.labels_needed > pool.N:
        raise ValueError(f"pool exhausted: need {config.labels_needed} labels, pool has {pool.N}")
    if pool.D != test.D:
        raise ValueError(f"feature dimension mismatch: pool {pool.D}, test {test.D}")
    seed = config.seed
    labeled = np.sort(rng(seed, 0).permutation(pool.N)[: config.initial_labeled])
    unlabeled = np.setdiff1d(np.arange(pool.N), labeled)
    g_random = rng(seed, 1)

    counts, losses, queried = [], [], []
    for r in range(config.rounds + 1):
        model = fit_bagged_trees(pool.subset(labeled), n_trees, max_depth, derive_seed(seed, 2, r))
        counts.append(labeled.size)
        losses.append(_test_loss(model, test))
        if r == config.rounds:
            break
        scores = strategy_scores(model, pool.features[unlabeled], config.strategy, g_random)
        picked = unlabeled[query_batch(scores, config.query_budget)]
        queried.append(picked)
        labeled = np.sort(np.concatenate([labeled, picked]))
        unlabeled = np.setdiff1d(unlabeled, picked)

    return LearningCurve(
        labeled_counts=np.array(counts, dtype=np.int64),
        task_losses=np.array(losses),
        queried=tuple(queried),
        strategy=config.strategy,
        seed=seed,
    )
