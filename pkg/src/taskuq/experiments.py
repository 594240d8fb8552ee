"""Seeded experiment drivers shared by the CLI and the acceptance suite.

Every driver takes a list of integer seeds and returns per-seed results;
all data, bootstrap and query randomness is derived from each seed through
:func:`taskuq.core.derive_seed`, so a run is a pure function of its
arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .active import STRATEGIES, ActiveLearningConfig, LearningCurve, run_active_learning
from .core import Dataset, derive_seed
from .data import MixtureSpec, gen_mixture, gen_ood_shift, split
from .measures import COMPONENTS, decompose_members
from .ood import auroc
from .scoring import BUILTIN_RULES
from .selective import RejectionCurve, instance_task_losses, loss_rejection_curve
from .trees import fit_bagged_trees

# sub-stream ids under each experiment seed
_TRAIN, _TEST, _OOD, _MODEL, _SPLIT = range(5)


@dataclass
class LearnerParams:
    n_trees: int = 20
    max_depth: int = 5
    max_features: object = None


@dataclass
class SeedTable:
    """Per-seed scalar results keyed by a tuple of labels."""

    seeds: list[int]
    values: dict[tuple, list[float]] = field(default_factory=dict)

    def add(self, key: tuple, value: float):
        self.values.setdefault(key, []).append(float(value))

    def mean(self, key: tuple) -> float:
        return float(np.mean(self.values[key]))

    def std(self, key: tuple) -> float:
        return float(np.std(self.values[key]))


def synthetic_train_test(spec: MixtureSpec, n_train: int, n_test: int, seed: int) -> tuple[Dataset, Dataset]:
    train = gen_mixture(spec, n_train, derive_seed(seed, _TRAIN))
    test = gen_mixture(spec, n_test, derive_seed(seed, _TEST))
    return train, test


def csv_train_test(data: Dataset, seed: int, train_fraction: float = 0.7) -> tuple[Dataset, Dataset]:
    return split(data, train_fraction, derive_seed(seed, _SPLIT))


def _fit(train: Dataset, seed: int, learner: LearnerParams):
    return fit_bagged_trees(
        train, learner.n_trees, learner.max_depth, derive_seed(seed, _MODEL), learner.max_features
    )


def selective_run(
    train: Dataset,
    test: Dataset,
    seed: int,
    learner: LearnerParams | None = None,
    rules=BUILTIN_RULES,
    components=COMPONENTS,
) -> dict[tuple[str, str, str], RejectionCurve]:
    """Curves keyed by ``(component, uncertainty rule, task rule)``."""
    learner = learner or LearnerParams()
    members = _fit(train, seed, learner).predict_members(test.features)
    unc = {r: dict(zip(COMPONENTS, decompose_members(r, members))) for r in rules}
    task = {r: instance_task_losses(r, members, test.labels) for r in rules}
    return {
        (c, u, t): loss_rejection_curve(task[t], unc[u][c])
        for c in components
        for u in rules
        for t in rules
    }


def selective_table(
    spec: MixtureSpec | None,
    seeds,
    n_train: int = 1000,
    n_test: int = 2000,
    learner: LearnerParams | None = None,
    rules=BUILTIN_RULES,
    components=COMPONENTS,
    csv_data: Dataset | None = None,
    keep_curves: bool = False,
):
    """AULC per ``(component, uncertainty rule, task rule)`` and seed.

    Uses ``csv_data`` with a 70/30 split when given, else samples ``spec``.
    Returns ``(table, curves)``; ``curves`` is empty unless ``keep_curves``.
    """
    table = SeedTable(list(seeds))
    curves = {}
    for seed in seeds:
        if csv_data is not None:
            train, test = csv_train_test(csv_data, seed)
        else:
            train, test = synthetic_train_test(spec, n_train, n_test, seed)
        for key, curve in selective_run(train, test, seed, learner, rules, components).items():
            table.add(key, curve.aulc)
            if keep_curves:
                curves[key + (seed,)] = curve
    return table, curves


def ood_table(
    spec: MixtureSpec,
    seeds,
    shift: float = 10.0,
    n_train: int = 1000,
    n_test: int = 1000,
    n_ood: int = 1000,
    learner: LearnerParams | None = None,
    rules=BUILTIN_RULES,
    components=("eu",),
) -> SeedTable:
    """AUROC per ``(rule, component)`` and seed; iD test vs shifted sample."""
    learner = learner or LearnerParams()
    table = SeedTable(list(seeds))
    for seed in seeds:
        train, test = synthetic_train_test(spec, n_train, n_test, seed)
        shifted = gen_ood_shift(spec, shift, n_ood, derive_seed(seed, _OOD))
        model = _fit(train, seed, learner)
        m_id, m_ood = model.predict_members(test.features), model.predict_members(shifted.features)
        for r in rules:
            s_id = dict(zip(COMPONENTS, decompose_members(r, m_id)))
            s_ood = dict(zip(COMPONENTS, decompose_members(r, m_ood)))
            for c in components:
                table.add((r, c), auroc(s_id[c], s_ood[c]))
    return table


def active_curves(
    spec: MixtureSpec,
    seeds,
    strategies=tuple(STRATEGIES),
    pool_size: int = 5000,
    test_size: int = 2000,
    initial_labeled: int = 50,
    query_budget: int = 50,
    rounds: int = 20,
    learner: LearnerParams | None = None,
) -> dict[str, list[LearningCurve]]:
    learner = learner or LearnerParams()
    out: dict[str, list[LearningCurve]] = {s: [] for s in strategies}
    for seed in seeds:
        pool, test = synthetic_train_test(spec, pool_size, test_size, seed)
        for s in strategies:
            cfg = ActiveLearningConfig(initial_labeled, query_budget, rounds, s, seed)
            out[s].append(run_active_learning(pool, test, cfg, learner.n_trees, learner.max_depth))
    return out


def rounds_to_reach(mean_curve, target: float) -> float:
    """First round whose loss is ``<= target``; ``inf`` if never."""
    hit = np.flatnonzero(np.asarray(mean_curve) <= target)
    return float(hit[0]) if hit.size else float("inf")


def flip_dial(
    base: MixtureSpec,
    flips,
    seeds,
    n_train: int = 1000,
    n_test: int = 2000,
    learner: LearnerParams | None = None,
) -> SeedTable:
    """Mean zero-one AU on test data and test zero-one loss, keyed by
    ``("au", flip)`` and ``("loss", flip)``."""
    learner = learner or LearnerParams()
    table = SeedTable(list(seeds))
    for flip in flips:
        spec = base.with_flip(flip)
        for seed in seeds:
            train, test = synthetic_train_test(spec, n_train, n_test, seed)
            members = _fit(train, seed, learner).predict_members(test.features)
            _, au, _ = decompose_members("zero_one", members)
            table.add(("au", flip), au.mean())
            table.add(("loss", flip), instance_task_losses("zero_one", members, test.labels).mean())
    return table
