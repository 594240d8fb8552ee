"""Randomized self-checks run by ``taskuq check``.

Each suite returns ``(n_cases, failures)`` where ``failures`` is a list of
short descriptions; an empty list means the suite passed.
"""

from __future__ import annotations

import numpy as np

from .core import SecondOrderEnsemble, rng
from .measures import decompose, jensen_gap
from .ood import auroc, auroc_pairwise
from .scoring import BUILTIN_RULES, get_rule
from .selective import brute_force_aulc, loss_rejection_curve, optimal_order, weighted_cost

KS = (2, 3, 5, 10)
MS = (1, 2, 20)


def random_ensembles(n: int, seed: int = 0, ks=KS, ms=MS) -> list[SecondOrderEnsemble]:
    """Dirichlet-sampled ensembles cycling through every ``(K, M)`` pair.

    Concentrations are drawn log-uniformly in ``[0.05, 5]`` so that both
    near-vertex and near-uniform members occur.
    """
    g = rng(seed, 11)
    grid = [(k, m) for k in ks for m in ms]
    out = []
    for i in range(n):
        K, M = grid[i % len(grid)]
        alpha = np.exp(g.uniform(np.log(0.05), np.log(5.0)))
        members = g.dirichlet(np.full(K, alpha), size=M)
        members = np.clip(members, 0.0, None)
        members /= members.sum(axis=1, keepdims=True)
        weights = None
        if i % 3 == 2 and M > 1:
            weights = g.dirichlet(np.ones(M))
        out.append(SecondOrderEnsemble(members, weights))
    return out


def interior_points(n: int, seed: int = 0, ks=KS, margin: float = 1e-3) -> list[np.ndarray]:
    g = rng(seed, 12)
    pts = []
    for i in range(n):
        K = ks[i % len(ks)]
        p = g.dirichlet(np.full(K, 2.0))
        p = (p + margin) / (1.0 + K * margin)
        pts.append(p)
    return pts


def check_decomposition(ensembles, tol: float = 1e-9):
    fails = []
    for i, Q in enumerate(ensembles):
        for r in BUILTIN_RULES:
            for mode in ("generic", "closed_form"):
                t = decompose(r, Q, mode)
                if abs(t.tu - (t.au + t.eu)) >= tol or t.eu < -1e-12:
                    fails.append(f"#{i} {r}/{mode}: tu={t.tu} au={t.au} eu={t.eu}")
    return len(ensembles) * len(BUILTIN_RULES), fails


def check_closed_form(ensembles, tol: float = 1e-9):
    fails = []
    for i, Q in enumerate(ensembles):
        for r in BUILTIN_RULES:
            a, b = decompose(r, Q, "generic"), decompose(r, Q, "closed_form")
            err = max(abs(a.tu - b.tu), abs(a.au - b.au), abs(a.eu - b.eu))
            if not err < tol:
                fails.append(f"#{i} {r}: max deviation {err:.3e}")
    return len(ensembles) * len(BUILTIN_RULES), fails


def check_jensen_gap(ensembles, tol: float = 1e-9):
    fails = []
    for i, Q in enumerate(ensembles):
        for r in ("log", "brier"):
            gap, eu = jensen_gap(r, Q), decompose(r, Q).eu
            if not abs(gap - eu) < tol:
                fails.append(f"#{i} {r}: gap={gap} eu={eu}")
    return len(ensembles) * 2, fails


def fd_tangent_gradient(fn, theta: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of ``fn`` along the projected basis directions
    ``e_i - 1/K``; equals the tangent-space projection of the gradient."""
    K = theta.size
    grad = np.empty(K)
    for i in range(K):
        v = -np.full(K, 1.0 / K)
        v[i] += 1.0
        grad[i] = (fn(theta + h * v) - fn(theta - h * v)) / (2 * h)
    return grad


def check_bregman(points, tol: float = 1e-7, seed: int = 0):
    """Divergence equals the Bregman divergence of the potential, and the
    analytic potential gradient matches finite differences."""
    g = rng(seed, 13)
    fails = []
    for i, theta in enumerate(points):
        other = g.dirichlet(np.full(theta.size, 2.0))
        other = (other + 1e-3) / (1.0 + theta.size * 1e-3)
        for r in ("log", "brier"):
            rule = get_rule(r)
            grad = rule.potential_grad(other)
            fd = fd_tangent_gradient(rule.potential, other)
            if not np.max(np.abs(grad - fd)) < tol:
                fails.append(f"#{i} {r}: gradient off by {np.max(np.abs(grad - fd)):.3e}")
            for gvec in (grad, fd):
                breg = rule.potential(theta) - rule.potential(other) - np.dot(gvec, theta - other)
                div = rule.divergence(other, theta)
                if not abs(breg - div) < tol:
                    fails.append(f"#{i} {r}: bregman={breg} divergence={div}")
    return len(points) * 2, fails


def check_rearrangement_oracle(n_cases: int = 200, seed: int = 0):
    g = rng(seed, 14)
    fails = []
    for i in range(n_cases):
        n = int(g.integers(2, 8))
        c = g.random(n)
        perm, best = brute_force_aulc(c)
        opt = weighted_cost(c, optimal_order(c))
        if opt != best:
            fails.append(f"#{i} n={n}: optimal {opt!r} vs brute force {best!r}")
        curve = loss_rejection_curve(c, g.random(n))
        if not abs(curve.aulc * n - weighted_cost(c, curve.order)) < 1e-9:
            fails.append(f"#{i} n={n}: aulc*n != sum w_j c_pi(j)")
    return n_cases, fails


def check_auroc(n_cases: int = 100, seed: int = 0):
    g = rng(seed, 15)
    fails = []
    for i in range(n_cases):
        a = np.round(g.normal(0, 1, int(g.integers(1, 101))), 1)
        b = np.round(g.normal(0.5, 1, int(g.integers(1, 101))), 1)
        if auroc(a, b) != auroc_pairwise(a, b):
            fails.append(f"#{i}: rank {auroc(a, b)!r} vs pairs {auroc_pairwise(a, b)!r}")
    return n_cases, fails


def run_all(n_ensembles: int = 1000, seed: int = 0):
    """Run every suite; yields ``(name, n_cases, failures)``."""
    ens = random_ensembles(n_ensembles, seed)
    pts = interior_points(100, seed)
    yield "decomposition identity", *check_decomposition(ens)
    yield "closed form == generic", *check_closed_form(ens)
    yield "jensen gap == EU", *check_jensen_gap(ens)
    yield "bregman / finite differences", *check_bregman(pts, seed=seed)
    yield "AULC rearrangement oracle", *check_rearrangement_oracle(200, seed)
    yield "AUROC pair counting", *check_auroc(100, seed)
