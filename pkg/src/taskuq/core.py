"""Domain types shared across the package: simplex vectors, finite
second-order ensembles, labeled datasets and seeded random streams."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL = 1e-9


class SimplexError(ValueError):
    """Raised when a vector is not a probability distribution."""


class UnsupportedOperation(TypeError):
    """Raised when a scoring rule does not provide an operation."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by ``seed`` and an optional
    stream path.

    Philox-4x64 is platform independent, so every draw made from the same
    ``(seed, *stream)`` is reproducible bit for bit. Independent streams
    (one per tree, one per experiment phase) are addressed by appending
    integers to the path rather than by advancing a shared generator.
    """
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    entropy = [int(seed), *(int(s) for s in stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *stream: int) -> int:
    """63-bit child seed for a named sub-stream of ``seed``."""
    return int(rng(seed, *stream).integers(0, 2**63))


@dataclass(frozen=True, eq=False)
class Categorical:
    """First-order distribution over ``K >= 2`` classes."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 1 or p.size < 2:
            raise SimplexError(f"need a 1-D vector with K >= 2 entries, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise SimplexError("probabilities must be finite")
        if np.any(p < 0.0) or np.any(p > 1.0 + TOL) or abs(p.sum() - 1.0) > TOL:
            raise SimplexError(f"not a distribution: {p.tolist()}")
        object.__setattr__(self, "probs", p)

    @property
    def K(self) -> int:
        return self.probs.size

    def __eq__(self, other):
        return isinstance(other, Categorical) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"Categorical({self.probs.tolist()})"


def validate_simplex(v, tol: float = TOL) -> Categorical:
    """Return ``v`` as a :class:`Categorical`, renormalizing small drift.

    Entries that are negative by at most ``tol`` are clipped to zero; a sum
    within ``tol`` of one is renormalized. Anything further off raises
    :class:`SimplexError`.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise SimplexError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise SimplexError("not a distribution: non-finite entries")
    if np.any(v < -tol):
        raise SimplexError(f"not a distribution: negative entries in {v.tolist()}")
    total = v.sum()
    if abs(total - 1.0) > tol:
        raise SimplexError(f"not a distribution: entries sum to {total!r}")
    v = np.clip(v, 0.0, None)
    return Categorical(v / v.sum())


@dataclass(frozen=True, eq=False)
class SecondOrderEnsemble:
    """Finite second-order distribution: ``M`` weighted categoricals.

    ``members`` is stored as an ``(M, K)`` array; ``weights`` defaults to
    uniform ``1/M``.
    """

    members: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        m = self.members
        if isinstance(m, (list, tuple)) and m and isinstance(m[0], Categorical):
            m = np.stack([c.probs for c in m])
        m = _frozen(m)
        if m.ndim != 2 or m.shape[0] < 1:
            raise SimplexError(f"members must be an (M, K) array with M >= 1, got shape {m.shape}")
        for row in m:
            Categorical(row)
        if self.weights is None:
            w = uniform_weights(m.shape[0])
        else:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (m.shape[0],):
                raise SimplexError(f"expected {m.shape[0]} weights, got shape {w.shape}")
            if np.any(w < 0.0) or abs(w.sum() - 1.0) > TOL:
                raise SimplexError(f"weights are not a distribution: {w.tolist()}")
            w = w / w.sum()
        object.__setattr__(self, "members", m)
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def point_mass(cls, theta) -> SecondOrderEnsemble:
        probs = theta.probs if isinstance(theta, Categorical) else theta
        return cls(np.asarray(probs, dtype=np.float64)[None, :])

    @property
    def M(self) -> int:
        return self.members.shape[0]

    @property
    def K(self) -> int:
        return self.members.shape[1]

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    def __len__(self):
        return self.M

    def __eq__(self, other):
        return (
            isinstance(other, SecondOrderEnsemble)
            and np.array_equal(self.members, other.members)
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self):
        return f"SecondOrderEnsemble(M={self.M}, K={self.K})"


def model_average(Q: SecondOrderEnsemble) -> Categorical:
    """Bayesian model average: the weighted mean of the ensemble members."""
    return Categorical(mean_members(Q.members, Q.weights))


def uniform_weights(M: int) -> np.ndarray:
    return np.full(M, 1.0 / M)


def mean_members(members: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Model average over the member axis of an ``(..., M, K)`` array.

    ``weights`` has shape ``(M,)`` or ``(..., M)``.
    """
    return np.einsum("...m,...mk->...k", weights, members)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with 0-based integer labels."""

    features: np.ndarray
    labels: np.ndarray
    K: int
    source: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but labels of shape {y.shape}")
        if y.size and (not np.issubdtype(y.dtype, np.integer)):
            raise ValueError("labels must be integers")
        y = y.astype(np.int64)
        if self.K < 1 or (y.size and (y.min() < 0 or y.max() >= self.K)):
            raise ValueError(f"labels must lie in 0..{self.K - 1}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def N(self) -> int:
        return self.features.shape[0]

    @property
    def D(self) -> int:
        return self.features.shape[1]

    def __len__(self):
        return self.N

    def subset(self, idx) -> Dataset:
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.K, self.source, dict(self.meta))

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and self.K == other.K
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )
