"""Synthetic Gaussian-mixture classification data, covariate-shifted OoD
samples, CSV ingestion and seeded train/test splits.

All randomness comes from :func:`taskuq.core.rng` (Philox-4x64), so every
generator is a pure function of its arguments.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dataset, rng


class DataError(ValueError):
    """Malformed input data (bad CSV cell, missing column, empty file)."""


@dataclass(frozen=True, eq=False)
class MixtureSpec:
    """One axis-aligned Gaussian per class plus symmetric label noise.

    With probability ``label_flip`` an observed label is replaced by a
    uniformly drawn *other* class.
    """

    means: np.ndarray  # (K, D)
    scales: np.ndarray  # (K, D) per-axis standard deviations
    class_priors: np.ndarray | None = None
    label_flip: float = 0.0

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64)
        scales = np.array(self.scales, dtype=np.float64)
        if scales.ndim == 0:
            scales = np.full_like(means, float(scales))
        if means.ndim != 2 or means.shape[0] < 2:
            raise ValueError(f"means must be (K, D) with K >= 2, got shape {means.shape}")
        if scales.shape != means.shape:
            raise ValueError(f"scales shape {scales.shape} != means shape {means.shape}")
        if np.any(scales <= 0) or not np.all(np.isfinite(scales)) or not np.all(np.isfinite(means)):
            raise ValueError("scales must be positive and all parameters finite")
        K = means.shape[0]
        if self.class_priors is None:
            priors = np.full(K, 1.0 / K)
        else:
            priors = np.array(self.class_priors, dtype=np.float64)
            if priors.shape != (K,) or np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-9:
                raise ValueError(f"class_priors must be a distribution over {K} classes")
            priors = priors / priors.sum()
        if not 0.0 <= self.label_flip < 1.0:
            raise ValueError(f"label_flip must lie in [0, 1), got {self.label_flip}")
        for name, arr in (("means", means), ("scales", scales), ("class_priors", priors)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "label_flip", float(self.label_flip))

    @property
    def K(self) -> int:
        return self.means.shape[0]

    @property
    def D(self) -> int:
        return self.means.shape[1]

    def with_flip(self, label_flip: float) -> MixtureSpec:
        return MixtureSpec(self.means, self.scales, self.class_priors, label_flip)

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "scales": self.scales.tolist(),
            "class_priors": self.class_priors.tolist(),
            "label_flip": self.label_flip,
        }

    @classmethod
    def from_dict(cls, d: dict) -> MixtureSpec:
        unknown = set(d) - {"means", "scales", "class_priors", "label_flip"}
        if unknown:
            raise ValueError(f"unknown mixture spec keys: {sorted(unknown)}")
        if "means" not in d or "scales" not in d:
            raise ValueError("mixture spec needs 'means' and 'scales'")
        return cls(d["means"], d["scales"], d.get("class_priors"), d.get("label_flip", 0.0))


def _sample(spec: MixtureSpec, n: int, seed: int, offset: np.ndarray, source: str) -> Dataset:
    if n < 1:
        raise ValueError("n must be >= 1")
    g = rng(seed)
    y = g.choice(spec.K, size=n, p=spec.class_priors)
    z = g.standard_normal((n, spec.D))
    flip = g.random(n) < spec.label_flip
    other = g.integers(1, spec.K, size=n)
    X = (spec.means[y] + offset) + spec.scales[y] * z
    y_obs = np.where(flip, (y + other) % spec.K, y)
    return Dataset(X, y_obs, spec.K, source, {"clean_labels": y})


def gen_mixture(spec: MixtureSpec, n: int, seed: int) -> Dataset:
    return _sample(spec, n, seed, np.zeros(spec.D), f"mixture(n={n}, seed={seed})")


def gen_ood_shift(spec: MixtureSpec, shift: float, n: int, seed: int) -> Dataset:
    """Mixture sample with every class mean moved along the first axis by
    ``shift`` times the average per-axis scale."""
    if not shift >= 0:
        raise ValueError(f"shift must be >= 0, got {shift}")
    offset = np.zeros(spec.D)
    offset[0] = shift * float(spec.scales.mean())
    return _sample(spec, n, seed, offset, f"mixture(n={n}, seed={seed}, shift={shift})")


# Presets used by the experiments and the acceptance suite.


def default_spec(label_flip: float = 0.0) -> MixtureSpec:
    """Four overlapping classes in 4-D with unequal spreads."""
    means = [
        [0.0, 0.0, 0.0, 0.0],
        [2.0, 0.5, 1.0, 0.0],
        [0.5, 2.0, 0.0, 1.0],
        [2.0, 2.0, 1.0, 1.0],
    ]
    scales = [
        [1.0, 1.0, 1.0, 1.0],
        [0.6, 1.2, 0.8, 1.0],
        [1.2, 0.6, 1.0, 0.8],
        [0.8, 0.8, 1.2, 1.2],
    ]
    return MixtureSpec(means, scales, None, label_flip)


def separated_spec(label_flip: float = 0.0, K: int = 2) -> MixtureSpec:
    """Well-separated classes (means 10 standard deviations apart)."""
    means = np.zeros((K, 2))
    means[:, 0] = 10.0 * np.arange(K)
    return MixtureSpec(means, np.ones((K, 2)), None, label_flip)


def rare_region_spec() -> MixtureSpec:
    """Two dominant classes plus rare classes that random sampling seldom
    reaches."""
    means = [
        [0.0, 0.0, 0.0],
        [3.0, 0.0, 0.0],
        [1.5, 2.5, 0.0],
        [1.5, -2.5, 0.0],
    ]
    return MixtureSpec(means, np.ones((4, 3)), [0.44, 0.44, 0.06, 0.06], 0.0)


def split(data: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle; the first ``floor(fraction * N)`` rows train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    perm = rng(seed).permutation(data.N)
    n_train = math.floor(train_fraction * data.N)
    if n_train == 0:
        raise ValueError("empty train split")
    if n_train == data.N:
        raise ValueError("empty test split")
    return data.subset(perm[:n_train]), data.subset(perm[n_train:])


def load_csv(path, label_column: str, delimiter: str = ",") -> Dataset:
    """Read a headed CSV; every non-label column must be numeric.

    Labels are mapped to the index of their string in the sorted list of
    distinct labels. Row numbers in error messages count the header as 1.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataError(f"{path}: missing label column {label_column!r}")
        li = header.index(label_column)
        feat_cols = [i for i in range(len(header)) if i != li]
        rows, labels = [], []
        for r, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {r} has {len(row)} cells, header has {len(header)}")
            vals = []
            for i in feat_cols:
                try:
                    v = float(row[i])
                except ValueError:
                    raise DataError(f"{path}: row {r}, column {header[i]!r}: non-numeric value {row[i]!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: row {r}, column {header[i]!r}: non-finite value {row[i]!r}")
                vals.append(v)
            rows.append(vals)
            labels.append(row[li].strip())
    if not rows:
        raise DataError(f"{path}: no data rows")
    classes = sorted(set(labels))
    index = {c: k for k, c in enumerate(classes)}
    y = np.array([index[c] for c in labels], dtype=np.int64)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(feat_cols))
    return Dataset(X, y, len(classes), str(path), {"classes": classes, "columns": [header[i] for i in feat_cols]})
