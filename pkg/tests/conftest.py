from __future__ import annotations

import sys

import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from taskuq.core import SecondOrderEnsemble


@st.composite
def simplex(draw, K=None, min_k=2, max_k=6):
    """Probability vector; includes exact vertices and zero entries."""
    K = K if K is not None else draw(st.integers(min_k, max_k))
    raw = draw(arrays(np.float64, K, elements=st.floats(0.0, 1.0)))
    raw = np.where(raw < 0.05, 0.0, raw)
    if raw.sum() == 0:
        raw[draw(st.integers(0, K - 1))] = 1.0
    return raw / raw.sum()


@st.composite
def ensembles(draw, K=None, max_m=6, weighted=None):
    K = K if K is not None else draw(st.integers(2, 6))
    M = draw(st.integers(1, max_m))
    members = np.stack([draw(simplex(K)) for _ in range(M)])
    use_w = draw(st.booleans()) if weighted is None else weighted
    weights = None
    if use_w:
        weights = draw(simplex(M)) if M > 1 else np.ones(1)
    return SecondOrderEnsemble(members, weights)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
