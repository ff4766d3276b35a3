from __future__ import annotations

import random
import re
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from peer_astab.cli import load_document, parse_method
from peer_astab.linalg import as_exact


def load_builtin(name: str):
    return parse_method(load_document(f"builtin:{name}"))


@pytest.fixture(scope="session")
def peer3():
    return load_builtin("peer3_parallel")


@pytest.fixture(scope="session")
def peer3_original():
    return load_builtin("peer3_parallel_original")


@pytest.fixture(scope="session")
def peer4():
    return load_builtin("peer4_parallel")


@pytest.fixture(scope="session")
def peer4_original():
    return load_builtin("peer4_parallel_original")


@pytest.fixture(scope="session")
def sdirk3():
    return load_builtin("sdirk3_sqrt65")


def F(x) -> Fraction:
    return Fraction(x)


def mat(rows) -> np.ndarray:
    """Exact matrix from ints / strings / Fractions."""
    return as_exact([[Fraction(x) for x in r] for r in rows])


# --------------------------------------------------------------------------
# generators shared by property tests and the acceptance suite


def rand_fraction(rng: random.Random, num: int = 9, den: int = 4) -> Fraction:
    return Fraction(rng.randint(-num, num), rng.randint(1, den))


def rand_nodes(rng: random.Random, s: int) -> list[Fraction]:
    out: list[Fraction] = []
    while len(out) < s:
        c = rand_fraction(rng)
        if c not in out:
            out.append(c)
    return out


def rand_symmetric(rng: random.Random, s: int, num: int = 5) -> np.ndarray:
    X = np.empty((s, s), dtype=object)
    for i in range(s):
        for j in range(i, s):
            X[i, j] = X[j, i] = rand_fraction(rng, num, 3)
    return X


def rand_pd(rng: random.Random, s: int) -> np.ndarray:
    """``L L^T + I`` with a random lower triangular rational ``L``."""
    L = np.empty((s, s), dtype=object)
    for i in range(s):
        for j in range(s):
            L[i, j] = Fraction(rng.randint(-3, 3)) if j <= i else Fraction(0)
    return L @ L.T + as_exact(np.eye(s, dtype=int).tolist())


def rand_unimodular_ish(rng: random.Random, s: int) -> np.ndarray:
    """Random nonsingular rational matrix (unit upper times unit lower, plus scaling)."""
    U = np.empty((s, s), dtype=object)
    L = np.empty((s, s), dtype=object)
    for i in range(s):
        for j in range(s):
            U[i, j] = rand_fraction(rng, 3, 2) if j > i else Fraction(int(i == j) * rng.choice([1, 2, -1]))
            L[i, j] = rand_fraction(rng, 3, 2) if j < i else Fraction(int(i == j))
    return U @ L


small_fractions = st.builds(Fraction, st.integers(-40, 40), st.integers(1, 12))
nonzero_fractions = small_fractions.filter(lambda x: x != 0)


@st.composite
def symmetric_matrices(draw, s: int | None = None):
    n = draw(st.integers(1, 5)) if s is None else s
    vals = draw(st.lists(small_fractions, min_size=n * (n + 1) // 2, max_size=n * (n + 1) // 2))
    X = np.empty((n, n), dtype=object)
    k = 0
    for i in range(n):
        for j in range(i, n):
            X[i, j] = X[j, i] = vals[k]
            k += 1
    return X


@st.composite
def node_sets(draw, min_s: int = 1, max_s: int = 5):
    s = draw(st.integers(min_s, max_s))
    return draw(st.lists(small_fractions, min_size=s, max_size=s, unique=True))


# --------------------------------------------------------------------------
# one summary line per acceptance criterion

_CRIT = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter):
    outcome: dict[int, bool] = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            m = _CRIT.search(getattr(rep, "nodeid", ""))
            if not m or getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            n = int(m.group(1))
            ok = key == "passed"
            outcome[n] = outcome.get(n, True) and ok
    if not outcome:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcome):
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if outcome[n] else 'FAIL'}")
