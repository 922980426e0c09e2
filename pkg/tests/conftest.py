"""Shared fixtures and independent oracles for the test suite.

The kron-chain realizer below is deliberately written as the obvious
textbook tensor product so it stays independent of the package's fast
bit-mask realization path.
"""

from functools import reduce

import numpy as np
import pytest

from weakgadgets.pauli import PauliSum

PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_realize(s: PauliSum) -> np.ndarray:
    """Oracle realization: explicit kron chain, qubit 0 in the lowest bit."""
    dim = 2**s.n_qubits
    total = np.zeros((dim, dim), dtype=complex)
    for t in s.terms:
        ops = ["I"] * s.n_qubits
        for q, p in t.factors:
            ops[q] = p
        if s.n_qubits == 0:
            total += t.coeff * np.eye(1)
            continue
        mats = [PAULI_MATS[ops[q]] for q in reversed(range(s.n_qubits))]
        total += t.coeff * reduce(np.kron, mats)
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def count_subdiagonal_monotone_paths(k: int) -> int:
    """Oracle: up/right paths across a k x k square staying weakly below the
    diagonal (counts them by dynamic programming, no closed form)."""
    dp = [[0] * (k + 1) for _ in range(k + 1)]
    dp[0][0] = 1
    for x in range(k + 1):
        for y in range(min(x, k) + 1):
            if x > 0 and y <= x - 1:
                dp[x][y] += dp[x - 1][y]
            if y > 0:
                dp[x][y] += dp[x][y - 1]
    return dp[k][k]


def count_up_down_flat_paths(n: int) -> int:
    """Oracle: {+1,-1,0} step sequences of length n with nonnegative partial
    sums returning to zero."""
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def f(steps, height):
        if height < 0:
            return 0
        if steps == 0:
            return 1 if height == 0 else 0
        return f(steps - 1, height + 1) + f(steps - 1, height) + f(steps - 1, height - 1)

    return f(n, 0)


def random_pauli_sum(rng, n_qubits, n_terms, coeff_scale=2.0) -> PauliSum:
    from weakgadgets.pauli import PauliTerm

    terms = []
    for _ in range(n_terms):
        weight = int(rng.integers(0, min(3, n_qubits) + 1))
        qubits = rng.choice(n_qubits, size=weight, replace=False) if weight else []
        factors = tuple(
            (int(q), str(rng.choice(["X", "Y", "Z"]))) for q in qubits
        )
        coeff = float(rng.uniform(-coeff_scale, coeff_scale))
        terms.append(PauliTerm(coeff, factors))
    return PauliSum(n_qubits, tuple(terms))
