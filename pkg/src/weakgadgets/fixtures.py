"""Reference fixtures and randomized instance generators.

The classical ferromagnetic doubler is the warm-up construction: two ancilla
spins mediate a double-strength ZZ coupling, with the a != b states exactly
4J above the degenerate aligned ground pair.  The randomized generators
produce small desk-scale gadgets for property and acceptance tests.
"""

from __future__ import annotations

import numpy as np

from .gadget2 import GadgetHamiltonian, SUBSPACE_FACTOR, build_gadget, desk_plan
from .model import CoupledTerm, TargetHamiltonian
from .pauli import PauliSum, shift, term

_PAULIS = ("X", "Y", "Z")


def ferromagnetic_doubler(J: float = 1.0) -> PauliSum:
    """Four classical spins (targets a=0, b=1; ancillas x=2, y=3) with
    ferromagnetic edges a-x, x-b, a-y, y-b of strength J."""
    edges = [(0, 2), (2, 1), (0, 3), (3, 1)]
    return PauliSum(
        4, tuple(term(-J, [(u, "Z"), (v, "Z")]) for u, v in edges)
    )


def random_target(
    rng: np.random.Generator,
    n_qubits: int,
    m_terms: int,
    gamma_max: float = 1.0,
    with_h_else: bool = False,
) -> TargetHamiltonian:
    """Random 2-local target; h_else, when requested, is a PSD field mixture."""
    coupled = []
    for _ in range(m_terms):
        qa, qb = rng.choice(n_qubits, size=2, replace=False)
        pa, pb = rng.choice(_PAULIS), rng.choice(_PAULIS)
        gamma = float(rng.uniform(0.2, gamma_max)) * (1 if rng.random() < 0.5 else -1)
        coupled.append(CoupledTerm(gamma, ((int(qa), str(pa)), (int(qb), str(pb)))))
    h_terms = []
    if with_h_else:
        for q in range(n_qubits):
            c = float(rng.uniform(0.0, 0.4))
            if c > 0.05:
                # c/2 (I - Z_q): a PSD local penalty
                h_terms.extend([shift(c / 2), term(-c / 2, [(q, "Z")])])
    return TargetHamiltonian(n_qubits, tuple(coupled), PauliSum(n_qubits, tuple(h_terms)))


def random_admissible_pair(
    rng: np.random.Generator,
    m_max: int = 2,
    r_max: int = 3,
    c_max: int = 3,
    qubit_cap: int = 14,
    with_h_else: bool = False,
    admissible: bool = True,
):
    """Random desk-scale (target, 2-body gadget) pair; ``admissible``
    enforces the subspace-condition hypothesis Delta >= 160 M gamma_max."""
    for _ in range(200):
        m = int(rng.integers(1, m_max + 1))
        r = int(rng.integers(1, r_max + 1))
        c = int(rng.integers(1, c_max + 1))
        n_t = int(rng.integers(2, 4))
        if n_t + m * r + c > qubit_cap:
            continue
        target = random_target(rng, n_t, m, with_h_else=with_h_else)
        if admissible:
            delta = SUBSPACE_FACTOR * m * target.gamma_max * float(rng.uniform(1.0, 2.5))
        else:
            delta = float(rng.uniform(5.0, 50.0))
        plan = desk_plan(target, R=r, C=c, J=delta / c)
        return target, build_gadget(target, plan)
    raise RuntimeError("could not sample a gadget within the qubit cap")


def random_admissible_gadget(
    rng: np.random.Generator,
    m_max: int = 2,
    r_max: int = 3,
    c_max: int = 3,
    qubit_cap: int = 14,
    with_h_else: bool = False,
    admissible: bool = True,
) -> GadgetHamiltonian:
    return random_admissible_pair(
        rng, m_max, r_max, c_max, qubit_cap, with_h_else, admissible
    )[1]
