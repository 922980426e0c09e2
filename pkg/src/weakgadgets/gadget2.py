"""The weak-interaction 2-body gadget: shared core, direct ancillas, parameters.

Construction summary (all couplings 2-local):

* A *core* of ``C`` ancillas carries ``(J/2)(I - Z_c)`` fields and
  ``(J/2)(I - Z_c Z_c')`` ferromagnetic pair couplings over unordered pairs.
  A core state of Hamming weight ``a`` has energy ``J*a*(C-a+1)``; the
  spectral gap is ``Delta = J*C`` supplied by many weak terms.
* Each target term ``gamma_j A (x) B`` gets ``R`` *direct* ancillas
  ``w_i^(j)``, each coupled ferromagnetically to every core qubit, so a
  single flipped direct ancilla also costs exactly ``Delta``.
* The perturbation couples targets to direct ancillas with strength
  ``beta_j = sqrt(|gamma_j| * Delta / (2R))`` through
  ``beta_j (A - sgn(gamma_j) B) (x) X_w``, plus the untouched ``h_else``.

At second order the self-energy then reproduces
``sum_j (gamma_j A(x)B - |gamma_j| I)``, which is the target up to the
analytic shift ``known_shift = -sum_j |gamma_j|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import pauli
from .errors import MalformedInputError, ResourceLimitError, WrongBuilderError
from .model import TargetHamiltonian
from .pauli import PauliSum, PauliTerm, shift, term

#: Subspace-condition hypothesis: Delta >= SUBSPACE_FACTOR * M * gamma_max.
SUBSPACE_FACTOR = 160.0

DEFAULT_SAFETY = (10.0, 10.0)


@dataclass(frozen=True)
class GadgetPlan:
    """All parameters of one 2-body gadget build.

    ``Delta == J * C`` holds exactly; ``betas[j]`` is the coupling strength
    for target term ``j``.  ``mode`` records whether the parameters came from
    the asymptotic selection rules or were supplied directly ("desk").
    """

    R: int
    C: int
    J: float
    Delta: float
    d: float
    epsilon: float
    betas: tuple[float, ...]
    mode: str
    safety: tuple[float, float] = DEFAULT_SAFETY
    subspace_ok: bool = True

    def __post_init__(self):
        if self.R < 1 or self.C < 1:
            raise MalformedInputError("R and C must be at least 1")
        if not (self.J > 0):
            raise MalformedInputError("J must be positive")
        if self.Delta != self.J * self.C:
            raise MalformedInputError("plan violates Delta = J*C")
        if self.mode not in ("asymptotic", "desk"):
            raise MalformedInputError(f"unknown plan mode {self.mode!r}")

    @property
    def beta_max(self) -> float:
        return max(self.betas, default=0.0)

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "C": self.C,
            "J": self.J,
            "Delta": self.Delta,
            "d": self.d,
            "epsilon": self.epsilon,
            "betas": list(self.betas),
            "mode": self.mode,
            "safety": list(self.safety),
            "subspace_ok": self.subspace_ok,
        }


@dataclass(frozen=True)
class GadgetHamiltonian:
    """A built gadget, split into unperturbed ``H`` and perturbation ``V``.

    ``H`` acts only on ancilla qubits and is diagonal (Z/ZZ terms); ``V``
    couples targets to direct ancillas and carries ``h_else``.  The qubit
    layout is deterministic: targets first, then direct ancillas grouped by
    term, then the core; roles record it.  ``known_shift`` is the analytic
    second-order shift; subtracting it aligns the low gadget spectrum with
    the target spectrum.
    """

    n_total: int
    n_target: int
    H: PauliSum
    V: PauliSum
    roles: tuple[str, ...]
    plan: GadgetPlan | None
    known_shift: float
    psd_shift: float = 0.0
    kind: str = "2body"
    experimental: bool = False
    provenance: dict | None = None

    def total(self) -> PauliSum:
        return self.H + self.V

    def to_dict(self) -> dict:
        out = {
            "n_total": self.n_total,
            "n_target": self.n_target,
            "roles": list(self.roles),
            "H": pauli.sum_to_dict(self.H),
            "V": pauli.sum_to_dict(self.V),
            "plan": self.plan.to_dict() if self.plan else None,
            "known_shift": self.known_shift,
            "psd_shift": self.psd_shift,
            "kind": self.kind,
        }
        if self.experimental:
            out["experimental"] = True
        if self.provenance is not None:
            out["provenance"] = self.provenance
        return out


def gadget_from_dict(d: dict, where: str = "gadget") -> GadgetHamiltonian:
    try:
        plan = d.get("plan")
        plan_obj = None
        if plan is not None:
            plan_obj = GadgetPlan(
                R=int(plan["R"]),
                C=int(plan["C"]),
                J=float(plan["J"]),
                Delta=float(plan["Delta"]),
                d=float(plan["d"]),
                epsilon=float(plan["epsilon"]),
                betas=tuple(float(b) for b in plan["betas"]),
                mode=str(plan["mode"]),
                safety=tuple(plan.get("safety", DEFAULT_SAFETY)),
                subspace_ok=bool(plan.get("subspace_ok", True)),
            )
        return GadgetHamiltonian(
            n_total=int(d["n_total"]),
            n_target=int(d["n_target"]),
            H=pauli.sum_from_dict(d["H"], where=f"{where}.H"),
            V=pauli.sum_from_dict(d["V"], where=f"{where}.V"),
            roles=tuple(str(r) for r in d["roles"]),
            plan=plan_obj,
            known_shift=float(d["known_shift"]),
            psd_shift=float(d.get("psd_shift", 0.0)),
            kind=str(d.get("kind", "2body")),
            experimental=bool(d.get("experimental", False)),
            provenance=d.get("provenance"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInputError(f"{where}: {exc}") from None


# ---------------------------------------------------------------------------
# core
# ---------------------------------------------------------------------------


def build_core(C: int, J: float) -> PauliSum:
    """Core Hamiltonian on qubits ``0..C-1``.

    ``H_C = (J/2) sum_c (I - Z_c) + (J/2) sum_{c<c'} (I - Z_c Z_c')``; the
    ground state is all-zero at energy 0 and a Hamming-weight-``a`` state has
    energy ``J*a*(C-a+1)``, hence gap ``J*C``.
    """
    if C < 1:
        raise MalformedInputError(f"core size must be at least 1, got {C}")
    if not (J > 0):
        raise MalformedInputError(f"core coupling must be positive, got {J}")
    terms = [shift(J / 2 * (C + C * (C - 1) / 2))]
    terms.extend(term(-J / 2, [(c, "Z")]) for c in range(C))
    terms.extend(
        term(-J / 2, [(c, "Z"), (cp, "Z")]) for c in range(C) for cp in range(c + 1, C)
    )
    return pauli.canonicalize(PauliSum(C, tuple(terms)))


def core_level(C: int, J: float, a: int) -> float:
    """Closed-form core energy of a Hamming-weight-``a`` state."""
    return J * a * (C - a + 1)


# ---------------------------------------------------------------------------
# parameter selection
# ---------------------------------------------------------------------------


def _betas_for(target: TargetHamiltonian, Delta: float, R: int) -> tuple[float, ...]:
    return tuple(
        math.sqrt(abs(ct.gamma) * Delta / (2 * R)) for ct in target.coupled_terms
    )


def desk_plan(
    target: TargetHamiltonian,
    R: int,
    C: int,
    J: float,
    epsilon: float = 0.1,
    d: float = 0.5,
) -> GadgetPlan:
    """Plan from user-supplied (R, C, J); structural invariants preserved.

    Desk mode exists because the asymptotic ancilla counts are far beyond
    exact diagonalization; the subspace hypothesis ``Delta >= 160 M gamma_max``
    is flagged, not enforced.
    """
    Delta = J * C
    return GadgetPlan(
        R=R,
        C=C,
        J=J,
        Delta=Delta,
        d=d,
        epsilon=epsilon,
        betas=_betas_for(target, Delta, R),
        mode="desk",
        subspace_ok=Delta >= SUBSPACE_FACTOR * target.m_terms * target.gamma_max,
    )


def plan_parameters(
    target: TargetHamiltonian,
    epsilon: float,
    d: float = 0.5,
    safety: tuple[float, float] = DEFAULT_SAFETY,
    qubit_cap: int = pauli.SPARSE_QUBIT_CEILING,
) -> GadgetPlan:
    """Asymptotic-mode parameter selection.

    Sets ``Delta = M^3 R^d`` with ``R`` at least ``c_R`` times the largest of
    the three selection rules and ``C`` at least ``c_C * M^3 R^d / epsilon``,
    so that ``beta_j`` and ``J`` come out ``O(epsilon)``.  Raises a resource
    error carrying the ancilla estimate when the result exceeds desk scale.
    """
    if not (0 < d < 1):
        raise MalformedInputError(f"d must lie in (0, 1), got {d}")
    if not (epsilon > 0):
        raise MalformedInputError(f"epsilon must be positive, got {epsilon}")
    if target.m_terms == 0:
        raise MalformedInputError("cannot plan for a target with no coupled terms")
    c_r, c_c = safety
    if c_r < 1 or c_c < 1:
        raise MalformedInputError("safety factors must be >= 1")
    M = target.m_terms
    gamma_max = target.gamma_max
    from .model import validate  # norm of h_else enters the R rule

    h_else_norm = validate(target).h_else_norm
    r_rules = [
        epsilon ** (-2.0 / d),
        (h_else_norm**2 / (2 * M**4 * gamma_max)) ** (1.0 / d),
        (M**3 * epsilon**-2) ** (1.0 / (1.0 - d)),
        # the subspace hypothesis folds into the same form
        (SUBSPACE_FACTOR * gamma_max / M**2) ** (1.0 / d),
    ]
    R = math.ceil(c_r * max(r_rules))
    Delta_raw = M**3 * R**d
    C = math.ceil(c_c * Delta_raw / epsilon)
    J = Delta_raw / C
    Delta = J * C  # re-multiplied so Delta == J*C holds exactly in floats
    n_total = target.n_qubits + M * R + C
    if n_total > qubit_cap:
        raise ResourceLimitError(
            f"asymptotic plan needs n + M*R + C = {target.n_qubits} + {M}*{R} + {C} "
            f"= {n_total} qubits, beyond the desk cap of {qubit_cap}; use desk mode"
        )
    return GadgetPlan(
        R=R,
        C=C,
        J=J,
        Delta=Delta,
        d=d,
        epsilon=epsilon,
        betas=_betas_for(target, Delta, R),
        mode="asymptotic",
        safety=(c_r, c_c),
        subspace_ok=Delta >= SUBSPACE_FACTOR * M * gamma_max,
    )


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _sgn(x: float) -> float:
    return -1.0 if x < 0 else 1.0


def build_gadget(target: TargetHamiltonian, plan: GadgetPlan) -> GadgetHamiltonian:
    """Assemble the parallel 2-body gadget for a 2-local target.

    Layout: target qubits ``0..n-1``, then ``M*R`` direct ancillas grouped by
    term (``w_i^(j)`` at ``n + j*R + i``), then ``C`` core qubits.  Terms with
    ``gamma_j = 0`` must be dropped before planning.
    """
    if target.max_locality() > 2:
        raise WrongBuilderError(
            "target contains 3-local terms; use the serial 3-body builder"
        )
    if any(ct.gamma == 0.0 for ct in target.coupled_terms):
        raise MalformedInputError("drop gamma = 0 terms before building")
    M = target.m_terms
    if len(plan.betas) != M:
        raise MalformedInputError(
            f"plan was made for {len(plan.betas)} terms, target has {M}"
        )
    n = target.n_qubits
    R, C, J = plan.R, plan.C, plan.J
    n_total = n + M * R + C
    if n_total > pauli.SPARSE_QUBIT_CEILING:
        raise ResourceLimitError(
            f"gadget needs {n_total} qubits, beyond the cap of {pauli.SPARSE_QUBIT_CEILING}"
        )

    def w_index(j: int, i: int) -> int:
        return n + j * R + i

    def c_index(c: int) -> int:
        return n + M * R + c

    roles = (
        ["target"] * n
        + [f"direct({j},{i})" for j in range(M) for i in range(R)]
        + [f"core({c})" for c in range(C)]
    )

    h_terms: list[PauliTerm] = [shift(J / 2 * (M * R * C + C + C * (C - 1) / 2))]
    for j in range(M):
        for i in range(R):
            for c in range(C):
                h_terms.append(term(-J / 2, [(w_index(j, i), "Z"), (c_index(c), "Z")]))
    h_terms.extend(term(-J / 2, [(c_index(c), "Z")]) for c in range(C))
    h_terms.extend(
        term(-J / 2, [(c_index(c), "Z"), (c_index(cp), "Z")])
        for c in range(C)
        for cp in range(c + 1, C)
    )
    H = pauli.canonicalize(PauliSum(n_total, tuple(h_terms)))

    v_terms: list[PauliTerm] = [
        PauliTerm(t.coeff, t.factors) for t in target.h_else.terms
    ]
    for j, ct in enumerate(target.coupled_terms):
        beta = plan.betas[j]
        (qa, pa), (qb, pb) = ct.site_a, ct.site_b
        sgn = _sgn(ct.gamma)
        for i in range(R):
            w = w_index(j, i)
            v_terms.append(term(beta, [(qa, pa), (w, "X")]))
            v_terms.append(term(-sgn * beta, [(qb, pb), (w, "X")]))
    V = pauli.canonicalize(PauliSum(n_total, tuple(v_terms)))

    known_shift = -sum(abs(ct.gamma) for ct in target.coupled_terms)
    return GadgetHamiltonian(
        n_total=n_total,
        n_target=n,
        H=H,
        V=V,
        roles=tuple(roles),
        plan=plan,
        known_shift=known_shift,
        kind="2body",
    )


def trivial_gadget(target: TargetHamiltonian) -> GadgetHamiltonian:
    """Wrap a target as a gadget with no ancillas (H = 0, V = target)."""
    n = target.n_qubits
    return GadgetHamiltonian(
        n_total=n,
        n_target=n,
        H=PauliSum(n),
        V=pauli.canonicalize(target.total_sum()),
        roles=("target",) * n,
        plan=None,
        known_shift=0.0,
        kind="trivial",
    )


def ground_gap_of_H(g: GadgetHamiltonian) -> tuple[float, float]:
    """Exact two lowest distinct eigenvalues of the diagonal unperturbed part.

    For every plan the all-zero ancilla state is annihilated term by term,
    so E0 = 0 exactly and the gap equals J*C.
    """
    diag = h_diagonal(g)
    values = np.unique(diag)
    e0 = float(values[0])
    if values.size == 1:
        return e0, 0.0
    return e0, float(values[1] - values[0])


def h_diagonal(g: GadgetHamiltonian) -> np.ndarray:
    """Diagonal of the unperturbed part; requires H to be Z-type (it always is)."""
    for t in g.H.terms:
        if any(p != "Z" for _, p in t.factors):
            raise MalformedInputError("unperturbed part is not diagonal")
    mat = pauli.to_sparse_operator(g.H)
    return np.real(mat.diagonal())
