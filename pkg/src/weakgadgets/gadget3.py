"""3-local reductions: serial composition, amplification, and the direct
3-local demonstrator.

Serial route (two stages).  Stage 1 is the classic mediator reduction: each
3-local term ``gamma A(x)B(x)F`` gets one mediator ancilla ``w`` in a field
``Delta1 |1><1|_w``, couplings ``beta1 (A + sgn B)(x)X_w`` and
``xi1 F(x)|1><1|_w`` with ``beta1 = xi1 = (|gamma| Delta1^2 / 2)^(1/3)``, and
a compensation term on ``(a, b)`` of order ``Delta1^(1/3)``.  The exact
compensation coefficients are calibrated numerically from the measured
second- and third-order series terms of a four-qubit probe, so the stage-1
effective Hamiltonian is ``gamma A(x)B(x)F`` with no residual shift.  Stage
2 replaces the strong mediator field with a dedicated core (coupling
``J1 = Delta1/C1``) and every strong 2-local coupling with a weak 2-body
gadget against a second shared core, via ``split_strong_terms`` and
``build_gadget``.

Amplification realizes ``theta * h`` by splitting into unit-strength
parallel copies and gadgetizing them against one shared core.

The direct (single-stage) 3-local construction couples three direct-ancilla
families per term (q, w, y) to one core; the desired term appears at third
order with coefficient ``2 R beta^2 xi / Delta^2`` and the unwanted 2- and
1-local by-products cancel for ``xi = beta = (|gamma| Delta^2/2R)^(1/3)``,
``kappa = sqrt(|gamma| Delta / 2R)``.  It is marked experimental: holding
the effective strength fixed while growing the gap forces ``beta`` to grow,
so the couplings cannot all stay weak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import pauli
from .errors import MalformedInputError, ResourceLimitError, WrongBuilderError
from .gadget2 import (
    GadgetHamiltonian,
    GadgetPlan,
    build_gadget,
    desk_plan,
)
from .model import CoupledTerm, TargetHamiltonian, split_strong_terms
from .pauli import PauliSum, PauliTerm, shift, term

CALIBRATION_TOL = 1e-8


def _sgn(x: float) -> float:
    return -1.0 if x < 0 else 1.0


# ---------------------------------------------------------------------------
# stage 1: mediator reduction with calibrated compensation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stage1Calibration:
    gamma: float
    delta1: float
    beta1: float
    xi1: float
    comp_shift: float
    comp_ab: float
    f_correction: float
    abf_coefficient: float
    residual2: float
    residual3: float

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "delta1": self.delta1,
            "beta1": self.beta1,
            "xi1": self.xi1,
            "comp_shift": self.comp_shift,
            "comp_ab": self.comp_ab,
            "f_correction": self.f_correction,
            "abf_coefficient": self.abf_coefficient,
            "residual2": self.residual2,
            "residual3": self.residual3,
        }


def _pauli_coefficient(op: np.ndarray, basis_string: np.ndarray) -> float:
    dim = op.shape[0]
    return float(np.real(np.trace(basis_string.conj().T @ op)) / dim)


def calibrate_stage1(gamma: float, delta1: float) -> Stage1Calibration:
    """Fix the stage-1 compensation coefficients from a 3-qubit probe.

    The probe is the single-term mediator gadget with Z operators standing in
    for A, B, F (the compensation coefficients do not depend on which Paulis
    are used).  The second-order series term is fit against {I, A(x)B} and
    the third-order against {F, A(x)B(x)F}; both fits must close to 1e-8,
    and the measured three-local coefficient is returned for checking
    against gamma.
    """
    from .analysis import self_energy_term  # deferred: analysis imports gadget2

    if gamma == 0.0:
        raise MalformedInputError("cannot calibrate a gamma = 0 term")
    if not delta1 > 0:
        raise MalformedInputError("stage-1 gap must be positive")
    s = _sgn(gamma)
    beta1 = (abs(gamma) * delta1**2 / 2.0) ** (1.0 / 3.0)
    xi1 = beta1
    probe_v = PauliSum(
        4,
        (
            term(beta1, [(0, "Z"), (3, "X")]),
            term(s * beta1, [(1, "Z"), (3, "X")]),
            term(xi1 / 2, [(2, "Z")]),
            term(-xi1 / 2, [(2, "Z"), (3, "Z")]),
        ),
    )
    probe = GadgetHamiltonian(
        n_total=4,
        n_target=3,
        H=PauliSum(4, (shift(delta1 / 2), term(-delta1 / 2, [(3, "Z")]))),
        V=probe_v,
        roles=("target", "target", "target", "mediator(0)"),
        plan=None,
        known_shift=0.0,
        kind="stage1",
    )
    eye = np.eye(8)
    ab = pauli.to_dense_operator(PauliSum(3, (term(1.0, [(0, "Z"), (1, "Z")]),)))
    f_op = pauli.to_dense_operator(PauliSum(3, (term(1.0, [(2, "Z")]),)))
    abf = pauli.to_dense_operator(
        PauliSum(3, (term(1.0, [(0, "Z"), (1, "Z"), (2, "Z")]),))
    )
    t2 = self_energy_term(probe, 2, 0.0).operator
    comp_shift = -_pauli_coefficient(t2, eye)
    comp_ab = -_pauli_coefficient(t2, ab)
    residual2 = float(
        np.linalg.norm(t2 + comp_shift * eye + comp_ab * ab, 2)
    )
    t3 = self_energy_term(probe, 3, 0.0).operator
    c_f = _pauli_coefficient(t3, f_op)
    c_abf = _pauli_coefficient(t3, abf)
    residual3 = float(np.linalg.norm(t3 - c_f * f_op - c_abf * abf, 2))
    if residual2 > CALIBRATION_TOL or residual3 > CALIBRATION_TOL:
        raise MalformedInputError(
            f"stage-1 calibration did not close: residuals {residual2:.2e}, {residual3:.2e}"
        )
    return Stage1Calibration(
        gamma=gamma,
        delta1=delta1,
        beta1=beta1,
        xi1=xi1,
        comp_shift=comp_shift,
        comp_ab=comp_ab,
        f_correction=-c_f,
        abf_coefficient=c_abf,
        residual2=residual2,
        residual3=residual3,
    )


def stage1_intermediate(
    target: TargetHamiltonian, delta1: float
) -> tuple[TargetHamiltonian, list[str], list[Stage1Calibration]]:
    """Translate a 3-local target into the stage-1 output: a 2-local target
    on ``n + M`` qubits (mediator ``w_j`` at index ``n + j``), whose coupled
    terms are the strong stage-1 couplings and whose ``h_else`` carries the
    1-local corrections.  The mediator penalty fields are *not* included;
    the caller realizes them (directly or through a core)."""
    if target.max_locality() != 3 or any(
        ct.locality != 3 for ct in target.coupled_terms
    ):
        raise WrongBuilderError("serial 3-body stage expects only 3-local terms")
    n = target.n_qubits
    m = target.m_terms
    n2 = n + m
    coupled: list[CoupledTerm] = []
    labels: list[str] = []
    h_terms: list[PauliTerm] = [PauliTerm(t.coeff, t.factors) for t in target.h_else.terms]
    calibrations: list[Stage1Calibration] = []
    for j, ct in enumerate(target.coupled_terms):
        w = n + j
        cal = calibrate_stage1(ct.gamma, delta1)
        calibrations.append(cal)
        (qa, pa), (qb, pb), (qf, pf) = ct.sites
        s = _sgn(ct.gamma)
        coupled.append(CoupledTerm(cal.beta1, ((qa, pa), (w, "X"))))
        labels.append(f"term{j}:mediator-coupling-A")
        coupled.append(CoupledTerm(s * cal.beta1, ((qb, pb), (w, "X"))))
        labels.append(f"term{j}:mediator-coupling-B")
        coupled.append(CoupledTerm(-cal.xi1 / 2, ((qf, pf), (w, "Z"))))
        labels.append(f"term{j}:mediator-coupling-F")
        coupled.append(CoupledTerm(cal.comp_ab, ((qa, pa), (qb, pb))))
        labels.append(f"term{j}:compensation-AB")
        h_terms.append(term(cal.xi1 / 2, [(qf, pf)]))
        h_terms.append(term(cal.f_correction, [(qf, pf)]))
        h_terms.append(shift(cal.comp_shift))
    return (
        TargetHamiltonian(n2, tuple(coupled), PauliSum(n2, tuple(h_terms))),
        labels,
        calibrations,
    )


def build_stage1_gadget(target: TargetHamiltonian, delta1: float) -> GadgetHamiltonian:
    """Single-stage mediator gadget (strong fields kept explicit).

    Useful on its own for checking the ``Delta1^(-1/3)`` convergence of the
    mediator reduction before any stage-2 weakening.
    """
    inter, labels, calibrations = stage1_intermediate(target, delta1)
    n = target.n_qubits
    m = target.m_terms
    h_terms = []
    for j in range(m):
        h_terms.append(shift(delta1 / 2))
        h_terms.append(term(-delta1 / 2, [(n + j, "Z")]))
    v_terms = [ct.as_pauli_term() for ct in inter.coupled_terms]
    v_terms.extend(PauliTerm(t.coeff, t.factors) for t in inter.h_else.terms)
    return GadgetHamiltonian(
        n_total=inter.n_qubits,
        n_target=n,
        H=pauli.canonicalize(PauliSum(inter.n_qubits, tuple(h_terms))),
        V=pauli.canonicalize(PauliSum(inter.n_qubits, tuple(v_terms))),
        roles=("target",) * n + tuple(f"mediator({j})" for j in range(m)),
        plan=None,
        known_shift=0.0,
        kind="stage1",
        provenance={
            "stage1": {
                "delta1": delta1,
                "calibrations": [c.to_dict() for c in calibrations],
                "labels": labels,
            }
        },
    )


# ---------------------------------------------------------------------------
# serial composition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SerialPlan:
    """Two-stage schedule: stage-1 gap and core, stage-2 desk-gadget shape.

    ``error_split`` budgets the tolerance between the stages (default an
    even split); it is recorded, and the end-to-end error is what gets
    measured.  ``split_cap`` caps stage-2 input strengths via multi-edge
    splitting; None leaves the strong terms unsplit (desk default).
    """

    delta1: float
    c1: int
    r2: int
    c2: int
    delta2: float
    epsilon: float = 0.1
    error_split: tuple[float, float] | None = None
    split_cap: float | None = None

    def __post_init__(self):
        if self.delta1 <= 0 or self.delta2 <= 0:
            raise MalformedInputError("stage gaps must be positive")
        if self.c1 < 1 or self.c2 < 1 or self.r2 < 1:
            raise MalformedInputError("core sizes and R must be at least 1")
        split = self.error_split or (self.epsilon / 2, self.epsilon / 2)
        if split[0] + split[1] > self.epsilon + 1e-12:
            raise MalformedInputError("error split exceeds the total budget")
        object.__setattr__(self, "error_split", tuple(split))

    def to_dict(self) -> dict:
        return {
            "delta1": self.delta1,
            "c1": self.c1,
            "r2": self.r2,
            "c2": self.c2,
            "delta2": self.delta2,
            "epsilon": self.epsilon,
            "error_split": list(self.error_split),
            "split_cap": self.split_cap,
        }


def build_serial_3body(target: TargetHamiltonian, plan: SerialPlan) -> GadgetHamiltonian:
    """Serial 3-body-to-weak-2-body gadget.

    Stage-1 output terms are split (optionally) and handed to the 2-body
    builder against a fresh core; the mediator penalty fields are then
    replaced by ferromagnetic couplings to a second core with
    ``J1 = Delta1/C1``, appended after the stage-2 layout.  The provenance
    tree maps every stage-2 coupled term back to its stage-1 origin.
    """
    if any(ct.locality == 2 for ct in target.coupled_terms):
        raise WrongBuilderError("2-local terms present; use the 2-body builder")
    n = target.n_qubits
    if target.m_terms == 0:
        return GadgetHamiltonian(
            n_total=n,
            n_target=n,
            H=PauliSum(n),
            V=pauli.canonicalize(target.h_else),
            roles=("target",) * n,
            plan=None,
            known_shift=0.0,
            kind="serial3",
            provenance={"stage1": None, "stage2": None},
        )
    inter, labels, calibrations = stage1_intermediate(target, plan.delta1)
    m = target.m_terms
    if plan.split_cap is not None:
        before = inter.coupled_terms
        inter = split_strong_terms(inter, plan.split_cap)
        expanded: list[str] = []
        for ct, label in zip(before, labels):
            copies = max(1, math.ceil(abs(ct.gamma) / plan.split_cap))
            expanded.extend([label] * copies)
        labels = expanded
    j2 = plan.delta2 / plan.c2
    plan2 = desk_plan(inter, R=plan.r2, C=plan.c2, J=j2, epsilon=plan.error_split[1])
    g2 = build_gadget(inter, plan2)

    # append the stage-1 core and attach every mediator to it
    c1 = plan.c1
    j1 = plan.delta1 / c1
    n_total = g2.n_total + c1
    if n_total > pauli.SPARSE_QUBIT_CEILING:
        raise ResourceLimitError(
            f"serial gadget needs {n_total} qubits, beyond the cap of "
            f"{pauli.SPARSE_QUBIT_CEILING}"
        )
    core1 = [g2.n_total + c for c in range(c1)]
    mediators = [n + j for j in range(m)]
    ident = {q: q for q in range(g2.n_total)}
    h_terms = list(pauli.embed(g2.H, ident, n_total).terms)
    h_terms.append(shift(j1 / 2 * (m * c1 + c1 + c1 * (c1 - 1) / 2)))
    for w in mediators:
        for c in core1:
            h_terms.append(term(-j1 / 2, [(w, "Z"), (c, "Z")]))
    h_terms.extend(term(-j1 / 2, [(c, "Z")]) for c in core1)
    h_terms.extend(
        term(-j1 / 2, [(ca, "Z"), (cb, "Z")])
        for i, ca in enumerate(core1)
        for cb in core1[i + 1 :]
    )
    roles = (
        ("target",) * n
        + tuple(f"mediator({j})" for j in range(m))
        + tuple(r.replace("core(", "core2(") for r in g2.roles[n + m :])
        + tuple(f"core1({c})" for c in range(c1))
    )
    provenance = {
        "stage1": {
            "delta1": plan.delta1,
            "c1": c1,
            "j1": j1,
            "calibrations": [c.to_dict() for c in calibrations],
        },
        "stage2": {
            "delta2": plan.delta2,
            "r2": plan.r2,
            "c2": plan.c2,
            "j2": j2,
            "terms": [
                {"strength": ct.gamma, "sites": [list(s) for s in ct.sites], "origin": lab}
                for ct, lab in zip(inter.coupled_terms, labels)
            ],
        },
        "error_split": list(plan.error_split),
    }
    return GadgetHamiltonian(
        n_total=n_total,
        n_target=n,
        H=pauli.canonicalize(PauliSum(n_total, tuple(h_terms))),
        V=pauli.embed(g2.V, ident, n_total),
        roles=roles,
        plan=plan2,
        known_shift=g2.known_shift,
        kind="serial3",
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# coupling-strength amplification
# ---------------------------------------------------------------------------


def amplify(
    target: TargetHamiltonian, theta: float, plan_template: GadgetPlan
) -> GadgetHamiltonian:
    """Gadgetize ``theta * target`` as parallel unit-strength copies.

    The scaled target is split at cap ``gamma_max(target)`` into
    ``O(theta)`` parallel multi-edges and built against one shared core with
    the template's (R, C, J).  ``theta = 1`` reproduces ``build_gadget``
    term for term.
    """
    if theta < 1:
        raise MalformedInputError(f"amplification needs theta >= 1, got {theta}")
    if target.max_locality() > 2:
        raise WrongBuilderError(
            "amplify covers 2-local targets; reduce 3-local terms with "
            "build_serial_3body first"
        )
    if target.m_terms == 0:
        raise MalformedInputError("nothing to amplify: target has no coupled terms")
    cap = target.gamma_max
    scaled = target.scaled(theta)
    split = split_strong_terms(scaled, cap)
    plan = desk_plan(
        split,
        R=plan_template.R,
        C=plan_template.C,
        J=plan_template.J,
        epsilon=plan_template.epsilon,
        d=plan_template.d,
    )
    g = build_gadget(split, plan)
    return replace(
        g,
        provenance={
            "amplified": theta,
            "split_cap": cap,
            "m_effective": split.m_terms,
        },
    )


def amplified_target(target: TargetHamiltonian, theta: float) -> TargetHamiltonian:
    """The split form of ``theta * target`` that an amplified gadget simulates."""
    return split_strong_terms(target.scaled(theta), target.gamma_max)


# ---------------------------------------------------------------------------
# direct 3-local construction (experimental demonstrator)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Direct3Plan:
    """Parameters of the direct 3-local gadget.

    ``betas[j] = xis[j] = (|gamma_j| Delta^2 / 2R)^(1/3)`` and
    ``kappas[j] = sqrt(|gamma_j| Delta / 2R)``, the choice that makes the
    third-order coefficient ``2 R beta^2 xi / Delta^2`` equal ``|gamma_j|``
    and cancels the unwanted 2- and 1-local by-products.
    """

    R: int
    C: int
    J: float
    Delta: float
    betas: tuple[float, ...]
    xis: tuple[float, ...]
    kappas: tuple[float, ...]

    def __post_init__(self):
        if self.Delta != self.J * self.C:
            raise MalformedInputError("plan violates Delta = J*C")

    def coefficient_identity_residual(self, gammas) -> float:
        worst = 0.0
        for beta, xi, gamma in zip(self.betas, self.xis, gammas):
            worst = max(
                worst,
                abs(2 * self.R * beta**2 * xi / self.Delta**2 - abs(gamma))
                / abs(gamma),
            )
        return worst

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "C": self.C,
            "J": self.J,
            "Delta": self.Delta,
            "betas": list(self.betas),
            "xis": list(self.xis),
            "kappas": list(self.kappas),
        }


def direct3_plan(target: TargetHamiltonian, R: int, C: int, J: float) -> Direct3Plan:
    delta = J * C
    betas = tuple(
        (abs(ct.gamma) * delta**2 / (2 * R)) ** (1.0 / 3.0)
        for ct in target.coupled_terms
    )
    kappas = tuple(
        math.sqrt(abs(ct.gamma) * delta / (2 * R)) for ct in target.coupled_terms
    )
    return Direct3Plan(R=R, C=C, J=J, Delta=delta, betas=betas, xis=betas, kappas=kappas)


def build_direct_3local(
    target: TargetHamiltonian, plan: Direct3Plan
) -> GadgetHamiltonian:
    """Direct 3-local gadget with q/w/y direct-ancilla families and one core.

    The y-family couples through ``kappa (F + I) (x) X_y``: the sign
    matters, since a ``(F - I)`` variant would add its second-order 1-local
    by-product to the third-order one instead of cancelling it.  With
    ``(F + I)`` the cancellation closes exactly through third order.  Marked
    experimental: holding the effective strength while growing the gap
    forces the couplings to grow, so they cannot all stay weak.
    """
    if any(ct.locality != 3 for ct in target.coupled_terms):
        raise WrongBuilderError("direct 3-local builder expects only 3-local terms")
    n = target.n_qubits
    m = target.m_terms
    r, c_size, j_coupling = plan.R, plan.C, plan.J
    n_total = n + 3 * m * r + c_size
    if n_total > pauli.SPARSE_QUBIT_CEILING:
        raise ResourceLimitError(
            f"direct 3-local gadget needs {n_total} qubits, beyond the cap of "
            f"{pauli.SPARSE_QUBIT_CEILING}"
        )

    def q_index(jj, i):
        return n + jj * 3 * r + i

    def w_index(jj, i):
        return n + jj * 3 * r + r + i

    def y_index(jj, i):
        return n + jj * 3 * r + 2 * r + i

    core0 = n + 3 * m * r
    directs = [q for q in range(n, core0)]
    h_terms: list[PauliTerm] = [
        shift(j_coupling / 2 * (len(directs) * c_size + c_size + c_size * (c_size - 1) / 2))
    ]
    for u in directs:
        for cc in range(c_size):
            h_terms.append(term(-j_coupling / 2, [(u, "Z"), (core0 + cc, "Z")]))
    h_terms.extend(term(-j_coupling / 2, [(core0 + cc, "Z")]) for cc in range(c_size))
    h_terms.extend(
        term(-j_coupling / 2, [(core0 + ca, "Z"), (core0 + cb, "Z")])
        for ca in range(c_size)
        for cb in range(ca + 1, c_size)
    )

    v_terms: list[PauliTerm] = [PauliTerm(t.coeff, t.factors) for t in target.h_else.terms]
    known_shift = 0.0
    for jj, ct in enumerate(target.coupled_terms):
        (qa, pa), (qb, pb), (qf, pf) = ct.sites
        s = _sgn(ct.gamma)
        beta, xi, kappa = plan.betas[jj], plan.xis[jj], plan.kappas[jj]
        for i in range(r):
            q, w, y = q_index(jj, i), w_index(jj, i), y_index(jj, i)
            v_terms.append(term(beta, [(qa, pa), (q, "X")]))
            v_terms.append(term(s * beta, [(qb, pb), (q, "X")]))
            # xi F (x) |1><1|_q  ->  (xi/2) F  -  (xi/2) F Z_q
            v_terms.append(term(xi / 2, [(qf, pf)]))
            v_terms.append(term(-xi / 2, [(qf, pf), (q, "Z")]))
            v_terms.append(term(beta, [(qa, pa), (w, "X")]))
            v_terms.append(term(-s * beta, [(qb, pb), (w, "X")]))
            # kappa (F + I) (x) X_y
            v_terms.append(term(kappa, [(qf, pf), (y, "X")]))
            v_terms.append(term(kappa, [(y, "X")]))
        known_shift += -4 * r * beta**2 / plan.Delta - abs(ct.gamma)

    roles = (
        ("target",) * n
        + tuple(
            f"{family}({jj},{i})"
            for jj in range(m)
            for family, _ in (("q", 0), ("w", 1), ("y", 2))
            for i in range(r)
        )
        + tuple(f"core({cc})" for cc in range(c_size))
    )
    return GadgetHamiltonian(
        n_total=n_total,
        n_target=n,
        H=pauli.canonicalize(PauliSum(n_total, tuple(h_terms))),
        V=pauli.canonicalize(PauliSum(n_total, tuple(v_terms))),
        roles=roles,
        plan=None,
        known_shift=known_shift,
        kind="direct3",
        experimental=True,
        provenance={
            "direct3_plan": plan.to_dict(),
            "coefficient_identity_residual": plan.coefficient_identity_residual(
                [ct.gamma for ct in target.coupled_terms]
            ),
        },
    )


def direct3_pathology_table(m_terms: int, gamma_max: float, r_values) -> list[dict]:
    """The coupling-growth pathology: with ``Delta = M^3 R^2`` the couplings
    scale as ``beta ~ R`` instead of shrinking (informational, not gated)."""
    rows = []
    for r in r_values:
        delta = m_terms**3 * r**2
        beta = (gamma_max * delta**2 / (2 * r)) ** (1.0 / 3.0)
        rows.append({"R": int(r), "Delta": float(delta), "beta": beta, "beta_over_R": beta / r})
    return rows
