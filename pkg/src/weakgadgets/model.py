"""Target-Hamiltonian data model and hypothesis checks.

A target is a sum ``h_else + sum_j gamma_j A_(a_j) (x) B_(b_j) [(x) F_(f_j)]``
of 2- or 3-local single-Pauli coupled terms plus a leftover part.  This
module validates targets against the assumptions the gadget constructions
need (non-negative ``h_else`` spectrum, bounded interaction strength),
derives the interaction graph with its Pauli-degree accounting, and splits
over-strong couplings into parallel multi-edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import pauli
from .errors import MalformedInputError
from .pauli import PauliSum, PauliTerm

PSD_TOL_DEFAULT = 1e-10


@dataclass(frozen=True)
class CoupledTerm:
    """One gadgetizable coupling: gamma times single Paulis on 2 or 3 distinct qubits."""

    gamma: float
    sites: tuple[tuple[int, str], ...]

    def __post_init__(self):
        gamma = float(self.gamma)
        if not math.isfinite(gamma):
            raise MalformedInputError("coupled term with non-finite gamma")
        sites = tuple((int(q), str(p)) for q, p in self.sites)
        if len(sites) not in (2, 3):
            raise MalformedInputError(
                f"coupled term must have locality 2 or 3, got {len(sites)}"
            )
        qubits = [q for q, _ in sites]
        if len(set(qubits)) != len(qubits):
            raise MalformedInputError(f"coupled term repeats qubits {sorted(qubits)}")
        for q, p in sites:
            if q < 0:
                raise MalformedInputError(f"negative qubit index {q}")
            if p not in pauli.PAULI_LABELS:
                raise MalformedInputError(f"unknown Pauli label {p!r} on qubit {q}")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "sites", sites)

    @property
    def locality(self) -> int:
        return len(self.sites)

    @property
    def site_a(self):
        return self.sites[0]

    @property
    def site_b(self):
        return self.sites[1]

    @property
    def site_f(self):
        return self.sites[2] if len(self.sites) == 3 else None

    def as_pauli_term(self) -> PauliTerm:
        return PauliTerm(self.gamma, self.sites)


@dataclass(frozen=True)
class TargetHamiltonian:
    n_qubits: int
    coupled_terms: tuple[CoupledTerm, ...]
    h_else: PauliSum

    def __post_init__(self):
        n = int(self.n_qubits)
        terms = tuple(self.coupled_terms)
        for ct in terms:
            for q, _ in ct.sites:
                if q >= n:
                    raise MalformedInputError(
                        f"coupled-term qubit {q} out of range for {n} qubits"
                    )
        if self.h_else.n_qubits != n:
            raise MalformedInputError(
                f"h_else register ({self.h_else.n_qubits}) does not match n_qubits ({n})"
            )
        object.__setattr__(self, "n_qubits", n)
        object.__setattr__(self, "coupled_terms", terms)

    @property
    def m_terms(self) -> int:
        return len(self.coupled_terms)

    @property
    def gamma_max(self) -> float:
        return max((abs(ct.gamma) for ct in self.coupled_terms), default=0.0)

    def max_locality(self) -> int:
        return max((ct.locality for ct in self.coupled_terms), default=0)

    def total_sum(self) -> PauliSum:
        """h_else plus all coupled terms, canonicalized; the full operator."""
        coupled = PauliSum(self.n_qubits, tuple(ct.as_pauli_term() for ct in self.coupled_terms))
        return self.h_else + coupled

    def scaled(self, factor: float) -> "TargetHamiltonian":
        return TargetHamiltonian(
            self.n_qubits,
            tuple(CoupledTerm(ct.gamma * factor, ct.sites) for ct in self.coupled_terms),
            self.h_else * factor,
        )


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    n_qubits: int
    m_terms: int
    gamma_max: float
    h_else_norm: float
    h_else_lambda_min: float
    psd_ok: bool
    psd_tol: float
    locality_ok: tuple[bool, ...]
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.psd_ok and all(self.locality_ok)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "m_terms": self.m_terms,
            "gamma_max": self.gamma_max,
            "h_else_norm": self.h_else_norm,
            "h_else_lambda_min": self.h_else_lambda_min,
            "psd_ok": self.psd_ok,
            "psd_tol": self.psd_tol,
            "locality_ok": list(self.locality_ok),
            "ok": self.ok,
            "notes": list(self.notes),
        }


def validate(target: TargetHamiltonian, tol: float = PSD_TOL_DEFAULT) -> ValidationReport:
    """Check the hypotheses the constructions rely on; failures land in the report, not in raises.

    ``psd_ok`` is true iff the smallest eigenvalue of ``h_else`` is at least
    ``-tol``.  Norms are computed, not bounded.  The poly(n) caps the theory
    assumes are recorded as notes, never enforced.
    """
    notes = []
    if target.h_else.terms and not target.h_else.is_zero():
        mat = pauli.to_sparse_operator(target.h_else)
        if mat.shape[0] <= (1 << pauli.DENSE_QUBIT_CEILING):
            evals = np.linalg.eigvalsh(mat.toarray())
            lam_min = float(evals[0])
            norm = float(np.max(np.abs(evals)))
        else:
            from .verify import lowest_eigs  # deferred: verify depends on model

            lam_min = float(lowest_eigs(target.h_else, 1)[0])
            norm = pauli.operator_norm(target.h_else)
    else:
        lam_min = 0.0
        norm = 0.0
    psd_ok = lam_min >= -tol
    locality_ok = tuple(ct.locality in (2, 3) for ct in target.coupled_terms)
    if target.m_terms:
        notes.append(f"M={target.m_terms}, gamma_max={target.gamma_max}")
    return ValidationReport(
        n_qubits=target.n_qubits,
        m_terms=target.m_terms,
        gamma_max=target.gamma_max,
        h_else_norm=norm,
        h_else_lambda_min=lam_min,
        psd_ok=psd_ok,
        psd_tol=tol,
        locality_ok=locality_ok,
        notes=tuple(notes),
    )


def shifted_to_psd(
    target: TargetHamiltonian, tol: float = PSD_TOL_DEFAULT
) -> tuple[TargetHamiltonian, float]:
    """Opt-in fix for a non-PSD ``h_else``: add ``|lambda_min| * I`` and return
    the shift so downstream reports can undo it.  Returns the target unchanged
    (shift 0) when already PSD."""
    report = validate(target, tol)
    if report.psd_ok:
        return target, 0.0
    shift = -report.h_else_lambda_min
    h_else = target.h_else + PauliSum(target.n_qubits, (pauli.shift(shift),))
    return TargetHamiltonian(target.n_qubits, target.coupled_terms, h_else), shift


# ---------------------------------------------------------------------------
# interaction graph / Pauli degree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InteractionGraph:
    vertices: tuple[int, ...]
    #: multiset of (qubit tuple, Pauli tuple, strength); 2-local entries are
    #: Pauli edges, 3-local entries hyper-edges counted once per endpoint
    pauli_edges: tuple[tuple[tuple[int, ...], tuple[str, ...], float], ...]
    self_loops: tuple[tuple[int, str, float], ...]


def interaction_graph(source) -> InteractionGraph:
    """Interaction graph from the canonical Pauli decomposition.

    Accepts a :class:`TargetHamiltonian` or a plain :class:`PauliSum`; the
    graph reconstructs exactly from ``canonicalize(total)``: weight-2 terms
    become Pauli (multi-)edges, weight-1 terms self-loops, weight-3 terms
    hyper-edges.  Identity shifts are ignored.
    """
    if isinstance(source, TargetHamiltonian):
        total = pauli.canonicalize(source.total_sum())
    else:
        total = pauli.canonicalize(source)
    edges = []
    loops = []
    for t in total.terms:
        if t.weight == 0 or t.coeff == 0.0:
            continue
        if t.weight == 1:
            (q, p) = t.factors[0]
            loops.append((q, p, t.coeff))
        else:
            qs = tuple(q for q, _ in t.factors)
            ps = tuple(p for _, p in t.factors)
            edges.append((qs, ps, t.coeff))
    return InteractionGraph(
        vertices=tuple(range(total.n_qubits)),
        pauli_edges=tuple(edges),
        self_loops=tuple(loops),
    )


def pauli_degree(graph: InteractionGraph) -> tuple[dict[int, int], int]:
    """Per-vertex count of incident Pauli multi-edges, and the maximum."""
    degrees = {v: 0 for v in graph.vertices}
    for qs, _, _ in graph.pauli_edges:
        for q in qs:
            degrees[q] += 1
    max_degree = max(degrees.values(), default=0)
    return degrees, max_degree


# ---------------------------------------------------------------------------
# multi-edge splitting
# ---------------------------------------------------------------------------


def split_strong_terms(target: TargetHamiltonian, cap: float) -> TargetHamiltonian:
    """Split every coupled term with ``|gamma| > cap`` into equal parallel copies.

    A term of strength gamma becomes ``ceil(|gamma|/cap)`` copies of
    ``gamma/copies`` each, which leaves the realized operator unchanged and
    bounds every output strength by ``cap``.
    """
    if not cap > 0:
        raise MalformedInputError(f"cap must be positive, got {cap}")
    out = []
    for ct in target.coupled_terms:
        if abs(ct.gamma) <= cap:
            out.append(ct)
            continue
        copies = math.ceil(abs(ct.gamma) / cap)
        part = ct.gamma / copies
        out.extend(CoupledTerm(part, ct.sites) for _ in range(copies))
    return TargetHamiltonian(target.n_qubits, tuple(out), target.h_else)


# ---------------------------------------------------------------------------
# file format:  {"n": int, "coupled_terms": [...], "h_else": PauliSum dict}
# ---------------------------------------------------------------------------


def target_to_dict(target: TargetHamiltonian) -> dict:
    return {
        "n": target.n_qubits,
        "coupled_terms": [
            {"gamma": ct.gamma, "sites": [[q, p] for q, p in ct.sites]}
            for ct in target.coupled_terms
        ],
        "h_else": pauli.sum_to_dict(target.h_else),
    }


def target_from_dict(d: dict, where: str = "target") -> TargetHamiltonian:
    if not isinstance(d, dict):
        raise MalformedInputError(f"{where}: expected an object")
    try:
        n = int(d["n"])
    except (KeyError, TypeError, ValueError):
        raise MalformedInputError(f"{where}.n: missing or non-integer") from None
    raw = d.get("coupled_terms", [])
    if not isinstance(raw, list):
        raise MalformedInputError(f"{where}.coupled_terms: expected a list")
    coupled = []
    routed_1local = []
    for i, rt in enumerate(raw):
        loc = f"{where}.coupled_terms[{i}]"
        if not isinstance(rt, dict) or "gamma" not in rt or "sites" not in rt:
            raise MalformedInputError(f"{loc}: expected an object with gamma and sites")
        gamma = rt["gamma"]
        if isinstance(gamma, bool) or not isinstance(gamma, (int, float)):
            raise MalformedInputError(f"{loc}.gamma: expected a real number")
        sites = rt["sites"]
        if not isinstance(sites, list) or not all(
            isinstance(s, (list, tuple)) and len(s) == 2 for s in sites
        ):
            raise MalformedInputError(f"{loc}.sites: expected a list of [qubit, label]")
        pairs = tuple((s[0], s[1]) for s in sites)
        if len(pairs) == 1:
            # 1-local entries are not gadgetized; route them into h_else
            routed_1local.append(PauliTerm(float(gamma), pairs))
            continue
        try:
            coupled.append(CoupledTerm(float(gamma), pairs))
        except MalformedInputError as exc:
            raise MalformedInputError(f"{loc}: {exc}") from None
    h_else_dict = d.get("h_else", {"n": n, "terms": []})
    h_else = pauli.sum_from_dict(h_else_dict, where=f"{where}.h_else")
    if h_else.n_qubits != n:
        raise MalformedInputError(
            f"{where}.h_else.n: expected {n}, got {h_else.n_qubits}"
        )
    if routed_1local:
        h_else = h_else + PauliSum(n, tuple(routed_1local))
    try:
        return TargetHamiltonian(n, tuple(coupled), h_else)
    except MalformedInputError as exc:
        raise MalformedInputError(f"{where}: {exc}") from None
