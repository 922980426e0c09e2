"""Perturbation-theory engine: projectors, resolvents, self-energy, bounds.

Everything here works on a built :class:`~weakgadgets.gadget2.GadgetHamiltonian`
whose unperturbed part is diagonal in the computational basis (true for every
construction in this package).  With the targets-first qubit layout the
low-energy subspace -- all ancillas in |0> -- is spanned by the first
``2**n_target`` basis states, so compressions are plain index selections.

The self-energy at complex shift ``z`` is ``Sigma_-(z) = z I - G_-(z)^{-1}``
with ``G_-(z)`` the low-block of the resolvent ``(z I - H - V)^{-1}``; its
order-``k`` series term is ``T_k = V_{-+} (G_+ V_+)^{k-2} G_+ V_{+-}`` where
``G_+`` is the unperturbed resolvent restricted to the high subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from . import pauli
from ._linalg import EIGS_SEED, deflated_min, lowest_eigs_matrix, solve_columns
from .errors import MalformedInputError, NumericError
from .gadget2 import GadgetHamiltonian, ground_gap_of_H, h_diagonal
from .model import TargetHamiltonian
from .pauli import PauliSum

PENALTY_OVERLAP_TOL = 1e-6


# ---------------------------------------------------------------------------
# subspace bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubspacePartition:
    """Index bookkeeping for L_- (ancillas all |0>) and its complement."""

    n_total: int
    n_target: int
    lambda_star: float

    @property
    def dim(self) -> int:
        return 1 << self.n_total

    @property
    def dim_low(self) -> int:
        return 1 << self.n_target

    @property
    def low_indices(self) -> np.ndarray:
        return np.arange(self.dim_low)

    def projector_low(self) -> sps.csr_matrix:
        low = self.low_indices
        return sps.coo_matrix(
            (np.ones(len(low)), (low, low)), shape=(self.dim, self.dim)
        ).tocsr()


def partition(g: GadgetHamiltonian) -> SubspacePartition:
    """Low/high split of a gadget with the cutoff at half the unperturbed gap."""
    if any(r != "target" for r in g.roles[: g.n_target]):
        raise MalformedInputError("gadget layout must put target qubits first")
    _, gap = ground_gap_of_H(g)
    return SubspacePartition(g.n_total, g.n_target, lambda_star=gap / 2.0)


def _v_operator(g: GadgetHamiltonian) -> sps.csr_matrix:
    return pauli.to_sparse_operator(g.V)


def _total_operator(g: GadgetHamiltonian) -> sps.csr_matrix:
    return pauli.to_sparse_operator(g.total())


# ---------------------------------------------------------------------------
# exact self-energy
# ---------------------------------------------------------------------------


def self_energy_exact(g: GadgetHamiltonian, z: float) -> np.ndarray:
    """Dense ``Sigma_-(z)`` on the ``2**n_target`` dimensional low subspace.

    Inverting the low-compressed resolvent is done in Schur-complement form,

        ``Sigma_-(z) = Htot_-- + Htot_-+ (z I - Htot_++)^{-1} Htot_+-``,

    which is algebraically identical to solving ``(z I - Htot) x = e`` per
    low basis vector and inverting the compressed block, but stays regular
    at the removable poles where a perturbed eigenvalue crosses ``z``.  The
    solve is singular (and reported as a numeric error naming ``z``) exactly
    when ``z`` collides with the spectrum of the high-block restriction,
    which the subspace condition keeps above ``Delta/2``.
    """
    part = partition(g)
    htot = _total_operator(g)
    dim, d_low = part.dim, part.dim_low
    low = part.low_indices
    plus = np.arange(d_low, dim)
    h_ll = np.asarray(htot[low][:, low].todense())
    if dim == d_low:
        sigma = h_ll
    else:
        high_rows = htot[plus]
        h_pl = np.asarray(high_rows[:, low].todense())
        h_lp = htot[low][:, plus]
        system = (
            sps.identity(dim - d_low, dtype=htot.dtype, format="csc") * z
        ) - high_rows[:, plus].tocsc()
        y = solve_columns(system, h_pl, label=f"z={z}")
        sigma = h_ll + np.asarray(h_lp @ y)
    return 0.5 * (sigma + sigma.conj().T)


# ---------------------------------------------------------------------------
# order-by-order series terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeriesTerm:
    order: int
    operator: np.ndarray
    norm: float
    analytic_bound: float | None
    bound_applicable: bool
    bound_kind: str


def self_energy_term(g: GadgetHamiltonian, k: int, z: float = 0.0) -> SeriesTerm:
    """The order-``k`` series term of the self-energy, compressed to L_-.

    ``T_1`` is the plain low-compression of V (which is ``h_else`` for the
    2-body construction); higher orders alternate V applications with the
    diagonal high-subspace resolvent.
    """
    if k < 1:
        raise MalformedInputError(f"series order must be >= 1, got {k}")
    part = partition(g)
    v = _v_operator(g)
    low = part.low_indices
    if k == 1:
        op = np.asarray(v[low][:, low].todense())
    else:
        h_diag = h_diagonal(g)
        denom = z - h_diag
        plus_mask = np.ones(part.dim, dtype=bool)
        plus_mask[low] = False
        if np.any(np.abs(denom[plus_mask]) < 1e-12):
            raise NumericError(f"z={z} collides with an unperturbed level")
        inv = np.zeros(part.dim)
        inv[plus_mask] = 1.0 / denom[plus_mask]
        block = np.zeros((part.dim, part.dim_low), dtype=v.dtype)
        block[low, np.arange(part.dim_low)] = 1.0
        u = v @ block
        u[low, :] = 0.0
        u *= inv[:, None]
        for _ in range(k - 2):
            u = v @ u
            u[low, :] = 0.0
            u *= inv[:, None]
        op = np.asarray((v @ u)[low, :])
    norm = float(np.linalg.norm(op, 2)) if op.size else 0.0
    bound = _bound_for_gadget(g, k)
    return SeriesTerm(
        order=k,
        operator=op,
        norm=norm,
        analytic_bound=bound.value,
        bound_applicable=bound.applicable,
        bound_kind=bound.kind,
    )


def _bound_for_gadget(g: GadgetHamiltonian, k: int) -> "SeriesBound":
    if g.kind != "2body" or g.plan is None:
        return SeriesBound(k, None, False, "none", "bounds only cover the 2-body construction")
    plan = g.plan
    gammas = [2 * plan.R * b * b / plan.Delta for b in plan.betas]
    m = len(gammas)
    gamma_max = max(gammas, default=0.0)
    h_else_norm = float(
        np.linalg.norm(np.asarray(self_first_order(g)), 2)
    )
    return order_bound(k, m, gamma_max, plan.Delta, h_else_norm)


def self_first_order(g: GadgetHamiltonian) -> np.ndarray:
    """Low-compression of V, i.e. the first-order term (h_else for 2-body)."""
    part = partition(g)
    v = _v_operator(g)
    low = part.low_indices
    return np.asarray(v[low][:, low].todense())


# ---------------------------------------------------------------------------
# analytic bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeriesBound:
    order: int
    value: float | None
    applicable: bool
    kind: str
    reason: str = ""


def explicit_order_bound(k: int, m_terms: int, gamma_max: float, delta: float) -> float:
    """Explicit low-order bounds: 2Mg, 2Mg(2Mg/D), 3Mg(2Mg/D)^2 for k=2,4,6."""
    mg = m_terms * gamma_max
    if k == 2:
        return 2 * mg
    if k == 4:
        return 2 * mg * (2 * mg / delta)
    if k == 6:
        return 3 * mg * (2 * mg / delta) ** 2
    raise MalformedInputError(f"explicit bounds cover orders 2, 4, 6 only, got {k}")


def even_bound_no_h_else(k: int, m_terms: int, gamma_max: float, delta: float) -> float:
    """General even-order bound without h_else: Delta * (8 M gamma / Delta)^(k/2)."""
    if k % 2:
        raise MalformedInputError("even-order bound requested for odd order")
    return delta * (8 * m_terms * gamma_max / delta) ** (k // 2)


def order_bound(
    k: int,
    m_terms: int,
    gamma_max: float,
    delta: float,
    h_else_norm: float = 0.0,
) -> SeriesBound:
    """Tightest applicable bound on ``||T_k||`` for the 2-body construction.

    The general (nonzero ``h_else``) bounds additionally require
    ``||h_else||^2 <= 2 M Delta gamma_max`` -- the norm condition the
    ancilla-count selection rule enforces asymptotically.  When violated the
    bound is reported as not applicable rather than silently wrong.
    """
    if k < 1:
        raise MalformedInputError(f"order must be >= 1, got {k}")
    mg = m_terms * gamma_max
    if k == 1:
        return SeriesBound(k, h_else_norm, True, "first-order")
    if k == 2:
        return SeriesBound(k, 2 * mg, True, "explicit-2")
    no_h_else = h_else_norm == 0.0
    norm_cond_ok = h_else_norm**2 <= 2 * mg * delta
    if k % 2 == 0:
        if no_h_else:
            if k in (4, 6):
                return SeriesBound(
                    k, explicit_order_bound(k, m_terms, gamma_max, delta), True, f"explicit-{k}"
                )
            return SeriesBound(
                k, even_bound_no_h_else(k, m_terms, gamma_max, delta), True, "even-no-helse"
            )
        if not norm_cond_ok:
            return SeriesBound(
                k, None, False, "even-general", "||h_else||^2 > 2 M Delta gamma_max"
            )
        return SeriesBound(
            k, delta * (18 * mg / delta) ** (k // 2), True, "even-general"
        )
    # odd orders
    if no_h_else:
        return SeriesBound(k, 0.0, True, "odd-vanishing")
    if not norm_cond_ok:
        return SeriesBound(
            k, None, False, "odd-general", "||h_else||^2 > 2 M Delta gamma_max"
        )
    if k == 3:
        return SeriesBound(k, math.sqrt((2 * mg) ** 3 / delta), True, "odd-3")
    return SeriesBound(
        k, 3 * math.sqrt(2) * delta * (18 * mg / delta) ** (k / 2), True, "odd-general"
    )


def tail_bound(
    m_terms: int,
    gamma_max: float,
    delta: float,
    h_else_norm: float = 0.0,
    from_order: int = 3,
) -> SeriesBound:
    """Geometric bound on ``sum_{m >= from_order} ||T_m||``.

    Uses ``||T_m|| <= 3 sqrt(2) Delta q^m`` with ``q = sqrt(18 M gamma / Delta)``
    (the no-``h_else`` case tightens to the even-only series with ratio
    ``8 M gamma / Delta``).  Applicable only for a contracting ratio.
    """
    mg = m_terms * gamma_max
    if mg == 0:
        return SeriesBound(from_order, 0.0, True, "tail")
    if h_else_norm == 0.0:
        p = 8 * mg / delta
        if p >= 1:
            return SeriesBound(from_order, None, False, "tail", "8 M gamma >= Delta")
        start = from_order if from_order % 2 == 0 else from_order + 1
        value = delta * p ** (start // 2) / (1 - p)
        return SeriesBound(from_order, value, True, "tail-no-helse")
    if h_else_norm**2 > 2 * mg * delta:
        return SeriesBound(
            from_order, None, False, "tail", "||h_else||^2 > 2 M Delta gamma_max"
        )
    q = math.sqrt(18 * mg / delta)
    if q >= 1:
        return SeriesBound(from_order, None, False, "tail", "18 M gamma >= Delta")
    value = 3 * math.sqrt(2) * delta * q**from_order / (1 - q)
    return SeriesBound(from_order, value, True, "tail")


def series_bounds(plan, target: TargetHamiltonian, k: int) -> SeriesBound:
    """Convenience wrapper: bound for order ``k`` from a plan and its target."""
    h_else_norm = pauli.operator_norm(target.h_else)
    return order_bound(k, target.m_terms, target.gamma_max, plan.Delta, h_else_norm)


# ---------------------------------------------------------------------------
# lattice-path combinatorics
# ---------------------------------------------------------------------------

_COMBINATORIC_CAP = 30


def catalan(k: int) -> int:
    """k-th Catalan number (monotone subdiagonal lattice paths across a square)."""
    if not 0 <= k <= _COMBINATORIC_CAP:
        raise MalformedInputError(f"catalan order must lie in [0, {_COMBINATORIC_CAP}]")
    return math.comb(2 * k, k) // (k + 1)


def motzkin(k: int) -> int:
    """k-th Motzkin number (up/down/flat nonnegative paths returning to zero)."""
    if not 0 <= k <= _COMBINATORIC_CAP:
        raise MalformedInputError(f"motzkin order must lie in [0, {_COMBINATORIC_CAP}]")
    vals = [1, 1]
    for n in range(2, k + 1):
        vals.append(
            vals[n - 1] + sum(vals[i] * vals[n - 2 - i] for i in range(n - 1))
        )
    return vals[k]


def catalan_upper_bound(k: int) -> int:
    """The coarse bound 4**k (two choices at each of 2k steps)."""
    return 4**k


def motzkin_upper_bound(m: int) -> int:
    """The coarse bound 3**m; equals 3^(2k) at even and 3*3^(2k) at odd orders."""
    return 3**m


# ---------------------------------------------------------------------------
# subspace condition (perturbed-low vs unperturbed-high separation)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubspaceReport:
    e_plus: float
    lambda_star: float
    ok: bool
    e_tilde_minus_max: float
    tilde_low_ok: bool
    sharper_ok: bool
    penalty: float
    minimizer_low_overlap: float

    def to_dict(self) -> dict:
        return {
            "e_plus": self.e_plus,
            "lambda_star": self.lambda_star,
            "ok": self.ok,
            "e_tilde_minus_max": self.e_tilde_minus_max,
            "tilde_low_ok": self.tilde_low_ok,
            "e_plus_above_53_72_delta": self.sharper_ok,
            "penalty": self.penalty,
            "minimizer_low_overlap": self.minimizer_low_overlap,
        }


def check_subspace_condition(g: GadgetHamiltonian, seed: int = EIGS_SEED) -> SubspaceReport:
    """Verify ``E_+ > lambda_* = Delta/2`` by penalty deflation.

    ``E_+`` is the lowest energy of the perturbed Hamiltonian over the
    unperturbed high subspace, computed as the ground energy of
    ``H + V + mu P_-`` with ``mu = 1e4 (|H|_1 + |V|_1 + Delta)``; the scale
    keeps the minimizer's L_- leakage (which goes as the squared coupling
    over mu) safely below the 1e-6 detection threshold.  If the minimizer
    still leaks more than that, the penalty is doubled and the solve retried
    once.  The report also carries the perturbed-low side: the largest of
    the ``2**n_target`` lowest perturbed levels, compared against the same
    cutoff.
    """
    if g.n_total == g.n_target:
        raise MalformedInputError("gadget has no ancillas, so L_+ is empty")
    part = partition(g)
    _, delta = ground_gap_of_H(g)
    htot = _total_operator(g)
    mu = 1e4 * (g.H.one_norm() + g.V.one_norm() + delta)
    e_plus, overlap = deflated_min(htot, part.low_indices, mu, seed=seed)
    if overlap > PENALTY_OVERLAP_TOL:
        mu *= 2.0
        e_plus, overlap = deflated_min(htot, part.low_indices, mu, seed=seed)
        if overlap > PENALTY_OVERLAP_TOL:
            raise NumericError(
                f"deflation penalty insufficient (overlap {overlap:.2e} after retry)"
            )
    low_levels = lowest_eigs_matrix(htot, part.dim_low, seed=seed)
    e_tilde_minus_max = float(low_levels[-1])
    return SubspaceReport(
        e_plus=float(e_plus),
        lambda_star=part.lambda_star,
        ok=bool(e_plus > part.lambda_star),
        e_tilde_minus_max=e_tilde_minus_max,
        tilde_low_ok=bool(e_tilde_minus_max < part.lambda_star),
        sharper_ok=bool(e_plus >= (53.0 / 72.0) * delta),
        penalty=float(mu),
        minimizer_low_overlap=float(overlap),
    )


# ---------------------------------------------------------------------------
# energy-lowering simplification (monotonicity check)
# ---------------------------------------------------------------------------


def simplified_bounding_gadget(g: GadgetHamiltonian) -> GadgetHamiltonian:
    """Replace every target-ancilla coupling ``beta A (x) X_w`` by
    ``-|beta| X_w`` and the target-only part of V by its lowest eigenvalue.

    This decouples the target spins and can only lower the minimum energy
    over the high subspace, which is the inequality under test.
    """
    n_t = g.n_target
    coupling_weight: dict[int, float] = {}
    target_only = []
    for t in g.V.terms:
        anc = [q for q in t.qubits if q >= n_t]
        if not anc:
            target_only.append(t)
            continue
        if len(anc) != 1 or len(t.factors) != 2:
            raise MalformedInputError(
                "simplification covers single-ancilla 2-local couplings only"
            )
        w = anc[0]
        label = dict(t.factors)[w]
        if label != "X":
            raise MalformedInputError(
                f"simplification expects X couplings on ancillas, found {label}"
            )
        coupling_weight[w] = coupling_weight.get(w, 0.0) + abs(t.coeff)
    if target_only:
        h_low = pauli.to_dense_operator(
            PauliSum(n_t, tuple(pauli.PauliTerm(t.coeff, t.factors) for t in target_only))
        )
        floor = float(np.linalg.eigvalsh(h_low)[0])
    else:
        floor = 0.0
    terms = [pauli.shift(floor)] if floor != 0.0 else []
    terms.extend(
        pauli.term(-s, [(w, "X")]) for w, s in sorted(coupling_weight.items())
    )
    v_simpl = pauli.canonicalize(PauliSum(g.n_total, tuple(terms)))
    return GadgetHamiltonian(
        n_total=g.n_total,
        n_target=g.n_target,
        H=g.H,
        V=v_simpl,
        roles=g.roles,
        plan=g.plan,
        known_shift=g.known_shift,
        kind=g.kind,
    )


@dataclass(frozen=True)
class MonotonicityReport:
    pairs: tuple[tuple[float, float], ...]  # (E_plus simplified, E_plus original)
    ok: bool

    def to_dict(self) -> dict:
        return {
            "pairs": [list(p) for p in self.pairs],
            "ok": self.ok,
        }


def check_energy_lowering_monotonicity(
    g: GadgetHamiltonian, trials: int = 10, seed: int = EIGS_SEED
) -> MonotonicityReport:
    """``E_+`` of the simplified gadget never exceeds the original's (within 1e-9),
    on the given gadget and on ``trials`` randomized small gadgets."""
    from .fixtures import random_admissible_gadget

    rng = np.random.default_rng(seed)
    gadgets = [g]
    for _ in range(trials):
        gadgets.append(
            random_admissible_gadget(rng, m_max=2, r_max=2, c_max=2, qubit_cap=10)
        )
    pairs = []
    for gg in gadgets:
        orig = check_subspace_condition(gg, seed=seed).e_plus
        simpl = check_subspace_condition(simplified_bounding_gadget(gg), seed=seed).e_plus
        pairs.append((simpl, orig))
    ok = all(s <= o + 1e-9 for s, o in pairs)
    return MonotonicityReport(pairs=tuple(pairs), ok=ok)


# ---------------------------------------------------------------------------
# z grids and the full self-energy report
# ---------------------------------------------------------------------------


def z_grid(target: TargetHamiltonian, epsilon: float, points: int = 21) -> np.ndarray:
    """Uniform grid on ``[-z_max, z_max]`` with the series-convergence range
    ``z_max = epsilon + ||h_else|| + sum_j |gamma_j|``."""
    z_max = (
        epsilon
        + pauli.operator_norm(target.h_else)
        + sum(abs(ct.gamma) for ct in target.coupled_terms)
    )
    return np.linspace(-z_max, z_max, points)


@dataclass(frozen=True)
class SelfEnergyReport:
    z_values: tuple[float, ...]
    deviation_per_z: tuple[float, ...]
    orders: tuple[int, ...]
    term_norms: tuple[float, ...]
    term_bounds: tuple[float | None, ...]
    bounds_applicable: tuple[bool, ...]
    bound_kinds: tuple[str, ...]
    bounds_ok: bool
    tail_bound: float | None
    series_vs_exact_max: float
    subspace: dict
    hypothesis_e2_ok: bool
    notes: tuple[str, ...]

    @property
    def max_deviation(self) -> float:
        return max(self.deviation_per_z, default=float("nan"))

    def to_dict(self) -> dict:
        return {
            "z_values": list(self.z_values),
            "deviation_per_z": list(self.deviation_per_z),
            "max_deviation": self.max_deviation,
            "orders": list(self.orders),
            "term_norms": list(self.term_norms),
            "term_bounds": list(self.term_bounds),
            "bounds_applicable": list(self.bounds_applicable),
            "bound_kinds": list(self.bound_kinds),
            "bounds_ok": self.bounds_ok,
            "tail_bound": self.tail_bound,
            "series_vs_exact_max": self.series_vs_exact_max,
            "subspace": self.subspace,
            "hypothesis_e2_ok": self.hypothesis_e2_ok,
            "notes": list(self.notes),
        }


def self_energy_report(
    g: GadgetHamiltonian,
    target: TargetHamiltonian,
    epsilon: float,
    max_order: int = 6,
    z_points: int = 21,
    seed: int = EIGS_SEED,
) -> SelfEnergyReport:
    """Compare the exact self-energy against the effective Hamiltonian and the
    truncated series against its analytic bounds.

    The effective Hamiltonian is the target total plus the gadget's analytic
    shift.  The z range follows the series-convergence analysis; the narrower
    single-term range is subsumed and recorded as a note.
    """
    part = partition(g)
    zs = z_grid(target, epsilon, z_points)
    h_eff = pauli.to_dense_operator(target.total_sum()) + (
        g.known_shift + g.psd_shift
    ) * np.eye(part.dim_low)
    deviations = []
    series_vs_exact = []
    orders = tuple(range(1, max_order + 1))
    for z in zs:
        sigma = self_energy_exact(g, float(z))
        deviations.append(float(np.linalg.norm(sigma - h_eff, 2)))
        total = np.zeros_like(sigma)
        for k in orders:
            total = total + self_energy_term(g, k, float(z)).operator
        series_vs_exact.append(float(np.linalg.norm(sigma - total, 2)))
    terms0 = [self_energy_term(g, k, 0.0) for k in orders]
    bounds_ok = all(
        (t.analytic_bound is None) or not t.bound_applicable or t.norm <= t.analytic_bound + 1e-9
        for t in terms0
    )
    if g.kind == "2body" and g.plan is not None:
        h_else_norm = pauli.operator_norm(target.h_else)
        tail = tail_bound(
            target.m_terms, target.gamma_max, g.plan.Delta, h_else_norm, from_order=max_order + 1
        ).value
    else:
        tail = None
    sub = check_subspace_condition(g, seed=seed).to_dict()
    e2 = float(np.linalg.eigvalsh(h_eff)[-1])
    hypothesis_e2_ok = bool(e2 < part.lambda_star - epsilon)
    notes = (
        "z range is epsilon + ||h_else|| + sum|gamma| (the series-convergence "
        "range); the narrower single-term range ||h_else|| + |gamma| is subsumed",
    )
    return SelfEnergyReport(
        z_values=tuple(float(z) for z in zs),
        deviation_per_z=tuple(deviations),
        orders=orders,
        term_norms=tuple(t.norm for t in terms0),
        term_bounds=tuple(t.analytic_bound for t in terms0),
        bounds_applicable=tuple(t.bound_applicable for t in terms0),
        bound_kinds=tuple(t.bound_kind for t in terms0),
        bounds_ok=bounds_ok,
        tail_bound=tail,
        series_vs_exact_max=max(series_vs_exact),
        subspace=sub,
        hypothesis_e2_ok=hypothesis_e2_ok,
        notes=notes,
    )
