"""Spectral ground truth: diagonalization, eigenvalue matching, sweeps.

Comparisons align the gadget's low spectrum with the target spectrum by
removing the analytic shift recorded at build time (plus any PSD shift);
an align-by-ground-energy fallback exists for composed gadgets whose shift
is calibrated rather than closed-form.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import pauli
from ._linalg import EIGS_SEED, lowest_eigs_matrix
from .errors import MalformedInputError
from .gadget2 import GadgetHamiltonian
from .model import TargetHamiltonian
from .pauli import PauliSum

DEGENERACY_SPACING = 1e-8


def lowest_eigs(
    s: PauliSum, count: int, return_vectors: bool = False, seed: int = EIGS_SEED
):
    """The ``count`` smallest eigenvalues of the realized operator, ascending.

    Dense LAPACK up to the dense ceiling, seeded Lanczos above; deterministic
    for a fixed seed.
    """
    dim = 1 << s.n_qubits
    if count < 1 or count > dim:
        raise MalformedInputError(f"count must lie in [1, {dim}], got {count}")
    mat = pauli.to_sparse_operator(s)
    return lowest_eigs_matrix(mat, count, seed=seed, return_vectors=return_vectors)


@dataclass(frozen=True)
class SpectralReport:
    levels: int
    target_eigs: tuple[float, ...]
    gadget_eigs_shifted: tuple[float, ...]
    max_abs_error: float
    overlaps: tuple[float | None, ...]
    degenerate: tuple[bool, ...]
    ancilla_ground_prob: float
    shift_used: float
    align_mode: str
    eps: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "levels": self.levels,
            "target_eigs": list(self.target_eigs),
            "gadget_eigs_shifted": list(self.gadget_eigs_shifted),
            "max_abs_error": self.max_abs_error,
            "overlaps": list(self.overlaps),
            "degenerate": list(self.degenerate),
            "ancilla_ground_prob": self.ancilla_ground_prob,
            "shift_used": self.shift_used,
            "align_mode": self.align_mode,
            "eps": self.eps,
            "pass": self.passed,
        }


def _degeneracy_clusters(values: np.ndarray) -> list[list[int]]:
    clusters: list[list[int]] = [[0]]
    for j in range(1, len(values)):
        if values[j] - values[j - 1] < DEGENERACY_SPACING:
            clusters[-1].append(j)
        else:
            clusters.append([j])
    return clusters


def compare_spectra(
    target: TargetHamiltonian,
    gadget: GadgetHamiltonian,
    levels: int,
    eps: float,
    align: str = "analytic",
    seed: int = EIGS_SEED,
) -> SpectralReport:
    """Match the gadget's shifted low spectrum against the target's.

    Overlaps compare the gadget eigenvector compressed to the ancilla-ground
    block against the target eigenvector; for target levels spaced closer
    than 1e-8 the per-vector overlap is ill-defined, so clusters are compared
    through principal angles (the smallest singular value of the cross-Gram
    matrix) and flagged as degenerate.
    """
    dim_low = 1 << gadget.n_target
    if levels > dim_low:
        raise MalformedInputError(
            f"levels must not exceed 2**n_target = {dim_low}, got {levels}"
        )
    if target.n_qubits != gadget.n_target:
        raise MalformedInputError("target register does not match gadget layout")
    t_eigs, t_vecs = lowest_eigs(target.total_sum(), levels, return_vectors=True, seed=seed)
    g_eigs, g_vecs = lowest_eigs(gadget.total(), levels, return_vectors=True, seed=seed)
    if align == "analytic":
        shift = gadget.known_shift + gadget.psd_shift
    elif align == "ground":
        shift = float(g_eigs[0] - t_eigs[0])
    else:
        raise MalformedInputError(f"unknown align mode {align!r}")
    shifted = g_eigs - shift
    max_err = float(np.max(np.abs(shifted - t_eigs)))

    compressed = g_vecs[:dim_low, :]
    overlaps: list[float | None] = [None] * levels
    degenerate = [False] * levels
    for cluster in _degeneracy_clusters(t_eigs):
        if len(cluster) == 1:
            j = cluster[0]
            overlaps[j] = float(np.abs(np.vdot(t_vecs[:, j], compressed[:, j])))
            continue
        phi = t_vecs[:, cluster]
        block = compressed[:, cluster]
        q, _ = np.linalg.qr(block)
        svals = np.linalg.svd(phi.conj().T @ q, compute_uv=False)
        value = float(np.clip(np.min(svals), 0.0, 1.0))
        for j in cluster:
            overlaps[j] = value
            degenerate[j] = True

    ground_prob = float(np.sum(np.abs(compressed[:, 0]) ** 2))
    return SpectralReport(
        levels=levels,
        target_eigs=tuple(float(x) for x in t_eigs),
        gadget_eigs_shifted=tuple(float(x) for x in shifted),
        max_abs_error=max_err,
        overlaps=tuple(overlaps),
        degenerate=tuple(degenerate),
        ancilla_ground_prob=ground_prob,
        shift_used=float(shift),
        align_mode=align,
        eps=eps,
        passed=bool(max_err <= eps),
    )


# ---------------------------------------------------------------------------
# parameter sweeps
# ---------------------------------------------------------------------------

SWEEP_PARAMETERS = ("Delta", "R", "C", "J")
CSV_HEADER = "param,value,max_abs_error,beta_max,J,n_total,runtime_ms,pass"


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    max_abs_error: float
    beta_max: float
    J: float
    n_total: int
    runtime_ms: int
    passed: bool
    error: str = ""

    def csv_line(self) -> str:
        err = "nan" if not np.isfinite(self.max_abs_error) else repr(self.max_abs_error)
        return (
            f"{self.param},{self.value!r},{err},{self.beta_max!r},{self.J!r},"
            f"{self.n_total},{self.runtime_ms},{str(self.passed).lower()}"
        )


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    slope: float | None
    truncated: bool = False

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        lines.extend(r.csv_line() for r in self.rows)
        if self.truncated:
            lines.append("__truncated__,,,,,,,")
        return "\n".join(lines) + "\n"

    def errors(self) -> list[float]:
        return [r.max_abs_error for r in self.rows if np.isfinite(r.max_abs_error)]


def fit_loglog_slope(values, errors) -> float | None:
    """Least-squares slope of log(error) against log(parameter value)."""
    pairs = [
        (v, e)
        for v, e in zip(values, errors)
        if v > 0 and e > 0 and np.isfinite(e)
    ]
    if len(pairs) < 2:
        return None
    xs = np.log([p[0] for p in pairs])
    ys = np.log([p[1] for p in pairs])
    return float(np.polyfit(xs, ys, 1)[0])


def _sweep_point(
    target: TargetHamiltonian,
    vary: str,
    value,
    fixed: dict,
    levels: int,
    eps: float,
    seed: int,
    timing: bool,
) -> SweepRow:
    from .gadget2 import build_gadget, desk_plan

    start = time.perf_counter()
    params = {"R": int(fixed.get("R", 1)), "C": int(fixed.get("C", 1))}
    params["J"] = float(fixed.get("J", 1.0))
    if vary == "Delta":
        params["J"] = float(value) / params["C"]
    elif vary == "J":
        params["J"] = float(value)
    elif vary == "R":
        params["R"] = int(value)
    elif vary == "C":
        # varying C at fixed Delta rescales J to hold the gap
        delta = float(fixed.get("Delta", params["J"] * params["C"]))
        params["C"] = int(value)
        params["J"] = delta / params["C"]
    try:
        plan = desk_plan(target, epsilon=eps, **params)
        gadget = build_gadget(target, plan)
        report = compare_spectra(target, gadget, levels, eps, seed=seed)
        elapsed = int(round((time.perf_counter() - start) * 1000)) if timing else 0
        return SweepRow(
            param=vary,
            value=float(value),
            max_abs_error=report.max_abs_error,
            beta_max=plan.beta_max,
            J=plan.J,
            n_total=gadget.n_total,
            runtime_ms=elapsed,
            passed=report.passed,
        )
    except Exception as exc:  # per-point failure: record and continue
        elapsed = int(round((time.perf_counter() - start) * 1000)) if timing else 0
        return SweepRow(
            param=vary,
            value=float(value),
            max_abs_error=float("nan"),
            beta_max=float("nan"),
            J=float("nan"),
            n_total=0,
            runtime_ms=elapsed,
            passed=False,
            error=f"{type(exc).__name__}: {exc}",
        )


def sweep(
    target: TargetHamiltonian,
    vary: str,
    values,
    fixed: dict,
    levels: int | None = None,
    eps: float = 0.1,
    seed: int = EIGS_SEED,
    timing: bool = False,
    workers: int = 1,
    interrupt_ok: bool = True,
) -> SweepResult:
    """Build one desk gadget per parameter value and record the spectral error.

    ``fixed`` supplies the desk plan baseline (R, C, J); the varied parameter
    overrides it (varying Delta rescales J at fixed C).  Points are
    independent; with ``workers > 1`` they run on a thread pool with results
    kept in input order.  Per-point failures are recorded as rows with NaN
    error and the sweep continues.  A keyboard interrupt ends the sweep
    early with a truncation marker.
    """
    if vary not in SWEEP_PARAMETERS:
        raise MalformedInputError(
            f"vary must be one of {SWEEP_PARAMETERS}, got {vary!r}"
        )
    if levels is None:
        levels = min(1 << target.n_qubits, 16)
    values = list(values)
    rows: list[SweepRow] = []
    truncated = False
    try:
        if workers > 1 and len(values) > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(
                        _sweep_point, target, vary, v, fixed, levels, eps, seed, timing
                    )
                    for v in values
                ]
                rows = [f.result() for f in futures]
        else:
            for value in values:
                rows.append(
                    _sweep_point(target, vary, value, fixed, levels, eps, seed, timing)
                )
    except KeyboardInterrupt:
        if not interrupt_ok:
            raise
        truncated = True
    slope = fit_loglog_slope([r.value for r in rows], [r.max_abs_error for r in rows])
    return SweepResult(rows=tuple(rows), slope=slope, truncated=truncated)
