"""Internal eigensolver and linear-solve helpers shared by analysis and verify.

Dense LAPACK paths are used up to the dense ceiling (4096 states); above it
Lanczos/ARPACK with a fixed, seeded starting vector keeps runs reproducible.
Linear solves use a direct sparse factorization up to 2**16 unknowns and
preconditioned MINRES beyond, at 1e-10 relative residual.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spsla

from .errors import NumericError
from .pauli import DENSE_QUBIT_CEILING

EIGS_SEED = 20240817
DIRECT_SOLVE_DIM = 1 << 16
SOLVE_RTOL = 1e-10

#: below this dimension a full dense decomposition is cheaper and exact
_DENSE_EIG_DIM = 1 << 10


def _start_vector(dim: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal(dim)


def lowest_eigs_matrix(
    mat, k: int, seed: int = EIGS_SEED, return_vectors: bool = False
):
    """``k`` smallest eigenvalues (ascending) of a Hermitian matrix.

    Small problems go through dense LAPACK.  Large sparse ones use
    shift-invert Lanczos with the shift placed below the spectrum by a
    Gershgorin bound; plain ``SA`` Lanczos is avoided because it can lose
    degenerate copies on the block-diagonal spectra gadgets produce.
    Deterministic for a fixed seed (fixed ARPACK start vector).
    """
    dim = mat.shape[0]
    if k < 1 or k > dim:
        raise NumericError(f"requested {k} eigenvalues of a {dim}-dim operator")
    dense = not sps.issparse(mat)
    if dense or dim <= _DENSE_EIG_DIM or k >= dim - 1:
        arr = mat if dense else mat.toarray()
        if return_vectors:
            w, v = np.linalg.eigh(arr)
            return w[:k], v[:, :k]
        return np.linalg.eigvalsh(arr)[:k]
    v0 = _start_vector(dim, seed)
    sigma = -float(np.max(np.abs(mat).sum(axis=1))) - 1.0
    ncv = int(min(dim, max(4 * k + 20, 64)))
    try:
        out = spsla.eigsh(
            mat,
            k=k,
            sigma=sigma,
            which="LM",
            mode="normal",
            v0=v0,
            ncv=ncv,
            return_eigenvectors=return_vectors,
        )
    except spsla.ArpackNoConvergence as exc:
        got = 0 if exc.eigenvalues is None else len(exc.eigenvalues)
        raise NumericError(
            f"eigensolve converged only {got}/{k} eigenvalues: {exc}"
        ) from exc
    if return_vectors:
        w, v = out
        order = np.argsort(w)
        return w[order], v[:, order]
    return np.sort(out)


def solve_columns(system: sps.spmatrix, rhs: np.ndarray, label: str) -> np.ndarray:
    """Solve a sparse Hermitian ``system @ X = rhs`` for a block of columns.

    Direct factorization up to ``DIRECT_SOLVE_DIM`` unknowns, preconditioned
    MINRES above.  Raises :class:`NumericError` on singular factorizations,
    non-convergence, an unacceptable residual, or a condition estimate beyond
    1e12, naming the offending solve through ``label``.
    """
    system = system.tocsc()
    dim = system.shape[0]
    rhs = np.asarray(rhs, dtype=np.result_type(system.dtype, rhs.dtype))
    if dim <= DIRECT_SOLVE_DIM:
        try:
            lu = spsla.splu(system)
        except RuntimeError as exc:
            raise NumericError(f"singular solve at {label}: {exc}") from exc
        sol = lu.solve(rhs)
        inv_op = spsla.LinearOperator(
            system.shape, matvec=lu.solve, dtype=system.dtype
        )
        try:
            cond = spsla.onenormest(system) * spsla.onenormest(inv_op)
        except Exception:  # onenormest is best-effort; residual still guards us
            cond = 0.0
        if cond > 1e12:
            raise NumericError(f"ill-conditioned solve at {label} (cond~{cond:.2e})")
    else:
        diag = np.abs(system.diagonal())
        diag = np.where(diag < 1e-8, 1.0, diag)
        precond = spsla.LinearOperator(
            system.shape, matvec=lambda x: x / diag, dtype=np.float64
        )
        sol = np.empty_like(rhs)
        for j in range(rhs.shape[1]):
            x, info = spsla.minres(system, rhs[:, j], rtol=SOLVE_RTOL, M=precond)
            if info != 0:
                raise NumericError(f"iterative solve failed at {label} (info={info})")
            sol[:, j] = x
    resid = np.max(np.abs(system @ sol - rhs))
    scale = max(1.0, float(np.max(np.abs(rhs))))
    if not resid <= 1e-7 * scale:
        raise NumericError(f"solve residual {resid:.2e} at {label}")
    return sol


def deflated_min(
    mat: sps.spmatrix,
    low_indices: np.ndarray,
    mu: float,
    seed: int = EIGS_SEED,
) -> tuple[float, float]:
    """Smallest eigenvalue of ``mat + mu * P_low`` and the minimizer's overlap
    with the penalized subspace."""
    dim = mat.shape[0]
    penalty = sps.coo_matrix(
        (np.full(len(low_indices), mu), (low_indices, low_indices)), shape=(dim, dim)
    ).tocsr()
    w, v = lowest_eigs_matrix(mat + penalty, 1, seed=seed, return_vectors=True)
    overlap = float(np.sum(np.abs(v[low_indices, 0]) ** 2))
    return float(w[0]), overlap
