"""Pauli-string sums and their realization as sparse Hermitian operators.

A :class:`PauliTerm` is a real coefficient times a tensor product of
single-qubit Pauli operators on named qubits; a :class:`PauliSum` collects
terms on a fixed register.  The realization convention is fixed once and
for all: bit ``i`` of a computational-basis index addresses qubit ``i``,
so qubit 0 lives in the least significant bit.

Only real coefficients are supported.  Every Pauli string is Hermitian, so
real linear combinations are Hermitian automatically; complex coefficients
are rejected at construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spsla

from .errors import MalformedInputError, NumericError, ResourceLimitError

PAULI_LABELS = ("X", "Y", "Z")

#: Dense realization is allowed up to this many qubits.
DENSE_QUBIT_CEILING = 12
#: Hard cap for any realization (memory rationale).
SPARSE_QUBIT_CEILING = 24

_EIGS_SEED = 20240817  # fixed iterative-start seed, documented for reproducibility


@dataclass(frozen=True)
class PauliTerm:
    """``coeff`` times a product of Pauli factors ``(qubit, label)``.

    Factors are kept sorted by qubit index, contain no identity entries and
    no repeated qubits.  A term with no factors is a pure energy shift.
    """

    coeff: float
    factors: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        if isinstance(self.coeff, complex) and not isinstance(self.coeff, float):
            raise MalformedInputError("complex coefficients are not supported")
        coeff = float(self.coeff)
        if not math.isfinite(coeff):
            raise MalformedInputError(f"non-finite coefficient {self.coeff!r}")
        factors = tuple((int(q), str(p)) for q, p in self.factors)
        for q, p in factors:
            if q < 0:
                raise MalformedInputError(f"negative qubit index {q}")
            if p not in PAULI_LABELS:
                raise MalformedInputError(f"unknown Pauli label {p!r} on qubit {q}")
        qubits = [q for q, _ in factors]
        if len(set(qubits)) != len(qubits):
            raise MalformedInputError(f"qubit repeated within a term: {sorted(qubits)}")
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "factors", tuple(sorted(factors)))

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.factors)

    @property
    def weight(self) -> int:
        """Number of non-identity factors (locality of the term)."""
        return len(self.factors)

    def __repr__(self):
        if not self.factors:
            return f"{self.coeff:+g}*I"
        label = "".join(f"{p}{q}" for q, p in self.factors)
        return f"{self.coeff:+g}*{label}"


@dataclass(frozen=True)
class PauliSum:
    """A sum of :class:`PauliTerm` on ``n_qubits`` qubits."""

    n_qubits: int
    terms: tuple[PauliTerm, ...] = ()

    def __post_init__(self):
        n = int(self.n_qubits)
        if n < 0:
            raise MalformedInputError(f"negative qubit count {n}")
        terms = tuple(self.terms)
        for t in terms:
            if t.factors and t.factors[-1][0] >= n:
                raise MalformedInputError(
                    f"qubit index {t.factors[-1][0]} out of range for {n} qubits"
                )
        object.__setattr__(self, "n_qubits", n)
        object.__setattr__(self, "terms", terms)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n_qubits != self.n_qubits:
            raise MalformedInputError("cannot add sums on different registers")
        return canonicalize(PauliSum(self.n_qubits, self.terms + other.terms))

    def __mul__(self, scalar: float) -> "PauliSum":
        return PauliSum(
            self.n_qubits, tuple(replace(t, coeff=t.coeff * scalar) for t in self.terms)
        )

    __rmul__ = __mul__

    def one_norm(self) -> float:
        """Sum of coefficient magnitudes; a cheap upper bound on the operator norm."""
        return float(sum(abs(t.coeff) for t in self.terms))

    def is_zero(self) -> bool:
        return all(t.coeff == 0.0 for t in self.terms)


def term(coeff: float, ops) -> PauliTerm:
    """Convenience constructor: ``term(0.5, [(0, "Z"), (3, "X")])``."""
    return PauliTerm(coeff, tuple(ops))


def shift(coeff: float) -> PauliTerm:
    """A pure energy-shift term (no Pauli factors)."""
    return PauliTerm(coeff, ())


def canonicalize(s: PauliSum, drop_tol: float = 0.0) -> PauliSum:
    """Merge duplicate factor sets and order terms deterministically.

    Terms whose merged coefficient has magnitude strictly below ``drop_tol``
    are removed (the default 0 keeps everything, including exact zeros).
    Ordering is lexicographic in the factor tuple, shift terms first.
    """
    merged: dict[tuple, float] = {}
    for t in s.terms:
        merged[t.factors] = merged.get(t.factors, 0.0) + t.coeff
    kept = [
        PauliTerm(c, f) for f, c in sorted(merged.items()) if not abs(c) < drop_tol
    ]
    return PauliSum(s.n_qubits, tuple(kept))


def embed(s: PauliSum, qubit_map: dict[int, int], new_n: int) -> PauliSum:
    """Relabel qubits through an injective map into a ``new_n``-qubit register.

    The realized operator is unitarily equivalent to the original tensored
    with identity on the fresh qubits.
    """
    used = {q for t in s.terms for q in t.qubits}
    missing = used - set(qubit_map)
    if missing:
        raise MalformedInputError(f"qubit map missing indices {sorted(missing)}")
    images = [qubit_map[q] for q in qubit_map]
    if len(set(images)) != len(images):
        raise MalformedInputError("qubit map is not injective")
    if any(i < 0 or i >= new_n for i in images):
        raise MalformedInputError("qubit map image out of range")
    remapped = tuple(
        PauliTerm(t.coeff, tuple((qubit_map[q], p) for q, p in t.factors))
        for t in s.terms
    )
    return PauliSum(new_n, remapped)


def is_real_valued(s: PauliSum) -> bool:
    """True when every term carries an even number of Y factors, i.e. the
    realized matrix is real."""
    return all(sum(1 for _, p in t.factors if p == "Y") % 2 == 0 for t in s.terms)


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x.astype(np.uint64)).astype(np.int64)


def to_sparse_operator(s: PauliSum) -> sps.csr_matrix:
    """Realize the sum as a sparse Hermitian matrix of dimension ``2**n``.

    Each Pauli string is a (signed, possibly phased) permutation matrix:
    the X/Y factors fix a column-index bit flip mask, the Z/Y factors fix a
    sign pattern, and Y factors contribute a global ``(-i)**k`` phase.  The
    result is real ``float64`` whenever every term has an even number of Y
    factors, ``complex128`` otherwise.
    """
    n = s.n_qubits
    if n > SPARSE_QUBIT_CEILING:
        raise ResourceLimitError(
            f"{n} qubits exceeds the hard realization cap of {SPARSE_QUBIT_CEILING}"
        )
    dim = 1 << n
    dtype = np.float64 if is_real_valued(s) else np.complex128
    out = sps.csr_matrix((dim, dim), dtype=dtype)
    if not s.terms:
        return out
    rows = np.arange(dim, dtype=np.int64)
    data_parts, row_parts, col_parts = [], [], []
    for t in s.terms:
        flip = 0
        sign_mask = 0  # bits where the basis value decides a -1 sign (Z and Y)
        n_y = 0
        for q, p in t.factors:
            bit = 1 << q
            if p == "X":
                flip |= bit
            elif p == "Y":
                flip |= bit
                sign_mask |= bit
                n_y += 1
            else:
                sign_mask |= bit
        signs = 1.0 - 2.0 * (_popcount(rows & sign_mask) & 1)
        phase = (-1j) ** n_y
        if dtype is np.float64:
            phase = phase.real
        data_parts.append((t.coeff * phase) * signs)
        row_parts.append(rows)
        col_parts.append(rows ^ flip)
    coo = sps.coo_matrix(
        (np.concatenate(data_parts), (np.concatenate(row_parts), np.concatenate(col_parts))),
        shape=(dim, dim),
        dtype=dtype,
    )
    return coo.tocsr()


def to_dense_operator(s: PauliSum) -> np.ndarray:
    """Dense realization; allowed only up to ``DENSE_QUBIT_CEILING`` qubits."""
    if s.n_qubits > DENSE_QUBIT_CEILING:
        raise ResourceLimitError(
            f"dense realization limited to {DENSE_QUBIT_CEILING} qubits, got {s.n_qubits}"
        )
    return to_sparse_operator(s).toarray()


def matrix_norm(mat) -> float:
    """Spectral norm of a Hermitian matrix (dense array or sparse)."""
    if sps.issparse(mat):
        dim = mat.shape[0]
        if dim <= (1 << DENSE_QUBIT_CEILING):
            return matrix_norm(mat.toarray())
        if mat.nnz == 0:
            return 0.0
        rng = np.random.default_rng(_EIGS_SEED)
        v0 = rng.standard_normal(dim)
        try:
            w = spsla.eigsh(mat, k=1, which="LM", v0=v0, return_eigenvectors=False)
        except spsla.ArpackNoConvergence as exc:
            raise NumericError(f"norm eigensolve did not converge: {exc}") from exc
        return float(abs(w[0]))
    arr = np.asarray(mat)
    if arr.size == 1:
        return float(abs(arr.reshape(())))
    return float(np.max(np.abs(np.linalg.eigvalsh(arr))))


def operator_norm(s: PauliSum) -> float:
    """Spectral norm of the realized operator (exact for dense sizes)."""
    if not s.terms or s.is_zero():
        return 0.0
    return matrix_norm(to_sparse_operator(s))


# ---------------------------------------------------------------------------
# JSON schema:  {"n": int, "terms": [{"coeff": float, "ops": [[q, "X"], ...]}]}
# ---------------------------------------------------------------------------


def sum_to_dict(s: PauliSum) -> dict:
    return {
        "n": s.n_qubits,
        "terms": [
            {"coeff": t.coeff, "ops": [[q, p] for q, p in t.factors]} for t in s.terms
        ],
    }


def sum_from_dict(d: dict, where: str = "pauli_sum") -> PauliSum:
    if not isinstance(d, dict):
        raise MalformedInputError(f"{where}: expected an object")
    try:
        n = int(d["n"])
    except (KeyError, TypeError, ValueError):
        raise MalformedInputError(f"{where}.n: missing or non-integer") from None
    raw_terms = d.get("terms", [])
    if not isinstance(raw_terms, list):
        raise MalformedInputError(f"{where}.terms: expected a list")
    terms = []
    for i, rt in enumerate(raw_terms):
        loc = f"{where}.terms[{i}]"
        if not isinstance(rt, dict) or "coeff" not in rt:
            raise MalformedInputError(f"{loc}: expected an object with 'coeff'")
        coeff = rt["coeff"]
        if isinstance(coeff, bool) or not isinstance(coeff, (int, float)):
            raise MalformedInputError(f"{loc}.coeff: expected a real number")
        ops = rt.get("ops", [])
        if not isinstance(ops, list):
            raise MalformedInputError(f"{loc}.ops: expected a list")
        factors = []
        for j, pair in enumerate(ops):
            if (
                not isinstance(pair, (list, tuple))
                or len(pair) != 2
                or isinstance(pair[0], bool)
                or not isinstance(pair[0], int)
            ):
                raise MalformedInputError(f"{loc}.ops[{j}]: expected [qubit, label]")
            factors.append((pair[0], pair[1]))
        try:
            terms.append(PauliTerm(float(coeff), tuple(factors)))
        except MalformedInputError as exc:
            raise MalformedInputError(f"{loc}: {exc}") from None
    try:
        return PauliSum(n, tuple(terms))
    except MalformedInputError as exc:
        raise MalformedInputError(f"{where}: {exc}") from None
