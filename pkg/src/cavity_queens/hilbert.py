"""Restricted one-atom-per-row Hilbert space and its sparse operators.

Basis state index ``s`` encodes the configuration ``(i_1, ..., i_N)`` as
``s = sum_j (i_j - 1) * N**(j - 1)``, i.e. base-N digits with row 1 least
significant.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .problem import Configuration


class NotNormalized(ValueError):
    pass


def board_size(dim: int) -> int:
    """``N`` such that ``N**N == dim``."""
    n = 1
    while n**n < dim:
        n += 1
    if n**n != dim:
        raise ValueError(f"dimension {dim} is not of the form N**N")
    return n


class RestrictedBasis:
    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = int(n)
        self.dim = self.n**self.n
        self._powers = self.n ** np.arange(self.n, dtype=np.int64)

    def __repr__(self):
        return f"RestrictedBasis(n={self.n}, dim={self.dim})"

    @cached_property
    def digits(self) -> np.ndarray:
        """``(dim, N)`` array of 0-based columns, ``digits[s, j]`` for row ``j+1``."""
        codes = np.arange(self.dim, dtype=np.int64)
        return (codes[:, None] // self._powers[None, :]) % self.n

    def encode(self, c) -> int:
        cols = c.columns if isinstance(c, Configuration) else tuple(c)
        if len(cols) != self.n:
            raise ValueError(f"expected {self.n} rows, got {len(cols)}")
        if any(x < 1 or x > self.n for x in cols):
            raise ValueError(f"columns out of range 1..{self.n}: {cols}")
        return int(np.dot(np.asarray(cols, dtype=np.int64) - 1, self._powers))

    def decode(self, index: int) -> Configuration:
        if not 0 <= index < self.dim:
            raise IndexError(f"basis index {index} outside [0, {self.dim})")
        return Configuration(tuple(int(d) + 1 for d in self.digits[index]))

    def basis_vector(self, c) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.complex128)
        v[self.encode(c)] = 1.0
        return v

    def uniform_state(self) -> np.ndarray:
        return np.full(self.dim, self.dim**-0.5, dtype=np.complex128)

    def _check_site(self, i: int, j: int):
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise IndexError(f"site {(i, j)} outside the {self.n}x{self.n} board")

    def hop_pairs(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Basis pairs ``(s, t)`` with the row-``j`` atom at column ``i`` in ``s``
        and at ``i+1`` in ``t``. Empty for ``i == N`` (open boundary)."""
        self._check_site(i, j)
        if i == self.n:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        src = np.flatnonzero(self.digits[:, j - 1] == i - 1)
        return src, src + self._powers[j - 1]


class SparseOperator:
    """Complex CSR operator on a restricted basis.

    ``hermitian`` is a contract flag: operators built through
    :meth:`hermitized` (or from Hermitian terms) are exactly Hermitian entrywise.
    """

    __array_priority__ = 20

    def __init__(self, matrix, hermitian: bool = False):
        m = sp.csr_matrix(matrix, dtype=np.complex128)
        m.sum_duplicates()
        m.sort_indices()
        self.matrix = m
        self.hermitian = bool(hermitian)
        self._is_diag = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def __repr__(self):
        kind = "hermitian" if self.hermitian else "general"
        return f"SparseOperator(dim={self.dim}, nnz={self.nnz}, {kind})"

    @classmethod
    def diagonal_operator(cls, values, hermitian: bool | None = None) -> SparseOperator:
        values = np.asarray(values)
        if hermitian is None:
            hermitian = not np.iscomplexobj(values) or bool(np.all(values.imag == 0))
        return cls(sp.diags(values.astype(np.complex128), format="csr"), hermitian)

    @classmethod
    def zeros(cls, dim: int) -> SparseOperator:
        return cls(sp.csr_matrix((dim, dim), dtype=np.complex128), True)

    def dag(self) -> SparseOperator:
        return SparseOperator(self.matrix.conj().T.tocsr(), self.hermitian)

    def hermitized(self) -> SparseOperator:
        m = self.matrix
        return SparseOperator(0.5 * (m + m.conj().T), True)

    def __add__(self, other: SparseOperator) -> SparseOperator:
        if not isinstance(other, SparseOperator):
            return NotImplemented
        return SparseOperator(self.matrix + other.matrix, self.hermitian and other.hermitian)

    def __sub__(self, other: SparseOperator) -> SparseOperator:
        if not isinstance(other, SparseOperator):
            return NotImplemented
        return SparseOperator(self.matrix - other.matrix, self.hermitian and other.hermitian)

    def __neg__(self) -> SparseOperator:
        return SparseOperator(-self.matrix, self.hermitian)

    def __mul__(self, scalar) -> SparseOperator:
        scalar = complex(scalar)
        herm = self.hermitian and scalar.imag == 0
        return SparseOperator(self.matrix * scalar, herm)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self.matrix @ other.matrix, False)
        return self.matrix @ other

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def is_diagonal(self) -> bool:
        if self._is_diag is None:
            coo = self.matrix.tocoo()
            nz = coo.data != 0
            self._is_diag = bool(np.all(coo.row[nz] == coo.col[nz]))
        return self._is_diag

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.matrix @ psi) / np.vdot(psi, psi).real)

    def max_abs_diff(self, other: SparseOperator) -> float:
        diff = self.matrix - other.matrix
        return float(abs(diff).max()) if diff.nnz else 0.0

    def dump_coo(self, path) -> None:
        """Write ``row col re im`` lines, one per stored entry (debugging aid)."""
        coo = self.matrix.tocoo()
        lines = [f"# dim {self.dim} nnz {coo.nnz} hermitian {int(self.hermitian)}"]
        lines += [f"{r} {c} {v.real:.17g} {v.imag:.17g}"
                  for r, c, v in zip(coo.row, coo.col, coo.data)]
        Path(path).write_text("\n".join(lines) + "\n")


SparseHermitianOperator = SparseOperator


def number_operator(basis: RestrictedBasis, i: int, j: int) -> SparseOperator:
    """Occupation of site ``(i, j)``: 1 on states with ``i_j == i``."""
    basis._check_site(i, j)
    values = (basis.digits[:, j - 1] == i - 1).astype(np.float64)
    return SparseOperator.diagonal_operator(values, hermitian=True)


def hop_operator(basis: RestrictedBasis, i: int, j: int) -> SparseOperator:
    """Tunneling term exchanging ``i_j = i`` and ``i_j = i + 1``; zero for ``i = N``."""
    src, dst = basis.hop_pairs(i, j)
    rows = np.concatenate([src, dst])
    cols = np.concatenate([dst, src])
    data = np.ones(rows.size, dtype=np.complex128)
    m = sp.csr_matrix((data, (rows, cols)), shape=(basis.dim, basis.dim))
    return SparseOperator(m, hermitian=True)


def weighted_hop_operator(basis: RestrictedBasis, weights: np.ndarray) -> SparseOperator:
    """``sum_ij weights[i-1, j-1] * B_ij`` assembled in one pass.

    ``weights`` may be complex; the result is Hermitian only for real weights.
    """
    n = basis.n
    rows, cols, data = [], [], []
    for j in range(1, n + 1):
        for i in range(1, n):
            w = weights[i - 1, j - 1]
            if w == 0:
                continue
            src, dst = basis.hop_pairs(i, j)
            rows += [src, dst]
            cols += [dst, src]
            data += [np.full(src.size, w, dtype=np.complex128)] * 2
    if not rows:
        return SparseOperator.zeros(basis.dim)
    m = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dim, basis.dim),
    )
    return SparseOperator(m, hermitian=bool(np.all(np.imag(weights) == 0)))


def site_diagonal(basis: RestrictedBasis, table: np.ndarray) -> np.ndarray:
    """Diagonal ``sum_ij table[i-1, j-1] * n_ij`` as a vector over the basis."""
    rows = np.arange(basis.n)
    return np.asarray(table)[basis.digits, rows[None, :]].sum(axis=1)


def occupations(basis: RestrictedBasis, state: np.ndarray, *, atol: float = 1e-10) -> np.ndarray:
    """Site occupations ``<n_ij>`` as an ``(N, N)`` table indexed ``[i-1, j-1]``."""
    state = np.asarray(state)
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > atol:
        raise NotNormalized(f"state norm {norm:.12g} differs from 1 by more than {atol}")
    prob = np.abs(state) ** 2
    n = basis.n
    occ = np.zeros((n, n))
    for j in range(n):
        occ[:, j] = np.bincount(basis.digits[:, j], weights=prob, minlength=n)
    return occ


@dataclass(frozen=True)
class LineCounts:
    """Per-configuration column / diagonal counts, handy for readout checks."""

    columns: np.ndarray
    plus: np.ndarray
    minus: np.ndarray


def line_counts(c) -> LineCounts:
    cols = c.columns if isinstance(c, Configuration) else tuple(c)
    n = len(cols)
    col = np.zeros(n)
    plus = np.zeros(2 * n - 1)
    minus = np.zeros(2 * n - 1)
    for j, i in enumerate(cols, start=1):
        col[i - 1] += 1
        plus[i + j - 2] += 1
        minus[i - j + n - 1] += 1
    return LineCounts(col, plus, minus)
