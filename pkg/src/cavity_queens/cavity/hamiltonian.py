"""Order operators, the cavity-mediated Hamiltonian and photon-loss channels.

All couplings are expressed through the reduced combination
``f_m U_Q = Delta eta_m^2 / (Delta^2 + kappa^2)``, so the prefactor of
``Theta_m^dag Theta_m`` is ``f_m U_Q N^2`` regardless of the individual
pump strength, detuning and loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..hilbert import RestrictedBasis, SparseOperator, site_diagonal, weighted_hop_operator
from .modes import interaction_matrix_deep_lattice
from .overlaps import OverlapTables

COUPLINGS = ("full", "deep_lattice")


def order_operator(basis: RestrictedBasis, v_m: np.ndarray, u_m: np.ndarray) -> SparseOperator:
    """``(1/N) sum_ij (v_ij n_ij + u_ij B_ij)`` for one mode; not Hermitian in general."""
    n = basis.n
    diag = SparseOperator.diagonal_operator(site_diagonal(basis, v_m).astype(np.complex128),
                                            hermitian=False)
    theta = diag
    if np.any(u_m != 0):
        theta = diag + weighted_hop_operator(basis, u_m)
    theta = theta * (1.0 / n)
    theta.hermitian = False
    return theta


def order_operators(basis: RestrictedBasis, tables: OverlapTables) -> list[SparseOperator]:
    if tables.n != basis.n:
        raise ValueError(f"overlap tables are for N={tables.n}, basis has N={basis.n}")
    return [order_operator(basis, tables.v[m], tables.u[m]) for m in range(tables.n_modes)]


def coupling_coefficients(modes, u_q: float, n: int) -> np.ndarray:
    return np.array([m.f * u_q * n**2 for m in modes])


def deep_lattice_diagonal(basis: RestrictedBasis, modes, u_q: float) -> np.ndarray:
    """``U_Q sum_{ab} A~(x_a - x_b)`` over occupied sites of every configuration."""
    n = basis.n
    a = interaction_matrix_deep_lattice(modes, n)
    digits = basis.digits
    out = np.zeros(basis.dim)
    for j in range(n):
        for l in range(n):
            out += a[digits[:, j], j, digits[:, l], l]
    return u_q * out


def effective_cavity_hamiltonian(basis: RestrictedBasis, modes, order_ops, u_q: float,
                                 coupling: str = "full") -> SparseOperator:
    """``sum_m f_m U_Q N^2 Theta_m^dag Theta_m``.

    ``coupling="deep_lattice"`` ignores ``order_ops`` and returns the diagonal
    density-density limit built straight from the mode wave vectors.
    """
    if coupling not in COUPLINGS:
        raise ValueError(f"coupling must be one of {COUPLINGS}, got {coupling!r}")
    if coupling == "deep_lattice":
        return SparseOperator.diagonal_operator(deep_lattice_diagonal(basis, modes, u_q),
                                                hermitian=True)
    if len(order_ops) != len(modes):
        raise ValueError("need one order operator per mode")
    coeffs = coupling_coefficients(modes, u_q, basis.n)
    total = None
    for c, theta in zip(coeffs, order_ops):
        if c == 0:
            continue
        term = (theta.dag() @ theta).matrix * c
        total = term if total is None else total + term
    if total is None:
        return SparseOperator.zeros(basis.dim)
    return SparseOperator(total).hermitized()


def max_positive_offdiagonal(op: SparseOperator) -> float:
    """Largest real part among off-diagonal entries; positive means non-stoquastic."""
    coo = op.matrix.tocoo()
    off = coo.row != coo.col
    return float(coo.data[off].real.max()) if np.any(off) else 0.0


@dataclass(frozen=True)
class JumpChannel:
    """Photon loss from mode ``mode``: collapse operator ``sqrt(rate) * theta``."""

    mode: int
    rate: float
    theta: SparseOperator

    @property
    def operator(self) -> SparseOperator:
        return self.theta * np.sqrt(self.rate)


def jump_rate(mode, u_q: float, n: int) -> float:
    """``2 N^2 eta^2 kappa / (Delta^2 + kappa^2) = 2 f U_Q N^2 kappa / Delta``."""
    return 2.0 * mode.f * u_q * n**2 * mode.kappa / mode.detuning


def jump_operators(modes, order_ops, u_q: float, n: int) -> list[JumpChannel]:
    """One channel per lossy mode; lossless modes (``kappa = 0``) are dropped."""
    return [JumpChannel(idx, jump_rate(m, u_q, n), theta)
            for idx, (m, theta) in enumerate(zip(modes, order_ops))
            if m.kappa > 0 and m.f > 0]
