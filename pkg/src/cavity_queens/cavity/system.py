"""One-stop assembly of the cavity-mediated sweep for an instance and a mode set."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..hilbert import RestrictedBasis, SparseOperator
from ..model import SweepHamiltonian, SweepSchedule, build_h_kin, potential_diagonal
from ..problem import Instance
from .hamiltonian import (
    coupling_coefficients,
    effective_cavity_hamiltonian,
    jump_operators,
    order_operators,
)
from .lattice import band_structure_1d, wannier_1d
from .modes import standard_comb, with_loss
from .overlaps import OverlapTables, deep_lattice_overlaps, overlaps


@dataclass
class CavitySystem:
    """Operators of the cavity implementation.

    ``depth=None`` selects the deep-lattice limit (point-like atoms);
    otherwise ``depth`` is the x-lattice depth in ``E_R`` and overlaps come
    from the numerical Wannier function.
    """

    inst: Instance
    modes: list
    depth: float | None
    basis: RestrictedBasis
    tables: OverlapTables
    thetas: list
    h_kin: SparseOperator
    h_cav: SparseOperator
    pot: np.ndarray
    tunneling_er: float | None = None

    @classmethod
    def build(cls, inst: Instance, modes=None, depth: float | None = 10.0) -> CavitySystem:
        basis = RestrictedBasis(inst.n)
        modes = standard_comb(inst.n) if modes is None else list(modes)
        j_er = None
        if depth is None:
            tables = deep_lattice_overlaps(modes, inst.n)
        else:
            bands = band_structure_1d(depth)
            j_er = bands.tunneling
            tables = overlaps(wannier_1d(bands), modes, inst.n)
        thetas = order_operators(basis, tables)
        h_cav = effective_cavity_hamiltonian(basis, modes, thetas, float(inst.u_q))
        return cls(inst, modes, depth, basis, tables, thetas, build_h_kin(basis), h_cav,
                   potential_diagonal(basis, inst), j_er)

    @property
    def coefficients(self) -> np.ndarray:
        return coupling_coefficients(self.modes, float(self.inst.u_q), self.inst.n)

    def h_problem(self) -> SparseOperator:
        return self.h_cav + SparseOperator.diagonal_operator(self.pot)

    def sweep_hamiltonian(self, schedule: SweepSchedule) -> SweepHamiltonian:
        return SweepHamiltonian(self.h_kin, self.h_problem(), schedule)

    def mean_field_hamiltonian(self, schedule: SweepSchedule):
        from ..dynamics.coherent import MeanFieldHamiltonian

        return MeanFieldHamiltonian(self.h_kin, self.pot, self.thetas, self.coefficients,
                                    schedule)

    def lossy(self, detuning_over_kappa: float) -> CavitySystem:
        """Same operators with every mode given ``kappa = detuning / ratio``."""
        return replace(self, modes=with_loss(self.modes, detuning_over_kappa))

    def jump_channels(self):
        return jump_operators(self.modes, self.thetas, float(self.inst.u_q), self.inst.n)

    def trajectory_hamiltonian(self, schedule: SweepSchedule) -> SweepHamiltonian:
        """``H_kin + r(t) (H_cav + H_pot - i K)`` with ``K = 1/2 sum_m rate_m Theta^dag Theta``."""
        channels = self.jump_channels()
        h = self.h_problem()
        if channels:
            k = None
            for ch in channels:
                term = (ch.theta.dag() @ ch.theta).matrix * (0.5 * ch.rate)
                k = term if k is None else k + term
            h = SparseOperator(h.matrix - 1j * SparseOperator(k).hermitized().matrix)
        return SweepHamiltonian(self.h_kin, h, schedule)

    def describe(self) -> dict:
        ratios = {m.detuning_over_kappa for m in self.modes}
        return {
            "n": self.inst.n,
            "n_modes": len(self.modes),
            "lattice_depth_er": self.depth,
            "tunneling_er": self.tunneling_er,
            "detuning_over_kappa": [r if math.isfinite(r) else "inf" for r in sorted(ratios)],
            "h_cav_nnz": self.h_cav.nnz,
        }
