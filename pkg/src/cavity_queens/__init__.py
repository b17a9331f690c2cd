"""Adiabatic N-queens solving with atoms in an optical lattice and cavity-mediated interactions.

Subpackages and modules:

* :mod:`problem`: instances, the queens interaction matrix and the brute-force oracle.
* :mod:`hilbert`: the one-atom-per-row basis and sparse operators on it.
* :mod:`model`: ideal sweep Hamiltonians, spectra and gap scans.
* :mod:`cavity`: pump combs, Wannier overlaps and the cavity Hamiltonian.
* :mod:`dynamics`: coherent, classical-field and quantum-jump sweeps.
* :mod:`readout`: scattered fields, photon flux and solution decisions.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .hilbert import RestrictedBasis, SparseOperator
from .problem import Configuration, Instance, brute_force_solve, paper_instance

__all__ = [
    "Configuration",
    "Instance",
    "RestrictedBasis",
    "SparseOperator",
    "__version__",
    "brute_force_solve",
    "paper_instance",
]
