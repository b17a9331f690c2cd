"""Physical layer: pump combs, lattice band structure, overlaps and the cavity Hamiltonian."""

from .hamiltonian import (
    JumpChannel,
    deep_lattice_diagonal,
    effective_cavity_hamiltonian,
    jump_operators,
    max_positive_offdiagonal,
    order_operator,
    order_operators,
)
from .lattice import LatticeParams, WannierData, band_structure_1d, wannier_1d
from .modes import (
    InsufficientModes,
    ModeSetError,
    PumpMode,
    interaction_closed_form,
    interaction_function,
    interaction_map,
    interaction_matrix_deep_lattice,
    read_mode_set,
    standard_comb,
    validate_mode_set,
    with_loss,
    write_mode_set,
)
from .overlaps import (
    OverlapTables,
    deep_lattice_overlaps,
    harmonic_overlaps,
    overlaps,
    smoothing_correction,
)
from .system import CavitySystem

__all__ = [
    "CavitySystem",
    "InsufficientModes",
    "JumpChannel",
    "LatticeParams",
    "ModeSetError",
    "OverlapTables",
    "PumpMode",
    "WannierData",
    "band_structure_1d",
    "deep_lattice_diagonal",
    "deep_lattice_overlaps",
    "effective_cavity_hamiltonian",
    "harmonic_overlaps",
    "interaction_closed_form",
    "interaction_function",
    "interaction_map",
    "interaction_matrix_deep_lattice",
    "jump_operators",
    "max_positive_offdiagonal",
    "order_operator",
    "order_operators",
    "overlaps",
    "read_mode_set",
    "smoothing_correction",
    "standard_comb",
    "validate_mode_set",
    "wannier_1d",
    "with_loss",
    "write_mode_set",
]
