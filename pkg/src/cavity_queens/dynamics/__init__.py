"""Time evolution: coherent and classical-field sweeps, quantum-jump trajectories, rates."""

from .coherent import (
    MeanFieldHamiltonian,
    NormDriftError,
    SweepResult,
    evolve_mean_field,
    evolve_schrodinger,
    kinetic_ground_state,
    propagate,
)
from .integrate import DormandPrince, StepSizeUnderflow
from .rates import NotAnEigenstate, RateTable, reduced_dephasing, scattering_rates
from .trajectories import TrajectoryEnsemble, evolve_trajectories, trajectory_rng

__all__ = [
    "DormandPrince",
    "MeanFieldHamiltonian",
    "NormDriftError",
    "NotAnEigenstate",
    "RateTable",
    "StepSizeUnderflow",
    "SweepResult",
    "TrajectoryEnsemble",
    "evolve_mean_field",
    "evolve_schrodinger",
    "evolve_trajectories",
    "kinetic_ground_state",
    "propagate",
    "reduced_dephasing",
    "scattering_rates",
    "trajectory_rng",
]
