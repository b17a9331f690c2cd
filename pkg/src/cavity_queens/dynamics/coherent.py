"""Coherent Schroedinger sweeps and self-consistent classical-field sweeps.

Units: hbar = J = 1, so times are in hbar/J and energies in J.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..hilbert import RestrictedBasis, SparseOperator, occupations
from ..model import SweepHamiltonian, SweepSchedule, ground_state
from .integrate import DormandPrince

log = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-11
MAX_NORM_DRIFT = 1e-6


class NormDriftError(RuntimeError):
    def __init__(self, drift: float, time: float, stats: dict):
        super().__init__(f"norm drift {drift:.3g} exceeds {MAX_NORM_DRIFT:g} at t = {time:.6g} "
                         f"after {stats.get('accepted', '?')} steps")
        self.drift = drift
        self.time = time
        self.stats = stats


@dataclass
class SweepResult:
    times: np.ndarray
    occupations: np.ndarray  # (n_checkpoints, N, N), [t, i-1, j-1]
    fidelity: np.ndarray | None  # |<target|psi(t)>| per checkpoint
    final_state: np.ndarray
    stats: dict = field(default_factory=dict)
    states: list | None = None
    engine: str = "schroedinger"

    @property
    def final_fidelity(self) -> float | None:
        return None if self.fidelity is None else float(self.fidelity[-1])

    def summary(self) -> dict:
        out = {"engine": self.engine, "final_fidelity": self.final_fidelity,
               "checkpoints": len(self.times)}
        out.update(self.stats)
        return out

    def to_csv(self, path) -> None:
        n = self.occupations.shape[1]
        header = ["time", "fidelity"] + [f"n_{i}_{j}" for j in range(1, n + 1)
                                         for i in range(1, n + 1)]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for a, t in enumerate(self.times):
                fid = "" if self.fidelity is None else f"{self.fidelity[a]:.12g}"
                # row-major over the board: row j outer, column i inner
                occ = self.occupations[a].T.ravel()
                wr.writerow([f"{t:.12g}", fid] + [f"{x:.12g}" for x in occ])

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def kinetic_ground_state(h_kin: SparseOperator) -> np.ndarray:
    """Ground state of ``H_kin`` with a deterministic global phase (largest entry real-positive)."""
    _, v = ground_state(h_kin)
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k]) / np.linalg.norm(v)


def _fidelity(target, psi) -> float:
    return float(abs(np.vdot(target, psi)) / np.linalg.norm(psi))


def propagate(matvec, psi0, t0: float, t1: float, *, rtol: float = DEFAULT_RTOL,
              atol: float = DEFAULT_ATOL) -> np.ndarray:
    """Solve ``i dpsi/dt = H(t) psi`` from ``t0`` to ``t1`` (``t1 < t0`` runs backwards)."""
    if t1 == t0:
        return np.array(psi0, dtype=np.complex128)
    sign = 1.0 if t1 > t0 else -1.0

    def rhs(s, y):
        return -1j * sign * matvec(t0 + sign * s, y)

    stepper = DormandPrince(rhs, 0.0, psi0, rtol=rtol, atol=atol)
    span = abs(t1 - t0)
    while stepper.t < span:
        stepper.step(span)
    return stepper.y


def _run_checkpointed(stepper: DormandPrince, checkpoints, record, after_step=None):
    """Step through ``checkpoints`` (first entry is the start), clipping steps onto them."""
    record(stepper.t, stepper.y)
    for t_ck in checkpoints[1:]:
        while stepper.t < t_ck:
            stepper.step(t_ck)
            if after_step is not None:
                after_step(stepper)
        record(stepper.t, stepper.y)


def evolve_schrodinger(hamiltonian: SweepHamiltonian, basis: RestrictedBasis, *,
                       initial_state=None, target=None, rtol: float = DEFAULT_RTOL,
                       atol: float = DEFAULT_ATOL, checkpoints=None,
                       store_states: bool = False,
                       max_norm_drift: float = MAX_NORM_DRIFT) -> SweepResult:
    """Coherent sweep ``i dpsi/dt = H(t) psi`` over ``[0, tau]``.

    The default initial state is the ground state of ``H_kin``. ``target`` is a
    normalised reference (typically the oracle solution); its overlap is
    recorded at every checkpoint. The norm is never renormalised; a drift
    beyond ``max_norm_drift`` aborts with :class:`NormDriftError`.
    """
    schedule = hamiltonian.schedule
    psi0 = (kinetic_ground_state(hamiltonian.h_kin) if initial_state is None
            else np.asarray(initial_state, dtype=np.complex128))
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("initial state must be normalised")
    cks = schedule.checkpoints() if checkpoints is None else np.asarray(checkpoints, float)

    times, occs, fids, states = [], [], [], []
    max_drift = 0.0

    def record(t, y):
        nrm = np.linalg.norm(y)
        times.append(t)
        occs.append(occupations(basis, y / nrm))
        if target is not None:
            fids.append(_fidelity(target, y))
        if store_states:
            states.append(y.copy())

    if schedule.tau == 0:
        record(0.0, psi0)
        stats = {"accepted": 0, "rejected": 0, "evaluations": 0, "max_norm_drift": 0.0}
        return SweepResult(np.array(times), np.array(occs), np.array(fids) if fids else None,
                           psi0.copy(), stats, states if store_states else None)

    def rhs(t, y):
        return -1j * hamiltonian.matvec(t, y)

    stepper = DormandPrince(rhs, 0.0, psi0, rtol=rtol, atol=atol)

    def check(st):
        nonlocal max_drift
        drift = abs(np.linalg.norm(st.y) - 1.0)
        max_drift = max(max_drift, drift)
        if drift > max_norm_drift:
            raise NormDriftError(drift, st.t, st.stats.as_dict())

    _run_checkpointed(stepper, cks, record, check)
    stats = stepper.stats.as_dict()
    stats["max_norm_drift"] = max_drift
    stats["rtol"], stats["atol"] = rtol, atol
    log.info("coherent sweep: %s", stats)
    return SweepResult(np.array(times), np.array(occs), np.array(fids) if fids else None,
                       stepper.y.copy(), stats, states if store_states else None)


class MeanFieldHamiltonian:
    """``H_kin + r(t) [H_pot + sum_m c_m (Theta^dag a + a* Theta - |a|^2)]``, ``a = <Theta>``.

    The expectation values are taken from the vector the matvec is applied
    to, normalised by its own norm, so the flow is self-consistent at every
    stage of every step.
    """

    def __init__(self, h_kin: SparseOperator, h_pot_diag: np.ndarray, thetas, coeffs,
                 schedule: SweepSchedule):
        self.h_kin = h_kin
        self.pot = np.asarray(h_pot_diag, dtype=np.float64)
        self.schedule = schedule
        self.coeffs = np.asarray(coeffs, dtype=np.float64)
        self.n_modes = len(thetas)
        self.dim = h_kin.dim
        self.stack = sp.vstack([t.matrix for t in thetas]).tocsr()
        self.stack_h = self.stack.conj().T.tocsr()
        self.last_alpha = np.zeros(self.n_modes, dtype=np.complex128)

    def alphas(self, x: np.ndarray) -> np.ndarray:
        tx = (self.stack @ x).reshape(self.n_modes, self.dim)
        return (tx @ x.conj()) / np.vdot(x, x).real

    def matvec(self, t: float, x: np.ndarray) -> np.ndarray:
        r = self.schedule(t)
        out = self.h_kin.matrix @ x
        if r == 0:
            return out
        tx = (self.stack @ x).reshape(self.n_modes, self.dim)
        alpha = (tx @ x.conj()) / np.vdot(x, x).real
        self.last_alpha = alpha
        c = self.coeffs
        weighted = (c * alpha)[:, None] * x[None, :]
        field_term = self.stack_h @ weighted.ravel()
        field_term += (c * alpha.conj()) @ tx
        field_term -= np.sum(c * np.abs(alpha) ** 2) * x
        return out + r * (self.pot * x + field_term)


def evolve_mean_field(hamiltonian: MeanFieldHamiltonian, basis: RestrictedBasis, *,
                      initial_state=None, target=None, rtol: float = DEFAULT_RTOL,
                      atol: float = DEFAULT_ATOL, checkpoints=None,
                      store_states: bool = False, residual_tol: float = 1e-10) -> SweepResult:
    """Classical-field sweep with the state renormalised after every accepted step.

    After each step the field expectations are recomputed from the
    renormalised state and compared with the ones used in the last
    evaluation; the largest difference is reported as
    ``max_self_consistency_residual`` and must stay below ``residual_tol``.
    """
    schedule = hamiltonian.schedule
    psi0 = (kinetic_ground_state(hamiltonian.h_kin) if initial_state is None
            else np.asarray(initial_state, dtype=np.complex128))
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("initial state must be normalised")
    cks = schedule.checkpoints() if checkpoints is None else np.asarray(checkpoints, float)

    times, occs, fids, states = [], [], [], []
    drift_max = 0.0
    resid_max = 0.0

    def record(t, y):
        times.append(t)
        occs.append(occupations(basis, y))
        if target is not None:
            fids.append(_fidelity(target, y))
        if store_states:
            states.append(y.copy())

    if schedule.tau == 0:
        record(0.0, psi0)
        return SweepResult(np.array(times), np.array(occs), np.array(fids) if fids else None,
                           psi0.copy(), {"accepted": 0}, states or None, "mean_field")

    def rhs(t, y):
        return -1j * hamiltonian.matvec(t, y)

    stepper = DormandPrince(rhs, 0.0, psi0, rtol=rtol, atol=atol)

    def renormalise(st):
        nonlocal drift_max, resid_max
        nrm = np.linalg.norm(st.y)
        drift_max = max(drift_max, abs(nrm - 1.0))
        used = hamiltonian.last_alpha.copy()
        st.reset(st.t, st.y / nrm)
        if schedule(st.t) != 0:
            resid = float(np.max(np.abs(hamiltonian.alphas(st.y) - used)))
            resid_max = max(resid_max, resid)
            if resid > residual_tol:
                raise RuntimeError(f"field self-consistency residual {resid:.3g} at t = {st.t:.6g}")

    _run_checkpointed(stepper, cks, record, renormalise)
    stats = stepper.stats.as_dict()
    stats.update(max_norm_drift=drift_max, max_self_consistency_residual=resid_max,
                 rtol=rtol, atol=atol)
    log.info("mean-field sweep: %s", stats)
    return SweepResult(np.array(times), np.array(occs), np.array(fids) if fids else None,
                       stepper.y.copy(), stats, states if store_states else None, "mean_field")
