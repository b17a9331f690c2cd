"""Monte-Carlo wave-function trajectories for photon loss from the cavity modes.

Between jumps the unnormalised state follows ``i dpsi/dt = H_eff(t) psi`` with
the non-Hermitian ``H_eff`` from :meth:`CavitySystem.trajectory_hamiltonian`.
A jump happens when ``|psi|^2`` falls to a threshold drawn uniformly from
``(0, 1)``; the crossing time is bisected on the dense interpolant, the state
is re-integrated exactly up to it and a channel is picked with probability
proportional to ``rate_m(t) |Theta_m psi|^2``.

Random streams are counter based: trajectory ``k`` of an ensemble seeded with
``seed`` always uses ``Philox(key=[seed, k])``, so results do not depend on the
number of workers or on the order in which trajectories run.
"""

from __future__ import annotations

import csv
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..hilbert import RestrictedBasis, occupations
from ..model import SweepHamiltonian
from .coherent import kinetic_ground_state
from .integrate import DormandPrince

log = logging.getLogger(__name__)

DEFAULT_N_TRAJ = 256
DEFAULT_TRAJ_RTOL = 1e-6
DEFAULT_TRAJ_ATOL = 1e-9
JUMP_TIME_RESOLUTION = 1e-10


class JumpLocationError(RuntimeError):
    pass


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[int(seed), int(index)]))


@dataclass
class TrajectoryRecord:
    index: int
    fidelity_sq: np.ndarray  # |<target|psi>|^2 at each checkpoint
    occupations: np.ndarray
    jump_times: list
    jump_modes: list
    steps: int


@dataclass
class TrajectoryEnsemble:
    times: np.ndarray
    seed: int
    n_traj: int
    occupations: np.ndarray  # ensemble mean, (n_checkpoints, N, N)
    fidelity: np.ndarray | None  # sqrt(mean |<target|psi_k>|^2)
    fidelity_se: np.ndarray | None
    jump_counts: np.ndarray
    failures: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)

    @property
    def final_fidelity(self) -> float | None:
        return None if self.fidelity is None else float(self.fidelity[-1])

    @property
    def final_fidelity_se(self) -> float | None:
        return None if self.fidelity_se is None else float(self.fidelity_se[-1])

    def summary(self) -> dict:
        return {
            "engine": "trajectories",
            "n_traj": self.n_traj,
            "n_failed": len(self.failures),
            "seed": self.seed,
            "final_fidelity": self.final_fidelity,
            "final_fidelity_se": self.final_fidelity_se,
            "mean_jumps": float(np.mean(self.jump_counts)) if self.jump_counts.size else 0.0,
            "max_jumps": int(np.max(self.jump_counts)) if self.jump_counts.size else 0,
            "failures": self.failures,
            **self.settings,
        }

    def to_csv(self, path) -> None:
        n = self.occupations.shape[1]
        header = ["time", "fidelity", "fidelity_se"] + [
            f"n_{i}_{j}" for j in range(1, n + 1) for i in range(1, n + 1)]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for a, t in enumerate(self.times):
                fid = "" if self.fidelity is None else f"{self.fidelity[a]:.12g}"
                se = "" if self.fidelity_se is None else f"{self.fidelity_se[a]:.12g}"
                occ = self.occupations[a].T.ravel()
                wr.writerow([f"{t:.12g}", fid, se] + [f"{x:.12g}" for x in occ])

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _locate_crossing(stepper: DormandPrince, threshold: float) -> float:
    lo, hi = stepper.t_old, stepper.t
    f_lo = np.vdot(stepper.y_old, stepper.y_old).real - threshold
    if f_lo < 0:
        raise JumpLocationError(f"norm already below threshold at t = {lo:.6g}")
    while hi - lo > JUMP_TIME_RESOLUTION:
        mid = 0.5 * (lo + hi)
        y = stepper.dense(mid)
        if np.vdot(y, y).real > threshold:
            lo = mid
        else:
            hi = mid
    return hi


def run_trajectory(index: int, seed: int, hamiltonian: SweepHamiltonian, channels,
                   basis: RestrictedBasis, psi0: np.ndarray, checkpoints: np.ndarray,
                   target=None, rtol: float = DEFAULT_TRAJ_RTOL,
                   atol: float = DEFAULT_TRAJ_ATOL) -> TrajectoryRecord:
    """Evolve a single quantum-jump trajectory and record it at the checkpoints."""
    rng = trajectory_rng(seed, index)
    schedule = hamiltonian.schedule
    thetas = [ch.theta.matrix for ch in channels]
    rates = np.array([ch.rate for ch in channels])

    def rhs(t, y):
        return -1j * hamiltonian.matvec(t, y)

    stepper = DormandPrince(rhs, float(checkpoints[0]), psi0, rtol=rtol, atol=atol)
    threshold = rng.random() if channels else -1.0
    fids, occs, jump_t, jump_m = [], [], [], []

    def record(y):
        y = y / np.linalg.norm(y)
        occs.append(occupations(basis, y, atol=1e-8))
        if target is not None:
            fids.append(abs(np.vdot(target, y)) ** 2)

    record(stepper.y)
    for t_ck in checkpoints[1:]:
        while stepper.t < t_ck:
            stepper.step(t_ck)
            if np.vdot(stepper.y, stepper.y).real >= threshold:
                continue
            t_jump = _locate_crossing(stepper, threshold)
            t_start, y_start = stepper.t_old, stepper.y_old
            stepper.reset(t_start, y_start)
            while stepper.t < t_jump:
                stepper.step(t_jump)
            psi = stepper.y
            cpsi = [th @ psi for th in thetas]
            weights = schedule(stepper.t) * rates * np.array(
                [np.vdot(c, c).real for c in cpsi])
            total = weights.sum()
            if not total > 0:
                raise JumpLocationError(f"no jump channel is active at t = {stepper.t:.6g}")
            m = int(np.searchsorted(np.cumsum(weights) / total, rng.random(), side="right"))
            m = min(m, len(cpsi) - 1)
            new = cpsi[m] / np.linalg.norm(cpsi[m])
            stepper.reset(stepper.t, new)
            jump_t.append(float(stepper.t))
            jump_m.append(channels[m].mode)
            threshold = rng.random()
        record(stepper.y)
    return TrajectoryRecord(index, np.array(fids), np.array(occs), jump_t, jump_m,
                            stepper.stats.accepted)


_CTX: dict = {}


def _init_worker(ctx):
    _CTX.clear()
    _CTX.update(ctx)


def _safe_run(index):
    ctx = _CTX
    try:
        return run_trajectory(index, ctx["seed"], ctx["hamiltonian"], ctx["channels"],
                              ctx["basis"], ctx["psi0"], ctx["checkpoints"], ctx["target"],
                              ctx["rtol"], ctx["atol"])
    except Exception as exc:  # isolate the failure, keep the ensemble going
        log.warning("trajectory %d failed: %s", index, exc)
        return {"index": index, "error": f"{type(exc).__name__}: {exc}",
                "traceback": traceback.format_exc(limit=3)}


def evolve_trajectories(hamiltonian: SweepHamiltonian, channels, basis: RestrictedBasis, *,
                        n_traj: int = DEFAULT_N_TRAJ, seed: int = 0, initial_state=None,
                        target=None, checkpoints=None, rtol: float = DEFAULT_TRAJ_RTOL,
                        atol: float = DEFAULT_TRAJ_ATOL, workers: int = 1,
                        indices=None) -> TrajectoryEnsemble:
    """Ensemble of quantum-jump trajectories.

    ``hamiltonian`` must already contain the anti-Hermitian loss term that
    matches ``channels``. The fidelity estimate is ``sqrt(mean_k p_k)`` with
    ``p_k = |<target|psi_k>|^2``; its standard error is propagated from the
    standard error of the mean of ``p_k``. Trajectory ``k`` is identified by
    its position in ``indices`` (default ``range(n_traj)``).
    """
    schedule = hamiltonian.schedule
    psi0 = (kinetic_ground_state(hamiltonian.h_kin) if initial_state is None
            else np.asarray(initial_state, dtype=np.complex128))
    cks = schedule.checkpoints() if checkpoints is None else np.asarray(checkpoints, float)
    idx = list(range(n_traj)) if indices is None else [int(i) for i in indices]
    ctx = dict(seed=seed, hamiltonian=hamiltonian, channels=list(channels), basis=basis,
               psi0=psi0, checkpoints=cks, target=target, rtol=rtol, atol=atol)
    if workers <= 1:
        _init_worker(ctx)
        results = [_safe_run(i) for i in idx]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(ctx,)) as pool:
            results = list(pool.map(_safe_run, idx, chunksize=max(1, len(idx) // (4 * workers))))

    good = [r for r in results if isinstance(r, TrajectoryRecord)]
    failures = [r for r in results if not isinstance(r, TrajectoryRecord)]
    if not good:
        raise RuntimeError(f"all {len(idx)} trajectories failed; first error: "
                           f"{failures[0]['error'] if failures else 'none'}")
    occ = np.mean([r.occupations for r in good], axis=0)
    fid = se = None
    if target is not None:
        p = np.array([r.fidelity_sq for r in good])
        mean_p = p.mean(axis=0)
        se_p = p.std(axis=0, ddof=1) / np.sqrt(len(good)) if len(good) > 1 else np.zeros_like(mean_p)
        fid = np.sqrt(mean_p)
        with np.errstate(divide="ignore", invalid="ignore"):
            se = np.where(fid > 0, se_p / (2.0 * fid), 0.0)
    settings = {"rtol": rtol, "atol": atol, "n_channels": len(channels),
                "rng": "Philox(key=[seed, index])", "workers": workers}
    return TrajectoryEnsemble(cks, seed, len(good), occ, fid, se,
                              np.array([len(r.jump_times) for r in good]), failures, settings)
