"""Ideal deep-lattice model: tunneling, queens and potential Hamiltonians, the
linear sweep ``H(t) = H_kin + ramp(t) H_pr`` and its low-lying spectrum.

Units: hbar = J = lattice spacing = 1. Energies are in J, times in hbar/J.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from . import _kernels
from .hilbert import RestrictedBasis, SparseOperator, site_diagonal, weighted_hop_operator
from .problem import Instance, brute_force_solve, diagonal_penalty, pin_bonus

log = logging.getLogger(__name__)

DENSE_MAX_DIM = 1024


class EigensolverError(RuntimeError):
    def __init__(self, message: str, time: float | None = None):
        super().__init__(message if time is None else f"{message} (t = {time:.6g})")
        self.time = time


def _linear(s):
    return s


def _smoothstep(s):
    return s * s * (3.0 - 2.0 * s)


# "smoothstep" is an experimental extension; the protocol itself is linear.
RAMPS = {"linear": _linear, "smoothstep": _smoothstep}


@dataclass(frozen=True)
class SweepSchedule:
    tau: float
    ramp: str = "linear"
    n_checkpoints: int = 11

    def __post_init__(self):
        if self.ramp not in RAMPS:
            raise ValueError(f"unknown ramp {self.ramp!r}; choose from {sorted(RAMPS)}")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.n_checkpoints < 2:
            raise ValueError("need at least two checkpoints")

    def __call__(self, t: float) -> float:
        if self.tau == 0:
            return 1.0
        s = min(max(t / self.tau, 0.0), 1.0)
        return float(RAMPS[self.ramp](s))

    def checkpoints(self) -> np.ndarray:
        return np.linspace(0.0, self.tau, self.n_checkpoints)


def build_h_kin(basis: RestrictedBasis, j_hop: float = 1.0) -> SparseOperator:
    weights = np.full((basis.n, basis.n), -j_hop)
    weights[-1, :] = 0.0
    return weighted_hop_operator(basis, weights)


def queens_diagonal(basis: RestrictedBasis, u_q: float) -> np.ndarray:
    n = basis.n
    zeros = np.zeros((n, n), dtype=np.int64)
    pairs, _, _ = _kernels.config_features(n, 0, basis.dim, zeros, zeros)
    return u_q * (3 * n + 2 * pairs.astype(np.float64))


def build_h_q(basis: RestrictedBasis, inst: Instance) -> SparseOperator:
    return SparseOperator.diagonal_operator(queens_diagonal(basis, float(inst.u_q)))


def potential_diagonal(basis: RestrictedBasis, inst: Instance) -> np.ndarray:
    table = float(inst.u_d) * diagonal_penalty(inst) - float(inst.u_t) * pin_bonus(inst)
    return site_diagonal(basis, table).astype(np.float64)


def build_h_pot(basis: RestrictedBasis, inst: Instance) -> SparseOperator:
    return SparseOperator.diagonal_operator(potential_diagonal(basis, inst))


def build_h_pr(basis: RestrictedBasis, inst: Instance) -> SparseOperator:
    diag = queens_diagonal(basis, float(inst.u_q)) + potential_diagonal(basis, inst)
    return SparseOperator.diagonal_operator(diag)


class LazySum:
    """Weighted operator sum applied term by term; never assembled unless asked."""

    def __init__(self, operators, coefficients):
        self.operators = list(operators)
        self.coefficients = [complex(c) for c in coefficients]
        self.dim = self.operators[0].dim

    def __matmul__(self, x):
        return self.matvec(x)

    def matvec(self, x):
        if len(self.operators) == 2 and self.coefficients[0] == 1:
            a, b = self.operators
            if b.is_diagonal():
                return _kernels.csr_diag_matvec(a.matrix, b.diagonal(), self.coefficients[1], x)
        out = np.zeros_like(x, dtype=np.complex128)
        for c, op in zip(self.coefficients, self.operators):
            if c != 0:
                out += c * (op.matrix @ x)
        return out

    def to_operator(self) -> SparseOperator:
        m = sum(c * op.matrix for c, op in zip(self.coefficients, self.operators))
        herm = all(op.hermitian for op in self.operators) and all(
            c.imag == 0 for c in self.coefficients)
        return SparseOperator(m, herm)


def hamiltonian_at(t: float, schedule: SweepSchedule, h_kin: SparseOperator,
                   h_pr: SparseOperator) -> LazySum:
    return LazySum([h_kin, h_pr], [1.0, schedule(t)])


class SweepHamiltonian:
    """``H(t) = H_kin + ramp(t) H_pr`` with a fused matvec for the integrators.

    ``h_pr`` may be non-Hermitian (trajectory engine adds ``-i K``).
    """

    def __init__(self, h_kin: SparseOperator, h_pr: SparseOperator, schedule: SweepSchedule):
        self.h_kin = h_kin
        self.h_pr = h_pr
        self.schedule = schedule
        self.dim = h_kin.dim
        self._pr_diag = h_pr.diagonal() if h_pr.is_diagonal() else None

    def matvec(self, t: float, x: np.ndarray) -> np.ndarray:
        r = self.schedule(t)
        if self._pr_diag is not None:
            return _kernels.csr_diag_matvec(self.h_kin.matrix, self._pr_diag, r, x)
        return self.h_kin.matrix @ x + r * (self.h_pr.matrix @ x)

    def at(self, t: float) -> LazySum:
        return hamiltonian_at(t, self.schedule, self.h_kin, self.h_pr)


def lowest_eigenpairs(matrix, k: int, *, method: str = "auto", time: float | None = None):
    """Lowest ``k`` eigenpairs of a Hermitian matrix, ascending, multiplicities kept."""
    m = matrix.matrix if isinstance(matrix, SparseOperator) else matrix
    dim = m.shape[0]
    k = min(k, dim)
    if method == "auto":
        method = "dense" if dim <= DENSE_MAX_DIM else "sparse"
    if method == "sparse" and k + 4 >= dim:
        method = "dense"
    if method == "dense":
        dense = m.toarray() if sp.issparse(m) else np.asarray(m)
        w, v = la.eigh(dense, subset_by_index=[0, k - 1])
        return w, v
    ncv = min(dim - 1, max(2 * (k + 4) + 1, 20))
    v0 = np.ones(dim, dtype=m.dtype) / np.sqrt(dim)
    try:
        w, v = sla.eigsh(m, k=k + 4, which="SA", v0=v0, ncv=ncv, tol=0)
    except sla.ArpackNoConvergence as exc:
        raise EigensolverError("Lanczos eigensolver did not converge", time) from exc
    order = np.argsort(w)[:k]
    return w[order], v[:, order]


@dataclass
class Spectrum:
    times: np.ndarray
    energies: np.ndarray  # (n_times, k_levels), ascending per row
    min_gap: float
    t_min_gap: float
    refined_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    refined_gaps: np.ndarray = field(default_factory=lambda: np.zeros(0))
    final_ground_state: np.ndarray | None = None

    @property
    def gaps(self) -> np.ndarray:
        return self.energies[:, 1] - self.energies[:, 0]

    def overlap(self, target: np.ndarray) -> float:
        return float(abs(np.vdot(target, self.final_ground_state)))


def _eig_at(args):
    t, r, h_kin, h_pr, k, method = args
    m = h_kin.matrix + r * h_pr.matrix
    w, v = lowest_eigenpairs(m, k, method=method, time=t)
    return w, v[:, 0]


def _pmap(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def spectrum_scan(schedule: SweepSchedule, h_kin: SparseOperator, h_pr: SparseOperator,
                  k_levels: int = 8, n_times: int = 101, *, refine_depth: int = 3,
                  method: str = "auto", workers: int = 1) -> Spectrum:
    """Lowest ``k_levels`` eigenvalues of ``H(t)`` on a uniform time grid.

    The coarse minimum of the ground-state gap is refined by repeated
    bisection of the neighbouring intervals (``refine_depth`` levels).
    """
    if k_levels < 2:
        raise ValueError("k_levels must be >= 2 to define a gap")
    times = np.linspace(0.0, schedule.tau, n_times)
    jobs = [(t, schedule(t), h_kin, h_pr, k_levels, method) for t in times]
    results = _pmap(_eig_at, jobs, workers)
    energies = np.array([w for w, _ in results])
    gaps = energies[:, 1] - energies[:, 0]
    i_min = int(np.argmin(gaps))
    best_t, best_gap = float(times[i_min]), float(gaps[i_min])

    ref_t, ref_g = [], []
    if refine_depth > 0 and n_times > 1:
        lo = times[max(i_min - 1, 0)]
        hi = times[min(i_min + 1, n_times - 1)]
        centre = best_t
        for _ in range(refine_depth):
            cand = [0.5 * (lo + centre), 0.5 * (centre + hi)]
            out = _pmap(_eig_at, [(t, schedule(t), h_kin, h_pr, 2, method) for t in cand], workers)
            for t, (w, _) in zip(cand, out):
                ref_t.append(t)
                ref_g.append(w[1] - w[0])
                if w[1] - w[0] < best_gap:
                    best_gap, best_t = float(w[1] - w[0]), float(t)
            half = 0.25 * (hi - lo)
            centre = best_t
            lo, hi = max(centre - half, times[0]), min(centre + half, times[-1])

    return Spectrum(times, energies, best_gap, best_t, np.array(ref_t), np.array(ref_g),
                    final_ground_state=results[-1][1])


def ground_state(op: SparseOperator, *, method: str = "auto"):
    w, v = lowest_eigenpairs(op, 1, method=method)
    return float(w[0]), v[:, 0]


def ground_configurations(basis: RestrictedBasis, op: SparseOperator, *, window: float = 1.0,
                          weight: float = 0.5, max_levels: int = 64):
    """Basis configurations carrying weight above ``weight`` in the ground manifold.

    The manifold is spanned by the eigenvectors within ``window`` of the lowest
    eigenvalue; it is grown until its top edge is resolved.
    """
    k = min(8, basis.dim)
    while True:
        w, v = lowest_eigenpairs(op, k)
        inside = w - w[0] < window
        if not inside.all() or k >= min(basis.dim, max_levels):
            break
        k = min(2 * k, basis.dim)
    vecs = v[:, inside]
    weights = np.sum(np.abs(vecs) ** 2, axis=1)
    idx = np.flatnonzero(weights > weight)
    return sorted((basis.decode(int(s)) for s in idx), key=lambda c: c.columns)


@dataclass(frozen=True)
class GapOverlapPoint:
    u_q: float
    u_t: float
    u_d: float
    min_gap: float
    overlap: float
    overlaps: tuple[float, ...]


def _scan_point(args):
    inst, tau, n_times, refine_depth, method, targets = args
    basis = RestrictedBasis(inst.n)
    h_kin = build_h_kin(basis)
    h_pr = build_h_pr(basis, inst)
    spec = spectrum_scan(SweepSchedule(tau), h_kin, h_pr, 2, n_times,
                         refine_depth=refine_depth, method=method)
    if targets is None:
        targets = [basis.encode(c) for c in brute_force_solve(inst)]
    ovl = tuple(float(abs(spec.final_ground_state[s])) for s in targets)
    return GapOverlapPoint(float(inst.u_q), float(inst.u_t), float(inst.u_d),
                           spec.min_gap, max(ovl), ovl)


def gap_overlap_scan(inst: Instance, u_q_grid, u_t_grid, *, tau: float = 49.0,
                     n_times: int = 51, refine_depth: int = 3, method: str = "auto",
                     targets=None, workers: int = 1) -> list[GapOverlapPoint]:
    """Minimal gap and final ground-state overlap over a ``(U_Q, U_T)`` grid at fixed ``U_D``.

    ``targets`` are basis indices of reference solutions; by default the
    brute-force minima of each grid point's instance are used and the largest
    overlap is reported in ``overlap``.
    """
    jobs = [(inst.with_energies(u_q=uq, u_t=ut), tau, n_times, refine_depth, method, targets)
            for uq in u_q_grid for ut in u_t_grid]
    return _pmap(_scan_point, jobs, workers)
