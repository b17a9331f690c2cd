"""Simulated cavity output: photon flux, homodyne quadratures and line-occupation inversion.

The steady-state field of mode ``m`` is ``<a_m> = eta_m / (Delta_m + i kappa_m) N <Theta_m>``.
Because each mode's phase only depends on the coordinate along its
propagation direction, ``N <Theta_m>`` is a linear combination of the
occupations of the lines perpendicular to it: columns for x modes, sum
diagonals (``i + j - 1``) for plus modes and difference diagonals
(``i - j + N``) for minus modes. Inverting that linear map recovers the line
occupations from the measured fields.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cavity.modes import DIRECTIONS, modes_by_direction
from .cavity.overlaps import OverlapTables
from .hilbert import board_size
from .problem import Instance

DEFAULT_PHASES = (0.0, math.pi / 2)
MAX_CONDITION = 1e8


class RankDeficient(ValueError):
    pass


class InsufficientModesError(ValueError):
    """Too few modes along a direction to resolve all of its lines."""


class Decision(enum.Enum):
    SOLUTION = "Solution"
    NOT_SOLUTION = "NotSolution"
    INDETERMINATE = "Indeterminate"


@dataclass
class Flux:
    """Photon flux in units of ``U_Q zeta / hbar`` (``zeta = 2 kappa / Delta``)."""

    total: float
    per_mode: np.ndarray
    absolute: float | None  # sum_m 2 kappa_m <a^dag a>, in J/hbar; None when lossless


@dataclass
class FieldRecord:
    fields: np.ndarray  # complex <a_m>, one per mode
    phases: tuple
    quadratures: np.ndarray  # (n_phases, n_modes), Re(<a_m> e^{-i phi})
    directions: tuple
    prefactors: np.ndarray  # eta / (Delta + i kappa) per mode
    include_tunneling: bool = True

    def complex_from_quadratures(self) -> np.ndarray:
        """Field rebuilt from the phase-0 and phase-pi/2 quadratures."""
        try:
            i0 = self.phases.index(0.0)
            i90 = next(i for i, p in enumerate(self.phases) if abs(p - math.pi / 2) < 1e-12)
        except (ValueError, StopIteration):
            raise ValueError("need quadratures at phases 0 and pi/2") from None
        return self.quadratures[i0] + 1j * self.quadratures[i90]

    def to_dict(self) -> dict:
        return {
            "directions": list(self.directions),
            "field_re": self.fields.real.tolist(),
            "field_im": self.fields.imag.tolist(),
            "phases": list(self.phases),
            "quadratures": self.quadratures.tolist(),
            "include_tunneling": self.include_tunneling,
        }

    def to_csv(self, path, modes=None) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["mode", "direction", "k0", "field_re", "field_im"]
                        + [f"quadrature_phi{p:.6f}" for p in self.phases])
            for m, a in enumerate(self.fields):
                k0 = "" if modes is None else f"{modes[m].k0:.12g}"
                wr.writerow([m, self.directions[m], k0, f"{a.real:.12g}", f"{a.imag:.12g}"]
                            + [f"{q:.12g}" for q in self.quadratures[:, m]])


@dataclass
class LineOccupations:
    columns: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    residuals: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"columns": self.columns.tolist(), "plus": self.plus.tolist(),
                "minus": self.minus.tolist(), "residuals": self.residuals}

    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    def max_error(self, other: LineOccupations) -> float:
        return float(max(np.abs(self.columns - other.columns).max(),
                         np.abs(self.plus - other.plus).max(),
                         np.abs(self.minus - other.minus).max()))


def exact_line_occupations(n: int, site_occ: np.ndarray) -> LineOccupations:
    """Line sums of a site-occupation table ``occ[i-1, j-1]``."""
    occ = np.asarray(site_occ, dtype=float)
    i, j = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), indexing="ij")
    cols = occ.sum(axis=1)
    plus = np.bincount((i + j - 2).ravel(), weights=occ.ravel(), minlength=2 * n - 1)
    minus = np.bincount((i - j + n - 1).ravel(), weights=occ.ravel(), minlength=2 * n - 1)
    return LineOccupations(cols, plus, minus)


def field_prefactors(modes, u_q: float) -> np.ndarray:
    return np.array([m.eta(u_q) / (m.detuning + 1j * m.kappa) for m in modes])


def _theta_expectations(state, order_ops, include_tunneling: bool) -> np.ndarray:
    state = np.asarray(state, dtype=np.complex128)
    norm2 = np.vdot(state, state).real
    out = np.empty(len(order_ops), dtype=np.complex128)
    prob = np.abs(state) ** 2
    for m, op in enumerate(order_ops):
        if include_tunneling:
            out[m] = np.vdot(state, op.matrix @ state) / norm2
        else:
            out[m] = np.dot(prob, op.diagonal()) / norm2
    return out


def photon_flux(state, modes, order_ops, u_q: float) -> Flux:
    """Total output flux ``sum_m 2 kappa_m <a_m^dag a_m>``.

    ``per_mode`` and ``total`` are in units of ``U_Q zeta_m`` (each mode in its
    own ``zeta_m = 2 kappa_m / Delta_m``), i.e. ``f_m N^2 <Theta_m^dag Theta_m>``.
    For a uniform ``zeta`` the total equals ``<H_cav> / U_Q``.
    """
    state = np.asarray(state, dtype=np.complex128)
    n_dim = state.size
    n = board_size(n_dim)
    norm2 = np.vdot(state, state).real
    per = np.empty(len(modes))
    for m, (mode, op) in enumerate(zip(modes, order_ops)):
        t_psi = op.matrix @ state
        per[m] = mode.f * n**2 * np.vdot(t_psi, t_psi).real / norm2
    absolute = None
    if all(m.kappa > 0 for m in modes):
        absolute = float(sum(2 * m.kappa / m.detuning * u_q * p for m, p in zip(modes, per)))
    return Flux(float(per.sum()), per, absolute)


def relative_flux_excess(n_attacking: int, n: int) -> float:
    """``L * 2 U_Q zeta / (3 N U_Q zeta)``; shrinks with N, so flux alone discriminates poorly."""
    return 2.0 * n_attacking / (3.0 * n)


def quadratures(state, modes, order_ops, u_q: float, phases=DEFAULT_PHASES, *,
                include_tunneling: bool = True, noise_std: float = 0.0,
                rng: np.random.Generator | None = None) -> FieldRecord:
    """Mode fields and their homodyne quadratures ``Re(<a_m> e^{-i phi})``.

    With ``include_tunneling=False`` only the density part of ``Theta_m``
    contributes, as assumed by the inversion. ``noise_std`` adds independent
    Gaussian noise to every quadrature sample.
    """
    n = board_size(np.asarray(state).size)
    theta = _theta_expectations(state, order_ops, include_tunneling)
    pref = field_prefactors(modes, u_q)
    fields = pref * n * theta
    phases = tuple(float(p) for p in phases)
    quad = np.array([(fields * np.exp(-1j * p)).real for p in phases])
    if noise_std > 0:
        rng = np.random.default_rng() if rng is None else rng
        quad = quad + rng.normal(0.0, noise_std, size=quad.shape)
    return FieldRecord(fields, phases, quad, tuple(m.direction for m in modes), pref,
                       include_tunneling)


def line_index(direction: str, i: int, j: int, n: int) -> int:
    """0-based index of the line through site ``(i, j)`` perpendicular to ``direction``."""
    if direction == "x":
        return i - 1
    if direction == "plus":
        return i + j - 2
    return i - j + n - 1


def design_matrix(tables: OverlapTables, modes, direction: str) -> tuple[np.ndarray, list[int]]:
    """``G[m, line]`` with ``N <Theta_m> = sum_line G[m, line] N_line`` for one direction.

    Entries are the overlap ``v`` averaged over the sites of each line; for
    the overlap models used here ``v`` is constant along a line.
    """
    n = tables.n
    idx = modes_by_direction(modes)[direction]
    n_lines = n if direction == "x" else 2 * n - 1
    g = np.zeros((len(idx), n_lines), dtype=np.complex128)
    counts = np.zeros(n_lines)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            line = line_index(direction, i, j, n)
            g[:, line] += tables.v[idx, i - 1, j - 1]
            counts[line] += 1
    return g / counts[None, :], idx


def reconstruct_line_occupations(record: FieldRecord, modes, tables: OverlapTables, *,
                                 method: str = "lstsq") -> LineOccupations:
    """Invert the mode fields into column and diagonal occupations.

    ``method="lstsq"`` solves the real least-squares problem built from the
    two quadratures; ``method="dft"`` applies the discrete Fourier inversion
    ``N_line = Re[(1/M) sum_m (N <Theta_m> / F_m) e^{-i pi k_m d}]`` with
    ``F_m`` the smoothing factor of the design matrix. The DFT is exact for
    point-like atoms and an approximation otherwise.
    """
    if method not in ("lstsq", "dft"):
        raise ValueError(f"unknown method {method!r}")
    n = tables.n
    y_all = record.complex_from_quadratures() / record.prefactors
    out, resid = {}, {}
    for d in DIRECTIONS:
        g, idx = design_matrix(tables, modes, d)
        n_lines = g.shape[1]
        if len(idx) < n_lines:
            raise InsufficientModesError(
                f"{len(idx)} '{d}' modes cannot resolve {n_lines} lines; need at least {n_lines}")
        y = y_all[idx]
        if method == "lstsq":
            a = np.vstack([g.real, g.imag])
            b = np.concatenate([y.real, y.imag])
            cond = np.linalg.cond(a)
            if not cond < MAX_CONDITION:
                raise RankDeficient(f"'{d}' design matrix has condition number {cond:.3g}")
            sol, *_ = np.linalg.lstsq(a, b, rcond=None)
            r = a @ sol - b
        else:
            offsets = np.arange(n_lines) if d != "minus" else np.arange(n_lines) - (n - 1)
            ks = np.array([modes[m].k0 for m in idx])
            # the phase of line 0 sits at x + y = 0 (x and plus) or x - y = -(N - 1) (minus)
            smooth = np.abs(g[:, 0])
            phase = np.exp(-1j * np.pi * np.outer(ks, offsets))
            sol = ((y / smooth)[:, None] * phase).mean(axis=0).real
            r = g @ sol - y
            r = np.concatenate([r.real, r.imag])
        out[d] = sol
        resid[d] = float(np.linalg.norm(r) / math.sqrt(r.size))
    return LineOccupations(out["x"], out["plus"], out["minus"], resid)


def decide_solution(occ: LineOccupations, tol: float = 0.05, instance: Instance | None = None,
                    *, noise_floor: float = 1e-6) -> Decision:
    """Apply the field criterion: every column holds one atom, no diagonal holds more than one.

    With ``instance`` the excluded diagonals must also be empty. A residual
    above ``noise_floor`` means the fields are not explained by any set of
    line occupations and yields ``INDETERMINATE``; so does a failed check whose
    occupations are not close to integers (a superposition or mixture).
    """
    if occ.max_residual() > noise_floor:
        return Decision.INDETERMINATE
    ok = bool(np.all(np.abs(occ.columns - 1.0) <= tol)
              and np.all(occ.plus <= 1.0 + tol) and np.all(occ.minus <= 1.0 + tol))
    if ok and instance is not None:
        plus_bad = [occ.plus[d - 1] for d in instance.excluded_plus]
        minus_bad = [occ.minus[d - 1] for d in instance.excluded_minus]
        ok = all(v <= tol for v in plus_bad + minus_bad)
    if ok:
        return Decision.SOLUTION
    values = np.concatenate([occ.columns, occ.plus, occ.minus])
    if np.any(np.abs(values - np.round(values)) > tol):
        return Decision.INDETERMINATE
    return Decision.NOT_SOLUTION


def classical_check(columns, instance: Instance | None = None) -> bool:
    """Reference decision on a basis configuration: no attacks and no excluded diagonal used."""
    from .problem import count_attacking_pairs

    cols = tuple(columns)
    if count_attacking_pairs(cols) != 0:
        return False
    if instance is None:
        return True
    n = len(cols)
    for j, i in enumerate(cols, start=1):
        if i + j - 1 in instance.excluded_plus or i - j + n in instance.excluded_minus:
            return False
    return True


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


__all__ = [
    "Decision",
    "FieldRecord",
    "Flux",
    "InsufficientModesError",
    "LineOccupations",
    "RankDeficient",
    "classical_check",
    "decide_solution",
    "design_matrix",
    "exact_line_occupations",
    "photon_flux",
    "quadratures",
    "reconstruct_line_occupations",
]
