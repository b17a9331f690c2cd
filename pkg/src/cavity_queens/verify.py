"""Desk-scale self checks behind ``cavity-queens verify``.

Each check returns a :class:`CheckResult`; none of them raises on a failed
comparison, only on broken input.
"""

from __future__ import annotations

import tempfile
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .cavity import (
    CavitySystem,
    ModeSetError,
    band_structure_1d,
    interaction_function,
    interaction_matrix_deep_lattice,
    read_mode_set,
    standard_comb,
    write_mode_set,
)
from .hilbert import RestrictedBasis
from .io import load_instance
from .model import build_h_kin, build_h_pr, ground_configurations
from .problem import Instance, brute_force_solve, count_attacking_pairs, interaction_matrix
from .readout import photon_flux

STRONG_PENALTY = 50.0
PIN_BONUS = 2.0


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<28} {self.detail}"


def oracle_suite() -> list[Instance]:
    """Small instances with and without exclusions and pins, for the oracle comparison."""
    return [
        Instance(3),
        Instance(4),
        Instance(5),
        Instance(4, excluded_plus=frozenset({3}), excluded_minus=frozenset({4})),
        Instance(4, pinned=frozenset({(2, 1)})),
        Instance(5, excluded_plus=frozenset({2, 3, 6, 9}), excluded_minus=frozenset({1, 2, 8, 9})),
        Instance(5, excluded_plus=frozenset({2, 3, 6, 9}), excluded_minus=frozenset({1, 2, 8, 9}),
                 pinned=frozenset({(3, 5)})),
    ]


def with_strong_penalties(inst: Instance) -> Instance:
    has_excl = bool(inst.excluded_plus or inst.excluded_minus)
    return inst.with_energies(u_q=STRONG_PENALTY, u_d=STRONG_PENALTY if has_excl else 0.0,
                              u_t=PIN_BONUS if inst.pinned else 0.0)


def final_ground_configurations(inst: Instance):
    """Configurations dominating the ground manifold of ``H_kin + H_problem``."""
    basis = RestrictedBasis(inst.n)
    h = build_h_kin(basis) + build_h_pr(basis, inst)
    quanta = [float(u) for u in (inst.u_q, inst.u_d, inst.u_t) if u > 0]
    # classical levels differ by at least the smallest energy scale in use
    return ground_configurations(basis, h, window=0.5 * min(quanta))


def oracle_agrees(inst: Instance) -> tuple[bool, str]:
    strong = with_strong_penalties(inst)
    want = sorted(c.columns for c in brute_force_solve(strong))
    got = sorted(c.columns for c in final_ground_configurations(strong))
    return got == want, f"N={inst.n}: {len(want)} oracle, {len(got)} from H"


def _timed(name, fn) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def check_oracle_small() -> CheckResult:
    def run():
        results = [oracle_agrees(inst) for inst in oracle_suite()]
        bad = [d for ok, d in results if not ok]
        return not bad, f"{len(results)} instances" + (f"; mismatched {bad}" if bad else "")
    return _timed("oracle N=3..5", run)


def check_oracle_n6() -> CheckResult:
    return _timed("oracle N=6 cross-check", lambda: oracle_agrees(load_instance("queens_n6")))


def comb_identity_error(m_per_direction: int) -> float:
    """Largest deviation of the x comb from ``0`` off the period and ``(-1)^l`` on it."""
    modes = [m for m in standard_comb(m_per_direction, m_per_direction)
             if m.direction == "x"]
    period = 2 * m_per_direction
    worst = 0.0
    for j in range(-3 * period, 3 * period + 1):
        value = interaction_function(modes, (float(j), 0.0))
        want = (-1.0) ** (j // period) if j % period == 0 else 0.0
        worst = max(worst, abs(value - want))
    return worst


def check_comb_identity() -> CheckResult:
    def run():
        worst = max(comb_identity_error(m) for m in range(2, 9))
        return worst < 1e-12, f"max error {worst:.2e} over M=2..8"
    return _timed("comb identity", run)


def queens_matrix_error(n: int = 5) -> float:
    a_tilde = interaction_matrix_deep_lattice(standard_comb(n, n), n)
    return float(np.max(np.abs(a_tilde - interaction_matrix(n))))


def check_queens_matrix() -> CheckResult:
    def run():
        err = queens_matrix_error(5)
        return err < 1e-10, f"max |A~ - A| = {err:.2e}"
    return _timed("queens matrix N=M=5", run)


def flux_law_errors(n: int = 5) -> tuple[float, int]:
    """Worst deviation from ``3N + 2L`` (units ``U_Q zeta``) over every configuration."""
    inst = Instance(n)
    system = CavitySystem.build(inst, standard_comb(n, n), depth=None)
    worst = 0.0
    for idx in range(system.basis.dim):
        c = system.basis.decode(idx)
        psi = np.zeros(system.basis.dim, dtype=np.complex128)
        psi[idx] = 1.0
        flux = photon_flux(psi, system.modes, system.thetas, 1.0).total
        worst = max(worst, abs(flux - (3 * n + 2 * count_attacking_pairs(c))))
    return worst, system.basis.dim


def check_flux_law() -> CheckResult:
    def run():
        worst, count = flux_law_errors(5)
        return worst < 1e-9, f"max deviation {worst:.2e} over {count} configurations"
    return _timed("flux law", run)


def check_tunneling() -> CheckResult:
    def run():
        j = band_structure_1d(10.0).tunneling
        return abs(j - 0.02) <= 0.002, f"J = {j:.5f} E_R at V = 10 E_R"
    return _timed("tunneling amplitude", run)


def check_mode_file_validation() -> CheckResult:
    """A comb with one strength perturbed must be rejected with a field pointer."""
    def run():
        modes = standard_comb(5, 5)
        bad = list(modes)
        bad[0] = replace(bad[0], f=bad[0].f * 1.5)
        with tempfile.TemporaryDirectory() as tmp:
            good_path, bad_path = Path(tmp) / "good.toml", Path(tmp) / "bad.toml"
            write_mode_set(good_path, modes)
            write_mode_set(bad_path, bad)
            if len(read_mode_set(good_path)) != len(modes):
                return False, "round trip lost modes"
            try:
                read_mode_set(bad_path)
            except ModeSetError as exc:
                return bool(exc.field), f"rejected at {exc.field}"
        return False, "corrupted file accepted"
    return _timed("mode-file validation", run)


def check_user_modes(path) -> CheckResult:
    """Raises :class:`ModeSetError` when the file is invalid, so callers can report it."""
    modes = read_mode_set(path)
    return CheckResult(f"mode file {Path(path).name}", True, f"{len(modes)} modes, valid")


ALL_CHECKS = (
    check_oracle_small,
    check_oracle_n6,
    check_comb_identity,
    check_queens_matrix,
    check_flux_law,
    check_tunneling,
    check_mode_file_validation,
)


def run_all(*, quick: bool = False) -> list[CheckResult]:
    checks = [c for c in ALL_CHECKS if not (quick and c is check_oracle_n6)]
    return [c() for c in checks]


def format_table(results) -> str:
    lines = [r.line() + f"  ({r.seconds:.1f} s)" for r in results]
    n_ok = sum(r.passed for r in results)
    lines.append(f"{n_ok}/{len(results)} checks passed")
    return "\n".join(lines)


__all__ = ["CheckResult", "format_table", "run_all", "oracle_suite", "oracle_agrees",
           "comb_identity_error", "queens_matrix_error", "flux_law_errors"]
