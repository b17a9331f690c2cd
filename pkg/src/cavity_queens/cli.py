"""Command line entry point: ``cavity-queens {run,verify,make-comb,oracle}``."""

from __future__ import annotations

import argparse
import logging
import math
import subprocess
import sys
import time
import warnings
from pathlib import Path

from . import __version__
from ._toml import ConfigError
from .cavity import ModeSetError, standard_comb, write_mode_set
from .cavity.lattice import ConvergenceError, WannierPhaseError
from .dynamics import NormDriftError, NotAnEigenstate, StepSizeUnderflow
from .io import SCENARIOS, RunSpec, load_instance, load_run_spec, write_json
from .model import EigensolverError
from .problem import BoardTooLarge, InvalidInstance, brute_force_solve, classical_energy
from .readout import InsufficientModesError, RankDeficient

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_RESOURCE = 4

CONFIG_ERRORS = (ConfigError, ModeSetError, InvalidInstance, InsufficientModesError)
NUMERICAL_ERRORS = (NormDriftError, StepSizeUnderflow, EigensolverError, ConvergenceError,
                    WannierPhaseError, RankDeficient, NotAnEigenstate, FloatingPointError)
RESOURCE_ERRORS = (BoardTooLarge, MemoryError)

log = logging.getLogger("cavity_queens")


def version_string() -> str:
    """Package version, plus ``git describe`` when run from a checkout."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).parent)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _spec_from_args(args) -> RunSpec:
    if args.spec:
        spec = load_run_spec(args.spec)
    else:
        if not args.instance or not args.scenario:
            raise ConfigError("give INSTANCE SCENARIO or --spec FILE", "run")
        spec = RunSpec(scenario=args.scenario, instance=args.instance)
    overrides = {
        "out": args.out, "seed": args.seed, "workers": args.workers, "n_traj": args.traj,
        "tol": args.tol, "name": args.name, "mode_file": args.modes, "tau": args.tau,
        "readout_state": args.state, "m_per_direction": args.m,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(spec, key, value)
    if args.depth is not None:
        spec.lattice_depth = None if args.depth == "deep" else float(args.depth)
    if args.ratios:
        spec.detuning_over_kappa = [float(r) for r in args.ratios.split(",")]
    spec.validate()
    return spec


def cmd_run(args) -> int:
    from .scenarios import SCENARIO_RUNNERS

    spec = _spec_from_args(args)
    outdir = Path(spec.out) / spec.run_name
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        derived = SCENARIO_RUNNERS[spec.scenario](spec, outdir)
    wall = time.perf_counter() - t0
    manifest = {
        "version": version_string(),
        "scenario": spec.scenario,
        "spec": spec.echo(),
        "wall_time_s": wall,
        "derived": derived,
        "warnings": sorted({str(w.message) for w in caught}),
    }
    write_json(outdir / "manifest.json", manifest)
    print(f"{spec.scenario}: wrote {outdir} in {wall:.1f} s")
    for key in ("final_fidelity", "decision", "ideal_min_gap", "meanfield_final_fidelity"):
        if key in derived:
            print(f"  {key} = {derived[key]}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify

    results = []
    if args.modes:
        results.append(verify.check_user_modes(args.modes))
    results.extend(verify.run_all(quick=args.quick))
    print(verify.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY_FAILED


def cmd_make_comb(args) -> int:
    if args.ratio is not None and not args.ratio > 0:
        raise ConfigError("must be positive", "--ratio")
    kappa = 0.0 if args.ratio is None or math.isinf(args.ratio) else args.detuning / args.ratio
    modes = standard_comb(args.n, args.m, detuning=args.detuning, kappa=kappa)
    out = Path(args.out or f"comb_n{args.n}_m{args.m}.toml")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_mode_set(out, modes)
    print(f"wrote {len(modes)} modes to {out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = load_instance(args.instance)
    sols = brute_force_solve(inst)
    energy = classical_energy(inst, sols[0])
    print(f"N = {inst.n}: {len(sols)} minimum-energy configuration(s), energy {energy} J")
    for c in sols:
        print("  " + " ".join(str(x) for x in c.columns))
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_json(path, {"n": inst.n, "energy": float(energy),
                          "solutions": [list(c.columns) for c in sols]})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cavity-queens",
                                description="Adiabatic N-queens on cavity-coupled atoms.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write out/<name>/")
    run.add_argument("instance", nargs="?", help="instance TOML or packaged name (paper_n5)")
    run.add_argument("scenario", nargs="?", choices=SCENARIOS)
    run.add_argument("--spec", help="run specification TOML")
    run.add_argument("--out", help="output root directory (default: out)")
    run.add_argument("--name", help="run name (default: <instance>_<scenario>)")
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--traj", type=int, help="trajectories per loss ratio")
    run.add_argument("--tol", type=float, help="readout decision tolerance")
    run.add_argument("--modes", help="mode-set TOML (default: standard comb)")
    run.add_argument("--m", type=int, help="comb modes per direction")
    run.add_argument("--depth", help="lattice depth in E_R, or 'deep'")
    run.add_argument("--tau", type=float, help="sweep time in hbar/J")
    run.add_argument("--ratios", help="comma-separated detuning/kappa list for sweep_open")
    run.add_argument("--state", help="readout state: solution, moved, superposition or 1,4,2,5,3")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run the desk-scale self checks")
    ver.add_argument("--modes", help="also validate this mode-set file")
    ver.add_argument("--quick", action="store_true", help="skip the N=6 cross-check")
    ver.set_defaults(func=cmd_verify)

    comb = sub.add_parser("make-comb", help="write the standard pump comb as a mode-set file")
    comb.add_argument("n", type=int, help="board size")
    comb.add_argument("m", type=int, help="modes per direction")
    comb.add_argument("--detuning", type=float, default=100.0)
    comb.add_argument("--ratio", type=float, help="detuning/kappa (default: lossless)")
    comb.add_argument("--out")
    comb.set_defaults(func=cmd_make_comb)

    orc = sub.add_parser("oracle", help="brute-force solve an instance")
    orc.add_argument("instance")
    orc.add_argument("--out", help="write the solutions as JSON")
    orc.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CONFIG_ERRORS as exc:
        field = getattr(exc, "field", None)
        where = f" [{field}]" if field and field not in str(exc) else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RESOURCE_ERRORS as exc:
        print(f"resource error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
