"""Instance files, run specifications and small output helpers."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ._toml import ConfigError, load_toml
from .problem import Instance, InvalidInstance

SCENARIOS = ("spectrum", "sweep_ideal", "sweep_cavity", "sweep_meanfield", "sweep_open",
             "readout", "scan")


def packaged_instances() -> list[str]:
    root = resources.files("cavity_queens") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def _resolve_instance_path(ref) -> Path:
    path = Path(ref)
    if path.exists():
        return path
    name = str(ref)
    if name.endswith(".toml"):
        name = name[:-5]
    candidate = resources.files("cavity_queens") / "data" / f"{name}.toml"
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(f"no instance file or packaged instance called {ref!r} "
                      f"(packaged: {', '.join(packaged_instances())})", "instance")


def instance_from_dict(data: dict) -> Instance:
    known = {"n", "excluded_plus", "excluded_minus", "pinned", "u_q", "u_d", "u_t"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown keys {unknown}", "instance")
    if "n" not in data:
        raise ConfigError("missing board size", "instance.n")
    try:
        return Instance(
            n=int(data["n"]),
            excluded_plus=frozenset(data.get("excluded_plus", [])),
            excluded_minus=frozenset(data.get("excluded_minus", [])),
            pinned=frozenset(tuple(p) for p in data.get("pinned", [])),
            u_q=float(data.get("u_q", 1.0)),
            u_d=float(data.get("u_d", 0.0)),
            u_t=float(data.get("u_t", 0.0)),
        )
    except (InvalidInstance, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "instance") from None


def load_instance(ref) -> Instance:
    """Load an instance from a TOML path or the name of a packaged instance."""
    return instance_from_dict(load_toml(_resolve_instance_path(ref)))


def instance_to_toml(inst: Instance) -> str:
    lines = [f"n = {inst.n}"]
    if inst.excluded_plus:
        lines.append(f"excluded_plus = {sorted(inst.excluded_plus)}")
    if inst.excluded_minus:
        lines.append(f"excluded_minus = {sorted(inst.excluded_minus)}")
    if inst.pinned:
        lines.append(f"pinned = {[list(p) for p in sorted(inst.pinned)]}")
    lines += [f"u_q = {float(inst.u_q)!r}", f"u_d = {float(inst.u_d)!r}",
              f"u_t = {float(inst.u_t)!r}"]
    return "\n".join(lines) + "\n"


@dataclass
class RunSpec:
    """Everything a scenario run needs; built from a TOML file and/or CLI flags."""

    scenario: str
    instance: str = "paper_n5"
    name: str | None = None
    out: str = "out"
    tau: float = 49.0
    n_checkpoints: int = 11
    ramp: str = "linear"
    m_per_direction: int | None = None
    mode_file: str | None = None
    lattice_depth: float | None = 10.0
    rtol: float = 1e-8
    atol: float = 1e-11
    seed: int = 0
    workers: int = 1
    n_traj: int = 256
    traj_rtol: float = 1e-6
    detuning_over_kappa: list = field(default_factory=lambda: [5, 50, 100, 200, 500, 1000])
    k_levels: int = 8
    n_times: int = 101
    refine_depth: int = 3
    scan_u_q: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 3.0, 4.0, 5.0])
    scan_u_t: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 3.0, 4.0])
    readout_state: str = "solution"
    readout_u_q: float = 5.0
    readout_ratio: float = 10.0
    tol: float = 0.05
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}",
                              "scenario")
        if not self.tau >= 0:
            raise ConfigError("must be non-negative", "schedule.tau")
        if self.n_checkpoints < 2:
            raise ConfigError("need at least two checkpoints", "schedule.n_checkpoints")
        if self.lattice_depth is not None and not self.lattice_depth > 0:
            raise ConfigError("must be positive (omit for the deep-lattice limit)",
                              "lattice.v_x")
        if self.scenario == "sweep_open":
            if self.n_traj < 2:
                raise ConfigError("need at least two trajectories for an error bar",
                                  "engine.n_traj")
            if not self.detuning_over_kappa:
                raise ConfigError("need at least one ratio", "engine.detuning_over_kappa")
            if any(not float(r) > 0 for r in self.detuning_over_kappa):
                raise ConfigError("ratios must be positive", "engine.detuning_over_kappa")
        if self.scenario == "scan" and (not self.scan_u_q or not self.scan_u_t):
            raise ConfigError("grid must be non-empty", "scan")
        if self.scenario == "spectrum" and self.k_levels < 2:
            raise ConfigError("need at least two levels", "spectrum.k_levels")
        if self.workers < 1:
            raise ConfigError("must be >= 1", "engine.workers")
        if not 0 < self.tol < 1:
            raise ConfigError("decision tolerance must lie in (0, 1)", "readout.tol")

    @property
    def run_name(self) -> str:
        return self.name or f"{Path(str(self.instance)).stem}_{self.scenario}"

    def echo(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "extra"}
        out["detuning_over_kappa"] = [_jsonable(x) for x in self.detuning_over_kappa]
        return out


_SECTIONS = {
    "schedule": {"tau": "tau", "n_checkpoints": "n_checkpoints", "ramp": "ramp"},
    "modes": {"m_per_direction": "m_per_direction", "file": "mode_file"},
    "lattice": {"v_x": "lattice_depth", "deep": None},
    "engine": {"rtol": "rtol", "atol": "atol", "seed": "seed", "workers": "workers",
               "n_traj": "n_traj", "traj_rtol": "traj_rtol",
               "detuning_over_kappa": "detuning_over_kappa"},
    "spectrum": {"k_levels": "k_levels", "n_times": "n_times", "refine_depth": "refine_depth"},
    "scan": {"u_q": "scan_u_q", "u_t": "scan_u_t"},
    "readout": {"state": "readout_state", "u_q": "readout_u_q",
                "detuning_over_kappa": "readout_ratio", "tol": "tol"},
}


def load_run_spec(path) -> RunSpec:
    """Parse a run file. Top level: ``scenario``, ``instance``, ``name``, ``out``."""
    data = load_toml(path)
    base = Path(path).parent
    top = {"scenario", "instance", "name", "out"} | set(_SECTIONS)
    unknown = sorted(set(data) - top)
    if unknown:
        raise ConfigError(f"unknown keys {unknown}", "run")
    if "scenario" not in data:
        raise ConfigError("missing", "scenario")
    spec = RunSpec(scenario=data["scenario"])
    for key in ("instance", "name", "out"):
        if key in data:
            setattr(spec, key, data[key])
    if "instance" in data and (base / data["instance"]).exists():
        spec.instance = str(base / data["instance"])
    for section, mapping in _SECTIONS.items():
        block = data.get(section, {})
        if not isinstance(block, dict):
            raise ConfigError("expected a table", section)
        for key, value in block.items():
            if key not in mapping:
                raise ConfigError(f"unknown key {key!r}", f"{section}.{key}")
            if section == "lattice" and key == "deep":
                if value:
                    spec.lattice_depth = None
                continue
            if section == "modes" and key == "file":
                value = str(base / value) if (base / value).exists() else value
            setattr(spec, mapping[key], value)
    spec.validate()
    return spec


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else "-inf"
    return x


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([f"{x:.12g}" if isinstance(x, float) else x for x in row])


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    import numpy as np

    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
