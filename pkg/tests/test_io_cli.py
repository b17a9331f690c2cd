from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest

from cavity_queens import cli
from cavity_queens._toml import ConfigError
from cavity_queens.cavity import read_mode_set, standard_comb
from cavity_queens.dynamics import NormDriftError
from cavity_queens.io import (
    RunSpec,
    instance_from_dict,
    instance_to_toml,
    load_instance,
    load_run_spec,
    packaged_instances,
)
from cavity_queens.problem import Instance, paper_instance

SMALL = """\
n = 3
u_q = 1.0
"""


@pytest.fixture
def small_instance(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL)
    return path


class TestInstances:
    def test_packaged(self):
        assert {"paper_n5", "queens_n5", "queens_n6"} <= set(packaged_instances())
        assert load_instance("paper_n5") == paper_instance()

    def test_round_trip(self, tmp_path):
        inst = paper_instance()
        path = tmp_path / "p.toml"
        path.write_text(instance_to_toml(inst))
        assert load_instance(path) == inst

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            instance_from_dict({"n": 3, "colour": "red"})

    def test_invalid_instance_is_config_error(self):
        with pytest.raises(ConfigError):
            instance_from_dict({"n": 5, "excluded_plus": [7], "pinned": [[3, 5]]})

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="no instance file"):
            load_instance("does_not_exist")


class TestRunSpec:
    def test_sections(self, tmp_path, small_instance):
        path = tmp_path / "run.toml"
        path.write_text(f"""\
scenario = "sweep_open"
instance = "{small_instance.name}"
[schedule]
tau = 3.0
[lattice]
deep = true
[engine]
n_traj = 4
detuning_over_kappa = [5.0, 1000.0]
""")
        spec = load_run_spec(path)
        assert spec.tau == 3.0 and spec.lattice_depth is None
        assert spec.detuning_over_kappa == [5.0, 1000.0]
        assert spec.instance == str(small_instance)

    def test_unknown_key_points_at_field(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text('scenario = "spectrum"\n[schedule]\ntua = 3.0\n')
        with pytest.raises(ConfigError) as err:
            load_run_spec(path)
        assert err.value.field == "schedule.tua"

    @pytest.mark.parametrize("change, field", [
        ({"scenario": "bogus"}, "scenario"),
        ({"tau": -1.0}, "schedule.tau"),
        ({"tol": 2.0}, "readout.tol"),
        ({"lattice_depth": 0.0}, "lattice.v_x"),
        ({"scenario": "sweep_open", "n_traj": 1}, "engine.n_traj"),
    ])
    def test_validation(self, change, field):
        spec = RunSpec(scenario="spectrum")
        for k, v in change.items():
            setattr(spec, k, v)
        with pytest.raises(ConfigError) as err:
            spec.validate()
        assert err.value.field == field


class TestCli:
    def test_oracle(self, tmp_path, capsys):
        out = tmp_path / "sol.json"
        assert cli.main(["oracle", "paper_n5", "--out", str(out)]) == cli.EXIT_OK
        assert "1 4 2 5 3" in capsys.readouterr().out
        assert json.loads(out.read_text())["solutions"] == [[1, 4, 2, 5, 3]]

    def test_make_comb(self, tmp_path):
        out = tmp_path / "comb.toml"
        assert cli.main(["make-comb", "5", "9", "--ratio", "10", "--out", str(out)]) == 0
        modes = read_mode_set(out)
        assert len(modes) == 27 and modes[0].detuning_over_kappa == pytest.approx(10.0)
        assert [m.k0 for m in modes] == [m.k0 for m in standard_comb(5, 9)]

    def test_verify_rejects_bad_mode_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text('[[mode]]\ndirection = "x"\nk0 = 1.5\nf = 0.4\n')
        assert cli.main(["verify", "--quick", "--modes", str(bad)]) == cli.EXIT_CONFIG
        assert "mode[0" in capsys.readouterr().err

    def test_config_error_exit(self, tmp_path, capsys):
        code = cli.main(["run", "paper_n5", "spectrum", "--tol", "3", "--out", str(tmp_path)])
        assert code == cli.EXIT_CONFIG
        assert "readout.tol" in capsys.readouterr().err

    def test_missing_positionals(self, tmp_path):
        assert cli.main(["run", "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_resource_exit(self, tmp_path):
        path = tmp_path / "big.toml"
        path.write_text(instance_to_toml(Instance(9)))
        assert cli.main(["oracle", str(path)]) == cli.EXIT_RESOURCE

    def test_numerical_exit(self, tmp_path, small_instance, monkeypatch):
        from cavity_queens import scenarios

        def broken(spec, outdir):
            raise NormDriftError(1e-3, 0.5, {"accepted": 3})

        monkeypatch.setitem(scenarios.SCENARIO_RUNNERS, "sweep_ideal", broken)
        code = cli.main(["run", str(small_instance), "sweep_ideal", "--out", str(tmp_path)])
        assert code == cli.EXIT_NUMERICAL

    def test_run_writes_manifest(self, tmp_path, small_instance):
        code = cli.main(["run", str(small_instance), "sweep_ideal", "--tau", "2",
                         "--out", str(tmp_path), "--name", "a"])
        assert code == 0
        manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert manifest["scenario"] == "sweep_ideal"
        assert manifest["spec"]["tau"] == 2.0
        assert "version" in manifest and "wall_time_s" in manifest
        assert (tmp_path / "a" / "occupations.csv").exists()

    def test_byte_identical_outputs(self, tmp_path, small_instance):
        for name in ("a", "b"):
            assert cli.main(["run", str(small_instance), "sweep_open", "--tau", "2",
                             "--traj", "4", "--ratios", "2,50", "--depth", "deep",
                             "--seed", "9", "--out", str(tmp_path), "--name", name]) == 0
        for f in ("fidelity_vs_loss.csv", "trajectories_ratio_2.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_readout_run(self, tmp_path):
        code = cli.main(["run", "paper_n5", "readout", "--state", "moved", "--depth", "deep",
                         "--out", str(tmp_path), "--name", "r"])
        assert code == 0
        manifest = json.loads((tmp_path / "r" / "manifest.json").read_text())
        assert manifest["derived"]["decision"] == "NotSolution"
        assert any("2L/(3N)" in n for n in manifest["derived"]["notes"])

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
        assert "cavity-queens" in capsys.readouterr().out


def test_console_script_entry_point():
    env = dict(os.environ)
    out = subprocess.run([sys.executable, "-m", "cavity_queens.cli", "oracle", "queens_n5"],
                         capture_output=True, text=True, env=env, timeout=120)
    assert out.returncode == 0
    assert "10 minimum-energy configuration(s)" in out.stdout
