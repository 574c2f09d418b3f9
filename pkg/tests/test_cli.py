"""CLI tests: schema gate, exit codes, output files, determinism.

Configs are tiny on purpose: every command here finishes in well under a
second so the whole module stays interactive.
"""
import json
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from queuelab.cli import SchemaError, load_config, main, validate_config
from queuelab.dists import ArrivalSpec, make_service_dist
from queuelab.fluid import FluidInit, solve_fluid
from queuelab.microsim import SimConfig, simulate

# exp-service renewal mass is exactly 1 + T; dt=1e-3 quadrature stays inside
RENEWAL_TOL = 0.01


def write_cfg(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def sim_cfg(seeds=2, seed=7, N=10, T=1.0):
    return {"schema_version": 1, "kind": "sim",
            "model": {"N": N, "service": "exponential",
                      "arrival": {"kind": "renewal", "lambda_bar": 1.0}},
            "numerics": {"T": T},
            "run": {"seeds": seeds, "seed": seed}}


def limit_cfg(paths=2, seed=3):
    return {"schema_version": 1, "kind": "limit",
            "model": {"service": "exponential",
                      "arrival": {"kind": "renewal", "lambda_bar": 1.0,
                                  "beta": 0.5},
                      "fluid": {"Ebar": 1.0, "x0": 1.0,
                                "nu0": {"invariant": 1.0}}},
            "numerics": {"T": 0.5, "dt": 0.01, "dx": 0.05},
            "run": {"paths": paths, "seed": seed}}


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    cols = {h: [] for h in header}
    for line in lines[1:]:
        for h, v in zip(header, line.split(",")):
            cols[h].append(v)
    return header, cols


class TestConfigValidation:
    def test_valid_config_round_trips(self):
        cfg = validate_config(sim_cfg())
        assert cfg.kind == "sim"
        assert cfg.model["N"] == 10
        assert cfg.raw["numerics"] == {"T": 1.0}

    def test_missing_block_names_it(self):
        data = sim_cfg()
        del data["numerics"]
        with pytest.raises(SchemaError, match="numerics"):
            validate_config(data)

    def test_nested_field_path_in_message(self):
        data = sim_cfg()
        data["model"]["N"] = -3
        with pytest.raises(SchemaError, match=r"model\.N"):
            validate_config(data)

    def test_run_block_unknown_key_rejected(self):
        data = sim_cfg()
        data["run"]["bogus"] = 1
        with pytest.raises(SchemaError, match=r"run.*bogus"):
            validate_config(data)

    def test_wrong_schema_version(self):
        data = sim_cfg()
        data["schema_version"] = 2
        with pytest.raises(SchemaError, match="schema_version"):
            validate_config(data)

    def test_non_object_root(self):
        with pytest.raises(SchemaError, match=r"\(root\)"):
            validate_config([1, 2, 3])

    def test_malformed_json_file(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        with pytest.raises(SchemaError, match="not valid JSON"):
            load_config(str(p))

    def test_unknown_kind(self):
        data = sim_cfg()
        data["kind"] = "banana"
        with pytest.raises(SchemaError, match="kind"):
            validate_config(data)


class TestSimRun:
    def test_outputs_and_parity_with_library(self, tmp_path):
        cfgp = write_cfg(tmp_path, sim_cfg())
        out = tmp_path / "o"
        res = CliRunner().invoke(main, ["sim", "run", "--config", cfgp,
                                        "--out", str(out)])
        assert res.exit_code == 0, res.output
        names = sorted(p.name for p in out.iterdir())
        assert names == ["manifest.json", "sim_r0000.csv", "sim_r0001.csv",
                         "summary.json"]
        header, cols = read_csv(out / "sim_r0000.csv")
        assert header == ["time", "kind", "E", "D", "K", "X", "in_service"]
        path = simulate(SimConfig(
            N=10, arrival=ArrivalSpec("renewal", 1.0),
            service=make_service_dist("exponential"), T=1.0, seed=7,
            replicate=0))
        assert [int(v) for v in cols["E"]] == path.E.tolist(), (
            "CSV arrival counter must match the library path for the same "
            "seed and replicate")
        assert [int(v) for v in cols["in_service"]] == path.B.tolist()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["identities_clean"] is True
        assert summary["replicates"] == 2

    def test_seed_flag_changes_data(self, tmp_path):
        cfgp = write_cfg(tmp_path, sim_cfg(seeds=1))
        r = CliRunner()
        r.invoke(main, ["sim", "run", "--config", cfgp,
                        "--out", str(tmp_path / "a")])
        r.invoke(main, ["sim", "run", "--config", cfgp, "--seed", "99",
                        "--out", str(tmp_path / "b")])
        a = (tmp_path / "a" / "sim_r0000.csv").read_bytes()
        b = (tmp_path / "b" / "sim_r0000.csv").read_bytes()
        assert a != b, "different base seed must change the event stream"

    def test_byte_determinism_and_jobs(self, tmp_path):
        cfgp = write_cfg(tmp_path, sim_cfg(seeds=3))
        r = CliRunner()
        r.invoke(main, ["sim", "run", "--config", cfgp,
                        "--out", str(tmp_path / "a")])
        r.invoke(main, ["sim", "run", "--config", cfgp,
                        "--out", str(tmp_path / "b"), "--jobs", "2"])
        for name in ["sim_r0000.csv", "sim_r0001.csv", "sim_r0002.csv",
                     "summary.json"]:
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b, (
                f"{name} differs between serial and --jobs 2 runs; data "
                f"outputs must be byte-for-byte reproducible")

    def test_seeds_flag_overrides_count(self, tmp_path):
        cfgp = write_cfg(tmp_path, sim_cfg(seeds=1))
        out = tmp_path / "o"
        CliRunner().invoke(main, ["sim", "run", "--config", cfgp,
                                  "--seeds", "3", "--out", str(out)])
        csvs = sorted(p.name for p in out.iterdir() if p.suffix == ".csv")
        assert csvs == ["sim_r0000.csv", "sim_r0001.csv", "sim_r0002.csv"]


class TestFluidSolve:
    def test_csv_matches_library_solution(self, tmp_path):
        cfgp = write_cfg(tmp_path, {
            "schema_version": 1, "kind": "fluid",
            "model": {"service": "exponential", "Ebar": 1.0, "x0": 1.0,
                      "nu0": {"invariant": 1.0}},
            "numerics": {"T": 1.0, "dt": 1e-3}})
        out = tmp_path / "f"
        res = CliRunner().invoke(main, ["fluid", "solve", "--config", cfgp,
                                        "--out", str(out)])
        assert res.exit_code == 0, res.output
        header, cols = read_csv(out / "fluid.csv")
        assert header == ["t", "Xbar", "Kbar", "mass", "hazard_load"]
        ref = solve_fluid(make_service_dist("exponential"),
                          FluidInit(Ebar=1.0, x0=1.0,
                                    nu0_density={"invariant": 1.0}),
                          1.0, 1e-3)
        got = np.array([float(v) for v in cols["Xbar"]])
        assert np.array_equal(got, ref.Xbar), (
            "fluid CSV must reproduce the library solution exactly; repr "
            "round-trips floats")
        summary = json.loads((out / "summary.json").read_text())
        assert summary["regime"] == "critical"


class TestLimitRun:
    def test_outputs_and_summary(self, tmp_path):
        cfgp = write_cfg(tmp_path, limit_cfg())
        out = tmp_path / "l"
        res = CliRunner().invoke(main, ["limit", "run", "--config", cfgp,
                                        "--out", str(out)])
        assert res.exit_code == 0, res.output
        header, _ = read_csv(out / "limit_p0000.csv")
        assert header == ["t", "Ehat", "Khat", "Xhat", "vhat", "nu_exp_decay",
                          "nu_hazard", "nu_one", "nu_survival"]
        summary = json.loads((out / "summary.json").read_text())
        assert summary["paths"] == 2
        assert summary["worst_rep_hatx_residual"] < 1e-10, (
            "representation residual is a machine-precision identity; "
            f"got {summary['worst_rep_hatx_residual']:.3e}")

    def test_noise_off_paths_identical(self, tmp_path):
        cfgp = write_cfg(tmp_path, limit_cfg())
        out = tmp_path / "l"
        CliRunner().invoke(main, ["limit", "run", "--config", cfgp,
                                  "--noise-off", "--out", str(out)])
        a = (out / "limit_p0000.csv").read_bytes()
        b = (out / "limit_p0001.csv").read_bytes()
        assert a == b, "with both noise sources off every path is the skeleton"

    def test_paths_flag(self, tmp_path):
        cfgp = write_cfg(tmp_path, limit_cfg(paths=1))
        out = tmp_path / "l"
        CliRunner().invoke(main, ["limit", "run", "--config", cfgp,
                                  "--paths", "3", "--out", str(out)])
        csvs = sorted(p.name for p in out.iterdir() if p.suffix == ".csv")
        assert len(csvs) == 3


class TestDistsCheck:
    def test_report_contents(self, tmp_path):
        cfgp = write_cfg(tmp_path, {
            "schema_version": 1, "kind": "dists",
            "model": {"service": "exponential"},
            "numerics": {"T": 2.0, "dt": 1e-3}})
        out = tmp_path / "d"
        res = CliRunner().invoke(main, ["dists", "check", "--config", cfgp,
                                        "--out", str(out)])
        assert res.exit_code == 0, res.output
        rep = json.loads((out / "dists_check.json").read_text())
        assert rep["name"].startswith("exponential")
        assert rep["mean"] == pytest.approx(1.0)
        assert rep["holder"]["max_violation"] == 0.0
        assert rep["renewal_U"]["value"] == pytest.approx(3.0,
                                                          abs=RENEWAL_TOL), (
            "rate-1 exponential renewal mass at T=2 is 1 + T = 3")


class TestManifest:
    def test_manifest_fields(self, tmp_path):
        import hashlib
        data = sim_cfg(seeds=2, seed=5)
        cfgp = write_cfg(tmp_path, data)
        out = tmp_path / "o"
        CliRunner().invoke(main, ["sim", "run", "--config", cfgp,
                                  "--out", str(out)])
        man = json.loads((out / "manifest.json").read_text())
        assert man["tool"] == "queuelab"
        assert man["seeds"] == [[5, 0], [5, 1]]
        assert man["wall_time_s"] >= 0
        assert man["outputs"] == ["sim_r0000.csv", "sim_r0001.csv",
                                  "summary.json"]
        blob = json.dumps(validate_config(data).raw, sort_keys=True,
                          separators=(",", ":"))
        assert man["config_sha256"] == hashlib.sha256(blob.encode()).hexdigest()


class TestVerifyCommand:
    QUICK = {"schema_version": 1, "kind": "verify",
             "model": {"overrides": {"N": 8, "T": 0.8, "shift": 0.4,
                                     "dt_levels": [0.01, 0.005], "reps": 4,
                                     "ratio_band": [0.05, 0.95]}}}

    def test_pass_exit_zero_and_report_file(self, tmp_path):
        cfgp = write_cfg(tmp_path, self.QUICK)
        out = tmp_path / "v"
        res = CliRunner().invoke(main, ["verify", "representation",
                                        "--config", cfgp, "--out", str(out)])
        assert res.exit_code == 0, res.output
        assert "PASS" in res.output
        reports = json.loads((out / "verify_representation.json").read_text())
        assert all(r["pass"] for r in reports)

    def test_fail_exit_one(self, tmp_path):
        data = json.loads(json.dumps(self.QUICK))
        data["model"]["overrides"]["ratio_band"] = [0.4999, 0.5001]
        cfgp = write_cfg(tmp_path, data)
        res = CliRunner().invoke(main, ["verify", "representation",
                                        "--config", cfgp])
        assert res.exit_code == 1
        assert "FAIL" in res.output

    def test_kind_mismatch_exit_two(self, tmp_path):
        cfgp = write_cfg(tmp_path, sim_cfg())
        res = CliRunner().invoke(main, ["verify", "representation",
                                        "--config", cfgp])
        assert res.exit_code == 2

    def test_verify_kind_needs_battery_subcommand(self, tmp_path):
        cfgp = write_cfg(tmp_path, self.QUICK)
        with pytest.raises(SchemaError, match="verify"):
            from queuelab.cli import run
            run(load_config(cfgp))


class TestExitCodes:
    def test_schema_error_exit_two(self, tmp_path):
        data = sim_cfg()
        del data["numerics"]
        cfgp = write_cfg(tmp_path, data)
        res = CliRunner().invoke(main, ["sim", "run", "--config", cfgp])
        assert res.exit_code == 2
        assert "numerics" in res.output

    def test_numerical_error_exit_three(self, tmp_path):
        cfgp = write_cfg(tmp_path, {
            "schema_version": 1, "kind": "fluid",
            "model": {"service": "no_such_family"},
            "numerics": {"T": 1.0, "dt": 0.01}})
        res = CliRunner().invoke(main, ["fluid", "solve", "--config", cfgp,
                                        "--out", str(tmp_path / "x")])
        assert res.exit_code == 3
        assert "numerical error" in res.output

    def test_missing_config_file_exit_two(self):
        res = CliRunner().invoke(main, ["sim", "run", "--config",
                                        "/nonexistent/cfg.json"])
        assert res.exit_code == 2


def test_console_script_installed():
    out = subprocess.run([sys.executable, "-m", "queuelab.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "queuelab" in out.stdout
