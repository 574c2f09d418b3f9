"""Command-line front end: config-driven experiment runs.

Subcommands map one-to-one onto the library layers: `dists check`,
`sim run`, `fluid solve`, `limit run`, `verify <battery>`.  Every run
reads one JSON config (validated against a schema; violations exit 2
with the offending field path), writes data files plus a manifest.json
recording the config hash, seeds, tool version and wall time, and exits
3 on numerical failures.  `verify` exits 1 when a battery reports a
failing statistic.

Data outputs are byte-for-byte reproducible for a given config: floats
are written with repr (shortest round-trip form) and replicate order is
fixed regardless of --jobs.  The manifest is excluded from that
guarantee (wall time varies).
"""
from __future__ import annotations

import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np
from jsonschema import Draft202012Validator

from . import __version__
from .dists import (ArrivalSpec, holder_check, make_service_dist,
                    renewal_function)
from .fluid import FluidInit, solve_fluid
from .limitsim import (LimitGrid, LimitSpec, rep_hatx_residual, run_limit,
                       smg_bookkeeping_residual)
from .microsim import (KIND_NAMES, InitialCondition, SimConfig,
                       conservation_check, simulate)
from . import scalestats

__all__ = ["ExperimentConfig", "load_config", "validate_config", "run", "main"]

_ARRIVAL_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["renewal", "inhom_poisson"]},
        "lambda_bar": {},
        "beta": {},
        "sigma2": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "kind"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": 1},
        "kind": {"enum": ["sim", "fluid", "limit", "verify", "dists"]},
        "model": {"type": "object"},
        "numerics": {"type": "object"},
        "run": {"type": "object"},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "dists"}}},
         "then": {"required": ["model"], "properties": {"model": {
             "type": "object", "required": ["service"],
             "properties": {"service": {}}, "additionalProperties": False}}}},
        {"if": {"properties": {"kind": {"const": "sim"}}},
         "then": {"required": ["model", "numerics"], "properties": {
             "model": {"type": "object",
                       "required": ["N", "service", "arrival"],
                       "properties": {
                           "N": {"type": "integer", "minimum": 1},
                           "service": {},
                           "arrival": _ARRIVAL_SCHEMA,
                           "initial": {"type": "object", "properties": {
                               "x0": {"type": "integer", "minimum": 0},
                               "ages": {},
                               "residual_sampling": {
                                   "enum": ["conditional", "fresh"]}},
                               "additionalProperties": False}},
                       "additionalProperties": False},
             "numerics": {"type": "object", "required": ["T"],
                          "properties": {"T": {"type": "number",
                                               "exclusiveMinimum": 0}},
                          "additionalProperties": False}}}},
        {"if": {"properties": {"kind": {"const": "fluid"}}},
         "then": {"required": ["model", "numerics"], "properties": {
             "model": {"type": "object", "required": ["service"],
                       "properties": {
                           "service": {},
                           "Ebar": {},
                           "x0": {"type": "number", "minimum": 0},
                           "nu0": {},
                           "x_max": {"type": "number"}},
                       "additionalProperties": False},
             "numerics": {"type": "object", "required": ["T", "dt"],
                          "properties": {
                              "T": {"type": "number", "exclusiveMinimum": 0},
                              "dt": {"type": "number", "exclusiveMinimum": 0}},
                          "additionalProperties": False}}}},
        {"if": {"properties": {"kind": {"const": "limit"}}},
         "then": {"required": ["model", "numerics"], "properties": {
             "model": {"type": "object",
                       "required": ["service", "arrival", "fluid"],
                       "properties": {
                           "service": {},
                           "arrival": _ARRIVAL_SCHEMA,
                           "fluid": {"type": "object"},
                           "x0hat": {"type": "number"},
                           "nu0hat": {},
                           "regime": {"enum": ["subcritical", "critical",
                                               "supercritical"]}},
                       "additionalProperties": False},
             "numerics": {"type": "object", "required": ["T", "dt", "dx"],
                          "properties": {
                              "T": {"type": "number", "exclusiveMinimum": 0},
                              "dt": {"type": "number", "exclusiveMinimum": 0},
                              "dx": {"type": "number", "exclusiveMinimum": 0},
                              "x_max": {"type": "number"},
                              "tail_budget": {"type": "number",
                                              "exclusiveMinimum": 0}},
                          "additionalProperties": False}}}},
        {"if": {"properties": {"kind": {"const": "verify"}}},
         "then": {"properties": {"model": {
             "type": "object",
             "properties": {"overrides": {"type": "object"}},
             "additionalProperties": False}}}},
    ],
}

_RUN_SCHEMA = {
    "type": "object",
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "seeds": {"type": "integer", "minimum": 1},
        "paths": {"type": "integer", "minimum": 1},
        "jobs": {"type": "integer", "minimum": 1},
        "noise_off": {"type": "boolean"},
        "out": {"type": "string"},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One validated experiment: kind plus model/numerics/run blocks."""

    schema_version: int
    kind: str
    model: dict
    numerics: dict
    run: dict

    @property
    def raw(self):
        return {"schema_version": self.schema_version, "kind": self.kind,
                "model": self.model, "numerics": self.numerics,
                "run": self.run}


class SchemaError(ValueError):
    pass


def validate_config(data):
    """Validate a raw dict against the config schema; return ExperimentConfig.

    Raises SchemaError whose message starts with the offending field path.
    """
    if not isinstance(data, dict):
        raise SchemaError("(root): config must be a JSON object")

    def first_error(schema, doc, prefix):
        errs = sorted(Draft202012Validator(schema).iter_errors(doc),
                      key=lambda e: list(e.absolute_path))
        if not errs:
            return None
        parts = prefix + [str(p) for p in errs[0].absolute_path]
        return (".".join(parts) or "(root)") + ": " + errs[0].message

    msg = first_error(SCHEMA, data, [])
    if msg is None:
        msg = first_error(_RUN_SCHEMA, data.get("run", {}), ["run"])
    if msg is not None:
        raise SchemaError(msg)
    return ExperimentConfig(
        schema_version=data["schema_version"], kind=data["kind"],
        model=data.get("model", {}), numerics=data.get("numerics", {}),
        run=data.get("run", {}))


def load_config(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"(root): not valid JSON ({e})")
    return validate_config(data)


def _build_arrival(spec):
    return ArrivalSpec(kind=spec["kind"],
                       lambda_bar=spec.get("lambda_bar", 1.0),
                       beta=spec.get("beta", 0.0),
                       sigma2=spec.get("sigma2"))


def _build_initial(spec):
    spec = spec or {}
    return InitialCondition(x0=spec.get("x0", 0),
                            ages=spec.get("ages"),
                            residual_sampling=spec.get("residual_sampling",
                                                       "conditional"))


def _build_fluid_nu0(spec):
    if spec is None:
        return None
    if isinstance(spec, dict) and "invariant" in spec:
        return {"invariant": float(spec["invariant"])}
    if isinstance(spec, dict) and "grid" in spec:
        g = spec["grid"]
        return (np.asarray(g["x"], dtype=float), np.asarray(g["p"], dtype=float))
    raise SchemaError("model.nu0: expected null, {'invariant': m} or "
                      "{'grid': {'x': [...], 'p': [...]}}")


def _build_nu0hat(spec):
    if spec is None:
        return None
    if isinstance(spec, dict) and "atoms" in spec:
        return {"atoms": [(float(x), float(w)) for x, w in spec["atoms"]]}
    if isinstance(spec, dict) and "density" in spec:
        d = spec["density"]
        return {"density": (np.asarray(d["x"], dtype=float),
                            np.asarray(d["v"], dtype=float))}
    raise SchemaError("model.nu0hat: expected null, {'atoms': [[x, w], ...]} "
                      "or {'density': {'x': [...], 'v': [...]}}")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, header, columns):
    rows = zip(*columns)
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(out_dir, cfg, seeds, t0, outputs):
    blob = json.dumps(cfg.raw, sort_keys=True, separators=(",", ":"))
    manifest = {
        "tool": "queuelab",
        "version": __version__,
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "seeds": seeds,
        "wall_time_s": round(time.time() - t0, 3),
        "outputs": sorted(outputs),
    }
    (Path(out_dir) / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _out_dir(cfg, out_flag):
    out = out_flag or cfg.run.get("out") or f"queuelab-{cfg.kind}-out"
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _run_dists(cfg, out_flag):
    t0 = time.time()
    dist = make_service_dist(cfg.model["service"])
    T = float(cfg.numerics.get("T", 4.0))
    dt = float(cfg.numerics.get("dt", 1e-3))
    probe = np.linspace(0.0, min(dist.support_end, 8.0), 257)[:-1]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        hz = np.asarray(dist.hazard(probe), dtype=float)
    hz = hz[np.isfinite(hz)]
    xs = np.linspace(0.0, min(dist.support_end * 0.75, 4.0), 16)
    ys = np.linspace(0.0, 4.0, 48)
    report = {
        "name": dist.name,
        "mean": float(dist.mean),
        "support_end": (None if np.isinf(dist.support_end)
                        else float(dist.support_end)),
        "hazard_max_on_probe": float(hz.max()) if hz.size else None,
        "holder": holder_check(dist, xs, ys).as_dict(),
        "renewal_U": {"T": T, "value": float(renewal_function(dist, T, dt)[-1])},
    }
    out = _out_dir(cfg, out_flag)
    (out / "dists_check.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, cfg, [], t0, ["dists_check.json"])
    click.echo(json.dumps(report, sort_keys=True))
    return 0


def _sim_one(raw_cfg, replicate):
    """Worker: rebuild everything from the raw dict (pickling-safe)."""
    cfg = validate_config(raw_cfg)
    sim = SimConfig(N=int(cfg.model["N"]),
                    arrival=_build_arrival(cfg.model["arrival"]),
                    service=make_service_dist(cfg.model["service"]),
                    T=float(cfg.numerics["T"]),
                    initial=_build_initial(cfg.model.get("initial")),
                    seed=int(cfg.run.get("seed", 0)),
                    replicate=replicate)
    path = simulate(sim)
    kinds = [KIND_NAMES[k] for k in path.ev_kind]
    lines = ["time,kind,E,D,K,X,in_service"]
    for i in range(path.ev_time.size):
        lines.append(f"{_fmt(path.ev_time[i])},{kinds[i]},{path.E[i]},"
                     f"{path.D[i]},{path.K[i]},{path.X[i]},{path.B[i]}")
    checks = conservation_check(path)
    summary = {
        "replicate": replicate,
        "events": int(path.ev_time.size),
        "final": {"E": int(path.E[-1]) if path.ev_time.size else 0,
                  "D": int(path.D[-1]) if path.ev_time.size else 0,
                  "K": int(path.K[-1]) if path.ev_time.size else 0,
                  "X": int(path.X[-1]) if path.ev_time.size else path.x0,
                  "B": int(path.B[-1]) if path.ev_time.size else path.b0},
        "identity_violations": {k: int(v) for k, v in checks.items()},
    }
    return "\n".join(lines) + "\n", summary


def _run_sim(cfg, out_flag, jobs):
    t0 = time.time()
    n_rep = int(cfg.run.get("seeds", 1))
    jobs = jobs or int(cfg.run.get("jobs", 1))
    out = _out_dir(cfg, out_flag)
    raw = cfg.raw
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sim_one, [raw] * n_rep, range(n_rep)))
    else:
        results = [_sim_one(raw, r) for r in range(n_rep)]
    outputs = []
    summaries = []
    for r, (csv_text, summary) in enumerate(results):
        name = f"sim_r{r:04d}.csv"
        (out / name).write_text(csv_text)
        outputs.append(name)
        summaries.append(summary)
    clean = all(max(s["identity_violations"].values()) == 0 for s in summaries)
    agg = {"replicates": n_rep, "identities_clean": clean,
           "per_replicate": summaries}
    (out / "summary.json").write_text(
        json.dumps(agg, indent=2, sort_keys=True) + "\n")
    outputs.append("summary.json")
    seed = int(cfg.run.get("seed", 0))
    _write_manifest(out, cfg, [[seed, r] for r in range(n_rep)], t0, outputs)
    click.echo(f"{n_rep} replicates -> {out} (identities "
               f"{'clean' if clean else 'VIOLATED'})")
    return 0


def _run_fluid(cfg, out_flag):
    t0 = time.time()
    dist = make_service_dist(cfg.model["service"])
    init = FluidInit(Ebar=cfg.model.get("Ebar", 1.0),
                     x0=float(cfg.model.get("x0", 0.0)),
                     nu0_density=_build_fluid_nu0(cfg.model.get("nu0")),
                     x_max=cfg.model.get("x_max"))
    path = solve_fluid(dist, init, float(cfg.numerics["T"]),
                       float(cfg.numerics["dt"]))
    out = _out_dir(cfg, out_flag)
    _write_csv(out / "fluid.csv", ["t", "Xbar", "Kbar", "mass", "hazard_load"],
               [path.grid, path.Xbar, path.Kbar, path.Bbar, path.Hbar])
    summary = {"regime": path.regime,
               "final": {"Xbar": float(path.Xbar[-1]),
                         "Kbar": float(path.Kbar[-1]),
                         "mass": float(path.Bbar[-1])}}
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, cfg, [], t0, ["fluid.csv", "summary.json"])
    click.echo(f"regime {path.regime} -> {out}")
    return 0


def _limit_one(raw_cfg, replicate):
    cfg = validate_config(raw_cfg)
    dist = make_service_dist(cfg.model["service"])
    fm = cfg.model["fluid"]
    init = FluidInit(Ebar=fm.get("Ebar", 1.0), x0=float(fm.get("x0", 1.0)),
                     nu0_density=_build_fluid_nu0(fm.get("nu0")),
                     x_max=fm.get("x_max"))
    grid = LimitGrid(T=float(cfg.numerics["T"]), dt=float(cfg.numerics["dt"]),
                     dx=float(cfg.numerics["dx"]),
                     x_max=cfg.numerics.get("x_max"),
                     tail_budget=float(cfg.numerics.get("tail_budget", 1e-6)))
    spec = LimitSpec(dist=dist, arrival=_build_arrival(cfg.model["arrival"]),
                     fluid_init=init, grid=grid,
                     x0hat=float(cfg.model.get("x0hat", 0.0)),
                     nu0hat=_build_nu0hat(cfg.model.get("nu0hat")),
                     seed=int(cfg.run.get("seed", 0)), replicate=replicate,
                     noise_off=bool(cfg.run.get("noise_off", False)),
                     regime=cfg.model.get("regime"))
    run = run_limit(spec)
    names = sorted(run.nuhat)
    header = ["t", "Ehat", "Khat", "Xhat", "vhat"] + [f"nu_{n}" for n in names]
    cols = [run.t_grid, run.Ehat, run.Khat, run.Xhat, run.vhat]
    cols += [run.nuhat[n] for n in names]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    summary = {"replicate": replicate, "regime": run.regime,
               "rep_hatx_residual": rep_hatx_residual(run),
               "smg_residual": smg_bookkeeping_residual(run),
               "final_Xhat": float(run.Xhat[-1])}
    return "\n".join(lines) + "\n", summary


def _run_limit(cfg, out_flag, paths_flag, jobs):
    t0 = time.time()
    n_paths = paths_flag or int(cfg.run.get("paths", 1))
    jobs = jobs or int(cfg.run.get("jobs", 1))
    out = _out_dir(cfg, out_flag)
    raw = cfg.raw
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_limit_one, [raw] * n_paths, range(n_paths)))
    else:
        results = [_limit_one(raw, p) for p in range(n_paths)]
    outputs = []
    summaries = []
    for p, (csv_text, summary) in enumerate(results):
        name = f"limit_p{p:04d}.csv"
        (out / name).write_text(csv_text)
        outputs.append(name)
        summaries.append(summary)
    worst = max(s["rep_hatx_residual"] for s in summaries)
    agg = {"paths": n_paths, "regime": summaries[0]["regime"],
           "worst_rep_hatx_residual": worst, "per_path": summaries}
    (out / "summary.json").write_text(
        json.dumps(agg, indent=2, sort_keys=True) + "\n")
    outputs.append("summary.json")
    seed = int(cfg.run.get("seed", 0))
    _write_manifest(out, cfg, [[seed, p] for p in range(n_paths)], t0, outputs)
    click.echo(f"{n_paths} limit paths ({summaries[0]['regime']}) -> {out}")
    return 0


_BATTERIES = {
    "fclt": scalestats.verify_fclt,
    "insensitivity": scalestats.verify_insensitivity,
    "moments": scalestats.verify_moments,
    "flln": scalestats.verify_flln,
    "sae": scalestats.verify_sae,
    "representation": scalestats.verify_representation,
}


def _run_verify(battery, cfg, out_flag):
    t0 = time.time()
    overrides = cfg.model.get("overrides", {}) if cfg else {}
    reports = _BATTERIES[battery](overrides)
    for r in reports:
        click.echo(r.line())
    if cfg is not None:
        out = _out_dir(cfg, out_flag)
        name = f"verify_{battery}.json"
        (out / name).write_text(json.dumps(
            [r.as_dict() for r in reports], indent=2, sort_keys=True) + "\n")
        _write_manifest(out, cfg, [], t0, [name])
    return 0 if scalestats.all_passed(reports) else 1


def run(cfg, battery=None, out=None, paths=None, jobs=None):
    """Dispatch a validated config; returns the process exit code."""
    if cfg is not None and battery is None and cfg.kind == "verify":
        raise SchemaError("kind: verify configs run through `verify <battery>`")
    kind = "verify" if battery else cfg.kind
    if kind == "dists":
        return _run_dists(cfg, out)
    if kind == "sim":
        return _run_sim(cfg, out, jobs)
    if kind == "fluid":
        return _run_fluid(cfg, out)
    if kind == "limit":
        return _run_limit(cfg, out, paths, jobs)
    return _run_verify(battery, cfg, out)


def _execute(fn):
    """Run a handler under the exit-code contract: 2 schema, 3 numerical."""
    try:
        code = fn()
    except SchemaError as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(2)
    except (ValueError, ArithmeticError) as e:
        click.echo(f"numerical error: {e}", err=True)
        sys.exit(3)
    sys.exit(code)


def _load_with_overrides(config_path, seed, noise_off):
    cfg = load_config(config_path)
    if seed is not None or noise_off:
        run_block = dict(cfg.run)
        if seed is not None:
            run_block["seed"] = seed
        if noise_off:
            run_block["noise_off"] = True
        data = dict(cfg.raw)
        data["run"] = run_block
        cfg = validate_config(data)
    return cfg


_config_opt = click.option("--config", "config_path", required=True,
                           type=click.Path(exists=True, dir_okay=False))
_out_opt = click.option("--out", default=None, type=click.Path(file_okay=False))
_seed_opt = click.option("--seed", default=None, type=int)
_jobs_opt = click.option("--jobs", default=None, type=int)


@click.group()
@click.version_option(version=__version__, prog_name="queuelab")
def main():
    """Many-server queue laboratory: simulators, limits, verification."""


@main.group()
def dists():
    """Service-law tooling."""


@dists.command("check")
@_config_opt
@_out_opt
def dists_check(config_path, out):
    """Probe a service law: mean, hazard, regularity, renewal mass."""
    _execute(lambda: run(load_config(config_path), out=out))


@main.group()
def sim():
    """Event-driven many-server simulation."""


@sim.command("run")
@_config_opt
@_out_opt
@_seed_opt
@click.option("--seeds", default=None, type=int,
              help="replicate count (overrides run.seeds)")
@_jobs_opt
def sim_run(config_path, out, seed, seeds, jobs):
    """Simulate replicates; one event CSV each plus a summary."""
    def go():
        cfg = _load_with_overrides(config_path, seed, False)
        if seeds is not None:
            data = dict(cfg.raw)
            data["run"] = dict(cfg.run, seeds=seeds)
            cfg = validate_config(data)
        return run(cfg, out=out, jobs=jobs)
    _execute(go)


@main.group()
def fluid():
    """Deterministic scaled-mean dynamics."""


@fluid.command("solve")
@_config_opt
@_out_opt
def fluid_solve(config_path, out):
    """Solve the fluid path; CSV of t, Xbar, Kbar, mass, hazard_load."""
    _execute(lambda: run(load_config(config_path), out=out))


@main.group()
def limit():
    """Gaussian second-order limit sampling."""


@limit.command("run")
@_config_opt
@_out_opt
@_seed_opt
@click.option("--paths", default=None, type=int,
              help="number of limit paths (overrides run.paths)")
@_jobs_opt
@click.option("--noise-off", is_flag=True, default=False,
              help="zero both Gaussian inputs (deterministic skeleton)")
def limit_run(config_path, out, seed, paths, jobs, noise_off):
    """Draw limit paths; one profile CSV each plus a summary."""
    _execute(lambda: run(_load_with_overrides(config_path, seed, noise_off),
                         out=out, paths=paths, jobs=jobs))


@main.group()
def verify():
    """Statistical verification batteries (exit 1 on failure)."""


def _verify_command(battery):
    @verify.command(battery, short_help=f"run the {battery} battery")
    @click.option("--config", "config_path", default=None,
                  type=click.Path(exists=True, dir_okay=False))
    @_out_opt
    def _cmd(config_path, out, _battery=battery):
        def go():
            cfg = None
            if config_path is not None:
                cfg = load_config(config_path)
                if cfg.kind != "verify":
                    raise SchemaError(
                        f"kind: expected 'verify', got {cfg.kind!r}")
            return run(cfg, battery=_battery, out=out)
        _execute(go)
    return _cmd


for _b in _BATTERIES:
    _verify_command(_b)


if __name__ == "__main__":
    main()
