"""Command-line interface: configuration, dispatch, seeding, serialization.

Every command writes a CSV result (fixed, documented header; no map-order
dependence) plus a JSON sidecar with the echoed config, library versions,
wall time, and any warning flags.  All randomness flows from the single
config seed.  Exit codes: 0 success, 1 computation error, 2 unknown
command, 3 schema violation, 4 unreadable file.
"""

from __future__ import annotations

import argparse
import csv
import importlib.resources
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bounds import BoundSpec, bound_kernel, fuzz_inverse_bound, theoretical_rate
from .density import l1_distance, mixture_charfn, mixture_density
from .dp import DpConfig
from .errors import MixboundError, NoKnownRateError, PreconditionError
from .kernels import charfn, density, kernel_family
from .measures import (
    MixtureConfig,
    ParameterSpace,
    new_discrete_measure,
    new_spd_scale,
)
from .pde import standard_test_suite, weak_residual
from .posterior import (
    CONTRACTION_HEADER,
    ContractionRow,
    ContractionTable,
    SamplerSettings,
    contraction_experiment,
    rate_fit,
)
from .transport import w1_1d, w1_exact
from .witness import (
    SmoothingToolkit,
    approximation_certificate,
    bandlimit,
    cutoff_eta,
    mcshane_extend,
    witness_from_measures,
)

__all__ = ["RunConfig", "parse_config", "execute", "main", "bundled_measure_path"]


def bundled_measure_path(name: str) -> str:
    """Filesystem path of one of the example measure files shipped with the
    package (w1_example_source.json / w1_example_target.json)."""
    return str(importlib.resources.files("mixbound").joinpath("data", name))

COMMANDS = ("w1", "l1", "bounds_verify", "bounds_fuzz", "pde_check",
            "dual_witness_demo", "posterior_run", "posterior_rates",
            "kernels_probe")

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_UNKNOWN = 2
EXIT_SCHEMA = 3
EXIT_UNREADABLE = 4

_SCHEMA_VERSION = 1

_SPACE_DEFAULTS = {"R": 1.0, "lambda_min": 0.5, "lambda_max": 2.0, "dim": 1, "a": 1.0}


class SchemaError(MixboundError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    parameters: dict
    seed: int
    output_path: str

    def to_json(self) -> str:
        return json.dumps(
            {"command": self.command, "parameters": self.parameters,
             "seed": self.seed, "output_path": self.output_path},
            sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        obj = json.loads(text)
        return _validate_config(obj)


def _validate_config(obj: dict) -> RunConfig:
    cmd = obj.get("command")
    if cmd not in COMMANDS:
        raise SchemaError(f"unknown command {cmd!r}")
    if "seed" not in obj or obj["seed"] is None:
        raise SchemaError("config is missing the required seed")
    params = dict(_SPACE_DEFAULTS)
    params.update(obj.get("parameters") or {})
    _check_command_schema(cmd, params)
    return RunConfig(command=cmd, parameters=params, seed=int(obj["seed"]),
                     output_path=str(obj.get("output_path") or "result.csv"))


_REQUIRED = {
    "w1": ("source", "target"),
    "l1": ("kernel", "g0", "g1"),
    "bounds_verify": ("kernel",),
    "bounds_fuzz": ("kernel", "trials"),
    "pde_check": (),
    "dual_witness_demo": (),
    "posterior_run": ("kernel", "n_grid", "replicates", "iters", "burn_in"),
    "posterior_rates": ("kernel", "table"),
    "kernels_probe": ("kernel",),
}


def _check_command_schema(cmd: str, params: dict):
    missing = [key for key in _REQUIRED[cmd] if params.get(key) is None]
    if missing:
        raise SchemaError(f"{cmd} config is missing {missing}")
    if "kernel" in params and params.get("kernel") is not None:
        if params["kernel"] not in ("gaussian", "gaussian-iso", "gaussian_isotropic",
                                    "cauchy", "laplace"):
            raise SchemaError(f"unknown kernel {params['kernel']!r}")


def _space_from(params: dict) -> ParameterSpace:
    return ParameterSpace(dim=int(params["dim"]), radius=float(params["R"]),
                          lambda_min=float(params["lambda_min"]),
                          lambda_max=float(params["lambda_max"]))


def _measure_from(obj: dict, space: ParameterSpace):
    return new_discrete_measure(obj["atoms"], obj["weights"], space)


def _config_from(obj: dict, space: ParameterSpace) -> MixtureConfig:
    mixing = _measure_from(obj, space)
    scale = new_spd_scale(obj["matrix"], space)
    return MixtureConfig(mixing, scale, space)


def parse_config(argv=None) -> RunConfig:
    """Build a RunConfig from CLI arguments, optionally layered on a JSON
    config file; explicit flags override file values."""
    parser = argparse.ArgumentParser(
        prog="mixbound",
        description="inverse-bound laboratory for homoscedastic mixtures")
    sub = parser.add_subparsers(dest="command")

    def add_common(p):
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output", default=None, help="CSV output path")
        p.add_argument("--dim", type=int, default=None)
        p.add_argument("--radius", type=float, default=None, dest="R")
        p.add_argument("--lambda-min", type=float, default=None, dest="lambda_min")
        p.add_argument("--lambda-max", type=float, default=None, dest="lambda_max")

    p_w1 = sub.add_parser("w1"); add_common(p_w1)
    p_w1.add_argument("--source", default=None)
    p_w1.add_argument("--target", default=None)
    p_w1.add_argument("--plan", action="store_true", default=None)

    p_l1 = sub.add_parser("l1"); add_common(p_l1)
    p_l1.add_argument("--kernel", default=None)
    p_l1.add_argument("--budget", type=int, default=None)

    p_b = sub.add_parser("bounds")
    b_sub = p_b.add_subparsers(dest="bounds_mode")
    for mode in ("verify", "fuzz"):
        pm = b_sub.add_parser(mode); add_common(pm)
        pm.add_argument("--kernel", default=None)
        if mode == "fuzz":
            pm.add_argument("--trials", type=int, default=None)
            pm.add_argument("--atoms-max", type=int, default=None, dest="atoms_max")
            pm.add_argument("--budget", type=int, default=None)

    p_pde = sub.add_parser("pde")
    pde_sub = p_pde.add_subparsers(dest="pde_mode")
    p_pc = pde_sub.add_parser("check"); add_common(p_pc)
    p_pc.add_argument("--budget", type=int, default=None)

    p_dw = sub.add_parser("dual-witness")
    dw_sub = p_dw.add_subparsers(dest="dw_mode")
    p_demo = dw_sub.add_parser("demo"); add_common(p_demo)
    p_demo.add_argument("--bandwidth", type=float, default=None, dest="Lambda")

    p_post = sub.add_parser("posterior")
    post_sub = p_post.add_subparsers(dest="post_mode")
    p_run = post_sub.add_parser("run"); add_common(p_run)
    p_run.add_argument("--kernel", default=None)
    p_run.add_argument("--n-grid", default=None, dest="n_grid",
                       help="comma separated sample sizes")
    p_run.add_argument("--replicates", type=int, default=None)
    p_run.add_argument("--iters", type=int, default=None)
    p_run.add_argument("--burn-in", type=int, default=None, dest="burn_in")
    p_run.add_argument("--thin", type=int, default=None)
    p_run.add_argument("--concentration", type=float, default=None, dest="a")
    p_rates = post_sub.add_parser("rates"); add_common(p_rates)
    p_rates.add_argument("--kernel", default=None)
    p_rates.add_argument("--table", default=None, help="ContractionTable CSV")

    p_k = sub.add_parser("kernels")
    k_sub = p_k.add_subparsers(dest="kernels_mode")
    p_probe = k_sub.add_parser("probe"); add_common(p_probe)
    p_probe.add_argument("--kernel", default=None)

    ns = parser.parse_args(argv)
    if ns.command is None:
        raise SchemaError("no command given")
    cmd = ns.command
    if cmd == "bounds":
        if getattr(ns, "bounds_mode", None) not in ("verify", "fuzz"):
            raise SchemaError("bounds requires a verify|fuzz mode")
        cmd = f"bounds_{ns.bounds_mode}"
    elif cmd == "pde":
        if getattr(ns, "pde_mode", None) != "check":
            raise SchemaError("pde requires the check mode")
        cmd = "pde_check"
    elif cmd == "dual-witness":
        if getattr(ns, "dw_mode", None) != "demo":
            raise SchemaError("dual-witness requires the demo mode")
        cmd = "dual_witness_demo"
    elif cmd == "posterior":
        if getattr(ns, "post_mode", None) not in ("run", "rates"):
            raise SchemaError("posterior requires a run|rates mode")
        cmd = f"posterior_{ns.post_mode}"
    elif cmd == "kernels":
        if getattr(ns, "kernels_mode", None) != "probe":
            raise SchemaError("kernels requires the probe mode")
        cmd = "kernels_probe"

    file_obj: dict = {}
    if getattr(ns, "config", None):
        try:
            with open(ns.config, "r", encoding="utf-8") as fh:
                file_obj = json.load(fh)
        except OSError as exc:
            raise FileNotFoundError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config file is not valid JSON: {exc}") from exc

    params = dict(file_obj.get("parameters") or {})
    flag_names = ("dim", "R", "lambda_min", "lambda_max", "kernel", "budget",
                  "trials", "atoms_max", "source", "target", "plan", "n_grid",
                  "replicates", "iters", "burn_in", "thin", "a", "table",
                  "Lambda")
    for name in flag_names:
        val = getattr(ns, name, None)
        if val is not None:
            params[name] = val
    if isinstance(params.get("n_grid"), str):
        params["n_grid"] = [int(v) for v in params["n_grid"].split(",") if v]
    seed = ns.seed if ns.seed is not None else file_obj.get("seed")
    output = ns.output or file_obj.get("output_path") or "result.csv"
    return _validate_config({"command": cmd, "parameters": params,
                             "seed": seed, "output_path": output})


def _write_csv(path: str, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _write_sidecar(path: str, cfg: RunConfig, wall: float, warnings):
    sidecar = {
        "config_echo": json.loads(cfg.to_json()),
        "versions": {"mixbound": __version__, "numpy": np.__version__,
                     "schema": _SCHEMA_VERSION},
        "wall_time": wall,
        "warnings": list(warnings),
    }
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _load_measure_file(path: str, space: ParameterSpace):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise FileNotFoundError(str(exc)) from exc
    return _measure_from(obj, space)


def _default_truth(space: ParameterSpace) -> MixtureConfig:
    half = 0.5 * space.radius / math.sqrt(space.dim)
    atoms = np.zeros((2, space.dim))
    atoms[0, 0] = -half
    atoms[1, 0] = half
    mixing = new_discrete_measure(atoms, [0.5, 0.5], space)
    mid = 1.0 if space.lambda_min <= 1.0 <= space.lambda_max else \
        0.5 * (space.lambda_min + space.lambda_max)
    scale = new_spd_scale(mid * np.eye(space.dim), space)
    return MixtureConfig(mixing, scale, space)


def execute(cfg: RunConfig) -> int:
    """Run one command; returns the process exit code."""
    t0 = time.time()
    warnings: list[str] = []
    params = cfg.parameters
    space = _space_from(params)
    try:
        if cfg.command == "w1":
            src = _load_measure_file(params["source"], space)
            tgt = _load_measure_file(params["target"], space)
            plan = w1_exact(src, tgt)
            print(_fmt(plan.cost))
            if params.get("plan"):
                rows = [(i, j, plan.flow[i, j],
                         float(np.linalg.norm(plan.source_atoms[i] - plan.target_atoms[j])))
                        for i in range(plan.rows) for j in range(plan.cols)
                        if plan.flow[i, j] > 1e-12]
                _write_csv(cfg.output_path, ("i", "j", "flow", "cost_ij"), rows)
            else:
                _write_csv(cfg.output_path, ("cost",), [(_fmt(plan.cost),)])

        elif cfg.command == "l1":
            k = kernel_family(params["kernel"], space.dim)
            G = _config_from(params["g0"], space)
            Gp = _config_from(params["g1"], space)
            est = l1_distance(G, Gp, k, int(params.get("budget", 10 ** 5)), cfg.seed)
            _write_csv(cfg.output_path, ("value", "std_error", "method", "budget"),
                       [(_fmt(est.value), _fmt(est.std_error), est.method, est.budget)])

        elif cfg.command == "bounds_verify":
            k = kernel_family(params["kernel"], space.dim)
            rows = []
            w_grid = [0.05, 0.1, 0.2, 0.4, 0.8, 1.2, 1.6, 2.0]
            s_grid = [0.0, 0.05, 0.1, 0.2, 0.4, 0.8]
            for w in w_grid:
                for s in s_grid:
                    if k.is_gaussian_like and s >= 1.0:
                        continue
                    rows.append((k.family, _fmt(w), _fmt(s),
                                 _fmt(bound_kernel(k, w, s))))
            _write_csv(cfg.output_path, ("kernel", "w1", "dsig", "bound"), rows)

        elif cfg.command == "bounds_fuzz":
            k = kernel_family(params["kernel"], space.dim)
            rep = fuzz_inverse_bound(
                k, space, int(params["trials"]),
                int(params.get("atoms_max", 5)),
                int(params.get("budget", 30_000)), cfg.seed)
            rows = [(t,) + tuple(map(_fmt, vals))
                    for t, vals in enumerate(rep.ratios)]
            _write_csv(cfg.output_path,
                       ("trial", "w1", "dsig", "l1", "l1_stderr",
                        "bound_unit_constants", "ratio"), rows)
            warnings.extend([f"violations={rep.violations}"] if rep.violations else [])

        elif cfg.command == "pde_check":
            k = kernel_family("laplace", space.dim)
            scale = new_spd_scale(np.eye(space.dim), space)
            mixing = _default_truth(space).mixing
            G = MixtureConfig(mixing, scale, space)
            budget = int(params.get("budget", 200_000 if space.dim == 1 else 360_000))
            rows = []
            bad = 0
            for fn in standard_test_suite(space):
                r = weak_residual(G, fn, budget)
                rows.append((fn.label, _fmt(r), budget))
                if abs(r) > 1e-3:
                    bad += 1
            _write_csv(cfg.output_path, ("test_fn_id", "residual", "budget"), rows)
            if bad:
                raise PreconditionError(f"{bad} residuals above 1e-3")

        elif cfg.command == "dual_witness_demo":
            from .rngs import derive_rng

            rng = derive_rng(cfg.seed, "demo")
            if space.dim != 1:
                raise PreconditionError("the demo runs in d = 1")
            P = new_discrete_measure(rng.uniform(-space.radius, space.radius, (4, 1)),
                                     rng.dirichlet(np.ones(4)), space)
            Q = new_discrete_measure(rng.uniform(-space.radius, space.radius, (3, 1)),
                                     rng.dirichlet(np.ones(3)), space)
            w = witness_from_measures(P, Q)
            lam = float(params.get("Lambda", 10.0))
            toolkit = SmoothingToolkit.build(space.radius, 1)
            bound = toolkit.bandlimit_bound(lam)
            grid = np.linspace(-2.2 * space.radius, 2.2 * space.radius, 241)
            h_ext = mcshane_extend(w, grid[:, None])
            h_cut = h_ext * cutoff_eta(space.radius, grid[:, None], dim=1)
            h_band = bandlimit(w, space, lam, grid[:, None])
            rows = [(_fmt(float(g)), _fmt(float(a)), _fmt(float(b)), _fmt(float(cv)),
                     _fmt(float(abs(cv - b))), _fmt(bound))
                    for g, a, b, cv in zip(grid, h_ext, h_cut, h_band)]
            _write_csv(cfg.output_path,
                       ("x", "h_ext", "h_cutoff", "h_bandlimited", "gap", "bound"),
                       rows)

        elif cfg.command == "posterior_run":
            k = kernel_family(params["kernel"], space.dim)
            dp = DpConfig(concentration=float(params.get("a", 1.0)))
            settings = SamplerSettings(
                iters=int(params["iters"]), burn_in=int(params["burn_in"]),
                thin=int(params.get("thin", 1)), dp=dp,
                compute_l1=bool(params.get("compute_l1", True)),
                l1_budget=int(params.get("l1_budget", 20_000)))
            G0 = _config_from(params["g0"], space) if params.get("g0") \
                else _default_truth(space)
            table = contraction_experiment(
                k, G0, [int(v) for v in params["n_grid"]],
                int(params["replicates"]), settings, cfg.seed)
            rows = [(r.n, r.replicate, _fmt(r.posterior_median_w1),
                     _fmt(r.posterior_q90_w1), _fmt(r.posterior_median_dsig),
                     _fmt(r.posterior_median_l1)) for r in table.rows]
            _write_csv(cfg.output_path, CONTRACTION_HEADER, rows)

        elif cfg.command == "posterior_rates":
            k = kernel_family(params["kernel"], space.dim)
            table = _read_table(params["table"])
            fit = rate_fit(table, k)
            rows = [(n, _fmt(mw), _fmt(tw), _fmt(md), _fmt(td))
                    for (n, mw, tw, md, td) in fit.rows]
            _write_csv(cfg.output_path,
                       ("n", "median_w1", "theory_w1", "median_dsig", "theory_dsig"),
                       rows)
            warnings.append(f"w1_slope={fit.w1_slope!r}")
            warnings.append(f"dsig_slope={fit.dsig_slope!r}")
            if fit.descriptive_only:
                warnings.append("slopes are descriptive only: " + fit.note)

        elif cfg.command == "kernels_probe":
            k = kernel_family(params["kernel"], space.dim)
            scale = new_spd_scale(np.eye(space.dim), space)
            rows = []
            for t in np.linspace(0.0, 4.0, 33):
                x = np.zeros(space.dim)
                x[0] = t
                rows.append((_fmt(float(t)),
                             _fmt(float(density(k, x, np.zeros(space.dim), scale))),
                             _fmt(float(charfn(k, x, scale).real))))
            _write_csv(cfg.output_path, ("t", "density_at_te1", "charfn_at_te1"), rows)

        else:
            return EXIT_UNKNOWN
    except (FileNotFoundError, OSError):
        return EXIT_UNREADABLE
    except SchemaError:
        return EXIT_SCHEMA
    except MixboundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    _write_sidecar(cfg.output_path, cfg, time.time() - t0, warnings)
    return EXIT_OK


def _read_table(path: str) -> ContractionTable:
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for rec in reader:
                rows.append(ContractionRow(
                    n=int(rec["n"]), replicate=int(rec["replicate"]),
                    posterior_median_w1=float(rec["posterior_median_w1"]),
                    posterior_q90_w1=float(rec["posterior_q90_w1"]),
                    posterior_median_dsig=float(rec["posterior_median_dsig"]),
                    posterior_median_l1=float(rec["posterior_median_l1"])))
    except OSError as exc:
        raise FileNotFoundError(str(exc)) from exc
    return ContractionTable(rows=tuple(rows))


def worker_cap() -> int:
    """Worker count cap from MIXBOUND_THREADS (default: machine parallelism)."""
    env = os.environ.get("MIXBOUND_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SystemExit as exc:  # argparse rejects unknown subcommands with 2
        return EXIT_UNKNOWN if exc.code else EXIT_OK
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
