"""Command-line front end.

Subcommands: simulate, equilibria, stability, r0, sweep, continue-cse.
Everything is driven by a scenario preset plus optional JSON config and
``--set key=value`` overrides (applied after config load and echoed in the
run manifest).  Outputs are written atomically into ``--out``; every run
also writes ``run_manifest.json`` recording the resolved configuration,
its hash and the produced files, so a run can be reproduced from its own
manifest.

Exit codes: 0 success, 1 validation/usage error, 2 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .equilibria import (EquilibriumPoint, cse_continuation, cse_solve,
                         dfe_points, nme_point, nmut_cases)
from .integrate import IntegrationOptions
from .io import (atomic_write_text, catalog_json, config_sha256, events_json,
                 families_csv, families_json, json_text, spectra_csv,
                 trajectory_csv)
from .model import FullState, ModelParams, NumericError, ValidationError
from .reproduction import r0 as compute_r0
from .stability import (dfe_spectrum_case1, nme_spectrum_closed_form,
                        quasi_period, spectrum_at)
from .sweep import (Scenario, SweepAxis, run_scenario, scenario,
                    scenario_names, sweep)

CONFIG_KEYS = {"scenario", "params", "initial", "integration", "sweep"}
STATE_KEYS = ("S", "I0", "I1", "R", "D", "g0", "g1", "v0", "v1")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are validation errors (exit 1)
        raise ValidationError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="qsirs",
                     description="Coupled quasispecies / two-strain SIRS toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", default=None,
                        help=f"preset name ({', '.join(scenario_names())}, custom)")
        sp.add_argument("--config", default=None, metavar="JSON",
                        help="config file: {scenario, params, initial, integration, sweep}")
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a parameter (repeatable)")
        sp.add_argument("--out", default=".", metavar="DIR", help="output directory")
        sp.add_argument("--quiet", action="store_true")

    sim = sub.add_parser("simulate", help="integrate one scenario, export trajectory")
    common(sim)
    sim.add_argument("--t-max", type=float, default=None)

    eq = sub.add_parser("equilibria", help="catalog all equilibrium classes")
    common(eq)
    eq.add_argument("--g0-star", type=float, default=1.0,
                    help="master frequency for the disease-free representative")

    st = sub.add_parser("stability", help="spectra at equilibria / over a grid")
    common(st)
    st.add_argument("--point", choices=["dfe", "nme", "cse"], default="nme")
    st.add_argument("--g0-star", type=float, default=0.0)
    st.add_argument("--grid", default=None, metavar="LO:HI:N",
                    help="pi1 grid for spectra rows (default: single point)")

    rr = sub.add_parser("r0", help="invasion threshold at the disease-free state")
    common(rr)

    sw = sub.add_parser("sweep", help="classify endpoints over a parameter grid")
    common(sw)
    sw.add_argument("--axis1", default=None, metavar="PARAM:LO:HI:N[:log]")
    sw.add_argument("--axis2", default=None, metavar="PARAM:LO:HI:N[:log]")
    sw.add_argument("--threads", type=int, default=1)
    sw.add_argument("--t-max", type=float, default=None)

    cc = sub.add_parser("continue-cse", help="trace co-circulation families over pi1")
    common(cc)
    cc.add_argument("--range", dest="pi1_range", default="0.5:10", metavar="LO:HI")
    cc.add_argument("--step", type=float, default=0.025)
    return parser


def _parse_overrides(pairs: list[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValidationError(f"--set expects KEY=VALUE, got {pair!r}")
        key, _, raw = pair.partition("=")
        key = key.strip()
        try:
            out[key] = float(raw)
        except ValueError:
            raise ValidationError(f"--set value for {key!r} is not a number: {raw!r}")
    return out


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as handle:
        cfg = json.load(handle)
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    unknown = sorted(set(cfg) - CONFIG_KEYS)
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
    return cfg


def _initial_from_config(block: dict) -> FullState:
    unknown = sorted(set(block) - set(STATE_KEYS))
    if unknown:
        raise ValidationError(f"unknown initial-state keys: {', '.join(unknown)}")
    missing = sorted(set(STATE_KEYS) - set(block))
    if missing:
        raise ValidationError(f"missing initial-state keys: {', '.join(missing)}")
    return FullState.from_array([float(block[k]) for k in STATE_KEYS])


def _resolve(args, extra_keys: set[str] = frozenset()) -> tuple[Scenario, IntegrationOptions, dict]:
    """Scenario + options from config file, --scenario and --set."""
    cfg = _load_config(args.config)
    name = args.scenario or cfg.get("scenario")
    if name is None:
        raise ValidationError("a scenario is required (--scenario or config)")
    overrides = _parse_overrides(args.overrides)
    extra = {k: overrides.pop(k) for k in list(overrides) if k in extra_keys}

    params = ModelParams.from_dict(cfg["params"]) if "params" in cfg else None
    initial = _initial_from_config(cfg["initial"]) if "initial" in cfg else None
    sc = scenario(name, overrides, params=params, initial=initial)

    opts = IntegrationOptions.from_dict(cfg.get("integration", {}))
    if getattr(args, "t_max", None) is not None:
        opts = opts.replace(t_max=args.t_max)
    return sc, opts, extra


def _manifest(args, sc: Scenario, opts: IntegrationOptions, outputs: list[str],
              extra: dict) -> dict:
    config = sc.to_config()
    config["integration"] = {
        "rtol": opts.rtol, "atol": opts.atol, "t_max": opts.t_max,
        "clamp_threshold": opts.clamp_threshold, "max_steps": opts.max_steps,
        "settle_norm": opts.settle_norm, "settle_duration": opts.settle_duration,
    }
    return {
        "tool": "qsirs",
        "version": __version__,
        "command": args.command,
        "config": config,
        "config_sha256": config_sha256(config),
        "overrides": _parse_overrides(args.overrides),
        "scenario_notes": list(sc.notes),
        "outputs": outputs,
        **extra,
    }


def _emit(args, path_text_pairs: list[tuple[str, str]], manifest: dict) -> None:
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    for name, text in path_text_pairs:
        path = os.path.join(args.out, name)
        atomic_write_text(path, text)
        outputs.append(name)
    manifest["outputs"] = outputs + ["run_manifest.json"]
    atomic_write_text(os.path.join(args.out, "run_manifest.json"), json_text(manifest))
    if not args.quiet:
        for name in manifest["outputs"]:
            print(os.path.join(args.out, name))


def _cmd_simulate(args) -> int:
    sc, opts, _ = _resolve(args)
    result = run_scenario(sc, opts)
    traj = result.trajectory
    files = [("trajectory.csv", trajectory_csv(traj, sc.params, result.reports)),
             ("events.json", events_json(traj))]
    manifest = _manifest(args, sc, opts, [], {
        "endpoint": result.endpoint.value,
        "status": traj.status,
        "final_time": traj.final_time,
        "final_state": {k: float(v) for k, v in zip(STATE_KEYS, traj.final_array)},
    })
    _emit(args, files, manifest)
    if not args.quiet:
        print(f"endpoint: {result.endpoint.value} (status {traj.status}, "
              f"t_end {traj.final_time:g})")
    return 0


def _cmd_equilibria(args) -> int:
    sc, opts, extra = _resolve(args, extra_keys={"g0_star"})
    g0s = extra.get("g0_star", args.g0_star)
    p = sc.params
    entries: list = [dfe_points(p, g0s).to_dict()
                     | {"note": "disease-free segment representative; g0_star free in [0,1]"}]
    entries.append(nme_point(p))
    entries.extend(nmut_cases(p))
    entries.extend(cse_solve(p))
    files = [("equilibria.json", catalog_json(entries))]
    counts = {}
    for e in entries:
        d = e if isinstance(e, dict) else e.to_dict()
        counts[d["class"]] = counts.get(d["class"], 0) + (1 if d["feasible"] else 0)
    manifest = _manifest(args, sc, opts, [], {"feasible_counts": counts})
    _emit(args, files, manifest)
    return 0


def _parse_grid(spec: str, what: str) -> tuple[float, float, int]:
    try:
        lo, hi, n = spec.split(":")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise ValidationError(f"{what} expects LO:HI:N, got {spec!r}")


def _cmd_stability(args) -> int:
    sc, opts, extra = _resolve(args, extra_keys={"g0_star"})
    p = sc.params
    g0s = extra.get("g0_star", args.g0_star)
    rows = []
    info: dict = {"point": args.point}
    if args.grid:
        lo, hi, n = _parse_grid(args.grid, "--grid")
        grid = np.linspace(lo, hi, n)
    else:
        grid = np.array([p.pi1])
    if args.point == "nme":
        for pi1 in grid:
            q = nme_point(p.replace(pi1=float(pi1)))
            if not isinstance(q, EquilibriumPoint):
                continue
            spec = spectrum_at(p.replace(pi1=float(pi1), epsilon=1.0), q.as_array())
            rows.append((float(pi1), spec.eigenvalues))
        if not args.grid and rows:
            spec_cf = nme_spectrum_closed_form(float(grid[0]))
            info["quasi_period"] = quasi_period(spec_cf)
    elif args.point == "dfe":
        for pi1 in grid:
            x = dfe_points(p.replace(pi1=float(pi1)), g0s).as_array()
            spec = spectrum_at(p.replace(pi1=float(pi1), epsilon=1.0), x)
            rows.append((float(pi1), spec.eigenvalues))
        info["g0_star"] = g0s
        if sc.name == "case1_vaccine_like":
            info["deciding_closed_form"] = dfe_spectrum_case1(g0s).deciding().real
    else:
        for pi1 in grid:
            for q in cse_solve(p.replace(pi1=float(pi1))):
                spec = spectrum_at(p.replace(pi1=float(pi1), epsilon=1.0), q.as_array())
                rows.append((float(pi1), spec.eigenvalues))
    if not rows:
        raise ValidationError(f"no feasible {args.point} points in the requested range")
    files = [("spectra.csv", spectra_csv(rows))]
    manifest = _manifest(args, sc, opts, [], {"stability": info, "rows": len(rows)})
    _emit(args, files, manifest)
    return 0


def _cmd_r0(args) -> int:
    sc, opts, extra = _resolve(args, extra_keys={"g0_star", "v0"})
    p = sc.params
    if "v0" in extra:
        v0 = extra["v0"]
        g0s = None
    else:
        g0s = extra.get("g0_star", 1.0)
        v0 = p.xi0 * g0s / p.gamma0
    value = compute_r0(p, v0)
    payload = {"R0": value, "v0": v0, "g0_star": g0s,
               "threshold": "R0 = 1 separates stable/unstable disease-free states"}
    manifest = _manifest(args, sc, opts, [], {"R0": value})
    _emit(args, [("r0.json", json_text(payload))], manifest)
    if not args.quiet:
        print(f"R0 = {value:.10g}")
    return 0


def _parse_axis(spec: str, what: str) -> SweepAxis:
    parts = spec.split(":")
    if len(parts) not in (4, 5):
        raise ValidationError(f"{what} expects PARAM:LO:HI:N[:log], got {spec!r}")
    scale = parts[4] if len(parts) == 5 else "linear"
    return SweepAxis(parts[0], float(parts[1]), float(parts[2]), int(parts[3]), scale)


def _cmd_sweep(args) -> int:
    sc, opts, _ = _resolve(args)
    cfg = _load_config(args.config)
    sweep_cfg = cfg.get("sweep", {})
    ax1_spec = args.axis1 or sweep_cfg.get("axis1")
    ax2_spec = args.axis2 or sweep_cfg.get("axis2")
    if ax1_spec is None or ax2_spec is None:
        raise ValidationError("sweep needs --axis1 and --axis2 (or a config 'sweep' block)")
    ax1 = _parse_axis(ax1_spec, "--axis1") if isinstance(ax1_spec, str) else SweepAxis(**ax1_spec)
    ax2 = _parse_axis(ax2_spec, "--axis2") if isinstance(ax2_spec, str) else SweepAxis(**ax2_spec)
    result = sweep(sc, ax1, ax2, opts, threads=args.threads)
    meta = result.meta() | {"threads_requested": args.threads}
    manifest = _manifest(args, sc, opts, [], {"sweep": meta["classes"]})
    _emit(args, [("sweep.csv", result.to_csv()),
                 ("sweep_meta.json", json_text(meta))], manifest)
    return 0


def _cmd_continue_cse(args) -> int:
    sc, opts, _ = _resolve(args)
    try:
        lo, hi = (float(v) for v in args.pi1_range.split(":"))
    except ValueError:
        raise ValidationError(f"--range expects LO:HI, got {args.pi1_range!r}")
    result = cse_continuation(sc.params, (lo, hi), args.step)
    manifest = _manifest(args, sc, opts, [], {
        "birth_pi1": result.birth_pi1, "collision_pi1": result.collision_pi1})
    _emit(args, [("cse_families.csv", families_csv(result)),
                 ("cse_families.json", families_json(result))], manifest)
    if not args.quiet:
        print(f"birth pi1 = {result.birth_pi1}, collision pi1 = {result.collision_pi1}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "equilibria": _cmd_equilibria,
    "stability": _cmd_stability,
    "r0": _cmd_r0,
    "sweep": _cmd_sweep,
    "continue-cse": _cmd_continue_cse,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
