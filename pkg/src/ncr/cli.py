"""Command-line front end.

Subcommands: flux, classify, solve, phase-diagram, simulate, compare.
All outputs are CSV/JSON with 12 significant digits, '.' decimal separator
and Unix newlines; every output file gets a sibling manifest recording the
fully resolved parameters so the run can be repeated byte-identically.

Exit codes: 0 success, 2 invalid input, 3 runtime guard tripped.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .envelope import DEGENERATE_TOL
from .flux import (
    ConvexityClass,
    ModelParams,
    convexity_class,
    flux_H,
    flux_H_deriv,
    is_attractive,
    special_points,
)
from .fvm import FvmConfig, fvm_solve
from .riemann import (
    PhaseLabel,
    RiemannProblem,
    WaveKind,
    entropy_profile,
    phase_diagram_grid,
    serialize_waves,
    wave_structure,
)
from .simulator import InfluenceConeBreachError, SimConfig, run as run_simulation

log = logging.getLogger("ncr")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_GUARD = 3


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _write_text(path: str, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _write_manifest(out_path: str, subcommand: str, resolved: dict,
                    outputs: list):
    manifest = {
        "subcommand": subcommand,
        "parameters": resolved,
        "seed": resolved.get("seed"),
        "artifact_version": __version__,
        "outputs": outputs,
    }
    _write_text(out_path + ".manifest.json",
                json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _params_from_args(args) -> ModelParams:
    if (args.b is None) == (getattr(args, "c", None) is None):
        raise ValueError("exactly one of --b / --c must be given")
    d = getattr(args, "d", 0.0) or 0.0
    if args.b is not None:
        params = ModelParams.from_b(args.b, d=d)
    else:
        params = ModelParams(c=args.c, d=d)
    if not is_attractive(params):
        raise ValueError(
            f"non-attractive parameters: c={params.c:.6g}, d={params.d:.6g}"
        )
    return params


# ---------------------------------------------------------------------------
# subcommands

def cmd_flux(args) -> int:
    params = _params_from_args(args)
    n = args.samples
    v = np.linspace(-1.0, 1.0, n + 1)
    h = flux_H(v, params)
    h1 = flux_H_deriv(v, params, 1)
    h2 = flux_H_deriv(v, params, 2)
    rows = ["v,H,H_prime,H_second"]
    rows += [f"{_fmt(a)},{_fmt(b)},{_fmt(c)},{_fmt(e)}"
             for a, b, c, e in zip(v, h, h1, h2)]
    _write_text(args.out, "\n".join(rows) + "\n")

    sidecar = {"b": params.b, "c": params.c, "d": params.d,
               "convexity_class": convexity_class(params).value}
    if convexity_class(params) is ConvexityClass.MIXED:
        sp = special_points(params)
        sidecar["special_points"] = {
            "v_infl": sp.v_infl, "v_max": sp.v_max, "v_zero": sp.v_zero,
            "g_max": sp.g_max, "g_min_local": sp.g_min_local,
        }
    _write_text(args.out + ".sidecar.json",
                json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    resolved = {"b": params.b, "c": params.c, "d": params.d,
                "samples": n, "out": args.out}
    _write_manifest(args.out, "flux", resolved,
                    [args.out, args.out + ".sidecar.json"])
    return EXIT_OK


def _wave_dicts(ws):
    out = []
    for w in ws.waves:
        if w.kind is WaveKind.SHOCK:
            out.append({"kind": "SHOCK", "speed": w.speed,
                        "left_density": w.left_density,
                        "right_density": w.right_density})
        else:
            out.append({"kind": "FAN", "speed_lo": w.speed_lo,
                        "speed_hi": w.speed_hi,
                        "left_density": w.left_density,
                        "right_density": w.right_density})
    return out


def cmd_classify(args) -> int:
    params = _params_from_args(args)
    if abs(args.ul - args.ur) < DEGENERATE_TOL:
        raise ValueError("u_minus and u_plus must differ")
    prob = RiemannProblem(u_minus=args.ul, u_plus=args.ur, params=params)
    ws = wave_structure(prob)
    doc = {"label": ws.label.value, "waves": _wave_dicts(ws),
           "waves_text": serialize_waves(ws)}
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        _write_text(args.out, text)
        _write_manifest(args.out, "classify",
                        {"b": params.b, "ul": args.ul, "ur": args.ur,
                         "out": args.out}, [args.out])
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    params = _params_from_args(args)
    if not (args.t > 0):
        raise ValueError(f"time must be positive, got {args.t}")
    prob = RiemannProblem(u_minus=args.ul, u_plus=args.ur, params=params)
    xs = np.linspace(args.xmin, args.xmax, args.samples + 1)
    us = entropy_profile(prob, xs, args.t)
    rows = ["x,u"] + [f"{_fmt(x)},{_fmt(u)}" for x, u in zip(xs, us)]
    _write_text(args.out, "\n".join(rows) + "\n")
    resolved = {"b": params.b, "ul": args.ul, "ur": args.ur, "t": args.t,
                "xmin": args.xmin, "xmax": args.xmax,
                "samples": args.samples, "out": args.out}
    _write_manifest(args.out, "solve", resolved, [args.out])
    return EXIT_OK


def cmd_phase_diagram(args) -> int:
    params = _params_from_args(args)
    densities, labels = phase_diagram_grid(params, args.resolution)
    rows = ["u_minus,u_plus,label"]
    for i, um in enumerate(densities):
        for j, up in enumerate(densities):
            rows.append(f"{_fmt(um)},{_fmt(up)},{labels[i, j]}")
    _write_text(args.out, "\n".join(rows) + "\n")
    _write_manifest(args.out, "phase-diagram",
                    {"b": params.b, "resolution": args.resolution,
                     "out": args.out}, [args.out])
    return EXIT_OK


def _load_config_file(path: str) -> dict:
    """Flat key=value file mirroring the simulate flag names."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {line!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def cmd_simulate(args) -> int:
    values = {}
    if args.config:
        values.update(_load_config_file(args.config))
    # flags override file values
    for key in ("b", "c", "d", "N", "t_end", "ul", "ur", "seed", "replicas",
                "bin_width", "margin", "snapshots", "xmin", "xmax", "out"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag

    def fval(key, default=None, cast=float):
        if key not in values or values[key] is None:
            return default
        return cast(values[key])

    b = fval("b")
    c = fval("c")
    if (b is None) == (c is None):
        raise ValueError("exactly one of b / c must be given")
    d = fval("d", 0.0)
    params = ModelParams.from_b(b, d=d) if b is not None else ModelParams(c, d=d)
    snapshots = values.get("snapshots")
    if isinstance(snapshots, str):
        snapshots = tuple(float(s) for s in snapshots.split(","))
    t_end = fval("t_end", 1.0)
    config = SimConfig(
        params=params,
        N=fval("N", 500, int),
        t_end=t_end,
        u_minus=fval("ul"),
        u_plus=fval("ur"),
        seed=fval("seed", 0, int),
        margin=fval("margin", 0.2),
        snapshot_times=snapshots,
        replicas=fval("replicas", 1, int),
        bin_width=fval("bin_width", 0.05),
        window=(fval("xmin", -1.5), fval("xmax", 1.5)),
    )
    out = values.get("out")
    if out is None:
        raise ValueError("an output path (--out) is required")

    result = run_simulation(config)
    for r in range(config.replicas):
        log.info("replica %d: %d events, origin charge %d",
                 r, result.events[r], result.origin_charge[r, -1])

    rows = ["time,bin_center,density,replicas"]
    for prof in result.profiles:
        for x, u in zip(prof.bin_centers, prof.densities):
            rows.append(f"{_fmt(prof.time)},{_fmt(x)},{_fmt(u)},"
                        f"{prof.replica_count}")
    _write_text(out, "\n".join(rows) + "\n")
    resolved = {
        "b": params.b, "c": params.c, "d": params.d, "N": config.N,
        "t_end": config.t_end, "ul": config.u_minus, "ur": config.u_plus,
        "seed": config.seed, "replicas": config.replicas,
        "bin_width": config.bin_width, "margin": config.margin,
        "snapshots": list(config.snapshot_times),
        "window": list(config.window), "out": out,
        "events": [int(e) for e in result.events],
    }
    _write_manifest(out, "simulate", resolved, [out])
    return EXIT_OK


def _read_profile_csv(path: str):
    """Read either simulator CSV (time,bin_center,density,replicas) or solve
    CSV (x,u). Returns (x, u, time_or_None); multi-snapshot files yield the
    last snapshot."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header[:3] == ["time", "bin_center", "density"]:
        t_last = data[-1, 0]
        rows = data[data[:, 0] == t_last]
        return rows[:, 1], rows[:, 2], float(t_last)
    if header[:2] == ["x", "u"]:
        return data[:, 0], data[:, 1], None
    raise ValueError(f"unrecognized profile CSV header: {header}")


def cmd_compare(args) -> int:
    x_sim, u_sim, t_csv = _read_profile_csv(args.sim)
    t = args.t if args.t is not None else t_csv
    if t is None:
        raise ValueError("--t is required when the CSV carries no time column")
    params = _params_from_args(args)
    prob = RiemannProblem(u_minus=args.ul, u_plus=args.ur, params=params)
    if args.fvm:
        cfg = FvmConfig(cell_count=args.cells, domain_halfwidth=args.halfwidth,
                        t_end=t, params=params, u_minus=args.ul,
                        u_plus=args.ur)
        xc, uc = fvm_solve(cfg)
        if (x_sim.min() < xc.min() - 1e-9) or (x_sim.max() > xc.max() + 1e-9):
            raise ValueError("simulation grid extends beyond the FVM domain")
        u_ref = np.interp(x_sim, xc, uc)
    else:
        u_ref = entropy_profile(prob, x_sim, t)
    diff = u_sim - u_ref
    widths = np.diff(x_sim)
    width = float(np.median(widths)) if widths.size else 1.0
    doc = {
        "l1": float(np.sum(np.abs(diff)) * width),
        "linf": float(np.max(np.abs(diff))),
        "per_bin": [
            {"x": float(x), "sim": float(a), "ref": float(r),
             "diff": float(e)}
            for x, a, r, e in zip(x_sim, u_sim, u_ref, diff)
        ],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        _write_text(args.out, text)
        _write_manifest(args.out, "compare",
                        {"sim": args.sim, "b": params.b, "ul": args.ul,
                         "ur": args.ur, "t": t, "fvm": bool(args.fvm),
                         "out": args.out}, [args.out])
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _add_param_flags(p, with_d=True):
    p.add_argument("--b", type=float, help="stationary-measure parameter b")
    p.add_argument("--c", type=float, help="pair-creation rate c")
    if with_d:
        p.add_argument("--d", type=float, default=0.0, help="drift asymmetry")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ncr",
        description="Exact flux, Riemann solutions, phase diagram and "
                    "stochastic simulation of the particle-antiparticle-hole "
                    "exclusion process.",
    )
    ap.add_argument("--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flux", help="tabulate the flux and its derivatives")
    _add_param_flags(p)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_flux)

    p = sub.add_parser("classify", help="phase label and wave structure")
    _add_param_flags(p, with_d=False)
    p.add_argument("--ul", type=float, required=True, help="left density u_minus")
    p.add_argument("--ur", type=float, required=True, help="right density u_plus")
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("solve", help="sample the closed-form entropy solution")
    _add_param_flags(p, with_d=False)
    p.add_argument("--ul", type=float, required=True)
    p.add_argument("--ur", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--xmin", type=float, default=-1.5)
    p.add_argument("--xmax", type=float, default=1.5)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("phase-diagram", help="label grid over (u_minus, u_plus)")
    _add_param_flags(p, with_d=False)
    p.add_argument("--resolution", type=int, default=201)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("simulate", help="event-driven lattice simulation")
    p.add_argument("--config", help="key=value config file; flags override")
    _add_param_flags(p)
    p.add_argument("--N", type=int, help="rescaling factor (sites per unit)")
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--ul", type=float)
    p.add_argument("--ur", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--bin-width", dest="bin_width", type=float)
    p.add_argument("--margin", type=float)
    p.add_argument("--snapshots", help="comma-separated macroscopic times")
    p.add_argument("--xmin", type=float)
    p.add_argument("--xmax", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="L1/Linf distance between profiles")
    p.add_argument("--sim", required=True, help="profile CSV to compare")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true",
                       help="reference: closed-form entropy solution (default)")
    group.add_argument("--fvm", action="store_true",
                       help="reference: finite-volume solution")
    _add_param_flags(p, with_d=False)
    p.add_argument("--ul", type=float, required=True)
    p.add_argument("--ur", type=float, required=True)
    p.add_argument("--t", type=float)
    p.add_argument("--cells", type=int, default=4000)
    p.add_argument("--halfwidth", type=float, default=1.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except InfluenceConeBreachError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
