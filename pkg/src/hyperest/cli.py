"""Command-line interface.

Subcommands: `advection` and `euler` run the benchmark refinement studies,
`ode` runs the scalar residual-optimality studies, `eoc` recomputes the EOC
columns of an existing CSV. Configuration comes from an optional TOML file
plus flag overrides; exit code 2 flags a rejected configuration, 3 a
bounded-reconstruction violation without --force.
"""

import argparse
import dataclasses
import math
import sys

try:
    import tomllib
except ModuleNotFoundError:                     # Python < 3.11
    import tomli as tomllib

from .errors import AssumptionViolation, ConfigError
from .experiments import (RunConfig, eoc, ode_study, report_from_csv,
                          report_to_csv, run_study, write_plot_data)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTION = 3


def _load_config_file(path):
    with open(path, "rb") as fh:
        return tomllib.load(fh)


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def _build_config(args, defaults):
    data = dict(defaults)
    if args.config:
        file_data = _load_config_file(args.config)
        unknown = set(file_data) - _CONFIG_FIELDS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data.update(file_data)
    for key in ("q", "levels", "flux", "mu", "stepper", "recon", "tau0",
                "cells0", "t_end", "settle_steps", "threads"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "cfl", None) is not None:
        data["cfl_cap"] = args.cfl
    if getattr(args, "force", False):
        data["force"] = True
    if "domain" in data:
        data["domain"] = tuple(data["domain"])
    if "checkpoints" in data:
        data["checkpoints"] = tuple(data["checkpoints"])
    return RunConfig(**data)


def _print_report(report, out=None):
    out = out if out is not None else sys.stdout
    cfg = report.config
    print(f"# {cfg.problem} q={cfg.q} flux={cfg.flux} stepper={cfg.stepper} "
          f"recon={cfg.recon_spec()}", file=out)
    print(f"{'lvl':>3} {'h':>12} {'tau':>12} {'error_l2':>13} {'eoc':>6} "
          f"{'residual_l2':>13} {'eoc':>6} {'bound':>13} {'in_box':>6}", file=out)
    e_rows, r_rows = report.eoc_error(), report.eoc_residual()
    for lv, er, rr in zip(report.levels, e_rows, r_rows):
        if lv.failed:
            print(f"{lv.level:>3} {lv.h:>12.5g} {lv.tau:>12.5g}  FAILED: {lv.failed}",
                  file=out)
            continue
        print(f"{lv.level:>3} {lv.h:>12.5g} {lv.tau:>12.5g} {lv.error_l2:>13.5e} "
              f"{er.eoc:>6.2f} {lv.residual_l2:>13.5e} {rr.eoc:>6.2f} "
              f"{lv.bound:>13.5e} {str(lv.in_box).lower():>6}", file=out)


def _run_benchmark(args, defaults):
    config = _build_config(args, defaults)
    report = run_study(config)
    _print_report(report)
    if any(lv.failed and "compact box" in lv.failed for lv in report.levels):
        return EXIT_ASSUMPTION
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report_to_csv(report))
        print(f"# wrote {args.out}")
    if args.plot_data:
        stem = args.out.rsplit(".", 1)[0] if args.out else \
            f"{config.problem}_q{config.q}"
        for path in write_plot_data(report, stem):
            print(f"# wrote {path}")
    return EXIT_OK


def _cmd_advection(args):
    return _run_benchmark(args, {
        "problem": "advection", "speed": 8.0, "domain": (0.0, 2.0),
        "t_end": 0.4, "tau0": 0.002, "cells0": 16, "q": 1,
        "flux": "richtmyer_visc", "mu": 0.5, "levels": 5,
    })


def _cmd_euler(args):
    return _run_benchmark(args, {
        "problem": "euler", "gamma": 1.4, "domain": (0.0, 2.0),
        "t_end": 1.0, "tau0": 0.008, "cells0": 16, "q": 2,
        "flux": "central_w", "mu": 0.0, "levels": 4,
        "checkpoints": (0.6, 0.8, 1.0),
    })


def _cmd_ode(args):
    results = ode_study(problem=args.problem, t_end=1.0, n0=args.n0,
                        halvings=args.halvings)
    print(f"# ode problem={args.problem}")
    print(f"{'stepper':>12} {'recon':>10} {'mode':>12} {'order':>5} "
          f"{'final sup':>12} {'eocs'}")
    for row in results:
        eocs = " ".join(f"{e:.2f}" for e in row["eocs"])
        print(f"{row['family']:>12} {row['recon']:>10} {row['mode']:>12} "
              f"{row['order']:>5} {row['sup_norms'][-1]:>12.4e} {eocs}")
        if row["bounds_ok"] is not None and not row["bounds_ok"]:
            print("  WARNING: a posteriori bound violated", file=sys.stderr)
            return 1
    return EXIT_OK


def _cmd_eoc(args):
    with open(args.csv) as fh:
        rows = report_from_csv(fh.read())
    for name in ("error_l2", "residual_l2"):
        print(f"# {name}")
        for row in eoc([(r["h"], r[name]) for r in rows]):
            eoc_str = f"{row.eoc:.3f}" if not math.isnan(row.eoc) else "-"
            print(f"  level {row.level}: h={row.h:.6g} value={row.value:.6e} "
                  f"eoc={eoc_str}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hyperest",
        description="DG schemes for 1D conservation laws with a posteriori "
                    "error bounds")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--q", type=int, help="polynomial degree")
        p.add_argument("--levels", type=int, help="number of refinement levels")
        p.add_argument("--flux", help="numerical flux kind")
        p.add_argument("--mu", type=float, help="artificial viscosity coefficient")
        p.add_argument("--cfl", type=float, help="CFL cap on tau0/h0")
        p.add_argument("--stepper", help="time integrator family")
        p.add_argument("--recon", help="temporal reconstruction, e.g. H(1,0,0)")
        p.add_argument("--tau0", type=float, help="coarsest time step")
        p.add_argument("--cells0", type=int, help="coarsest cell count")
        p.add_argument("--t-end", dest="t_end", type=float, help="final time")
        p.add_argument("--settle-steps", dest="settle_steps", type=int,
                       help="pre-run settle steps at the coarsest level")
        p.add_argument("--threads", type=int, help="level worker threads")
        p.add_argument("--force", action="store_true",
                       help="emit bounds even if the box assumption failed")
        p.add_argument("--out", help="CSV output path")
        p.add_argument("--plot-data", action="store_true",
                       help="write two-column data files per curve")

    p_adv = sub.add_parser("advection", help="linear advection benchmark")
    add_common(p_adv)
    p_adv.set_defaults(func=_cmd_advection)

    p_eul = sub.add_parser("euler", help="Euler pressure-wave benchmark")
    add_common(p_eul)
    p_eul.set_defaults(func=_cmd_euler)

    p_ode = sub.add_parser("ode", help="scalar ODE residual optimality study")
    p_ode.add_argument("--problem", default="decay",
                       choices=("decay", "stiffish"))
    p_ode.add_argument("--n0", type=int, default=10)
    p_ode.add_argument("--halvings", type=int, default=5)
    p_ode.set_defaults(func=_cmd_ode)

    p_eoc = sub.add_parser("eoc", help="recompute EOC columns from a CSV")
    p_eoc.add_argument("csv")
    p_eoc.set_defaults(func=_cmd_eoc)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration rejected: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionViolation as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION


if __name__ == "__main__":
    sys.exit(main())
