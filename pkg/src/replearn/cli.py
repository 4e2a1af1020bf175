"""Benchmark CLI: generate representations, test and compare them with
learning curves, and analyze the task's ground truth."""
from __future__ import annotations

import argparse
import sys
from importlib import resources

from . import harness, partition, viability
from .agent import run_generation_session
from .config import Config, ConfigError, load_config, print_config
from .puck import PuckEnv, StartZone, sweep_bounds
from .qtable import QTable

BUILTIN_REPS = {
    "diagonal": lambda scale: partition.diagonal_split(scale=scale),
    "grid10x10": lambda scale: partition.uniform_grid(10, 10, scale=scale),
    "vrdp": lambda scale: _load_data_rep("vrdp_boxes.txt", scale),
    "controllability": lambda scale: _load_data_rep("controllability_boxes.txt", scale),
}


def _load_data_rep(name: str, scale) -> partition.Representation:
    ref = resources.files("replearn.data").joinpath(name)
    with ref.open() as fh:
        return partition.load(fh, scale=scale)


def _resolve_rep(spec: str, scale) -> partition.Representation:
    if spec in BUILTIN_REPS:
        return BUILTIN_REPS[spec](scale)
    return partition.load(spec, scale=scale)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="replearn",
        description="Learn, test and analyze state-space representations "
                    "for the puck-on-a-hill task.",
    )
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--seed", type=int, default=0, help="master RNG seed")
    parser.add_argument("--print-config", action="store_true",
                        help="print the effective configuration and exit")
    sub = parser.add_subparsers(dest="command")

    gen = sub.add_parser("generate", help="learn a representation online")
    gen.add_argument("--out", required=True, help="representation file to write")
    gen.add_argument("--log", help="per-trial session log CSV")
    gen.add_argument("--init", help="seed representation file to start from")

    test = sub.add_parser("test", help="learning curves for one representation")
    test.add_argument("rep", help="builtin name (%s) or a file path"
                      % ", ".join(BUILTIN_REPS))
    test.add_argument("--out-curves", help="per-run curve CSV")
    test.add_argument("--out-average", help="averaged curve CSV")

    cmp_cmd = sub.add_parser("compare", help="compare several representations")
    cmp_cmd.add_argument("reps", nargs="+",
                         help="entries name=path, or builtin names")
    cmp_cmd.add_argument("--out-prefix", default="curves",
                         help="prefix for per-representation curve files")
    cmp_cmd.add_argument("--out-summary", help="summary table CSV")

    ana = sub.add_parser("analyze", help="viability map and critical states")
    ana.add_argument("--out-map", help="viability/critical CSV (x,v,class)")
    ana.add_argument("--validate", help="representation to validate against "
                     "the critical-state map")
    ana.add_argument("--sweep-bounds", action="store_true",
                     help="re-derive state-space bounds empirically first")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.print_config:
        print_config(cfg, sys.stdout)
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return 2
    try:
        return _dispatch(args, cfg)
    except (ConfigError, partition.PartitionError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args, cfg: Config) -> int:
    env = PuckEnv(cfg.env_params())
    scale = cfg.scale()
    bounds = cfg.bounds()
    if args.command == "generate":
        init = partition.load(args.init, scale=scale) if args.init else None
        rep, qt, log = run_generation_session(
            env, cfg.agent_config(args.seed), cfg.stop_rule(),
            init_rep=init, bounds=bounds)
        partition.save(rep, args.out)
        if args.log:
            with open(args.log, "w") as fh:
                log.write_csv(fh)
        last = log.records[-1] if log.records else None
        print(f"wrote {args.out}: {rep.region_count()} regions after "
              f"{len(log.records)} trials"
              + (f", last trial {last.steps} steps" if last else ""))
        _report_keys(cfg)
        return 0
    if args.command == "test":
        rep = _resolve_rep(args.rep, scale)
        curves = harness.run_series(rep, env, cfg.test_config(), cfg.learning(),
                                    cfg.criteria(), seed=args.seed, bounds=bounds)
        avg = harness.average_curves(curves)
        if args.out_curves:
            with open(args.out_curves, "w") as fh:
                harness.write_curves_csv(curves, fh)
        if args.out_average:
            with open(args.out_average, "w") as fh:
                harness.write_average_csv(avg, fh)
        print(f"{args.rep}: {rep.region_count()} regions, "
              f"final averaged score {avg[-1][1]:.1f}")
        _report_keys(cfg)
        return 0
    if args.command == "compare":
        named = []
        for entry in args.reps:
            if "=" in entry:
                name, _, path = entry.partition("=")
                named.append((name, partition.load(path, scale=scale)))
            else:
                named.append((entry, _resolve_rep(entry, scale)))
        entries = harness.compare(named, env, cfg.test_config(), cfg.learning(),
                                  cfg.criteria(), seed=args.seed, bounds=bounds)
        for e in entries:
            with open(f"{args.out_prefix}_{e.name}.csv", "w") as fh:
                harness.write_average_csv(e.averaged, fh)
        if args.out_summary:
            with open(args.out_summary, "w") as fh:
                harness.write_summary_csv(entries, fh)
        for e in entries:
            cap = e.steps_to_cap if e.steps_to_cap is not None else "-"
            print(f"{e.name}: regions={e.regions} final={e.final_score:.1f} "
                  f"steps_to_cap={cap}")
        _report_keys(cfg)
        return 0
    if args.command == "analyze":
        if args.sweep_bounds:
            import random as _random
            bounds = sweep_bounds(env, _random.Random(args.seed))
            print(f"swept bounds: x [{bounds.x_lo:.3f}, {bounds.x_hi:.3f}] "
                  f"v [{bounds.v_lo:.3f}, {bounds.v_hi:.3f}]")
        grid = viability.viability_map(env, bounds=bounds,
                                       resolution=cfg["resolution"])
        frac = grid.controllable.mean()
        print(f"viability map: {grid.nx}x{grid.nv} cells, "
              f"{frac:.1%} controllable")
        if args.out_map:
            with open(args.out_map, "w") as fh:
                viability.export_critical_csv(grid, env, fh)
        if args.validate:
            rep = _resolve_rep(args.validate, scale)
            report = viability.validate_representation(grid, env, rep)
            print(f"{args.validate}: regions={report.region_count} "
                  f"must_push_left={report.must_push_left} "
                  f"must_push_right={report.must_push_right} "
                  f"violations={report.violations}")
        _report_keys(cfg)
        return 0
    raise ValueError(f"unhandled command {args.command}")


def _report_keys(cfg: Config) -> None:
    # Learning constants are always echoed so results are interpretable.
    v = cfg.values
    print(f"(gamma={v['gamma']} alpha={v['alpha']} epsilon={v['epsilon']} "
          f"delta={v['delta']} seed-dependent)")


if __name__ == "__main__":
    sys.exit(main())
