"""Command-line entry point: ``evcs <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence
under ``--strict``. Errors go to stderr as ``evcs: error[<kind>]: <message>``.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .baselines import gan_style_schedule, plug_and_charge, shinwari_style_schedule
from .brd import BrdConfig, run_brd
from .costs import ChargingGame, CostConfig
from .equilibria import enumerate_equilibria, multi_ne_game
from .errors import EvcsError, ParseError
from .experiments import (DEFAULT_POWER_GRID, DeskSetup, convergence_probability_sweep,
                          lifetime_vs_fleet, monetary_cost_comparison, normalized_losses_table,
                          optimal_power_search, pareto_frontier)
from .io import (dumps_json, load_config, load_fleet_csv, load_profile_csv, write_csv,
                 write_profile_matrix_csv, write_report_csv)
from .model import LoadProfile, ev_load_matrix, scenario_s_fleet
from .thermal import TransformerParams, calibrate_exogenous_scale

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONCONVERGED = 0, 1, 2, 3
EXPERIMENTS = ("convergence", "lifetime", "power", "frontier", "money", "losses")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--seed", type=int, default=None, help="master seed (falls back to $EVCS_SEED, then 0)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--strict", action="store_true", help="exit 3 when BRD does not converge")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for replicates")


def _game_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--exo", help="exogenous demand CSV (slot,value)")
    p.add_argument("--ambient", help="ambient temperature CSV (slot,value)")
    p.add_argument("--ambient-c", type=float, default=20.0, help="constant ambient when no file is given")
    p.add_argument("--fleet", help="fleet CSV (id,arrival,departure,duration)")
    p.add_argument("--fleet-size", type=int, default=10, help="scenario (s) fleet when no file is given")
    p.add_argument("--duration", type=int, default=16)
    p.add_argument("--power", type=float, default=3.0, help="charging power per EV in kW")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--prices", help="price CSV (slot,value) for the individual cost")
    p.add_argument("--memoryless", action="store_true")
    p.add_argument("--common-window", action="store_true", help="charge every EV over the whole horizon")
    p.add_argument("--time-constant", type=float, default=2.5, help="top-oil time constant in hours")
    p.add_argument("--rated-kw", type=float, default=90.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evcs", description="EV charging scheduling with transformer-aware costs")
    parser.add_argument("--version", action="version", version=f"evcs {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("schedule", help="run best-response dynamics")
    _common(p)
    _game_options(p)
    p.add_argument("--max-rounds", type=int, default=100)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--initial", choices=("arrival", "random"), default="arrival")
    p.add_argument("--order", choices=("round_robin", "start_ascending"), default="round_robin")

    p = sub.add_parser("baseline", help="plug-and-charge or a continuous valley-filling scheme")
    _common(p)
    _game_options(p)
    p.add_argument("--policy", choices=("pac", "gan", "shinwari"), default="pac")
    p.add_argument("--penalty-weight", type=float, default=0.5)

    p = sub.add_parser("enumerate", help="all pure Nash equilibria and the PoD")
    _common(p)
    _game_options(p)
    p.add_argument("--instance", choices=("multi-ne",), help="built-in instance instead of files")
    p.add_argument("--budget", type=int, default=10**8)

    p = sub.add_parser("experiment", help="run a named desk-scale study")
    _common(p)
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--days", type=int, default=30)
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--fleet-sizes", type=_int_list, default=[5, 10, 20])
    p.add_argument("--fsnr", type=_float_list, default=[float("inf")])
    p.add_argument("--powers", type=_float_list, default=list(DEFAULT_POWER_GRID))
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--scenario", choices=("s", "t"), default="t")
    p.add_argument("--sigma-kw", type=float, default=26.0)

    p = sub.add_parser("calibrate", help="exogenous scale giving a 40-year no-EV lifetime")
    _common(p)
    p.add_argument("--exo", help="exogenous demand CSV; default is the synthetic desk year")
    p.add_argument("--ambient", help="ambient temperature CSV")
    p.add_argument("--days", type=int, default=30)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = load_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in subparser._actions}
    for key in values:
        if key not in known or key in ("config", "help", "name"):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
    defaults = {}
    for key, text in values.items():
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = text.strip().lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(text)
            except ValueError:
                raise UsageError(f"config key {key!r}: bad value {text!r}") from None
        else:
            defaults[key] = text
        if action.choices is not None and defaults[key] not in action.choices:
            raise UsageError(f"config key {key!r}: {text!r} not in {sorted(action.choices)}")
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("EVCS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"EVCS_SEED must be an integer, got {env!r}") from None


def _load_game(args) -> ChargingGame:
    if not args.exo:
        raise UsageError("--exo is required")
    exo = load_profile_csv(args.exo)
    grid = exo.grid
    if args.ambient:
        ambient = load_profile_csv(args.ambient, units="degC")
    else:
        ambient = LoadProfile.constant(args.ambient_c, grid, "degC")
    if args.fleet:
        fleet = load_fleet_csv(args.fleet, args.power)
    else:
        fleet = scenario_s_fleet(args.fleet_size, grid.slot_count, args.duration, args.power)
    prices = load_profile_csv(args.prices, units="price").values if args.prices else None
    cost = CostConfig(alpha=args.alpha, beta=args.beta, memoryless=args.memoryless, prices=prices,
                      common_window=tuple(grid.slots) if args.common_window else None)
    params = TransformerParams(rated_power_kw=args.rated_kw, thermal_time_constant_hours=args.time_constant)
    return ChargingGame(fleet, exo, ambient, params, cost)


def _emit_table(out: Path, stem: str, fmt: str, header, rows, payload) -> None:
    if fmt == "csv":
        write_csv(out / f"{stem}.csv", header, rows)
    else:
        (out / f"{stem}.json").write_text(dumps_json(payload))


def cmd_schedule(args, out: Path) -> int:
    game = _load_game(args)
    cfg = BrdConfig(tolerance_delta=args.delta, max_rounds=args.max_rounds, update_order=args.order,
                    rng_seed=_seed(args), initial=args.initial)
    res = run_brd(game, cfg)
    rows = [(k + 1, s) for k, s in enumerate(res.schedule)]
    _emit_table(out, "schedule", args.format, ("ev", "start"), rows,
                {"schedule": list(res.schedule)})
    _emit_table(out, "trajectory", args.format, ("round", "ev", "start", "payoff", "potential"),
                res.to_rows(), {"updates": [list(r) for r in res.to_rows()]})
    summary = res.summary()
    summary.update(seed=_seed(args), sum_payoff=game.sum_payoff(res.schedule),
                   payoffs=game.payoffs(res.schedule))
    (out / "summary.json").write_text(dumps_json(summary))
    if args.strict and not res.converged:
        raise _NonConverged(f"no fixed point within {args.max_rounds} rounds")
    return EXIT_OK


def cmd_baseline(args, out: Path) -> int:
    game = _load_game(args)
    fleet, exo = game.fleet, game.exo
    T = exo.grid.slot_count
    summary: dict = {"policy": args.policy}
    if args.policy == "pac":
        s = plug_and_charge(fleet)
        profiles = ev_load_matrix(fleet, s, T)
        summary["schedule"] = list(s)
    elif args.policy == "gan":
        res = gan_style_schedule(fleet, exo, penalty_weight=args.penalty_weight)
        profiles = res.profiles
        summary.update(converged=res.converged, iterations=res.iterations)
        if args.strict and not res.converged:
            write_profile_matrix_csv(out / "profiles.csv", profiles)
            raise _NonConverged("proximal iteration did not converge")
    else:
        profiles = shinwari_style_schedule(fleet, exo).profiles
    summary["aggregate_kw"] = profiles.sum(axis=0)
    if args.format == "csv":
        write_profile_matrix_csv(out / "profiles.csv", profiles)
    else:
        (out / "profiles.json").write_text(dumps_json({"profiles": profiles}))
    (out / "summary.json").write_text(dumps_json(summary))
    return EXIT_OK


def cmd_enumerate(args, out: Path) -> int:
    game = multi_ne_game() if args.instance == "multi-ne" else _load_game(args)
    report = enumerate_equilibria(game, args.budget)
    if args.format == "csv":
        write_csv(out / "equilibria.csv", ("index", *[f"ev{k + 1}" for k in range(len(game.fleet))]),
                  [(k + 1, *s) for k, s in enumerate(report.equilibria)])
    (out / "equilibria.json").write_text(dumps_json(report.summary()))
    return EXIT_OK


def cmd_experiment(args, out: Path) -> int:
    seed = _seed(args)
    setup = DeskSetup.build(args.days)
    name = args.name
    if name == "lifetime":
        policies = ("NoEV", "PaC", "BRD", "GanStyle", "ShinwariStyle")
        reports = [lifetime_vs_fleet(policies, args.fleet_sizes, f, args.days, args.replicates, seed,
                                     args.scenario, args.alpha, setup=setup, jobs=args.jobs)
                   for f in args.fsnr]
    elif name == "losses":
        reports = [normalized_losses_table(args.fleet_sizes, args.days, args.replicates, seed, setup,
                                           jobs=args.jobs)]
    elif name == "convergence":
        reports = [convergence_probability_sweep(args.fleet_sizes, args.replicates, args.sigma_kw,
                                                 args.alpha, seed=seed, setup=setup)]
    elif name == "power":
        reports = [optimal_power_search(args.powers, args.fsnr, args.fleet_sizes, days=args.days,
                                        replicates=args.replicates, seed=seed, alpha=args.alpha,
                                        setup=setup, jobs=args.jobs)]
    elif name == "frontier":
        reports = [pareto_frontier(setup=setup, seed=seed)]
    else:
        reports = [monetary_cost_comparison(fleet_sizes=args.fleet_sizes, seed=seed,
                                            scenario=args.scenario, setup=setup)]
    for k, rep in enumerate(reports):
        stem = "report" if len(reports) == 1 else f"report_{k + 1}"
        if args.format == "csv":
            write_report_csv(out / f"{stem}.csv", rep)
        (out / f"{stem}.json").write_text(dumps_json(rep.summary()))
    return EXIT_OK


def cmd_calibrate(args, out: Path) -> int:
    params = TransformerParams()
    if args.exo:
        exo = load_profile_csv(args.exo)
        if not args.ambient:
            raise UsageError("--ambient is required with --exo")
        ambient = load_profile_csv(args.ambient, units="degC")
        kappa = calibrate_exogenous_scale(exo, ambient, params)
    else:
        kappa = DeskSetup.build(args.days).kappa
    (out / "calibration.json").write_text(dumps_json({"kappa": kappa}))
    return EXIT_OK


class _NonConverged(Exception):
    pass


COMMANDS = {
    "schedule": cmd_schedule,
    "baseline": cmd_baseline,
    "enumerate": cmd_enumerate,
    "experiment": cmd_experiment,
    "calibrate": cmd_calibrate,
}


def _fail(kind: str, message: str, code: int) -> int:
    print(f"evcs: error[{kind}]: {message}", file=sys.stderr)
    return code


def run_cli(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return COMMANDS[args.command](args, out)
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except _NonConverged as exc:
        return _fail("nonconvergence", str(exc), EXIT_NONCONVERGED)
    except (EvcsError, OSError, ValueError) as exc:
        kind = "parse" if isinstance(exc, ParseError) else "data"
        return _fail(kind, str(exc), EXIT_DATA)


def main() -> None:
    sys.exit(run_cli())
