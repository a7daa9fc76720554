"""Command-line entry point: ``cartanlab <subcommand> [--preset NAME | --config PATH] ...``.

Exit codes: 0 when no check fails, 1 on a FAIL (or a WARN under --strict),
2 on configuration errors.  Configuration errors never print a partial report.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

from . import suites
from .config import DEFAULT_SEED, SUBCOMMANDS, build, load_json_file
from .errors import CartanLabError, ConfigError
from .presets import catalog, find
from .report import Report

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
DEFAULT_SAMPLES = 16


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}", "argv")


def _seed(text: str) -> int:
    try:
        value = int(text, 16)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid hexadecimal seed {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("the seed must be non-negative")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("expected a positive number")
    return value


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cartanlab", description="Numerical verification suites for Cartan connections.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--preset", metavar="NAME")
        src.add_argument("--config", metavar="PATH")
        p.add_argument("--samples", type=_positive_int, default=DEFAULT_SAMPLES)
        p.add_argument("--seed", type=_seed, default=DEFAULT_SEED, metavar="HEX")
        p.add_argument("--tol-scale", type=_positive_float, default=1.0)
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--strict", action="store_true",
                       help="enforce invariance of complements and treat WARN as failure")
        p.add_argument("--csv", metavar="PATH", help="write residual-vs-parameter series as CSV")
        if name == "prolong":
            p.add_argument("--group", help="group preset (used when no preset or config is given)")
            p.add_argument("--k-max", type=int, dest="k_max")
    lp = sub.add_parser("list-presets")
    lp.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def resolve_config(args) -> tuple[str, dict]:
    """(source label, config dict) from --preset, --config or prolong's --group."""
    if args.preset:
        p = find(args.preset, args.subcommand)
        config, source = json.loads(json.dumps(p.config)), f"preset:{p.name}"
    elif args.config:
        data = load_json_file(args.config)
        if isinstance(data, dict) and "config" in data and "subcommand" in data:
            if data["subcommand"] != args.subcommand:
                raise ConfigError(f"{args.config}: file is for subcommand {data['subcommand']!r}", "subcommand")
            data = data["config"]
        config, source = data, f"config:{args.config}"
    elif args.subcommand == "prolong" and args.group:
        config, source = {"group": args.group}, f"group:{args.group}"
    else:
        raise ConfigError("one of --preset or --config is required", "argv")
    if args.subcommand == "prolong" and isinstance(config, dict):
        if args.group and (args.preset or args.config):
            config["group"] = args.group
        if args.k_max is not None:
            config["k_max"] = args.k_max
    return source, config


def run_suite(subcommand: str, objs: dict, samples: int, seed: int, strict: bool) -> suites.SuiteResult:
    if subcommand == "check":
        return suites.check_suite(objs["connection"], samples, seed, objs["flat"])
    if subcommand == "chern-weil":
        return suites.chern_weil_suite(objs["f"], objs["conn0"], objs["conn1"], samples, seed)
    if subcommand == "extend":
        return suites.extend_suite(objs["connection"], objs["ext"], samples, seed)
    if subcommand == "develop":
        return suites.develop_suite(objs["psi"], samples, seed, objs["paths"], objs["loops"], objs["steps"])
    if subcommand == "prolong":
        return suites.prolong_suite(objs["g"], objs["k_max"], strict or objs["strict"], seed)
    if subcommand == "gstructure":
        return suites.gstructure_suite(objs["struct"], samples, seed, strict or objs["strict"])
    if subcommand == "jets":
        return suites.jets_suite(objs["g"], objs["k"], samples, seed)
    raise ConfigError(f"unknown subcommand {subcommand!r}", "subcommand")


def run(args) -> tuple[Report, int]:
    source, config = resolve_config(args)
    objs = build(args.subcommand, config)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = run_suite(args.subcommand, objs, args.samples, args.seed, args.strict)
    checks = [c.scaled(args.tol_scale) for c in result.checks]
    report = Report(args.subcommand, source, args.seed, args.samples, args.tol_scale, args.strict, checks,
                    result.info, result.series)
    return report, report.exit_code


def list_presets(fmt: str) -> str:
    cat = catalog()
    if fmt == "json":
        return json.dumps(cat, sort_keys=True, indent=2) + "\n"
    lines = ["algebras:"]
    for a in cat["algebras"]:
        lines.append(f"  {a['name']:<7} dim={a['dim']:<2} matrix_size={a['matrix_size']}  {a['group']}")
    for sc, items in cat["presets"].items():
        lines.append(f"{sc}:")
        lines += [f"  {p['name']:<14} {p['description']}" for p in items]
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        if args.subcommand == "list-presets":
            sys.stdout.write(list_presets(args.format))
            return EXIT_OK
        report, code = run(args)
    except ConfigError as exc:
        print(f"cartanlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CartanLabError as exc:
        print(f"cartanlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    sys.stdout.write(report.to_json() if args.format == "json" else report.to_text())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.to_csv())
    return code


if __name__ == "__main__":
    sys.exit(main())
