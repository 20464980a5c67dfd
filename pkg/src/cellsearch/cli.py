"""Command-line front end.

Subcommands::

    search        run a strategy from a config file, print the best row
    compare       render run directories side by side with a summary table
    report        re-render one run directory's report from its trial log
    count-params  parameter count and size string for a candidate
    decode        decode a genome bitstring into cell counts

Exit codes: 0 success, 1 run abort, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Any

from . import __version__
from .config import load_config
from .errors import CodecError, ConfigError, RunAborted
from .harness import best_row_text, render_comparison, render_report, replay, run
from .space import (
    CandidateArchitecture,
    GenomeLayout,
    candidate_params,
    decode_genome,
    format_size_millions,
    genome_from_string,
)


def _evaluator_override(text: str) -> dict[str, Any]:
    """Parse an evaluator flag: kind, optionally kind:argument.

    The argument is the table name for ``table`` and the worker command for
    ``external``; the other kinds take none.
    """
    kind, _, arg = text.partition(":")
    kind = kind.replace("-", "_")
    if kind == "surrogate":
        return {"kind": "surrogate"}
    if kind == "param_count":
        return {"kind": "param_count"}
    if kind == "table":
        if not arg:
            raise ConfigError("--evaluator table needs a name: table:<name-or-path>")
        return {"kind": "table", "table": arg}
    if kind == "external":
        if not arg:
            raise ConfigError("--evaluator external needs a command: external:<command>")
        return {"kind": "external", "command": arg}
    raise ConfigError(f"unknown evaluator {text!r}")


def _cmd_search(args: argparse.Namespace) -> int:
    overrides: dict[str, Any] = {}
    if args.strategy:
        overrides["strategy"] = {"kind": args.strategy}
    if args.evaluator:
        overrides["evaluator"] = _evaluator_override(args.evaluator)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.cache is not None:
        overrides["cache"] = args.cache
    config = load_config(args.config, overrides)
    report = run(config, args.out)
    print(best_row_text(report))
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    doc = render_comparison([replay(d) for d in args.run_dirs])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(doc)
    print(doc, end="")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    print(render_report(replay(args.run_dir)), end="")
    return 0


def _cmd_count_params(args: argparse.Namespace) -> int:
    if args.conv < 0 or args.dense < 0:
        args.parser.error("--conv and --dense must be >= 0")
    n = candidate_params(CandidateArchitecture(args.conv, args.dense))
    print(f"{n} ({format_size_millions(n)})")
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    layout = GenomeLayout()
    try:
        genome = genome_from_string(args.genome)
        candidate = decode_genome(genome, layout)
    except CodecError as exc:
        args.parser.error(str(exc))
    print(f"conv={candidate.conv_cells} dense={candidate.dense_cells}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellsearch",
        description="Search cell-count CNN architectures with grid, random, or genetic strategies.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run a search strategy from a config file")
    p.add_argument("--config", required=True, help="config file path or shipped fixture name")
    p.add_argument("--strategy", choices=["grid", "random", "ga"],
                   help="override the config's strategy kind")
    p.add_argument("--evaluator",
                   help="override the evaluator: surrogate | param-count | table:<name> | external:<command>")
    p.add_argument("--seed", type=int, help="override the run seed")
    p.add_argument("--workers", type=int, help="number of external workers")
    p.add_argument("--cache", action=argparse.BooleanOptionalAction, default=None,
                   help="enable or disable the evaluation cache")
    p.add_argument("--out", required=True, help="run output directory")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("compare", help="compare finished runs")
    p.add_argument("run_dirs", nargs="+", metavar="RUN_DIR", help="run directories to compare")
    p.add_argument("--out", help="also write the comparison to this file")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("report", help="render a run report from its trial log")
    p.add_argument("run_dir", metavar="RUN_DIR", help="run directory")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("count-params", help="parameter count for a candidate")
    p.add_argument("--conv", type=int, required=True, help="number of conv cells")
    p.add_argument("--dense", type=int, required=True, help="number of dense cells")
    p.set_defaults(func=_cmd_count_params)

    p = sub.add_parser("decode", help="decode a genome bitstring")
    p.add_argument("--genome", required=True, help="bitstring, e.g. 00100010")
    p.set_defaults(func=_cmd_decode)

    for action in sub.choices.values():
        action.set_defaults(parser=action)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RunAborted as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
