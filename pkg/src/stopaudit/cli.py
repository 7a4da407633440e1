"""Command-line entry point.

Exit codes: 0 success, 1 run completed but every group was excluded,
2 usage error, 3 IO/config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .errors import StopAuditError
from .report import STATUS_EXCLUSIONS_ONLY, run_pipeline

EXIT_OK = 0
EXIT_EXCLUSIONS_ONLY = 1
EXIT_USAGE = 2
EXIT_IO_CONFIG = 3


def _float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stopaudit",
        description=(
            "Audit stop-record datasets for non-random missingness and "
            "quantify how missing race labels could shift disparity statistics."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", required=True, help="delimited data file")
            p.add_argument(
                "--config",
                required=True,
                help="TOML/JSON schema config (columns, na_tokens, delimiter)",
            )
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="run seed")
        p.add_argument("--svg", action="store_true", help="also render SVG charts")

    p_audit = sub.add_parser("audit", help="conditional missingness audit")
    add_common(p_audit)
    p_audit.add_argument(
        "--bin",
        choices=("day", "week", "hour", "geohash"),
        default="week",
        help="bin kind for the conditioning variable",
    )
    p_audit.add_argument("--geohash-precision", type=int, default=6)
    p_audit.add_argument(
        "--cond", default="date", help="conditioning variable (ignored for geohash)"
    )
    p_audit.add_argument(
        "--variables",
        default=None,
        help="comma-separated variable list (default: core variables present)",
    )

    p_out = sub.add_parser("outcome-sens", help="outcome-test sensitivity")
    add_common(p_out)
    p_out.add_argument("--group-by", required=True, dest="group_by")
    p_out.add_argument("--cap", type=int, default=1_000_000)
    p_out.add_argument("--race-var", default="subject_race", dest="race_var")
    p_out.add_argument("--search-var", default="search_conducted", dest="search_var")
    p_out.add_argument(
        "--contraband-var", default="contraband_found", dest="contraband_var"
    )

    p_ate = sub.add_parser("ate-sens", help="search ATE bound sensitivity")
    add_common(p_ate)
    p_ate.add_argument("--rhos", type=_float_list, default=[0.25, 0.5, 0.75])
    p_ate.add_argument("--props", type=_float_list, default=[0.0, 0.25, 0.5, 0.75, 1.0])
    p_ate.add_argument("--draws", type=int, default=1)
    p_ate.add_argument(
        "--estimand", choices=("pooled", "black-stops"), default="pooled"
    )
    p_ate.add_argument("--race-var", default="subject_race", dest="race_var")
    p_ate.add_argument("--search-var", default="search_conducted", dest="search_var")

    p_synth = sub.add_parser("synth", help="generate synthetic stop tables")
    add_common(p_synth, needs_input=False)
    p_synth.add_argument(
        "--mechanism", choices=("mcar", "mar", "mnar"), required=True
    )
    p_synth.add_argument("--n", type=int, default=10000)
    p_synth.add_argument("--weeks", type=int, default=50)
    p_synth.add_argument("--p", type=float, default=0.3)
    p_synth.add_argument("--slope", type=float, default=4.0)
    p_synth.add_argument("--intercept", type=float, default=-2.0)
    p_synth.add_argument(
        "--rates",
        default=None,
        help='JSON object of per-race mask rates, e.g. {"black":0.4,"white":0.1}',
    )
    return parser


def _namespace_to_config(args: argparse.Namespace) -> dict:
    config = {k: v for k, v in vars(args).items() if k != "command" and v is not None}
    if "variables" in config and isinstance(config["variables"], str):
        config["variables"] = [
            tok.strip() for tok in config["variables"].split(",") if tok.strip()
        ]
    if "rates" in config and isinstance(config["rates"], str):
        config["rates"] = json.loads(config["rates"])
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _namespace_to_config(args)
    try:
        manifest = run_pipeline(args.command, config)
    except (StopAuditError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO_CONFIG
    if manifest.status == STATUS_EXCLUSIONS_ONLY:
        print("warning: every group was excluded from the analysis", file=sys.stderr)
        return EXIT_EXCLUSIONS_ONLY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
