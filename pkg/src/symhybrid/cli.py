"""Command-line entry point ``hybrid``.

Exit codes: 0 when every verdict or identity passes, 1 on any failure,
2 on usage or schema errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .identities import check_identities
from .scenario import SchemaError, Scenario, coupled_oscillator, run, write_outputs

EXAMPLES = {"coupled-oscillator": coupled_oscillator}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hybrid", description="Hybrid quantum-classical prediction runner.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a scenario file and write results")
    r.add_argument("scenario", help="scenario JSON file")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--threads", type=_positive, default=1)
    r.add_argument("--seed", type=int, default=None, help="recorded in the bundle")

    c = sub.add_parser("check-identities", help="randomized algebraic property suites")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--trials", type=_positive, default=100)

    e = sub.add_parser("example", help="print a bundled scenario file")
    e.add_argument("--name", choices=sorted(EXAMPLES), default="coupled-oscillator")
    e.add_argument("--k", type=float, default=0.1, help="coupling constant")
    return ap


def _cmd_run(args) -> int:
    try:
        sc = Scenario.load(args.scenario)
    except OSError as exc:
        print(f"hybrid: cannot read {args.scenario}: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"hybrid: schema error: {exc}", file=sys.stderr)
        return 2
    bundle = run(sc, threads=args.threads, seed=args.seed)
    write_outputs(bundle, args.out)
    for w in bundle["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    checked = [r for r in bundle["bounds"] if r["verdict"] != "skipped"]
    failed = [r for r in checked if r["verdict"] == "fail"]
    print(f"{len(checked) - len(failed)}/{len(checked)} verdicts pass; results in {args.out}")
    return 0 if bundle["all_pass"] else 1


def _cmd_identities(args) -> int:
    rep = check_identities(args.seed, args.trials)
    print(json.dumps(rep.to_dict(), indent=1, sort_keys=True))
    return 0 if rep.passed else 1


def _cmd_example(args) -> int:
    print(json.dumps(EXAMPLES[args.name](args.k), indent=1))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "check-identities": _cmd_identities, "example": _cmd_example}
    return handler[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
