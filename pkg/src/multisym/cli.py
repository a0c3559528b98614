"""Command-line entry point: ``multisym {derive,classify,verify,solve} SPEC``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import MultisymError
from .report import COMMANDS, Options, execute
from .theory import load_spec


def _grid(text: str) -> tuple:
    try:
        return tuple(int(n) for n in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 64x200, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multisym", description="Multisymplectic field-theory workbench.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("spec", help="theory spec JSON file, or the name of a bundled fixture")
    p.add_argument("--samples", type=int, default=64, help="sample count for regularity and zero tests")
    p.add_argument("--tol", type=float, default=None, help="numeric tolerance (default 1e-10 symbolic, 1e-3 PDE)")
    p.add_argument("--json", dest="json_out", metavar="OUT", help="also write the JSON report to OUT")
    p.add_argument("--connection", choices=("trivial", "spec"), default="trivial")
    p.add_argument("--latex", action="store_true", help="include LaTeX renderings of forms")
    p.add_argument("--grid", type=_grid, default=None, help="override grid shape, e.g. 64x200")
    p.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    opts = Options(args.samples, args.tol, args.connection, args.latex, args.grid, args.seed)
    try:
        spec = load_spec(args.spec)
        rep = execute(args.command, spec, opts)
    except MultisymError as exc:
        err = {"command": args.command, "error": {"code": exc.code, "message": str(exc)}, "exit_status": exc.exit_status}
        print(json.dumps(err, indent=2))
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_status
    text = json.dumps(rep.as_dict(), indent=2, ensure_ascii=False)
    print(text)
    if args.json_out:
        with open(args.json_out, "w") as fh:
            fh.write(text + "\n")
    return rep.exit_status


if __name__ == "__main__":
    sys.exit(main())
