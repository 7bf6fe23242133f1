"""zkplot: render figures from zkdamp CSV/summary artifacts.

    zkplot render --kind decay --in out/uniform_decay.csv \
        --summary out/summary.jsonl --out decay.png
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureError, FigureSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="zkplot")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure")
    r.add_argument("--kind", choices=FIGURE_KINDS, required=True)
    r.add_argument("--in", dest="inputs", action="append", default=[],
                   help="input CSV (repeatable)")
    r.add_argument("--summary", default=None, help="suite summary JSONL")
    r.add_argument("--suite", default=None, help="summary record to use")
    r.add_argument("--out", required=True, help="output image path")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        render(FigureSpec(kind=args.kind, inputs=args.inputs, output=args.out,
                          summary=args.summary, suite=args.suite))
    except (FigureError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
