"""Command-line entry point: ``report tool ROOT_DIR OUT_HTML``."""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .artifacts import ArtifactError
from .render import generate_report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="report",
        description="Render a static HTML report from simulation run CSVs.")
    sub = parser.add_subparsers(dest="command", required=True)
    tool = sub.add_parser("tool", help="generate the report")
    tool.add_argument("root", help="run directory containing the CSVs")
    tool.add_argument("out_html", help="path of the HTML file to write")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        summary = generate_report(args.root, args.out_html)
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"report written to {summary.html_path}")
    for kind, status in sorted(summary.status.items()):
        print(f"  {kind}: {status}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
