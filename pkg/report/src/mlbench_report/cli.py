"""Command-line front end: mlbench-report --manifest <path> --out report.pdf."""

import argparse
import sys

from .report import FIGURE_NAMES, ReportError, ReportSpec, render_report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mlbench-report",
        description="Render mlbench experiment outputs into a PDF report.",
    )
    parser.add_argument("--manifest", nargs="+", required=True,
                        metavar="PATH", help="experiment manifest.json file(s)")
    parser.add_argument("--figures", nargs="+", choices=FIGURE_NAMES,
                        help="figures to render (default: all the manifest supports)")
    parser.add_argument("--out", required=True, metavar="PDF",
                        help="output PDF path")
    args = parser.parse_args(argv)

    try:
        spec = ReportSpec(
            manifests=tuple(args.manifest),
            out_path=args.out,
            figures=tuple(args.figures) if args.figures is not None else None,
        )
        out = render_report(spec)
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
