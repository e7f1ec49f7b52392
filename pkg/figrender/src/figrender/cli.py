"""render_figs command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys

from .render import PlotSpec, RenderError, render

_STYLE_KEYS = {"columns", "title", "xlabel", "ylabel", "figsize", "dpi", "cmap"}


def _load_style(path) -> dict:
    with open(path) as fh:
        style = json.load(fh)
    if not isinstance(style, dict):
        raise RenderError("style file must be a JSON object")
    unknown = set(style) - _STYLE_KEYS
    if unknown:
        raise RenderError(f"unknown style keys: {sorted(unknown)}")
    return style


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figs", description="Render sweep CSVs as line plots or heatmaps"
    )
    parser.add_argument("--csv", required=True)
    parser.add_argument("--kind", required=True, choices=("lines", "heatmap"))
    parser.add_argument("--out", required=True)
    parser.add_argument("--style", help="JSON file with columns/labels/figsize/dpi/cmap")
    args = parser.parse_args(argv)
    try:
        style = _load_style(args.style) if args.style else {}
        spec = PlotSpec(
            csv_path=args.csv,
            kind=args.kind,
            out_path=args.out,
            columns=tuple(style.get("columns", ())),
            title=style.get("title", ""),
            xlabel=style.get("xlabel", ""),
            ylabel=style.get("ylabel", ""),
            figsize=tuple(style.get("figsize", (6.0, 4.0))),
            dpi=int(style.get("dpi", 150)),
            cmap=style.get("cmap", "RdBu_r"),
        )
        render(spec)
    except (RenderError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
