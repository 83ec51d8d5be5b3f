"""Render figure recipes from fptcage CSV artifacts.

A recipe is a declarative JSON file: input CSV paths, panel layout, axis
scales, labels, and the output image path.  Rendering is a pure function of
recipe plus CSV content: a fixed style, the Agg backend, and pinned PNG
metadata make re-renders byte-identical on one toolchain.

Style conventions: solid lines for filtration curves, dotted lines for
eigenfunction-expansion references, bare dots for Monte Carlo histograms.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLES = {
    "line": dict(linestyle="-", marker=""),
    "dotted": dict(linestyle=":", marker=""),
    "dots": dict(linestyle="", marker="o", markersize=3.0),
}

_RC = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.4,
    "axes.prop_cycle": plt.cycler(
        color=["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    ),
}


class RecipeError(ValueError):
    """Recipe or CSV contents do not allow rendering."""


def read_csv_columns(path: Path) -> dict[str, np.ndarray]:
    if not path.exists():
        raise RecipeError(f"input CSV not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RecipeError(f"{path}: empty CSV") from None
        rows = list(reader)
    if not rows:
        raise RecipeError(f"{path}: CSV has a header but no data rows")
    cols = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[j]) for r in rows])
        except ValueError:
            cols[name] = np.array([r[j] for r in rows])
    return cols


def _need(cols, names, path):
    missing = [n for n in names if n not in cols]
    if missing:
        raise RecipeError(
            f"{path}: missing columns {missing}; found {sorted(cols)}"
        )


def _draw_curves(ax, curves, base: Path):
    for spec in curves:
        path = base / spec["csv"]
        cols = read_csv_columns(path)
        if spec.get("terms"):
            term_names = [n for n in cols if n.startswith("term_")]
            if not term_names:
                raise RecipeError(f"{path}: no term_<n> columns for a terms panel")
            _need(cols, ["t"], path)
            for name in sorted(term_names, key=lambda n: int(n.split("_")[1])):
                ax.plot(cols["t"], cols[name], **_STYLES["line"], label=name)
            continue
        x = spec.get("x", "t")
        y = spec.get("y", "value")
        _need(cols, [x, y], path)
        style = _STYLES.get(spec.get("style", "line"))
        if style is None:
            raise RecipeError(f"unknown style {spec.get('style')!r}")
        ax.plot(cols[x], cols[y], **style, label=spec.get("label"))


def render(recipe_path, output=None) -> Path:
    """Render one recipe file; returns the written image path."""
    recipe_path = Path(recipe_path)
    with open(recipe_path, "r", encoding="utf-8") as fh:
        recipe = json.load(fh)
    base = recipe_path.parent
    panels = recipe.get("panels")
    if not panels:
        raise RecipeError("recipe has no panels")
    out = Path(output) if output else base / recipe["output"]
    out.parent.mkdir(parents=True, exist_ok=True)

    with plt.rc_context(_RC):
        fig, axes = plt.subplots(
            1, len(panels), figsize=recipe.get("figsize", [4.2 * len(panels), 3.2])
        )
        if len(panels) == 1:
            axes = [axes]
        for ax, panel in zip(axes, panels):
            _draw_curves(ax, panel.get("curves", []), base)
            ax.set_xscale(panel.get("xscale", "linear"))
            ax.set_yscale(panel.get("yscale", "linear"))
            if panel.get("xlim"):
                ax.set_xlim(panel["xlim"])
            if panel.get("ylim"):
                ax.set_ylim(panel["ylim"])
            else:
                ax.margins(x=0.05, y=0.05)
            ax.set_xlabel(panel.get("xlabel", "t"))
            ax.set_ylabel(panel.get("ylabel", "density"))
            if panel.get("title"):
                ax.set_title(panel["title"])
            if any(c.get("label") or c.get("terms") for c in panel.get("curves", [])):
                ax.legend(frameon=False)
            inset = panel.get("inset")
            if inset:
                ia = ax.inset_axes(inset.get("rect", [0.5, 0.5, 0.45, 0.42]))
                _draw_curves(ia, inset.get("curves", panel.get("curves", [])), base)
                if inset.get("xlim"):
                    ia.set_xlim(inset["xlim"])
                if inset.get("ylim"):
                    ia.set_ylim(inset["ylim"])
                ia.set_xscale(inset.get("xscale", "linear"))
                ia.set_yscale(inset.get("yscale", "linear"))
                ia.tick_params(labelsize=6)
        fig.tight_layout()
        fig.savefig(out, metadata={"Software": "fptplots"})
        plt.close(fig)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fptcage-plots", description="Render a figure recipe from CSV artifacts"
    )
    parser.add_argument("recipe", help="recipe JSON file")
    parser.add_argument("-o", "--output", default=None, help="override output path")
    args = parser.parse_args(argv)
    try:
        out = render(args.recipe, args.output)
    except (RecipeError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"render failed: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
