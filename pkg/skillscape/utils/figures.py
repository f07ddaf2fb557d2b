"""Mean-ARI line charts written as plain SVG."""

import html
import re
from collections.abc import Sequence
from pathlib import Path
from typing import Union

import pandas as pd

from ..models import ResultRow

WIDTH = 640
HEIGHT = 420
MARGIN_LEFT = 60
MARGIN_RIGHT = 170
MARGIN_TOP = 40
MARGIN_BOTTOM = 50

PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
)

AGGREGATE_COLUMNS = [
    "generating_model",
    "hierarchy",
    "method",
    "proportion",
    "mean_ARI",
    "replications",
]


class SvgCanvas:
    """Minimal SVG string builder."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.svg = (
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">\n'
        )

    def rect(self, x, y, width, height, fill="none", extra="") -> None:
        self.svg += (
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{width:.1f}" '
            f'height="{height:.1f}" fill="{fill}" {extra}/>\n'
        )

    def line(self, x1, y1, x2, y2, stroke="#000000", extra="") -> None:
        self.svg += (
            f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
            f'stroke="{stroke}" {extra}/>\n'
        )

    def polyline(self, points: Sequence[tuple[float, float]], stroke: str) -> None:
        coords = " ".join(f"{x:.1f},{y:.1f}" for x, y in points)
        self.svg += (
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="2"/>\n'
        )

    def circle(self, x, y, r, fill, extra="") -> None:
        self.svg += (
            f'<circle cx="{x:.1f}" cy="{y:.1f}" r="{r:.1f}" fill="{fill}" {extra}/>\n'
        )

    def text(self, x, y, string, extra="") -> None:
        self.svg += (
            f'<text x="{x:.1f}" y="{y:.1f}" {extra}>{html.escape(str(string))}</text>\n'
        )

    def get_svg(self) -> str:
        return f"{self.svg}</svg>\n"


def aggregate_mean_ari(rows: Sequence[ResultRow]) -> pd.DataFrame:
    """Mean ARI per (model, hierarchy, method, proportion), failed rows excluded.

    Returns:
        DataFrame with AGGREGATE_COLUMNS, sorted by model, hierarchy, method
        and proportion
    """
    records = [
        {
            "generating_model": row.generating_model,
            "hierarchy": row.hierarchy,
            "method": row.method,
            "proportion": row.proportion,
            "ARI": row.ARI,
        }
        for row in rows
        if row.ARI is not None
    ]
    if not records:
        return pd.DataFrame(columns=AGGREGATE_COLUMNS)

    df = pd.DataFrame(records)
    grouped = df.groupby(
        ["generating_model", "hierarchy", "method", "proportion"], sort=True
    )["ARI"].agg(["mean", "count"])
    grouped = grouped.reset_index().rename(
        columns={"mean": "mean_ARI", "count": "replications"}
    )
    return grouped[AGGREGATE_COLUMNS]


def _file_name(model: str, hierarchy: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", f"{model.lower()}_{hierarchy}") + ".svg"


def _plot_x(proportion: float) -> float:
    return MARGIN_LEFT + proportion * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)


def _plot_y(value: float) -> float:
    return HEIGHT - MARGIN_BOTTOM - value * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)


def render_chart(
    title: str, series: dict[str, list[tuple[float, float]]]
) -> tuple[str, int]:
    """Draw one chart of mean ARI against proportion of profiles present.

    Values below 0 are drawn at 0 with a hollow red marker.

    Args:
        title: Chart title
        series: Method name -> (proportion, mean ARI) points, in legend order

    Returns:
        Tuple of (SVG document, number of clipped points)
    """
    canvas = SvgCanvas(WIDTH, HEIGHT)
    canvas.rect(0, 0, WIDTH, HEIGHT, fill="#ffffff")
    canvas.text(
        MARGIN_LEFT, MARGIN_TOP - 15, title, 'font-size="16" font-family="sans-serif"'
    )

    left, right = _plot_x(0.0), _plot_x(1.0)
    bottom, top = _plot_y(0.0), _plot_y(1.0)
    canvas.line(left, bottom, right, bottom)
    canvas.line(left, bottom, left, top)
    for step in range(5):
        tick = step / 4
        canvas.line(_plot_x(tick), bottom, _plot_x(tick), bottom + 5)
        canvas.text(
            _plot_x(tick) - 10, bottom + 18, f"{tick:.2f}", 'font-size="11"'
        )
    for step in range(6):
        tick = step / 5
        canvas.line(left - 5, _plot_y(tick), left, _plot_y(tick))
        canvas.line(left, _plot_y(tick), right, _plot_y(tick), "#dddddd")
        canvas.text(left - 32, _plot_y(tick) + 4, f"{tick:.1f}", 'font-size="11"')
    canvas.text(
        (left + right) / 2 - 90,
        HEIGHT - 12,
        "Proportion of possible profiles present",
        'font-size="12"',
    )
    middle = (top + bottom) / 2
    canvas.text(
        15, middle, "Mean ARI", f'font-size="12" transform="rotate(-90 15 {middle:.1f})"'
    )

    clipped = 0
    legend_x = right + 15
    for index, (method, points) in enumerate(series.items()):
        color = PALETTE[index % len(PALETTE)]
        drawn = [(_plot_x(x), _plot_y(min(max(y, 0.0), 1.0))) for x, y in points]
        if len(drawn) > 1:
            canvas.polyline(drawn, color)
        for (x, y), (_, value) in zip(drawn, points):
            if value < 0:
                clipped += 1
                canvas.circle(x, y, 4, "none", 'stroke="#d62728" stroke-width="1.5"')
            else:
                canvas.circle(x, y, 3, color)

        legend_y = top + 10 + index * 20
        canvas.line(legend_x, legend_y, legend_x + 20, legend_y, color, 'stroke-width="2"')
        canvas.text(legend_x + 26, legend_y + 4, method, 'font-size="11"')

    if clipped:
        canvas.text(
            legend_x,
            top + 20 + len(series) * 20,
            f"{clipped} mean(s) below 0 drawn at 0",
            'font-size="10" fill="#d62728"',
        )
    return canvas.get_svg(), clipped


def render_figures(
    rows: Sequence[ResultRow], out_dir: Union[str, Path]
) -> list[Path]:
    """Write one SVG per (generating model, hierarchy) found in ``rows``.

    Returns:
        Paths of the written files, in (model, hierarchy) order

    Raises:
        ValueError: If ``rows`` is empty
        OSError: If the output directory or a file cannot be written
    """
    if not rows:
        raise ValueError("No result rows to plot")

    out_path = Path(out_dir)
    try:
        out_path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"Could not create figure directory {out_path}: {e}") from e

    methods = list(dict.fromkeys(row.method for row in rows))
    panels = list(dict.fromkeys((row.generating_model, row.hierarchy) for row in rows))
    means = aggregate_mean_ari(rows)

    written = []
    for model, hierarchy in sorted(panels):
        panel = means[
            (means["generating_model"] == model) & (means["hierarchy"] == hierarchy)
        ]
        series = {}
        for method in methods:
            points = panel[panel["method"] == method].sort_values("proportion")
            if not points.empty:
                series[method] = list(
                    zip(points["proportion"].astype(float), points["mean_ARI"].astype(float))
                )

        svg, _ = render_chart(f"{model}: {hierarchy}", series)
        path = out_path / _file_name(model, hierarchy)
        try:
            path.write_text(svg, encoding="utf-8")
        except OSError as e:
            raise OSError(f"Could not write figure {path}: {e}") from e
        written.append(path)
    return written
