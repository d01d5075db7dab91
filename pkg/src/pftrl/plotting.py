"""Self-contained SVG line plots of exploitability curves (log10 scale)."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .harness import ResultsFile, mean_curves

FLOOR = 1e-12
WIDTH, HEIGHT = 720, 440
MARGIN = dict(left=70, right=190, top=40, bottom=55)
PALETTE = ("#1f77b4", "#d62728", "#9467bd", "#ff7f0e", "#2ca02c", "#8c564b", "#e377c2", "#7f7f7f")


def _log(values) -> np.ndarray:
    return np.log10(np.maximum(np.asarray(values, dtype=np.float64), FLOOR))


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (step * m) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _series_label(algo: str, sampling: str) -> str:
    prefix = {"full": "", "outcome": "OS-", "external": "ES-"}.get(sampling, sampling + "-")
    return prefix + algo.upper()


def render_svg(curves: dict, title: str) -> str:
    """SVG text for one panel; ``curves`` maps (game, algo, sampling) to a Curve."""
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    xmax = max(float(c.iterations.max()) for c in curves.values()) or 1.0
    ys = np.concatenate([np.concatenate([_log(c.low), _log(c.high)]) for c in curves.values()])
    ylo, yhi = float(ys.min()), float(ys.max())
    if yhi - ylo < 1e-9:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad

    def px(it):
        return x0 + (x1 - x0) * float(it) / xmax

    def py(v):
        return y0 - (y0 - y1) * (float(v) - ylo) / (yhi - ylo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{(x0 + x1) / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="#333"/>',
    ]
    for v in _ticks(ylo, yhi):
        out.append(f'<line x1="{x0}" y1="{py(v):.2f}" x2="{x1}" y2="{py(v):.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{x0 - 6}" y="{py(v) + 4:.2f}" text-anchor="end">{v:g}</text>')
    for v in _ticks(0.0, xmax):
        out.append(f'<text x="{px(v):.2f}" y="{y0 + 18}" text-anchor="middle">{v:g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">iteration</text>')
    out.append(
        f'<text x="18" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2:.1f})">log10 exploitability</text>'
    )
    for k, (key, c) in enumerate(sorted(curves.items())):
        color = PALETTE[k % len(PALETTE)]
        lo, hi, mean = _log(c.low), _log(c.high), _log(c.mean)
        if (hi > lo).any():
            pts = [(px(i), py(v)) for i, v in zip(c.iterations, hi)]
            pts += [(px(i), py(v)) for i, v in zip(c.iterations[::-1], lo[::-1])]
            poly = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polygon points="{poly}" fill="{color}" fill-opacity="0.18" stroke="none"/>')
        line = " ".join(f"{px(i):.2f},{py(v):.2f}" for i, v in zip(c.iterations, mean))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        ly = y1 + 14 + 20 * k
        out.append(f'<line x1="{x1 + 12}" y1="{ly}" x2="{x1 + 36}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x1 + 42}" y="{ly + 4}">{escape(_series_label(key[1], key[2]))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(results: list[ResultsFile], path, metric: str = "exploit_last") -> list[Path]:
    """Write one SVG per game found in ``results``.

    With a single game the file goes to ``path``; with several, each game gets
    ``<stem>_<game>.svg`` next to it.  Returns the written paths.
    """
    rows = [r for res in results for r in res.rows]
    if not rows:
        raise ValueError("nothing to plot: no result rows")
    curves = mean_curves(rows, metric)
    by_game: dict[str, dict] = {}
    for key, c in curves.items():
        by_game.setdefault(key[0], {})[key] = c
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for game, cs in sorted(by_game.items()):
        target = path if len(by_game) == 1 else path.with_name(f"{path.stem}_{game}{path.suffix or '.svg'}")
        kind = "last iterate" if metric == "exploit_last" else "average iterate"
        target.write_text(render_svg(cs, f"{game} ({kind})"))
        written.append(target)
    return written
