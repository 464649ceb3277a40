"""SVG bar charts rendered from histogram CSV rows.

Pure presentation: the SVG is a deterministic function of the rows, so
deleting the files and re-rendering reproduces them byte for byte.
"""

from __future__ import annotations

from pathlib import Path

from .reports import HistRow

__all__ = ["histogram_svg", "render_histogram_svgs"]

_WIDTH = 640
_HEIGHT = 400
_PAD = 52


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def histogram_svg(rows: list[HistRow], title: str) -> str:
    """Bar chart for the bins of one histogram (rows sorted by bin_index)."""
    rows = sorted(rows, key=lambda r: r.bin_index)
    counts = [r.count for r in rows]
    max_count = max(counts) or 1
    plot_w = _WIDTH - 2 * _PAD
    plot_h = _HEIGHT - 2 * _PAD
    bar_w = plot_w / len(rows)

    parts = [
        f'<svg width="{_WIDTH}" height="{_HEIGHT}" xmlns="http://www.w3.org/2000/svg">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="24" font-family="monospace" font-size="14" '
        f'text-anchor="middle">{title}</text>',
        f'<line x1="{_PAD}" y1="{_HEIGHT - _PAD}" x2="{_WIDTH - _PAD}" '
        f'y2="{_HEIGHT - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_HEIGHT - _PAD}" '
        'stroke="black"/>',
    ]
    for i in range(5):
        frac = i / 4
        y = _HEIGHT - _PAD - frac * plot_h
        parts.append(
            f'<line x1="{_PAD}" y1="{y:.1f}" x2="{_WIDTH - _PAD}" y2="{y:.1f}" '
            'stroke="#dddddd" stroke-dasharray="4"/>'
        )
        parts.append(
            f'<text x="{_PAD - 6}" y="{y + 4:.1f}" font-family="monospace" '
            f'font-size="10" text-anchor="end">{_fmt(frac * max_count)}</text>'
        )
    for i, r in enumerate(rows):
        h = plot_h * r.count / max_count
        x = _PAD + i * bar_w
        y = _HEIGHT - _PAD - h
        parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w * 0.92:.2f}" '
            f'height="{h:.2f}" fill="#3a7bd5"/>'
        )
    first, last = rows[0], rows[-1]
    parts.append(
        f'<text x="{_PAD}" y="{_HEIGHT - _PAD + 16}" font-family="monospace" '
        f'font-size="10" text-anchor="middle">{_fmt(first.bin_lo)}</text>'
    )
    parts.append(
        f'<text x="{_WIDTH - _PAD}" y="{_HEIGHT - _PAD + 16}" '
        f'font-family="monospace" font-size="10" text-anchor="middle">'
        f'{_fmt(last.bin_hi)}</text>'
    )
    parts.append(
        f'<text x="{_WIDTH / 2:.1f}" y="{_HEIGHT - 12}" font-family="monospace" '
        f'font-size="11" text-anchor="middle">n={first.n} std={_fmt(first.sample_std)} '
        f'tail_mass={_fmt(first.tail_mass)}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_histogram_svgs(rows: list[HistRow], out_dir) -> list[Path]:
    """One SVG per (seed, cycle, kind); returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups: dict[tuple[int, int, str], list[HistRow]] = {}
    for r in rows:
        groups.setdefault((r.seed, r.m, r.kind), []).append(r)
    written = []
    for (seed, m, kind), group in sorted(groups.items()):
        title = f"{kind} distribution, cycle {m}, seed {seed}"
        path = out / f"hist_{kind}_seed{seed}_m{m:03d}.svg"
        path.write_text(histogram_svg(group, title))
        written.append(path)
    return written
