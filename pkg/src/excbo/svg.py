"""Static SVG figures: best-so-far reward band plus cumulative regret.

Hand-rolled SVG so figure output is dependency-free and byte-stable for
identical inputs (no timestamps, fixed float formatting).
"""

from __future__ import annotations

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")
_W, _H = 980, 420
_MARGIN = 56
_PANEL_W = 400
_PANEL_H = 300


def _fmt(x: float) -> str:
    return format(float(x), ".4g")


def _scale(vals, lo, hi, out_lo, out_hi):
    if hi == lo:
        hi = lo + 1.0
    return out_lo + (np.asarray(vals) - lo) * (out_hi - out_lo) / (hi - lo)


class _Panel:
    def __init__(self, x0, title, xlabel, ylabel):
        self.x0 = x0
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.series = []  # (label, color, x, y, band_lo, band_hi)

    def add(self, label, color, x, y, lo=None, hi=None):
        self.series.append((label, color, np.asarray(x, dtype=float),
                            np.asarray(y, dtype=float), lo, hi))

    def render(self) -> list[str]:
        xs = np.concatenate([s[2] for s in self.series])
        ys = [s[3] for s in self.series]
        for s in self.series:
            if s[4] is not None:
                ys.extend([np.asarray(s[4]), np.asarray(s[5])])
        all_y = np.concatenate(ys)
        x_lo, x_hi = float(xs.min()), float(xs.max())
        y_lo, y_hi = float(all_y.min()), float(all_y.max())
        pad = 0.05 * (y_hi - y_lo or 1.0)
        y_lo, y_hi = y_lo - pad, y_hi + pad

        left = self.x0 + _MARGIN
        top = 40
        right = left + _PANEL_W
        bottom = top + _PANEL_H

        def px(v):
            return _scale(v, x_lo, x_hi, left, right)

        def py(v):
            return _scale(v, y_lo, y_hi, bottom, top)

        out = [f'<rect x="{left}" y="{top}" width="{_PANEL_W}" '
               f'height="{_PANEL_H}" fill="none" stroke="#444"/>',
               f'<text x="{left + _PANEL_W / 2:.1f}" y="{top - 14}" '
               f'text-anchor="middle" font-size="15">{self.title}</text>',
               f'<text x="{left + _PANEL_W / 2:.1f}" y="{bottom + 36}" '
               f'text-anchor="middle" font-size="12">{self.xlabel}</text>',
               f'<text x="{left - 42}" y="{top + _PANEL_H / 2:.1f}" '
               f'font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 {left - 42} {top + _PANEL_H / 2:.1f})">'
               f'{self.ylabel}</text>']
        for frac in (0.0, 0.5, 1.0):
            xv = x_lo + frac * (x_hi - x_lo)
            yv = y_lo + frac * (y_hi - y_lo)
            out.append(f'<text x="{px(xv):.1f}" y="{bottom + 18}" '
                       f'text-anchor="middle" font-size="11">{_fmt(xv)}</text>')
            out.append(f'<text x="{left - 6}" y="{py(yv) + 4:.1f}" '
                       f'text-anchor="end" font-size="11">{_fmt(yv)}</text>')

        for label, color, x, y, lo, hi in self.series:
            if lo is not None:
                fwd = [f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, hi)]
                rev = [f"{px(a):.2f},{py(b):.2f}"
                       for a, b in zip(x[::-1], np.asarray(lo)[::-1])]
                out.append(f'<polygon points="{" ".join(fwd + rev)}" '
                           f'fill="{color}" fill-opacity="0.15" stroke="none"/>')
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
            out.append(f'<polyline points="{pts}" fill="none" '
                       f'stroke="{color}" stroke-width="1.8"/>')
        return out


def _legend(entries, y=392):
    out = []
    x = _MARGIN
    for label, color in entries:
        out.append(f'<line x1="{x}" y1="{y}" x2="{x + 24}" y2="{y}" '
                   f'stroke="{color}" stroke-width="2.5"/>')
        out.append(f'<text x="{x + 30}" y="{y + 4}" font-size="13">'
                   f'{label}</text>')
        x += 30 + 9 * max(4, len(label))
    return out


def render_series_svg(title: str, series) -> str:
    """series: list of (algorithm, rounds, best_mean, best_std, regret_mean)."""
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
            f'height="{_H}" viewBox="0 0 {_W} {_H}">'
            '<rect width="100%" height="100%" fill="white"/>')
    if not series:
        return (head + f'<text x="{_W / 2}" y="{_H / 2}" text-anchor="middle" '
                'font-size="16">no successful runs</text></svg>\n')
    p1 = _Panel(0, f"{title}: best reward so far", "round", "reward")
    p2 = _Panel(_PANEL_W + 2 * _MARGIN, "cumulative regret", "round", "regret")
    legend = []
    for k, (alg, rounds, best_mean, best_std, regret_mean) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        p1.add(alg, color, rounds, best_mean,
               best_mean - best_std, best_mean + best_std)
        p2.add(alg, color, rounds, regret_mean)
        legend.append((alg, color))
    body = p1.render() + p2.render() + _legend(legend)
    return head + "".join(body) + "</svg>\n"


def series_from_bundle(bundle):
    tm = bundle.trace_map()
    series = []
    for alg in bundle.config.algorithms:
        traces = [tm[(alg, s)] for s in bundle.config.seeds if (alg, s) in tm]
        if not traces:
            continue
        best = np.array([t.best_so_far() for t in traces])
        regs = np.array([bundle.regrets[(t.algorithm, t.seed)] for t in traces])
        rounds = np.arange(1, best.shape[1] + 1)
        series.append((alg, rounds, best.mean(axis=0), best.std(axis=0),
                       regs.mean(axis=0)))
    return series


def render_results_svg(bundle) -> str:
    return render_series_svg(bundle.config.benchmark,
                             series_from_bundle(bundle))


def series_from_raw(runs: dict):
    """Rebuild plot series from load_raw_csv output (column layout:
    round, action..., reward, best_so_far, cum_regret)."""
    algorithms = []
    for alg, _ in runs:
        if alg not in algorithms:
            algorithms.append(alg)
    series = []
    for alg in algorithms:
        keys = [k for k in runs if k[0] == alg]
        best = np.array([runs[k][:, -2] for k in keys])
        regs = np.array([runs[k][:, -1] for k in keys])
        rounds = np.arange(1, best.shape[1] + 1)
        series.append((alg, rounds, best.mean(axis=0), best.std(axis=0),
                       regs.mean(axis=0)))
    return series
