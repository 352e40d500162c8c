"""Self-contained SVG figures, each written together with a CSV twin.

The SVG is for eyes; the CSV carries the plotted numbers for programmatic
checks. Both files are written atomically.
"""

import os
from xml.sax.saxutils import escape

import numpy as np

from .io import atomic_write_text, write_csv

__all__ = ["ddplot_svg", "cv_curve_svg", "boxplot_svg", "write_ddplot", "write_cv_curve", "write_boxplot"]

WIDTH, HEIGHT, PAD = 480, 400, 50
COLORS = {1: "#1f77b4", 2: "#ff7f0e"}


class _Frame:
    """Linear map from data coordinates to the SVG drawing area."""

    def __init__(self, xlim, ylim):
        self.xlim = self._widen(xlim)
        self.ylim = self._widen(ylim)

    @staticmethod
    def _widen(lim):
        lo, hi = float(lim[0]), float(lim[1])
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        return lo, hi

    def x(self, v):
        lo, hi = self.xlim
        return PAD + (np.asarray(v) - lo) / (hi - lo) * (WIDTH - 2 * PAD)

    def y(self, v):
        lo, hi = self.ylim
        return HEIGHT - PAD - (np.asarray(v) - lo) / (hi - lo) * (HEIGHT - 2 * PAD)


def _document(body, title, xlabel, ylabel, frame):
    lo_x, hi_x = frame.xlim
    lo_y, hi_y = frame.ylim
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="{PAD}" y="{PAD}" width="{WIDTH - 2 * PAD}" height="{HEIGHT - 2 * PAD}" fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{PAD / 2}" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>',
        f'<text x="{PAD}" y="{HEIGHT - PAD + 15}" text-anchor="middle">{lo_x:.3g}</text>',
        f'<text x="{WIDTH - PAD}" y="{HEIGHT - PAD + 15}" text-anchor="middle">{hi_x:.3g}</text>',
        f'<text x="{PAD - 5}" y="{HEIGHT - PAD}" text-anchor="end">{lo_y:.3g}</text>',
        f'<text x="{PAD - 5}" y="{PAD + 4}" text-anchor="end">{hi_y:.3g}</text>',
    ]
    return "\n".join(parts + body + ["</svg>", ""])


def _polyline(xs, ys, **attrs):
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, ys))
    extra = " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in attrs.items())
    return f'<polyline points="{pts}" fill="none" {extra}/>'


def ddplot_svg(D, labels, separator=None, title="DD-plot"):
    """Scatter of DD points with the 45 degree line and the separator curve."""
    D = np.asarray(D, dtype=float)
    labels = np.asarray(labels)
    lo = float(min(D.min(), 0.0)) if D.size else 0.0
    hi = float(max(D.max(), 2.0)) if D.size else 2.0
    frame = _Frame((lo, hi), (lo, hi))
    body = [_polyline(frame.x([lo, hi]), frame.y([lo, hi]), stroke="gray", stroke_dasharray="4 3")]
    if separator is not None:
        u = np.linspace(lo, hi, 200)
        s = separator(u)
        keep = (s >= lo) & (s <= hi)
        if separator.orientation.value == "class2_above":
            xs, ys = u[keep], s[keep]
        else:
            xs, ys = s[keep], u[keep]
        body.append(_polyline(frame.x(xs), frame.y(ys), stroke="black", stroke_width="1.5"))
    classes = list(dict.fromkeys(labels.tolist()))
    for c_i, c in enumerate(classes):
        color = COLORS.get(c_i + 1, "gray")
        for x, y in D[labels == c]:
            body.append(f'<circle cx="{frame.x(x):.2f}" cy="{frame.y(y):.2f}" r="2.5" fill="{color}" fill-opacity="0.7"/>')
        body.append(f'<text x="{WIDTH - PAD - 5}" y="{PAD + 15 * (c_i + 1)}" text-anchor="end" fill="{color}">class {escape(str(c))}</text>')
    return _document(body, title, "depth w.r.t. class 1", "depth w.r.t. class 2", frame)


def cv_curve_svg(betas, curve, best_beta, title="CV misclassification rate"):
    """CV curve over beta with a dotted red vertical marker at ``best_beta``."""
    betas = np.asarray(betas, dtype=float)
    curve = np.asarray(curve, dtype=float)
    pad = 0.05 * max(curve.max() - curve.min(), 1e-3)
    frame = _Frame((0.0, 1.0), (curve.min() - pad, curve.max() + pad))
    body = [_polyline(frame.x(betas), frame.y(curve), stroke="black", stroke_width="1.5")]
    body += [f'<circle cx="{frame.x(b):.2f}" cy="{frame.y(c):.2f}" r="3" fill="black"/>' for b, c in zip(betas, curve)]
    bx = frame.x(best_beta)
    body.append(
        f'<line x1="{bx:.2f}" y1="{PAD}" x2="{bx:.2f}" y2="{HEIGHT - PAD}" stroke="red" stroke-dasharray="2 3" stroke-width="1.5"/>'
    )
    body.append(f'<text x="{bx + 4:.2f}" y="{PAD + 14}" fill="red">beta = {best_beta:g}</text>')
    return _document(body, title, "beta", "mean misclassification rate", frame)


def boxplot_svg(groups, title="Misclassification rates"):
    """Box plots (quartiles, 1.5 IQR whiskers) for a mapping ``name -> values``."""
    names = list(groups)
    values = [np.asarray(groups[k], dtype=float) for k in names]
    allv = np.concatenate(values) if values else np.zeros(1)
    frame = _Frame((0.0, len(names) + 1.0), (min(0.0, allv.min()), max(allv.max(), 1e-3) * 1.05))
    body = []
    for i, (name, v) in enumerate(zip(names, values), start=1):
        q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
        iqr = q3 - q1
        lo = v[v >= q1 - 1.5 * iqr].min()
        hi = v[v <= q3 + 1.5 * iqr].max()
        x, w = frame.x(i), 0.3 * (frame.x(1) - frame.x(0))
        body.append(f'<line x1="{x:.2f}" y1="{frame.y(lo):.2f}" x2="{x:.2f}" y2="{frame.y(hi):.2f}" stroke="black"/>')
        body.append(
            f'<rect x="{x - w:.2f}" y="{frame.y(q3):.2f}" width="{2 * w:.2f}" '
            f'height="{max(frame.y(q1) - frame.y(q3), 0.5):.2f}" fill="#cce0f0" stroke="black"/>'
        )
        body.append(f'<line x1="{x - w:.2f}" y1="{frame.y(med):.2f}" x2="{x + w:.2f}" y2="{frame.y(med):.2f}" stroke="black" stroke-width="2"/>')
        for o in v[(v < lo) | (v > hi)]:
            body.append(f'<circle cx="{x:.2f}" cy="{frame.y(o):.2f}" r="2" fill="none" stroke="black"/>')
        body.append(f'<text x="{x:.2f}" y="{HEIGHT - PAD + 15}" text-anchor="middle">{escape(str(name))}</text>')
    return _document(body, title, "", "misclassification rate", frame)


def _paths(out_prefix):
    base, ext = os.path.splitext(out_prefix)
    base = base if ext.lower() in (".svg", ".csv") else out_prefix
    return base + ".svg", base + ".csv"


def write_ddplot(out_prefix, D, labels, separator=None, title="DD-plot"):
    """Write ``<prefix>.svg`` and ``<prefix>.csv`` (columns d1, d2, label)."""
    svg, csv_path = _paths(out_prefix)
    atomic_write_text(svg, ddplot_svg(D, labels, separator, title))
    write_csv(csv_path, ["d1", "d2", "label"], ([d[0], d[1], lab] for d, lab in zip(np.asarray(D), labels)))
    return svg, csv_path


def write_cv_curve(out_prefix, betas, curve, best_beta, title="CV misclassification rate"):
    """Write the curve SVG and a CSV with columns beta, mean_mr, selected."""
    svg, csv_path = _paths(out_prefix)
    atomic_write_text(svg, cv_curve_svg(betas, curve, best_beta, title))
    write_csv(csv_path, ["beta", "mean_mr", "selected"], ([b, c, int(b == best_beta)] for b, c in zip(betas, curve)))
    return svg, csv_path


def write_boxplot(out_prefix, groups, title="Misclassification rates"):
    """Write the box plot SVG and a long CSV with columns group, value."""
    svg, csv_path = _paths(out_prefix)
    atomic_write_text(svg, boxplot_svg(groups, title))
    write_csv(csv_path, ["group", "value"], ([k, float(v)] for k in groups for v in groups[k]))
    return svg, csv_path
