"""SVG drawings of adapted lattices and small summary charts.

The lattice drawing embeds the adaptation report and stabilizer dump as JSON
inside ``<metadata>``, so a drawing can be checked against the data it shows.
"""

from __future__ import annotations

import json
from xml.etree import ElementTree as ET
from xml.sax.saxutils import escape

from .adapter import adaptation_report
from .lattice import X
from .logical import LogicalOperator
from .patch import PatchedCode, stabilizer_dump

SCALE = 24
MARGIN = 30
PALETTE = ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6", "#bcf60c", "#008080", "#9a6324"]
X_FILL, Z_FILL = "#f4a6a6", "#a6c8f4"
DISABLED = "#c8c8c8"
LOGICAL_STROKE = {"X": "#d62728", "Z": "#1f77b4"}


def _xy(c) -> tuple[float, float]:
    return MARGIN + c[0] * SCALE, MARGIN + c[1] * SCALE


def lattice_metadata(code: PatchedCode, logicals: list[LogicalOperator] = ()) -> dict:
    return {
        "report": {k: v for k, v in adaptation_report(code.status).items() if k != "events"},
        "stabilizers": stabilizer_dump(code),
        "logicals": [{"basis": op.basis, "support": [list(q) for q in op.support]} for op in logicals],
    }


def render_lattice(code: PatchedCode, logicals: list[LogicalOperator] = (), title: str = "") -> str:
    """SVG with disabled qubits greyed, groups outlined by colour and logicals drawn as paths."""
    lat, status = code.lattice, code.status
    side = 2 * MARGIN + 2 * lat.size * SCALE
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{side}" height="{side}" viewBox="0 0 {side} {side}">',
        "<metadata>" + escape(json.dumps(lattice_metadata(code, logicals), sort_keys=True)) + "</metadata>",
    ]
    if title:
        out.append(f'<title>{escape(title)}</title>')
    out.append(f'<rect width="{side}" height="{side}" fill="white"/>')

    for d, s in sorted(lat.edges):
        x1, y1 = _xy(d)
        x2, y2 = _xy(s)
        dead = status.is_disabled(d) or status.is_disabled(s)
        color = DISABLED if dead else "#888888"
        out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{color}" stroke-width="1"/>')

    group_color = {}
    for g in code.groups:
        for st in g.stabilizers:
            for m in st.members:
                group_color[m] = PALETTE[g.gid % len(PALETTE)]

    half = SCALE * 0.45
    for s, kind in sorted(lat.syndromes.items()):
        x, y = _xy(s)
        fill = DISABLED if status.is_disabled(s) else (X_FILL if kind == X else Z_FILL)
        stroke = group_color.get(s, "#555555")
        width = 3 if s in group_color else 1
        out.append(
            f'<rect class="syndrome" data-node="{s[0]},{s[1]}" x="{x - half:.1f}" y="{y - half:.1f}" '
            f'width="{2 * half:.1f}" height="{2 * half:.1f}" fill="{fill}" stroke="{stroke}" stroke-width="{width}"/>'
        )
    for d in sorted(lat.data):
        x, y = _xy(d)
        fill = DISABLED if status.is_disabled(d) else ("#333333" if d in status.boundary else "#666666")
        out.append(f'<circle class="data" data-node="{d[0]},{d[1]}" cx="{x}" cy="{y}" r="{SCALE * 0.3:.1f}" fill="{fill}"/>')

    for op in logicals:
        pts = " ".join(f"{_xy(q)[0]},{_xy(q)[1]}" for q in op.support)
        out.append(
            f'<polyline class="logical-{op.basis}" points="{pts}" fill="none" '
            f'stroke="{LOGICAL_STROKE[op.basis]}" stroke-width="4" stroke-opacity="0.7"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def read_metadata(svg: str) -> dict:
    """Parse an SVG produced by :func:`render_lattice` and return its embedded data."""
    root = ET.fromstring(svg)
    node = root.find("{http://www.w3.org/2000/svg}metadata")
    if node is None or node.text is None:
        raise ValueError("SVG has no embedded metadata")
    return json.loads(node.text)


def line_chart(series: dict[str, list[tuple[float, float]]], title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Minimal SVG line chart, one polyline per series."""
    w, h, pad = 480, 320, 50
    pts = [p for s in series.values() for p in s]
    if not pts:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}"></svg>\n'
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(0.0, min(p[1] for p in pts)), max(p[1] for p in pts)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(v):
        return pad + (v - x0) / (x1 - x0) * (w - 2 * pad)

    def sy(v):
        return h - pad - (v - y0) / (y1 - y0) * (h - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h - pad}" stroke="black"/>',
        f'<text x="{w / 2}" y="20" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{w / 2}" y="{h - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="12" y="{h / 2}" transform="rotate(-90 12 {h / 2})" text-anchor="middle">{escape(ylabel)}</text>',
        f'<text x="{pad}" y="{h - pad + 15}" text-anchor="middle" font-size="10">{x0:g}</text>',
        f'<text x="{w - pad}" y="{h - pad + 15}" text-anchor="middle" font-size="10">{x1:g}</text>',
        f'<text x="{pad - 5}" y="{h - pad}" text-anchor="end" font-size="10">{y0:g}</text>',
        f'<text x="{pad - 5}" y="{pad}" text-anchor="end" font-size="10">{y1:g}</text>',
    ]
    for i, (name, s) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in sorted(s))
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{w - pad + 4}" y="{pad + 14 * i}" font-size="10" fill="{color}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
