"""CSV, SVG and OBJ serialization of curves and meshes.

Numbers are written with fixed decimals and '.' as separator, independent of
locale, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidMesh, InvalidStyle, WriteFailure
from .hybrid import IsoSurface
from .isocurves import IsoCurve
from .types import WorkingMode

CSV_HEADER = ("kappa", "mode_a", "mode_b", "space", "index", "x", "y")
CSV_DECIMALS = 12
OBJ_DECIMALS = 9

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


@dataclass(frozen=True)
class ExportStyle:
    canvas_px: int = 480
    margin: float = 0.05
    curve_width: float = 1.2
    boundary_width: float = 1.8
    boundary_color: str = "#000000"
    level_colors: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.canvas_px < 64:
            raise InvalidStyle(f"canvas must be at least 64 px, got {self.canvas_px}")
        if not 0.0 <= self.margin < 0.4:
            raise InvalidStyle(f"margin must lie in [0, 0.4), got {self.margin}")

    def color_for(self, kappa: float, levels: Sequence[float]) -> str:
        if kappa in self.level_colors:
            return self.level_colors[kappa]
        ordered = sorted(set(levels))
        i = ordered.index(kappa) if kappa in ordered else 0
        return _PALETTE[i % len(_PALETTE)]


def _fmt(v: float, decimals: int) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    s = f"{v:.{decimals}f}"
    # Avoid "-0.000" for values that round to zero.
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]
    return s


def _mode_signs(wm: WorkingMode | None) -> tuple[str, str]:
    if wm is None:
        return "", ""
    return ("+" if wm.sign_a > 0 else "-"), ("+" if wm.sign_b > 0 else "-")


# ---------------------------------------------------------------------------
# CSV


def curves_to_csv(curves: Iterable[IsoCurve]) -> bytes:
    """One row per vertex; ``index`` is the curve's position in ``curves``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for idx, curve in enumerate(curves):
        ma, mb = _mode_signs(curve.working_mode)
        k = _fmt(curve.kappa, CSV_DECIMALS)
        for x, y in curve.points:
            w.writerow((k, ma, mb, curve.space, idx, _fmt(x, CSV_DECIMALS), _fmt(y, CSV_DECIMALS)))
    return buf.getvalue().encode("ascii")


def read_curves_csv(data: bytes | str) -> list[IsoCurve]:
    """Parse the output of :func:`curves_to_csv` back into curves (closure flags are not stored)."""
    text = data.decode("ascii") if isinstance(data, bytes) else data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("not an isocurve CSV: bad header")
    groups: dict[int, list] = {}
    meta: dict[int, tuple] = {}
    for row in rows[1:]:
        k, ma, mb, space, idx, x, y = row
        i = int(idx)
        groups.setdefault(i, []).append((float(x), float(y)))
        wm = WorkingMode(1 if ma == "+" else -1, 1 if mb == "+" else -1) if ma else None
        meta[i] = (float(k), wm, space)
    out = []
    for i in sorted(groups):
        k, wm, space = meta[i]
        out.append(IsoCurve(k, wm, tuple(groups[i]), space))
    return out


# ---------------------------------------------------------------------------
# SVG


@dataclass(frozen=True)
class CanvasMap:
    """Affine world-to-canvas map; world +y points up, SVG +y points down.

    ``u = ox + s * (x - xmin)`` and ``v = oy + s * (ymax - y)``.
    """

    xmin: float
    ymax: float
    scale: float
    ox: float
    oy: float

    def __call__(self, x: float, y: float) -> tuple[float, float]:
        return self.ox + self.scale * (x - self.xmin), self.oy + self.scale * (self.ymax - y)


def fit_canvas(bounds: tuple[float, float, float, float], width: float, height: float,
               margin: float, x0: float = 0.0, y0: float = 0.0) -> CanvasMap:
    """Largest aspect-preserving map of ``bounds`` into a box, centred, with fractional margin."""
    xmin, xmax, ymin, ymax = bounds
    wx = max(xmax - xmin, 1e-300)
    wy = max(ymax - ymin, 1e-300)
    mx, my = margin * width, margin * height
    s = min((width - 2 * mx) / wx, (height - 2 * my) / wy)
    ox = x0 + 0.5 * (width - s * wx)
    oy = y0 + 0.5 * (height - s * wy)
    return CanvasMap(xmin, ymax, s, ox, oy)


def _bounds(curves: Sequence[IsoCurve]) -> tuple[float, float, float, float]:
    pts = [p for c in curves for p in c.points]
    if not pts:
        return (0.0, 1.0, 0.0, 1.0)
    arr = np.asarray(pts)
    return (float(arr[:, 0].min()), float(arr[:, 0].max()), float(arr[:, 1].min()), float(arr[:, 1].max()))


def _path_d(curve: IsoCurve, cmap: CanvasMap) -> str:
    parts = []
    for i, (x, y) in enumerate(curve.points):
        u, v = cmap(x, y)
        parts.append(f"{'M' if i == 0 else 'L'}{u:.3f},{v:.3f}")
    if curve.closed:
        parts.append("Z")
    return " ".join(parts)


def _svg_open(width: float, height: float) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        "<!-- world +y is drawn upward: v = oy + scale * (ymax - y) -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
        f'<rect x="0" y="0" width="{width:g}" height="{height:g}" fill="#ffffff"/>',
    ]


def _panel(curves: Sequence[IsoCurve], boundary: Sequence[IsoCurve], style: ExportStyle,
           cmap: CanvasMap) -> list[str]:
    levels = sorted({c.kappa for c in curves})
    lines = []
    for b in boundary:
        lines.append(f'<path class="boundary" d="{_path_d(b, cmap)}" fill="none" '
                     f'stroke="{style.boundary_color}" stroke-width="{style.boundary_width:g}"/>')
    for c in curves:
        color = style.color_for(c.kappa, levels)
        lines.append(f'<path class="isocurve" data-kappa="{_fmt(c.kappa, 6)}" d="{_path_d(c, cmap)}" '
                     f'fill="none" stroke="{color}" stroke-width="{style.curve_width:g}"/>')
    return lines


def curves_to_svg(curves: Sequence[IsoCurve], boundary: Sequence[IsoCurve] = (),
                  style: ExportStyle | None = None, title: str | None = None) -> bytes:
    """Single-panel SVG: one path per curve and per boundary polyline."""
    style = style or ExportStyle()
    size = style.canvas_px
    cmap = fit_canvas(_bounds(list(curves) + list(boundary)), size, size, style.margin)
    lines = _svg_open(size, size)
    if title:
        lines.append(f'<title>{_xml_escape(title)}</title>')
    lines += _panel(curves, boundary, style, cmap)
    lines.append("</svg>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def panels_to_svg(panels: Sequence[tuple[str, Sequence[IsoCurve], Sequence[IsoCurve]]],
                  style: ExportStyle | None = None, columns: int = 2) -> bytes:
    """Grid of panels sharing one world-to-canvas scale, e.g. the four working modes."""
    style = style or ExportStyle()
    size = style.canvas_px
    rows = max(1, math.ceil(len(panels) / columns))
    width, height = columns * size, rows * size
    everything = [c for _, cs, bs in panels for c in list(cs) + list(bs)]
    bounds = _bounds(everything)
    lines = _svg_open(width, height)
    for n, (label, curves, boundary) in enumerate(panels):
        x0, y0 = (n % columns) * size, (n // columns) * size
        cmap = fit_canvas(bounds, size, size, style.margin, x0, y0)
        lines.append(f'<g class="panel" id="panel-{n}">')
        lines.append(f'<text x="{x0 + 8}" y="{y0 + 18}" font-family="sans-serif" font-size="14">'
                     f'{_xml_escape(label)}</text>')
        lines += _panel(curves, boundary, style, cmap)
        lines.append("</g>")
    lines.append("</svg>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------------------
# OBJ


_NEG_ZERO = re.compile(r"(?<![\d.])-(0\.0+)(?![\d])")


def mesh_to_obj(surface: IsoSurface) -> bytes:
    verts = np.asarray(surface.vertices, dtype=float).reshape(-1, 3)
    tris = np.asarray(surface.triangles, dtype=np.int64).reshape(-1, 3)
    if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
        raise InvalidMesh("triangle index out of range")
    if not np.isfinite(verts).all():
        raise InvalidMesh("mesh has non-finite vertex coordinates")
    vfmt = f"v %.{OBJ_DECIMALS}f %.{OBJ_DECIMALS}f %.{OBJ_DECIMALS}f"
    body = "\n".join(vfmt % tuple(v) for v in verts.tolist())
    # Values that round to zero are written without a sign.
    body = _NEG_ZERO.sub(r"\1", body)
    faces = "\n".join("f %d %d %d" % (a + 1, b + 1, c + 1) for a, b, c in tris.tolist())
    parts = [f"# isoconditioning surface kappa={_fmt(surface.kappa, 6)}"]
    parts += [p for p in (body, faces) if p]
    return ("\n".join(parts) + "\n").encode("ascii")


def read_obj(data: bytes | str) -> tuple[np.ndarray, np.ndarray]:
    """Vertices and 0-based triangles from an OBJ produced by :func:`mesh_to_obj`."""
    text = data.decode("ascii") if isinstance(data, bytes) else data
    verts, faces = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(v) for v in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(v.split("/")[0]) - 1 for v in parts[1:4]])
    return np.asarray(verts, dtype=float).reshape(-1, 3), np.asarray(faces, dtype=np.int64).reshape(-1, 3)


# ---------------------------------------------------------------------------
# files


def write_atomic(path: str | Path, data: bytes) -> Path:
    """Write ``data`` to a temporary sibling file and rename it into place."""
    path = Path(path)
    tmp = None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except OSError as exc:
        if tmp is not None and os.path.exists(tmp):
            os.unlink(tmp)
        raise WriteFailure(f"cannot write {path}: {exc}") from exc
    return path
