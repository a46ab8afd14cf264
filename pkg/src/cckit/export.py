"""Geometry output: PGM masks, SVG contour polylines, CSV polylines and fields."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from skimage import measure

from .slices import SliceMask


def atomic_write(path, data) -> Path:
    """Write bytes or text to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


@dataclass(frozen=True, eq=False)
class Polyline:
    points: np.ndarray  # complex, in order
    closed: bool = True


@dataclass(frozen=True, eq=False)
class FieldGrid:
    """Rows of (Re z, Im z, value)."""

    rows: np.ndarray


def pgm_bytes(mask: SliceMask) -> bytes:
    # image row 0 is the top, i.e. the largest imaginary part
    img = np.where(mask.cells[::-1], 255, 0).astype(np.uint8)
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def mask_contours(mask: SliceMask) -> list:
    """Boundary polylines of the mask in the line's zeta coordinate."""
    out = []
    padded = np.pad(mask.cells.astype(float), 1)
    for c in measure.find_contours(padded, 0.5):
        rows, cols = c[:, 0] - 1, c[:, 1] - 1
        zeta = mask.center + (cols * mask.step - mask.half_width) + 1j * (rows * mask.step - mask.half_width)
        closed = bool(np.allclose(c[0], c[-1]))
        out.append(Polyline(zeta[:-1] if closed else zeta, closed))
    return out


def svg_text(polylines: list, pad: float = 0.05) -> str:
    pts = np.concatenate([p.points for p in polylines]) if polylines else np.zeros(1, dtype=complex)
    x0, x1 = pts.real.min() - pad, pts.real.max() + pad
    y0, y1 = pts.imag.min() - pad, pts.imag.max() + pad
    parts = []
    for pl in polylines:
        # SVG y grows downward
        d = "M" + " L".join(f"{z.real:.9g},{-z.imag:.9g}" for z in pl.points)
        if pl.closed:
            d += " Z"
        parts.append(f'  <path d="{d}" fill="none" stroke="black" stroke-width="{(x1 - x0) / 500:.6g}"/>')
    return (
        '<svg version="1.1" xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{x0:.9g} {-y1:.9g} {x1 - x0:.9g} {y1 - y0:.9g}">\n' + "\n".join(parts) + "\n</svg>\n"
    )


def polyline_csv(pl: Polyline) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im"])
    for z in pl.points:
        w.writerow([repr(float(z.real)), repr(float(z.imag))])
    return buf.getvalue()


def field_csv(field: FieldGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re_z", "im_z", "value"])
    for row in np.asarray(field.rows, dtype=float):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def emit_geometry(items: dict, out_dir) -> list:
    """Write each named item; returns the written paths.

    SliceMask -> ``name.pgm`` + ``name.svg``; Polyline -> ``name.svg`` +
    ``name.csv``; FieldGrid -> ``name.csv``.
    """
    out_dir = Path(out_dir)
    written = []
    for name, item in items.items():
        if isinstance(item, SliceMask):
            written.append(atomic_write(out_dir / f"{name}.pgm", pgm_bytes(item)))
            written.append(atomic_write(out_dir / f"{name}.svg", svg_text(mask_contours(item))))
        elif isinstance(item, Polyline):
            written.append(atomic_write(out_dir / f"{name}.svg", svg_text([item])))
            written.append(atomic_write(out_dir / f"{name}.csv", polyline_csv(item)))
        elif isinstance(item, FieldGrid):
            written.append(atomic_write(out_dir / f"{name}.csv", field_csv(item)))
        else:
            raise TypeError(f"cannot export {type(item).__name__}")
    return written
