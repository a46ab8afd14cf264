"""Planar line slices of domains, digital topology, and the C-convexity checker."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from .domain import ComplexLine, DomainModel, random_directions, sample_interior


def worker_count() -> int:
    env = os.environ.get("CCKIT_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True, eq=False)
class SliceMask:
    line: ComplexLine
    center: complex
    half_width: float
    resolution: int
    cells: np.ndarray  # [row = imaginary axis, col = real axis]
    blocked_h: Optional[np.ndarray] = None  # edge (i, j)-(i, j+1)
    blocked_v: Optional[np.ndarray] = None  # edge (i, j)-(i+1, j)

    @property
    def step(self) -> float:
        return 2.0 * self.half_width / (self.resolution - 1)

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.resolution)

    def zeta_grid(self) -> np.ndarray:
        a = self.axis()
        return self.center + a[None, :] + 1j * a[:, None]

    @property
    def blocked_edge_count(self) -> int:
        return sum(int(b.sum()) for b in (self.blocked_h, self.blocked_v) if b is not None)


@dataclass(frozen=True)
class TopologyReport:
    component_count: int
    hole_count: int

    @property
    def connected(self) -> bool:
        return self.component_count <= 1

    @property
    def simply_connected(self) -> bool:
        return self.hole_count == 0

    def to_record(self) -> dict:
        return {
            "component_count": self.component_count,
            "hole_count": self.hole_count,
            "connected": self.connected,
            "simply_connected": self.simply_connected,
        }


def slice_window(D: DomainModel, line: ComplexLine, resolution: int) -> tuple:
    """Window (center, half-width) covering the bounding ball's trace plus a two-cell margin."""
    center = line.parameter_of(D.basepoint)
    step = 2.0 * D.radius / (resolution - 5)
    return center, step * (resolution - 1) / 2.0


def blocked_edges(D: DomainModel, points: np.ndarray, cells: np.ndarray) -> list:
    """Per-axis boolean arrays of grid edges between member cells that the edge-blocker cuts.

    ``points`` has shape ``cells.shape + (n,)``.
    """
    out = []
    for axis in range(cells.ndim):
        lo = [slice(None)] * cells.ndim
        hi = [slice(None)] * cells.ndim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        both = cells[lo] & cells[hi]
        blocked = np.zeros(both.shape, dtype=bool)
        if D.edge_blocker is not None and both.any():
            blocked[both] = D.edge_blocker(points[lo][both], points[hi][both])
        out.append(blocked)
    return out


def slice_mask(D: DomainModel, line: ComplexLine, resolution: int) -> SliceMask:
    if resolution < 32:
        raise ValueError("resolution must be at least 32")
    if line.dim != D.dim:
        raise ValueError("line and domain dimensions differ")
    center, half = slice_window(D, line, resolution)
    a = np.linspace(-half, half, resolution)
    zeta = center + a[None, :] + 1j * a[:, None]
    pts = line.at(zeta)
    cells = D.membership(pts.reshape(-1, D.dim)).reshape(resolution, resolution)
    bh = bv = None
    if D.edge_blocker is not None:
        bv, bh = blocked_edges(D, pts, cells)
    return SliceMask(line, complex(center), float(half), resolution, cells, bh, bv)


def label_grid(cells: np.ndarray, blocked: Optional[list] = None) -> tuple:
    """Face-adjacency components of true cells, skipping blocked edges.

    Returns ``(labels, count)`` with labels 1..count on true cells, 0 elsewhere.
    """
    if blocked is None or not any(b.any() for b in blocked):
        return ndimage.label(cells)
    idx = -np.ones(cells.shape, dtype=np.int64)
    idx[cells] = np.arange(int(cells.sum()))
    rows, cols = [], []
    for axis, cut in enumerate(blocked):
        lo = [slice(None)] * cells.ndim
        hi = [slice(None)] * cells.ndim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        keep = cells[tuple(lo)] & cells[tuple(hi)] & ~cut
        rows.append(idx[tuple(lo)][keep])
        cols.append(idx[tuple(hi)][keep])
    size = int(cells.sum())
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = coo_matrix((np.ones(r.size), (r, c)), shape=(size, size))
    count, comp = connected_components(graph, directed=False)
    labels = np.zeros(cells.shape, dtype=np.int64)
    labels[cells] = comp + 1
    return labels, int(count)


def mask_topology(mask: SliceMask) -> TopologyReport:
    blocked = None
    if mask.blocked_h is not None:
        blocked = [mask.blocked_v, mask.blocked_h]
    _, components = label_grid(mask.cells, blocked)
    return TopologyReport(components, count_holes(mask.cells))


def count_holes(cells: np.ndarray) -> int:
    """Complement components (8-connectivity) not touching the window border."""
    lab, count = ndimage.label(~cells, structure=np.ones((3, 3), dtype=bool))
    border = np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]])
    touching = np.unique(border[border > 0]).size
    return int(count - touching)


@dataclass
class CConvexityReport:
    passed: bool
    lines_tested: int
    resolution: int
    witnesses: list = field(default_factory=list)
    families: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "passed": self.passed,
            "lines_tested": self.lines_tested,
            "resolution": self.resolution,
            "families": dict(self.families),
            "witnesses": list(self.witnesses),
        }


def targeted_lines(D: DomainModel, betas: int = 25, qs: int = 25) -> list:
    """Lines joining a point on one coordinate axis to a point on another.

    For coordinates j != k the family is parametrized by beta in [0.5, 0.97]
    and q in [0.3, 0.99]; the line passes through ``z0 + beta R e_k`` and
    ``z0 + q R e_j``.  These lines cross the two pockets of Reinhardt domains
    with exponents below 1/2, where slices split.
    """
    n = D.dim
    lines = []
    if n < 2:
        return lines
    for j in range(n):
        for k in range(n):
            if j == k:
                continue
            for beta in np.linspace(0.5, 0.97, betas):
                for q in np.linspace(0.3, 0.99, qs):
                    P = D.basepoint.copy()
                    Q = D.basepoint.copy()
                    P[k] += beta * D.radius
                    Q[j] += q * D.radius
                    lines.append(ComplexLine(P, Q - P))
    return lines


def random_lines(D: DomainModel, count: int, seed: int) -> list:
    """Half through pairs of interior points, half through an interior point in a random direction."""
    rng = np.random.default_rng(seed)
    n_pairs = count // 2
    n_dirs = count - n_pairs
    pts = sample_interior(D, 2 * n_pairs + n_dirs, rng)
    dirs = random_directions(rng, n_dirs, D.dim)
    lines = []
    for i in range(n_pairs):
        a, b = pts[2 * i], pts[2 * i + 1]
        if np.linalg.norm(b - a) == 0:
            b = a + dirs[i % n_dirs]
        lines.append(ComplexLine(a, b - a))
    for i in range(n_dirs):
        lines.append(ComplexLine(pts[2 * n_pairs + i], dirs[i]))
    return lines


def _line_defect(D: DomainModel, line: ComplexLine, resolution: int) -> Optional[TopologyReport]:
    topo = mask_topology(slice_mask(D, line, resolution))
    if topo.connected and topo.simply_connected:
        return None
    return topo


def cconvexity_check(
    D: DomainModel,
    num_lines: int,
    seed: int,
    resolution: int = 256,
    targeted: bool = True,
    recheck: bool = True,
) -> CConvexityReport:
    """Monte-Carlo search for complex lines whose slice is disconnected or has holes.

    In C^1 the only complex line is the plane itself and a single slice is
    examined.  Defects are re-examined at twice the resolution and reported
    as witnesses only if they persist.
    """
    if num_lines < 1:
        raise ValueError("num_lines must be >= 1")
    families = {}
    if D.dim == 1:
        batches = [("chart", [ComplexLine(D.basepoint, np.ones(1))])]
    else:
        batches = [("random", random_lines(D, num_lines, seed))]
        if targeted:
            batches.append(("targeted", targeted_lines(D)))

    witnesses = []
    tested = 0
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        for family, lines in batches:
            defects = list(pool.map(lambda l: _line_defect(D, l, resolution), lines))
            families[family] = len(lines)
            tested += len(lines)
            for index, (line, topo) in enumerate(zip(lines, defects)):
                if topo is None:
                    continue
                res = resolution
                if recheck:
                    res = 2 * resolution
                    topo = _line_defect(D, line, res)
                    if topo is None:
                        continue
                witnesses.append({"family": family, "index": index, "line": line.to_record(),
                                  "resolution": res, **topo.to_record()})
    return CConvexityReport(not witnesses, tested, resolution, witnesses, families)


def planar_diameter(points) -> float:
    """Diameter of a planar point set (maximum distance between convex hull vertices)."""
    z = np.asarray(points, dtype=complex).ravel()
    if z.size < 2:
        raise ValueError("need at least two points")
    xy = np.column_stack([z.real, z.imag])
    try:
        xy = xy[ConvexHull(xy).vertices]
    except (QhullError, ValueError):
        pass  # degenerate (collinear or too few points): brute force over all
    return float(pdist(xy).max())
