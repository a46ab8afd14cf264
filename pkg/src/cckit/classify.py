"""Boundary point classification: support, extremality, strictness, normality."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .domain import (
    ComplexHyperplane,
    ComplexLine,
    DomainModel,
    SolverSettings,
    as_point,
    cpoint_record,
    derivatives,
)
from .slices import blocked_edges, label_grid, slice_window


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_APPLICABLE = "not-applicable"
    VACUOUS = "vacuous-pass"

    @property
    def ok(self) -> bool:
        return self in (Verdict.PASS, Verdict.VACUOUS)


@dataclass
class TestOutcome:
    verdict: Verdict
    witness: Optional[np.ndarray] = None
    detail: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {"verdict": self.verdict.value, **self.detail}
        if self.witness is not None:
            rec["witness"] = cpoint_record(self.witness)
        return rec


def _settings(settings: Optional[SolverSettings]) -> SolverSettings:
    return settings if settings is not None else SolverSettings()


def tangent_hyperplane(D: DomainModel, p, settings: Optional[SolverSettings] = None) -> ComplexHyperplane:
    """Complex tangent hyperplane at a smooth boundary point (normal = Wirtinger gradient)."""
    p = as_point(p, D.dim)
    d = derivatives(D, p)
    if abs(d.value) > D.rho_tol(settings):
        raise ValueError(f"point is not on the boundary (rho = {d.value:.3e})")
    if np.linalg.norm(d.wirtinger) == 0:
        raise ValueError("vanishing gradient at p")
    return ComplexHyperplane(p, d.wirtinger)


def candidate_hyperplanes(D: DomainModel, p, settings=None) -> list:
    if D.level == 1:
        return [tangent_hyperplane(D, p, settings)]
    if D.dim == 1:
        return [ComplexHyperplane(p, np.ones(1))]
    if D.supporting_hyperplanes is not None:
        return list(D.supporting_hyperplanes(p))
    return []


def hyperplane_points(D: DomainModel, H: ComplexHyperplane, grid: int) -> np.ndarray:
    """Grid over the part of H above the bounding box, in n - 1 complex parameters."""
    n = D.dim
    if n == 1:
        return H.anchor[None, :].copy()
    E = H.direction_basis()
    center = E.conj().T @ (D.basepoint - H.anchor)
    axis = np.linspace(-D.radius, D.radius, grid)
    mesh = np.meshgrid(*([axis] * (2 * (n - 1))), indexing="ij")
    t = np.stack([m.ravel() for m in mesh], axis=-1)
    t = center + (t[:, 0::2] + 1j * t[:, 1::2])
    return H.anchor + t @ E.T


def _probe_offsets(dim: int, s: float) -> np.ndarray:
    eye = np.eye(dim, dtype=complex)
    return s * np.concatenate([eye, -eye, 1j * eye, -1j * eye])


def near_closure(D: DomainModel, pts: np.ndarray, settings: SolverSettings) -> np.ndarray:
    """Points of the closure up to the boundary tolerance.

    Level-1: rho <= rho_tol.  Level-0: the point or one of its real-axis
    neighbours at distance ``closure_eps`` is a member.
    """
    if D.level == 1:
        return D.rho(pts) <= D.rho_tol(settings)
    hit = D.membership(pts)
    for off in _probe_offsets(D.dim, settings.closure_eps):
        hit |= D.membership(pts + off)
    return hit


def hyperplane_avoids(D: DomainModel, H: ComplexHyperplane, grid: int = 32) -> tuple:
    """(True, None) if no sampled point of H is a member, else (False, deepest member)."""
    if grid < 32:
        raise ValueError("grid must be at least 32")
    pts = hyperplane_points(D, H, grid)
    inside = D.membership(pts)
    if not inside.any():
        return True, None
    cand = pts[inside]
    if D.level == 1:
        w = cand[int(np.argmin(D.rho(cand)))]
    else:
        w = cand[int(np.argmin(np.linalg.norm(cand - D.basepoint, axis=1)))]
    return False, w


def default_tau(D: DomainModel, grid: int, settings: SolverSettings) -> float:
    if settings.tau is not None:
        return settings.tau
    return 10.0 * 2.0 * D.radius / (grid - 1)


def _touch_check(D, p, pts, tau, settings, extra) -> TestOutcome:
    close = near_closure(D, pts, settings)
    dist = np.linalg.norm(pts - p, axis=1)
    bad = close & (dist > tau)
    detail = {"tau": tau, "closure_points": int(close.sum()), **extra}
    if bad.any():
        i = int(np.argmax(np.where(bad, dist, -1.0)))
        detail["witness_distance"] = float(dist[i])
        return TestOutcome(Verdict.FAIL, pts[i], detail)
    return TestOutcome(Verdict.PASS, None, detail)


def extreme_test(D: DomainModel, p, H: ComplexHyperplane, grid: int = 32,
                 settings: Optional[SolverSettings] = None) -> TestOutcome:
    """Does H meet the closure of D only within tau of p?  (global form)"""
    settings = _settings(settings)
    p = as_point(p, D.dim)
    tau = default_tau(D, grid, settings)
    if D.dim > 1:
        avoids, w = hyperplane_avoids(D, H, grid)
        if not avoids:
            return TestOutcome(Verdict.NOT_APPLICABLE, w, {"reason": "hyperplane meets D", "grid": grid})
    return _touch_check(D, p, hyperplane_points(D, H, grid), tau, settings, {"grid": grid})


def strict_test(D: DomainModel, p, grid: int = 32, hyperplanes: Optional[list] = None,
                settings: Optional[SolverSettings] = None) -> TestOutcome:
    """Strictness against the tangent hyperplane (smooth points) or supplied candidates.

    For C^1 boundaries the tangent hyperplane is the only supporting
    hyperplane, so one extremality scan decides strictness.  In C^1 the
    supporting "hyperplanes" are points and the verdict is vacuous.
    """
    p = as_point(p, D.dim)
    if D.dim == 1:
        return TestOutcome(Verdict.VACUOUS, None, {"reason": "hyperplanes in C are points"})
    if hyperplanes is None:
        hyperplanes = candidate_hyperplanes(D, p, settings)
        convention = "tangent hyperplane (C^1 uniqueness)" if D.level == 1 else "supplied support data"
    else:
        convention = "caller-supplied hyperplanes"
    if not hyperplanes:
        return TestOutcome(Verdict.NOT_APPLICABLE, None, {"reason": "no candidate hyperplanes"})
    outcomes = [extreme_test(D, p, H, grid, settings) for H in hyperplanes]
    detail = {"convention": convention, "hyperplanes": len(hyperplanes), "grid": grid}
    for o in outcomes:
        if o.verdict is Verdict.FAIL:
            return TestOutcome(Verdict.FAIL, o.witness, {**o.detail, **detail})
    if all(o.verdict is Verdict.NOT_APPLICABLE for o in outcomes):
        return TestOutcome(Verdict.NOT_APPLICABLE, None, detail)
    return TestOutcome(Verdict.PASS, None, {**outcomes[0].detail, **detail})


def line_touch_test(D: DomainModel, p, line: ComplexLine, grid: int = 64,
                    settings: Optional[SolverSettings] = None) -> TestOutcome:
    """For a line through p missing D: does it meet the closure only near p?"""
    settings = _settings(settings)
    p = as_point(p, D.dim)
    if line.distance(p) > 1e-10:
        raise ValueError("line does not pass through p")
    center, half = slice_window(D, line, grid)
    a = np.linspace(-half, half, grid)
    pts = line.at(center + a[None, :] + 1j * a[:, None]).reshape(-1, D.dim)
    if D.membership(pts).any():
        return TestOutcome(Verdict.NOT_APPLICABLE, None, {"reason": "line meets D", "grid": grid})
    tau = default_tau(D, grid, settings)
    return _touch_check(D, p, pts, tau, settings, {"grid": grid})


def default_normality_resolution(dim: int) -> int:
    return {1: 128, 2: 24}.get(dim, 10)


def _ball_grid(D: DomainModel, p: np.ndarray, radius: float, resolution: int):
    """Member cells of a 2n-real grid over the box around p, restricted to B(p, radius)."""
    n = D.dim
    axis = np.linspace(-radius, radius, resolution)
    mesh = np.meshgrid(*([axis] * (2 * n)), indexing="ij")
    offsets = np.stack([m for m in mesh], axis=-1)
    dist = np.sqrt(np.sum(offsets ** 2, axis=-1))
    pts = p + offsets[..., 0::2] + 1j * offsets[..., 1::2]
    cells = D.membership(pts.reshape(-1, n)).reshape(dist.shape) & (dist <= radius)
    blocked = blocked_edges(D, pts, cells) if D.edge_blocker is not None else None
    labels, count = label_grid(cells, blocked)
    return cells, labels, count, dist


def _radius_schedule(U: float, resolution: int, j_max: int):
    step = 2.0 * U / (resolution - 1)
    for j in range(1, j_max + 1):
        V = U / 2 ** j
        if V < 2 * step:
            return
        yield V


def normality_test(D: DomainModel, p, U_radius: float, resolution: Optional[int] = None,
                   j_max: int = 6) -> TestOutcome:
    """Find V < U such that all member cells of B(p, V) lie in one component of B(p, U) & D."""
    if not U_radius > 0:
        raise ValueError("U_radius must be positive")
    p = as_point(p, D.dim)
    res = resolution or default_normality_resolution(D.dim)
    cells, labels, count, dist = _ball_grid(D, p, U_radius, res)
    if count == 0:
        raise ValueError("B(p, U) & D is empty at this resolution")
    detail = {"U_radius": U_radius, "resolution": res, "U_components": count}
    for V in _radius_schedule(U_radius, res, j_max):
        sel = cells & (dist <= V)
        if not sel.any():
            break
        comps = np.unique(labels[sel])
        if comps.size == 1:
            return TestOutcome(Verdict.PASS, None, {**detail, "V_radius": V})
        detail["last_V_components"] = int(comps.size)
    return TestOutcome(Verdict.FAIL, None, {**detail, "V_radius": None})


def strong_normality_test(D: DomainModel, p, U_radius: float, resolution: Optional[int] = None,
                          j_max: int = 6) -> TestOutcome:
    """Find V < U such that B(p, V) & D is connected on its own grid."""
    if not U_radius > 0:
        raise ValueError("U_radius must be positive")
    p = as_point(p, D.dim)
    res = resolution or default_normality_resolution(D.dim)
    _, _, count, _ = _ball_grid(D, p, U_radius, res)
    if count == 0:
        raise ValueError("B(p, U) & D is empty at this resolution")
    detail = {"U_radius": U_radius, "resolution": res}
    for V in _radius_schedule(U_radius, res, j_max):
        _, _, count, _ = _ball_grid(D, p, V, res)
        if count == 0:
            break
        if count == 1:
            return TestOutcome(Verdict.PASS, None, {**detail, "V_radius": V})
        detail["last_V_components"] = count
    return TestOutcome(Verdict.FAIL, None, {**detail, "V_radius": None})


@dataclass
class BoundaryClassification:
    point: np.ndarray
    hyperplane: Optional[ComplexHyperplane]
    supported: TestOutcome
    extreme: TestOutcome
    strict: TestOutcome
    normal: TestOutcome
    strongly_normal: TestOutcome
    settings: dict = field(default_factory=dict)

    FLAGS = ("supported", "extreme", "strict", "normal", "strongly_normal")

    @property
    def flags(self) -> dict:
        return {name: getattr(self, name).verdict for name in self.FLAGS}

    @property
    def passed(self) -> bool:
        return all(v.ok for v in self.flags.values())

    def implication_violations(self) -> list:
        out = []
        if self.strict.verdict.ok and not self.extreme.verdict.ok:
            out.append("strict => extreme")
        if self.strongly_normal.verdict.ok and not self.normal.verdict.ok:
            out.append("strongly_normal => normal")
        return out

    def to_record(self) -> dict:
        rec = {
            "point": cpoint_record(self.point),
            "hyperplane": self.hyperplane.to_record() if self.hyperplane is not None else None,
            "flags": {k: v.value for k, v in self.flags.items()},
            "tests": {name: getattr(self, name).to_record() for name in self.FLAGS},
            "tolerances": self.settings,
        }
        return rec


def classify_point(D: DomainModel, p, grid: int = 32, U_radius: Optional[float] = None,
                   resolution: Optional[int] = None,
                   settings: Optional[SolverSettings] = None) -> BoundaryClassification:
    settings = _settings(settings)
    p = as_point(p, D.dim)
    U = U_radius if U_radius is not None else 0.5 * D.radius
    planes = candidate_hyperplanes(D, p, settings)
    H = planes[0] if planes else None
    if H is None:
        supported = extreme = TestOutcome(Verdict.NOT_APPLICABLE, None, {"reason": "no candidate hyperplane"})
    elif D.dim == 1:
        supported = TestOutcome(Verdict.VACUOUS, None, {"reason": "hyperplanes in C are points"})
        extreme = extreme_test(D, p, H, grid, settings)
    else:
        ok, w = hyperplane_avoids(D, H, grid)
        supported = TestOutcome(Verdict.PASS if ok else Verdict.FAIL, w, {"grid": grid})
        extreme = extreme_test(D, p, H, grid, settings)
    strict = strict_test(D, p, grid, None, settings)
    normal = normality_test(D, p, U, resolution)
    strong = strong_normality_test(D, p, U, resolution)
    tol = {
        "rho_tol": D.rho_tol(settings),
        "tau": default_tau(D, grid, settings),
        "closure_eps": settings.closure_eps,
        "grid": grid,
        "U_radius": U,
        "normality_resolution": resolution or default_normality_resolution(D.dim),
    }
    return BoundaryClassification(p, H, supported, extreme, strict, normal, strong, tol)
