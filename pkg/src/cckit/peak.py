"""Holomorphic peak functions F = f o sigma at extreme boundary points.

sigma projects C^n onto the complex line l = p + C b along the hyperplane
H (sigma vanishes exactly on H), and f is the planar weak peak function

    f(lam) = exp(-1 / log(Delta / lam))

on the projected domain, with the logarithm taken on the half-plane
around the branch direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classify import candidate_hyperplanes, extreme_test
from .domain import (
    ComplexHyperplane,
    ComplexLine,
    DomainModel,
    SolverSettings,
    as_point,
    cpoint_record,
    sample_boundary,
    sample_interior,
)
from .slices import planar_diameter, slice_window


PEAK_SNAP = 1e-13


class BranchError(ValueError):
    pass


def weak_peak_values(delta: float, branch: complex, lam) -> tuple:
    """Vectorized f(lam) and the branch-validity mask; f(0) is its limit 1.

    |lam| below ``PEAK_SNAP * delta`` is rounding noise of sigma on H and is
    treated as the peak point itself.
    """
    lam = np.asarray(lam, dtype=complex)
    u = lam / branch
    valid = u.real > 0
    zero = np.abs(lam) <= PEAK_SNAP * delta
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.log(delta) - np.log(np.where(zero, 1.0, u))
        f = np.exp(-1.0 / w)
    f = np.where(zero, 1.0 + 0j, f)
    return f, valid | zero


def planar_weak_peak(delta: float, branch: complex, lam: complex) -> complex:
    if not delta > 0:
        raise ValueError("delta must be positive")
    f, valid = weak_peak_values(delta, branch, lam)
    if not valid:
        raise BranchError(f"lambda={lam} outside the half-plane Re(lambda/branch) > 0")
    return complex(f)


@dataclass(frozen=True, eq=False)
class PeakFunctionSpec:
    p: np.ndarray
    H: ComplexHyperplane
    b: np.ndarray
    delta: float
    branch: complex

    def __post_init__(self):
        if abs(self.transversality) < 1e-8:
            raise ValueError("line direction is (nearly) parallel to the hyperplane")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def transversality(self) -> complex:
        return complex(self.H.normal @ self.b)

    @property
    def line(self) -> ComplexLine:
        return ComplexLine(self.p, self.b)

    def sigma(self, z) -> np.ndarray:
        """Coordinate of the projection onto l along H: pi(z) = p + sigma(z) b."""
        z = np.asarray(z, dtype=complex)
        return ((z - self.p) @ self.H.normal) / self.transversality

    def evaluate(self, z) -> tuple:
        return weak_peak_values(self.delta, self.branch, self.sigma(z))

    def __call__(self, z) -> np.ndarray:
        return self.evaluate(z)[0]

    def with_delta(self, delta: float) -> "PeakFunctionSpec":
        return PeakFunctionSpec(self.p, self.H, self.b, delta, self.branch)

    def to_record(self) -> dict:
        return {
            "p": cpoint_record(self.p),
            "H": self.H.to_record(),
            "b": cpoint_record(self.b),
            "delta": self.delta,
            "branch": [self.branch.real, self.branch.imag],
        }


def projection_functional(spec: PeakFunctionSpec, z) -> complex:
    return complex(spec.sigma(as_point(z, spec.p.size)))


def _line_meets(D: DomainModel, line: ComplexLine, grid: int = 96) -> bool:
    center, half = slice_window(D, line, grid)
    a = np.linspace(-half, half, grid)
    pts = line.at(center + a[None, :] + 1j * a[:, None]).reshape(-1, D.dim)
    return bool(D.membership(pts).any())


def build_peak_function(D: DomainModel, p, H: Optional[ComplexHyperplane] = None, b=None,
                        delta: Optional[float] = None, samples: int = 256, seed: int = 0,
                        grid: int = 32, settings: Optional[SolverSettings] = None) -> PeakFunctionSpec:
    p = as_point(p, D.dim)
    if H is None:
        planes = candidate_hyperplanes(D, p, settings)
        if not planes:
            raise ValueError(f"no hyperplane data for {D.name} at p; supply H")
        H = planes[0]
    ext = extreme_test(D, p, H, grid, settings)
    if not ext.verdict.ok:
        raise ValueError(f"p is not certified extreme for H ({ext.verdict.value})")
    if b is None:
        v = p - D.basepoint
        b = v / np.linalg.norm(v)
    b = as_point(b, D.dim)
    b = b / np.linalg.norm(b)
    if not _line_meets(D, ComplexLine(p, b)):
        raise ValueError("the line through p in direction b misses D")
    spec = PeakFunctionSpec(p, H, b, 1.0, 1.0)
    if delta is None:
        proj = spec.sigma(np.array(sample_boundary(D, samples, seed, settings)))
        delta = 1.1 * planar_diameter(proj)
    s0 = complex(spec.sigma(D.basepoint))
    if s0 == 0:
        raise ValueError("basepoint lies on H")
    return PeakFunctionSpec(p, H, b, float(delta), s0 / abs(s0))


def approach_path(D: DomainModel, p: np.ndarray, steps: int) -> np.ndarray:
    k = np.arange(1, steps + 1)
    return p + (2.0 ** -k)[:, None] * (D.basepoint - p)


@dataclass
class PeakReport:
    passed: bool
    kind: str
    margins: dict
    branch_violations: int
    limit_trace: list
    detail: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "margins": self.margins,
            "branch_violations": self.branch_violations,
            "limit_trace": self.limit_trace,
            **self.detail,
        }


def _limit_trace(D, spec, steps):
    path = approach_path(D, spec.p, steps)
    vals, _ = spec.evaluate(path)
    mods = np.abs(vals)
    return [[k + 1, float(m)] for k, m in enumerate(mods)]


def verify_peak(D: DomainModel, spec: PeakFunctionSpec, radii=(0.1, 0.2, 0.4), samples: int = 10_000,
                seed: int = 0, approach_steps: int = 40, max_branch_violations: int = 0) -> PeakReport:
    """Peak inequality sup{|F| : z in D minus B(p, r)} < 1 = lim_{z -> p} |F| on samples.

    Uses the D \\ U form of the set in the supremum.
    """
    rng = np.random.default_rng(seed)
    pts = sample_interior(D, samples, rng)
    vals, valid = spec.evaluate(pts)
    mods = np.abs(vals)
    dist = np.linalg.norm(pts - spec.p, axis=1)
    margins = {}
    sup = {}
    for r in radii:
        outside = dist > r
        M = float(mods[outside].max()) if outside.any() else 0.0
        sup[str(r)] = M
        margins[str(r)] = 1.0 - M
    trace = _limit_trace(D, spec, approach_steps)
    L = trace[-1][1]
    violations = int((~valid).sum())
    interior_max = float(mods.max())
    passed = (
        all(m > 0 for m in margins.values())
        and interior_max < 1.0
        and all(L > M for M in sup.values())
        and violations <= max_branch_violations
    )
    detail = {"sup_outside": sup, "interior_max": interior_max, "samples": samples, "seed": seed,
              "limit_value": L, "spec": spec.to_record()}
    return PeakReport(passed, "peak", margins, violations, trace, detail)


def verify_ad_peak(D: DomainModel, spec: PeakFunctionSpec, samples: int = 512, seed: int = 0,
                   tau: Optional[float] = None, approach_steps: int = 40, max_branch_violations: int = 0,
                   settings: Optional[SolverSettings] = None) -> PeakReport:
    """A(D)-peak check: |F| < 1 on closure samples away from p, and F -> 1 at p.

    Closure samples are boundary points plus inward shells at relative
    depths 1e-3, 1e-2 and 5e-2.  A sample off the branch half-plane means
    the logarithm (hence F) is not certified continuous there.
    """
    tau = tau if tau is not None else 0.01 * D.radius
    bpts = np.array(sample_boundary(D, samples, seed, settings))
    shells = [bpts] + [D.basepoint + (1 - s) * (bpts - D.basepoint) for s in (1e-3, 1e-2, 5e-2)]
    pts = np.concatenate(shells)
    vals, valid = spec.evaluate(pts)
    mods = np.abs(vals)
    dist = np.linalg.norm(pts - spec.p, axis=1)
    far = dist >= tau
    bins = [(tau, 0.1), (0.1, 0.5), (0.5, np.inf)]
    margins = {}
    for lo, hi in bins:
        sel = far & (dist >= lo) & (dist < hi)
        if sel.any():
            margins[f"[{lo:g},{hi:g})"] = float(1.0 - mods[sel].max())
    trace = _limit_trace(D, spec, approach_steps)
    gaps = [abs(1.0 - t[1]) for t in trace]
    tail = gaps[len(gaps) // 2:]
    limit_ok = all(b <= a for a, b in zip(tail, tail[1:]))
    violations = int((~valid[far]).sum())
    min_margin = float(1.0 - mods[far].max()) if far.any() else None
    passed = (min_margin is not None and min_margin > 0 and limit_ok and violations <= max_branch_violations)
    detail = {"min_margin": min_margin, "tau": tau, "closure_samples": int(far.sum()), "limit_monotone": limit_ok,
              "samples": samples, "seed": seed, "spec": spec.to_record()}
    if violations:
        bad = pts[far][~valid[far]]
        detail["branch_violation_examples"] = [cpoint_record(z) for z in bad[:5]]
        detail["failure_mode"] = "closure samples outside the log-branch half-plane; F not certified continuous on the closure"
    return PeakReport(passed, "ad_peak", margins, violations, trace, detail)


__all__ = [
    "BranchError",
    "PeakFunctionSpec",
    "PeakReport",
    "build_peak_function",
    "planar_weak_peak",
    "projection_functional",
    "verify_ad_peak",
    "verify_peak",
    "weak_peak_values",
]
