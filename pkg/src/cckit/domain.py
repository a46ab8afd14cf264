"""Bounded domains in C^n, their defining functions and boundary geometry.

Points of C^n are 1-d complex numpy arrays.  Whenever a real picture is
needed the coordinates are realified in the interleaved order
``(Re z1, Im z1, Re z2, Im z2, ...)``; gradients and Hessians of defining
functions live in that real chart.  Wirtinger derivatives are recovered
from the real gradient via ``d/dz_j = (d/dx_j - i d/dy_j) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq

ArrayFn = Callable[[np.ndarray], np.ndarray]


class CapabilityError(ValueError):
    """Raised when an operation needs a defining function on a membership-only domain."""


class ConvergenceError(RuntimeError):
    pass


def as_point(z, dim: Optional[int] = None) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.ndim != 1 or z.size == 0:
        raise ValueError(f"expected a 1-d point, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("point has non-finite coordinates")
    if dim is not None and z.size != dim:
        raise ValueError(f"expected a point of C^{dim}, got C^{z.size}")
    return z


def realify(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def complexify(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def wirtinger_from_real(grad: np.ndarray) -> np.ndarray:
    return 0.5 * (grad[0::2] - 1j * grad[1::2])


def real_from_wirtinger(dz: np.ndarray, A: np.ndarray, B: np.ndarray):
    """Real gradient and Hessian of a real function from its Wirtinger data.

    ``dz[j] = df/dz_j``, ``A[j, k] = d2f/dz_j dz_k`` and
    ``B[j, k] = d2f/dz_j dzbar_k`` (Hermitian for real f).
    """
    n = dz.shape[0]
    grad = np.empty(2 * n)
    grad[0::2] = 2.0 * dz.real
    grad[1::2] = -2.0 * dz.imag
    hess = np.empty((2 * n, 2 * n))
    hess[0::2, 0::2] = 2.0 * (A.real + B.real)
    hess[1::2, 1::2] = 2.0 * (B.real - A.real)
    hess[0::2, 1::2] = 2.0 * (B.imag - A.imag)
    hess[1::2, 0::2] = hess[0::2, 1::2].T
    return grad, hess


def fd_gradient(f: ArrayFn, x: np.ndarray, h: float) -> np.ndarray:
    """Central differences of a real function of a real vector (batched evaluation)."""
    E = np.eye(x.size) * h
    vals = f(np.concatenate([x + E, x - E]))
    return (vals[: x.size] - vals[x.size:]) / (2.0 * h)


def fd_hessian(f: ArrayFn, x: np.ndarray, h: float) -> np.ndarray:
    E = np.eye(x.size) * h
    Ei, Ej = E[:, None, :], E[None, :, :]
    stencil = np.stack([x + Ei + Ej, x + Ei - Ej, x - Ei + Ej, x - Ei - Ej])
    v = f(stencil)
    H = (v[0] - v[1] - v[2] + v[3]) / (4.0 * h * h)
    return 0.5 * (H + H.T)


@dataclass(frozen=True, eq=False)
class DefiningFunction:
    """A real function negative inside the domain, with optional analytic derivatives.

    ``value`` is vectorized over leading axes of a ``(..., n)`` complex array.
    ``grad``/``hess`` take a single point and return the real gradient
    (length 2n) and real Hessian (2n x 2n).
    """

    dim: int
    value: ArrayFn
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fd_step: float = 1e-5
    smoothness: float = math.inf

    def __call__(self, z) -> np.ndarray:
        return self.value(np.asarray(z, dtype=complex))

    def real_value(self, x: np.ndarray) -> np.ndarray:
        return self.value(complexify(x))


@dataclass(frozen=True)
class SolverSettings:
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    fd_step: float = 1e-5
    resolution: int = 256
    seed: int = 0
    rho_tol: Optional[float] = None  # None: derived per domain
    tau: Optional[float] = None  # None: 10 grid steps
    closure_eps: float = 1e-7

    def __post_init__(self):
        for name in ("newton_tol", "fd_step", "closure_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.rho_tol is not None and not self.rho_tol > 0:
            raise ValueError("rho_tol must be positive")
        if self.tau is not None and not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.resolution < 32:
            raise ValueError("resolution must be at least 32")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter must be >= 1")


@dataclass(frozen=True, eq=False)
class ComplexHyperplane:
    """The set {z : sum_j normal_j (z_j - anchor_j) = 0}."""

    anchor: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        anchor = as_point(self.anchor)
        normal = as_point(self.normal, anchor.size)
        norm = np.linalg.norm(normal)
        if norm == 0:
            raise ValueError("hyperplane normal must be nonzero")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "normal", normal / norm)

    @property
    def dim(self) -> int:
        return self.anchor.size

    def functional(self, z) -> np.ndarray:
        return (np.asarray(z, dtype=complex) - self.anchor) @ self.normal

    def direction_basis(self) -> np.ndarray:
        """Orthonormal basis (columns) of the complex direction space of the hyperplane."""
        return _phase_fix(null_space(self.normal[None, :]))

    def to_record(self) -> dict:
        return {"anchor": cpoint_record(self.anchor), "normal": cpoint_record(self.normal)}


@dataclass(frozen=True, eq=False)
class ComplexLine:
    """The line zeta -> base + zeta * direction."""

    base: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        base = as_point(self.base)
        direction = as_point(self.direction, base.size)
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise ValueError("line direction must be nonzero")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "direction", direction / norm)

    @property
    def dim(self) -> int:
        return self.base.size

    def at(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=complex)
        return self.base + zeta[..., None] * self.direction

    def parameter_of(self, z) -> complex:
        """Parameter of the orthogonal projection of z onto the line."""
        return complex(np.vdot(self.direction, np.asarray(z, dtype=complex) - self.base))

    def distance(self, z) -> float:
        z = np.asarray(z, dtype=complex)
        return float(np.linalg.norm(z - self.at(self.parameter_of(z))))

    def to_record(self) -> dict:
        return {"base": cpoint_record(self.base), "direction": cpoint_record(self.direction)}


def cpoint_record(z) -> list:
    return [[float(c.real), float(c.imag)] for c in np.atleast_1d(np.asarray(z, dtype=complex))]


def _phase_fix(basis: np.ndarray) -> np.ndarray:
    # make the largest-modulus entry of each column real positive
    basis = np.array(basis, dtype=complex)
    for k in range(basis.shape[1]):
        col = basis[:, k]
        j = int(np.argmax(np.abs(col)))
        basis[:, k] = col * (abs(col[j]) / col[j])
    return basis


@dataclass(frozen=True, eq=False)
class DomainModel:
    """A bounded domain given by a membership oracle and, optionally, a defining function.

    Level-1 domains carry ``rho``; Level-0 domains only answer membership
    queries.  ``edge_blocker(a, b)`` (vectorized over rows) reports segments
    between member points that leave the domain, for slit-type domains.
    ``supporting_hyperplanes(p)`` supplies local support data at non-smooth
    boundary points.
    """

    name: str
    dim: int
    membership: ArrayFn
    basepoint: np.ndarray
    radius: float
    rho: Optional[DefiningFunction] = None
    edge_blocker: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    supporting_hyperplanes: Optional[Callable[[np.ndarray], list]] = None
    params: tuple = ()
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        z0 = as_point(self.basepoint, self.dim)
        object.__setattr__(self, "basepoint", z0)
        if not self.radius > 0:
            raise ValueError("bounding radius must be positive")
        if self.rho is not None and self.rho.dim != self.dim:
            raise ValueError("defining function dimension mismatch")
        if not self.contains(z0):
            raise ValueError(f"basepoint of {self.name} is not a member")

    @property
    def level(self) -> int:
        return 0 if self.rho is None else 1

    def contains(self, z) -> bool:
        return bool(self.membership(as_point(z, self.dim)[None, :])[0])

    def require_rho(self) -> DefiningFunction:
        if self.rho is None:
            raise CapabilityError(f"{self.name} has no defining function (Level-0)")
        return self.rho

    def in_box(self, z) -> bool:
        return bool(np.max(np.abs(realify(np.asarray(z) - self.basepoint))) <= 2.0 * self.radius)

    @cached_property
    def default_rho_tol(self) -> float:
        if self.rho is None:
            return 1e-8
        g = derivatives(self, self.basepoint).real_grad
        if not np.all(np.isfinite(g)):
            # singular analytic gradient (e.g. fractional exponents at 0)
            g = fd_gradient(self.rho.real_value, realify(self.basepoint), self.rho.fd_step)
        return 1e-8 * (1.0 + float(np.linalg.norm(g)) * self.radius)

    def rho_tol(self, settings: Optional[SolverSettings] = None) -> float:
        if settings is not None and settings.rho_tol is not None:
            return settings.rho_tol
        return self.default_rho_tol

    def describe(self) -> dict:
        return {
            "name": self.name,
            "params": list(self.params),
            "dimension": self.dim,
            "level": self.level,
            "bounding_radius": self.radius,
            "basepoint": cpoint_record(self.basepoint),
        }


class Derivatives(NamedTuple):
    value: float
    real_grad: np.ndarray
    wirtinger: np.ndarray
    real_hess: np.ndarray


def derivatives(D: DomainModel, z) -> Derivatives:
    """Value, real gradient, Wirtinger gradient and symmetrized real Hessian of rho at z."""
    rho = D.require_rho()
    z = as_point(z, D.dim)
    if not D.in_box(z):
        raise ValueError(f"point outside the bounding box of {D.name}")
    value = float(rho(z[None, :])[0])
    x = realify(z)
    if rho.grad is not None:
        grad = np.asarray(rho.grad(z), dtype=float)
    else:
        grad = fd_gradient(rho.real_value, x, rho.fd_step)
    if rho.hess is not None:
        hess = np.asarray(rho.hess(z), dtype=float)
        hess = 0.5 * (hess + hess.T)
    else:
        hess = fd_hessian(rho.real_value, x, rho.fd_step)
    return Derivatives(value, grad, wirtinger_from_real(grad), hess)


def tangent_basis_from_wirtinger(dz: np.ndarray) -> list:
    """Orthonormal basis of {X : sum_j dz_j X_j = 0}."""
    dz = np.asarray(dz, dtype=complex)
    if np.linalg.norm(dz) == 0:
        raise ValueError("vanishing gradient: complex tangent space undefined")
    basis = _phase_fix(null_space(dz[None, :]))
    return [basis[:, k] for k in range(basis.shape[1])]


def complex_tangent_basis(D: DomainModel, z, settings: Optional[SolverSettings] = None) -> list:
    d = derivatives(D, z)
    if abs(d.value) > D.rho_tol(settings):
        raise ValueError(f"point is not on the boundary (rho = {d.value:.3e})")
    return tangent_basis_from_wirtinger(d.wirtinger)


def hessian_form(D: DomainModel, z, X) -> float:
    X = as_point(X)
    if X.size != D.dim:
        raise ValueError("tangent vector dimension mismatch")
    x = realify(X)
    return float(x @ derivatives(D, z).real_hess @ x)


def restricted_min_eigenvalue(hess: np.ndarray, basis: list) -> float:
    """Smallest eigenvalue of a real Hessian restricted to the realified complex span of ``basis``.

    Returns ``inf`` for an empty basis (the complex tangent space of a
    boundary in C^1 is trivial).
    """
    if not basis:
        return math.inf
    cols = []
    for v in basis:
        cols.append(realify(v))
        cols.append(realify(1j * v))
    B = np.column_stack(cols)
    return float(np.linalg.eigvalsh(B.T @ hess @ B)[0])


def slc_margin(D: DomainModel, num_samples: int, seed: int) -> float:
    """Minimum over sampled boundary points of the Hessian on the complex tangent space."""
    points = sample_boundary(D, num_samples, seed)
    if not points:
        raise ValueError("no boundary points found")
    margin = math.inf
    for z in points:
        d = derivatives(D, z)
        margin = min(margin, restricted_min_eigenvalue(d.real_hess, tangent_basis_from_wirtinger(d.wirtinger)))
    return margin


def boundary_project(D: DomainModel, direction, settings: Optional[SolverSettings] = None) -> np.ndarray:
    """Boundary point on the ray from the basepoint in ``direction`` (bisection)."""
    d = as_point(direction, D.dim)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise ValueError("direction must be nonzero")
    d = d / norm
    z0 = D.basepoint
    t_hi = 1.05 * D.radius
    if D.rho is not None:
        rho = D.rho

        def f(t):
            return float(rho((z0 + t * d)[None, :])[0])

        if not f(t_hi) > 0:
            raise ValueError(f"ray never exits the bounding box of {D.name}; bad radius?")
        t = brentq(f, 0.0, t_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        z = z0 + t * d
        if abs(f(t)) > D.rho_tol(settings):
            raise ConvergenceError(f"boundary bisection stalled at rho = {f(t):.3e}")
        return z
    if D.contains(z0 + t_hi * d):
        raise ValueError(f"ray never exits the bounding box of {D.name}; bad radius?")
    lo, hi = 0.0, t_hi
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if D.contains(z0 + mid * d):
            lo = mid
        else:
            hi = mid
    return z0 + 0.5 * (lo + hi) * d


def random_directions(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    x = rng.standard_normal((count, 2 * dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return complexify(x)


def sample_boundary(D: DomainModel, count: int, seed: int, settings: Optional[SolverSettings] = None) -> list:
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    dirs = random_directions(rng, count, D.dim)
    return [boundary_project(D, d, settings) for d in dirs]


def sample_interior(D: DomainModel, count: int, rng: np.random.Generator, max_batches: int = 1000) -> np.ndarray:
    """Uniform member points of D by rejection from its bounding ball."""
    found = []
    total = 0
    n2 = 2 * D.dim
    for _ in range(max_batches):
        batch = max(64, 2 * (count - total))
        dirs = random_directions(rng, batch, D.dim)
        r = D.radius * rng.random(batch) ** (1.0 / n2)
        pts = D.basepoint + r[:, None] * dirs
        pts = pts[D.membership(pts)]
        found.append(pts)
        total += len(pts)
        if total >= count:
            return np.concatenate(found)[:count]
    raise ValueError(f"could not sample {count} interior points of {D.name}")
