"""Shadows pi(D) of domains D in C^{n+m} under the projection (z, w) -> z.

For a Level-1 source the shadow is described by the induced defining
function ``rho_s(z) = min_w rho(z, w)``, attained at the fiber critical
point phi(z) where d(rho)/dw = 0.  Its Hessian is the Schur complement

    H_zz - H_zw H_ww^{-1} H_wz

of the source Hessian at (z, phi(z)).  Membership-only sources get an
oracle-level shadow via fiber sampling (``shadow_mask``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classify import Verdict
from .domain import (
    ConvergenceError,
    DefiningFunction,
    DomainModel,
    SolverSettings,
    as_point,
    complexify,
    cpoint_record,
    derivatives,
    fd_gradient,
    random_directions,
    restricted_min_eigenvalue,
    sample_boundary,
    slc_margin,
    tangent_basis_from_wirtinger,
    wirtinger_from_real,
)


class ShadowModel:
    """Projection of ``source`` onto its first ``n`` coordinates, with a fiber-solution cache."""

    fiber_grid = 8  # coarse seeding points per real fiber axis

    def __init__(self, source: DomainModel, n: int, m: int, settings: Optional[SolverSettings] = None):
        if n < 1 or m < 1 or n + m != source.dim:
            raise ValueError(f"split ({n}, {m}) does not match C^{source.dim}")
        source.require_rho()
        self.source = source
        self.n = n
        self.m = m
        self.settings = settings or SolverSettings()
        self._cache: dict = {}
        self._domain: Optional[DomainModel] = None

    @property
    def w_slice(self) -> slice:
        return slice(2 * self.n, 2 * (self.n + self.m))

    @property
    def z_slice(self) -> slice:
        return slice(0, 2 * self.n)

    def _join(self, z, w) -> np.ndarray:
        return np.concatenate([z, w])

    def fiber_residual(self, z, w) -> float:
        """Norm of the Wirtinger fiber gradient d(rho)/dw at (z, w)."""
        g = derivatives(self.source, self._join(z, w)).real_grad[self.w_slice]
        return float(np.linalg.norm(wirtinger_from_real(g)))

    def fiber_critical_newton(self, z, w0, trace: Optional[list] = None) -> np.ndarray:
        """Damped Newton on d(rho)/dw = 0 along the fiber over z.

        The Jacobian is the real 2m x 2m fiber block of the Hessian.  Steps
        are halved while the residual fails to decrease; the block must be
        positive definite at the solution.
        """
        z = as_point(z, self.n)
        w = as_point(w0, self.m)
        s = self.settings
        ws = self.w_slice
        d = derivatives(self.source, self._join(z, w))
        res = float(np.linalg.norm(wirtinger_from_real(d.real_grad[ws])))
        if trace is not None:
            trace.append(res)
        for _ in range(s.newton_max_iter):
            if res <= s.newton_tol:
                break
            H = d.real_hess[ws, ws]
            try:
                step = -np.linalg.solve(H, d.real_grad[ws])
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError("singular fiber Hessian block") from exc
            t = 1.0
            while True:
                w_new = w + t * complexify(step)
                d_new = derivatives(self.source, self._join(z, w_new))
                res_new = float(np.linalg.norm(wirtinger_from_real(d_new.real_grad[ws])))
                if res_new < res or res_new <= s.newton_tol:
                    break
                t *= 0.5
                if t < 1e-10:
                    raise ConvergenceError(f"line search failed at residual {res:.3e}")
            w, d, res = w_new, d_new, res_new
            if trace is not None:
                trace.append(res)
        if res > s.newton_tol:
            raise ConvergenceError(f"fiber Newton did not converge (residual {res:.3e})")
        try:
            np.linalg.cholesky(d.real_hess[ws, ws])
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("fiber Hessian block not positive definite at the solution") from exc
        return w

    def fiber_global_min(self, z) -> tuple:
        """(phi(z), rho_s(z)): coarse fiber grid scan, then Newton polish from the best cell."""
        z = as_point(z, self.n)
        key = z.tobytes()
        hit = self._cache.get(key)
        if hit is not None and self.fiber_residual(z, hit[0]) <= self.settings.newton_tol:
            return hit
        src = self.source
        wc = src.basepoint[self.n:]
        axis = np.linspace(-src.radius, src.radius, self.fiber_grid)
        mesh = np.meshgrid(*([axis] * (2 * self.m)), indexing="ij")
        offs = np.stack([g.ravel() for g in mesh], axis=-1)
        W = wc + complexify(offs)
        vals = src.rho(np.concatenate([np.broadcast_to(z, (len(W), self.n)), W], axis=1))
        w0 = W[int(np.argmin(vals))]
        w = self.fiber_critical_newton(z, w0)
        value = float(src.rho(self._join(z, w)[None, :])[0])
        if value > float(vals.min()) + 1e-12:
            raise ConvergenceError("Newton polish ended above the coarse fiber minimum")
        self._cache[key] = (w, value)
        return w, value

    def rho_tilde(self, z) -> float:
        return self.fiber_global_min(z)[1]

    def shadow_rho_derivs(self, z) -> tuple:
        """(rho_s, real gradient, Schur-complement Hessian) at z."""
        z = as_point(z, self.n)
        w, value = self.fiber_global_min(z)
        d = derivatives(self.source, self._join(z, w))
        zs, ws = self.z_slice, self.w_slice
        H = d.real_hess
        Hww = H[ws, ws]
        schur = H[zs, zs] - H[zs, ws] @ np.linalg.solve(Hww, H[ws, zs])
        schur = 0.5 * (schur + schur.T)
        return value, d.real_grad[zs].copy(), schur

    def zero_extension_hessian(self, z) -> np.ndarray:
        """The source Hessian on vectors (X, 0): the z-block at (z, phi(z))."""
        w, _ = self.fiber_global_min(z)
        H = derivatives(self.source, self._join(as_point(z, self.n), w)).real_hess
        return H[self.z_slice, self.z_slice].copy()

    def domain(self) -> DomainModel:
        """The shadow as a Level-1 domain with defining function rho_s."""
        if self._domain is None:
            def value(Z):
                Z = np.asarray(Z, dtype=complex)
                flat = Z.reshape(-1, self.n)
                out = np.array([self.rho_tilde(z) for z in flat])
                return out.reshape(Z.shape[:-1])

            rho = DefiningFunction(
                dim=self.n,
                value=value,
                grad=lambda z: self.shadow_rho_derivs(z)[1],
                hess=lambda z: self.shadow_rho_derivs(z)[2],
                fd_step=self.settings.fd_step,
            )
            self._domain = DomainModel(
                name=f"shadow({self.source.name})",
                dim=self.n,
                membership=lambda Z: value(Z) < 0,
                basepoint=self.source.basepoint[: self.n],
                radius=self.source.radius,
                rho=rho,
                params=(float(self.n), float(self.m)),
            )
        return self._domain

    def rho_tol(self) -> float:
        return self.source.rho_tol(self.settings)

    def sample_boundary(self, count: int, seed: int) -> list:
        return sample_boundary(self.domain(), count, seed, self.settings)

    def boundary_lift(self, z) -> np.ndarray:
        """Phi(z) = (z, phi(z)) for z on the shadow boundary."""
        z = as_point(z, self.n)
        w, value = self.fiber_global_min(z)
        tol = self.rho_tol()
        if abs(value) > tol:
            raise ValueError(f"z is not on the shadow boundary (rho_s = {value:.3e})")
        lift = self._join(z, w)
        if abs(float(self.source.rho(lift[None, :])[0])) > 10 * tol:
            raise ConvergenceError("lift is off the source boundary")
        return lift

    def tangent_compat(self, z, h: Optional[float] = None) -> dict:
        """Check that fiber directions are complex-tangent at Phi(z) and that the
        z-part of the source gradient there equals the gradient of rho_s at z.

        The rho_s gradient is taken by central differences of the composed
        function, independently of the envelope formula.
        """
        z = as_point(z, self.n)
        lift = self.boundary_lift(z)
        d = derivatives(self.source, lift)
        dz_src = wirtinger_from_real(d.real_grad[self.z_slice])
        dw_src = wirtinger_from_real(d.real_grad[self.w_slice])
        h = h if h is not None else self.settings.fd_step
        f = self.domain().rho.real_value
        g = fd_gradient(f, np.concatenate([z.real[:, None], z.imag[:, None]], axis=1).ravel(), h)
        dz_fd = wirtinger_from_real(g)
        fiber_eig = float(np.linalg.eigvalsh(d.real_hess[self.w_slice, self.w_slice])[0])
        return {
            "point": cpoint_record(z),
            "lift": cpoint_record(lift),
            "fiber_gradient_norm": float(np.linalg.norm(dw_src)),
            "gradient_deviation": float(np.linalg.norm(dz_src - dz_fd)),
            "fiber_block_min_eig": fiber_eig,
        }

    def shadow_slc_verify(self, num_samples: int, seed: int, source_margin: Optional[float] = None,
                          c_min: float = 1e-9, slack: float = 0.05) -> dict:
        """Strong linear convexity of the shadow on sampled boundary points.

        Reports the Schur-complement margin and, alongside, the margin of
        the (X, 0)-extension form.
        """
        if source_margin is None:
            source_margin = slc_margin(self.source, num_samples, seed)
        if not source_margin > 0:
            raise ValueError(f"source is not certified strongly linearly convex (margin {source_margin})")
        if self.n == 1:
            return {"verdict": Verdict.VACUOUS.value, "reason": "complex tangent space in C^1 is {0}",
                    "source_margin": source_margin, "shadow_margin": None, "zero_extension_margin": None,
                    "samples": num_samples, "seed": seed}
        schur_margin = zero_margin = math.inf
        for z in self.sample_boundary(num_samples, seed):
            _, grad, schur = self.shadow_rho_derivs(z)
            basis = tangent_basis_from_wirtinger(wirtinger_from_real(grad))
            schur_margin = min(schur_margin, restricted_min_eigenvalue(schur, basis))
            zero_margin = min(zero_margin, restricted_min_eigenvalue(self.zero_extension_hessian(z), basis))
        ok = schur_margin >= c_min and schur_margin >= source_margin - slack
        return {
            "verdict": (Verdict.PASS if ok else Verdict.FAIL).value,
            "source_margin": source_margin,
            "shadow_margin": schur_margin,
            "zero_extension_margin": zero_margin,
            "slack": slack,
            "c_min": c_min,
            "samples": num_samples,
            "seed": seed,
        }


@dataclass
class _FiberSampler:
    """Membership of pi(D) by seeded fiber search, vectorized over query points."""

    source: DomainModel
    n: int
    m: int
    samples: int
    seed: int
    rounds: int = 6
    local: int = 16
    chunk: int = 1 << 21
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        R = self.source.radius
        axis = np.linspace(-R, R, 8)
        mesh = np.meshgrid(*([axis] * (2 * self.m)), indexing="ij")
        grid = complexify(np.stack([g.ravel() for g in mesh], axis=-1))
        r = R * rng.random(self.samples) ** (1.0 / (2 * self.m))
        rand = r[:, None] * random_directions(rng, self.samples, self.m)
        self.offsets = np.concatenate([np.zeros((1, self.m)), grid, rand])
        self.local_offsets = random_directions(rng, self.local, self.m) * rng.random(self.local)[:, None]
        self.stats = {"fiber_candidates": int(len(self.offsets)),
                      "refinement_rounds": self.rounds if self.source.level == 1 else 0}

    def _eval(self, Z, W):
        pts = np.concatenate([np.broadcast_to(Z[:, None, :], W.shape[:2] + (self.n,)), W], axis=-1)
        src = self.source
        if src.level == 1:
            return src.rho(pts)
        return np.where(src.membership(pts), -1.0, 1.0)

    def __call__(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        shape = Z.shape[:-1]
        Z = Z.reshape(-1, self.n)
        out = np.empty(len(Z), dtype=bool)
        per = max(1, self.chunk // len(self.offsets))
        wc = self.source.basepoint[self.n:]
        for start in range(0, len(Z), per):
            Zc = Z[start:start + per]
            W = wc + np.broadcast_to(self.offsets, (len(Zc),) + self.offsets.shape)
            vals = self._eval(Zc, W)
            best = np.argmin(vals, axis=1)
            bw = W[np.arange(len(Zc)), best]
            bv = vals[np.arange(len(Zc)), best]
            if self.source.level == 1:
                radius = self.source.radius / 4
                for _ in range(self.rounds):
                    Wl = bw[:, None, :] + radius * self.local_offsets[None, :, :]
                    vl = self._eval(Zc, Wl)
                    k = np.argmin(vl, axis=1)
                    better = vl[np.arange(len(Zc)), k] < bv
                    bw = np.where(better[:, None], Wl[np.arange(len(Zc)), k], bw)
                    bv = np.where(better, vl[np.arange(len(Zc)), k], bv)
                    radius *= 0.5
            out[start:start + per] = bv < 0
        return out.reshape(shape)


def shadow_mask(D: DomainModel, n: int, m: int, samples: int = 256, seed: int = 0,
                rounds: int = 6) -> DomainModel:
    """Level-0 shadow of D: z is a member iff a fiber point found by seeded search lies in D.

    The search evaluates the fiber centre, a coarse 8-per-axis grid, and
    ``samples`` random fiber points, then (Level-1 sources) refines around
    the lowest defining-function value with shrinking local clouds.
    """
    if n not in (1, 2):
        raise ValueError("shadow_mask supports n = 1 or n = 2")
    if m < 1 or n + m != D.dim:
        raise ValueError(f"split ({n}, {m}) does not match C^{D.dim}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    sampler = _FiberSampler(D, n, m, samples, seed, rounds)
    return DomainModel(
        name=f"shadow_mask({D.name})",
        dim=n,
        membership=sampler,
        basepoint=D.basepoint[:n],
        radius=D.radius,
        params=(float(n), float(m)),
        info={"coverage": sampler.stats},
    )
