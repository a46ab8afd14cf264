"""The builtin domain corpus and JSON domain specification files."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .domain import (
    ComplexHyperplane,
    DefiningFunction,
    DomainModel,
    as_point,
    real_from_wirtinger,
    realify,
)

BUILTINS = ("ball", "disc", "ellipsoid", "perturbed_ball", "slit_disc", "bidisc")


def _ball(n: int, name: str = "ball", params: tuple = ()) -> DomainModel:
    def value(z):
        return np.sum(np.abs(z) ** 2, axis=-1) - 1.0

    rho = DefiningFunction(
        dim=n,
        value=value,
        grad=lambda z: 2.0 * realify(z),
        hess=lambda z: 2.0 * np.eye(2 * n),
    )
    return DomainModel(
        name=name,
        dim=n,
        membership=lambda z: value(z) < 0,
        basepoint=np.zeros(n, dtype=complex),
        radius=1.0,
        rho=rho,
        params=params,
    )


def _ellipsoid(exponents: list) -> DomainModel:
    p = np.asarray(exponents, dtype=float)
    n = p.size

    def value(z):
        return np.sum(np.abs(z) ** (2.0 * p), axis=-1) - 1.0

    # |z_j|^{2p} = s^p with s = x^2 + y^2; singular at z_j = 0 when p < 1
    @np.errstate(divide="ignore", invalid="ignore")
    def grad(z):
        x, y = z.real, z.imag
        s = x * x + y * y
        c = 2.0 * p * s ** (p - 1.0)
        g = np.empty(2 * n)
        g[0::2] = c * x
        g[1::2] = c * y
        return g

    @np.errstate(divide="ignore", invalid="ignore")
    def hess(z):
        x, y = z.real, z.imag
        s = x * x + y * y
        a = 2.0 * p * s ** (p - 1.0)
        b = 4.0 * p * (p - 1.0) * s ** (p - 2.0)
        H = np.zeros((2 * n, 2 * n))
        for j in range(n):
            H[2 * j, 2 * j] = a[j] + b[j] * x[j] * x[j]
            H[2 * j + 1, 2 * j + 1] = a[j] + b[j] * y[j] * y[j]
            H[2 * j, 2 * j + 1] = H[2 * j + 1, 2 * j] = b[j] * x[j] * y[j]
        return H

    # sum t_j^2 <= 1 on the domain when every exponent is <= 1
    radius = 1.0 if np.all(p <= 1.0) else math.sqrt(n)
    return DomainModel(
        name="ellipsoid",
        dim=n,
        membership=lambda z: value(z) < 0,
        basepoint=np.zeros(n, dtype=complex),
        radius=radius,
        rho=DefiningFunction(dim=n, value=value, grad=grad, hess=hess),
        params=tuple(float(v) for v in p),
    )


def _perturbed_ball(n: int, eps: float) -> DomainModel:
    """|z|^2 - 1 + eps * Re(z_a z_b conj(z_c)) with c the last coordinate.

    (a, b) = (0, 0) for n = 2 and (0, n - 2) otherwise, so for a split
    C^{n-1} x C the perturbation couples the fiber coordinate to the base.
    """
    a, b, c = 0, max(0, n - 2), n - 1

    def value(z):
        return np.sum(np.abs(z) ** 2, axis=-1) - 1.0 + eps * np.real(z[..., a] * z[..., b] * np.conj(z[..., c]))

    def derivs(z):
        e = np.zeros((3, n))
        e[0, a] = e[1, b] = e[2, c] = 1.0
        ea, eb, ec = e
        dz = z.conj() + 0.5 * eps * ((ea * z[b] + eb * z[a]) * np.conj(z[c]) + ec * np.conj(z[a] * z[b]))
        A = 0.5 * eps * (np.outer(ea, eb) + np.outer(eb, ea)) * np.conj(z[c])
        B = np.eye(n) + 0.5 * eps * (
            np.outer(ea * z[b] + eb * z[a], ec) + np.outer(ec, ea * np.conj(z[b]) + eb * np.conj(z[a]))
        )
        return real_from_wirtinger(dz, A, B)

    # |z_a z_b z_c| <= |z|^3, so rho >= r^2 - |eps| r^3 - 1
    ae = abs(eps)
    if ae == 0:
        radius = 1.0
    else:
        r_peak = 2.0 / (3.0 * ae)
        if r_peak ** 2 - ae * r_peak ** 3 <= 1.0:
            raise ValueError(f"perturbation eps={eps} too large for a bounded domain")
        radius = 1.01 * brentq(lambda r: r * r - ae * r ** 3 - 1.0, 1.0, r_peak)
    return DomainModel(
        name="perturbed_ball",
        dim=n,
        membership=lambda z: value(z) < 0,
        basepoint=np.zeros(n, dtype=complex),
        radius=radius,
        rho=DefiningFunction(
            dim=n,
            value=value,
            grad=lambda z: derivs(z)[0],
            hess=lambda z: derivs(z)[1],
        ),
        params=(float(n), float(eps)),
    )


def _slit_blocker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """True where the segment a-b meets the slit [0, 1) on the real axis."""
    a = np.asarray(a, dtype=complex)[..., 0]
    b = np.asarray(b, dtype=complex)[..., 0]
    ya, yb = a.imag, b.imag
    out = np.zeros(a.shape, dtype=bool)
    crossing = (ya * yb <= 0) & ~((ya == 0) & (yb == 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(crossing, ya / (ya - yb), 0.0)
    x = a.real + t * (b.real - a.real)
    out |= crossing & (x >= 0) & (x < 1)
    flat = (ya == 0) & (yb == 0)
    lo, hi = np.minimum(a.real, b.real), np.maximum(a.real, b.real)
    out |= flat & (hi >= 0) & (lo < 1)
    return out


def _slit_disc() -> DomainModel:
    def member(z):
        w = z[..., 0]
        on_slit = (w.imag == 0) & (w.real >= 0) & (w.real < 1)
        return (np.abs(w) < 1) & ~on_slit

    return DomainModel(
        name="slit_disc",
        dim=1,
        membership=member,
        basepoint=np.array([-0.5 + 0j]),
        radius=1.5,
        edge_blocker=_slit_blocker,
    )


def _bidisc(n: int) -> DomainModel:
    def support(p):
        p = as_point(p, n)
        planes = []
        for j in range(n):
            if abs(abs(p[j]) - 1.0) <= 1e-9:
                normal = np.zeros(n, dtype=complex)
                normal[j] = 1.0
                planes.append(ComplexHyperplane(p, normal))
        return planes

    return DomainModel(
        name="bidisc",
        dim=n,
        membership=lambda z: np.max(np.abs(z), axis=-1) < 1,
        basepoint=np.zeros(n, dtype=complex),
        radius=math.sqrt(n),
        supporting_hyperplanes=support,
        params=(float(n),) if n != 2 else (),
    )


def _int_param(params, index, default, name):
    if len(params) <= index:
        return default
    v = params[index]
    if float(v) != int(v) or int(v) < 1:
        raise ValueError(f"{name} must be a positive integer, got {v}")
    return int(v)


def make_builtin(name: str, params=()) -> DomainModel:
    """Construct a corpus domain.

    ``ball [n]``, ``disc``, ``ellipsoid [p1, ..., pn]``,
    ``perturbed_ball [n, eps]``, ``slit_disc``, ``bidisc [n]``.
    """
    params = [float(v) for v in params]
    if name == "ball":
        n = _int_param(params, 0, 2, "n")
        return _ball(n, params=(float(n),))
    if name == "disc":
        return _ball(1, name="disc")
    if name == "ellipsoid":
        if not params:
            raise ValueError("ellipsoid needs one exponent per coordinate")
        if any(not v > 0 for v in params):
            raise ValueError("ellipsoid exponents must be positive")
        return _ellipsoid(params)
    if name == "perturbed_ball":
        n = _int_param(params, 0, 2, "n")
        if n < 2:
            raise ValueError("perturbed_ball needs n >= 2")
        eps = params[1] if len(params) > 1 else 0.1
        return _perturbed_ball(n, eps)
    if name == "slit_disc":
        return _slit_disc()
    if name == "bidisc":
        return _bidisc(_int_param(params, 0, 2, "n"))
    raise ValueError(f"unknown builtin domain {name!r}; choose from {', '.join(BUILTINS)}")


def parse_domain_arg(text: str) -> DomainModel:
    """``name`` or ``name:p1,p2`` or a path to a JSON domain specification."""
    path = Path(text)
    if text.endswith(".json") or path.is_file():
        return load_domain_file(path)
    name, _, rest = text.partition(":")
    params = [float(v) for v in rest.split(",") if v.strip()] if rest else []
    return make_builtin(name, params)


def load_domain_file(path) -> DomainModel:
    spec = json.loads(Path(path).read_text())
    return domain_from_spec(spec)


def domain_from_spec(spec: dict) -> DomainModel:
    D = make_builtin(spec["name"], spec.get("params", []))
    if "dimension" in spec and int(spec["dimension"]) != D.dim:
        raise ValueError(f"dimension {spec['dimension']} does not match builtin {D.name} (C^{D.dim})")
    if "level" in spec and int(spec["level"]) != D.level:
        raise ValueError(f"level {spec['level']} does not match builtin {D.name} (Level-{D.level})")
    changes = {}
    if "bounding_radius" in spec:
        changes["radius"] = float(spec["bounding_radius"])
    if "basepoint" in spec:
        changes["basepoint"] = np.array([complex(re, im) for re, im in spec["basepoint"]])
    if changes:
        from dataclasses import replace

        D = replace(D, **changes)
    return D
