"""Command-line front door: ``cckit <kind> --domain ... --seed N --out DIR``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .builtins import parse_domain_arg
from .classify import Verdict, classify_point, normality_test, strict_test
from .domain import (
    ComplexLine,
    DomainModel,
    SolverSettings,
    boundary_project,
    cpoint_record,
    fd_hessian,
    realify,
    sample_boundary,
    slc_margin,
)
from .export import FieldGrid, Polyline, emit_geometry
from .peak import build_peak_function, verify_ad_peak, verify_peak
from .report import Report, emit_report
from .shadow import ShadowModel, shadow_mask
from .slices import cconvexity_check, mask_topology, slice_mask

log = logging.getLogger("cckit")

KINDS = ("classify", "cconvex", "peak", "shadow", "theorem4-pipeline", "theorem5-pipeline")


@dataclass
class ExperimentConfig:
    kind: str
    domain: str
    seed: int = 0
    out: Optional[str] = None
    samples: Optional[int] = None
    resolution: Optional[int] = None
    points: list = field(default_factory=list)
    radius: Optional[float] = None
    split: Optional[tuple] = None
    delta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.samples is not None and self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.resolution is not None and self.resolution < 32:
            raise ValueError("resolution must be >= 32")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("radius must be positive")

    def echo(self) -> dict:
        rec = asdict(self)
        rec["points"] = [cpoint_record(p) for p in self.points]
        rec["split"] = list(self.split) if self.split else None
        rec.pop("out")
        return rec


def parse_point(text: str) -> np.ndarray:
    """``"re,im;re,im"`` -> complex point."""
    coords = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        re_s, _, im_s = part.partition(",")
        coords.append(complex(float(re_s), float(im_s or 0.0)))
    if not coords:
        raise ValueError(f"empty point {text!r}")
    return np.array(coords)


def _verdict(ok: bool) -> str:
    return Verdict.PASS.value if ok else Verdict.FAIL.value


def _points_or_samples(D: DomainModel, cfg: ExperimentConfig, default: int, settings) -> list:
    if cfg.points:
        for p in cfg.points:
            if p.size != D.dim:
                raise ValueError(f"point {p} is not in C^{D.dim}")
        return list(cfg.points)
    return sample_boundary(D, cfg.samples or default, cfg.seed, settings)


def _run_classify(D, cfg, settings) -> tuple:
    records = []
    for i, p in enumerate(_points_or_samples(D, cfg, 20, settings)):
        c = classify_point(D, p, U_radius=cfg.radius, resolution=cfg.resolution if D.dim == 1 else None,
                           settings=settings)
        rec = c.to_record()
        violations = c.implication_violations()
        rec["implication_violations"] = violations
        records.append({"item": f"point[{i}]", "verdict": _verdict(c.passed and not violations), **rec})
    return records, {}


def _run_cconvex(D, cfg, settings) -> tuple:
    res = cfg.resolution or 256
    rep = cconvexity_check(D, cfg.samples or 500, cfg.seed, res)
    return [{"item": "cconvexity", "verdict": _verdict(rep.passed), **rep.to_record()}], {}


def _run_peak(D, cfg, settings) -> tuple:
    p = _points_or_samples(D, cfg, 1, settings)[0]
    try:
        spec = build_peak_function(D, p, delta=cfg.delta, seed=cfg.seed, settings=settings)
    except ValueError as exc:
        return [{"item": "peak_function", "verdict": "fail", "point": cpoint_record(p), "error": str(exc)}], {}
    peak = verify_peak(D, spec, samples=cfg.samples or 10_000, seed=cfg.seed)
    ad = verify_ad_peak(D, spec, seed=cfg.seed, settings=settings)
    records = [
        {"item": "peak", "verdict": _verdict(peak.passed), **peak.to_record()},
        {"item": "ad_peak", "verdict": _verdict(ad.passed), **ad.to_record()},
    ]
    return records, {}


def _split(D: DomainModel, cfg) -> tuple:
    if cfg.split:
        return cfg.split
    if D.dim < 2:
        raise ValueError("shadows need a source in C^k with k >= 2")
    return D.dim - 1, 1


def _level1_polyline(S: ShadowModel, count: int = 256) -> Polyline:
    dom = S.domain()
    pts = [boundary_project(dom, np.array([np.exp(2j * np.pi * k / count)]), S.settings)[0] for k in range(count)]
    return Polyline(np.array(pts), True)


def _run_shadow(D, cfg, settings) -> tuple:
    n, m = _split(D, cfg)
    geometry = {}
    records = []
    res = cfg.resolution or 128
    M = shadow_mask(D, n, m, samples=cfg.samples or 256, seed=cfg.seed)
    if n == 1:
        mask = slice_mask(M, ComplexLine(M.basepoint, np.ones(1)), res)
        geometry["shadow_mask"] = mask
        topo = mask_topology(mask)
        records.append({"item": "shadow_mask_topology", "verdict": _verdict(topo.connected and topo.simply_connected),
                        "coverage": M.info["coverage"], **topo.to_record()})
    if D.level == 1:
        S = ShadowModel(D, n, m, settings)
        if n == 1:
            geometry["shadow_boundary"] = _level1_polyline(S)
            axis = np.arange(-20, 21) / 20 * D.radius  # exact decimals on the grid
            rows = [(x, y, S.rho_tilde([complex(x, y)])) for y in axis for x in axis]
            geometry["rho_tilde"] = FieldGrid(np.array(rows))
            # sign agreement between the two shadow constructions away from the boundary
            step = mask.step
            zeta = mask.zeta_grid()
            probe = zeta[::8, ::8].ravel()
            rho = np.array([S.rho_tilde([z]) for z in probe])
            grad_scale = 2.0 * D.radius
            far = np.abs(rho) > 2 * step * grad_scale
            member = M.membership(probe[:, None])
            agree = bool(np.all((rho[far] < 0) == member[far]))
            records.append({"item": "shadow_sign_consistency", "verdict": _verdict(agree),
                            "probes": int(far.sum())})
        else:
            pts = S.sample_boundary(cfg.samples or 20, cfg.seed)
            lifts = [S.boundary_lift(z) for z in pts]
            records.append({"item": "shadow_boundary_lifts", "verdict": "pass",
                            "lifts": [cpoint_record(l) for l in lifts]})
    return records, geometry


def _run_theorem4(D, cfg, settings) -> tuple:
    n, m = _split(D, cfg)
    M = shadow_mask(D, n, m, samples=cfg.samples or 256, seed=cfg.seed)
    res = cfg.resolution or 256
    rep = cconvexity_check(M, 50, cfg.seed, res)
    records = [{"item": "shadow_cconvexity", "verdict": _verdict(rep.passed), "coverage": M.info["coverage"],
                **rep.to_record()}]
    geometry = {}
    if n == 1:
        geometry["shadow_mask"] = slice_mask(M, ComplexLine(M.basepoint, np.ones(1)), res)
    U = cfg.radius or 0.25 * M.radius
    for i, p in enumerate(sample_boundary(M, 10, cfg.seed, settings)):
        normal = normality_test(M, p, U, cfg.resolution if n == 1 else None)
        strict = strict_test(M, p, settings=settings)
        ok = normal.verdict.ok and strict.verdict is not Verdict.FAIL
        records.append({"item": f"shadow_point[{i}]", "verdict": _verdict(ok), "point": cpoint_record(p),
                        "normal": normal.to_record(), "strict": strict.to_record()})
    return records, geometry


def _run_theorem5(D, cfg, settings) -> tuple:
    n, m = _split(D, cfg)
    S = ShadowModel(D, n, m, settings)
    count = cfg.samples or 200
    c = slc_margin(D, count, cfg.seed)
    records = [{"item": "source_slc_margin", "verdict": _verdict(c > 0), "margin": c, "samples": count}]
    if not c > 0:
        return records, {}
    slc = S.shadow_slc_verify(count, cfg.seed, source_margin=c)
    records.append({"item": "shadow_slc", **slc})
    pts = S.sample_boundary(100, cfg.seed + 1)
    schur_err = 0.0
    for z in pts[:20]:
        _, _, schur = S.shadow_rho_derivs(z)
        fd = fd_hessian(S.domain().rho.real_value, realify(z), 1e-4)
        schur_err = max(schur_err, float(np.max(np.abs(schur - fd))))
    records.append({"item": "schur_vs_fd", "verdict": _verdict(schur_err <= 1e-4), "max_abs_error": schur_err,
                    "points": 20, "fd_step": 1e-4})
    compat = [S.tangent_compat(z) for z in pts]
    dev = max(max(r["fiber_gradient_norm"], r["gradient_deviation"]) for r in compat)
    fiber_eig = min(r["fiber_block_min_eig"] for r in compat)
    records.append({"item": "tangent_compat", "verdict": _verdict(dev <= 1e-8 and fiber_eig > 0),
                    "max_deviation": dev, "min_fiber_block_eig": fiber_eig, "points": len(compat)})
    return records, {}


RUNNERS = {
    "classify": _run_classify,
    "cconvex": _run_cconvex,
    "peak": _run_peak,
    "shadow": _run_shadow,
    "theorem4-pipeline": _run_theorem4,
    "theorem5-pipeline": _run_theorem5,
}


def run_experiment(config: ExperimentConfig, settings: Optional[SolverSettings] = None) -> tuple:
    """Run one experiment; returns ``(report, geometry)``.

    Verdict failures are recorded in the report.  Structural errors
    (bad configuration, solver breakdown) are raised with context.
    """
    settings = settings or SolverSettings(seed=config.seed)
    D = parse_domain_arg(config.domain)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        records, geometry = RUNNERS[config.kind](D, config, settings)
    except Exception as exc:
        raise RuntimeError(f"{config.kind} on {D.name} failed: {exc}") from exc
    elapsed = time.perf_counter() - t0
    cfg = {**config.echo(), "domain_spec": D.describe(), "settings": asdict(settings)}
    stamp = {"utc": started.isoformat(), "elapsed_seconds": elapsed}
    return Report(cfg, records, stamp), geometry


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cckit", description=__doc__)
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--domain", required=True, help="builtin name[:p1,p2,...] or path to a JSON domain file")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--samples", type=int)
    ap.add_argument("--resolution", type=int)
    ap.add_argument("--point", action="append", default=[], help='boundary point "re,im;re,im" (repeatable)')
    ap.add_argument("--radius", type=float, help="neighbourhood radius U for normality tests")
    ap.add_argument("--split", help="projection split n,m")
    ap.add_argument("--delta", type=float, help="override the diameter bound of the peak function")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        split = tuple(int(v) for v in args.split.split(",")) if args.split else None
        cfg = ExperimentConfig(
            kind=args.kind,
            domain=args.domain,
            seed=args.seed,
            out=args.out,
            samples=args.samples,
            resolution=args.resolution,
            points=[parse_point(p) for p in args.point],
            radius=args.radius,
            split=split,
            delta=args.delta,
        )
        report, geometry = run_experiment(cfg)
        code = emit_report(report, args.out)
        emit_geometry(geometry, args.out)
    except Exception as exc:  # structural failure
        log.error("%s", exc)
        return 1
    s = report.summary
    print(f"{cfg.kind} {report.config['domain']}: {s['pass_count']} pass, {s['fail_count']} fail, "
          f"{s['vacuous_count']} vacuous -> {args.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
