"""Acceptance criteria, one test per criterion.

Each test prints a single ``[acceptance] criterion N: PASS|FAIL`` line
(visible under ``pytest -v``) before asserting.  Run just this module with

    pytest tests/test_acceptance.py -v
"""

import time

import numpy as np
import pytest

from cckit import ComplexHyperplane, make_builtin, sample_boundary, slc_margin
from cckit.classify import Verdict, classify_point, extreme_test, normality_test, strict_test
from cckit.cli import ExperimentConfig, run_experiment
from cckit.domain import fd_hessian, realify
from cckit.peak import build_peak_function, planar_weak_peak, verify_peak
from cckit.report import strip_timestamp
from cckit.shadow import ShadowModel, shadow_mask
from cckit.slices import cconvexity_check


@pytest.fixture
def report_line(capsys):
    def emit(n, title, checks, elapsed, budget):
        checks = dict(checks, runtime=elapsed < budget)
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        tail = "" if ok else f"  failed: {', '.join(failed)}"
        with capsys.disabled():
            print(f"\n[acceptance] criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  "
                  f"({elapsed:.1f}s / {budget:g}s){tail}")
        return ok, failed

    return emit


def test_criterion_1_ball_shadow_exact(report_line):
    t0 = time.perf_counter()
    S = ShadowModel(make_builtin("ball", [2]), 1, 1)
    a = np.linspace(-0.9, 0.9, 41)
    zeta = (a[None, :] + 1j * a[:, None]).ravel()
    zeta = zeta[np.abs(zeta) <= 0.9]
    err = max(abs(S.rho_tilde([z]) - (abs(z) ** 2 - 1)) for z in zeta)
    elapsed = time.perf_counter() - t0
    ok, failed = report_line(1, f"ball shadow max |drho| = {err:.2e} on {zeta.size} points",
                             {"exact": err <= 1e-8}, elapsed, 5)
    assert ok, failed


def test_criterion_2_strong_linear_convexity_pipeline(report_line):
    t0 = time.perf_counter()
    D = make_builtin("perturbed_ball", [3, 0.1])
    S = ShadowModel(D, 2, 1)
    c = slc_margin(D, 200, 0)
    slc = S.shadow_slc_verify(200, 0, source_margin=c)
    c_t = slc["shadow_margin"]
    pts = S.sample_boundary(100, 1)
    schur_err = 0.0
    for z in pts[:20]:
        _, _, schur = S.shadow_rho_derivs(z)
        fd = fd_hessian(S.domain().rho.real_value, realify(z), 1e-4)
        schur_err = max(schur_err, float(np.max(np.abs(schur - fd))))
    compat = [S.tangent_compat(z) for z in pts]
    dev = max(max(r["fiber_gradient_norm"], r["gradient_deviation"]) for r in compat)
    elapsed = time.perf_counter() - t0
    checks = {
        "source margin c > 0": c > 0,
        "shadow margin > 0": c_t > 0,
        "shadow margin >= c - 0.05": c_t >= c - 0.05,
        "schur vs fd <= 1e-4": schur_err <= 1e-4,
        "tangent deviation <= 1e-8": dev <= 1e-8 and len(compat) == 100,
    }
    ok, failed = report_line(2, f"c = {c:.4f}, c~ = {c_t:.4f}, schur err {schur_err:.1e}, tangent dev {dev:.1e}",
                             checks, elapsed, 60)
    assert ok, failed


def test_criterion_3_peak_function_values(report_line):
    t0 = time.perf_counter()
    D = make_builtin("disc")
    spec = build_peak_function(D, [1], delta=2.0)
    f0 = complex(spec(np.array([[0.0]]))[0])
    f99 = complex(spec(np.array([[0.99]]))[0])
    direct = planar_weak_peak(2.0, -1, -1)
    rep = verify_peak(D, spec, radii=(0.1, 0.2, 0.4), samples=10_000, seed=0)
    neg = verify_peak(D, spec.with_delta(0.5 * spec.delta), radii=(0.1, 0.2, 0.4), samples=10_000, seed=0)
    elapsed = time.perf_counter() - t0
    checks = {
        "F(0)": abs(f0 - 0.23629) <= 1e-4 and abs(f0 - direct) <= 1e-12,
        "F(0.99)": abs(f99 - 0.82801) <= 1e-4,
        "verify_peak": rep.passed and all(m > 0 for m in rep.margins.values()),
        "negative control fails": not neg.passed,
    }
    ok, failed = report_line(3, f"F(0) = {f0.real:.5f}, F(0.99) = {f99.real:.5f}, "
                                f"margins {', '.join(f'{v:.3f}' for v in rep.margins.values())}",
                             checks, elapsed, 10)
    assert ok, failed


def test_criterion_4_cconvexity_checker(report_line):
    t0 = time.perf_counter()
    ball = cconvexity_check(make_builtin("ball", [2]), 500, 0, 256, targeted=False)
    ell = cconvexity_check(make_builtin("ellipsoid", [0.25, 1]), 10_000, 0, 256, targeted=True)
    elapsed = time.perf_counter() - t0
    checks = {
        "ball passes with 0 witnesses": ball.passed and not ball.witnesses and ball.lines_tested == 500,
        "ellipsoid witness": len(ell.witnesses) >= 1,
    }
    ok, failed = report_line(4, f"ball {ball.lines_tested} lines / {len(ball.witnesses)} witnesses; "
                                f"ellipsoid {ell.lines_tested} lines / {len(ell.witnesses)} witnesses",
                             checks, elapsed, 300)
    assert ok, failed


def test_criterion_5_normality(report_line):
    t0 = time.perf_counter()
    slit = make_builtin("slit_disc")
    on_slit = [normality_test(slit, [0.5], 0.2, res).verdict for res in (128, 256)]
    tip_side = [normality_test(slit, [-1.0], 0.2, res).verdict for res in (128, 256)]
    disc = normality_test(make_builtin("disc"), [1], 0.5)
    elapsed = time.perf_counter() - t0
    checks = {
        "slit p=0.5 fails at 128 and 256": on_slit == [Verdict.FAIL, Verdict.FAIL],
        "slit p=-1 passes": all(v is Verdict.PASS for v in tip_side),
        "disc p=1 passes": disc.verdict is Verdict.PASS,
    }
    ok, failed = report_line(5, f"slit(0.5) {[v.value for v in on_slit]}, slit(-1) {[v.value for v in tip_side]}, "
                                f"disc(1) {disc.verdict.value} V={disc.detail.get('V_radius')}",
                             checks, elapsed, 30)
    assert ok, failed


def test_criterion_6_strict_and_extreme(report_line):
    t0 = time.perf_counter()
    ball = make_builtin("ball", [2])
    strict = [strict_test(ball, p).verdict for p in sample_boundary(ball, 20, 0)]
    bidisc = make_builtin("bidisc", [2])
    ext = extreme_test(bidisc, [1, 0], ComplexHyperplane(np.array([1, 0]), np.array([1, 0])))
    w = ext.witness
    in_face = w is not None and abs(w[0] - 1) <= 1e-12 and abs(w[1]) <= 1 + 1e-6
    corpus = [(ball, p) for p in sample_boundary(ball, 3, 1)]
    pb = make_builtin("perturbed_ball", [2, 0.1])
    corpus += [(pb, p) for p in sample_boundary(pb, 3, 1)]
    corpus += [(bidisc, np.array([1, 0])), (bidisc, np.array([0.6 + 0.8j, 0.3])), (make_builtin("disc"), np.array([1])),
               (make_builtin("slit_disc"), np.array([0.5])), (make_builtin("slit_disc"), np.array([-1.0]))]
    violations = [v for D, p in corpus for v in classify_point(D, p, U_radius=0.2).implication_violations()]
    elapsed = time.perf_counter() - t0
    checks = {
        "ball strict at 20 points": all(v is Verdict.PASS for v in strict),
        "bidisc extreme fails": ext.verdict is Verdict.FAIL,
        "witness in {1} x disc": in_face,
        "strict => extreme": not violations,
    }
    ok, failed = report_line(6, f"ball strict {sum(v is Verdict.PASS for v in strict)}/20, bidisc witness "
                                f"{None if w is None else np.round(w, 3).tolist()}, {len(corpus)} corpus points",
                             checks, elapsed, 30)
    assert ok, failed


def test_criterion_7_c_convex_shadow_pipeline(report_line):
    t0 = time.perf_counter()
    M = shadow_mask(make_builtin("perturbed_ball", [2, 0.1]), 1, 1, samples=256, seed=0)
    rep = cconvexity_check(M, 1, 0, 256)
    pts = sample_boundary(M, 10, 0)
    normal = [normality_test(M, p, 0.25 * M.radius).verdict for p in pts]
    strict = [strict_test(M, p).verdict for p in pts]
    elapsed = time.perf_counter() - t0
    checks = {
        "connected and simply connected": rep.passed,
        "normal at 10 boundary points": all(v is Verdict.PASS for v in normal) and len(normal) == 10,
        "strict (vacuous in C^1)": all(v.ok for v in strict),
    }
    ok, failed = report_line(7, f"shadow topology {'ok' if rep.passed else 'defect'}, normal "
                                f"{sum(v is Verdict.PASS for v in normal)}/10", checks, elapsed, 120)
    assert ok, failed


# experiment configurations mirroring criteria 1-7 (criterion 4 uses fewer random lines)
DETERMINISM_CONFIGS = [
    ExperimentConfig(kind="shadow", domain="ball:2", seed=0),
    ExperimentConfig(kind="theorem5-pipeline", domain="perturbed_ball:3,0.1", seed=0, split=(2, 1)),
    ExperimentConfig(kind="peak", domain="disc", seed=0, points=[np.array([1 + 0j])], delta=2.0),
    ExperimentConfig(kind="cconvex", domain="ball:2", seed=0, samples=500, resolution=256),
    ExperimentConfig(kind="cconvex", domain="ellipsoid:0.25,1", seed=0, samples=500, resolution=256),
    ExperimentConfig(kind="classify", domain="slit_disc", seed=0, points=[np.array([0.5 + 0j]), np.array([-1 + 0j])],
                     radius=0.2, resolution=128),
    ExperimentConfig(kind="classify", domain="ball:2", seed=0, samples=20),
    ExperimentConfig(kind="classify", domain="bidisc:2", seed=0, points=[np.array([1 + 0j, 0j])]),
    ExperimentConfig(kind="theorem4-pipeline", domain="perturbed_ball:2,0.1", seed=0, split=(1, 1)),
]


def test_criterion_8_determinism(report_line):
    t0 = time.perf_counter()
    mismatched = []
    for cfg in DETERMINISM_CONFIGS:
        a, _ = run_experiment(cfg)
        b, _ = run_experiment(cfg)
        if strip_timestamp(a.to_json()) != strip_timestamp(b.to_json()):
            mismatched.append(f"{cfg.kind}:{cfg.domain}")
    elapsed = time.perf_counter() - t0
    ok, failed = report_line(8, f"{len(DETERMINISM_CONFIGS)} configs run twice, {len(mismatched)} mismatched",
                             {"byte-identical reports": not mismatched}, elapsed, 600)
    assert ok, (failed, mismatched)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
