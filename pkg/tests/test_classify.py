import numpy as np
import pytest

from cckit import ComplexHyperplane, ComplexLine, SolverSettings, complex_tangent_basis, make_builtin, sample_boundary
from cckit.classify import (
    Verdict,
    classify_point,
    extreme_test,
    hyperplane_avoids,
    line_touch_test,
    normality_test,
    strict_test,
    strong_normality_test,
    tangent_hyperplane,
)

BALL = make_builtin("ball", [2])
BIDISC = make_builtin("bidisc", [2])
DISC = make_builtin("disc")
SLIT = make_builtin("slit_disc")
FACE = ComplexHyperplane(np.array([1, 0]), np.array([1, 0]))


def _phase_equal(u, v):
    return abs(abs(np.vdot(u, v)) - np.linalg.norm(u) * np.linalg.norm(v)) <= 1e-12


def test_tangent_hyperplane_ball():
    H = tangent_hyperplane(BALL, [1, 0])
    np.testing.assert_allclose(H.normal, [1, 0], atol=1e-12)
    assert abs(H.functional(np.array([1, 0.3j]))) <= 1e-12
    H2 = tangent_hyperplane(BALL, [0, 1])
    assert _phase_equal(H2.normal, np.array([0, 1]))


def test_tangent_hyperplane_off_boundary():
    with pytest.raises(ValueError):
        tangent_hyperplane(BALL, [0.5, 0])


def test_tangent_hyperplane_perturbed_orthogonal():
    D = make_builtin("perturbed_ball", [3, 0.1])
    for p in sample_boundary(D, 10, 2):
        nu = tangent_hyperplane(D, p).normal
        for X in complex_tangent_basis(D, p):
            assert abs(np.sum(nu * X)) <= 1e-10


def test_hyperplane_avoids_examples():
    ok, w = hyperplane_avoids(BALL, FACE)
    assert ok and w is None
    ok, w = hyperplane_avoids(BALL, ComplexHyperplane(np.array([0.5, 0]), np.array([1, 0])))
    assert not ok and np.linalg.norm(w) < 1
    ok, _ = hyperplane_avoids(BIDISC, FACE)
    assert ok


def test_extreme_ball_and_bidisc():
    assert extreme_test(BALL, [1, 0], FACE).verdict is Verdict.PASS
    out = extreme_test(BIDISC, [1, 0], FACE)
    assert out.verdict is Verdict.FAIL
    w = out.witness
    assert abs(w[0] - 1) <= 1e-12 and abs(w[1]) <= 1 + 1e-6
    assert abs(w[1]) > 0.5  # far from p: the whole face {1} x disc is in the closure


def test_extreme_not_applicable_when_plane_cuts():
    H = ComplexHyperplane(np.array([0.5, 0]), np.array([1, 0]))
    assert extreme_test(BALL, [1, 0], H).verdict is Verdict.NOT_APPLICABLE


def test_extreme_perturbed_ball_samples():
    D = make_builtin("perturbed_ball", [2, 0.1])
    for p in sample_boundary(D, 50, 4):
        assert extreme_test(D, p, tangent_hyperplane(D, p)).verdict is Verdict.PASS


def test_strict_examples():
    rng_pts = sample_boundary(BALL, 5, 1)
    assert all(strict_test(BALL, p).verdict is Verdict.PASS for p in rng_pts)
    assert strict_test(BIDISC, [1, 0], hyperplanes=[FACE]).verdict is Verdict.FAIL
    assert strict_test(BIDISC, [1, 0]).verdict is Verdict.FAIL  # builtin support data
    assert strict_test(DISC, [1]).verdict is Verdict.VACUOUS


def test_line_touch_examples():
    line = ComplexLine(np.array([1, 0]), np.array([0, 1]))
    assert line_touch_test(BALL, [1, 0], line).verdict is Verdict.PASS
    assert line_touch_test(BIDISC, [1, 0], line).verdict is Verdict.FAIL
    rng = np.random.default_rng(6)
    for theta in rng.uniform(0, 2 * np.pi, 8):
        rotated = ComplexLine(np.array([1, 0]), np.array([0, np.exp(1j * theta)]))
        assert line_touch_test(BALL, [1, 0], rotated).verdict is Verdict.PASS


def test_line_touch_requires_incidence():
    with pytest.raises(ValueError):
        line_touch_test(BALL, [1, 0], ComplexLine(np.array([0.9, 0]), np.array([0, 1])))


def test_normality_disc():
    out = normality_test(DISC, [1], 0.5)
    assert out.verdict is Verdict.PASS
    assert out.detail["V_radius"] == pytest.approx(0.25)


@pytest.mark.parametrize("res", [128, 256])
def test_normality_slit(res):
    assert normality_test(SLIT, [0.5], 0.2, res).verdict is Verdict.FAIL
    assert normality_test(SLIT, [-1], 0.2, res).verdict is Verdict.PASS


def test_normality_slit_components_straddle():
    out = normality_test(SLIT, [0.5], 0.2, 128)
    assert out.detail["last_V_components"] >= 2
    # 0.5 +- 0.05i are members but only joined around the tip of the slit, outside U
    assert SLIT.contains([0.5 + 0.05j]) and SLIT.contains([0.5 - 0.05j])


def test_strong_normality_examples():
    assert strong_normality_test(DISC, [1], 0.5).verdict is Verdict.PASS
    assert strong_normality_test(SLIT, [0.5], 0.2, 128).verdict is Verdict.FAIL
    assert strong_normality_test(BALL, [1, 0], 0.5).verdict is Verdict.PASS


def test_normality_invalid_radius():
    with pytest.raises(ValueError):
        normality_test(DISC, [1], 0.0)


def test_tau_monotone():
    D = make_builtin("perturbed_ball", [2, 0.1])
    for p in sample_boundary(D, 5, 8):
        H = tangent_hyperplane(D, p)
        previous = None
        for tau in (1e-3, 1e-2, 0.1, 0.5, 2.0):
            v = extreme_test(D, p, H, settings=SolverSettings(tau=tau)).verdict
            if previous is Verdict.PASS:
                assert v is Verdict.PASS
            previous = v
    # the bidisc face fails at small tau and passes once tau covers the bounding box
    small = extreme_test(BIDISC, [1, 0], FACE, settings=SolverSettings(tau=0.1)).verdict
    huge = extreme_test(BIDISC, [1, 0], FACE, settings=SolverSettings(tau=10.0)).verdict
    assert small is Verdict.FAIL and huge is Verdict.PASS


def test_classify_ball_all_flags():
    cls = classify_point(BALL, [1, 0])
    assert cls.passed
    assert cls.implication_violations() == []
    rec = cls.to_record()
    assert set(rec["flags"]) == {"supported", "extreme", "strict", "normal", "strongly_normal"}
    assert rec["tolerances"]["grid"] == 32


def test_classify_ball3():
    cls = classify_point(make_builtin("ball", [3]), [0, 0, 1], grid=32)
    assert cls.flags["extreme"] is Verdict.PASS and cls.flags["normal"] is Verdict.PASS


def test_implications_hold_on_corpus():
    cases = [(BALL, p) for p in sample_boundary(BALL, 4, 0)]
    cases += [(make_builtin("perturbed_ball", [2, 0.1]), p)
              for p in sample_boundary(make_builtin("perturbed_ball", [2, 0.1]), 4, 0)]
    cases += [(BIDISC, np.array([1, 0])), (BIDISC, np.array([1, 0.5j])), (DISC, np.array([1])),
              (SLIT, np.array([0.5])), (SLIT, np.array([-1.0]))]
    for D, p in cases:
        cls = classify_point(D, p, U_radius=0.2)
        assert cls.implication_violations() == [], (D.name, p)
