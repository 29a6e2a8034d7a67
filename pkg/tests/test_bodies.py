import math

import numpy as np
import pytest
from scipy.stats import kstest

from bcglab.bodies import (
    Ellipsoid,
    EmptyBody,
    SectionBody,
    affine_image,
    body_from_descriptor,
    centroid,
    convexity_spot_check,
    ellipsoid_pushforward_sample,
    line_section_roundness,
    make_ball,
    make_box,
    make_ellipsoid,
    make_field_l1_ball,
    make_vpolytope,
    polar_radial,
    radial,
    random_body,
    roundness_defect,
    sample_uniform,
    section,
    section_real,
    support,
    support_batch,
    uniform_ball,
    uniform_sphere,
    unit_scalar_invariance_check,
    volume,
)
from bcglab.errors import (
    NotPositiveDefinite,
    OriginNotInterior,
    RejectionBudgetExceeded,
    SingularTransform,
)
from bcglab.functionals import kappa
from bcglab.ncla import FMat, det_abs, random_fmat
from bcglab.randgeom import sample_grassmann
from bcglab.scalars import FIELDS, Field

R, C, H = Field.REAL, Field.COMPLEX, Field.QUATERNION


def test_identity_ellipsoid_is_unit_ball():
    e = make_ellipsoid(None, FMat.identity(C, 2))
    ball = make_ball(C, 2)
    rng = np.random.default_rng(0)
    pts = uniform_ball(rng, 4, 10_000, 1.3)
    assert np.array_equal(e.contains_batch(pts), ball.contains_batch(pts))


def test_affine_image_of_ball_is_ellipsoid():
    ball = make_ball(R, 2)
    img = affine_image(ball, FMat.diag(R, [2.0, 2.0]))
    assert isinstance(img, Ellipsoid)
    assert np.allclose(img.form, np.diag([0.25, 0.25]))
    # C^1 disk of radius 2: exact volume 4 pi
    disk = make_ellipsoid(None, FMat.from_entries(C, [[[0.25]]]))
    assert disk.exact_volume == pytest.approx(4 * math.pi, rel=1e-12)


def test_contains_basics():
    ball = make_ball(H, 1, center=[0.3, 0, 0, 0], radius=0.5)
    assert ball.contains(np.array([0.3, 0, 0, 0]))
    far = np.array([2 * ball.radius, 0, 0, 0])
    assert not ball.contains(far)
    e = make_ellipsoid(None, FMat.diag(R, [0.25, 1.0]))
    boundary = np.array([2.0, 0.0])
    assert e.contains(0.999 * boundary)
    assert not e.contains(1.001 * boundary)


def test_volume_exact_paths():
    assert make_ball(R, 3).exact_volume == pytest.approx(4 * math.pi / 3)
    a, b = 1.7, 0.6
    e = make_ellipsoid(None, FMat.diag(C, [1 / a**2, 1 / b**2]))
    assert e.exact_volume == pytest.approx(kappa(4) * a**2 * b**2, rel=1e-12)
    box = make_box(R, 3, [-1, 0, 2], [1, 3, 2.5])
    assert box.exact_volume == pytest.approx(2 * 3 * 0.5)


def test_volume_mc_ball_r4():
    # bounding ball == body, so rejection is exact here
    est = volume(make_ball(R, 4), samples=1_000_000, seed=1, method="mc")
    assert abs(est.mean - math.pi**2 / 2) <= max(3 * est.stderr, 1e-12)
    # off-center ball exercises actual rejection
    est = volume(make_ball(R, 4, center=[0.5, 0, 0, 0]), samples=1_000_000,
                 seed=2, method="mc")
    assert est.stderr > 0
    assert abs(est.mean - math.pi**2 / 2) <= 3 * est.stderr


def test_volume_affine_change_of_variables():
    rng = np.random.default_rng(2)
    k = make_box(C, 2, -np.ones(4) * 0.7, np.ones(4) * 0.7)
    g = random_fmat(C, 2, 2, rng)
    g = FMat(C, g.data + FMat.identity(C, 2).data)
    img = affine_image(k, g)
    v0 = volume(k, samples=300_000, seed=3, method="mc")
    v1 = volume(img, samples=300_000, seed=4, method="mc")
    expected = det_abs(g) ** C.p * v0.mean
    sigma = math.hypot(v1.stderr, det_abs(g) ** C.p * v0.stderr)
    assert abs(v1.mean - expected) <= 3 * sigma


def test_not_positive_definite_and_singular():
    with pytest.raises(NotPositiveDefinite):
        make_ellipsoid(None, FMat.diag(R, [1.0, -1.0]))
    with pytest.raises(SingularTransform):
        affine_image(make_ball(R, 2), FMat.diag(R, [1.0, 0.0]))


def test_section_of_ball_is_unit_p_ball():
    for field in FIELDS:
        rng = np.random.default_rng(5)
        ball = make_ball(field, 2)
        e = sample_grassmann(2, 1, field, rng)
        sec = section(ball, e)
        assert sec.exact_volume == pytest.approx(kappa(field.p), rel=1e-10)


def test_section_analytic_vs_oracle():
    rng = np.random.default_rng(6)
    g = random_fmat(C, 2, 2, rng)
    h = FMat(C, (g.adjoint() @ g).data + 0.5 * FMat.identity(C, 2).data)
    ell = make_ellipsoid(None, h)
    e = sample_grassmann(2, 1, C, rng)
    frame = e.real_frame()
    offset = np.zeros(4)
    analytic = section(ell, e)
    oracle = SectionBody(ell, frame, offset, C, 1)
    pts = uniform_ball(rng, 2, 10_000, analytic.radius * 1.2)
    assert np.array_equal(
        analytic.contains_batch(pts), oracle.contains_batch(pts)
    )


def test_empty_section():
    ball = make_ball(R, 3)
    frame = np.eye(3)[:, :2]
    off = np.array([0.0, 0.0, 2.0])
    sec = section_real(ball, frame, off, R, 2)
    assert isinstance(sec, EmptyBody)
    assert sec.exact_volume == 0.0
    with pytest.raises(RejectionBudgetExceeded):
        sample_uniform(sec, np.random.default_rng(0), 10)


def test_support_and_radial():
    ball = make_ball(R, 3)
    u = np.array([0.0, 1.0, 0.0])
    assert support(ball, u) == pytest.approx(1.0)
    assert radial(ball, u) == pytest.approx(1.0, abs=1e-8)
    assert polar_radial(ball, u) == pytest.approx(1.0)

    cube = make_box(H, 1, -np.ones(4), np.ones(4))
    assert support(cube, [1, 0, 0, 0]) == pytest.approx(1.0)
    e = make_ellipsoid(None, FMat.diag(R, [0.25, 1.0]))
    assert support(e, [1.0, 0.0]) == pytest.approx(2.0, rel=1e-12)

    verts = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    poly = make_vpolytope(R, 2, verts)
    u = np.array([0.6, 0.8])
    assert support(poly, u) == pytest.approx((verts @ u).max(), rel=1e-12)

    shifted = make_ball(R, 2, center=[0.5, 0.0], radius=0.2)
    with pytest.raises(OriginNotInterior):
        radial(shifted, np.array([1.0, 0.0]))


def test_sampled_support_fallback():
    rng = np.random.default_rng(7)
    base = make_ball(R, 2)
    from bcglab.bodies import OracleBody

    oracle = OracleBody(R, 2, base.contains_batch, 1.0,
                        symmetric_about_origin=True)
    u = uniform_sphere(rng, 2, 16)
    vals = support_batch(oracle, u, samples=20_000, seed=8)
    assert np.all(vals <= 1.0 + 1e-9)
    assert np.all(vals >= 0.985)


def test_sampling_statistics():
    rng = np.random.default_rng(9)
    # ball: empirical mean norm <= 4/sqrt(N) * R
    pts = sample_uniform(make_ball(R, 3), rng, 100_000)
    assert np.linalg.norm(pts.mean(axis=0)) <= 4 / math.sqrt(100_000)
    # box: per-coordinate CDF uniform (KS at 1%)
    box = make_box(R, 2, [-1, 0.5], [1, 2.0])
    pts = sample_uniform(box, rng, 20_000)
    for i, (lo, hi) in enumerate([(-1, 1), (0.5, 2.0)]):
        stat = kstest((pts[:, i] - lo) / (hi - lo), "uniform")
        assert stat.pvalue > 0.01
    # ellipsoid: rejection vs pushforward agree in mean and covariance
    e = make_ellipsoid(None, FMat.diag(C, [1 / 2.25, 4.0]))
    a = sample_uniform(e, rng, 60_000)
    b = ellipsoid_pushforward_sample(e, rng, 60_000)
    se = np.std(a, axis=0) / math.sqrt(len(a))
    assert np.all(np.abs(a.mean(axis=0) - b.mean(axis=0))
                  <= 4.5 * se * math.sqrt(2))
    ca, cb = np.cov(a.T), np.cov(b.T)
    assert np.max(np.abs(ca - cb)) <= 6 * np.max(np.abs(ca)) / math.sqrt(len(a) / 10)


def test_unit_scalar_invariance():
    assert unit_scalar_invariance_check(make_ball(C, 2), 10_000, seed=0)
    diag = make_ellipsoid(None, FMat.diag(C, [0.5, 2.0]))
    assert unit_scalar_invariance_check(diag, 10_000, seed=1)
    cube = make_box(C, 2, -np.ones(4), np.ones(4))
    assert not unit_scalar_invariance_check(cube, 10_000, seed=2)
    l1 = make_field_l1_ball(C, 2)
    assert unit_scalar_invariance_check(l1, 10_000, seed=3)


def test_l1_ball_volume_against_mc():
    l1 = make_field_l1_ball(C, 2)
    est = volume(l1, samples=400_000, seed=4, method="mc")
    assert abs(est.mean - l1.exact_volume) <= 3 * est.stderr


def test_roundness_defect_ball():
    assert roundness_defect(make_ball(R, 4), n_dirs=10_000, seed=5) <= 2e-3


def test_line_section_roundness():
    ell = make_ellipsoid(None, FMat.diag(C, [1 / 3.0, 3.0]))
    rep = line_section_roundness(ell, trials=100, seed=6)
    assert rep["sections"] > 50
    assert rep["max_defect"] <= 5e-3

    cube = make_box(C, 2, -np.ones(4), np.ones(4))
    rep = line_section_roundness(cube, trials=40, seed=7)
    assert rep["max_defect"] > 0.1


def test_convexity_spot_checks():
    rng = np.random.default_rng(8)
    bodies = [
        make_ball(C, 2),
        make_ellipsoid(None, FMat.diag(C, [0.5, 1.5])),
        make_box(C, 2, -np.ones(4), np.ones(4) * 0.8),
        make_vpolytope(R, 3, np.random.default_rng(1).standard_normal((20, 3))),
        make_field_l1_ball(C, 2),
        random_body(C, 2, rng),
    ]
    for k in bodies:
        assert convexity_spot_check(k, pairs=1000, seed=9), k


def test_polar_volume_of_ball():
    # kappa_d * mean of h^{-d} over the sphere reproduces kappa_d for the ball
    from bcglab.quermass import polar_volume

    ball = make_ball(C, 2)
    est = polar_volume(ball, sphere_samples=5000, seed=10)
    assert est.mean == pytest.approx(kappa(4), rel=1e-9)


def test_centroid_estimate():
    box = make_box(R, 2, [0.0, 0.0], [1.0, 2.0])
    c = centroid(box, samples=20_000, seed=11)
    assert np.allclose(c, [0.5, 1.0], atol=0.02)


def test_descriptor_roundtrip():
    desc = {
        "kind": "ellipsoid", "field": "C", "n": 2,
        "form": [[[1.0], [0.0]], [[0.0], [4.0]]],
    }
    e = body_from_descriptor(desc)
    assert isinstance(e, Ellipsoid)
    # semi-axes 1 and 1/2 on the complex coordinates
    assert e.exact_volume == pytest.approx(kappa(4) / 4.0, rel=1e-12)
    box = body_from_descriptor({
        "kind": "box", "field": "H", "n": 1,
        "lo": [-1, -1, -1, -1], "hi": [1, 1, 1, 1],
    })
    assert box.exact_volume == pytest.approx(16.0)
    ai = body_from_descriptor({
        "kind": "affine_image", "field": "C", "n": 1,
        "base": {"kind": "ball", "field": "C", "n": 1},
        "matrix": [[[2.0]]],
    })
    assert ai.exact_volume == pytest.approx(4 * math.pi, rel=1e-12)
