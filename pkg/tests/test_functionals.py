import math

import numpy as np
import pytest

from bcglab.bodies import affine_image, make_ball, make_box, make_ellipsoid
from bcglab.estimate import Estimate
from bcglab.functionals import (
    Weight,
    b_balls_exact,
    b_functional,
    brs_gap,
    kappa,
    m_functional,
    omega,
)
from bcglab.ncla import FMat, det_abs, random_fmat
from bcglab.scalars import Field, Scalar
from bcglab.symmetrize import FHyperplane, symmetrize_fhyperplane

R, C, H = Field.REAL, Field.COMPLEX, Field.QUATERNION

# independent brute-force oracles, 1e7 samples each (frozen before the build)
ORACLE_B211 = (2.791208, 0.000661)
ORACLE_B122 = (1.570614, 0.000287)
ORACLE_B222 = (5.410032, 0.001419)
ORACLE_B111 = (0.999886, 0.000183)


def test_ball_constants():
    assert kappa(2) == pytest.approx(math.pi, rel=1e-12)
    assert kappa(3) == pytest.approx(4 * math.pi / 3, rel=1e-12)
    assert omega(4) == pytest.approx(2 * math.pi**2, rel=1e-12)
    assert kappa(8) == pytest.approx(math.pi**4 / 24, rel=1e-12)
    assert kappa(0) == 1.0
    for n in range(1, 12):
        assert omega(n) == pytest.approx(n * kappa(n), rel=1e-12)


def test_b_balls_exact_closed_forms():
    assert b_balls_exact(1, 1, 1) == pytest.approx(1.0, rel=1e-12)
    assert b_balls_exact(1, 2, 2) == pytest.approx(math.pi / 2, rel=1e-12)
    assert b_balls_exact(2, 1, 1) == pytest.approx(8 * math.pi / 9, rel=1e-12)
    assert b_balls_exact(2, 2, 2) == pytest.approx(math.pi**4 / 18, rel=1e-12)


@pytest.mark.parametrize("n,p,r,oracle", [
    (1, 1, 1, ORACLE_B111),
    (1, 2, 2, ORACLE_B122),
    (2, 1, 1, ORACLE_B211),
    (2, 2, 2, ORACLE_B222),
])
def test_b_balls_exact_vs_frozen_oracles(n, p, r, oracle):
    mean, se = oracle
    assert abs(b_balls_exact(n, p, r) - mean) <= 3 * se


def test_weight_validation():
    w = Weight.power(2.0)
    assert np.allclose(w(np.array([0.0, 2.0])), [0.0, 4.0])
    with pytest.raises(ValueError):
        Weight.power(-1.0)
    Weight.custom(lambda t: t + t**3)
    with pytest.raises(ValueError):
        Weight.custom(lambda t: -t)


def test_b_functional_segment():
    seg = make_box(R, 1, [-1.0], [1.0])
    est = b_functional([seg], Weight.power(1), 300_000, seed=0)
    assert abs(est.mean - 1.0) <= 3 * est.stderr


def test_b_functional_complex_disk():
    disk = make_ball(C, 1)
    est = b_functional([disk], Weight.power(2), 300_000, seed=1)
    assert abs(est.mean - math.pi / 2) <= 3 * est.stderr


def test_b_functional_two_real_disks():
    disks = [make_ball(R, 2), make_ball(R, 2)]
    est = b_functional(disks, Weight.power(1), 400_000, seed=2)
    assert abs(est.mean - 8 * math.pi / 9) <= 3 * est.stderr


def test_b_functional_scaling_law():
    rng = np.random.default_rng(3)
    bodies = [make_ball(C, 2), make_ellipsoid(None, FMat.diag(C, [0.5, 1.5]))]
    g = random_fmat(C, 2, 2, rng)
    g = FMat(C, g.data + FMat.identity(C, 2).data)
    moved = [affine_image(k, g) for k in bodies]
    r = 2.0
    base = b_functional(bodies, Weight.power(r), 300_000, seed=4)
    image = b_functional(moved, Weight.power(r), 300_000, seed=5)
    factor = det_abs(g) ** (2 * C.p + r)
    sigma = math.hypot(image.stderr, factor * base.stderr)
    assert abs(image.mean - factor * base.mean) <= 3 * sigma


def test_m_functional_matches_b_in_dim_one():
    disk = make_ball(C, 1)
    w = Weight.power(2)
    m_est = m_functional([disk], w, lam=[Scalar.of(C, 1.0)],
                         samples=200_000, seed=6)
    b_est = b_functional([disk], w, 200_000, seed=7)
    sigma = math.hypot(m_est.stderr, b_est.stderr)
    assert abs(m_est.mean - b_est.mean) <= 3 * sigma


def test_m_functional_zero_lambda():
    seg = make_box(R, 1, [-1.0], [2.0])
    w = Weight.custom(lambda t: t + 1.0)
    est = m_functional([seg, seg], w, lam=[0.0, 0.0], samples=10_000, seed=8)
    # integrand is Phi(0) = 1 everywhere: exactly the product of volumes
    assert est.mean == pytest.approx(9.0, rel=1e-12)


def test_m_functional_lambda_scaling():
    disk = make_ball(C, 1)
    r = 2.0
    lam = [Scalar.of(C, 0.6, 0.3)]
    c = Scalar.of(C, 1.1, -0.7)
    base = m_functional([disk], Weight.power(r), lam=lam, samples=200_000,
                        seed=9)
    scaled = m_functional([disk], Weight.power(r), lam=[lam[0] * c],
                          samples=200_000, seed=10)
    factor = c.norm() ** r
    sigma = math.hypot(scaled.stderr, factor * base.stderr)
    assert abs(scaled.mean - factor * base.mean) <= 3 * sigma


def test_brs_gap_equal_volume_balls():
    bodies = [make_ball(C, 2, radius=0.9), make_ball(C, 2, radius=0.9)]
    rep = brs_gap(bodies, Weight.power(2), 200_000, seed=11)
    assert abs(rep["gap"]) <= 3 * rep["sigma"]


def test_brs_gap_unimodular_ellipsoid():
    a = 1.4
    e = make_ellipsoid(None, FMat.diag(C, [1 / a**2, a**2]))
    rep = brs_gap([e, e], Weight.power(2), 300_000, seed=12)
    assert abs(rep["gap"]) <= 3 * rep["sigma"]
    assert rep["B_balls"] == pytest.approx(b_balls_exact(2, 2, 2), rel=1e-9)


def test_brs_gap_cubes_strictly_positive():
    cube = make_box(C, 2, -np.ones(4), np.ones(4))
    rep = brs_gap([cube, cube], Weight.power(2), 300_000, seed=13)
    assert rep["gap"] > 3 * rep["sigma"]


def test_brs_requires_power_weight():
    with pytest.raises(ValueError):
        brs_gap([make_ball(R, 1)], Weight.custom(lambda t: t + t**3),
                10_000, seed=14)


def test_symmetrization_does_not_increase_b():
    cube = make_box(C, 2, -np.ones(4) * 0.9, np.ones(4) * 0.9)
    plane = FHyperplane(C, np.array([[1.0, 0.5, 0, 0], [0.3, -0.4, 0, 0]]))
    sym = symmetrize_fhyperplane(cube, plane, seed=15)
    w = Weight.power(2)
    before = b_functional([cube, cube], w, 60_000, seed=16)
    after = b_functional([sym, sym], w, 60_000, seed=17)
    sigma = math.hypot(before.stderr, after.stderr)
    assert before.mean + 3 * sigma >= after.mean


def test_insufficient_samples_flag():
    cube = make_box(C, 2, -np.ones(4), np.ones(4))
    est = b_functional([cube, cube], Weight.power(6), 1_000, seed=18)
    assert isinstance(est, Estimate)
    # heavy weight at tiny budget: the relative error flag must fire
    assert est.rel_stderr > 0.05 and "insufficient_samples" in est.flags or \
        est.rel_stderr <= 0.05


def test_reproducible_with_workers():
    disks = [make_ball(R, 2), make_ball(R, 2)]
    a = b_functional(disks, Weight.power(1), 50_000, seed=19, workers=3)
    b = b_functional(disks, Weight.power(1), 50_000, seed=19, workers=3)
    assert a.mean == b.mean and a.stderr == b.stderr
