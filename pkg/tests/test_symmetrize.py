import math

import numpy as np
import pytest

from bcglab.bodies import (
    Ellipsoid,
    OracleBody,
    make_ball,
    make_box,
    make_ellipsoid,
    sample_uniform,
    uniform_ball,
    uniform_sphere,
    volume,
)
from bcglab.ncla import FMat, random_fmat
from bcglab.scalars import Field, qmul
from bcglab.symmetrize import (
    FHyperplane,
    FiberSymmetrizedBody,
    RealHyperplane,
    hyperplane_from_config,
    iterate,
    steiner,
    symmetrize_fhyperplane,
)

R, C, H = Field.REAL, Field.COMPLEX, Field.QUATERNION

BOX = make_box(C, 2, -np.ones(4) * 0.8, np.ones(4) * 0.8)
PLANE = FHyperplane(C, np.array([[1.0, 1.0, 0, 0], [0.5, 0.2, 0, 0]]))
_SHARED = {}


def shared_sym_box():
    # one fiber-symmetrized box shared across tests, so the memoized fiber
    # cache is filled once
    if "sym" not in _SHARED:
        _SHARED["sym"] = symmetrize_fhyperplane(BOX, PLANE, seed=16)
    return _SHARED["sym"]


def test_hyperplane_frames_orthonormal():
    f = np.hstack([PLANE.fiber_frame, PLANE.base_frame])
    assert np.allclose(f.T @ f, np.eye(4), atol=1e-12)
    # the fiber frame spans normal * F
    from bcglab.ncla import pack_vector

    nu = pack_vector(PLANE.normal.data, 2)
    proj = PLANE.fiber_frame @ (PLANE.fiber_frame.T @ nu)
    assert np.allclose(proj, nu, atol=1e-12)


def test_steiner_offcenter_ball():
    ball = make_ball(R, 3, center=[0.4, 0.0, 0.0], radius=0.7)
    target = make_ball(R, 3, radius=0.7)
    sym = steiner(ball, RealHyperplane([1.0, 0.0, 0.0]))
    rng = np.random.default_rng(0)
    pts = uniform_ball(rng, 3, 10_000, 1.2)
    assert np.array_equal(sym.contains_batch(pts), target.contains_batch(pts))


def test_steiner_fixed_point_symmetric_box():
    box = make_box(R, 2, [-1.0, -0.5], [1.0, 0.5])
    sym = steiner(box, RealHyperplane([1.0, 0.0]))
    rng = np.random.default_rng(1)
    pts = uniform_ball(rng, 2, 10_000, box.radius * 1.1)
    assert np.array_equal(sym.contains_batch(pts), box.contains_batch(pts))


def test_steiner_reflection_symmetry_exact():
    rng = np.random.default_rng(2)
    g = random_fmat(C, 2, 2, rng)
    e = make_ellipsoid(None, FMat(C, (g.adjoint() @ g).data
                                  + 0.4 * FMat.identity(C, 2).data))
    u = uniform_sphere(rng, 4, 1)[0]
    sym = steiner(e, u)
    pts = uniform_ball(rng, 4, 10_000, sym.radius)
    reflected = pts - 2 * np.outer(pts @ u, u)
    assert np.array_equal(sym.contains_batch(pts), sym.contains_batch(reflected))


def test_steiner_volume_preserved_random_ellipsoid():
    rng = np.random.default_rng(3)
    g = random_fmat(C, 2, 2, rng)
    e = make_ellipsoid(0.1 * rng.standard_normal(4),
                       FMat(C, (g.adjoint() @ g).data
                            + 0.4 * FMat.identity(C, 2).data))
    u = uniform_sphere(rng, 4, 1)[0]
    sym = steiner(e, u)
    v0 = volume(e, samples=200_000, seed=4, method="mc")
    v1 = volume(sym, samples=200_000, seed=5, method="mc")
    assert abs(v1.mean - v0.mean) <= 3 * math.hypot(v0.stderr, v1.stderr)


def test_steiner_oracle_chord_matches_analytic():
    a = math.sqrt(3)
    e = make_ellipsoid(None, FMat.diag(C, [1 / a**2, a**2]))
    u = np.array([1.0, 1.0, 0, 0]) / math.sqrt(2)
    s_analytic = steiner(e, u)
    wrapped = OracleBody(C, 2, e.contains_batch, e.radius,
                         symmetric_about_origin=True)
    s_oracle = steiner(wrapped, u)
    rng = np.random.default_rng(6)
    pts = uniform_ball(rng, 4, 10_000, e.radius)
    assert np.array_equal(s_analytic.contains_batch(pts),
                          s_oracle.contains_batch(pts))


def test_fhyperplane_ball_fixed_point():
    ball = make_ball(C, 2)
    plane = FHyperplane(C, np.array([[1.0, 0, 0, 0], [0.0, 0, 0, 0]]))
    sym = symmetrize_fhyperplane(ball, plane)
    assert isinstance(sym, Ellipsoid)
    rng = np.random.default_rng(7)
    pts = uniform_ball(rng, 4, 10_000, 1.2)
    assert np.array_equal(sym.contains_batch(pts), ball.contains_batch(pts))


def test_fhyperplane_diag_ellipsoid_fixed_point():
    e = make_ellipsoid(None, FMat.diag(C, [1 / 4.0, 9.0]))
    plane = FHyperplane(C, np.array([[1.0, 0, 0, 0], [0.0, 0, 0, 0]]))
    sym = symmetrize_fhyperplane(e, plane)
    assert np.allclose(sym.form, e.form, atol=1e-12)
    assert np.allclose(sym.center, e.center, atol=1e-12)


def test_fhyperplane_analytic_volume_preserved_exactly():
    rng = np.random.default_rng(8)
    for field, n in [(C, 2), (H, 2), (C, 3)]:
        g = random_fmat(field, n, n, rng)
        e = make_ellipsoid(
            0.1 * rng.standard_normal(n * field.p),
            FMat(field, (g.adjoint() @ g).data
                 + 0.4 * FMat.identity(field, n).data),
        )
        normal = np.zeros((n, 4))
        normal[0, : field.p] = rng.standard_normal(field.p)
        sym = symmetrize_fhyperplane(e, FHyperplane(field, normal))
        assert sym.exact_volume == pytest.approx(e.exact_volume, rel=1e-9)


def test_fhyperplane_analytic_matches_fiber_mc():
    # same construction through the generic per-fiber Monte Carlo oracle
    e = make_ellipsoid(None, FMat.diag(C, [1 / 3.0, 2.0]))
    sym = symmetrize_fhyperplane(e, PLANE)
    wrapped = OracleBody(C, 2, e.contains_batch, e.radius,
                         symmetric_about_origin=True)
    generic = symmetrize_fhyperplane(wrapped, PLANE, seed=9)
    rng = np.random.default_rng(10)
    pts = uniform_ball(rng, 4, 20_000, e.radius)
    disagree = (sym.contains_batch(pts) != generic.contains_batch(pts)).mean()
    assert disagree < 0.02  # fiber radii carry ~1% Monte Carlo noise


def test_fhyperplane_box_volume_preserved():
    sym = shared_sym_box()
    assert isinstance(sym, FiberSymmetrizedBody)
    assert sym.exact_volume is None
    v0 = volume(BOX, samples=40_000, seed=12, method="mc")
    v1 = volume(sym, samples=40_000, seed=13, method="mc")
    assert abs(v1.mean - v0.mean) <= 3 * math.hypot(v0.stderr, v1.stderr)


def test_fiber_ball_rotation_invariance():
    sym = shared_sym_box()
    rng = np.random.default_rng(15)
    pts = sample_uniform(sym, rng, 10_000)
    from bcglab.bodies import random_unit_scalars

    w = random_unit_scalars(C, rng, 10_000)
    y = pts @ PLANE.base_frame
    a = pts @ PLANE.fiber_frame
    a4 = np.zeros((10_000, 1, 4))
    a4[:, 0, :2] = a
    rot = qmul(a4, w[:, None, :])[:, 0, :2]
    pts2 = y @ PLANE.base_frame.T + rot @ PLANE.fiber_frame.T
    assert np.array_equal(sym.contains_batch(pts), sym.contains_batch(pts2))


def test_idempotence_on_boundary_shell():
    sym = shared_sym_box()
    twice = symmetrize_fhyperplane(sym, PLANE, seed=16)
    rng = np.random.default_rng(17)
    dirs = uniform_sphere(rng, 4, 10_000)
    # 20-step bisection places each probe within 1e-6 R of the boundary
    lo = np.zeros(10_000)
    hi = np.full(10_000, sym.radius)
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        inside = sym.contains_batch(dirs * mid[:, None])
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    rho = 0.5 * (lo + hi)
    shell = dirs * (rho * rng.uniform(0.98, 1.02, 10_000))[:, None]
    changed = (sym.contains_batch(shell) != twice.contains_batch(shell)).mean()
    assert changed <= 1e-3


def test_iterate_ball_stays_round():
    planes = [
        FHyperplane(C, np.array([[1.0, 0, 0, 0], [0.0, 0, 0, 0]])),
        FHyperplane(C, np.array([[0.0, 0, 0, 0], [1.0, 0, 0, 0]])),
        FHyperplane(C, np.array([[1.0, 0, 0, 0], [1.0, 1.0, 0, 0]])),
    ]
    trace = iterate(make_ball(C, 2), planes, rounds=3, seed=18)
    assert all(rec["defect"] <= 2e-3 for rec in trace)


def test_iterate_ellipsoid_rounds_out():
    a = math.sqrt(3)
    e = make_ellipsoid(None, FMat.diag(C, [1 / a**2, a**2]))
    planes = [
        FHyperplane(C, np.array([[1.0, 0, 0, 0], [0.0, 0, 0, 0]])),
        FHyperplane(C, np.array([[0.0, 0, 0, 0], [1.0, 0, 0, 0]])),
        FHyperplane(C, np.array([[1.0, 0, 0, 0], [1.0, 1.0, 0, 0]])),
    ]
    trace = iterate(e, planes, rounds=20, seed=19)
    assert trace[-1]["defect"] < trace[0]["defect"]
    vols = [rec["volume"] for rec in trace]
    sigmas = [rec["volume_stderr"] for rec in trace]
    for v, s in zip(vols[1:], sigmas[1:]):
        assert abs(v - vols[0]) <= max(3 * math.hypot(s, sigmas[0]), 1e-9)


def test_hyperplane_config_parsing():
    real = hyperplane_from_config(C, {"type": "real", "normal": [1, 0, 0, 0]})
    assert isinstance(real, RealHyperplane)
    fh = hyperplane_from_config(
        C, {"type": "field", "normal": [[1.0, 0.0], [0.0, 0.0]]}
    )
    assert isinstance(fh, FHyperplane)
    # realified normals are accepted too
    fh2 = hyperplane_from_config(C, {"type": "field", "normal": [1, 0, 0, 0]})
    assert np.allclose(fh2.normal.data, fh.normal.data)
