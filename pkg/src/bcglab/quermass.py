"""Affine and dual affine quermassintegrals, their SL(n, F) invariance, the
intersection inequality, and the Santalo special case of the projection
conjecture.

Both quermassintegrals are averages over the Haar-sampled Grassmannian:
|K cap E|^n for the dual one, |P_E K|^{-n} for the affine one.  Projection
volumes are only computed analytically (ellipsoids via the realified Schur
complement, unit-scalar-invariant bodies via the support function at m = 1);
generic projection membership is a feasibility problem and stays out.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from . import parallel
from .bodies import (
    Ball,
    ConvexBody,
    Ellipsoid,
    affine_image,
    section,
    support_batch,
    uniform_ball,
    uniform_sphere,
    unit_scalar_invariance_check,
    volume,
)
from .errors import (
    DimensionMismatch,
    NotUnimodular,
    NotUnitScalarInvariant,
    OriginNotInterior,
    UnsupportedBodyForProjection,
)
from .estimate import Estimate, from_samples_moments, product
from .functionals import kappa
from .ncla import FMat, det_abs
from .randgeom import sample_grassmann


def _require_origin(k: ConvexBody):
    if not k.contains(np.zeros(k.dim)):
        raise OriginNotInterior("the origin must be interior to the body")


def _outer_mean(one_value, outer_samples: int, seed: int, workers: int,
                total_inner: int) -> Estimate:
    def chunk_fn(rng, quota):
        vals = [one_value(rng) for _ in range(quota)]
        return float(np.sum(vals)), float(np.sum(np.square(vals))), quota

    parts = parallel.run_chunks(chunk_fn, seed, outer_samples, workers)
    tot = sum(a for a, _, _ in parts)
    tot_sq = sum(a for _, a, _ in parts)
    count = sum(c for _, _, c in parts)
    est = from_samples_moments(tot, tot_sq, count, seed)
    return Estimate(est.mean, est.stderr, count * max(total_inner, 1), seed)


def _section_volume_mc(sec: ConvexBody, rng, inner_samples: int) -> float:
    """One rejection estimate of a section's volume in its own coordinates."""
    d = sec.dim
    disk = kappa(d) * sec.radius**d
    pts = uniform_ball(rng, d, inner_samples, sec.radius)
    return disk * float(sec.contains_batch(pts).mean())


def dual_affine_quermass(k: ConvexBody, m: int, outer_samples: int,
                         inner_samples: int, seed: int, workers: int = 1,
                         force_mc: bool = False) -> Estimate:
    """int |K cap E|^n dE over Gr_m(n, F): the n-th power is estimated
    unbiasedly as a product of n independent inner volume estimates."""
    _require_origin(k)
    n = k.n
    if not 1 <= m < n:
        raise DimensionMismatch("need 1 <= m < n")

    def one_value(rng):
        e = sample_grassmann(n, m, k.field, rng)
        sec = section(k, e)
        exact = sec.exact_volume
        if exact is not None and not force_mc:
            return exact**n
        val = 1.0
        for _ in range(n):
            val *= _section_volume_mc(sec, rng, inner_samples)
        return val

    return _outer_mean(one_value, outer_samples, seed, workers,
                       inner_samples * n)


def _projection_volume_ellipsoid(k, frame: np.ndarray) -> float:
    """|P_E K| via the Schur complement of the realified form."""
    if isinstance(k, Ball):
        return kappa(frame.shape[1]) * k.r ** frame.shape[1]
    comp = null_space(frame.T)
    q11 = frame.T @ k.form @ frame
    q12 = frame.T @ k.form @ comp
    q22 = comp.T @ k.form @ comp
    schur = q11 - q12 @ np.linalg.solve(q22, q12.T)
    dim = frame.shape[1]
    return kappa(dim) / math.sqrt(max(np.linalg.det(schur), 0.0))


def _check_unit_scalar_invariant(k: ConvexBody, seed: int):
    if k.known_unit_scalar_invariant:
        return
    if not unit_scalar_invariance_check(k, trials=2000, seed=seed):
        raise NotUnitScalarInvariant(
            "body is not invariant under unit scalars (statistical check)"
        )


def affine_quermass(k: ConvexBody, m: int, outer_samples: int, seed: int,
                    workers: int = 1) -> Estimate:
    """int |P_E K|^{-n} dE over Gr_m(n, F).

    Supported: ellipsoids (any m, Schur complement), and m = 1 for
    unit-scalar-invariant bodies with an analytic support function, where
    P_E K is the euclidean p-ball of radius h_K(u) for unit u in E.
    """
    _require_origin(k)
    n, p = k.n, k.field.p
    if not 1 <= m < n:
        raise DimensionMismatch("need 1 <= m < n")

    if isinstance(k, (Ball, Ellipsoid)):
        def one_value(rng):
            e = sample_grassmann(n, m, k.field, rng)
            return _projection_volume_ellipsoid(k, e.real_frame()) ** (-n)
    elif m == 1:
        _check_unit_scalar_invariant(k, seed)
        if k.support_exact(np.zeros((1, k.dim)) + np.eye(k.dim)[:1]) is None:
            raise UnsupportedBodyForProjection(
                "m = 1 path needs an analytic support function"
            )

        def one_value(rng):
            e = sample_grassmann(n, 1, k.field, rng)
            u = e.real_frame()[:, 0]
            h = float(support_batch(k, u[None, :])[0])
            return (kappa(p) * h**p) ** (-n)
    else:
        raise UnsupportedBodyForProjection(
            "projections are analytic only for ellipsoids or m = 1 with "
            "unit-scalar-invariant support"
        )

    return _outer_mean(one_value, outer_samples, seed, workers, 1)


def sl_invariance_test(k: ConvexBody, m: int, g: FMat, dual: bool,
                       outer_samples: int, inner_samples: int, seed: int,
                       workers: int = 1) -> dict:
    """Compare the chosen quermassintegral of K and gK for unimodular g."""
    d = det_abs(g)
    if abs(d - 1.0) > 1e-9:
        raise NotUnimodular(f"|det g| = {d:.3e}, normalize first")
    gk = affine_image(k, g)
    if dual:
        v1 = dual_affine_quermass(k, m, outer_samples, inner_samples, seed,
                                  workers=workers)
        v2 = dual_affine_quermass(gk, m, outer_samples, inner_samples,
                                  seed + 1, workers=workers)
    else:
        v1 = affine_quermass(k, m, outer_samples, seed, workers=workers)
        v2 = affine_quermass(gk, m, outer_samples, seed + 1, workers=workers)
    diff = v1.mean - v2.mean
    sigma = math.hypot(v1.stderr, v2.stderr)
    return {
        "value_K": v1,
        "value_gK": v2,
        "diff": diff,
        "sigma": sigma,
        "diff_sigmas": diff / sigma if sigma else 0.0,
        "dual": dual,
        "m": m,
    }


def intersection_inequality_check(bodies: Sequence[ConvexBody],
                                  outer_samples: int, inner_samples: int,
                                  seed: int, workers: int = 1) -> dict:
    """Margin of |K_1|..|K_m| >= (kappa_np^m / kappa_mp^n)
    int prod |K_i cap E|^{n/m} dE, in combined-sigma units.

    Exact section volumes are used when available; integer powers n/m are
    estimated by products of independent inner estimates, fractional powers
    by a log-space second-order bias-corrected plug-in.
    """
    field = bodies[0].field
    n = bodies[0].n
    m = len(bodies)
    p = field.p
    if not 1 <= m < n:
        raise DimensionMismatch("need 1 <= m < n bodies")
    for k in bodies:
        _require_origin(k)

    seq = np.random.SeedSequence(int(seed))
    seed_outer, seed_vol = (int(s.generate_state(1)[0]) for s in seq.spawn(2))

    lhs = product(
        volume(k, samples=max(10 * inner_samples, 100_000), seed=seed_vol + i)
        for i, k in enumerate(bodies)
    )

    q = n / m

    def one_value(rng):
        e = sample_grassmann(n, m, field, rng)
        val = 1.0
        for k in bodies:
            sec = section(k, e)
            exact = sec.exact_volume
            if exact is not None:
                val *= exact**q
            elif abs(q - round(q)) < 1e-12:
                for _ in range(int(round(q))):
                    val *= _section_volume_mc(sec, rng, inner_samples)
            else:
                reps = 4  # a few repeats give an honest variance for the correction
                vals = [_section_volume_mc(sec, rng, inner_samples)
                        for _ in range(reps)]
                est = from_samples_moments(
                    float(np.sum(vals)), float(np.sum(np.square(vals))),
                    reps, 0)
                val *= est.power(q).mean
        return val

    inner_total = inner_samples * m * max(int(math.ceil(q)), 1)
    mean_int = _outer_mean(one_value, outer_samples, seed_outer, workers,
                           inner_total)
    rhs = mean_int.scaled(kappa(n * p) ** m / kappa(m * p) ** n)

    margin = lhs.mean - rhs.mean
    sigma = math.hypot(lhs.stderr, rhs.stderr)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "margin": margin,
        "sigma": sigma,
        "margin_sigmas": margin / sigma if sigma else math.inf,
        "m": m,
    }


def polar_volume(k: ConvexBody, sphere_samples: int, seed: int) -> Estimate:
    """|K*| = kappa_d * sphere average of h_K(u)^{-d}."""
    _require_origin(k)
    d = k.dim
    rng = np.random.default_rng(seed)
    u = uniform_sphere(rng, d, sphere_samples)
    h = support_batch(k, u)
    vals = h ** (-float(d))
    est = from_samples_moments(float(vals.sum()),
                               float((vals * vals).sum()),
                               sphere_samples, seed)
    return est.scaled(kappa(d))


def santalo_case(k: ConvexBody, outer_samples: int, seed: int,
                 sphere_samples: Optional[int] = None,
                 workers: int = 1) -> dict:
    """For unit-scalar-invariant K: the identity
    (kappa_p)^n int |P_E K|^{-n} dE = |K*| / kappa_{np}  (via rho_{K*} = 1/h_K)
    and the conjectured inequality
    |K|^{-1} >= (kappa_p)^n / kappa_{np} * int |P_E K|^{-n} dE.
    """
    _require_origin(k)
    _check_unit_scalar_invariant(k, seed)
    n, p = k.n, k.field.p
    if sphere_samples is None:
        sphere_samples = outer_samples

    seq = np.random.SeedSequence(int(seed))
    s_aq, s_pol, s_vol = (int(s.generate_state(1)[0]) for s in seq.spawn(3))

    aq = affine_quermass(k, 1, outer_samples, s_aq, workers=workers)
    id_lhs = aq.scaled(kappa(p) ** n)
    id_rhs = polar_volume(k, sphere_samples, s_pol).scaled(1.0 / kappa(n * p))
    resid = id_lhs.mean - id_rhs.mean
    resid_sigma = math.hypot(id_lhs.stderr, id_rhs.stderr)

    vol_k = volume(k, samples=200_000, seed=s_vol)
    ineq_lhs = vol_k.power(-1.0)
    ineq_rhs = aq.scaled(kappa(p) ** n / kappa(n * p))
    margin = ineq_lhs.mean - ineq_rhs.mean
    margin_sigma = math.hypot(ineq_lhs.stderr, ineq_rhs.stderr)
    if margin_sigma == 0.0:
        margin_sigmas = 0.0 if abs(margin) <= 1e-12 * ineq_lhs.mean else math.inf
    else:
        margin_sigmas = margin / margin_sigma

    return {
        "identity_lhs": id_lhs,
        "identity_rhs": id_rhs,
        "residual_sigmas": resid / resid_sigma if resid_sigma else 0.0,
        "ineq_lhs": ineq_lhs,
        "ineq_rhs": ineq_rhs,
        "margin": margin,
        "sigma": margin_sigma,
        "margin_sigmas": margin_sigmas,
    }


def conjecture_eval(k: ConvexBody, m: int, outer_samples: int, seed: int,
                    workers: int = 1) -> dict:
    """EXPLORATION ONLY: both sides of the projection conjecture
    |K|^{-m} >= (kappa_{mp})^n / (kappa_{np})^m int |P_E K|^{-n} dE
    and of the isoperimetric consequence
    kappa_{np} / kappa_{mp} int |P_E K| dE >= |K|^{n/m}."""
    _require_origin(k)
    n, p = k.n, k.field.p
    seq = np.random.SeedSequence(int(seed))
    s_aq, s_proj, s_vol = (int(s.generate_state(1)[0]) for s in seq.spawn(3))

    aq = affine_quermass(k, m, outer_samples, s_aq, workers=workers)
    vol_k = volume(k, samples=200_000, seed=s_vol)

    conj_lhs = vol_k.power(-float(m))
    conj_rhs = aq.scaled(kappa(m * p) ** n / kappa(n * p) ** m)

    if isinstance(k, (Ball, Ellipsoid)):
        def one_proj(rng):
            e = sample_grassmann(n, m, k.field, rng)
            return _projection_volume_ellipsoid(k, e.real_frame())

        mean_proj = _outer_mean(one_proj, outer_samples, s_proj, workers, 1)
        iso_lhs = mean_proj.scaled(kappa(n * p) / kappa(m * p))
        iso_rhs = vol_k.power(n / m)
    else:
        iso_lhs = iso_rhs = None

    out = {
        "tag": "EXPLORATION",
        "conj_lhs": conj_lhs,
        "conj_rhs": conj_rhs,
        "conj_margin_sigmas": (conj_lhs.mean - conj_rhs.mean)
        / max(math.hypot(conj_lhs.stderr, conj_rhs.stderr), 1e-300),
    }
    if iso_lhs is not None:
        out["iso_lhs"] = iso_lhs
        out["iso_rhs"] = iso_rhs
        out["iso_margin_sigmas"] = (iso_lhs.mean - iso_rhs.mean) / max(
            math.hypot(iso_lhs.stderr, iso_rhs.stderr), 1e-300
        )
    return out
