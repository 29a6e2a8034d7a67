"""Convex bodies in F^n, represented on the realified coordinates R^{np}.

Membership oracles are batched: ``contains_batch`` takes an (N, np) array of
realified points (see ``ncla.pack_vector`` for the component ordering).  The
analytic kinds (balls, ellipsoids, boxes, V-polytopes) additionally expose
exact volume, support values, and line chords; derived bodies (affine images,
sections, symmetrized bodies) compose their parents' oracles and keep an
explicit bounding radius so rejection sampling stays correct.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from . import parallel
from .errors import (
    DimensionMismatch,
    NotPositiveDefinite,
    OriginNotInterior,
    RejectionBudgetExceeded,
    SingularTransform,
    UnsupportedKind,
)
from .estimate import Estimate
from .functionals import kappa
from .ncla import FMat, det_abs, pack_batch, pack_vector, realify, unpack_vector
from .scalars import Field, FVector, qabs, qmul

REJECTION_BUDGET = 1_000_000


# ---------------------------------------------------------------------------
# sampling helpers
# ---------------------------------------------------------------------------

def uniform_sphere(rng: np.random.Generator, dim: int, size: int) -> np.ndarray:
    """Uniform unit directions from normalized standard Gaussians."""
    g = rng.standard_normal((size, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def uniform_ball(rng: np.random.Generator, dim: int, size: int,
                 radius: float = 1.0) -> np.ndarray:
    u = uniform_sphere(rng, dim, size)
    r = rng.random(size) ** (1.0 / dim) * radius
    return u * r[:, None]


def random_unit_scalars(field: Field, rng: np.random.Generator, size: int) -> np.ndarray:
    g = np.zeros((size, 4))
    g[:, : field.p] = rng.standard_normal((size, field.p))
    return g / qabs(g)[:, None]


# ---------------------------------------------------------------------------
# body classes
# ---------------------------------------------------------------------------

class ConvexBody:
    """Base: a membership oracle plus a bounding radius around the origin."""

    kind = "oracle"

    def __init__(self, field: Field, n: int, radius: float,
                 symmetric_about_origin: bool = False):
        self.field = field
        self.n = int(n)
        self.dim = self.n * field.p
        self.radius = float(radius)
        self.symmetric_about_origin = symmetric_about_origin
        self.known_unit_scalar_invariant = False

    # -- oracle surface ----------------------------------------------------
    def contains_batch(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64).reshape(1, -1)
        if x.shape[1] != self.dim:
            raise DimensionMismatch(
                f"point has dimension {x.shape[1]}, body lives in R^{self.dim}"
            )
        return bool(self.contains_batch(x)[0])

    # -- optional fast paths -------------------------------------------------
    @property
    def exact_volume(self) -> Optional[float]:
        return None

    @property
    def exact_center(self) -> Optional[np.ndarray]:
        return None

    def support_exact(self, u: np.ndarray) -> Optional[np.ndarray]:
        """h_K on an (N, dim) array of directions, or None if not analytic."""
        return None

    def chord(self, y: np.ndarray, u: np.ndarray):
        """Intersection intervals of the lines {y_i + t u} with the body.

        Returns (lo, hi) with lo > hi marking empty chords, or None when no
        analytic path exists.  ``u`` need not be unit length.
        """
        return None

    def sample_direct(self, rng: np.random.Generator, size: int):
        return None

    def __repr__(self):
        return (f"{type(self).__name__}({self.field.symbol}^{self.n}, "
                f"kind={self.kind}, R={self.radius:.3g})")


class Ball(ConvexBody):
    kind = "ball"

    def __init__(self, field: Field, n: int, center=None, radius: float = 1.0):
        d = n * field.p
        c = np.zeros(d) if center is None else np.asarray(center, dtype=np.float64)
        if c.shape != (d,):
            raise DimensionMismatch(f"center must have {d} real coordinates")
        if radius <= 0:
            raise ValueError("radius must be positive")
        super().__init__(field, n, float(np.linalg.norm(c)) + radius,
                         symmetric_about_origin=bool(np.all(c == 0.0)))
        self.center = c
        self.r = float(radius)
        self.known_unit_scalar_invariant = self.symmetric_about_origin

    def contains_batch(self, x):
        diff = x - self.center
        return np.einsum("ij,ij->i", diff, diff) <= self.r * self.r

    @property
    def exact_volume(self):
        return kappa(self.dim) * self.r ** self.dim

    @property
    def exact_center(self):
        return self.center

    def support_exact(self, u):
        return u @ self.center + self.r * np.linalg.norm(u, axis=1)

    def chord(self, y, u):
        a2 = float(u @ u)
        diff = y - self.center
        b1 = diff @ u
        c0 = np.einsum("ij,ij->i", diff, diff) - self.r * self.r
        disc = b1 * b1 - a2 * c0
        ok = disc >= 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        lo = np.where(ok, (-b1 - root) / a2, 1.0)
        hi = np.where(ok, (-b1 + root) / a2, -1.0)
        return lo, hi

    def sample_direct(self, rng, size):
        return self.center + uniform_ball(rng, self.dim, size, self.r)


class Ellipsoid(ConvexBody):
    """{x : (x - c)^T Q (x - c) <= 1} for a symmetric positive definite Q on
    the realified coordinates.  F-hermitian ellipsoids arrive through
    ``make_ellipsoid``; sections, affine images, and hyperplane symmetrization
    of ellipsoids produce general real forms."""

    kind = "ellipsoid"

    def __init__(self, field: Field, n: int, center: np.ndarray, form: np.ndarray,
                 hermitian_source: Optional[FMat] = None):
        d = n * field.p
        center = np.asarray(center, dtype=np.float64)
        form = np.asarray(form, dtype=np.float64)
        if center.shape != (d,) or form.shape != (d, d):
            raise DimensionMismatch("ellipsoid center/form dimensions are off")
        form = 0.5 * (form + form.T)
        try:
            np.linalg.cholesky(form)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("ellipsoid form is not positive definite")
        eigmin = float(np.linalg.eigvalsh(form)[0])
        super().__init__(field, n,
                         float(np.linalg.norm(center)) + 1.0 / math.sqrt(eigmin),
                         symmetric_about_origin=bool(np.all(center == 0.0)))
        self.center = center
        self.form = form
        self.form_inv = np.linalg.inv(form)
        self._det_form = float(np.linalg.det(form))
        self.hermitian_source = hermitian_source
        self.known_unit_scalar_invariant = (
            hermitian_source is not None and self.symmetric_about_origin
        )

    def contains_batch(self, x):
        diff = x - self.center
        return np.einsum("ij,jk,ik->i", diff, self.form, diff) <= 1.0

    @property
    def exact_volume(self):
        return kappa(self.dim) / math.sqrt(self._det_form)

    @property
    def exact_center(self):
        return self.center

    def support_exact(self, u):
        return u @ self.center + np.sqrt(
            np.einsum("ij,jk,ik->i", u, self.form_inv, u)
        )

    def chord(self, y, u):
        qu = self.form @ u
        a2 = float(u @ qu)
        diff = y - self.center
        b1 = diff @ qu
        c0 = np.einsum("ij,jk,ik->i", diff, self.form, diff) - 1.0
        disc = b1 * b1 - a2 * c0
        ok = disc >= 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        lo = np.where(ok, (-b1 - root) / a2, 1.0)
        hi = np.where(ok, (-b1 + root) / a2, -1.0)
        return lo, hi


class Box(ConvexBody):
    kind = "box"

    def __init__(self, field: Field, n: int, lo, hi):
        d = n * field.p
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        if lo.shape != (d,) or hi.shape != (d,):
            raise DimensionMismatch(f"box bounds must have {d} coordinates")
        if np.any(hi <= lo):
            raise ValueError("box needs lo < hi coordinatewise")
        corner = np.maximum(np.abs(lo), np.abs(hi))
        super().__init__(field, n, float(np.linalg.norm(corner)),
                         symmetric_about_origin=bool(np.allclose(lo, -hi)))
        self.lo = lo
        self.hi = hi

    def contains_batch(self, x):
        return np.all((x >= self.lo) & (x <= self.hi), axis=1)

    @property
    def exact_volume(self):
        return float(np.prod(self.hi - self.lo))

    @property
    def exact_center(self):
        return 0.5 * (self.lo + self.hi)

    def support_exact(self, u):
        return np.where(u > 0, u * self.hi, u * self.lo).sum(axis=1)

    def chord(self, y, u):
        lo = np.full(len(y), -np.inf)
        hi = np.full(len(y), np.inf)
        for i in range(self.dim):
            if u[i] == 0.0:
                bad = (y[:, i] < self.lo[i]) | (y[:, i] > self.hi[i])
                lo[bad], hi[bad] = 1.0, -1.0
                continue
            t0 = (self.lo[i] - y[:, i]) / u[i]
            t1 = (self.hi[i] - y[:, i]) / u[i]
            lo = np.maximum(lo, np.minimum(t0, t1))
            hi = np.minimum(hi, np.maximum(t0, t1))
        return lo, hi

    def sample_direct(self, rng, size):
        return self.lo + rng.random((size, self.dim)) * (self.hi - self.lo)


class VPolytope(ConvexBody):
    """Convex hull of a vertex list; the halfspace form comes from Qhull."""

    kind = "vpolytope"

    def __init__(self, field: Field, n: int, vertices):
        from scipy.spatial import ConvexHull

        d = n * field.p
        verts = np.asarray(vertices, dtype=np.float64)
        if verts.ndim != 2 or verts.shape[1] != d:
            raise DimensionMismatch(f"vertices must be (k, {d})")
        hull = ConvexHull(verts)
        sym = all(
            np.min(np.linalg.norm(verts + v, axis=1)) < 1e-9 * (1 + np.linalg.norm(v))
            for v in verts
        )
        super().__init__(field, n, float(np.linalg.norm(verts, axis=1).max()),
                         symmetric_about_origin=sym)
        self.vertices = verts
        self.halfspace_a = hull.equations[:, :-1]  # a x + b <= 0 inside
        self.halfspace_b = hull.equations[:, -1]
        self._volume = float(hull.volume)
        self._tol = 1e-12 * max(1.0, self.radius)

    def contains_batch(self, x):
        vals = x @ self.halfspace_a.T + self.halfspace_b
        return np.all(vals <= self._tol, axis=1)

    @property
    def exact_volume(self):
        return self._volume

    def support_exact(self, u):
        return (u @ self.vertices.T).max(axis=1)

    def chord(self, y, u):
        au = self.halfspace_a @ u  # (k,)
        rhs = -(y @ self.halfspace_a.T + self.halfspace_b)  # t * au <= rhs
        lo = np.full(len(y), -np.inf)
        hi = np.full(len(y), np.inf)
        for k in range(len(au)):
            if au[k] > 0:
                hi = np.minimum(hi, rhs[:, k] / au[k])
            elif au[k] < 0:
                lo = np.maximum(lo, rhs[:, k] / au[k])
            else:
                bad = rhs[:, k] < 0
                lo[bad], hi[bad] = 1.0, -1.0
        return lo, hi


class AffineImage(ConvexBody):
    """A K + b for an invertible real map A (the realified F-linear map)."""

    kind = "affine_image"

    def __init__(self, parent: ConvexBody, mat_real: np.ndarray, shift: np.ndarray):
        self.parent = parent
        self.mat = mat_real
        self.mat_inv = np.linalg.inv(mat_real)
        self.shift = shift
        opnorm = float(np.linalg.norm(mat_real, 2))
        sym = parent.symmetric_about_origin and bool(np.all(shift == 0.0))
        super().__init__(parent.field, parent.n,
                         opnorm * parent.radius + float(np.linalg.norm(shift)),
                         symmetric_about_origin=sym)

    def contains_batch(self, x):
        return self.parent.contains_batch((x - self.shift) @ self.mat_inv.T)

    def support_exact(self, u):
        inner = self.parent.support_exact(u @ self.mat)
        if inner is None:
            return None
        return inner + u @ self.shift

    def chord(self, y, u):
        return self.parent.chord((y - self.shift) @ self.mat_inv.T, self.mat_inv @ u)

    @property
    def exact_center(self):
        c = self.parent.exact_center
        if c is None:
            return None
        return self.mat @ c + self.shift

    @property
    def exact_volume(self):
        v = self.parent.exact_volume
        if v is None:
            return None
        return abs(float(np.linalg.det(self.mat))) * v


class SectionBody(ConvexBody):
    """The slice {w : y0 + U w in K} in the coordinates of an orthonormal
    column frame U; Lebesgue measure in those coordinates matches the measure
    on the affine subspace."""

    kind = "section"

    def __init__(self, parent: ConvexBody, frame: np.ndarray, offset: np.ndarray,
                 field: Field, n: int):
        self.parent = parent
        self.frame = frame
        self.offset = offset
        resid = offset - frame @ (frame.T @ offset)
        if np.linalg.norm(resid - offset) < 1e-12 * (1 + np.linalg.norm(offset)):
            radius = math.sqrt(max(parent.radius**2 - float(offset @ offset), 0.0))
        else:
            radius = parent.radius + float(np.linalg.norm(offset))
        super().__init__(field, n, max(radius, 1e-300))

    def contains_batch(self, w):
        return self.parent.contains_batch(self.offset + w @ self.frame.T)

    def chord(self, y, u):
        inner = self.parent.chord(self.offset + y @ self.frame.T, self.frame @ u)
        return inner


class EmptyBody(ConvexBody):
    kind = "section"

    def __init__(self, field: Field, n: int):
        super().__init__(field, n, 1e-300)

    def contains_batch(self, x):
        return np.zeros(len(x), dtype=bool)

    @property
    def exact_volume(self):
        return 0.0


class OracleBody(ConvexBody):
    kind = "oracle"

    def __init__(self, field: Field, n: int, fn, radius: float,
                 symmetric_about_origin: bool = False, volume: Optional[float] = None,
                 support_fn=None, center=None):
        super().__init__(field, n, radius, symmetric_about_origin)
        self._fn = fn
        self._volume = volume
        self._support_fn = support_fn
        self._center = center

    def contains_batch(self, x):
        return self._fn(x)

    @property
    def exact_volume(self):
        return self._volume

    @property
    def exact_center(self):
        return self._center

    def support_exact(self, u):
        if self._support_fn is None:
            return None
        return self._support_fn(u)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def _as_real_point(field: Field, n: int, x) -> np.ndarray:
    if x is None:
        return np.zeros(n * field.p)
    if isinstance(x, FVector):
        if x.field is not field or x.n != n:
            raise DimensionMismatch("center lives in the wrong space")
        return pack_vector(x.data, field.p)
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if arr.shape != (n * field.p,):
        raise DimensionMismatch(
            f"expected {n * field.p} real coordinates, got {arr.shape[0]}"
        )
    return arr


def make_ball(field: Field, n: int, center=None, radius: float = 1.0) -> Ball:
    return Ball(field, n, _as_real_point(field, n, center), radius)


def make_ellipsoid(center, form: FMat) -> Ellipsoid:
    """Ellipsoid {x : <x - a, H (x - a)> <= 1} from a hermitian positive
    definite H over F."""
    field = form.field
    if not form.is_square:
        raise DimensionMismatch("ellipsoid form must be square")
    n = form.rows
    if not form.is_hermitian():
        raise NotPositiveDefinite("ellipsoid form must be hermitian")
    q = realify(form)
    return Ellipsoid(field, n, _as_real_point(field, n, center), q,
                     hermitian_source=form)


def make_box(field: Field, n: int, lo, hi) -> Box:
    return Box(field, n, lo, hi)


def make_vpolytope(field: Field, n: int, vertices) -> VPolytope:
    return VPolytope(field, n, vertices)


def make_field_l1_ball(field: Field, n: int) -> OracleBody:
    """The unit ball of sum_i |x_i|_F: unit-scalar invariant, exact volume
    kappa_p^n Gamma(p+1)^n / Gamma(np+1), support max_i |u_i|_F."""
    p = field.p

    def fn(x):
        comps = unpack_vector(x, p)
        return qabs(comps).sum(axis=1) <= 1.0

    def support_fn(u):
        comps = unpack_vector(u, p)
        return qabs(comps).max(axis=1)

    vol = kappa(p) ** n * math.exp(
        n * math.lgamma(p + 1) - math.lgamma(n * p + 1)
    )
    body = OracleBody(field, n, fn, radius=1.0, symmetric_about_origin=True,
                      volume=vol, support_fn=support_fn, center=np.zeros(n * p))
    body.known_unit_scalar_invariant = True
    return body


def affine_image(k: ConvexBody, a: FMat, b=None) -> ConvexBody:
    """Image A K + b under an invertible F-linear map; ellipsoids stay
    ellipsoids."""
    if a.field is not k.field or a.rows != k.n or not a.is_square:
        raise DimensionMismatch("affine map does not match the body's space")
    if det_abs(a) == 0.0:
        raise SingularTransform("affine_image needs an invertible matrix")
    mat = realify(a)
    shift = _as_real_point(k.field, k.n, b)
    if isinstance(k, (Ball, Ellipsoid)):
        if isinstance(k, Ball):
            q = np.eye(k.dim) / (k.r * k.r)
            center = k.center
        else:
            q, center = k.form, k.center
        mat_inv = np.linalg.inv(mat)
        new_q = mat_inv.T @ q @ mat_inv
        return Ellipsoid(k.field, k.n, mat @ center + shift, new_q)
    return AffineImage(k, mat, shift)


def section_real(k: ConvexBody, frame: np.ndarray, offset: np.ndarray,
                 field: Field, n: int) -> ConvexBody:
    """Section in the coordinates of an orthonormal real frame (internal)."""
    if isinstance(k, Ball):
        k = Ellipsoid(k.field, k.n, k.center, np.eye(k.dim) / (k.r * k.r))
    if isinstance(k, Ellipsoid):
        # restrict the quadratic: q(w) = (o + Uw - c)^T Q (o + Uw - c)
        diff = offset - k.center
        m = frame.T @ k.form @ frame
        lin = frame.T @ (k.form @ diff)
        const = float(diff @ k.form @ diff)
        m_inv = np.linalg.inv(m)
        w0 = -m_inv @ lin
        qmin = const + float(lin @ w0)
        slack = 1.0 - qmin
        if slack <= 1e-14:
            return EmptyBody(field, n)
        return Ellipsoid(field, n, w0, m / slack)
    return SectionBody(k, frame, offset, field, n)


def section(k: ConvexBody, subspace, offset=None) -> ConvexBody:
    """Section of K by the affine F-subspace offset + E, in E-coordinates."""
    frame = subspace.real_frame()
    if subspace.field is not k.field or frame.shape[0] != k.dim:
        raise DimensionMismatch("subspace does not match the body's space")
    off = _as_real_point(k.field, k.n, offset)
    return section_real(k, frame, off, k.field, subspace.m)


# ---------------------------------------------------------------------------
# volume, sampling
# ---------------------------------------------------------------------------

def volume(k: ConvexBody, samples: int = 100_000, seed: int = 0,
           workers: int = 1, method: str = "auto", chunk: int = 500_000) -> Estimate:
    """Volume as an Estimate: exact when the kind allows it, otherwise
    rejection Monte Carlo from the bounding ball."""
    if method not in ("auto", "mc", "exact"):
        raise ValueError("method must be auto, mc, or exact")
    exact = k.exact_volume
    if method in ("auto", "exact") and exact is not None:
        return Estimate.exact(exact, seed=seed)
    if method == "exact":
        raise UnsupportedKind(f"{k.kind} body carries no exact volume")
    if samples < 1_000:
        raise ValueError("volume estimation needs at least 1e3 samples")

    d, r = k.dim, k.radius
    ball_vol = kappa(d) * r**d

    def chunk_fn(rng, quota):
        hits = 0
        done = 0
        while done < quota:
            m = min(chunk, quota - done)
            pts = uniform_ball(rng, d, m, r)
            hits += int(k.contains_batch(pts).sum())
            done += m
        return hits, quota

    parts = parallel.run_chunks(chunk_fn, seed, samples, workers)
    hits = sum(h for h, _ in parts)
    total = sum(q for _, q in parts)
    p_hat = hits / total
    mean = ball_vol * p_hat
    stderr = ball_vol * math.sqrt(max(p_hat * (1 - p_hat), 0.0) / total)
    est = Estimate(mean, stderr, total, seed)
    if mean == 0.0 or stderr / max(mean, 1e-300) > 0.05:
        est.flags.append("insufficient_samples")
    return est


def sample_uniform(k: ConvexBody, rng: np.random.Generator, size: int,
                   chunk: int = 500_000) -> np.ndarray:
    """Uniform points in K: direct for balls and boxes, rejection from the
    bounding ball otherwise."""
    direct = k.sample_direct(rng, size)
    if direct is not None:
        return direct
    out = []
    got = 0
    consecutive_rejects = 0
    while got < size:
        m = min(chunk, max(4 * (size - got), 4096))
        pts = uniform_ball(rng, k.dim, m, k.radius)
        keep = k.contains_batch(pts)
        acc = int(keep.sum())
        if acc == 0:
            consecutive_rejects += m
            if consecutive_rejects >= REJECTION_BUDGET:
                raise RejectionBudgetExceeded(
                    f"no acceptance in {consecutive_rejects} proposals"
                )
            continue
        consecutive_rejects = 0
        out.append(pts[keep])
        got += acc
    return np.concatenate(out)[:size]


def ellipsoid_pushforward_sample(e: Ellipsoid, rng: np.random.Generator,
                                 size: int) -> np.ndarray:
    """Alternative exact sampler: affine image of uniform ball samples."""
    l = np.linalg.cholesky(e.form_inv)
    return e.center + uniform_ball(rng, e.dim, size) @ l.T


def centroid(k: ConvexBody, samples: int = 10_000, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return sample_uniform(k, rng, samples).mean(axis=0)


# ---------------------------------------------------------------------------
# support, radial, polar
# ---------------------------------------------------------------------------

def support_batch(k: ConvexBody, u: np.ndarray, samples: int = 8192,
                  seed: int = 0) -> np.ndarray:
    """h_K on an (N, dim) array of directions; analytic kinds are exact, the
    rest fall back to a maximum over one shared uniform sample cloud."""
    u = np.asarray(u, dtype=np.float64)
    exact = k.support_exact(u)
    if exact is not None:
        return exact
    rng = np.random.default_rng(seed)
    cloud = sample_uniform(k, rng, samples)
    return (cloud @ u.T).max(axis=0)


def support(k: ConvexBody, u, samples: int = 8192, seed: int = 0) -> float:
    u = np.asarray(u, dtype=np.float64).reshape(1, -1)
    return float(support_batch(k, u, samples=samples, seed=seed)[0])


def radial_batch(k: ConvexBody, u: np.ndarray, tol_factor: float = 1e-9) -> np.ndarray:
    """Radial function by bisection along each direction (0 must be interior)."""
    if not k.contains(np.zeros(k.dim)):
        raise OriginNotInterior("radial function needs 0 in the body")
    u = np.asarray(u, dtype=np.float64)
    norm = np.linalg.norm(u, axis=1, keepdims=True)
    u = u / norm
    lo = np.zeros(len(u))
    hi = np.full(len(u), k.radius)
    steps = max(1, int(math.ceil(math.log2(1.0 / tol_factor))))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        inside = k.contains_batch(u * mid[:, None])
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def radial(k: ConvexBody, u) -> float:
    return float(radial_batch(k, np.asarray(u, dtype=np.float64).reshape(1, -1))[0])


def polar_radial(k: ConvexBody, u, samples: int = 8192, seed: int = 0) -> float:
    """rho of the polar body: 1 / h_K."""
    return 1.0 / support(k, u, samples=samples, seed=seed)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def unit_scalar_invariance_check(k: ConvexBody, trials: int = 10_000,
                                 seed: int = 0) -> bool:
    """True iff membership survives right multiplication by random unit
    scalars on every sampled point."""
    rng = np.random.default_rng(seed)
    pts = sample_uniform(k, rng, trials)
    w = random_unit_scalars(k.field, rng, trials)
    comps = unpack_vector(pts, k.field.p)
    rotated = qmul(comps, w[:, None, :])
    return bool(np.all(k.contains_batch(pack_batch(rotated, k.field.p))))


def roundness_defect(k: ConvexBody, n_dirs: int = 10_000, seed: int = 0,
                     center=None, centroid_samples: int = 10_000,
                     support_samples: int = 8192) -> float:
    """max - min of the support function over sampled directions after
    recentering (exact center when the kind knows it, sampled centroid
    otherwise)."""
    rng = np.random.default_rng(seed)
    if center is None:
        center = k.exact_center
    if center is None:
        center = sample_uniform(k, rng, centroid_samples).mean(axis=0)
    dirs = uniform_sphere(rng, k.dim, n_dirs)
    h = k.support_exact(dirs)
    if h is None:
        cloud = sample_uniform(k, rng, support_samples) - center
        vals = (cloud @ dirs.T).max(axis=0)
    else:
        vals = h - dirs @ center
    return float(vals.max() - vals.min())


def line_section_roundness(k: ConvexBody, trials: int = 100, seed: int = 0,
                           dirs_per_section: int = 2048) -> dict:
    """Sample random affine F-lines meeting K, recenter each section, and
    report the worst roundness defect (p must be 2 or 4)."""
    from .randgeom import sample_grassmann

    p = k.field.p
    if p == 1:
        raise UnsupportedKind("line sections over R are segments; no roundness")
    rng = np.random.default_rng(seed)
    worst = 0.0
    records = []
    for t in range(trials):
        e = sample_grassmann(k.n, 1, k.field, rng)
        frame = e.real_frame()
        x0 = sample_uniform(k, rng, 1)[0]
        off = x0 - frame @ (frame.T @ x0)
        sec = section_real(k, frame, off, k.field, 1)
        if isinstance(sec, EmptyBody):
            continue
        defect = roundness_defect(
            sec, n_dirs=dirs_per_section,
            seed=int(rng.integers(2**63)),
            centroid_samples=4096, support_samples=4096,
        )
        records.append(defect)
        worst = max(worst, defect)
    return {"max_defect": worst, "defects": records, "sections": len(records)}


def convexity_spot_check(k: ConvexBody, pairs: int = 1000, seed: int = 0) -> bool:
    """Midpoints of member pairs must be members."""
    rng = np.random.default_rng(seed)
    a = sample_uniform(k, rng, pairs)
    b = sample_uniform(k, rng, pairs)
    return bool(np.all(k.contains_batch(0.5 * (a + b))))


# ---------------------------------------------------------------------------
# random bodies and config descriptors
# ---------------------------------------------------------------------------

def random_body(field: Field, n: int, rng: np.random.Generator,
                kind: Optional[str] = None, centered: bool = True) -> ConvexBody:
    """A random well-conditioned convex body, for randomized test suites."""
    from .ncla import random_fmat

    d = n * field.p
    if kind is None:
        kind = rng.choice(["ellipsoid", "box", "vpolytope", "affine_box"])
    if kind == "ellipsoid":
        g = random_fmat(field, n, n, rng)
        h = g.adjoint() @ g
        h = FMat(field, h.data + 0.3 * FMat.identity(field, n).data)
        center = None if centered else 0.1 * rng.standard_normal(d)
        return make_ellipsoid(center, h)
    if kind == "box":
        if centered:
            hi = 0.4 + rng.random(d)
            return make_box(field, n, -hi, hi)
        lo = -0.4 - rng.random(d)
        hi = 0.4 + rng.random(d)
        return make_box(field, n, lo, hi)
    if kind == "vpolytope":
        count = 3 * d + rng.integers(0, d + 1)
        verts = rng.standard_normal((count, d))
        if centered:
            verts = np.concatenate([verts, -verts])
        else:
            verts = np.concatenate([verts, 0.05 * rng.standard_normal((1, d)) - verts])
        return make_vpolytope(field, n, verts)
    if kind == "affine_box":
        base = make_box(field, n, -np.ones(d), np.ones(d))
        g = random_fmat(field, n, n, rng)
        g = FMat(field, g.data + 0.8 * FMat.identity(field, n).data)
        shift = None if centered else 0.05 * rng.standard_normal(d)
        return affine_image(base, g, shift)
    raise UnsupportedKind(f"unknown random body kind {kind!r}")


def body_from_descriptor(desc: dict) -> ConvexBody:
    """Build a body from a config descriptor (see the CLI schema)."""
    field = Field.from_symbol(desc["field"])
    n = int(desc["n"])
    kind = desc["kind"]
    if kind == "ball":
        return make_ball(field, n, desc.get("center"), desc.get("radius", 1.0))
    if kind == "ellipsoid":
        form = FMat.from_entries(field, desc["form"])
        center = desc.get("center")
        if center is not None:
            center = np.asarray(
                [np.pad(np.atleast_1d(np.asarray(c, dtype=np.float64)),
                        (0, 4))[:4] for c in center]
            )
            center = pack_vector(center, field.p)
        return make_ellipsoid(center, form)
    if kind == "box":
        return make_box(field, n, desc["lo"], desc["hi"])
    if kind == "vpolytope":
        return make_vpolytope(field, n, desc["vertices"])
    if kind == "l1ball":
        return make_field_l1_ball(field, n)
    if kind == "affine_image":
        base = body_from_descriptor(desc["base"])
        mat = FMat.from_entries(field, desc["matrix"])
        shift = desc.get("shift")
        if shift is not None:
            shift = np.asarray(shift, dtype=np.float64)
        return affine_image(base, mat, shift)
    raise UnsupportedKind(f"unknown body kind {kind!r}")
