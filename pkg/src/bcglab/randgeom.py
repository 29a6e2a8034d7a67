"""Haar sampling on the Grassmannian of F-subspaces and the linear
Blaschke-Petkantchin identity.

Sampling fills an n x m matrix with i.i.d. standard Gaussian components and
orthonormalizes; the resulting law is invariant under the unitary group, and
that group's invariant probability measure on Gr_m(n, F) is unique.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import _core, parallel
from .bodies import ConvexBody, uniform_ball, volume
from .errors import DimensionMismatch, OriginNotInterior, RetryExhausted
from .estimate import Estimate, from_samples_moments, product
from .functionals import kappa, omega
from .ncla import FMat, gram_schmidt, realify, unpack_vector
from .scalars import Field, qabs2, random_scalars

ORTHONORMALITY_TOL = 1e-10


class Subspace:
    """An m-dimensional F-subspace of F^n with an orthonormal basis."""

    def __init__(self, field: Field, basis: FMat):
        if basis.field is not field:
            raise DimensionMismatch("basis field mismatch")
        n, m = basis.rows, basis.cols
        if not 1 <= m <= n:
            raise DimensionMismatch("need 1 <= m <= n")
        gram = basis.adjoint() @ basis
        eye = FMat.identity(field, m)
        if not np.allclose(gram.data, eye.data, atol=ORTHONORMALITY_TOL):
            raise DimensionMismatch("basis columns are not orthonormal")
        self.field = field
        self.n = n
        self.m = m
        self.basis = basis
        self._frame = None

    def real_frame(self) -> np.ndarray:
        """Realified embedding F^m -> F^n, an (np x mp) matrix with
        orthonormal columns."""
        if self._frame is None:
            self._frame = realify(self.basis)
        return self._frame

    def projector(self) -> FMat:
        return self.basis @ self.basis.adjoint()

    def __repr__(self):
        return f"Subspace(Gr_{self.m}({self.n}, {self.field.symbol}))"


def sample_grassmann(n: int, m: int, field: Field,
                     rng: np.random.Generator) -> Subspace:
    """Haar-uniform subspace: Gaussian matrix plus Gram-Schmidt."""
    if not 1 <= m <= n:
        raise DimensionMismatch("need 1 <= m <= n")
    for _ in range(32):
        g = random_scalars(field, (n, m), rng)
        q, _, ok = gram_schmidt(g, field)
        if ok:
            return Subspace(field, FMat(field, q))
    raise RetryExhausted("Gaussian matrix was rank deficient 32 times")


def c_constant(m: int, n: int, p: int) -> float:
    """Blaschke-Petkantchin constant prod_{j<m} omega_{(n-j)p} / omega_{(m-j)p}."""
    if not 1 <= m < n:
        raise DimensionMismatch("need 1 <= m < n")
    value = 1.0
    for j in range(m):
        value *= omega((n - j) * p) / omega((m - j) * p)
    return value


def b_constant(m: int, n: int, p: int) -> float:
    """Intersection-inequality constant
    (kappa_{np})^m / (kappa_{mp})^n * prod_{j<m} omega_{(m-j)p} / omega_{(n-j)p}."""
    if not 1 <= m < n:
        raise DimensionMismatch("need 1 <= m < n")
    value = kappa(n * p) ** m / kappa(m * p) ** n
    for j in range(m):
        value *= omega((m - j) * p) / omega((n - j) * p)
    return value


def bp_check(bodies: Sequence[ConvexBody], outer_samples: int,
             inner_samples: int, seed: int, workers: int = 1) -> dict:
    """Both sides of the linear Blaschke-Petkantchin identity applied to the
    indicator of K_1 x .. x K_m.

    lhs = prod |K_i|; rhs = c_{m,n} E_E[ inner(E) ] where inner(E) is the
    Monte Carlo integral over (K_i cap E)^m of |det(x_1, .., x_m)|^{(n-m)p},
    sampled uniformly from the bounding disks of the sections.  The outer
    spread of the per-subspace values absorbs the inner noise, so the plain
    mean/stderr over subspaces is an honest error bar.
    """
    field = bodies[0].field
    n = bodies[0].n
    m = len(bodies)
    p = field.p
    if not 1 <= m < n:
        raise DimensionMismatch("need 1 <= m < n bodies")
    for k in bodies:
        if k.field is not field or k.n != n:
            raise DimensionMismatch("bodies live in different spaces")
        if not k.contains(np.zeros(k.dim)):
            raise OriginNotInterior("bp_check needs 0 inside every body")

    seq = np.random.SeedSequence(int(seed))
    seed_outer, seed_vol = (int(s.generate_state(1)[0]) for s in seq.spawn(2))

    lhs = product(
        volume(k, samples=max(inner_samples * 10, 100_000), seed=seed_vol + i)
        for i, k in enumerate(bodies)
    )

    weight_exp = (n - m) * p
    disk_dim = m * p
    disk_vols = [kappa(disk_dim) * k.radius**disk_dim for k in bodies]

    def one_subspace(rng):
        e = sample_grassmann(n, m, field, rng)
        frame = e.real_frame()
        tup = np.empty((inner_samples, n, m, 4))
        ind = np.ones(inner_samples, dtype=bool)
        for i, k in enumerate(bodies):
            w = uniform_ball(rng, disk_dim, inner_samples, k.radius)
            ambient = w @ frame.T
            ind &= k.contains_batch(ambient)
            tup[:, :, i, :] = unpack_vector(ambient, p)
        dets = _core.tuple_det_abs(tup)
        vals = np.where(ind, dets**weight_exp, 0.0)
        return float(vals.mean()) * float(np.prod(disk_vols))

    def chunk_fn(rng, quota):
        vals = [one_subspace(rng) for _ in range(quota)]
        s = float(np.sum(vals))
        s2 = float(np.sum(np.square(vals)))
        return s, s2, quota

    parts = parallel.run_chunks(chunk_fn, seed_outer, outer_samples, workers)
    tot = sum(a for a, _, _ in parts)
    tot_sq = sum(a for _, a, _ in parts)
    count = sum(c for _, _, c in parts)
    inner_mean = from_samples_moments(tot, tot_sq, count, seed)
    rhs = inner_mean.scaled(c_constant(m, n, p))
    rhs = Estimate(rhs.mean, rhs.stderr, count * inner_samples, seed)

    ratio = rhs.mean / lhs.mean if lhs.mean else math.inf
    rel = math.sqrt(
        (rhs.stderr / rhs.mean) ** 2 + (lhs.stderr / lhs.mean) ** 2
    ) if rhs.mean and lhs.mean else math.inf
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
        "ratio_sigma": abs(ratio) * rel,
        "c": c_constant(m, n, p),
    }
