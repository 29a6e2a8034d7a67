"""The random-tuple determinant functional, one-dimensional companions, and
ball constants.

The central object is

    B(K_1, .., K_n) = int_{K_1} .. int_{K_n} Phi(|det(x_1, .., x_n)|) dx,

estimated without bias as the sample mean of Phi(|det|) over independent
uniform draws, multiplied by the product of body volumes.  For Phi(t) = t^r
the value on centered balls has the closed form ``b_balls_exact``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from . import _core, parallel
from .errors import DimensionMismatch, FieldMismatch
from .estimate import Estimate, from_samples_moments
from .ncla import unpack_vector
from .scalars import Field, qabs, qmul


# ---------------------------------------------------------------------------
# ball volumes and sphere areas
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def kappa(n) -> float:
    """Volume of the n-dimensional euclidean unit ball; n may be fractional."""
    n = float(n)
    if n < 0:
        raise ValueError("kappa needs n >= 0")
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


@lru_cache(maxsize=None)
def omega(n) -> float:
    """Surface area of the (n-1)-sphere, omega_n = n * kappa_n."""
    n = float(n)
    if n <= 0:
        raise ValueError("omega needs n > 0")
    return n * kappa(n)


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Weight:
    """A strictly increasing weight applied to the determinant magnitude."""

    kind: str  # "power" or "custom"
    r: Optional[float] = None
    fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @classmethod
    def power(cls, r: float) -> "Weight":
        if r < 0:
            raise ValueError("power weight needs r >= 0")
        return cls(kind="power", r=float(r))

    @classmethod
    def custom(cls, fn: Callable[[np.ndarray], np.ndarray]) -> "Weight":
        grid = np.linspace(0.0, 8.0, 33)
        vals = np.asarray(fn(grid), dtype=np.float64)
        if not np.all(np.diff(vals) > 0):
            raise ValueError("custom weight must be strictly increasing on R+")
        return cls(kind="custom", fn=fn)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "power":
            return np.asarray(t, dtype=np.float64) ** self.r
        return np.asarray(self.fn(t), dtype=np.float64)


def b_balls_exact(n: int, p: int, r: float) -> float:
    """Value of B on n copies of the unit ball of F^n for Phi(t) = t^r:
    (kappa_{np+r})^n * prod_{j=0}^{n-1} omega_{(n-j)p} / omega_{(n-j)p+r}."""
    value = kappa(n * p + r) ** n
    for j in range(n):
        value *= omega((n - j) * p) / omega((n - j) * p + r)
    return value


# ---------------------------------------------------------------------------
# Monte Carlo estimators
# ---------------------------------------------------------------------------

def _check_bodies(bodies, expect_n: Optional[int] = None):
    field = bodies[0].field
    n = bodies[0].n
    for k in bodies:
        if k.field is not field:
            raise FieldMismatch("bodies live over different fields")
        if k.n != n:
            raise DimensionMismatch("bodies live in different ambient spaces")
    if expect_n is not None and n != expect_n:
        raise DimensionMismatch(
            f"expected bodies in F^{expect_n}, got F^{n}"
        )
    return field, n


def _body_volumes(bodies, samples, seed, workers) -> list[Estimate]:
    from . import bodies as bodiesmod

    seqs = np.random.SeedSequence(int(seed)).spawn(len(bodies))
    out = []
    for k, sq in zip(bodies, seqs):
        out.append(
            bodiesmod.volume(k, samples=samples, seed=int(sq.generate_state(1)[0]),
                             workers=workers)
        )
    return out


def _resolve_antithetic(bodies, antithetic):
    symmetric = all(getattr(k, "symmetric_about_origin", False) for k in bodies)
    if antithetic is None:
        return symmetric
    return bool(antithetic) and symmetric


def b_functional(
    bodies: Sequence,
    weight: Weight,
    samples: int,
    seed: int,
    workers: int = 1,
    antithetic: Optional[bool] = None,
    volumes: Optional[Sequence[Estimate]] = None,
    chunk: int = 200_000,
) -> Estimate:
    """Unbiased Monte Carlo estimate of B(K_1, .., K_n).

    The mean of Phi(|det|) and the volume factors are estimated from
    independent streams; their errors combine by the delta method.  The
    weight sees only |det|, which is even under negating any single factor,
    so antithetic pairing never changes the values; it is validated (central
    symmetry of every body) and recorded, nothing more.
    """
    from . import bodies as bodiesmod

    field, n = _check_bodies(bodies, expect_n=len(bodies))
    p = field.p
    _resolve_antithetic(bodies, antithetic)

    seq = np.random.SeedSequence(int(seed))
    seed_phi, seed_vol = (int(s.generate_state(1)[0]) for s in seq.spawn(2))

    if volumes is None:
        volumes = _body_volumes(bodies, samples, seed_vol, workers)

    def chunk_fn(rng, quota):
        total = 0.0
        total_sq = 0.0
        done = 0
        while done < quota:
            m = min(chunk, quota - done)
            tup = np.empty((m, n, n, 4))
            for j, body in enumerate(bodies):
                pts = bodiesmod.sample_uniform(body, rng, m)  # (m, n*p) real
                tup[:, :, j, :] = unpack_vector(pts, p)
            vals = weight(_core.tuple_det_abs(tup))
            total += float(vals.sum())
            total_sq += float((vals * vals).sum())
            done += m
        return total, total_sq, quota

    parts = parallel.run_chunks(chunk_fn, seed_phi, samples, workers)
    tot = sum(s for s, _, _ in parts)
    tot_sq = sum(s for _, s, _ in parts)
    count = sum(c for _, _, c in parts)
    mean_phi = from_samples_moments(tot, tot_sq, count, seed)

    out = mean_phi
    for v in volumes:
        out = out.times(v)
    out = Estimate(out.mean, out.stderr, count, seed)
    if out.rel_stderr > 0.05:
        out.flags.append("insufficient_samples")
    return out


def m_functional(
    bodies: Sequence,
    weight: Weight,
    lam: Optional[Sequence] = None,
    samples: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> Estimate:
    """Monte Carlo estimate of int .. int Phi(|x_1 l_1 + .. + x_m l_m|) dx for
    one-dimensional bodies K_i in F; ``lam=None`` means the plain sum."""
    from . import bodies as bodiesmod

    field, n = _check_bodies(bodies)
    if n != 1:
        raise DimensionMismatch("m_functional needs one-dimensional bodies")
    m = len(bodies)
    if lam is None:
        lam_data = [np.array([1.0, 0.0, 0.0, 0.0]) for _ in range(m)]
    else:
        if len(lam) != m:
            raise DimensionMismatch("one scalar per body expected")
        lam_data = []
        for a in lam:
            comp = np.zeros(4)
            arr = np.atleast_1d(np.asarray(getattr(a, "data", a), dtype=np.float64))
            comp[: len(arr)] = arr
            lam_data.append(comp)

    seq = np.random.SeedSequence(int(seed))
    seed_phi, seed_vol = (int(s.generate_state(1)[0]) for s in seq.spawn(2))
    volumes = _body_volumes(bodies, samples, seed_vol, workers)

    def chunk_fn(rng, quota):
        acc = np.zeros((quota, 4))
        for j, body in enumerate(bodies):
            pts = bodiesmod.sample_uniform(body, rng, quota)  # (quota, p)
            entries = unpack_vector(pts, field.p)[:, 0, :]
            acc += qmul(entries, lam_data[j][None, :])
        vals = weight(qabs(acc))
        return float(vals.sum()), float((vals * vals).sum()), quota

    parts = parallel.run_chunks(chunk_fn, seed_phi, samples, workers)
    tot = sum(s for s, _, _ in parts)
    tot_sq = sum(s for _, s, _ in parts)
    count = sum(c for _, _, c in parts)
    mean_phi = from_samples_moments(tot, tot_sq, count, seed)

    out = mean_phi
    for v in volumes:
        out = out.times(v)
    return Estimate(out.mean, out.stderr, count, seed)


def brs_gap(
    bodies: Sequence,
    weight: Weight,
    samples: int,
    seed: int,
    workers: int = 1,
) -> dict:
    """Estimated gap B(K_1, .., K_n) - B(ball_1, .., ball_n) where ball_i is
    the centered euclidean ball of the same volume as K_i.

    Requires a power weight: substituting x_i = rho_i y_i shows that the ball
    value scales as b_balls_exact(n, p, r) * prod rho_i^{np} * (prod rho_i)^r,
    so both terms are functions of the same volume estimates; the combined
    sigma keeps track of that correlation.
    """
    from . import bodies as bodiesmod

    if weight.kind != "power":
        raise ValueError("brs_gap needs a power weight")
    field, n = _check_bodies(bodies, expect_n=len(bodies))
    p = field.p
    r = weight.r
    d = n * p

    seq = np.random.SeedSequence(int(seed))
    seed_phi, seed_vol = (int(s.generate_state(1)[0]) for s in seq.spawn(2))
    volumes = _body_volumes(bodies, samples, seed_vol, workers)

    b_k = b_functional(bodies, weight, samples, seed_phi, workers=workers,
                       volumes=volumes)
    mean_phi_rel = 0.0
    prod_vol = 1.0
    for v in volumes:
        prod_vol *= v.mean
    if prod_vol > 0 and b_k.mean != 0:
        # stderr share of the Phi mean inside b_k (volumes handled below)
        vol_var = sum((v.stderr / v.mean) ** 2 for v in volumes if v.mean > 0)
        mean_phi_rel = math.sqrt(max((b_k.stderr / b_k.mean) ** 2 - vol_var, 0.0))

    exponent = 1.0 + r / d
    scale = b_balls_exact(n, p, r) * kappa(d) ** (-n * exponent)
    b_balls_val = scale * np.prod([v.mean ** exponent for v in volumes])

    # delta method on the shared volume estimates plus the independent Phi mean
    var = (abs(b_k.mean) * mean_phi_rel) ** 2
    for v in volumes:
        if v.mean <= 0:
            continue
        dgap_dv = (b_k.mean - exponent * b_balls_val) / v.mean
        var += (dgap_dv * v.stderr) ** 2
    sigma = math.sqrt(var)

    return {
        "B_K": b_k,
        "B_balls": float(b_balls_val),
        "gap": float(b_k.mean - b_balls_val),
        "sigma": float(sigma),
        "volumes": list(volumes),
    }
