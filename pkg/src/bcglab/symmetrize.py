"""Symmetrization with respect to real hyperplanes (Steiner) and
complex/quaternionic hyperplanes (fiber balls of matched volume).

Both operations preserve volume: Steiner recenters every chord perpendicular
to the hyperplane, the F-hyperplane version replaces each p-dimensional fiber
over the hyperplane by the centered euclidean p-ball of equal volume.
Ellipsoid inputs take analytic paths (exact chords, exact fiber volumes); for
the F-hyperplane case the analytic result is itself an ellipsoid, which keeps
iterated symmetrization tractable.
"""

from __future__ import annotations

import math
import threading
from typing import Optional, Sequence

import numpy as np

from .bodies import (
    Ball,
    ConvexBody,
    Ellipsoid,
    roundness_defect,
    volume,
)
from .errors import DimensionMismatch
from .functionals import kappa
from .ncla import gram_schmidt, pack_vector, realify, FMat
from .scalars import Field, FVector, qabs2

CHORD_SCAN_POINTS = 64
CHORD_BISECT_STEPS = 60
FIBER_MC_SAMPLES = 4096
FIBER_GRID_DIVISIONS = 512


class RealHyperplane:
    """A linear hyperplane of the realified space, given by its unit normal."""

    def __init__(self, normal):
        u = np.asarray(normal, dtype=np.float64).reshape(-1)
        nrm = float(np.linalg.norm(u))
        if nrm == 0.0:
            raise DimensionMismatch("hyperplane normal must be nonzero")
        self.normal = u / nrm

    @property
    def dim(self) -> int:
        return self.normal.shape[0]


class FHyperplane:
    """An (n-1)-dimensional F-linear hyperplane, H = (normal F)^perp."""

    def __init__(self, field: Field, normal):
        if isinstance(normal, FVector):
            data = normal.data.copy()
        else:
            data = np.asarray(normal, dtype=np.float64)
            if data.ndim == 1:  # realified coordinates
                from .ncla import unpack_vector

                data = unpack_vector(data, field.p)
            elif data.shape[1] < 4:  # per-entry component lists
                pad = np.zeros((data.shape[0], 4 - data.shape[1]))
                data = np.hstack([data, pad])
        nrm = math.sqrt(float(qabs2(data).sum()))
        if nrm == 0.0:
            raise DimensionMismatch("hyperplane normal must be nonzero")
        data = data / nrm
        self.field = field
        self.n = data.shape[0]
        self.normal = FVector(field, data)

        # complete the normal to an orthonormal F-basis: column 0 spans the
        # fiber direction H-perp, columns 1..n-1 span H
        cols = [data]
        eye = np.zeros((self.n, self.n, 4))
        eye[np.arange(self.n), np.arange(self.n), 0] = 1.0
        for i in range(self.n):
            cols.append(eye[:, i, :])
        stacked = np.stack(cols, axis=1)
        q, _, _ = gram_schmidt(stacked, field)
        norms = np.sqrt(qabs2(q).sum(axis=0))
        keep = [t for t in range(stacked.shape[1]) if norms[t] > 0.5]
        basis = q[:, keep[: self.n], :]

        p = field.p
        full = realify(FMat(field, basis))  # (np, np), orthonormal columns
        self.fiber_frame = np.ascontiguousarray(full[:, _component_cols(0, self.n, p)])
        hcols = np.concatenate(
            [_component_cols(j, self.n, p) for j in range(1, self.n)]
        )
        self.base_frame = np.ascontiguousarray(full[:, hcols])


def _component_cols(j: int, n: int, p: int) -> np.ndarray:
    """Realified column indices of basis vector j (all p unit-scalar copies)."""
    return j + n * np.arange(p)


def hyperplane_from_config(field: Field, desc: dict):
    if desc["type"] == "real":
        return RealHyperplane(desc["normal"])
    if desc["type"] == "field":
        return FHyperplane(field, np.asarray(desc["normal"], dtype=np.float64))
    raise DimensionMismatch(f"unknown hyperplane type {desc['type']!r}")


# ---------------------------------------------------------------------------
# chords of oracle-only bodies
# ---------------------------------------------------------------------------

def oracle_chord(body: ConvexBody, y: np.ndarray, u: np.ndarray,
                 scan: int = CHORD_SCAN_POINTS,
                 steps: int = CHORD_BISECT_STEPS,
                 row_chunk: int = 8192):
    """Chord intervals by coarse scan plus bisection against the membership
    oracle.  Lines are y_i + t u with unit u; returns (lo, hi), lo > hi for
    chords that were not hit by the scan."""
    n_rows = len(y)
    lo_out = np.ones(n_rows)
    hi_out = -np.ones(n_rows)
    for start in range(0, n_rows, row_chunk):
        yy = y[start : start + row_chunk]
        m = len(yy)
        # scan window: where the line meets the bounding ball
        b1 = yy @ u
        disc = b1 * b1 - (np.einsum("ij,ij->i", yy, yy) - body.radius**2)
        hit = disc > 0
        root = np.sqrt(np.where(hit, disc, 0.0))
        t_min = -b1 - root
        t_max = -b1 + root
        ts = t_min[:, None] + (t_max - t_min)[:, None] * np.linspace(0.0, 1.0, scan)
        pts = yy[:, None, :] + ts[:, :, None] * u[None, None, :]
        inside = body.contains_batch(pts.reshape(-1, body.dim)).reshape(m, scan)
        inside &= hit[:, None]
        any_in = inside.any(axis=1)
        if not np.any(any_in):
            continue
        first = np.argmax(inside, axis=1)
        last = scan - 1 - np.argmax(inside[:, ::-1], axis=1)
        rows = np.arange(m)
        t_in_lo = ts[rows, first]
        t_in_hi = ts[rows, last]
        step_t = (t_max - t_min) / (scan - 1)
        t_out_lo = t_in_lo - step_t
        t_out_hi = t_in_hi + step_t

        for _ in range(steps):
            mid = 0.5 * (t_out_lo + t_in_lo)
            ok = body.contains_batch(yy + mid[:, None] * u[None, :])
            t_in_lo = np.where(ok, mid, t_in_lo)
            t_out_lo = np.where(ok, t_out_lo, mid)
            mid = 0.5 * (t_out_hi + t_in_hi)
            ok = body.contains_batch(yy + mid[:, None] * u[None, :])
            t_in_hi = np.where(ok, mid, t_in_hi)
            t_out_hi = np.where(ok, t_out_hi, mid)

        lo_out[start : start + row_chunk] = np.where(any_in, t_in_lo, 1.0)
        hi_out[start : start + row_chunk] = np.where(any_in, t_in_hi, -1.0)
    return lo_out, hi_out


# ---------------------------------------------------------------------------
# Steiner symmetrization
# ---------------------------------------------------------------------------

class SteinerBody(ConvexBody):
    """Membership through chord lengths of the parent: x with base point
    y = x - <x,u>u belongs iff |<x,u>| is at most half the parent chord
    over y."""

    kind = "symmetrized"

    def __init__(self, parent: ConvexBody, normal: np.ndarray):
        super().__init__(parent.field, parent.n, parent.radius,
                         symmetric_about_origin=parent.symmetric_about_origin)
        self.parent = parent
        self.normal = normal

    def contains_batch(self, x):
        s = x @ self.normal
        y = x - s[:, None] * self.normal[None, :]
        chord = self.parent.chord(y, self.normal)
        if chord is None:
            chord = oracle_chord(self.parent, y, self.normal)
        lo, hi = chord
        half = 0.5 * (hi - lo)
        return np.abs(s) <= half

    @property
    def exact_center(self):
        c = self.parent.exact_center
        if c is None:
            return None
        return c - (c @ self.normal) * self.normal


def steiner(k: ConvexBody, h) -> SteinerBody:
    """Steiner symmetrization of K with respect to a real linear hyperplane."""
    if not isinstance(h, RealHyperplane):
        h = RealHyperplane(h)
    if h.dim != k.dim:
        raise DimensionMismatch("hyperplane lives in the wrong dimension")
    return SteinerBody(k, h.normal)


# ---------------------------------------------------------------------------
# F-hyperplane symmetrization
# ---------------------------------------------------------------------------

class FiberSymmetrizedBody(ConvexBody):
    """Fibers over the F-hyperplane replaced by centered p-balls of equal
    volume; fiber volumes come from per-fiber Monte Carlo, memoized on a grid
    whose cells carry deterministic seeds (results do not depend on
    evaluation order)."""

    kind = "symmetrized"

    def __init__(self, parent: ConvexBody, plane: FHyperplane,
                 fiber_samples: int = FIBER_MC_SAMPLES,
                 grid_pitch: Optional[float] = None, seed: int = 0):
        super().__init__(parent.field, parent.n, parent.radius,
                         symmetric_about_origin=parent.symmetric_about_origin)
        self.parent = parent
        self.plane = plane
        self.fiber_samples = int(fiber_samples)
        self.pitch = grid_pitch or parent.radius / FIBER_GRID_DIVISIONS
        self.seed = int(seed)
        self._cache: dict = {}
        self._lock = threading.Lock()

    @property
    def exact_center(self):
        c = self.parent.exact_center
        if c is None:
            return None
        base = self.plane.base_frame
        return base @ (base.T @ c)

    def _fiber_radii(self, keys: np.ndarray) -> np.ndarray:
        """Fiber-ball radii for an array of unique quantized base keys."""
        p = self.field.p
        base = self.plane.base_frame
        fiber = self.plane.fiber_frame
        n_samp = self.fiber_samples
        out = np.empty(len(keys))
        missing_idx = []
        missing_keys = []
        with self._lock:
            for idx, key in enumerate(keys):
                tkey = tuple(int(v) for v in key)
                cached = self._cache.get(tkey)
                if cached is not None:
                    out[idx] = cached
                else:
                    missing_idx.append(idx)
                    missing_keys.append(tkey)
        if not missing_idx:
            return out

        group_size = max(1, (4 << 20) // max(n_samp, 1))
        strata = ((np.arange(n_samp) + 0.5) / n_samp) ** (1.0 / p)
        for start in range(0, len(missing_idx), group_size):
            idx_grp = missing_idx[start : start + group_size]
            key_grp = np.array(missing_keys[start : start + group_size],
                               dtype=np.int64)
            y = key_grp.astype(np.float64) * self.pitch  # (G, base_dim)
            w2 = self.parent.radius**2 - np.einsum("ij,ij->i", y, y)
            w = np.sqrt(np.maximum(w2, 0.0))
            radii = np.zeros(len(idx_grp))
            live = w2 > 0.0
            if np.any(live):
                dirs = _keyed_directions(key_grp[live], n_samp, p, self.seed)
                disc = dirs * (w[live, None] * strata[None, :])[:, :, None]
                pts = (
                    y[live] @ base.T
                )[:, None, :] + disc @ fiber.T  # (L, S, dim)
                inside = self.parent.contains_batch(pts.reshape(-1, self.dim))
                fracs = inside.reshape(-1, n_samp).mean(axis=1)
                radii[live] = w[live] * fracs ** (1.0 / p)
            with self._lock:
                for j, idx in enumerate(idx_grp):
                    self._cache[missing_keys[start + j]] = radii[j]
                    out[idx] = radii[j]
        return out

    def contains_batch(self, x):
        y = x @ self.plane.base_frame
        a = x @ self.plane.fiber_frame
        keys = np.rint(y / self.pitch).astype(np.int64)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        radii = self._fiber_radii(uniq)[inverse]
        return np.einsum("ij,ij->i", a, a) <= radii * radii


_SM64_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM64_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM64_M2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = (x + _SM64_GAMMA).astype(np.uint64)
    x = (x ^ (x >> np.uint64(30))) * _SM64_M1
    x = (x ^ (x >> np.uint64(27))) * _SM64_M2
    return x ^ (x >> np.uint64(31))


def _keyed_uniforms(keys: np.ndarray, size: int, stream: int,
                    seed: int) -> np.ndarray:
    """Uniform (0,1) variates as a pure function of (seed, key, stream,
    stratum index), vectorized over keys; counter-based so fiber values never
    depend on evaluation order."""
    state = np.full(len(keys), np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    state = _splitmix64(state + np.uint64(0x632BE59BD9B4E019) * np.uint64(stream))
    for col in range(keys.shape[1]):
        state = _splitmix64(state ^ keys[:, col].astype(np.uint64))
    idx = np.arange(size, dtype=np.uint64)
    h = _splitmix64(state[:, None] + _SM64_GAMMA * idx[None, :])
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


_BASE_DIR_CACHE: dict = {}


def _base_direction_set(p: int, size: int) -> np.ndarray:
    """A fixed well-spread set of unit directions in R^p (golden-angle
    sequence for p = 2, a frozen-seed Gaussian draw for p = 4)."""
    key = (p, size)
    cached = _BASE_DIR_CACHE.get(key)
    if cached is not None:
        return cached
    if p == 1:
        base = np.where(np.arange(size) % 2 == 0, 1.0, -1.0)[:, None]
    elif p == 2:
        golden = (math.sqrt(5.0) - 1.0) / 2.0
        phi = 2.0 * math.pi * ((np.arange(size) * golden) % 1.0)
        base = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    else:
        g = np.random.default_rng(0x5EED).standard_normal((size, 4))
        base = g / np.linalg.norm(g, axis=1, keepdims=True)
    _BASE_DIR_CACHE[key] = base
    return base


def _keyed_directions(keys: np.ndarray, size: int, p: int,
                      seed: int) -> np.ndarray:
    """Unit directions in R^p for the radially stratified fiber clouds: the
    fixed base set, rotated by a uniform rotation drawn deterministically
    per quantized key.  Rotation invariance of the sphere keeps each fiber
    estimate unbiased; shape (len(keys), size, p)."""
    base = _base_direction_set(p, size)
    if p == 1:
        flip = np.where(_keyed_uniforms(keys, 1, 1, seed)[:, 0] < 0.5, -1.0, 1.0)
        return base[None, :, :] * flip[:, None, None]
    if p == 2:
        phi = 2.0 * math.pi * _keyed_uniforms(keys, 1, 1, seed)[:, 0]
        c, s = np.cos(phi), np.sin(phi)
        rot = np.empty((len(keys), 2, 2))
        rot[:, 0, 0], rot[:, 0, 1] = c, -s
        rot[:, 1, 0], rot[:, 1, 1] = s, c
        return np.einsum("sj,kij->ksi", base, rot)
    # p == 4: right-multiply by a per-key Haar-uniform unit quaternion
    u1 = _keyed_uniforms(keys, 1, 1, seed)[:, 0]
    u2 = _keyed_uniforms(keys, 1, 2, seed)[:, 0]
    u3 = _keyed_uniforms(keys, 1, 3, seed)[:, 0]
    w = np.stack([
        np.sqrt(1 - u1) * np.sin(2 * math.pi * u2),
        np.sqrt(1 - u1) * np.cos(2 * math.pi * u2),
        np.sqrt(u1) * np.sin(2 * math.pi * u3),
        np.sqrt(u1) * np.cos(2 * math.pi * u3),
    ], axis=-1)
    return qmul(base[None, :, :], w[:, None, :])


def symmetrize_fhyperplane(k: ConvexBody, plane: FHyperplane,
                           fiber_samples: int = FIBER_MC_SAMPLES,
                           grid_pitch: Optional[float] = None,
                           seed: int = 0) -> ConvexBody:
    """Symmetrization with respect to a complex or quaternionic hyperplane.

    Ellipsoid fibers are analytic (the restricted quadratic form), and the
    resulting body is again an ellipsoid, returned exactly.  All other kinds
    go through the memoized per-fiber Monte Carlo oracle.
    """
    if plane.field is not k.field or plane.n != k.n:
        raise DimensionMismatch("hyperplane does not match the body's space")
    if isinstance(k, Ball):
        k = Ellipsoid(k.field, k.n, k.center, np.eye(k.dim) / (k.r * k.r))
    if isinstance(k, Ellipsoid):
        p = k.field.p
        uf = plane.fiber_frame
        q, c = k.form, k.center
        m = uf.T @ q @ uf
        m_inv = np.linalg.inv(m)
        gamma = float(np.linalg.det(m)) ** (1.0 / p)
        s = q - q @ uf @ m_inv @ uf.T @ q
        ub = plane.base_frame
        ph = ub @ ub.T
        pf = uf @ uf.T
        a_mat = ph @ s @ ph + gamma * pf
        lin = ph @ s @ c
        x_star = np.linalg.solve(a_mat, lin)
        slack = 1.0 - float(c @ s @ c) + float(x_star @ a_mat @ x_star)
        if slack <= 0.0:
            raise DimensionMismatch("degenerate ellipsoid symmetrization")
        return Ellipsoid(k.field, k.n, x_star, a_mat / slack)
    return FiberSymmetrizedBody(k, plane, fiber_samples=fiber_samples,
                                grid_pitch=grid_pitch, seed=seed)


# ---------------------------------------------------------------------------
# iterated symmetrization
# ---------------------------------------------------------------------------

def iterate(k: ConvexBody, planes: Sequence[FHyperplane], rounds: int,
            seed: int = 0, n_dirs: int = 4096,
            volume_samples: int = 200_000) -> list[dict]:
    """Apply the planes cyclically and record the roundness defect and a
    volume estimate after each round.  Defects are reported as observed;
    monotone decrease is not asserted."""
    trace = []
    rng = np.random.default_rng(seed)

    def record(round_idx, body):
        vol = volume(body, samples=volume_samples,
                     seed=int(rng.integers(2**63)))
        defect = roundness_defect(body, n_dirs=n_dirs,
                                  seed=int(rng.integers(2**63)))
        trace.append({
            "round": round_idx,
            "defect": defect,
            "volume": vol.mean,
            "volume_stderr": vol.stderr,
        })

    record(0, k)
    body = k
    for r in range(1, rounds + 1):
        for plane in planes:
            body = symmetrize_fhyperplane(
                body, plane, seed=int(rng.integers(2**63))
            )
        record(r, body)
    return trace
