"""Determinant property suite: randomized identities that the determinant
magnitude must satisfy over R, C, and H, each checked to a relative
tolerance.  Runs deterministically for a fixed seed; the CLI ``selftest``
subcommand and the acceptance tests share this code."""

from __future__ import annotations

import numpy as np

from .ncla import (
    FMat,
    det_abs,
    det_abs_tuple,
    gram_schmidt,
    random_fmat,
    realify,
    right_mult_operator_real,
    row_expansion,
    unitary_from_random,
)
from .scalars import Field, qabs


def _rel(x: float, y: float) -> float:
    scale = max(abs(x), abs(y))
    if scale == 0.0:
        return 0.0
    return abs(x - y) / scale


def determinant_suite(field: Field, trials: int = 1000, seed: int = 0,
                      n_max: int = 6, rtol: float = 1e-8) -> dict:
    """Worst relative errors of the determinant identities over random
    matrices with n in 2..n_max."""
    rng = np.random.default_rng(seed)
    p = field.p
    worst = {
        "multiplicativity": 0.0,
        "adjoint": 0.0,
        "row_swap": 0.0,
        "col_swap": 0.0,
        "realify": 0.0,
        "right_mult_operator": 0.0,
        "row_expansion_sum": 0.0,
        "row_expansion_minors": 0.0,
        "unitary": 0.0,
        "gram_cross_check": 0.0,
    }

    for t in range(trials):
        n = 2 + t % (n_max - 1)
        a = random_fmat(field, n, n, rng)
        b = random_fmat(field, n, n, rng)
        da = det_abs(a)
        db = det_abs(b)

        worst["multiplicativity"] = max(
            worst["multiplicativity"], _rel(det_abs(a @ b), da * db)
        )
        worst["adjoint"] = max(worst["adjoint"], _rel(det_abs(a.adjoint()), da))

        i, j = rng.choice(n, size=2, replace=False)
        swapped = a.data.copy()
        swapped[[i, j]] = swapped[[j, i]]
        worst["row_swap"] = max(
            worst["row_swap"], _rel(det_abs(FMat(field, swapped)), da)
        )
        swapped = a.data.copy()
        swapped[:, [i, j]] = swapped[:, [j, i]]
        worst["col_swap"] = max(
            worst["col_swap"], _rel(det_abs(FMat(field, swapped)), da)
        )

        worst["realify"] = max(
            worst["realify"],
            _rel(da**p, abs(float(np.linalg.det(realify(a))))),
        )

        m = 2 if n <= 3 else 1
        rm = right_mult_operator_real(a, m)
        worst["right_mult_operator"] = max(
            worst["right_mult_operator"],
            _rel(abs(float(np.linalg.det(rm))), da ** (m * p)),
        )

        lam = row_expansion(a)
        combo = np.zeros(4)
        from .scalars import qmul

        for idx in range(n):
            combo = combo + qmul(a.data[0, idx, :], lam[idx].data)
        worst["row_expansion_sum"] = max(
            worst["row_expansion_sum"], _rel(float(qabs(combo[None, :])[0]), da)
        )
        for idx in range(n):
            minor = FMat(field, np.delete(a.data[1:, :, :], idx, axis=1))
            worst["row_expansion_minors"] = max(
                worst["row_expansion_minors"],
                _rel(lam[idx].norm(), det_abs(minor)),
            )

        q = unitary_from_random(field, n, rng)
        worst["unitary"] = max(worst["unitary"], abs(det_abs(q) - 1.0))

        worst["gram_cross_check"] = max(
            worst["gram_cross_check"], _rel(da * da, det_abs(a.adjoint() @ a))
        )

    passed = all(v <= rtol for v in worst.values())
    return {"field": field.symbol, "trials": trials, "seed": seed,
            "rtol": rtol, "worst": worst, "passed": passed}


def transpose_counterexample_search(rng: np.random.Generator,
                                    max_tries: int = 10_000):
    """Search for a quaternionic 2x2 matrix with |det A^t| != |det A|;
    the identity det A^t = det A fails over H."""
    for _ in range(max_tries):
        a = random_fmat(Field.QUATERNION, 2, 2, rng)
        da = det_abs(a)
        dt = det_abs(a.transpose())
        if da > 0.1 and _rel(da, dt) > 1e-6:
            return a, da, dt
    return None


def kernel_cross_check(field: Field, trials: int = 200, seed: int = 1,
                       n: int = 4, m: int = 3) -> float:
    """Worst relative disagreement between the reference Gram-Schmidt tuple
    determinant and the batched backend kernel."""
    from . import _core
    from .scalars import random_scalars

    rng = np.random.default_rng(seed)
    batch = random_scalars(field, (trials, n, m), rng)
    kernel = _core.tuple_det_abs(batch)
    worst = 0.0
    for t in range(trials):
        ref = det_abs_tuple(FMat(field, batch[t]))
        worst = max(worst, _rel(ref, float(kernel[t])))
    return worst
