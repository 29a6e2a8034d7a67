"""Numpy fallback for the hot kernels.

Vectorizes over the batch axis; the per-tuple algorithm is the same modified
Gram-Schmidt (one re-orthogonalization pass) as the compiled kernel.
"""

import numpy as np

SINGULAR_RTOL = 1e-12


def _qmul(a, b):
    a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b0, b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        (
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ),
        axis=-1,
    )


def tuple_det_abs_batch(v: np.ndarray) -> np.ndarray:
    """|det| for a (N, n, m, 4) batch of m-tuples of vectors in F^n."""
    nbatch, n, m, _ = v.shape
    det = np.ones(nbatch)
    alive = np.ones(nbatch, dtype=bool)
    q = np.empty_like(v)

    col_norms = np.sqrt(np.einsum("bitc,bitc->bt", v, v))
    tol = SINGULAR_RTOL * col_norms.max(axis=1)

    for t in range(m):
        u = v[:, :, t, :].copy()
        for _ in range(2):  # modified GS, one re-orthogonalization pass
            for s in range(t):
                qs = q[:, :, s, :]
                qsc = qs.copy()
                qsc[..., 1:] = -qsc[..., 1:]
                coef = _qmul(qsc, u).sum(axis=1)  # hermitian (q_s, u), shape (N, 4)
                u = u - _qmul(qs, coef[:, None, :])
        nrm = np.sqrt(np.einsum("bic,bic->b", u, u))
        alive &= nrm > tol
        det *= nrm
        q[:, :, t, :] = u / np.where(nrm > 0.0, nrm, 1.0)[:, None, None]

    det[~alive] = 0.0
    return det
