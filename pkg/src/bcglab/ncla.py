"""Noncommutative linear algebra over R, C, and H.

Matrices act by left multiplication on column coordinates of right modules.
Only the magnitude of the Dieudonne determinant is computed: elimination with
left row operations leaves it invariant, row/column swaps preserve it, and for
R and C it coincides with the usual |det|.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, FieldMismatch
from .scalars import (
    Field,
    FVector,
    Scalar,
    check_components,
    qabs,
    qabs2,
    qconj,
    qinv,
    qmul,
    random_scalars,
)

# pivot with norm below SINGULAR_RTOL * (max entry norm) declares singularity
SINGULAR_RTOL = 1e-12

# component/sign tables of the 4x4 real matrices of left and right
# multiplication by a quaternion, in the basis (1, i, j, k)
_L_COMP = np.array([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]])
_L_SIGN = np.array([[1, -1, -1, -1], [1, 1, -1, 1], [1, 1, 1, -1], [1, -1, 1, 1]])
_R_SIGN = np.array([[1, -1, -1, -1], [1, 1, 1, -1], [1, -1, 1, 1], [1, 1, -1, 1]])


class FMat:
    """Dense matrix over F stored as an (rows, cols, 4) component array."""

    __slots__ = ("field", "data")

    def __init__(self, field: Field, data):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 4:
            raise DimensionMismatch(f"FMat data must be (rows, cols, 4), got {arr.shape}")
        self.field = field
        self.data = check_components(field, arr, "matrix entry")
        self.data.flags.writeable = False

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    @classmethod
    def identity(cls, field: Field, n: int) -> "FMat":
        data = np.zeros((n, n, 4))
        data[np.arange(n), np.arange(n), 0] = 1.0
        return cls(field, data)

    @classmethod
    def diag(cls, field: Field, entries) -> "FMat":
        n = len(entries)
        data = np.zeros((n, n, 4))
        for i, e in enumerate(entries):
            comp = np.atleast_1d(np.asarray(e, dtype=np.float64))
            data[i, i, : len(comp)] = comp
        return cls(field, data)

    @classmethod
    def from_entries(cls, field: Field, entries) -> "FMat":
        """Build from a nested list of per-entry component lists (or reals)."""
        rows = []
        for row in entries:
            cur = []
            for e in row:
                comp = np.zeros(4)
                e = np.atleast_1d(np.asarray(e, dtype=np.float64))
                comp[: len(e)] = e
                cur.append(comp)
            rows.append(cur)
        return cls(field, np.array(rows))

    def entry(self, i: int, j: int) -> Scalar:
        return Scalar(self.field, self.data[i, j])

    def column(self, j: int) -> FVector:
        return FVector(self.field, self.data[:, j, :])

    def _check_field(self, other):
        if other.field is not self.field:
            raise FieldMismatch("matrix fields differ")

    def __matmul__(self, other):
        if isinstance(other, FMat):
            self._check_field(other)
            if self.cols != other.rows:
                raise DimensionMismatch(
                    f"inner dimensions differ: {self.cols} vs {other.rows}"
                )
            return FMat(self.field, _qmatmul(self.data, other.data))
        if isinstance(other, FVector):
            if other.field is not self.field:
                raise FieldMismatch("vector field differs")
            if self.cols != other.n:
                raise DimensionMismatch("matrix-vector dimensions differ")
            prod = _qmatmul(self.data, other.data[:, None, :])
            return FVector(self.field, prod[:, 0, :])
        return NotImplemented

    def __add__(self, other: "FMat") -> "FMat":
        self._check_field(other)
        return FMat(self.field, self.data + other.data)

    def __sub__(self, other: "FMat") -> "FMat":
        self._check_field(other)
        return FMat(self.field, self.data - other.data)

    def scale(self, t: float) -> "FMat":
        return FMat(self.field, self.data * float(t))

    def adjoint(self) -> "FMat":
        return FMat(self.field, qconj(self.data).transpose(1, 0, 2))

    def transpose(self) -> "FMat":
        """Plain transpose without conjugation (det magnitude may change over H)."""
        return FMat(self.field, self.data.transpose(1, 0, 2))

    def is_hermitian(self, atol=1e-10) -> bool:
        return bool(np.allclose(self.data, self.adjoint().data, atol=atol))

    def __repr__(self):
        return f"FMat({self.field.symbol}, {self.rows}x{self.cols})"


def _qmatmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Component-wise Hamilton matrix product, (..., r, k, 4) x (..., k, c, 4)."""
    terms = (
        ((0, 0, 1.0), (1, 1, -1.0), (2, 2, -1.0), (3, 3, -1.0)),
        ((0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, -1.0)),
        ((0, 2, 1.0), (1, 3, -1.0), (2, 0, 1.0), (3, 1, 1.0)),
        ((0, 3, 1.0), (1, 2, 1.0), (2, 1, -1.0), (3, 0, 1.0)),
    )
    shape = np.broadcast_shapes(a.shape[:-3], b.shape[:-3])
    out = np.zeros(shape + (a.shape[-3], b.shape[-2], 4))
    for c, term in enumerate(terms):
        for u, v, sign in term:
            out[..., c] += sign * np.einsum(
                "...ik,...kj->...ij", a[..., u], b[..., v]
            )
    return out


def matmul(a: FMat, b: FMat) -> FMat:
    return a @ b


def adjoint(a: FMat) -> FMat:
    return a.adjoint()


def random_fmat(field: Field, rows: int, cols: int, rng: np.random.Generator) -> FMat:
    return FMat(field, random_scalars(field, (rows, cols), rng))


# ---------------------------------------------------------------------------
# determinant magnitude by elimination
# ---------------------------------------------------------------------------

def det_abs(a: FMat) -> float:
    """|det| via Gaussian elimination with partial pivoting on entry norms."""
    if not a.is_square:
        raise DimensionMismatch("det_abs requires a square matrix")
    n = a.rows
    if n == 0:
        return 1.0
    w = a.data.copy()
    scale = float(qabs(w).max())
    if scale == 0.0:
        return 0.0
    tol = SINGULAR_RTOL * scale
    det = 1.0
    for k in range(n):
        norms = qabs(w[k:, k, :])
        r = k + int(np.argmax(norms))
        if norms[r - k] <= tol:
            return 0.0
        if r != k:
            w[[k, r]] = w[[r, k]]  # swap leaves |det| unchanged
        piv = w[k, k, :]
        det *= float(qabs(piv[None, :])[0])
        if k + 1 < n:
            factors = qmul(w[k + 1 :, k, :], qinv(piv)[None, :])
            w[k + 1 :, k:, :] -= qmul(factors[:, None, :], w[k, k:, :][None, :, :])
    return det


# ---------------------------------------------------------------------------
# realification
# ---------------------------------------------------------------------------

def realify(a: FMat) -> np.ndarray:
    """Real matrix of the left-multiplication map x -> Ax.

    Coordinates are taken in the real basis (e_1..e_n, e_1 i..e_n i,
    e_1 j..e_n j, e_1 k..e_n k), truncated to the field's p blocks, so a
    component array (n, 4) packs to the real vector of length p*n given by
    ``pack_vector``.
    """
    p = a.field.p
    r, c = a.rows, a.cols
    out = np.empty((p * r, p * c))
    for u in range(p):
        for v in range(p):
            comp = _L_COMP[u, v]
            out[u * r : (u + 1) * r, v * c : (v + 1) * c] = (
                _L_SIGN[u, v] * a.data[:, :, comp]
            )
    return out


def pack_vector(data: np.ndarray, p: int) -> np.ndarray:
    """(n, 4) component grid -> real coordinate vector of length p*n."""
    return data[:, :p].T.reshape(-1).copy()


def unpack_vector(x: np.ndarray, p: int) -> np.ndarray:
    """Real coordinates of length p*n -> (n, 4) component grid."""
    n = x.shape[-1] // p
    out = np.zeros(x.shape[:-1] + (n, 4))
    out[..., :, :p] = x.reshape(x.shape[:-1] + (p, n)).swapaxes(-1, -2)
    return out


def pack_batch(data: np.ndarray, p: int) -> np.ndarray:
    """(N, n, 4) component grids -> (N, p*n) real coordinates."""
    return data[..., :p].swapaxes(-1, -2).reshape(data.shape[0], -1)


def right_mult_operator_real(a: FMat, m: int = 1) -> np.ndarray:
    """Real matrix of M -> M A on Mat(m x n, F) viewed as a real vector space."""
    if not a.is_square:
        raise DimensionMismatch("right multiplication operator needs square A")
    p = a.field.p
    n = a.rows
    k = np.empty((p * n, p * n))
    for u in range(p):
        for v in range(p):
            comp = _L_COMP[u, v]
            # block (u, v) maps component v of row entries to component u of
            # the product; entry (j, t) couples M[., t] to (MA)[., j]
            k[u * n : (u + 1) * n, v * n : (v + 1) * n] = (
                _R_SIGN[u, v] * a.data[:, :, comp].T
            )
    if m == 1:
        return k
    return np.kron(np.eye(m), k)


# ---------------------------------------------------------------------------
# weak row expansion
# ---------------------------------------------------------------------------

def row_expansion(a: FMat) -> list[Scalar]:
    """Scalars (l_1, .., l_n), independent of the first row, with
    |a_11 l_1 + .. + a_1n l_n| = |det A| and |l_i| = |det A(1, i)|.

    Rows 2..n are eliminated to a permuted-diagonal normal form; the free
    column takes the role of sigma(1).  When rows 2..n are dependent the
    all-zero vector is returned (the matrix is singular for any first row).
    """
    if not a.is_square:
        raise DimensionMismatch("row_expansion requires a square matrix")
    n = a.rows
    if n < 2:
        raise DimensionMismatch("row_expansion requires n >= 2")
    field = a.field
    w = a.data[1:, :, :].copy()  # (n-1, n, 4)
    zeros = [Scalar(field, (0.0,)) for _ in range(n)]

    scale = float(qabs(w).max())
    if scale == 0.0:
        return zeros
    tol = SINGULAR_RTOL * scale

    # force the free column to be column 0 when the (1,1)-minor is invertible
    minor_11 = FMat(field, a.data[1:, 1:, :])
    allowed = set(range(1, n)) if det_abs(minor_11) > 0.0 else set(range(n))

    pivot_col = [-1] * (n - 1)
    used_cols: set[int] = set()
    for _step in range(n - 1):
        free_rows = [i for i in range(n - 1) if pivot_col[i] == -1]
        cand_cols = sorted(allowed - used_cols)
        norms = qabs(w[np.ix_(free_rows, cand_cols)])
        flat = int(np.argmax(norms))
        i = free_rows[flat // len(cand_cols)]
        c = cand_cols[flat % len(cand_cols)]
        if norms[flat // len(cand_cols), flat % len(cand_cols)] <= tol:
            return zeros  # rows 2..n linearly dependent
        pivot_col[i] = c
        used_cols.add(c)
        piv_inv = qinv(w[i, c, :])
        for r in range(n - 1):
            if r == i:
                continue
            coef = qmul(w[r, c, :], piv_inv)
            w[r, :, :] -= qmul(coef[None, :], w[i, :, :])
            w[r, c, :] = 0.0

    free_col = next(iter(set(range(n)) - used_cols))
    # mu with |mu| = |det D| = prod |d_i|; any representative works since the
    # contracts below only constrain magnitudes
    mu = np.array([1.0, 0.0, 0.0, 0.0])
    for i in range(n - 1):
        mu = qmul(mu, w[i, pivot_col[i], :])

    lam = [np.zeros(4) for _ in range(n)]
    lam[free_col] = mu
    for i in range(n - 1):
        d_inv = qinv(w[i, pivot_col[i], :])
        y_i = w[i, free_col, :]
        lam[pivot_col[i]] = -qmul(qmul(d_inv, y_i), mu)
    return [Scalar(field, v) for v in lam]


# ---------------------------------------------------------------------------
# tuples of vectors: Gram-Schmidt, determinant, right action
# ---------------------------------------------------------------------------

def gram_schmidt(v: np.ndarray, field: Field):
    """Orthonormalize columns of an (n, m, 4) grid w.r.t. the hermitian inner
    product, projection coefficients applied on the right.

    Returns (q, r, ok): q is (n, m, 4) with orthonormal columns, r is the
    (m, m, 4) upper-triangular coordinate matrix with real nonnegative
    diagonal, ok is False when the columns are numerically dependent.
    """
    n, m, _ = v.shape
    q = np.zeros_like(v)
    r = np.zeros((m, m, 4))
    col_norms = np.sqrt(qabs2(v).sum(axis=0))
    scale = float(col_norms.max()) if m else 0.0
    tol = SINGULAR_RTOL * scale
    ok = True
    for t in range(m):
        u = v[:, t, :].copy()
        for _ in range(2):  # one re-orthogonalization pass for stability
            for s in range(t):
                coef = qmul(qconj(q[:, s, :]), u).sum(axis=0)
                u -= qmul(q[:, s, :], coef[None, :])
                r[s, t, :] += coef
        nrm = float(np.sqrt(qabs2(u).sum()))
        r[t, t, 0] = nrm
        if nrm <= tol:
            ok = False
            continue
        q[:, t, :] = u / nrm
    return q, r, ok


def _tuple_data(vectors, field: Field | None = None) -> tuple[np.ndarray, Field]:
    if isinstance(vectors, FMat):
        return vectors.data, vectors.field
    cols = []
    for v in vectors:
        if isinstance(v, FVector):
            if field is None:
                field = v.field
            elif v.field is not field:
                raise FieldMismatch("tuple vectors live over different fields")
            cols.append(v.data)
        else:
            cols.append(np.asarray(v, dtype=np.float64))
    if field is None:
        raise FieldMismatch("field could not be inferred from the tuple")
    return np.stack(cols, axis=1), field


def det_abs_tuple(vectors, field: Field | None = None) -> float:
    """|det(v_1, .., v_m)| for m vectors in F^n (m <= n), the product of
    Gram-Schmidt diagonal norms; 0 for numerically dependent tuples."""
    data, field = _tuple_data(vectors, field)
    n, m, _ = data.shape
    if m > n:
        raise DimensionMismatch(f"tuple of {m} vectors in F^{n} has m > n")
    _, r, ok = gram_schmidt(data, field)
    if not ok:
        return 0.0
    return float(np.prod(r[np.arange(m), np.arange(m), 0]))


def right_action(vectors, a: FMat):
    """(v_1, .., v_m) A = (sum_r v_r A_r1, .., sum_r v_r A_rm)."""
    data, field = _tuple_data(vectors, a.field)
    if data.shape[1] != a.rows:
        raise DimensionMismatch("tuple length must equal the row count of A")
    # out[:, j] = sum_r v_r * A[r, j]
    out = np.zeros((data.shape[0], a.cols, 4))
    for rr in range(a.rows):
        out += qmul(data[:, rr, None, :], a.data[None, rr, :, :])
    return [FVector(field, out[:, j, :]) for j in range(a.cols)]


def unitary_from_random(field: Field, n: int, rng: np.random.Generator) -> FMat:
    """A Haar-style unitary obtained by orthonormalizing a Gaussian matrix."""
    for _ in range(32):
        g = random_scalars(field, (n, n), rng)
        q, _, ok = gram_schmidt(g, field)
        if ok:
            return FMat(field, q)
    raise FieldMismatch("failed to draw a full-rank Gaussian matrix")
