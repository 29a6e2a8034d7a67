"""Division algebras R, C, H with conjugation, norms, and hermitian inner products.

Every scalar is stored as four real components (x0, x1, x2, x3); components
beyond the real dimension p of the field are identically zero, so a single
Hamilton-product code path serves all three fields.  The module exposes two
layers: batched component arrays of shape (..., 4) for numerical kernels, and
thin ``Scalar`` / ``FVector`` wrappers implementing the checked algebra.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DimensionMismatch, DivisionByZero, FieldMismatch

# default comparison tolerances used throughout the package
ATOL = 1e-12
RTOL = 1e-10


class Field(enum.Enum):
    """The scalar field: reals, complexes, or quaternions."""

    REAL = ("R", 1)
    COMPLEX = ("C", 2)
    QUATERNION = ("H", 4)

    def __init__(self, symbol: str, p: int):
        self.symbol = symbol
        self.p = p

    @classmethod
    def from_symbol(cls, symbol: str) -> "Field":
        for f in cls:
            if f.symbol == symbol:
                return f
        raise FieldMismatch(f"unknown field symbol {symbol!r}, expected R, C, or H")

    def __repr__(self):
        return f"Field.{self.name}"


FIELDS = (Field.REAL, Field.COMPLEX, Field.QUATERNION)


# ---------------------------------------------------------------------------
# batched component arrays, shape (..., 4)
# ---------------------------------------------------------------------------

def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product on component arrays; broadcasts like elementwise ops."""
    a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b0, b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=np.float64)
    out[..., 0] = a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3
    out[..., 1] = a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2
    out[..., 2] = a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1
    out[..., 3] = a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0
    return out


def qconj(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    out[..., 1:] = -out[..., 1:]
    return out


def qabs2(a: np.ndarray) -> np.ndarray:
    """Squared norm |a|^2, a real array of shape a.shape[:-1]."""
    return np.einsum("...c,...c->...", a, a)


def qabs(a: np.ndarray) -> np.ndarray:
    return np.sqrt(qabs2(a))


def qinv(a: np.ndarray) -> np.ndarray:
    n2 = qabs2(a)
    if np.any(n2 == 0.0):
        raise DivisionByZero("inverse of zero scalar")
    return qconj(a) / n2[..., None]


def qzeros(shape) -> np.ndarray:
    if isinstance(shape, int):
        shape = (shape,)
    return np.zeros(tuple(shape) + (4,), dtype=np.float64)


def random_scalars(field: Field, shape, rng: np.random.Generator) -> np.ndarray:
    """Standard Gaussian components within the field, zeros beyond p."""
    if isinstance(shape, int):
        shape = (shape,)
    out = qzeros(shape)
    out[..., : field.p] = rng.standard_normal(tuple(shape) + (field.p,))
    return out


def check_components(field: Field, a: np.ndarray, what: str = "scalar") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.shape[-1] != 4:
        raise DimensionMismatch(f"{what} must have 4 components, got {a.shape[-1]}")
    if field.p < 4 and np.any(a[..., field.p:] != 0.0):
        raise FieldMismatch(f"{what} has nonzero components outside {field.symbol}")
    return a


# ---------------------------------------------------------------------------
# checked value types
# ---------------------------------------------------------------------------

class Scalar:
    """An element of R, C, or H as a four-component record."""

    __slots__ = ("field", "data")

    def __init__(self, field: Field, components):
        self.field = field
        data = np.zeros(4, dtype=np.float64)
        components = np.atleast_1d(np.asarray(components, dtype=np.float64))
        data[: len(components)] = components
        self.data = check_components(field, data)
        self.data.flags.writeable = False

    @classmethod
    def of(cls, field: Field, x0=0.0, x1=0.0, x2=0.0, x3=0.0) -> "Scalar":
        return cls(field, (x0, x1, x2, x3))

    def _coerce(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            if other.field is not self.field:
                raise FieldMismatch(
                    f"cannot combine {self.field.symbol} and {other.field.symbol} scalars"
                )
            return other
        if isinstance(other, (int, float)):
            return Scalar.of(self.field, float(other))
        return NotImplemented

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Scalar(self.field, qmul(self.data, other.data))

    def __rmul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Scalar(self.field, qmul(other.data, self.data))

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Scalar(self.field, self.data + other.data)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Scalar(self.field, self.data - other.data)

    def __neg__(self):
        return Scalar(self.field, -self.data)

    def conj(self) -> "Scalar":
        return Scalar(self.field, qconj(self.data))

    def re(self) -> float:
        return float(self.data[0])

    def norm(self) -> float:
        return math.sqrt(float(qabs2(self.data)))

    def inv(self) -> "Scalar":
        n2 = float(qabs2(self.data))
        if n2 == 0.0:
            raise DivisionByZero("inverse of zero scalar")
        return Scalar(self.field, qconj(self.data) / n2)

    def isclose(self, other, atol=ATOL, rtol=RTOL) -> bool:
        other = self._coerce(other)
        return bool(np.allclose(self.data, other.data, atol=atol, rtol=rtol))

    def __repr__(self):
        return f"Scalar({self.field.symbol}, {self.data.tolist()})"


def scalar(field: Field, *components) -> Scalar:
    return Scalar(field, components)


def units(field: Field):
    """The basis scalars of the field: 1 for R; 1, i for C; 1, i, j, k for H."""
    basis = []
    for c in range(field.p):
        comp = [0.0] * 4
        comp[c] = 1.0
        basis.append(Scalar(field, comp))
    return basis


class FVector:
    """A vector in F^n with entries stored as an (n, 4) component array."""

    __slots__ = ("field", "data")

    def __init__(self, field: Field, data):
        self.field = field
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 1:  # real components packed flat only for F=R
            arr = np.stack(
                [arr, np.zeros_like(arr), np.zeros_like(arr), np.zeros_like(arr)], axis=-1
            )
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise DimensionMismatch(f"FVector data must be (n, 4), got {arr.shape}")
        self.data = check_components(field, arr, "vector entry")
        self.data.flags.writeable = False

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def entry(self, i: int) -> Scalar:
        return Scalar(self.field, self.data[i])

    def __add__(self, other: "FVector") -> "FVector":
        self._check_peer(other)
        return FVector(self.field, self.data + other.data)

    def __sub__(self, other: "FVector") -> "FVector":
        self._check_peer(other)
        return FVector(self.field, self.data - other.data)

    def __neg__(self) -> "FVector":
        return FVector(self.field, -self.data)

    def __mul__(self, a) -> "FVector":
        """Right scalar multiplication v * a (the module structure)."""
        if isinstance(a, (int, float)):
            return FVector(self.field, self.data * float(a))
        if isinstance(a, Scalar):
            if a.field is not self.field:
                raise FieldMismatch("scalar field differs from vector field")
            return FVector(self.field, qmul(self.data, a.data[None, :]))
        return NotImplemented

    def _check_peer(self, other: "FVector"):
        if not isinstance(other, FVector):
            raise DimensionMismatch("expected an FVector")
        if other.field is not self.field:
            raise FieldMismatch("vectors live over different fields")
        if other.n != self.n:
            raise DimensionMismatch(f"lengths differ: {self.n} vs {other.n}")

    def hermitian_inner(self, other: "FVector") -> Scalar:
        """(v, w) = sum conj(v_i) w_i, conjugate-linear in the first slot."""
        self._check_peer(other)
        prods = qmul(qconj(self.data), other.data)
        return Scalar(self.field, prods.sum(axis=0))

    def euclidean_inner(self, other: "FVector") -> float:
        self._check_peer(other)
        return float(np.dot(self.data.ravel(), other.data.ravel()))

    def norm(self) -> float:
        return float(np.sqrt(qabs2(self.data).sum()))

    def __repr__(self):
        return f"FVector({self.field.symbol}, n={self.n})"


def fvector(field: Field, entries) -> FVector:
    """Build an FVector from a list of per-entry component lists (or reals)."""
    rows = []
    for e in entries:
        comp = np.zeros(4)
        e = np.atleast_1d(np.asarray(e, dtype=np.float64))
        comp[: len(e)] = e
        rows.append(comp)
    return FVector(field, np.array(rows))


def hermitian_inner(v: FVector, w: FVector) -> Scalar:
    return v.hermitian_inner(w)


def euclidean_inner(v: FVector, w: FVector) -> float:
    return v.euclidean_inner(w)
