import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcglab.errors import DimensionMismatch, DivisionByZero, FieldMismatch
from bcglab.scalars import (
    FIELDS,
    Field,
    FVector,
    Scalar,
    fvector,
    qabs,
    qabs2,
    qconj,
    qmul,
    random_scalars,
    units,
)

H = Field.QUATERNION
C = Field.COMPLEX
R = Field.REAL


def test_multiplication_table():
    one, i, j, k = units(H)
    assert (i * j).isclose(k)
    assert (j * k).isclose(i)
    assert (k * i).isclose(j)
    for unit in (i, j, k):
        assert (unit * unit).isclose(-one)
    assert (i * j * k).isclose(-one)
    assert (i * j * k).re() == -1.0


def test_distributivity_example():
    one, i, j, k = units(H)
    assert ((one + i) * j).isclose(j + k)


def test_inverse_law():
    rng = np.random.default_rng(0)
    for field in FIELDS:
        for _ in range(50):
            a = Scalar(field, random_scalars(field, (), rng))
            if a.norm() < 1e-6:
                continue
            assert (a * a.inv()).isclose(Scalar.of(field, 1.0))
            assert (a.inv() * a).isclose(Scalar.of(field, 1.0))


def test_conj_antihomomorphism_example():
    one, i, j, k = units(H)
    lhs = ((one + i) * j).conj()
    rhs = j.conj() * (one + i).conj()
    assert lhs.isclose(rhs)
    assert lhs.isclose(-j - k)


def test_norm_example():
    assert Scalar(H, (1, 1, 1, 1)).norm() == pytest.approx(2.0, abs=1e-15)


def test_real_part_identity_exact():
    rng = np.random.default_rng(1)
    a = random_scalars(H, (1000,), rng)
    lhs = a + qconj(a)
    assert np.all(lhs[:, 1:] == 0.0)
    assert np.array_equal(lhs[:, 0], 2.0 * a[:, 0])


def test_associativity_bulk():
    rng = np.random.default_rng(2)
    for field in FIELDS:
        a = random_scalars(field, (10_000,), rng)
        b = random_scalars(field, (10_000,), rng)
        c = random_scalars(field, (10_000,), rng)
        lhs = qmul(qmul(a, b), c)
        rhs = qmul(a, qmul(b, c))
        scale = np.maximum(qabs(lhs), 1e-30)
        assert np.max(qabs(lhs - rhs) / scale) < 1e-12


def test_conj_and_norm_multiplicativity_bulk():
    rng = np.random.default_rng(3)
    a = random_scalars(H, (10_000,), rng)
    b = random_scalars(H, (10_000,), rng)
    ab = qmul(a, b)
    rel = qabs(qconj(ab) - qmul(qconj(b), qconj(a))) / np.maximum(qabs(ab), 1e-30)
    assert np.max(rel) < 1e-12
    rel_norm = np.abs(qabs(ab) - qabs(a) * qabs(b)) / np.maximum(qabs(ab), 1e-30)
    assert np.max(rel_norm) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=8, max_size=8))
def test_norm_multiplicative_hypothesis(vals):
    a = np.array(vals[:4])
    b = np.array(vals[4:])
    prod = qmul(a, b)
    assert float(qabs2(prod)) == pytest.approx(
        float(qabs2(a)) * float(qabs2(b)), rel=1e-10, abs=1e-12
    )


def test_field_mismatch_and_zero_inverse():
    with pytest.raises(FieldMismatch):
        Scalar(C, (1, 0, 1, 0))
    with pytest.raises(FieldMismatch):
        _ = Scalar.of(C, 1.0) * Scalar.of(H, 1.0)
    with pytest.raises(DivisionByZero):
        Scalar.of(H, 0.0).inv()


def test_hermitian_inner_basics():
    e1 = fvector(C, [[1, 0], [0, 0]])
    e2 = fvector(C, [[0, 0], [1, 0]])
    assert e1.hermitian_inner(e2).norm() == 0.0
    rng = np.random.default_rng(4)
    for field in FIELDS:
        v = FVector(field, random_scalars(field, (3,), rng))
        ip = v.hermitian_inner(v)
        assert ip.data[1:].max() == pytest.approx(0.0, abs=1e-15)
        assert ip.re() >= 0.0
        zero = FVector(field, np.zeros((3, 4)))
        assert zero.hermitian_inner(zero).norm() == 0.0
        a = Scalar(field, random_scalars(field, (), rng))
        assert (v * a).norm() == pytest.approx(a.norm() * v.norm(), rel=1e-12)


def test_scaled_euclidean_inner():
    # <xw, yw> = |w|^2 <x, y>, checked against brute-force component sums
    rng = np.random.default_rng(5)
    for field in FIELDS:
        for _ in range(100):
            x = random_scalars(field, (), rng)
            y = random_scalars(field, (), rng)
            w = random_scalars(field, (), rng)
            lhs = float(qmul(qconj(qmul(x, w)), qmul(y, w))[0])
            rhs = float(qabs2(w)) * float(np.dot(x, y))
            assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-12)


def test_vector_dimension_mismatch():
    v = fvector(R, [1.0, 2.0])
    w = fvector(R, [1.0, 2.0, 3.0])
    with pytest.raises(DimensionMismatch):
        v.hermitian_inner(w)
