import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from isocond.errors import NonFinite, ZeroMatrix
from isocond.linalg import E, condition_number, singular_values


def jacobi_singular_values(m, sweeps=30):
    """One-sided Jacobi SVD on a stack of square matrices (independent oracle)."""
    a = np.array(m, dtype=float, copy=True)
    n = a.shape[-1]
    for _ in range(sweeps):
        for i in range(n - 1):
            for j in range(i + 1, n):
                ai, aj = a[..., :, i], a[..., :, j]
                alpha = (ai * ai).sum(-1)
                beta = (aj * aj).sum(-1)
                gamma = (ai * aj).sum(-1)
                with np.errstate(divide="ignore", invalid="ignore"):
                    zeta = (beta - alpha) / (2 * gamma)
                    t = np.sign(zeta) / (np.abs(zeta) + np.sqrt(1 + zeta * zeta))
                t = np.where(np.abs(gamma) > 1e-300, np.where(zeta == 0, 1.0, t), 0.0)
                c = 1 / np.sqrt(1 + t * t)
                s = c * t
                new_i = c[..., None] * ai - s[..., None] * aj
                new_j = s[..., None] * ai + c[..., None] * aj
                a[..., :, i], a[..., :, j] = new_i, new_j
    sv = np.sqrt((a * a).sum(-2))
    return -np.sort(-sv, axis=-1)


def test_identity():
    assert singular_values(np.eye(2)) == [1.0, 1.0]
    assert singular_values(np.eye(3)) == pytest.approx([1, 1, 1], abs=1e-15)
    assert condition_number(np.eye(2)) == 1.0
    assert condition_number(np.eye(3)) == 1.0


def test_diagonal_absolute_values():
    assert singular_values(np.diag([3.0, -4.0])) == pytest.approx([4, 3], abs=1e-15)
    assert singular_values(np.diag([1.0, -7.0, 2.0])) == pytest.approx([7, 2, 1], abs=1e-14)


def test_singular_is_infinite():
    assert condition_number(np.diag([2.0, 0.0])) == math.inf
    assert condition_number(np.diag([2.0, 1.0, 0.0])) == math.inf


def test_locked_angle_example():
    # A has unit rows at relative angle pi/3: A A^T = [[1, .5], [.5, 1]].
    a = np.array([[1.0, 0.0], [math.cos(math.pi / 3), math.sin(math.pi / 3)]])
    sv = singular_values(a)
    assert sv == pytest.approx([math.sqrt(1.5), math.sqrt(0.5)], abs=1e-15)
    assert condition_number(a) == pytest.approx(math.sqrt(3), abs=1e-14)
    assert condition_number(a) == pytest.approx(1 / math.tan(math.pi / 6), abs=1e-14)


def test_rotation_matrix_e():
    assert singular_values(E) == [1.0, 1.0]
    assert np.array_equal(E @ E, -np.eye(2))


def test_errors():
    with pytest.raises(ZeroMatrix):
        condition_number(np.zeros((2, 2)))
    with pytest.raises(NonFinite):
        singular_values([[1.0, math.nan], [0.0, 1.0]])
    with pytest.raises(ValueError):
        singular_values(np.eye(4))


@pytest.mark.parametrize("size", [2, 3])
def test_against_jacobi_oracle(size, rng):
    ms = rng.normal(size=(100_000, size, size)) * rng.uniform(0.01, 100, size=(100_000, 1, 1))
    ref = jacobi_singular_values(ms)
    got = np.array([singular_values(m) for m in ms])
    err = np.max(np.abs(got - ref) / ref[:, :1])
    assert err <= 1e-10


def test_jacobi_oracle_agrees_with_lapack(rng):
    ms = rng.normal(size=(1000, 3, 3))
    assert np.allclose(jacobi_singular_values(ms), np.linalg.svd(ms, compute_uv=False), rtol=1e-12, atol=1e-13)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@given(arrays(np.float64, (3, 3), elements=finite), st.floats(-3, 3))
def test_orthogonal_invariance(m, t):
    if np.abs(m).max() == 0:
        return
    c, s = math.cos(t), math.sin(t)
    q = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    a = np.array(singular_values(m))
    b = np.array(singular_values(q @ m @ q.T))
    assert np.allclose(a, b, atol=1e-9 * a[0])


@given(arrays(np.float64, (2, 2), elements=finite), st.floats(1e-3, 1e3))
def test_condition_number_scale_free(m, c):
    if np.abs(m).max() == 0:
        return
    k1, k2 = condition_number(m), condition_number(c * m)
    if math.isinf(k1) or math.isinf(k2) or k1 > 1e8:
        return
    assert k2 == pytest.approx(k1, rel=1e-9)
    assert k1 >= 1.0


@given(arrays(np.float64, (3, 3), elements=finite))
def test_descending_nonnegative(m):
    sv = singular_values(m)
    assert all(v >= 0 for v in sv)
    assert sv[0] >= sv[1] >= sv[2]
