"""Closed-form singular values and condition numbers of 2x2 and 3x3 matrices."""

from __future__ import annotations

import math

import numpy as np

from .errors import NonFinite, ZeroMatrix

#: Rotation by +90 degrees in the plane.
E = np.array([[0.0, -1.0], [1.0, 0.0]])

EIG_CLAMP = 1e-12
SINGULAR_RATIO = 1e-14


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.shape not in ((2, 2), (3, 3)):
        raise ValueError(f"expected a 2x2 or 3x3 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite("matrix has non-finite entries")
    return a


def _sv2(a: np.ndarray) -> list[float]:
    # Split into a similarity and an anti-similarity part; the singular values
    # are the sum and difference of their scales.
    e = 0.5 * (a[0, 0] + a[1, 1])
    f = 0.5 * (a[0, 0] - a[1, 1])
    g = 0.5 * (a[1, 0] + a[0, 1])
    h = 0.5 * (a[1, 0] - a[0, 1])
    q = math.hypot(e, h)
    r = math.hypot(f, g)
    return [q + r, abs(q - r)]


def _sym3_eigenvalues(s: np.ndarray) -> list[float]:
    """Eigenvalues of a symmetric 3x3 matrix, descending, via the trigonometric cubic solution."""
    p1 = s[0, 1] ** 2 + s[0, 2] ** 2 + s[1, 2] ** 2
    q = (s[0, 0] + s[1, 1] + s[2, 2]) / 3.0
    if p1 == 0.0:
        return sorted((s[0, 0], s[1, 1], s[2, 2]), reverse=True)
    p2 = (s[0, 0] - q) ** 2 + (s[1, 1] - q) ** 2 + (s[2, 2] - q) ** 2 + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    bm = (s - q * np.eye(3)) / p
    r = 0.5 * float(np.linalg.det(bm))
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    e1 = q + 2.0 * p * math.cos(phi)
    e3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    return sorted((e1, e2, e3), reverse=True)


def _null_vector(s: np.ndarray) -> np.ndarray:
    """Unit vector closest to the kernel of a (nearly) rank-2 symmetric 3x3 matrix."""
    r = s
    cands = [np.cross(r[0], r[1]), np.cross(r[0], r[2]), np.cross(r[1], r[2])]
    best = max(cands, key=lambda v: float(v @ v))
    n = math.sqrt(float(best @ best))
    if n == 0.0:
        # Rank <= 1: any vector orthogonal to the nonzero row works.
        row = max(r, key=lambda v: float(v @ v))
        best = _orthogonal(row) if float(row @ row) > 0 else np.array([1.0, 0.0, 0.0])
        n = math.sqrt(float(best @ best))
    return best / n


def _orthogonal(v: np.ndarray) -> np.ndarray:
    k = int(np.argmin(np.abs(v)))
    e = np.zeros(3)
    e[k] = 1.0
    w = np.cross(v, e)
    return w / math.sqrt(float(w @ w))


def _sv3(a: np.ndarray) -> list[float]:
    lam = [max(v, 0.0) for v in _sym3_eigenvalues(a @ a.T)]
    # The root farthest from the middle one has a well-conditioned eigenvector;
    # the other two singular values are then taken from M itself, projected onto
    # the complementary plane, so small values keep full precision.
    pick = lam[0] if lam[0] - lam[1] >= lam[1] - lam[2] else lam[2]
    u = _null_vector(a @ a.T - pick * np.eye(3))
    v = _orthogonal(u)
    w = np.cross(u, v)
    s_u = math.sqrt(float(np.sum((u @ a) ** 2)))
    n = np.vstack([v @ a, w @ a])
    # Rotate the columns of the 2x3 block so it becomes 2x2.
    i = 0 if n[0] @ n[0] >= n[1] @ n[1] else 1
    l1 = math.sqrt(float(n[i] @ n[i]))
    if l1 == 0.0:
        rest = [0.0, 0.0]
    else:
        q1 = n[i] / l1
        z = np.cross(n[0], n[1])
        lz = math.sqrt(float(z @ z))
        q2 = np.cross(z / lz, q1) if lz > 0.0 else _orthogonal(q1)
        rest = _sv2(np.column_stack([n @ q1, n @ q2]))
    return sorted([s_u] + rest, reverse=True)


def singular_values(m) -> list[float]:
    """Singular values of a 2x2 or 3x3 matrix in descending order."""
    a = _as_matrix(m)
    return _sv2(a) if a.shape == (2, 2) else _sv3(a)


def condition_number(m) -> float:
    """Ratio of the largest to the smallest singular value.

    Returns ``math.inf`` when the smallest singular value is at most
    ``1e-14`` times the largest. Raises :class:`ZeroMatrix` for the zero matrix.
    """
    sv = singular_values(m)
    smax, smin = sv[0], sv[-1]
    if smax == 0.0:
        raise ZeroMatrix("condition number of the zero matrix is undefined")
    if smin <= SINGULAR_RATIO * smax:
        return math.inf
    if smin == smax:
        return 1.0
    return max(1.0, smax / smin)
