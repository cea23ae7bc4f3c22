"""Kinematics and conditioning of the three-dof hybrid manipulator.

The planar five-bar is carried by a base revolute whose axis is line AB (the
world Y axis). See :mod:`isocond.types` for the frame and angle naming.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyGenerator
from .fivebar import direct_kinematics, kappa_a
from .isocurves import DEFAULT_SAMPLES, IsoCurve, boundary_profile, check_level, iso_curve_cartesian
from .types import (
    SERIAL_TOL,
    AssemblyMode,
    Geometry,
    HybridPosture,
    Point3,
    WorkingMode,
    embed_point,
    unembed_point,
)

KAPPA_B_TOL = 1e-14


@dataclass(frozen=True)
class Jacobian3Pair:
    a: np.ndarray
    b: np.ndarray


class SingularityB3(enum.Enum):
    AXIS_D1_ZERO = "AxisD1Zero"
    LEG1_SERIAL = "Leg1Serial"
    LEG2_SERIAL = "Leg2Serial"

    def __str__(self):
        return self.value


def hybrid_forward(g: Geometry, theta1: float, theta2: float, theta3: float,
                   mode: AssemblyMode = AssemblyMode.PLUS) -> HybridPosture:
    """Base rotation ``theta1`` and actuated angles ``theta2`` (at A), ``theta3`` (at B)."""
    return HybridPosture(theta1, direct_kinematics(g, theta2, theta3, mode))


def _diag_terms(posture: HybridPosture, g: Geometry) -> tuple[float, float, float]:
    # Signed diagonal of B divided by l1*l2.
    return (
        math.sin(posture.theta2) + g.lambda1 * math.sin(posture.theta4),
        math.sin(posture.theta4 - posture.theta2),
        math.sin(posture.theta5 - posture.theta3),
    )


def jacobians3(posture: HybridPosture, g: Geometry) -> Jacobian3Pair:
    """Matrices A and B of A p_dot = B theta_dot, in the world frame.

    The passive-minus-actuated order of the two leg entries matches the
    planar matrix and makes the velocity identity hold with the angles
    measured counterclockwise in the moving plane.
    """
    p = np.array(posture.p3)
    c = np.array(posture.c3)
    d = np.array(posture.d3)
    k = np.array(posture.k)
    a = np.vstack([g.l2 * k, p - c, p - d])
    b = g.l1 * g.l2 * np.diag(_diag_terms(posture, g))
    return Jacobian3Pair(a, b)


def kappa_a3(posture: HybridPosture) -> float:
    """Same closed form as the planar direct-kinematics conditioning."""
    return kappa_a(posture.planar)


def betas(posture: HybridPosture, g: Geometry) -> tuple[float, float, float]:
    return tuple(abs(v) for v in _diag_terms(posture, g))


def kappa_b3(posture: HybridPosture, g: Geometry) -> float:
    """Ratio of the largest to the smallest of the three betas."""
    bs = betas(posture, g)
    lo, hi = min(bs), max(bs)
    if lo < KAPPA_B_TOL:
        return math.inf
    return hi / lo


def axis_distances(posture: HybridPosture, g: Geometry) -> tuple[float, float, float]:
    """(d1, d2, d3): d1 is the distance from P to the base axis; d2, d3 are l2 * beta2, l2 * beta3."""
    b1 = math.sin(posture.theta2) * g.l1 + g.l2 * math.sin(posture.theta4)
    return (
        abs(b1),
        g.l2 * abs(math.sin(posture.theta2 - posture.theta4)),
        g.l2 * abs(math.sin(posture.theta3 - posture.theta5)),
    )


def equidistance_gap(posture: HybridPosture, g: Geometry) -> float:
    """Spread max(d) - min(d) of the three axis distances.

    On the isotropy locus of B (equal betas) this vanishes only when l1 == l2,
    since d1 = l1 * beta1 while d2, d3 carry the factor l2.
    """
    ds = axis_distances(posture, g)
    return max(ds) - min(ds)


def singularity_flags_b3(posture: HybridPosture) -> frozenset[SingularityB3]:
    # beta1 = sin t2 + lambda1 sin t4 = py / l1, and |C| = l1.
    l1 = math.hypot(*posture.planar.c)
    flags = set()
    if abs(posture.planar.p[1] / l1) < SERIAL_TOL:
        flags.add(SingularityB3.AXIS_D1_ZERO)
    if abs(math.sin(posture.theta2 - posture.theta4)) < SERIAL_TOL:
        flags.add(SingularityB3.LEG1_SERIAL)
    if abs(math.sin(posture.theta3 - posture.theta5)) < SERIAL_TOL:
        flags.add(SingularityB3.LEG2_SERIAL)
    return frozenset(flags)


def velocity_forward3(posture: HybridPosture, g: Geometry, theta_dot) -> np.ndarray:
    jp = jacobians3(posture, g)
    return np.linalg.solve(jp.a, jp.b @ np.asarray(theta_dot, dtype=float))


# ---------------------------------------------------------------------------
# surfaces of revolution


@dataclass(frozen=True)
class IsoSurface:
    """Triangle mesh swept by revolving planar generator curves about line AB."""

    kappa: float
    vertices: np.ndarray
    triangles: np.ndarray
    generators: tuple[IsoCurve, ...]
    theta1_range: tuple[float, float]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


def revolve(generators: list[IsoCurve], theta1_range: tuple[float, float],
            samples_revolution: int, kappa: float = math.nan,
            axis_tol: float = 0.0) -> IsoSurface:
    """Sweep planar polylines about the Y axis into one quad-strip mesh.

    A full turn reuses the first ring as the last, so the seam is shared
    exactly. Generator vertices on the axis collapse to a single vertex.
    """
    t0, t1 = map(float, theta1_range)
    width = t1 - t0
    full = width >= 2.0 * math.pi - 1e-12
    if width == 0.0:
        angles = [t0]
    elif full:
        angles = [t0 + 2.0 * math.pi * i / samples_revolution for i in range(samples_revolution)]
    else:
        n = max(samples_revolution, 2)
        angles = [t0 + width * i / (n - 1) for i in range(n)]
    nr = len(angles)

    verts: list[Point3] = []
    tris: list[tuple[int, int, int]] = []
    for curve in generators:
        ring_ids = []
        for px, py in curve.points:
            if abs(py) <= axis_tol:
                idx = len(verts)
                verts.append(embed_point((px, 0.0), t0))
                ring_ids.append([idx] * nr)
            else:
                base = len(verts)
                verts.extend(embed_point((px, py), a) for a in angles)
                ring_ids.append(list(range(base, base + nr)))
        m = len(ring_ids)
        if nr < 2 or m < 2:
            continue
        pairs = [(i, i + 1) for i in range(m - 1)]
        if curve.closed and m > 2:
            pairs.append((m - 1, 0))
        steps = nr if full else nr - 1
        for i, j in pairs:
            ri, rj = ring_ids[i], ring_ids[j]
            for s in range(steps):
                s2 = (s + 1) % nr
                a, b, c, d = ri[s], rj[s], rj[s2], ri[s2]
                if a != b and b != c and a != c:
                    tris.append((a, b, c))
                if a != c and c != d and a != d:
                    tris.append((a, c, d))
    return IsoSurface(
        kappa,
        np.asarray(verts, dtype=float).reshape(-1, 3),
        np.asarray(tris, dtype=np.int64).reshape(-1, 3),
        tuple(generators),
        (t0, t1),
    )


def iso_surface(g: Geometry, kappa_target: float, wm: WorkingMode,
                theta1_range: tuple[float, float] = (0.0, 2.0 * math.pi),
                samples_curve: int = DEFAULT_SAMPLES, samples_revolution: int = 72,
                chord_tol: float | None = None) -> IsoSurface:
    """Isoconditioning surface of A for the hybrid manipulator in working mode ``wm``.

    ``chord_tol`` is passed to the curve tracer; a coarser value gives a
    lighter mesh.
    """
    k = check_level(kappa_target)
    curves = iso_curve_cartesian(g, k, wm, samples=samples_curve, chord_tol=chord_tol)
    if not curves:
        raise EmptyGenerator(f"no isoconditioning curve at kappa={k:g} in mode {wm}")
    return revolve(curves, theta1_range, samples_revolution, kappa=k)


def workspace_boundary_surface(g: Geometry, samples: int = 128, samples_revolution: int = 72) -> IsoSurface:
    """Boundary of the hybrid workspace: the upper planar boundary profile revolved a full turn."""
    profile = boundary_profile(g, samples)
    return revolve(profile, (0.0, 2.0 * math.pi), samples_revolution, kappa=math.inf, axis_tol=0.0)


def to_reference_plane(p3, theta1: float):
    """Rotate a world point by ``-theta1`` about the base axis into planar coordinates."""
    return unembed_point(p3, theta1)


def profile_coordinates(vertices: np.ndarray) -> np.ndarray:
    """(axial, radial) coordinates of world points: (Y, sqrt(X^2 + Z^2))."""
    v = np.asarray(vertices, dtype=float)
    return np.column_stack([v[:, 1], np.hypot(v[:, 0], v[:, 2])])
