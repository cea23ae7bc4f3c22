"""Position and velocity kinematics of the symmetric planar five-bar."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoAssembly, OnSerialSingularity, ParallelSingular, SingularAssembly, Unreachable
from .linalg import condition_number
from .types import (
    ALL_MODES,
    SERIAL_TOL,
    AssemblyMode,
    Geometry,
    PlanarPosture,
    Point2,
    WorkingMode,
)

#: Relative distance tolerance used to snap points onto the annulus boundary.
REACH_TOL = 1e-12
#: Relative tolerance (times l2) for coincident C, D or flattened distal links.
ASSEMBLY_TOL = 1e-9
KAPPA_B_TOL = 1e-14


@dataclass(frozen=True)
class JacobianPair:
    """Direct-kinematics matrix ``a`` and diagonal inverse-kinematics matrix ``b``."""

    a: np.ndarray
    b: np.ndarray


def direct_kinematics(g: Geometry, theta1: float, theta2: float,
                      mode: AssemblyMode = AssemblyMode.PLUS) -> PlanarPosture:
    """Posture for the actuated angles, on the side of CD selected by ``mode``."""
    mode = AssemblyMode(mode)
    c = (g.l1 * math.cos(theta1), g.l1 * math.sin(theta1))
    d = (g.l0 + g.l1 * math.cos(theta2), g.l1 * math.sin(theta2))
    vx, vy = d[0] - c[0], d[1] - c[1]
    s = math.hypot(vx, vy)
    tol = ASSEMBLY_TOL * g.l2
    if s < tol:
        raise SingularAssembly("C and D coincide; P is indeterminate")
    if s > 2.0 * g.l2 + tol:
        raise NoAssembly(f"|CD| = {s:.6g} exceeds 2*l2 = {2 * g.l2:.6g}")
    if abs(s - 2.0 * g.l2) <= tol:
        raise SingularAssembly("distal links are flattened; both assembly modes coincide")
    half = 0.5 * s
    h = math.sqrt((g.l2 - half) * (g.l2 + half))
    # Unit normal to CD, rotated +90 degrees, gives the PLUS side.
    nx, ny = -vy / s, vx / s
    sgn = int(mode)
    p = (c[0] + 0.5 * vx + sgn * h * nx, c[1] + 0.5 * vy + sgn * h * ny)
    theta3 = math.atan2(p[1] - c[1], p[0] - c[0])
    theta4 = math.atan2(p[1] - d[1], p[0] - d[0])
    return PlanarPosture(theta1, theta2, theta3, theta4, p, c, d)


def assembly_mode_of(posture: PlanarPosture) -> AssemblyMode:
    cx, cy = posture.c
    dx, dy = posture.d
    px, py = posture.p
    cross = (dx - cx) * (py - cy) - (dy - cy) * (px - cx)
    return AssemblyMode.PLUS if cross >= 0 else AssemblyMode.MINUS


def _leg(base: Point2, p: Point2, l1: float, l2: float, sign: int):
    """Solve one leg: actuated angle, passive angle and elbow position.

    ``sign`` is the requested sign of sin(passive - actuated). Returns None
    when P is out of reach of this leg.
    """
    vx, vy = p[0] - base[0], p[1] - base[1]
    rho = math.hypot(vx, vy)
    phi = math.atan2(vy, vx)
    a, b, c = sorted((l1, l2, rho), reverse=True)
    # Kahan's ordering keeps the triangle-area factors accurate near degeneracy.
    slack = c - (a - b)
    tol = REACH_TOL * (l1 + l2)
    if slack < -tol:
        return None
    if slack < tol:
        slack = 0.0
    q = (a + (b + c)) * slack * (c + (a - b)) * (a + (b - c))
    four_area = math.sqrt(max(q, 0.0))
    alpha = math.atan2(four_area, l1 * l1 + rho * rho - l2 * l2)
    t_act = phi - sign * alpha
    elbow = (base[0] + l1 * math.cos(t_act), base[1] + l1 * math.sin(t_act))
    t_pass = math.atan2(p[1] - elbow[1], p[0] - elbow[0])
    return t_act, t_pass, elbow


def _ik_posture(g: Geometry, p: Point2, wm: WorkingMode):
    leg_a = _leg((0.0, 0.0), p, g.l1, g.l2, wm.sign_a)
    leg_b = _leg(g.b, p, g.l1, g.l2, wm.sign_b)
    if leg_a is None or leg_b is None:
        return None
    t1, t3, c = leg_a
    t2, t4, d = leg_b
    return PlanarPosture(t1, t2, t3, t4, (float(p[0]), float(p[1])), c, d)


def inverse_kinematics(g: Geometry, p: Point2, wm: WorkingMode) -> PlanarPosture:
    """The unique posture reaching ``p`` in working mode ``wm``.

    Raises :class:`Unreachable` outside the workspace and
    :class:`OnSerialSingularity` (with the degenerate posture attached) when
    ``p`` lies on the boundary between working modes.
    """
    posture = _ik_posture(g, p, wm)
    if posture is None:
        raise Unreachable(f"point {tuple(p)} is outside the workspace")
    if min(abs(posture.sin_a), abs(posture.sin_b)) < SERIAL_TOL:
        raise OnSerialSingularity(f"point {tuple(p)} is on a serial singularity", posture)
    return posture


def all_inverse_solutions(g: Geometry, p: Point2) -> list[tuple[WorkingMode, PlanarPosture]]:
    """Every nonsingular inverse-kinematic solution, one per working mode."""
    out = []
    for wm in ALL_MODES:
        try:
            out.append((wm, inverse_kinematics(g, p, wm)))
        except (Unreachable, OnSerialSingularity):
            continue
    return out


def jacobians(posture: PlanarPosture, g: Geometry) -> JacobianPair:
    px, py = posture.p
    cx, cy = posture.c
    dx, dy = posture.d
    a = np.array([[px - cx, py - cy], [px - dx, py - dy]])
    k = g.l1 * g.l2
    b = np.array([[k * posture.sin_a, 0.0], [0.0, k * posture.sin_b]])
    return JacobianPair(a, b)


def kappa_from_delta(delta: float) -> float:
    """Condition number of the direct-kinematics matrix from the locked angle t3 - t4.

    Equals 1/|tan(delta/2)| once delta is folded into [0, pi/2]; the fold
    makes the value depend only on |cos delta|.
    """
    f = math.fmod(abs(delta), math.pi)
    f = min(f, math.pi - f)
    t = math.tan(0.5 * f)
    if t == 0.0:
        return math.inf
    return max(1.0, 1.0 / t)


def kappa_a(posture: PlanarPosture) -> float:
    return kappa_from_delta(posture.theta3 - posture.theta4)


def _kappa_b_from_betas(b1: float, b2: float) -> float:
    lo, hi = (b1, b2) if b1 < b2 else (b2, b1)
    if lo < KAPPA_B_TOL:
        return math.inf
    return math.sqrt(hi / lo)


def kappa_b(posture: PlanarPosture, g: Geometry | None = None) -> float:
    """The inverse-kinematics conditioning sqrt(beta_max / beta_min).

    Note this is the square root of ``condition_number(B)``: the betas are
    already the singular values of B up to the factor l1*l2. Both versions
    agree on the isotropy (1) and singularity (inf) loci.
    """
    return _kappa_b_from_betas(abs(posture.sin_a), abs(posture.sin_b))


def condition_number_b(posture: PlanarPosture, g: Geometry) -> float:
    """Plain singular-value ratio of B, i.e. ``kappa_b(posture) ** 2``."""
    return condition_number(jacobians(posture, g).b)


def working_mode_of(posture: PlanarPosture) -> WorkingMode:
    return WorkingMode.from_sines(posture.sin_a, posture.sin_b)


def workspace_contains(g: Geometry, p: Point2) -> bool:
    """True iff ``p`` lies in both annuli centred at A and B (boundary included)."""
    tol = REACH_TOL * (g.l1 + g.l2)
    lo, hi = g.inner_radius - tol, g.outer_radius + tol
    ra = math.hypot(p[0], p[1])
    rb = math.hypot(p[0] - g.l0, p[1])
    return lo <= ra <= hi and lo <= rb <= hi


def velocity_forward(posture: PlanarPosture, g: Geometry, theta_dot) -> np.ndarray:
    """Cartesian velocity of P for actuated rates ``theta_dot``: A^-1 B theta_dot."""
    if math.isinf(kappa_a(posture)):
        raise ParallelSingular("direct-kinematics matrix is singular")
    jp = jacobians(posture, g)
    try:
        return np.linalg.solve(jp.a, jp.b @ np.asarray(theta_dot, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise ParallelSingular(str(exc)) from None


def velocity_inverse(posture: PlanarPosture, g: Geometry, p_dot) -> np.ndarray:
    """Actuated rates producing ``p_dot``: B^-1 A p_dot."""
    jp = jacobians(posture, g)
    if min(abs(posture.sin_a), abs(posture.sin_b)) < SERIAL_TOL:
        raise OnSerialSingularity("inverse-kinematics matrix is singular", posture)
    return np.diag(1.0 / np.diag(jp.b)) @ (jp.a @ np.asarray(p_dot, dtype=float))


def mirror_posture(posture: PlanarPosture, g: Geometry) -> PlanarPosture:
    """Reflect a posture about the line x = l0/2; the two legs swap roles."""
    def m(pt):
        return (g.l0 - pt[0], pt[1])

    return PlanarPosture(
        math.pi - posture.theta2,
        math.pi - posture.theta1,
        math.pi - posture.theta4,
        math.pi - posture.theta3,
        m(posture.p),
        m(posture.d),
        m(posture.c),
    )
