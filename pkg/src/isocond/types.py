"""Domain types and frame conventions shared by the whole package.

Planar frame
------------
The fixed pivot A sits at the origin and B at ``(l0, 0)``. Every angle is
absolute, measured counterclockwise from the +x axis::

    C = l1 * (cos t1, sin t1)
    D = B + l1 * (cos t2, sin t2)
    P = C + l2 * (cos t3, sin t3) = D + l2 * (cos t4, sin t4)

Hybrid frame
------------
The base revolute turns the whole five-bar about line AB, which is the world
Y axis. Planar x (along AB) maps to world Y and planar y to the radial
direction ``(cos t, 0, -sin t)``, so a planar point ``(px, py)`` lands at
``(py cos t, px, -py sin t)``. The planar normal maps to
``k = (-sin t, 0, -cos t)``, which keeps the planar orientation and makes
``k . dp/dt = py``.

Hybrid angle naming (matches the planar naming shifted by one)::

    hybrid   t1      t2  t3  t4  t5
    planar   (base)  t1  t2  t3  t4
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import InvalidGeometry, NegativeBase, NonFinite, NonPositiveLink, OnSerialSingularity

Point2 = tuple[float, float]
Point3 = tuple[float, float, float]

#: |sin| threshold below which a leg counts as serially singular.
SERIAL_TOL = 1e-12


def normalize_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.remainder(a, 2.0 * math.pi)
    if r <= -math.pi:
        r += 2.0 * math.pi
    return r


@dataclass(frozen=True)
class Geometry:
    """Link lengths of the symmetric five-bar (``l3 == l1``, ``l4 == l2``).

    ``l0 == 0`` is accepted but pathological: both base pivots coincide.
    """

    l0: float
    l1: float
    l2: float

    def __post_init__(self):
        for name in ("l0", "l1", "l2"):
            try:
                v = float(getattr(self, name))
            except (TypeError, ValueError):
                raise InvalidGeometry(f"{name} must be a number, got {getattr(self, name)!r}") from None
            if not math.isfinite(v):
                raise NonFinite(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.l1 <= 0 or self.l2 <= 0:
            raise NonPositiveLink(f"l1 and l2 must be positive, got l1={self.l1}, l2={self.l2}")
        if self.l0 < 0:
            raise NegativeBase(f"l0 must be nonnegative, got {self.l0}")

    @property
    def l3(self) -> float:
        return self.l1

    @property
    def l4(self) -> float:
        return self.l2

    @property
    def lambda1(self) -> float:
        return self.l2 / self.l1

    @property
    def b(self) -> Point2:
        return (self.l0, 0.0)

    @property
    def inner_radius(self) -> float:
        return abs(self.l1 - self.l2)

    @property
    def outer_radius(self) -> float:
        return self.l1 + self.l2

    def scaled(self, c: float) -> "Geometry":
        return Geometry(self.l0 * c, self.l1 * c, self.l2 * c)

    def to_dict(self) -> dict:
        return {"l0": self.l0, "l1": self.l1, "l2": self.l2}


def validate_geometry(g) -> Geometry:
    """Return ``g`` as a checked :class:`Geometry`.

    Accepts a Geometry, a mapping with ``l0/l1/l2`` keys or a 3-sequence.
    """
    if isinstance(g, Geometry):
        return g
    if isinstance(g, dict):
        try:
            return Geometry(g["l0"], g["l1"], g["l2"])
        except KeyError as exc:
            raise InvalidGeometry(f"missing key {exc.args[0]!r}") from None
    try:
        l0, l1, l2 = g
    except (TypeError, ValueError):
        raise InvalidGeometry(f"cannot interpret {g!r} as a geometry") from None
    return Geometry(l0, l1, l2)


def load_geometry(path: str | Path) -> Geometry:
    """Load a geometry from a JSON document ``{"l0": .., "l1": .., "l2": ..}``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidGeometry("geometry JSON must be an object")
    return validate_geometry(data)


class AssemblyMode(enum.IntEnum):
    """Direct-kinematics branch: sign of (D - C) x (P - C)."""

    PLUS = 1
    MINUS = -1

    @classmethod
    def parse(cls, s) -> "AssemblyMode":
        if isinstance(s, str):
            s = s.strip()
            if s in ("+", "+1", "1"):
                return cls.PLUS
            if s in ("-", "-1"):
                return cls.MINUS
            raise ValueError(f"assembly mode must be '+' or '-', got {s!r}")
        return cls(int(s))

    def __str__(self):
        return "+" if self is AssemblyMode.PLUS else "-"


@dataclass(frozen=True, order=True)
class WorkingMode:
    """Sign pair of the diagonal entries of the inverse-kinematics matrix.

    ``sign_a`` is the sign of sin(t3 - t1), ``sign_b`` that of sin(t4 - t2).
    """

    sign_a: int
    sign_b: int

    def __post_init__(self):
        if self.sign_a not in (1, -1) or self.sign_b not in (1, -1):
            raise ValueError(f"working-mode signs must be +1 or -1, got {self.sign_a}, {self.sign_b}")

    @classmethod
    def parse(cls, s: str) -> "WorkingMode":
        s = s.strip()
        if len(s) != 2 or any(ch not in "+-" for ch in s):
            raise ValueError(f"working mode must be two signs like '-+', got {s!r}")
        return cls(1 if s[0] == "+" else -1, 1 if s[1] == "+" else -1)

    @classmethod
    def from_sines(cls, sin_a: float, sin_b: float, tol: float = SERIAL_TOL) -> "WorkingMode":
        if min(abs(sin_a), abs(sin_b)) < tol:
            raise OnSerialSingularity(
                f"working mode undefined: sin terms {sin_a:.3e}, {sin_b:.3e} below {tol:g}"
            )
        return cls(1 if sin_a > 0 else -1, 1 if sin_b > 0 else -1)

    def mirrored(self) -> "WorkingMode":
        """Mode of the mirror posture about the line x = l0/2 (legs swap)."""
        return WorkingMode(-self.sign_b, -self.sign_a)

    def __str__(self):
        return ("+" if self.sign_a > 0 else "-") + ("+" if self.sign_b > 0 else "-")


ALL_MODES = tuple(WorkingMode.parse(s) for s in ("++", "+-", "-+", "--"))


@dataclass(frozen=True)
class PlanarPosture:
    """Full configuration of the planar five-bar.

    Angles are normalized to (-pi, pi] on construction. ``c`` and ``d`` are
    the positions of the elbows C and D.
    """

    theta1: float
    theta2: float
    theta3: float
    theta4: float
    p: Point2
    c: Point2
    d: Point2

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3", "theta4"):
            object.__setattr__(self, name, normalize_angle(float(getattr(self, name))))
        for name in ("p", "c", "d"):
            x, y = getattr(self, name)
            object.__setattr__(self, name, (float(x), float(y)))

    @property
    def sin_a(self) -> float:
        return math.sin(self.theta3 - self.theta1)

    @property
    def sin_b(self) -> float:
        return math.sin(self.theta4 - self.theta2)

    @property
    def delta(self) -> float:
        """Relative angle t3 - t4 of the distal links, wrapped to (-pi, pi]."""
        return normalize_angle(self.theta3 - self.theta4)


def make_posture(g: Geometry, theta1: float, theta2: float, theta3: float, theta4: float,
                 tol: float = 1e-9) -> PlanarPosture:
    """Build a posture from its four angles, checking loop closure."""
    c = (g.l1 * math.cos(theta1), g.l1 * math.sin(theta1))
    d = (g.l0 + g.l1 * math.cos(theta2), g.l1 * math.sin(theta2))
    p1 = (c[0] + g.l2 * math.cos(theta3), c[1] + g.l2 * math.sin(theta3))
    p2 = (d[0] + g.l2 * math.cos(theta4), d[1] + g.l2 * math.sin(theta4))
    gap = math.hypot(p1[0] - p2[0], p1[1] - p2[1])
    if gap > tol * g.l2:
        raise InvalidGeometry(f"angles do not close the loop (gap {gap:.3e})")
    p = (0.5 * (p1[0] + p2[0]), 0.5 * (p1[1] + p2[1]))
    return PlanarPosture(theta1, theta2, theta3, theta4, p, c, d)


def closure_error(posture: PlanarPosture, g: Geometry) -> float:
    """Largest violation among the loop-closure and link-length invariants."""
    t1, t2, t3, t4 = posture.theta1, posture.theta2, posture.theta3, posture.theta4
    cx, cy = g.l1 * math.cos(t1), g.l1 * math.sin(t1)
    dx, dy = g.l0 + g.l1 * math.cos(t2), g.l1 * math.sin(t2)
    loop = math.hypot(cx + g.l2 * math.cos(t3) - dx - g.l2 * math.cos(t4),
                      cy + g.l2 * math.sin(t3) - dy - g.l2 * math.sin(t4))
    px, py = posture.p
    return max(
        loop,
        abs(math.hypot(px - cx, py - cy) - g.l2),
        abs(math.hypot(px - dx, py - dy) - g.l2),
    )


def embed_point(p: Sequence[float], theta1: float) -> Point3:
    """Map a planar point into the world frame after a base rotation ``theta1``."""
    px, py = p
    return (py * math.cos(theta1), px, -py * math.sin(theta1))


def unembed_point(p3: Sequence[float], theta1: float) -> Point2:
    """Inverse of :func:`embed_point`."""
    x, y, z = p3
    return (y, x * math.cos(theta1) - z * math.sin(theta1))


@dataclass(frozen=True)
class HybridPosture:
    """Posture of the three-dof hybrid: base rotation plus the embedded five-bar."""

    theta1: float
    planar: PlanarPosture

    def __post_init__(self):
        object.__setattr__(self, "theta1", normalize_angle(float(self.theta1)))

    @property
    def theta2(self) -> float:
        return self.planar.theta1

    @property
    def theta3(self) -> float:
        return self.planar.theta2

    @property
    def theta4(self) -> float:
        return self.planar.theta3

    @property
    def theta5(self) -> float:
        return self.planar.theta4

    @property
    def p3(self) -> Point3:
        return embed_point(self.planar.p, self.theta1)

    @property
    def c3(self) -> Point3:
        return embed_point(self.planar.c, self.theta1)

    @property
    def d3(self) -> Point3:
        return embed_point(self.planar.d, self.theta1)

    @property
    def k(self) -> Point3:
        """World image of the planar normal."""
        return (-math.sin(self.theta1), 0.0, -math.cos(self.theta1))
