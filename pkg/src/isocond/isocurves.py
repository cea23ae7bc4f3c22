"""Isoconditioning curves of the planar five-bar.

A level kappa of the direct-kinematics condition number fixes the relative
angle t3 - t4 of the distal links up to sign and supplement. Locking the
joint at P therefore turns the five-bar into a four-bar A-C-D-B whose coupler
CD has length ``2 l2 |sin(delta/2)|``; the isoconditioning curve is the path
of the coupler point P as the crank angle t1 sweeps a full turn.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidLevel
from .fivebar import REACH_TOL, kappa_from_delta
from .types import SERIAL_TOL, Geometry, PlanarPosture, Point2, WorkingMode, normalize_angle

DEFAULT_LEVELS = (1.0, 1.5, 2.0, 3.0, 5.0)
DEFAULT_SAMPLES = 720
TRANSITION_WIDTH = 1e-13
MAX_DEPTH = 48


@dataclass(frozen=True)
class IsoCurve:
    """A polyline of constant condition number.

    ``points`` holds (x, y) in Cartesian space or (t1, t2) in joint space.
    Closed curves do not repeat their first vertex. ``working_mode`` is None
    for curves that are not tied to one mode (e.g. the workspace boundary).
    """

    kappa: float
    working_mode: WorkingMode | None
    points: tuple[Point2, ...]
    space: str = "cartesian"
    closed: bool = False
    delta: float | None = None

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float).reshape(-1, 2)


def check_level(kappa_target: float) -> float:
    k = float(kappa_target)
    if math.isnan(k) or k < 1.0:
        raise InvalidLevel(f"condition-number level must be >= 1, got {kappa_target!r}")
    return k


def locked_delta(kappa_target: float) -> float:
    """Smallest locked angle t3 - t4 giving ``kappa_target`` (0 for infinity)."""
    k = check_level(kappa_target)
    if math.isinf(k):
        return 0.0
    return 2.0 * math.atan(1.0 / k)


def level_deltas(kappa_target: float) -> list[float]:
    """All signed values of t3 - t4 in (-pi, pi] sharing the level ``kappa_target``."""
    d0 = locked_delta(kappa_target)
    out: list[float] = []
    for d in (d0, -d0, math.pi - d0, d0 - math.pi):
        d = normalize_angle(d)
        if not any(abs(normalize_angle(d - e)) < 1e-15 for e in out):
            out.append(d)
    return out


def locked_posture(g: Geometry, theta1: float, delta: float, branch: int) -> PlanarPosture | None:
    """Posture of the four-bar obtained by locking t3 - t4 = ``delta``.

    ``branch`` (+1/-1) picks the side of line CB that D lies on. Returns None
    when the four-bar does not close at this crank angle.
    """
    r = 2.0 * g.l2 * abs(math.sin(0.5 * delta))
    if r == 0.0:
        return None
    cx, cy = g.l1 * math.cos(theta1), g.l1 * math.sin(theta1)
    wx, wy = g.l0 - cx, -cy
    s = math.hypot(wx, wy)
    if s == 0.0:
        return None
    a = (s * s + r * r - g.l1 * g.l1) / (2.0 * s)
    h2 = (r - a) * (r + a)
    if h2 < 0.0:
        return None
    h = math.sqrt(h2)
    ux, uy = wx / s, wy / s
    dx = cx + a * ux - branch * h * uy
    dy = cy + a * uy + branch * h * ux
    # D - C = l2 R(t3) (1 - cos delta, sin delta)
    offset = math.copysign(0.5 * math.pi, delta) - 0.5 * delta
    t3 = math.atan2(dy - cy, dx - cx) - offset
    t4 = t3 - delta
    p = (cx + g.l2 * math.cos(t3), cy + g.l2 * math.sin(t3))
    t2 = math.atan2(dy, dx - g.l0)
    return PlanarPosture(theta1, t2, t3, t4, p, (cx, cy), (dx, dy))


def _coincident_posture(g: Geometry, c: Point2, theta3: float) -> PlanarPosture:
    # C == D: P anywhere on the circle of radius l2 about the shared elbow.
    t1 = math.atan2(c[1], c[0])
    t2 = math.atan2(c[1], c[0] - g.l0)
    p = (c[0] + g.l2 * math.cos(theta3), c[1] + g.l2 * math.sin(theta3))
    return PlanarPosture(t1, t2, theta3, theta3, p, c, c)


def _label(posture: PlanarPosture | None):
    if posture is None:
        return None
    sa, sb = posture.sin_a, posture.sin_b
    if abs(sa) < SERIAL_TOL or abs(sb) < SERIAL_TOL:
        return None
    return WorkingMode(1 if sa > 0 else -1, 1 if sb > 0 else -1)


@dataclass
class _Sample:
    t: float
    posture: PlanarPosture | None
    label: WorkingMode | None = field(init=False)

    def __post_init__(self):
        self.label = _label(self.posture)


def _chord(a: _Sample, b: _Sample) -> float:
    return math.hypot(a.posture.p[0] - b.posture.p[0], a.posture.p[1] - b.posture.p[1])


def _trace_cycle(evaluate: Callable[[float], PlanarPosture | None], samples: int,
                 chord_tol: float, t0: float = -math.pi) -> tuple[list[list[_Sample]], bool]:
    """Trace a 2pi-periodic one-parameter family of postures.

    Returns the maximal runs of consecutive samples sharing one working mode
    and a flag telling whether the family is a single unbroken loop. Runs are
    refined so consecutive vertices are at most ``chord_tol`` apart, and run
    ends are located by bisection to within TRANSITION_WIDTH.
    """

    def sample(t):
        return _Sample(t, evaluate(t))

    def fill(a: _Sample, b: _Sample, depth: int) -> list[_Sample]:
        if depth > MAX_DEPTH:
            return []
        if a.label == b.label:
            if a.label is None or _chord(a, b) <= chord_tol:
                return []
            m = sample(0.5 * (a.t + b.t))
            return fill(a, m, depth + 1) + [m] + fill(m, b, depth + 1)
        lo, hi = a, b
        while hi.t - lo.t > TRANSITION_WIDTH:
            m = sample(0.5 * (lo.t + hi.t))
            if m.label == a.label:
                lo = m
            else:
                hi = m
        inner = [] if lo is a else [lo]
        if hi is not b:
            inner.append(hi)
        return fill(a, lo, depth + 1) + inner + fill(hi, b, depth + 1)

    step = 2.0 * math.pi / samples
    grid = [sample(t0 + k * step) for k in range(samples)]
    dense: list[_Sample] = []
    for k in range(samples):
        a = grid[k]
        b = grid[k + 1] if k + 1 < samples else _Sample(t0 + 2.0 * math.pi, grid[0].posture)
        dense.append(a)
        dense.extend(fill(a, b, 0))

    n = len(dense)
    start = next((i for i in range(n) if dense[i].label != dense[i - 1].label), None)
    if start is None:
        return ([] if dense[0].label is None else [dense]), dense[0].label is not None
    dense = dense[start:] + dense[:start]
    runs: list[list[_Sample]] = []
    current: list[_Sample] = []
    for s in dense:
        if s.label is None or (current and current[-1].label != s.label):
            if current:
                runs.append(current)
            current = []
        if s.label is not None:
            current.append(s)
    if current:
        runs.append(current)
    return runs, False


@dataclass
class _Run:
    label: WorkingMode
    delta: float
    postures: list[PlanarPosture]
    closed: bool = False


def _to_runs(traced: tuple[list[list[_Sample]], bool], delta: float) -> list[_Run]:
    dense_runs, closed = traced
    return [_Run(run[0].label, delta, [s.posture for s in run], closed=closed) for run in dense_runs]


def _dist(p: Point2, q: Point2) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _merge_runs(runs: list[_Run], tol: float) -> list[_Run]:
    """Join open runs of the same mode and delta whose endpoints meet."""
    done = [r for r in runs if r.closed]
    pending = [r for r in runs if not r.closed]
    while pending:
        cur = pending.pop(0)
        changed = True
        while changed:
            changed = False
            for i, other in enumerate(pending):
                if other.label != cur.label or other.delta != cur.delta:
                    continue
                a0, a1 = cur.postures[0].p, cur.postures[-1].p
                b0, b1 = other.postures[0].p, other.postures[-1].p
                if _dist(a1, b0) <= tol:
                    cur.postures = cur.postures + other.postures
                elif _dist(a1, b1) <= tol:
                    cur.postures = cur.postures + other.postures[::-1]
                elif _dist(a0, b1) <= tol:
                    cur.postures = other.postures + cur.postures
                elif _dist(a0, b0) <= tol:
                    cur.postures = other.postures[::-1] + cur.postures
                else:
                    continue
                pending.pop(i)
                changed = True
                break
        if len(cur.postures) > 2 and _dist(cur.postures[0].p, cur.postures[-1].p) <= tol:
            cur.closed = True
        done.append(cur)
    return done


def default_chord_tol(g: Geometry) -> float:
    box = workspace_bbox(g)
    if box is None:
        return 2.0 * (g.l1 + g.l2) / 1000.0
    xmin, xmax, ymin, ymax = box
    return math.hypot(xmax - xmin, ymax - ymin) / 1000.0


@functools.lru_cache(maxsize=64)
def _trace_level(g: Geometry, kappa_target: float, samples: int, chord_tol: float) -> tuple[_Run, ...]:
    runs: list[_Run] = []
    for delta in level_deltas(kappa_target):
        if delta == 0.0:
            runs.extend(_trace_coincident(g, samples, chord_tol))
            continue
        for branch in (1, -1):
            traced = _trace_cycle(lambda t: locked_posture(g, t, delta, branch), samples, chord_tol)
            runs.extend(_to_runs(traced, delta))
    return tuple(_merge_runs(runs, chord_tol))


def _trace_coincident(g: Geometry, samples: int, chord_tol: float) -> list[_Run]:
    """The t3 = t4 family: C and D coincide and P sweeps a circle about them."""
    runs: list[_Run] = []
    for c in _coincident_elbows(g):
        traced = _trace_cycle(lambda t: _coincident_posture(g, c, t), samples, chord_tol)
        runs.extend(_to_runs(traced, 0.0))
    return runs


def _coincident_elbows(g: Geometry) -> list[Point2]:
    # Intersections of the circles of radius l1 about A and B.
    if g.l0 == 0.0 or g.l0 > 2.0 * g.l1:
        return []
    x = 0.5 * g.l0
    y = math.sqrt(max(g.l1 * g.l1 - x * x, 0.0))
    return [(x, y)] if y == 0.0 else [(x, y), (x, -y)]


def _curve_from_run(run: _Run, kappa: float) -> IsoCurve:
    pts = tuple(p.p for p in run.postures)
    return IsoCurve(kappa, run.label, pts, "cartesian", run.closed, run.delta)


def iso_curve_cartesian(g: Geometry, kappa_target: float, wm: WorkingMode,
                        samples: int = DEFAULT_SAMPLES, chord_tol: float | None = None) -> list[IsoCurve]:
    """Isoconditioning curves of kappa(A) in working mode ``wm``.

    Each returned curve is one connected piece of a coupler curve of the
    locked four-bar, restricted to postures in ``wm``.
    """
    k = check_level(kappa_target)
    tol = default_chord_tol(g) if chord_tol is None else float(chord_tol)
    runs = _trace_level(g, k, int(samples), tol)
    return [_curve_from_run(r, k) for r in runs if r.label == wm]


def iso_level_postures(g: Geometry, kappa_target: float, wm: WorkingMode,
                       samples: int = DEFAULT_SAMPLES, chord_tol: float | None = None) -> list[list[PlanarPosture]]:
    """Posture sequences underlying :func:`iso_curve_cartesian`, same order."""
    k = check_level(kappa_target)
    tol = default_chord_tol(g) if chord_tol is None else float(chord_tol)
    return [list(r.postures) for r in _trace_level(g, k, int(samples), tol) if r.label == wm]


def iso_curve_jointspace(g: Geometry, kappa_target: float, samples: int = DEFAULT_SAMPLES,
                         chord_tol: float | None = None) -> list[IsoCurve]:
    """Isoconditioning curves drawn in the (t1, t2) torus, one set per working mode.

    Curves are cut where they wrap around the torus.
    """
    k = check_level(kappa_target)
    tol = default_chord_tol(g) if chord_tol is None else float(chord_tol)
    out: list[IsoCurve] = []
    for run in _trace_level(g, k, int(samples), tol):
        angles = [(q.theta1, q.theta2) for q in run.postures]
        jumps = [i for i in range(1, len(angles))
                 if max(abs(angles[i][0] - angles[i - 1][0]), abs(angles[i][1] - angles[i - 1][1])) > math.pi]
        if run.closed:
            wrap_jump = max(abs(angles[0][0] - angles[-1][0]), abs(angles[0][1] - angles[-1][1])) > math.pi
            if not jumps and not wrap_jump:
                out.append(IsoCurve(k, run.label, tuple(angles), "joint", True, run.delta))
                continue
            if jumps:
                s = jumps[0]
                angles = angles[s:] + angles[:s]
                jumps = [i for i in range(1, len(angles))
                         if max(abs(angles[i][0] - angles[i - 1][0]),
                                abs(angles[i][1] - angles[i - 1][1])) > math.pi]
        cuts = [0] + jumps + [len(angles)]
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b - a >= 2:
                out.append(IsoCurve(k, run.label, tuple(angles[a:b]), "joint", False, run.delta))
    return out


# ---------------------------------------------------------------------------
# kappa field


@dataclass(frozen=True)
class KappaField:
    """kappa(A) sampled on a grid; ``values[j, i]`` sits at ``(xs[i], ys[j])``.

    Nodes outside the workspace hold NaN; parallel-singular nodes hold +inf.
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    working_mode: WorkingMode

    @property
    def reachable(self) -> np.ndarray:
        return ~np.isnan(self.values)


def _leg_np(bx: float, px, py, l1: float, l2: float, sign: int):
    vx, vy = px - bx, py
    rho = np.hypot(vx, vy)
    phi = np.arctan2(vy, vx)
    sides = np.sort(np.stack(np.broadcast_arrays(np.full_like(rho, l1), np.full_like(rho, l2), rho)), axis=0)
    c, b, a = sides[0], sides[1], sides[2]
    slack = c - (a - b)
    tol = REACH_TOL * (l1 + l2)
    ok = slack >= -tol
    slack = np.where(slack < tol, 0.0, slack)
    q = (a + (b + c)) * slack * (c + (a - b)) * (a + (b - c))
    alpha = np.arctan2(np.sqrt(np.maximum(q, 0.0)), l1 * l1 + rho * rho - l2 * l2)
    t_act = phi - sign * alpha
    ex, ey = bx + l1 * np.cos(t_act), l1 * np.sin(t_act)
    t_pass = np.arctan2(py - ey, px - ex)
    return ok, t_act, t_pass


def kappa_a_array(delta: np.ndarray) -> np.ndarray:
    f = np.fmod(np.abs(delta), np.pi)
    f = np.minimum(f, np.pi - f)
    t = np.tan(0.5 * f)
    with np.errstate(divide="ignore"):
        k = np.where(t == 0.0, np.inf, 1.0 / np.where(t == 0.0, 1.0, t))
    return np.maximum(k, 1.0)


def kappa_field(g: Geometry, wm: WorkingMode, region: Sequence[float] | None = None,
                nx: int = 200, ny: int = 200) -> KappaField:
    """Sample kappa(A) over ``region = (xmin, xmax, ymin, ymax)`` via inverse kinematics in ``wm``."""
    if nx < 2 or ny < 2:
        raise ValueError("nx and ny must be at least 2")
    if region is None:
        region = workspace_bbox(g) or (-1.0, 1.0, -1.0, 1.0)
    xmin, xmax, ymin, ymax = map(float, region)
    xs = np.linspace(xmin, xmax, nx)
    ys = np.linspace(ymin, ymax, ny)
    px, py = np.meshgrid(xs, ys)
    ok_a, _, t3 = _leg_np(0.0, px, py, g.l1, g.l2, wm.sign_a)
    ok_b, _, t4 = _leg_np(g.l0, px, py, g.l1, g.l2, wm.sign_b)
    vals = kappa_a_array(t3 - t4)
    vals = np.where(ok_a & ok_b, vals, np.nan)
    return KappaField(xs, ys, vals, wm)


# ---------------------------------------------------------------------------
# workspace boundary


@dataclass(frozen=True)
class Arc:
    """Counterclockwise arc of a circle centred on the x axis, ``start < end``."""

    cx: float
    radius: float
    start: float
    end: float
    full: bool = False

    def point(self, phi: float) -> Point2:
        return (self.cx + self.radius * math.cos(phi), self.radius * math.sin(phi))

    def sample(self, n: int) -> list[Point2]:
        n = max(n, 2)
        if self.full:
            return [self.point(self.start + 2.0 * math.pi * i / n) for i in range(n)]
        return [self.point(self.start + (self.end - self.start) * i / (n - 1)) for i in range(n)]


def boundary_arcs(g: Geometry) -> list[Arc]:
    """Arcs of the four annulus circles that bound the workspace."""
    rin, rout = g.inner_radius, g.outer_radius
    centers = [(0.0, 0.0), (g.l0, math.pi)] if g.l0 > 0 else [(0.0, 0.0)]
    arcs: list[Arc] = []
    for cx, phi0 in centers:
        for r in (rin, rout):
            if r == 0.0:
                continue
            if g.l0 == 0.0:
                arcs.append(Arc(cx, r, 0.0, 2.0 * math.pi, True))
                continue
            big = 2.0 * r * g.l0
            lo = (r * r + g.l0 * g.l0 - rout * rout) / big
            hi = (r * r + g.l0 * g.l0 - rin * rin) / big
            if lo > 1.0 or hi < -1.0:
                continue
            amin = math.acos(min(hi, 1.0))
            amax = math.acos(max(lo, -1.0))
            if amin == 0.0 and amax == math.pi:
                arcs.append(Arc(cx, r, phi0, phi0 + 2.0 * math.pi, True))
            elif amin == 0.0:
                arcs.append(Arc(cx, r, phi0 - amax, phi0 + amax))
            elif amax == math.pi:
                arcs.append(Arc(cx, r, phi0 + amin, phi0 + 2.0 * math.pi - amin))
            else:
                arcs.append(Arc(cx, r, phi0 + amin, phi0 + amax))
                arcs.append(Arc(cx, r, phi0 - amax, phi0 - amin))
    return arcs


def workspace_bbox(g: Geometry) -> tuple[float, float, float, float] | None:
    """Exact bounding box of the workspace, or None when it is empty."""
    arcs = boundary_arcs(g)
    if not arcs:
        return None
    xs, ys = [], []
    for arc in arcs:
        cands = [arc.start, arc.end]
        k0 = math.floor(arc.start / (0.5 * math.pi))
        k = k0
        while k * 0.5 * math.pi <= arc.end:
            if k * 0.5 * math.pi >= arc.start:
                cands.append(k * 0.5 * math.pi)
            k += 1
        for phi in cands:
            x, y = arc.point(phi)
            xs.append(x)
            ys.append(y)
    return (min(xs), max(xs), min(ys), max(ys))


def _signed_area(pts: Sequence[Point2]) -> float:
    s = 0.0
    for (x0, y0), (x1, y1) in zip(pts, list(pts[1:]) + [pts[0]]):
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _chain(pieces: list[list[Point2]], tol: float) -> list[tuple[list[Point2], bool]]:
    """Link open polylines sharing endpoints into chains; returns (points, closed)."""
    pending = [list(p) for p in pieces]
    out = []
    while pending:
        cur = pending.pop(0)
        grown = True
        while grown:
            grown = False
            for i, other in enumerate(pending):
                if _dist(cur[-1], other[0]) <= tol:
                    cur = cur + other[1:]
                elif _dist(cur[-1], other[-1]) <= tol:
                    cur = cur + other[::-1][1:]
                elif _dist(cur[0], other[-1]) <= tol:
                    cur = other[:-1] + cur
                elif _dist(cur[0], other[0]) <= tol:
                    cur = other[::-1][:-1] + cur
                else:
                    continue
                pending.pop(i)
                grown = True
                break
            if len(cur) > 2 and _dist(cur[0], cur[-1]) <= tol:
                break
        closed = len(cur) > 2 and _dist(cur[0], cur[-1]) <= tol
        if closed:
            cur = cur[:-1]
        out.append((cur, closed))
    return out


def workspace_boundary(g: Geometry, samples: int = 128) -> list[IsoCurve]:
    """Closed counterclockwise polylines bounding the workspace.

    Each boundary arc contributes ``samples`` vertices (shared endpoints are
    counted once).
    """
    tol = 1e-9 * (g.l1 + g.l2)
    loops = []
    pieces = []
    for arc in boundary_arcs(g):
        if arc.full:
            loops.append(arc.sample(samples))
        else:
            pieces.append(arc.sample(samples))
    for pts, _closed in _chain(pieces, tol):
        loops.append(pts)
    out = []
    for pts in loops:
        if _signed_area(pts) < 0:
            pts = pts[::-1]
        out.append(IsoCurve(math.inf, None, tuple(pts), "cartesian", True, None))
    return out


def boundary_profile(g: Geometry, samples: int = 128) -> list[IsoCurve]:
    """The half of the workspace boundary with y >= 0.

    Revolving this profile about the x axis (line AB) sweeps the whole
    boundary surface once; the y < 0 half is its mirror image.
    """
    tol = 1e-9 * (g.l1 + g.l2)
    pieces = []
    for arc in boundary_arcs(g):
        for k in range(-2, 3):
            lo = max(arc.start, 2.0 * math.pi * k)
            hi = min(arc.end, 2.0 * math.pi * k + math.pi)
            if hi - lo > 1e-15:
                sub = Arc(arc.cx, arc.radius, lo, hi)
                pts = sub.sample(samples)
                # Pin axis crossings exactly onto the axis.
                pts = [(x, 0.0) if abs(y) <= 1e-15 * arc.radius else (x, y) for x, y in pts]
                pieces.append(pts)
    out = []
    for pts, closed in _chain(pieces, tol):
        out.append(IsoCurve(math.inf, None, tuple(pts), "cartesian", closed, None))
    return out
