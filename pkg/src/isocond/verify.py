"""Reduced-scale self-checks run by ``isocond verify``.

Each check returns a :class:`CheckResult`; none of them raise on failure.
The kinematic functions are looked up through their modules at call time
so a patched formula is seen by the checks.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import export, fivebar, hybrid, isocurves, linalg
from .errors import IsocondError, OnSerialSingularity
from .types import ALL_MODES, AssemblyMode, Geometry, WorkingMode

REFERENCE_GEOMETRY = Geometry(6.0, 8.0, 5.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.ok else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def random_postures(g: Geometry, n: int, rng: np.random.Generator):
    """Nonsingular planar postures from uniformly random actuated angles."""
    out = []
    while len(out) < n:
        t1, t2 = rng.uniform(-math.pi, math.pi, 2)
        mode = AssemblyMode.PLUS if rng.random() < 0.5 else AssemblyMode.MINUS
        try:
            q = fivebar.direct_kinematics(g, t1, t2, mode)
        except IsocondError:
            continue
        if math.isfinite(fivebar.kappa_a(q)):
            out.append(q)
    return out


def random_reachable_points(g: Geometry, n: int, rng: np.random.Generator):
    box = isocurves.workspace_bbox(g)
    out = []
    while len(out) < n:
        p = (rng.uniform(box[0], box[1]), rng.uniform(box[2], box[3]))
        if fivebar.workspace_contains(g, p):
            out.append(p)
    return out


def _ik_any(g, p, wm):
    try:
        return fivebar.inverse_kinematics(g, p, wm)
    except OnSerialSingularity as exc:
        return exc.posture


def check_kappa_a_oracle(g, rng, n):
    worst = 0.0
    for q in random_postures(g, n, rng):
        ka = fivebar.kappa_a(q)
        ref = linalg.condition_number(fivebar.jacobians(q, g).a)
        worst = max(worst, abs(ka - ref) / ka)
    return worst <= 1e-9, f"max rel |kappa_a - cond(A)| = {worst:.2e} over {n} postures (tol 1e-9)"


def check_svd_oracle(g, rng, n):
    worst = 0.0
    for _ in range(n):
        for size in (2, 3):
            m = rng.normal(size=(size, size))
            ref = np.linalg.svd(m, compute_uv=False)
            got = np.array(linalg.singular_values(m))
            worst = max(worst, float(np.max(np.abs(got - ref)) / ref[0]))
    return worst <= 1e-10, f"max rel singular-value error vs LAPACK = {worst:.2e} (tol 1e-10)"


def check_isotropy(g, rng, n):
    iso_err, big = 0.0, math.inf
    count = 0
    for t in rng.uniform(-math.pi, math.pi, n):
        for delta, branch in ((math.pi / 2, 1), (-math.pi / 2, -1)):
            q = isocurves.locked_posture(g, t, delta, branch)
            if q is not None:
                iso_err = max(iso_err, abs(fivebar.kappa_a(q) - 1.0))
                count += 1
        q = isocurves.locked_posture(g, t, math.pi - 1e-6, 1)
        if q is not None:
            big = min(big, fivebar.kappa_a(q))
    ok = iso_err <= 1e-12 and big > 1e5 and count > 0
    return ok, f"|kappa-1| <= {iso_err:.1e} on {count} isotropic postures; min kappa near singular = {big:.3g}"


def check_worked_posture(g, rng, n):
    q = fivebar.direct_kinematics(g, math.pi / 2, math.pi / 2, AssemblyMode.PLUS)
    lower = fivebar.direct_kinematics(g, math.pi / 2, math.pi / 2, AssemblyMode.MINUS)
    ka, kb = fivebar.kappa_a(q), fivebar.kappa_b(q, g)
    wm = fivebar.working_mode_of(q)
    ok = (math.dist(q.p, (3, 12)) < 1e-12 and math.dist(lower.p, (3, 4)) < 1e-12
          and abs(ka - 4 / 3) <= 1e-12 and abs(kb - 1) <= 1e-12 and str(wm) == "-+")
    return ok, f"P={q.p[0]:.6f},{q.p[1]:.6f} kappa_a={ka:.15f} kappa_b={kb:.15f} mode={wm}"


def check_mode_partition(g, rng, n):
    worst = 0.0
    bad = 0
    for p in random_reachable_points(g, n, rng):
        sols = fivebar.all_inverse_solutions(g, p)
        modes = [wm for wm, _ in sols]
        if len(sols) > 4 or len(set(modes)) != len(modes):
            bad += 1
        for _wm, q in sols:
            try:
                fk = fivebar.direct_kinematics(g, q.theta1, q.theta2, fivebar.assembly_mode_of(q))
            except IsocondError:
                continue
            worst = max(worst, math.dist(fk.p, p))
    ok = bad == 0 and worst <= 1e-9 * g.l2
    return ok, f"{bad} bad partitions; max FK(IK(p)) error {worst:.2e} (tol {1e-9 * g.l2:.1e})"


def extended_kappa_field(g: Geometry, wm: WorkingMode, region, n: int):
    """Grid of cond(A) from inverse kinematics, continued past the workspace boundary.

    Grid nodes outside the workspace are pushed radially onto the annuli
    first, which keeps the field continuous so contours run up to the boundary. The
    condition number comes from the singular values of the assembled A rows,
    not from the locked-angle formula.
    """
    xs = np.linspace(region[0], region[1], n)
    ys = np.linspace(region[2], region[3], n)
    px, py = np.meshgrid(xs, ys)
    lo, hi = max(g.inner_radius, 1e-12), g.outer_radius
    for bx in (0.0, g.l0, 0.0):
        rho = np.hypot(px - bx, py)
        scale = np.clip(rho, lo, hi) / np.maximum(rho, 1e-300)
        px, py = bx + (px - bx) * scale, py * scale
    rows = []
    for bx, sign in ((0.0, wm.sign_a), (g.l0, wm.sign_b)):
        vx, vy = px - bx, py
        rho = np.hypot(vx, vy)
        cos_alpha = np.clip((g.l1 ** 2 + rho ** 2 - g.l2 ** 2) / (2 * g.l1 * rho), -1.0, 1.0)
        t = np.arctan2(vy, vx) - sign * np.arccos(cos_alpha)
        rows.append((px - bx - g.l1 * np.cos(t), py - g.l1 * np.sin(t)))
    (a, b), (c, d) = rows
    fro = a * a + b * b + c * c + d * d
    det = np.abs(a * d - b * c)
    disc = np.sqrt(np.maximum(fro * fro - 4 * det * det, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(det > 0, (fro + disc) / (2 * det), np.inf)
    return xs, ys, kappa


def check_coupler_vs_field(g, rng, n):
    res = max(40, n // 5)
    box = isocurves.workspace_bbox(g)
    pad = 0.02 * (box[1] - box[0])
    region = (box[0] - pad, box[1] + pad, box[2] - pad, box[3] + pad)
    worst_delta = 0.0
    misses = 0
    total = 0
    for wm in ALL_MODES:
        xs, ys, vals = extended_kappa_field(g, wm, region, res)
        dx, dy = xs[1] - xs[0], ys[1] - ys[0]
        for level in (1.2, 2.0, 5.0):
            target = isocurves.locked_delta(level)
            for curve in isocurves.iso_curve_cartesian(g, level, wm, samples=360):
                for p in curve.points[::7]:
                    total += 1
                    q = _ik_any(g, p, wm)
                    d = abs(q.delta)
                    d = min(d, math.pi - d)
                    worst_delta = max(worst_delta, abs(d - target))
                    # The cell holding p and its eight neighbours.
                    i = int((p[0] - region[0]) / dx)
                    j = int((p[1] - region[2]) / dy)
                    win = vals[max(j - 1, 0):j + 3, max(i - 1, 0):i + 3]
                    if not (win.min() <= level <= win.max()):
                        misses += 1
    ok = misses == 0 and worst_delta <= 1e-9
    return ok, f"{misses}/{total} vertices off the field level set; max locked-angle error {worst_delta:.1e}"


def check_workspace_boundary(g, rng, n):
    loops = isocurves.workspace_boundary(g, 64)
    worst = 0.0
    for loop in loops:
        for p in loop.points:
            q = _ik_any(g, p, ALL_MODES[0])
            b = fivebar.jacobians(q, g).b
            worst = max(worst, min(abs(b[0, 0]), abs(b[1, 1])))
    # Interior/exterior agreement against a point-in-polygon test on a fine boundary.
    fine = [np.asarray(c.points) for c in isocurves.workspace_boundary(g, 2048)]
    box = isocurves.workspace_bbox(g)
    pts = np.column_stack([rng.uniform(box[0] - 1, box[1] + 1, n), rng.uniform(box[2] - 1, box[3] + 1, n)])
    inside = np.zeros(n, dtype=bool)
    for poly in fine:
        inside ^= _even_odd(pts, poly)
    sag = (g.l1 + g.l2) * (math.pi / 2047) ** 2
    disagree = 0
    for k, p in enumerate(pts):
        if fivebar.workspace_contains(g, tuple(p)) != inside[k]:
            if _dist_to_arcs(g, p) > sag + 1e-9:
                disagree += 1
    ok = worst <= 1e-8 * g.l1 * g.l2 and disagree == 0
    return ok, f"max min|B_ii| on boundary {worst:.1e}; {disagree} misclassified of {n}"


def _even_odd(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0:1], pts[:, 1:2]
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    cond = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return np.count_nonzero(cond & (x < xc), axis=1) % 2 == 1


def _dist_to_arcs(g, p) -> float:
    best = math.inf
    for arc in isocurves.boundary_arcs(g):
        phi = math.atan2(p[1], p[0] - arc.cx)
        while phi < arc.start:
            phi += 2 * math.pi
        if arc.full or phi <= arc.end:
            best = min(best, abs(math.hypot(p[0] - arc.cx, p[1]) - arc.radius))
        else:
            best = min(best, math.dist(p, arc.point(arc.start)), math.dist(p, arc.point(arc.end)))
    return best


def check_hybrid_coincidence(g, rng, n):
    worst = 0.0
    worst_inv = 0.0
    for q in random_postures(g, n, rng):
        h0 = hybrid.HybridPosture(0.0, q)
        ref = (hybrid.kappa_a3(h0), hybrid.kappa_b3(h0, g)) + hybrid.axis_distances(h0, g)
        worst = max(worst, abs(hybrid.kappa_a3(h0) - fivebar.kappa_a(q)) / fivebar.kappa_a(q))
        for t in rng.uniform(-math.pi, math.pi, 2):
            h = hybrid.HybridPosture(float(t), q)
            vals = (hybrid.kappa_a3(h), hybrid.kappa_b3(h, g)) + hybrid.axis_distances(h, g)
            for a, b in zip(vals, ref):
                if math.isfinite(b) and b != 0:
                    worst_inv = max(worst_inv, abs(a - b) / abs(b))
    ok = worst <= 1e-12 and worst_inv <= 1e-12
    return ok, f"kappa_a3 vs planar {worst:.1e}; theta1 invariance {worst_inv:.1e}"


def planar_fd_residual(g, q, theta_dot, h=1e-6) -> float:
    mode = fivebar.assembly_mode_of(q)
    fwd = fivebar.direct_kinematics(g, q.theta1 + h * theta_dot[0], q.theta2 + h * theta_dot[1], mode)
    bwd = fivebar.direct_kinematics(g, q.theta1 - h * theta_dot[0], q.theta2 - h * theta_dot[1], mode)
    pdot = (np.array(fwd.p) - np.array(bwd.p)) / (2 * h)
    jp = fivebar.jacobians(q, g)
    scale = np.linalg.norm(jp.a) * np.linalg.norm(pdot) + np.linalg.norm(jp.b) * np.linalg.norm(theta_dot)
    return float(np.linalg.norm(jp.a @ pdot - jp.b @ np.asarray(theta_dot)) / scale)


def hybrid_fd_residual(g, hp, theta_dot, h=1e-6) -> float:
    mode = fivebar.assembly_mode_of(hp.planar)
    x = np.array([hp.theta1, hp.theta2, hp.theta3])
    td = np.asarray(theta_dot, dtype=float)
    fwd = hybrid.hybrid_forward(g, *(x + h * td), mode)
    bwd = hybrid.hybrid_forward(g, *(x - h * td), mode)
    pdot = (np.array(fwd.p3) - np.array(bwd.p3)) / (2 * h)
    jp = hybrid.jacobians3(hp, g)
    scale = np.linalg.norm(jp.a) * np.linalg.norm(pdot) + np.linalg.norm(jp.b) * np.linalg.norm(td)
    return float(np.linalg.norm(jp.a @ pdot - jp.b @ td) / scale)


def _safe_fd(fn):
    try:
        return fn()
    except IsocondError:
        return None


def check_jacobian_fd(g, rng, n):
    worst_p, worst_h = 0.0, 0.0
    for q in random_postures(g, n, rng):
        td = rng.normal(size=2)
        r = _safe_fd(lambda: planar_fd_residual(g, q, td))
        if r is not None:
            worst_p = max(worst_p, r)
        hp = hybrid.HybridPosture(float(rng.uniform(-math.pi, math.pi)), q)
        td3 = rng.normal(size=3)
        r = _safe_fd(lambda: hybrid_fd_residual(g, hp, td3))
        if r is not None:
            worst_h = max(worst_h, r)
    ok = worst_p <= 1e-5 and worst_h <= 1e-5
    return ok, f"planar residual {worst_p:.1e}; hybrid residual {worst_h:.1e} (tol 1e-5)"


def generator_distance(surface: hybrid.IsoSurface, stride: int = 1, window: int = 8) -> float:
    """Largest distance from a mesh vertex, folded into the reference plane, to the generator polylines.

    The distance to the nearest generator vertex bounds the distance to the
    polylines from above. It is found by a sorted search on x, and only
    vertices whose bound is not already tiny get the full segment search.
    """
    prof = hybrid.profile_coordinates(surface.vertices)[::stride]
    if len(prof) == 0:
        return 0.0
    segs = []
    for c in surface.generators:
        pts = c.as_array()
        pts = np.column_stack([pts[:, 0], np.abs(pts[:, 1])])
        if c.closed:
            pts = np.vstack([pts, pts[:1]])
        segs.append(np.stack([pts[:-1], pts[1:]], axis=1) if len(pts) > 1 else np.stack([pts, pts], axis=1))
    seg = np.concatenate(segs)
    nodes = seg.reshape(-1, 2)
    nodes = nodes[np.argsort(nodes[:, 0], kind="stable")]
    pos = np.searchsorted(nodes[:, 0], prof[:, 0])
    bound = np.full(len(prof), np.inf)
    for off in range(-window, window + 1):
        k = np.clip(pos + off, 0, len(nodes) - 1)
        bound = np.minimum(bound, np.hypot(*(prof - nodes[k]).T))
    scale = max(1.0, float(np.abs(nodes).max()))
    hard = prof[bound > 1e-12 * scale]
    worst = float(bound[bound <= 1e-12 * scale].max(initial=0.0))
    a, ab = seg[:, 0], seg[:, 1] - seg[:, 0]
    den = np.maximum((ab * ab).sum(axis=1), 1e-300)
    for start in range(0, len(hard), 512):
        chunk = hard[start:start + 512, None, :]
        t = np.clip(((chunk - a) * ab).sum(axis=2) / den, 0.0, 1.0)
        d = np.linalg.norm(chunk - (a + t[..., None] * ab), axis=2).min(axis=1)
        worst = max(worst, float(d.max()))
    return worst


def kappa_at_points(g: Geometry, pts: np.ndarray, wm: WorkingMode) -> np.ndarray:
    """kappa(A) at planar points by vectorized inverse kinematics; NaN where unreachable."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    ok_a, _, t3 = isocurves._leg_np(0.0, pts[:, 0], pts[:, 1], g.l1, g.l2, wm.sign_a)
    ok_b, _, t4 = isocurves._leg_np(g.l0, pts[:, 0], pts[:, 1], g.l1, g.l2, wm.sign_b)
    return np.where(ok_a & ok_b, isocurves.kappa_a_array(t3 - t4), np.nan)


def curve_kappa_residual(g: Geometry, curves, level: float) -> float:
    """Largest |kappa_a - level| over curve vertices, re-solved by inverse kinematics."""
    worst = 0.0
    for c in curves:
        k = kappa_at_points(g, c.as_array(), c.working_mode)
        worst = max(worst, float(np.max(np.abs(k - level), initial=0.0)))
    return worst


def surface_kappa_residual(g: Geometry, surface: hybrid.IsoSurface, wm: WorkingMode, stride: int = 1) -> float:
    """Largest kappa residual of mesh vertices folded back into the moving plane.

    A vertex only fixes (x, |y|) in the plane. Mirroring y swaps the working
    mode (a, b) for (-a, -b) without changing kappa, so both are tried.
    """
    prof = hybrid.profile_coordinates(surface.vertices)[::stride]
    if len(prof) == 0:
        return 0.0
    flipped = WorkingMode(-wm.sign_a, -wm.sign_b)
    r1 = np.abs(kappa_at_points(g, prof, wm) - surface.kappa)
    r2 = np.abs(kappa_at_points(g, prof, flipped) - surface.kappa)
    best = np.fmin(r1, r2)
    return float(np.max(np.where(np.isnan(best), np.inf, best)))


def is_watertight(triangles: np.ndarray) -> bool:
    edges: dict[tuple[int, int], int] = {}
    for a, b, c in np.asarray(triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            edges[key] = edges.get(key, 0) + 1
    return bool(edges) and all(count == 2 for count in edges.values())


def check_surfaces(g, rng, n):
    surf = hybrid.iso_surface(g, 1.0, WorkingMode.parse("-+"), samples_curve=120, samples_revolution=12)
    gen_err = generator_distance(surf, stride=3)
    audit = surface_kappa_residual(g, surf, WorkingMode.parse("-+"))
    wb = hybrid.workspace_boundary_surface(g, 48, 24)
    tight = is_watertight(wb.triangles)
    v, f = export.read_obj(export.mesh_to_obj(wb))
    rt = float(np.max(np.abs(v - wb.vertices)))
    ok = (gen_err <= 1e-6 * g.l2 and audit <= 1e-6 and tight and rt <= 1e-9
          and np.array_equal(f, wb.triangles))
    return ok, (f"generator distance {gen_err:.1e}; vertex kappa residual {audit:.1e}; "
                f"boundary watertight={tight}; OBJ round trip {rt:.1e}")


def check_determinism(g, rng, n):
    wm = WorkingMode.parse("+-")
    a = export.curves_to_csv(isocurves.iso_curve_cartesian(g, 2.0, wm, samples=180))
    isocurves._trace_level.cache_clear()
    b = export.curves_to_csv(isocurves.iso_curve_cartesian(g, 2.0, wm, samples=180))
    return a == b, f"CSV export byte-identical across runs: {a == b}"


CHECKS: list[tuple[str, Callable, int]] = [
    ("svd-oracle", check_svd_oracle, 2000),
    ("kappa-a-vs-svd", check_kappa_a_oracle, 2000),
    ("isotropy-a", check_isotropy, 500),
    ("worked-posture", check_worked_posture, 1),
    ("mode-partition", check_mode_partition, 2000),
    ("coupler-vs-field", check_coupler_vs_field, 1000),
    ("workspace-boundary", check_workspace_boundary, 20000),
    ("hybrid-coincidence", check_hybrid_coincidence, 1000),
    ("jacobian-fd", check_jacobian_fd, 300),
    ("surfaces", check_surfaces, 1),
    ("determinism", check_determinism, 1),
]


def run_checks(g: Geometry = REFERENCE_GEOMETRY, seed: int = 0, scale: float = 1.0) -> list[CheckResult]:
    results = []
    for name, fn, n in CHECKS:
        rng = np.random.default_rng([seed, len(results)])
        t = time.perf_counter()
        try:
            ok, detail = fn(g, rng, max(1, int(n * scale)))
        except Exception as exc:  # a crash is a failed check, not a crashed run
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t))
    return results
