"""Acceptance criteria at their stated tolerances, one test per criterion."""

import math
import time

import numpy as np
import pytest
from skimage.measure import find_contours

from isocond import cli, export, fivebar, hybrid, isocurves, linalg, verify
from isocond.errors import IsocondError, SingularAssembly
from isocond.types import ALL_MODES, AssemblyMode, Geometry, HybridPosture, PlanarPosture, WorkingMode

from conftest import ACCEPTANCE_LINES

G = Geometry(6.0, 8.0, 5.0)


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number} ({title}): {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def random_postures(g, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        t1, t2 = rng.uniform(-math.pi, math.pi, 2)
        mode = AssemblyMode.PLUS if rng.random() < 0.5 else AssemblyMode.MINUS
        try:
            q = fivebar.direct_kinematics(g, t1, t2, mode)
        except IsocondError:
            continue
        if math.isfinite(fivebar.kappa_a(q)) and min(abs(q.sin_a), abs(q.sin_b)) > 1e-9:
            out.append(q)
    return out


def test_criterion_1_kappa_a_vs_svd():
    qs = random_postures(G, 10_000, 1)
    t = time.perf_counter()
    worst = 0.0
    for q in qs:
        ka = fivebar.kappa_a(q)
        worst = max(worst, abs(ka - linalg.condition_number(fivebar.jacobians(q, G).a)) / ka)
    seconds = time.perf_counter() - t
    # Second route: LAPACK on the same matrices.
    lapack = max(abs(fivebar.kappa_a(q) - np.linalg.cond(fivebar.jacobians(q, G).a)) / fivebar.kappa_a(q)
                 for q in qs[:2000])
    report(1, "kappa(A) closed form vs SVD", worst <= 1e-9 and lapack <= 1e-9 and seconds < 5,
           f"max rel err {worst:.1e} (LAPACK {lapack:.1e}), tol 1e-9, {seconds:.2f}s for 10^4")


def test_criterion_2_isotropy():
    rng = np.random.default_rng(2)
    worst_iso, lowest_sing, n_iso, n_sing = 0.0, math.inf, 0, 0
    for _ in range(2000):
        t1 = rng.uniform(-math.pi, math.pi)
        branch = 1 if rng.random() < 0.5 else -1
        for delta, kind in ((math.pi / 2, "iso"), (-math.pi / 2, "iso"), (math.pi - 1e-6, "sing"),
                            (-(math.pi - 1e-6), "sing")):
            q = isocurves.locked_posture(G, t1, delta, branch)
            if q is None:
                continue
            # The four-bar must close and hold the passive angle difference.
            assert math.dist(q.d, (G.l0 + G.l1 * math.cos(q.theta2), G.l1 * math.sin(q.theta2))) < 1e-9
            gap = abs(math.remainder(q.theta3 - q.theta4, 2 * math.pi))
            k = fivebar.kappa_a(q)
            if kind == "iso":
                assert abs(gap - math.pi / 2) < 1e-12
                worst_iso = max(worst_iso, abs(k - 1.0), abs(linalg.condition_number(fivebar.jacobians(q, G).a) - 1))
                n_iso += 1
            else:
                assert abs(gap - (math.pi - 1e-6)) < 1e-9
                lowest_sing = min(lowest_sing, k)
                n_sing += 1
    report(2, "isotropy of A", worst_iso <= 1e-12 and lowest_sing > 1e5 and n_iso > 1000 and n_sing > 1000,
           f"|kappa-1| <= {worst_iso:.1e} on {n_iso} postures; min kappa {lowest_sing:.3e} "
           f"near flat on {n_sing}")


def test_criterion_3_worked_posture():
    up = fivebar.direct_kinematics(G, math.pi / 2, math.pi / 2, AssemblyMode.PLUS)
    down = fivebar.direct_kinematics(G, math.pi / 2, math.pi / 2, AssemblyMode.MINUS)
    # C = (0, 8), D = (6, 8), |CD| = 6, so P sits 4 above or below y = 8 on x = 3.
    ka, kb = fivebar.kappa_a(up), fivebar.kappa_b(up, G)
    wm = fivebar.working_mode_of(up)
    ok = (math.dist(up.p, (3, 12)) < 1e-12 and math.dist(down.p, (3, 4)) < 1e-12
          and abs(ka - 4 / 3) <= 1e-12 and abs(kb - 1) <= 1e-12 and str(wm) == "-+")
    report(3, "worked posture", ok,
           f"P={up.p[0]:.12g},{up.p[1]:.12g} and {down.p[0]:.12g},{down.p[1]:.12g}; "
           f"kappa_a={ka:.15f} kappa_b={kb:.15f} mode {wm}")


def test_criterion_4_mode_partition():
    rng = np.random.default_rng(4)
    pts = verify.random_reachable_points(G, 10_000, rng)
    bad, worst, count, flat = 0, 0.0, 0, 0
    for p in pts:
        sols = fivebar.all_inverse_solutions(G, p)
        modes = [str(wm) for wm, _ in sols]
        if len(sols) > 4 or len(set(modes)) != len(modes):
            bad += 1
        for wm, q in sols:
            if str(fivebar.working_mode_of(q)) != str(wm):
                bad += 1
            try:
                fk = fivebar.direct_kinematics(G, q.theta1, q.theta2, fivebar.assembly_mode_of(q))
            except SingularAssembly:
                flat += 1  # P on a parallel singularity: both assemblies coincide
                continue
            worst = max(worst, math.dist(fk.p, p))
            count += 1
    report(4, "working-mode partition", bad == 0 and worst <= 1e-9 * G.l2,
           f"{bad} bad partitions over 10^4 points; max FK(IK) error {worst:.1e} over {count} postures "
           f"({flat} on parallel singularities) (tol {1e-9 * G.l2:.0e})")


def _segment_distance(points, segs, chunk=256):
    a, ab = segs[:, 0], segs[:, 1] - segs[:, 0]
    den = np.maximum((ab * ab).sum(axis=1), 1e-300)
    out = np.empty(len(points))
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk, None, :]
        t = np.clip(((p - a) * ab).sum(axis=2) / den, 0.0, 1.0)
        out[s:s + chunk] = np.linalg.norm(p - (a + t[..., None] * ab), axis=2).min(axis=1)
    return out


def test_criterion_5_coupler_curves_vs_marching_squares():
    n = 400
    box = isocurves.workspace_bbox(G)
    pad = 0.02 * (box[1] - box[0])
    region = (box[0] - pad, box[1] + pad, box[2] - pad, box[3] + pad)
    worst_cells, worst_delta, total = 0.0, 0.0, 0
    for wm in ALL_MODES:
        xs, ys, field = verify.extended_kappa_field(G, wm, region, n)
        field = np.where(np.isfinite(field), field, 1e12)
        dx, dy = xs[1] - xs[0], ys[1] - ys[0]
        cell = math.hypot(dx, dy)
        for level in (1.2, 2.0, 5.0):
            segs = []
            for c in find_contours(field, level):
                xy = np.column_stack([xs[0] + c[:, 1] * dx, ys[0] + c[:, 0] * dy])
                segs.append(np.stack([xy[:-1], xy[1:]], axis=1))
            segs = np.concatenate(segs)
            target = 2 * math.atan(1 / level)
            curves = isocurves.iso_curve_cartesian(G, level, wm)
            runs = isocurves.iso_level_postures(G, level, wm)
            for curve, postures in zip(curves, runs):
                pts = curve.as_array()
                total += len(pts)
                worst_cells = max(worst_cells, float(_segment_distance(pts, segs).max()) / cell)
                for q in postures:
                    d = abs(q.theta3 - q.theta4) % (2 * math.pi)
                    d = min(d, 2 * math.pi - d)
                    d = min(d, math.pi - d)
                    worst_delta = max(worst_delta, abs(d - target))
    report(5, "coupler curves vs 400x400 marching squares", worst_cells <= 1.0 and worst_delta <= 1e-9,
           f"{total} vertices, max distance to contour {worst_cells:.3f} cells (tol 1); "
           f"max locked-angle error {worst_delta:.1e} (tol 1e-9)")


def _ray_inside(g, pts):
    """Even-odd count of exact crossings of a +x ray with the boundary arcs."""
    inside = np.zeros(len(pts), dtype=bool)
    x, y = pts[:, 0], pts[:, 1]
    for arc in isocurves.boundary_arcs(g):
        h = arc.radius ** 2 - y ** 2
        ok = h > 0
        root = np.sqrt(np.where(ok, h, 0.0))
        for sx in (1.0, -1.0):
            cx = arc.cx + sx * root
            phi = np.arctan2(y, cx - arc.cx)
            if arc.full:
                on = np.ones_like(ok)
            else:
                rel = np.mod(phi - arc.start, 2 * math.pi)
                on = rel <= arc.end - arc.start
            inside ^= ok & on & (cx > x)
    return inside


def test_criterion_6_workspace_boundary():
    rng = np.random.default_rng(6)
    box = isocurves.workspace_bbox(G)
    pts = np.column_stack([rng.uniform(box[0] - 1, box[1] + 1, 100_000),
                           rng.uniform(box[2] - 1, box[3] + 1, 100_000)])
    oracle = _ray_inside(G, pts)
    got = np.array([fivebar.workspace_contains(G, tuple(p)) for p in pts])
    far = [p for p in pts[got != oracle] if verify._dist_to_arcs(G, p) > 1e-9]
    worst_b = 0.0
    nb = 0
    for loop in isocurves.workspace_boundary(G):
        for p in loop.points:
            q = fivebar._ik_posture(G, p, ALL_MODES[0])
            b = fivebar.jacobians(q, G).b
            worst_b = max(worst_b, min(abs(b[0, 0]), abs(b[1, 1])))
            nb += 1
    inside = int(got.sum())
    report(6, "workspace boundary", not far and worst_b <= 1e-8 * G.l1 * G.l2 and 0 < inside < len(pts),
           f"{len(far)} misclassified beyond 1e-9 of 10^5 ({inside} inside); "
           f"max min|B_ii| on {nb} boundary vertices {worst_b:.1e} (tol {1e-8 * G.l1 * G.l2:.0e})")


def _rebuilt_planar(h):
    """Planar posture recovered from the world-frame points only."""
    p = hybrid.to_reference_plane(h.p3, h.theta1)
    c = hybrid.to_reference_plane(h.c3, h.theta1)
    d = hybrid.to_reference_plane(h.d3, h.theta1)
    t3 = math.atan2(p[1] - c[1], p[0] - c[0])
    t4 = math.atan2(p[1] - d[1], p[0] - d[0])
    t1 = math.atan2(c[1], c[0])
    t2 = math.atan2(d[1], d[0] - G.l0)
    return PlanarPosture(t1, t2, t3, t4, p, c, d)


def test_criterion_7_hybrid_coincidence():
    rng = np.random.default_rng(7)
    worst, worst_inv, worst_d1 = 0.0, 0.0, 0.0
    for q in random_postures(G, 10_000, 70):
        h = HybridPosture(float(rng.uniform(-math.pi, math.pi)), q)
        ka3 = hybrid.kappa_a3(h)
        worst = max(worst, abs(ka3 - fivebar.kappa_a(q)) / ka3,
                    abs(ka3 - fivebar.kappa_a(_rebuilt_planar(h))) / ka3 / max(1.0, ka3))
        ref = (ka3, hybrid.kappa_b3(h, G)) + hybrid.axis_distances(h, G)
        h2 = HybridPosture(float(rng.uniform(-math.pi, math.pi)), q)
        vals = (hybrid.kappa_a3(h2), hybrid.kappa_b3(h2, G)) + hybrid.axis_distances(h2, G)
        for a, b in zip(vals, ref):
            if math.isfinite(b):
                worst_inv = max(worst_inv, abs(a - b) / max(abs(b), 1e-300) if b else abs(a))
        # d1 is the distance from P to the base axis (world Y).
        worst_d1 = max(worst_d1, abs(hybrid.axis_distances(h2, G)[0] - math.hypot(h2.p3[0], h2.p3[2])))
    ok = worst <= 1e-12 and worst_inv <= 1e-12 and worst_d1 <= 1e-12 * G.outer_radius
    report(7, "hybrid coincidence and theta1 invariance", ok,
           f"kappa_a3 vs planar {worst:.1e}; invariance {worst_inv:.1e}; d1 vs 3D distance {worst_d1:.1e}")


def test_criterion_8_jacobian_fd():
    rng = np.random.default_rng(8)
    worst_p, worst_h, used = 0.0, 0.0, 0
    for q in random_postures(G, 1000, 80):
        td = rng.normal(size=2)
        hp = HybridPosture(float(rng.uniform(-math.pi, math.pi)), q)
        td3 = rng.normal(size=3)
        try:
            rp = verify.planar_fd_residual(G, q, td)
            rh = verify.hybrid_fd_residual(G, hp, td3)
        except IsocondError:
            continue  # a step crossed a serial singularity
        worst_p, worst_h = max(worst_p, rp), max(worst_h, rh)
        used += 1
    report(8, "finite-difference Jacobian check", worst_p <= 1e-5 and worst_h <= 1e-5 and used >= 990,
           f"planar {worst_p:.1e}, hybrid {worst_h:.1e} over {used} postures (tol 1e-5)")


def test_criterion_9_surfaces():
    worst_gen, worst_k, worst_obj = 0.0, 0.0, 0.0
    for level, wm in ((1.0, WorkingMode.parse("-+")), (2.0, WorkingMode.parse("++")),
                      (3.0, WorkingMode.parse("+-"))):
        s = hybrid.iso_surface(G, level, wm, samples_curve=360, samples_revolution=24)
        worst_gen = max(worst_gen, verify.generator_distance(s))
        worst_k = max(worst_k, verify.surface_kappa_residual(G, s, wm))
        v, t = export.read_obj(export.mesh_to_obj(s))
        worst_obj = max(worst_obj, float(np.abs(v - s.vertices).max()))
        assert np.array_equal(t, s.triangles)
    wb = hybrid.workspace_boundary_surface(G)
    tight = verify.is_watertight(wb.triangles)
    ok = worst_gen <= 1e-6 * G.l2 and worst_k <= 1e-6 and tight and worst_obj <= 1e-9
    report(9, "surfaces of revolution", ok,
           f"generator distance {worst_gen:.1e} (tol {1e-6 * G.l2:.0e}); vertex kappa residual {worst_k:.1e}; "
           f"boundary watertight={tight}; OBJ round trip {worst_obj:.1e}")


def test_criterion_10_figures_and_verify(tmp_path, capsys):
    outs = []
    for run in ("a", "b"):
        d = tmp_path / run
        assert cli.main(["curves", "--out", str(d)]) == 0
        assert cli.main(["surface", "--out", str(d)]) == 0
        outs.append({p.name: p.read_bytes() for p in d.iterdir()})
    capsys.readouterr()
    names = set(outs[0])
    needed = {"modes_panel.svg", "jointspace.svg", "jointspace.csv", "workspace_boundary.obj",
              "surface_k1_mp.obj"} | {f"curves_{t}.{e}" for t in ("pp", "pm", "mp", "mm") for e in ("csv", "svg")}
    identical = outs[0] == outs[1]
    t = time.perf_counter()
    code = cli.main(["verify"])
    seconds = time.perf_counter() - t
    capsys.readouterr()
    ok = needed <= names and identical and code == 0 and seconds < 60
    report(10, "figure outputs and verify", ok,
           f"{len(names)} files, missing {sorted(needed - names)}; byte-identical={identical}; "
           f"verify exit {code} in {seconds:.1f}s")
