"""Command-line front end: ``isocond analyze | curves | surface | verify``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import export, fivebar, hybrid, isocurves, verify
from .errors import (
    EmptyGenerator,
    IsocondError,
    NoAssembly,
    OnSerialSingularity,
    SingularAssembly,
    Unreachable,
)
from .types import ALL_MODES, AssemblyMode, Geometry, HybridPosture, WorkingMode, load_geometry

DEFAULT_GEOMETRY = (6.0, 8.0, 5.0)
DEFAULT_OUT = "isocond_out"
AUDIT_TOL = 1e-6
FORMATS = ("csv", "svg", "obj")
# Surfaces trace their generators with a coarser chord tolerance than curves.
SURFACE_CHORD_FACTOR = 4.0

# Flags whose value may start with '-' (working modes, negative numbers).
_VALUE_FLAGS = ("--geom", "--point", "--theta", "--mode", "--assembly", "--levels")


class UsageError(Exception):
    """Bad command-line input; reported with exit code 2."""


def _join_values(argv: list[str]) -> list[str]:
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _floats(text: str, counts: tuple[int, ...], what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if len(vals) not in counts:
        raise UsageError(f"{what}: expected {' or '.join(map(str, counts))} values, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what}: values must be finite")
    return vals


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n < 2:
        raise argparse.ArgumentTypeError(f"resolution must be at least 2, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--geom", help="link lengths L0,L1,L2 (default 6,8,5)")
    src.add_argument("--geom-file", help="JSON file with keys l0, l1, l2")
    common.add_argument("--mode", help="working mode as two signs, e.g. -+")
    common.add_argument("--json", action="store_true", help="print a machine-readable report")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")

    files = argparse.ArgumentParser(add_help=False)
    files.add_argument("--levels", help="comma-separated condition-number levels (each >= 1)")
    files.add_argument("--res", type=_positive_int, help="samples per curve")
    files.add_argument("--out", help="output directory (default $ISOCOND_OUT or ./isocond_out)")
    files.add_argument("--format", help="comma-separated subset of csv,svg,obj")
    files.add_argument("--audit", action="store_true", help="re-evaluate kappa at every written vertex")

    p = argparse.ArgumentParser(prog="isocond", description="Isoconditioning loci of five-bar based manipulators.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="kinematics and conditioning of one posture")
    a.add_argument("--point", help="X,Y (planar) or X,Y,Z (hybrid, world frame)")
    a.add_argument("--theta", help="actuated angles in degrees: T1,T2 (planar) or T1,T2,T3 (hybrid)")
    a.add_argument("--assembly", choices=("+", "-"), help="assembly mode for --theta")

    sub.add_parser("curves", parents=[common, files], help="isoconditioning curves of the planar five-bar")
    s = sub.add_parser("surface", parents=[common, files], help="isoconditioning surfaces of the hybrid")
    s.add_argument("--rev-res", type=_positive_int, help="rings per revolution (default 36)")

    sub.add_parser("verify", parents=[common], help="reduced-scale self-verification suite")
    return p


def _geometry(args) -> Geometry:
    if args.geom_file:
        try:
            return load_geometry(args.geom_file)
        except OSError as exc:
            raise UsageError(f"cannot read geometry file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"geometry file is not valid JSON: {exc}") from None
    if args.geom:
        return Geometry(*_floats(args.geom, (3,), "--geom"))
    return Geometry(*DEFAULT_GEOMETRY)


def _modes(args) -> tuple[WorkingMode, ...]:
    if not args.mode:
        return ALL_MODES
    try:
        return (WorkingMode.parse(args.mode),)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _levels(args) -> tuple[float, ...]:
    if not args.levels:
        return isocurves.DEFAULT_LEVELS
    vals = _floats(args.levels, tuple(range(1, 65)), "--levels")
    for v in vals:
        isocurves.check_level(v)
    return tuple(sorted(set(vals)))


def _formats(args, allowed: tuple[str, ...]) -> tuple[str, ...]:
    if not args.format:
        return allowed
    fmts = tuple(f.strip().lower() for f in args.format.split(",") if f.strip())
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise UsageError(f"--format: unknown format(s) {', '.join(bad)}")
    chosen = tuple(f for f in allowed if f in fmts)
    if not chosen:
        raise UsageError(f"--format: this command writes {', '.join(allowed)}")
    return chosen


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("ISOCOND_OUT") or DEFAULT_OUT)


def _mode_tag(wm: WorkingMode) -> str:
    return str(wm).replace("+", "p").replace("-", "m")


def _num(v: float):
    """JSON-safe number; infinities become None."""
    v = float(v)
    return v if math.isfinite(v) else None


# ---------------------------------------------------------------------------
# analyze


def _planar_record(g: Geometry, q) -> dict:
    jp = fivebar.jacobians(q, g)
    flags = []
    if abs(q.sin_a) < fivebar.SERIAL_TOL:
        flags.append("Leg1Serial")
    if abs(q.sin_b) < fivebar.SERIAL_TOL:
        flags.append("Leg2Serial")
    ka = fivebar.kappa_a(q)
    if math.isinf(ka):
        flags.append("Parallel")
    try:
        wm = str(fivebar.working_mode_of(q))
    except OnSerialSingularity:
        wm = None
    return {
        "space": "planar",
        "theta": [q.theta1, q.theta2, q.theta3, q.theta4],
        "p": list(q.p),
        "c": list(q.c),
        "d": list(q.d),
        "A": jp.a.tolist(),
        "B": jp.b.tolist(),
        "kappa_a": _num(ka),
        "kappa_b": _num(fivebar.kappa_b(q, g)),
        "working_mode": wm,
        "assembly_mode": str(fivebar.assembly_mode_of(q)),
        "flags": flags,
    }


def _hybrid_record(g: Geometry, h: HybridPosture) -> dict:
    jp = hybrid.jacobians3(h, g)
    base = _planar_record(g, h.planar)
    flags = sorted(str(f) for f in hybrid.singularity_flags_b3(h))
    if "Parallel" in base["flags"]:
        flags.append("Parallel")
    base.update({
        "space": "hybrid",
        "theta": [h.theta1, h.theta2, h.theta3, h.theta4, h.theta5],
        "p": list(h.p3),
        "c": list(h.c3),
        "d": list(h.d3),
        "A": jp.a.tolist(),
        "B": jp.b.tolist(),
        "kappa_a": _num(hybrid.kappa_a3(h)),
        "kappa_b": _num(hybrid.kappa_b3(h, g)),
        "axis_distances": list(hybrid.axis_distances(h, g)),
        "flags": flags,
    })
    return base


def _solve_point(g: Geometry, p: tuple[float, float], modes) -> list:
    found, unreachable = [], 0
    for wm in modes:
        try:
            found.append(fivebar.inverse_kinematics(g, p, wm))
        except OnSerialSingularity as exc:
            if all(math.dist(exc.posture.c, q.c) > 1e-12 or math.dist(exc.posture.d, q.d) > 1e-12
                   for q in found):
                found.append(exc.posture)
        except Unreachable:
            unreachable += 1
    if not found:
        raise Unreachable(f"point {p} is outside the workspace")
    return found


def cmd_analyze(args) -> dict:
    g = _geometry(args)
    if bool(args.point) == bool(args.theta):
        raise UsageError("analyze needs exactly one of --point or --theta")
    modes = _modes(args)
    records = []
    if args.point:
        vals = _floats(args.point, (2, 3), "--point")
        if len(vals) == 2:
            records = [_planar_record(g, q) for q in _solve_point(g, (vals[0], vals[1]), modes)]
        else:
            x, y, z = vals
            theta1 = math.atan2(-z, x) if math.hypot(x, z) > 0 else 0.0
            planar = (y, math.hypot(x, z))
            records = [_hybrid_record(g, HybridPosture(theta1, q)) for q in _solve_point(g, planar, modes)]
    else:
        vals = _floats(args.theta, (2, 3), "--theta")
        rad = [math.radians(v) for v in vals]
        assemblies = [AssemblyMode.parse(args.assembly)] if args.assembly else [AssemblyMode.PLUS, AssemblyMode.MINUS]
        for am in assemblies:
            if len(rad) == 2:
                records.append(_planar_record(g, fivebar.direct_kinematics(g, rad[0], rad[1], am)))
            else:
                records.append(_hybrid_record(g, hybrid.hybrid_forward(g, rad[0], rad[1], rad[2], am)))
    return {"command": "analyze", "geometry": g.to_dict(), "postures": records}


def _fmt_value(v) -> str:
    if v is None:
        return "inf"
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    return str(v)


def _print_analyze(report: dict) -> None:
    g = report["geometry"]
    print(f"geometry l0={g['l0']:g} l1={g['l1']:g} l2={g['l2']:g}")
    for n, r in enumerate(report["postures"]):
        print(f"posture {n + 1} ({r['space']}): working mode {r['working_mode'] or 'undefined'}, "
              f"assembly {r['assembly_mode']}")
        for key in ("theta", "p", "c", "d", "A", "B", "kappa_a", "kappa_b", "axis_distances"):
            if key in r:
                print(f"  {key:<15}{_fmt_value(r[key])}")
        print(f"  {'flags':<15}{', '.join(r['flags']) or 'none'}")


# ---------------------------------------------------------------------------
# curves and surfaces


class _Writer:
    """Writes files atomically and removes everything written if a later step fails."""

    def __init__(self, root: Path):
        self.root = root
        self.written: list[Path] = []

    def put(self, name: str, data: bytes) -> None:
        self.written.append(export.write_atomic(self.root / name, data))

    def rollback(self) -> None:
        for path in self.written:
            try:
                path.unlink()
            except OSError:
                pass
        self.written.clear()


def _joint_frame() -> list[isocurves.IsoCurve]:
    pi = math.pi
    return [isocurves.IsoCurve(math.inf, None, ((-pi, -pi), (pi, -pi), (pi, pi), (-pi, pi)), "joint", True)]


def _build_curve_files(g, levels, modes, samples, fmts, do_audit=False) -> tuple[dict[str, bytes], dict]:
    boundary = isocurves.workspace_boundary(g)
    files: dict[str, bytes] = {}
    audit: dict[str, float] = {}
    per_mode = {}
    for wm in modes:
        curves = [c for k in levels for c in isocurves.iso_curve_cartesian(g, k, wm, samples=samples)]
        per_mode[wm] = curves
        tag = _mode_tag(wm)
        if "csv" in fmts:
            files[f"curves_{tag}.csv"] = export.curves_to_csv(curves)
        if "svg" in fmts:
            files[f"curves_{tag}.svg"] = export.curves_to_svg(curves, boundary, title=f"working mode {wm}")
        for k in levels if do_audit else ():
            audit[f"{wm} kappa={k:g}"] = verify.curve_kappa_residual(g, [c for c in curves if c.kappa == k], k)
    every = [c for wm in modes for c in per_mode[wm]]
    joint = [c for k in levels for c in isocurves.iso_curve_jointspace(g, k, samples=samples)
             if c.working_mode in modes]
    if "svg" in fmts:
        panels = [(f"working mode {wm}", per_mode[wm], boundary) for wm in modes]
        files["modes_panel.svg"] = export.panels_to_svg(panels, columns=2 if len(panels) > 1 else 1)
        files["cartesian_all.svg"] = export.curves_to_svg(every, boundary, title="all working modes")
        files["jointspace.svg"] = export.curves_to_svg(joint, _joint_frame(), title="joint space")
    if "csv" in fmts:
        files["cartesian_all.csv"] = export.curves_to_csv(every)
        files["jointspace.csv"] = export.curves_to_csv(joint)
    return files, audit


def _build_surface_files(g, levels, modes, samples, rev, do_audit=False) -> tuple[dict[str, bytes], dict, list[str]]:
    files: dict[str, bytes] = {}
    audit: dict[str, float] = {}
    skipped = []
    chord = SURFACE_CHORD_FACTOR * isocurves.default_chord_tol(g)
    for k in levels:
        for wm in modes:
            try:
                surf = hybrid.iso_surface(g, k, wm, samples_curve=samples, samples_revolution=rev,
                                          chord_tol=chord)
            except EmptyGenerator:
                skipped.append(f"kappa={k:g} mode {wm}")
                continue
            files[f"surface_k{k:g}_{_mode_tag(wm)}.obj"] = export.mesh_to_obj(surf)
            if do_audit:
                audit[f"{wm} kappa={k:g}"] = verify.surface_kappa_residual(g, surf, wm)
    wb = hybrid.workspace_boundary_surface(g, samples=max(16, samples // 4), samples_revolution=rev)
    files["workspace_boundary.obj"] = export.mesh_to_obj(wb)
    if do_audit:
        audit["workspace boundary watertight"] = 0.0 if verify.is_watertight(wb.triangles) else math.inf
    return files, audit, skipped


def _write_all(out: Path, files: dict[str, bytes]) -> list[str]:
    w = _Writer(out)
    try:
        for name in sorted(files):
            w.put(name, files[name])
    except BaseException:
        w.rollback()
        raise
    return [str(p) for p in w.written]


def _files_report(command, g, out, written, audit, do_audit, skipped=()) -> dict:
    report = {"command": command, "geometry": g.to_dict(), "out": str(out), "files": written,
              "skipped": list(skipped)}
    if do_audit:
        report["audit"] = {
            "tolerance": AUDIT_TOL,
            "max_residual": {k: _num(v) for k, v in sorted(audit.items())},
            "ok": all(v <= AUDIT_TOL for v in audit.values()),
        }
    return report


def cmd_curves(args) -> dict:
    g = _geometry(args)
    levels, modes = _levels(args), _modes(args)
    fmts = _formats(args, ("csv", "svg"))
    samples = args.res or isocurves.DEFAULT_SAMPLES
    files, audit = _build_curve_files(g, levels, modes, samples, fmts, args.audit)
    out = _out_dir(args)
    written = _write_all(out, files)
    return _files_report("curves", g, out, written, audit, args.audit)


def cmd_surface(args) -> dict:
    g = _geometry(args)
    levels, modes = _levels(args), _modes(args)
    _formats(args, ("obj",))
    samples = args.res or 180
    rev = args.rev_res or 36
    files, audit, skipped = _build_surface_files(g, levels, modes, samples, rev, args.audit)
    out = _out_dir(args)
    written = _write_all(out, files)
    return _files_report("surface", g, out, written, audit, args.audit, skipped)


def _print_files(report: dict) -> None:
    for path in report["files"]:
        print(f"wrote {path}")
    for s in report["skipped"]:
        print(f"skipped {s}: no curve at this level")
    if "audit" in report:
        a = report["audit"]
        for key, v in a["max_residual"].items():
            mark = "ok" if v is not None and v <= a["tolerance"] else "FAIL"
            print(f"audit {key}: {_fmt_value(v)} [{mark}]")


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> dict:
    g = _geometry(args) if (args.geom or args.geom_file) else verify.REFERENCE_GEOMETRY
    results = verify.run_checks(g, seed=args.seed)
    return {
        "command": "verify",
        "geometry": g.to_dict(),
        "seed": args.seed,
        "ok": all(r.ok for r in results),
        "checks": [{"name": r.name, "ok": r.ok, "detail": r.detail, "seconds": r.seconds} for r in results],
    }


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {"analyze": cmd_analyze, "curves": cmd_curves, "surface": cmd_surface, "verify": cmd_verify}
    try:
        report = handlers[args.command](args)
    except (Unreachable, NoAssembly) as exc:
        print(f"isocond: unreachable: {exc}", file=sys.stderr)
        return 2
    except SingularAssembly as exc:
        print(f"isocond: singular assembly: {exc}", file=sys.stderr)
        return 2
    except (UsageError, IsocondError, ValueError) as exc:
        print(f"isocond: {exc}", file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    elif args.command == "analyze":
        _print_analyze(report)
    elif args.command == "verify":
        for c in report["checks"]:
            print(verify.CheckResult(c["name"], c["ok"], c["detail"], c["seconds"]).line())
        print("all checks passed" if report["ok"] else "some checks FAILED")
    else:
        _print_files(report)
    if args.command == "verify":
        return 0 if report["ok"] else 1
    if report.get("audit") and not report["audit"]["ok"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
