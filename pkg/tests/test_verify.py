import numpy as np
import pytest

from isocond import fivebar, hybrid, linalg, verify
from isocond.types import WorkingMode


def test_reduced_scale_run_passes():
    results = verify.run_checks(scale=0.2, seed=3)
    assert [r.name for r in results] == [c[0] for c in verify.CHECKS]
    assert all(r.ok for r in results), [r.line() for r in results if not r.ok]


def test_seed_reproduces_details():
    a = verify.run_checks(scale=0.1, seed=5)
    b = verify.run_checks(scale=0.1, seed=5)
    skip = {"surfaces", "determinism"}
    assert [r.detail for r in a if r.name not in skip] == [r.detail for r in b if r.name not in skip]


def test_crash_is_a_failed_check(monkeypatch):
    def boom(g, rng, n):
        raise RuntimeError("broken")
    monkeypatch.setattr(verify, "CHECKS", [("boom", boom, 1)])
    (r,) = verify.run_checks()
    assert not r.ok and "RuntimeError" in r.detail
    assert r.line().startswith("[FAIL] boom:")


def test_broken_svd_is_caught(monkeypatch):
    real = linalg.singular_values
    monkeypatch.setattr(linalg, "singular_values", lambda m: tuple(1.001 * v for v in real(m)))
    ok, _ = verify.check_svd_oracle(verify.REFERENCE_GEOMETRY, np.random.default_rng(0), 50)
    assert not ok


def test_broken_kappa_is_caught(monkeypatch):
    real = fivebar.kappa_a
    monkeypatch.setattr(fivebar, "kappa_a", lambda q: real(q) + 1e-7)
    ok, _ = verify.check_kappa_a_oracle(verify.REFERENCE_GEOMETRY, np.random.default_rng(0), 50)
    assert not ok


def test_audits_detect_displaced_vertices():
    g = verify.REFERENCE_GEOMETRY
    wm = WorkingMode.parse("-+")
    s = hybrid.iso_surface(g, 2.0, wm, samples_curve=120, samples_revolution=8)
    assert verify.generator_distance(s) <= 1e-12
    assert verify.surface_kappa_residual(g, s, wm) <= 1e-6
    moved = hybrid.IsoSurface(s.kappa, s.vertices * 1.01, s.triangles, s.generators, s.theta1_range)
    assert verify.generator_distance(moved) > 1e-3
    assert verify.surface_kappa_residual(g, moved, wm) > 1e-3


def test_watertight():
    tet = np.array([[0, 1, 2], [0, 3, 1], [1, 3, 2], [2, 3, 0]])
    assert verify.is_watertight(tet)
    assert not verify.is_watertight(tet[:3])
