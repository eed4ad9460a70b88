import json

import numpy as np
import pytest
from dataclasses import replace

from reslab import builtin_model
from reslab.errors import BadCutoffError, DomainError, ResolutionError
from reslab.quasimodes import (QuasimodeFamily, apply_operator, auto_cutoff,
                               build_quasimode, default_cutoff_width,
                               dirichlet_eigensolve, grid_norm,
                               independence_check, quasimode_header_json,
                               quasimode_to_csv, recompute_accuracy)

FREE = builtin_model("free")
SW = builtin_model("square_well", (10, 1))
GB = builtin_model("gauss_barrier", (2.0, 2.0, 0.4))


def test_free_box_eigenvalues_fourth_order():
    pairs = dirichlet_eigensolve(FREE, np.pi, 1.0, 4, n_grid=2001)
    want = np.array([1.0, 4.0, 9.0, 16.0])
    got = np.array([p.energy for p in pairs])
    dx = np.pi / 2000
    assert np.max(np.abs(got - want)) < 50 * dx**4


def test_square_well_eigenvalues_shifted():
    pairs = dirichlet_eigensolve(SW, 1.0, 1.0, 3, n_grid=2001)
    for n, p in enumerate(pairs, start=1):
        assert p.energy == pytest.approx((n * np.pi) ** 2 - 10.0, abs=1e-5)


def test_eigenfunctions_normalized_and_zero_at_ends():
    pairs = dirichlet_eigensolve(GB, 3.5, 0.1, 3)
    for p in pairs:
        dx = p.x[1] - p.x[0]
        assert grid_norm(p.u, dx) == pytest.approx(1.0, abs=1e-12)
        assert p.u[0] == 0.0 and p.u[-1] == 0.0


def _bohr_sommerfeld_lowest(model, h, x_hi=3.0):
    # oracle: solve the phase quantization for the lowest well mode
    from scipy.integrate import quad

    def phase(e):
        def integrand(x):
            v = float(model.v(np.asarray(x), h))
            return np.sqrt(max(e - v, 0.0)) / h
        xt = x_hi
        xs = np.linspace(0, x_hi, 400)
        vv = np.asarray(model.v(xs, h), dtype=float)
        above = xs[vv > e]
        if above.size:
            xt = float(above[0])
        val, _ = quad(integrand, 0.0, xt, limit=200)
        return val

    lo, hi = 1e-4, 1.99
    target = 0.75 * np.pi  # Dirichlet wall (1/2) plus soft turning point (1/4)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if phase(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_gauss_low_mode_exists_and_matches_bohr_sommerfeld():
    h = 0.12
    pairs = dirichlet_eigensolve(GB, 3.5, h, 2)
    assert pairs[0].energy < 2.0  # below the barrier top
    oracle = _bohr_sommerfeld_lowest(GB, h)
    assert abs(pairs[0].energy - oracle) / oracle < 0.5  # sanity-level match


def test_eigensolve_argument_errors():
    with pytest.raises(DomainError):
        dirichlet_eigensolve(FREE, 1.0, 1.0, 0)
    with pytest.raises(DomainError):
        dirichlet_eigensolve(FREE, 1.0, 1.0, 100, n_grid=50)
    with pytest.raises(ResolutionError):
        dirichlet_eigensolve(FREE, np.pi, 0.05, 6, n_grid=64)


def _gauss_quasimode(h, model=GB, e_window=(0.3, 1.8)):
    width = default_cutoff_width(h)
    length = 2.4 + width + 0.3
    pairs = dirichlet_eigensolve(model, length, h, 30)
    dx = pairs[0].x[1] - pairs[0].x[0]
    cands = [p for p in pairs
             if e_window[0] < p.energy < e_window[1]
             and np.sum(p.u[p.x <= 2.0] ** 2) * dx > 0.6]
    pair = min(cands, key=lambda p: abs(p.energy - 1.0))
    x_cut = auto_cutoff(pair, 2.0, min(3.0, length - width - 0.05))
    return build_quasimode(model, pair, (x_cut, width), tail_tol=0.2)


def test_quasimode_invariants():
    qm = _gauss_quasimode(0.1)
    dx = qm.x[1] - qm.x[0]
    assert grid_norm(qm.u, dx) == pytest.approx(1.0, abs=1e-12)
    assert np.all(qm.u[qm.x > qm.support_radius] == 0.0)
    assert qm.accuracy >= 0
    assert abs(recompute_accuracy(GB, qm) - qm.accuracy) < 1e-12


def test_quasimode_rayleigh_consistency():
    qm = _gauss_quasimode(0.1)
    dx = qm.x[1] - qm.x[0]
    ray = float(np.sum(qm.u * apply_operator(GB, qm.x, qm.h, qm.u)) * dx)
    assert abs(ray - qm.energy) <= qm.accuracy + 1e-12


def test_quasimode_synthetic_decayed_cutoff_inactive():
    # eigenfunction of the full interval, cut where it is already tiny:
    # the accuracy reduces to the pure discretization residual
    pairs = dirichlet_eigensolve(SW, 1.0, 1.0, 1, n_grid=4001)
    pair = pairs[0]
    # embed on a longer interval; beyond x = 1 the mode decays exponentially
    pairs_long = dirichlet_eigensolve(SW, 3.0, 1.0, 1, n_grid=12001)
    p = pairs_long[0]
    assert p.energy < 0  # bound state, exponential tail
    qm = build_quasimode(SW, p, (2.2, 0.5), tail_tol=1e-6)
    assert qm.accuracy < 1e-7


def test_quasimode_accuracy_shrinks_with_h():
    r_big = _gauss_quasimode(0.12).accuracy
    r_small = _gauss_quasimode(0.07).accuracy
    assert r_small < r_big
    slope = (np.log(r_small) - np.log(r_big)) / (1 / 0.07 - 1 / 0.12)
    assert slope < 0


def test_cutoff_at_well_center_rejected():
    h = 0.1
    width = default_cutoff_width(h)
    pairs = dirichlet_eigensolve(GB, 2.4 + width + 0.3, h, 30)
    dx = pairs[0].x[1] - pairs[0].x[0]
    cands = [p for p in pairs if 0.3 < p.energy < 1.8
             and np.sum(p.u[p.x <= 2.0] ** 2) * dx > 0.6]
    pair = min(cands, key=lambda p: abs(p.energy - 1.0))
    with pytest.raises(BadCutoffError):
        build_quasimode(GB, pair, (0.9, width))  # mid-well, u is O(1)


def test_quasimode_energy_window_enforced():
    h = 0.1
    width = default_cutoff_width(h)
    pairs = dirichlet_eigensolve(GB, 2.4 + width + 0.3, h, 30)
    dx = pairs[0].x[1] - pairs[0].x[0]
    cands = [p for p in pairs if 0.3 < p.energy < 1.8
             and np.sum(p.u[p.x <= 2.0] ** 2) * dx > 0.6]
    pair = min(cands, key=lambda p: abs(p.energy - 1.0))
    x_cut = auto_cutoff(pair, 2.0, 2.4 + width)
    with pytest.raises(DomainError):
        build_quasimode(GB, pair, (x_cut, width),
                        energy_window=(2.5, 3.0), tail_tol=0.2)


def test_quasimode_accuracy_stable_under_refinement():
    h = 0.1
    width = default_cutoff_width(h)
    length = 2.4 + width + 0.3

    def build(n_grid):
        pairs = dirichlet_eigensolve(GB, length, h, 30, n_grid=n_grid)
        dx = pairs[0].x[1] - pairs[0].x[0]
        cands = [p for p in pairs if 0.3 < p.energy < 1.8
                 and np.sum(p.u[p.x <= 2.0] ** 2) * dx > 0.6]
        pair = min(cands, key=lambda p: abs(p.energy - 1.0))
        x_cut = 2.35  # fixed cutoff so only the mesh changes
        return build_quasimode(GB, pair, (x_cut, width), tail_tol=0.2)

    r1 = build(2001).accuracy
    r2 = build(4001).accuracy
    assert 0.5 < r1 / r2 < 2.0


def test_quasimode_cutoff_locality():
    # the quasimode never sees a potential change beyond its support
    qm = _gauss_quasimode(0.1)
    bump_at = qm.support_radius + 1.0

    def v_mod(x, h, base=GB.v):
        x = np.asarray(x, dtype=float)
        return base(x, h) + 5.0 * np.exp(-((x - bump_at) / 0.2) ** 2)

    modified = replace(GB, v=v_mod, label="gauss+bump")
    acc2 = recompute_accuracy(modified, qm)
    assert abs(acc2 - qm.accuracy) / qm.accuracy < 0.01


def test_independence_orthonormal_pair():
    x = np.linspace(0, 4, 1001)
    dx = x[1] - x[0]
    u1 = np.sin(np.pi * x / 4)
    u2 = np.sin(2 * np.pi * x / 4)
    from reslab.quasimodes import Quasimode
    members = []
    for u in (u1, u2):
        u = u / grid_norm(u, dx)
        members.append(Quasimode(u=u, x=x, lam=1.0, h=0.1, accuracy=1e-8,
                                 support_radius=4.0, cutoff_spec=(3.0, 1.0)))
    fam = QuasimodeFamily(tuple(members), n_param=0.0, m_param=1.0)
    out = independence_check(fam, 0.1)
    assert out["independent"]
    assert out["margin"] == pytest.approx(1.0, abs=1e-9)


def test_independence_duplicate_member():
    x = np.linspace(0, 4, 1001)
    dx = x[1] - x[0]
    u = np.sin(np.pi * x / 4)
    u = u / grid_norm(u, dx)
    from reslab.quasimodes import Quasimode
    qm = Quasimode(u=u, x=x, lam=1.0, h=0.1, accuracy=1e-8,
                   support_radius=4.0, cutoff_spec=(3.0, 1.0))
    fam = QuasimodeFamily((qm, qm), n_param=0.0, m_param=1.0)
    out = independence_check(fam, 0.1)
    assert not out["independent"]
    assert out["margin"] == pytest.approx(0.0, abs=1e-12)


def test_independence_two_gauss_modes():
    h = 0.1
    width = default_cutoff_width(h)
    length = 2.4 + width + 0.3
    pairs = dirichlet_eigensolve(GB, length, h, 30)
    dx = pairs[0].x[1] - pairs[0].x[0]
    cands = [p for p in pairs if 0.3 < p.energy < 1.8
             and np.sum(p.u[p.x <= 2.0] ** 2) * dx > 0.6]
    cands.sort(key=lambda p: abs(p.energy - 1.0))
    members = []
    for pair in cands[:2]:
        x_cut = auto_cutoff(pair, 2.0, length - width - 0.05)
        members.append(build_quasimode(GB, pair, (x_cut, width), tail_tol=0.2))
    fam = QuasimodeFamily(tuple(members), n_param=0.0, m_param=1.0)
    out = independence_check(fam, h)
    assert out["margin"] > 0.9


def test_family_validation():
    with pytest.raises(DomainError):
        QuasimodeFamily((), n_param=0.0, m_param=1.0)


def test_quasimode_serialization():
    qm = _gauss_quasimode(0.1)
    text = quasimode_to_csv(qm)
    assert text.splitlines()[0] == "x,u"
    header = json.loads(quasimode_header_json(qm))
    assert set(header) == {"lambda", "h", "accuracy", "support_radius"}
