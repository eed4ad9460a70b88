import json

import numpy as np
import pytest

from reslab import builtin_model
from reslab.complex_utils import (AnalyticHandle, circle_contour,
                                  handle_from_polynomial, winding_number)
from reslab.errors import (BoundaryZeroError, CompletenessError, DomainError,
                           RefinementError)
from reslab.models import FrequencyWindow, model_from_config
from reslab.search import (blaschke_lower_bound, find_zeros, jensen_zero_bound,
                           refine_zero, resonances_to_json, scan_resonances,
                           winding_count, wronskian_handle)

SW = builtin_model("square_well", (10, 1))
FREE = builtin_model("free")

SW_ROOT_1 = 3.2270135884927313 - 1.2697160956756048j
SW_ROOT_2 = 6.983088611012475 - 1.7003108756198735j


def _poly(coeffs):
    return handle_from_polynomial(coeffs)


def _fn(vec):
    return AnalyticHandle(evaluator=lambda z: vec(np.array([z]))[0],
                          vector_evaluator=vec)


def test_winding_single_zero():
    f = _poly([1.0, -(2.0 + 0.5j)])
    assert winding_count(f, (1.0, 3.0, 0.0, 1.0)) == 1


def test_winding_orders_add():
    z0, z1 = 1.0 + 0.4j, 2.2 + 0.1j
    f = _fn(lambda zs: (zs - z0) ** 2 * (zs - z1))
    assert winding_count(f, (0.0, 3.0, -0.5, 1.0)) == 3


def test_winding_sampling_refinement_invariance():
    z0 = 1.0 + 0.4j
    f = _fn(lambda zs: (zs - z0) ** 3 + 0.001)
    rect = (0.0, 2.0, -0.2, 1.0)
    w1 = winding_count(f, rect, samples=64)
    w2 = winding_count(f, rect, samples=512)
    assert w1 == w2 == 3


def test_winding_square_well_two_roots_rectangle():
    handle = wronskian_handle(SW, 1.0)
    rect = (1.0, 8.0, -2.5, 0.2)
    assert winding_count(handle, rect) == 2


def test_refine_sqrt_two():
    z, m = refine_zero(_fn(lambda zs: zs * zs - 2.0), 1.5)
    assert abs(z - np.sqrt(2)) < 1e-12
    assert m == 1


def test_refine_double_zero():
    z0 = 1.0 - 0.3j
    z, m = refine_zero(_fn(lambda zs: (zs - z0) ** 2), 1.1 - 0.2j)
    assert abs(z - z0) < 1e-9
    assert m == 2


def test_refine_reports_best_rectangle_on_divergence():
    f = _fn(lambda zs: np.exp(zs))  # zero-free
    with pytest.raises(RefinementError) as info:
        refine_zero(f, 0.5 + 0.5j, max_iter=12)
    assert info.value.best_rectangle is not None


def test_refine_square_well_matches_oracle():
    handle = wronskian_handle(SW, 1.0)
    z, m = refine_zero(handle, SW_ROOT_1 + 0.02 - 0.01j)
    assert abs(z - SW_ROOT_1) < 1e-8
    assert m == 1


def test_find_zeros_polynomial_with_multiplicity():
    z0, z1 = 0.8 + 0.3j, 1.9 - 0.2j
    f = _fn(lambda zs: (zs - z0) ** 2 * (zs - z1))
    zeros = find_zeros(f, (0.0, 3.0, -1.0, 1.0), refine_diag=0.3)
    assert len(zeros) == 2
    found = sorted(zeros, key=lambda t: t[0].real)
    assert abs(found[0][0] - z0) < 1e-9 and found[0][1] == 2
    assert abs(found[1][0] - z1) < 1e-9 and found[1][1] == 1


def test_find_zeros_subdivision_conserves_winding():
    z0, z1, z2 = 0.5 + 0.5j, 1.5 + 0.25j, 2.5 + 0.75j
    f = _fn(lambda zs: (zs - z0) * (zs - z1) * (zs - z2))
    trace = []
    zeros = find_zeros(f, (0.0, 3.0, 0.0, 1.0), refine_diag=0.4, trace=trace)
    assert sum(m for _, m in zeros) == 3
    for _, parent_w, _, child_ws in trace:
        assert sum(child_ws) == parent_w


def test_scan_free_model_empty():
    window = FrequencyWindow(a0=1.0, b0=6.0, eps0=0.2, eps=0.0, h=1.0,
                             gamma=1.0, exclusion_radius=0.05, im_top=0.2)
    assert scan_resonances(FREE, window, 1.0) == []


def test_scan_acceptance_rectangle_is_empty_for_square_well():
    # the shipped well keeps its resonances below Im = -1.2; the shallow
    # rectangle must come back empty with zero total winding
    window = FrequencyWindow(a0=1.0, b0=6.0, eps0=0.2, eps=0.0, h=1.0,
                             gamma=1.0, exclusion_radius=0.05, im_top=0.2)
    res = scan_resonances(SW, window, 1.0)
    assert res == []


def test_scan_square_well_matches_oracle_bijection():
    # deep window via a gamma override (compact support allows any rate)
    model = model_from_config({"name": "square_well", "params": [10, 1],
                               "gamma": 3.0})
    window = FrequencyWindow(a0=1.0, b0=8.0, eps0=0.5, eps=0.0, h=1.0,
                             gamma=3.0, exclusion_radius=0.05, im_top=0.2)
    res = scan_resonances(model, window, 1.0, refine_diag=0.5)
    assert len(res) == 2
    assert all(r.multiplicity == 1 for r in res)
    found = sorted((r.lam for r in res), key=lambda z: z.real)
    for got, want in zip(found, (SW_ROOT_1, SW_ROOT_2)):
        assert abs(got - want) < 1e-8


def test_scan_never_reports_upper_half_zeros():
    model = model_from_config({"name": "square_well", "params": [10, 1],
                               "gamma": 3.0})
    window = FrequencyWindow(a0=1.0, b0=8.0, eps0=0.5, eps=0.0, h=1.0,
                             gamma=3.0, exclusion_radius=0.05, im_top=0.2)
    for r in scan_resonances(model, window, 1.0, refine_diag=0.5):
        assert r.lam.imag <= 1e-8


def test_jensen_two_zeros_in_disk():
    c = 0.2 + 0.1j
    f = _fn(lambda zs: (zs - c - 0.1) * (zs - c + 0.1))
    bound = jensen_zero_bound(f, c, 1.0, 0.5)
    assert bound >= 2.0


def test_jensen_zero_free_exponential():
    f = _fn(lambda zs: np.exp(zs))
    bound = jensen_zero_bound(f, 0.0, 1.0, 0.5)
    assert bound >= 0.0
    assert winding_number(f, circle_contour(0.0, 0.5)) == 0


def test_jensen_constant_gives_zero():
    f = _fn(lambda zs: 5.0 * np.ones_like(zs))
    assert jensen_zero_bound(f, 0.0, 1.0, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_jensen_rejects_center_zero_and_bad_radii():
    f = _fn(lambda zs: zs)
    with pytest.raises(DomainError):
        jensen_zero_bound(f, 0.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        jensen_zero_bound(_fn(lambda zs: zs + 1), 0.0, 0.5, 1.0)


def test_jensen_bound_dominates_exact_count_seeded():
    rng = np.random.default_rng(42)
    for _ in range(100):
        degree = int(rng.integers(1, 7))
        roots = (rng.uniform(-0.3, 0.3, degree)
                 + 1j * rng.uniform(-0.3, 0.3, degree))
        coeffs = np.poly(roots)
        f = handle_from_polynomial(coeffs)
        if abs(f(0.0 + 0j)) < 1e-6:
            continue
        bound = jensen_zero_bound(f, 0.0, 1.0, 0.5)
        exact = winding_number(f, circle_contour(0.0, 0.5, samples=256))
        assert bound >= exact - 1e-9


def _sample_outside_disks(rng, center, rho, disks, count):
    pts = []
    while len(pts) < count:
        z = (center + rng.uniform(-rho, rho) + 1j * rng.uniform(-rho, rho))
        if abs(z - center) >= rho:
            continue
        if any(abs(z - c) < r for c, r in disks):
            continue
        pts.append(z)
    return np.array(pts)


def test_blaschke_certificate_sound_linear():
    f = _fn(lambda zs: zs - 0.2)
    cert = blaschke_lower_bound(f, 0.0, (1.0, 0.8, 0.5), [0.2 + 0j], 0.05)
    rng = np.random.default_rng(3)
    pts = _sample_outside_disks(rng, 0.0, 0.5, cert.excluded_disks, 500)
    vals = np.log(np.abs(f.eval_many(pts)))
    assert np.all(vals >= cert.min_log_modulus)


def test_blaschke_zero_free_reduces_to_caratheodory():
    f = _fn(lambda zs: np.exp(0.3 * zs) + 2.0)
    cert = blaschke_lower_bound(f, 0.0, (1.0, 0.8, 0.5), [], 0.05)
    assert cert.blaschke_term == 0.0
    rng = np.random.default_rng(4)
    pts = _sample_outside_disks(rng, 0.0, 0.5, (), 500)
    vals = np.log(np.abs(f.eval_many(pts)))
    assert np.all(vals >= cert.min_log_modulus)


def test_blaschke_sound_on_wronskian():
    model = model_from_config({"name": "square_well", "params": [10, 1],
                               "gamma": 3.0})
    handle = wronskian_handle(model, 1.0)
    center = 5.0 - 1.2j
    rho = (2.6, 2.2, 1.6)
    zeros = [z for z, m in
             find_zeros(handle, (center.real - 2.2, center.real + 2.2,
                                 center.imag - 2.2, center.imag + 2.2),
                        refine_diag=0.5)
             if abs(z - center) < rho[1]]
    cert = blaschke_lower_bound(handle, center, rho, zeros, 0.08)
    rng = np.random.default_rng(5)
    pts = _sample_outside_disks(rng, center, rho[2], cert.excluded_disks, 500)
    vals = np.log(np.abs(handle.eval_many(pts)))
    assert np.all(vals >= cert.min_log_modulus)


def test_blaschke_completeness_error():
    f = _fn(lambda zs: (zs - 0.2) * (zs + 0.3))
    with pytest.raises(CompletenessError):
        blaschke_lower_bound(f, 0.0, (1.0, 0.8, 0.5), [0.2 + 0j], 0.05)


def test_resonance_json_records():
    window = FrequencyWindow(a0=1.0, b0=8.0, eps0=0.5, eps=0.0, h=1.0,
                             gamma=3.0, exclusion_radius=0.05, im_top=0.2)
    model = model_from_config({"name": "square_well", "params": [10, 1],
                               "gamma": 3.0})
    res = scan_resonances(model, window, 1.0, refine_diag=0.5)
    records = json.loads(resonances_to_json(res, model.label))
    assert len(records) == 2
    assert {"re", "im", "multiplicity", "h", "model_label", "window"} <= set(records[0])
