import numpy as np
import pytest

from reslab import DomainError
from reslab.complex_utils import (AnalyticHandle, ContourSpec,
                                  cauchy_riemann_residual, circle_contour,
                                  contour_integral, handle_from_polynomial,
                                  rectangle_contour, seeded_function_family,
                                  winding_number)
from reslab.errors import BoundaryZeroError


def _handle(fn):
    return AnalyticHandle(evaluator=lambda z: fn(np.array([z]))[0],
                          vector_evaluator=fn)


def test_contour_integral_cauchy():
    c = 0.3 + 0.2j
    f = _handle(lambda zs: 1.0 / (zs - c))
    val = contour_integral(f, circle_contour(c + 0.05, 1.0))
    assert abs(val - 2j * np.pi) < 1e-10


def test_contour_integral_entire_vanishes():
    f = _handle(lambda zs: zs**2)
    for spec in (circle_contour(0.5, 2.0), rectangle_contour((-1, 1, -1, 1))):
        assert abs(contour_integral(f, spec)) < 1e-10


def test_contour_spec_validation():
    with pytest.raises(DomainError):
        ContourSpec("triangle", (0, 1, 0, 1))
    with pytest.raises(DomainError):
        ContourSpec("circle", (0j, 1.0), samples=100)  # not a power of two
    with pytest.raises(DomainError):
        ContourSpec("circle", (0j, 1.0), samples=256, refinement_cap=128)
    with pytest.raises(DomainError):
        rectangle_contour((1, 1, 0, 2))


def test_winding_polynomial_counts():
    f = handle_from_polynomial([1, -(1 + 0.5j)])
    assert winding_number(f, rectangle_contour((0, 2, 0, 1))) == 1
    g = _handle(lambda zs: (zs - (1 + 0.5j)) ** 2 * (zs - (0.5 + 0.2j)))
    assert winding_number(g, rectangle_contour((0, 2, 0, 1))) == 3
    assert winding_number(g, rectangle_contour((5, 6, 5, 6))) == 0


def test_winding_boundary_zero_detected():
    f = handle_from_polynomial([1, -1.0 - 0.0j])  # zero at 1 on the edge
    with pytest.raises(BoundaryZeroError):
        winding_number(f, rectangle_contour((0, 1, -0.5, 0.5)))


def test_cauchy_riemann_analytic():
    f = _handle(lambda zs: zs**3)
    res = cauchy_riemann_residual(f, np.linspace(-1, 1, 21),
                                  np.linspace(-1, 1, 21))
    assert res < 1e-8


def test_cauchy_riemann_antiholomorphic():
    f = _handle(lambda zs: np.conj(zs))
    res = cauchy_riemann_residual(f, np.linspace(-1, 1, 21),
                                  np.linspace(-1, 1, 21))
    assert res > 0.5  # flagged non-analytic


def test_seeded_family_deterministic():
    fam1 = seeded_function_family(1, "polynomial", 3)
    fam2 = seeded_function_family(1, "polynomial", 3)
    zs = np.array([0.3 + 0.1j, -0.2 + 0.7j])
    for f1, f2 in zip(fam1, fam2):
        assert np.array_equal(f1.eval_many(zs), f2.eval_many(zs))


def test_seeded_family_members_analytic():
    for kind in ("polynomial", "exponential-polynomial"):
        for f in seeded_function_family(7, kind, 5):
            res = cauchy_riemann_residual(f, np.linspace(-1, 1, 15),
                                          np.linspace(-1, 1, 15))
            assert res < 1e-6


def test_seeded_polynomial_degree_equals_large_circle_winding():
    for f in seeded_function_family(3, "polynomial", 6):
        degree = f.info["degree"]
        coeffs = np.asarray(f.info["coefficients"])
        # every root sits inside |z| <= 1 + sum|c_k|/|c_0| (Cauchy bound)
        radius = 2.0 + float(np.sum(np.abs(coeffs[1:])) / np.abs(coeffs[0]))
        big = winding_number(f, circle_contour(0j, radius, samples=1024))
        assert big == degree


def test_seeded_family_needs_positive_count():
    with pytest.raises(DomainError):
        seeded_function_family(1, "polynomial", 0)
    with pytest.raises(DomainError):
        seeded_function_family(1, "fourier", 2)
