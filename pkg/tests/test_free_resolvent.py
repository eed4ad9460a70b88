import numpy as np
import pytest
from scipy.linalg import solve_banded

from reslab import DomainError, make_weight
from reslab.errors import ResolutionError
from reslab.free_resolvent import (default_norm_grid, m_kernel, r0_kernel_halfline,
                                   r0_kernel_line, r0_norm_fit,
                                   reflection_identity_residual, sample_kernels,
                                   verify_m_decay, weighted_m_norm,
                                   weighted_r0_norm)
from reslab.numerics import Grid, linear_fit


def test_kernel_vanishes_at_dirichlet_wall():
    for y in (0.2, 1.0, 4.7):
        assert abs(r0_kernel_halfline(1.0 + 0j, 0.0, y)) < 1e-15


def test_kernel_symmetry_exact():
    rng = np.random.default_rng(11)
    xs = rng.uniform(0, 8, 100)
    ys = rng.uniform(0, 8, 100)
    for sigma in (1.0 + 0j, 2.5 - 0.3j, 0.7 + 1.1j):
        k1 = r0_kernel_halfline(sigma, xs, ys)
        k2 = r0_kernel_halfline(sigma, ys, xs)
        assert np.array_equal(k1, k2)


def test_kernel_against_dense_bvp_solve():
    # oracle: (-d^2 + 1) u = delta_1 with Dirichlet at 0, solved by second
    # order finite differences on a long truncated interval
    sigma = 1j
    y_src = 1.0
    x_max, n = 14.0, 28001
    xs = np.linspace(0, x_max, n)
    dx = xs[1] - xs[0]
    band = np.zeros((3, n - 2))
    band[0, 1:] = -1.0 / dx**2
    band[1, :] = 2.0 / dx**2 + 1.0
    band[2, :-1] = -1.0 / dx**2
    rhs = np.zeros(n - 2)
    idx = int(round(y_src / dx)) - 1
    rhs[idx] = 1.0 / dx
    u = solve_banded((1, 1), band, rhs)
    oracle = u[idx]
    val = r0_kernel_halfline(sigma, 1.0, 1.0)
    assert abs(val - oracle) / abs(oracle) < 1e-4


def test_kernel_solves_ode_away_from_source():
    # finite-difference (-d^2 - sigma^2) applied to the kernel vanishes off y
    sigma = 2.0 - 0.2j
    y = 1.5
    xs = np.linspace(2.5, 4.0, 200)
    d = 1e-4
    g0 = r0_kernel_halfline(sigma, xs, y)
    gp = r0_kernel_halfline(sigma, xs + d, y)
    gm = r0_kernel_halfline(sigma, xs - d, y)
    resid = -(gp - 2 * g0 + gm) / d**2 - sigma**2 * g0
    assert np.max(np.abs(resid)) < 1e-5


def test_kernel_rejects_sigma_zero():
    with pytest.raises(DomainError):
        r0_kernel_halfline(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        m_kernel(0.0, 1.0, 1.0)


def test_reflection_identity_point_values():
    assert reflection_identity_residual(2.0 + 0j, 0.3, 1.7) < 1e-13
    assert reflection_identity_residual(1.0 - 0.1j, 0.3, 1.7) < 1e-12
    # coincidence point: residual zero and M(s, x, x) = i
    assert reflection_identity_residual(1.3 + 0j, 0.8, 0.8) < 1e-14
    assert m_kernel(1.3 + 0j, 0.8, 0.8) == pytest.approx(1j)


def test_reflection_identity_requires_right_half_plane():
    with pytest.raises(DomainError):
        reflection_identity_residual(-1.0 + 0j, 0.3, 0.5)


def test_sample_kernels_record():
    s = sample_kernels(2.0 + 0j, 0.0, 1.0)
    assert s.value_r0 == 0.0
    assert s.value_m == m_kernel(2.0 + 0j, 0.0, 1.0)


def test_weighted_norm_schur_oracle():
    # Schur bound for the half-line kernel at real sigma:
    # |K(x,y)| <= e^{-g phi(x)} e^{-g phi(y)} / |sigma|, so the norm is at
    # most (integral of the weight) / |sigma|
    gamma = 1.0
    weight = make_weight(1.0, 3.0)
    sigma = 10.0 + 0j
    grid = default_norm_grid(gamma, weight, abs(sigma))
    schur_c = float(np.sum(np.exp(-gamma * weight(grid.x))) * grid.dx)
    norm = weighted_r0_norm(sigma, gamma, weight, grid, s=0)
    assert norm <= schur_c / abs(sigma)
    assert norm > 0.01 / abs(sigma)


def test_weighted_norm_imaginary_axis_bound():
    # self-adjoint resolvent bound: dist(sigma^2, [0, inf)) = t^2
    gamma = 1.0
    weight = make_weight(1.0, 3.0)
    for t in (1.0, 2.0):
        grid = default_norm_grid(gamma, weight, t)
        norm = weighted_r0_norm(t * 1j, gamma, weight, grid, s=0)
        assert norm <= 1.0 / t**2 * 1.02


def test_weighted_norm_strip_and_resolution_errors():
    weight = make_weight(1.0, 3.0)
    grid = Grid(10.0, 400)
    with pytest.raises(DomainError):
        weighted_r0_norm(1.0 - 1.5j, 1.0, weight, grid)
    with pytest.raises(ResolutionError):
        weighted_r0_norm(100.0 + 0j, 1.0, weight, grid)
    with pytest.raises(DomainError):
        weighted_r0_norm(2.0 + 0j, 1.0, weight, grid, s=3)


def test_weighted_norm_slope_minus_one():
    fit = r0_norm_fit([1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0], gamma=1.0, s=0)
    assert abs(fit.slope + 1.0) <= 0.1


def test_weighted_norm_slope_s2():
    fit = r0_norm_fit([1.0, 2.0, 4.0, 8.0, 16.0], gamma=1.0, s=2)
    assert abs(fit.slope - 1.0) <= 0.15


def test_weighted_norm_grid_refinement_stable():
    gamma = 1.0
    weight = make_weight(1.0, 3.0)
    sigma = 5.0 + 0j
    g1 = default_norm_grid(gamma, weight, abs(sigma))
    g2 = Grid(g1.x_max, 2 * g1.n - 1)
    n1 = weighted_r0_norm(sigma, gamma, weight, g1)
    n2 = weighted_r0_norm(sigma, gamma, weight, g2)
    assert abs(n1 - n2) / n2 < 0.01


def test_semiclassical_h_scaling():
    # || (hD)^s e^{-g phi} R0(lam, h) e^{-g phi} || = O(h^-1) for fixed lam:
    # equals h^{s-2} times the sigma-plane norm at sigma = lam / h
    gamma = 1.0
    weight = make_weight(1.0, 3.0)
    lam = 2.0
    for s in (0, 1, 2):
        hs = np.array([0.5, 0.25, 0.125])
        vals = []
        for h in hs:
            sigma = lam / h
            grid = default_norm_grid(gamma, weight, sigma)
            vals.append(h ** (s - 2) * weighted_r0_norm(sigma + 0j, gamma,
                                                        weight, grid, s=s))
        slope, _, _ = linear_fit(np.log(hs), np.log(np.array(vals)))
        assert abs(slope + 1.0) < 0.25, f"s={s}: got h-slope {slope}"


def test_m_decay_uniform_bound():
    report = verify_m_decay(np.linspace(1, 50, 8), gamma=1.0, eps=0.1)
    assert report.ratio < 10.0


def test_m_decay_strip_precondition():
    with pytest.raises(DomainError):
        verify_m_decay([1.0 - 0.95j], gamma=1.0, eps=0.1)
    with pytest.raises(DomainError):
        verify_m_decay([0.5 + 0j], gamma=1.0, eps=0.1)  # Re sigma < 1


def test_m_decay_gamma_monotone():
    sigmas = [1.0, 5.0, 10.0]
    weight = make_weight(1.0, 3.0)
    r1 = verify_m_decay(sigmas, gamma=1.0, eps=0.1, weight=weight)
    r2 = verify_m_decay(sigmas, gamma=2.0, eps=0.1, weight=weight)
    for n1, n2 in zip(r1.norms, r2.norms):
        assert n2 <= n1 + 1e-10


def test_fit_report_json_records():
    fit = r0_norm_fit([1.0, 2.0], gamma=1.0, s=0)
    import json
    records = json.loads(fit.to_json_records())
    assert len(records) == 2
    assert set(records[0]) == {"sigma", "norm", "s", "gamma", "slope", "intercept"}
