"""Closed-form free resolvent kernels and their weighted-norm checks.

The half-line kernel with a Dirichlet wall at 0 is the odd reflection of the
line kernel i e^{i sigma |x-y|} / (2 sigma); the 1/(2 sigma) normalization is
the one forced by (-d^2/dx^2 - sigma^2) G = delta_y, verified against a dense
boundary-value solve in the tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResolutionError
from .models import WeightFunction, make_weight
from .numerics import (Grid, fd_derivative_matrix, grid_for_frequency,
                       largest_singular_value, loglog_fit)


def r0_kernel_line(sigma: complex, x, y):
    """Full-line kernel of (-d^2 - sigma^2)^{-1}: i e^{i sigma |x-y|}/(2 sigma)."""
    if sigma == 0:
        raise DomainError("sigma must be nonzero")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 0.5j * np.exp(1j * sigma * np.abs(x - y)) / sigma


def r0_kernel_halfline(sigma: complex, x, y):
    """Dirichlet half-line kernel (i/(2 sigma)) (e^{i s |x-y|} - e^{i s (x+y)})."""
    if sigma == 0:
        raise DomainError("sigma must be nonzero")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x < 0) or np.any(y < 0):
        raise DomainError("half-line kernel needs x, y >= 0")
    return 0.5j * (np.exp(1j * sigma * np.abs(x - y))
                   - np.exp(1j * sigma * (x + y))) / sigma


def m_kernel(sigma: complex, x, y):
    """Two-point sphere kernel (i/2)(e^{i s (x-y)} + e^{-i s (x-y)})."""
    if sigma == 0:
        raise DomainError("sigma must be nonzero")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    return 0.5j * (np.exp(1j * sigma * d) + np.exp(-1j * sigma * d))


def plane_wave_factor(sigma: complex, omega: int, x):
    """Restriction kernel e^{i sigma omega x} on the two-point sphere."""
    if omega not in (-1, 1):
        raise DomainError("the 0-sphere has the two points -1, +1")
    return np.exp(1j * sigma * omega * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SpectralKernelSample:
    sigma: complex
    x: float
    y: float
    value_r0: complex
    value_m: complex


def sample_kernels(sigma: complex, x: float, y: float) -> SpectralKernelSample:
    return SpectralKernelSample(
        sigma=sigma, x=x, y=y,
        value_r0=complex(r0_kernel_halfline(sigma, x, y)),
        value_m=complex(m_kernel(sigma, x, y)))


def reflection_identity_residual(sigma: complex, x, y) -> float:
    """Pointwise defect of R0(s) - R0(-s) = M(s)/s together with the
    factorization of M through the two plane-wave restrictions."""
    if sigma == 0:
        raise DomainError("sigma must be nonzero")
    if sigma.real <= 0:
        raise DomainError("identity stated for Re sigma > 0")
    lhs = r0_kernel_line(sigma, x, y) - r0_kernel_line(-sigma, x, y)
    rhs = m_kernel(sigma, x, y) / sigma
    res_identity = np.abs(lhs - rhs)
    factor = sum(plane_wave_factor(sigma, w, x) * plane_wave_factor(-sigma, w, y)
                 for w in (-1, 1))
    res_factor = np.abs(m_kernel(sigma, x, y) - 0.5j * factor)
    return float(np.max(np.maximum(res_identity, res_factor)))


def _weighted_kernel_matrix(kernel_vals: np.ndarray, weight_vals: np.ndarray,
                            grid: Grid) -> np.ndarray:
    """Symmetric quadrature scaling so the 2-norm approximates the L2 norm."""
    sqw = np.sqrt(grid.trapezoid_weights())
    scale = sqw * weight_vals
    return scale[:, None] * kernel_vals * scale[None, :]


def default_norm_grid(gamma: float, weight: WeightFunction, sigma_abs: float,
                      points_per_wavelength: int = 10) -> Grid:
    x_max = weight.x_linear + 12.0 / gamma
    return grid_for_frequency(sigma_abs, x_max, points_per_wavelength)


def weighted_r0_norm(sigma: complex, gamma: float, weight: WeightFunction,
                     grid: Grid, s: int = 0, eps: float = 1e-6) -> float:
    """Largest singular value of e^{-gamma phi} D^s R0(sigma) e^{-gamma phi}.

    Derivatives are realized by finite differences applied to kernel columns,
    which keeps a single code path for every coefficient model.
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    if sigma.imag <= -gamma + eps - 1e-15:
        raise DomainError(f"Im sigma = {sigma.imag} outside strip (> {-gamma + eps})")
    if s not in (0, 1, 2):
        raise DomainError("derivative order s must be 0, 1 or 2")
    wavelength = 2.0 * np.pi / max(abs(sigma), 1e-12)
    if grid.dx > wavelength / 10.0:
        raise ResolutionError(
            f"grid dx={grid.dx:.4g} too coarse for |sigma|={abs(sigma):.4g}")
    xs = grid.x
    kernel = r0_kernel_halfline(sigma, xs[:, None], xs[None, :])
    if s:
        kernel = fd_derivative_matrix(grid.n, grid.dx, s) @ kernel
    wvals = np.exp(-gamma * weight(xs))
    mat = _weighted_kernel_matrix(kernel, wvals, grid)
    return largest_singular_value(mat)


def weighted_m_norm(sigma: complex, gamma: float, weight: WeightFunction,
                    grid: Grid) -> float:
    xs = grid.x
    kernel = m_kernel(sigma, xs[:, None], xs[None, :])
    wvals = np.exp(-gamma * weight(xs))
    mat = _weighted_kernel_matrix(kernel, wvals, grid)
    return largest_singular_value(mat)


@dataclass(frozen=True)
class NormFitReport:
    sigmas: tuple[complex, ...]
    norms: tuple[float, ...]
    s: int
    gamma: float
    slope: float
    intercept: float

    def to_json_records(self) -> str:
        records = [{"sigma": [z.real, z.imag], "norm": n, "s": self.s,
                    "gamma": self.gamma, "slope": self.slope,
                    "intercept": self.intercept}
                   for z, n in zip(self.sigmas, self.norms)]
        return json.dumps(records, sort_keys=True)


def r0_norm_fit(sigmas, gamma: float, weight: WeightFunction | None = None,
                s: int = 0, points_per_wavelength: int = 10) -> NormFitReport:
    """Norms across a sigma list plus the log-log slope against |sigma|."""
    sigmas = [complex(z) for z in sigmas]
    if weight is None:
        weight = make_weight(1.0, 3.0)
    norms = []
    for z in sigmas:
        grid = default_norm_grid(gamma, weight, abs(z), points_per_wavelength)
        norms.append(weighted_r0_norm(z, gamma, weight, grid, s=s))
    slope, intercept, _ = loglog_fit([abs(z) for z in sigmas], norms)
    return NormFitReport(tuple(sigmas), tuple(norms), s, gamma, slope, intercept)


@dataclass(frozen=True)
class MDecayReport:
    sigmas: tuple[complex, ...]
    norms: tuple[float, ...]
    gamma: float
    sup_norm: float
    ratio: float

    def to_json(self) -> str:
        return json.dumps({
            "gamma": self.gamma, "sup_norm": self.sup_norm, "ratio": self.ratio,
            "records": [{"sigma": [z.real, z.imag], "norm": n}
                        for z, n in zip(self.sigmas, self.norms)]}, sort_keys=True)


def verify_m_decay(sigma_list, gamma: float, eps: float,
                   weight: WeightFunction | None = None) -> MDecayReport:
    """Uniform boundedness of the weighted two-point-sphere operator.

    In one dimension the decay exponent is zero, so the check is that a single
    constant covers the whole sigma list.
    """
    if eps <= 0 or gamma <= 0:
        raise DomainError("gamma and eps must be positive")
    sigmas = [complex(z) for z in sigma_list]
    for z in sigmas:
        if abs(z.imag) >= gamma - eps:
            raise DomainError(
                f"sigma={z} violates |Im sigma| < gamma - eps = {gamma - eps}")
        if z.real < 1.0:
            raise DomainError(f"sigma={z} needs Re sigma >= 1")
    if weight is None:
        weight = make_weight(1.0, 3.0)
    norms = []
    for z in sigmas:
        grid = default_norm_grid(gamma, weight, abs(z))
        norms.append(weighted_m_norm(z, gamma, weight, grid))
    sup = max(norms)
    ratio = sup / min(norms) if min(norms) > 0 else float("inf")
    return MDecayReport(tuple(sigmas), tuple(norms), gamma, sup, ratio)
