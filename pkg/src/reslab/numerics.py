"""Shared low-level numerics: grids, quadrature, power iteration, fits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import DomainError


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, x_max] with n points, first point at 0."""

    x_max: float
    n: int
    x: np.ndarray = field(init=False, repr=False, compare=False)
    dx: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.x_max <= 0 or self.n < 8:
            raise DomainError(f"bad grid: x_max={self.x_max}, n={self.n}")
        object.__setattr__(self, "x", np.linspace(0.0, self.x_max, self.n))
        object.__setattr__(self, "dx", self.x_max / (self.n - 1))

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


def grid_for_frequency(sigma_abs: float, x_max: float, points_per_wavelength: int = 10,
                       n_min: int = 200, n_max: int = 20000) -> Grid:
    """Grid resolving the wavelength 2*pi/|sigma| with the requested density."""
    wavelength = 2.0 * np.pi / max(sigma_abs, 1e-12)
    n = int(np.ceil(points_per_wavelength * x_max / wavelength)) + 1
    n = max(n, n_min)
    if n > n_max:
        raise DomainError(f"frequency {sigma_abs} needs n={n} > cap {n_max}")
    return Grid(x_max, n)


def quintic_step(t):
    """C^2 smoothstep 6t^5 - 15t^4 + 10t^3 on [0,1], clamped outside."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def quintic_step_derivative(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    d = 30.0 * tc * tc * (1.0 - tc) ** 2
    return np.where(inside, d, 0.0)


def cumulative_integral(y: np.ndarray, dx: float) -> np.ndarray:
    """Cumulative integral from the left grid end, 4th-order composite."""
    y = np.asarray(y)
    if np.iscomplexobj(y):
        return (cumulative_simpson(y.real, dx=dx, initial=0.0)
                + 1j * cumulative_simpson(y.imag, dx=dx, initial=0.0))
    return cumulative_simpson(y, dx=dx, initial=0.0)


def largest_singular_value(mat: np.ndarray, rel_tol: float = 1e-4,
                           max_iter: int = 5000) -> float:
    """Largest singular value by power iteration on the normal operator.

    Deterministic all-ones start so repeated calls agree bit-for-bit.
    """
    n = mat.shape[1]
    v = np.ones(n, dtype=complex) / np.sqrt(n)
    prev = 0.0
    mh = mat.conj().T
    for _ in range(max_iter):
        w = mh @ (mat @ v)
        s = np.linalg.norm(w)
        if s == 0.0:
            return 0.0
        v = w / s
        est = np.sqrt(s)
        if abs(est - prev) <= rel_tol * est:
            return float(est)
        prev = est
    return float(prev)


def fd_derivative_matrix(n: int, dx: float, order: int) -> np.ndarray:
    """Dense central-difference differentiation matrix, one-sided at the ends."""
    if order == 0:
        return np.eye(n)
    d = np.zeros((n, n))
    if order == 1:
        for i in range(1, n - 1):
            d[i, i - 1] = -0.5 / dx
            d[i, i + 1] = 0.5 / dx
        d[0, 0], d[0, 1] = -1.0 / dx, 1.0 / dx
        d[-1, -2], d[-1, -1] = -1.0 / dx, 1.0 / dx
    elif order == 2:
        for i in range(1, n - 1):
            d[i, i - 1] = 1.0 / dx**2
            d[i, i] = -2.0 / dx**2
            d[i, i + 1] = 1.0 / dx**2
        d[0, :3] = d[1, :3]
        d[-1, -3:] = d[-2, -3:]
    else:
        raise DomainError(f"derivative order {order} not supported")
    return d


def linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line y = slope*x + intercept; returns (slope, intercept, r2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Power-law fit: slope/intercept of log y against log x."""
    return linear_fit(np.log(np.asarray(x, dtype=float)),
                      np.log(np.asarray(y, dtype=float)))
