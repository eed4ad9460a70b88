"""Contour integration, winding counts, and analyticity diagnostics.

One quadrature engine (closed trapezoid with sample doubling) backs every
contour integral in the package so the error model is uniform.  All
randomness lives in :func:`seeded_function_family`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BoundaryZeroError, DomainError, WindingError

Rectangle = tuple[float, float, float, float]  # re_lo, re_hi, im_lo, im_hi


@dataclass
class AnalyticHandle:
    """A scalar complex function with an optional vectorized entry point."""

    evaluator: Callable[[complex], complex]
    domain: Rectangle | None = None
    declared_analytic: bool = True
    vector_evaluator: Callable[[np.ndarray], np.ndarray] | None = None
    info: dict = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, z: complex) -> complex:
        z = complex(z)
        if z in self._cache:
            return self._cache[z]
        val = complex(self.evaluator(z))
        self._cache[z] = val
        return val

    def eval_many(self, zs: np.ndarray) -> np.ndarray:
        zs = np.asarray(zs, dtype=complex)
        if self.vector_evaluator is not None:
            missing = np.array([z not in self._cache for z in zs])
            if missing.any():
                fresh = self.vector_evaluator(zs[missing])
                for z, v in zip(zs[missing], np.asarray(fresh, dtype=complex)):
                    self._cache[complex(z)] = complex(v)
            return np.array([self._cache[complex(z)] for z in zs])
        return np.array([self(z) for z in zs])


def handle_from_polynomial(coeffs: Sequence[complex],
                           domain: Rectangle | None = None) -> AnalyticHandle:
    c = np.asarray(coeffs, dtype=complex)
    return AnalyticHandle(
        evaluator=lambda z: complex(np.polyval(c, z)),
        vector_evaluator=lambda zs: np.polyval(c, zs),
        domain=domain,
        info={"kind": "polynomial", "degree": len(c) - 1,
              "coefficients": tuple(c)})


@dataclass(frozen=True)
class ContourSpec:
    """Closed contour: an axis-aligned rectangle or a circle.

    ``samples`` must be a power of two >= 64 so refinement reuses points.
    """

    shape: str
    geometry: tuple
    samples: int = 256
    refinement_cap: int = 65536

    def __post_init__(self):
        if self.shape not in ("rectangle", "circle"):
            raise DomainError(f"unknown contour shape {self.shape!r}")
        n = self.samples
        if n < 64 or (n & (n - 1)) != 0:
            raise DomainError("samples must be a power of two >= 64")
        if self.refinement_cap < n:
            raise DomainError("refinement_cap must be >= samples")


def rectangle_contour(rect: Rectangle, samples: int = 256,
                      refinement_cap: int = 65536) -> ContourSpec:
    re_lo, re_hi, im_lo, im_hi = rect
    if re_lo >= re_hi or im_lo >= im_hi:
        raise DomainError(f"degenerate rectangle {rect}")
    return ContourSpec("rectangle", rect, samples, refinement_cap)


def circle_contour(center: complex, radius: float, samples: int = 256,
                   refinement_cap: int = 65536) -> ContourSpec:
    if radius <= 0:
        raise DomainError("circle radius must be positive")
    return ContourSpec("circle", (complex(center), float(radius)),
                       samples, refinement_cap)


def contour_points(spec: ContourSpec, n: int) -> np.ndarray:
    """n points along the closed contour, counterclockwise, corner-aligned."""
    if spec.shape == "circle":
        center, radius = spec.geometry
        theta = 2.0 * np.pi * np.arange(n) / n
        return center + radius * np.exp(1j * theta)
    re_lo, re_hi, im_lo, im_hi = spec.geometry
    w, h = re_hi - re_lo, im_hi - im_lo
    perim = 2.0 * (w + h)
    s = perim * np.arange(n) / n
    pts = np.empty(n, dtype=complex)
    bottom = s < w
    right = (~bottom) & (s < w + h)
    top = (~bottom) & (~right) & (s < 2 * w + h)
    left = ~(bottom | right | top)
    pts[bottom] = re_lo + s[bottom] + 1j * im_lo
    pts[right] = re_hi + 1j * (im_lo + (s[right] - w))
    pts[top] = re_hi - (s[top] - w - h) + 1j * im_hi
    pts[left] = re_lo + 1j * (im_hi - (s[left] - 2 * w - h))
    return pts


def contour_velocities(spec: ContourSpec, n: int) -> np.ndarray:
    """dz/dt at the n samples for the arclength-fraction parametrization."""
    if spec.shape == "circle":
        center, radius = spec.geometry
        zs = contour_points(spec, n)
        return 2j * np.pi * (zs - center)
    re_lo, re_hi, im_lo, im_hi = spec.geometry
    w, h = re_hi - re_lo, im_hi - im_lo
    perim = 2.0 * (w + h)
    s = perim * np.arange(n) / n
    vel = np.empty(n, dtype=complex)
    vel[s < w] = perim
    vel[(s >= w) & (s < w + h)] = 1j * perim
    vel[(s >= w + h) & (s < 2 * w + h)] = -perim
    vel[s >= 2 * w + h] = -1j * perim
    return vel


def _closed_quadrature(values: np.ndarray, spec: ContourSpec, n: int) -> complex:
    """Trapezoid in the contour parameter with the exact velocity.

    Spectrally accurate on circles; second order on rectangles, where the
    contour is only piecewise smooth (Richardson pairs restore fourth order).
    """
    vel = contour_velocities(spec, n)
    return complex(np.sum(values * vel) / n)


def contour_integral(f: AnalyticHandle, contour: ContourSpec,
                     rel_tol: float = 1e-9) -> complex:
    """Closed-contour integral with sample doubling and a Richardson check."""
    n = contour.samples
    vals = f.eval_many(contour_points(contour, n))
    if not np.all(np.isfinite(vals)):
        raise DomainError("function not finite on the contour")
    est = _closed_quadrature(vals, contour, n)
    extrap = None
    while n < contour.refinement_cap:
        n *= 2
        vals = f.eval_many(contour_points(contour, n))
        new = _closed_quadrature(vals, contour, n)
        new_extrap = (4.0 * new - est) / 3.0
        scale = max(1.0, abs(new_extrap))
        if extrap is not None and abs(new_extrap - extrap) <= rel_tol * scale:
            return new_extrap
        est, extrap = new, new_extrap
    raise WindingError(
        f"contour integral failed to converge below {rel_tol} at cap "
        f"{contour.refinement_cap}")


def winding_raw(fvals: np.ndarray, zs: np.ndarray) -> float:
    """Trapezoid value of (1/2 pi i) oint f'/f dz with f' from contour samples."""
    df = np.roll(fvals, -1) - np.roll(fvals, 1)
    dz = np.roll(zs, -1) - np.roll(zs, 1)
    logderiv = df / dz / fvals
    total = np.sum(logderiv * dz) * 0.5
    return float((total / (2.0j * np.pi)).real)


def winding_number(f: AnalyticHandle, contour: ContourSpec,
                   boundary_tol: float = 1e-6,
                   integer_tol: float = 0.25) -> int:
    """Argument-principle zero count inside the contour.

    Raises BoundaryZeroError when |f| dips suspiciously low on the contour
    and WindingError when doubling up to the cap never lands near an integer.
    """
    n = contour.samples
    last_raw = None
    while True:
        zs = contour_points(contour, n)
        fvals = f.eval_many(zs)
        if not np.all(np.isfinite(fvals)):
            raise DomainError("function not finite on the contour")
        fabs = np.abs(fvals)
        scale = float(np.median(fabs))
        if scale == 0.0 or fabs.min() < boundary_tol * scale:
            raise BoundaryZeroError(
                f"|f| dips to {fabs.min():.3e} (median {scale:.3e}) on the contour")
        raw = winding_raw(fvals, zs)
        nearest = round(raw)
        if abs(raw - nearest) <= integer_tol and (last_raw is not None and
                                                  round(last_raw) == nearest):
            return int(nearest)
        if last_raw is not None:
            # a zero on the contour contributes half its multiplicity and
            # the raw value then sticks near a half-integer under doubling
            half = math.floor(raw) + 0.5
            if abs(raw - half) < 0.05 and abs(last_raw - half) < 0.05:
                raise BoundaryZeroError(
                    f"winding sticks at {raw:.4f}; a zero sits on the contour")
        last_raw = raw
        if n >= contour.refinement_cap:
            raise WindingError(
                f"winding value {raw:.4f} not within {integer_tol} of an integer "
                f"at {n} samples")
        n *= 2


def cauchy_riemann_residual(f: AnalyticHandle, re_points, im_points,
                            step: float = 1e-5) -> float:
    """Max of |d f / d conj(lambda)| / |d f / d lambda| over the grid.

    The grid only chooses where the Wirtinger derivatives are probed; each
    probe uses a local four-point stencil of the given step, so coarse grids
    do not degrade the derivative estimates.
    """
    xs = np.asarray(re_points, dtype=float)
    ys = np.asarray(im_points, dtype=float)
    zz = (xs[None, :] + 1j * ys[:, None]).ravel()
    d = step
    f_e = f.eval_many(zz + d)
    f_w = f.eval_many(zz - d)
    f_n = f.eval_many(zz + 1j * d)
    f_s = f.eval_many(zz - 1j * d)
    fx = (f_e - f_w) / (2 * d)
    fy = (f_n - f_s) / (2 * d)
    f_bar = 0.5 * (fx + 1j * fy)
    f_lam = 0.5 * (fx - 1j * fy)
    # normalize against the derivative scale of the whole grid so critical
    # points of f do not blow up the diagnostic
    denom = max(float(np.max(np.abs(f_lam))), 1e-300)
    return float(np.max(np.abs(f_bar)) / denom)


def seeded_function_family(seed: int, kind: str, count: int) -> list[AnalyticHandle]:
    """Deterministic analytic test functions with coefficients in the unit disk."""
    if count < 1:
        raise DomainError("count must be >= 1")
    rng = np.random.default_rng(seed)
    handles = []
    for _ in range(count):
        if kind == "polynomial":
            degree = int(rng.integers(1, 7))
            radii = rng.uniform(0.0, 1.0, degree + 1)
            radii[0] = rng.uniform(0.3, 1.0)  # leading coefficient kept away from 0
            phases = rng.uniform(0.0, 2 * np.pi, degree + 1)
            coeffs = radii * np.exp(1j * phases)
            handles.append(handle_from_polynomial(coeffs))
        elif kind == "exponential-polynomial":
            terms = int(rng.integers(1, 4))
            cr = rng.uniform(0.1, 1.0, terms)
            cp = rng.uniform(0.0, 2 * np.pi, terms)
            mr = rng.uniform(0.0, 1.0, terms)
            mp = rng.uniform(0.0, 2 * np.pi, terms)
            c = cr * np.exp(1j * cp)
            mu = mr * np.exp(1j * mp)

            def ev(zs, c=c, mu=mu):
                zs = np.asarray(zs, dtype=complex)
                return np.sum(c[:, None] * np.exp(mu[:, None] * zs[None, :]), axis=0)

            handles.append(AnalyticHandle(
                evaluator=lambda z, ev=ev: complex(ev(np.array([z]))[0]),
                vector_evaluator=ev,
                info={"kind": "exponential-polynomial", "terms": terms}))
        else:
            raise DomainError(f"unknown family kind {kind!r}")
    return handles
