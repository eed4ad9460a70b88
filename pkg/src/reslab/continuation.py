"""Meromorphic continuation on the half-line via Jost solutions.

The outgoing solution f and the regular (Dirichlet) solution u0 of
-h^2 (a f')' + V f = lambda^2 f are integrated with an adaptive high-order
Runge-Kutta pair; their flux-form Wronskian W = f (a u0') - (a f') u0 is
exactly independent of the evaluation point, analytic in lambda, and its
zeros in the lower strip are the resonances.  The weighted resolvent is
applied through the variation-of-parameters Green function built from the
same two solutions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (DomainError, NearResonanceError, IsolationError,
                     StiffnessError, StripError)
from .models import PotentialModel, WeightFunction
from .numerics import Grid, cumulative_integral

# Integrator tolerances.  Tighter than strictly needed for shallow scans:
# contour evaluations deep in the strip amplify inward-integration error by
# exp(2 |Im sigma| x_tail), and the extra digits keep winding counts stable.
_RTOL = 1e-12
_ATOL = 1e-14
_ODE_METHOD = "DOP853"


def _strip_margin(model: PotentialModel) -> float:
    return model.gamma + 0.5 * model.delta


def _check_strip(model: PotentialModel, sigma: complex):
    if model.v_support is not None:
        return  # compactly supported coefficients continue entirely
    floor = -_strip_margin(model) + 1e-6
    if sigma.imag <= floor:
        raise StripError(
            f"Im sigma = {sigma.imag:.6g} at or below continuation floor {floor:.6g}")


def choose_x_tail(model: PotentialModel, sigma: complex, tol: float) -> float:
    """Matching radius: the neglected tail integral of the decay envelope,
    amplified by e^{2|Im sigma| x}, stays below tol."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    base = max(model.x_box, max(model.breakpoints, default=0.0))
    if model.v_support is not None:
        return max(base, model.v_support, 1.0) * (1.0 + 1e-12) + 1e-9
    rho = model.decay_rate - 2.0 * abs(sigma.imag)
    if rho <= 1e-9:
        raise StripError(
            f"|Im sigma| = {abs(sigma.imag):.4g} leaves no decay margin")
    if model.decay_const == 0.0:
        return max(base + 1e-9, 1.0)
    x = math.log(max(model.decay_const / (rho * tol), 1.0)) / rho
    return max(base + 1e-9, x, 0.5)


def _amplification_guard(sigma: complex, x_tail: float, tol: float):
    amp = math.exp(2.0 * max(0.0, -sigma.imag) * x_tail)
    est = amp * _RTOL * 100.0
    if est > 0.05:
        raise StiffnessError(
            f"inward integration from x_tail={x_tail:.3g} at Im sigma="
            f"{sigma.imag:.3g} amplifies error to ~{est:.2g}")


def _born_tail(model: PotentialModel, sigmas: np.ndarray, h: float,
               x_from: np.ndarray, x_tail: float):
    """Outgoing data at x_from >= x_tail: pure exponential plus the first
    correction of the tail integral equation.  Returns (f, f')."""
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=complex))
    x_from = np.atleast_1d(np.asarray(x_from, dtype=float))
    f0 = np.exp(1j * sigmas * x_from)
    fp0 = 1j * sigmas * f0
    if model.v_support is not None and x_tail >= model.v_support:
        return f0, fp0
    if model.decay_const == 0.0:
        return f0, fp0
    worst = float(np.max(np.abs(sigmas.imag)))
    rho_eff = model.decay_rate - 2.0 * worst
    span = 4.0 * math.log(10.0) / max(rho_eff, 0.1)
    t_hi = float(np.max(x_from)) + span
    n_t = max(400, int(40 * (t_hi - x_tail) * float(np.max(np.abs(sigmas))) / (2 * np.pi)))
    n_t = min(n_t, 40000)
    t = np.linspace(float(np.min(x_from)), t_hi, n_t)
    q = np.asarray(model.v(t, h), dtype=float) / h**2
    st = sigmas[:, None] * t[None, :]
    sx = sigmas[:, None] * x_from[:, None]
    phase = np.exp(1j * st)
    rel = st - sx
    mask = t[None, :] >= x_from[:, None]
    ker_f = np.where(mask, np.sin(rel) / sigmas[:, None] * q[None, :] * phase, 0.0)
    ker_fp = np.where(mask, -np.cos(rel) * q[None, :] * phase, 0.0)
    corr_f = np.trapezoid(ker_f, t, axis=1)
    corr_fp = np.trapezoid(ker_fp, t, axis=1)
    return f0 + corr_f, fp0 + corr_fp


def _segments(model: PotentialModel, x_hi: float) -> list[tuple[float, float]]:
    cuts = sorted({bp for bp in model.breakpoints if 0.0 < bp < x_hi})
    edges = [0.0] + cuts + [x_hi]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def _integrate_flux_system(model: PotentialModel, lam2: np.ndarray, h: float,
                           x_start: float, x_end: float, y0: np.ndarray,
                           dense: bool):
    """Integrate f' = p/a, p' = (V - lam^2) f / h^2 over [x_start, x_end],
    splitting at coefficient breakpoints.  lam2 may be a vector (batch)."""
    lam2 = np.atleast_1d(np.asarray(lam2, dtype=complex))
    k = lam2.size

    def rhs(x, y):
        f, p = y[:k], y[k:]
        a = float(model.a(np.asarray(x, dtype=float), h))
        v = float(model.v(np.asarray(x, dtype=float), h))
        return np.concatenate([p / a, (v - lam2) * f / h**2])

    inward = x_end < x_start
    segs = _segments(model, max(x_start, x_end))
    if inward:
        segs = [(b, a) for a, b in reversed(segs)]
        segs = [(a, b) for a, b in segs if a <= x_start + 1e-15 and b < x_start]
    pieces = []
    y = np.asarray(y0, dtype=complex)
    for a_seg, b_seg in segs:
        a0 = min(a_seg, x_start) if inward else max(a_seg, 0.0)
        sol = solve_ivp(rhs, (a0, b_seg), y, method=_ODE_METHOD,
                        rtol=_RTOL, atol=_ATOL, dense_output=dense)
        if not sol.success:
            raise StiffnessError(f"integrator failed on [{a0}, {b_seg}]: {sol.message}")
        pieces.append(sol)
        y = sol.y[:, -1]
    return pieces, y


class _PiecewiseSolution:
    """Dense evaluation across the solver segments of one (f, p) integration."""

    def __init__(self, pieces, k: int):
        self.pieces = pieces
        self.k = k
        self.spans = []
        for p in pieces:
            t0, t1 = (p.t[0], p.t[-1]) if p.t[0] <= p.t[-1] else (p.t[-1], p.t[0])
            self.spans.append((t0, t1))
        self.lo = min(s[0] for s in self.spans)
        self.hi = max(s[1] for s in self.spans)

    def __call__(self, x: float) -> np.ndarray:
        return self.eval_grid(np.array([float(x)]))[:, 0]

    def eval_grid(self, xs: np.ndarray) -> np.ndarray:
        xs = np.clip(np.asarray(xs, dtype=float), self.lo, self.hi)
        out = np.empty((2 * self.k, xs.size), dtype=complex)
        done = np.zeros(xs.size, dtype=bool)
        for p, (t0, t1) in zip(self.pieces, self.spans):
            mask = (~done) & (xs >= t0 - 1e-12) & (xs <= t1 + 1e-12)
            if mask.any():
                vals = p.sol(xs[mask])
                out[:, mask] = vals
                done[mask] = True
        if not done.all():
            for i in np.nonzero(~done)[0]:
                out[:, i] = self.pieces[-1].sol(xs[i])
        return out


@dataclass
class JostSolution:
    """Outgoing solution with e^{-i sigma x} f(x) -> 1 as x -> infinity."""

    lam: complex
    h: float
    x_tail: float
    tol: float
    model: PotentialModel
    x: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    _dense: _PiecewiseSolution

    @property
    def sigma(self) -> complex:
        return self.lam / self.h

    def evaluate(self, xs) -> tuple[np.ndarray, np.ndarray]:
        """(f, f') at arbitrary positions, using the tail formula past x_tail."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        f = np.empty(xs.size, dtype=complex)
        fp = np.empty(xs.size, dtype=complex)
        inside = xs <= self.x_tail
        if inside.any():
            vals = self._dense.eval_grid(xs[inside])
            avals = np.asarray(self.model.a(xs[inside], self.h), dtype=float)
            f[inside] = vals[0]
            fp[inside] = vals[1] / avals
        if np.any(~inside):
            ft, fpt = _born_tail(self.model, np.array([self.sigma]), self.h,
                                 xs[~inside], self.x_tail)
            f[~inside] = ft
            fp[~inside] = fpt
        return f, fp

    def tail_bound(self, xs) -> np.ndarray:
        """Envelope bound for |e^{-i sigma x} f(x) - 1| at x >= x_tail."""
        xs = np.asarray(xs, dtype=float)
        if self.model.decay_const == 0.0 or (
                self.model.v_support is not None and np.all(xs >= self.model.v_support)):
            return np.zeros_like(xs)
        rho_eff = self.model.decay_rate - 2.0 * abs(self.sigma.imag)
        env = self.model.decay_const * np.exp(-rho_eff * xs) / rho_eff
        return np.expm1(env / (abs(self.sigma) * self.h**2))


@dataclass
class RegularSolution:
    """Solution with u0(0) = 0 and u0'(0) = 1."""

    lam: complex
    h: float
    x: np.ndarray
    u: np.ndarray
    up: np.ndarray
    model: PotentialModel
    _dense: _PiecewiseSolution

    def evaluate(self, xs) -> tuple[np.ndarray, np.ndarray]:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if xs.size and float(xs.max()) > self._dense.hi * (1 + 1e-12) + 1e-12:
            raise DomainError(
                f"regular solution only integrated to {self._dense.hi:.6g}, "
                f"asked for {float(xs.max()):.6g}")
        vals = self._dense.eval_grid(xs)
        avals = np.asarray(self.model.a(xs, self.h), dtype=float)
        return vals[0], vals[1] / avals


@dataclass(frozen=True)
class MatchingDeterminant:
    """Flux Wronskian W = f (a u0') - (a f') u0, constant in x."""

    lam: complex
    h: float
    value: complex
    values: tuple[complex, ...]
    rel_std: float


def integrate_jost(model: PotentialModel, lam: complex, h: float,
                   tol: float = 1e-10, n_samples: int = 400) -> JostSolution:
    """Outgoing Jost solution on [0, x_tail], matched to the corrected
    exponential at x_tail."""
    if h <= 0:
        raise DomainError("h must be positive")
    lam = complex(lam)
    sigma = lam / h
    _check_strip(model, sigma)
    x_tail = choose_x_tail(model, sigma, tol)
    _amplification_guard(sigma, x_tail, tol)
    f_t, fp_t = _born_tail(model, np.array([sigma]), h, np.array([x_tail]),
                           x_tail)
    a_tail = float(model.a(x_tail, h))
    y0 = np.array([f_t[0], a_tail * fp_t[0]])
    pieces, _ = _integrate_flux_system(model, np.array([lam**2]), h,
                                       x_tail, 0.0, y0, dense=True)
    dense = _PiecewiseSolution(pieces, 1)
    xs = np.linspace(0.0, x_tail, n_samples)
    vals = dense.eval_grid(xs)
    avals = np.asarray(model.a(xs, h), dtype=float)
    return JostSolution(lam=lam, h=h, x_tail=x_tail, tol=tol, model=model,
                        x=xs, f=vals[0], fp=vals[1] / avals, _dense=dense)


def regular_solution(model: PotentialModel, lam: complex, h: float,
                     tol: float = 1e-10, x_max: float | None = None,
                     n_samples: int = 400) -> RegularSolution:
    """Dirichlet solution integrated outward from the origin."""
    if h <= 0:
        raise DomainError("h must be positive")
    lam = complex(lam)
    if x_max is None:
        x_max = choose_x_tail(model, lam / h, tol)
    a0 = float(model.a(0.0, h))
    y0 = np.array([0.0 + 0.0j, a0 + 0.0j])
    pieces, _ = _integrate_flux_system(model, np.array([lam**2]), h,
                                       0.0, x_max, y0, dense=True)
    dense = _PiecewiseSolution(pieces, 1)
    xs = np.linspace(0.0, x_max, n_samples)
    vals = dense.eval_grid(xs)
    avals = np.asarray(model.a(xs, h), dtype=float)
    return RegularSolution(lam=lam, h=h, x=xs, u=vals[0], up=vals[1] / avals,
                           model=model, _dense=dense)


def wronskian(model: PotentialModel, lam: complex, h: float,
              tol: float = 1e-10, n_points: int = 8) -> MatchingDeterminant:
    """Matching determinant evaluated at several points and averaged."""
    jost = integrate_jost(model, lam, h, tol)
    reg = regular_solution(model, lam, h, tol, x_max=jost.x_tail)
    xs = np.linspace(0.05 * jost.x_tail, 0.95 * jost.x_tail, n_points)
    vals = []
    for xi in xs:
        yf = jost._dense(xi)
        yu = reg._dense(xi)
        vals.append(complex(yf[0] * yu[1] - yf[1] * yu[0]))
    vals = np.array(vals)
    mean = complex(vals.mean())
    rel = float(vals.std() / max(abs(mean), 1e-300))
    return MatchingDeterminant(lam=lam, h=h, value=mean,
                               values=tuple(vals), rel_std=rel)


def wronskian_value(model: PotentialModel, lam: complex, h: float,
                    tol: float = 1e-10) -> complex:
    """Fast path: with u0(0) = 0, u0'(0) = 1 the determinant is a(0) f(0)."""
    return complex(wronskian_batch(model, np.array([lam]), h, tol)[0])


def wronskian_batch(model: PotentialModel, lams, h: float,
                    tol: float = 1e-10) -> np.ndarray:
    """Matching determinant at many lambda in one stacked integration."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    sigmas = lams / h
    for s in sigmas:
        _check_strip(model, complex(s))
    worst = complex(sigmas[np.argmax(-sigmas.imag)])
    x_tail = max(choose_x_tail(model, complex(s), tol) for s in sigmas)
    _amplification_guard(worst, x_tail, tol)
    x_from = np.full(lams.size, x_tail)
    f_t, fp_t = _born_tail(model, sigmas, h, x_from, x_tail)
    a_tail = float(model.a(x_tail, h))
    y0 = np.concatenate([f_t, a_tail * fp_t])
    _, y_end = _integrate_flux_system(model, lams**2, h, x_tail, 0.0, y0,
                                      dense=False)
    a0 = float(model.a(0.0, h))
    return a0 * y_end[:lams.size]


def resolvent_apply(model: PotentialModel, lam: complex, h: float,
                    g: np.ndarray, gamma: float, weight: WeightFunction,
                    grid: Grid, tol: float = 1e-10,
                    w_floor: float = 1e-8) -> np.ndarray:
    """Weighted resolvent applied to a grid function.

    Returns e^{-gamma phi} R(lambda, h) e^{-gamma phi} g via variation of
    parameters; raises NearResonanceError when the determinant is below the
    deflation floor.
    """
    g = np.asarray(g, dtype=complex)
    if g.shape != grid.x.shape:
        raise DomainError("g must live on the supplied grid")
    parts = _resolvent_parts(model, lam, h, gamma, weight, grid, tol, w_floor)
    return _apply_parts(parts, g)


def _resolvent_parts(model, lam, h, gamma, weight, grid, tol, w_floor):
    lam = complex(lam)
    jost = integrate_jost(model, lam, h, tol)
    reg = regular_solution(model, lam, h, tol, x_max=grid.x_max)
    wr = wronskian(model, lam, h, tol)
    if abs(wr.value) < w_floor:
        raise NearResonanceError(
            f"|W| = {abs(wr.value):.3e} below deflation floor {w_floor:.1e} "
            f"at lambda = {lam}")
    f, _ = jost.evaluate(grid.x)
    u, _ = reg.evaluate(grid.x)
    ew = np.exp(-gamma * weight(grid.x))
    return f, u, ew, complex(wr.value), grid, h


def _apply_parts(parts, g):
    f, u, ew, wval, grid, h = parts
    gt = ew * np.asarray(g, dtype=complex)
    int_ug = cumulative_integral(u * gt, grid.dx)
    int_fg = cumulative_integral(f * gt, grid.dx)
    int_fg_right = int_fg[-1] - int_fg
    out = (f * int_ug + u * int_fg_right) / (h**2 * wval)
    return ew * out


def residue_order(model: PotentialModel, r: complex, h: float, radius: float,
                  gamma: float, weight: WeightFunction, grid: Grid,
                  g: np.ndarray | None = None, tol: float = 1e-10,
                  n_samples: int = 64, order_cap: int = 4,
                  rel_floor: float = 1e-6) -> int:
    """Order of the pole of <g, R(.) g> at r for a compactly supported test g.

    The order is read off contour integrals of (lambda - r)^k <g, R g> on the
    isolating circle; it equals the winding multiplicity of the matching
    determinant for generic g.
    """
    from .complex_utils import circle_contour, contour_points

    if radius <= 0:
        raise DomainError("radius must be positive")
    r = complex(r)
    spec = circle_contour(r, radius, samples=max(64, n_samples))
    zs = contour_points(spec, spec.samples)
    wvals = wronskian_batch(model, zs, h, tol)
    from .complex_utils import winding_raw
    m_w = int(round(winding_raw(wvals, zs)))
    if m_w > 0:
        from .search import refine_zero
        from .complex_utils import AnalyticHandle
        handle = AnalyticHandle(
            evaluator=lambda z: complex(wronskian_batch(model, np.array([z]), h, tol)[0]),
            vector_evaluator=lambda zz: wronskian_batch(model, zz, h, tol))
        zero, mult = refine_zero(handle, r, tol=1e-9)
        if abs(zero - r) > 0.5 * radius or mult != m_w:
            raise IsolationError(
                f"circle of radius {radius} around {r} does not isolate one "
                f"zero (winding {m_w}, refined multiplicity {mult})")
    if g is None:
        g = _default_test_bump(grid, weight)
    qvals = np.empty(zs.size, dtype=complex)
    for i, z in enumerate(zs):
        out = resolvent_apply(model, z, h, g, gamma, weight, grid, tol)
        qvals[i] = np.sum(np.conj(g) * out) * grid.dx
    from .complex_utils import contour_velocities
    vel = contour_velocities(spec, zs.size)
    qscale = float(np.max(np.abs(qvals)))
    order = 0
    for k in range(order_cap):
        a_k = np.sum((zs - r) ** k * qvals * vel) / zs.size / (2j * np.pi)
        if abs(a_k) > rel_floor * qscale * radius ** (k + 1):
            order = k + 1
    return order


def _default_test_bump(grid: Grid, weight: WeightFunction) -> np.ndarray:
    """Fixed smooth bump supported where the weight vanishes."""
    x_hi = max(weight.x_box, 4 * grid.dx)
    t = grid.x / x_hi
    g = np.where((t > 0) & (t < 1), np.exp(-1.0 / np.maximum(t * (1 - t), 1e-12)), 0.0)
    nrm = np.sqrt(np.sum(g**2) * grid.dx)
    return g / max(nrm, 1e-300)


def solutions_to_csv(jost: JostSolution, reg: RegularSolution) -> str:
    """Diagnostic dump: x, Re f, Im f, Re u0, Im u0 on the Jost sample grid."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["x", "re_f", "im_f", "re_u0", "im_u0"])
    u, _ = reg.evaluate(jost.x)
    for xi, fi, ui in zip(jost.x, jost.f, u):
        writer.writerow([f"{xi:.12g}", f"{fi.real:.15g}", f"{fi.imag:.15g}",
                         f"{ui.real:.15g}", f"{ui.imag:.15g}"])
    return buf.getvalue()
