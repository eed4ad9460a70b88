"""Discretized weighted resolvent norms and the bound-verification suite.

The weighted resolvent acts through the Green function of the continuation
module; its largest singular value over lambda grids feeds the exponential
a priori bound fit, the upper-half-plane self-adjoint bound, and the
quasimode contradiction report.  The semiclassical maximum principle is an
executable check on scalar analytic functions.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .complex_utils import AnalyticHandle
from .continuation import _resolvent_parts
from .errors import CompletenessError, DomainError, HypothesisError
from .models import PotentialModel, WeightFunction
from .numerics import Grid, cumulative_integral, largest_singular_value
from .quasimodes import Quasimode

DEFAULT_P_GRID = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)


@dataclass(frozen=True)
class NormScan:
    lambdas: tuple[complex, ...]
    norms: tuple[float, ...]
    h: float
    gamma: float
    model_label: str
    exclusions: tuple[tuple[complex, float], ...] = ()
    window_winding: int | None = None

    def __post_init__(self):
        if len(self.lambdas) != len(self.norms):
            raise DomainError("lambdas and norms must align")
        for lam, n in zip(self.lambdas, self.norms):
            if not math.isfinite(n) and not self._excluded(lam):
                raise DomainError(f"non-finite norm at non-excluded {lam}")

    def _excluded(self, lam: complex) -> bool:
        return any(abs(lam - c) < r for c, r in self.exclusions)

    def active_points(self):
        for lam, n in zip(self.lambdas, self.norms):
            if not self._excluded(lam) and math.isfinite(n):
                yield lam, n

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["re_lambda", "im_lambda", "norm"])
        for lam, n in zip(self.lambdas, self.norms):
            writer.writerow([f"{lam.real:.15g}", f"{lam.imag:.15g}", f"{n:.15g}"])
        return buf.getvalue()

    def metadata_json(self) -> str:
        return json.dumps({
            "h": self.h, "gamma": self.gamma, "model_label": self.model_label,
            "exclusions": [[c.real, c.imag, r] for c, r in self.exclusions],
            "window_winding": self.window_winding}, sort_keys=True)


def _green_matrix(model, lam, h, gamma, weight, grid, tol, w_floor):
    f, u, ew, wval, grid, h = _resolvent_parts(model, lam, h, gamma, weight,
                                               grid, tol, w_floor)
    w_quad = grid.trapezoid_weights()
    lower = np.tril(np.outer(f, u), k=-1)
    upper = np.triu(np.outer(u, f))
    kernel = (lower + upper) / (h**2 * wval)
    sqw = np.sqrt(w_quad)
    scale = sqw * ew
    return scale[:, None] * kernel * scale[None, :]


def weighted_resolvent_norm(model: PotentialModel, lam: complex, h: float,
                            gamma: float, weight: WeightFunction, grid: Grid,
                            tol: float = 1e-10, w_floor: float = 1e-8,
                            sv_tol: float = 1e-4) -> float:
    """Largest singular value of the discretized weighted resolvent."""
    mat = _green_matrix(model, complex(lam), h, gamma, weight, grid, tol, w_floor)
    return largest_singular_value(mat, rel_tol=sv_tol)


def scan_norms(model: PotentialModel, lambdas, h: float, gamma: float,
               weight: WeightFunction, grid: Grid,
               exclusions=(), tol: float = 1e-10,
               window_winding: int | None = None) -> NormScan:
    """Norms over a lambda grid; excluded disks record infinities."""
    lams = [complex(z) for z in lambdas]
    norms = []
    for lam in lams:
        if any(abs(lam - c) < r for c, r in exclusions):
            norms.append(float("inf"))
            continue
        norms.append(weighted_resolvent_norm(model, lam, h, gamma, weight,
                                             grid, tol))
    return NormScan(lambdas=tuple(lams), norms=tuple(norms), h=h, gamma=gamma,
                    model_label=model.label,
                    exclusions=tuple((complex(c), float(r)) for c, r in exclusions),
                    window_winding=window_winding)


@dataclass(frozen=True)
class AprioriFit:
    feasible: bool
    a_fit: float
    p_fit: float
    exclusion: float
    violations: tuple[tuple[complex, float], ...]
    n_points: int

    def to_json(self) -> str:
        return json.dumps({
            "feasible": self.feasible, "A_fit": self.a_fit, "p_fit": self.p_fit,
            "exclusion": self.exclusion, "n_points": self.n_points,
            "violations": [[z.real, z.imag, n] for z, n in self.violations]},
            sort_keys=True)


def apriori_bound_check(scans, resonances, exclusion: float,
                        p_grid=DEFAULT_P_GRID, a_cap: float = 50.0
                        ) -> AprioriFit:
    """Fit the smallest exponential envelope exp(A h^-p log(1/S)) covering
    every scanned norm outside the exclusion disks.

    Accepts one scan or a list of scans over different h.  Raises
    CompletenessError when a scan's recorded window winding disagrees with
    the multiplicity sum of the supplied resonances at that h.
    """
    if isinstance(scans, NormScan):
        scans = [scans]
    if not scans:
        raise DomainError("need at least one scan")
    if exclusion <= 0 or exclusion >= 1:
        raise DomainError("exclusion must lie in (0, 1) for log(1/S) > 0")
    for scan in scans:
        if scan.window_winding is not None:
            msum = sum(r.multiplicity for r in resonances
                       if abs(r.h - scan.h) < 1e-12)
            if msum != scan.window_winding:
                raise CompletenessError(
                    f"h={scan.h}: resonance multiplicities sum to {msum}, "
                    f"window winding is {scan.window_winding}")
    log_inv_s = math.log(1.0 / exclusion)
    points = []
    for scan in scans:
        centers = [r.lam for r in resonances if abs(r.h - scan.h) < 1e-12]
        for lam, n in scan.active_points():
            if any(abs(lam - c) < exclusion for c in centers):
                continue
            if n > 0:
                points.append((scan.h, lam, n))
    if not points:
        raise DomainError("no scan points outside the exclusion disks")
    best = None
    for p in p_grid:
        a_req = max(math.log(n) / (h ** (-p) * log_inv_s) for h, _, n in points)
        a_req = max(a_req, 0.0)
        if a_req <= a_cap and (best is None or a_req < best[0]):
            best = (a_req, p)
    if best is None:
        return AprioriFit(feasible=False, a_fit=float("nan"), p_fit=float("nan"),
                          exclusion=exclusion, violations=(), n_points=len(points))
    a_fit, p_fit = best
    violations = tuple(
        (lam, n) for h, lam, n in points
        if n > math.exp(a_fit * h ** (-p_fit) * log_inv_s) * (1 + 1e-9))
    return AprioriFit(feasible=True, a_fit=a_fit, p_fit=p_fit,
                      exclusion=exclusion, violations=violations,
                      n_points=len(points))


@dataclass(frozen=True)
class MaxPrincipleResult:
    holds: bool
    witness: complex | None
    max_inner: float
    bound: float


def max_principle_check(func: AnalyticHandle, a: float, b: float, w: float,
                        alpha: float, s_minus: float, s_plus: float, m: float,
                        n_side: int = 120, n_inner: int = 161
                        ) -> MaxPrincipleResult:
    """Executable semiclassical maximum principle.

    Hypotheses (validated by sampling before any conclusion is drawn):
    |F| <= e^alpha on [a-w, b+w] + i[-alpha s_-, s_+], |F| <= m on the top
    edge, with 0 < s_+ <= s_- , alpha >= 1, s_- alpha log(alpha) <= w and
    m >= 1.  Conclusion tested: |F| <= e^3 m on [a, b] + i[-s_-, s_+].
    """
    if not (0 < s_plus <= s_minus):
        raise HypothesisError("need 0 < S_+ <= S_-")
    if alpha < 1:
        raise HypothesisError("need alpha >= 1")
    if m < 1:
        raise HypothesisError("need M >= 1")
    if s_minus * alpha * math.log(alpha) > w * (1 + 1e-12):
        raise HypothesisError("need S_- alpha log(alpha) <= w")
    re = np.linspace(a - w, b + w, n_side)
    im = np.linspace(-alpha * s_minus, s_plus, n_side)
    # boundary of the big rectangle plus the top edge, where the two
    # hypothesis bounds are enforced
    edge = np.concatenate([
        re + 1j * im[0], re + 1j * im[-1],
        re[0] + 1j * im, re[-1] + 1j * im])
    vals = np.abs(func.eval_many(edge))
    if not np.all(np.isfinite(vals)):
        raise HypothesisError("F not finite on the rectangle boundary")
    if vals.max() > math.exp(alpha) * (1 + 1e-9):
        raise HypothesisError(
            f"|F| reaches {vals.max():.3e} > e^alpha = {math.exp(alpha):.3e}")
    top = np.abs(func.eval_many(re + 1j * s_plus))
    if top.max() > m * (1 + 1e-9):
        raise HypothesisError(
            f"|F| reaches {top.max():.3e} > M = {m:.3e} on the top edge")
    re_in = np.linspace(a, b, n_inner)
    im_in = np.linspace(-s_minus, s_plus, max(9, n_inner // 8))
    zz = (re_in[None, :] + 1j * im_in[:, None]).ravel()
    inner = np.abs(func.eval_many(zz))
    bound = math.e**3 * m
    worst = int(np.argmax(inner))
    holds = bool(inner[worst] <= bound * (1 + 1e-9))
    return MaxPrincipleResult(holds=holds,
                              witness=None if holds else complex(zz[worst]),
                              max_inner=float(inner[worst]), bound=bound)


@dataclass(frozen=True)
class ContradictionReport:
    lam: float
    required_norm: float
    fitted_bound: float
    contradiction: bool
    accuracy: float

    def to_json(self) -> str:
        return json.dumps({
            "lambda": self.lam, "required_norm": self.required_norm,
            "fitted_bound": self.fitted_bound,
            "contradiction": self.contradiction,
            "accuracy": self.accuracy}, sort_keys=True)


def resonance_free_bound_transfer(scan: NormScan, quasimode: Quasimode,
                                  fit: AprioriFit | None = None
                                  ) -> ContradictionReport:
    """Lower resolvent bound forced by a quasimode against the fitted
    exponential bound.

    The identity u = R(lambda)(P - lambda^2) u with ||u|| = 1 forces
    ||R(lambda)|| >= 1 / R(h); when that exceeds the fitted envelope, a
    resonance must live near the quasimode (the contradiction driving the
    existence theorem).
    """
    if abs(scan.h - quasimode.h) > 1e-12:
        raise DomainError("scan and quasimode must share h")
    required = 1.0 / max(quasimode.accuracy, 1e-300)
    if fit is None:
        fit = apriori_bound_check(scan, resonances=(), exclusion=1e-10)
    bound = math.exp(fit.a_fit * scan.h ** (-fit.p_fit)
                     * math.log(1.0 / fit.exclusion))
    return ContradictionReport(
        lam=quasimode.lam, required_norm=required, fitted_bound=bound,
        contradiction=bool(required > bound), accuracy=quasimode.accuracy)


def spectrum_proxy(model: PotentialModel, h: float, x_max: float,
                   n_grid: int | None = None, count: int = 40) -> np.ndarray:
    """Truncated-interval Dirichlet eigenvalues, the computable stand-in for
    the spectrum when bounding 1/dist(lambda^2, spec)."""
    from .quasimodes import dirichlet_eigensolve

    pairs = dirichlet_eigensolve(model, x_max, h, count, n_grid=n_grid)
    return np.array([p.energy for p in pairs])


def dist_to_spectrum(lam2: complex, discrete: np.ndarray) -> float:
    """Distance from lambda^2 to (discrete eigenvalues) union [0, infinity)."""
    if lam2.real >= 0:
        d_cont = abs(lam2.imag)
    else:
        d_cont = abs(lam2)
    d_disc = float(np.min(np.abs(lam2 - discrete))) if discrete.size else math.inf
    return min(d_cont, d_disc)
