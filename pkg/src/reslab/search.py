"""Zero location and counting for analytic functions on rectangles.

Argument-principle winding counts drive a recursive subdivision; each
isolated zero is polished by a multiplicity-aware Newton iteration.  The
Jensen count and Blaschke lower-bound utilities certify zero counts and
resolvent lower bounds for scalar analytic functions.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .complex_utils import (AnalyticHandle, Rectangle, circle_contour,
                            contour_points, rectangle_contour, winding_number,
                            winding_raw)
from .continuation import wronskian_batch
from .errors import (BoundaryZeroError, CompletenessError, DomainError,
                     RefinementError, StiffnessError, StripError, WindingError)
from .models import FrequencyWindow, PotentialModel

log = logging.getLogger(__name__)

# deterministic split jitter: fractions of the side length, tried in order
_JITTER_SCHEDULE = (0.0, 1.0 / 7.0, -1.0 / 7.0, 1.0 / 3.0, -1.0 / 3.0)

_SPURIOUS_IM = 1e-8


@dataclass(frozen=True)
class Resonance:
    """Zero of the matching determinant in the scanned window."""

    lam: complex
    multiplicity: int
    h: float
    wronskian_derivative: complex
    source_window: FrequencyWindow | None = None


def wronskian_handle(model: PotentialModel, h: float, tol: float = 1e-10,
                     domain: Rectangle | None = None) -> AnalyticHandle:
    """Matching determinant as a cached, batch-evaluable analytic handle."""
    return AnalyticHandle(
        evaluator=lambda z: complex(wronskian_batch(model, np.array([z]), h, tol)[0]),
        vector_evaluator=lambda zs: wronskian_batch(model, zs, h, tol),
        domain=domain)


def winding_count(f: AnalyticHandle, rect: Rectangle,
                  boundary_tol: float = 1e-6, samples: int = 256) -> int:
    """Number of zeros of f inside the rectangle, with multiplicity."""
    return winding_number(f, rectangle_contour(rect, samples), boundary_tol)


def _derivative(f: AnalyticHandle, z: complex, step: float) -> complex:
    return (f(z + step) - f(z - step)) / (2.0 * step)


def _multiplicity_at(f: AnalyticHandle, z: complex, radius: float) -> int:
    spec = circle_contour(z, radius, samples=128)
    try:
        return winding_number(f, spec, boundary_tol=1e-9)
    except BoundaryZeroError:
        spec = circle_contour(z, 1.7 * radius, samples=128)
        return winding_number(f, spec, boundary_tol=1e-9)


def refine_zero(f: AnalyticHandle, seed: complex, tol: float = 1e-8,
                max_iter: int = 60) -> tuple[complex, int]:
    """Polish a zero near the seed; returns (zero, multiplicity).

    Newton with a numerically differenced derivative; when convergence is
    only linear the multiplicity is read off a small winding circle and the
    step is accelerated by that factor.
    """
    z = complex(seed)
    bounds = None
    if f.domain is not None:
        re_lo, re_hi, im_lo, im_hi = f.domain
        pad_re = 0.75 * (re_hi - re_lo)
        pad_im = 0.75 * (im_hi - im_lo)
        bounds = (re_lo - pad_re, re_hi + pad_re, im_lo - pad_im, im_hi + pad_im)
    mult = 1
    last_step = max(1e-3, 1e-3 * abs(seed))
    stall = 0
    prev_abs = math.inf
    for _ in range(max_iter):
        if bounds is not None and not (bounds[0] <= z.real <= bounds[1]
                                       and bounds[2] <= z.imag <= bounds[3]):
            raise RefinementError(
                f"iterate {z} escaped the search domain",
                best_rectangle=_rect_around(complex(seed), 10 * last_step))
        scale = max(1.0, abs(z))
        fz = f(z)
        if abs(fz) == 0.0:
            break
        d = 1e-6 * scale
        fp = _derivative(f, z, d)
        if fp == 0:
            raise RefinementError("vanishing numerical derivative",
                                  best_rectangle=_rect_around(z, 10 * last_step))
        step = mult * fz / fp
        z = z - step
        last_step = abs(step)
        if last_step <= 1e-13 * scale:
            break
        if abs(fz) > 0.5 * prev_abs:
            stall += 1
            if stall >= 4:
                mult = max(1, _multiplicity_at(f, z, max(10 * last_step, 1e-8 * scale)))
                stall = 0
        prev_abs = abs(fz)
    else:
        raise RefinementError(f"no convergence after {max_iter} iterations",
                              best_rectangle=_rect_around(z, 10 * last_step))
    radius = max(10.0 * last_step, 1e-6 * max(1.0, abs(z)))
    mult = _multiplicity_at(f, z, radius)
    if mult < 1:
        raise RefinementError("refined point encloses no zero",
                              best_rectangle=_rect_around(z, radius))
    # residual check against the function scale on the multiplicity circle
    circ = contour_points(circle_contour(z, radius, samples=64), 64)
    local = float(np.max(np.abs(f.eval_many(circ))))
    if abs(f(z)) > tol * max(local, 1e-300):
        raise RefinementError(
            f"|f| = {abs(f(z)):.2e} not small against local scale {local:.2e}",
            best_rectangle=_rect_around(z, radius))
    return z, int(mult)


def _rect_around(z: complex, r: float) -> Rectangle:
    return (z.real - r, z.real + r, z.imag - r, z.imag + r)


def _split(rect: Rectangle, frac_shift: float) -> tuple[Rectangle, Rectangle]:
    re_lo, re_hi, im_lo, im_hi = rect
    if (re_hi - re_lo) >= (im_hi - im_lo):
        mid = 0.5 * (re_lo + re_hi) + frac_shift * (re_hi - re_lo)
        return (re_lo, mid, im_lo, im_hi), (mid, re_hi, im_lo, im_hi)
    mid = 0.5 * (im_lo + im_hi) + frac_shift * (im_hi - im_lo)
    return (re_lo, re_hi, im_lo, mid), (re_lo, re_hi, mid, im_hi)


def _count(f, rect, boundary_tol, samples=256):
    return winding_count(f, rect, boundary_tol=boundary_tol, samples=samples)


def find_zeros(f: AnalyticHandle, rect: Rectangle, refine_diag: float = 0.05,
               boundary_tol: float = 1e-6, dedup_tol: float = 1e-10,
               trace: list | None = None) -> list[tuple[complex, int]]:
    """All zeros of f in the rectangle, with multiplicities.

    Subdivides until each cell holds one refinable zero; child winding sums
    are checked against the parent at every level, with a deterministic
    jitter schedule for split lines that land on a zero.
    """
    total = None
    outer = rect
    for grow in (0.0, 0.02, 0.05, 0.11):
        re_lo, re_hi, im_lo, im_hi = rect
        pad_re = grow * (re_hi - re_lo)
        pad_im = grow * (im_hi - im_lo)
        outer = (re_lo - pad_re, re_hi + pad_re, im_lo - pad_im, im_hi + pad_im)
        try:
            total = _count(f, outer, boundary_tol)
            break
        except BoundaryZeroError:
            continue
    if total is None:
        raise BoundaryZeroError(f"could not open a zero-free boundary around {rect}")

    zeros: list[tuple[complex, int]] = []
    stack = [(outer, total)]
    while stack:
        cell, w = stack.pop()
        if w == 0:
            continue
        re_lo, re_hi, im_lo, im_hi = cell
        diag = max(re_hi - re_lo, im_hi - im_lo)
        if diag <= refine_diag:
            center = complex(0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi))
            try:
                z, m = refine_zero(f, center)
                slack = 1e-9 * (1.0 + diag)
                inside = (re_lo - slack <= z.real <= re_hi + slack and
                          im_lo - slack <= z.imag <= im_hi + slack)
                if inside and m == w:
                    zeros.append((z, m))
                    continue
            except (RefinementError, StiffnessError, StripError):
                pass
            if diag <= 1e-9:
                raise WindingError(
                    f"cannot separate {w} zeros in cell of size {diag:.2e}")
        children = None
        for shift in _JITTER_SCHEDULE:
            c1, c2 = _split(cell, shift)
            try:
                w1 = _count(f, c1, boundary_tol)
                w2 = _count(f, c2, boundary_tol)
            except (BoundaryZeroError, WindingError):
                continue
            if w1 + w2 == w:
                children = [(c1, w1), (c2, w2)]
                break
        if children is None:
            raise WindingError(f"subdivision of {cell} failed for all jitters")
        if trace is not None:
            trace.append((cell, w, [c for c, _ in children],
                          [cw for _, cw in children]))
        stack.extend(children)

    zeros.sort(key=lambda zm: (zm[0].real, zm[0].imag))
    merged: list[tuple[complex, int]] = []
    for z, m in zeros:
        if merged and abs(z - merged[-1][0]) <= dedup_tol:
            zm, mm = merged[-1]
            merged[-1] = (zm, mm + m)
        else:
            merged.append((z, m))
    count = sum(m for _, m in merged)
    if count != total:
        raise CompletenessError(
            f"refined multiplicities sum to {count}, winding total is {total}")
    return merged


def scan_resonances(model: PotentialModel, window: FrequencyWindow, h: float,
                    tol: float = 1e-10, refine_diag: float = 0.05,
                    boundary_tol: float = 1e-6,
                    trace: list | None = None) -> list[Resonance]:
    """Locate all matching-determinant zeros in the window rectangle."""
    rect = window.rectangle()
    handle = wronskian_handle(model, h, tol, domain=rect)
    found = find_zeros(handle, rect, refine_diag=refine_diag,
                       boundary_tol=boundary_tol, trace=trace)
    out = []
    for z, m in found:
        if z.imag > _SPURIOUS_IM:
            log.warning("spurious zero with Im lambda = %.3e > 0 filtered at %s",
                        z.imag, z)
            continue
        d = 1e-7 * max(1.0, abs(z))
        deriv = _derivative(handle, z, d)
        out.append(Resonance(lam=z, multiplicity=m, h=h,
                             wronskian_derivative=deriv, source_window=window))
    return out


def jensen_zero_bound(f: AnalyticHandle, center: complex, rho1: float,
                      rho2: float, samples: int = 1024) -> float:
    """Upper bound on the zero count in the rho2-disk from Jensen's formula:
    (log sup_{|z-c|=rho1} |f| - log |f(c)|) / log(rho1/rho2)."""
    if not (0 < rho2 < rho1):
        raise DomainError("need 0 < rho2 < rho1")
    fc = abs(f(complex(center)))
    if fc < 1e-300:
        raise DomainError("f vanishes at the disk center")
    sup = _circle_sup(f, center, rho1, samples)
    return (math.log(sup) - math.log(fc)) / math.log(rho1 / rho2)


def _circle_sup(f: AnalyticHandle, center: complex, rho: float,
                samples: int) -> float:
    n = samples
    prev = None
    while True:
        zs = contour_points(circle_contour(center, rho, samples=max(64, n)), n)
        sup = float(np.max(np.abs(f.eval_many(zs))))
        if prev is not None and abs(sup - prev) <= 1e-6 * sup:
            return sup
        prev = sup
        n *= 2
        if n > 65536:
            return sup


@dataclass(frozen=True)
class BlaschkeCertificate:
    min_log_modulus: float
    excluded_disks: tuple[tuple[complex, float], ...]
    zero_count: int
    caratheodory_term: float
    blaschke_term: float


def blaschke_lower_bound(f: AnalyticHandle, center: complex,
                         radii: tuple[float, float, float], zeros,
                         exclusion: float, phi_tol: float = 1e-6
                         ) -> BlaschkeCertificate:
    """Certified lower bound for log|f| on the inner disk minus exclusion
    disks around the zeros.

    The Blaschke product with the listed zeros is verified to have modulus
    >= 1 - phi_tol on the middle circle; the zero-free quotient then obeys a
    Caratheodory-type bound transported from the center value.
    """
    rho1, rho2, rho3 = radii
    if not (rho1 > rho2 > rho3 > 0):
        raise DomainError("radii must decrease: rho1 > rho2 > rho3 > 0")
    if exclusion <= 0 or exclusion >= rho3:
        raise DomainError("exclusion radius must lie in (0, rho3)")
    center = complex(center)
    zs = [complex(z) for z in zeros]
    fc = abs(f(center))
    if fc < 1e-300:
        raise DomainError("f vanishes at the center")
    n_wind = winding_number(f, circle_contour(center, rho2, samples=256))
    if n_wind != len(zs):
        raise CompletenessError(
            f"{len(zs)} zeros supplied, winding count on the rho2 circle is {n_wind}")

    def phi(lam):
        lam = np.asarray(lam, dtype=complex)
        val = np.ones(lam.shape, dtype=complex)
        pref = 1.0 + 0.0j
        for r in zs:
            pref *= (-rho2) / (r - center)
            val *= rho2 * (lam - r) / (rho2**2 - np.conj(r - center) * (lam - center))
        return pref * val

    if zs:
        ring = contour_points(circle_contour(center, rho2, samples=512), 512)
        phimin = float(np.min(np.abs(phi(ring))))
        if phimin < 1.0 - phi_tol:
            raise CompletenessError(
                f"|phi| dips to {phimin:.6f} on the rho2 circle; zero list "
                "is stale or incomplete")

    sup_f = _circle_sup(f, center, rho2, 512)
    eps = rho2 - rho3
    carat = (-(2.0 * rho3 / eps) * math.log(max(sup_f, 1e-300))
             + ((rho2 + rho3) / eps) * math.log(fc))
    blaschke = len(zs) * math.log(exclusion / (rho2 + rho3))
    return BlaschkeCertificate(
        min_log_modulus=carat + blaschke,
        excluded_disks=tuple((z, exclusion) for z in zs),
        zero_count=n_wind,
        caratheodory_term=carat,
        blaschke_term=blaschke)


def resonances_to_json(resonances, model_label: str) -> str:
    records = []
    for r in resonances:
        win = None
        if r.source_window is not None:
            w = r.source_window
            win = {"a0": w.a0, "b0": w.b0, "eps0": w.eps0, "eps": w.eps,
                   "im_top": w.im_top}
        records.append({"re": r.lam.real, "im": r.lam.imag,
                        "multiplicity": r.multiplicity, "h": r.h,
                        "model_label": model_label, "window": win})
    return json.dumps(records, sort_keys=True)
