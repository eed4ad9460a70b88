"""Compactly supported real quasimodes from truncated Dirichlet eigenproblems.

The eigensolve and the residual use one and the same symmetric 4th-order
discretization (Numerov form: A u = B w u with tridiagonal A, B), so the
reported accuracy R(h) measures the cutoff commutator and not a scheme
mismatch.  Requires a unit diffusion coefficient; every builtin model has
a = 1.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import BadCutoffError, DomainError, ResolutionError
from .models import PotentialModel
from .numerics import quintic_step


@dataclass(frozen=True)
class EigenPair:
    energy: float
    u: np.ndarray
    x: np.ndarray
    h: float
    model_label: str


@dataclass(frozen=True)
class Quasimode:
    u: np.ndarray
    x: np.ndarray
    lam: float
    h: float
    accuracy: float
    support_radius: float
    cutoff_spec: tuple[float, float]

    @property
    def energy(self) -> float:
        return self.lam**2


@dataclass(frozen=True)
class QuasimodeFamily:
    members: tuple[Quasimode, ...]
    n_param: float
    m_param: float

    def __post_init__(self):
        if not self.members:
            raise DomainError("family needs at least one member")
        hs = {m.h for m in self.members}
        if len(hs) > 1:
            raise DomainError("family members must share h")
        if self.m_param <= 0 or self.n_param < 0:
            raise DomainError("need M > 0 and N >= 0")


def _require_unit_a(model: PotentialModel, xs: np.ndarray, h: float):
    probe = np.asarray(model.a(xs[:: max(1, xs.size // 16)], h), dtype=float)
    if np.max(np.abs(probe - 1.0)) > 1e-13:
        raise DomainError(
            "the 4th-order eigensolver requires a(x) = 1; "
            f"model {model.label!r} has a variable coefficient")


def _numerov_bands(n_int: int, dx: float):
    """Banded forms of A = tridiag(1,-2,1)/dx^2 and B = tridiag(1,10,1)/12."""
    a_band = np.zeros((3, n_int))
    a_band[0, 1:] = 1.0 / dx**2
    a_band[1, :] = -2.0 / dx**2
    a_band[2, :-1] = 1.0 / dx**2
    b_band = np.zeros((3, n_int))
    b_band[0, 1:] = 1.0 / 12.0
    b_band[1, :] = 10.0 / 12.0
    b_band[2, :-1] = 1.0 / 12.0
    return a_band, b_band


def _tridiag_apply(band: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = band[1] * u
    out[:-1] += band[0, 1:] * u[1:]
    out[1:] += band[2, :-1] * u[:-1]
    return out


def apply_operator(model: PotentialModel, x: np.ndarray, h: float,
                   u: np.ndarray) -> np.ndarray:
    """Discrete P(h) u on the full grid (Dirichlet ends held at zero)."""
    _require_unit_a(model, x, h)
    dx = x[1] - x[0]
    n_int = x.size - 2
    a_band, b_band = _numerov_bands(n_int, dx)
    v = np.asarray(model.v(x[1:-1], h), dtype=float)
    ui = np.asarray(u[1:-1], dtype=float)
    hu = -h**2 * solve_banded((1, 1), b_band, _tridiag_apply(a_band, ui)) + v * ui
    out = np.zeros_like(u, dtype=float)
    out[1:-1] = hu
    return out


def grid_norm(u: np.ndarray, dx: float) -> float:
    return float(np.sqrt(np.sum(np.abs(u) ** 2) * dx))


def dirichlet_eigensolve(model: PotentialModel, length: float, h: float,
                         count: int, n_grid: int | None = None
                         ) -> list[EigenPair]:
    """Lowest eigenpairs of the Dirichlet problem on [0, length].

    Eigenvalues are 4th-order accurate; eigenvectors come back on the full
    grid (zeros at both ends) with unit grid norm.
    """
    if length <= 0 or h <= 0 or count < 1:
        raise DomainError("need positive length, h and count >= 1")
    if n_grid is None:
        n_grid = max(2001, int(20.0 * length / h))
    if count >= n_grid - 2:
        raise DomainError(f"count {count} exceeds grid size {n_grid}")
    x = np.linspace(0.0, length, n_grid)
    dx = x[1] - x[0]
    _require_unit_a(model, x, h)
    v = np.asarray(model.v(x[1:-1], h), dtype=float)
    n_int = n_grid - 2
    a_band, b_band = _numerov_bands(n_int, dx)

    def h_apply(u):
        u = np.asarray(u, dtype=float).ravel()
        return -h**2 * solve_banded((1, 1), b_band, _tridiag_apply(a_band, u)) + v * u

    op = LinearOperator((n_int, n_int), matvec=h_apply, dtype=float)
    sigma0 = float(v.min()) - 1.0
    # shift-invert via the tridiagonal matrix -h^2 A + B diag(v - sigma):
    # (H - sigma) x = b  <=>  (-h^2 A + B diag(v - sigma)) x = B b
    shifted = np.zeros((3, n_int))
    shifted[0, 1:] = -h**2 / dx**2 + (1.0 / 12.0) * (v[1:] - sigma0)
    shifted[1, :] = 2.0 * h**2 / dx**2 + (10.0 / 12.0) * (v - sigma0)
    shifted[2, :-1] = -h**2 / dx**2 + (1.0 / 12.0) * (v[:-1] - sigma0)

    def op_inv(b):
        b = np.asarray(b, dtype=float).ravel()
        return solve_banded((1, 1), shifted, _tridiag_apply(b_band, b))

    opinv = LinearOperator((n_int, n_int), matvec=op_inv, dtype=float)
    v0 = np.ones(n_int) / np.sqrt(n_int)
    vals, vecs = eigsh(op, k=count, sigma=sigma0, OPinv=opinv,
                       which="LM", v0=v0)
    order = np.argsort(vals)
    vals = vals[order]
    vecs = vecs[:, order]
    # resolution gate: the h-wavelength at the top returned energy must be
    # covered by >= 12 grid points
    e_top = float(max(vals.max() - v.min(), 1e-12))
    if dx > 2.0 * np.pi * h / (12.0 * np.sqrt(e_top)):
        raise ResolutionError(
            f"dx={dx:.3g} does not resolve the h-wavelength at energy {vals.max():.3g}")
    pairs = []
    for k in range(count):
        u = np.zeros(n_grid)
        u[1:-1] = vecs[:, k]
        u /= grid_norm(u, dx)
        if u[np.argmax(np.abs(u))] < 0:
            u = -u
        pairs.append(EigenPair(energy=float(vals[k]), u=u, x=x, h=h,
                               model_label=model.label))
    return pairs


def build_quasimode(model: PotentialModel, pair: EigenPair,
                    cutoff: tuple[float, float],
                    energy_window: tuple[float, float] | None = None,
                    tail_tol: float = 0.05) -> Quasimode:
    """Cut the eigenfunction off smoothly past x_cut and renormalize.

    The eigenfunction must already be small at the cutoff (relative size
    below tail_tol), otherwise the accuracy would be O(1) and the builder
    refuses.
    """
    x_cut, width = cutoff
    x = pair.x
    dx = x[1] - x[0]
    if width <= 0:
        raise DomainError("cutoff width must be positive")
    if x_cut <= 0 or x_cut + width >= x[-1]:
        raise DomainError("cutoff must lie inside the eigensolve interval")
    if pair.energy <= 0:
        raise DomainError(
            f"quasimode frequency needs a positive energy, got {pair.energy:.3g}")
    if energy_window is not None:
        a0, b0 = energy_window
        if not (a0 < pair.energy < b0):
            raise DomainError(
                f"energy {pair.energy:.6g} outside the window ({a0:g}, {b0:g})")
    i_cut = int(np.searchsorted(x, x_cut))
    rel = abs(pair.u[i_cut]) / np.max(np.abs(pair.u))
    if rel > tail_tol:
        raise BadCutoffError(
            f"eigenfunction relative size {rel:.3e} at x_cut={x_cut:g} "
            f"exceeds {tail_tol:g}; move the cutoff into the decayed region")
    chi = np.where(x <= x_cut, 1.0,
                   quintic_step((x_cut + width - x) / width))
    u = chi * pair.u
    u /= grid_norm(u, dx)
    lam = float(np.sqrt(pair.energy))
    resid = apply_operator(model, x, pair.h, u) - pair.energy * u
    accuracy = grid_norm(resid, dx)
    return Quasimode(u=u, x=x, lam=lam, h=pair.h, accuracy=accuracy,
                     support_radius=x_cut + width, cutoff_spec=(x_cut, width))


def recompute_accuracy(model: PotentialModel, qm: Quasimode) -> float:
    dx = qm.x[1] - qm.x[0]
    resid = apply_operator(model, qm.x, qm.h, qm.u) - qm.energy * qm.u
    return grid_norm(resid, dx)


def default_cutoff_width(h: float) -> float:
    """Taper width 4 sqrt(h), clipped to [0.2, 1]."""
    return float(np.clip(4.0 * np.sqrt(h), 0.2, 1.0))


def auto_cutoff(pair: EigenPair, x_from: float, x_to: float) -> float:
    """Place the cutoff where the eigenfunction is deepest in its decay."""
    mask = (pair.x >= x_from) & (pair.x <= x_to)
    if not mask.any():
        raise DomainError("empty cutoff search interval")
    idx = np.nonzero(mask)[0]
    return float(pair.x[idx[np.argmin(np.abs(pair.u[idx]))]])


def independence_check(family: QuasimodeFamily, h: float) -> dict:
    """Gram-matrix margin for stable linear independence.

    The family stays independent under any perturbation of size h^N / M per
    member when the smallest singular value of the member matrix exceeds
    2 m(h) h^N / M; that singular value is returned as the margin.  This is
    a sufficient condition, not equivalent to the perturbation-stability
    statement it certifies.
    """
    members = family.members
    dx = members[0].x[1] - members[0].x[0]
    cols = np.column_stack([m.u * np.sqrt(dx) for m in members])
    svals = np.linalg.svd(cols, compute_uv=False)
    margin = float(svals.min())
    threshold = 2.0 * len(members) * h**family.n_param / family.m_param
    return {"independent": bool(margin > threshold), "margin": margin,
            "threshold": threshold}


def quasimode_to_csv(qm: Quasimode) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["x", "u"])
    for xi, ui in zip(qm.x, qm.u):
        writer.writerow([f"{xi:.12g}", f"{ui:.15g}"])
    return buf.getvalue()


def quasimode_header_json(qm: Quasimode) -> str:
    return json.dumps({"lambda": qm.lam, "h": qm.h, "accuracy": qm.accuracy,
                       "support_radius": qm.support_radius}, sort_keys=True)
