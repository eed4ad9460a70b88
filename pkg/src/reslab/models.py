"""Half-line operator families P(h) = -(h d/dx) a(x) (h d/dx) + V(x).

A model holds the coefficient functions together with the exponential decay
budget (gamma, delta, C) it promises: |V|, |a - 1| <= C exp(-(2*gamma+delta) x)
for x >= x_box.  The Dirichlet condition at x = 0 is fixed; singular regions
belong inside [0, x_box].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DomainError
from .numerics import linear_fit, quintic_step, quintic_step_derivative


@dataclass(frozen=True)
class PotentialModel:
    """Coefficients of a half-line operator with declared exponential decay.

    ``a`` and ``v`` accept (x, h) with x a scalar or array of nonnegative
    positions and return values of the same shape.  They must be pure.
    """

    a: Callable[[np.ndarray, float], np.ndarray]
    v: Callable[[np.ndarray, float], np.ndarray]
    x_box: float
    gamma: float
    delta: float
    decay_const: float
    label: str
    breakpoints: tuple[float, ...] = ()
    h_default: float | None = None
    name: str = ""
    params: tuple[float, ...] = ()
    v_support: float | None = None  # radius beyond which V = 0 and a = 1 exactly

    def __post_init__(self):
        if self.gamma <= 0 or self.delta <= 0:
            raise DomainError("gamma and delta must be positive")
        if self.x_box < 0:
            raise DomainError("x_box must be nonnegative")

    @property
    def decay_rate(self) -> float:
        return 2.0 * self.gamma + self.delta


@dataclass(frozen=True)
class WeightFunction:
    """Smooth nondecreasing weight: 0 on [0, x_box], equal to x past x_linear.

    The taper on [x_box, x_linear] is a C^2 slope ramp: phi' rises smoothly
    from 0 to 1 with a quintic profile plus a bump that supplies the extra
    area x_box + L/2 needed so that phi(x_linear) = x_linear exactly.  The
    resulting slope bound is 1 + slope_slack; the slack cannot be made small
    because the mean slope over the taper already exceeds 1.
    """

    x_box: float
    x_linear: float
    taper: str = "quintic-ramp"
    slope_slack: float = field(init=False)

    def __post_init__(self):
        if self.x_linear <= self.x_box:
            raise DomainError("x_linear must exceed x_box")
        if self.x_box < 0:
            raise DomainError("x_box must be nonnegative")
        length = self.x_linear - self.x_box
        c = 0.5 + self.x_box / length
        # max over t of s(t) + c * 30 t^2 (1-t)^2, sampled once
        t = np.linspace(0.0, 1.0, 4001)
        dmax = float(np.max(quintic_step(t) + c * 30.0 * t * t * (1.0 - t) ** 2))
        object.__setattr__(self, "slope_slack", dmax - 1.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        length = self.x_linear - self.x_box
        c = 0.5 + self.x_box / length
        t = np.clip((x - self.x_box) / length, 0.0, 1.0)
        # integral of the slope profile: S(t) = 2.5 t^4 - 3 t^5 + t^6
        big_s = t**4 * (2.5 + t * (-3.0 + t))
        phi = length * (big_s + c * quintic_step(t))
        return np.where(x >= self.x_linear, x, phi)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        length = self.x_linear - self.x_box
        c = 0.5 + self.x_box / length
        t = np.clip((x - self.x_box) / length, 0.0, 1.0)
        ramp = quintic_step(t) + c * 30.0 * t * t * (1.0 - t) ** 2
        return np.where(x >= self.x_linear, 1.0, np.where(x <= self.x_box, 0.0, ramp))


@dataclass(frozen=True)
class FrequencyWindow:
    """Rectangle (a0+eps, b0-eps) + i((-gamma+eps0+eps) h, im_top) in lambda.

    ``exclusion_radius`` is the disk radius S(h) removed around known
    resonances before bound checks; ``exclusion_centers`` lists the centers.
    """

    a0: float
    b0: float
    eps0: float
    eps: float
    h: float
    gamma: float
    exclusion_radius: float = 1e-10
    exclusion_centers: tuple[complex, ...] = ()
    im_top: float = 1.0

    def __post_init__(self):
        if not (0 < self.a0 < self.b0):
            raise DomainError("need 0 < a0 < b0")
        if self.eps0 <= 0 or self.eps < 0 or self.h <= 0 or self.gamma <= 0:
            raise DomainError("eps0, h, gamma must be positive; eps nonnegative")
        if self.im_lower <= -self.gamma * self.h:
            raise DomainError("window lower edge must sit above -gamma*h")
        if self.exclusion_radius <= 0:
            raise DomainError("exclusion radius must be positive")
        if self.exclusion_radius >= (self.b0 - self.a0) / 4.0:
            raise DomainError("exclusion disks too large for the window")
        if self.a0 + self.eps >= self.b0 - self.eps:
            raise DomainError("eps shrinks the window to nothing")

    @property
    def im_lower(self) -> float:
        return (-self.gamma + self.eps0 + self.eps) * self.h

    def rectangle(self) -> tuple[float, float, float, float]:
        return (self.a0 + self.eps, self.b0 - self.eps, self.im_lower, self.im_top)

    def contains(self, lam: complex) -> bool:
        re_lo, re_hi, im_lo, im_hi = self.rectangle()
        return re_lo <= lam.real <= re_hi and im_lo <= lam.imag <= im_hi


@dataclass(frozen=True)
class DecayReport:
    passes: bool
    fitted_rate: float
    worst_x: float
    max_excess: float


def eval_coefficients(model: PotentialModel, x: float, h: float) -> tuple[float, float]:
    """Pointwise (a, V) at position x for semiclassical parameter h."""
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if h <= 0:
        raise DomainError(f"h must be positive, got {h}")
    return float(model.a(np.asarray(x, dtype=float), h)), float(model.v(np.asarray(x, dtype=float), h))


def validate_decay(model: PotentialModel, grid, h: float) -> DecayReport:
    """Check |V| and |a-1| against C exp(-(2 gamma + delta) x) on the grid.

    Failure is reported, not raised; only malformed grids raise.
    """
    xs = np.asarray(grid, dtype=float)
    if xs.size < 10:
        raise DomainError("need at least 10 grid points")
    if np.any(xs < model.x_box):
        raise DomainError("grid points must lie at or beyond x_box")
    rate = model.decay_rate
    span = xs.max() - xs.min()
    if span < 3.0 / rate:
        raise DomainError("grid must span at least 3 decay lengths")
    bound = model.decay_const * np.exp(-rate * xs)
    vvals = np.abs(np.asarray(model.v(xs, h), dtype=float))
    avals = np.abs(np.asarray(model.a(xs, h), dtype=float) - 1.0)
    excess = np.maximum(vvals, avals) - bound
    worst = int(np.argmax(excess))
    passes = bool(excess[worst] <= 1e-12 * max(1.0, model.decay_const))
    # least-squares exponential rate of |V| where it is meaningfully nonzero
    mask = vvals > 1e-300
    if mask.sum() >= 2 and np.ptp(xs[mask]) > 0:
        slope, _, _ = linear_fit(xs[mask], np.log(vvals[mask]))
        fitted = -slope
    else:
        fitted = math.inf
    return DecayReport(passes=passes, fitted_rate=fitted, worst_x=float(xs[worst]),
                       max_excess=float(excess[worst]))


def make_weight(x_box: float, x_linear: float) -> WeightFunction:
    """Smooth weight vanishing on [0, x_box] and equal to x beyond x_linear."""
    return WeightFunction(x_box=x_box, x_linear=x_linear)


def _sup_decay_const(v_func, rate: float, x_box: float, x_probe: float = 60.0) -> float:
    """Smallest C making |V(x)| <= C exp(-rate x) hold on a dense probe grid."""
    xs = np.linspace(x_box, x_probe, 30001)
    vals = np.abs(v_func(xs, 1.0)) * np.exp(rate * xs)
    return float(vals.max()) * (1.0 + 1e-9)


def builtin_model(name: str, params=()) -> PotentialModel:
    """Model library: free, square_well, gauss_barrier, ads_like."""
    params = tuple(float(p) for p in params)
    ones = lambda x, h: np.ones_like(np.asarray(x, dtype=float))

    if name == "free":
        if params:
            raise DomainError("free takes no parameters")
        return PotentialModel(
            a=ones, v=lambda x, h: np.zeros_like(np.asarray(x, dtype=float)),
            x_box=0.0, gamma=1.0, delta=1.0, decay_const=0.0,
            label="free", name="free", params=(), v_support=0.0)

    if name == "square_well":
        if len(params) != 2:
            raise DomainError("square_well takes (depth, width)")
        v0, width = params
        if v0 <= 0 or width <= 0:
            raise DomainError("square_well depth and width must be positive")

        def v_sw(x, h, v0=v0, width=width):
            x = np.asarray(x, dtype=float)
            return np.where(x < width, -v0, 0.0)

        return PotentialModel(
            a=ones, v=v_sw, x_box=width, gamma=1.0, delta=1.0, decay_const=v0,
            label=f"square_well({v0:g},{width:g})", breakpoints=(width,),
            name="square_well", params=params, v_support=width)

    if name == "gauss_barrier":
        if len(params) != 3:
            raise DomainError("gauss_barrier takes (height, center, width)")
        b0, xc, w = params
        if b0 <= 0 or w <= 0 or xc < 0:
            raise DomainError("gauss_barrier needs positive height/width, center >= 0")

        def v_gb(x, h, b0=b0, xc=xc, w=w):
            x = np.asarray(x, dtype=float)
            return b0 * np.exp(-(((x - xc) / w) ** 2))

        gamma, delta = 1.0, 4.0  # Gaussian tails support any declared rate
        c = _sup_decay_const(v_gb, 2 * gamma + delta, 0.0)
        return PotentialModel(
            a=ones, v=v_gb, x_box=0.0, gamma=gamma, delta=delta, decay_const=c,
            label=f"gauss_barrier({b0:g},{xc:g},{w:g})",
            name="gauss_barrier", params=params)

    if name == "ads_like":
        if len(params) != 1:
            raise DomainError("ads_like takes (ell,)")
        ell = params[0]
        if ell < 1:
            raise DomainError("ads_like needs ell >= 1")
        b0, xc, w, v_tail, kappa = 2.0, 2.0, 0.5, 0.5, 3.0

        def v_ads(x, h, b0=b0, xc=xc, w=w, v_tail=v_tail, kappa=kappa):
            x = np.asarray(x, dtype=float)
            return b0 * np.exp(-(((x - xc) / w) ** 2)) + v_tail * np.exp(-kappa * x)

        gamma, delta = 1.0, 1.0  # 2*gamma + delta = kappa, the exact tail rate
        c = _sup_decay_const(v_ads, 2 * gamma + delta, 0.0)
        return PotentialModel(
            a=ones, v=v_ads, x_box=0.0, gamma=gamma, delta=delta, decay_const=c,
            label=f"ads_like(ell={ell:g})", h_default=1.0 / ell,
            name="ads_like", params=params)

    raise DomainError(f"unknown model name: {name!r}")


def model_to_config(model: PotentialModel) -> dict:
    """Key-value form: name, params, gamma, delta, x_box."""
    if not model.name:
        raise DomainError("only builtin models serialize to config form")
    return {
        "name": model.name,
        "params": list(model.params),
        "gamma": model.gamma,
        "delta": model.delta,
        "x_box": model.x_box,
    }


def model_from_config(cfg: dict) -> PotentialModel:
    """Rebuild a builtin model, honoring gamma/delta/x_box overrides."""
    try:
        name = cfg["name"]
    except KeyError as exc:
        raise DomainError("model config missing field 'name'") from exc
    model = builtin_model(name, cfg.get("params", ()))
    overrides = {}
    for key in ("gamma", "delta", "x_box"):
        if key in cfg and cfg[key] is not None:
            overrides[key] = float(cfg[key])
    if overrides:
        model = replace(model, **overrides)
        if "gamma" in overrides or "delta" in overrides:
            # declared constant must cover the new rate
            c = _sup_decay_const(model.v, model.decay_rate, model.x_box)
            c = max(c, model.decay_const)
            model = replace(model, decay_const=c)
    return model


def model_to_json(model: PotentialModel) -> str:
    return json.dumps(model_to_config(model), sort_keys=True)


def model_from_json(text: str) -> PotentialModel:
    return model_from_config(json.loads(text))
