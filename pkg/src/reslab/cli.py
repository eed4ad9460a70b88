"""Command-line orchestration: validation, scans, quasimodes, theorem checks,
sweeps, and bound suites.

Every command is deterministic given its config: scans use fixed subdivision
and jitter schedules, and the only randomness (property-suite function
generation) is seeded from --seed.  Reports are JSON with sorted keys plus
CSV for plot data; each experiment directory carries a manifest and all
files are schema-validated before a successful exit.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import jsonschema

from . import free_resolvent, resolvent_norm
from .complex_utils import AnalyticHandle, seeded_function_family
from .errors import (BadCutoffError, CompletenessError, ConfigError,
                     DomainError, HypothesisError, ReslabError)
from .models import (FrequencyWindow, PotentialModel, WeightFunction,
                     make_weight, model_from_config, validate_decay)
from .numerics import Grid, linear_fit
from .quasimodes import (Quasimode, auto_cutoff, build_quasimode,
                         default_cutoff_width, dirichlet_eigensolve,
                         quasimode_header_json, quasimode_to_csv)
from .resolvent_norm import apriori_bound_check, max_principle_check, scan_norms
from .search import Resonance, scan_resonances, wronskian_handle, winding_count

EXIT_PASS = 0
EXIT_SUITE_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_INTERNAL_ERROR = 3


@dataclass
class ExperimentConfig:
    model: dict
    window: dict
    gamma: float
    weight: dict
    h_list: list[float] | None = None
    ell_list: list[int] | None = None
    exclusion: dict = field(default_factory=lambda: {"rule": "accuracy",
                                                     "floor": 1e-10})
    theorem: dict = field(default_factory=dict)
    quasimode: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: {"ode": 1e-10})
    out_dir: str = "out"

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config parse error in {path}: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        for key in ("model", "window", "gamma", "weight"):
            if key not in raw:
                raise ConfigError(f"config missing field {key!r}")
        for key in ("a0", "b0", "eps0"):
            if key not in raw["window"]:
                raise ConfigError(f"config window missing field {key!r}")
        for key in ("x_box", "x_linear"):
            if key not in raw["weight"]:
                raise ConfigError(f"config weight missing field {key!r}")
        if "name" not in raw["model"]:
            raise ConfigError("config model missing field 'name'")
        cfg = cls(model=raw["model"], window=raw["window"],
                  gamma=float(raw["gamma"]), weight=raw["weight"],
                  h_list=raw.get("h_list"), ell_list=raw.get("ell_list"),
                  exclusion=raw.get("exclusion", {"rule": "accuracy",
                                                  "floor": 1e-10}),
                  theorem=raw.get("theorem", {}),
                  quasimode=raw.get("quasimode", {}),
                  tolerances=raw.get("tolerances", {"ode": 1e-10}),
                  out_dir=raw.get("out_dir", "out"))
        if cfg.h_list is not None:
            hs = list(cfg.h_list)
            if any(h2 >= h1 for h1, h2 in zip(hs, hs[1:])):
                raise ConfigError("config field 'h_list' must be strictly decreasing")
            low = (-cfg.gamma + cfg.window["eps0"]) * hs[0]
            if low <= -cfg.gamma * hs[0]:
                raise ConfigError("config window inconsistent with gamma")
        if cfg.h_list is None and cfg.ell_list is None:
            raise ConfigError("config needs field 'h_list' or 'ell_list'")
        return cfg

    def build_model(self) -> PotentialModel:
        return model_from_config(self.model)

    def build_weight(self) -> WeightFunction:
        return make_weight(float(self.weight["x_box"]),
                           float(self.weight["x_linear"]))

    def build_window(self, h: float, s_radius: float = 1e-10,
                     centers=()) -> FrequencyWindow:
        w = self.window
        cap = 0.2 * (float(w["b0"]) - float(w["a0"]))
        return FrequencyWindow(
            a0=float(w["a0"]), b0=float(w["b0"]), eps0=float(w["eps0"]),
            eps=float(w.get("eps", 0.0)), h=h, gamma=self.gamma,
            exclusion_radius=min(max(s_radius, 1e-12), cap),
            exclusion_centers=tuple(centers),
            im_top=float(w.get("im_top", 1.0)))

    def energy_window(self) -> tuple[float, float]:
        return (float(self.window["a0"]) ** 2, float(self.window["b0"]) ** 2)

    def exclusion_radius(self, h: float, accuracy: float | None) -> float:
        floor = float(self.exclusion.get("floor", 1e-10))
        if self.exclusion.get("rule", "accuracy") == "accuracy" and accuracy:
            return max(accuracy * h ** (-2.0), floor)
        return floor


# ---------------------------------------------------------------------------
# output plumbing

_SCHEMAS = {
    "manifest": {
        "type": "object",
        "required": ["command", "status", "files"],
        "properties": {"command": {"type": "string"},
                       "status": {"type": "string"},
                       "files": {"type": "array", "items": {"type": "string"}}},
    },
    "validation": {
        "type": "object",
        "required": ["passes", "decay", "weight", "resolution"],
    },
    "resonances": {
        "type": "array",
        "items": {"type": "object",
                  "required": ["re", "im", "multiplicity", "h"]},
    },
    "scan_summary": {
        "type": "object", "required": ["per_h"],
    },
    "theorem": {
        "type": "object",
        "required": ["per_h", "decay_slope", "decay_r2", "overall"],
    },
    "ads": {
        "type": "object",
        "required": ["rows", "slope", "c_bound", "all_widths_positive"],
    },
    "bounds": {
        "type": "object", "required": ["suites", "passes"],
    },
    "quasimode_header": {
        "type": "object",
        "required": ["lambda", "h", "accuracy", "support_radius"],
    },
}


class OutputWriter:
    def __init__(self, out_dir: str, command: str):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.files: list[str] = []

    def write_json(self, name: str, obj, schema: str):
        jsonschema.validate(obj, _SCHEMAS[schema])
        path = self.dir / name
        path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n",
                        encoding="utf-8")
        self.files.append(name)

    def write_text(self, name: str, text: str):
        (self.dir / name).write_text(text, encoding="utf-8")
        self.files.append(name)

    def finalize(self, status: str):
        manifest = {"command": self.command, "status": status,
                    "files": sorted(self.files)}
        jsonschema.validate(manifest, _SCHEMAS["manifest"])
        (self.dir / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=1) + "\n",
            encoding="utf-8")


def _resonance_records(resonances, model_label):
    return [{"re": r.lam.real, "im": r.lam.imag, "multiplicity": r.multiplicity,
             "h": r.h, "model_label": model_label} for r in resonances]


def _resonance_csv(resonances) -> str:
    import io
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["re_lambda", "im_lambda", "multiplicity", "h"])
    for r in resonances:
        writer.writerow([f"{r.lam.real:.15g}", f"{r.lam.imag:.15g}",
                         r.multiplicity, f"{r.h:.12g}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# quasimode pipeline shared by quasimode/theorem-check/ads-sweep

def _barrier_position(model: PotentialModel, h: float) -> float:
    xs = np.linspace(0.0, 20.0, 4001)
    v = np.asarray(model.v(xs, h), dtype=float)
    return float(xs[int(np.argmax(v))])


def _well_mass(pair, x_edge: float) -> float:
    dx = pair.x[1] - pair.x[0]
    return float(np.sum(pair.u[pair.x <= x_edge] ** 2) * dx)


def build_cluster(model: PotentialModel, cfg: ExperimentConfig, h: float
                  ) -> tuple[list[Quasimode], str]:
    """Quasimode cluster for one h; returns (members, reason) where members
    may be empty with the reason naming the unmet hypothesis."""
    qcfg = cfg.quasimode
    e_lo, e_hi = cfg.energy_window()
    target = float(cfg.theorem.get("target_energy", 0.5 * (e_lo + e_hi)))
    cluster_size = int(cfg.theorem.get("cluster_size", 1))
    mass_min = float(cfg.theorem.get("well_mass_min", 0.6))
    x_barrier = float(qcfg.get("x_barrier") or _barrier_position(model, h))
    if x_barrier <= 0:
        return [], "no barrier to shield a well (coefficients flat)"
    width = float(qcfg.get("cutoff_width") or default_cutoff_width(h))
    margin = float(qcfg.get("barrier_margin", 0.2))
    length = x_barrier + margin + width + 0.3
    count = int(qcfg.get("eigen_count", 50))
    pairs = dirichlet_eigensolve(model, length, h, count)
    cands = [p for p in pairs
             if e_lo < p.energy < e_hi and _well_mass(p, x_barrier) > mass_min]
    if not cands:
        return [], "no localized eigenvalue in the energy window"
    cands.sort(key=lambda p: abs(p.energy - target))
    members = []
    for pair in cands[:cluster_size]:
        try:
            x_cut = auto_cutoff(pair, x_barrier,
                                min(x_barrier + 1.2, length - width - 0.05))
            qm = build_quasimode(model, pair, (x_cut, width),
                                 energy_window=(e_lo, e_hi),
                                 tail_tol=float(qcfg.get("tail_tol", 0.05)))
            members.append(qm)
        except (BadCutoffError, DomainError):
            continue
    if not members:
        return [], "eigenfunction not decayed at any admissible cutoff"
    return members, ""


# ---------------------------------------------------------------------------
# commands

def cmd_validate(cfg: ExperimentConfig, out: OutputWriter) -> int:
    model = cfg.build_model()
    weight = cfg.build_weight()
    h0 = cfg.h_list[0] if cfg.h_list else 1.0 / cfg.ell_list[0]
    rate = model.decay_rate
    xs = np.linspace(model.x_box, model.x_box + 10.0 / rate, 64)
    decay = validate_decay(model, xs, h0)
    # weight checks: endpoint interpolation and derivative bounds
    probe = np.linspace(0.0, weight.x_linear + 2.0, 4001)
    dstep = 1e-3
    fd = (weight(probe + dstep) - weight(probe - dstep)) / (2 * dstep)
    weight_ok = (abs(float(weight(weight.x_linear)) - weight.x_linear) < 1e-9
                 and float(fd.min()) > -1e-6
                 and float(fd.max()) <= 1.0 + weight.slope_slack + 1e-6)
    # grid resolution for the largest |sigma| in the window
    sigma_max = abs(complex(cfg.window["b0"], 1.0)) / (cfg.h_list[-1] if cfg.h_list
                                                       else h0)
    x_max = weight.x_linear + 12.0 / cfg.gamma
    n_needed = int(np.ceil(10 * x_max * sigma_max / (2 * np.pi))) + 1
    resolution_ok = n_needed <= 200000
    passes = bool(decay.passes and weight_ok and resolution_ok)
    report = {
        "passes": passes,
        "decay": {"passes": decay.passes, "fitted_rate": decay.fitted_rate,
                  "worst_x": decay.worst_x, "max_excess": decay.max_excess},
        "weight": {"passes": weight_ok, "slope_slack": weight.slope_slack},
        "resolution": {"passes": resolution_ok, "grid_points_needed": n_needed},
    }
    out.write_json("validation.json", report, "validation")
    return EXIT_PASS if passes else EXIT_SUITE_FAILURE


def _scan_one_h(model, cfg, h, s_radius=1e-10):
    window = cfg.build_window(h, s_radius)
    tol = float(cfg.tolerances.get("ode", 1e-10))
    resonances = scan_resonances(model, window, h, tol=tol)
    handle = wronskian_handle(model, h, tol, domain=window.rectangle())
    total = winding_count(handle, window.rectangle())
    return window, resonances, total


def cmd_scan(cfg: ExperimentConfig, out: OutputWriter, threads: int = 1) -> int:
    model = cfg.build_model()
    hs = cfg.h_list or [1.0 / ell for ell in cfg.ell_list]
    per_h = {}

    def work(h):
        return h, _scan_one_h(model, cfg, h)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, hs))
    else:
        results = [work(h) for h in hs]
    status = "pass"
    for h, (window, resonances, total) in sorted(results, key=lambda t: -t[0]):
        tag = f"h{h:g}"
        records = _resonance_records(resonances, model.label)
        out.write_json(f"resonances_{tag}.json", records, "resonances")
        out.write_text(f"resonances_{tag}.csv", _resonance_csv(resonances))
        msum = sum(r.multiplicity for r in resonances)
        per_h[f"{h:g}"] = {"count": len(resonances), "multiplicity_sum": msum,
                           "window_winding": total,
                           "complete": bool(msum == total)}
        if msum != total:
            status = "incomplete"
    out.write_json("scan_summary.json", {"per_h": per_h}, "scan_summary")
    return EXIT_PASS if status == "pass" else EXIT_SUITE_FAILURE


def cmd_quasimode(cfg: ExperimentConfig, out: OutputWriter) -> int:
    model = cfg.build_model()
    hs = cfg.h_list or [1.0 / ell for ell in cfg.ell_list]
    any_built = False
    for h in hs:
        members, reason = build_cluster(model, cfg, h)
        for i, qm in enumerate(members):
            tag = f"h{h:g}_{i}"
            out.write_text(f"quasimode_{tag}.csv", quasimode_to_csv(qm))
            out.write_json(f"quasimode_{tag}.json",
                           json.loads(quasimode_header_json(qm)),
                           "quasimode_header")
            any_built = True
        if not members:
            out.write_text(f"quasimode_h{h:g}_unmet.txt", reason + "\n")
    return EXIT_PASS if any_built else EXIT_SUITE_FAILURE


def _norm_scan_lambdas(window: FrequencyWindow, n_re: int = 5, n_im: int = 3):
    re_lo, re_hi, im_lo, _ = window.rectangle()
    res = np.linspace(re_lo + 0.05 * (re_hi - re_lo),
                      re_hi - 0.05 * (re_hi - re_lo), n_re)
    ims = np.linspace(im_lo * 0.8, -0.1 * abs(im_lo), n_im)
    return [complex(a, b) for a in res for b in ims]


def cmd_theorem_check(cfg: ExperimentConfig, out: OutputWriter) -> int:
    model = cfg.build_model()
    weight = cfg.build_weight()
    if cfg.h_list is None:
        raise ConfigError("theorem-check needs field 'h_list'")
    tol = float(cfg.tolerances.get("ode", 1e-10))
    tcfg = cfg.theorem
    n_cond = float(tcfg.get("N", 0.0))
    m_cond = float(tcfg.get("M", 1.0))
    b_cond = float(tcfg.get("B", 1.0))
    c0_cond = float(tcfg.get("C0", 1.0))
    c_gate = float(tcfg.get("C_gate", 1.0))

    per_h_rows = []
    scans, all_res, quasis = [], [], {}
    for h in cfg.h_list:
        row = {"h": h}
        members, reason = build_cluster(model, cfg, h)
        if not members:
            row.update(status="hypotheses_unmet", reason=reason)
            per_h_rows.append(row)
            continue
        acc = max(qm.accuracy for qm in members)
        s_rad = cfg.exclusion_radius(h, acc)
        window = cfg.build_window(h, s_rad)
        resonances = scan_resonances(model, window, h, tol=tol)
        handle = wronskian_handle(model, h, tol, domain=window.rectangle())
        total = winding_count(handle, window.rectangle())
        x_max = weight.x_linear + 12.0 / cfg.gamma
        sig_abs = abs(complex(window.b0, window.im_top)) / h
        grid = Grid(x_max, max(400, int(np.ceil(10 * x_max * sig_abs
                                                / (2 * np.pi))) + 1))
        lams = _norm_scan_lambdas(window)
        scan = scan_norms(model, lams, h, cfg.gamma, weight, grid,
                          exclusions=[(r.lam, s_rad) for r in resonances],
                          tol=tol, window_winding=total)
        scans.append(scan)
        all_res.extend(resonances)
        quasis[h] = (members, resonances, s_rad, acc)
        per_h_rows.append(row)

    fit = None
    if scans:
        s_fit = max(max(s for *_ , s, _ in quasis.values()), 1e-10)
        s_fit = min(s_fit, 0.5)
        fit = apriori_bound_check(scans, all_res, s_fit)
    p_fit = fit.p_fit if fit is not None and fit.feasible else 1.0

    widths, inv_h, overall = [], [], "pass"
    for row in per_h_rows:
        h = row["h"]
        if row.get("status") == "hypotheses_unmet":
            continue
        members, resonances, s_rad, acc = quasis[h]
        gate = h ** (p_fit + n_cond + 1.0) / (c_gate * math.log(1.0 / h))
        row["R"] = acc
        row["accuracy_gate"] = gate
        row["lambda"] = [qm.lam for qm in members]
        row["resonances_found"] = len(resonances)
        if acc > gate:
            row.update(status="hypotheses_unmet",
                       reason=f"accuracy {acc:.3e} above gate {gate:.3e}")
            continue
        c_h = max(c0_cond * b_cond * m_cond * acc * h ** (-p_fit - n_cond - 1.0),
                  math.exp(-b_cond / h))
        row["c"] = c_h
        energies = [qm.energy for qm in members]
        a_h, b_h = min(energies), max(energies)
        log_term = c_h * math.log(1.0 / h)
        strip_count = 0
        for r in resonances:
            e = r.lam ** 2
            if (a_h - log_term <= e.real <= b_h + log_term
                    and -1e-10 <= -e.imag <= c_h):
                strip_count += r.multiplicity
        row["strip_count"] = strip_count
        row["m_required"] = len(members)
        lam_q = members[0].lam
        if resonances:
            near = min(resonances, key=lambda r: abs(r.lam - lam_q))
            row["nearest_distance"] = abs(near.lam - lam_q)
            widths.append(max(-near.lam.imag, 1e-300))
            inv_h.append(1.0 / h)
        if strip_count >= len(members):
            row["status"] = "pass"
        else:
            row["status"] = "conclusion_violated"
            overall = "conclusion_violated"

    slope = r2 = float("nan")
    if len(widths) >= 2:
        slope, _, r2 = linear_fit(np.array(inv_h), np.log(np.array(widths)))
    dists = [row.get("nearest_distance") for row in per_h_rows
             if row.get("nearest_distance") is not None]
    statuses = [row.get("status") for row in per_h_rows]
    if overall != "conclusion_violated" and all(
            s == "hypotheses_unmet" for s in statuses):
        overall = "hypotheses_unmet"
    report = {
        "per_h": [_jsonable(row) for row in per_h_rows],
        "decay_slope": slope,
        "decay_r2": r2,
        "p_fit": p_fit,
        "apriori": json.loads(fit.to_json()) if fit is not None else None,
        "distances_decreasing": bool(all(d2 < d1 for d1, d2
                                         in zip(dists, dists[1:]))),
        "overall": overall,
    }
    out.write_json("theorem_report.json", report, "theorem")
    return EXIT_PASS if overall != "conclusion_violated" else EXIT_SUITE_FAILURE


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def cmd_ads_sweep(cfg: ExperimentConfig, out: OutputWriter) -> int:
    if not cfg.ell_list or len(cfg.ell_list) < 4:
        raise ConfigError("ads-sweep needs field 'ell_list' with >= 4 entries")
    tol = float(cfg.tolerances.get("ode", 1e-10))
    rows = []
    missing = []
    for ell in cfg.ell_list:
        model = model_from_config({**cfg.model, "params": [ell]})
        h = 1.0 / ell
        members, reason = build_cluster(model, cfg, h)
        if not members:
            missing.append({"ell": ell, "reason": reason})
            continue
        qm = members[0]
        s_rad = cfg.exclusion_radius(h, qm.accuracy)
        window = cfg.build_window(h, s_rad)
        resonances = scan_resonances(model, window, h, tol=tol)
        if not resonances:
            missing.append({"ell": ell, "reason": "no resonance in window"})
            continue
        near = min(resonances, key=lambda r: abs(r.lam - qm.lam))
        width_sigma = -near.lam.imag / h**2
        rows.append({"ell": ell, "h": h, "lambda_quasimode": qm.lam,
                     "accuracy": qm.accuracy,
                     "resonance": [near.lam.real, near.lam.imag],
                     "width_sigma": width_sigma})
    slope = float("nan")
    c_bound = float("nan")
    positive = all(r["width_sigma"] > 0 for r in rows) and bool(rows)
    if len(rows) >= 2:
        ells = np.array([r["ell"] for r in rows], dtype=float)
        ws = np.array([max(r["width_sigma"], 1e-300) for r in rows])
        slope, _, _ = linear_fit(ells, np.log(ws))
        c_bound = _min_two_sided_constant(ells, ws)
    report = {"rows": rows, "missing": missing, "slope": slope,
              "c_bound": c_bound, "all_widths_positive": positive}
    out.write_json("ads_sweep.json", _jsonable(report), "ads")
    import io
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["ell", "h", "width_sigma"])
    for r in rows:
        writer.writerow([r["ell"], f"{r['h']:.12g}", f"{r['width_sigma']:.15g}"])
    out.write_text("ads_sweep.csv", buf.getvalue())
    ok = positive and slope < 0 and not missing
    return EXIT_PASS if ok else EXIT_SUITE_FAILURE


def _min_two_sided_constant(ells: np.ndarray, widths: np.ndarray) -> float:
    """Smallest C with width_ell <= C exp(-ell / C) across the sweep."""
    def feasible(c):
        return np.all(widths <= c * np.exp(-ells / c))

    lo, hi = 1e-3, 1e6
    if not feasible(hi):
        return float("inf")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def cmd_bounds(cfg: ExperimentConfig, out: OutputWriter, seed: int = 1) -> int:
    model = cfg.build_model()
    weight = cfg.build_weight()
    gamma = cfg.gamma
    suites = {}

    sigmas = np.linspace(1.0, 50.0, 9)
    mreport = free_resolvent.verify_m_decay(sigmas, gamma, eps=0.1,
                                            weight=weight)
    suites["m_decay"] = {"pass": bool(mreport.ratio < 10.0),
                         "ratio": mreport.ratio, "sup": mreport.sup_norm}

    fit0 = free_resolvent.r0_norm_fit([2.0 ** k for k in range(7)], gamma,
                                      weight, s=0)
    suites["r0_slope"] = {"pass": bool(abs(fit0.slope + 1.0) <= 0.1),
                          "slope": fit0.slope}

    h0 = cfg.h_list[0] if cfg.h_list else 1.0 / cfg.ell_list[0]
    try:
        window, resonances, total = _scan_one_h(model, cfg, h0)
        s_rad = max(float(cfg.exclusion.get("floor", 1e-10)), 1e-10)
        s_rad = max(s_rad, 0.05) if resonances else max(s_rad, 1e-10)
        x_max = weight.x_linear + 12.0 / gamma
        sig_abs = abs(complex(window.b0, window.im_top)) / h0
        grid = Grid(x_max, max(400, int(np.ceil(10 * x_max * sig_abs
                                                / (2 * np.pi))) + 1))
        scan = scan_norms(model, _norm_scan_lambdas(window), h0, gamma, weight,
                          grid, exclusions=[(r.lam, s_rad) for r in resonances],
                          window_winding=total)
        fit = apriori_bound_check(scan, resonances, min(s_rad, 0.5))
        suites["apriori"] = {"pass": bool(fit.feasible and not fit.violations),
                             "feasible": fit.feasible, "A": fit.a_fit,
                             "p": fit.p_fit,
                             "violations": len(fit.violations)}
    except ReslabError as exc:
        suites["apriori"] = {"pass": False, "error": str(exc)}

    counterexamples = 0
    tested = 0
    fams = (seeded_function_family(seed, "polynomial", 100)
            + seeded_function_family(seed + 1, "exponential-polynomial", 100))
    for fh in fams:
        scaled, params = _scale_for_max_principle(fh)
        try:
            res = max_principle_check(scaled, **params)
        except HypothesisError:
            continue
        tested += 1
        if not res.holds:
            counterexamples += 1
    suites["max_principle"] = {"pass": bool(counterexamples == 0 and tested >= 150),
                               "tested": tested,
                               "counterexamples": counterexamples}

    passes = bool(all(s.get("pass") for s in suites.values()))
    out.write_json("bounds_report.json",
                   _jsonable({"suites": suites, "passes": passes}), "bounds")
    return EXIT_PASS if passes else EXIT_SUITE_FAILURE


def _scale_for_max_principle(fh: AnalyticHandle, a: float = 0.0, b: float = 1.0,
                             alpha: float = 4.0, s: float = 0.02,
                             m: float = 1.5):
    """Rescale a test function so the maximum-principle hypotheses hold."""
    w = max(s * alpha * math.log(alpha), 0.25)
    re = np.linspace(a - w, b + w, 161)
    im = np.linspace(-alpha * s, s, 41)
    zz = (re[None, :] + 1j * im[:, None]).ravel()
    vals = np.abs(fh.eval_many(zz))
    big = float(vals.max())
    top = float(np.max(np.abs(fh.eval_many(re + 1j * s))))
    if big == 0.0:
        scale = 1.0
    else:
        scale = min(math.exp(alpha) / big, m / max(top, 1e-300))

    def ev(zs, fh=fh, scale=scale):
        return scale * fh.eval_many(np.asarray(zs, dtype=complex))

    scaled = AnalyticHandle(evaluator=lambda z: complex(ev(np.array([z]))[0]),
                            vector_evaluator=ev)
    return scaled, {"a": a, "b": b, "w": w, "alpha": alpha, "s_minus": s,
                    "s_plus": s, "m": m}


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="reslab",
        description="Resonance laboratory for half-line semiclassical operators")
    parser.add_argument("command",
                        choices=["validate", "scan", "quasimode",
                                 "theorem-check", "ads-sweep", "bounds"])
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=1,
                        help="seed for property-suite function generation")
    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    out_dir = args.out or cfg.out_dir
    writer = OutputWriter(out_dir, args.command)
    try:
        if args.command == "validate":
            code = cmd_validate(cfg, writer)
        elif args.command == "scan":
            code = cmd_scan(cfg, writer, threads=args.threads)
        elif args.command == "quasimode":
            code = cmd_quasimode(cfg, writer)
        elif args.command == "theorem-check":
            code = cmd_theorem_check(cfg, writer)
        elif args.command == "ads-sweep":
            code = cmd_ads_sweep(cfg, writer)
        else:
            code = cmd_bounds(cfg, writer, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except ReslabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        writer.finalize("error")
        return EXIT_INTERNAL_ERROR
    writer.finalize("pass" if code == EXIT_PASS else "failure")
    return code


if __name__ == "__main__":
    sys.exit(main())
