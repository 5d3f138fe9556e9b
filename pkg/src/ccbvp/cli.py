"""Command-line front end: ``ccbvp {timemap,diagram,profiles,verify} --config run.json``.

The config is one JSON document with four blocks; every key is optional and
unknown keys are rejected::

    {
      "problem":  {"p": 4, "q": 1.5, "mode": "interval" | "annulus",
                   "spec": "model", "bounds": [m, M],
                   "dim_N": 3, "rho1": 1, "rho2": 2},
      "task":     {... subcommand parameters, see TASK_DEFAULTS ...},
      "numerics": {"rtol": 1e-12, "n_grid": 1025, "h_max": 0.1,
                   "max_steps": 5000, "seed": 0},
      "output":   {"dir": "ccbvp_out", "formats": ["csv", "json", "gp"]}
    }

Files go to ``<dir>/<subcommand>/<name>.{csv,json,gp}``. Data files carry no
timestamps; those live in ``<name>.meta.json`` only. Exit codes: 0 success,
1 numeric or verification failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import datetime
import json
import math
import os
import sys
from importlib import resources

import numpy as np
from scipy import special

from . import __version__, _backend
from .apriori import (Check, Report, _clean, build_constants, check_lemma_I, check_lemma_II,
                      check_ratio_inequalities)
from .continuation import StepConfig, energy_along_branch, trace_branch
from .errors import BranchUnavailable, CCBVPError, ConfigError, DomainError, NoSolution
from .params import Exponents, G_eval, NonlinearitySpec, PinchingBounds, c_lambda, energy
from .radial import AnnulusGeometry, pullback_solution, transform_nonlinearity
from .shooting import SearchConfig, find_j_nodal
from .solutions import (DeadCorePlacement, build_dead_core, build_nodal, build_threshold,
                        classify, grid_residual)
from .timemap import (LOWER, UPPER, Lambda_j, alpha_star, dead_core_length, lambda_j_star,
                      time_map_derivative, time_map_many)

SUBCOMMANDS = ("timemap", "diagram", "profiles", "verify")
SUITES = ("constants", "lemma_I", "lemma_II", "ratio", "classify")

# None marks an optional number (or list, for "offsets")
BLOCK_DEFAULTS = {
    "problem": {"p": 4.0, "q": 1.5, "mode": "interval", "spec": "model", "bounds": [1.0, 1.0],
                "dim_N": 3, "rho1": 1.0, "rho2": 2.0},
    "numerics": {"rtol": 1e-12, "n_grid": 1025, "h_max": 0.1, "max_steps": 5000, "seed": 0},
    "output": {"dir": "ccbvp_out", "formats": ["csv", "json", "gp"]},
}
TASK_DEFAULTS = {
    "timemap": {"name": "timemap", "lambdas": [0.1, 0.2, 1.0, 10.0, 50.0], "alpha_min": 1e-3,
                "alpha_max": 1e2, "n_alpha": 400, "derivative": False},
    "diagram": {"name": "diagram", "j_max": 3, "lambda_min": None, "lambda_max": None,
                "signs": [1, -1], "energy": True, "dead_core_points": 20,
                "dead_core_factor": 2.0},
    "profiles": {"name": "profile", "lam": 1.0, "j": 0, "type": "nodal", "branch": "upper",
                 "sign": 1, "offsets": None, "index": 0},
    "verify": {"name": "verify", "suites": list(SUITES), "j_max": 3,
               "lambdas_neg": [0.0, -1.0, -10.0], "lambdas_pos": [0.0, 1.0, 10.0],
               "ratio_samples": 10000, "inject_perturbation": None},
}
CHOICES = {
    ("problem", "mode"): ("interval", "annulus"),
    ("problem", "spec"): ("model",),
    ("task", "type"): ("nodal", "threshold", "deadcore"),
    ("task", "branch"): (UPPER, LOWER),
}
LIST_ITEM = {"lambdas": "number", "signs": "sign", "suites": SUITES, "formats": ("csv", "json", "gp"),
             "offsets": "number", "bounds": "number", "lambdas_neg": "number",
             "lambdas_pos": "number"}


# ---------------------------------------------------------------------------
# configuration


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_value(block, key, value, default):
    where = f"{block}.{key}"
    if default is None:
        if value is None:
            return None
        if key == "offsets":
            default = []
        elif _is_num(value):
            return float(value)
        else:
            raise ConfigError(f"{where}: expected a number or null")
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if isinstance(default, int):
        if not (isinstance(value, int) and not isinstance(value, bool)):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if isinstance(default, float):
        if not _is_num(value):
            raise ConfigError(f"{where}: expected a finite number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        ok = CHOICES.get(("task" if block in SUBCOMMANDS else block, key))
        if ok is not None and value not in ok:
            raise ConfigError(f"{where}: {value!r} not in {ok}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        item = LIST_ITEM[key]
        out = []
        for v in value:
            if item == "number":
                if not _is_num(v):
                    raise ConfigError(f"{where}: entries must be finite numbers")
                out.append(float(v))
            elif item == "sign":
                if v not in (1, -1) or isinstance(v, bool):
                    raise ConfigError(f"{where}: entries must be 1 or -1")
                out.append(int(v))
            else:
                if v not in item:
                    raise ConfigError(f"{where}: {v!r} not in {item}")
                out.append(v)
        return out
    raise ConfigError(f"{where}: unsupported value")  # pragma: no cover


def _merge(block, defaults, given):
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"{block}: expected an object")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"{block}: unknown keys {unknown}")
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        out[k] = _check_value(block, k, v, defaults[k])
    return out


def parse_config(doc: dict, subcommand: str) -> dict:
    """Validate a config document and fill in defaults for ``subcommand``."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - {"problem", "task", "numerics", "output"})
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}")
    cfg = {b: _merge(b, d, doc.get(b)) for b, d in BLOCK_DEFAULTS.items()}
    cfg["task"] = _merge(subcommand, TASK_DEFAULTS[subcommand], doc.get("task"))
    pr = cfg["problem"]
    try:
        Exponents(pr["p"], pr["q"])
        m, M = pr["bounds"] if len(pr["bounds"]) == 2 else (None, None)
        if m is None:
            raise DomainError("bounds must be [m, M]")
        PinchingBounds(m, M)
        if pr["mode"] == "annulus":
            AnnulusGeometry(pr["dim_N"], pr["rho1"], pr["rho2"])
    except DomainError as exc:
        raise ConfigError(f"problem: {exc}") from None
    if not m <= 1.0 <= M:
        raise ConfigError("problem.bounds: the model nonlinearity needs m <= 1 <= M")
    nu = cfg["numerics"]
    if not (0 < nu["rtol"] < 1e-3 and nu["n_grid"] >= 17 and nu["h_max"] > 0 and nu["max_steps"] > 0):
        raise ConfigError("numerics: need 0 < rtol < 1e-3, n_grid >= 17, h_max > 0, max_steps > 0")
    _check_task(subcommand, cfg["task"])
    return cfg


def _check_task(sub, t):
    if sub == "timemap":
        if not t["lambdas"]:
            raise ConfigError("task.lambdas must not be empty")
        if not (0 < t["alpha_min"] < t["alpha_max"] and t["n_alpha"] >= 2):
            raise ConfigError("task: need 0 < alpha_min < alpha_max and n_alpha >= 2")
    elif sub == "diagram":
        if t["j_max"] < 0 or not t["signs"]:
            raise ConfigError("task: need j_max >= 0 and a nonempty sign list")
        if t["dead_core_points"] < 0 or t["dead_core_factor"] <= 1.0:
            raise ConfigError("task: need dead_core_points >= 0 and dead_core_factor > 1")
        lo, hi = t["lambda_min"], t["lambda_max"]
        if lo is not None and hi is not None and not lo < hi:
            raise ConfigError("task: lambda_min < lambda_max required")
    elif sub == "profiles":
        if t["j"] < 0 or t["sign"] not in (1, -1) or t["index"] < 0:
            raise ConfigError("task: need j >= 0, sign = +-1 and index >= 0")
        if t["offsets"] is not None and len(t["offsets"]) != t["j"] + 1:
            raise ConfigError("task.offsets must hold j + 1 entries")
    elif sub == "verify":
        if t["j_max"] < 0 or t["ratio_samples"] < 1:
            raise ConfigError("task: need j_max >= 0 and ratio_samples >= 1")
        if any(v > 0 for v in t["lambdas_neg"]) or any(v < 0 for v in t["lambdas_pos"]):
            raise ConfigError("task: lambdas_neg must be <= 0 and lambdas_pos >= 0")


def load_config(path, subcommand):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return parse_config(doc, subcommand)


# ---------------------------------------------------------------------------
# output helpers


def fmt(x):
    """17 significant digits; None as an empty field."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


class _Out:
    def __init__(self, cfg, sub):
        self.dir = os.path.join(cfg["output"]["dir"], sub)
        self.formats = set(cfg["output"]["formats"])
        self.written = []
        os.makedirs(self.dir, exist_ok=True)

    def path(self, fname):
        return os.path.join(self.dir, fname)

    def csv(self, fname, header, rows):
        if "csv" not in self.formats:
            return
        p = self.path(fname)
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(v) for v in r])
        self.written.append(p)

    def json(self, fname, obj, force=False):
        if "json" not in self.formats and not force:
            return
        p = self.path(fname)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_clean(obj), fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
        self.written.append(p)

    def gp(self, fname, text):
        if "gp" not in self.formats:
            return
        p = self.path(fname)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.written.append(p)

    def meta(self, name, cfg):
        """Sidecar with the run environment; the only file with a timestamp."""
        self.json(f"{name}.meta.json", {
            "version": __version__, "backend": _backend.backend_name(),
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "config": cfg}, force=True)


def _gp_header(title, xlabel, ylabel, logx=False):
    s = ("set datafile separator ','\n"
         f"set title '{title}'\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\n")
    if logx:
        s += "set logscale x\n"
    return s


def _problem(cfg):
    pr = cfg["problem"]
    exp = Exponents(pr["p"], pr["q"])
    bounds = PinchingBounds(*pr["bounds"])
    spec = NonlinearitySpec.model(exp)
    geom = None
    if pr["mode"] == "annulus":
        geom = AnnulusGeometry(pr["dim_N"], pr["rho1"], pr["rho2"])
    return exp, bounds, spec, geom


def _step_cfg(cfg):
    nu = cfg["numerics"]
    return StepConfig(h_max=nu["h_max"], max_steps=nu["max_steps"], rtol=nu["rtol"])


def _sigma(sign, j):
    return [sign * (-1) ** k for k in range(j + 1)]


# ---------------------------------------------------------------------------
# subcommands


def _count_turns(T):
    d = np.sign(np.diff(T))
    d = d[d != 0]
    return int(np.count_nonzero(d[1:] != d[:-1]))


def cmd_timemap(cfg):
    """T_lam(alpha) curves, one block of rows per lambda, plus alpha_lam / c_lam markers."""
    exp, _, _, _ = _problem(cfg)
    t = cfg["task"]
    out = _Out(cfg, "timemap")
    name = t["name"]
    grid = np.geomspace(t["alpha_min"], t["alpha_max"], t["n_alpha"])
    rows, markers, curves = [], [], []
    for lam in t["lambdas"]:
        if lam < 0:
            c = c_lambda(exp, lam)
            a = np.concatenate([[c], grid[grid > c]])
        else:
            a = grid
        T = time_map_many(exp, lam, a)
        dT = None
        if t["derivative"]:
            dT = []
            for ai in a:
                try:
                    dT.append(time_map_derivative(exp, lam, float(ai)))
                except CCBVPError:
                    dT.append(None)
        for k in range(a.size):
            r = [lam, a[k], T[k]]
            if dT is not None:
                r.append(dT[k])
            rows.append(r)
        if lam > 0:
            prof = alpha_star(exp, lam)
            markers.append([lam, "alpha_lambda", prof.alpha_star, prof.T_star])
        elif lam < 0:
            markers.append([lam, "c_lambda", a[0], T[0]])
        curves.append({"lambda": lam, "n": int(a.size), "turns": _count_turns(T),
                       "decreasing": bool(np.all(np.diff(T) < 0))})
    header = ["lambda", "alpha", "T"] + (["T_prime"] if t["derivative"] else [])
    out.csv(f"{name}.csv", header, rows)
    out.csv(f"{name}_markers.csv", ["lambda", "kind", "alpha", "T"], markers)
    out.json(f"{name}.json", {"curves": curves, "p": exp.p, "q": exp.q})
    plots = ", \\\n     ".join(
        f"'{name}.csv' skip 1 using 2:($1=={fmt(lam)} ? $3 : 1/0) with lines title 'lambda={lam:g}'"
        for lam in t["lambdas"])
    out.gp(f"{name}.gp", _gp_header("time map", "alpha", "T", logx=True) + f"plot {plots}, \\\n"
           f"     '{name}_markers.csv' skip 1 using 3:4 with points pt 7 title 'alpha_lambda / c_lambda'\n")
    out.meta(name, cfg)
    return 0, out.written


def _dead_core_rows(spec, exp, j, lam_lo, n, with_energy, n_grid):
    """Flat-amplitude family on [lam_lo, lambda_j*): sup = c_lam."""
    ls = lambda_j_star(exp, j)
    if n == 0 or not lam_lo < ls:
        return []
    p, q = exp.p, exp.q
    ratios = np.geomspace(lam_lo / ls, 1.0 + 1e-4, n)
    rows = []
    for rr in ratios:
        lam = float(ls * rr)
        c = c_lambda(exp, lam)
        # |v'| peaks where g_lam(v) = 0, with |v'|^2 = -2 G_lam(v) there
        z0 = abs(lam) ** (1.0 / (p - q))
        slope = math.sqrt(-2.0 * G_eval(exp, lam, z0))
        row = [lam, c, c + slope]
        if with_energy:
            sol = build_dead_core(exp, lam, DeadCorePlacement.evenly_spaced(j, dead_core_length(exp, lam, j)),
                                  _sigma(1, j), n_grid)
            row.append(energy(spec, lam, sol))
        rows.append(row + ["dead_core", "construction"])
    thr = build_threshold(exp, j, _sigma(1, j), n_grid)
    row = [ls, thr.sup_norm, thr.c1_norm]
    if with_energy:
        row.append(energy(spec, ls, thr))
    rows.append(row + ["threshold", "construction"])
    return rows


def cmd_diagram(cfg):
    """Branches (j, sign) by continuation; dead-core segment below lambda_j* for the model."""
    exp, _, spec, geom = _problem(cfg)
    t = cfg["task"]
    nu = cfg["numerics"]
    if geom is not None:
        spec = transform_nonlinearity(geom, spec)
    out = _Out(cfg, "diagram")
    name = t["name"]
    with_energy = bool(t["energy"] and spec.variational)
    header = ["lambda", "sup_norm", "c1_norm"] + (["energy"] if with_energy else []) + [
        "branch_arm", "source"]
    step = _step_cfg(cfg)
    summary, failures, files = [], {}, []
    for j in range(t["j_max"] + 1):
        ls = lambda_j_star(exp, j) if spec.is_model else None
        for sg in t["signs"]:
            tag = f"j{j}_{'plus' if sg > 0 else 'minus'}"
            try:
                br = trace_branch(spec, j, sg, (t["lambda_min"], t["lambda_max"]), step)
                if with_energy:
                    energy_along_branch(spec, br, nu["n_grid"])
            except (CCBVPError, ArithmeticError, ValueError) as exc:
                failures[tag] = f"{type(exc).__name__}: {exc}"
                continue
            rows = []
            if spec.is_model:
                lo = t["lambda_min"] if t["lambda_min"] is not None else t["dead_core_factor"] * ls
                rows = _dead_core_rows(spec, exp, j, lo, t["dead_core_points"], with_energy,
                                       nu["n_grid"])
            for pt in br.points:
                r = [pt.lam, pt.sup_norm, pt.c1_norm]
                if with_energy:
                    r.append(pt.energy)
                rows.append(r + [pt.arm, pt.source])
            fname = f"{name}_{tag}.csv"
            out.csv(fname, header, rows)
            files.append(fname)
            summary.append({
                "j": j, "sign": sg, "file": fname, "n_points": len(rows),
                "turning_point_lambda": br.turning_point_lambda,
                "Lambda_j": Lambda_j(exp, j) if spec.is_model else None,
                "lambda_j_star": ls, "end_reasons": list(br.end_reasons),
                "fold_slope0": br.fold_slope0})
    out.json(f"{name}.json", {"branches": summary, "failures": failures,
                              "energy": with_energy, "mode": cfg["problem"]["mode"]}, force=True)
    if files:
        plots = ", \\\n     ".join(f"'{f}' skip 1 using 1:2 with lines title '{f[:-4]}'" for f in files)
        out.gp(f"{name}.gp", _gp_header("solution curves", "lambda", "sup norm") + f"plot {plots}\n")
    out.meta(name, cfg)
    return (1 if failures else 0), out.written


def _profile_solution(cfg, exp, spec, geom):
    t = cfg["task"]
    nu = cfg["numerics"]
    lam, j, sg = t["lam"], t["j"], t["sign"]
    if geom is not None:
        tspec = transform_nonlinearity(geom, spec)
        sols = find_j_nodal(tspec, lam, j, sg, SearchConfig(n_grid=nu["n_grid"],
                                                            polish_rtol=nu["rtol"]))
        if t["index"] >= len(sols):
            raise NoSolution(f"only {len(sols)} solutions with {j} nodes and sign {sg} found "
                             f"at lambda={lam!r}")
        return sols[t["index"]], tspec
    if t["type"] == "nodal":
        return build_nodal(exp, lam, j, t["branch"], sg, nu["n_grid"]), spec
    if t["type"] == "threshold":
        return build_threshold(exp, j, _sigma(sg, j), nu["n_grid"]), spec
    l = dead_core_length(exp, lam, j)
    if t["offsets"] is None:
        placement = DeadCorePlacement.evenly_spaced(j, l)
    else:
        placement = DeadCorePlacement(tuple(t["offsets"]), l)
    return build_dead_core(exp, lam, placement, _sigma(sg, j), nu["n_grid"]), spec


def cmd_profiles(cfg):
    """Solution trace with a local residual column; annulus mode adds the radial profile."""
    exp, _, spec, geom = _problem(cfg)
    out = _Out(cfg, "profiles")
    name = cfg["task"]["name"]
    sol, used = _profile_solution(cfg, exp, spec, geom)
    res, scale, R = grid_residual(sol, used)
    # the residual is defined at interior grid points only
    Rfull = [None] + list(R) + [None]
    out.csv(f"{name}.csv", ["x", "u", "u_prime", "residual"],
            zip(sol.x, sol.u, sol.du, Rfull))
    info = {
        "kind": sol.kind, "lambda": sol.lam, "j": sol.node_count, "branch": sol.branch,
        "sup_norm": sol.sup_norm, "slope_norm": sol.slope_norm, "residual": res,
        "residual_scale": scale,
        "segments": [{"a": s.a, "b": s.b, "alpha": getattr(s, "alpha", 0.0),
                      "sign": getattr(s, "sign", 0)} for s in sol.segments],
    }
    gp = _gp_header("solution profile", "x", "u") + f"plot '{name}.csv' skip 1 using 1:2 with lines title 'u'\n"
    if geom is not None:
        rp = pullback_solution(geom, sol, spec, sol.lam)
        out.csv(f"{name}_radial.csv", ["s", "w", "w_prime", "residual"],
                zip(rp.s, rp.w, rp.dw, rp.residual))
        info["radial"] = {"dim_N": geom.dim_N, "rho1": geom.rho1, "rho2": geom.rho2,
                          "sup_norm": rp.sup_norm, "max_residual": rp.max_residual,
                          "sign_changes": rp.sign_changes}
        gp += f"pause -1\nplot '{name}_radial.csv' skip 1 using 1:2 with lines title 'w(|x|)'\n"
    out.json(f"{name}.json", info)
    out.gp(f"{name}.gp", gp)
    out.meta(name, cfg)
    return 0, out.written


# ---------------------------------------------------------------------------
# verify


def _constants_report(exp, C):
    rep = Report("constants")
    p, q = exp.p, exp.q
    for name, x, val in (("m_p", p, C.m_p), ("m_q", q, C.m_q)):
        beta = special.beta(1.0 / x, 0.5) / x
        rep.add(f"{name} vs Beta closed form", abs(val - beta) / beta, 1e-10)
    rep.add("1 < m_p", 1.0, C.m_p)
    rep.add("m_p < m_q", C.m_p, C.m_q)
    rep.add("C1 >= 1", 1.0, C.C1)
    rep.add("C2 >= 1", 1.0, C.C2)
    rep.add("a >= 1", 1.0, C.a)
    e_a, e_T = 1.0 / (p - q), (2.0 - p) / (2.0 * (p - q))
    for lam in np.geomspace(1e-2, 1e3, 11):
        prof = alpha_star(exp, float(lam))
        rep.add(f"alpha_lam >= c3 lam^e (lam={lam:.4g})", C.c3 * lam ** e_a, prof.alpha_star)
        rep.add(f"alpha_lam <= C3 lam^e (lam={lam:.4g})", prof.alpha_star, C.C3 * lam ** e_a)
        rep.add(f"T_star >= c3 lam^e (lam={lam:.4g})", C.c3 * lam ** e_T, prof.T_star)
        rep.add(f"T_star <= C3 lam^e (lam={lam:.4g})", prof.T_star, C.C3 * lam ** e_T)
    return rep


def _lemma_I_reports(exp, bounds, C, t, n_grid):
    reps = []
    for j in range(t["j_max"] + 1):
        ls = lambda_j_star(exp, j)
        for lam in list(t["lambdas_neg"]) + [2.0 * ls]:
            if lam < ls:
                sol = build_dead_core(exp, lam, DeadCorePlacement.evenly_spaced(
                    j, dead_core_length(exp, lam, j)), _sigma(1, j), n_grid)
            else:
                sol = build_nodal(exp, lam, j, UPPER, 1, n_grid)
            r = check_lemma_I(exp, bounds, lam, sol, C)
            r.name = f"lemma_I j={j} lambda={lam:.6g} ({sol.kind})"
            reps.append(r)
    return reps


def _lemma_II_reports(exp, bounds, C, t, n_grid):
    reps = []
    for j in range(t["j_max"] + 1):
        for lam in t["lambdas_pos"]:
            for br in (UPPER, LOWER):
                try:
                    sol = build_nodal(exp, lam, j, br, 1, n_grid)
                except (NoSolution, BranchUnavailable):
                    continue
                r = check_lemma_II(exp, bounds, lam, sol, C)
                r.name = f"lemma_II j={j} lambda={lam:.6g} {br}"
                reps.append(r)
    return reps


class _Trace:
    def __init__(self, x, u, du):
        self.x, self.u, self.du = x, u, du


def _classify_report(exp, spec, t, n_grid):
    rep = Report("classify round trips")

    def record(label, sol_or_trace, lam, want_kind, want_j, want_branch=None):
        got = classify(exp, lam, sol_or_trace, spec)
        ok = got.kind == want_kind and got.j == want_j and (
            want_branch is None or got.branch == want_branch)
        detail = f"got kind={got.kind} j={got.j} branch={got.branch} {got.reason}".strip()
        rep.checks.append(Check(label, None, None, 0.0 if ok else -1.0, ok, True, detail))

    for j in range(t["j_max"] + 1):
        for br in (UPPER, LOWER):
            try:
                sol = build_nodal(exp, 1.0, j, br, 1, n_grid)
            except (NoSolution, BranchUnavailable):
                continue
            record(f"nodal j={j} {br}", sol, 1.0, "nodal", j, br)
        record(f"threshold j={j}", build_threshold(exp, j, _sigma(1, j), n_grid),
               lambda_j_star(exp, j), "threshold", j)
        lam = 1.5 * lambda_j_star(exp, j)
        l = dead_core_length(exp, lam, j)
        pl = DeadCorePlacement.evenly_spaced(j, l)
        # a generic, uneven placement: shift the first arch halfway to 0
        pl = DeadCorePlacement((0.5 * pl.offsets[0],) + pl.offsets[1:], l)
        record(f"dead core j={j}", build_dead_core(exp, lam, pl, _sigma(1, j), n_grid),
               lam, "dead_core", j)
    eps = t["inject_perturbation"]
    if eps is not None:
        sol = build_nodal(exp, 1.0, 0, UPPER, 1, n_grid)
        bump = np.sin(3.0 * np.pi * sol.x)
        dbump = 3.0 * np.pi * np.cos(3.0 * np.pi * sol.x)
        tr = _Trace(sol.x, sol.u + eps * sol.sup_norm * bump, sol.du + eps * sol.sup_norm * dbump)
        record(f"injected perturbation eps={eps:g}", tr, 1.0, "nodal", 0)
    return rep


def run_verify(cfg):
    """The verify report as a dict (also used by the tests)."""
    exp, bounds, spec, _ = _problem(cfg)
    t = cfg["task"]
    n_grid = cfg["numerics"]["n_grid"]
    C = build_constants(exp, bounds)
    suites = []
    for name in t["suites"]:
        if name == "constants":
            reps = [_constants_report(exp, C)]
        elif name == "lemma_I":
            reps = _lemma_I_reports(exp, bounds, C, t, n_grid)
        elif name == "lemma_II":
            reps = _lemma_II_reports(exp, bounds, C, t, n_grid)
        elif name == "ratio":
            reps = [check_ratio_inequalities(exp, bounds, constants=C, n=t["ratio_samples"],
                                             seed=cfg["numerics"]["seed"])]
        else:
            reps = [_classify_report(exp, spec, t, n_grid)]
        slacks = [r.min_slack for r in reps if math.isfinite(r.min_slack)]
        suites.append({"name": name, "passed": all(r.passed for r in reps),
                       "min_slack": min(slacks) if slacks else None,
                       "reports": [r.as_dict() for r in reps]})
    return _clean({
        "passed": all(s["passed"] for s in suites),
        "p": exp.p, "q": exp.q, "bounds": [bounds.m_small, bounds.M_big],
        "constants": {k: v for k, v in C.as_dict().items() if k != "provenance"},
        "provenance": {k: v for k, v in C.provenance.items() if isinstance(v, str)},
        "suites": suites,
    })


def report_schema():
    return json.loads(resources.files("ccbvp").joinpath("schemas/verify_report.json")
                      .read_text(encoding="utf-8"))


def cmd_verify(cfg):
    """JSON report of the invariant suites; exit 1 iff an assertable check fails."""
    out = _Out(cfg, "verify")
    name = cfg["task"]["name"]
    rep = run_verify(cfg)
    out.json(f"{name}.json", rep, force=True)
    out.meta(name, cfg)
    return (0 if rep["passed"] else 1), out.written


COMMANDS = {"timemap": cmd_timemap, "diagram": cmd_diagram, "profiles": cmd_profiles,
            "verify": cmd_verify}


def build_parser():
    ap = argparse.ArgumentParser(prog="ccbvp", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {"timemap": "time-map curves", "diagram": "bifurcation diagram by continuation",
             "profiles": "one solution profile", "verify": "a-priori and classification suites"}
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--outdir", help="override output.dir")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.outdir:
        cfg["output"]["dir"] = args.outdir
    try:
        code, files = COMMANDS[args.command](cfg)
    except (CCBVPError, ArithmeticError, ValueError) as exc:
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
