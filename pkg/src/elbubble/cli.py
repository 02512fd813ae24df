"""Command-line front end: config parsing, dispatch and deterministic reports.

Config grammar, one entry per line:

    key = value        # comment

Numbers are float literals or powers written a^b (2^-20).  Lists are comma
separated.  Blank lines and lines starting with # are ignored.  Command-line
flags override file values.
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, fields, replace
import datetime as _dt
import hashlib
import io
import json
import math
import os
from pathlib import Path
import sys
import time

import numpy as np

from . import __version__

COMMANDS = ("expansion", "reduced", "solve", "family", "spectrum", "n6")
BRANCHES = ("lcf", "n10", "n11plus", "n6")

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

# column order of the CSV written by each command
CSV_COLUMNS = {
    "expansion": ("epsilon", "measured", "predicted", "gap", "rel_gap", "I2_over_eps",
                  "resid_over_eps", "quad_error"),
    "reduced": ("t", "H", "dH_dt"),
    "solve": ("theta", "u"),
    "family": ("epsilon", "mu", "delta", "t_zero", "uMax", "uMin", "residSup", "morseIndex",
               "lambda0"),
    "spectrum": ("index", "lambda_u0_unperturbed", "lambda_u0_perturbed", "lambda_peaked"),
    "n6": ("t", "E_over_eps3", "fit"),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int
    branch: str = "lcf"
    M: float = 20.0
    transition: str = "exp-smoothstep"
    schedule: str = "free"
    eps_ladder: tuple = tuple(2.0**-j for j in range(6, 13))
    family_eps: tuple = (2.0**-20, 2.0**-24, 2.0**-28)
    solve_eps: float = 2.0**-24
    n6_eps: float = 2.0**-18
    k_range: tuple = (2, 4)
    r: float = 1.0
    mu_exp: float | None = None
    t: float = 1.0
    a0: float | None = None
    weyl_sq: float = 0.0
    eps_trunc: float = 0.1
    tol_quad: float = 1e-12
    tol_newton: float = 1e-12
    nodes: int = 20000
    spectrum_m: int = 6
    out: str = "out"


_KINDS = {
    "n": "int", "branch": "str", "M": "float", "transition": "str", "schedule": "str",
    "eps_ladder": "floats", "family_eps": "floats", "solve_eps": "float", "n6_eps": "float",
    "k_range": "ints", "r": "float", "mu_exp": "float?", "t": "float", "a0": "float?",
    "weyl_sq": "float", "eps_trunc": "float", "tol_quad": "float", "tol_newton": "float",
    "nodes": "int", "spectrum_m": "int", "out": "str",
}


def parse_number(text: str) -> float:
    s = text.strip()
    if "^" in s:
        base, _, ex = s.partition("^")
        return float(base) ** float(ex)
    return float(s)


def _convert(kind: str, raw: str):
    if kind == "str":
        return raw.strip()
    if kind == "int":
        v = parse_number(raw)
        if v != int(v):
            raise ValueError(f"not an integer: {raw.strip()!r}")
        return int(v)
    if kind in ("float", "float?"):
        if kind == "float?" and raw.strip().lower() in ("", "none"):
            return None
        return parse_number(raw)
    items = [x for x in raw.replace(":", ",").split(",") if x.strip()]
    if kind == "floats":
        return tuple(parse_number(x) for x in items)
    return tuple(_convert("int", x) for x in items)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """key = value lines to a dict of converted values; errors carry the line number."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {body!r}")
        key, _, raw = body.partition("=")
        key = key.strip()
        if key not in _KINDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _convert(_KINDS[key], raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {raw.strip()!r} ({exc})") from None
    return out


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_format_value(getattr(cfg, f.name))}\n" for f in fields(cfg))


def config_hash(cfg: RunConfig) -> str:
    """Hash of every setting except the output directory."""
    text = dump_config(replace(cfg, out=""))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def build_config(values: dict) -> RunConfig:
    """Apply defaults and validate a parsed key/value dict."""
    if "n" not in values:
        raise ConfigError("missing mandatory key: n")
    v = dict(values)
    n = v["n"]
    if n < 6:
        raise ConfigError(f"n = {n} not supported (need n >= 6)")
    if "branch" not in v:
        v["branch"] = "n6" if n == 6 else "lcf"
    br = v["branch"]
    if br not in BRANCHES:
        raise ConfigError(f"unknown branch {br!r}")
    if br == "n6" and n != 6:
        raise ConfigError(f"branch n6 requires n = 6, got n = {n}")
    if n == 6 and br != "n6":
        raise ConfigError(f"n = 6 requires branch n6, got {br}")
    if n == 6 and v.get("a0") is None:
        raise ConfigError("missing key for n = 6: a0")
    if br == "n10" and n != 10:
        raise ConfigError("branch n10 requires n = 10")
    if br == "n11plus" and (n < 11 or v.get("weyl_sq", 0.0) <= 0):
        raise ConfigError("branch n11plus requires n >= 11 and weyl_sq > 0")
    if v.get("schedule", "free") not in ("free", "power"):
        raise ConfigError(f"unknown schedule {v['schedule']!r}")
    if "k_range" in v and (len(v["k_range"]) != 2 or v["k_range"][0] >= v["k_range"][1]):
        raise ConfigError("k_range needs two increasing integers k0, kmax")
    cfg = RunConfig(**v)
    try:
        if cfg.schedule == "power":
            from .model import validate_schedule
            rep = validate_schedule(_schedule(cfg), cfg.k_range[1])
            if not rep.passed:
                raise ConfigError(f"schedule checks failed: {', '.join(rep.failures())}")
        else:
            for name in ("eps_ladder", "family_eps"):
                _schedule(cfg, getattr(cfg, name))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not (cfg.M > 0 and cfg.r > 0 and 0 < cfg.eps_trunc < 1):
        raise ConfigError("M, r must be positive and eps_trunc in (0, 1)")
    return cfg


def load_config(path, overrides: dict | None = None) -> RunConfig:
    p = Path(path)
    values = parse_config_text(p.read_text(), str(p))
    values.update(overrides or {})
    return build_config(values)


# ------------------------------------------------------------- schedule helpers

def _schedule(cfg: RunConfig, eps_values=None):
    from .model import Schedule
    lcf = cfg.branch in ("lcf", "n6")
    if cfg.schedule == "power":
        return Schedule(n=cfg.n, k0=cfg.k_range[0], mode="power", lcf=lcf, mu_exp=cfg.mu_exp)
    eps = cfg.eps_ladder if eps_values is None else eps_values
    return Schedule(n=cfg.n, k0=1, mode="free", lcf=lcf, eps_values=tuple(eps), r_free=cfg.r,
                    mu_exp=cfg.mu_exp)


def _model_config(cfg: RunConfig, eps_values=None):
    from .model import ModelConfig
    return ModelConfig(n=cfg.n, schedule=_schedule(cfg, eps_values), M=cfg.M,
                       lcf=cfg.branch in ("lcf", "n6"), weyl_sq=cfg.weyl_sq, eps_trunc=cfg.eps_trunc)


def _entries(cfg: RunConfig, eps_values):
    """(eps, mu, r) per rung: the explicit list in free mode, k0..kmax in power mode."""
    from .model import schedule_at
    s = _schedule(cfg, eps_values)
    ks = range(cfg.k_range[0], cfg.k_range[1] + 1) if cfg.schedule == "power" \
        else range(1, len(eps_values) + 1)
    return [(e.eps, e.mu, e.r) for e in (schedule_at(s, k) for k in ks)]


def _reduced_spec(cfg: RunConfig):
    from .reduced import ReducedEnergySpec, n6_cubic_constant
    if cfg.n == 6:
        return ReducedEnergySpec(6, branch="n6", a0=cfg.a0, C0=n6_cubic_constant(), M=cfg.M)
    return ReducedEnergySpec(cfg.n, branch=cfg.branch, M=cfg.M, weyl_sq=cfg.weyl_sq,
                             rtol=min(cfg.tol_quad, 1e-10))


def _critical_scale(cfg: RunConfig) -> float:
    from .reduced import find_critical
    return find_critical(_reduced_spec(cfg)).tM


def _check(passed, value=None, threshold=None) -> dict:
    return {"passed": bool(passed), "value": value, "threshold": threshold}


def _gap_decreasing(gaps, inversions: int = 1) -> bool:
    bad = sum(1 for a, b in zip(gaps, gaps[1:]) if b >= a)
    return bad <= inversions


# ------------------------------------------------------------- pipelines

def _run_expansion(cfg: RunConfig):
    from .energy import QuadratureSpec, expansion_check
    if cfg.n == 6:
        raise ConfigError("expansion covers n >= 7; use the n6 command for n = 6")
    q = QuadratureSpec(rel_tol=cfg.tol_quad)
    reps = []
    for eps, mu, r in _entries(cfg, cfg.eps_ladder):
        mc = _model_config(cfg, (eps,))
        reps += expansion_check(mc, cfg.t, None, [eps], r=r, derivatives=False, q=q,
                                mu_exp=math.log(mu) / math.log(eps))
    gaps = [x.gap for x in reps]
    rows = [[x.epsilon, x.measured, x.predicted, x.gap, x.rel_gap, x.I2_over_eps,
             x.resid_over_eps, x.quad_error] for x in reps]
    checks = {
        "gap_decreasing": _check(_gap_decreasing(gaps), gaps, "at most one inversion"),
        "final_rel_gap": _check(reps[-1].rel_gap < 0.02, reps[-1].rel_gap, 0.02),
        "I2_ratio": _check(abs(reps[-1].I2_over_eps) < 0.1 * abs(reps[0].I2_over_eps),
                           abs(reps[-1].I2_over_eps / reps[0].I2_over_eps), 0.1),
        "resid_ratio": _check(reps[-1].resid_over_eps < 0.1 * reps[0].resid_over_eps,
                              reps[-1].resid_over_eps / reps[0].resid_over_eps, 0.1),
    }
    results = {"t": cfg.t, "branch": reps[0].branch,
               "rungs": [dict(zip(CSV_COLUMNS["expansion"], r)) for r in rows]}
    return results, checks, rows


def _run_reduced(cfg: RunConfig):
    from .reduced import Hred_eval, Hred_grad, find_critical
    spec = _reduced_spec(cfg)
    cp = find_critical(spec)
    checks = {
        "anchor_drift": _check(cp.rel_drift < 0.005, cp.rel_drift, 0.005),
        "signature": _check(cp.signature == (1, cfg.n), list(cp.signature), [1, cfg.n]),
    }
    rows = []
    if spec.branch != "n6":
        for t in cp.tM * np.geomspace(0.25, 4.0, 41):
            rows.append([float(t), Hred_eval(spec, float(t)), float(Hred_grad(spec, float(t))[0])])
    cert = dict(cp.certificate)
    cert["signature"] = list(cp.signature)
    return {"certificate": cert}, checks, rows


def _seed_scale(cfg: RunConfig):
    if cfg.n == 6:
        from .reduced import t0_closed_form
        return t0_closed_form(_reduced_spec(cfg))
    return _critical_scale(cfg)


def _run_solve(cfg: RunConfig):
    from .solver import construct_member, family_grid
    tM = _seed_scale(cfg)
    if cfg.schedule == "power":
        eps, mu, r = _entries(cfg, ())[0]
    else:
        eps, mu, r = _entries(cfg, (cfg.solve_eps,))[0]
    scale = eps if cfg.n == 6 else mu
    theta = family_grid([scale * tM], cfg.nodes)
    a0 = cfg.a0 if cfg.a0 is not None else 7.0
    m = construct_member(cfg.n, theta, eps, mu, tM, r, cfg.M, cfg.eps_trunc, cfg.tol_newton, a0=a0)
    res = m.result
    delta = scale * (m.t_zero if m.t_zero is not None else tM)
    predicted = delta ** (-(cfg.n - 2) / 2.0)
    ratio = res.u_max / predicted
    lam = m.lambda0_scaled
    checks = {
        "converged": _check(res.converged, res.resid_sup, cfg.tol_newton),
        "uMin_above_trunc": _check(res.u_min >= cfg.eps_trunc, res.u_min, cfg.eps_trunc),
        "uMax_scaling": _check(0.5 <= ratio <= 2.0, ratio, [0.5, 2.0]),
        "lambda0": _check(lam is not None and abs(lam) < 1e-8, lam, 1e-8),
        "morse_index": _check(res.morse_index >= 1, res.morse_index, 1),
    }
    results = {"epsilon": eps, "mu": mu, "r": r, "tSeed": tM, "tZero": m.t_zero, "delta": delta,
               "uMax": res.u_max, "uMin": res.u_min, "residSup": res.resid_sup,
               "morseIndex": res.morse_index, "lambda0": lam, "iterations": res.iterations,
               "nodes": int(theta.size)}
    rows = [[float(a), float(b)] for a, b in zip(theta, res.u.values)]
    return results, checks, rows


def _run_family(cfg: RunConfig):
    from .solver import family_construct
    tM = _seed_scale(cfg)
    ent = _entries(cfg, cfg.family_eps)
    eps = [e for e, _, _ in ent]
    a0 = cfg.a0 if cfg.a0 is not None else 7.0
    rep = family_construct(cfg.n, eps, tM, mu_list=[m for _, m, _ in ent], M=cfg.M,
                           eps_trunc=cfg.eps_trunc, nodes=cfg.nodes, tol=cfg.tol_newton,
                           r_list=[r for _, _, r in ent], a0=a0)
    rows = []
    for mb in rep.members:
        rs = mb.result
        rows.append([mb.eps, mb.mu, mb.delta, mb.t_zero, rs.u_max, rs.u_min, rs.resid_sup,
                     rs.morse_index, mb.lambda0_scaled])
    checks = {
        "all_converged": _check(all(mb.converged for mb in rep.members),
                                [mb.converged for mb in rep.members], True),
        "pairwise_distinct": _check(rep.all_distinct, rep.distances.tolist(), 1e-2),
        "sup_increasing": _check(rep.sup_increasing, list(rep.sup_ratios), 2.0),
        "uMin_above_trunc": _check(rep.min_above_trunc, [mb.result.u_min for mb in rep.members],
                                   cfg.eps_trunc),
    }
    results = {"tSeed": tM, "members": [dict(zip(CSV_COLUMNS["family"], r)) for r in rows],
               "distances": rep.distances.tolist(), "supRatios": list(rep.sup_ratios)}
    return results, checks, rows


def _run_spectrum(cfg: RunConfig):
    from .model import base_data, dimension_constants
    from .solver import assemble_operator, construct_member, family_grid, linearization_spectrum, \
        problem_coefficients
    n = cfg.n
    a0 = cfg.a0 if cfg.a0 is not None else 7.0
    tM = _seed_scale(cfg)
    if cfg.schedule == "power":
        eps, mu, r = _entries(cfg, ())[0]
    else:
        eps, mu, r = _entries(cfg, (cfg.solve_eps,))[0]
    scale = eps if n == 6 else mu
    theta = family_grid([scale * tM], cfg.nodes)
    ones = np.ones(theta.size)
    flat = assemble_operator(problem_coefficients(n, theta, 0.0, 1.0, cfg.M, cfg.eps_trunc, a0))
    lam0 = linearization_spectrum(flat, ones, cfg.spectrum_m)
    if n == 6:
        # h = 1 + a0, f = 1, pi^2 = a0, u0 = 1: potential 1 + a0 - 2 + 5 a0
        closed = 6.0 * a0 - 1.0
    else:
        ts = dimension_constants(n).two_star
        closed = (ts + 2.0) * base_data(n, cfg.eps_trunc).pi0_sq - (ts - 2.0)
    pert = assemble_operator(problem_coefficients(n, theta, eps, mu, cfg.M, cfg.eps_trunc, a0))
    lam1 = linearization_spectrum(pert, ones, cfg.spectrum_m)
    m = construct_member(n, theta, eps, mu, tM, r, cfg.M, cfg.eps_trunc, cfg.tol_newton, a0=a0)
    lam2 = linearization_spectrum(pert, m.result.u, cfg.spectrum_m) if m.converged \
        else np.full(cfg.spectrum_m, np.nan)
    rel = abs(lam0[0] - closed) / abs(closed)
    checks = {
        "unperturbed_closed_form": _check(rel < 1e-6, rel, 1e-6),
        "perturbed_stable": _check(lam1[0] > 0, float(lam1[0]), 0.0),
        "peaked_morse_index": _check(m.converged and m.result.morse_index >= 1,
                                     m.result.morse_index, 1),
    }
    rows = [[i, float(a), float(b), float(c)] for i, (a, b, c) in enumerate(zip(lam0, lam1, lam2))]
    results = {"closedForm": closed, "epsilon": eps, "mu": mu, "lambdaU0": lam0.tolist(),
               "lambdaPerturbed": lam1.tolist(), "lambdaPeaked": lam2.tolist(),
               "morseIndexPeaked": m.result.morse_index}
    return results, checks, rows


def _run_n6(cfg: RunConfig):
    from .energy import QuadratureSpec, reduced_energy_n6
    from .profiles import free_bubble
    from .reduced import reduced_n6_fit, t0_closed_form
    if cfg.n != 6:
        raise ConfigError("the n6 command needs n = 6")
    eps = cfg.n6_eps
    mu = eps ** (cfg.mu_exp if cfg.mu_exp is not None else 0.5)
    t_pred = t0_closed_form(_reduced_spec(cfg))
    tg = t_pred * np.linspace(0.7, 1.3, 13)
    q = QuadratureSpec(rel_tol=cfg.tol_quad)
    E = np.array([reduced_energy_n6(free_bubble(6, eps, float(t), mu=mu, r=cfg.r, M=cfg.M),
                                    cfg.a0, q).excess / eps**3 for t in tg])
    fit = reduced_n6_fit(tg, E, cfg.a0)
    model = -fit.B * tg**2 + fit.C0 * cfg.a0 * tg**3
    checks = {
        "C0_positive": _check(fit.C0 > 0, fit.C0, 0.0),
        "fit_residual": _check(fit.residual < 0.05, fit.residual, 0.05),
        "t0_vs_minimizer": _check(fit.min_rel_err < 0.02, fit.min_rel_err, 0.02),
    }
    results = {"epsilon": eps, "mu": mu, "a0": cfg.a0, "C0": fit.C0, "C0Rescaled": fit.C0_rescaled,
               "B": fit.B, "t0": fit.t0, "tGridMin": fit.t_grid_min, "residual": fit.residual,
               "BFree": fit.B_free, "C0Free": fit.C0_free}
    rows = [[float(a), float(b), float(c)] for a, b, c in zip(tg, E, model)]
    return results, checks, rows


_PIPELINES = {"expansion": _run_expansion, "reduced": _run_reduced, "solve": _run_solve,
              "family": _run_family, "spectrum": _run_spectrum, "n6": _run_n6}


# ------------------------------------------------------------- reports

@dataclass(frozen=True)
class ReportEnvelope:
    command: str
    config_hash: str
    tool_version: str
    timestamp: str
    payload: dict
    rows: tuple = ()

    @property
    def passed(self) -> bool:
        return bool(self.payload.get("passed"))


def run_command(cfg: RunConfig, name: str) -> ReportEnvelope:
    if name not in _PIPELINES:
        raise ConfigError(f"unknown command {name!r}; choose from {', '.join(COMMANDS)}")
    results, checks, rows = _PIPELINES[name](cfg)
    payload = {
        "command": name,
        "config": {f.name: getattr(cfg, f.name) for f in fields(cfg) if f.name != "out"},
        "results": results,
        "checks": checks,
        "passed": all(c["passed"] for c in checks.values()),
        "csvColumns": list(CSV_COLUMNS[name]),
    }
    return ReportEnvelope(name, config_hash(cfg), __version__, _timestamp(), payload,
                          tuple(tuple(r) for r in rows))


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch \
        else _dt.datetime.now(_dt.timezone.utc)
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


def _num(x) -> str:
    x = float(x)
    return format(x, ".17g") if math.isfinite(x) else "null"


def to_json(obj, indent: int = 0) -> str:
    """JSON text with sorted keys and every float at 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{to_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def payload_bytes(env: ReportEnvelope) -> bytes:
    return to_json(env.payload).encode()


def emit_report(env: ReportEnvelope, directory) -> tuple[Path, Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    stem = f"{env.command}.{env.config_hash}"
    doc = {"command": env.command, "configHash": env.config_hash, "toolVersion": env.tool_version,
           "timestamp": env.timestamp, "payload": env.payload}
    jpath = d / f"{stem}.json"
    jpath.write_text(to_json(doc) + "\n")
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS[env.command]) + "\n")
    for row in env.rows:
        buf.write(",".join("" if v is None else (str(int(v)) if isinstance(v, (int, np.integer))
                                                 and not isinstance(v, bool) else _num(v))
                           for v in row) + "\n")
    cpath = d / f"{stem}.csv"
    cpath.write_text(buf.getvalue())
    return jpath, cpath


def schema_path() -> Path:
    return Path(__file__).with_name("schemas") / "envelope.schema.json"


# ------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="elbubble", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key = value config file")
    ap.add_argument("--out", help="output directory (default: out)")
    ap.add_argument("--n", help="sphere dimension")
    ap.add_argument("--M", help="bump plateau half-width")
    ap.add_argument("--eps-ladder", help="comma separated eps values, e.g. 2^-6,2^-7")
    ap.add_argument("--k-range", help="k0,kmax for the power-law schedule")
    ap.add_argument("--tol-quad", help="relative quadrature tolerance")
    ap.add_argument("--tol-newton", help="Newton tolerance on the relative residual")
    return ap


def _overrides(args) -> dict:
    pairs = {"n": args.n, "M": args.M, "eps_ladder": args.eps_ladder, "k_range": args.k_range,
             "tol_quad": args.tol_quad, "tol_newton": args.tol_newton, "out": args.out}
    out = {}
    for key, raw in pairs.items():
        if raw is None:
            continue
        try:
            out[key] = _convert(_KINDS[key], raw)
        except ValueError as exc:
            raise ConfigError(f"--{key.replace('_', '-')}: {exc}") from None
    return out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        over = _overrides(args)
        cfg = load_config(args.config, over) if args.config else build_config(over)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    t = time.perf_counter()
    try:
        env = run_command(cfg, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    jpath, cpath = emit_report(env, cfg.out)
    for name, c in env.payload["checks"].items():
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {name}")
    print(f"wrote {jpath} and {cpath} ({time.perf_counter() - t:.1f} s)")
    return EXIT_OK if env.passed else EXIT_CHECKS


if __name__ == "__main__":
    sys.exit(main())
