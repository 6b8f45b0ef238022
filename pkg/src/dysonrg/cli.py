"""Command-line front end: ``dysonrg {certify,iterate,lro,selfcheck}``.

Exit codes: 0 pass, 1 check failed, 2 invalid configuration, 3 computation
error.  Reports are JSON with sorted keys and no timestamps, so identical
configurations give byte-identical output.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3

DEFAULTS = {
    "kernel": "majority",
    "gamma": 40.0,
    "eps": 0.0,
    "alpha": 2.0,
    "mu": 1.0,
    "nu": 0.0,
    "mode": "float",
    "tol": 1e-12,
    "max_iter": 200,
    "window_sigma": 12,
    "window_s": -8,
    "drop_tol": 1e-12,
    "threshold": False,
}
LRO_DEFAULTS = {"gamma": 0.5, "eps": 0.2, "alpha": 1.5, "m": 3, "m_max": 4096, "seed": 0, "trials": 200}
LRO_ENUM_M = 10

_TYPES = {
    "kernel": str, "mode": str, "check": str, "out": str,
    "gamma": float, "eps": float, "alpha": float, "mu": float, "nu": float, "tol": float, "drop_tol": float,
    "max_iter": int, "window_sigma": int, "window_s": int, "m": int, "m_max": int, "seed": int, "trials": int,
    "threshold": lambda v: str(v).strip().lower() in ("1", "true", "yes", "on"),
    "regularizer": lambda v: str(v).strip().lower() in ("1", "true", "yes", "on"),
}


class ConfigError(ValueError):
    pass


# -- configuration --------------------------------------------------------------

def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, val = (t.strip() for t in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in _TYPES:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        try:
            out[key] = _TYPES[key](val)
        except ValueError:
            raise ConfigError(f"{path}:{n}: bad value for {key}: {val!r}") from None
    return out


def resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    for key, val in vars(args).items():
        if key in ("config", "command", "func") or val is None:
            continue
        cfg[key] = val
    return cfg


def validate(cfg: dict) -> None:
    if cfg.get("kernel") not in ("decimation", "majority"):
        raise ConfigError(f"unknown kernel {cfg.get('kernel')!r}")
    if cfg.get("mode") not in ("float", "interval"):
        raise ConfigError(f"mode must be float or interval, got {cfg.get('mode')!r}")
    checks = [
        ("gamma", cfg["gamma"] > 0, "gamma must be > 0"),
        ("eps", cfg["eps"] >= 0, "eps must be >= 0"),
        ("alpha", cfg["alpha"] > 1, "alpha must be > 1"),
        ("mu", cfg.get("mu", 0) >= 0, "mu must be >= 0"),
        ("nu", cfg.get("nu", 0) >= 0, "nu must be >= 0"),
        ("tol", cfg.get("tol", 1) > 0, "tol must be > 0"),
        ("max_iter", cfg.get("max_iter", 1) >= 1, "max-iter must be >= 1"),
    ]
    for _, ok, msg in checks:
        if not ok:
            raise ConfigError(msg)
    for key in ("gamma", "eps", "alpha", "mu", "nu"):
        if key in cfg and not math.isfinite(cfg[key]):
            raise ConfigError(f"{key} must be finite")


# -- output helpers -------------------------------------------------------------

def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dump_json(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True, default=_json_default) + "\n"


def _outdir(cfg: dict):
    out = cfg.get("out")
    if not out:
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(cfg: dict, name: str, text: str) -> None:
    path = _outdir(cfg)
    if path is not None:
        (path / name).write_text(text)


def _write_csv(cfg: dict, name: str, header: list, rows: list) -> None:
    path = _outdir(cfg)
    if path is None:
        return
    with open(path / name, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([repr(v) if isinstance(v, float) else v for v in row])


# -- commands -------------------------------------------------------------------

def cmd_certify(cfg: dict) -> int:
    from .algebra import NormWeights
    from .certify import epsilon_threshold, seed_for, theorem_certificate
    from .rgmap import HamiltonianSpec

    validate(cfg)
    w = NormWeights(cfg["mu"], cfg["nu"])
    seed = seed_for(cfg["kernel"], cfg["gamma"])
    spec = HamiltonianSpec(cfg["gamma"], cfg["eps"], cfg["alpha"])
    cert = theorem_certificate(seed, spec, w, cfg["mode"])
    report = {"command": "certify", "certificate": cert.to_dict()}
    if cfg.get("threshold"):
        th = epsilon_threshold(cfg["kernel"], cfg["alpha"], cfg["gamma"], w, cfg["mode"])
        report["eps_threshold"] = {"eps": th.eps, "bracket": list(th.bracket), "note": th.note}
    text = dump_json(report)
    _write(cfg, "certificate.json", text)
    sys.stdout.write(text)
    return EXIT_PASS if cert.verdict else EXIT_FAIL


def cmd_iterate(cfg: dict) -> int:
    from .algebra import NormWeights, dumps
    from .certify import seed_for, theorem_certificate
    from .fixed_point import DivergenceError, TruncationPolicy, iterate
    from .rgmap import HamiltonianSpec

    validate(cfg)
    try:
        policy = TruncationPolicy(cfg["window_sigma"], cfg["window_s"], drop_tol=cfg["drop_tol"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    w = NormWeights(cfg["mu"], cfg["nu"])
    seed = seed_for(cfg["kernel"], cfg["gamma"])
    spec = HamiltonianSpec(cfg["gamma"], cfg["eps"], cfg["alpha"])
    cert = theorem_certificate(seed, spec, w)
    warnings = []
    if not cert.verdict:
        warnings.append(f"parameters not certified: {cert.reason}")
    diverged = False
    try:
        res = iterate(seed, spec, policy=policy, w=w, tol=cfg["tol"], max_iter=cfg["max_iter"])
    except DivergenceError as exc:
        res, diverged = exc.result, True
        warnings.append(str(exc))
    if not res.converged and not diverged:
        warnings.append(f"no convergence in {res.iterations} iterations (residual {res.residual:.3e})")
    rows = [(i + 1, r, res.rate_history[i - 1] if i > 0 else math.nan)
            for i, r in enumerate(res.residual_history)]
    _write_csv(cfg, "convergence.csv", ["iteration", "residual", "rate"], rows)
    _write(cfg, "hprime.txt", dumps(res.renormalized.as_poly(), res.free_energy))
    _write(cfg, "cstar.txt", dumps(res.c_star))
    ok = res.converged and cert.verdict
    report = {
        "command": "iterate",
        "kernel": cfg["kernel"], "gamma": cfg["gamma"], "eps": cfg["eps"], "alpha": cfg["alpha"],
        "mu": cfg["mu"], "nu": cfg["nu"],
        "policy": {"window_sigma": policy.window_sigma, "window_s": policy.window_s,
                   "max_x_size": policy.max_x_size, "max_y_size": policy.max_y_size,
                   "drop_tol": policy.drop_tol},
        "converged": res.converged, "iterations": res.iterations, "residual": res.residual,
        "residual_history": res.residual_history, "rate_history": res.rate_history,
        "observed_rate": res.observed_rate(), "certificate_rate_bound": cert.contraction_bound,
        "certified": cert.verdict,
        "hprime": {",".join(map(str, k)): v for k, v in res.classes.items()},
        "free_energy_per_block": res.free_energy, "single_flip_norm": res.single_flip_norm,
        "dropped_norm": res.dropped_norm, "truncation_loss": res.truncation_loss,
        "empty_y_mass": res.empty_y_mass, "h_tail": res.h_tail, "terms": len(res.c_star),
        "warnings": warnings, "verdict": "pass" if ok else "fail",
    }
    text = dump_json(report)
    _write(cfg, "iterate.json", text)
    sys.stdout.write(text)
    for msg in warnings:
        print(f"warning: {msg}", file=sys.stderr)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_lro(cfg: dict) -> int:
    from . import lro

    for key in ("gamma", "eps", "alpha"):
        if not math.isfinite(cfg[key]):
            raise ConfigError(f"{key} must be finite")
    if not cfg["alpha"] > 1:
        raise ConfigError("alpha must be > 1")
    if not cfg["gamma"] > cfg["eps"] > 0:
        raise ConfigError("lro needs gamma > eps > 0")
    if cfg["m"] < 2:
        raise ConfigError("m must be >= 2")
    check, reg = cfg.get("check"), cfg.get("regularizer")
    if not check and not reg and not cfg.get("threshold"):
        raise ConfigError("lro needs --check, --regularizer or --threshold")
    if check in ("ir", "gd") and cfg["m"] > LRO_ENUM_M:
        raise ConfigError(f"exact enumeration needs m <= {LRO_ENUM_M}")
    model = lro.TorusModel(cfg["m"], cfg["gamma"], cfg["eps"], cfg["alpha"])
    report = {"command": "lro", "m": cfg["m"], "gamma": cfg["gamma"], "eps": cfg["eps"], "alpha": cfg["alpha"]}
    ok = True
    if check == "ir":
        rows = lro.infrared_check(model)
        _write_csv(cfg, "infrared.csv", ["p", "R", "E", "inv_2E", "g_m", "ok"], rows)
        ok &= all(r[-1] for r in rows)
        report["infrared"] = {"all_pass": all(r[-1] for r in rows),
                              "max_ratio": max(r[4] / r[3] for r in rows)}
    elif check == "gd":
        rng = np.random.default_rng(cfg["seed"])
        z0 = lro.log_Z(model)
        rows = []
        for t in range(cfg["trials"]):
            h = rng.normal(size=model.n_sites)
            d = lro.log_Z(model, h) - z0
            rows.append((t, d, bool(d <= math.log1p(1e-12))))
        _write_csv(cfg, "gaussian_domination.csv", ["trial", "log_Zh_minus_log_Z0", "ok"], rows)
        ok &= all(r[-1] for r in rows)
        report["gaussian_domination"] = {"trials": len(rows), "all_pass": all(r[-1] for r in rows),
                                         "max_log_ratio": max(r[1] for r in rows)}
    elif check == "intrep":
        rows = lro.integral_rep_table(cfg["m"], cfg["alpha"])
        _write_csv(cfg, "intrep.csv", ["j", "k", "direct", "quadrature", "abs_diff"], rows)
        dev = max(r[-1] for r in rows)
        ok &= dev < 1e-8
        report["integral_representation"] = {"max_abs_deviation": dev}
    elif check:
        raise ConfigError(f"unknown check {check!r}")
    if reg:
        ms, m = [], 16
        while m <= cfg["m_max"]:
            ms.append(m)
            m *= 2
        if not ms:
            raise ConfigError("m-max must be >= 16")
        rows = lro.regularizer_table(cfg["alpha"], ms)
        bounds = [lro.regularizer_comparison(r[0], cfg["alpha"]) for r in rows]
        table = [r + (b,) for r, b in zip(rows, bounds)]
        _write_csv(cfg, "regularizer.csv", ["m", "sum", "cauchy_diff", "comparison_bound"], table)
        bounded = all(r[1] <= b for r, b in zip(rows, bounds))
        ok &= bounded
        report["regularizer"] = {"bounded_by_comparison": bounded, "last_value": rows[-1][1],
                                 "last_cauchy_difference": rows[-1][2],
                                 "constant": lro.regularizer_constant(cfg["alpha"])}
    if cfg.get("threshold"):
        g = lro.lro_gamma_threshold(cfg["eps"], cfg["alpha"], cfg["m"])
        report["gamma_threshold"] = {"gamma": g, "note": "sufficient bound: infrared_sum < 1 on this torus"}
    report["verdict"] = "pass" if ok else "fail"
    text = dump_json(report)
    _write(cfg, "lro.json", text)
    sys.stdout.write(text)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_selfcheck(cfg: dict) -> int:
    from .selfcheck import run_all

    results = run_all(interval=cfg.get("mode") == "interval")
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    report = {"command": "selfcheck", "results": [{"name": n, "pass": ok, "detail": d} for n, ok, d in results]}
    _write(cfg, "selfcheck.json", dump_json(report))
    return EXIT_PASS if all(ok for _, ok, _ in results) else EXIT_FAIL


# -- argument parsing -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--out", help="directory for reports and tables")
    common.add_argument("--gamma", type=float)
    common.add_argument("--eps", type=float)
    common.add_argument("--alpha", type=float)

    rg = argparse.ArgumentParser(add_help=False)
    rg.add_argument("--kernel", choices=("decimation", "majority"))
    rg.add_argument("--mu", type=float)
    rg.add_argument("--nu", type=float)
    rg.add_argument("--mode", choices=("float", "interval"))

    parser = argparse.ArgumentParser(prog="dysonrg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", parents=[common, rg], help="check the contraction hypothesis")
    p.add_argument("--threshold", action="store_true", default=None, help="also bisect for the largest eps")
    p.set_defaults(func=cmd_certify, base=DEFAULTS)

    p = sub.add_parser("iterate", parents=[common, rg], help="iterate to the fixed point")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--window-sigma", dest="window_sigma", type=int)
    p.add_argument("--window-s", dest="window_s", type=int)
    p.add_argument("--drop-tol", dest="drop_tol", type=float)
    p.set_defaults(func=cmd_iterate, base=DEFAULTS)

    p = sub.add_parser("lro", parents=[common], help="torus checks")
    p.add_argument("--check", choices=("ir", "gd", "intrep"))
    p.add_argument("--m", type=int)
    p.add_argument("--regularizer", action="store_true", default=None)
    p.add_argument("--m-max", dest="m_max", type=int)
    p.add_argument("--threshold", action="store_true", default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_lro, base=LRO_DEFAULTS)

    p = sub.add_parser("selfcheck", help="golden-number regression suite")
    p.add_argument("--mode", choices=("float", "interval"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_selfcheck, base={"mode": "float"})
    return parser


def main(argv=None) -> int:
    from .algebra import SupportTooLarge
    from .lro import EnumerationTooLarge, QuadratureError
    from .rgmap import BlockSumError, KernelError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    base = args.base
    del args.base
    try:
        cfg = resolve(args, base)
        return args.func(cfg)
    except (ConfigError, KernelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SupportTooLarge, EnumerationTooLarge, BlockSumError, QuadratureError, ArithmeticError,
            RuntimeError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
