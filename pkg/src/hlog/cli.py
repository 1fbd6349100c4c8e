"""Command-line harness: ``hlog <subcommand> [--config cfg.json] [flags]``.

Every run writes ``<out>/report.json`` (resolved config, results, checks) and
``<out>/table.csv``.  Exit codes: 0 success, 2 config error, 3 precondition
failure, 4 assertion failure (only with ``--assert``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import elliptic as E
from . import moduli as M
from . import singular as S
from .errors import (
    CoverageError,
    DomainError,
    HlogError,
    InvalidKernelError,
    ParameterError,
    PreconditionError,
    UnsupportedDimensionError,
)
from .fields import corpus
from .quadrature import QuadConfig

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_ASSERT = 0, 2, 3, 4

COMMANDS = (
    "seminorm",
    "modulus",
    "convolve",
    "kernel-validate",
    "klg",
    "roundtrip",
    "interior",
    "optimality",
    "dezer",
    "extend",
)

DEFAULTS = {
    "seminorm": {"field": "abs-x", "alpha": 2.0, "beta": 1.0, "delta0": M.DEFAULT_DELTA0, "lambda": 1.0,
                 "p": 2.0, "integral_lambda": 1.0, "budget": 256},
    "modulus": {"field": "hlog-alpha-2", "kmax": 52, "budget": 256, "window": None},
    "convolve": {"kernel": "laplace-12-3d", "field": "smooth-bump-3d", "R": None,
                 "points": [[0.0, 0.0, 0.0], [0.1, 0.05, 0.0]]},
    "kernel-validate": {"kernels": ["d1d2-3d", "one-minus-3d1sq-3d", "laplace-12-3d"], "tol": 1e-8},
    "klg": {"alpha": 2.0, "kernels": ["laplace-12-3d", "laplace-11-3d"], "fields": ["bump", "hlog-bump", "forcing"],
            "R": 0.25, "levels": [0, 1], "budget": 128, "alphas": None, "stability_tol": 0.1},
    "roundtrip": {"operator": "laplace-3", "field": "smooth-bump-3d", "tol": None},
    "interior": {"operator": "laplace-3", "field": "counterexample-1-3d", "alpha": 2.0, "R": [0.05, 0.1, 0.2],
                 "budget": 128},
    "optimality": {"alpha": 1.0, "n": 2, "window": [1e-8, 1e-3], "band": 0.15, "deltas": [1e-2, 1e-4, 1e-6, 1e-8]},
    "dezer": {"alpha": 2.0, "deltas": [1e-4, 1e-6, 1e-8]},
    "extend": {"field": "wave", "rho": 0.5, "alpha": 2.0, "delta0": 0.05, "points": [[1.5, 0.0], [0.3, 0.2]],
               "budget": 256},
}

COMMON = {"seed": 0, "out": "out", "assert": False, "refine": 0, "quad": None}


class ConfigError(HlogError):
    pass


# ---------------------------------------------------------------------------
# config handling


def _parser():
    p = argparse.ArgumentParser(prog="hlog", description="H-log seminorms, singular integrals and potentials")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path)
        s.add_argument("--seed", type=int)
        s.add_argument("--out", type=Path)
        s.add_argument("--assert", dest="assert_", action="store_true")
        s.add_argument("--refine", type=int)
        s.add_argument("--dry-run", action="store_true")
        s.add_argument("--field")
        s.add_argument("--kernel")
        s.add_argument("--operator")
        s.add_argument("--alpha", type=float)
        s.add_argument("--beta", type=float)
        s.add_argument("--delta0", type=float)
        s.add_argument("--R", type=float, dest="R")
        s.add_argument("--p", type=float, dest="p")
        s.add_argument("--lambda", type=float, dest="lam")
        s.add_argument("--budget", type=int)
        s.add_argument("--band", type=float)
        s.add_argument("--deltas", type=float, nargs="+")
    return p


def resolve_config(command, args) -> dict:
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[command])
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a JSON object")
        kind = loaded.pop("kind", command)
        if kind != command:
            raise ConfigError(f"config is for {kind!r}, not {command!r}")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    flags = {
        "seed": args.seed,
        "out": None if args.out is None else str(args.out),
        "refine": args.refine,
        "field": args.field,
        "operator": args.operator,
        "alpha": args.alpha,
        "beta": args.beta,
        "delta0": args.delta0,
        "p": args.p,
        "lambda": args.lam,
        "budget": args.budget,
        "band": args.band,
        "deltas": args.deltas,
    }
    for k, v in flags.items():
        if v is not None and (k in cfg or k in COMMON):
            cfg[k] = v
    if args.kernel is not None:
        key = "kernel" if "kernel" in cfg else "kernels"
        if key in cfg:
            cfg[key] = args.kernel if key == "kernel" else [args.kernel]
    if args.R is not None and "R" in cfg:
        cfg["R"] = [args.R] if isinstance(cfg["R"], list) else args.R
    if args.assert_:
        cfg["assert"] = True
    cfg["kind"] = command
    return cfg


def _quad(cfg, n=3):
    try:
        base = QuadConfig.from_dict(cfg["quad"]) if cfg.get("quad") else QuadConfig()
    except TypeError as exc:
        raise ConfigError(f"bad quadrature config: {exc}") from None
    return base.refined(int(cfg["refine"]), n)


def validate_config(cfg):
    """Check names and numeric ranges before any computation."""
    kind = cfg["kind"]
    if int(cfg["refine"]) < 0:
        raise ParameterError("refine must be >= 0")
    _quad(cfg)
    for key in ("field",):
        if key in cfg and kind not in ("klg",):
            corpus(cfg[key])
    if "kernel" in cfg:
        S.get_kernel(cfg["kernel"])
    for name in cfg.get("kernels") or []:
        S.get_kernel(name)
    if "operator" in cfg:
        _operator(cfg["operator"])
    if kind == "klg":
        bad = set(cfg["fields"]) - {"bump", "hlog-bump", "forcing"}
        if bad:
            raise KeyError(f"unknown klg fields {sorted(bad)}")
        for a in [cfg["alpha"]] + list(cfg.get("alphas") or []):
            if not a > 1:
                raise ParameterError("klg needs alpha > 1")
    if kind in ("seminorm", "extend", "interior", "optimality") and not cfg["alpha"] > 0:
        raise ParameterError("alpha must be positive")
    if kind == "seminorm":
        if not cfg["p"] >= 1:
            raise ParameterError("p must be >= 1")
        if not 0 < cfg["beta"] < cfg["alpha"]:
            raise ParameterError("need 0 < beta < alpha")
        if not 0 < cfg["lambda"] <= 1:
            raise ParameterError("Hölder exponent must lie in (0, 1]")
    if "delta0" in cfg and not 0 < cfg["delta0"] < 1:
        raise ParameterError("delta0 must lie in (0, 1)")
    if kind == "dezer":
        if not cfg["alpha"] > 1:
            raise ParameterError("dezer needs alpha > 1")
        if not cfg["deltas"] or any(not 0 < d < 1 / 9 for d in cfg["deltas"]):
            raise ParameterError("deltas must lie in (0, 1/9)")
    if kind == "interior":
        if not cfg["alpha"] > 1:
            raise ParameterError("interior estimate needs alpha > 1")
        for R in np.atleast_1d(cfg["R"]):
            if not 0 < R < 0.5:
                raise ParameterError("R must lie in (0, 1/2)")
    if "budget" in cfg and int(cfg["budget"]) < 1:
        raise ParameterError("budget must be >= 1")


def _operator(spec):
    if isinstance(spec, str):
        if spec.startswith("laplace-"):
            return E.laplacian(int(spec.split("-")[1]))
        if spec.startswith("diag-"):
            return E.diagonal_operator([float(v) for v in spec[5:].split(",")])
        raise KeyError(f"unknown operator {spec!r}")
    return E.EllipticOperator(np.asarray(spec, float))


# ---------------------------------------------------------------------------
# runners: each returns (results, table_rows, table_header, checks)


def run_seminorm(cfg):
    f = corpus(cfg["field"])
    rep = M.seminorm_report(f, cfg["alpha"], cfg["delta0"], cfg["lambda"], cfg["p"], cfg["integral_lambda"],
                            cfg["budget"], cfg["seed"], quad=_quad(cfg, f.dimension))
    mod = M.estimate_modulus(f, M.dyadic_ladder(include=(M.DEFAULT_DELTA0, cfg["delta0"])), cfg["budget"], cfg["seed"])
    lhs, rhs = M.interpolation_bound(mod, cfg["alpha"], cfg["beta"])
    checks = {
        "sandwich": bool(rep.hlog_restricted <= rep.hlog <= rep.hlog_upper),
        "interpolation": bool(lhs <= rhs * (1 + 1e-12)),
    }
    results = rep.to_dict()
    results["interpolation"] = {"beta": cfg["beta"], "lhs": lhs, "rhs": rhs}
    return results, rep.rows(), ["quantity", "value"], checks


def run_modulus(cfg):
    f = corpus(cfg["field"])
    mod = M.estimate_modulus(f, M.dyadic_ladder(cfg["kmax"]), cfg["budget"], cfg["seed"])
    results = {"field": f.label, "modulus": mod.to_dict()}
    if cfg.get("window"):
        results["fit"] = M.fit_log_exponent(mod, tuple(cfg["window"])).to_dict()
    rows = list(zip(mod.radii.tolist(), mod.values.tolist()))
    return results, rows, ["r", "omega"], {"monotone": bool(np.all(np.diff(mod.values) >= 0))}


def run_convolve(cfg):
    k = S.get_kernel(cfg["kernel"])
    f = corpus(cfg["field"])
    pts = np.atleast_2d(np.asarray(cfg["points"], float))
    vals = S.pv_convolve_many([k], f, pts, _quad(cfg, k.dimension), R=cfg["R"])[0]
    rows = [list(p) + [v] for p, v in zip(pts.tolist(), vals.tolist())]
    header = [f"x{i + 1}" for i in range(pts.shape[1])] + ["value"]
    return {"kernel": k.name, "field": f.label, "values": vals.tolist()}, rows, header, {
        "finite": bool(np.all(np.isfinite(vals)))
    }


def run_kernel_validate(cfg):
    rows, res, ok = [], [], True
    for name in cfg["kernels"]:
        k = S.get_kernel(name)
        try:
            v = S.validate_kernel(k, cfg["tol"])
            res.append(dict(v.to_dict(), valid=True))
            rows.append([name, v.sphere_mean, max(abs(x) for x in v.annulus_integrals), v.norms["triple"], True])
            ok &= v.annuli_ok
        except InvalidKernelError as exc:
            res.append({"name": name, "valid": False, "sphere_mean": exc.mean})
            rows.append([name, exc.mean, "", "", False])
            ok = False
    return {"kernels": res}, rows, ["kernel", "sphere_mean", "max_annulus", "triple_norm", "valid"], {
        "all_valid": ok
    }


def run_klg(cfg):
    ks = [S.get_kernel(n) for n in cfg["kernels"]]
    quad = _quad(cfg, ks[0].dimension)
    allf = E.klg_fields(cfg["alpha"], cfg["R"], ks[0].dimension)
    fields = {n: allf[n] for n in cfg["fields"]}
    rep = E.klg_experiment(cfg["alpha"], ks, fields, cfg["R"], quad, tuple(cfg["levels"]), cfg["budget"], cfg["seed"])
    rows = [[r["alpha"], r["field"], r["kernel"], r["level"], r["phi_norm"], r["psi_norm"], r["ratio"]]
            for r in rep["rows"]]
    checks = {"stable": bool(all(s["rel_change"] <= cfg["stability_tol"] for s in rep["stability"]))}
    if cfg.get("alphas"):
        sweep = E.klg_alpha_sweep(cfg["alphas"], ks[0], "forcing", cfg["R"], quad, 0, cfg["budget"], cfg["seed"])
        rep["sweep"] = sweep
        rows += [[r["alpha"], "forcing", ks[0].name, "sweep", r["phi_norm"], r["psi_norm"], r["ratio"]]
                 for r in sweep["rows"]]
        checks["sweep_monotone"] = sweep["monotone_decreasing"]
    return rep, rows, ["alpha", "field", "kernel", "level", "phi_norm", "psi_norm", "ratio"], checks


def run_roundtrip(cfg):
    op = _operator(cfg["operator"])
    fs = E.fundamental_solution(op)
    f = corpus(cfg["field"])
    quad = _quad(cfg, op.n)
    rep = E.potential_roundtrip(fs, f, quad=quad)
    tol = cfg["tol"] if cfg["tol"] is not None else 10.0 ** -(2 + int(cfg["refine"]))
    rep["fundamental_solution"] = fs.to_record()
    rows = [[cfg["refine"], rep["max_abs_error"], rep["max_rel_error"], tol]]
    return rep, rows, ["refine", "max_abs_error", "max_rel_error", "tol"], {
        "within_tol": bool(rep["max_rel_error"] <= tol)
    }


def run_interior(cfg):
    op = _operator(cfg["operator"])
    u = corpus(cfg["field"])
    reps, rows = [], []
    for R in np.atleast_1d(cfg["R"]).tolist():
        r = E.interior_estimate_experiment(op, u, cfg["alpha"], R, cfg["budget"], cfg["seed"])
        reps.append(r)
        rows.append([R, r["lhs"], r["rhs"], r["ratio"], r["c_theta"], r["zeta_direct_norm"], r["holds"]])
    return {"rows": reps}, rows, ["R", "lhs", "rhs", "ratio", "c_theta", "zeta_direct", "holds"], {
        "inequality": bool(all(r["holds"] for r in reps))
    }


def run_optimality(cfg):
    rep = E.optimality_experiment(cfg["alpha"], cfg["n"], tuple(cfg["window"]), band=cfg["band"],
                                  deltas=tuple(cfg["deltas"]))
    rows = [[k, v["alpha_hat"], rep["expected"][k], v["r2"], rep["in_band"][k]] for k, v in rep["fits"].items()]
    checks = dict({f"band_{k}": v for k, v in rep["in_band"].items()}, mixed_diverges=rep["mixed_diverges"])
    return rep, rows, ["quantity", "alpha_hat", "expected", "r2", "in_band"], checks


def run_dezer(cfg):
    rep = S.dezer_check(cfg["alpha"], cfg["deltas"])
    rows = [[r["delta"], r["lhs"], r["rhs"], r["ratio"], r["holds"]] for r in rep.rows]
    return rep.to_dict(), rows, ["delta", "lhs", "rhs", "ratio", "holds"], {
        "holds_below_delta0": rep.holds_below_delta0
    }


def run_extend(cfg):
    f = corpus(cfg["field"])
    tf = M.extend(f, cfg["rho"])
    pts = np.atleast_2d(np.asarray(cfg["points"], float))
    vals = tf(pts)
    chk = M.extension_check(f, cfg["rho"], cfg["alpha"], cfg["delta0"], cfg["budget"], cfg["seed"])
    rows = [list(p) + [v] for p, v in zip(pts.tolist(), vals.tolist())]
    header = [f"x{i + 1}" for i in range(pts.shape[1])] + ["Tf"]
    return {"field": f.label, "values": vals.tolist(), "bound": chk}, rows, header, {"extension_bound": chk["holds"]}


RUNNERS = {
    "seminorm": run_seminorm,
    "modulus": run_modulus,
    "convolve": run_convolve,
    "kernel-validate": run_kernel_validate,
    "klg": run_klg,
    "roundtrip": run_roundtrip,
    "interior": run_interior,
    "optimality": run_optimality,
    "dezer": run_dezer,
    "extend": run_extend,
}


# ---------------------------------------------------------------------------
# output


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def summary(command, header, rows, checks, limit=20) -> str:
    widths = [max(len(str(h)), 12) for h in header]
    lines = [f"hlog {command}", "  ".join(str(h).ljust(w) for h, w in zip(header, widths))]
    for row in rows[:limit]:
        cells = [f"{v:.6g}" if isinstance(v, (float, np.floating)) else str(v) for v in row]
        lines.append("  ".join(c.ljust(w) for c, w in zip(cells, widths)))
    if len(rows) > limit:
        lines.append(f"... {len(rows) - limit} more rows in table.csv")
    for name, ok in checks.items():
        lines.append(f"check {name}: {'pass' if ok else 'FAIL'}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    command = args.command
    try:
        cfg = resolve_config(command, args)
        validate_config(cfg)
    except (ConfigError, ParameterError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.dry_run:
        print(json.dumps({"command": command, "plan": _clean(cfg)}, indent=2, sort_keys=True))
        return EXIT_OK

    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"config error: output directory not writable: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        results, rows, header, checks = RUNNERS[command](cfg)
    except (PreconditionError, DomainError, CoverageError, UnsupportedDimensionError, InvalidKernelError) as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION

    report = {"tool": "hlog", "version": __version__, "command": command, "config": cfg, "results": results,
              "checks": checks}
    (out / "report.json").write_text(json.dumps(_clean(report), indent=2, sort_keys=True) + "\n")
    (out / "table.csv").write_text(csv_text(header, rows))
    print(summary(command, header, rows, checks))
    if cfg["assert"] and not all(checks.values()):
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
