"""Command-line entry point.

Exit codes: 0 success (and every requested check passed), 1 check failure,
2 usage or configuration error, 3 numeric error.  Failures emit a
machine-readable JSON object on stderr.  +inf is encoded as the string
"inf" in both CSV and JSON artifacts, and identical invocations produce
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cgf import (
    CgfPoint,
    cgf_finite_T_mc,
    cgf_gradient,
    cgf_limit,
    lambda_star,
    legendre_transform_numeric,
)
from .cir_model import (
    ProcessParams,
    path_rng,
    simulate_ensemble,
    simulate_path,
    validate_params,
    write_trajectory_csv,
)
from .errors import (
    BoundaryError,
    CirLdpError,
    ConfigError,
    DegenerateError,
    DomainError,
    GridError,
    InconclusiveError,
    RegimeError,
)
from .functionals import (
    estimate_check,
    estimate_combined,
    estimate_mle,
    estimate_tilde,
    functionals_from_summary,
)
from .harness import (
    clt_experiments,
    profile_curves,
    slope_experiment,
    surface_grid,
)
from .rates import (
    _Ja_high,
    _Ja_low,
    _rate_J_branch_A,
    _rate_J_branch_B,
    _rate_K_branch_1,
    _rate_K_branch_2,
    marginal_inf_numeric,
    rate_I_infsup,
    rate_I_mle,
    rate_J,
    rate_K,
    rate_S,
    rate_Sigma,
    rate_V,
    rate_marginal,
    rate_pair,
    rate_triplet_L,
    rate_triplet_x,
    region_constants,
)

__all__ = ["RunConfig", "build_parser", "dispatch", "main", "parse_config"]

_CORE_DEFAULTS = {
    "x0": 1.0,
    "T": 10.0,
    "n_steps": 200,
    "n_paths": 1000,
    "seed": None,
    "out": ".",
    "n_workers": None,
}

_CORE_KEYS = {"a", "b"} | set(_CORE_DEFAULTS)

_SETTING_KEYS = {
    "estimator",
    "functional",
    "which",
    "alpha",
    "beta",
    "x",
    "y",
    "z",
    "t",
    "v",
    "lam",
    "mu",
    "nu",
    "gamma",
    "c",
    "T_grid",
    "fig",
    "grid",
    "gradient",
    "mc",
    "tolerance",
    "alpha_min",
    "alpha_max",
    "beta_min",
    "beta_max",
    "n_alpha",
    "n_beta",
}

# "suite" stays in the merge so dispatch can route `check`; it is not a
# config-file key.
_IGNORED_FLAG_KEYS = {"command", "config"}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration shared by every command."""

    a: float
    b: float
    x0: float
    T: float
    n_steps: int
    n_paths: int
    seed: int | None
    out: str
    n_workers: int | None = None
    settings: dict = field(default_factory=dict)

    @property
    def params(self) -> ProcessParams:
        return ProcessParams(self.a, self.b, self.x0)

    @property
    def total_steps(self) -> int:
        """Total grid steps for horizon T at n_steps per unit time."""
        return int(round(self.n_steps * self.T))


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path!r} must hold a flat JSON object")
    for key, value in data.items():
        if key not in _CORE_KEYS and key not in _SETTING_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, dict):
            raise ConfigError(f"config key {key!r} must be flat, not nested")
        if key == "T_grid":
            continue
        if value is not None and not isinstance(value, (int, float, str, bool)):
            raise ConfigError(f"config key {key!r} must be a scalar")
    return data


def _seed_required(flags: dict) -> bool:
    command = flags.get("command")
    if command in ("simulate", "estimate"):
        return True
    if command == "check":
        return flags.get("suite") in ("clt", "slope")
    if command == "cgf":
        return bool(flags.get("mc"))
    if command is None:
        return True
    return False


def _coerce_number(key: str, value, kind=float):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} must be a number, got {value!r}") from None
    if isinstance(out, float) and not math.isfinite(out):
        if key in ("alpha", "beta", "x", "y", "z", "t", "v"):
            return out
        raise ConfigError(f"config key {key!r} must be finite, got {value!r}")
    return out


def _parse_T_grid(value) -> tuple[float, ...]:
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        raise ConfigError(f"config key 'T_grid' must be a list or comma string, got {value!r}")
    try:
        grid = tuple(float(p) for p in parts)
    except (TypeError, ValueError):
        raise ConfigError(f"config key 'T_grid' holds a non-number: {value!r}") from None
    if not grid or any(T <= 0.0 or not math.isfinite(T) for T in grid):
        raise ConfigError(f"config key 'T_grid' must hold positive horizons, got {value!r}")
    return grid


def parse_config(source) -> RunConfig:
    """Build a validated RunConfig from a flag set or a config file path.

    Precedence is flags > config file > defaults (x0 = 1, 200 steps per unit
    time).  The seed is demanded only by commands that consume randomness.

    Raises
    ------
    ConfigError
        On a missing or malformed key, naming the offending key.
    RegimeError
        From parameter validation.
    """
    if isinstance(source, (str, Path)):
        flags: dict = {"config": str(source)}
    elif isinstance(source, argparse.Namespace):
        flags = {k: v for k, v in vars(source).items() if v is not None}
    elif isinstance(source, dict):
        flags = {k: v for k, v in source.items() if v is not None}
    else:
        raise ConfigError(f"unsupported config source {type(source).__name__!r}")

    file_vals = _load_config_file(flags["config"]) if flags.get("config") else {}
    merged = dict(_CORE_DEFAULTS)
    merged.update({k: v for k, v in file_vals.items() if v is not None})
    merged.update(
        {k: v for k, v in flags.items() if k not in _IGNORED_FLAG_KEYS}
    )

    for key in ("a", "b"):
        if key not in merged:
            raise ConfigError(f"missing required key {key!r}")
    a = _coerce_number("a", merged.pop("a"))
    b = _coerce_number("b", merged.pop("b"))
    x0 = _coerce_number("x0", merged.pop("x0"))
    validate_params(a, b, x0)

    T = _coerce_number("T", merged.pop("T"))
    if T <= 0.0:
        raise ConfigError(f"config key 'T' must be positive, got {T}")
    n_steps = _coerce_number("n_steps", merged.pop("n_steps"), int)
    if n_steps < 1:
        raise ConfigError(f"config key 'n_steps' must be >= 1, got {n_steps}")
    if round(n_steps * T) < 2:
        raise ConfigError(
            f"n_steps*T = {n_steps * T} gives fewer than 2 grid steps"
        )
    n_paths = _coerce_number("n_paths", merged.pop("n_paths"), int)
    if n_paths < 1:
        raise ConfigError(f"config key 'n_paths' must be >= 1, got {n_paths}")

    seed = merged.pop("seed")
    if seed is None:
        if _seed_required(flags):
            raise ConfigError(
                "missing required key 'seed' (this command consumes randomness)"
            )
    else:
        seed = _coerce_number("seed", seed, int)
        if not 0 <= seed < 2**64:
            raise ConfigError(f"config key 'seed' must be in [0, 2^64), got {seed}")

    out = str(merged.pop("out"))
    n_workers = merged.pop("n_workers")
    if n_workers is not None:
        n_workers = _coerce_number("n_workers", n_workers, int)
        if n_workers < 1:
            raise ConfigError(f"config key 'n_workers' must be >= 1, got {n_workers}")

    settings = {k: v for k, v in merged.items() if v is not None}
    if "T_grid" in settings:
        settings["T_grid"] = _parse_T_grid(settings["T_grid"])
    return RunConfig(
        a=a,
        b=b,
        x0=x0,
        T=T,
        n_steps=n_steps,
        n_paths=n_paths,
        seed=seed,
        out=out,
        n_workers=n_workers,
        settings=settings,
    )


# ---------------------------------------------------------------------------
# Serialization helpers.
# ---------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if v == math.inf:
            return "inf"
        if v == -math.inf:
            return "-inf"
        return v
    return obj


def _report_text(payload: dict) -> str:
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


def _emit_report(cfg: RunConfig, name: str, payload: dict) -> None:
    text = _report_text(payload)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _emit_error(exc: BaseException) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


def _param_block(cfg: RunConfig) -> dict:
    return {"a": cfg.a, "b": cfg.b, "x0": cfg.x0}


def _fmt_value(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _require_setting(cfg: RunConfig, key: str, context: str) -> float:
    if key not in cfg.settings:
        raise ConfigError(f"missing required key {key!r} for {context}")
    return _coerce_number(key, cfg.settings[key])


# ---------------------------------------------------------------------------
# Command handlers.
# ---------------------------------------------------------------------------


def _cmd_simulate(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(cfg.n_paths):
        traj = simulate_path(
            cfg.params, cfg.T, cfg.total_steps, path_rng(cfg.seed, i)
        )
        write_trajectory_csv(traj, str(out_dir / f"traj_{i:05d}.csv"))
    payload = {
        "experiment": "simulate",
        "params": _param_block(cfg),
        "settings": {
            "T": cfg.T,
            "n_steps": cfg.total_steps,
            "n_paths": cfg.n_paths,
            "seed": cfg.seed,
        },
        "metrics": {"directory": str(out_dir), "pattern": "traj_#####.csv"},
        "pass": True,
    }
    sys.stdout.write(_report_text(payload))
    return 0


_ESTIMATE_FNS = {
    "mle": estimate_mle,
    "tilde": estimate_tilde,
    "check": estimate_check,
    "combined": estimate_combined,
}


def _cmd_estimate(cfg: RunConfig) -> int:
    selector = cfg.settings.get("estimator", "all")
    if selector == "all":
        names = list(_ESTIMATE_FNS)
    elif selector in _ESTIMATE_FNS:
        names = [selector]
    else:
        raise ConfigError(
            f"config key 'estimator' must be one of "
            f"{sorted(_ESTIMATE_FNS) + ['all']}, got {selector!r}"
        )
    ens = simulate_ensemble(
        cfg.params,
        cfg.T,
        cfg.total_steps,
        cfg.n_paths,
        cfg.seed,
        n_workers=cfg.n_workers,
    )
    lines = ["path_id,estimator,alpha,beta"]
    for i in range(cfg.n_paths):
        pf = functionals_from_summary(
            ens.T, cfg.x0, float(ens.x_T[i]), float(ens.S[i]), float(ens.Sigma[i])
        )
        for name in names:
            est = _ESTIMATE_FNS[name](pf)
            lines.append(f"{i},{name},{est.alpha!r},{est.beta!r}")
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "estimates.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    payload = {
        "experiment": "estimate",
        "params": _param_block(cfg),
        "settings": {
            "T": cfg.T,
            "n_steps": cfg.total_steps,
            "n_paths": cfg.n_paths,
            "seed": cfg.seed,
            "estimators": names,
        },
        "metrics": {"file": str(csv_path), "rows": cfg.n_paths * len(names)},
        "pass": True,
    }
    sys.stdout.write(_report_text(payload))
    return 0


def _rate_point(cfg: RunConfig, which: str) -> float:
    params = cfg.params
    s = cfg.settings

    def need(key: str) -> float:
        return _require_setting(cfg, key, f"rate --which {which}")

    if which in ("J", "K", "I"):
        al, be = need("alpha"), need("beta")
        fn = {"J": rate_J, "K": rate_K, "I": rate_I_mle}[which]
        return fn(params, al, be)
    if which in ("Ja", "Ka", "Ia"):
        return rate_marginal(params, which, need("alpha"))
    if which in ("Jb", "Kb", "Ib"):
        return rate_marginal(params, which, need("beta"))
    if which == "S":
        return rate_S(params, need("x"))
    if which == "Sigma":
        return rate_Sigma(params, need("y"))
    if which == "V":
        return rate_V(params, need("v"))
    if which == "pair":
        return rate_pair(params, need("x"), need("y"))
    if which == "triplet_x":
        return rate_triplet_x(params, need("x"), need("y"), need("z"))
    if which == "triplet_L":
        return rate_triplet_L(params, need("y"), need("z"), need("t"))
    raise ConfigError(f"unknown rate selector {which!r}")


def _grid_window(cfg: RunConfig) -> tuple[tuple[float, float], tuple[float, float], int, int]:
    s = cfg.settings
    al_lo = _coerce_number("alpha_min", s.get("alpha_min", 3.0))
    al_hi = _coerce_number("alpha_max", s.get("alpha_max", 5.0))
    be_lo = _coerce_number("beta_min", s.get("beta_min", -4.0))
    be_hi = _coerce_number("beta_max", s.get("beta_max", -0.5))
    n_al = _coerce_number("n_alpha", s.get("n_alpha", 41), int)
    n_be = _coerce_number("n_beta", s.get("n_beta", 41), int)
    if n_al < 2 or n_be < 2:
        raise ConfigError("grid sizes 'n_alpha' and 'n_beta' must be >= 2")
    return (al_lo, al_hi), (be_lo, be_hi), n_al, n_be


def _cmd_rate(cfg: RunConfig) -> int:
    which = cfg.settings.get("which")
    if which is None:
        raise ConfigError("missing required key 'which' for rate")
    if cfg.settings.get("grid"):
        if which not in ("J", "K", "I"):
            raise ConfigError(
                f"grid evaluation supports which in {{J, K, I}}, got {which!r}"
            )
        (al_rng, be_rng, n_al, n_be) = _grid_window(cfg)
        grid = surface_grid(
            cfg.params,
            which=which,
            alpha_range=al_rng,
            beta_range=be_rng,
            n_alpha=n_al,
            n_beta=n_be,
        )
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"rate_{which}_grid.csv"
        csv_path.write_text(grid.to_csv(), encoding="utf-8")
        payload = {
            "experiment": "rate_grid",
            "params": _param_block(cfg),
            "settings": {
                "which": which,
                "alpha_range": list(al_rng),
                "beta_range": list(be_rng),
                "n_alpha": n_al,
                "n_beta": n_be,
            },
            "metrics": {"file": str(csv_path), "rows": n_al * n_be},
            "pass": True,
        }
        sys.stdout.write(_report_text(payload))
        return 0
    value = _rate_point(cfg, which)
    sys.stdout.write(_fmt_value(value) + "\n")
    return 0


def _cmd_cgf(cfg: RunConfig) -> int:
    s = cfg.settings
    point = CgfPoint(
        _coerce_number("lam", s.get("lam", 0.0)),
        _coerce_number("mu", s.get("mu", 0.0)),
        _coerce_number("nu", s.get("nu", 0.0)),
        _coerce_number("gamma", s.get("gamma", 0.0)),
    )
    if s.get("mc"):
        estimate, stderr = cgf_finite_T_mc(
            cfg.params,
            point,
            cfg.T,
            cfg.n_paths,
            cfg.seed,
            n_steps=cfg.total_steps,
            n_workers=cfg.n_workers,
        )
        limit = cgf_limit(cfg.params, point)
        abs_diff = abs(estimate - limit)
        payload = {
            "experiment": "cgf_mc",
            "params": _param_block(cfg),
            "settings": {
                "point": [point.lam, point.mu, point.nu, point.gamma],
                "T": cfg.T,
                "n_steps": cfg.total_steps,
                "n_paths": cfg.n_paths,
                "seed": cfg.seed,
            },
            "metrics": {
                "estimate": estimate,
                "stderr": stderr,
                "limit": limit,
                "abs_diff": abs_diff,
            },
            "pass": bool(abs_diff <= 3.0 * stderr + 0.05),
        }
        _emit_report(cfg, "cgf_mc_report.json", payload)
        return 0
    if s.get("gradient"):
        grad = cgf_gradient(cfg.params, point)
        sys.stdout.write(" ".join(_fmt_value(g) for g in grad) + "\n")
        return 0
    sys.stdout.write(_fmt_value(cgf_limit(cfg.params, point)) + "\n")
    return 0


def _check_clt(cfg: RunConfig) -> int:
    selector = cfg.settings.get("estimator", "mle")
    names = ["mle", "tilde", "check"] if selector == "all" else [selector]
    tolerance = _coerce_number("tolerance", cfg.settings.get("tolerance", 0.15))
    reports = clt_experiments(
        cfg.params,
        names,
        cfg.T,
        cfg.n_paths,
        cfg.seed,
        n_steps=cfg.total_steps,
        n_workers=cfg.n_workers,
        tolerance=tolerance,
    )
    dicts = []
    for r in reports:
        d = r.to_dict()
        d["params"] = _param_block(cfg)
        dicts.append(d)
    passed = all(r.passed for r in reports)
    if len(dicts) == 1:
        payload = dicts[0]
    else:
        payload = {
            "experiment": "clt",
            "params": _param_block(cfg),
            "settings": {"estimators": names},
            "reports": dicts,
            "pass": passed,
        }
    _emit_report(cfg, "clt_report.json", payload)
    return 0 if passed else 1


_LEGENDRE_QUAD_GRID = {
    "x": (0.0, 0.3, 0.8, 1.5, 2.5),
    "t": (0.0, -0.2, -0.5, -1.0, -1.6),
    "y": (2.0, 3.0, 4.0, 5.0, 6.0),
    "z": (0.6, 0.8, 1.0, 1.3, 1.7),
}


def _check_legendre(cfg: RunConfig) -> int:
    params = cfg.params
    tolerance = _coerce_number("tolerance", cfg.settings.get("tolerance", 1e-6))
    worst_pair = {"abs_diff": -1.0}
    for x in np.linspace(1.5, 6.0, 20):
        for y in np.linspace(0.8, 3.0, 20):
            closed = rate_pair(params, float(x), float(y))
            numeric = legendre_transform_numeric(params, 0.0, float(x), float(y), 0.0)
            d = abs(numeric - closed)
            if d > worst_pair["abs_diff"]:
                worst_pair = {
                    "point": {"x": float(x), "y": float(y)},
                    "closed_form": closed,
                    "numeric": numeric,
                    "abs_diff": d,
                }
    worst_quad = {"abs_diff": -1.0}
    g = _LEGENDRE_QUAD_GRID
    for x in g["x"]:
        for y in g["y"]:
            for z in g["z"]:
                for t in g["t"]:
                    closed = lambda_star(params, x, y, z, t)
                    numeric = legendre_transform_numeric(params, x, y, z, t)
                    d = abs(numeric - closed)
                    if d > worst_quad["abs_diff"]:
                        worst_quad = {
                            "point": {"x": x, "y": y, "z": z, "t": t},
                            "closed_form": closed,
                            "numeric": numeric,
                            "abs_diff": d,
                        }
    passed = (
        worst_pair["abs_diff"] <= tolerance and worst_quad["abs_diff"] <= tolerance
    )
    payload = {
        "experiment": "legendre",
        "params": _param_block(cfg),
        "settings": {"tolerance": tolerance, "pair_grid": "20x20", "quad_grid": "5^4"},
        "metrics": {"worst_pair": worst_pair, "worst_quad": worst_quad},
        "pass": passed,
    }
    _emit_report(cfg, "legendre_report.json", payload)
    return 0 if passed else 1


_INFSUP_POINTS = (
    (2.5, -0.5), (2.5, -2.0), (3.0, -1.0), (3.0, -3.0), (3.5, -0.7),
    (4.0, -2.5), (4.5, -1.2), (5.0, -4.0), (6.0, -0.8), (2.2, -1.5),
    (0.5, 0.7), (0.5, -0.6), (1.0, 0.5), (1.0, -1.0), (1.5, 1.2),
    (1.5, -2.0), (0.3, 2.0), (1.8, -0.4), (0.8, -3.0), (1.2, 0.9),
    (0.0, 0.5), (-0.5, 0.8), (-1.0, 1.0), (-1.5, 2.0), (-2.0, 0.6),
    (-3.0, 1.5), (-0.3, 3.0), (-2.5, 2.5), (-4.0, 1.2), (-0.8, 0.4),
)


def _check_infsup(cfg: RunConfig) -> int:
    params = cfg.params
    tolerance = _coerce_number("tolerance", cfg.settings.get("tolerance", 1e-4))
    worst = {"abs_diff": -1.0}
    max_excess = -math.inf
    for al, be in _INFSUP_POINTS:
        closed = rate_I_mle(params, al, be)
        numeric = rate_I_infsup(params, al, be)
        d = abs(numeric - closed)
        max_excess = max(max_excess, numeric - closed)
        if d > worst["abs_diff"]:
            worst = {
                "point": {"alpha": al, "beta": be},
                "closed_form": closed,
                "numeric": numeric,
                "abs_diff": d,
            }
    passed = worst["abs_diff"] <= tolerance and max_excess <= tolerance
    payload = {
        "experiment": "infsup",
        "params": _param_block(cfg),
        "settings": {"tolerance": tolerance, "n_points": len(_INFSUP_POINTS)},
        "metrics": {"worst": worst, "max_excess": max_excess},
        "pass": passed,
    }
    _emit_report(cfg, "infsup_report.json", payload)
    return 0 if passed else 1


def _check_slope(cfg: RunConfig) -> int:
    functional = cfg.settings.get("functional", "S")
    c = _coerce_number("c", cfg.settings.get("c", 5.0 if functional == "S" else 1.0))
    T_grid = cfg.settings.get("T_grid", (5.0, 10.0, 20.0))
    tolerance = _coerce_number("tolerance", cfg.settings.get("tolerance", 0.30))
    report = slope_experiment(
        cfg.params,
        functional,
        c,
        T_grid,
        cfg.n_paths,
        cfg.seed,
        n_workers=cfg.n_workers,
        tolerance=tolerance,
    )
    payload = report.to_dict()
    payload["params"] = _param_block(cfg)
    _emit_report(cfg, "slope_report.json", payload)
    return 0 if report.passed else 1


def _check_continuity(cfg: RunConfig) -> int:
    params = cfg.params
    rc = region_constants(params)
    seam_tol = 1e-9
    marginal_tol = _coerce_number("tolerance", cfg.settings.get("tolerance", 1e-6))

    seams = {}
    seams["J_at_beta_b_over_3"] = max(
        abs(
            _rate_J_branch_A(params, al, params.b / 3.0)
            - _rate_J_branch_B(params, al, params.b / 3.0)
        )
        for al in (2.5, 3.0, 4.0, 5.0)
    )
    seams["K_at_alpha_a"] = max(
        abs(
            _rate_K_branch_1(params, rc.alpha_a, be)
            - _rate_K_branch_2(params, rc.alpha_a, be)
        )
        for be in (-0.5, -1.0, -2.0)
    )
    seams["Ja_at_ell_a"] = abs(
        _Ja_low(params, rc.ell_a) - _Ja_high(params, rc.ell_a)
    )
    seams["Ka_at_alpha_a"] = abs(
        rate_K(params, rc.alpha_a, rc.beta_b(rc.alpha_a)) - _Ja_high(params, rc.alpha_a)
    )

    marginals = {}
    for name, axis, grid in (
        ("Ja", "a", np.linspace(0.5, 5.5, 8)),
        ("Jb", "b", np.linspace(-3.0, 0.8, 8)),
        ("Ka", "a", np.linspace(-2.0, 5.0, 8)),
    ):
        worst = 0.0
        for v in grid:
            closed = rate_marginal(params, name, float(v))
            numeric = marginal_inf_numeric(params, name[0], axis, float(v))
            worst = max(worst, abs(numeric - closed))
        marginals[name] = worst

    surf = surface_grid(params)
    shared = surf.max_shared_diff(params)
    both_finite = np.isfinite(surf.J) & np.isfinite(surf.K)
    overall = (
        float(np.max(np.abs(surf.J[both_finite] - surf.K[both_finite])))
        if both_finite.any()
        else 0.0
    )

    passed = (
        all(v <= seam_tol for v in seams.values())
        and all(v <= marginal_tol for v in marginals.values())
        and shared <= 1e-9
    )
    payload = {
        "experiment": "continuity",
        "params": _param_block(cfg),
        "settings": {"seam_tolerance": seam_tol, "marginal_tolerance": marginal_tol},
        "metrics": {
            "seams": seams,
            "marginals": marginals,
            "max_shared_branch_diff": shared,
            "max_overall_JK_diff": overall,
        },
        "pass": passed,
    }
    _emit_report(cfg, "continuity_report.json", payload)
    return 0 if passed else 1


_CHECK_SUITES = {
    "clt": _check_clt,
    "legendre": _check_legendre,
    "infsup": _check_infsup,
    "slope": _check_slope,
    "continuity": _check_continuity,
}


def _cmd_check(cfg: RunConfig) -> int:
    suite = cfg.settings.get("suite")
    return _CHECK_SUITES[suite](cfg)


def _cmd_figures(cfg: RunConfig) -> int:
    fig = _coerce_number("fig", _require_setting(cfg, "fig", "figures"), int)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics: dict
    if fig in (1, 2):
        which = "J" if fig == 1 else "K"
        grid = surface_grid(cfg.params, which=which)
        csv_path = out_dir / f"fig{fig}.csv"
        csv_path.write_text(grid.to_csv(), encoding="utf-8")
        metrics = {
            "file": str(csv_path),
            "rows": grid.J.size,
            "which": which,
            "max_shared_branch_diff": grid.max_shared_diff(cfg.params),
        }
    elif fig == 3:
        curves = profile_curves(cfg.params)
        csv_path = out_dir / "fig3.csv"
        csv_path.write_text(curves.to_csv(), encoding="utf-8")
        metrics = {"file": str(csv_path), "rows": len(curves.v)}
    else:
        raise ConfigError(f"config key 'fig' must be 1, 2, or 3, got {fig}")
    payload = {
        "experiment": "figures",
        "params": _param_block(cfg),
        "settings": {"fig": fig},
        "metrics": metrics,
        "pass": True,
    }
    sys.stdout.write(_report_text(payload))
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "rate": _cmd_rate,
    "cgf": _cmd_cgf,
    "check": _cmd_check,
    "figures": _cmd_figures,
}


def dispatch(command: str, cfg: RunConfig) -> int:
    """Run one command against a validated configuration; returns exit code."""
    try:
        handler = _COMMANDS[command]
    except KeyError:
        raise ConfigError(f"unknown command {command!r}") from None
    return handler(cfg)


# ---------------------------------------------------------------------------
# Argument parsing.
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON config file (flags override it)")
    p.add_argument("--a", type=float, help="drift level a (regime a > 2)")
    p.add_argument("--b", type=float, help="drift slope b (regime b < 0)")
    p.add_argument("--x0", type=float, help="starting point (default 1)")
    p.add_argument("--T", type=float, help="time horizon (default 10)")
    p.add_argument(
        "--n-steps",
        dest="n_steps",
        type=int,
        help="grid steps per unit time (default 200)",
    )
    p.add_argument(
        "--paths", dest="n_paths", type=int, help="number of paths (default 1000)"
    )
    p.add_argument("--seed", type=int, help="master seed (64-bit unsigned)")
    p.add_argument("--out", help="output directory for artifacts (default .)")
    p.add_argument(
        "--workers",
        dest="n_workers",
        type=int,
        help="worker processes (default: CIR_LDP_THREADS or 1)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cir-ldp",
        description=(
            "Exact simulation, drift estimation, and large-deviation rate "
            "functions for the squared radial Ornstein-Uhlenbeck process."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write exact trajectory CSVs")
    _add_common(p)

    p = sub.add_parser("estimate", help="write per-path estimator CSV")
    _add_common(p)
    p.add_argument(
        "--estimator",
        choices=["mle", "tilde", "check", "combined", "all"],
        help="estimator selector (default all)",
    )

    p = sub.add_parser("rate", help="evaluate rate functions at points or grids")
    _add_common(p)
    p.add_argument(
        "--which",
        choices=[
            "J", "K", "I", "Ja", "Jb", "Ka", "Kb", "Ia", "Ib",
            "S", "Sigma", "V", "pair", "triplet_x", "triplet_L",
        ],
        help="rate function selector",
    )
    p.add_argument("--alpha", type=float, help="alpha coordinate")
    p.add_argument("--beta", type=float, help="beta coordinate")
    p.add_argument("--x", type=float, help="x coordinate")
    p.add_argument("--y", type=float, help="y coordinate")
    p.add_argument("--z", type=float, help="z coordinate")
    p.add_argument("--t", type=float, help="t coordinate")
    p.add_argument("--v", type=float, help="v coordinate")
    p.add_argument(
        "--grid",
        action="store_const",
        const=True,
        help="evaluate a (J, K, I) surface grid instead of a point",
    )
    p.add_argument("--alpha-min", dest="alpha_min", type=float)
    p.add_argument("--alpha-max", dest="alpha_max", type=float)
    p.add_argument("--beta-min", dest="beta_min", type=float)
    p.add_argument("--beta-max", dest="beta_max", type=float)
    p.add_argument("--n-alpha", dest="n_alpha", type=int)
    p.add_argument("--n-beta", dest="n_beta", type=int)

    p = sub.add_parser("cgf", help="evaluate the limiting CGF, gradient, or MC")
    _add_common(p)
    p.add_argument("--lam", type=float, help="lambda coordinate (default 0)")
    p.add_argument("--mu", type=float, help="mu coordinate (default 0)")
    p.add_argument("--nu", type=float, help="nu coordinate (default 0)")
    p.add_argument("--gamma", type=float, help="gamma coordinate (default 0)")
    p.add_argument(
        "--gradient",
        action="store_const",
        const=True,
        help="print the gradient instead of the value",
    )
    p.add_argument(
        "--mc",
        action="store_const",
        const=True,
        help="estimate the finite-T CGF by Monte Carlo",
    )

    p = sub.add_parser("check", help="run a validation suite, exit 0 iff it passes")
    p.add_argument(
        "suite", choices=["clt", "legendre", "infsup", "slope", "continuity"]
    )
    _add_common(p)
    p.add_argument(
        "--estimator",
        choices=["mle", "tilde", "check", "all"],
        help="clt suite: estimator selector (default mle)",
    )
    p.add_argument(
        "--functional",
        choices=["S", "Sigma", "V"],
        help="slope suite: path functional (default S)",
    )
    p.add_argument("--c", type=float, help="slope suite: tail threshold")
    p.add_argument(
        "--T-grid",
        dest="T_grid",
        help="slope suite: comma-separated horizons (default 5,10,20)",
    )
    p.add_argument("--tolerance", type=float, help="suite tolerance override")

    p = sub.add_parser("figures", help="emit the figure grids as CSV")
    _add_common(p)
    p.add_argument("--fig", type=int, help="figure number: 1, 2, or 3")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = parse_config(ns)
    except (ConfigError, RegimeError) as exc:
        _emit_error(exc)
        return 2
    except CirLdpError as exc:
        _emit_error(exc)
        return 3
    try:
        return dispatch(ns.command, cfg)
    except (ConfigError, RegimeError) as exc:
        _emit_error(exc)
        return 2
    except (
        BoundaryError,
        DegenerateError,
        DomainError,
        GridError,
        InconclusiveError,
        OverflowError,
    ) as exc:
        _emit_error(exc)
        return 3
    except CirLdpError as exc:
        _emit_error(exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
