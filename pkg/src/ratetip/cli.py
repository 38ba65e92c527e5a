"""Command-line front end: ``ratetip {simulate,hopf,sweep,portrait}``.

Configuration is resolved as defaults < ``--config`` file < command-line flags.
A config file is either plain ``key = value`` text or a run manifest written
by a previous invocation, so any output can be regenerated from its manifest.

Exit codes: 0 success, 2 configuration error, 3 integration failure,
4 Hopf bracket failure, 5 every sweep row failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .analysis import critical_rate, locate_hopf_numeric, solve_equilibrium
from .cycles import CycleConfig, LimitCycleResult, qse_comoving, rate_sweep
from .errors import BracketFailure, IntegrationFailure, InvalidParameters, RateTipError
from .models import (
    Family,
    comoving_field,
    critical_manifold,
    fold_points,
    full_field,
    make_params,
)
from .odeint import IntegratorConfig, integrate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_BRACKET = 4
EXIT_SWEEP_FAILED = 5

COMMANDS = ("simulate", "hopf", "sweep", "portrait")


class ConfigError(Exception):
    pass


# -- config schema -------------------------------------------------------------


def _bool(v: Any) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt_float(v: Any):
    if v is None or str(v).strip().lower() in ("", "none", "null"):
        return None
    return float(v)


def _float_list(v: Any) -> list[float]:
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    if isinstance(v, (int, float)):
        return [float(v)]
    return [float(x) for x in str(v).replace(";", ",").split(",") if x.strip()]


def _grid(v: Any) -> list[float]:
    """``start:stop:count`` (inclusive linspace) or an explicit comma list."""
    if isinstance(v, str) and ":" in v:
        parts = v.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:count, got {v!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("grid count must be >= 1")
        return [float(x) for x in np.linspace(start, stop, count)]
    return _float_list(v)


SCHEMA: dict[str, tuple[Callable[[Any], Any], Any]] = {
    "family": (lambda v: Family(str(v).strip().lower()).value, "ashwin"),
    "epsilon": (_float_list, [0.02]),
    "r": (float, 0.5),
    "r_grid": (_grid, _grid("0.9675:1.3:60")),
    "N": (int, 5),
    "alpha": (float, 1.5),
    # simulate
    "t0": (float, 0.0),
    "t1": (float, 50.0),
    "comoving": (_bool, False),
    "x1_0": (_opt_float, None),
    "w_0": (_opt_float, None),
    # integrator
    "rtol": (float, 1e-8),
    "atol": (float, 1e-10),
    "h_init": (float, 1e-3),
    "h_min": (float, 1e-12),
    "h_max": (float, 1.0),
    "max_steps": (int, 2_000_000),
    # cycles
    "transient_time": (float, 50.0),
    "max_returns": (int, 200),
    "return_tol": (float, 1e-9),
    "perturbation": (float, 1e-4),
    "warm_start": (_bool, True),
    "workers": (int, 0),
    "tipping_radius": (_opt_float, None),
    # hopf
    "r_lo": (_opt_float, None),
    "r_hi": (_opt_float, None),
    # portrait
    "x_min": (_opt_float, None),
    "x_max": (_opt_float, None),
    "w_min": (_opt_float, None),
    "w_max": (_opt_float, None),
    "nx": (int, 41),
    "ny": (int, 41),
    "manifold_points": (int, 201),
    # output
    "format": (lambda v: _choice(v, ("csv", "json")), "csv"),
    "out": (str, None),
}


def _choice(v, options):
    s = str(v).strip().lower()
    if s not in options:
        raise ValueError(f"expected one of {options}, got {v!r}")
    return s


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines (``#`` starts a comment) or a run manifest."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        return dict(data.get("config", data))
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line and (sep == "=" or "=" not in line):
                key, value = line.split(sep, 1)
                break
        else:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def resolve_config(layers: list[dict[str, Any]]) -> dict[str, Any]:
    cfg: dict[str, Any] = {}
    for key, (conv, default) in SCHEMA.items():
        cfg[key] = default
    for layer in layers:
        for key, value in layer.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            conv = SCHEMA[key][0]
            try:
                cfg[key] = conv(value) if value is not None else None
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid value for {key!r}: {exc}") from None
    if any(b <= a for a, b in zip(cfg["r_grid"], cfg["r_grid"][1:])):
        raise ConfigError("r_grid must be strictly increasing")
    if not cfg["epsilon"]:
        raise ConfigError("epsilon is empty")
    return cfg


# -- builders ------------------------------------------------------------------


def _params(cfg: dict, epsilon: float | None = None, r: float | None = None):
    eps = cfg["epsilon"][0] if epsilon is None else epsilon
    r = cfg["r"] if r is None else r
    if cfg["family"] == Family.ASHWIN.value:
        return make_params("ashwin", epsilon=eps, r=r, N=cfg["N"])
    return make_params("vdp", epsilon=eps, r=r, alpha=cfg["alpha"])


def _integrator(cfg: dict) -> IntegratorConfig:
    return IntegratorConfig(
        rtol=cfg["rtol"], atol=cfg["atol"], h_init=cfg["h_init"],
        h_min=cfg["h_min"], h_max=cfg["h_max"], max_steps=cfg["max_steps"],
    )


def _cycle_config(cfg: dict) -> CycleConfig:
    return CycleConfig(
        transient_time=cfg["transient_time"], max_returns=cfg["max_returns"],
        return_tol=cfg["return_tol"], perturbation=cfg["perturbation"],
    )


# -- output helpers ------------------------------------------------------------


def fmt(x: Any) -> str:
    """Format a cell: floats with 17 significant digits (lossless), bools lower-case."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _jsonable(x):
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, default=_jsonable)
        fh.write("\n")


def write_table(path: Path, fmt_name: str, header: list[str], rows) -> None:
    if fmt_name == "csv":
        write_csv(path, header, rows)
    else:
        write_json(path, [dict(zip(header, (_jsonable(v) for v in row))) for row in rows])


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def write_manifest(out: Path, command: str, cfg: dict, wall: float, rows=None) -> None:
    manifest = {
        "tool": "ratetip",
        "version": __version__,
        "command": command,
        "config": cfg,
        "wall_time_s": wall,
        "outputs": [str(out)],
    }
    if rows is not None:
        manifest["rows"] = rows
    write_json(manifest_path(out), manifest)


def _default_out(command: str, cfg: dict) -> str:
    return f"{command}.{cfg['format']}"


# -- commands ------------------------------------------------------------------


def cmd_simulate(cfg: dict) -> int:
    t_start = time.perf_counter()
    p = _params(cfg)
    qse = qse_comoving(p)
    x1_0 = qse.x1 if cfg["x1_0"] is None else cfg["x1_0"]
    w_0 = qse.w if cfg["w_0"] is None else cfg["w_0"]
    t0, t1 = cfg["t0"], cfg["t1"]
    if t1 < t0:
        raise ConfigError("t1 must be >= t0")
    if cfg["comoving"]:
        y0 = np.array([x1_0, w_0])
        rhs = comoving_field(p)
        header = ["t", "x1", "w"]
    else:
        lam0 = p.r * t0
        y0 = np.array([x1_0, w_0 - lam0, lam0])
        rhs = full_field(p)
        header = ["t", "x1", "x2", "lambda"]
    if t1 == t0:
        times, states = np.array([t0]), y0[None, :]
    else:
        traj = integrate(rhs, y0, (t0, t1), _integrator(cfg))
        times, states = traj.times, traj.states
    out = Path(cfg["out"])
    write_table(out, cfg["format"], header, ([t, *y] for t, y in zip(times, states)))
    write_manifest(out, "simulate", cfg, time.perf_counter() - t_start)
    return EXIT_OK


def _default_bracket(p, cfg) -> tuple[float, float]:
    rc = critical_rate(p)
    lo = cfg["r_lo"] if cfg["r_lo"] is not None else max(0.0, rc - 0.05)
    hi = cfg["r_hi"] if cfg["r_hi"] is not None else rc + 0.05
    return lo, hi


def cmd_hopf(cfg: dict) -> int:
    t_start = time.perf_counter()
    p = _params(cfg, r=0.0)
    lo, hi = _default_bracket(p, cfg)
    ends = []
    for r in (lo, hi):
        eq = solve_equilibrium(p.with_rate(r))
        ends.append([[ev.real, ev.imag] for ev in eq.eigenvalues])
    report = locate_hopf_numeric(p, (lo, hi))
    record = {
        "family": cfg["family"],
        "epsilon": p.epsilon,
        "r_analytic": critical_rate(p),
        "r_numeric": report.r_hopf,
        "omega": report.omega,
        "x1_at_hopf": report.x1_at_hopf,
        "bracket": [lo, hi],
        "eigenvalues_at_bracket_ends": ends,
    }
    out = Path(cfg["out"])
    if cfg["format"] == "json":
        write_json(out, record)
    else:
        keys = ["r_analytic", "r_numeric", "omega", "x1_at_hopf"]
        write_csv(out, keys, [[record[k] for k in keys]])
    write_manifest(out, "hopf", cfg, time.perf_counter() - t_start)
    return EXIT_OK


def _converged_cell(res: LimitCycleResult) -> str:
    if res.stable:
        return "stable"
    return "true" if res.converged else "false"


def _sweep_out_paths(out: Path, epsilons: list[float]) -> list[Path]:
    if len(epsilons) == 1:
        return [out]
    return [out.with_name(f"{out.stem}_eps{e!r}{out.suffix}") for e in epsilons]


def cmd_sweep(cfg: dict) -> int:
    out = Path(cfg["out"])
    all_failed = True
    workers = cfg["workers"] or (os.cpu_count() or 1)
    for eps, path in zip(cfg["epsilon"], _sweep_out_paths(out, cfg["epsilon"])):
        t_start = time.perf_counter()
        p = _params(cfg, epsilon=eps, r=cfg["r_grid"][0])
        sweep = rate_sweep(
            p, cfg["r_grid"], _cycle_config(cfg), _integrator(cfg),
            warm_start=cfg["warm_start"], workers=workers,
        )
        header = ["r", "max_distance", "amplitude_x1", "period", "converged"]
        radius = cfg["tipping_radius"]
        if radius is not None:
            header.append("tipped")
        rows, status = [], []
        for r, res in sweep.rows:
            row = [r, res.max_distance, res.amplitude_x1, res.period, _converged_cell(res)]
            if radius is not None:
                row.append(res.max_distance > radius)
            rows.append(row)
            status.append({"r": r, "status": res.status, "message": res.message})
            if res.converged or res.stable:
                all_failed = False
        if cfg["format"] == "json":
            write_json(path, [
                {
                    **dict(zip(header, (_jsonable(v) for v in row))),
                    "status": res.status,
                    "max_distance_from_qse": res.max_distance_from_qse,
                    "peak_to_peak_x1": res.peak_to_peak_x1,
                    "returns_used": res.returns_used,
                }
                for row, (_, res) in zip(rows, sweep.rows)
            ])
        else:
            write_csv(path, header, rows)
        file_cfg = dict(cfg, epsilon=[eps], out=str(path))
        write_manifest(path, "sweep", file_cfg, time.perf_counter() - t_start, status)
    return EXIT_SWEEP_FAILED if all_failed else EXIT_OK


def _default_box(family: str) -> tuple[float, float, float, float]:
    if family == Family.ASHWIN.value:
        return -0.5, 1.5, -0.5, 1.0
    return -2.5, 2.5, -2.0, 2.0


def cmd_portrait(cfg: dict) -> int:
    t_start = time.perf_counter()
    p = _params(cfg)
    dx0, dx1, dw0, dw1 = _default_box(cfg["family"])
    x_min = dx0 if cfg["x_min"] is None else cfg["x_min"]
    x_max = dx1 if cfg["x_max"] is None else cfg["x_max"]
    w_min = dw0 if cfg["w_min"] is None else cfg["w_min"]
    w_max = dw1 if cfg["w_max"] is None else cfg["w_max"]
    if not (x_min < x_max and w_min < w_max):
        raise ConfigError("portrait box must satisfy x_min < x_max and w_min < w_max")
    if cfg["nx"] < 2 or cfg["ny"] < 2 or cfg["manifold_points"] < 2:
        raise ConfigError("portrait grid density must be at least 2 points per axis")
    f = comoving_field(p)
    field_rows = []
    for w in np.linspace(w_min, w_max, cfg["ny"]):
        for x in np.linspace(x_min, x_max, cfg["nx"]):
            dx, dw = f(0.0, np.array([x, w]))
            field_rows.append([x, w, dx, dw])
    xs = np.linspace(x_min, x_max, cfg["manifold_points"])
    man_rows = [[x, critical_manifold(x, cfg["family"]), "manifold"] for x in xs]
    man_rows += [[fp.x1, fp.w, "fold"] for fp in fold_points(cfg["family"], p) if x_min <= fp.x1 <= x_max]

    out = Path(cfg["out"])
    man_out = out.with_name(f"{out.stem}.manifold{out.suffix}")
    write_table(out, cfg["format"], ["x1", "w", "dx1", "dw"], field_rows)
    write_table(man_out, cfg["format"], ["x1", "w", "kind"], man_rows)
    wall = time.perf_counter() - t_start
    write_manifest(out, "portrait", cfg, wall)
    write_manifest(man_out, "portrait", cfg, wall)
    return EXIT_OK


HANDLERS = {
    "simulate": cmd_simulate,
    "hopf": cmd_hopf,
    "sweep": cmd_sweep,
    "portrait": cmd_portrait,
}


# -- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", type=Path, help="key = value file or a run manifest")
    g.add_argument("--out", help="output path (default: <command>.<format>)")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--seed-perturbation", type=float, dest="perturbation",
                   help="initial offset of the cycle search from the equilibrium")
    g.add_argument("--rtol", type=float)
    g.add_argument("--atol", type=float)
    g.add_argument("--workers", type=int, help="sweep pool size when warm start is off (0: all CPUs)")
    g.add_argument("--warm-start", choices=("on", "off"))
    g.add_argument("--tipping-radius", type=float,
                   help="add a 'tipped' column flagging max_distance > R")
    m = common.add_argument_group("model options")
    m.add_argument("--family", choices=[f.value for f in Family])
    m.add_argument("--epsilon", help="time-scale ratio; comma list for sweeps")
    m.add_argument("--rate", dest="r", type=float, help="forcing rate r")
    m.add_argument("--N", type=int, help="polynomial degree (ashwin)")
    m.add_argument("--alpha", type=float, help="equilibrium offset (vdp)")
    m.add_argument("--grid", dest="r_grid", help="rate grid: start:stop:count or comma list")
    m.add_argument("--t-end", dest="t1", type=float, help="simulation end time")
    m.add_argument("--comoving", action="store_const", const=True, default=None,
                   help="simulate the co-moving (x1, w) system")
    m.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key; repeatable")

    parser = argparse.ArgumentParser(
        prog="ratetip",
        description="Rate-induced tipping in fast/slow systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "integrate the full or co-moving system and write the trajectory",
        "hopf": "locate the Hopf point analytically and numerically",
        "sweep": "converge limit cycles over a rate grid",
        "portrait": "export the co-moving vector field and critical manifold",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


_FLAG_KEYS = (
    "out", "format", "perturbation", "rtol", "atol", "workers", "warm_start",
    "tipping_radius", "family", "epsilon", "r", "N", "alpha", "r_grid", "t1", "comoving",
)


def _flag_layer(args: argparse.Namespace) -> dict[str, Any]:
    layer = {k: getattr(args, k) for k in _FLAG_KEYS if getattr(args, k) is not None}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        layer[key.strip()] = value.strip()
    return layer


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        layers = []
        if args.config is not None:
            try:
                layers.append(parse_config_text(args.config.read_text()))
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"bad manifest JSON: {exc}") from None
        layers.append(_flag_layer(args))
        cfg = resolve_config(layers)
        if cfg["out"] is None:
            cfg["out"] = _default_out(args.command, cfg)
        return HANDLERS[args.command](cfg)
    except (ConfigError, InvalidParameters) as exc:
        print(f"ratetip: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationFailure as exc:
        print(f"ratetip: integration failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except BracketFailure as exc:
        print(f"ratetip: bracket failure: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    except RateTipError as exc:
        print(f"ratetip: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
