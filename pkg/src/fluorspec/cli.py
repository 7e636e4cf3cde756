"""Command-line entry point: run a pipeline and write CSV or JSON to stdout or a file.

Exit codes: 0 success, 2 invalid arguments, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .core import NumericalFailure, stationary_state, validate_params
from .correlation import conditional_correlation, correlation_closed, mollow_correlation
from .field import weight_tensor
from .spectrum import (
    audit,
    default_delta_grid,
    default_tau_grid,
    find_peaks,
    spectrum_field,
    spectrum_mollow_closedform,
    spectrum_numeric,
    sweep_peak_heights,
)
from .trajectory import estimate_stationary, simulate_ensemble

SCHEMA_VERSION = "1.0"
DEFAULT_SWEEP = "0.01,0.02,0.05,0.1,0.2,0.5,1,2,4,8"
JSON_ONLY = ("peaks", "audit")



@dataclass
class RunConfig:
    command: str
    gamma: float
    rabi: float  # units of gamma
    omega0: float
    tau_max: float  # units of 1/gamma
    tau_steps: int
    delta_span: float  # units of gamma
    delta_steps: int
    seed: int
    format: str
    normalized: bool
    numeric: bool
    method: str
    position: tuple
    rabi_list: tuple
    trajectories: int
    t_max: float  # units of 1/gamma
    dt: float  # units of 1/gamma
    initial: str
    threads: int


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("system and grids")
    g.add_argument("--gamma", type=float, default=1e8, help="decay rate, rad/s")
    g.add_argument("--rabi", type=float, default=4.0, help="Rabi frequency in units of gamma")
    g.add_argument("--omega0", type=float, default=1e15, help="transition frequency, rad/s")
    g.add_argument("--tau-max", type=float, default=40.0, help="correlation window in units of 1/gamma")
    g.add_argument("--tau-steps", type=int, default=4000, help="number of tau intervals (even)")
    g.add_argument("--delta-span", type=float, default=32.0, help="detuning half-range in units of gamma")
    g.add_argument("--delta-steps", type=int, default=2001, help="number of detuning points")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=("csv", "json"), default=None)
    g.add_argument("--normalized", action="store_true", help="divide spectra by their delta=0 value")
    g.add_argument("--out", metavar="PATH", default=None)

    parser = argparse.ArgumentParser(prog="fluorspec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fluorspec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("spectrum", "field power spectrum"), ("mollow", "Mollow spectrum")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--numeric", action="store_true", help="transform the correlation function numerically")
    p = sub.add_parser("correlation", parents=[common], help="conditional correlation envelope")
    p.add_argument("--method", choices=("closed", "pipeline", "mollow"), default="closed")
    p = sub.add_parser("peaks", parents=[common], help="peak positions, heights and widths")
    p.add_argument("--which", choices=("field", "mollow"), default="field")
    p.add_argument("--numeric", action="store_true")
    p = sub.add_parser("sweep", parents=[common], help="delta=0 spectral heights against Rabi frequency")
    p.add_argument("--rabi-list", type=_floats, default=_floats(DEFAULT_SWEEP), help="units of gamma, ascending")
    p = sub.add_parser("field", parents=[common], help="field weight tensor at a detector position")
    p.add_argument("--position", type=_floats, default=(1e-6, 0.0, 0.0), help="x,y,z in metres")
    p = sub.add_parser("trajectory", parents=[common], help="quantum-jump estimate of the stationary state")
    p.add_argument("--trajectories", type=int, default=100)
    p.add_argument("--t-max", type=float, default=1000.0, help="units of 1/gamma")
    p.add_argument("--dt", type=float, default=0.01, help="units of 1/gamma")
    p.add_argument("--initial", choices=("ground", "excited"), default="ground")
    sub.add_parser("audit", parents=[common], help="closed-form versus numeric spectra")
    return parser


def _threads() -> int:
    raw = os.environ.get("THREADS")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"THREADS must be a positive integer, got {raw!r}")
    return n


def make_config(ns: argparse.Namespace) -> RunConfig:
    fmt = ns.format or ("json" if ns.command in JSON_ONLY else "csv")
    if ns.command in JSON_ONLY and fmt != "json":
        raise ValueError(f"{ns.command} output is JSON only")
    if ns.tau_steps < 2 or ns.tau_steps % 2:
        raise ValueError("--tau-steps must be an even integer >= 2")
    if ns.delta_steps < 3:
        raise ValueError("--delta-steps must be >= 3")
    for name in ("tau_max", "delta_span"):
        v = getattr(ns, name)
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"--{name.replace('_', '-')} must be positive")
    if not 0 <= ns.seed < 2**64:
        raise ValueError("--seed must be a 64-bit unsigned integer")
    position = tuple(getattr(ns, "position", ()) or ())
    if ns.command == "field" and len(position) != 3:
        raise ValueError("--position needs three components x,y,z")
    return RunConfig(
        command=ns.command,
        gamma=ns.gamma,
        rabi=ns.rabi,
        omega0=ns.omega0,
        tau_max=ns.tau_max,
        tau_steps=ns.tau_steps,
        delta_span=ns.delta_span,
        delta_steps=ns.delta_steps,
        seed=ns.seed,
        format=fmt,
        normalized=ns.normalized,
        numeric=getattr(ns, "numeric", False),
        method=getattr(ns, "method", getattr(ns, "which", "")),
        position=position,
        rabi_list=tuple(getattr(ns, "rabi_list", ()) or ()),
        trajectories=getattr(ns, "trajectories", 0),
        t_max=getattr(ns, "t_max", 0.0),
        dt=getattr(ns, "dt", 0.0),
        initial=getattr(ns, "initial", ""),
        threads=_threads(),
    )


# --------------------------------------------------------------------------
# pipelines; each returns (columns dict, extra JSON payload or None)


def _params(cfg: RunConfig):
    return validate_params(cfg.gamma, cfg.rabi * cfg.gamma, cfg.omega0)


def _grids(cfg: RunConfig, params):
    return (
        default_tau_grid(params, cfg.tau_max, cfg.tau_steps),
        default_delta_grid(params, cfg.delta_span, cfg.delta_steps),
    )


def _spectrum(cfg: RunConfig, kind: str):
    params = _params(cfg)
    tau, delta = _grids(cfg, params)
    if cfg.numeric:
        env = correlation_closed(params, tau) if kind == "field" else mollow_correlation(params, tau)
        series = spectrum_numeric(env, delta, params)
    else:
        series = (spectrum_field if kind == "field" else spectrum_mollow_closedform)(params, delta)
    if cfg.normalized:
        series = series.normalize()
    return series


def run_spectrum(cfg):
    series = _spectrum(cfg, "field" if cfg.command == "spectrum" else "mollow")
    return {"delta": series.delta, "S": series.values}, None


def run_correlation(cfg):
    params = _params(cfg)
    tau, _ = _grids(cfg, params)
    if cfg.method == "mollow":
        env = mollow_correlation(params, tau)
        return {"tau": tau, "envelope_re": env.values.real, "envelope_im": env.values.imag}, None
    env = conditional_correlation(params, tau) if cfg.method == "pipeline" else correlation_closed(params, tau)
    return {"tau": tau, "envelope": env.values}, None


def run_peaks(cfg):
    report = find_peaks(_spectrum(cfg, cfg.method))
    return None, report.as_dict()


def run_sweep(cfg):
    params = _params(cfg)
    rabi = np.asarray(cfg.rabi_list)
    table = sweep_peak_heights(params, rabi * params.gamma)
    S, M = table.field_peak, table.mollow_peak
    if cfg.normalized:
        S, M = S / S[0], M / np.max(M)
    return {"rabi": rabi, "S_peak": S, "SMol_peak": M}, None


def run_field(cfg):
    params = _params(cfg)
    w = weight_tensor(np.array(cfg.position), params.omega0)
    i, j = np.divmod(np.arange(9), 3)
    return {"i": i, "j": j, "w": w.tensor.ravel()}, None


def run_trajectory(cfg):
    params = _params(cfg)
    g = params.gamma
    trajs = simulate_ensemble(
        params, cfg.trajectories, cfg.t_max / g, cfg.dt / g, cfg.seed, initial=cfg.initial, workers=cfg.threads
    )
    est = estimate_stationary(trajs, gamma=g)
    ss = stationary_state(params)
    names = ["p00", "re01", "im01", "jump_rate"]
    exact = [ss.p00, ss.re01, ss.im01, g * (1.0 - ss.p00)]
    return {
        "quantity": names,
        "estimate": [getattr(est, n) for n in names],
        "stderr": [getattr(est, n + "_err") for n in names],
        "stationary": exact,
    }, None


def run_audit(cfg):
    params = _params(cfg)
    tau, delta = _grids(cfg, params)
    return None, audit(params, tau, delta).as_dict()


RUNNERS = {
    "spectrum": run_spectrum,
    "mollow": run_spectrum,
    "correlation": run_correlation,
    "peaks": run_peaks,
    "sweep": run_sweep,
    "field": run_field,
    "trajectory": run_trajectory,
    "audit": run_audit,
}


# --------------------------------------------------------------------------
# serialisation


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.17g}"


def _plain(obj):
    """Convert numpy scalars/arrays to JSON-native values; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def render(cfg: RunConfig, columns: dict | None, payload: dict | None) -> str:
    config = asdict(cfg)
    if cfg.format == "json":
        data = payload if payload is not None else {"columns": columns}
        doc = {
            "schema_version": SCHEMA_VERSION,
            "program": f"fluorspec {__version__}",
            "command": cfg.command,
            "config": config,
            "data": data,
        }
        return json.dumps(_plain(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"
    buf = io.StringIO()
    echo = " ".join(f"{k}={_fmt_config(v)}" for k, v in config.items())
    buf.write(f"# fluorspec {__version__} {echo}\n")
    names = list(columns)
    buf.write(",".join(names) + "\n")
    for row in zip(*(columns[n] for n in names)):
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _fmt_config(v) -> str:
    if isinstance(v, tuple):
        return ";".join(_fmt(x) for x in v) or "-"
    if isinstance(v, bool):
        return str(v).lower()
    if v == "":
        return "-"
    return _fmt(v)


def _diag(msg: str):
    sys.stderr.write(f"fluorspec: {msg}\n")


def _show_warning(message, category, filename, lineno, file=None, line=None):
    _diag(f"{category.__name__}: {message}")


def _run(ns) -> tuple:
    try:
        cfg = make_config(ns)
        columns, payload = RUNNERS[cfg.command](cfg)
        return 0, render(cfg, columns, payload)
    except NumericalFailure as exc:
        _diag(f"numerical failure: {exc}")
        return 3, None
    except ValueError as exc:
        _diag(f"invalid arguments: {exc}")
        return 2, None


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)  # exits with 2 on malformed flags
    with warnings.catch_warnings():
        warnings.showwarning = _show_warning
        code, text = _run(ns)
    if code:
        return code
    if ns.out:
        with open(ns.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
