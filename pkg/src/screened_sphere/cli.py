"""Command-line front end: orbits, closure, turning points, brackets, spectra.

Commands
--------
orbit     integrate an orbit, write the trajectory table, report closure
closure   rational-alpha closure analysis for given Lz
turning   turning-point conservation report for an integrated orbit
brackets  Higgs-algebra bracket residuals over seeded random states
spectrum  analytic (optionally grid-oracle) energy levels

A ``--config`` file with ``key=value`` lines supplies defaults for any
long option; explicit flags win.  All floating output is printed with 17
significant digits and files are written atomically, so identical inputs
(including ``--seed``) give byte-identical outputs.  Exit status: 0 on
success, 2 on usage errors, 3 on domain errors (one ``CODE: message``
line on stderr).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Optional, Sequence

from .conserved import turning_point_conservation, verify_coulomb_algebra, verify_oscillator_algebra
from .dynamics import (
    PhaseState,
    SystemKind,
    SystemParams,
    closure_analysis,
    find_turning_points,
    integrate,
    turning_points_json,
)
from .errors import DomainError, ImaginaryAlphaError
from .spectra import spectrum_csv, spectrum_entries


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _json(obj, indent: int = 0) -> str:
    """Minimal JSON writer with deterministic 17-significant-digit floats."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  "{k}": {_json(v, indent + 1)}' for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ",\n".join(f"{pad}  {_json(v, indent + 1)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return _fmt(obj)


def _write_output(path: str, text: str) -> None:
    """Write to stdout for '-', otherwise atomically via temp file + rename."""
    if path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _strip_header_csv(text: str) -> str:
    """Gnuplot mode: drop the header line and use space-separated columns."""
    lines = text.splitlines()[1:]
    return "\n".join(line.replace(",", " ") for line in lines) + "\n"


@dataclass
class RunConfig:
    """Resolved options of one CLI invocation."""

    command: str
    system: Optional[str] = None
    lam: float = 0.0
    k: float = 0.0
    x: Optional[float] = None
    y: float = 0.0
    px: Optional[float] = None
    py: Optional[float] = None
    t_end: Optional[float] = None
    tol: float = 1e-10
    samples: int = 1000
    n_samples: int = 4001
    lz: Optional[float] = None
    m: str = "0"
    n: str = "0"
    numeric: bool = False
    seed: int = 0
    method: str = "analytic"
    out: str = "-"
    fmt: Optional[str] = None
    gnuplot: bool = False
    turning_out: Optional[str] = None


class UsageError(Exception):
    """Missing or malformed flags; maps to exit status 2."""


def _params(cfg: RunConfig) -> SystemParams:
    return SystemParams(kind=SystemKind(cfg.system), lam=cfg.lam, k=cfg.k)


def _state(cfg: RunConfig) -> PhaseState:
    missing = [n for n, v in (("x", cfg.x), ("px", cfg.px), ("py", cfg.py)) if v is None]
    if missing:
        raise UsageError(f"missing initial-condition flags: {', '.join('--' + m for m in missing)}")
    return PhaseState(cfg.x, cfg.y, cfg.px, cfg.py)


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in str(text).split(",") if tok != ""]


def _cmd_orbit(cfg: RunConfig) -> int:
    params = _params(cfg)
    traj = integrate(
        _state(cfg), params, t_end=cfg.t_end, rel_tol=cfg.tol, n_samples=cfg.n_samples
    )
    points = find_turning_points(traj)
    csv = traj.to_csv()
    _write_output(cfg.out, _strip_header_csv(csv) if cfg.gnuplot else csv)
    if cfg.turning_out:
        _write_output(cfg.turning_out, _json(turning_points_json(points)) + "\n")
    try:
        closure = closure_analysis(params, float(traj.Lz[0]))
        summary = f"closure: alpha={_fmt(closure.alpha)} closed={_fmt(closure.closed)}"
        if closure.closed:
            summary += f" p={closure.p} q={closure.q} delta_theta={_fmt(closure.closure_angle)}"
    except ImaginaryAlphaError:
        summary = "closure: alpha imaginary (2k >= Lz**2)"
    if points:
        summary += f"; turning_points={len(points)}"
    elif traj.circular:
        summary += "; circular orbit"
    print(summary, file=sys.stderr)
    return 0


def _cmd_closure(cfg: RunConfig) -> int:
    if cfg.lz is None:
        raise UsageError("closure requires --Lz")
    result = closure_analysis(_params(cfg), cfg.lz)
    _write_output(cfg.out, _json(result.to_dict()) + "\n")
    return 0


def _cmd_turning(cfg: RunConfig) -> int:
    params = _params(cfg)
    traj = integrate(
        _state(cfg), params, t_end=cfg.t_end, rel_tol=cfg.tol, n_samples=cfg.n_samples
    )
    report = turning_point_conservation(traj, params)
    _write_output(cfg.out, _json(report.to_dict()) + "\n")
    return 0


def _cmd_brackets(cfg: RunConfig) -> int:
    params = _params(cfg)
    verify = (
        verify_coulomb_algebra
        if params.kind is SystemKind.COULOMB
        else verify_oscillator_algebra
    )
    reports = verify(params, n_samples=cfg.samples, seed=cfg.seed, method=cfg.method)
    _write_output(cfg.out, _json([r.to_dict() for r in reports]) + "\n")
    return 0


def _cmd_spectrum(cfg: RunConfig) -> int:
    params = _params(cfg)
    entries = spectrum_entries(
        params.kind,
        cfg.lam,
        cfg.k,
        ms=_int_list(cfg.m),
        ns=_int_list(cfg.n),
        numeric=cfg.numeric,
    )
    fmt = cfg.fmt or "csv"
    if fmt == "json":
        text = _json([e.to_dict() for e in entries]) + "\n"
    else:
        text = spectrum_csv(entries)
        if cfg.gnuplot:
            text = _strip_header_csv(text)
    _write_output(cfg.out, text)
    return 0


_COMMANDS = {
    "orbit": _cmd_orbit,
    "closure": _cmd_closure,
    "turning": _cmd_turning,
    "brackets": _cmd_brackets,
    "spectrum": _cmd_spectrum,
}


def run(cfg: RunConfig) -> int:
    """Execute a resolved configuration; returns the process exit status."""
    return _COMMANDS[cfg.command](cfg)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file supplying option defaults")
    p.add_argument("--system", choices=["coulomb", "oscillator"], help="potential kind")
    p.add_argument("--lambda", dest="lam", type=float, help="sphere curvature (>= 0)")
    p.add_argument("--k", type=float, help="screening strength (>= 0)")
    p.add_argument("--out", help="output path, '-' for stdout (default)")
    p.add_argument("--format", dest="fmt", choices=["csv", "json"], help="output format")
    p.add_argument("--gnuplot", action="store_true", default=None,
                   help="space-separated columns without header")


def _add_state(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x", type=float, help="initial x1")
    p.add_argument("--y", type=float, help="initial x2 (default 0)")
    p.add_argument("--px", type=float, help="initial p1")
    p.add_argument("--py", type=float, help="initial p2")
    p.add_argument("--t-end", dest="t_end", type=float, help="integration time")
    p.add_argument("--tol", type=float, help="integrator relative tolerance (default 1e-10)")
    p.add_argument("--trajectory-samples", dest="n_samples", type=int,
                   help="number of recorded samples (default 4001)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="screened-sphere",
        description="Screened Coulomb/oscillator systems on a sphere: orbits, brackets, spectra.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_orbit = sub.add_parser("orbit", help="integrate an orbit and export the trajectory")
    _add_common(p_orbit)
    _add_state(p_orbit)
    p_orbit.add_argument("--turning-out", dest="turning_out",
                         help="also write turning points as JSON to this path")

    p_closure = sub.add_parser("closure", help="rational-alpha closure analysis")
    _add_common(p_closure)
    p_closure.add_argument("--Lz", dest="lz", type=float, help="angular momentum")

    p_turn = sub.add_parser("turning", help="turning-point conservation report")
    _add_common(p_turn)
    _add_state(p_turn)

    p_br = sub.add_parser("brackets", help="bracket-identity residuals over random states")
    _add_common(p_br)
    p_br.add_argument("--samples", type=int, help="number of sampled states (default 1000)")
    p_br.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p_br.add_argument("--method", choices=["analytic", "fd"], help="gradient mode")

    p_sp = sub.add_parser("spectrum", help="energy levels, analytic and grid-oracle")
    _add_common(p_sp)
    p_sp.add_argument("--m", help="angular quantum number(s), comma separated")
    p_sp.add_argument("--N", dest="n", help="radial index(es), comma separated")
    p_sp.add_argument("--numeric", action="store_true", default=None,
                      help="add finite-difference oracle energies")
    return parser


def _load_config_file(path: str) -> dict:
    values: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DomainError(f"bad config line (want key=value): {line!r}")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values

_CONFIG_KEYS = {
    "system": str, "lambda": float, "k": float, "x": float, "y": float,
    "px": float, "py": float, "t-end": float, "tol": float,
    "trajectory-samples": int, "turning-out": str, "Lz": float,
    "samples": int, "seed": int, "method": str, "m": str, "N": str,
    "numeric": bool, "out": str, "format": str, "gnuplot": bool,
}

_KEY_TO_DEST = {
    "lambda": "lam", "t-end": "t_end", "trajectory-samples": "n_samples",
    "turning-out": "turning_out", "Lz": "lz", "N": "n", "format": "fmt",
}


def _apply_config(args: argparse.Namespace) -> None:
    """Fill unset options from the config file; explicit flags keep priority."""
    if not getattr(args, "config", None):
        return
    for key, raw in _load_config_file(args.config).items():
        if key not in _CONFIG_KEYS:
            raise DomainError(f"unknown config key {key!r}")
        dest = _KEY_TO_DEST.get(key, key)
        if getattr(args, dest, None) is not None:
            continue
        caster = _CONFIG_KEYS[key]
        value = raw.lower() in ("1", "true", "yes") if caster is bool else caster(raw)
        setattr(args, dest, value)


_DEFAULTS = {
    "lam": 0.0, "k": 0.0, "y": 0.0, "tol": 1e-10, "n_samples": 4001,
    "samples": 1000, "seed": 0, "method": "analytic", "m": "0", "n": "0",
    "numeric": False, "out": "-", "gnuplot": False,
}


def _resolve(args: argparse.Namespace) -> RunConfig:
    _apply_config(args)
    cfg = RunConfig(command=args.command)
    for field_name in vars(cfg):
        if field_name == "command":
            continue
        value = getattr(args, field_name, None)
        if value is None:
            value = _DEFAULTS.get(field_name, getattr(cfg, field_name))
        setattr(cfg, field_name, value)
    if cfg.command in ("orbit", "turning") and cfg.t_end is None:
        raise UsageError("missing --t-end")
    if cfg.system is None:
        raise UsageError("missing --system")
    if not (math.isfinite(cfg.tol) and 1e-13 <= cfg.tol <= 1e-6):
        raise UsageError(f"--tol must lie in [1e-13, 1e-6], got {cfg.tol:g}")
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        return run(cfg)
    except UsageError as exc:
        parser.error(str(exc))  # prints usage, raises SystemExit(2)
    except DomainError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"ERR_DOMAIN: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
