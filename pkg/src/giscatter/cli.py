"""Command-line entry point.

Subcommands: direct, reflectionless, marchenko, evolve, roundtrip, validate.
Every run prints a JSON summary on stdout and writes its artifacts
atomically into the output directory.  Exit codes: 0 success, 1 failed
validation, 2 invalid configuration or input, 3 numerical failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .direct import (BoundStateSearchError, ScatteringData, SystemKind, cross_system_check,
                     evaluation_point_spread, jost_relation_check, jost_table, locate_bound_states,
                     parity_check, scattering_coefficients, wronskian_constancy)
from .evolution import gi_residual, soliton_snapshot
from .marchenko import (FourierTailError, NystromError, assemble_kernels, fourier_reflection,
                        recover_potentials, solve_marchenko_grid)
from .numerics import IntegrationError
from .potentials import (Grid1D, PotentialError, PotentialPair, compute_gauge, gaussian_pair,
                         read_pair_csv, single_soliton_pair, write_pair_csv, zero_pair)
from .reflectionless import SingularGammaError, reflectionless_gauge, reflectionless_potentials
from .triplets import TripletError, TripletPair, triplet_pair_from_json

log = logging.getLogger("giscatter")

OUT_ENV = "GISCATTER_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4
SUBCOMMANDS = ("direct", "reflectionless", "marchenko", "evolve", "roundtrip", "validate")
POTENTIALS = ("gaussian", "soliton", "zero", "csv")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration

def _triple(text, name: str, integer_last: bool = True) -> Tuple[float, float, int]:
    if isinstance(text, str):
        parts = text.split(",")
    else:
        parts = list(text)
    if len(parts) != 3:
        raise ConfigError(f"{name} needs three comma-separated values: min,max,n")
    try:
        a, b = float(parts[0]), float(parts[1])
        n = int(parts[2])
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse {name} {text!r}") from None
    if float(parts[2]) != n:
        raise ConfigError(f"{name}: n must be an integer")
    return a, b, n


@dataclass
class RunConfig:
    command: str
    grid: Tuple[float, float, int] = (-8.0, 8.0, 1601)
    lambda_grid: Tuple[float, float, int] = (-12.0, 12.0, 481)
    tol_ode: float = 1e-10
    atol_ode: float = 1e-12
    tol_quad: float = 1e-8
    tail_tol: float = 1e-9
    cond_cap: float = 1e10
    nodes_h: float = 0.1
    rule: str = "gregory"
    anchors: Optional[Tuple[float, float, int]] = (-4.0, 4.0, 161)
    potential: str = "gaussian"
    amplitude: float = 0.3
    r_amplitude: Optional[float] = None
    width: float = 1.0
    center: float = 0.0
    input: Optional[str] = None
    scattering: Optional[str] = None
    triplets: Optional[str] = None
    times: Tuple[float, ...] = (0.0,)
    delta: float = 1e-3
    out: str = "out"
    seed: int = 0
    bound_state_box: Tuple[float, float, float, float] = (-4.0, 4.0, 0.05, 4.0)
    search_bound_states: bool = False

    def validate(self) -> "RunConfig":
        if self.command not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.command!r}")
        try:
            Grid1D(*self.grid)
            if self.anchors is not None:
                Grid1D(*self.anchors)
        except (ValueError, PotentialError) as exc:
            raise ConfigError(f"invalid grid: {exc}") from None
        lmin, lmax, ln = self.lambda_grid
        if not (lmax > lmin and ln >= 2):
            raise ConfigError("lambda grid needs max > min and n >= 2")
        for name in ("tol_ode", "atol_ode", "tol_quad", "tail_tol", "cond_cap", "nodes_h", "delta"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive")
        if self.rule not in ("simpson", "gregory"):
            raise ConfigError("rule must be simpson or gregory")
        if self.potential not in POTENTIALS:
            raise ConfigError(f"potential must be one of {POTENTIALS}")
        if self.potential == "csv" and not self.input and self.command in ("direct", "roundtrip", "validate"):
            raise ConfigError("potential csv needs --input")
        re0, re1, im0, im1 = self.bound_state_box
        if not (re1 > re0 and im1 > im0 > 0):
            raise ConfigError("bound-state box must be re_min,re_max,im_min,im_max with 0 < im_min < im_max")
        out = os.path.abspath(self.out)
        for name in ("input", "scattering", "triplets"):
            p = getattr(self, name)
            if p and os.path.abspath(p) == out:
                raise ConfigError(f"{name} path coincides with the output directory")
        return self

    @property
    def x_grid(self) -> Grid1D:
        return Grid1D(*self.grid)

    @property
    def lambdas(self) -> np.ndarray:
        a, b, n = self.lambda_grid
        return np.linspace(a, b, n)


def _apply_config_file(cfg: RunConfig, path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in fields(RunConfig)} - {"command"}
    updates = {}
    for key, value in data.items():
        k = key.replace("-", "_")
        if k not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if k in ("grid", "lambda_grid", "anchors") and value is not None:
            value = _triple(value, k)
        elif k == "times":
            value = tuple(float(v) for v in value)
        elif k == "bound_state_box":
            value = tuple(float(v) for v in value)
        updates[k] = value
    return replace(cfg, **updates)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", help="x grid as xmin,xmax,n")
    common.add_argument("--lambda-grid", help="real lambda grid as lmin,lmax,n")
    common.add_argument("--tol-ode", type=float, help="relative tolerance of the Jost integrator")
    common.add_argument("--atol-ode", type=float, help="absolute tolerance of the Jost integrator")
    common.add_argument("--tol-quad", type=float, help="quadrature and Fourier-tail tolerance")
    common.add_argument("--tail-tol", type=float, help="Marchenko kernel truncation tolerance")
    common.add_argument("--cond-cap", type=float, help="largest accepted Nystrom condition number")
    common.add_argument("--nodes-h", type=float, help="Marchenko node spacing")
    common.add_argument("--rule", choices=("simpson", "gregory"), help="Marchenko quadrature rule")
    common.add_argument("--anchors", help="Marchenko anchor grid xmin,xmax,n (default -4,4,161)")
    common.add_argument("--potential", choices=POTENTIALS, help="named potential pair")
    common.add_argument("--amplitude", type=float)
    common.add_argument("--r-amplitude", type=float)
    common.add_argument("--width", type=float)
    common.add_argument("--center", type=float)
    common.add_argument("--input", help="potential CSV (x,re_q,im_q,re_r,im_r)")
    common.add_argument("--scattering", help="scattering-data JSON written by 'direct'")
    common.add_argument("--triplets", help="bound-state triplet JSON")
    common.add_argument("--times", help="comma-separated times for 'evolve'")
    common.add_argument("--delta", type=float, help="time step of the residual check")
    common.add_argument("--search-bound-states", action="store_true", default=None)
    common.add_argument("--out", help=f"output directory (environment {OUT_ENV} overrides)")
    common.add_argument("--config", help="JSON file whose keys override the flags")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="giscatter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "direct": "scattering coefficients of a potential pair",
        "reflectionless": "closed-form potentials from triplets",
        "marchenko": "potentials from scattering data by the Marchenko method",
        "evolve": "time-evolved soliton potentials and the evolution residual",
        "roundtrip": "direct scattering followed by Marchenko inversion",
        "validate": "check the scattering identities for a potential pair",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(args.command)
    upd = {}
    for name in ("grid", "lambda_grid", "anchors"):
        v = getattr(args, name)
        if v is not None:
            upd[name] = _triple(v, "--" + name.replace("_", "-"))
    for name in ("tol_ode", "atol_ode", "tol_quad", "tail_tol", "cond_cap", "nodes_h", "rule", "potential",
                 "amplitude", "r_amplitude", "width", "center", "input", "scattering", "triplets",
                 "delta", "out", "seed", "search_bound_states"):
        v = getattr(args, name)
        if v is not None:
            upd[name] = v
    if args.times is not None:
        try:
            upd["times"] = tuple(float(t) for t in args.times.split(","))
        except ValueError:
            raise ConfigError(f"cannot parse --times {args.times!r}") from None
    cfg = replace(cfg, **upd)
    if args.config:
        cfg = _apply_config_file(cfg, args.config)
    env = os.environ.get(OUT_ENV)
    if env:
        cfg = replace(cfg, out=env)
    return cfg.validate()


# ---------------------------------------------------------------------------
# output

def _num(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    return format(v, ".17g")


def _encode(obj) -> str:
    """JSON with complex numbers as [re, im] and floats at 17 significant digits."""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_num(obj.real)}, {_num(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    return _encode(obj)


def atomic_write(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory and rename into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _pair_csv(p: PotentialPair) -> str:
    buf = io.StringIO()
    write_pair_csv(p, buf)
    return buf.getvalue()


def _complex_list(a) -> list:
    return [complex(v) for v in np.asarray(a).ravel()]


def scattering_to_json(sd: ScatteringData, grid: Optional[Grid1D] = None) -> dict:
    out = {"kind": sd.kind.value, "lambda": [float(v) for v in sd.lambda_grid]}
    for name in ("T", "Tbar", "R", "Rbar", "L", "Lbar", "R_over_zeta", "Rbar_over_zeta",
                 "L_over_zeta", "Lbar_over_zeta"):
        v = getattr(sd, name)
        if v is not None:
            out[name] = _complex_list(v)
    out["flagged"] = [bool(f) for f in sd.flagged] if sd.flagged is not None else None
    if grid is not None:
        out["grid"] = [grid.x_min, grid.x_max, grid.n]
    return out


def scattering_from_json(obj: dict) -> ScatteringData:
    try:
        lam = np.array(obj["lambda"], dtype=float)
        kind = SystemKind(obj.get("kind", "gi"))

        def arr(name, default=None):
            if name not in obj or obj[name] is None:
                return default
            v = np.array(obj[name], dtype=float)
            if v.shape != (lam.size, 2):
                raise ConfigError(f"field {name} must hold one [re, im] pair per lambda")
            return v[:, 0] + 1j * v[:, 1]
        zero = np.zeros(lam.size, dtype=complex)
        one = np.ones(lam.size, dtype=complex)
        R_z, Rb_z = arr("R_over_zeta"), arr("Rbar_over_zeta")
        if R_z is None or Rb_z is None:
            raise ConfigError("scattering JSON needs R_over_zeta and Rbar_over_zeta")
        flagged = obj.get("flagged")
        return ScatteringData(kind, lam, arr("T", one), arr("Tbar", one), arr("R", zero), arr("Rbar", zero),
                              arr("L", zero), arr("Lbar", zero), R_z, Rb_z, arr("L_over_zeta"),
                              arr("Lbar_over_zeta"),
                              None if flagged is None else np.array(flagged, dtype=bool))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed scattering JSON: {exc}") from None


# ---------------------------------------------------------------------------
# inputs

def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def load_potential(cfg: RunConfig) -> PotentialPair:
    g = cfg.x_grid
    if cfg.potential == "csv":
        try:
            return read_pair_csv(io.StringIO(_read_text(cfg.input)))
        except PotentialError as exc:
            raise ConfigError(str(exc)) from None
    if cfg.potential == "zero":
        return zero_pair(g)
    if cfg.potential == "soliton":
        return single_soliton_pair(g)
    return gaussian_pair(g, amplitude=cfg.amplitude, width=cfg.width, center=cfg.center,
                         r_amplitude=cfg.r_amplitude)


def load_triplets(cfg: RunConfig, required: bool = True) -> TripletPair:
    if not cfg.triplets:
        if required:
            raise ConfigError("this subcommand needs --triplets")
        return TripletPair.empty()
    text = _read_text(cfg.triplets)
    try:
        return triplet_pair_from_json(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"triplet file is not valid JSON: {exc}") from None


# ---------------------------------------------------------------------------
# pipelines

def _max_rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = float(np.max(np.abs(b)))
    return float(np.max(np.abs(a - b)) / scale) if scale > 0 else float(np.max(np.abs(a)))


def run_direct(cfg: RunConfig, out: Path) -> Tuple[dict, int]:
    p = load_potential(cfg)
    summary: Dict[str, object] = {}
    if cfg.search_bound_states:
        found = locate_bound_states(p, cfg.bound_state_box, rtol=cfg.tol_ode, atol=cfg.atol_ode)
        summary["bound_states"] = [{"lambda": z, "multiplicity": m} for z, m in found]
    sd = scattering_coefficients(SystemKind.GI, p, cfg.lambdas, rtol=cfg.tol_ode, atol=cfg.atol_ode)
    data = scattering_to_json(sd, p.grid)
    if "bound_states" in summary:
        data["bound_states"] = summary["bound_states"]
    atomic_write(out / "scattering.json", dumps(data) + "\n")
    summary.update({
        "files": ["scattering.json"],
        "max_abs_T_minus_1": float(np.max(np.abs(sd.T - 1))),
        "max_abs_R": float(np.max(np.abs(sd.R))),
        "unitarity_residual": sd.unitarity_residual(),
        "left_right_residual": sd.left_right_residual(),
        "flagged": int(np.count_nonzero(sd.flagged)),
    })
    return summary, EXIT_OK


def run_reflectionless(cfg: RunConfig, out: Path) -> Tuple[dict, int]:
    tp = load_triplets(cfg)
    g = cfg.x_grid
    p = reflectionless_potentials(tp, g)
    gauge = reflectionless_gauge(tp, g)
    atomic_write(out / "potentials.csv", _pair_csv(p))
    gd = {"mu": gauge.mu, "E_first": complex(gauge.E.values[0]), "E_last": complex(gauge.E.values[-1]),
          "exp_i_mu_half": complex(np.exp(0.5j * gauge.mu))}
    atomic_write(out / "gauge.json", dumps(gd) + "\n")
    summary = {"files": ["potentials.csv", "gauge.json"], "mu": gauge.mu,
               "max_abs_q": p.q.max_abs(), "max_abs_r": p.r.max_abs(),
               "r_minus_conj_q": float(np.max(np.abs(p.r.values - np.conj(p.q.values))))}
    return summary, EXIT_OK


def _invert(cfg: RunConfig, sd: ScatteringData, tp: TripletPair, out: Path, prefix: str = ""):
    Rh, Rbh = fourier_reflection(sd.lambda_grid, sd.R_over_zeta, sd.Rbar_over_zeta, cfg.tol_quad)
    kernel = assemble_kernels(Rh, Rbh, tp)
    anchors = Grid1D(*(cfg.anchors or cfg.grid))
    sols = solve_marchenko_grid(kernel, anchors, h=cfg.nodes_h, tail_tol=cfg.tail_tol,
                                cond_cap=cfg.cond_cap, rule=cfg.rule)
    rec = recover_potentials(sols, anchors)
    atomic_write(out / f"{prefix}potentials.csv", _pair_csv(rec.pair))
    atomic_write(out / f"{prefix}gauge.json",
                 dumps({"mu": rec.gauge.mu, "E_last": complex(rec.gauge.E.values[-1]), **rec.report}) + "\n")
    return rec


def run_marchenko(cfg: RunConfig, out: Path) -> Tuple[dict, int]:
    if not cfg.scattering and not cfg.triplets:
        raise ConfigError("marchenko needs --scattering and/or --triplets")
    if cfg.scattering:
        try:
            sd = scattering_from_json(json.loads(_read_text(cfg.scattering)))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scattering file is not valid JSON: {exc}") from None
    else:
        lam = cfg.lambdas
        z = np.zeros(lam.size, dtype=complex)
        o = np.ones(lam.size, dtype=complex)
        sd = ScatteringData(SystemKind.GI, lam, o, o, z, z, z, z, z, z, z, z)
    tp = load_triplets(cfg, required=False)
    rec = _invert(cfg, sd, tp, out)
    summary = {"files": ["potentials.csv", "gauge.json"], "mu": rec.gauge.mu, **rec.report}
    return summary, EXIT_OK


def run_evolve(cfg: RunConfig, out: Path) -> Tuple[dict, int]:
    tp = load_triplets(cfg)
    g = cfg.x_grid
    files, residuals = [], []
    stacked = io.StringIO()
    stacked.write("x,t,abs_q,abs_r\n")
    for k, t in enumerate(cfg.times):
        snaps = [soliton_snapshot(tp, t + s * cfg.delta, g) for s in (-1, 0, 1)]
        res = gi_residual(snaps, cfg.delta)
        name = f"potentials_t{k}.csv"
        atomic_write(out / name, _pair_csv(snaps[1]))
        files.append(name)
        residuals.append({"t": t, "residual_q": res["q"], "residual_r": res["r"]})
        for x, q, r in zip(g.x, snaps[1].q.values, snaps[1].r.values):
            stacked.write(f"{x:.17g},{t:.17g},{abs(q):.17g},{abs(r):.17g}\n")
    atomic_write(out / "residuals.json", dumps({"delta": cfg.delta, "residuals": residuals}) + "\n")
    atomic_write(out / "stacked.csv", stacked.getvalue())
    files += ["residuals.json", "stacked.csv"]
    return {"files": files, "residuals": residuals,
            "max_residual": max(max(r["residual_q"], r["residual_r"]) for r in residuals)}, EXIT_OK


def run_roundtrip(cfg: RunConfig, out: Path) -> Tuple[dict, int]:
    p = load_potential(cfg)
    tp = load_triplets(cfg, required=False)
    if tp.is_empty:
        found = locate_bound_states(p, cfg.bound_state_box, rtol=cfg.tol_ode, atol=cfg.atol_ode)
        if found:
            raise BoundStateSearchError(
                f"bound states found at {[complex(z) for z, _ in found]}; the round trip needs their "
                "triplets (--triplets)")
    sd = scattering_coefficients(SystemKind.GI, p, cfg.lambdas, rtol=cfg.tol_ode, atol=cfg.atol_ode)
    atomic_write(out / "scattering.json", dumps(scattering_to_json(sd, p.grid)) + "\n")
    rec = _invert(cfg, sd, tp, out, prefix="recovered_")
    xs = rec.pair.grid.x
    q0, r0 = p.q(xs), p.r(xs)
    g0 = compute_gauge(p)
    summary = {
        "files": ["scattering.json", "recovered_potentials.csv", "recovered_gauge.json"],
        "max_relative_error_q": _max_rel(rec.pair.q.values, q0),
        "max_relative_error_r": _max_rel(rec.pair.r.values, r0),
        "mu_input": g0.mu, "mu_recovered": rec.gauge.mu,
        **rec.report,
    }
    summary["max_relative_error"] = max(summary["max_relative_error_q"], summary["max_relative_error_r"])
    return summary, EXIT_OK


VALIDATION_TOLERANCES = {
    "unitarity": 1e-6, "left_right": 1e-6, "cross_system": 1e-6, "jost_relations": 1e-6,
    "wronskian_constancy": 1e-8, "parity": 1e-8, "evaluation_point": 1e-6,
}


def run_validate(cfg: RunConfig, out: Path) -> Tuple[dict, int]:
    p = load_potential(cfg)
    rng = np.random.default_rng(cfg.seed)
    lam = cfg.lambdas
    rt, at = cfg.tol_ode, cfg.atol_ode
    g = p.grid
    sd = scattering_coefficients(SystemKind.GI, p, lam, rtol=rt, atol=at)
    zeta = complex(rng.uniform(0.5, 2.0))
    span = g.x_max - g.x_min
    xs = np.sort(g.x_min + span * rng.uniform(0.2, 0.8, 3))
    gauge = compute_gauge(p)
    checks = {
        "unitarity": sd.unitarity_residual(),
        "left_right": sd.left_right_residual(),
        "cross_system": max(cross_system_check(p, lam, rt, at, gauge).values()),
        "jost_relations": max(jost_relation_check(p, zeta, rt, at, gauge).values()),
        "wronskian_constancy": max(wronskian_constancy(jost_table(SystemKind.GI, p, zeta, rt, at)).values()),
        "parity": max(parity_check(SystemKind.GI, p, zeta, rt, at).values()),
        "evaluation_point": evaluation_point_spread(SystemKind.GI, p, lam, xs, rt, at),
    }
    results = {name: {"residual": v, "tolerance": VALIDATION_TOLERANCES[name],
                      "pass": bool(v <= VALIDATION_TOLERANCES[name])} for name, v in checks.items()}
    atomic_write(out / "validation.json", dumps({"zeta": zeta, "checks": results}) + "\n")
    for name, r in results.items():
        print(f"{'PASS' if r['pass'] else 'FAIL'} {name}: {r['residual']:.3e} (tol {r['tolerance']:.0e})",
              file=sys.stderr)
    ok = all(r["pass"] for r in results.values())
    return {"files": ["validation.json"], "checks": results, "all_pass": ok}, EXIT_OK if ok else EXIT_FAIL


RUNNERS = {
    "direct": run_direct, "reflectionless": run_reflectionless, "marchenko": run_marchenko,
    "evolve": run_evolve, "roundtrip": run_roundtrip, "validate": run_validate,
}

NUMERIC_ERRORS = (SingularGammaError, NystromError, IntegrationError, BoundStateSearchError,
                  FourierTailError, ArithmeticError, np.linalg.LinAlgError)


def run(cfg: RunConfig) -> Tuple[dict, int]:
    """Execute the configured pipeline; returns the summary and the exit status."""
    out = Path(cfg.out)
    try:
        summary, code = RUNNERS[cfg.command](cfg, out)
    except (ConfigError, TripletError, PotentialError) as exc:
        return {"command": cfg.command, "error": str(exc), "kind": "config"}, EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        return {"command": cfg.command, "error": str(exc), "kind": "numerical"}, EXIT_NUMERIC
    except OSError as exc:
        return {"command": cfg.command, "error": str(exc), "kind": "io"}, EXIT_IO
    return {"command": cfg.command, "status": "ok" if code == 0 else "failed", "out": str(out), **summary}, code


_VALUE_FLAGS = ("--grid", "--lambda-grid", "--anchors", "--times", "--center")


def _attach_values(argv: Sequence[str]) -> List[str]:
    """Glue values such as -8,8,1601 to their flag so argparse does not read them as options."""
    out: List[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is None:
                out.append(tok)
            else:
                out.append(f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_attach_values(sys.argv[1:] if argv is None else list(argv)))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(dumps({"command": args.command, "error": str(exc), "kind": "config"}))
        return EXIT_CONFIG
    except OSError as exc:
        print(dumps({"command": args.command, "error": str(exc), "kind": "io"}))
        return EXIT_IO
    start = time.perf_counter()
    summary, code = run(cfg)
    log.info("%s finished in %.2f s", cfg.command, time.perf_counter() - start)
    print(dumps(summary))
    return code


if __name__ == "__main__":
    sys.exit(main())
