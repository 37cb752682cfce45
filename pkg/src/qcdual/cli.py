"""Command line front end: ``qcdual <command> [flags]``.

Each run resolves a JSON-shaped configuration (file values overridden by
inline flags, seed overridden by ``QCDUAL_SEED``), runs one workflow and
writes a report tagged ``qcdual-report/1``. The resolved configuration is
echoed in the report so that feeding it back with ``--config`` reproduces
the payload.

Exit codes: 0 success, 2 a numerical check failed, 1 usage or config error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import bethe, classical, duality, spectra
from ._validation import GeneralPositionError
from .chain import ChainParams, ConsistencyError, GaudinParams, nonlocal_hamiltonians
from .tensorspace import commutator, max_norm

log = logging.getLogger(__name__)

SCHEMA = "qcdual-report/1"
COMMANDS = ("spectrum", "duality", "invert", "bethe", "dynamics", "gaudin", "limits")

DEFAULTS = {
    "command": None,
    "chain": {"n": None, "eta": 1.0, "twist": [1.0, 1.0], "x": None, "omega": [0.0, 0.0]},
    "model": "xxx",
    "sector": "all",
    "solver": {"starts": 200, "tol": None, "seed": spectra.DEFAULT_SEED},
    "dynamics": {"kind": "RS", "t_end": 1.0, "dt": 1e-3, "v": None},
    "limits": {"etas": [1e-1, 1e-2, 1e-3, 1e-4]},
    "output": {"format": "json", "path": None},
}

# default tolerance of the pass/fail check of each command
DEFAULT_TOL = {
    "spectrum": 1e-10,
    "duality": duality.DUALITY_TOL,
    "gaudin": duality.DUALITY_TOL,
    "invert": duality.MATCH_TOL,
    "bethe": 1e-7,
    "dynamics": 1e-8,
    "limits": 0.1,
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved for check failures here
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------- JSON output

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits.

    Complex numbers become [re, im]; numpy scalars and arrays are unwrapped.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    elif isinstance(obj, np.generic):
        obj = obj.item()
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, complex):
        return f"[{_fmt_float(obj.real)}, {_fmt_float(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [to_json(v, indent, _level + 1) for v in obj]
        if all("\n" not in p for p in parts) and sum(len(p) for p in parts) < 100:
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(pad + p for p in parts) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cplx(z) -> complex | float:
    """Echo a value as a plain float when it is real, else keep it complex."""
    z = complex(z)
    return z.real if z.imag == 0 else z


# ------------------------------------------------------------ configuration

def _parse_number(value, where: str) -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            pass
    raise ConfigError(f"{where}: expected a number or [re, im], got {value!r}")


def _parse_vector(value, where: str) -> list[complex]:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list, got {value!r}")
    return [_parse_number(v, f"{where}[{k}]") for k, v in enumerate(value)]


def _merge(base: dict, extra: dict, where: str = "config") -> dict:
    """Deep-merge ``extra`` into ``base``, rejecting keys the schema does not know."""
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if key not in base:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}.{key}: expected an object")
            out[key] = _merge(base[key], value, f"{where}.{key}")
        else:
            out[key] = value
    return out


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _flag_overrides(args) -> dict:
    over: dict = {}

    def put(section, key, value):
        if value is not None:
            over.setdefault(section, {})[key] = value

    put("chain", "n", args.n)
    put("chain", "eta", args.eta)
    put("chain", "twist", args.twist)
    put("chain", "x", args.x)
    put("chain", "omega", args.omega)
    put("solver", "starts", args.starts)
    put("solver", "tol", args.tol)
    put("solver", "seed", args.seed)
    put("dynamics", "kind", args.kind)
    put("dynamics", "t_end", args.t_end)
    put("dynamics", "dt", args.dt)
    put("dynamics", "v", args.v)
    put("limits", "etas", args.etas)
    put("output", "format", args.format)
    put("output", "path", args.output)
    if args.sector is not None:
        over["sector"] = args.sector
    if args.model is not None:
        over["model"] = args.model
    return over


def resolve_config(command: str, file_cfg: dict, flags: dict, env=None) -> dict:
    """Validate and normalise the merged configuration.

    Returns a plain-JSON config (complex values as [re, im]) with every
    default filled in; this is what the report echoes.
    """
    env = os.environ if env is None else env
    cfg = _merge(DEFAULTS, file_cfg)
    if cfg["command"] not in (None, command):
        raise ConfigError(f"config is for command {cfg['command']!r}, not {command!r}")
    cfg = _merge(cfg, flags)
    cfg["command"] = command

    ch = cfg["chain"]
    eta = _parse_number(ch["eta"], "chain.eta")
    if eta == 0:
        raise ConfigError("chain.eta must be nonzero")
    twist = _parse_vector(ch["twist"], "chain.twist")
    omega = _parse_vector(ch["omega"], "chain.omega")
    if len(twist) != 2 or len(omega) != 2:
        raise ConfigError("chain.twist and chain.omega need exactly two entries")
    x = None if ch["x"] is None else _parse_vector(ch["x"], "chain.x")
    n = ch["n"]
    if n is not None and (isinstance(n, bool) or not isinstance(n, int) or n < 1):
        raise ConfigError(f"chain.n must be a positive integer, got {n!r}")
    if x is None:
        if n is None:
            raise ConfigError("give chain.n or chain.x")
        # evenly spaced points, 2 max(1, |eta|) apart, are always in general position
        x = [complex(2 * k * max(1.0, abs(eta))) for k in range(n)]
    elif n is not None and n != len(x):
        raise ConfigError(f"chain.n = {n} but chain.x has {len(x)} entries")
    n = len(x)
    cfg["chain"] = {"n": n, "eta": _cplx(eta), "twist": [_cplx(w) for w in twist],
                    "x": [_cplx(v) for v in x], "omega": [_cplx(w) for w in omega]}

    sector = cfg["sector"]
    if isinstance(sector, str) and sector != "all":
        try:
            sector = int(sector)
        except ValueError:
            raise ConfigError(f"sector must be an integer or 'all', got {sector!r}") from None
    if sector != "all" and (isinstance(sector, bool) or not isinstance(sector, int) or not 0 <= sector <= n):
        raise ConfigError(f"sector must be in 0..{n} or 'all', got {sector!r}")
    cfg["sector"] = sector

    if cfg["model"] not in ("xxx", "homogeneous", "gaudin"):
        raise ConfigError(f"model must be xxx, homogeneous or gaudin, got {cfg['model']!r}")

    sol = cfg["solver"]
    if "QCDUAL_SEED" in env:
        try:
            sol["seed"] = int(env["QCDUAL_SEED"])
        except ValueError:
            raise ConfigError(f"QCDUAL_SEED must be an integer, got {env['QCDUAL_SEED']!r}") from None
    for key in ("starts", "seed"):
        if isinstance(sol[key], bool) or not isinstance(sol[key], int):
            raise ConfigError(f"solver.{key} must be an integer")
    if sol["starts"] < 1:
        raise ConfigError("solver.starts must be >= 1")
    if sol["tol"] is None:
        sol["tol"] = DEFAULT_TOL[command]
    sol["tol"] = _positive(sol["tol"], "solver.tol")

    dyn = cfg["dynamics"]
    dyn["kind"] = str(dyn["kind"]).upper()
    if dyn["kind"] not in ("RS", "CM"):
        raise ConfigError("dynamics.kind must be RS or CM")
    dyn["t_end"] = _positive(dyn["t_end"], "dynamics.t_end")
    dyn["dt"] = _positive(dyn["dt"], "dynamics.dt")
    if dyn["v"] is not None:
        v = _parse_vector(dyn["v"], "dynamics.v")
        if len(v) != n:
            raise ConfigError(f"dynamics.v needs {n} entries, got {len(v)}")
        dyn["v"] = [_cplx(z) for z in v]

    etas = cfg["limits"]["etas"]
    if isinstance(etas, str):
        etas = etas.split(",")
    try:
        etas = [float(e) for e in etas]
    except (TypeError, ValueError):
        raise ConfigError("limits.etas must be a list of numbers") from None
    if len(etas) < 2 or any(e <= 0 for e in etas) or any(b >= a for a, b in zip(etas, etas[1:])):
        raise ConfigError("limits.etas must be at least two positive, strictly decreasing values")
    cfg["limits"]["etas"] = etas

    out = cfg["output"]
    if out["format"] not in ("json", "csv"):
        raise ConfigError("output.format must be json or csv")
    if out["format"] == "csv" and command not in ("spectrum", "gaudin"):
        raise ConfigError("csv output is only available for spectrum tables")
    return cfg


def _positive(value, where) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a number") from None
    if not value > 0:
        raise ConfigError(f"{where} must be positive")
    return value


def _chain(cfg) -> ChainParams:
    ch = cfg["chain"]
    w1, w2 = (_parse_number(w, "twist") for w in ch["twist"])
    return ChainParams(tuple(_parse_number(v, "x") for v in ch["x"]),
                       _parse_number(ch["eta"], "eta"), w1, w2)


def _gaudin(cfg) -> GaudinParams:
    ch = cfg["chain"]
    o1, o2 = (_parse_number(w, "omega") for w in ch["omega"])
    return GaudinParams(tuple(_parse_number(v, "x") for v in ch["x"]), o1, o2)


def _sectors(cfg, top: int | None = None) -> list[int]:
    n = cfg["chain"]["n"]
    last = n if top is None else top
    if cfg["sector"] == "all":
        return list(range(last + 1))
    if cfg["sector"] > last:
        raise ConfigError(f"sector {cfg['sector']} is above the largest allowed value {last}")
    return [cfg["sector"]]


# ----------------------------------------------------------------- commands

class Checks:
    def __init__(self):
        self.items: dict[str, dict] = {}

    def add(self, name: str, value: float, tol: float, passed: bool | None = None):
        ok = bool(value < tol) if passed is None else bool(passed)
        self.items[name] = {"passed": ok, "value": float(value), "tol": float(tol)}

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.items.values())


def _records_payload(records) -> list[dict]:
    return [{"H": [complex(h) for h in r.H], "residual": r.residual} for r in records]


def cmd_spectrum(cfg, checks: Checks) -> dict:
    p = _chain(cfg)
    seed = cfg["solver"]["seed"]
    hams = nonlocal_hamiltonians(p)
    comm = max((max_norm(commutator(a, b)) for i, a in enumerate(hams) for b in hams[i + 1:]), default=0.0)
    checks.add("commutativity", comm, cfg["solver"]["tol"])
    sectors = {}
    worst_sum = worst_res = 0.0
    for M in _sectors(cfg):
        recs = spectra.joint_spectrum(p, M, seed, hams)
        worst_sum = max([worst_sum] + [spectra.sum_rule_residual(p, r) for r in recs])
        worst_res = max([worst_res] + [r.residual for r in recs])
        sectors[str(M)] = _records_payload(recs)
    checks.add("sum_rule", worst_sum, cfg["solver"]["tol"])
    checks.add("eigen_residual", worst_res, 1e-8)
    return {"sectors": sectors}


def cmd_gaudin(cfg, checks: Checks) -> dict:
    p = _gaudin(cfg)
    seed = cfg["solver"]["seed"]
    tol = cfg["solver"]["tol"]
    from .chain import gaudin_hamiltonians
    hams = gaudin_hamiltonians(p)
    sectors = {}
    for M in _sectors(cfg):
        recs = spectra.gaudin_joint_spectrum(p, M, seed, hams)
        rep = duality.verify_gaudin_duality(p, M, recs, tol)
        checks.add(f"duality_M{M}", rep.max_distance, tol, rep.passed)
        sectors[str(M)] = {"records": _records_payload(recs), "distances": rep.distances,
                           "passed": rep.passed}
    return {"sectors": sectors}


def cmd_duality(cfg, checks: Checks) -> dict:
    p = _chain(cfg)
    seed = cfg["solver"]["seed"]
    tol = cfg["solver"]["tol"]
    hams = nonlocal_hamiltonians(p)
    sectors = {}
    for M in _sectors(cfg):
        recs = spectra.joint_spectrum(p, M, seed, hams)
        rep = duality.verify_duality(p, M, recs, tol)
        checks.add(f"duality_M{M}", rep.max_distance, tol, rep.passed)
        sectors[str(M)] = {
            "target": duality.target_polynomial(p.N, M, p.w1, p.w2).astype(complex),
            "records": _records_payload(recs),
            "distances": rep.distances,
            "passed": rep.passed,
        }
    return {"sectors": sectors}


def cmd_invert(cfg, checks: Checks) -> dict:
    p = _chain(cfg)
    sol = cfg["solver"]
    hams = nonlocal_hamiltonians(p)
    sectors = {}
    for M in _sectors(cfg):
        recs = spectra.joint_spectrum(p, M, sol["seed"], hams)
        res = duality.solve_inverse(p, M, sol["starts"], sol["seed"], recs, match_tol=sol["tol"])
        recovered = {s.record_index for s in res.matched}
        checks.add(f"inverse_M{M}", len(recs) - len(recovered), 0.5)
        sectors[str(M)] = {
            "records": _records_payload(recs),
            "solutions": [{"H": [complex(h) for h in s.H], "residual": s.residual,
                           "matched": s.matched, "record_index": s.record_index, "hits": s.hits}
                          for s in res.solutions],
            "n_solutions": len(res.solutions),
            "n_matched": len(res.matched),
            "starts": res.starts,
            "failed_starts": res.failed_starts,
        }
    return {"sectors": sectors}


def cmd_bethe(cfg, checks: Checks) -> dict:
    model = cfg["model"]
    ch = cfg["chain"]
    if model == "homogeneous":
        params = bethe.HomogeneousChain(ch["n"], _parse_number(ch["eta"], "eta"))
    elif model == "gaudin":
        params = _gaudin(cfg)
    else:
        params = _chain(cfg)
    sol = cfg["solver"]
    sectors = {}
    for M in _sectors(cfg, top=ch["n"] // 2):
        cmp = bethe.bethe_vs_oracle(params, M, sol["starts"], sol["seed"], sol["tol"])
        roots = bethe.solve_bethe(params, M, sol["starts"], sol["seed"])
        entries = []
        for r in roots:
            ev = bethe.eigenvalues_from_roots(params, r)
            entry = {"u": r.u, "residual": r.residual}
            if model != "gaudin":
                entry["branches"] = bethe.branch_integers(params, r.u).tolist()
                entry["pole_residual"] = ev.pole_residual
            if ev.H is not None:
                entry["H"] = ev.H
            if ev.energy is not None:
                entry["energy"] = ev.energy
            entries.append(entry)
        # an unmatched root set is a failure; missing ones are reported only
        checks.add(f"bethe_M{M}", cmp.max_deviation, sol["tol"])
        sectors[str(M)] = {"roots": entries, "n_records": cmp.n_records, "matched": cmp.matched,
                           "matched_fraction": cmp.matched_fraction, "max_deviation": cmp.max_deviation}
    return {"model": model, "sectors": sectors}


def _lax_invariant_drift(Y0, Y1) -> float:
    c0, c1 = classical.char_poly(Y0), classical.char_poly(Y1)
    return float(np.max(np.abs(c1 - c0)) / max(1.0, np.max(np.abs(c0))))


def _eigen_drift(Y0, Y1) -> float:
    a = np.linalg.eigvals(Y0)
    b = list(np.linalg.eigvals(Y1))
    worst = 0.0
    for z in a:
        k = int(np.argmin([abs(z - w) for w in b]))
        worst = max(worst, abs(z - b.pop(k)))
    return float(worst)


def cmd_dynamics(cfg, checks: Checks) -> dict:
    dyn = cfg["dynamics"]
    ch = cfg["chain"]
    kind = dyn["kind"]
    x0 = np.array([_parse_number(v, "x") for v in ch["x"]])
    eta = _parse_number(ch["eta"], "eta") if kind == "RS" else None
    if dyn["v"] is None:
        rng = np.random.default_rng(cfg["solver"]["seed"])
        v0 = rng.normal(size=len(x0)) + (1.0 if kind == "RS" else 0.0)
    else:
        v0 = np.array([_parse_number(v, "v") for v in dyn["v"]])
    tol = cfg["solver"]["tol"]
    try:
        traj = classical.integrate(kind, x0, v0, dyn["t_end"], dyn["dt"], eta=eta)
        collided = None
    except classical.CollisionError as exc:
        traj, collided = exc.trajectory, str(exc)
    Y0, Y1 = traj.lax(0), traj.lax(len(traj) - 1)
    if kind == "RS":
        h0, h1 = classical.rs_integrals(traj.x[0], traj.v[0], eta, 1), classical.rs_integrals(traj.x[-1], traj.v[-1], eta, 1)
    else:
        h0, h1 = classical.cm_integrals(traj.x[0], traj.v[0], 2), classical.cm_integrals(traj.x[-1], traj.v[-1], 2)
    eig_drift = _eigen_drift(Y0, Y1)
    inv_drift = _lax_invariant_drift(Y0, Y1)
    h_drift = float(abs(h1 - h0))
    mid = len(traj) // 2
    lax_res = classical.lax_residual(traj, mid) if len(traj) >= 3 else float("nan")
    checks.add("collision_free", 0.0 if collided is None else 1.0, 0.5)
    checks.add("invariant_drift", inv_drift, tol)
    checks.add("energy_drift", h_drift, tol)
    return {
        "kind": kind,
        "steps": len(traj) - 1,
        "t_final": traj.t[-1],
        "x0": x0, "v0": v0,
        "x_final": traj.x[-1], "v_final": traj.v[-1],
        "lax_eigenvalues": np.linalg.eigvals(Y0),
        "eigenvalue_drift": eig_drift,
        "invariant_drift": inv_drift,
        "energy_drift": h_drift,
        "lax_residual_mid": lax_res,
        "collision": collided,
    }


def cmd_limits(cfg, checks: Checks) -> dict:
    ch = cfg["chain"]
    x = [_parse_number(v, "x") for v in ch["x"]]
    o1, o2 = (_parse_number(w, "omega") for w in ch["omega"])
    rng = np.random.default_rng(cfg["solver"]["seed"])
    n = len(x)
    table = duality.limit_checks(x, o1, o2, cfg["limits"]["etas"],
                                 v_cm=rng.normal(size=n), p=rng.normal(size=n))
    tol = cfg["solver"]["tol"]
    checks.add("hamiltonian_order", abs(table.hamiltonian_order - 1.0), tol)
    checks.add("lax_order", abs(table.lax_order - 1.0), tol)
    checks.add("energy_order", abs(table.energy_order - 2.0), 2 * tol)
    return {
        "rows": [{"eta": r.eta, "hamiltonian_error": r.hamiltonian_error, "lax_error": r.lax_error,
                  "energy_error": r.energy_error} for r in table.rows],
        "hamiltonian_order": table.hamiltonian_order,
        "lax_order": table.lax_order,
        "energy_order": table.energy_order,
    }


HANDLERS = {
    "spectrum": cmd_spectrum,
    "duality": cmd_duality,
    "invert": cmd_invert,
    "bethe": cmd_bethe,
    "dynamics": cmd_dynamics,
    "gaudin": cmd_gaudin,
    "limits": cmd_limits,
}


# ------------------------------------------------------------- --check mode

def _check_matrix(seed: int) -> tuple[list[str], dict[str, dict[int, bool]]]:
    """Invariant suite at N = 1..4 on a fixed random chain per N."""
    rng = np.random.default_rng(seed)
    sizes = [1, 2, 3, 4]
    rows: dict[str, dict[int, bool]] = {}

    def mark(name, N, ok):
        rows.setdefault(name, {})[N] = bool(ok)

    for N in sizes:
        x = np.sort(rng.uniform(0, 3 * N, N)) + 0.37 * np.arange(N)
        p = ChainParams(tuple(x), eta=0.8 + 0.3j, w1=1.7, w2=0.6 - 0.2j)
        hams = nonlocal_hamiltonians(p)
        comm = max((max_norm(commutator(a, b)) for i, a in enumerate(hams) for b in hams[i + 1:]), default=0.0)
        mark("commutativity", N, comm < 1e-10)
        spec = {M: spectra.joint_spectrum(p, M, seed, hams) for M in range(N + 1)}
        mark("sum_rule", N, max(spectra.sum_rule_residual(p, r) for rs in spec.values() for r in rs) < 1e-10)
        mark("rs_duality", N, all(duality.verify_duality(p, M, spec[M]).passed for M in spec))
        g = GaudinParams(tuple(x), 0.4, -0.3)
        mark("cm_duality", N, all(duality.verify_gaudin_duality(g, M).passed for M in range(N + 1)))
        inv_ok = True
        for M in spec:
            res = duality.solve_inverse(p, M, 60, seed, spec[M])
            inv_ok &= len({s.record_index for s in res.matched}) == len(spec[M])
        mark("inverse", N, inv_ok)
        bethe_ok = all(bethe.bethe_vs_oracle(p, M, 60, seed).max_deviation < 1e-7 for M in range(N // 2 + 1))
        mark("bethe", N, bethe_ok)
        y = rng.normal(size=N) + 1j * rng.normal(size=N)
        mark("cauchy_det", N, abs(classical.cauchy_det(x, 0.8) - classical.cauchy_det_direct(x, 0.8))
             < 1e-12 * max(1.0, abs(classical.cauchy_det_direct(x, 0.8))))
        Y = classical.rs_lax(x, y, p.eta)
        mark("newton_identity", N, abs(classical.newton_residual(classical.char_poly(Y), Y)) < 1e-9)
    return [str(n) for n in sizes], rows


def run_check(seed: int, out) -> int:
    cols, rows = _check_matrix(seed)
    width = max(len(r) for r in rows)
    out.write(f"{'check':<{width}}  " + "  ".join(f"N={c:<3}" for c in cols) + "\n")
    ok = True
    for name, cells in rows.items():
        marks = []
        for c in cols:
            good = cells[int(c)]
            ok &= good
            marks.append(f"{'pass' if good else 'FAIL':<5}")
        out.write(f"{name:<{width}}  " + "  ".join(marks) + "\n")
    out.write(("all checks passed" if ok else "some checks FAILED") + "\n")
    return 0 if ok else 2


# --------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qcdual", description="Quantum-classical duality workflows for twisted XXX chains.")
    ap.add_argument("--check", action="store_true", help="run the invariant suite and print a pass/fail matrix")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--n", type=int)
        sp.add_argument("--eta")
        sp.add_argument("--twist", help="w1,w2")
        sp.add_argument("--x", help="comma separated inhomogeneities")
        sp.add_argument("--omega", help="Gaudin twist omega1,omega2")
        sp.add_argument("--sector", help="M or 'all'")
        sp.add_argument("--model", choices=["xxx", "homogeneous", "gaudin"])
        sp.add_argument("--starts", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--kind", choices=["RS", "CM", "rs", "cm"])
        sp.add_argument("--t-end", dest="t_end", type=float)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--v", help="initial velocities for dynamics")
        sp.add_argument("--etas", help="decreasing eta values for limits")
        sp.add_argument("--output", help="report path (default: standard output)")
        sp.add_argument("--format", choices=["json", "csv"])
        sp.add_argument("--no-timestamp", action="store_true")
    return ap


def _spectrum_csv(cfg, payload) -> str:
    buf = io.StringIO()
    n = cfg["chain"]["n"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["M", "index"] + [f"H{i}_{part}" for i in range(1, n + 1) for part in ("re", "im")] + ["residual"])
    for M, block in payload["sectors"].items():
        recs = block["records"] if isinstance(block, dict) else block
        for k, r in enumerate(recs):
            vals = [_fmt_float(c) for h in r["H"] for c in (h.real, h.imag)]
            w.writerow([M, k] + vals + [_fmt_float(r["residual"])])
    return buf.getvalue()


def render_report(cfg, payload, checks: Checks, timestamp: bool, error: str | None = None) -> dict:
    report = {"schema": SCHEMA}
    if timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
    report["config"] = cfg
    report["command"] = cfg["command"]
    report["passed"] = checks.passed and error is None
    report["checks"] = checks.items
    if error is not None:
        report["error"] = error
    report["result"] = payload
    return report


def _emit(text: str, path: str | None, stdout) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def run(argv: list[str], stdout=None, stderr=None, env=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    env = os.environ if env is None else env
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        stderr.write(f"qcdual: {exc}\n")
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.check:
        seed = int(env.get("QCDUAL_SEED", spectra.DEFAULT_SEED))
        return run_check(seed, stdout)
    if args.command is None:
        stderr.write("qcdual: a command is required (or --check)\n")
        return 1

    try:
        file_cfg = load_config(args.config) if args.config else {}
        cfg = resolve_config(args.command, file_cfg, _flag_overrides(args), env)
        # constructing the model validates general position up front
        if args.command in ("spectrum", "duality", "invert") or (
                args.command == "bethe" and cfg["model"] == "xxx") or (
                args.command == "dynamics" and cfg["dynamics"]["kind"] == "RS"):
            _chain(cfg)
        else:
            _gaudin(cfg)
    except GeneralPositionError as exc:
        i, j = exc.pair
        stderr.write(f"qcdual: parameters not in general position at pair ({i}, {j}): {exc}\n")
        return 1
    except (ConfigError, ValueError) as exc:
        stderr.write(f"qcdual: {exc}\n")
        return 1

    checks = Checks()
    error = None
    payload: dict = {}
    try:
        payload = HANDLERS[args.command](cfg, checks)
    except ConfigError as exc:
        stderr.write(f"qcdual: {exc}\n")
        return 1
    except (spectra.SpectrumError, ConsistencyError, ValueError, np.linalg.LinAlgError) as exc:
        error = f"{type(exc).__name__}: {exc}"
        stderr.write(f"qcdual: computation failed: {error}\n")

    report = render_report(cfg, payload, checks, not args.no_timestamp, error)
    if cfg["output"]["format"] == "csv" and error is None:
        text = _spectrum_csv(cfg, payload)
    else:
        text = to_json(report) + "\n"
    try:
        _emit(text, cfg["output"]["path"], stdout)
    except OSError as exc:
        stderr.write(f"qcdual: cannot write report: {exc}\n")
        return 1
    for name, c in checks.items.items():
        if not c["passed"]:
            stderr.write(f"qcdual: check {name} failed ({c['value']:.3g} vs tol {c['tol']:.3g})\n")
    return 0 if report["passed"] else 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))
