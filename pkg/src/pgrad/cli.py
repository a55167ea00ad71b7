"""Command line front end.

    pgrad solve <config>
    pgrad check <config>
    pgrad diagnose <field> <config> [--report <path>]
    pgrad export <field> --csv <out>

Exit codes
----------
0  success (solve: converged and residual passes; check: no ``fail``
   verdict; diagnose: inequalities hold and residual passes)
1  solve did not converge or its residual failed; a check reported
   ``fail``; a diagnosed field is not a solution
2  configuration error, unreadable or corrupt field file, domain mismatch
3  numerical failure during the solve (non-finite action or gradient)

Configs are INI files (``[section]`` headers, ``key = value``, vectors as
space-separated lists). Relative paths are resolved against the config's
directory. ``PGRAD_LOG`` selects ``quiet``, ``info`` (default) or ``debug``.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import calculus, potentials, solver, verify
from .action import action, coercivity_lower_bound
from .domain import DomainError, FieldError, constant, make_domain, random_field, read_pgf, write_pgf, zeros

log = logging.getLogger("pgrad")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

SECTIONS = {
    "run": {"seed"},
    "domain": {"p", "n", "periods", "grid_sizes"},
    "potential": {"name", "kappa", "amplitude", "forcing_amplitude", "forcing_mode", "forcing_axis",
                  "forcing_kind", "forcing_file", "bound"},
    "solver": {"method", "max_iters", "grad_tol", "armijo_c", "backtrack_factor", "lbfgs_memory",
               "pin_mean", "scheme", "max_backtracks"},
    "initial": {"kind", "value", "amplitude", "max_mode", "path"},
    "output": {"directory", "reports"},
    "check": {"sample_count", "radius", "direction_count", "fd_tol"},
    "verify": {"strong_l2", "weak_max", "trace_mismatch", "max_mode", "oversample"},
}
REPORTS = ("field", "solve", "residual", "profiles")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    path: Path
    seed: int
    domain: object
    potential: object
    options: solver.SolveOptions
    initial: dict
    output_dir: Path
    reports: tuple
    check: dict = dc_field(default_factory=dict)
    verify: dict = dc_field(default_factory=dict)


def _get(sec, key, conv, default=None):
    if key not in sec:
        return default
    raw = sec[key]
    try:
        return conv(raw)
    except (ValueError, TypeError):
        raise ConfigError(f"[{sec.name}] {key}: cannot parse {raw!r}") from None


def _floats(s):
    return [float(x) for x in s.split()]


def _ints(s):
    out = []
    for x in s.split():
        v = float(x)
        if v != int(v):
            raise ValueError(x)
        out.append(int(v))
    return out


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


def load_config(path):
    """Parse and validate a run config; every problem raises :class:`ConfigError`."""
    path = Path(path)
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        extra = set(cp[name]) - SECTIONS[name]
        if extra:
            raise ConfigError(f"[{name}]: unknown key(s) {sorted(extra)}")
    for name in SECTIONS:
        if not cp.has_section(name):
            cp.add_section(name)
    base = path.parent

    seed = _get(cp["run"], "seed", int, 0)

    dsec = cp["domain"]
    for key in ("p", "n", "periods", "grid_sizes"):
        if key not in dsec:
            raise ConfigError(f"[domain] {key}: missing")
    p, n = _get(dsec, "p", int), _get(dsec, "n", int)
    periods, sizes = _get(dsec, "periods", _floats), _get(dsec, "grid_sizes", _ints)
    for a, N in enumerate(sizes):
        if N % 2 or N < 4:
            raise ConfigError(f"[domain] grid_sizes: entry {a + 1} is {N}; grid sizes must be even and >= 4")
    try:
        dom = make_domain(p, n, periods, sizes)
    except DomainError as exc:
        raise ConfigError(f"[domain] {exc}") from None

    pot = _load_potential(cp["potential"], dom, base)
    opts = _load_options(cp["solver"])

    isec = cp["initial"]
    initial = {
        "kind": isec.get("kind", "zeros").strip(),
        "value": _get(isec, "value", _floats, [0.0]),
        "amplitude": _get(isec, "amplitude", float, 1.0),
        "max_mode": _get(isec, "max_mode", int),
        "path": (base / isec["path"]) if "path" in isec else None,
    }
    if initial["kind"] not in ("zeros", "constant", "random", "file"):
        raise ConfigError(f"[initial] kind: expected zeros|constant|random|file, got {initial['kind']!r}")
    if initial["kind"] == "constant" and len(initial["value"]) not in (1, n):
        raise ConfigError(f"[initial] value: expected 1 or {n} entries")
    if initial["kind"] == "file":
        if initial["path"] is None:
            raise ConfigError("[initial] path: required for kind = file")
        if not initial["path"].is_file():
            raise ConfigError(f"[initial] path: {initial['path']} does not exist")

    osec = cp["output"]
    out_dir = base / osec.get("directory", path.stem + "_out")
    reports = tuple(osec.get("reports", " ".join(REPORTS)).split())
    bad = set(reports) - set(REPORTS)
    if bad:
        raise ConfigError(f"[output] reports: unknown {sorted(bad)}; choose from {REPORTS}")

    csec = cp["check"]
    check = {
        "sample_count": _get(csec, "sample_count", int, 500),
        "radius": _get(csec, "radius", float, 10.0),
        "direction_count": _get(csec, "direction_count", int, 8),
        "fd_tol": _get(csec, "fd_tol", float, 1e-5),
    }
    if check["sample_count"] < 1 or check["radius"] <= 0 or check["direction_count"] < 1:
        raise ConfigError("[check] sample_count, radius and direction_count must be positive")

    vsec = cp["verify"]
    vcfg = {
        "tolerances": {k: _get(vsec, k, float) for k in ("strong_l2", "weak_max", "trace_mismatch") if k in vsec},
        "max_mode": _get(vsec, "max_mode", int),
        "oversample": _get(vsec, "oversample", int, 4),
    }
    if vcfg["oversample"] < 2:
        raise ConfigError("[verify] oversample: must be >= 2")
    if vcfg["max_mode"] is not None and not 0 <= vcfg["max_mode"] <= min(sizes) // 2 - 1:
        raise ConfigError(f"[verify] max_mode: must lie in [0, {min(sizes) // 2 - 1}]")
    return RunConfig(path, seed, dom, pot, opts, initial, out_dir, reports, check, vcfg)


def _load_potential(sec, dom, base):
    name = sec.get("name", "").strip()
    if not name:
        raise ConfigError("[potential] name: missing")
    params = {}
    for key in ("kappa", "amplitude", "bound"):
        if key in sec:
            params[key] = _get(sec, key, float)
    if "forcing_file" in sec and "forcing_amplitude" in sec:
        raise ConfigError("[potential] give either forcing_file or forcing_amplitude, not both")
    if "forcing_file" in sec:
        fpath = base / sec["forcing_file"]
        try:
            ff = read_pgf(fpath)
        except (OSError, FieldError) as exc:
            raise ConfigError(f"[potential] forcing_file: {exc}") from None
        if ff.domain != dom:
            raise ConfigError("[potential] forcing_file: domain does not match [domain]")
        params["forcing"] = ff
    elif "forcing_amplitude" in sec:
        amp = _get(sec, "forcing_amplitude", _floats)
        if len(amp) not in (1, dom.n):
            raise ConfigError(f"[potential] forcing_amplitude: expected 1 or {dom.n} entries")
        mode = _get(sec, "forcing_mode", int, 1)
        axis = _get(sec, "forcing_axis", int, 0)
        kind = sec.get("forcing_kind", "cos").strip()
        if not 0 <= axis < dom.p:
            raise ConfigError(f"[potential] forcing_axis: must lie in [0, {dom.p - 1}]")
        if kind not in ("cos", "sin"):
            raise ConfigError("[potential] forcing_kind: expected cos or sin")
        params["forcing"] = potentials.mode_forcing(np.resize(amp, dom.n), dom.periods, mode, axis, kind)
    try:
        return potentials.builtin(name, params, n=dom.n)
    except potentials.PotentialError as exc:
        raise ConfigError(f"[potential] {exc}") from None


def _load_options(sec):
    kw = {}
    conv = {"method": str, "scheme": str, "max_iters": int, "lbfgs_memory": int, "max_backtracks": int,
            "grad_tol": float, "armijo_c": float, "backtrack_factor": float, "pin_mean": _bool}
    for key, c in conv.items():
        if key in sec:
            kw[key] = _get(sec, key, c)
            if isinstance(kw[key], str):
                kw[key] = kw[key].strip()
    try:
        return solver.SolveOptions(**kw)
    except ValueError as exc:
        raise ConfigError(f"[solver] {exc}") from None


def initial_field(cfg):
    d, ini = cfg.domain, cfg.initial
    if ini["kind"] == "zeros":
        return zeros(d)
    if ini["kind"] == "constant":
        return constant(d, np.resize(ini["value"], d.n))
    if ini["kind"] == "random":
        return random_field(d, seed=cfg.seed, amplitude=ini["amplitude"], max_mode=ini["max_mode"])
    try:
        f = read_pgf(ini["path"])
    except FieldError as exc:
        raise ConfigError(f"[initial] path: {exc}") from None
    if f.domain != d:
        raise ConfigError("[initial] path: field domain does not match [domain]")
    return f


def _kv(lines):
    return "\n".join(lines) + "\n"


def write_profiles(field, directory):
    """Lines through the origin along each axis, one file per (axis, component)."""
    d = field.domain
    written = []
    for a in range(d.p):
        idx = [0] * d.p
        idx[a] = slice(None)
        line = field.values[tuple(idx)]
        t = d.axis_coords(a)
        for i in range(d.n):
            path = Path(directory) / f"profile_axis{a}_comp{i}.dat"
            np.savetxt(path, np.column_stack([t, line[:, i]]), fmt="%.17g",
                       header=f"t{a + 1} u{i + 1}")
            written.append(path)
    return written


def _warn_if_not_coercive(cfg):
    if cfg.options.pin_mean:
        return
    rep = potentials.coercivity_probe(cfg.potential, cfg.domain, seed=cfg.seed)
    if rep.verdict != "pass":
        log.warning("coercivity_probe reports '%s' for potential %s: minimizing sequences may drift "
                    "along constants; consider pin_mean = true", rep.verdict, cfg.potential.name)


def cmd_solve(config_path):
    try:
        cfg = load_config(config_path)
        u0 = initial_field(cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    _warn_if_not_coercive(cfg)
    rep = solver.minimize(u0, cfg.potential, cfg.options)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    if rep.stop_reason == "numerical_failure":
        (cfg.output_dir / "solve_report.txt").write_text(_kv(rep.lines() + [f"seed = {cfg.seed}"]))
        log.error("numerical failure; no field written")
        return EXIT_NUMERICAL
    res = verify.residual_report(rep.final_field, cfg.potential, cfg.options.scheme,
                                 cfg.verify["max_mode"], cfg.verify["oversample"], cfg.verify["tolerances"])
    if "field" in cfg.reports:
        write_pgf(rep.final_field, cfg.output_dir / "field.pgf")
    if "solve" in cfg.reports:
        (cfg.output_dir / "solve_report.txt").write_text(_kv(rep.lines() + [f"seed = {cfg.seed}"]))
    if "residual" in cfg.reports:
        (cfg.output_dir / "residual_report.txt").write_text(_kv(res.lines()))
    if "profiles" in cfg.reports:
        write_profiles(rep.final_field, cfg.output_dir)
    print(_kv(rep.lines() + res.lines()), end="")
    if not rep.converged:
        log.error("solver stopped without converging: %s", rep.stop_reason)
        return EXIT_FAIL
    if not res.passes:
        log.error("residual check failed")
        return EXIT_FAIL
    return EXIT_OK


def cmd_check(config_path):
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    c, P, d, s = cfg.check, cfg.potential, cfg.domain, cfg.seed
    reports = [
        potentials.fd_check_potential_grad(P, d, min(c["sample_count"], 200), c["radius"], s, c["fd_tol"]),
        potentials.bounded_grad_check(P, d, c["sample_count"], c["radius"], s),
        potentials.growth_check(P, d, None, c["sample_count"], c["radius"], s),
        potentials.coercivity_probe(P, d, c["direction_count"], seed=s),
    ]
    for r in reports:
        print(_kv(r.lines()))
    return EXIT_FAIL if any(r.verdict == "fail" for r in reports) else EXIT_OK


def cmd_diagnose(field_path, config_path, report_path=None):
    try:
        cfg = load_config(config_path)
        u = read_pgf(field_path)
    except (ConfigError, FieldError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    if u.domain != cfg.domain:
        log.error("field domain %s does not match config domain %s", u.domain, cfg.domain)
        return EXIT_CONFIG
    P, scheme = cfg.potential, cfg.options.scheme
    av = action(u, P, scheme)
    t2 = calculus.theorem2_check(u)
    wi = calculus.wirtinger_check(u)
    lines = [
        f"phi = {av.total:.17g}",
        f"phi_kinetic = {av.kinetic:.17g}",
        f"phi_potential = {av.potential:.17g}",
        f"mean_bound_lhs = {t2.lhs:.17g}",
        f"mean_bound_rhs = {t2.rhs:.17g}",
        f"mean_bound_holds = {str(t2.holds).lower()}",
        f"wirtinger_lhs = {wi.lhs:.17g}",
        f"wirtinger_rhs = {wi.rhs:.17g}",
        f"wirtinger_holds = {str(wi.holds).lower()}",
    ]
    ok = t2.holds and wi.holds
    if P.claimed_bound is not None:
        lb = coercivity_lower_bound(u, P)
        lb_ok = av.total >= lb - 1e-12 * max(1.0, abs(lb))
        lines += [f"coercivity_lower_bound = {lb:.17g}", f"coercivity_bound_holds = {str(lb_ok).lower()}"]
        ok = ok and lb_ok
    res = verify.residual_report(u, P, scheme, cfg.verify["max_mode"], cfg.verify["oversample"],
                                 cfg.verify["tolerances"])
    lines += res.lines()
    lines.append(f"periodicity = {verify.periodicity_check(u, cfg.verify['oversample']):.17g}")
    text = _kv(lines)
    print(text, end="")
    if report_path is not None:
        Path(report_path).write_text(text)
    return EXIT_OK if ok and res.passes else EXIT_FAIL


def cmd_export(field_path, csv_path):
    try:
        u = read_pgf(field_path)
    except (FieldError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    d = u.domain
    header = ",".join([f"t{a + 1}" for a in range(d.p)] + [f"u{i + 1}" for i in range(d.n)])
    data = np.column_stack([d.coords().reshape(-1, d.p), u.points()])
    np.savetxt(csv_path, data, fmt="%.17g", delimiter=",", header=header, comments="")
    return EXIT_OK


def setup_logging():
    level = os.environ.get("PGRAD_LOG", "info").strip().lower()
    levels = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.INFO), format="pgrad: %(levelname)s: %(message)s",
                        stream=sys.stderr)


def main(argv=None):
    setup_logging()
    ap = argparse.ArgumentParser(prog="pgrad", description="Periodic solutions of Delta u = grad F(t, u).")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="minimize the action and write field + reports")
    p.add_argument("config")
    p = sub.add_parser("check", help="sample the potential's structural hypotheses")
    p.add_argument("config")
    p = sub.add_parser("diagnose", help="inequalities, action and residuals of a field")
    p.add_argument("field")
    p.add_argument("config")
    p.add_argument("--report", help="also write the key-value block here")
    p = sub.add_parser("export", help="convert a PGF field to CSV")
    p.add_argument("field")
    p.add_argument("--csv", required=True, help="output CSV path")
    args = ap.parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args.config)
    if args.command == "check":
        return cmd_check(args.config)
    if args.command == "diagnose":
        return cmd_diagnose(args.field, args.config, args.report)
    return cmd_export(args.field, args.csv)


if __name__ == "__main__":
    sys.exit(main())
