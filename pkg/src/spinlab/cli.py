"""Command line front end.

One executable, ``spinlab``, puts every verification suite, audit and
solver behind a two-level subcommand tree:

    verify   clifford | spinor | curvature
    audit    residual | energy | rayleigh
    psi0
    solve    toy | generic | torus

Each run prints a single JSON document (sorted keys) to stdout and exits
0 when every check inside the run passed, 1 when a check failed, 2 on a
usage error.  When an output directory is given (``--out-dir`` flag, or
the ``SPINLAB_OUT`` environment variable as default) tabular results are
also written there as CSV files, always with a header row.

Settings may come from a flat ``key = value`` config file (``--config``);
command line flags override file entries, which override the per-command
defaults.  ``--echo-config`` prints the canonical form of the fully
resolved configuration and exits, so an experiment can be re-run later
from its own echo.  All randomness flows through the echoed seed, and an
identical configuration gives byte-identical output.
"""

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import asymptotics, clifford, curvature, dirac_torus, reduction
from . import spinor_fields as sf

__all__ = ["RunConfig", "UsageError", "run", "main"]


class UsageError(ValueError):
    """Bad flags, bad config file, or inconsistent values."""


# ---------------------------------------------------------------------------
# configuration

# key -> (type tag, constraint); constraint applies elementwise to lists
_SCHEMA = {
    "subcommand": ("str", None),
    "m": ("int", "positive"),
    "m_max": ("int", "positive"),
    "dims": ("int_list", "positive"),
    "points": ("int", "positive"),
    "tensors": ("int", "positive"),
    "trials": ("int", "positive"),
    "starts": ("int", "positive"),
    "seed": ("int", "nonnegative"),
    "tol": ("float", "positive"),
    "slope_tol": ("float", "positive"),
    "eps_lo": ("float", "positive"),
    "eps_hi": ("float", "positive"),
    "eps_count": ("int", "positive"),
    "first_scale": ("float", "nonnegative"),
    "spectrum": ("float_list", None),
    "spin": ("str", None),
    "modes": ("float", "positive"),
    "grid": ("int", "positive"),
    "out_dir": ("str", None),
}


def _cast_scalar(tag, raw):
    if tag == "int":
        try:
            return int(raw)
        except ValueError:
            raise UsageError(f"expected an integer, got {raw!r}")
    if tag == "float":
        try:
            return float(raw)
        except ValueError:
            raise UsageError(f"expected a number, got {raw!r}")
    return str(raw)


def _cast(key, raw):
    if key not in _SCHEMA:
        raise UsageError(f"unknown config key {key!r}")
    tag, constraint = _SCHEMA[key]
    if tag.endswith("_list"):
        base = tag[:-5]
        if isinstance(raw, str):
            parts = [p for p in raw.split(",") if p.strip() != ""]
        else:
            parts = list(raw)
        value = tuple(_cast_scalar(base, p) for p in parts)
        if not value:
            raise UsageError(f"config key {key!r} needs at least one entry")
        scalars = value
    else:
        value = _cast_scalar(tag, raw) if isinstance(raw, str) else raw
        scalars = (value,)
    if constraint == "positive" and any(not s > 0 for s in scalars):
        raise UsageError(f"config key {key!r} must be positive")
    if constraint == "nonnegative" and any(s < 0 for s in scalars):
        raise UsageError(f"config key {key!r} must be nonnegative")
    return value


def _format_value(key, value):
    tag = _SCHEMA[key][0]
    if tag.endswith("_list"):
        base = tag[:-5]
        return ",".join(str(v) if base == "int" else repr(float(v))
                        for v in value)
    if tag == "int":
        return str(value)
    if tag == "float":
        return repr(float(value))
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings of one run.

    ``canonical()`` renders the flat key-value form; parsing that text
    back and rendering again reproduces it byte for byte.
    """

    subcommand: str
    values: dict

    def __post_init__(self):
        clean = {}
        for key, raw in self.values.items():
            if key == "subcommand":
                continue
            clean[key] = _cast(key, raw)
        object.__setattr__(self, "values", clean)

    @classmethod
    def from_text(cls, subcommand: str, text: str) -> "RunConfig":
        values = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise UsageError(f"config line {lineno}: expected key = value")
            key, raw = body.split("=", 1)
            key, raw = key.strip(), raw.strip()
            if key == "subcommand":
                if raw != subcommand:
                    raise UsageError(
                        f"config file is for {raw!r}, not {subcommand!r}")
                continue
            values[key] = raw
        return cls(subcommand, values)

    def merged(self, overrides: dict) -> "RunConfig":
        out = dict(self.values)
        out.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig(self.subcommand, out)

    def canonical(self) -> str:
        lines = [f"subcommand = {self.subcommand}"]
        for key in sorted(self.values):
            lines.append(f"{key} = {_format_value(key, self.values[key])}")
        return "\n".join(lines) + "\n"

    def get(self, key, default=None):
        return self.values.get(key, default)

    def __getitem__(self, key):
        return self.values[key]


def _eps_grid(cfg, fallback):
    """Strictly decreasing geometric grid from the config, else fallback."""
    keys = ("eps_lo", "eps_hi", "eps_count")
    given = [k for k in keys if k in cfg.values]
    if not given:
        return fallback()
    if len(given) != 3:
        raise UsageError("eps grid needs eps_lo, eps_hi and eps_count")
    lo, hi, count = cfg["eps_lo"], cfg["eps_hi"], cfg["eps_count"]
    if not lo < hi:
        raise UsageError("eps_lo must be below eps_hi")
    if count < 2:
        raise UsageError("eps_count must be at least 2")
    return np.geomspace(hi, lo, count)


# ---------------------------------------------------------------------------
# subcommand handlers: each returns (payload, csv_specs); csv_specs is a
# list of (filename, header, rows)

def _run_verify_clifford(cfg):
    m_max, tol = cfg["m_max"], cfg["tol"]
    if m_max < 2:
        raise UsageError("m_max must be at least 2")
    results = []
    for m in range(2, m_max + 1):
        rep = clifford.build_rep(m)
        eye = np.eye(rep.N)
        anti = 0.0
        for i in range(m):
            for j in range(m):
                g = rep.gamma(i) @ rep.gamma(j) + rep.gamma(j) @ rep.gamma(i)
                anti = max(anti, float(np.abs(g + 2.0 * (i == j) * eye).max()))
        herm = max(float(np.abs(rep.gamma(i) + rep.gamma(i).conj().T).max())
                   for i in range(m))
        results.append({"m": m, "anticommutation": anti,
                        "antihermiticity": herm,
                        "ok": bool(anti <= tol and herm <= tol)})
    payload = {"check": "clifford", "m_max": m_max, "tol": tol,
               "results": results, "ok": all(r["ok"] for r in results)}
    rows = [(r["m"], r["anticommutation"], r["antihermiticity"])
            for r in results]
    return payload, [("clifford_residuals.csv",
                      ("m", "anticommutation", "antihermiticity"), rows)]


def _fd_dirac_slope(params, rng):
    """Order of the centered-difference Dirac application, expected 2."""
    rep = params.rep
    x = rng.standard_normal(params.m) * 0.4
    rhs = sf.psi_norm(params.m, x) ** (2.0 / (params.m - 1)) * sf.psi(params, x)
    errs = []
    for h in (1e-2, 1e-3):
        d = np.zeros(rep.N, dtype=complex)
        for j in range(params.m):
            e = np.zeros(params.m)
            e[j] = h
            d += rep.gamma(j) @ (sf.psi(params, x + e)
                                 - sf.psi(params, x - e)) / (2.0 * h)
        errs.append(float(np.linalg.norm(d - rhs)))
    return math.log(errs[0] / errs[1]) / math.log(10.0)


def _run_verify_spinor(cfg):
    dims, n_pts = cfg["dims"], cfg["points"]
    tol, slope_tol, seed = cfg["tol"], cfg["slope_tol"], cfg["seed"]
    results = []
    for m in dims:
        if m < 2:
            raise UsageError("spinor verification needs m >= 2")
        params = sf.make_params(m)
        rng = np.random.default_rng(seed + m)
        pts = rng.standard_normal((n_pts, m)) * 1.5
        worst = float(np.max(sf.dirac_residual(params, pts)))
        slope = _fd_dirac_slope(params, rng)
        results.append({"m": m, "max_residual": worst, "fd_slope": slope,
                        "ok": bool(worst <= tol
                                   and abs(slope - 2.0) <= slope_tol)})
    payload = {"check": "spinor", "dims": list(dims), "points": n_pts,
               "tol": tol, "slope_tol": slope_tol, "seed": seed,
               "results": results, "ok": all(r["ok"] for r in results)}
    rows = [(r["m"], r["max_residual"], r["fd_slope"]) for r in results]
    return payload, [("spinor_residuals.csv",
                      ("m", "max_residual", "fd_slope"), rows)]


def _random_jets(m, rng):
    first = curvature.riemann_project(rng.standard_normal((m,) * 5))
    second = curvature.riemann_project(rng.standard_normal((m,) * 6))
    second = 0.5 * (second + second.swapaxes(4, 5))
    return curvature.CurvatureJets(m, first, second)


def _run_verify_curvature(cfg):
    from .jets import jet_space, jmat_identity, jmat_mul

    dims, tensors, tol, seed = (cfg["dims"], cfg["tensors"], cfg["tol"],
                                cfg["seed"])
    results = []
    rows = []
    for m in dims:
        if m < 4:
            raise UsageError("curvature verification needs m >= 4")
        space = jet_space(m, 4)
        eye = jmat_identity(space, m)
        worst_bbg = worst_binv = worst_det = 0.0
        for k in range(tensors):
            rng = np.random.default_rng((seed, m, k))
            R = curvature.random_riemann(m, seed=rng)
            jets = _random_jets(m, rng)
            G = curvature.metric_jet(R, jets)
            B, Binv = curvature.b_jets(R, jets)
            bbg = float(np.abs(jmat_mul(space, jmat_mul(space, B, B), G)
                               - eye).max())
            binv = float(np.abs(jmat_mul(space, B, Binv) - eye).max())
            det = float(curvature.det_expansion_check(R, jets))
            rows.append((m, k, bbg, binv, det))
            worst_bbg = max(worst_bbg, bbg)
            worst_binv = max(worst_binv, binv)
            worst_det = max(worst_det, det)
        results.append({"m": m, "bbg_residual": worst_bbg,
                        "binv_residual": worst_binv,
                        "det_residual": worst_det,
                        "ok": bool(max(worst_bbg, worst_binv, worst_det)
                                   <= tol)})
    payload = {"check": "curvature", "dims": list(dims), "tensors": tensors,
               "tol": tol, "seed": seed, "results": results,
               "ok": all(r["ok"] for r in results)}
    return payload, [("curvature_residuals.csv",
                      ("m", "tensor", "bbg_residual", "binv_residual",
                       "det_residual"), rows)]


def _run_psi0(cfg):
    m, trials, tol, seed = cfg["m"], cfg["trials"], cfg["tol"], cfg["seed"]
    if m < 3:
        raise UsageError("psi0 search needs m >= 3")
    rep = clifford.build_rep(m)
    rng = np.random.default_rng(seed)
    worst = 0.0
    rows = []
    for k in range(trials):
        A = rng.standard_normal((m,) * 4)
        out = sf.find_psi0(rep, A, f_tol=tol)
        val = abs(sf.psi0_functional(rep, A, out))
        rows.append((k, val))
        worst = max(worst, val)
    payload = {"check": "psi0", "m": m, "trials": trials, "tol": tol,
               "seed": seed, "worst_functional": worst,
               "ok": bool(worst <= tol)}
    return payload, [("psi0_functional.csv", ("trial", "functional_abs"),
                      rows)]


def _audit_payload(report, ok, extra=None):
    payload = dict(report.summary())
    payload["ok"] = bool(ok)
    payload.update(extra or {})
    rows = [(name, e, v) for name, e, v in report.rows()]
    name = payload["audit"]
    return payload, [(f"{name}_terms.csv", ("term", "eps", "value"), rows)]


def _run_audit_residual(cfg):
    report = asymptotics.residual_audit(
        cfg["m"], eps_grid=_eps_grid(cfg, asymptotics.default_eps_grid),
        seed=cfg["seed"], first_scale=cfg["first_scale"])
    summary = report.summary()
    ok = (summary["total_floor_ok"]
          and all(t["within_tolerance"] is not False
                  for t in summary["terms"].values()))
    return _audit_payload(report, ok, {"seed": cfg["seed"]})


def _run_audit_energy(cfg):
    report = asymptotics.energy_audit(
        cfg["m"], eps_grid=_eps_grid(cfg, asymptotics.default_eps_grid),
        seed=cfg["seed"], first_scale=cfg["first_scale"])
    ok = (report.j1_max == 0.0 and report.j5_max <= 1e-12
          and report.j7_max <= 1e-12 and report.j2_rel_err <= 1e-6
          and abs(report.j6_slope - 4.0) <= 0.1
          and report.j6_rel_err <= 0.05 and report.j6_negative)
    return _audit_payload(report, ok, {"seed": cfg["seed"]})


def _run_audit_rayleigh(cfg):
    report = asymptotics.rayleigh_audit(
        cfg["m"], eps_grid=_eps_grid(cfg, asymptotics.rayleigh_eps_grid),
        seed=cfg["seed"], first_scale=cfg["first_scale"])
    summary = report.summary()
    ok = (summary["num_rel_err"] <= 0.01 and summary["den_rel_err"] <= 0.01
          and summary["excess_positive_smallest_two"])
    return _audit_payload(report, ok, {"seed": cfg["seed"]})


def _solve_payload(result, cfg, extra=None):
    payload = dict(result.summary())
    payload["seed"] = cfg["seed"]
    payload["ok"] = bool(result.grad_norm <= cfg["tol"])
    payload.update(extra or {})
    return payload


def _run_solve_toy(cfg):
    problem = reduction.toy_problem()
    result = reduction.minimize_nehari(problem, starts=cfg["starts"],
                                       tol=cfg["tol"], seed=cfg["seed"])
    return _solve_payload(result, cfg, {"problem": "toy"}), []


def _run_solve_generic(cfg):
    spectrum = cfg.get("spectrum")
    if spectrum is None:
        raise UsageError("solve generic needs a spectrum "
                         "(--spectrum or config)")
    problem = reduction.diagonal_quartic_problem(spectrum)
    result = reduction.minimize_nehari(problem, starts=cfg["starts"],
                                       tol=cfg["tol"], seed=cfg["seed"])
    extra = {"problem": "generic", "spectrum": [float(d) for d in spectrum]}
    return _solve_payload(result, cfg, extra), []


def _run_solve_torus(cfg):
    spin = dirac_torus.SpinStructure.from_text(cfg["spin"]).astuple()
    state = dirac_torus.solve_ground_state(
        cfg["modes"], spin, tol=cfg["tol"], seed=cfg["seed"],
        starts=cfg["starts"], n_g=cfg.get("grid"))
    payload = state.summary()
    payload["seed"] = cfg["seed"]
    payload["spin"] = cfg["spin"]
    payload["ok"] = bool(state.grad_norm <= cfg["tol"])
    return payload, [("torus_state.csv", ("mode", "block", "re", "im"),
                      state.rows())]


_HANDLERS = {
    ("verify", "clifford"): _run_verify_clifford,
    ("verify", "spinor"): _run_verify_spinor,
    ("verify", "curvature"): _run_verify_curvature,
    ("audit", "residual"): _run_audit_residual,
    ("audit", "energy"): _run_audit_energy,
    ("audit", "rayleigh"): _run_audit_rayleigh,
    ("psi0", None): _run_psi0,
    ("solve", "toy"): _run_solve_toy,
    ("solve", "generic"): _run_solve_generic,
    ("solve", "torus"): _run_solve_torus,
}

_DEFAULTS = {
    "verify clifford": {"m_max": 9, "tol": 1e-12},
    "verify spinor": {"dims": (2, 3, 4, 5, 6, 7, 8), "points": 1000,
                      "tol": 1e-10, "slope_tol": 0.2, "seed": 0},
    "verify curvature": {"dims": (4, 5, 6), "tensors": 10, "tol": 1e-12,
                         "seed": 0},
    "audit residual": {"m": 6, "seed": 0, "first_scale": 100.0},
    "audit energy": {"m": 6, "seed": 0, "first_scale": 10.0},
    "audit rayleigh": {"m": 6, "seed": 0, "first_scale": 100.0},
    "psi0": {"m": 5, "trials": 100, "tol": 1e-10, "seed": 0},
    "solve toy": {"starts": 8, "tol": 1e-10, "seed": 0},
    "solve generic": {"starts": 8, "tol": 1e-10, "seed": 0},
    "solve torus": {"spin": "0.5,0.5", "modes": 2.0, "tol": 1e-8,
                    "seed": 0, "starts": 2},
}


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    """Argparse with machine-readable errors on stderr."""

    def error(self, message):
        print(json.dumps({"error": message}), file=sys.stderr)
        raise SystemExit(2)


def _add_common(p):
    p.add_argument("--config", help="flat key = value settings file")
    p.add_argument("--echo-config", action="store_true",
                   help="print the resolved canonical config and exit")
    p.add_argument("--out-dir",
                   help="directory for CSV tables (default: $SPINLAB_OUT)")


def _build_parser():
    top = _Parser(prog="spinlab",
                  description="verification suites, asymptotic audits and "
                              "ground-state solvers")
    sub = top.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="algebraic identity suites")
    vsub = verify.add_subparsers(dest="target", required=True)
    p = vsub.add_parser("clifford", help="gamma matrix contract")
    p.add_argument("--m-max", dest="m_max", type=int)
    p.add_argument("--tol", type=float)
    _add_common(p)
    p = vsub.add_parser("spinor", help="test spinor field equation")
    p.add_argument("--dims")
    p.add_argument("--points", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--slope-tol", dest="slope_tol", type=float)
    p.add_argument("--seed", type=int)
    _add_common(p)
    p = vsub.add_parser("curvature", help="metric square-root jets")
    p.add_argument("--dims")
    p.add_argument("--tensors", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    _add_common(p)

    audit = sub.add_parser("audit", help="epsilon asymptotics")
    asub = audit.add_subparsers(dest="target", required=True)
    for name, blurb in (("residual", "equation residual decay orders"),
                        ("energy", "pairing decomposition terms"),
                        ("rayleigh", "quotient against the flat model")):
        p = asub.add_parser(name, help=blurb)
        p.add_argument("--m", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--first-scale", dest="first_scale", type=float)
        p.add_argument("--eps-lo", dest="eps_lo", type=float)
        p.add_argument("--eps-hi", dest="eps_hi", type=float)
        p.add_argument("--eps-count", dest="eps_count", type=int)
        _add_common(p)

    p = sub.add_parser("psi0", help="algebraic kernel spinor search")
    p.add_argument("--m", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    _add_common(p)

    solve = sub.add_parser("solve", help="Nehari ground states")
    ssub = solve.add_subparsers(dest="target", required=True)
    p = ssub.add_parser("toy", help="two-dimensional closed-form instance")
    p.add_argument("--starts", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    _add_common(p)
    p = ssub.add_parser("generic", help="diagonal quartic instance")
    p.add_argument("--spectrum")
    p.add_argument("--starts", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    _add_common(p)
    p = ssub.add_parser("torus", help="spectral Dirac ground state")
    p.add_argument("--spin")
    p.add_argument("--modes", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--starts", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    _add_common(p)

    return top


def _resolve_config(args):
    target = getattr(args, "target", None)
    subcommand = args.command if target is None else f"{args.command} {target}"
    base = RunConfig(subcommand, _DEFAULTS[subcommand])
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}")
        base = base.merged(RunConfig.from_text(subcommand, text).values)
    skip = {"command", "target", "config", "echo_config", "out_dir"}
    overrides = {k: v for k, v in vars(args).items()
                 if k not in skip and v is not None}
    cfg = base.merged(overrides)
    out_dir = args.out_dir or os.environ.get("SPINLAB_OUT")
    if out_dir:
        cfg = cfg.merged({"out_dir": out_dir})
    return cfg


def _write_csv(out_dir, name, header, rows):
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def run(argv=None) -> int:
    """Parse, execute, print; returns the exit code."""
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.echo_config:
            sys.stdout.write(cfg.canonical())
            return 0
        handler = _HANDLERS[(args.command, getattr(args, "target", None))]
        payload, csv_specs = handler(cfg)
    except UsageError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        # a solver or audit refused the data: a failed check, not usage
        print(json.dumps({"error": str(exc), "ok": False}), file=sys.stderr)
        return 1

    out_dir = cfg.get("out_dir")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        written = []
        for name, header, rows in csv_specs:
            _write_csv(out_dir, name, header, rows)
            written.append(name)
        if written:
            payload["csv"] = written
    print(json.dumps(payload, sort_keys=True, indent=2))
    return 0 if payload.get("ok", True) else 1


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
