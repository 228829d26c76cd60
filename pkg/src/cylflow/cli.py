"""Command-line entry point: ``cylflow <command> [options]``.

Commands: ``spectrum``, ``simulate``, ``manifold``, ``verify`` and
``reconstruct``.  Options come from an INI file (``--config``; section
``[common]`` plus one section per command) and are overridden by flags.
Every run writes its artifacts, the resolved configuration
(``config.ini``) and ``manifest.json`` with SHA-256 hashes into ``--out``.

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 numerical
divergence.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AdmissibilityError,
    ConfigError,
    CylflowError,
    DivergenceError,
    SamplingError,
)

log = logging.getLogger("cylflow")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3
SUITES = ("spectrum", "nonlinearity", "interpolation", "orthogonality", "decay", "rescaling")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _positive(name, v):
    if not v > 0:
        raise ConfigError(name, f"must be positive, got {v}")


def _naxis(name, v):
    if v not in (1, 2):
        raise ConfigError(name, f"must be 1 or 2, got {v}")


def _trunc(name, v):
    if v < 2:
        raise ConfigError(name, f"must be at least 2, got {v}")


def _nonneg(name, v):
    if v < 0:
        raise ConfigError(name, f"must be non-negative, got {v}")


def _delta(name, v):
    if not 0 < v <= 0.05:
        raise ConfigError(name, f"must lie in (0, 0.05], got {v}")


def _weight(name, v):
    if not 0 < v < 1:
        raise ConfigError(name, f"must lie in (0, 1), got {v}")


def _suite(name, v):
    if v != "all" and v not in SUITES:
        raise ConfigError(name, f"unknown suite {v!r}; choose from all, {', '.join(SUITES)}")


def _times(name, v):
    if not v:
        raise ConfigError(name, "needs at least one time")


def _floats(text):
    return [float(x) for x in str(text).replace(",", " ").split()]


def _ints(text):
    return [int(x) for x in str(text).replace(",", " ").split()]


# name -> (parser, default, validator, help)
COMMON = {
    "naxis": (int, 1, _naxis, "number of axial directions n - k"),
    "trunc_n": (int, 24, _trunc, "Hermite degree per axis"),
    "trunc_m": (int, 8, _trunc, "highest Fourier index"),
    "seed": (int, 42, _nonneg, "random seed"),
}
SOLVER = {
    "delta": (float, 0.01, _delta, "smallness parameter"),
    "a0": (float, None, _weight, "initial dilation (default 1/2 + 2 delta)"),
    "dt": (float, 0.01, _positive, "tau step"),
    "tau_max": (float, 40.0, _positive, "end of the tau grid"),
    "c0": (float, 10.0, _positive, "weight of sigma in the path norm"),
    "stride": (int, 10, _positive, "row stride of path CSVs"),
}
COMMANDS = {
    "spectrum": {
        "a": (float, 0.5, _weight, "dilation a"),
        "dense_check": (int, 1, _nonneg, "compare with the dense eigenvalue oracle (0/1)"),
    },
    "simulate": {**SOLVER,
                 "seed_field": (str, "", None, "JSON or binary field for eta0 (default: sampled)"),
                 "base": (str, "static", None, "frozen path: static or fixed-point"),
                 "snapshot_every": (int, 1000, _nonneg, "write xi as field JSON every K steps (0: never)")},
    "manifold": {**SOLVER,
                 "tol": (float, 1e-9, _positive, "fixed-point tolerance"),
                 "max_iter": (int, 40, _positive, "iteration budget"),
                 "seeds": (str, "", None, "extra seeds to run independently"),
                 "jobs": (int, 1, _positive, "parallel processes for --seeds")},
    "verify": {**SOLVER,
               "suite": (str, "all", _suite, "check suite"),
               "zero_field": (int, 0, _nonneg, "use xi = 0 in the nonlinearity suite (0/1)"),
               "samples": (int, 5, _positive, "random fields per check")},
    "reconstruct": {**SOLVER,
                    "T": (float, 1.0, _positive, "blow-up time"),
                    "times": (str, "0 0.5 0.9 0.99", _times, "sample times"),
                    "static": (int, 0, _nonneg, "reconstruct the unperturbed cylinder (0/1)"),
                    "y_max": (float, 4.0, _positive, "axial half-width of the sample grid"),
                    "y_points": (int, 17, _positive, "axial samples per axis")},
}


@dataclass
class RunConfig:
    """Resolved parameters for one command."""

    command: str
    params: dict = field(default_factory=dict)
    out: Path = Path("cylflow-run")

    def spec(self):
        return {**COMMON, **COMMANDS[self.command]}

    def validate(self) -> "RunConfig":
        for name, (_, _, check, _) in self.spec().items():
            v = self.params.get(name)
            if check is not None and v is not None:
                check(name, v)
        p = self.params
        if "delta" in p:
            a0 = p.get("a0")
            if a0 is None:
                p["a0"] = 0.5 + 2 * p["delta"]
            elif a0 < 0.5 + 2 * p["delta"] - 1e-12:
                raise ConfigError("a0", f"must be at least 1/2 + 2 delta = {0.5 + 2 * p['delta']}")
            if p["dt"] >= p["tau_max"]:
                raise ConfigError("dt", "must be smaller than tau_max")
        if self.command == "simulate" and p["base"] not in ("static", "fixed-point"):
            raise ConfigError("base", "must be 'static' or 'fixed-point'")
        if self.command == "reconstruct":
            try:
                ts = _floats(p["times"])
            except ValueError:
                raise ConfigError("times", f"not a list of numbers: {p['times']!r}") from None
            if not ts or any(not 0 <= t < p["T"] for t in ts):
                raise ConfigError("times", "every time must lie in [0, T)")
        if self.command == "manifold" and p["seeds"]:
            try:
                _ints(p["seeds"])
            except ValueError:
                raise ConfigError("seeds", f"not a list of integers: {p['seeds']!r}") from None
        return self

    @property
    def trunc(self):
        return (self.params["trunc_n"], self.params["trunc_m"])

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp[self.command] = {k: _fmt_value(v) for k, v in sorted(self.params.items()) if v is not None}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str, command: str, out=Path("cylflow-run")) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read_string(text)
        merged = {}
        for sec in ("common", command):
            if cp.has_section(sec):
                merged.update(cp[sec])
        params = {}
        spec = {**COMMON, **COMMANDS[command]}
        for k, raw in merged.items():
            if k not in spec:
                raise ConfigError(k, f"unknown parameter for '{command}'")
            params[k] = _parse(k, spec[k][0], raw)
        for k, (_, default, _, _) in spec.items():
            params.setdefault(k, default)
        return cls(command, params, out)


def _fmt_value(v):
    return repr(v) if isinstance(v, float) else str(v)


def _parse(name, typ, raw):
    try:
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(name, f"cannot read {raw!r} as {typ.__name__}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cylflow", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd, spec in COMMANDS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", type=Path, help="INI file with [common] and [%s] sections" % cmd)
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        for name, (typ, default, _, helptext) in {**COMMON, **spec}.items():
            flag = "--" + name.replace("_", "-")
            if name == "a":
                flag = "--a"
            sp.add_argument(flag, dest=name, type=str, default=None,
                            help=f"{helptext} (default {default})")
    return ap


def resolve(args: argparse.Namespace) -> RunConfig:
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}") from None
        try:
            cfg = RunConfig.from_ini(text, args.command)
        except configparser.Error as exc:
            raise ConfigError("config", f"malformed file: {exc}") from None
    else:
        cfg = RunConfig.from_ini("", args.command)
    spec = cfg.spec()
    for name, (typ, _, _, _) in spec.items():
        raw = getattr(args, name, None)
        if raw is not None:
            cfg.params[name] = _parse(name, typ, raw)
    cfg.out = args.out or Path(f"cylflow-{args.command}")
    return cfg.validate()


# ---------------------------------------------------------------------------
# artifact writing
# ---------------------------------------------------------------------------

class Artifacts:
    """Collects files written into the output directory and their hashes."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def write_bytes(self, name: str, data: bytes) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        return p

    def write_text(self, name: str, text: str) -> Path:
        return self.write_bytes(name, text.encode())

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")

    def write_csv(self, name: str, header, rows) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(x) for x in r])
        return self.write_text(name, buf.getvalue())

    def finish(self, cfg: RunConfig, status: int) -> None:
        self.write_text("config.ini", cfg.to_ini())
        manifest = {
            "command": cfg.command,
            "status": status,
            "artifacts": [{"file": k, "sha256": v} for k, v in sorted(self.files.items())],
        }
        data = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode()
        (self.root / "manifest.json").write_bytes(data)


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return x


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if math.isfinite(f) else repr(f)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    return o


def _check(value, bound, passed=None, **extra):
    if passed is None:
        passed = bool(value <= bound)
    return {"value": value, "bound": bound, "passed": bool(passed), **extra}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig, art: Artifacts) -> int:
    from .spectral_operator import dense_spectrum, spectrum_table

    p = cfg.params
    rows = spectrum_table(p["a"], cfg.trunc, p["naxis"])
    art.write_csv("spectrum.csv", ["alpha_multi_index", "fourier_m", "eigenvalue", "classification"], rows)
    report = {
        "a": p["a"], "n_axis": p["naxis"], "trunc": list(cfg.trunc),
        "lowest": [r[2] for r in rows[:12]],
        "counts": {c: sum(1 for r in rows if r[3] == c) for c in ("unstable", "zero", "stable")},
    }
    status = EXIT_OK
    if p["dense_check"]:
        dense = np.sort(dense_spectrum(p["a"], cfg.trunc, p["naxis"]))
        lattice = np.sort([r[2] for r in rows])
        dev = float(np.max(np.abs(dense - lattice)))
        report["dense_max_deviation"] = dev
        if dev > 1e-9:
            status = EXIT_FAIL
    art.write_json("report.json", report)
    return status


def _sample(cfg: RunConfig, seed: int | None = None):
    from .stable_manifold import sample_seed

    p = cfg.params
    rng = np.random.default_rng(p["seed"] if seed is None else seed)
    return sample_seed(rng, p["delta"], p["a0"], cfg.trunc, p["naxis"])


def _load_seed(cfg: RunConfig):
    from .stable_manifold import SeedFunction, stable_sector_projection
    from .weighted_space import field_from_bytes, field_from_json, rebase

    path = Path(cfg.params["seed_field"])
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError("seed_field", f"cannot read {path}: {exc}") from None
    try:
        f = field_from_bytes(raw) if raw[:4] == b"CYLF" else field_from_json(raw.decode())
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise ConfigError("seed_field", f"not a field file: {exc}") from None
    if f.trunc != cfg.trunc or f.n_axis != cfg.params["naxis"]:
        raise ConfigError("seed_field", f"truncation {f.trunc} x n_axis {f.n_axis} does not match the run")
    a0 = cfg.params["a0"]
    proj = stable_sector_projection(f, a0)
    if np.max(np.abs(proj.coeffs - f.coeffs)) > 1e-10 * max(1.0, np.max(np.abs(f.coeffs))):
        raise ConfigError("seed_field", "field has components on non-stable modes at a0")
    return SeedFunction(rebase(f, 0.5), cfg.params["delta"], a0)


def _path_rows(path, stride, s=2):
    from .frozen_solver import xi_norms

    xn = xi_norms(path, 0.5, s)
    n = path.n_axis
    header = (["tau", "a"] + [f"z{l + 1}" for l in range(2)]
              + [f"g{l + 1}_{i + 1}" for l in range(2) for i in range(n)]
              + ["da"] + [f"dz{l + 1}" for l in range(2)]
              + [f"dg{l + 1}_{i + 1}" for l in range(2) for i in range(n)] + ["xi_norm"])
    rows = []
    idx = list(range(0, len(path.taus), stride))
    if idx[-1] != len(path.taus) - 1:
        idx.append(len(path.taus) - 1)
    for j in idx:
        rows.append([path.taus[j], path.a[j], *path.z[j], *path.g[j].reshape(-1),
                     path.da[j], *path.dz[j], *path.dg[j].reshape(-1), xn[j]])
    return header, rows


def _write_flow(path, art, every, s=2):
    """Per-node ``(tau, ||xi||_s, sigma, orthogonality)`` plus periodic xi snapshots."""
    from .frozen_solver import orthogonality_profile, xi_norms
    from .weighted_space import field_to_dict

    S = path.sigma_matrix()
    n = path.n_axis
    header = (["tau", "norm_xi_s"] + [f"g{l + 1}_{i + 1}" for l in range(2) for i in range(n)]
              + ["z1", "z2", "a", "orthogonality"])
    orth = orthogonality_profile(path)
    xn = xi_norms(path, 0.5, s)
    art.write_csv("flow.csv", header,
                  ([path.taus[j], xn[j], *S[j], orth[j]] for j in range(len(path.taus))))
    if every > 0:
        for j in range(0, len(path.taus), every):
            art.write_json(f"snapshots/xi_{j:06d}.json", field_to_dict(path.xi_field(j)))


def _decay_report(path, delta, c0):
    from .frozen_solver import japanese, xi_norms
    from .stable_manifold import decay_exponent

    xn = xi_norms(path)
    S = path.sigma_matrix()
    ds0 = np.linalg.norm(S - S[0], axis=1)
    dsinf = np.linalg.norm(S - S[-1], axis=1)
    jt = japanese(path.taus)
    return {
        "xi_exponent": decay_exponent(path.taus, xn),
        "sigma_exponent": decay_exponent(path.taus, ds0),
        "sigma_to_limit_exponent": decay_exponent(path.taus, dsinf, hi=0.75 * path.taus[-1]),
        "xi_envelope_ratio": float(np.max(xn * jt**2) / delta),
        "sigma_envelope_constant": float(np.max(ds0 * jt) / delta),
    }


def _manifold_one(cfg: RunConfig, seed: int, art: Artifacts, prefix: str = "") -> int:
    from .frozen_solver import membership_check, orthogonality_profile, tau_grid
    from .rescaling import tangent_flow_limit
    from .stable_manifold import (
        correction_field,
        fixed_point,
        graph_condition_after,
        self_consistency_residual,
    )
    from .weighted_space import field_to_dict

    p = cfg.params
    sf = _sample(cfg, seed)
    taus = tau_grid(p["tau_max"], p["dt"])
    res = fixed_point(sf, tol=p["tol"], max_iter=p["max_iter"], taus=taus, c0=p["c0"])
    path = res.path
    phi_f = correction_field(res.coeffs, sf.a0, sf.eta0.trunc, sf.eta0.n_axis, sf.eta0.basis_weight)
    resid = self_consistency_residual(path)[1:-1]
    resid_fd = self_consistency_residual(path, finite_difference=True)[1:-1]
    member = membership_check(path, sf.delta, p["c0"])
    tl = tangent_flow_limit(path)
    decay = _decay_report(path, sf.delta, p["c0"])
    report = {
        "seed": seed, "seed_sha256": sf.digest(), "delta": sf.delta, "a0": sf.a0,
        "beta": res.coeffs.beta, "gamma": res.coeffs.gamma,
        "ratios": res.ratios, "ratio_bound": res.ratio_bound,
        "ratios_within_bound": res.ratios_within_bound,
        "update_norms": res.differences, "iterations": res.iterations,
        "decay_fits": decay,
        "residuals": {
            "self_consistency_max": float(resid.max()),
            "self_consistency_fd_max": float(resid_fd.max()),
            "orthogonality_max": float(orthogonality_profile(path).max()),
            "graph_condition_min": graph_condition_after(sf, phi_f),
        },
        "membership": {"passed": member.passed, "smallest_c0": member.smallest_c0},
        "tangent_flow": {"a_inf": tl.a, "radius": tl.radius, "deviation": tl.deviation,
                         "fit_error": tl.fit_error},
    }
    art.write_json(prefix + "report.json", report)
    header, rows = _path_rows(path, p["stride"])
    art.write_csv(prefix + "sigma_path.csv", header, rows)
    art.write_json(prefix + "eta0.json", field_to_dict(sf.eta0))
    art.write_json(prefix + "phi.json", field_to_dict(phi_f))
    ok = res.ratios_within_bound and member.passed and report["residuals"]["graph_condition_min"] > 0
    return EXIT_OK if ok else EXIT_FAIL


def _manifold_worker(args):
    cfg_text, out, seed = args
    cfg = RunConfig.from_ini(cfg_text, "manifold", Path(out)).validate()
    art = Artifacts(Path(out))
    try:
        status = _manifold_one(cfg, seed, art, prefix=f"seed_{seed}/")
    except DivergenceError as exc:
        art.write_json(f"seed_{seed}/error.json", {"error": str(exc)})
        status = EXIT_DIVERGED
    return status, art.files


def cmd_manifold(cfg: RunConfig, art: Artifacts) -> int:
    seeds = _ints(cfg.params["seeds"]) if cfg.params["seeds"] else []
    status = _manifold_one(cfg, cfg.params["seed"], art)
    if seeds:
        jobs = cfg.params["jobs"]
        work = [(cfg.to_ini(), str(art.root), s) for s in seeds]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                results = list(ex.map(_manifold_worker, work))
        else:
            results = [_manifold_worker(w) for w in work]
        for st, files in results:
            art.files.update(files)
            status = max(status, st)
    return status


def cmd_simulate(cfg: RunConfig, art: Artifacts) -> int:
    from .frozen_solver import (
        FlowPath, FrozenProblem, membership_check, orthogonality_profile, solve_frozen, tau_grid,
    )
    from .modulation import SymmetryParams
    from .stable_manifold import fixed_point

    p = cfg.params
    sf = _load_seed(cfg) if p["seed_field"] else _sample(cfg)
    taus = tau_grid(p["tau_max"], p["dt"])
    if p["base"] == "static":
        base = FlowPath.static(SymmetryParams.identity(sf.a0, p["naxis"]), taus, cfg.trunc)
    else:
        base = fixed_point(sf, taus=taus, c0=p["c0"]).path
    sol = solve_frozen(FrozenProblem(base, sf.eta0, delta=sf.delta))
    member = membership_check(sol.path, sf.delta, p["c0"])
    orth = float(orthogonality_profile(sol.path).max())
    report = {
        "seed_sha256": sf.digest(), "base": p["base"],
        "beta": sol.coeffs.beta, "gamma": sol.coeffs.gamma, "tail_budget": sol.tail_budget,
        "orthogonality_max": orth, "membership_passed": member.passed,
        "decay_fits": _decay_report(sol.path, sf.delta, p["c0"]),
    }
    art.write_json("report.json", report)
    header, rows = _path_rows(sol.path, p["stride"])
    art.write_csv("sigma_path.csv", header, rows)
    _write_flow(sol.path, art, p["snapshot_every"])
    return EXIT_OK if (orth <= 1e-6 and member.passed) else EXIT_FAIL


def cmd_reconstruct(cfg: RunConfig, art: Artifacts) -> int:
    from .frozen_solver import FlowPath, tau_grid
    from .modulation import SymmetryParams
    from .rescaling import reconstruct_flow, rescaling_from_path, round_trip_error
    from .stable_manifold import fixed_point

    p = cfg.params
    taus = tau_grid(p["tau_max"], p["dt"])
    if p["static"]:
        path = FlowPath.static(SymmetryParams.identity(p["a0"], p["naxis"]), taus, cfg.trunc)
    else:
        path = fixed_point(_sample(cfg), taus=taus, c0=p["c0"]).path
    rs = rescaling_from_path(path, p["T"])
    y = np.linspace(-p["y_max"], p["y_max"], p["y_points"])
    samples = reconstruct_flow(path, rs, _floats(p["times"]), y=y)
    n = path.n_axis
    header = ["t"] + [f"x{i + 1}" for i in range(n + 2)] + ["radius"]
    rows, errs = [], []
    for s in samples:
        pts = s.points.reshape(-1, n + 2)
        rad = (s.lam * s.radius).reshape(-1)
        rows.extend([s.t, *pt, r] for pt, r in zip(pts, rad))
        errs.append(round_trip_error(s))
    art.write_csv("flow.csv", header, rows)
    report = {
        "T": p["T"], "times": [s.t for s in samples], "taus": [s.tau for s in samples],
        "lambda": [s.lam for s in samples], "round_trip_error": errs,
        "lambda_identity_residual": rs.identity_residual(),
    }
    art.write_json("report.json", report)
    return EXIT_OK if max(errs) <= 1e-10 else EXIT_FAIL


# ---------------------------------------------------------------------------
# verify suites
# ---------------------------------------------------------------------------

def _suite_spectrum(cfg):
    from .spectral_operator import build_modes, dense_spectrum, kappa_lattice, mode_residual

    p = cfg.params
    a = p["a0"]
    dense = np.sort(dense_spectrum(a, cfg.trunc, p["naxis"]))
    lattice = np.sort(a * kappa_lattice(cfg.trunc, p["naxis"]).reshape(-1))
    modes = build_modes(a, cfg.trunc, p["naxis"])
    worst = max(mode_residual(m, a) for m in modes.modes)
    return {
        "dense_vs_lattice": _check(float(np.max(np.abs(dense - lattice))), 1e-9),
        "mode_residual": _check(worst, 1e-10),
    }


def _suite_nonlinearity(cfg):
    from ._random import random_field, scaled
    from .nonlinearity import (
        N_apply, N_lipschitz, cylinder, expansion_residual, gradient_consistency, quadratic_slope,
    )
    from .spectral_operator import build_modes
    from .weighted_space import SpectralField, sobolev_norm

    p = cfg.params
    a = p["a0"]
    rng = np.random.default_rng(p["seed"])
    n = p["naxis"]
    if p["zero_field"]:
        xi = SpectralField.zeros(cfg.trunc, n)
        return {
            "identity_residual": _check(expansion_residual(a, xi), 0.0),
            "N_at_zero": _check(float(np.max(np.abs(N_apply(a, xi).coeffs))), 0.0),
        }
    fields = [scaled(random_field(rng, cfg.trunc, n), 0.05, sup_cap=0.3) for _ in range(p["samples"])]
    ident = max(expansion_residual(a, x) for x in fields)
    orders = []
    for x in fields:
        h = scaled(random_field(rng, cfg.trunc, n), 0.1, sup_cap=0.3)
        v = cylinder(a, cfg.trunc, n) + x
        orders.append(gradient_consistency(v, h, a)[1])
    modes = build_modes(a, cfg.trunc, n)
    slopes = [quadratic_slope(a, fields[0], modes, lab) for lab in ((1, 0), (2, 0))]
    lips = []
    for x in fields[:3]:
        d1 = 0.05
        x0 = x * (0.5 * d1 / sobolev_norm(x, 0.5))
        dx = scaled(random_field(rng, cfg.trunc, n), 0.1 * d1, sup_cap=0.3)
        lhs, rhs = N_lipschitz(a, x0, a + 1e-3, x0 + dx, d1)
        lips.append(lhs / rhs)
    return {
        "identity_residual": _check(ident, 1e-8),
        "gradient_consistency_order": _check(min(orders), 1.9, passed=min(orders) >= 1.9),
        "quadratic_slope": _check(slopes, [1.95, 2.05],
                                  passed=all(abs(s - 2) <= 0.05 for s in slopes)),
        "lipschitz_ratios": _check(max(lips), 1.0, ratios=lips),
    }


def _suite_interpolation(cfg):
    from ._random import random_field, scaled
    from .weighted_space import interpolation_check, pivot_norm

    p = cfg.params
    rng = np.random.default_rng(p["seed"])
    delta = p["delta"]
    worst = 0.0
    for _ in range(p["samples"]):
        phi = scaled(random_field(rng, cfg.trunc, p["naxis"]), delta)
        c = max(pivot_norm(phi, delta), 1e-300)
        for a in np.linspace(0.5, 0.5 + 2 * delta, 5):
            lhs, rhs = interpolation_check(phi, a, c, delta)
            worst = max(worst, lhs / rhs)
    return {"interpolation_ratio": _check(worst, 1.0)}


def _suite_orthogonality(cfg):
    from .frozen_solver import FlowPath, FrozenProblem, orthogonality_profile, solve_frozen, tau_grid
    from .modulation import SymmetryParams

    p = cfg.params
    sf = _sample(cfg)
    taus = tau_grid(p["tau_max"], p["dt"])
    base = FlowPath.static(SymmetryParams.identity(sf.a0, p["naxis"]), taus, cfg.trunc)
    sol = solve_frozen(FrozenProblem(base, sf.eta0, delta=sf.delta))
    return {"orthogonality_max": _check(float(orthogonality_profile(sol.path).max()), 1e-6)}


def _suite_decay(cfg):
    from .frozen_solver import tau_grid
    from .stable_manifold import fixed_point

    p = cfg.params
    sf = _sample(cfg)
    res = fixed_point(sf, taus=tau_grid(p["tau_max"], p["dt"]), c0=p["c0"])
    d = _decay_report(res.path, sf.delta, p["c0"])
    return {
        "xi_exponent": _check(d["xi_exponent"], 1.9, passed=d["xi_exponent"] >= 1.9),
        "sigma_exponent": _check(d["sigma_exponent"], 0.9, passed=d["sigma_exponent"] >= 0.9,
                                 sigma_to_limit_exponent=d["sigma_to_limit_exponent"]),
        "xi_envelope": _check(d["xi_envelope_ratio"], 1.0),
        "contraction": _check(float(res.ratios.max()) if res.ratios.size else 0.0, res.ratio_bound),
    }


def _suite_rescaling(cfg):
    from .rescaling import build_rescaling

    a0, T = cfg.params["a0"], 1.0
    rs = build_rescaling(lambda t: np.full(np.shape(t), a0), T)
    u = T - rs.t_grid
    lam_err = float(np.max(np.abs(rs.lam - np.sqrt(2 * a0 * u))))
    tau_err = float(np.max(np.abs(rs.tau + np.log(u / T) / (2 * a0))))
    inv = max(abs(rs.t_of_tau(rs.tau_of_t(t)) - t) for t in rs.t_grid[::20])
    return {
        "lambda_closed_form": _check(lam_err, 1e-10),
        "tau_closed_form": _check(tau_err, 1e-10),
        "inverse_time": _check(inv, 1e-10),
        "lambda_identity": _check(rs.identity_residual(), 1e-8),
    }


_SUITE_FUNCS = {
    "spectrum": _suite_spectrum,
    "nonlinearity": _suite_nonlinearity,
    "interpolation": _suite_interpolation,
    "orthogonality": _suite_orthogonality,
    "decay": _suite_decay,
    "rescaling": _suite_rescaling,
}


def cmd_verify(cfg: RunConfig, art: Artifacts) -> int:
    suites = SUITES if cfg.params["suite"] == "all" else (cfg.params["suite"],)
    report = {name: _SUITE_FUNCS[name](cfg) for name in suites}
    failed = [f"{s}.{c}" for s, checks in report.items() for c, r in checks.items() if not r["passed"]]
    report["failed"] = failed
    art.write_json("verify.json", report)
    for s, checks in report.items():
        if s == "failed":
            continue
        for c, r in checks.items():
            print(f"{'PASS' if r['passed'] else 'FAIL'} {s}.{c}: {r['value']} (bound {r['bound']})")
    return EXIT_FAIL if failed else EXIT_OK


COMMAND_FUNCS = {
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "manifold": cmd_manifold,
    "verify": cmd_verify,
    "reconstruct": cmd_reconstruct,
}


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration; returns the exit status."""
    art = Artifacts(cfg.out)
    try:
        status = COMMAND_FUNCS[cfg.command](cfg, art)
    except (DivergenceError, AdmissibilityError, SamplingError) as exc:
        art.write_json("error.json", {"error": type(exc).__name__, "message": str(exc)})
        status = EXIT_DIVERGED
    art.finish(cfg, status)
    return status


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        status = run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CylflowError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"wrote {cfg.out} (status {status})")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
