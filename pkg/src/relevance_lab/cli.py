"""Batch experiment runner.

Every subcommand reads its parameters from built-in defaults, then an
optional ``--config`` JSON file, then command-line flags (flags win).  Flags
mirror config keys one to one (``grid_points`` <-> ``--grid-points``).  Each
run writes a CSV table and a ``.meta.json`` sidecar recording the resolved
parameters and every convention in force.

Exit status is 0 on success, 2 for invalid input and 3 for numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import NumericalError, RelevanceLabError, ValidationError, WindowError
from .io import to_jsonable, write_csv, write_metadata

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
CONFIG_KEYS = {"experiment", "params", "output_path", "seed"}


@dataclass(frozen=True)
class Param:
    kind: str  # float, int, str, bool, floats, ints, opt_int
    default: Any
    help: str = ""
    choices: tuple | None = None


@dataclass(frozen=True)
class Experiment:
    name: str
    help: str
    params: dict
    run: Callable
    needs_seed: bool = False
    check: Callable | None = None


@dataclass
class Result:
    columns: tuple
    rows: list
    summary: dict
    conventions: dict
    failed: str | None = None


# --------------------------------------------------------------------------- #
# parameter handling

def _coerce(name: str, p: Param, value):
    def bad(what):
        return ValidationError(f"parameter {name!r}: expected {what}, got {value!r}")

    if p.kind == "opt_int" and value is None:
        return None
    if p.kind in ("int", "opt_int"):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise bad("an integer")
        return int(value)
    if p.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad("a number")
        return float(value)
    if p.kind == "bool":
        if not isinstance(value, bool):
            raise bad("true or false")
        return value
    if p.kind == "str":
        if not isinstance(value, str):
            raise bad("a string")
        if p.choices and value not in p.choices:
            raise bad(f"one of {list(p.choices)}")
        return value
    if p.kind in ("floats", "ints"):
        if not isinstance(value, (list, tuple)) or not value:
            raise bad("a nonempty list")
        inner = Param("float" if p.kind == "floats" else "int", None)
        return [_coerce(name, inner, v) for v in value]
    raise AssertionError(p.kind)


def resolve_params(exp: Experiment, config_params: dict | None = None, flags: dict | None = None) -> dict:
    """Defaults, then config values, then flags; unknown keys are rejected."""
    out = {k: p.default for k, p in exp.params.items()}
    for source in (config_params or {}), (flags or {}):
        unknown = set(source) - set(exp.params)
        if unknown:
            raise ValidationError(f"unknown parameters for {exp.name}: {sorted(unknown)}")
        for k, v in source.items():
            if v is not None or exp.params[k].kind == "opt_int":
                out[k] = _coerce(k, exp.params[k], v)
    return out


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"config file {path} not found") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"config file {path} is not valid JSON: {e}") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    if "params" in cfg and not isinstance(cfg["params"], dict):
        raise ValidationError("config 'params' must be an object")
    return cfg


# --------------------------------------------------------------------------- #
# experiments

def _toy_spectrum(p: dict, seed) -> Result:
    from .toy_rg import hermite_reference, toy_exact_relevance, toy_grid_spectrum

    spec = toy_grid_spectrum(p["tau"], p["sigma"], count=p["count"], start=-p["half_width"],
                             stop=p["half_width"], cells=p["grid_points"])
    probs = spec.rho.probs
    rows = []
    for n in range(p["count"]):
        exact = toy_exact_relevance(n, p["tau"], p["sigma"])
        A = spec.observables[n]
        H = hermite_reference(n, p["tau"], spec.rho.grid)
        overlap = abs(np.sum(probs * A * H)) / math.sqrt(np.sum(probs * A * A) * np.sum(probs * H * H))
        rows.append((n, spec.etas[n], exact, abs(spec.etas[n] / exact - 1.0), overlap))
    worst = max(r[3] for r in rows)
    return Result(("n", "eta", "eta_exact", "rel_error", "hermite_overlap"), rows,
                  {"max_rel_error": worst, "min_overlap": min(r[4] for r in rows)},
                  {"grid": "cell-centred uniform grid on [-half_width, half_width]",
                   "kernel": "Gaussian convolution, columns renormalised to stay stochastic",
                   "index_0": "reference state itself (observable 1, eta = 1)",
                   "overlap": "rho-weighted cosine with He_n(x/tau)"})


def _toy_check(p: dict) -> list[str]:
    dx = 2 * p["half_width"] / p["grid_points"]
    if p["sigma"] < 3 * dx:
        return [f"sigma={p['sigma']:g} is below 3x the grid spacing {dx:g}; "
                "the convolution kernel is under-resolved and the run will be rejected"]
    return []


def _toy_rgflow(p: dict, seed) -> Result:
    from .toy_rg import flow_trace, rg_coefficients

    rec = flow_trace(p["lambda_phys"], p["tau_phys"], p["eps6"], p["check_equivalence"], p["threshold"])
    summary = {"rows": len(rec)}
    if rec.equivalent is not None:
        summary["equivalent_to_first_row"] = rec.equivalent
    if p["coefficients"]:
        c = rg_coefficients(tau_phys=p["tau_phys"])
        summary["coefficients"] = {"dlambda_deps6": c.dlam_deps, "dtau_over_tau_dlambda_phys": c.dtau_dlam,
                                   "dtau_over_tau_deps6": c.dtau_deps, "cross_d2lambda": c.cross}
    return Result(rec.columns, [tuple(r) for r in rec.rows()], summary,
                  {"matched_moments": [2, 4],
                   "negative_lambda_target": "m4 = tau**4 (3 - 24 lambda_phys), first order",
                   "equivalence_reference": "Gaussian of width tau_phys blurred at sigma = tau_phys",
                   "derivatives": "one-sided stencils with Richardson extrapolation"})


def _field_relevance(p: dict, seed) -> Result:
    from .gaussian_sector import (ClassicalFieldTheory, FieldLattice, SmearingParams,
                                  phi_laplacian_phi_relevance, phi_squared_relevance, scaling_exponent)

    lat = FieldLattice(p["d"], p["spacing"], p["extent"])
    theory = ClassicalFieldTheory(p["beta"], p["m"], p["mass_outside_beta"])
    values = np.geomspace(p["sweep_min"], p["sweep_max"], p["points"])
    rows = []
    for x in values:
        sigma, h = (x, p["h"]) if p["variable"] == "sigma" else (p["sigma"], x)
        smear = SmearingParams(sigma, h, kernel_normalization=p["kernel_normalization"])
        rows.append((sigma, h, phi_squared_relevance(lat, theory, smear),
                     phi_laplacian_phi_relevance(lat, theory, smear)))
    summary = {}
    failed = None
    if p["fit"]:
        for kind in ("phi2", "phi_laplacian_phi"):
            try:
                fit = scaling_exponent(kind, lat, theory, p["h"], (p["sweep_min"], p["sweep_max"]),
                                       variable=p["variable"], points=p["points"], sigma=p["sigma"],
                                       max_nonlinearity=p["max_nonlinearity"])
            except WindowError as e:
                failed = f"WindowError in relevance_lab.gaussian_sector.classical_field: {e}"
                break
            summary[f"slope_{kind}"] = fit.slope
            summary[f"nonlinearity_{kind}"] = fit.nonlinearity
    return Result(("sigma", "h", "eta_phi2", "eta_phi_laplacian_phi"), rows, summary,
                  {"a_k": "beta * (mass_outside_beta ? k**2 : k**2 + m**2) + (mass_outside_beta ? m**2 : 0)",
                   "kernel_normalization": p["kernel_normalization"],
                   "modes": "discrete Fourier wavevectors of a periodic lattice",
                   "observables": "phi**2 weights a_k**-2; phi laplacian phi weights k**4 a_k**-2"},
                  failed)


def _qfield_relevance(p: dict, seed) -> Result:
    from .gaussian_sector import (QFieldState, SmearingParams, product_relevance,
                                  qfield_mode_relevance, qfield_mode_relevance_exact)

    state = QFieldState(p["beta"], p["m"])
    smear = SmearingParams(p["sigma"], h_phi=p["h_phi"], h_pi=p["h_pi"])
    rows = []
    for k in p["k"]:
        ephi, epi = qfield_mode_relevance(k, state, smear, p["use_h_pi"])
        xphi, xpi = qfield_mode_relevance_exact(k, state, smear)
        rows.append((k, state.omega(np.atleast_1d(k)), ephi, epi, xphi, xpi))
    summary = {}
    if len(set(p["k"])) == len(p["k"]):
        summary["product_phi"] = product_relevance([[k] for k in p["k"]], state, smear, use_h_pi=p["use_h_pi"])
    return Result(("k", "omega", "eta_phi", "eta_pi", "eta_phi_exact", "eta_pi_exact"), rows, summary,
                  {"eta_pi_precision": "h_pi" if p["use_h_pi"] else "h_phi (as printed)",
                   "exact_channel": "v**2 -> X**2 v**2 + 2 h_phi**2, u**2 -> X**2 u**2 + 2 h_pi**2",
                   "X_k": "exp(-k**2 sigma**2 / 2)"})


def _particle_relevance(p: dict, seed) -> Result:
    from .channels import GaussianChannelSpec
    from .gaussian_sector import (QuantumGaussianState, fock_relevance_oracle, gaussian_sector_spectrum,
                                  phase_covariant_oracle, quantum_particle_relevance)

    state = QuantumGaussianState(p["u"], p["v"])
    rel = quantum_particle_relevance(state, p["sigma_x"], p["sigma_p"])
    sector = gaussian_sector_spectrum(state, GaussianChannelSpec.quadrature_noise(p["sigma_x"], p["sigma_p"]))
    qo = sector.quadratic_observables / np.linalg.norm(sector.quadratic_observables, axis=0)
    quad_exact = {"x2": sector.quadratic_etas[int(np.argmax(np.abs(qo[0])))],
                  "p2": sector.quadratic_etas[int(np.argmax(np.abs(qo[2])))]}
    xq, pq = rel.quadratic_pair
    asym = {"x": rel.eta_x, "p": rel.eta_p, "x2": xq.eta, "p2": pq.eta}
    exact = {"x": rel.eta_x_exact, "p": rel.eta_p_exact, **quad_exact}
    fock = {}
    summary = {"s": state.s, "uv": state.uv}
    failed = None
    if p["fock"]:
        try:
            if p["oracle"] == "general":
                res = fock_relevance_oracle(state, p["sigma_x"], p["sigma_p"], n_in=p["n_in"] or 40,
                                            n_out=p["n_out"])
                fock = {k: (v["eta"], v["overlap"]) for k, v in res.probes.items()}
            else:
                res = phase_covariant_oracle(state, p["sigma_x"], p["sigma_p"], n_in=p["n_in"], n_out=p["n_out"])
                # circular noise: x and p share the offset-1 block, and the quadratic blocks are shared too
                fock = {"x": (res.eta("a"), res.probes["a"]["overlap"]),
                        "p": (res.eta("a"), res.probes["a"]["overlap"]),
                        "x2": (res.eta("x2"), math.nan), "p2": (res.eta("x2"), math.nan)}
                summary.update(eta_number=res.eta("n"), eta_offset2=res.eta("a2"))
            summary.update(n_in=res.n_in, n_out=res.n_out, input_tail=res.input_tail)
        except NumericalError as e:
            failed = f"Fock oracle: {type(e).__name__}: {e}"
            fock = {}
    rows = []
    for name in ("x", "p", "x2", "p2"):
        f = fock.get(name, (math.nan, math.nan))
        rows.append((name, asym[name], exact[name], f[0], f[1]))
    return Result(("observable", "eta_asymptotic", "eta_exact", "eta_fock", "fock_overlap"), rows, summary,
                  {"oracle": p["oracle"],
                   "truncation_n_in": p["n_in"] or ("40" if p["oracle"] == "general" else "automatic"),
                   "truncation_n_out": p["n_out"] or "automatic",
                   "noise": "v**2 -> v**2 + sigma_x**2, u**2 -> u**2 + sigma_p**2",
                   "quadratic_pair": "x**2 - v**2/2 with v**4 sigma_x**-4; p**2 - u**2/2 with u**4 sigma_p**-4",
                   "fock_x2": "Rayleigh quotient of centred x**2" if p["oracle"] != "general"
                   else "eigenvalue of largest overlap with centred x**2"},
                  failed)


def _mass_shell(p: dict, seed) -> Result:
    from .gaussian_sector import mass_shell_shift, shell_integral, shell_integral_closed_form

    args = (p["m"], p["ir"], p["uv"], p["d"], p["measure"])
    quad = shell_integral(*args)
    closed = shell_integral_closed_form(*args)
    m2 = mass_shell_shift(p["m"], p["lambda"], p["uv"], p["ir"], p["d"], p["measure"])
    return Result(("d", "m", "lambda", "ir", "uv", "shell_quadrature", "shell_closed_form", "m_phys2"),
                  [(p["d"], p["m"], p["lambda"], p["ir"], p["uv"], quad, closed, m2)],
                  {"m_phys2": m2, "closed_form_gap": abs(quad - closed)},
                  {"measure": p["measure"], "radial_measure": "Omega_{d-1} k**(d-1) dk / (2 omega_k)",
                   "temperature": "zero (<phi_k phi_-k> = 1/(2 omega_k))"})


def _quantum_props(p: dict, seed) -> Result:
    from .properties import PropertyReport, run_property_suite

    rep = run_property_suite(p["dim"], p["trials"], seed)
    viol = rep.violations
    summary = {"violations": viol, "worst": rep.worst(), "total_violations": sum(viol.values())}
    failed = None if rep.ok else f"invariant violations: {viol}"
    return Result(PropertyReport.COLUMNS, rep.rows(), summary,
                  {"state": "Ginibre mixed with 5% maximally mixed",
                   "channel": "Stinespring isometry, output dim <= input dim",
                   "feature": "traceless Hermitian, unit metric norm",
                   "entropy_slope": "fit of |S - eps**2 <X,X>/2| over eps in [1e-2, 1e-4]"},
                  failed)


def _equivalence_demo(p: dict, seed) -> Result:
    from .channels import partial_trace_channel
    from .eigenrelevance import relevance_operator, solve_spectrum
    from .kubo_mori import DensityMatrix
    from .properties import random_density_matrix
    from .toy_rg import flow_trace

    dA, dB = p["dims"]
    channel = partial_trace_channel((dA, dB), [0])
    rows = []
    spec = solve_spectrum(relevance_operator(DensityMatrix(np.eye(dA * dB) / (dA * dB)), channel))
    expect = np.r_[np.ones(dA * dA), np.zeros(dA * dA * (dB * dB - 1))]
    dev = float(np.max(np.abs(spec.etas - expect)))
    rows.append(("maximally_mixed_spectrum", 0, dev, 1e-9, dev <= 1e-9))
    rng = np.random.default_rng(seed)
    for t in range(p["trials"]):
        rho = DensityMatrix(np.kron(random_density_matrix(dA, rng).matrix, random_density_matrix(dB, rng).matrix))
        spec = solve_spectrum(relevance_operator(rho, channel))
        binary = float(np.max(np.minimum(np.abs(spec.etas), np.abs(spec.etas - 1))))
        top = spec.observables[spec.etas > 0.5]
        # each eta = 1 observable must be A (x) 1
        red = [np.einsum("iaja->ij", A.reshape(dA, dB, dA, dB)) / dB for A in top]
        tensor = max(float(np.max(np.abs(A - np.kron(R, np.eye(dB))))) for A, R in zip(top, red))
        ok = binary <= 1e-8 and tensor <= 1e-8 and len(top) == dA * dA
        rows.append(("factorized_projector", t, max(binary, tensor), 1e-8, ok))
    for n in (p["threshold"], p["threshold"] + 2):
        rec = flow_trace(p["lambda_phys"], 1.0, p["eps6"], True, n)
        rows.append((f"moment_matching_threshold_{n}", 0, float(np.mean(rec.equivalent)), 1.0,
                     bool(np.all(rec.equivalent))))
    return Result(("check", "case", "value", "tolerance", "passed"), rows,
                  {"passed": {r[0]: r[4] for r in rows if r[0] != "factorized_projector"},
                   "factorized_all_passed": all(r[4] for r in rows if r[0] == "factorized_projector")},
                  {"partial_trace_keep": "subsystem 0 (0-based)",
                   "moment_matching": "thresholds above 4 are expected to separate the matched states"})


_TOY = {
    "tau": Param("float", 1.0, "reference width"),
    "sigma": Param("float", 1.0, "convolution width"),
    "grid_points": Param("int", 600, "grid cells"),
    "half_width": Param("float", 12.0, "grid covers [-half_width, half_width]"),
    "count": Param("int", 7, "eigenpairs to report"),
}

EXPERIMENTS = {e.name: e for e in [
    Experiment("toy-spectrum", "grid eigenrelevance spectrum of the Gaussian toy model vs closed form",
               _TOY, _toy_spectrum, check=_toy_check),
    Experiment("toy-rgflow", "running couplings of the toy model along a sextic-regulator sweep", {
        "lambda_phys": Param("float", 0.01, "physical quartic coupling"),
        "tau_phys": Param("float", 1.0, "physical width"),
        "eps6": Param("floats", [0.0, 0.0005, 0.001, 0.002], "increasing regulator values"),
        "check_equivalence": Param("bool", True, "compare rows on the relevant observables"),
        "threshold": Param("int", 4, "number of relevant observables"),
        "coefficients": Param("bool", False, "also extract first-order running coefficients"),
    }, _toy_rgflow),
    Experiment("field-relevance", "classical free-field relevance sweeps and scaling fits", {
        "d": Param("int", 1, "spatial dimension"),
        "beta": Param("float", 1.0), "m": Param("float", 1.0),
        "mass_outside_beta": Param("bool", False, "use a_k = beta k**2 + m**2"),
        "spacing": Param("float", 0.05, "lattice spacing"),
        "extent": Param("int", 65536, "sites per dimension"),
        "h": Param("float", 1.0, "field uncertainty (fixed when sweeping sigma)"),
        "sigma": Param("float", 10.0, "spatial precision (fixed when sweeping h)"),
        "variable": Param("str", "sigma", "swept variable", ("sigma", "h")),
        "sweep_min": Param("float", 10.0), "sweep_max": Param("float", 40.0),
        "points": Param("int", 9),
        "kernel_normalization": Param("str", "unit", "smearing kernel N(sigma)", ("unit", "average")),
        "fit": Param("bool", True, "fit log-log slopes"),
        "max_nonlinearity": Param("float", 0.1, "largest allowed spread of local slopes"),
    }, _field_relevance),
    Experiment("qfield-relevance", "quantum free-field mode relevances", {
        "beta": Param("float", 1.0), "m": Param("float", 1.0),
        "sigma": Param("float", 1.0), "h_phi": Param("float", 10.0), "h_pi": Param("float", 10.0),
        "k": Param("floats", [0.0, 0.5, 1.0, 2.0], "one-dimensional momenta"),
        "use_h_pi": Param("bool", False, "use h_pi in eta(Pi)"),
    }, _qfield_relevance),
    Experiment("particle-relevance", "quantum particle relevances with the truncated Fock oracle", {
        "u": Param("float", math.sqrt(3.0)), "v": Param("float", math.sqrt(3.0)),
        "sigma_x": Param("float", 10.0), "sigma_p": Param("float", 0.0),
        "fock": Param("bool", True, "run the truncated Fock oracle"),
        "oracle": Param("str", "general", "Fock oracle (phase-covariant needs sigma_x u = sigma_p v)",
                        ("general", "phase-covariant")),
        "n_in": Param("opt_int", None, "input Fock cutoff (40 for the general oracle, automatic otherwise)"),
        "n_out": Param("opt_int", None, "output Fock cutoff (automatic when null)"),
    }, _particle_relevance),
    Experiment("mass-shell", "first-order momentum-shell mass shift", {
        "d": Param("int", 1), "m": Param("float", 1.0), "lambda": Param("float", 1.0),
        "uv": Param("float", 10.0, "ultraviolet cutoff 1/eps"), "ir": Param("float", 1.0, "infrared scale 1/sigma"),
        "measure": Param("str", "two-ray", "one-dimensional measure", ("two-ray", "single-ray")),
    }, _mass_shell),
    Experiment("quantum-props", "randomized invariant suite on Kraus channels", {
        "dim": Param("ints", [2, 3, 4, 6], "Hilbert-space dimensions"),
        "trials": Param("int", 100, "trials per dimension"),
    }, _quantum_props, needs_seed=True),
    Experiment("equivalence-demo", "partial-trace and moment-matching equivalence checks", {
        "dims": Param("ints", [2, 2], "subsystem dimensions (kept, traced)"),
        "trials": Param("int", 5, "random factorized states"),
        "lambda_phys": Param("float", 0.01),
        "eps6": Param("floats", [0.0, 0.0005, 0.001]),
        "threshold": Param("int", 4),
    }, _equivalence_demo, needs_seed=True),
]}


def _range_errors(exp: Experiment, p: dict) -> list[str]:
    errs = []
    for k, v in p.items():
        kind = exp.params[k].kind
        if k in ("tau", "sigma", "beta", "spacing", "u", "v", "uv", "tau_phys", "half_width",
                 "sweep_min", "sweep_max", "h_phi", "h_pi") and not v > 0:
            errs.append(f"{k} must be positive")
        if kind in ("int", "opt_int") and v is not None and v < 1 and k in (
                "grid_points", "count", "extent", "points", "trials", "n_in", "n_out"):
            errs.append(f"{k} must be at least 1")
        if k in ("sigma_x", "sigma_p", "m", "ir", "h") and v < 0:
            errs.append(f"{k} must be nonnegative")
    if exp.name == "mass-shell" and p["ir"] > p["uv"]:
        errs.append("ir must not exceed uv")
    if exp.name == "field-relevance" and p["sweep_min"] >= p["sweep_max"]:
        errs.append("sweep_min must be below sweep_max")
    if exp.name == "equivalence-demo" and len(p["dims"]) != 2:
        errs.append("dims must list two subsystem dimensions")
    if exp.name == "toy-spectrum" and p["count"] > p["grid_points"]:
        errs.append("count exceeds the grid size")
    return errs


def _conventions_defaults() -> dict:
    return {"kernel_normalization": "unit (N(sigma) = 1)", "mass_shell_measure": "two-ray",
            "fock_truncation": {"general": {"n_in": 40, "n_out": "automatic, capped at 120"},
                                "phase-covariant": {"n_in": "automatic (tail 1e-8)",
                                                    "n_out": "automatic (tail 1e-10)"}},
            "eta_pi_precision": "h_phi (as printed)", "a_k": "beta (k**2 + m**2)",
            "partial_trace_keep": "0-based"}


def validate_config(cfg: dict, flags: dict | None = None) -> dict:
    """Schema and range diagnostics without running anything."""
    errors, warnings = [], []
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        errors.append(f"unknown config keys: {sorted(unknown)}")
    name = cfg.get("experiment")
    if name is None:
        errors.append("missing field 'experiment'")
    elif name not in EXPERIMENTS:
        errors.append(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    if "output_path" not in cfg:
        errors.append("missing field 'output_path'")
    resolved = None
    if name in EXPERIMENTS:
        exp = EXPERIMENTS[name]
        if exp.needs_seed and cfg.get("seed") is None:
            errors.append("missing field 'seed' (required for randomized experiments)")
        if cfg.get("seed") is not None and (isinstance(cfg["seed"], bool) or not isinstance(cfg["seed"], int)):
            errors.append("seed must be an integer")
        try:
            params = cfg.get("params", {})
            if not isinstance(params, dict):
                raise ValidationError("'params' must be an object")
            resolved = resolve_params(exp, params, flags)
            errors.extend(_range_errors(exp, resolved))
            if exp.check:
                warnings.extend(exp.check(resolved))
        except ValidationError as e:
            errors.append(str(e))
    return {"status": "ok" if not errors else "invalid", "errors": errors, "warnings": warnings,
            "params": resolved, "defaults": _conventions_defaults()}


# --------------------------------------------------------------------------- #
# command line

def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _add_param(sub: argparse.ArgumentParser, key: str, p: Param):
    kw: dict = {"dest": f"p_{key}", "default": None, "help": p.help or None}
    if p.kind == "bool":
        kw["action"] = argparse.BooleanOptionalAction
    elif p.kind in ("floats", "ints"):
        kw.update(nargs="+", type=float if p.kind == "floats" else int)
    elif p.kind == "opt_int":
        kw["type"] = int
    else:
        kw["type"] = {"float": float, "int": int, "str": str}[p.kind]
        if p.choices:
            kw["choices"] = p.choices
    sub.add_argument(_flag(key), **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relevance-lab", description=__doc__.split("\n")[0], allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    subs = parser.add_subparsers(dest="command", required=True)
    for exp in EXPERIMENTS.values():
        sp = subs.add_parser(exp.name, help=exp.help, description=exp.help, allow_abbrev=False)
        sp.add_argument("--config", help="JSON config; flags override its params")
        sp.add_argument("--output-path", "-o", dest="output_path", help="CSV output file")
        sp.add_argument("--seed", type=int, default=None)
        for key, p in exp.params.items():
            _add_param(sp, key, p)
    vp = subs.add_parser("validate", help="check a config without running it")
    vp.add_argument("--config", help="JSON config to check")
    return parser


def _flags(ns: argparse.Namespace, exp: Experiment) -> dict:
    out = {}
    for key in exp.params:
        v = getattr(ns, f"p_{key}")
        if v is not None:
            out[key] = v
    return out


def _run(ns: argparse.Namespace) -> int:
    exp = EXPERIMENTS[ns.command]
    cfg = load_config(ns.config) if ns.config else {}
    if cfg.get("experiment", exp.name) != exp.name:
        raise ValidationError(f"config is for {cfg['experiment']!r}, not {exp.name!r}")
    params = resolve_params(exp, cfg.get("params"), _flags(ns, exp))
    errs = _range_errors(exp, params)
    if errs:
        raise ValidationError("; ".join(errs))
    output = ns.output_path or cfg.get("output_path")
    if not output:
        raise ValidationError("an output path is required (--output-path or config 'output_path')")
    seed = ns.seed if ns.seed is not None else cfg.get("seed")
    if exp.needs_seed and seed is None:
        raise ValidationError(f"{exp.name} is randomized and needs a seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ValidationError("seed must be an integer")
    for w in (exp.check(params) if exp.check else []):
        logger.warning(w)

    res = exp.run(params, seed)
    write_csv(output, res.columns, res.rows)
    meta = {"experiment": exp.name, "version": __version__, "params": params, "seed": seed,
            "columns": list(res.columns), "conventions": res.conventions, "summary": res.summary,
            "status": "failed" if res.failed else "ok"}
    if res.failed:
        meta["failure"] = res.failed
    write_metadata(output, meta)
    print(json.dumps(to_jsonable({"experiment": exp.name, "output": str(output), "summary": res.summary}),
                     sort_keys=True))
    if res.failed:
        print(f"error: {res.failed}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _origin(exc: BaseException) -> str:
    """Innermost package module on the traceback of ``exc``."""
    name = "relevance_lab"
    tb = exc.__traceback__
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("relevance_lab"):
            name = mod
        tb = tb.tb_next
    return name


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(ns.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.command == "validate":
            cfg = load_config(ns.config) if ns.config else {}
            report = validate_config(cfg)
            print(json.dumps(report, indent=2, sort_keys=True))
            return EXIT_OK if report["status"] == "ok" else EXIT_INVALID
        return _run(ns)
    except ValidationError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as e:
        print(f"error: {type(e).__name__} in {_origin(e)}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RelevanceLabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"error: cannot write output: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
