"""Batch front end.

Every subcommand reads a run configuration (INI or JSON), builds the
named scenario and writes its report into the output directory. Exit
codes: 0 success, 1 a check failed, 2 configuration error, 3 numerical
failure.
"""
import argparse
import configparser
import copy
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import commutator as cm
from . import diagnostics as dg
from . import lattice
from . import linalg
from . import mourre as mo
from . import propagator as prop
from . import scenarios as sc
from .functions import DescriptorError, parse_function

OUTPUT_ENV = "MOURRELAB_OUTPUT_DIR"

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

NUMERIC_ERRORS = (linalg.NoConvergence, linalg.NotUnitary, linalg.NotHermitian,
                  linalg.DegenerateClustering, prop.QuadratureFailure, cm.NotConverged,
                  dg.SolveFailure, mo.EmptyArc, mo.NotAnEigenvalue, lattice.NonFinite,
                  np.linalg.LinAlgError, FloatingPointError)


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    def __init__(self, key, message):
        super().__init__("%s: %s" % (key, message))
        self.key = key


# ----------------------------------------------------------------------
# configuration schema

def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean: %r" % text)


def _int(text):
    if isinstance(text, bool):
        raise ValueError("not an integer")
    if isinstance(text, float) and not text.is_integer():
        raise ValueError("not an integer: %r" % text)
    return int(text)


# section -> key -> (parser, default)
SCHEMA = {
    "run": {
        "output_dir": (str, "mourrelab_out"),
        "seed": (_int, 0),
        "format": (str, "csv"),
    },
    "basis": {
        "n_points": (_int, 512),
        "half_width": (float, 12.0),
        "omega": (float, 1.0),
    },
    "scenario": {
        "name": (str, "RES_SIN"),
        "drive": (str, ""),
        "period": (float, 0.0),
        "potential": (str, ""),
        "time_steps": (_int, 256),
        "dyson_order": (_int, 6),
        "interior_fraction": (float, 0.5),
    },
    "command.spectrum": {
        "cluster_tol": (float, 1e-7),
    },
    "command.mourre": {
        "arc": (str, "full"),
        "conjugate": (str, "auto"),
        "fraction": (float, sc.MOURRE_FRACTION),
        "use_interior": (_bool, True),
    },
    "command.virial": {
        "conjugate": (str, "x"),
        "random_pairs": (_int, 4),
        "random_dim": (_int, 24),
    },
    "command.resolvent": {
        "theta": (_floats, [2.0]),
        "gap_max": (float, 0.5),
        "gap_min": (float, 1e-9),
        "radii": (_int, 120),
        "x0": (float, 0.0),
        "p0": (float, 0.0),
    },
    "command.density": {
        "r": (float, 0.99),
        "theta_points": (_int, 4096),
        "x0": (float, 0.5),
        "p0": (float, 0.3),
    },
    "command.usmooth": {
        "n_points": (_int, 128),
        "shift": (float, 0.0625),
        "bump_width": (float, 3.0),
        "n_max": (_int, 0),
    },
    "command.c11": {
        "potential": (str, ""),
        "t_min": (float, 0.01),
    },
    "command.heisenberg": {
        "model": (str, "floquet"),
        "t_grid": (_floats, [0.1, 0.5, 1.0]),
        "conjugate": (str, "auto"),
        "tolerance": (float, 1e-4),
    },
    "command.regfamily": {
        "conjugate": (str, "auto"),
        "epsilon_grid": (_floats, [0.01, 0.027, 0.071, 0.19, 0.5]),
        "radii": (_int, 8),
        "angles": (_int, 16),
    },
    "command.suite": {
        "jobs": (_int, 1),
        "return_steps": (_int, 256),
    },
}


@dataclass
class RunConfig:
    sections: dict = field(default_factory=dict)

    def __getitem__(self, section):
        return self.sections[section]

    def get(self, path):
        section, _, key = path.rpartition(".")
        return self.sections[section][key]

    def set(self, path, value):
        section, _, key = path.rpartition(".")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ValidationError(path, "unknown key")
        parser = SCHEMA[section][key][0]
        try:
            self.sections[section][key] = parser(value)
        except (TypeError, ValueError) as exc:
            raise ValidationError(path, str(exc)) from None

    def to_nested(self):
        out = {}
        for name, values in self.sections.items():
            node = out
            for part in name.split("."):
                node = node.setdefault(part, {})
            node.update(copy.deepcopy(values))
        return out


def default_config():
    return RunConfig({s: {k: copy.deepcopy(v[1]) for k, v in keys.items()} for s, keys in SCHEMA.items()})


def _flatten(tree, prefix=""):
    """Yield (section, {key: value}) from a nested mapping."""
    leaves = {}
    for k, v in tree.items():
        path = prefix + "." + k if prefix else k
        if isinstance(v, dict):
            yield from _flatten(v, path)
        else:
            leaves[k] = v
    if leaves:
        if not prefix:
            raise ValidationError(next(iter(leaves)), "top-level keys must sit inside a section")
        yield prefix, leaves


def config_from_mapping(tree):
    cfg = default_config()
    for section, values in _flatten(tree):
        if section not in SCHEMA:
            raise ValidationError(section, "unknown section")
        for key, value in values.items():
            cfg.set(section + "." + key, value)
    validate(cfg)
    return cfg


def load_config(path):
    """Read an INI or JSON run configuration, fill defaults and validate."""
    if not os.path.exists(path):
        raise ParseError("config file not found: %s" % path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json") or text.lstrip().startswith("{"):
        try:
            tree = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError("invalid JSON: %s" % exc) from None
        if not isinstance(tree, dict):
            raise ParseError("JSON config must be an object")
        return config_from_mapping(tree)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ParseError(str(exc).splitlines()[0]) from None
    tree = {}
    for section in parser.sections():
        node = tree
        for part in section.split("."):
            node = node.setdefault(part, {})
        node.update(dict(parser[section]))
    return config_from_mapping(tree)


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def save_config(cfg, path):
    """Write the configuration as INI (or JSON when the path ends in .json)."""
    if path.endswith(".json"):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(cfg.to_nested(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return
    lines = []
    for section in SCHEMA:
        lines.append("[%s]" % section)
        for key in SCHEMA[section]:
            lines.append("%s = %s" % (key, _format_value(cfg.sections[section][key])))
        lines.append("")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))


def _power_of_two(n):
    return n >= 2 and n & (n - 1) == 0


def validate(cfg):
    """Check every value before any numerics run; raise ValidationError(key path)."""
    s = cfg.sections

    def need(ok, path, msg):
        if not ok:
            raise ValidationError(path, msg)

    need(s["run"]["format"] in ("csv", "json"), "run.format", "must be csv or json")
    need(s["run"]["seed"] >= 0, "run.seed", "must be nonnegative")
    need(s["run"]["output_dir"] != "", "run.output_dir", "must not be empty")
    b = s["basis"]
    need(b["n_points"] > 0 and _power_of_two(b["n_points"]), "basis.n_points", "must be a positive power of two")
    need(b["n_points"] <= 2048, "basis.n_points", "dense matrices are capped at 2048")
    need(b["half_width"] > 0, "basis.half_width", "must be positive")
    need(b["omega"] > 0, "basis.omega", "must be positive")
    scn = s["scenario"]
    names = [n.name for n in sc.builtin_scenarios(lattice.GridBasis(16, 1.0, 1.0))]
    need(scn["name"] in names + ["custom"], "scenario.name", "must be one of %s or custom" % ", ".join(names))
    if scn["name"] == "custom":
        need(scn["drive"] != "", "scenario.drive", "custom scenarios need a drive")
    for key in ("drive", "potential"):
        if scn[key]:
            try:
                parse_function(scn[key])
            except DescriptorError as exc:
                raise ValidationError("scenario." + key, str(exc)) from None
    need(scn["period"] >= 0, "scenario.period", "must be nonnegative (0 means resonant 2pi/omega)")
    need(scn["time_steps"] >= 2 and scn["time_steps"] % 2 == 0, "scenario.time_steps", "must be an even integer >= 2")
    need(scn["dyson_order"] >= 0, "scenario.dyson_order", "must be nonnegative")
    need(0 < scn["interior_fraction"] <= 1, "scenario.interior_fraction", "must lie in (0, 1]")
    m = s["command.mourre"]
    try:
        mo.parse_arc(m["arc"])
    except ValueError as exc:
        raise ValidationError("command.mourre.arc", str(exc)) from None
    need(m["conjugate"] in ("auto", "A1", "A2"), "command.mourre.conjugate", "must be auto, A1 or A2")
    need(0 < m["fraction"] <= 1, "command.mourre.fraction", "must lie in (0, 1]")
    v = s["command.virial"]
    need(v["conjugate"] in ("x", "p", "A1", "A2"), "command.virial.conjugate", "must be x, p, A1 or A2")
    need(v["random_pairs"] >= 0, "command.virial.random_pairs", "must be nonnegative")
    need(2 <= v["random_dim"] <= 128, "command.virial.random_dim", "must lie in [2, 128]")
    r = s["command.resolvent"]
    need(len(r["theta"]) > 0, "command.resolvent.theta", "needs at least one angle")
    need(0 < r["gap_min"] < r["gap_max"] < 1, "command.resolvent.gap_max", "need 0 < gap_min < gap_max < 1")
    need(r["radii"] >= 3, "command.resolvent.radii", "must be >= 3")
    d = s["command.density"]
    need(0 < d["r"] < 1, "command.density.r", "must lie in (0, 1)")
    need(d["theta_points"] >= 8, "command.density.theta_points", "must be >= 8")
    u = s["command.usmooth"]
    need(_power_of_two(u["n_points"]) and 16 <= u["n_points"] <= 1024, "command.usmooth.n_points",
         "must be a power of two in [16, 1024]")
    need(0 < u["shift"] <= 1, "command.usmooth.shift", "must lie in (0, 1] sites")
    need(u["bump_width"] > 0, "command.usmooth.bump_width", "must be positive")
    need(u["n_max"] == 0 or u["n_max"] >= 16, "command.usmooth.n_max", "must be 0 (means 4N) or >= 16")
    c = s["command.c11"]
    if c["potential"]:
        try:
            parse_function(c["potential"])
        except DescriptorError as exc:
            raise ValidationError("command.c11.potential", str(exc)) from None
    need(0 < c["t_min"] < 1, "command.c11.t_min", "must lie in (0, 1)")
    h = s["command.heisenberg"]
    need(h["model"] in ("floquet", "shift"), "command.heisenberg.model", "must be floquet or shift")
    need(h["conjugate"] in ("auto", "A1", "A2"), "command.heisenberg.conjugate", "must be auto, A1 or A2")
    need(len(h["t_grid"]) > 0, "command.heisenberg.t_grid", "needs at least one time")
    g = s["command.regfamily"]
    need(g["conjugate"] in ("auto", "A1", "A2"), "command.regfamily.conjugate", "must be auto, A1 or A2")
    need(len(g["epsilon_grid"]) > 0 and min(g["epsilon_grid"]) > 0, "command.regfamily.epsilon_grid",
         "needs positive values")
    need(g["radii"] >= 1 and g["angles"] >= 1, "command.regfamily.radii", "grid sizes must be positive")
    need(s["command.suite"]["jobs"] >= 1, "command.suite.jobs", "must be >= 1")
    need(s["command.suite"]["return_steps"] >= 1, "command.suite.return_steps", "must be >= 1")
    return cfg


# ----------------------------------------------------------------------
# scenario construction

def build_basis(cfg):
    b = cfg["basis"]
    return lattice.GridBasis(b["n_points"], b["half_width"], b["omega"])


def build_scenario(cfg):
    """Returns (name, FloquetScenario, conjugate name or None)."""
    s = cfg["scenario"]
    basis = build_basis(cfg)
    if s["name"] == "custom":
        period = s["period"] or 2 * np.pi / basis.omega
        field_ = prop.FieldSpec(parse_function(s["drive"]), period)
        conj = None
        named = None
    else:
        named = sc.get_scenario(s["name"], basis)
        field_ = named.scenario.field
        conj = named.conjugate
        if s["drive"]:
            field_ = prop.FieldSpec(parse_function(s["drive"]), s["period"] or field_.period)
    if s["potential"]:
        pot = parse_function(s["potential"])
    else:
        pot = named.scenario.potential if named is not None else None
    scen = prop.FloquetScenario(basis, field_, pot, s["time_steps"], s["dyson_order"], s["interior_fraction"])
    return s["name"], scen, conj


def _auto_conjugate(scen, which, default):
    if which != "auto":
        return which
    if default:
        return default
    ph = prop.phase_functions(scen.field, scen.omega, scen.period)
    if abs(ph.phi2) > 1e-9:
        return "A2"
    if abs(ph.phi1) > 1e-9:
        return "A1"
    raise ValidationError("scenario.name", "both phases vanish at T; no conjugate operator")


# ----------------------------------------------------------------------
# output

def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def write_table(path_stem, header, rows, fmt):
    """CSV with 17 significant digits and LF endings, or JSON rows."""
    if fmt == "json":
        path = path_stem + ".json"
        write_json(path, [dict(zip(header, r)) for r in rows])
        return path
    path = path_stem + ".csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) for v in r])
    return path


@dataclass
class CommandResult:
    report: dict
    checks: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.checks.values())


# ----------------------------------------------------------------------
# subcommands

def cmd_spectrum(cfg, out):
    name, scen, _ = build_scenario(cfg)
    U = sc.floquet(scen)
    dec = linalg.unitary_eig(U, cluster_tol=cfg["command.spectrum"]["cluster_tol"])
    label = np.empty(len(dec.phases), dtype=int)
    for ci, c in enumerate(dec.clusters):
        label[c] = ci
    order = np.argsort(dec.phases, kind="stable")
    rows = [(int(i), dec.phases[i], int(label[i])) for i in order]
    write_table(os.path.join(out, "%s_spectrum" % name), ["index", "phase", "cluster"], rows, cfg["run"]["format"])
    rep = {"scenario": name, "n": len(dec.phases), "clusters": len(dec.clusters), "residual": dec.residual}
    write_json(os.path.join(out, "%s_spectrum_summary.json" % name), rep)
    return CommandResult(rep)


def cmd_mourre(cfg, out):
    name, scen, conj = build_scenario(cfg)
    m = cfg["command.mourre"]
    which = _auto_conjugate(scen, m["conjugate"], conj)
    A = sc.conjugate_operator(scen, which)
    U = sc.floquet(scen)
    w = lattice.InteriorWeight(scen.basis, m["fraction"])
    rep = mo.mourre_report(U, A, mo.parse_arc(m["arc"]), use_interior=m["use_interior"],
                           interior=w if m["use_interior"] else None)
    d = rep.to_dict()
    d.update({"scenario": name, "conjugate": which, "interior_fraction": m["fraction"]})
    write_json(os.path.join(out, "%s_mourre.json" % name), d)
    return CommandResult(d)


def _random_unitary(rng, n):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def cmd_virial(cfg, out):
    name, scen, _ = build_scenario(cfg)
    v = cfg["command.virial"]
    U = sc.floquet(scen)
    X, P = prop._x_p(scen.basis)
    A = {"x": X, "p": P}.get(v["conjugate"])
    if A is None:
        A = sc.conjugate_operator(scen, v["conjugate"])
    dec = linalg.unitary_eig(U)
    C = U.conj().T @ A @ U - A
    a_norm = np.linalg.norm(A, 2)
    rows, ok = [], True
    for ci in range(len(dec.clusters)):
        block, scalars, bound = mo.virial_residual(U, a_norm, dec, ci, commutator=C)
        for j, (sv, bd) in enumerate(zip(scalars, bound)):
            good = sv <= bd + 1e-12
            ok &= bool(good)
            rows.append(("floquet", ci, j, sv, bd, block, good))
    rng = np.random.default_rng(cfg["run"]["seed"])
    for k in range(v["random_pairs"]):
        n = v["random_dim"]
        Ur = _random_unitary(rng, n)
        H = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        H = 0.5 * (H + H.conj().T)
        dr = linalg.unitary_eig(Ur)
        for ci in range(len(dr.clusters)):
            block, scalars, bound = mo.virial_residual(Ur, H, dr, ci)
            for j, (sv, bd) in enumerate(zip(scalars, bound)):
                good = sv <= bd + 1e-12
                ok &= bool(good)
                rows.append(("random%d" % k, ci, j, sv, bd, block, good))
    write_table(os.path.join(out, "%s_virial" % name),
                ["source", "cluster", "vector", "scalar_residual", "bound", "block_norm", "ok"],
                rows, cfg["run"]["format"])
    worst = max(r[3] - r[4] for r in rows)
    rep = {"scenario": name, "conjugate": v["conjugate"], "rows": len(rows), "worst_excess": worst}
    write_json(os.path.join(out, "%s_virial_summary.json" % name), rep)
    return CommandResult(rep, {"virial_bound": ok})


def cmd_resolvent(cfg, out):
    name, scen, _ = build_scenario(cfg)
    r = cfg["command.resolvent"]
    U = sc.floquet(scen)
    phi = dg.coherent_state(scen.basis, r["x0"], r["p0"])
    rs = 1 - np.geomspace(r["gap_max"], r["gap_min"], r["radii"])
    tr = dg.boundary_trace(U, phi, phi, r["theta"], rs)
    rows = [(th, rr, f.real, f.imag, g.real, g.imag) for th, rr, f, g in tr.rows()]
    write_table(os.path.join(out, "%s_resolvent" % name),
                ["theta", "r", "inside_re", "inside_im", "outside_re", "outside_im"], rows, cfg["run"]["format"])
    floors = [dg.gap_floor(g) for g in tr.cauchy_gaps]
    rep = {"scenario": name, "theta": r["theta"], "gap_floor": [f for f, _ in floors],
           "floor_index": [k for _, k in floors], "failures": tr.failures}
    write_json(os.path.join(out, "%s_resolvent_summary.json" % name), rep)
    return CommandResult(rep)


def cmd_density(cfg, out):
    name, scen, _ = build_scenario(cfg)
    d = cfg["command.density"]
    U = sc.floquet(scen)
    phi = dg.coherent_state(scen.basis, d["x0"], d["p0"])
    th = np.linspace(-np.pi, np.pi, d["theta_points"], endpoint=False)
    vals = dg.poisson_density(U, phi, th, d["r"])
    total = dg.trapezoid_periodic(vals, th)
    write_table(os.path.join(out, "%s_density" % name), ["theta", "density"],
                list(zip(th, vals.real)), cfg["run"]["format"])
    rep = {"scenario": name, "r": d["r"], "integral": total, "norm_squared": float(np.vdot(phi, phi).real),
           "min_density": float(np.min(vals.real))}
    write_json(os.path.join(out, "%s_density_summary.json" % name), rep)
    checks = {"normalization": abs(total - rep["norm_squared"]) <= 1e-3, "nonnegative": rep["min_density"] >= -1e-10}
    return CommandResult(rep, checks)


def cmd_usmooth(cfg, out):
    u = cfg["command.usmooth"]
    n = u["n_points"]
    _, U, B = sc.translation_model(n, u["shift"], u["bump_width"])
    n_max = u["n_max"] or 4 * n
    rep = dg.usmooth_constants(U, B, n_max=n_max, z_grid=sc.translation_z_grid(n, u["shift"]),
                               arcs=sc.translation_arcs(n))
    d = rep.to_dict()
    d.update({"model": "translation", "n_points": n, "shift": u["shift"], "bump_width": u["bump_width"]})
    write_json(os.path.join(out, "usmooth.json"), d)
    return CommandResult(d, {"spread_within_15pct": rep.agreement_spread <= 0.15})


def cmd_c11(cfg, out):
    c = cfg["command.c11"]
    if c["potential"]:
        V = parse_function(c["potential"])
        basis = build_basis(cfg)
        label = str(V)
    else:
        name, scen, _ = build_scenario(cfg)
        if scen.potential is None:
            raise ValidationError("command.c11.potential", "scenario has no potential; give one")
        V, basis, label = scen.potential, scen.basis, name
    sem = cm.c11_seminorm(V, t_min=c["t_min"], basis=basis)
    d = sem.to_dict()
    d["potential"] = str(V)
    write_json(os.path.join(out, "c11.json"), d)
    return CommandResult(d, {"converged": bool(sem.converged)})


def cmd_theorem_a(cfg, out):
    name, scen, _ = build_scenario(cfg)
    crit = mo.theorem_a_criteria(scen)
    d = crit.to_dict()
    d["scenario"] = name
    write_json(os.path.join(out, "%s_theorem_a.json" % name), d)
    return CommandResult(d)


def cmd_heisenberg(cfg, out):
    h = cfg["command.heisenberg"]
    if h["model"] == "shift":
        n = cfg["basis"]["n_points"]
        T = sc.shift_matrix(n)
        A = sc.index_position(n)
        # drop the rows that wrap around under T^n, n <= 3
        Q = np.eye(n)[:, 3:-3].astype(complex)
        label, scale = "shift", 1.0
    else:
        name, scen, conj = build_scenario(cfg)
        which = _auto_conjugate(scen, h["conjugate"], conj)
        T = sc.floquet(scen)
        A = sc.conjugate_operator(scen, which)
        Q = lattice.interior_basis(scen.interior)
        label, scale = name, 1.0
    chk = sc.heisenberg_couple_check(T, A, h["t_grid"], interior=Q, scale=scale)
    phases = np.angle(np.linalg.eigvals(T))
    ks = sc.ks_uniform_distance(phases)
    d = {"model": h["model"], "label": label, "max_residual": chk.max_residual,
         "power_residuals": chk.power_residuals, "ad_residuals": chk.ad_residuals,
         "ks_distance": ks, "ks_limit": 3 / np.sqrt(len(phases))}
    write_json(os.path.join(out, "%s_heisenberg.json" % label), d)
    return CommandResult(d, {"residual": chk.max_residual <= h["tolerance"]})


def cmd_regfamily(cfg, out):
    name, scen, conj = build_scenario(cfg)
    g = cfg["command.regfamily"]
    which = _auto_conjugate(scen, g["conjugate"], conj)
    A = sc.conjugate_operator(scen, which)
    rep = mo.regularized_family(scen, A, g["epsilon_grid"], mo.default_z_grid(radii=g["radii"], angles=g["angles"]))
    rows = [(e, z.real, z.imag, gp, gm) for e, z, gp, gm in rep.rows()]
    write_table(os.path.join(out, "%s_regfamily" % name), ["epsilon", "z_re", "z_im", "norm_G_plus", "norm_G_minus"],
                rows, cfg["run"]["format"])
    d = rep.to_dict()
    d.update({"scenario": name, "conjugate": which})
    write_json(os.path.join(out, "%s_regfamily_summary.json" % name), d)
    return CommandResult(d)


# ----------------------------------------------------------------------
# suite

def scenario_checks(name, cfg_tree):
    """Expected-diagnostic checklist for one builtin scenario; returns a plain dict."""
    cfg = config_from_mapping(cfg_tree)
    cfg.set("scenario.name", name)
    cfg.set("scenario.potential", "")
    _, scen, conj = build_scenario(cfg)
    named = sc.get_scenario(name, scen.basis)
    kind = named.expected["spectrum"]
    checks, values = {}, {}
    U = sc.floquet(scen)
    values["unitarity"] = float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2))
    checks["unitary"] = values["unitarity"] <= 1e-9
    if kind == "pure_point":
        psi = dg.coherent_state(scen.basis, 1.0, 0.0)
        _, mean = dg.return_probability(U, psi, cfg["command.suite"]["return_steps"])
        values["return_probability_mean"] = mean
        checks["return_bounded_below"] = mean >= 0.05
    else:
        A = sc.conjugate_operator(scen, conj)
        w = lattice.InteriorWeight(scen.basis, sc.MOURRE_FRACTION)
        rep = mo.mourre_report(U, A, mo.Arc.circle(), interior=w)
        values["strict_c"] = rep.strict_c
        values["dim_range"] = rep.dim_range
        if kind == "ac_translation":
            checks["strict_c_unit"] = abs(rep.strict_c - 1) <= 1e-4
            chk = sc.heisenberg_couple_check(U, A, [0.1, 0.5, 1.0], interior=lattice.interior_basis(scen.interior))
            values["couple_residual"] = chk.max_residual
            checks["heisenberg_couple"] = chk.max_residual <= 1e-4
        else:
            crit = mo.theorem_a_criteria(scen)
            values["theorem_a"] = crit.to_dict()
            if kind == "perturbed_strict":
                bound = 1 - 2 * np.pi * crit.sup_derivative / abs(crit.phi2) - 0.02
                values["strict_c_bound"] = bound
                checks["strict_hypothesis"] = crit.strict_bound_2 < 0
                checks["strict_c"] = rep.strict_c >= bound and rep.strict_c > 0
            else:
                k = rep.first_k_reaching(0.5 * rep.reference_c)
                values["first_k"] = k
                checks["vanishing_derivative"] = bool(crit.vanishing_derivative)
                checks["compact_rank"] = k is not None and k <= 0.05 * rep.dim_range
    return {"scenario": name, "expected": kind, "checks": checks, "values": values,
            "passed": all(checks.values())}


def cmd_suite(cfg, out, jobs=None):
    jobs = jobs or cfg["command.suite"]["jobs"]
    names = [n.name for n in sc.builtin_scenarios(build_basis(cfg))]
    tree = cfg.to_nested()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(scenario_checks, names, [tree] * len(names)))
    else:
        results = [scenario_checks(n, tree) for n in names]
    rows = []
    for res in results:
        write_json(os.path.join(out, "suite_%s.json" % res["scenario"]), res)
        for key, ok in sorted(res["checks"].items()):
            rows.append((res["scenario"], key, bool(ok)))
    write_table(os.path.join(out, "suite_summary"), ["scenario", "check", "passed"], rows, cfg["run"]["format"])
    for res in results:
        status = "PASS" if res["passed"] else "FAIL"
        print("%s %s (%s)" % (status, res["scenario"], res["expected"]))
    checks = {"%s.%s" % (r["scenario"], k): v for r in results for k, v in r["checks"].items()}
    return CommandResult({"results": results}, checks)


COMMANDS = {
    "spectrum": (cmd_spectrum, "Eigenphases and multiplicity clusters of the one-period Floquet operator."),
    "mourre": (cmd_mourre, "Compressed commutator spectrum E(U^dagger A U - A)E on an arc: the propagating "
                           "(Mourre) estimate, strict and up to a compact remainder; free resonant case gives c = 1."),
    "virial": (cmd_virial, "Virial identity: eigenprojections annihilate U^dagger A U - A, checked per eigenvector "
                           "against 2||A|| times the eigen residual."),
    "resolvent": (cmd_resolvent, "Boundary traces of <phi, (1 - z U^dagger)^{-1} phi> as |z| -> 1 from inside and "
                                 "outside the disk (limiting absorption)."),
    "density": (cmd_density, "Poisson-smoothed spectral density from the resolvent difference across the circle."),
    "usmooth": (cmd_usmooth, "The five equivalent U-smoothness constants on the translation model."),
    "c11": (cmd_c11, "Truncated C^{1,1} regularity seminorm of a potential under translations."),
    "theorem-a": (cmd_theorem_a, "Smallness hypotheses on the perturbation: T sup|V'| against |phi1(T)|, "
                                 "|phi2(T)|, and decay of V' at infinity."),
    "heisenberg": (cmd_heisenberg, "Heisenberg couple e^{itA} T e^{-itA} = e^{it} T, T^{-n} A T^n - A = n I, "
                                   "and equidistribution of the eigenphases."),
    "regfamily": (cmd_regfamily, "Regularized family T(z) = 1 - z U_eps^dagger e^{-eps B(eps)}: fitted bounds on "
                                 "eps||G|| and (1 - |z|^2)||G||."),
    "suite": (cmd_suite, "Expected-diagnostic checklist for every builtin scenario."),
}


def build_parser():
    p = argparse.ArgumentParser(prog="mourrelab",
                                description="Positive-commutator diagnostics for driven oscillator Floquet operators.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text.split(":")[0].split(".")[0], description=help_text)
        sp.add_argument("--config", help="INI or JSON run configuration")
        sp.add_argument("--scenario", help="builtin scenario name or 'custom'")
        sp.add_argument("--output-dir", help="output directory (overrides %s and the config)" % OUTPUT_ENV)
        sp.add_argument("--seed", type=int, help="seed for sampled checks")
        sp.add_argument("--format", choices=("csv", "json"), help="format of tabular outputs")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration value; repeatable")
        if name == "mourre":
            sp.add_argument("--arc", help="'full' or 'lo,hi' in radians")
        if name == "c11":
            sp.add_argument("--potential", help="potential descriptor, e.g. 'gaussian(1, 1)'")
        if name == "suite":
            sp.add_argument("--jobs", type=int, help="scenarios evaluated concurrently")
    return p


def _apply_args(cfg, args):
    if args.scenario:
        cfg.set("scenario.name", args.scenario)
    if args.seed is not None:
        cfg.set("run.seed", args.seed)
    if args.format:
        cfg.set("run.format", args.format)
    if getattr(args, "arc", None):
        cfg.set("command.mourre.arc", args.arc)
    if getattr(args, "potential", None):
        cfg.set("command.c11.potential", args.potential)
    if getattr(args, "jobs", None):
        cfg.set("command.suite.jobs", args.jobs)
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ParseError("--set expects SECTION.KEY=VALUE, got %r" % item)
        cfg.set(key.strip(), value.strip())
    env = os.environ.get(OUTPUT_ENV)
    if env:
        cfg.set("run.output_dir", env)
    if args.output_dir:
        cfg.set("run.output_dir", args.output_dir)
    return validate(cfg)


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(args.config) if args.config else default_config()
        cfg = _apply_args(cfg, args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    out = cfg["run"]["output_dir"]
    func = COMMANDS[args.command][0]
    try:
        os.makedirs(out, exist_ok=True)
        np.seterr(all="ignore")
        result = func(cfg, out)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (DescriptorError, KeyError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print("numerical failure: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_NUMERIC
    for key, ok in sorted(result.checks.items()):
        if not ok:
            print("check failed: %s" % key, file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_CHECK


def main():
    sys.exit(run())
