"""Scenario configuration: JSON parsing, validation and object construction.

A scenario is a single JSON document with ``schema_version`` 1.  Every
section except ``name`` is optional and falls back to :data:`DEFAULTS`,
which is the canonical interacting scenario.  Validation collects all
problems and reports each with its dotted field path, for example
``surface.params.slope: |a| = 1.2 must be < 1``.
"""

import copy
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import bump_potential, zero_potential
from .fields import Grid3, bump_surface_field, gaussian_shell_field, normalized_spinor, DEFAULT_SPINOR
from .surfaces import flat_foliation, make_surface, relaxing_bump_foliation
from .symmetry import bump_gauge
from .transforms import f_sigma_m

SCHEMA_VERSION = 1
SUITES = ("algebra", "transforms", "causality", "dynamics", "covariance", "gauge",
          "paley-wiener", "geometry")

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "name": "canonical",
    "seed": 0,
    "mass": 1.0,
    "grid": {"n": 32, "extent": 4.0, "momentum_extent": None},
    "surface": {"family": "flat", "params": {}},
    "foliation": {"kind": "translates"},
    "datum": {"kind": "bump", "center": [0.0, 0.0, 0.0], "radius": 1.0, "spinor": None},
    "potential": {"kind": "bump", "amplitude": 0.5, "direction": [1.0, 0.0, 0.0, 0.0],
                  "radius": 1.5, "t_center": 0.7, "t_halfwidth": 0.5,
                  "center": [0.0, 0.0, 0.0]},
    "gauge": {"n": 64, "amplitude": 0.5, "radius": 1.2, "t_center": 2.0, "t_halfwidth": 0.8,
              "center": [0.0, 0.0, 0.0]},
    "covariance": {"rapidity": 0.3, "axis": 3, "sizes": [16, 24], "extent": 1.2},
    "solver": {"method": "rk4", "steps": 50, "iterations": 8, "tolerance": 1e-8,
               "t0": 0.0, "t1": 2.0, "store_every": 5},
    "budgets": {"unitarity_drift": 1e-3, "causal_leakage": 1e-3, "bundle_residual": 1e-8,
                "picard_increment": 1e-6},
    "checks": list(SUITES),
    "output": "out",
}

_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


DATUM_DEFAULTS = {
    "bump": {"kind": "bump", "center": [0.0, 0.0, 0.0], "radius": 1.0, "spinor": None},
    "gaussian": {"kind": "gaussian", "center": [0.0, 0.0, 0.0], "width": 1.0,
                 "offset": [0.0, 0.0, 0.0], "spinor": None},
}


class ConfigError(ValueError):
    """Invalid scenario; ``problems`` lists ``(field_path, message)`` pairs."""

    def __init__(self, problems, source=None):
        self.problems = list(problems)
        self.source = source
        head = f"{source}: " if source else ""
        lines = [f"{path}: {msg}" if path else msg for path, msg in self.problems]
        super().__init__(head + "invalid scenario\n  " + "\n  ".join(lines))


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key not in ("params",):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _key_lines(text):
    # line of each key that occurs exactly once, for friendlier messages
    seen = {}
    for no, line in enumerate(text.splitlines(), start=1):
        for key in re.findall(r'"([^"\\]+)"\s*:', line):
            seen.setdefault(key, []).append(no)
    return {k: v[0] for k, v in seen.items() if len(v) == 1}


class _Checker:
    def __init__(self, lines=None):
        self.problems = []
        self.lines = lines or {}

    def fail(self, path, msg):
        leaf = path.rsplit(".", 1)[-1].split("[")[0]
        where = f" (line {self.lines[leaf]})" if leaf in self.lines else ""
        self.problems.append((path, msg + where))

    def number(self, cfg, key, path, positive=False, nonneg=False, integer=False):
        val = cfg.get(key)
        ok_type = isinstance(val, int) if integer else isinstance(val, (int, float))
        if isinstance(val, bool) or not ok_type or not np.isfinite(val):
            self.fail(path, f"expected {'an integer' if integer else 'a finite number'}, got {val!r}")
            return None
        if positive and not val > 0:
            self.fail(path, f"must be > 0, got {val!r}")
            return None
        if nonneg and val < 0:
            self.fail(path, f"must be >= 0, got {val!r}")
            return None
        return val

    def vector(self, cfg, key, path, length):
        val = cfg.get(key)
        if (not isinstance(val, list) or len(val) != length
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val)):
            self.fail(path, f"expected a list of {length} numbers, got {val!r}")
            return None
        return np.asarray(val, dtype=float)


def _spinor(raw, chk, path):
    if raw is None:
        return DEFAULT_SPINOR
    if not isinstance(raw, list) or len(raw) != 4:
        chk.fail(path, "expected 4 entries, each a number or a [re, im] pair")
        return None
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            out.append(complex(v))
        elif isinstance(v, list) and len(v) == 2 and all(isinstance(c, (int, float)) for c in v):
            out.append(complex(v[0], v[1]))
        else:
            chk.fail(f"{path}[{i}]", f"expected a number or a [re, im] pair, got {v!r}")
            return None
    if not np.any(out):
        chk.fail(path, "spinor must be nonzero")
        return None
    return normalized_spinor(out)


def validate(cfg, lines=None):
    """Return the list of ``(field_path, message)`` problems in a merged config."""
    chk = _Checker(lines)
    if cfg.get("schema_version") != SCHEMA_VERSION:
        chk.fail("schema_version", f"expected {SCHEMA_VERSION}, got {cfg.get('schema_version')!r}")
    name = cfg.get("name")
    if not isinstance(name, str) or not _NAME.match(name):
        chk.fail("name", f"expected a file-name-safe string, got {name!r}")
    chk.number(cfg, "seed", "seed", nonneg=True, integer=True)
    chk.number(cfg, "mass", "mass", positive=True)

    grid = cfg.get("grid", {})
    n = chk.number(grid, "n", "grid.n", positive=True, integer=True)
    if n is not None and (n < 2 or n % 2):
        chk.fail("grid.n", f"points per axis must be even and >= 2, got {n}")
        n = None
    extent = chk.number(grid, "extent", "grid.extent", positive=True)
    if grid.get("momentum_extent") is not None:
        chk.number(grid, "momentum_extent", "grid.momentum_extent", positive=True)

    fol = cfg.get("foliation", {})
    kind = fol.get("kind")
    if kind == "translates":
        surf = cfg.get("surface", {})
        try:
            make_surface(surf.get("family"), **surf.get("params", {}))
        except TypeError as exc:
            chk.fail("surface.params", str(exc))
        except ValueError as exc:
            field = "surface.family" if "family" in str(exc) else "surface.params"
            if "slope" in str(exc) or "not space-like" in str(exc):
                field = "surface.params.slope"
            elif "gradient bound" in str(exc):
                field = "surface.params.amplitude"
            chk.fail(field, str(exc))
    elif kind == "relaxing-bump":
        vals = [chk.number(fol, k, f"foliation.{k}", positive=(k != "amplitude"))
                for k in ("amplitude", "width", "relax_time")]
        if None not in vals:
            try:
                relaxing_bump_foliation(*vals)
            except ValueError as exc:
                chk.fail("foliation.amplitude", str(exc))
    else:
        chk.fail("foliation.kind", f"expected 'translates' or 'relaxing-bump', got {kind!r}")

    datum = cfg.get("datum", {})
    dkind = datum.get("kind")
    if dkind == "bump":
        center = chk.vector(datum, "center", "datum.center", 3)
        radius = chk.number(datum, "radius", "datum.radius", positive=True)
        _spinor(datum.get("spinor"), chk, "datum.spinor")
        if all(v is not None for v in (center, radius, n, extent)):
            g = Grid3(float(extent), int(n))
            if not g.contains(center - radius, center + radius):
                chk.fail("datum.radius", f"support ball (center {center.tolist()}, radius {radius}) "
                         f"leaves the grid box [{g.axis[0]:.4g}, {g.axis[-1]:.4g}]^3")
    elif dkind == "gaussian":
        chk.vector(datum, "center", "datum.center", 3)
        chk.vector(datum, "offset", "datum.offset", 3)
        chk.number(datum, "width", "datum.width", positive=True)
        _spinor(datum.get("spinor"), chk, "datum.spinor")
    else:
        chk.fail("datum.kind", f"expected 'bump' or 'gaussian', got {dkind!r}")

    pot = cfg.get("potential", {})
    pkind = pot.get("kind")
    if pkind == "bump":
        for k in ("radius", "t_halfwidth"):
            chk.number(pot, k, f"potential.{k}", positive=True)
        for k in ("amplitude", "t_center"):
            chk.number(pot, k, f"potential.{k}")
        chk.vector(pot, "direction", "potential.direction", 4)
        chk.vector(pot, "center", "potential.center", 3)
    elif pkind != "zero":
        chk.fail("potential.kind", f"expected 'zero' or 'bump', got {pkind!r}")

    gauge = cfg.get("gauge", {})
    gn = chk.number(gauge, "n", "gauge.n", positive=True, integer=True)
    if gn is not None and gn % 2:
        chk.fail("gauge.n", f"points per axis must be even, got {gn}")
    for k in ("radius", "t_halfwidth"):
        chk.number(gauge, k, f"gauge.{k}", positive=True)
    for k in ("amplitude", "t_center"):
        chk.number(gauge, k, f"gauge.{k}")
    chk.vector(gauge, "center", "gauge.center", 3)

    cov = cfg.get("covariance", {})
    chk.number(cov, "rapidity", "covariance.rapidity")
    chk.number(cov, "extent", "covariance.extent", positive=True)
    if cov.get("axis") not in (1, 2, 3):
        chk.fail("covariance.axis", f"expected 1, 2 or 3, got {cov.get('axis')!r}")
    sizes = cov.get("sizes")
    if (not isinstance(sizes, list) or len(sizes) != 2
            or not all(isinstance(v, int) and v >= 2 and v % 2 == 0 for v in sizes)
            or sizes[0] >= sizes[1]):
        chk.fail("covariance.sizes", f"expected two increasing even integers, got {sizes!r}")

    solver = cfg.get("solver", {})
    if solver.get("method") not in ("rk4", "picard"):
        chk.fail("solver.method", f"expected 'rk4' or 'picard', got {solver.get('method')!r}")
    for k in ("steps", "iterations", "store_every"):
        chk.number(solver, k, f"solver.{k}", positive=True, integer=True)
    chk.number(solver, "tolerance", "solver.tolerance", positive=True)
    t0 = chk.number(solver, "t0", "solver.t0")
    t1 = chk.number(solver, "t1", "solver.t1")
    if t0 is not None and t1 is not None and not t1 > t0:
        chk.fail("solver.t1", f"must exceed solver.t0 = {t0}, got {t1}")

    budgets = cfg.get("budgets", {})
    for k in budgets:
        chk.number(budgets, k, f"budgets.{k}", positive=True)

    checks = cfg.get("checks", [])
    if not isinstance(checks, list):
        chk.fail("checks", "expected a list of suite names")
    else:
        for i, s in enumerate(checks):
            if s not in SUITES:
                chk.fail(f"checks[{i}]", f"unknown suite {s!r}; choose from {', '.join(SUITES)}")
    if not isinstance(cfg.get("output"), str):
        chk.fail("output", f"expected a directory path string, got {cfg.get('output')!r}")
    unknown = sorted(set(cfg) - set(DEFAULTS))
    for k in unknown:
        chk.fail(k, "unknown top-level key")
    return chk.problems


@dataclass
class Scenario:
    """A validated scenario with builders for the numerical objects."""

    config: dict
    source: str = None

    @property
    def name(self):
        return self.config["name"]

    @property
    def mass(self):
        return float(self.config["mass"])

    @property
    def seed(self):
        return int(self.config["seed"])

    @property
    def solver(self):
        return self.config["solver"]

    @property
    def budgets(self):
        return self.config["budgets"]

    def grid(self):
        g = self.config["grid"]
        return Grid3(float(g["extent"]), int(g["n"]))

    def momentum(self):
        g = self.config["grid"]
        if g.get("momentum_extent") is None:
            return self.grid().dual()
        return Grid3(float(g["momentum_extent"]), int(g["n"]))

    def foliation(self):
        fol = self.config["foliation"]
        if fol["kind"] == "relaxing-bump":
            return relaxing_bump_foliation(fol["amplitude"], fol["width"], fol["relax_time"])
        surf = self.config["surface"]
        return flat_foliation(make_surface(surf["family"], **surf.get("params", {})))

    def initial_surface(self):
        return self.foliation().surface_at(float(self.solver["t0"]))

    def datum(self):
        """Initial datum on the leaf at ``solver.t0``."""
        d = self.config["datum"]
        surface = self.initial_surface()
        spinor = _spinor(d.get("spinor"), _Checker(), "datum.spinor")
        if d["kind"] == "bump":
            return bump_surface_field(surface, self.grid(), d["center"], d["radius"], spinor)
        shell = gaussian_shell_field(self.momentum(), self.mass, d["center"], d["width"],
                                     d["offset"], spinor)
        return f_sigma_m(shell, surface, self.grid())

    def potential(self):
        p = dict(self.config["potential"])
        if p.pop("kind") == "zero":
            return zero_potential()
        return bump_potential(**p)

    def gauge(self):
        params = dict(self.config["gauge"])
        params.pop("n", None)
        return bump_gauge(**params)

    def output_dir(self, override=None):
        return Path(override or self.config["output"]) / self.name

    def describe(self):
        return copy.deepcopy(self.config)


def from_dict(raw, source=None, lines=None):
    """Merge ``raw`` over the defaults and validate."""
    if not isinstance(raw, dict):
        raise ConfigError([("", "top level must be a JSON object")], source)
    cfg = _merge(DEFAULTS, raw)
    kind = cfg["datum"].get("kind")
    if kind in DATUM_DEFAULTS and isinstance(raw.get("datum"), dict):
        cfg["datum"] = {**DATUM_DEFAULTS[kind], **raw["datum"]}
    problems = validate(cfg, lines)
    if problems:
        raise ConfigError(problems, source)
    return Scenario(cfg, source)


def loads(text, source=None):
    """Parse and validate a scenario from JSON text."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"JSON syntax error at line {exc.lineno}, column {exc.colno}: "
                                f"{exc.msg}")], source) from None
    return from_dict(raw, source, _key_lines(text))


def load(path):
    """Parse and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([("", f"cannot read config: {exc.strerror}")], str(path)) from None
    return loads(text, str(path))


def canonical():
    """The canonical interacting scenario."""
    return from_dict({})
