"""Run configuration: a YAML file validated into a :class:`RunConfig`.

Schema (keys not listed are rejected)::

    grid:        {n: [nx, ny, nz], L: [Lx, Ly, Lz]}      # L optional, default 1
    units:       natural | SI                             # default natural
    medium:      {kind: constant, eps: 1, mu: 1}
               | {kind: constant, n: 1.5, eta: 1}
               | {kind: analytic, eps: "<expr>", mu: "<expr>"}
               | {kind: analytic, n: "<expr>", eta: "<expr>"}
               | {kind: file, path: medium.bin}
    initial:     {plane_wave: {k: [kx, ky, kz] | modes: [mx, my, mz], E0: [..]}}
               | {gaussian_packet: {center: [..], width: w, k0: [..], E0: [..]}}
               | {file: state.bin}
               | {random: {kmax_fraction: 0.25}}                  # seeded, divergence-free
               | {zero: true}
    propagator:  {kind: rk4 | exact_kspace, steps: 100, dt: null, cfl: 0.25,
                  diag_every: 10, form: eps_mu | n_eta}
    source:      {J: ["<expr>", "<expr>", "<expr>"], rho: "<expr>"}   # optional
    output:      {dir: out, snapshot_every: 0, slice_csv: true}
    dispersion:  {modes: [[mx, my, mz], ...], samples: 16}
    beam:        {wavelength: 0.25, n0: 1.5, states: 20}
    tolerances:  {name: value, ...}                                     # overrides
    seed:        0
    oracle:      false

Expressions use ``x, y, z, t``, numbers, ``pi``, ``+ - * / **`` and
``sin``, ``cos``, ``exp``, ``sqrt``.  Relative ``path`` entries are resolved
against the config file's directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .grid import Grid
from .medium import MediumError, MediumSpec, compile_expression, parse_expression

DEFAULT_TOLERANCES = {
    "energy_drift": 1e-6,
    "phase_error": 1e-8,
    "oracle": 1e-10,
    "dispersion": 1e-10,
    "commutation": 1e-13,
    "monochromatic": 1e-10,
    "refractive_part": 1e-13,
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


_TOP = {"grid", "units", "medium", "initial", "propagator", "source", "output",
        "dispersion", "beam", "tolerances", "seed", "oracle"}


@dataclass
class RunConfig:
    grid: Grid
    units: str
    medium: MediumSpec
    initial: dict
    propagator: dict
    source: Optional[dict]
    output: dict
    dispersion: dict
    beam: dict
    tolerances: dict
    seed: int = 0
    oracle: bool = False
    base_dir: Path = field(default_factory=Path)


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _mapping(node, path, allowed=None, required=()):
    if not isinstance(node, dict):
        _fail(path, f"expected a mapping, got {type(node).__name__}")
    if allowed is not None:
        extra = set(node) - set(allowed)
        if extra:
            _fail(path, f"unknown key(s) {sorted(extra)}; allowed: {sorted(allowed)}")
    for key in required:
        if key not in node:
            _fail(f"{path}.{key}", "required field is missing")
    return node


def _number(node, path, positive=False, integer=False, minimum=None):
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        _fail(path, f"expected a number, got {node!r}")
    if integer and int(node) != node:
        _fail(path, f"expected an integer, got {node!r}")
    if positive and not node > 0:
        _fail(path, f"must be positive, got {node!r}")
    if minimum is not None and node < minimum:
        _fail(path, f"must be >= {minimum}, got {node!r}")
    return int(node) if integer else float(node)


def _vector(node, path, length=3, complex_ok=False):
    if not isinstance(node, (list, tuple)) or len(node) != length:
        _fail(path, f"expected a list of {length} numbers, got {node!r}")
    out = []
    for i, v in enumerate(node):
        if complex_ok and isinstance(v, str):
            try:
                out.append(complex(v.replace(" ", "").replace("i", "j")))
                continue
            except ValueError:
                _fail(f"{path}[{i}]", f"cannot read {v!r} as a complex number")
        out.append(_number(v, f"{path}[{i}]"))
    return out


def _expr(node, path):
    try:
        return parse_expression(node)
    except MediumError as exc:
        _fail(path, str(exc))


def _resolve(base: Path, p, path):
    if not isinstance(p, str):
        _fail(path, f"expected a file path, got {p!r}")
    q = Path(p)
    q = q if q.is_absolute() else base / q
    if not q.exists():
        _fail(path, f"file {str(q)!r} does not exist")
    return q


def _medium(node, units, grid, base):
    node = _mapping(node, "medium", {"kind", "eps", "mu", "n", "eta", "path"}, ("kind",))
    kind = node["kind"]
    pair = ("n", "eta") if "n" in node or "eta" in node else ("eps", "mu")
    try:
        if kind == "constant":
            a = _number(node.get(pair[0], 1.0), f"medium.{pair[0]}", positive=True)
            b = _number(node.get(pair[1], 1.0), f"medium.{pair[1]}", positive=True)
            if pair[0] == "n":
                return MediumSpec.constant_n_eta(a, b, units)
            return MediumSpec.constant(a, b, units)
        if kind == "analytic":
            for key in pair:
                if key not in node:
                    _fail(f"medium.{key}", "required for an analytic medium")
            a, b = _expr(node[pair[0]], f"medium.{pair[0]}"), _expr(node[pair[1]], f"medium.{pair[1]}")
            spec = MediumSpec.analytic_n_eta(a, b, units) if pair[0] == "n" else MediumSpec.analytic(a, b, units)
            spec.max_speed(grid)        # positivity check on the grid
            return spec
        if kind == "file":
            from .io import FormatError, read_medium
            p = _resolve(base, node.get("path"), "medium.path")
            try:
                spec, g = read_medium(p)
            except FormatError as exc:
                _fail("medium.path", str(exc))
            if g.shape != grid.shape:
                _fail("medium.path", f"medium grid {g.shape} does not match grid.n {grid.shape}")
            return spec
    except MediumError as exc:
        _fail("medium", str(exc))
    _fail("medium.kind", f"expected constant, analytic or file, got {kind!r}")


def _initial(node, base):
    node = _mapping(node, "initial", {"plane_wave", "gaussian_packet", "file", "random", "zero"})
    if len(node) != 1:
        _fail("initial", "give exactly one of plane_wave, gaussian_packet, file, random, zero")
    (kind, body), = node.items()
    if kind == "plane_wave":
        body = _mapping(body, "initial.plane_wave", {"k", "modes", "E0"}, ("E0",))
        if ("k" in body) == ("modes" in body):
            _fail("initial.plane_wave", "give exactly one of k or modes")
        out = {"kind": kind, "E0": _vector(body["E0"], "initial.plane_wave.E0", complex_ok=True)}
        if "k" in body:
            out["k"] = _vector(body["k"], "initial.plane_wave.k")
        else:
            out["modes"] = [_number(m, f"initial.plane_wave.modes[{i}]", integer=True)
                            for i, m in enumerate(_vector(body["modes"], "initial.plane_wave.modes"))]
        return out
    if kind == "gaussian_packet":
        p = "initial.gaussian_packet"
        body = _mapping(body, p, {"center", "width", "k0", "E0"}, ("center", "width", "k0", "E0"))
        return {"kind": kind, "center": _vector(body["center"], f"{p}.center"),
                "width": _number(body["width"], f"{p}.width", positive=True),
                "k0": _vector(body["k0"], f"{p}.k0"),
                "E0": _vector(body["E0"], f"{p}.E0", complex_ok=True)}
    if kind == "file":
        return {"kind": kind, "path": _resolve(base, body, "initial.file")}
    if kind == "random":
        body = _mapping(body or {}, "initial.random", {"kmax_fraction"})
        kf = _number(body.get("kmax_fraction", 0.25), "initial.random.kmax_fraction", positive=True)
        if kf > 1:
            _fail("initial.random.kmax_fraction", f"must be <= 1, got {kf}")
        return {"kind": kind, "kmax_fraction": kf}
    if body is not True:
        _fail("initial.zero", "expected true")
    return {"kind": "zero"}


def _propagator(node):
    node = _mapping(node or {}, "propagator", {"kind", "steps", "dt", "cfl", "diag_every", "form"})
    out = {"kind": node.get("kind", "rk4"),
           "steps": _number(node.get("steps", 100), "propagator.steps", integer=True, minimum=0),
           "dt": None if node.get("dt") is None else _number(node["dt"], "propagator.dt", positive=True),
           "cfl": _number(node.get("cfl", 0.25), "propagator.cfl", positive=True),
           "diag_every": _number(node.get("diag_every", 0), "propagator.diag_every", integer=True, minimum=0),
           "form": node.get("form", "eps_mu")}
    if out["kind"] not in ("rk4", "exact_kspace"):
        _fail("propagator.kind", f"expected rk4 or exact_kspace, got {out['kind']!r}")
    if out["form"] not in ("eps_mu", "n_eta"):
        _fail("propagator.form", f"expected eps_mu or n_eta, got {out['form']!r}")
    if out["cfl"] > 0.5:
        _fail("propagator.cfl", f"must be <= 0.5, got {out['cfl']}")
    return out


def _source(node):
    if node is None:
        return None
    node = _mapping(node, "source", {"J", "rho"})
    J = node.get("J", [0, 0, 0])
    if not isinstance(J, list) or len(J) != 3:
        _fail("source.J", f"expected three expressions, got {J!r}")
    return {"J": [_expr(e, f"source.J[{i}]") for i, e in enumerate(J)],
            "rho": _expr(node.get("rho", 0), "source.rho")}


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {str(path)!r} does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    return parse_config(raw, path.parent)


def parse_config(raw: Any, base_dir=Path(".")) -> RunConfig:
    base = Path(base_dir)
    raw = _mapping(raw if raw is not None else {}, "config", _TOP, ("grid",))
    g = _mapping(raw["grid"], "grid", {"n", "L"}, ("n",))
    n = [_number(v, f"grid.n[{i}]", integer=True, minimum=1) for i, v in enumerate(_vector(g["n"], "grid.n"))]
    L = [_number(v, f"grid.L[{i}]", positive=True) for i, v in enumerate(_vector(g.get("L", [1, 1, 1]), "grid.L"))]
    grid = Grid(tuple(n), tuple(L))
    units = raw.get("units", "natural")
    if units not in ("natural", "SI"):
        _fail("units", f"expected natural or SI, got {units!r}")
    medium = _medium(raw.get("medium", {"kind": "constant"}), units, grid, base)
    initial = _initial(raw["initial"], base) if "initial" in raw else {"kind": "zero"}
    out = _mapping(raw.get("output") or {}, "output", {"dir", "snapshot_every", "slice_csv"})
    output = {"dir": out.get("dir"),
              "snapshot_every": _number(out.get("snapshot_every", 0), "output.snapshot_every", integer=True, minimum=0),
              "slice_csv": bool(out.get("slice_csv", True))}
    disp = _mapping(raw.get("dispersion") or {}, "dispersion", {"modes", "samples"})
    modes = disp.get("modes", [[0, 0, 1]])
    if not isinstance(modes, list) or not modes:
        _fail("dispersion.modes", "expected a non-empty list of mode triples")
    dispersion = {"modes": [_vector(m, f"dispersion.modes[{i}]") for i, m in enumerate(modes)],
                  "samples": _number(disp.get("samples", 16), "dispersion.samples", integer=True, minimum=3)}
    beam_raw = _mapping(raw.get("beam") or {}, "beam", {"wavelength", "n0", "states"})
    beam = {"wavelength": _number(beam_raw.get("wavelength", 0.25), "beam.wavelength", positive=True),
            "n0": None if beam_raw.get("n0") is None else _number(beam_raw["n0"], "beam.n0", positive=True),
            "states": _number(beam_raw.get("states", 20), "beam.states", integer=True, minimum=1)}
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in _mapping(raw.get("tolerances") or {}, "tolerances", set(DEFAULT_TOLERANCES)).items():
        tol[k] = _number(v, f"tolerances.{k}", positive=True)
    seed = _number(raw.get("seed", 0), "seed", integer=True, minimum=0)
    oracle = raw.get("oracle", False)
    if not isinstance(oracle, bool):
        _fail("oracle", f"expected true or false, got {oracle!r}")
    return RunConfig(grid, units, medium, initial, _propagator(raw.get("propagator")),
                     _source(raw.get("source")), output, dispersion, beam, tol, seed, oracle, base)


def source_function(cfg: RunConfig):
    """Callable ``t -> SourceState`` for the configured analytic source, or None."""
    if cfg.source is None:
        return None
    from .fields import SourceState
    lams = [compile_expression(e) for e in cfg.source["J"] + [cfg.source["rho"]]]
    x, y, z = cfg.grid.coords
    shape = cfg.grid.shape

    def at(t):
        vals = [np.broadcast_to(np.asarray(f(x, y, z, t), dtype=complex), shape) for f in lams]
        return SourceState(np.stack(vals[:3]), np.array(vals[3]))
    return at


def wavevector(cfg: RunConfig):
    ini = cfg.initial
    if "k" in ini:
        return np.asarray(ini["k"], dtype=float)
    return cfg.grid.wavevector(ini["modes"])
