"""Run configuration files, field exporters and the CSV importer.

Configuration files use flat sections with ``key = value`` lines and ``#``
comments::

    [run]
    mode = sweep
    [domain]
    n = 24
    scenario = hedgehog
    [material]
    a2 = 1.0
    [sweep]
    L_sequence = 0.1, 0.05, 0.025
"""

from __future__ import annotations

import configparser
import csv
import re
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__
from . import bulk
from . import field as fld
from . import qtensor as qt
from . import solve
from .asymptotics import ConfigurationError, SweepConfig, geometric_L

MODES = ("solve", "sweep")
FORMATS = ("csv", "vtk", "none")
INITS = ("harmonic", "zero", "random")

CSV_COLUMNS = ("i", "j", "k", "x", "y", "z", "q1", "q2", "q3", "q4", "q5",
               "S", "R", "beta", "ftilde", "n1", "n2", "n3")


class ConfigError(ConfigurationError):
    """Invalid configuration text; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class RunConfig:
    sweep: SweepConfig = dc_field(default_factory=SweepConfig)
    mode: str = "sweep"
    L: float = 0.1  # elastic constant of a single solve
    init: str = "harmonic"
    out: str = "results"
    format: str = "vtk"
    verbosity: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ConfigError("L must be positive")

    @property
    def params(self):
        return self.sweep.params(self.L)


# section -> key -> converter from the raw text
def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _optional_float(text):
    return None if text.strip().lower() in ("auto", "none", "") else float(text)


_KEYS = {
    "run": {"mode": str, "out": str, "format": str, "verbosity": int, "init": str},
    "domain": {"n": int, "scenario": str},
    "material": {"a2": float, "b2": float, "c2": float, "L": float},
    "sweep": {"L_sequence": _floats, "L_max": float, "L_ratio": float, "L_count": int,
              "margin": float, "lam": float, "warm_start": _bool, "threads": int,
              "collar_cells": int},
    "solver": {"max_iters": int, "tol_residual": _optional_float, "step_rule": str,
               "initial_step": float, "seed": int, "log_every": int, "truncate": _bool},
}

_LINE_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*[=:]")


def _line_index(text):
    """Map ``(section, key)`` to its 1-based line number."""
    index, section = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            index[(section, None)] = no
            continue
        m = _LINE_RE.match(line)
        if m and section is not None:
            index[(section, m.group(1))] = no
    return index


def parse_config(text):
    """Parse and validate configuration text into a :class:`RunConfig`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None,
                                   default_section="__defaults__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(exc.message if hasattr(exc, "message") else str(exc),
                          getattr(exc, "lineno", None)) from exc
    lines = _line_index(text)

    values = {}
    for section in cp.sections():
        if section not in _KEYS:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, None)))
        for key, raw in cp.items(section):
            line = lines.get((section, key))
            if key not in _KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line)
            try:
                values[key] = (_KEYS[section][key](raw), line)
            except ValueError as exc:
                raise ConfigError(f"invalid value for {key}: {exc}", line) from exc

    def take(key, default):
        return values[key][0] if key in values else default

    def checked(build, keys):
        try:
            return build()
        except ConfigurationError as exc:
            if isinstance(exc, ConfigError) and exc.line is not None:
                raise
            msg = str(exc)
            line = next((values[k][1] for k in keys if k in values and k in msg), None)
            raise ConfigError(msg, line) from exc
        except ValueError as exc:
            msg = str(exc)
            line = next((values[k][1] for k in keys if k in values and k in msg), None)
            raise ConfigError(msg, line) from exc

    if "L_sequence" in values and any(k in values for k in ("L_max", "L_ratio", "L_count")):
        raise ConfigError("give either L_sequence or L_max/L_ratio/L_count",
                          values["L_sequence"][1])
    if "L_sequence" in values:
        L_seq = values["L_sequence"][0]
    else:
        L_seq = geometric_L(take("L_max", 0.1), take("L_ratio", 0.5), take("L_count", 8))

    d = solve.SolverOptions()
    solver_keys = tuple(_KEYS["solver"])
    solver = checked(lambda: solve.SolverOptions(
        max_iters=take("max_iters", d.max_iters),
        tol_residual=take("tol_residual", d.tol_residual),
        step_rule=take("step_rule", d.step_rule),
        initial_step=take("initial_step", d.initial_step),
        seed=take("seed", d.seed),
        log_every=take("log_every", d.log_every),
        truncate=take("truncate", d.truncate)), solver_keys)

    s = SweepConfig()
    sweep_keys = ("n", "scenario", "a2", "b2", "c2", "L_sequence", "L_max", "L_ratio",
                  "L_count", "margin", "lam", "warm_start", "threads", "collar_cells")
    if take("n", s.n) < 3:
        raise ConfigError("n must be at least 3", values.get("n", (None, None))[1])
    sweep = checked(lambda: SweepConfig(
        n=take("n", s.n), scenario=take("scenario", s.scenario),
        a2=take("a2", s.a2), b2=take("b2", s.b2), c2=take("c2", s.c2),
        L_sequence=L_seq, margin=take("margin", s.margin), lam=take("lam", s.lam),
        solver=solver, warm_start=take("warm_start", s.warm_start),
        threads=take("threads", s.threads),
        collar_cells=take("collar_cells", s.collar_cells)), sweep_keys)
    if sweep.threads < 1:
        raise ConfigError("threads must be >= 1", values.get("threads", (None, None))[1])

    r = RunConfig()
    return checked(lambda: RunConfig(
        sweep=sweep, mode=take("mode", r.mode), L=take("L", r.L), init=take("init", r.init),
        out=take("out", r.out), format=take("format", r.format),
        verbosity=take("verbosity", r.verbosity)), tuple(_KEYS["run"]) + ("L",))


def serialize_config(cfg):
    """Canonical text form; ``parse_config(serialize_config(c))`` rebuilds ``c``."""
    s, o = cfg.sweep, cfg.sweep.solver
    tol = "auto" if o.tol_residual is None else repr(float(o.tol_residual))
    lines = [
        "[run]",
        f"mode = {cfg.mode}",
        f"out = {cfg.out}",
        f"format = {cfg.format}",
        f"init = {cfg.init}",
        f"verbosity = {cfg.verbosity}",
        "",
        "[domain]",
        f"n = {s.n}",
        f"scenario = {s.scenario}",
        "",
        "[material]",
        f"a2 = {float(s.a2)!r}",
        f"b2 = {float(s.b2)!r}",
        f"c2 = {float(s.c2)!r}",
        f"L = {float(cfg.L)!r}",
        "",
        "[sweep]",
        "L_sequence = " + ", ".join(repr(float(L)) for L in s.L_sequence),
        f"margin = {float(s.margin)!r}",
        f"lam = {float(s.lam)!r}",
        f"warm_start = {'true' if s.warm_start else 'false'}",
        f"threads = {s.threads}",
        f"collar_cells = {s.collar_cells}",
        "",
        "[solver]",
        f"max_iters = {o.max_iters}",
        f"tol_residual = {tol}",
        f"step_rule = {o.step_rule}",
        f"initial_step = {float(o.initial_step)!r}",
        f"seed = {o.seed}",
        f"log_every = {o.log_every}",
        f"truncate = {'true' if o.truncate else 'false'}",
    ]
    return "\n".join(lines) + "\n"


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text)


# --------------------------------------------------------------------------
# field exporters
# --------------------------------------------------------------------------

def node_table(f, p):
    """Derived per-node quantities: ``(S, R, beta, ftilde, |Q|, leading eigenvector)``."""
    q = f.values
    rep = qt.decompose_SR(q)
    lead = qt.eigen(q).eigenvectors[..., :, 0]
    return (rep.S, rep.R, qt.biaxiality(q), bulk.f_bulk_shifted(q, p), qt.norm(q), lead)


def _header_comment(f, p):
    g = f.grid
    return ("# nematic_ldg " + __version__
            + " dims=" + ",".join(str(d) for d in g.dims)
            + f" h={g.h!r} origin=" + ",".join(repr(o) for o in g.origin)
            + f" a2={p.a2!r} b2={p.b2!r} c2={p.c2!r} L={p.L!r}")


def _write_csv(f, p, path):
    S, R, beta, ft, _, lead = node_table(f, p)
    coords = f.grid.coordinates()
    with open(path, "w", newline="") as fh:
        fh.write(_header_comment(f, p) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for idx in np.ndindex(*f.grid.dims):
            row = list(idx)
            row += [repr(float(v)) for v in coords[idx]]
            row += [repr(float(v)) for v in f.values[idx]]
            row += [repr(float(S[idx])), repr(float(R[idx])), repr(float(beta[idx])),
                    repr(float(ft[idx]))]
            row += [repr(float(v)) for v in lead[idx]]
            w.writerow(row)


def _vtk_block(values):
    # VTK structured points run x fastest
    flat = np.asarray(values).reshape(values.shape[:3] + (-1,))
    flat = flat.transpose(2, 1, 0, 3).reshape(-1, flat.shape[-1])
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in flat)


def _write_vtk(f, p, path):
    S, R, beta, ft, qn, lead = node_table(f, p)
    g = f.grid
    parts = [
        "# vtk DataFile Version 3.0",
        (_header_comment(f, p)[2:])[:255],
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS " + " ".join(str(d) for d in g.dims),
        "ORIGIN " + " ".join(repr(o) for o in g.origin),
        f"SPACING {g.h!r} {g.h!r} {g.h!r}",
        f"POINT_DATA {g.num_nodes}",
    ]
    for name, arr in (("S", S), ("R", R), ("beta", beta), ("ftilde", ft), ("Qnorm", qn)):
        parts += [f"SCALARS {name} double 1", "LOOKUP_TABLE default",
                  _vtk_block(arr[..., None])]
    parts += ["VECTORS director double", _vtk_block(lead)]
    Path(path).write_text("\n".join(parts) + "\n")


def export_field(f, p, path, format="csv"):
    """Write ``f`` as CSV (one row per node) or legacy ASCII VTK structured points."""
    path = Path(path)
    if not path.parent.exists():
        raise OSError(f"directory {path.parent} does not exist")
    if format == "csv":
        _write_csv(f, p, path)
    elif format in ("vtk", "vtk-structured-points"):
        _write_vtk(f, p, path)
    else:
        raise ValueError(f"unknown export format {format!r}")


def import_field_csv(path):
    """Read a CSV export back as ``(QField, MaterialParams)``."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# nematic_ldg"):
            raise ValueError(f"{path} is not a nematic_ldg CSV export")
        meta = dict(item.split("=", 1) for item in first.split()[3:])
        dims = tuple(int(v) for v in meta["dims"].split(","))
        grid = fld.Grid3(dims, float(meta["h"]),
                         tuple(float(v) for v in meta["origin"].split(",")))
        p = bulk.MaterialParams(float(meta["a2"]), float(meta["b2"]), float(meta["c2"]),
                                float(meta["L"]))
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV columns {header}")
        values = np.full(dims + (5,), np.nan)
        for row in reader:
            i, j, k = (int(v) for v in row[:3])
            values[i, j, k] = [float(v) for v in row[6:11]]
    if np.isnan(values).any():
        raise ValueError(f"{path} does not cover every grid node")
    return fld.QField(grid, values), p
