"""Command line entry point: ``python -m nematic_ldg {solve,sweep,analyze,export}``.

Exit status is 0 on success. Failures print one JSON object
``{"error": category, "message": ...}`` on stderr and exit with

====  ==============
2     usage
3     config
4     io
5     solver-failure
1     internal
====  ==============
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import asymptotics as asy
from . import field as fld
from . import io
from . import qtensor as qt
from . import solve

EXIT = {"usage": 2, "config": 3, "io": 4, "solver-failure": 5, "internal": 1}
SCHEMA_VERSION = asy.SCHEMA_VERSION


class CliError(Exception):
    def __init__(self, category, message):
        self.category = category
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", f"{self.prog}: {message}")


def _build_parser():
    parser = _Parser(prog="nematic-ldg",
                     description="Landau-de Gennes Q-tensor solver and vanishing-L sweeps.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (("solve", "minimise the Q-tensor energy for one L"),
                            ("sweep", "run the vanishing-L experiment"),
                            ("analyze", "diagnostics of an exported CSV field"),
                            ("export", "convert an exported CSV field")):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--threads", metavar="N", type=int)
        sp.add_argument("--seed", metavar="S", type=int)
        sp.add_argument("--format", metavar="F", choices=io.FORMATS)
        sp.add_argument("--input", metavar="PATH", required=name in ("analyze", "export"))
        sp.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _config(args):
    cfg = io.load_config(args.config) if args.config else io.RunConfig()
    sweep = cfg.sweep
    if args.seed is not None:
        sweep = dataclasses.replace(
            sweep, solver=dataclasses.replace(sweep.solver, seed=args.seed))
    if args.threads is not None:
        if args.threads < 1:
            raise CliError("usage", "--threads must be >= 1")
        sweep = dataclasses.replace(sweep, threads=args.threads)
    cfg = dataclasses.replace(cfg, sweep=sweep)
    if args.out:
        cfg.out = args.out
    if args.format:
        cfg.format = args.format
    return cfg


def _provenance(cfg_text=None, **extra):
    prov = {"package": "nematic_ldg", "version": __version__}
    if cfg_text is not None:
        prov["config_hash"] = hashlib.sha256(cfg_text.encode()).hexdigest()[:16]
        prov["config"] = cfg_text
    prov.update(extra)
    return prov


def _out_dir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError("io", f"cannot create output directory {out}: {exc.strerror}") from exc
    return out


def _write_json(path, obj):
    try:
        Path(path).write_text(json.dumps(asy._jsonable(obj), indent=2) + "\n")
    except OSError as exc:
        raise CliError("io", f"cannot write {path}: {exc.strerror}") from exc


def _export(f, p, out, stem, fmt):
    if fmt == "none":
        return None
    path = out / f"{stem}.{fmt}"
    try:
        io.export_field(f, p, path, fmt)
    except OSError as exc:
        raise CliError("io", str(exc)) from exc
    return path.name


def initial_field(cfg):
    s = cfg.sweep
    grid = s.grid
    p = cfg.params
    n_b = fld.scenario_director(s.scenario, grid)
    if cfg.init == "harmonic":
        return solve.initial_q_field(grid, n_b, p)
    f = fld.boundary_from_director(grid, n_b, p)
    if cfg.init == "random":
        d = fld.director_field(grid, n_b, interior="random", seed=s.solver.seed)
        f = fld.QField(grid, solve.limiting_map(d, p).values, f.boundary)
    return f


def cmd_solve(cfg):
    p = cfg.params
    f, rep = solve.minimize_q(initial_field(cfg), p, cfg.sweep.solver)
    out = _out_dir(cfg.out)
    text = io.serialize_config(cfg)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "solve",
        "params": dataclasses.asdict(p),
        "report": rep.to_dict(),
        "elastic_energy": fld.elastic_energy(f, p),
        "bulk_energy": fld.bulk_energy(f, p),
        "field_file": _export(f, p, out, "field", cfg.format),
        "provenance": _provenance(text),
    }
    _write_json(out / "report.json", doc)
    if not rep.converged:
        raise CliError("solver-failure", f"solver stopped: {rep.message}")
    return doc


def cmd_sweep(cfg):
    report = asy.run_sweep(cfg.sweep)
    out = _out_dir(cfg.out)
    doc = report.to_dict()
    doc["kind"] = "sweep"
    doc["provenance"].update(_provenance(io.serialize_config(cfg)))
    files = []
    for k, L in enumerate(cfg.sweep.L_sequence):
        files.append(_export(report.fields[L], cfg.sweep.params(L), out, f"field_L{k}",
                             cfg.format))
    doc["field_files"] = files
    _write_json(out / "report.json", doc)
    if report.failed:
        raise CliError("solver-failure", "at least one solve did not converge")
    return doc


def _read_field(path):
    try:
        return io.import_field_csv(path)
    except OSError as exc:
        raise CliError("io", f"cannot read {path}: {exc.strerror}") from exc
    except (ValueError, KeyError) as exc:
        raise CliError("io", f"malformed field file {path}: {exc}") from exc


def analyze_field(f, p, lam=0.5):
    """Energies, residual and defect diagnostics of a single field."""
    res, _ = fld.el_residual(f, p)
    om_star, om_lam = asy.region_measures(f, p, lam)
    beta = qt.biaxiality(f.values)
    centers, radii = asy.default_audit_balls(f.grid)
    return {
        "total_energy": fld.total_energy(f, p),
        "elastic_energy": fld.elastic_energy(f, p),
        "bulk_energy": fld.bulk_energy(f, p),
        "el_residual": res,
        "max_q_norm": float(f.norms().max()),
        "q_norm_min": float(p.q_norm_min),
        "max_beta": float(beta.max()),
        "argmax_beta": [int(i) for i in np.unravel_index(np.argmax(beta), beta.shape)],
        "omega_star_measure": om_star,
        "omega_lambda_measure": om_lam,
        "boundary_normal_deriv_sq": asy.boundary_normal_energy(f),
        "monotonicity_violation": asy.monotonicity_audit(f, p, centers, radii),
        "min_eig_gap": float(asy.eigenvalue_gap_map(f).min()),
    }


def cmd_analyze(args, cfg):
    f, p = _read_field(args.input)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "analyze",
        "input": str(args.input),
        "params": dataclasses.asdict(p),
        "diagnostics": analyze_field(f, p, cfg.sweep.lam),
        "provenance": _provenance(
            None, input_sha256=hashlib.sha256(Path(args.input).read_bytes()).hexdigest()[:16]),
    }
    if args.out:
        _write_json(_out_dir(args.out) / "analysis.json", doc)
    else:
        print(json.dumps(asy._jsonable(doc), indent=2))
    return doc


def cmd_export(args):
    f, p = _read_field(args.input)
    fmt = args.format or "vtk"
    if fmt == "none":
        raise CliError("usage", "export needs --format csv or vtk")
    out = _out_dir(args.out or ".")
    name = _export(f, p, out, Path(args.input).stem, fmt)
    return {"written": name}


def run(argv=None):
    """Run the command line tool; returns the exit status."""
    try:
        args = _build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        try:
            cfg = _config(args)
        except io.ConfigError as exc:
            raise CliError("config", str(exc)) from exc
        except asy.ConfigurationError as exc:
            raise CliError("config", str(exc)) from exc
        except OSError as exc:
            raise CliError("io", str(exc)) from exc
        if args.command == "solve":
            cmd_solve(cfg)
        elif args.command == "sweep":
            try:
                cmd_sweep(cfg)
            except asy.ConfigurationError as exc:
                raise CliError("config", str(exc)) from exc
        elif args.command == "analyze":
            cmd_analyze(args, cfg)
        else:
            cmd_export(args)
    except CliError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return EXIT[exc.category]
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        print(json.dumps({"error": "internal", "message": f"{type(exc).__name__}: {exc}"}),
              file=sys.stderr)
        return EXIT["internal"]
    return 0


def main():
    sys.exit(run())
