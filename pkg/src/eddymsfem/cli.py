"""Command line front-end: ``eddymsfem solve|adapt|check CONFIG``.

Exit codes: 0 success, 2 invalid configuration or unreadable input,
3 solver failure.  Diagnostics go to stderr, the summary to stdout and
everything else into the output directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys

from . import __version__
from .assembly import gauge_description
from .config import load_config
from .errors import ConfigurationError, EddyMsfemError
from .estimator import (THREADS_ENV, adaptive_loop, eddy_current_losses, run_estimator,
                        true_error_sq)
from .reference import make_overkill, slab_reference
from .thickness import coefficient_table
from .vtk import solution_fields, write_vtk

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

log = logging.getLogger("eddymsfem")


def _manifest(cfg, text, command, outputs, extra=None):
    setup = cfg.setup
    out = {
        "tool": "eddymsfem",
        "version": __version__,
        "command": command,
        "config_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
        "orders": dataclasses.asdict(setup.orders),
        "gauges": gauge_description(setup),
        "marking_threshold": cfg.adaptivity.threshold,
        "frequency_hz": setup.frequency,
        "phasor_convention": "exp(+i omega t), peak amplitudes",
        "sheet": {"d_fe": setup.profile.d_fe, "d_0": setup.profile.d_0},
        "outputs": sorted(outputs),
    }
    if cfg.source_note:
        out["source"] = cfg.source_note
    if extra:
        out.update(extra)
    return out


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _error_fn(cfg):
    kind = cfg.adaptivity.reference
    if kind == "overkill":
        levels = cfg.adaptivity.overkill_levels
        return lambda s, sol: true_error_sq(s, sol, make_overkill(s, levels))
    if kind == "analytic":
        ref = slab_reference(cfg.setup)
        return lambda s, sol: true_error_sq(s, sol, ref)
    return None


def cmd_solve(args):
    cfg, text = load_config(args.config)
    out_dir = args.output or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    setup = cfg.setup
    sol, flux, ind = run_estimator(setup)
    losses = eddy_current_losses(sol)
    cell, point = solution_fields(sol, ind)
    write_vtk(os.path.join(out_dir, "solution.vtk"), setup.mesh, cell, point)
    summary = {"ndof": sol.ndof, "triangles": setup.mesh.n_triangles,
               "losses_w": losses, "eta": ind.eta,
               "equilibration_residuals": [flux.residual1, flux.residual2]}
    _write_json(os.path.join(out_dir, "manifest.json"),
                _manifest(cfg, text, "solve", ["solution.vtk", "manifest.json"],
                          {"summary": summary}))
    print(f"ndof {sol.ndof}")
    print(f"triangles {setup.mesh.n_triangles}")
    print(f"losses_W {losses:.6e}")
    print(f"eta {ind.eta:.6e}")
    return EXIT_OK


def cmd_adapt(args):
    cfg, text = load_config(args.config)
    a = cfg.adaptivity
    max_iter = a.max_iterations if args.max_iter is None else args.max_iter
    budget = a.dof_budget if args.dof_budget is None else args.dof_budget
    if max_iter < 0:
        raise ConfigurationError("must be non-negative", field="--max-iter")
    out_dir = args.output or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    outputs = ["history.csv", "manifest.json"]

    def dump(rec, setup, sol, flux, ind):
        name = f"mesh_{rec.iteration:03d}.vtk"
        cell, point = solution_fields(sol, ind)
        write_vtk(os.path.join(out_dir, name), setup.mesh, cell, point)
        outputs.append(name)

    result = adaptive_loop(cfg.setup, max_iter, dof_budget=budget, error_fn=_error_fn(cfg),
                           uniform=args.uniform, fraction=a.threshold, keep_states=False,
                           callback=dump)
    csv_text = result.to_csv()
    with open(os.path.join(out_dir, "history.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    _write_json(os.path.join(out_dir, "manifest.json"),
                _manifest(cfg, text, "adapt", outputs,
                          {"refinement": "uniform" if args.uniform else "adaptive",
                           "max_iterations": max_iter, "dof_budget": budget,
                           "reference": a.reference, "converged": result.converged}))
    sys.stdout.write(csv_text)
    return EXIT_OK


def _table_lines(label, table):
    lines = [f"[{label}]"]
    for f in dataclasses.fields(table):
        lines.append(f"  {f.name:<14s} {getattr(table, f.name):.9e}")
    return lines


def cmd_check(args):
    cfg, _ = load_config(args.config)
    s = cfg.setup
    p = s.profile
    lines = [f"d      {p.d * 1e3:.6g} mm", f"d_Fe   {p.d_fe * 1e3:.6g} mm",
             f"d_0    {p.d_0 * 1e3:.6g} mm", f"K      {p.K:.9e} 1/m^2"]
    lines += _table_lines("unit (kappa = 1)", coefficient_table(1.0, 1.0, p))
    lines += _table_lines("conductor sigma", s.sigma_table)
    lines += _table_lines("conductor rho", s.rho_table)
    for tag, tab in sorted(s.mu_tables.items()):
        lines += _table_lines(f"{tag} mu", tab)
    print("\n".join(lines))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="eddymsfem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve once and estimate the error")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory (overrides the config)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("adapt", help="run the adaptive (or uniform) refinement loop")
    p.add_argument("config")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--dof-budget", type=int, default=None)
    p.add_argument("--uniform", action="store_true", help="refine every element each step")
    p.add_argument("-o", "--output", help="output directory (overrides the config)")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("check", help="validate a config and print coefficient tables")
    p.add_argument("config")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.debug("worker threads from %s: %s", THREADS_ENV, os.environ.get(THREADS_ENV))
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EddyMsfemError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
