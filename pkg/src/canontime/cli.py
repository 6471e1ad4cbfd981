"""Command-line front end.

Exit status: 0 success, 2 bad input, 3 numerical contract violated.  Errors
are also written to stderr as a one-line JSON object.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import discrete, lyapunov, oracle, spectra, timekernel, uncertainty
from .errors import CanonTimeError, InputError, NumericalContractError
from .matrix_io import write_matrix

ORACLE_TOL = 1e-3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message, 2)
        self.exit(2)


def _emit_error(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")


def _fmt(x):
    return format(float(x), ".17g")


def write_csv(path, header, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])


def write_json(path, doc):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def parse_times(text):
    """``t0:t1:step`` -> inclusive ascending array; ``t`` -> single time."""
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise InputError(f"bad time range {text!r}") from None
    if len(vals) == 1:
        return np.array(vals)
    if len(vals) != 3:
        raise InputError("time range must be t0:t1:step")
    t0, t1, step = vals
    if step <= 0 or t1 < t0:
        raise InputError(f"time range {text!r} is not ascending")
    n = int(np.floor((t1 - t0) / step + 1e-9)) + 1
    return t0 + step * np.arange(n)


def _grid_from_args(args, state):
    tol = args.coverage_tol
    if args.tmax is None:
        return timekernel.auto_time_grid(state, coverage_tol=tol)[0]
    if args.grid == "graded":
        return timekernel.TimeGrid.graded(args.tmax, args.nodes, args.scale, tol)
    return timekernel.TimeGrid.uniform(args.tmax, args.nodes, tol)


def _add_grid_flags(p):
    p.add_argument("--tmax", type=float, help="half-width of the time grid (default: automatic)")
    p.add_argument("--nodes", type=int, default=4097)
    p.add_argument("--grid", choices=("uniform", "graded"), default="uniform")
    p.add_argument("--scale", type=float, default=1.0, help="core width for --grid graded")
    p.add_argument("--coverage-tol", type=float, default=timekernel.DEFAULT_COVERAGE_TOL)
    p.add_argument("--norm-tol", type=float, default=1e-8)


# -- subcommands ------------------------------------------------------------------

def cmd_state_validate(args):
    st = spectra.load_state(args.file, args.norm_tol)
    report = {
        "kind": st.spectrum.kind,
        "degeneracy": st.spectrum.degeneracy,
        "nodes": st.spectrum.n_nodes,
        "norm": st.norm,
        "normalized": st.is_normalized,
        "tail_mass_estimate": st.edge_mass(),
        **spectra.UnitsConfig().as_dict(),
    }
    write_json(args.out, report)
    if not st.is_normalized:
        raise InputError(f"state norm {st.norm!r} is not 1 within {args.norm_tol}")


def cmd_timedist(args):
    st = spectra.load_state(args.file, args.norm_tol)
    grid = timekernel.TimeGrid.uniform(args.tmax, args.nodes, args.coverage_tol, t_min=args.tmin)
    dist = timekernel.time_density(st, grid)
    write_csv(args.out, ["t", "p_T", "cumulative"],
              [dist.nodes, dist.density, lyapunov.cdf(dist, dist.nodes)])


def cmd_lyapunov(args):
    times = parse_times(args.times)
    st = spectra.load_state(args.file, args.norm_tol)
    curve = lyapunov.lyapunov_curve(st, times, _grid_from_args(args, st))
    write_csv(args.out, ["t", "mf", "sgn", "err"],
              [curve.times, curve.mf_values, curve.sgn_values, curve.errors])


def cmd_uncertainty(args):
    st = spectra.load_state(args.file, args.norm_tol)
    rep = uncertainty.uncertainty_product(st, _grid_from_args(args, st))
    write_json(args.out, rep.to_dict())


def cmd_pom(args):
    sp = spectra.load_spectrum(args.spectrum)
    pom = discrete.build_pom(sp, args.tau, args.nodes, rule=args.rule)
    doc = {
        "tau": pom.tau,
        "nodes": int(pom.t_nodes.size),
        "completeness_residual": pom.completeness_residual,
        "idempotency_residual": pom.idempotency_residual,
        "hbar": 1.0,
    }
    if args.state:
        st = spectra.load_state(args.state)
        if st.spectrum.kind != "discrete" or not np.array_equal(st.spectrum.energies, sp.energies):
            raise InputError("the state must live on the given discrete spectrum")
        dist = discrete.pom_probability(pom, st)
        doc.update(residual_mass=dist.residual_mass, captured_mass=dist.captured_mass,
                   total_probability=dist.total, t=dist.nodes.tolist(),
                   probability=dist.density.tolist())
    write_json(args.out, doc)
    if pom.completeness_residual > args.completeness_tol:
        raise NumericalContractError(
            f"completeness residual {pom.completeness_residual:.3e} > {args.completeness_tol:.1e}")


def cmd_oracle(args):
    params = oracle.FreeParticleParams(args.m, args.sigma)
    t = parse_times(args.times)
    write_csv(args.out, ["t", "p_T_analytic", "mf_analytic"],
              [t, oracle.analytic_time_density(params, t), oracle.analytic_mf(params, t)])


def oracle_comparison(m=1.0, sigma=1.0, energy_nodes=4001, time_nodes=3001,
                      times=np.linspace(-10.0, 10.0, 101), density_window=5.0):
    """Run the full pipeline on the free-particle state and compare with the closed forms."""
    params = oracle.FreeParticleParams(m, sigma)
    a = params.a
    state = oracle.build_oracle_state(params, oracle.oracle_grid(params, energy_nodes))
    grid = timekernel.TimeGrid.graded(2000.0 * a, time_nodes, a)
    dist = timekernel.time_density(state, grid)
    mf_err = np.abs(lyapunov.mf_from_distribution(dist, times) - oracle.analytic_mf(params, times))
    win = np.abs(grid.nodes) <= density_window
    exact = oracle.analytic_time_density(params, grid.nodes[win])
    rel = np.abs(dist.density[win] / exact - 1.0)
    return {
        "m": m, "sigma": sigma, "a": a,
        "max_mf_abs_error": float(mf_err.max()),
        "max_density_rel_error": float(rel.max()),
        "coverage_deficit": dist.deficit,
        "tolerance": ORACLE_TOL,
        "pass": bool(mf_err.max() <= ORACLE_TOL and rel.max() <= ORACLE_TOL),
        "hbar": 1.0,
    }


def cmd_oracle_compare(args):
    rep = oracle_comparison(args.m, args.sigma, args.energy_nodes, args.time_nodes,
                            parse_times(args.times))
    write_json(args.out, rep)
    if not rep["pass"]:
        raise NumericalContractError("pipeline disagrees with the closed forms beyond 1e-3")


def cmd_mf_matrix(args):
    sp = spectra.load_spectrum(args.spectrum)
    write_matrix(args.out, lyapunov.mf_matrix(sp).entries)


def build_parser():
    p = _Parser(prog="canontime", description="Canonical time observable toolkit (hbar = 1).")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    st = sub.add_parser("state", help="state file utilities")
    st_sub = st.add_subparsers(dest="state_command", required=True, parser_class=_Parser)
    v = st_sub.add_parser("validate", help="report norm and tail mass of a state file")
    v.add_argument("file")
    v.add_argument("--out", default="-")
    v.add_argument("--norm-tol", type=float, default=1e-8)
    v.set_defaults(func=cmd_state_validate)

    td = sub.add_parser("timedist", help="canonical time density as CSV")
    td.add_argument("file")
    td.add_argument("--tmin", type=float, required=True)
    td.add_argument("--tmax", type=float, required=True)
    td.add_argument("--nodes", type=int, required=True)
    td.add_argument("--coverage-tol", type=float, default=timekernel.DEFAULT_COVERAGE_TOL)
    td.add_argument("--norm-tol", type=float, default=1e-8)
    td.add_argument("--out", required=True)
    td.set_defaults(func=cmd_timedist)

    ly = sub.add_parser("lyapunov", help="<M_F> and <sgn T> along evolution times")
    ly.add_argument("file")
    ly.add_argument("--times", required=True, help="t0:t1:step")
    ly.add_argument("--out", required=True)
    _add_grid_flags(ly)
    ly.set_defaults(func=cmd_lyapunov)

    un = sub.add_parser("uncertainty", help="ensemble lengths L_H, L_T and their product")
    un.add_argument("file")
    un.add_argument("--out", default="-")
    _add_grid_flags(un)
    un.set_defaults(func=cmd_uncertainty)

    po = sub.add_parser("pom", help="finite-resolution time POM for a discrete spectrum")
    po.add_argument("spectrum")
    po.add_argument("--tau", type=float, required=True)
    po.add_argument("--nodes", type=int, default=4096)
    po.add_argument("--rule", choices=("gregory", "periodic"), default="gregory")
    po.add_argument("--state")
    po.add_argument("--completeness-tol", type=float, default=1e-8)
    po.add_argument("--out", default="-")
    po.set_defaults(func=cmd_pom)

    orc = sub.add_parser("oracle", help="closed-form free-particle curves as CSV")
    orc.add_argument("--m", type=float, default=1.0)
    orc.add_argument("--sigma", type=float, default=1.0)
    orc.add_argument("--times", default="-10:10:0.2")
    orc.add_argument("--out", required=True)
    orc.set_defaults(func=cmd_oracle)

    oc = sub.add_parser("oracle-compare", help="pipeline vs closed forms, pass/fail at 1e-3")
    oc.add_argument("--m", type=float, default=1.0)
    oc.add_argument("--sigma", type=float, default=1.0)
    oc.add_argument("--times", default="-10:10:0.2")
    oc.add_argument("--energy-nodes", type=int, default=4001)
    oc.add_argument("--time-nodes", type=int, default=3001)
    oc.add_argument("--out", default="-")
    oc.set_defaults(func=cmd_oracle_compare)

    mm = sub.add_parser("mf-matrix", help="discretised M_F matrix in the CTMATRIX binary layout")
    mm.add_argument("spectrum")
    mm.add_argument("--out", required=True)
    mm.set_defaults(func=cmd_mf_matrix)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CanonTimeError as exc:
        _emit_error(type(exc).__name__, str(exc), exc.exit_code)
        return exc.exit_code
    except OSError as exc:
        _emit_error("IOError", str(exc), 2)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
