"""Command line front end: analyze, design, simulate, reconstruct, verify.

Exit codes: 0 success, 1 property failure, 2 parse error, 3 dimensional
inconsistency or missing data, 4 design retries exhausted, 5 singular time
grid, 6 rank-deficient observable set.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .alpha_flow import (
    AlphaSystem,
    SingularGridError,
    TimeGrid,
    alpha_matrix,
    geometric_c_list,
    select_time_scale,
    uniform_c_list,
)
from .cyclicity import cyclicity_report, minimal_polynomial
from .generator import build_generator, generator_spectrum
from .io import (
    DimensionError,
    SchemaError,
    data_from_csv,
    data_to_csv,
    dumps,
    load_problem,
    problem_to_json,
)
from .tomography import (
    DesignError,
    RankDeficientError,
    design_observables,
    krylov_span,
    reconstruct,
    simulate_data,
)
from .verify import SUITES, run_suites

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_PARSE = 2
EXIT_DIMENSION = 3
EXIT_DESIGN = 4
EXIT_SINGULAR = 5
EXIT_RANK = 6

DEFAULT_TOLERANCE = 1e-9
DEFAULT_HORIZON = 1.0
DEFAULT_SAMPLES = 400

log = logging.getLogger("stroboscopic")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _settings(args, spec=None):
    tol = args.tolerance
    if tol is None:
        tol = spec.tolerance if spec is not None and spec.tolerance is not None else DEFAULT_TOLERANCE
    return {"tolerance": tol, "seed": args.seed, "alpha_method": args.alpha_method}


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _require_input(args):
    if not args.input:
        raise CliError("--input is required", EXIT_PARSE)
    try:
        return load_problem(args.input)
    except OSError as exc:
        raise CliError(f"cannot read {args.input}: {exc}", EXIT_PARSE) from None


def _system(h):
    spectrum = generator_spectrum(h)
    mp = minimal_polynomial(spectrum)
    return spectrum, mp, AlphaSystem.from_minimal_polynomial(mp)


def _c_list(spec, m):
    grid = spec.grid or {}
    if "c" in grid:
        c = np.asarray(grid["c"], dtype=float)
        if c.size != m:
            raise CliError(f"grid.c has {c.size} entries, minimal polynomial degree is {m}", EXIT_DIMENSION)
        return c
    if grid.get("spacing") == "geometric":
        return geometric_c_list(m)
    return uniform_c_list(m)


def _choose_time(sys_, c, horizon, method):
    sel = select_time_scale(sys_, c, horizon, DEFAULT_SAMPLES, method)
    return {"t_star": sel.t_star, "det_value": sel.det_value, "zero_locations": sel.zero_locations}


def cmd_analyze(args):
    spec = _require_input(args)
    settings = _settings(args, spec)
    h = spec.hamiltonian
    spectrum, mp, _ = _system(h)
    rep = cyclicity_report(h, tol=settings["tolerance"])
    for w in rep.warnings:
        log.warning(w)
    report = {
        "dimension": h.dim,
        "hamiltonian_levels": [float(x) for x in h.eigenvalues],
        "hamiltonian_multiplicities": [int(n) for n in h.multiplicities],
        "spectrum": spectrum.to_json(),
        "cyclicity": rep.to_json(),
        "minimal_polynomial": mp.to_json(),
        "settings": settings,
    }
    _emit(dumps(report), args.output)
    return EXIT_OK


def cmd_design(args):
    spec = _require_input(args)
    settings = _settings(args, spec)
    h = spec.hamiltonian
    L = build_generator(h)
    _, mp, sys_ = _system(h)
    rep = cyclicity_report(h, tol=settings["tolerance"])
    for w in rep.warnings:
        log.warning(w)
    try:
        obs = design_observables(L, rep.eta, seed=args.seed)
    except DesignError as exc:
        raise CliError(str(exc), EXIT_DESIGN) from None
    c = _c_list(spec, sys_.m)
    horizon = (spec.grid or {}).get("T", DEFAULT_HORIZON)
    choice = _choose_time(sys_, c, horizon, args.alpha_method)
    span = krylov_span(L.conj().T, obs, sys_.m, settings["tolerance"])
    spec.observables = obs
    spec.grid = {"c": [float(x) for x in c], "T": float(horizon), "t": choice["t_star"]}
    out = problem_to_json(spec)
    out["design"] = {
        "eta": rep.eta,
        "num_observables": len(obs),
        "spanning_rank": span.rank,
        "operator_space_dim": h.dim**2,
        "minimal_polynomial_degree": mp.degree,
        "c": spec.grid["c"],
        "t_star": choice["t_star"],
        "det_value": choice["det_value"],
        "zero_locations": choice["zero_locations"],
        "settings": settings,
    }
    _emit(dumps(out), args.output)
    return EXIT_OK


def _grid_from_spec(spec, sys_, method):
    if not spec.grid:
        raise CliError("problem has no grid", EXIT_PARSE)
    c = _c_list(spec, sys_.m)
    t = spec.grid.get("t")
    if t is None:
        t = _choose_time(sys_, c, spec.grid.get("T", DEFAULT_HORIZON), method)["t_star"]
    grid = TimeGrid(c, t)
    if "T" in spec.grid and not grid.within(spec.grid["T"]):
        raise CliError("grid instants exceed the horizon T", EXIT_DIMENSION)
    return grid


def cmd_simulate(args):
    spec = _require_input(args)
    if spec.rho0 is None:
        raise CliError("simulate needs rho0", EXIT_DIMENSION)
    if not spec.observables:
        raise CliError("simulate needs observables", EXIT_DIMENSION)
    _, _, sys_ = _system(spec.hamiltonian)
    grid = _grid_from_spec(spec, sys_, args.alpha_method)
    noise = spec.noise or {"sigma": 0.0, "seed": None}
    seed = noise.get("seed") if noise.get("seed") is not None else args.seed
    data = simulate_data(spec.hamiltonian, spec.rho0, spec.observables, grid, noise["sigma"], seed)
    _emit(data_to_csv(data.values, grid.instants), args.output)
    return EXIT_OK


def cmd_reconstruct(args):
    spec = _require_input(args)
    settings = _settings(args, spec)
    if not args.data:
        raise CliError("--data is required", EXIT_PARSE)
    if not spec.observables:
        raise CliError("problem has no observables", EXIT_DIMENSION)
    try:
        with open(args.data) as fh:
            values, times = data_from_csv(fh.read())
    except OSError as exc:
        raise CliError(f"cannot read {args.data}: {exc}", EXIT_PARSE) from None
    if values.shape[0] != len(spec.observables):
        raise CliError(
            f"data has {values.shape[0]} rows, problem has {len(spec.observables)} observables", EXIT_DIMENSION
        )
    h = spec.hamiltonian
    L = build_generator(h)
    _, _, sys_ = _system(h)
    if times.size < sys_.m:
        raise CliError(f"{times.size} instants cannot determine m = {sys_.m} coefficients", EXIT_SINGULAR)
    try:
        # guards the alpha matrix itself (exit 5) before the inversion
        amat = alpha_matrix(sys_, times, args.alpha_method)
        if np.linalg.matrix_rank(amat) < sys_.m:
            raise SingularGridError("alpha matrix is singular on these instants")
        res = reconstruct(spec.observables, times, values, L, sys_, alpha_method=args.alpha_method,
                          tol=settings["tolerance"])
    except SingularGridError as exc:
        raise CliError(str(exc), EXIT_SINGULAR) from None
    except RankDeficientError as exc:
        raise CliError(str(exc), EXIT_RANK) from None
    report = res.to_json()
    report["times"] = [float(t) for t in times]
    if spec.rho0 is not None:
        report["round_trip_error"] = float(np.linalg.norm(res.rho0_estimate - spec.rho0))
    report["settings"] = settings
    _emit(dumps(report), args.output)
    return EXIT_OK


def cmd_verify(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = run_suites(names, seed=args.seed)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        if r.informational:
            status = "INFO"
        print(f"[{status}] {r.suite}: {r.name} ({r.trials - r.failures}/{r.trials})", file=sys.stderr)
    ok = all(r.passed for r in results)
    summary = {"passed": ok, "seed": args.seed, "suites": names, "properties": [r.to_json() for r in results]}
    _emit(dumps(summary), args.output)
    return EXIT_OK if ok else EXIT_PROPERTY


def _common_flags(suppress):
    # subcommands repeat the global flags; SUPPRESS keeps their defaults from
    # overwriting values given before the subcommand name
    def default(value):
        return argparse.SUPPRESS if suppress else value

    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", "-i", default=default(None), help="problem JSON file")
    p.add_argument("--data", "-d", default=default(None), help="data CSV file (reconstruct)")
    p.add_argument("--output", "-o", default=default(None), help="write the result here instead of stdout")
    p.add_argument("--tolerance", type=float, default=default(None), help="rank/kernel tolerance (default 1e-9)")
    p.add_argument("--seed", type=int, default=default(0), help="seed for design and verify (default 0)")
    p.add_argument("--alpha-method", choices=("interp", "ode"), default=default("interp"))
    p.add_argument("--verbose", "-v", action="store_true", default=default(False))
    return p


def build_parser():
    common = _common_flags(suppress=True)
    parser = argparse.ArgumentParser(
        prog="stroboscopic",
        description="Stroboscopic tomography for qudits under Gaussian dephasing.",
        parents=[_common_flags(suppress=False)],
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="spectrum, index of cyclicity, minimal polynomial")
    sub.add_parser("design", parents=[common], help="observables and measurement grid")
    sub.add_parser("simulate", parents=[common], help="expectation-value data as CSV")
    sub.add_parser("reconstruct", parents=[common], help="initial state from data")
    p = sub.add_parser("verify", parents=[common], help="run property suites")
    p.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    return parser


COMMANDS = {
    "analyze": cmd_analyze,
    "design": cmd_design,
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "verify": cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers = [handler]
    log.propagate = False
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        log.error(str(exc))
        return exc.code
    except SchemaError as exc:
        log.error(str(exc))
        return EXIT_PARSE
    except DimensionError as exc:
        log.error(str(exc))
        return EXIT_DIMENSION
    except DesignError as exc:
        log.error(str(exc))
        return EXIT_DESIGN
    except SingularGridError as exc:
        log.error(str(exc))
        return EXIT_SINGULAR
    except RankDeficientError as exc:
        log.error(str(exc))
        return EXIT_RANK


if __name__ == "__main__":
    sys.exit(main())
