"""JSON problem files and CSV data matrices.

Complex matrices are stored as ``{"re": [[...]], "im": [[...]]}``. JSON
floats use Python's shortest round-trip repr and CSV cells use 17
significant digits, so every file round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .operator_core import HamiltonianSpec


class SchemaError(ValueError):
    """Malformed input file (exit code 2)."""


class DimensionError(ValueError):
    """Fields of a problem file disagree on the dimension (exit code 3)."""


def complex_matrix_to_json(a):
    a = np.asarray(a, dtype=complex)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


def complex_matrix_from_json(obj, name="matrix"):
    if isinstance(obj, list):
        obj = {"re": obj}
    if not isinstance(obj, dict) or "re" not in obj:
        raise SchemaError(f"{name}: expected an object with 're' (and optionally 'im')")
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{name}: entries must be numbers ({exc})") from None
    if re.ndim != 2 or re.shape[0] != re.shape[1] or re.shape != im.shape:
        raise SchemaError(f"{name}: 're' and 'im' must be equal square matrices")
    return re + 1j * im


def _num(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{name}: expected a number")
    return float(value)


def _num_list(value, name):
    if not isinstance(value, list) or not value:
        raise SchemaError(f"{name}: expected a nonempty list of numbers")
    return [_num(v, f"{name}[{i}]") for i, v in enumerate(value)]


def hamiltonian_from_json(obj):
    if not isinstance(obj, dict):
        raise SchemaError("hamiltonian: expected an object")
    try:
        if "eigenvalues" in obj:
            lam = _num_list(obj["eigenvalues"], "hamiltonian.eigenvalues")
            mult = obj.get("multiplicities", [1] * len(lam))
            if not isinstance(mult, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in mult):
                raise SchemaError("hamiltonian.multiplicities: expected a list of integers")
            basis = obj.get("eigenbasis")
            if basis is not None:
                basis = complex_matrix_from_json(basis, "hamiltonian.eigenbasis")
                if basis.shape[0] != sum(mult):
                    raise DimensionError("hamiltonian.eigenbasis size differs from sum of multiplicities")
            return HamiltonianSpec(lam, mult, basis)
        if "re" in obj:
            return HamiltonianSpec.from_dense(complex_matrix_from_json(obj, "hamiltonian"))
    except (SchemaError, DimensionError):
        raise
    except ValueError as exc:
        raise SchemaError(f"hamiltonian: {exc}") from None
    raise SchemaError("hamiltonian: need 'eigenvalues' or a dense {'re', 'im'} matrix")


def hamiltonian_to_json(h: HamiltonianSpec):
    out = {
        "eigenvalues": [float(x) for x in h.eigenvalues],
        "multiplicities": [int(n) for n in h.multiplicities],
    }
    if not np.allclose(h.eigenbasis, np.eye(h.dim)):
        out["eigenbasis"] = complex_matrix_to_json(h.eigenbasis)
    return out


@dataclass
class ProblemSpec:
    hamiltonian: HamiltonianSpec
    rho0: np.ndarray | None = None
    observables: list | None = None
    grid: dict | None = None
    noise: dict | None = None
    tolerance: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.hamiltonian.dim


KNOWN_KEYS = {"hamiltonian", "rho0", "observables", "grid", "noise", "tolerance"}


def parse_problem(obj: Any) -> ProblemSpec:
    if not isinstance(obj, dict):
        raise SchemaError("problem file must contain a JSON object")
    if "hamiltonian" not in obj:
        raise SchemaError("missing required field 'hamiltonian'")
    h = hamiltonian_from_json(obj["hamiltonian"])
    d = h.dim
    spec = ProblemSpec(hamiltonian=h, extra={k: v for k, v in obj.items() if k not in KNOWN_KEYS})

    if obj.get("rho0") is not None:
        spec.rho0 = complex_matrix_from_json(obj["rho0"], "rho0")
        if spec.rho0.shape[0] != d:
            raise DimensionError(f"rho0 is {spec.rho0.shape[0]}x{spec.rho0.shape[0]}, hamiltonian has d = {d}")

    if obj.get("observables") is not None:
        if not isinstance(obj["observables"], list) or not obj["observables"]:
            raise SchemaError("observables: expected a nonempty list of matrices")
        spec.observables = []
        for i, q in enumerate(obj["observables"]):
            mat = complex_matrix_from_json(q, f"observables[{i}]")
            if mat.shape[0] != d:
                raise DimensionError(f"observables[{i}] is {mat.shape[0]}x{mat.shape[0]}, hamiltonian has d = {d}")
            spec.observables.append(mat)

    if obj.get("grid") is not None:
        g = obj["grid"]
        if not isinstance(g, dict):
            raise SchemaError("grid: expected an object")
        grid = {}
        if "c" in g:
            grid["c"] = _num_list(g["c"], "grid.c")
            if any(b <= a for a, b in zip(grid["c"], grid["c"][1:])) or min(grid["c"]) < 0:
                raise SchemaError("grid.c must be nonnegative and strictly increasing")
        if "T" in g:
            grid["T"] = _num(g["T"], "grid.T")
            if grid["T"] <= 0:
                raise SchemaError("grid.T must be positive")
        if "t" in g:
            grid["t"] = _num(g["t"], "grid.t")
            if grid["t"] <= 0:
                raise SchemaError("grid.t must be positive")
        if "spacing" in g:
            if g["spacing"] not in ("uniform", "geometric"):
                raise SchemaError("grid.spacing must be 'uniform' or 'geometric'")
            grid["spacing"] = g["spacing"]
        spec.grid = grid

    if obj.get("noise") is not None:
        n = obj["noise"]
        if not isinstance(n, dict):
            raise SchemaError("noise: expected an object")
        sigma = _num(n.get("sigma", 0.0), "noise.sigma")
        if sigma < 0:
            raise SchemaError("noise.sigma must be nonnegative")
        seed = n.get("seed")
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
            raise SchemaError("noise.seed must be an integer")
        spec.noise = {"sigma": sigma, "seed": seed}

    if obj.get("tolerance") is not None:
        spec.tolerance = _num(obj["tolerance"], "tolerance")
        if spec.tolerance <= 0:
            raise SchemaError("tolerance must be positive")
    return spec


def problem_to_json(spec: ProblemSpec):
    out = dict(spec.extra)
    out["hamiltonian"] = hamiltonian_to_json(spec.hamiltonian)
    if spec.rho0 is not None:
        out["rho0"] = complex_matrix_to_json(spec.rho0)
    if spec.observables is not None:
        out["observables"] = [complex_matrix_to_json(q) for q in spec.observables]
    if spec.grid is not None:
        out["grid"] = dict(spec.grid)
    if spec.noise is not None:
        out["noise"] = dict(spec.noise)
    if spec.tolerance is not None:
        out["tolerance"] = spec.tolerance
    return out


def load_problem(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return parse_problem(obj)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    return obj


def dumps(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def data_to_csv(values, times):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["obs_index"] + [f"{t:.17g}" for t in times])
    for i, row in enumerate(np.asarray(values)):
        writer.writerow([i] + [f"{v:.17g}" for v in row])
    return buf.getvalue()


def data_from_csv(text):
    """Parse a data CSV into ``(values, times)``."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or rows[0][0].strip() != "obs_index":
        raise SchemaError("data CSV must start with an 'obs_index' header")
    try:
        times = np.array([float(x) for x in rows[0][1:]])
        body = rows[1:]
        idx = [int(r[0]) for r in body]
        values = np.array([[float(x) for x in r[1:]] for r in body], dtype=float)
    except ValueError as exc:
        raise SchemaError(f"data CSV: {exc}") from None
    if idx != list(range(len(body))):
        raise SchemaError("data CSV: obs_index must run 0, 1, 2, ...")
    if values.size and values.shape[1] != times.size:
        raise SchemaError("data CSV: rows and header disagree on the number of instants")
    return values.reshape(len(body), times.size), times
