"""JSON file formats for polynomials, perturbations, and run results.

Every complex entry is written as a two-element array ``[re, im]`` with 17
significant decimal digits, which round-trips IEEE doubles exactly.  A
polynomial file is

    {"m": int, "n": int, "grade": int,
     "coeffs": [matrix, ...]}            # grade+1 matrices, A_0 first

where ``matrix`` is an m-row list of n-entry rows.  A perturbation file
holds ``{"lam_part": matrix, "const_part": matrix}`` on the companion grid
of the polynomial it accompanies.  A result file carries the status, the
extracted coefficient perturbation, the transformation matrices, the
iteration history as a column-labelled array, and a diagnostics object.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .matpoly import BlockGrid, MatrixPolynomial
from .perturbation import PencilPerturbation
from .structurer import HISTORY_COLUMNS, StructuringResult, alpha_estimate, beta_estimate

__all__ = [
    "format_float",
    "dumps",
    "polynomial_to_obj",
    "polynomial_from_obj",
    "write_polynomial",
    "read_polynomial",
    "write_perturbation",
    "read_perturbation",
    "result_to_obj",
    "write_result",
    "read_result_obj",
]


def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def dumps(obj, indent: int = 0) -> str:
    """JSON text with floats at 17 significant digits.

    Non-finite floats use the same ``NaN``/``Infinity`` tokens the stdlib
    ``json`` module reads back.
    """
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  "{k}": {dumps(v, indent + 2).lstrip()}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        parts = [dumps(v, indent + 2) for v in seq]
        if all("\n" not in p for p in parts) and sum(len(p) for p in parts) < 100:
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join((" " * (indent + 2)) + p.lstrip() for p in parts) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _matrix_to_obj(A: np.ndarray):
    A = np.asarray(A, dtype=np.complex128)
    return [[[float(v.real), float(v.imag)] for v in row] for row in A]


def _matrix_from_obj(obj, what: str) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{what}: malformed matrix payload: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"{what}: expected rows of [re, im] pairs, got shape {arr.shape}")
    return arr[:, :, 0] + 1j * arr[:, :, 1]


def polynomial_to_obj(P: MatrixPolynomial) -> dict:
    return {
        "m": P.rows,
        "n": P.cols,
        "grade": P.grade,
        "coeffs": [_matrix_to_obj(c) for c in P.coeffs],
    }


def polynomial_from_obj(obj) -> MatrixPolynomial:
    if not isinstance(obj, dict):
        raise ValueError("polynomial: expected a JSON object")
    for key in ("m", "n", "grade", "coeffs"):
        if key not in obj:
            raise ValueError(f"polynomial: missing key {key!r}")
    m, n, grade = int(obj["m"]), int(obj["n"]), int(obj["grade"])
    coeffs = [_matrix_from_obj(c, f"coefficient {k}") for k, c in enumerate(obj["coeffs"])]
    if len(coeffs) != grade + 1:
        raise ValueError(f"polynomial: grade {grade} needs {grade + 1} coefficients, got {len(coeffs)}")
    P = MatrixPolynomial(coeffs)
    if (P.rows, P.cols) != (m, n):
        raise ValueError(f"polynomial: header says {m}x{n}, matrices are {P.rows}x{P.cols}")
    return P


def write_polynomial(path, P: MatrixPolynomial) -> None:
    Path(path).write_text(dumps(polynomial_to_obj(P)) + "\n")


def read_polynomial(path) -> MatrixPolynomial:
    return polynomial_from_obj(json.loads(Path(path).read_text()))


def write_perturbation(path, pert: PencilPerturbation) -> None:
    obj = {"lam_part": _matrix_to_obj(pert.lam_part), "const_part": _matrix_to_obj(pert.const_part)}
    Path(path).write_text(dumps(obj) + "\n")


def read_perturbation(path, grid: BlockGrid) -> PencilPerturbation:
    obj = json.loads(Path(path).read_text())
    if not isinstance(obj, dict) or "lam_part" not in obj or "const_part" not in obj:
        raise ValueError("perturbation: expected keys 'lam_part' and 'const_part'")
    lam = _matrix_from_obj(obj["lam_part"], "lam_part")
    const = _matrix_from_obj(obj["const_part"], "const_part")
    if lam.shape != (grid.rows, grid.cols) or const.shape != (grid.rows, grid.cols):
        raise ValueError(
            f"perturbation: expected {grid.rows}x{grid.cols} matrices for the companion grid, "
            f"got {lam.shape} and {const.shape}"
        )
    return PencilPerturbation(lam, const, grid)


def result_to_obj(result: StructuringResult, tol: float | None = None) -> dict:
    history_rows = [
        [r.index, r.norm_Eu, r.norm_Es, r.kappa_T, r.alpha_i, r.norm_U2, r.norm_V2, r.sylvester_residual]
        for r in result.history
    ]
    diagnostics = {
        "iterations": result.iterations,
        "final_norm_Eu": result.history[-1].norm_Eu if result.history else float("nan"),
        "final_norm_Es": result.history[-1].norm_Es if result.history else float("nan"),
        "alpha": alpha_estimate(result.history) if result.history else float("nan"),
        "beta": beta_estimate(result.history) if result.history else float("nan"),
    }
    if tol is not None:
        diagnostics["tol"] = tol
    return {
        "status": result.status.value,
        "delta_poly": polynomial_to_obj(result.delta_poly),
        "U": _matrix_to_obj(result.U),
        "V": _matrix_to_obj(result.V),
        "history_columns": list(HISTORY_COLUMNS),
        "history": history_rows,
        "diagnostics": diagnostics,
    }


def write_result(path, result: StructuringResult, tol: float | None = None) -> None:
    Path(path).write_text(dumps(result_to_obj(result, tol)) + "\n")


def read_result_obj(path) -> dict:
    obj = json.loads(Path(path).read_text())
    if not isinstance(obj, dict):
        raise ValueError("result: expected a JSON object")
    for key in ("status", "delta_poly", "U", "V", "history"):
        if key not in obj:
            raise ValueError(f"result: missing key {key!r}")
    obj["delta_poly"] = polynomial_from_obj(obj["delta_poly"])
    obj["U"] = _matrix_from_obj(obj["U"], "U")
    obj["V"] = _matrix_from_obj(obj["V"], "V")
    return obj
