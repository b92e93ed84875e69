"""Independent post-hoc checks, kept apart from the solver path.

The oracle below re-derives the first elimination step from scratch:
the restricted equations are enumerated entry by entry (no vec/Kronecker
shortcuts) and the minimum-norm solution is obtained from ridge-regularized
normal equations extrapolated to zero regularization.  Sharing a bug with
the production SVD route would require the same mistake in two unrelated
algebraic constructions.
"""

from __future__ import annotations

import numpy as np

from .matpoly import MatrixPencil, MatrixPolynomial, companion_form
from .perturbation import PencilPerturbation, StructureMask

__all__ = [
    "equivalence_residual",
    "nonsingularity_report",
    "brute_force_first_step",
]


def equivalence_residual(U, V, original: MatrixPencil, result: MatrixPencil) -> float:
    """``||U A V - A'||_F + ||U A~ V - A~'||_F`` with fresh matrix products."""
    U = np.asarray(U)
    V = np.asarray(V)
    lam_gap = U @ original.lam_part @ V - result.lam_part
    const_gap = U @ original.const_part @ V - result.const_part
    return float(np.linalg.norm(lam_gap) + np.linalg.norm(const_gap))


def nonsingularity_report(U) -> tuple[float, float]:
    """Extreme singular values ``(sigma_min, sigma_max)`` of a transformation."""
    s = np.linalg.svd(np.asarray(U), compute_uv=False)
    return float(s[-1]), float(s[0])


def _enumerated_rows(A: np.ndarray, rhs_mat: np.ndarray, unstructured_mask: np.ndarray, C: int, R: int):
    """Equations ``(A X + Y A)[r, c] = -rhs[r, c]`` at unstructured positions.

    Unknowns are ordered X row-major then Y row-major, deliberately unlike
    the solver's column-major stacking.
    """
    rows = []
    rhs = []
    n_x = C * C
    for r in range(R):
        for c in range(C):
            if not unstructured_mask[r, c]:
                continue
            row = np.zeros(n_x + R * R, dtype=complex)
            for k in range(C):
                row[k * C + c] = A[r, k]  # coefficient of X[k, c]
            for k in range(R):
                row[n_x + r * R + k] = A[k, c]  # coefficient of Y[r, k]
            rows.append(row)
            rhs.append(-rhs_mat[r, c])
    return rows, rhs


def brute_force_first_step(
    P: MatrixPolynomial,
    E1: PencilPerturbation,
    max_unknowns: int = 200,
) -> tuple[np.ndarray, np.ndarray]:
    """Independent oracle for the first-iteration minimum-norm solve.

    Assembles the restricted system by literal entrywise enumeration and
    solves the normal equations at three ridge values with Richardson
    extrapolation to the unregularized limit.  Only intended for tiny
    instances (guarded by ``max_unknowns``).
    """
    pencil = companion_form(P)
    grid = pencil.grid
    if E1.grid != grid:
        raise ValueError("dimension mismatch between polynomial and perturbation")
    R, C = grid.rows, grid.cols
    if C * C + R * R > max_unknowns:
        raise ValueError(f"oracle limited to {max_unknowns} unknowns, got {C * C + R * R}")
    mask = StructureMask.from_grid(grid)

    A = pencil.lam_part + E1.lam_part
    At = pencil.const_part + E1.const_part
    rows_lam, rhs_lam = _enumerated_rows(A, E1.lam_part, ~mask.lam_structured, C, R)
    rows_const, rhs_const = _enumerated_rows(At, E1.const_part, ~mask.const_structured, C, R)
    if not rows_lam and not rows_const:
        # grade 1: every position is a coefficient slot, nothing to eliminate
        return np.zeros((C, C), dtype=complex), np.zeros((R, R), dtype=complex)
    M = np.array(rows_lam + rows_const)
    b = np.array(rhs_lam + rhs_const)

    G = M.conj().T @ M
    g = M.conj().T @ b
    # ridge small enough to bias below the target accuracy, large enough to
    # keep the regularized normal equations numerically solvable
    eps0 = 1e-7 * max(float(np.vdot(M, M).real), 1e-300)
    eye = np.eye(G.shape[0])
    solutions = [np.linalg.solve(G + (eps0 / 2**k) * eye, g) for k in range(3)]
    first = [2.0 * solutions[k + 1] - solutions[k] for k in range(2)]
    x = (4.0 * first[1] - first[0]) / 3.0

    X = x[: C * C].reshape(C, C)
    Y = x[C * C :].reshape(R, R)
    return X, Y
