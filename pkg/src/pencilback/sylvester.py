"""Row-restricted coupled Sylvester least-squares systems.

One elimination step solves, in the least-squares sense restricted to the
unstructured entry positions,

    (A X + Y A)  |_unstructured = -E  |_unstructured
    (A~X + Y A~) |_unstructured = -E~ |_unstructured

for ``X`` (cols x cols) and ``Y`` (rows x rows), where ``A = W + E`` and
``A~ = W~ + E~`` are the perturbed pencil parts.  Stacking the unknowns
column-major as ``[vec X; vec Y]`` turns the pair into one linear operator

    T = [[I (x) A,  A^T  (x) I],
         [I (x) A~, A~^T (x) I]]

of shape ``2*rows*cols x (cols^2 + rows^2)``; the restricted system keeps
exactly the unstructured rows.  The minimum-Frobenius-norm solution is
computed either from an SVD of the materialized restricted operator or,
for large systems, from a Cholesky factorization of its Gram matrix
``T_r T_r^H`` (assembled directly from the Kronecker structure), which is
cheaper and gives the same solution and the same Frobenius condition
number whenever the restricted operator has full row rank.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .matpoly import BlockGrid, MatrixPencil
from .perturbation import PencilPerturbation, StructureMask

__all__ = [
    "CoupledSylvesterSystem",
    "SylvesterSolution",
    "assemble_system",
    "min_norm_solve",
    "frobenius_condition_number",
    "solution_product_bound",
    "coupled_operator",
    "coupled_operator_fro_norm_sq",
    "solve_coupled_min_norm",
    "min_norm_product_bound",
    "min_norm_least_squares",
    "fro_condition_number",
]

_EPS = float(np.finfo(np.float64).eps)

# below this many unknowns the dense SVD route is fast enough to be the default
GRAM_PATH_MIN_UNKNOWNS = 1200


def _vec(A: np.ndarray) -> np.ndarray:
    # column-major stacking throughout
    return np.asarray(A).ravel(order="F")


def _unvec(x: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.asarray(x).reshape(rows, cols, order="F")


def _is_real(*arrays: np.ndarray) -> bool:
    return all(not np.iscomplexobj(a) or not a.imag.any() for a in arrays)


def coupled_operator(A, B, C, D) -> np.ndarray:
    """Dense operator of the pair ``A X + Y B = M``, ``C X + Y D = N``.

    All four data matrices share one shape ``m x n``; the unknowns are
    ``X`` (n x n) and ``Y`` (m x m), stacked column-major.
    """
    A, B, C, D = (np.asarray(Z) for Z in (A, B, C, D))
    m, n = A.shape
    if B.shape != (m, n) or C.shape != (m, n) or D.shape != (m, n):
        raise ValueError("coupled system needs four matrices of one common shape")
    I_m = np.eye(m)
    I_n = np.eye(n)
    return np.block(
        [
            [np.kron(I_n, A), np.kron(B.T, I_m)],
            [np.kron(I_n, C), np.kron(D.T, I_m)],
        ]
    )


def coupled_operator_fro_norm_sq(A, B, C, D) -> float:
    """Closed form for ``||T||_F^2``: ``n||A||^2 + m||B||^2 + n||C||^2 + m||D||^2``."""
    m, n = np.asarray(A).shape
    sq = lambda Z: np.vdot(Z, Z).real
    return float(n * sq(A) + m * sq(B) + n * sq(C) + m * sq(D))


def fro_condition_number(singular_values: np.ndarray, rank_tol: float) -> float:
    """``sqrt(sum s_i^2) * sqrt(sum_{s_i > rank_tol} s_i^-2)``; +inf if rank 0."""
    s = np.asarray(singular_values, dtype=float)
    kept = s[s > rank_tol]
    if kept.size == 0:
        return float("inf")
    return float(np.sqrt(np.sum(s**2)) * np.sqrt(np.sum(1.0 / kept**2)))


def min_norm_least_squares(T: np.ndarray, b: np.ndarray):
    """Minimum-norm least-squares solution of a dense system via SVD.

    Singular values at or below ``max(shape) * eps * s_max`` are treated as
    zero.  Returns ``(x, residual_norm, singular_values)``.
    """
    T = np.asarray(T)
    b = np.asarray(b)
    if not (np.all(np.isfinite(T)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite entries in least-squares system")
    if _is_real(T, b):
        T = T.real if np.iscomplexobj(T) else T
        b = b.real if np.iscomplexobj(b) else b
    cond = max(T.shape) * _EPS
    x, _, _, s = sla.lstsq(T, b, cond=cond, lapack_driver="gelsd")
    residual = float(np.linalg.norm(T @ x - b))
    return x, residual, s


@dataclass
class CoupledSylvesterSystem:
    """One iteration's restricted least-squares system.

    ``lam_mat`` and ``const_mat`` are the perturbed pencil parts; ``rhs``
    is the negated unstructured right-hand side, stacked lambda part first.
    The dense restricted operator is materialized lazily.
    """

    lam_mat: np.ndarray
    const_mat: np.ndarray
    mask: StructureMask
    rhs: np.ndarray

    @property
    def grid(self) -> BlockGrid:
        return self.mask.grid

    @property
    def rows_kept(self) -> int:
        return self.mask.lam_unstructured_vec.size + self.mask.const_unstructured_vec.size

    @property
    def n_unknowns(self) -> int:
        return self.grid.cols**2 + self.grid.rows**2

    @cached_property
    def full_operator(self) -> np.ndarray:
        return coupled_operator(self.lam_mat, self.lam_mat, self.const_mat, self.const_mat)

    @cached_property
    def restricted_operator(self) -> np.ndarray:
        RC = self.grid.rows * self.grid.cols
        keep = np.concatenate([self.mask.lam_unstructured_vec, RC + self.mask.const_unstructured_vec])
        return self.full_operator[keep, :]

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        C, R = self.grid.cols, self.grid.rows
        return _unvec(x[: C * C], C, C), _unvec(x[C * C :], R, R)

    def pack(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return np.concatenate([_vec(X), _vec(Y)])

    def apply(self, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Forward action as full matrices ``(A X + Y A, A~ X + Y A~)``."""
        return (
            self.lam_mat @ X + Y @ self.lam_mat,
            self.const_mat @ X + Y @ self.const_mat,
        )

    def restricted_action(self, x: np.ndarray) -> np.ndarray:
        X, Y = self.unpack(x)
        lam_out, const_out = self.apply(X, Y)
        return np.concatenate(
            [
                _vec(lam_out)[self.mask.lam_unstructured_vec],
                _vec(const_out)[self.mask.const_unstructured_vec],
            ]
        )

    def adjoint_action(self, z: np.ndarray) -> np.ndarray:
        R, C = self.grid.rows, self.grid.cols
        n_lam = self.mask.lam_unstructured_vec.size
        Z1 = np.zeros(R * C, dtype=z.dtype)
        Z1[self.mask.lam_unstructured_vec] = z[:n_lam]
        Z2 = np.zeros(R * C, dtype=z.dtype)
        Z2[self.mask.const_unstructured_vec] = z[n_lam:]
        Z1 = _unvec(Z1, R, C)
        Z2 = _unvec(Z2, R, C)
        A, At = self.lam_mat, self.const_mat
        X = A.conj().T @ Z1 + At.conj().T @ Z2
        Y = Z1 @ A.conj().T + Z2 @ At.conj().T
        return self.pack(X, Y)


@dataclass(frozen=True)
class SylvesterSolution:
    """Minimum-norm solution of one restricted system plus solver diagnostics."""

    X: np.ndarray
    Y: np.ndarray
    residual_norm: float
    kappa: float
    solution_norm: float
    method: str


def assemble_system(
    pencil: MatrixPencil,
    pert: PencilPerturbation,
    mask: StructureMask | None = None,
) -> CoupledSylvesterSystem:
    """Build the restricted system for the current perturbed pencil.

    The right-hand side is the negated unstructured part of the
    perturbation, so a solution pushes those entries toward zero.
    """
    if pencil.grid is None:
        raise ValueError("pencil carries no block grid")
    if pert.grid != pencil.grid:
        raise ValueError(f"dimension mismatch: pencil grid {pencil.grid}, perturbation grid {pert.grid}")
    if mask is None:
        mask = StructureMask.from_grid(pencil.grid)
    elif mask.grid != pencil.grid:
        raise ValueError("dimension mismatch between mask and pencil")
    rhs = -np.concatenate(
        [
            _vec(pert.lam_part)[mask.lam_unstructured_vec],
            _vec(pert.const_part)[mask.const_unstructured_vec],
        ]
    )
    return CoupledSylvesterSystem(
        lam_mat=pencil.lam_part + pert.lam_part,
        const_mat=pencil.const_part + pert.const_part,
        mask=mask,
        rhs=rhs,
    )


def _restricted_gram(system: CoupledSylvesterSystem, real: bool) -> np.ndarray:
    """``T_r T_r^H`` assembled from the Kronecker structure, restricted rows only."""
    A = system.lam_mat.real if real else system.lam_mat
    At = system.const_mat.real if real else system.const_mat
    R, C = system.grid.rows, system.grid.cols
    I_R = np.eye(R, dtype=A.dtype)
    I_C = np.eye(C, dtype=A.dtype)
    Ah, Ath = A.conj().T, At.conj().T
    G11 = np.kron(I_C, A @ Ah) + np.kron(A.T @ A.conj(), I_R)
    G12 = np.kron(I_C, A @ Ath) + np.kron(A.T @ At.conj(), I_R)
    G22 = np.kron(I_C, At @ Ath) + np.kron(At.T @ At.conj(), I_R)
    G = np.block([[G11, G12], [G12.conj().T, G22]])
    keep = np.concatenate([system.mask.lam_unstructured_vec, R * C + system.mask.const_unstructured_vec])
    return G[np.ix_(keep, keep)]


def _solve_svd(system: CoupledSylvesterSystem) -> SylvesterSolution:
    T = system.restricted_operator
    b = system.rhs
    real = _is_real(T, b)
    if real:
        T = T.real
        b = b.real
    x, residual, s = min_norm_least_squares(T, b)
    rank_tol = max(T.shape) * _EPS * (s[0] if s.size else 0.0)
    kappa = fro_condition_number(s, rank_tol)
    X, Y = system.unpack(x.astype(np.complex128))
    return SylvesterSolution(X, Y, residual, kappa, float(np.linalg.norm(x)), "svd")


def _solve_gram(system: CoupledSylvesterSystem) -> SylvesterSolution | None:
    """Full-row-rank fast path; ``None`` signals falling back to the SVD route."""
    real = _is_real(system.lam_mat, system.const_mat, system.rhs)
    G = _restricted_gram(system, real)
    b = system.rhs.real if real else system.rhs
    try:
        L = sla.cholesky(G, lower=True)
    except sla.LinAlgError:
        return None
    z = sla.cho_solve((L, True), b)
    trtri = sla.lapack.dtrtri if real else sla.lapack.ztrtri
    L_inv, info = trtri(L, lower=1)
    if info != 0:
        return None
    # kappa_F via trace identities: ||T||_F^2 = tr G, ||T^+||_F^2 = tr G^-1
    kappa = float(np.sqrt(np.trace(G).real) * np.sqrt(np.vdot(L_inv, L_inv).real))
    x = system.adjoint_action(z.astype(np.complex128))
    residual = float(np.linalg.norm(system.restricted_action(x) - system.rhs))
    # Cholesky can succeed on numerically semidefinite Gram matrices; verify
    scale = float(np.sqrt(np.trace(G).real)) * float(np.linalg.norm(x)) + float(np.linalg.norm(b))
    if not np.isfinite(residual) or residual > 1e-6 * max(scale, 1e-300):
        return None
    X, Y = system.unpack(x)
    return SylvesterSolution(X, Y, residual, kappa, float(np.linalg.norm(x)), "gram")


def min_norm_solve(system: CoupledSylvesterSystem, method: str = "auto") -> SylvesterSolution:
    """Minimum-Frobenius-norm least-squares solution of the restricted system.

    ``method`` is ``"svd"`` (materialized operator, SVD pseudoinverse),
    ``"gram"`` (Gram-matrix Cholesky; requires full row rank, falls back to
    SVD otherwise), or ``"auto"`` (gram above ``GRAM_PATH_MIN_UNKNOWNS``
    unknowns, svd below).  Both routes return the same solution and the
    same Frobenius condition number of the restricted operator.
    """
    if not (
        np.all(np.isfinite(system.lam_mat))
        and np.all(np.isfinite(system.const_mat))
        and np.all(np.isfinite(system.rhs))
    ):
        raise ValueError("non-finite entries in coupled Sylvester system")
    if method not in ("auto", "svd", "gram"):
        raise ValueError(f"unknown solve method {method!r}")
    if system.rows_kept == 0:
        # grade-1 grids restrict away every row; the minimum-norm solution is zero
        C, R = system.grid.cols, system.grid.rows
        zero_x = np.zeros((C, C), dtype=np.complex128)
        zero_y = np.zeros((R, R), dtype=np.complex128)
        return SylvesterSolution(zero_x, zero_y, 0.0, float("inf"), 0.0, "empty")
    if method == "auto":
        method = "gram" if system.n_unknowns >= GRAM_PATH_MIN_UNKNOWNS else "svd"
    if method == "gram":
        solution = _solve_gram(system)
        if solution is not None:
            return solution
    return _solve_svd(system)


def frobenius_condition_number(system: CoupledSylvesterSystem) -> float:
    """Frobenius condition number of the restricted operator from its SVD."""
    s = sla.svdvals(system.restricted_operator)
    rank_tol = max(system.restricted_operator.shape) * _EPS * (s[0] if s.size else 0.0)
    return fro_condition_number(s, rank_tol)


def min_norm_product_bound(A, B, C, D, M_norm: float, N_norm: float, kappa: float | None = None) -> float:
    """Upper bound on ``||X||_F * ||Y||_F`` for the minimum-norm solution.

    Evaluates ``kappa^2 / (2 (n||A||^2 + m||B||^2 + n||C||^2 + m||D||^2))
    * (||M||^2 + ||N||^2)`` with ``kappa`` the Frobenius condition number
    of the unrestricted operator (computed here when not supplied).
    """
    if kappa is None:
        T = coupled_operator(A, B, C, D)
        s = sla.svdvals(T)
        rank_tol = max(T.shape) * _EPS * (s[0] if s.size else 0.0)
        kappa = fro_condition_number(s, rank_tol)
    denom = 2.0 * coupled_operator_fro_norm_sq(A, B, C, D)
    if denom == 0.0:
        return 0.0 if (M_norm == 0.0 and N_norm == 0.0) else float("inf")
    return float(kappa**2 / denom * (M_norm**2 + N_norm**2))


def solution_product_bound(system: CoupledSylvesterSystem, rhs_norms: tuple[float, float]) -> float:
    """Product bound instantiated for the (unrestricted) pencil system."""
    M_norm, N_norm = rhs_norms
    return min_norm_product_bound(
        system.lam_mat, system.lam_mat, system.const_mat, system.const_mat, M_norm, N_norm
    )


def solve_coupled_min_norm(A, B, C, D, M, N):
    """Generic minimum-norm least-squares solve of the unrestricted pair.

    Returns ``(X, Y, residual_norm, singular_values)``.
    """
    A, B, C, D, M, N = (np.asarray(Z) for Z in (A, B, C, D, M, N))
    T = coupled_operator(A, B, C, D)
    b = np.concatenate([_vec(M), _vec(N)])
    x, residual, s = min_norm_least_squares(T, b)
    m, n = A.shape
    X = _unvec(x[: n * n], n, n)
    Y = _unvec(x[n * n :], m, m)
    return X, Y, residual, s
