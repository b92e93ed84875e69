"""Iterative reduction of a full pencil perturbation to a structured one.

Starting from the companion pencil plus an arbitrary perturbation, each
step solves the restricted coupled Sylvester system for ``(X, Y)`` and
applies the strict-equivalence update

    pencil + pert  <-  (I + Y) (pencil + pert) (I + X),

which cancels the current unstructured entries up to terms quadratic in
the step, so the unstructured norm decays quadratically.  The
transformations accumulate as ``U <- (I + Y) U`` and ``V <- V (I + X)``,
giving ``U (original) V = final`` exactly up to roundoff.

The perturbation is updated in delta form,

    E  <-  E + A X + Y A + Y A X,        A = W + E,

rather than by multiplying the assembled pencil: the correction terms
scale with the step, so the unstructured entries can reach far below the
machine-epsilon-times-pencil-norm floor that full products would impose.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .matpoly import MatrixPolynomial, companion_form, matrix_two_norm, poly_norm
from .perturbation import (
    PencilPerturbation,
    StructureMask,
    extract_polynomial_delta,
    pencil_fro_norm,
    split,
)
from .sylvester import assemble_system, min_norm_solve

__all__ = [
    "StructuringStatus",
    "StructuringConfig",
    "IterationRecord",
    "StructuringResult",
    "structure_linearization",
    "step_alpha",
    "step_beta",
    "alpha_estimate",
    "beta_estimate",
    "check_smallness_hypothesis",
    "structured_growth_bound",
    "structured_norm_bound",
]

DIVERGENCE_BLOWUP_FACTOR = 1e6

HISTORY_COLUMNS = ("iter", "norm_Eu", "norm_Es", "kappa_T", "alpha_i", "normU2", "normV2", "residual")


class StructuringStatus(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class StructuringConfig:
    """Stopping control for the elimination loop.

    ``tol`` bounds the unstructured Frobenius norm at convergence;
    ``divergence_window`` is the number of consecutive increases of that
    norm after which the run is declared divergent.
    """

    tol: float = 1e-12
    max_iter: int = 50
    divergence_window: int = 3
    record_history: bool = True

    def __post_init__(self) -> None:
        if not (self.tol > 0):
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.divergence_window < 1:
            raise ValueError(f"divergence_window must be >= 1, got {self.divergence_window}")


@dataclass(frozen=True)
class IterationRecord:
    """State norms before step ``index`` plus that step's solve diagnostics.

    The last record of a run describes the final state; its solve fields
    (``kappa_T``, ``alpha_i``, ``beta_i``, ``sylvester_residual``) are NaN
    because no further solve happened.
    """

    index: int
    norm_Eu: float
    norm_Es: float
    kappa_T: float
    alpha_i: float
    beta_i: float
    norm_U2: float
    norm_V2: float
    sylvester_residual: float


@dataclass(frozen=True)
class StructuringResult:
    status: StructuringStatus
    final_perturbation: PencilPerturbation
    delta_poly: MatrixPolynomial
    U: np.ndarray
    V: np.ndarray
    history: tuple[IterationRecord, ...]
    iterations: int = field(default=0)

    @property
    def converged(self) -> bool:
        return self.status is StructuringStatus.CONVERGED


def step_alpha(kappa: float, norm_lam: float, norm_const: float, rows: int, cols: int) -> float:
    """Per-step quadratic-contraction coefficient.

    The larger of the two bracketed quantities
    ``kappa^2 * ||A|| / (sqrt(2) (rows+cols) (||A||^2 + ||A~||^2))`` with
    ``A`` the lambda and constant parts respectively.  ``rows + cols``
    instantiates the generic dimension factor with the pencil dimensions.
    """
    denom = math.sqrt(2.0) * (rows + cols) * (norm_lam**2 + norm_const**2)
    if denom == 0.0:
        return float("inf")
    return kappa**2 * max(norm_lam, norm_const) / denom


def step_beta(kappa: float, rows: int, cols: int) -> float:
    """Per-step structured-growth coefficient ``sqrt(2 / (rows + cols)) * kappa``."""
    return math.sqrt(2.0 / (rows + cols)) * kappa


def alpha_estimate(history) -> float:
    """Max of the recorded per-step contraction coefficients; NaN if none were recorded."""
    return _finite_max(history, "alpha_i")


def beta_estimate(history) -> float:
    """Max of the recorded per-step growth coefficients; NaN if none were recorded."""
    return _finite_max(history, "beta_i")


def _finite_max(history, attr: str) -> float:
    records = list(history)
    if not records:
        raise ValueError("empty history")
    values = [getattr(r, attr) for r in records if math.isfinite(getattr(r, attr))]
    return max(values) if values else float("nan")


def check_smallness_hypothesis(P: MatrixPolynomial, pert: PencilPerturbation) -> tuple[bool, float]:
    """Whether the perturbation norm is below the guaranteed-structurability threshold.

    Returns ``(holds, threshold)`` with ``threshold = pi / (12 d^{3/2})``.
    """
    d = P.grade
    threshold = math.pi / (12.0 * d**1.5)
    return pencil_fro_norm(pert) < threshold, threshold


def structured_growth_bound(P: MatrixPolynomial, pert: PencilPerturbation) -> float:
    """A priori bound ``4 d (1 + ||P||) ||pert||`` on the companion-form shift.

    When the smallness hypothesis holds, the distance between the original
    and the structurally perturbed companion forms stays below this value.
    """
    return 4.0 * P.grade * (1.0 + poly_norm(P)) * pencil_fro_norm(pert)


def structured_norm_bound(epsilon: float, alpha: float, beta: float) -> float:
    """A priori bound ``eps (1 + beta) / (1 - alpha eps)`` on the structured norm.

    +inf when ``alpha * eps >= 1`` (the bound is vacuous there); NaN
    propagates NaN inputs.
    """
    if epsilon == 0.0:
        return 0.0
    ae = alpha * epsilon
    if math.isnan(ae):
        return float("nan")
    if ae >= 1.0:
        return float("inf")
    return epsilon * (1.0 + beta) / (1.0 - ae)


def structure_linearization(
    P: MatrixPolynomial,
    E1: PencilPerturbation,
    cfg: StructuringConfig = StructuringConfig(),
) -> StructuringResult:
    """Reduce a full perturbation of the companion form of ``P`` to a structured one.

    Iterates restricted minimum-norm Sylvester solves and equivalence
    updates until the unstructured norm drops to ``cfg.tol`` (Converged),
    ``cfg.max_iter`` solves have been spent (MaxIterations), or the
    unstructured norm grows for ``cfg.divergence_window`` consecutive
    steps, explodes past ``1e6`` times its initial value, or turns
    non-finite (Diverged).
    """
    pencil = companion_form(P)
    grid = pencil.grid
    if E1.grid != grid:
        raise ValueError(f"dimension mismatch: perturbation grid {E1.grid}, companion grid {grid}")
    mask = StructureMask.from_grid(grid)
    R, C = grid.rows, grid.cols

    E = np.array(E1.lam_part, dtype=np.complex128)
    Et = np.array(E1.const_part, dtype=np.complex128)
    U = np.eye(R, dtype=np.complex128)
    V = np.eye(C, dtype=np.complex128)

    records: list[IterationRecord] = []
    solves = 0
    initial_eu: float | None = None
    prev_eu = math.inf
    increase_run = 0
    status: StructuringStatus

    def final_record(eu: float, es: float) -> None:
        if cfg.record_history:
            nan = float("nan")
            records.append(
                IterationRecord(solves + 1, eu, es, nan, nan, nan, matrix_two_norm(U), matrix_two_norm(V), nan)
            )

    while True:
        eu_lam = np.where(mask.lam_structured, 0, E)
        eu_const = np.where(mask.const_structured, 0, Et)
        es_lam = np.where(mask.lam_structured, E, 0)
        es_const = np.where(mask.const_structured, Et, 0)
        eu = float(np.sqrt(np.vdot(eu_lam, eu_lam).real + np.vdot(eu_const, eu_const).real))
        es = float(np.sqrt(np.vdot(es_lam, es_lam).real + np.vdot(es_const, es_const).real))
        if not (math.isfinite(eu) and math.isfinite(es)):
            status = StructuringStatus.DIVERGED
            final_record(eu, es)
            break
        if eu <= cfg.tol:
            status = StructuringStatus.CONVERGED
            final_record(eu, es)
            break
        if initial_eu is None:
            initial_eu = eu
        if eu > DIVERGENCE_BLOWUP_FACTOR * initial_eu:
            status = StructuringStatus.DIVERGED
            final_record(eu, es)
            break
        increase_run = increase_run + 1 if eu > prev_eu else 0
        if increase_run >= cfg.divergence_window:
            status = StructuringStatus.DIVERGED
            final_record(eu, es)
            break
        if solves >= cfg.max_iter:
            status = StructuringStatus.MAX_ITERATIONS
            final_record(eu, es)
            break

        current = PencilPerturbation(E, Et, grid)
        system = assemble_system(pencil, current, mask)
        try:
            sol = min_norm_solve(system)
        except ValueError:
            # non-finite system entries; treat like a blow-up
            status = StructuringStatus.DIVERGED
            final_record(eu, es)
            break
        X, Y = sol.X, sol.Y
        A, At = system.lam_mat, system.const_mat
        norm_lam = float(np.linalg.norm(A))
        norm_const = float(np.linalg.norm(At))
        alpha_i = step_alpha(sol.kappa, norm_lam, norm_const, R, C)
        beta_i = step_beta(sol.kappa, R, C)

        AX = A @ X
        E = E + AX + Y @ A + Y @ AX
        AtX = At @ X
        Et = Et + AtX + Y @ At + Y @ AtX
        U = U + Y @ U
        V = V + V @ X

        if cfg.record_history:
            records.append(
                IterationRecord(
                    solves + 1,
                    eu,
                    es,
                    sol.kappa,
                    alpha_i,
                    beta_i,
                    matrix_two_norm(U),
                    matrix_two_norm(V),
                    sol.residual_norm,
                )
            )
        solves += 1
        prev_eu = eu

    final_pert = PencilPerturbation(E, Et, grid)
    structured, _ = split(final_pert, mask)
    delta_poly = extract_polynomial_delta(structured)
    U.flags.writeable = False
    V.flags.writeable = False
    return StructuringResult(
        status=status,
        final_perturbation=final_pert,
        delta_poly=delta_poly,
        U=U,
        V=V,
        history=tuple(records),
        iterations=solves,
    )
