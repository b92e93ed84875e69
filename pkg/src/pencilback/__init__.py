"""Structured perturbations of companion linearizations.

Given a matrix polynomial and an arbitrary perturbation of its first
companion pencil, this package computes a perturbation of the polynomial's
coefficients and nonsingular transformations ``U``, ``V`` such that
``U (pencil + perturbation) V`` is exactly the companion pencil of the
perturbed polynomial, together with convergence diagnostics and a priori
bound checks.
"""

from .matpoly import (
    BlockGrid,
    MatrixPencil,
    MatrixPolynomial,
    companion_form,
    matrix_two_norm,
    poly_norm,
    scale_poly,
)
from .perturbation import (
    Distribution,
    PencilPerturbation,
    StructureMask,
    embed_polynomial_delta,
    extract_polynomial_delta,
    pencil_fro_norm,
    perturbed_pencil,
    philox_rng,
    random_perturbation,
    split,
)
from .structurer import (
    IterationRecord,
    StructuringConfig,
    StructuringResult,
    StructuringStatus,
    alpha_estimate,
    beta_estimate,
    check_smallness_hypothesis,
    structure_linearization,
    structured_growth_bound,
    structured_norm_bound,
)
from .sylvester import (
    CoupledSylvesterSystem,
    SylvesterSolution,
    assemble_system,
    frobenius_condition_number,
    solution_product_bound,
    min_norm_solve,
    solve_coupled_min_norm,
)
from .verify import brute_force_first_step, equivalence_residual, nonsingularity_report

__version__ = "0.1.0"

__all__ = [
    "BlockGrid",
    "MatrixPencil",
    "MatrixPolynomial",
    "companion_form",
    "matrix_two_norm",
    "poly_norm",
    "scale_poly",
    "Distribution",
    "PencilPerturbation",
    "StructureMask",
    "embed_polynomial_delta",
    "extract_polynomial_delta",
    "pencil_fro_norm",
    "perturbed_pencil",
    "philox_rng",
    "random_perturbation",
    "split",
    "IterationRecord",
    "StructuringConfig",
    "StructuringResult",
    "StructuringStatus",
    "alpha_estimate",
    "beta_estimate",
    "check_smallness_hypothesis",
    "structure_linearization",
    "structured_growth_bound",
    "structured_norm_bound",
    "CoupledSylvesterSystem",
    "SylvesterSolution",
    "assemble_system",
    "frobenius_condition_number",
    "solution_product_bound",
    "min_norm_solve",
    "solve_coupled_min_norm",
    "brute_force_first_step",
    "equivalence_residual",
    "nonsingularity_report",
]
