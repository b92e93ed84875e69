"""Perturbations of companion pencils and the structured/unstructured split.

A perturbation of a companion pencil is a pair of dense matrices
``(lam_part, const_part)`` on the pencil's block grid.  The *structured*
entry positions are the coefficient slots of the polynomial: the leading
``m x n`` block of the lambda part and the entire first block row of the
constant part.  Everything else (the identity/zero scaffolding) is
*unstructured*.  The two position sets partition the pencil entrywise, so
the split below is an exact orthogonal decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .matpoly import BlockGrid, MatrixPencil, MatrixPolynomial, _frozen_complex_matrix

__all__ = [
    "PencilPerturbation",
    "StructureMask",
    "Distribution",
    "split",
    "pencil_fro_norm",
    "extract_polynomial_delta",
    "embed_polynomial_delta",
    "random_perturbation",
    "perturbed_pencil",
    "philox_rng",
]

DEFAULT_MASK_TOL = 1e-13


@dataclass(frozen=True)
class PencilPerturbation:
    """Additive perturbation ``(E, E~)`` of a pencil on a companion block grid."""

    lam_part: np.ndarray
    const_part: np.ndarray
    grid: BlockGrid

    def __init__(self, lam_part, const_part, grid: BlockGrid) -> None:
        lam = _frozen_complex_matrix(lam_part, grid.rows, grid.cols)
        const = _frozen_complex_matrix(const_part, grid.rows, grid.cols)
        object.__setattr__(self, "lam_part", lam)
        object.__setattr__(self, "const_part", const)
        object.__setattr__(self, "grid", grid)

    @classmethod
    def zero(cls, grid: BlockGrid) -> "PencilPerturbation":
        z = np.zeros((grid.rows, grid.cols))
        return cls(z, z, grid)

    def __add__(self, other: "PencilPerturbation") -> "PencilPerturbation":
        if not isinstance(other, PencilPerturbation):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("block-grid mismatch")
        return PencilPerturbation(self.lam_part + other.lam_part, self.const_part + other.const_part, self.grid)

    def __mul__(self, scalar) -> "PencilPerturbation":
        return PencilPerturbation(scalar * self.lam_part, scalar * self.const_part, self.grid)

    __rmul__ = __mul__


@dataclass(frozen=True)
class StructureMask:
    """Entrywise structured/unstructured position sets for one block grid."""

    grid: BlockGrid

    @classmethod
    def from_grid(cls, grid: BlockGrid) -> "StructureMask":
        return cls(grid)

    @cached_property
    def lam_structured(self) -> np.ndarray:
        mask = np.zeros((self.grid.rows, self.grid.cols), dtype=bool)
        mask[: self.grid.m, : self.grid.n] = True
        mask.flags.writeable = False
        return mask

    @cached_property
    def const_structured(self) -> np.ndarray:
        mask = np.zeros((self.grid.rows, self.grid.cols), dtype=bool)
        mask[: self.grid.m, :] = True
        mask.flags.writeable = False
        return mask

    # vec indices use column-major stacking, entry (r, c) -> c*rows + r
    @cached_property
    def lam_unstructured_vec(self) -> np.ndarray:
        return np.flatnonzero(~self.lam_structured.ravel(order="F"))

    @cached_property
    def const_unstructured_vec(self) -> np.ndarray:
        return np.flatnonzero(~self.const_structured.ravel(order="F"))

    @property
    def structured_count(self) -> int:
        return int(self.lam_structured.sum() + self.const_structured.sum())

    @property
    def unstructured_count(self) -> int:
        return 2 * self.grid.rows * self.grid.cols - self.structured_count


def split(pert: PencilPerturbation, mask: StructureMask) -> tuple[PencilPerturbation, PencilPerturbation]:
    """Exact decomposition into the structured and unstructured parts.

    The parts have disjoint supports and sum to the input bitwise.
    """
    if mask.grid != pert.grid:
        raise ValueError("block-grid mismatch")
    zero = np.zeros((), dtype=np.complex128)
    structured = PencilPerturbation(
        np.where(mask.lam_structured, pert.lam_part, zero),
        np.where(mask.const_structured, pert.const_part, zero),
        pert.grid,
    )
    unstructured = PencilPerturbation(
        np.where(mask.lam_structured, zero, pert.lam_part),
        np.where(mask.const_structured, zero, pert.const_part),
        pert.grid,
    )
    return structured, unstructured


def pencil_fro_norm(pert: PencilPerturbation) -> float:
    """``sqrt(||lam_part||_F^2 + ||const_part||_F^2)``."""
    return float(np.sqrt(np.vdot(pert.lam_part, pert.lam_part).real + np.vdot(pert.const_part, pert.const_part).real))


def extract_polynomial_delta(pert: PencilPerturbation, tol_mask: float = DEFAULT_MASK_TOL) -> MatrixPolynomial:
    """Read the coefficient perturbation out of a structured pencil perturbation.

    The grade-d coefficient comes from the leading block of the lambda part;
    coefficients d-1, ..., 0 are the first block row of the constant part,
    left to right.  Any unstructured entry larger than ``tol_mask`` in
    absolute value is an error.
    """
    grid = pert.grid
    mask = StructureMask.from_grid(grid)
    residue_lam = np.abs(np.where(mask.lam_structured, 0, pert.lam_part))
    residue_const = np.abs(np.where(mask.const_structured, 0, pert.const_part))
    worst = max(residue_lam.max(initial=0.0), residue_const.max(initial=0.0))
    if worst > tol_mask:
        raise ValueError(f"perturbation not structured: unstructured residue {worst:.3e} exceeds {tol_mask:.3e}")
    m, n, d = grid.m, grid.n, grid.d
    coeffs = [None] * (d + 1)
    coeffs[d] = pert.lam_part[:m, :n]
    for j in range(1, d + 1):
        coeffs[d - j] = pert.const_part[:m, (j - 1) * n : j * n]
    return MatrixPolynomial(coeffs)


def embed_polynomial_delta(delta: MatrixPolynomial, grid: BlockGrid) -> PencilPerturbation:
    """Place coefficient perturbations into their structured pencil slots."""
    if (delta.rows, delta.cols, delta.grade) != (grid.m, grid.n, grid.d):
        raise ValueError(
            f"polynomial is {delta.rows}x{delta.cols} grade {delta.grade}, "
            f"grid expects {grid.m}x{grid.n} grade {grid.d}"
        )
    lam = np.zeros((grid.rows, grid.cols), dtype=np.complex128)
    const = np.zeros((grid.rows, grid.cols), dtype=np.complex128)
    m, n, d = grid.m, grid.n, grid.d
    lam[:m, :n] = delta.coeffs[d]
    for j in range(1, d + 1):
        const[:m, (j - 1) * n : j * n] = delta.coeffs[d - j]
    return PencilPerturbation(lam, const, grid)


def perturbed_pencil(pencil: MatrixPencil, pert: PencilPerturbation) -> MatrixPencil:
    """The pencil with the perturbation added to both parts."""
    if pencil.grid is not None and pert.grid != pencil.grid:
        raise ValueError("block-grid mismatch")
    return MatrixPencil(pencil.lam_part + pert.lam_part, pencil.const_part + pert.const_part, pencil.grid)


@dataclass(frozen=True)
class Distribution:
    """Scalar entry distribution for perturbation and coefficient generators."""

    kind: str
    a: float
    b: float

    def __post_init__(self) -> None:
        if self.kind == "normal":
            if not (self.b >= 0):
                raise ValueError(f"normal distribution needs sigma >= 0, got {self.b}")
        elif self.kind == "uniform":
            if not (self.b >= self.a):
                raise ValueError(f"uniform distribution needs b >= a, got ({self.a}, {self.b})")
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def normal(cls, mu: float = 0.0, sigma: float = 1.0) -> "Distribution":
        return cls("normal", float(mu), float(sigma))

    @classmethod
    def uniform(cls, lo: float = 0.0, hi: float = 1.0) -> "Distribution":
        return cls("uniform", float(lo), float(hi))

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == "normal":
            return rng.normal(self.a, self.b, shape)
        return rng.uniform(self.a, self.b, shape)

    def __str__(self) -> str:
        return f"{self.kind}({self.a:g},{self.b:g})"


def philox_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator; distinct ``stream`` values give independent streams."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def random_perturbation(
    grid: BlockGrid,
    dist: Distribution,
    seed: int,
    stream: int = 0,
) -> PencilPerturbation:
    """I.i.d. real entries from ``dist`` on both pencil parts, deterministic per (seed, stream)."""
    rng = philox_rng(seed, stream)
    lam = dist.sample(rng, (grid.rows, grid.cols))
    const = dist.sample(rng, (grid.rows, grid.cols))
    return PencilPerturbation(lam, const, grid)
