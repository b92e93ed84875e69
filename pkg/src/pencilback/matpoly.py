"""Matrix polynomials, companion pencils, and their norms.

A matrix polynomial is a list of dense complex coefficient matrices
``A_0 ... A_d`` of a common shape ``m x n``; ``d`` is its *grade* (the
declared top index, which may exceed the degree when ``A_d == 0``).
Its first companion form is the ``(m + (d-1)n) x (d n)`` pencil

    lam * blockdiag(A_d, I_n, ..., I_n)
    + [[A_{d-1}, A_{d-2}, ..., A_0],
       [-I_n,    0,       ..., 0  ],
       [  ...,   ddots,        ...],
       [0, ...,  -I_n,         0  ]].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MatrixPolynomial",
    "BlockGrid",
    "MatrixPencil",
    "poly_norm",
    "companion_form",
    "scale_poly",
    "matrix_two_norm",
]


def _frozen_complex_matrix(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128, order="C", copy=True)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim={arr.ndim}")
    if rows is not None and arr.shape != (rows, cols):
        raise ValueError(f"expected a {rows}x{cols} matrix, got {arr.shape[0]}x{arr.shape[1]}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class MatrixPolynomial:
    """Dense m x n complex matrix polynomial of an explicitly stored grade.

    ``coeffs`` holds ``A_0, ..., A_d`` in ascending-power order; the grade
    is ``len(coeffs) - 1`` and is never inferred from trailing zeros, so a
    zero leading coefficient is representable.
    """

    coeffs: tuple[np.ndarray, ...]

    def __init__(self, coeffs) -> None:
        coeffs = [np.asarray(c) for c in coeffs]
        if not coeffs:
            raise ValueError("a matrix polynomial needs at least one coefficient")
        m, n = coeffs[0].shape if coeffs[0].ndim == 2 else (None, None)
        frozen = tuple(_frozen_complex_matrix(c, m, n) for c in coeffs)
        object.__setattr__(self, "coeffs", frozen)

    @property
    def rows(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def cols(self) -> int:
        return self.coeffs[0].shape[1]

    @property
    def grade(self) -> int:
        return len(self.coeffs) - 1

    @property
    def degree(self) -> int:
        """Largest power with a nonzero coefficient; -1 for the zero polynomial."""
        for k in range(self.grade, -1, -1):
            if np.any(self.coeffs[k] != 0):
                return k
        return -1

    @classmethod
    def zero(cls, rows: int, cols: int, grade: int) -> "MatrixPolynomial":
        return cls([np.zeros((rows, cols))] * (grade + 1))

    def __add__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("cannot add matrix polynomials of different dimensions")
        d = max(self.grade, other.grade)
        zero = np.zeros((self.rows, self.cols), dtype=np.complex128)
        return MatrixPolynomial(
            [
                (self.coeffs[k] if k <= self.grade else zero)
                + (other.coeffs[k] if k <= other.grade else zero)
                for k in range(d + 1)
            ]
        )


@dataclass(frozen=True)
class BlockGrid:
    """Block layout of the companion pencil of an m x n, grade-d polynomial.

    Row blocks are ``[m, n, ..., n]`` (one leading block plus d-1 identity
    rows), column blocks are ``[n, ..., n]`` (d of them).
    """

    m: int
    n: int
    d: int

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1 or self.d < 1:
            raise ValueError(f"invalid block grid m={self.m}, n={self.n}, d={self.d}")

    @property
    def rows(self) -> int:
        return self.m + (self.d - 1) * self.n

    @property
    def cols(self) -> int:
        return self.d * self.n

    @property
    def row_block_sizes(self) -> tuple[int, ...]:
        return (self.m,) + (self.n,) * (self.d - 1)

    @property
    def col_block_sizes(self) -> tuple[int, ...]:
        return (self.n,) * self.d


@dataclass(frozen=True)
class MatrixPencil:
    """Pencil ``lam_part * lam + const_part`` with optional companion block grid."""

    lam_part: np.ndarray
    const_part: np.ndarray
    grid: BlockGrid | None = field(default=None)

    def __init__(self, lam_part, const_part, grid: BlockGrid | None = None) -> None:
        lam = _frozen_complex_matrix(lam_part)
        const = _frozen_complex_matrix(const_part, *lam.shape)
        if grid is not None and (grid.rows, grid.cols) != lam.shape:
            raise ValueError(
                f"block grid implies {grid.rows}x{grid.cols}, matrices are "
                f"{lam.shape[0]}x{lam.shape[1]}"
            )
        object.__setattr__(self, "lam_part", lam)
        object.__setattr__(self, "const_part", const)
        object.__setattr__(self, "grid", grid)

    @property
    def shape(self) -> tuple[int, int]:
        return self.lam_part.shape


def poly_norm(P: MatrixPolynomial) -> float:
    """Frobenius-type norm: sqrt of the summed squared entries of all coefficients."""
    return float(np.sqrt(sum(np.vdot(c, c).real for c in P.coeffs)))


def scale_poly(P: MatrixPolynomial, alphas) -> MatrixPolynomial:
    """Scale coefficient k by ``alphas[k]``; requires one scalar per coefficient."""
    alphas = list(alphas)
    if len(alphas) != P.grade + 1:
        raise ValueError(f"need {P.grade + 1} scalars for a grade-{P.grade} polynomial, got {len(alphas)}")
    return MatrixPolynomial([a * c for a, c in zip(alphas, P.coeffs)])


def matrix_two_norm(A) -> float:
    """Largest singular value of a dense matrix."""
    return float(np.linalg.norm(np.asarray(A), ord=2))


def companion_form(P: MatrixPolynomial) -> MatrixPencil:
    """First companion linearization of a grade >= 1 matrix polynomial."""
    m, n, d = P.rows, P.cols, P.grade
    if d < 1:
        raise ValueError("cannot linearize grade-0 polynomial")
    grid = BlockGrid(m, n, d)
    R, C = grid.rows, grid.cols
    lam = np.zeros((R, C), dtype=np.complex128)
    const = np.zeros((R, C), dtype=np.complex128)
    lam[:m, :n] = P.coeffs[d]
    eye = np.eye(n, dtype=np.complex128)
    for j in range(2, d + 1):
        r0 = m + (j - 2) * n
        c0 = (j - 1) * n
        lam[r0 : r0 + n, c0 : c0 + n] = eye
    for j in range(1, d + 1):
        const[:m, (j - 1) * n : j * n] = P.coeffs[d - j]
    for j in range(1, d):
        r0 = m + (j - 1) * n
        c0 = (j - 1) * n
        const[r0 : r0 + n, c0 : c0 + n] = -eye
    return MatrixPencil(lam, const, grid)
