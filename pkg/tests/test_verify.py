import numpy as np
import pytest

from pencilback import (
    BlockGrid,
    Distribution,
    MatrixPolynomial,
    PencilPerturbation,
    StructuringConfig,
    assemble_system,
    brute_force_first_step,
    companion_form,
    equivalence_residual,
    min_norm_solve,
    nonsingularity_report,
    perturbed_pencil,
    philox_rng,
    poly_norm,
    random_perturbation,
    scale_poly,
    structure_linearization,
)


def tiny_poly(m, n, d, seed):
    rng = philox_rng(seed)
    P = MatrixPolynomial([rng.normal(size=(m, n)) for _ in range(d + 1)])
    return scale_poly(P, [1 / poly_norm(P)] * (d + 1))


class TestEquivalenceResidual:
    def test_identity_transform_zero_residual(self):
        pencil = companion_form(tiny_poly(2, 2, 3, seed=1))
        R, C = pencil.shape
        assert equivalence_residual(np.eye(R), np.eye(C), pencil, pencil) == 0.0

    def test_converged_run_has_tiny_residual(self):
        P = tiny_poly(3, 3, 4, seed=2)
        grid = BlockGrid(3, 3, 4)
        E1 = random_perturbation(grid, Distribution.uniform(0, 0.05), seed=3)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-14))
        assert result.converged
        pencil = companion_form(P)
        original = perturbed_pencil(pencil, E1)
        final = perturbed_pencil(pencil, result.final_perturbation)
        input_norm = np.sqrt(np.linalg.norm(original.lam_part) ** 2 + np.linalg.norm(original.const_part) ** 2)
        assert equivalence_residual(result.U, result.V, original, final) <= 1e-10 * (1 + input_norm)

    def test_corrupted_transform_detected(self):
        P = tiny_poly(3, 3, 4, seed=4)
        grid = BlockGrid(3, 3, 4)
        E1 = random_perturbation(grid, Distribution.uniform(0, 0.05), seed=5)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-14))
        pencil = companion_form(P)
        original = perturbed_pencil(pencil, E1)
        final = perturbed_pencil(pencil, result.final_perturbation)
        V_bad = np.array(result.V)
        V_bad[0, 0] += 0.1
        assert equivalence_residual(result.U, V_bad, original, final) > 1e-3


class TestNonsingularityReport:
    def test_identity(self):
        assert nonsingularity_report(np.eye(5)) == (pytest.approx(1.0), pytest.approx(1.0))

    def test_graded_diagonal(self):
        smin, smax = nonsingularity_report(np.diag([1.0, 1e-8]))
        assert smin == pytest.approx(1e-8)
        assert smax == pytest.approx(1.0)

    def test_converged_small_run_keeps_transforms_near_identity(self):
        P = tiny_poly(2, 2, 3, seed=6)
        grid = BlockGrid(2, 2, 3)
        E1 = random_perturbation(grid, Distribution.uniform(0, 0.02), seed=7)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-14))
        assert result.converged
        smin_u, _ = nonsingularity_report(result.U)
        smin_v, _ = nonsingularity_report(result.V)
        assert smin_u >= 0.5
        assert smin_v >= 0.5


class TestBruteForceOracle:
    def test_zero_perturbation_gives_zero_step(self):
        P = tiny_poly(1, 1, 2, seed=8)
        X, Y = brute_force_first_step(P, PencilPerturbation.zero(BlockGrid(1, 1, 2)))
        assert not np.any(X)
        assert not np.any(Y)

    def test_single_unstructured_entry(self):
        # one nonzero entry in an identity slot of the lambda part
        P = tiny_poly(1, 1, 2, seed=9)
        grid = BlockGrid(1, 1, 2)
        lam = np.zeros((2, 2))
        lam[1, 1] = 0.01
        E1 = PencilPerturbation(lam, np.zeros((2, 2)), grid)
        Xo, Yo = brute_force_first_step(P, E1)
        sol = min_norm_solve(assemble_system(companion_form(P), E1))
        assert np.linalg.norm(sol.X - Xo) <= 1e-8 * (1 + np.linalg.norm(Xo))
        assert np.linalg.norm(sol.Y - Yo) <= 1e-8 * (1 + np.linalg.norm(Yo))

    def test_rectangular_case(self):
        P = tiny_poly(1, 2, 2, seed=10)
        grid = BlockGrid(1, 2, 2)
        E1 = random_perturbation(grid, Distribution.uniform(0, 0.05), seed=11)
        Xo, Yo = brute_force_first_step(P, E1)
        sol = min_norm_solve(assemble_system(companion_form(P), E1))
        assert np.linalg.norm(sol.X - Xo) <= 1e-8 * (1 + np.linalg.norm(Xo))
        assert np.linalg.norm(sol.Y - Yo) <= 1e-8 * (1 + np.linalg.norm(Yo))

    def test_size_guard(self):
        P = tiny_poly(5, 5, 4, seed=12)
        pert = PencilPerturbation.zero(BlockGrid(5, 5, 4))
        with pytest.raises(ValueError, match="unknowns"):
            brute_force_first_step(P, pert)

    def test_complex_instance(self):
        rng = philox_rng(13)
        coeffs = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3)]
        P = MatrixPolynomial(coeffs)
        P = scale_poly(P, [1 / poly_norm(P)] * 3)
        grid = BlockGrid(2, 2, 2)
        lam = rng.normal(size=(4, 4)) * 0.03 + 1j * rng.normal(size=(4, 4)) * 0.03
        const = rng.normal(size=(4, 4)) * 0.03 + 1j * rng.normal(size=(4, 4)) * 0.03
        E1 = PencilPerturbation(lam, const, grid)
        Xo, Yo = brute_force_first_step(P, E1)
        sol = min_norm_solve(assemble_system(companion_form(P), E1))
        assert np.linalg.norm(sol.X - Xo) <= 1e-8 * (1 + np.linalg.norm(Xo))
        assert np.linalg.norm(sol.Y - Yo) <= 1e-8 * (1 + np.linalg.norm(Yo))
