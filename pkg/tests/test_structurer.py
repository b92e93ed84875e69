import math

import numpy as np
import pytest

from pencilback import (
    BlockGrid,
    Distribution,
    MatrixPolynomial,
    PencilPerturbation,
    StructureMask,
    StructuringConfig,
    StructuringStatus,
    alpha_estimate,
    assemble_system,
    beta_estimate,
    check_smallness_hypothesis,
    companion_form,
    embed_polynomial_delta,
    equivalence_residual,
    min_norm_solve,
    pencil_fro_norm,
    perturbed_pencil,
    philox_rng,
    poly_norm,
    random_perturbation,
    scale_poly,
    split,
    structure_linearization,
    structured_growth_bound,
    structured_norm_bound,
)
from pencilback.structurer import IterationRecord, step_alpha, step_beta


def unit_random_poly(m, n, d, seed, sigma=10.0):
    rng = philox_rng(seed)
    P = MatrixPolynomial([rng.normal(0, sigma, (m, n)) for _ in range(d + 1)])
    return scale_poly(P, [1 / poly_norm(P)] * (d + 1))


def input_pencil_norm(P, E1):
    pencil = companion_form(P)
    perturbed = perturbed_pencil(pencil, E1)
    return float(np.sqrt(np.linalg.norm(perturbed.lam_part) ** 2 + np.linalg.norm(perturbed.const_part) ** 2))


class TestTrivialRuns:
    def test_zero_perturbation_converges_immediately(self):
        P = unit_random_poly(2, 2, 3, seed=1)
        grid = BlockGrid(2, 2, 3)
        result = structure_linearization(P, PencilPerturbation.zero(grid))
        assert result.status is StructuringStatus.CONVERGED
        assert result.iterations == 0
        assert np.array_equal(result.U, np.eye(grid.rows))
        assert np.array_equal(result.V, np.eye(grid.cols))
        assert all(not np.any(c) for c in result.delta_poly.coeffs)
        assert len(result.history) == 1

    def test_already_structured_input_unchanged(self):
        P = unit_random_poly(2, 3, 4, seed=2)
        grid = BlockGrid(2, 3, 4)
        rng = philox_rng(3)
        delta = MatrixPolynomial([0.01 * rng.normal(size=(2, 3)) for _ in range(5)])
        E1 = embed_polynomial_delta(delta, grid)
        result = structure_linearization(P, E1)
        assert result.status is StructuringStatus.CONVERGED
        assert result.iterations == 0
        assert np.array_equal(result.final_perturbation.lam_part, E1.lam_part)
        assert np.array_equal(result.final_perturbation.const_part, E1.const_part)
        for a, b in zip(result.delta_poly.coeffs, delta.coeffs):
            assert np.allclose(a, b, atol=1e-15)

    def test_grade_one_any_perturbation_is_structured(self):
        P = unit_random_poly(3, 2, 1, seed=4)
        pert = random_perturbation(BlockGrid(3, 2, 1), Distribution.normal(0, 1), seed=5)
        result = structure_linearization(P, pert)
        assert result.status is StructuringStatus.CONVERGED
        assert result.iterations == 0

    def test_dimension_mismatch_rejected(self):
        P = unit_random_poly(2, 2, 3, seed=6)
        pert = PencilPerturbation.zero(BlockGrid(2, 2, 4))
        with pytest.raises(ValueError, match="dimension mismatch"):
            structure_linearization(P, pert)


class TestConvergence:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_random_quintic_converges_fast(self, seed):
        # 3x3 grade-5 unit-norm polynomials with entries uniform(0, 0.1) on
        # every perturbation block: a handful of iterations to 1e-15
        P = unit_random_poly(3, 3, 5, seed=seed)
        E1 = random_perturbation(BlockGrid(3, 3, 5), Distribution.uniform(0, 0.1), seed=seed + 100)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-15))
        assert result.status is StructuringStatus.CONVERGED
        assert result.iterations <= 8
        assert result.history[-1].norm_Eu <= 1e-15

    def test_stretch_tolerance_1e16(self):
        P = unit_random_poly(3, 3, 5, seed=9)
        E1 = random_perturbation(BlockGrid(3, 3, 5), Distribution.uniform(0, 0.1), seed=109)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-16))
        assert result.status is StructuringStatus.CONVERGED
        assert result.history[-1].norm_Eu <= 1e-16

    def test_equivalence_transformation_exact(self):
        P = unit_random_poly(3, 3, 5, seed=10)
        E1 = random_perturbation(BlockGrid(3, 3, 5), Distribution.uniform(0, 0.1), seed=110)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-14))
        pencil = companion_form(P)
        residual = equivalence_residual(
            result.U,
            result.V,
            perturbed_pencil(pencil, E1),
            perturbed_pencil(pencil, result.final_perturbation),
        )
        assert residual <= 1e-10 * (1 + input_pencil_norm(P, E1))

    def test_round_trip_companion_of_perturbed_polynomial(self):
        P = unit_random_poly(2, 2, 4, seed=11)
        E1 = random_perturbation(BlockGrid(2, 2, 4), Distribution.uniform(0, 0.05), seed=111)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-14))
        assert result.converged
        rebuilt = companion_form(P + result.delta_poly)
        final = perturbed_pencil(companion_form(P), result.final_perturbation)
        assert np.abs(rebuilt.lam_part - final.lam_part).max() <= 1e-12
        assert np.abs(rebuilt.const_part - final.const_part).max() <= 1e-12

    def test_quadratic_decay_per_step(self):
        P = unit_random_poly(3, 3, 5, seed=12)
        E1 = random_perturbation(BlockGrid(3, 3, 5), Distribution.uniform(0, 0.1), seed=112)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-14))
        eus = [r.norm_Eu for r in result.history]
        for i in range(len(eus) - 1):
            assert eus[i + 1] <= result.history[i].alpha_i * eus[i] ** 2 * (1 + 1e-8)

    def test_chained_decay_bound(self):
        P = unit_random_poly(3, 3, 5, seed=13)
        E1 = random_perturbation(BlockGrid(3, 3, 5), Distribution.uniform(0, 0.1), seed=113)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-14))
        alpha = alpha_estimate(result.history)
        e1 = result.history[0].norm_Eu
        for k, record in enumerate(result.history, start=1):
            bound = alpha ** (2 ** (k - 1) - 1) * e1 ** (2 ** (k - 1))
            assert record.norm_Eu <= bound * (1 + 1e-8)

    def test_transformation_products_converge(self):
        # replay the iteration to collect the step norms, then check that the
        # accumulated transformations stay within the summed step sizes
        P = unit_random_poly(2, 2, 3, seed=14)
        grid = BlockGrid(2, 2, 3)
        E1 = random_perturbation(grid, Distribution.uniform(0, 0.05), seed=114)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-14))
        assert result.converged

        pencil = companion_form(P)
        mask = StructureMask.from_grid(grid)
        E = PencilPerturbation(E1.lam_part, E1.const_part, grid)
        step_norm_sum = 0.0
        for _ in range(result.iterations):
            system = assemble_system(pencil, E, mask)
            sol = min_norm_solve(system)
            step_norm_sum += float(np.linalg.norm(sol.X) + np.linalg.norm(sol.Y))
            AX = system.lam_mat @ sol.X
            AtX = system.const_mat @ sol.X
            E = PencilPerturbation(
                E.lam_part + AX + sol.Y @ system.lam_mat + sol.Y @ AX,
                E.const_part + AtX + sol.Y @ system.const_mat + sol.Y @ AtX,
                grid,
            )
        assert math.isfinite(step_norm_sum)
        slack = step_norm_sum + 2.0 * step_norm_sum**2 + 1e-12
        assert np.linalg.norm(result.U - np.eye(grid.rows)) <= slack
        assert np.linalg.norm(result.V - np.eye(grid.cols)) <= slack

    def test_history_final_record_has_nan_diagnostics(self):
        P = unit_random_poly(2, 2, 2, seed=15)
        E1 = random_perturbation(BlockGrid(2, 2, 2), Distribution.uniform(0, 0.05), seed=115)
        result = structure_linearization(P, E1)
        last = result.history[-1]
        assert math.isnan(last.kappa_T) and math.isnan(last.alpha_i) and math.isnan(last.sylvester_residual)
        assert len(result.history) == result.iterations + 1


class TestNonConvergedRuns:
    def test_max_iterations_status_and_equivalence(self):
        P = unit_random_poly(3, 3, 4, seed=16)
        E1 = random_perturbation(BlockGrid(3, 3, 4), Distribution.uniform(0, 0.1), seed=116)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-15, max_iter=2))
        assert result.status is StructuringStatus.MAX_ITERATIONS
        assert result.iterations == 2
        pencil = companion_form(P)
        residual = equivalence_residual(
            result.U,
            result.V,
            perturbed_pencil(pencil, E1),
            perturbed_pencil(pencil, result.final_perturbation),
        )
        assert residual <= 1e-10 * (1 + input_pencil_norm(P, E1))

    def test_divergence_detected_on_violent_perturbation(self):
        # far beyond the smallness threshold: unit-norm polynomial, entries
        # uniform on (0, 2) across the whole pencil
        P = unit_random_poly(21, 16, 2, seed=17, sigma=1.0)
        E1 = random_perturbation(BlockGrid(21, 16, 2), Distribution.uniform(0, 2.0), seed=117)
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-12, max_iter=40))
        assert result.status is StructuringStatus.DIVERGED

    def test_non_finite_input_reports_divergence(self):
        P = unit_random_poly(2, 2, 2, seed=18)
        grid = BlockGrid(2, 2, 2)
        lam = np.zeros((grid.rows, grid.cols))
        lam[1, 1] = np.nan
        result = structure_linearization(P, PencilPerturbation(lam, np.zeros_like(lam), grid))
        assert result.status is StructuringStatus.DIVERGED


class TestDiagnostics:
    def test_step_alpha_formula(self):
        # kappa=1, both part norms 1, 1x1 pencil: 1 / (sqrt(2) * 2 * 2)
        assert step_alpha(1.0, 1.0, 1.0, 1, 1) == pytest.approx(1.0 / (math.sqrt(2) * 2 * 2))

    def test_step_beta_formula(self):
        assert step_beta(7.0, 3, 5) == pytest.approx(math.sqrt(2.0 / 8.0) * 7.0)

    def test_estimates_take_max_over_records(self):
        nan = float("nan")
        history = [
            IterationRecord(1, 1.0, 1.0, 2.0, 0.5, 1.5, 1.0, 1.0, 0.0),
            IterationRecord(2, 0.5, 1.0, 3.0, 0.8, 2.5, 1.0, 1.0, 0.0),
            IterationRecord(3, 0.1, 1.0, nan, nan, nan, 1.0, 1.0, nan),
        ]
        assert alpha_estimate(history) == 0.8
        assert beta_estimate(history) == 2.5

    def test_estimates_reject_empty_history(self):
        with pytest.raises(ValueError, match="empty"):
            alpha_estimate([])

    def test_beta_constant_kappa(self):
        k = 11.0
        history = [IterationRecord(1, 1.0, 1.0, k, 0.1, step_beta(k, 4, 4), 1, 1, 0)]
        assert beta_estimate(history) == pytest.approx(math.sqrt(2.0 / 8.0) * k)


class TestAprioriBounds:
    def test_threshold_values(self):
        P1 = MatrixPolynomial.zero(2, 2, 1)
        holds, threshold = check_smallness_hypothesis(P1, PencilPerturbation.zero(BlockGrid(2, 2, 1)))
        assert holds
        assert threshold == pytest.approx(0.2617993877991494, abs=1e-15)
        P4 = MatrixPolynomial.zero(2, 2, 4)
        _, threshold4 = check_smallness_hypothesis(P4, PencilPerturbation.zero(BlockGrid(2, 2, 4)))
        assert threshold4 == pytest.approx(0.032724923474893676, abs=1e-15)

    def test_zero_perturbation_always_below_threshold(self):
        for d in range(1, 6):
            P = MatrixPolynomial.zero(3, 3, d)
            holds, _ = check_smallness_hypothesis(P, PencilPerturbation.zero(BlockGrid(3, 3, d)))
            assert holds

    def test_growth_bound_values(self):
        grid = BlockGrid(1, 1, 2)
        P = MatrixPolynomial([np.array([[1.0]]), np.zeros((1, 1)), np.zeros((1, 1))])
        assert structured_growth_bound(P, PencilPerturbation.zero(grid)) == 0.0
        lam = np.zeros((2, 2))
        lam[0, 0] = 0.01
        pert = PencilPerturbation(lam, np.zeros((2, 2)), grid)
        # 4 * 2 * (1 + 1) * 0.01 = 0.16
        assert structured_growth_bound(P, pert) == pytest.approx(0.16)

    def test_growth_bound_holds_on_small_converged_runs(self):
        # below-threshold perturbations: the structured shift stays within the bound
        checked = 0
        for seed in range(100):
            P = unit_random_poly(2, 2, 2, seed=2000 + seed)
            grid = BlockGrid(2, 2, 2)
            E1 = random_perturbation(grid, Distribution.uniform(0, 0.01), seed=3000 + seed)
            holds, _ = check_smallness_hypothesis(P, E1)
            assert holds
            result = structure_linearization(P, E1, StructuringConfig(tol=1e-14))
            if not result.converged:
                continue
            shift = poly_norm(result.delta_poly)
            assert shift <= structured_growth_bound(P, E1)
            checked += 1
        assert checked >= 95

    def test_structured_norm_bound_values(self):
        assert structured_norm_bound(0.0, 5.0, 7.0) == 0.0
        # alpha * eps = 1/2 collapses to 2 (1 + beta) eps
        eps, beta = 0.01, 3.0
        alpha = 0.5 / eps
        assert structured_norm_bound(eps, alpha, beta) == pytest.approx(2 * (1 + beta) * eps)
        assert structured_norm_bound(1.0, 1.0, 2.0) == np.inf
        assert structured_norm_bound(2.0, 1.0, 2.0) == np.inf

    def test_structured_norm_bound_on_contractive_runs(self):
        # small perturbations of tiny pencils keep alpha*eps < 1 so the bound bites
        hit = 0
        for seed in range(40):
            P = unit_random_poly(1, 1, 2, seed=4000 + seed)
            grid = BlockGrid(1, 1, 2)
            E1 = random_perturbation(grid, Distribution.uniform(0, 0.01), seed=5000 + seed)
            result = structure_linearization(P, E1, StructuringConfig(tol=1e-14))
            if not result.converged:
                continue
            eps = pencil_fro_norm(E1)
            alpha = alpha_estimate(result.history)
            beta = beta_estimate(result.history)
            if not (math.isfinite(alpha) and alpha * eps < 1):
                continue
            structured, _ = split(result.final_perturbation, StructureMask.from_grid(grid))
            assert pencil_fro_norm(structured) <= structured_norm_bound(eps, alpha, beta) * (1 + 1e-8)
            hit += 1
        assert hit >= 10

    def test_hypothesis_reported_but_not_enforced(self):
        # far above the threshold, the run is still attempted
        P = unit_random_poly(3, 3, 5, seed=20)
        E1 = random_perturbation(BlockGrid(3, 3, 5), Distribution.uniform(0, 0.1), seed=120)
        holds, _ = check_smallness_hypothesis(P, E1)
        assert not holds
        result = structure_linearization(P, E1, StructuringConfig(tol=1e-14))
        assert result.converged
