"""Batch experiments: random ensembles, the manipulator polynomial, scaling studies.

All randomness flows through the Philox counter-based generator with one
independent stream per trial index, so batches are reproducible from
``(spec, seed)`` alone and trials could run in any order.  CSV output uses
17 significant digits; reruns are byte-identical.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .matpoly import BlockGrid, MatrixPolynomial, poly_norm, scale_poly
from .perturbation import (
    Distribution,
    PencilPerturbation,
    StructureMask,
    pencil_fro_norm,
    philox_rng,
    random_perturbation,
    split,
)
from .structurer import StructuringConfig, StructuringResult, structure_linearization

__all__ = [
    "BatchSpec",
    "TrialRun",
    "BatchResult",
    "ScalingRow",
    "manipulator_polynomial",
    "camera_standin_polynomial",
    "random_polynomial",
    "run_random_batch",
    "run_manipulator_experiment",
    "run_scaling_study",
    "write_history_csv",
    "write_summary_csv",
    "write_scaling_csv",
    "summary_rows",
]

HISTORY_HEADER = ["trial", "iter", "norm_Eu", "norm_Es", "kappa_T", "alpha_i", "normU2", "normV2", "residual"]
SUMMARY_HEADER = ["iter", "min", "q1", "median", "q3", "max", "count"]
SCALING_HEADER = ["alpha2", "alpha1", "alpha0", "range_hi", "normE1", "normEs", "ratio", "normU2", "normV2", "converged"]

CAMERA_STANDIN_SEED = 2301

# Three-link mobile manipulator, 5x5 quadratic lam^2 M + lam D + K with
# M = [[M0, 0], [0, 0]], D = [[D0, 0], [0, 0]], K = [[K0, -F0^T], [F0, 0]].
_M0 = [
    [18.7532, -7.94493, 7.94494],
    [-7.94493, 31.8182, -26.8182],
    [7.94494, -26.8182, 26.8182],
]
_D0 = [
    [-1.52143, -1.55168, 1.55168],
    [3.22064, 3.28467, -3.28467],
    [-3.22064, -3.28467, 3.28467],
]
_K0 = [
    [67.4894, 69.2393, -69.2393],
    [69.8124, 1.68624, -1.68617],
    [-69.8123, -1.68617, -68.2707],
]
_F0 = [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]


def manipulator_polynomial() -> MatrixPolynomial:
    """The 5x5 quadratic mobile-manipulator polynomial, coefficients verbatim."""
    M = np.zeros((5, 5))
    M[:3, :3] = _M0
    D = np.zeros((5, 5))
    D[:3, :3] = _D0
    K = np.zeros((5, 5))
    K[:3, :3] = _K0
    F = np.array(_F0)
    K[:3, 3:] = -F.T
    K[3:, :3] = F
    return MatrixPolynomial([K, D, M])


def camera_standin_polynomial(seed: int = CAMERA_STANDIN_SEED, norm_scale: float = 150.0) -> MatrixPolynomial:
    """Seeded random 21x16 quadratic at a raw application-like scale.

    Stand-in with the surveillance-camera application's dimensions; the
    actual matrix data is not public, so scaling studies on this
    polynomial are meaningful only as qualitative behavior.  The default
    total norm of 150 is comparable to the manipulator's raw norm; a
    unit-norm stand-in would make every coefficient-scaling row of the
    study equivalent and uniformly well conditioned, erasing the
    normalized-versus-badly-scaled contrast the study is about.
    """
    rng = philox_rng(seed)
    coeffs = [rng.normal(0.0, 1.0, (21, 16)) for _ in range(3)]
    P = MatrixPolynomial(coeffs)
    return scale_poly(P, [norm_scale / poly_norm(P)] * 3)


def random_polynomial(m: int, n: int, d: int, dist: Distribution, rng: np.random.Generator) -> MatrixPolynomial:
    return MatrixPolynomial([dist.sample(rng, (m, n)) for _ in range(d + 1)])


@dataclass(frozen=True)
class BatchSpec:
    """One random ensemble: coefficient law, perturbation law, run control."""

    m: int
    n: int
    d: int
    trial_count: int = 100
    coeff_dist: Distribution = Distribution.normal(0.0, 10.0)
    normalize: bool = True
    pert_dist: Distribution = Distribution.uniform(0.0, 0.1)
    seed: int = 0
    cfg: StructuringConfig = field(default_factory=StructuringConfig)

    def __post_init__(self) -> None:
        if self.trial_count < 1:
            raise ValueError(f"trial_count must be >= 1, got {self.trial_count}")


@dataclass(frozen=True)
class TrialRun:
    index: int
    poly: MatrixPolynomial
    perturbation: PencilPerturbation
    result: StructuringResult


@dataclass(frozen=True)
class BatchResult:
    spec: BatchSpec
    trials: tuple[TrialRun, ...]
    history_csv: Path | None = None
    summary_csv: Path | None = None

    @property
    def iteration_counts(self) -> list[int]:
        return [t.result.iterations for t in self.trials]

    @property
    def all_converged(self) -> bool:
        return all(t.result.converged for t in self.trials)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return f"{x:.17g}"


def run_trial(spec: BatchSpec, trial: int) -> TrialRun:
    rng = philox_rng(spec.seed, stream=trial)
    P = random_polynomial(spec.m, spec.n, spec.d, spec.coeff_dist, rng)
    if spec.normalize:
        P = scale_poly(P, [1.0 / poly_norm(P)] * (spec.d + 1))
    grid = _companion_grid(P)
    lam = spec.pert_dist.sample(rng, (grid.rows, grid.cols))
    const = spec.pert_dist.sample(rng, (grid.rows, grid.cols))
    E1 = PencilPerturbation(lam, const, grid)
    result = structure_linearization(P, E1, spec.cfg)
    return TrialRun(trial, P, E1, result)


def _companion_grid(P: MatrixPolynomial) -> BlockGrid:
    return BlockGrid(P.rows, P.cols, P.grade)


def run_random_batch(spec: BatchSpec, out_dir=None, name: str = "batch") -> BatchResult:
    """Generate, perturb, and structure ``trial_count`` random polynomials.

    With ``out_dir`` set, writes ``<name>_history.csv`` (one row per
    iteration per trial) and ``<name>_summary.csv`` (per-iteration
    quantiles of the unstructured norm).
    """
    trials = tuple(run_trial(spec, t) for t in range(spec.trial_count))
    history_csv = summary_csv = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        history_csv = out_dir / f"{name}_history.csv"
        summary_csv = out_dir / f"{name}_summary.csv"
        write_history_csv(history_csv, trials)
        write_summary_csv(summary_csv, trials)
    return BatchResult(spec, trials, history_csv, summary_csv)


def write_history_csv(path, trials) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_HEADER)
        for trial in trials:
            for r in trial.result.history:
                writer.writerow(
                    [
                        trial.index,
                        r.index,
                        _fmt(r.norm_Eu),
                        _fmt(r.norm_Es),
                        _fmt(r.kappa_T),
                        _fmt(r.alpha_i),
                        _fmt(r.norm_U2),
                        _fmt(r.norm_V2),
                        _fmt(r.sylvester_residual),
                    ]
                )


def summary_rows(trials) -> list[list]:
    """Per-iteration quantiles of the unstructured norm across trials.

    Trials that stopped early keep contributing their final value, so every
    iteration index aggregates the same number of trials; ``count`` reports
    how many trials genuinely recorded that index.
    """
    histories = [[r.norm_Eu for r in t.result.history] for t in trials]
    depth = max(len(h) for h in histories)
    rows = []
    for i in range(depth):
        values = np.array([h[i] if i < len(h) else h[-1] for h in histories])
        count = sum(1 for h in histories if i < len(h))
        q = np.percentile(values, [0, 25, 50, 75, 100])
        rows.append([i + 1, *q, count])
    return rows


def write_summary_csv(path, trials) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for row in summary_rows(trials):
            writer.writerow([row[0]] + [_fmt(v) for v in row[1:6]] + [row[6]])


@dataclass(frozen=True)
class ManipulatorExperiment:
    normalized: TrialRun
    unnormalized: TrialRun
    csv_paths: tuple[Path, ...] = ()


def run_manipulator_experiment(
    pert_scale: float = 0.01,
    seed: int = 1,
    cfg: StructuringConfig = StructuringConfig(),
    out_dir=None,
) -> ManipulatorExperiment:
    """Structure one perturbation of the manipulator polynomial, both raw and unit-norm.

    The same perturbation draw (entries uniform on ``(0, pert_scale)``) is
    applied to both variants so the histories differ only through the
    scaling of the polynomial.
    """
    Q = manipulator_polynomial()
    Q_unit = scale_poly(Q, [1.0 / poly_norm(Q)] * (Q.grade + 1))
    grid = _companion_grid(Q)
    E1 = random_perturbation(grid, Distribution.uniform(0.0, pert_scale), seed)
    runs = {}
    for label, P in (("unnormalized", Q), ("normalized", Q_unit)):
        result = structure_linearization(P, E1, cfg)
        runs[label] = TrialRun(0, P, E1, result)
    paths = []
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for label in ("unnormalized", "normalized"):
            path = out_dir / f"manipulator_{label}_history.csv"
            write_history_csv(path, [runs[label]])
            paths.append(path)
    return ManipulatorExperiment(runs["normalized"], runs["unnormalized"], tuple(paths))


@dataclass(frozen=True)
class ScalingRow:
    alphas: tuple[float, float, float]  # leading coefficient scale first
    range_hi: float
    norm_E1: float
    norm_Es: float
    ratio: float
    norm_U2: float
    norm_V2: float
    converged: bool
    run: TrialRun


def run_scaling_study(
    base: MatrixPolynomial,
    alphas_list,
    pert_ranges,
    seed: int = 1,
    cfg: StructuringConfig = StructuringConfig(),
    out_dir=None,
    name: str = "scaling",
) -> list[ScalingRow]:
    """Structure every (coefficient scaling) x (perturbation range) combination.

    ``alphas_list`` holds ``(alpha_d, ..., alpha_1, alpha_0)`` tuples applied
    leading coefficient first; each combination gets its own perturbation
    stream.  Diverged runs report NaN norms and ratio.
    """
    if base.grade != 2:
        raise ValueError("scaling study expects a quadratic polynomial")
    rows = []
    grid = _companion_grid(base)
    stream = 0
    for alphas in alphas_list:
        alphas = tuple(float(a) for a in alphas)
        if len(alphas) != base.grade + 1:
            raise ValueError(f"need {base.grade + 1} scalars per row, got {len(alphas)}")
        scaled = scale_poly(base, list(reversed(alphas)))  # scale_poly takes A_0 first
        for hi in pert_ranges:
            E1 = random_perturbation(grid, Distribution.uniform(0.0, float(hi)), seed, stream=stream)
            stream += 1
            result = structure_linearization(scaled, E1, cfg)
            run = TrialRun(stream - 1, scaled, E1, result)
            norm_e1 = pencil_fro_norm(E1)
            if result.converged:
                structured, _ = split(result.final_perturbation, StructureMask.from_grid(grid))
                norm_es = pencil_fro_norm(structured)
                ratio = 0.0 if norm_e1 == 0.0 and norm_es == 0.0 else norm_es / norm_e1
                norm_u2 = result.history[-1].norm_U2 if result.history else float("nan")
                norm_v2 = result.history[-1].norm_V2 if result.history else float("nan")
            else:
                norm_es = ratio = norm_u2 = norm_v2 = float("nan")
            rows.append(ScalingRow(alphas, float(hi), norm_e1, norm_es, ratio, norm_u2, norm_v2, result.converged, run))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_scaling_csv(out_dir / f"{name}.csv", rows)
    return rows


def write_scaling_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCALING_HEADER)
        for row in rows:
            writer.writerow(
                [_fmt(row.alphas[0]), _fmt(row.alphas[1]), _fmt(row.alphas[2]), _fmt(row.range_hi)]
                + [_fmt(v) for v in (row.norm_E1, row.norm_Es, row.ratio, row.norm_U2, row.norm_V2)]
                + ["yes" if row.converged else "no"]
            )
