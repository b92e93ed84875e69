"""Command-line front end.

Exit codes: 0 converged / success, 1 bad input or flags, 2 stopped at the
iteration cap, 3 diverged.
"""

from __future__ import annotations

import json
import sys
from collections import Counter
from pathlib import Path

import click

from . import serialize
from .experiments import (
    BatchSpec,
    TrialRun,
    camera_standin_polynomial,
    manipulator_polynomial,
    run_manipulator_experiment,
    run_random_batch,
    run_scaling_study,
    write_history_csv,
)
from .matpoly import companion_form, poly_norm
from .perturbation import StructureMask, pencil_fro_norm, perturbed_pencil, split
from .structurer import StructuringConfig, StructuringStatus
from .structurer import structure_linearization as _structure
from .verify import equivalence_residual, nonsingularity_report

STATUS_EXIT_CODES = {
    StructuringStatus.CONVERGED: 0,
    StructuringStatus.MAX_ITERATIONS: 2,
    StructuringStatus.DIVERGED: 3,
}


def _load(loader, path, what):
    try:
        return loader(path)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read {what} from {path}: {exc}")


def _cfg(tol: float, max_iter: int) -> StructuringConfig:
    try:
        return StructuringConfig(tol=tol, max_iter=max_iter)
    except ValueError as exc:
        raise click.ClickException(str(exc))


@click.group()
def main() -> None:
    """Turn a perturbation of a companion linearization into a coefficient perturbation."""


@main.command()
@click.argument("poly_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("pert_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", default=1e-12, show_default=True, help="Unstructured-norm stopping tolerance.")
@click.option("--max-iter", default=50, show_default=True, help="Iteration cap.")
@click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True, help="Output directory.")
def structure(poly_file, pert_file, tol, max_iter, out) -> None:
    """Structure the perturbation in PERT_FILE of the companion form of POLY_FILE."""
    P = _load(serialize.read_polynomial, poly_file, "polynomial")
    pencil = companion_form(P)
    E1 = _load(lambda p: serialize.read_perturbation(p, pencil.grid), pert_file, "perturbation")
    cfg = _cfg(tol, max_iter)
    result = _structure(P, E1, cfg)

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    serialize.write_result(out / "result.json", result, tol=tol)
    write_history_csv(out / "history.csv", [TrialRun(0, P, E1, result)])

    residual = equivalence_residual(
        result.U, result.V, perturbed_pencil(pencil, E1), perturbed_pencil(pencil, result.final_perturbation)
    )
    final = result.history[-1] if result.history else None
    click.echo(f"status: {result.status.value}")
    click.echo(f"iterations: {result.iterations}")
    if final is not None:
        click.echo(f"final unstructured norm: {final.norm_Eu:.3e}")
        click.echo(f"final structured norm:   {final.norm_Es:.3e}")
    click.echo(f"equivalence residual: {residual:.3e}")
    click.echo(f"wrote {out / 'result.json'} and {out / 'history.csv'}")
    sys.exit(STATUS_EXIT_CODES[result.status])


@main.group()
def experiment() -> None:
    """Batch experiments emitting CSV histories."""


@experiment.command("random")
@click.option("--m", default=3, show_default=True)
@click.option("--n", default=3, show_default=True)
@click.option("--d", default=5, show_default=True)
@click.option("--trials", default=100, show_default=True)
@click.option("--full-scale", is_flag=True, help="Run 1000 trials regardless of --trials.")
@click.option("--seed", default=0, show_default=True)
@click.option("--tol", default=1e-14, show_default=True)
@click.option("--max-iter", default=50, show_default=True)
@click.option("--pert-hi", default=0.1, show_default=True, help="Perturbation entries are uniform on (0, PERT_HI).")
@click.option("--normalize/--no-normalize", default=True, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True)
def experiment_random(m, n, d, trials, full_scale, seed, tol, max_iter, pert_hi, normalize, out) -> None:
    """Random ensemble: generate, normalize, perturb, structure."""
    from .perturbation import Distribution

    if full_scale:
        trials = 1000
    spec = BatchSpec(
        m=m,
        n=n,
        d=d,
        trial_count=trials,
        normalize=normalize,
        pert_dist=Distribution.uniform(0.0, pert_hi),
        seed=seed,
        cfg=_cfg(tol, max_iter),
    )
    batch = run_random_batch(spec, out_dir=out, name=f"random_{m}x{n}_d{d}")
    counts = batch.iteration_counts
    converged = sum(t.result.converged for t in batch.trials)
    distribution = ", ".join(f"{k}: {v}" for k, v in sorted(Counter(counts).items()))
    click.echo(f"trials: {trials}  converged: {converged}")
    click.echo(f"iterations: max {max(counts)}, median {sorted(counts)[len(counts) // 2]}")
    click.echo(f"iteration-count distribution: {{{distribution}}}")
    click.echo(f"wrote {batch.history_csv} and {batch.summary_csv}")
    sys.exit(0 if converged == trials else 2)


@experiment.command("manipulator")
@click.option("--pert", default=0.01, show_default=True, help="Perturbation entries are uniform on (0, PERT).")
@click.option("--seed", default=1, show_default=True)
@click.option("--tol", default=1e-14, show_default=True)
@click.option("--max-iter", default=50, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True)
def experiment_manipulator(pert, seed, tol, max_iter, out) -> None:
    """Manipulator polynomial, raw and unit-norm variants."""
    exp = run_manipulator_experiment(pert, seed, _cfg(tol, max_iter), out_dir=out)
    for label, run in (("normalized", exp.normalized), ("unnormalized", exp.unnormalized)):
        r = run.result
        click.echo(
            f"{label}: {r.status.value} in {r.iterations} iterations, "
            f"|U|_2={r.history[-1].norm_U2:.4f}, |V|_2={r.history[-1].norm_V2:.4f}"
        )
    for path in exp.csv_paths:
        click.echo(f"wrote {path}")
    ok = exp.normalized.result.converged and exp.unnormalized.result.converged
    sys.exit(0 if ok else 2)


@experiment.command("scaling")
@click.option("--target", type=click.Choice(["camera-standin", "manipulator"]), default="camera-standin", show_default=True)
@click.option("--seed", default=1, show_default=True)
@click.option("--tol", default=1e-12, show_default=True)
@click.option("--max-iter", default=50, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True)
def experiment_scaling(target, seed, tol, max_iter, out) -> None:
    """Coefficient-scaling study over perturbation ranges."""
    base = camera_standin_polynomial() if target == "camera-standin" else manipulator_polynomial()
    unit = 1.0 / poly_norm(base)
    alphas_list = [(unit, unit, unit), (1.0, 1.0, 1.0), (10.0, 1.0, 1.0)]
    ranges = [0.001, 0.01, 0.1]
    rows = run_scaling_study(base, alphas_list, ranges, seed, _cfg(tol, max_iter), out_dir=out, name=f"scaling_{target}")
    for row in rows:
        flag = "yes" if row.converged else "no"
        click.echo(
            f"alphas=({row.alphas[0]:.3g},{row.alphas[1]:.3g},{row.alphas[2]:.3g}) "
            f"range=(0,{row.range_hi:g}) |E1|={row.norm_E1:.3g} |Es|={row.norm_Es:.3g} "
            f"ratio={row.ratio:.3g} conv={flag}"
        )
    sys.exit(0)


@main.command()
@click.argument("result_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--poly", "poly_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pert", "pert_file", required=True, type=click.Path(exists=True, dir_okay=False))
def verify(result_file, poly_file, pert_file) -> None:
    """Recompute the equivalence and bound checks of a result from files alone."""
    P = _load(serialize.read_polynomial, poly_file, "polynomial")
    pencil = companion_form(P)
    E1 = _load(lambda p: serialize.read_perturbation(p, pencil.grid), pert_file, "perturbation")
    obj = _load(serialize.read_result_obj, result_file, "result")

    tol = float(obj.get("diagnostics", {}).get("tol", 1e-12))
    input_norm = pencil_fro_norm(E1)
    target = companion_form(P + obj["delta_poly"])
    residual = equivalence_residual(obj["U"], obj["V"], perturbed_pencil(pencil, E1), target)
    res_bound = 1e-9 * (1.0 + input_norm) + 10.0 * tol
    checks = [("equivalence residual", residual, res_bound, residual <= res_bound)]

    smin_u, smax_u = nonsingularity_report(obj["U"])
    smin_v, smax_v = nonsingularity_report(obj["V"])
    checks.append(("U nonsingular (sigma_min)", smin_u, 0.0, smin_u > 0.0))
    checks.append(("V nonsingular (sigma_min)", smin_v, 0.0, smin_v > 0.0))

    mask = StructureMask.from_grid(pencil.grid)
    structured, unstructured = split(E1, mask)
    total_sq = pencil_fro_norm(E1) ** 2
    parts_sq = pencil_fro_norm(structured) ** 2 + pencil_fro_norm(unstructured) ** 2
    mask_err = abs(total_sq - parts_sq) / max(total_sq, 1e-300)
    checks.append(("mask norm split", mask_err, 1e-14, mask_err <= 1e-14 or total_sq == 0.0))

    failed = 0
    for label, value, bound, ok in checks:
        word = "pass" if ok else "FAIL"
        click.echo(f"{word}: {label}: {value:.6e} (bound {bound:.6e})")
        failed += 0 if ok else 1
    click.echo(f"status in file: {obj['status']}")
    sys.exit(0 if failed == 0 else 3)


def entry() -> None:
    """Console entry point mapping usage errors to exit code 1."""
    try:
        main.main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)


if __name__ == "__main__":
    entry()
