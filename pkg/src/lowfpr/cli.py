"""Batch command-line surface over datasets on disk.

Commands: validate, fit, eval, study, synth. Outputs are deterministic for a
fixed seed; reruns and different --threads values produce byte-identical
files. Exit codes: 0 success, 1 usage error, 2 data validation error,
3 numeric or fit failure.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import adjust, analysis, protocol, synth
from .data import DatasetError, filter_split, load_dataset, save_dataset
from .uncertainty import compute_uncertainties

DEFAULT_TARGET_GRID = (1e-2, 1e-3, 1e-4, 1e-5)

VARIANT_LABELS = {
    "g": adjust.Variant.GLOBAL_ONLY,
    "g+l": adjust.Variant.LV1,
    "g+lv2": adjust.Variant.LV2,
    "g+lv3": adjust.Variant.LV3,
}

_input_option = click.option("--input", "input_path", required=True, help="Dataset file to read.")
_format_option = click.option(
    "--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv", show_default=True, help="Dataset file format."
)
_output_dir_option = click.option(
    "--output-dir", default=".", show_default=True, help="Directory for output files (created if missing)."
)


def _split_or_die(ds, split: str):
    part = filter_split(ds, split)
    if len(part) == 0:
        raise DatasetError(f"input has no records in the '{split}' split")
    return part


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


@click.group()
def cli() -> None:
    """Threshold calibration and evaluation under low false-positive budgets."""


@cli.command("validate")
@_input_option
@_format_option
def cmd_validate(input_path: str, fmt: str) -> None:
    """Check a dataset file against the schema and print a summary."""
    ds = load_dataset(input_path, fmt)
    click.echo(f"ok: {len(ds)} records, {ds.member_count} members")
    for split in ("train", "validation", "test"):
        mask = ds.splits == split
        n = int(mask.sum())
        pos = int(ds.labels[mask].sum())
        click.echo(f"  {split}: {n} records ({pos} malicious, {n - pos} benign)")


@cli.command("fit")
@_input_option
@_format_option
@_output_dir_option
@click.option(
    "--variant",
    type=click.Choice(sorted(VARIANT_LABELS)),
    default="g",
    show_default=True,
    help="g: global threshold only; g+l, g+lv2, g+lv3: with a local adjustment.",
)
@click.option("--target-fpr", type=float, required=True, help="False-positive-rate budget for the fit.")
@click.option("--multiplier", type=float, default=0.9, show_default=True, help="Fit-time fraction of the FPR budget.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sweep-tol", type=float, default=1e-6, show_default=True, help="Per-sweep TPR improvement cutoff.")
@click.option("--max-sweeps", type=int, default=50, show_default=True)
def cmd_fit(
    input_path: str,
    fmt: str,
    output_dir: str,
    variant: str,
    target_fpr: float,
    multiplier: float,
    seed: int,
    sweep_tol: float,
    max_sweeps: int,
) -> None:
    """Fit a calibration on the validation split and write it as JSON."""
    ds = load_dataset(input_path, fmt)
    val = _split_or_die(ds, "validation")
    v = VARIANT_LABELS[variant]
    if v is adjust.Variant.GLOBAL_ONLY:
        result = adjust.fit_global(val, target_fpr, multiplier=multiplier, seed=seed)
    else:
        result = adjust.fit_local(
            val, target_fpr, v, seed=seed, multiplier=multiplier, sweep_tol=sweep_tol, max_sweeps=max_sweeps
        )
    out = _outdir(output_dir) / f"calibration_{variant}_{target_fpr:g}.json"
    adjust.save_calibration(result, out)
    op = result.achieved_val
    click.echo(f"fitted {variant} @ target_fpr={target_fpr:g}: threshold={op.threshold!r} tpr={op.tpr!r} fpr={op.fpr!r}")
    click.echo(f"wrote {out}")


@cli.command("eval")
@_input_option
@_format_option
@_output_dir_option
@click.option("--calibration", "calibration_path", required=True, help="Calibration JSON produced by fit.")
@click.option("--target-fpr", type=float, default=None, help="Override the calibration's target FPR.")
def cmd_eval(input_path: str, fmt: str, output_dir: str, calibration_path: str, target_fpr: float | None) -> None:
    """Evaluate a fitted calibration on the test split."""
    ds = load_dataset(input_path, fmt)
    test = _split_or_die(ds, "test")
    result = adjust.load_calibration(calibration_path)
    outcome = adjust.evaluate_calibration(test, result, target_fpr)
    target = result.target_fpr if target_fpr is None else target_fpr
    out = _outdir(output_dir) / "evaluation.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        fh.write("target_fpr,tpr,actualized_fpr,combined\n")
        fh.write(f"{target!r},{outcome.tpr!r},{outcome.actualized_fpr!r},{outcome.combined!r}\n")
    click.echo(f"tpr={outcome.tpr!r} actualized_fpr={outcome.actualized_fpr!r} combined={outcome.combined!r}")
    click.echo(f"wrote {out}")


@cli.command("study")
@_input_option
@_format_option
@_output_dir_option
@click.option(
    "--study",
    "study_name",
    type=click.Choice(["protocol", "subsample", "table1", "errors", "novelty"]),
    required=True,
    help="Which analysis to run.",
)
@click.option(
    "--target-fpr",
    "target_fprs",
    type=float,
    multiple=True,
    help="Target FPR (repeatable). Default grid: 1e-2 1e-3 1e-4 1e-5.",
)
@click.option("--fractions", default="1,0.1,0.01", show_default=True, help="Subsample fractions, comma separated.")
@click.option("--study-seeds", type=int, default=20, show_default=True, help="Number of subsample seeds.")
@click.option("--seed", type=int, default=0, show_default=True, help="Base seed for the subsample study.")
@click.option("--threads", type=int, default=1, show_default=True, help="Worker threads for the subsample study.")
@click.option("--fpr-max", type=float, default=1e-3, show_default=True, help="Partial-AUC cut for the table1 study.")
@click.option("--threshold", type=float, default=0.5, show_default=True, help="Decision threshold for the errors study.")
@click.option(
    "--measure",
    type=click.Choice(list(analysis.MEASURES)),
    default="epistemic",
    show_default=True,
    help="Uncertainty measure for the errors/novelty studies.",
)
def cmd_study(
    input_path: str,
    fmt: str,
    output_dir: str,
    study_name: str,
    target_fprs: tuple[float, ...],
    fractions: str,
    study_seeds: int,
    seed: int,
    threads: int,
    fpr_max: float,
    threshold: float,
    measure: str,
) -> None:
    """Run one of the bundled studies and write its CSV."""
    targets = list(target_fprs) if target_fprs else list(DEFAULT_TARGET_GRID)
    ds = load_dataset(input_path, fmt)
    out = _outdir(output_dir) / f"{study_name}.csv"
    if study_name == "protocol":
        val = _split_or_die(ds, "validation")
        test = _split_or_die(ds, "test")
        points = protocol.relative_error_curve(val, test, targets)
        protocol.write_protocol_csv(points, out)
    elif study_name == "subsample":
        val = _split_or_die(ds, "validation")
        test = _split_or_die(ds, "test")
        if study_seeds < 1:
            raise click.UsageError("--study-seeds must be at least 1")
        try:
            fraction_list = [float(f) for f in fractions.split(",") if f.strip() != ""]
        except ValueError:
            raise click.UsageError(f"--fractions must be comma-separated numbers, got {fractions!r}") from None
        rows = protocol.subsampling_study(
            val, test, fraction_list, targets, seeds=[seed + k for k in range(study_seeds)], threads=threads
        )
        protocol.write_study_csv(rows, out)
    elif study_name == "table1":
        test = _split_or_die(ds, "test")
        rows = analysis.ensemble_vs_members(test, fpr_max=fpr_max)
        analysis.write_comparison_csv(rows, out)
    elif study_name == "errors":
        test = _split_or_die(ds, "test")
        split_result = analysis.uncertainty_by_correctness(test, threshold, measure)
        split_result.write_csv(out)
        if split_result.has_empty_group:
            click.echo("warning: one correctness group is empty", err=True)
    else:  # novelty
        test = _split_or_die(ds, "test")
        known = {f for f, s in zip(ds.families, ds.splits) if f is not None and s in ("train", "validation")}
        split_result = analysis.uncertainty_by_novelty(test, known, measure)
        split_result.write_csv(out)
        if split_result.has_empty_group:
            click.echo("warning: one novelty group is empty", err=True)
    click.echo(f"wrote {out}")


@cli.command("synth")
@_format_option
@click.option("--config", "config_path", default=None, help="Generator config JSON; defaults to the default scenario.")
@click.option("--output", "output_path", required=True, help="Dataset file to write.")
@click.option("--seed", type=int, default=None, help="Override the config's seed.")
def cmd_synth(fmt: str, config_path: str | None, output_path: str, seed: int | None) -> None:
    """Generate a synthetic dataset and write it to disk."""
    if config_path is None:
        config = synth.default_scenario()
    else:
        config = synth.load_config(config_path)
    if seed is not None:
        config = synth.SynthConfig.from_dict(dict(config.to_dict(), seed=seed))
    ds = synth.generate(config)
    save_dataset(ds, output_path, fmt)
    click.echo(f"wrote {output_path}: {len(ds)} records, {ds.member_count} members")
    for split in ("train", "validation", "test"):
        mask = ds.splits == split
        n = int(mask.sum())
        pos = int(ds.labels[mask].sum())
        novel = sum(1 for f, m in zip(ds.families, mask) if m and f is not None and f.startswith("fam_n"))
        click.echo(f"  {split}: {n} records ({pos} malicious, {n - pos} benign, {novel} novel-family)")


def main(argv: list[str] | None = None) -> int:
    """Entry point translating failures into the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.UsageError as exc:
        exc.show()
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except DatasetError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(2)
    except (ValueError, RuntimeError, ArithmeticError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    return 0


__all__ = ["cli", "main", "DEFAULT_TARGET_GRID", "VARIANT_LABELS"]
