from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import click
import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    TaskProgressColumn,
    TextColumn,
    TimeElapsedColumn,
    TimeRemainingColumn,
)
from rich.table import Table
from rich.theme import Theme

from llcrobust import bench_settings as defaults
from llcrobust.bench.harness import rfe, run_benchmark
from llcrobust.bench.report import emit_report
from llcrobust.interface.breakdown import TraceRow, ridge_trace, scaled_outlier_trace, singular_block_trace
from llcrobust.interface.llc import diagnostic_flag, llc_fit
from llcrobust.interface.llc_structs import (
    BenchmarkConfig,
    BenchmarkReport,
    ContaminationSpec,
    GdeConfig,
    McdConfig,
)
from llcrobust.interface.model import confounder_pairs, random_model, single_intervention_design
from llcrobust.interface.simulate import contaminate, draw_design_samples
from llcrobust.llc_enums import LLC_BACKEND, LLC_TARGET
from llcrobust.transport.files import (
    load_design,
    load_model,
    load_sample,
    save_design,
    save_estimate,
    save_model,
    save_sample,
    write_json,
)
from llcrobust.utils import derive_rng

log = logging.getLogger("llcrobust")

THEME = Theme(
    {
        "title": "bold cyan",
        "label": "bold",
        "value": "bold green",
        "warn": "bold yellow",
        "error": "bold red",
    }
)
app = typer.Typer(add_completion=False, help="LLC causal estimation with robust covariance back ends")
console = Console(theme=THEME)
err_console = Console(theme=THEME, stderr=True)


def _parse_backend(raw: str) -> LLC_BACKEND:
    try:
        return LLC_BACKEND.parse(raw)
    except ValueError as exc:
        raise typer.BadParameter(str(exc)) from exc


def _parse_target(raw: str) -> LLC_TARGET:
    try:
        return LLC_TARGET.parse(raw)
    except ValueError as exc:
        raise typer.BadParameter(str(exc)) from exc


def _parse_list(raw: Optional[str], cast) -> Optional[tuple]:
    if raw is None:
        return None
    try:
        return tuple(cast(part.strip()) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        raise typer.BadParameter(f"cannot parse list {raw!r}: {exc}") from exc


def _render_matrix(title: str, M: np.ndarray) -> None:
    table = Table(title=title)
    table.add_column("", style="label")
    for j in range(M.shape[1]):
        table.add_column(f"x{j + 1}", style="value", justify="right")
    for i, row in enumerate(M):
        table.add_row(f"x{i + 1}", *(f"{v:.4f}" for v in row))
    console.print(table)


def _render_trace(title: str, parameter: str, value: str, reference: str, rows: Sequence[TraceRow]) -> None:
    table = Table(title=title)
    table.add_column(parameter, style="label", justify="right")
    table.add_column(value, style="value", justify="right")
    table.add_column(reference, style="value", justify="right")
    for row in rows:
        ref = "" if row.reference is None else f"{row.reference:.6g}"
        table.add_row(f"{row.parameter:.6g}", f"{row.value:.6g}", ref)
    console.print(table)


def _render_aggregates(report: BenchmarkReport) -> None:
    for target in BenchmarkReport.TARGETS:
        rows = report.aggregate_table(target)
        table = Table(title=f"RFE of {target}: median (MAD)")
        table.add_column("epsilon", style="label", justify="right")
        for est in report.config.estimators:
            table.add_column(est.value, style="value", justify="right")
        for eps in report.config.epsilons:
            cells = []
            for est in report.config.estimators:
                agg = rows.get((est, eps))
                cells.append("-" if agg is None or agg.count == 0 else f"{agg.median:.2f} ({agg.mad:.2f})")
            table.add_row(f"{eps:g}", *cells)
        console.print(table)


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug detail"),
) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


@app.command()
def generate(
    d: int = typer.Option(defaults.N_NODES, "--d", min=2, help="Number of nodes"),
    edge_prob: float = typer.Option(defaults.EDGE_PROB, "--edge-prob", min=0.0, max=1.0),
    conf_prob: float = typer.Option(defaults.CONF_PROB, "--conf-prob", min=0.0, max=1.0),
    seed: int = typer.Option(defaults.MASTER_SEED, "--seed"),
    out: Path = typer.Option(Path("model.json"), "--out"),
) -> None:
    """Draw a random weakly stable model and write it as JSON."""
    model = random_model(d, edge_prob, conf_prob, np.random.default_rng(seed))
    save_model(model, out, meta={"seed": seed, "edge_prob": edge_prob, "conf_prob": conf_prob})
    edges = int(np.count_nonzero(model.B))
    confounders = ", ".join(f"x{i + 1}-x{j + 1}" for i, j in confounder_pairs(model)) or "none"
    console.print(f"Model written to {out}", style="title")
    console.print(f"Edges: {edges}  Confounded pairs: {confounders}", style="value")
    _render_matrix("B", model.B)


@app.command()
def simulate(
    model_path: Path = typer.Option(..., "--model", exists=True, dir_okay=False),
    design_path: Optional[Path] = typer.Option(None, "--design", exists=True, dir_okay=False),
    n: int = typer.Option(defaults.SAMPLE_SIZE, "--n", min=2),
    epsilon: float = typer.Option(0.0, "--epsilon", min=0.0),
    target: str = typer.Option(LLC_TARGET.X.value, "--target", help="x, e or c"),
    seed: int = typer.Option(defaults.MASTER_SEED, "--seed"),
    out: Path = typer.Option(Path("data"), "--out"),
) -> None:
    """Simulate one sample per experiment, optionally contaminated."""
    try:
        spec = ContaminationSpec(rate=epsilon, target=_parse_target(target))
    except ValueError as exc:
        raise typer.BadParameter(str(exc)) from exc
    model = load_model(model_path)
    design = load_design(design_path, model.d) if design_path else single_intervention_design(model.d)

    samples = draw_design_samples(model, design, n, None, derive_rng(seed, 1))
    out.mkdir(parents=True, exist_ok=True)
    for k, sample in enumerate(samples):
        if spec.target is LLC_TARGET.C and sample.experiment.is_observational:
            contaminated = sample
        else:
            contaminated = contaminate(sample, model, spec, derive_rng(seed, 2, k))
        save_sample(
            contaminated,
            out / f"exp_{k}.csv",
            meta={"seed": seed, "epsilon": epsilon, "target": spec.target.value},
        )
    save_design(design, out / "design.json")
    save_model(model, out / "model.json")
    write_json(
        out / "manifest.json",
        {
            "command": "simulate",
            "model": str(model_path),
            "n": n,
            "epsilon": epsilon,
            "target": spec.target.value,
            "seed": seed,
            "experiments": [exp.label() for exp in design.experiments],
        },
    )
    console.print(f"{design.K} samples of {n} points written to {out}", style="title")


@app.command()
def fit(
    data_dir: Path = typer.Option(..., "--data-dir", exists=True, file_okay=False),
    backend: str = typer.Option(LLC_BACKEND.SCM.value, "--backend", help="scm, mcd or gde"),
    gamma: float = typer.Option(defaults.GDE_GAMMA, "--gamma"),
    alpha: float = typer.Option(defaults.MCD_ALPHA, "--alpha"),
    lam: float = typer.Option(0.0, "--lambda", min=0.0, help="Ridge parameter"),
    reweight: bool = typer.Option(False, "--reweight", help="Reweighted MCD"),
    seed: int = typer.Option(0, "--seed"),
    out: Optional[Path] = typer.Option(None, "--out"),
) -> None:
    """Estimate (B, SigmaE) from a directory written by `simulate`."""
    chosen = _parse_backend(backend)
    try:
        mcd_cfg = McdConfig(alpha=alpha, reweight=reweight)
        gde_cfg = GdeConfig(gamma=gamma)
    except ValueError as exc:
        raise typer.BadParameter(str(exc)) from exc

    design = load_design(data_dir / "design.json")
    samples = [load_sample(data_dir / f"exp_{k}.csv") for k in range(design.K)]
    estimate = llc_fit(
        samples, design, chosen,
        mcd_cfg=mcd_cfg, gde_cfg=gde_cfg, lam=lam, rng=np.random.default_rng(seed),
    )

    extra: dict[str, object] = {
        "backend": chosen.value,
        "seed": seed,
        "flag": diagnostic_flag(estimate.diagnostics),
    }
    truth_path = data_dir / "model.json"
    if truth_path.exists():
        truth = load_model(truth_path)
        extra["rfe_b"] = rfe(estimate.B_hat, truth.B) if np.any(truth.B) else None
        extra["rfe_sigma_e"] = rfe(estimate.SigmaE_hat, truth.SigmaE)

    out = out or data_dir / "estimate.json"
    save_estimate(estimate, out, extra)
    _render_matrix(f"B-hat ({chosen.value})", estimate.B_hat)
    _render_matrix(f"SigmaE-hat ({chosen.value})", estimate.SigmaE_hat)
    if estimate.diagnostics.get("ill_conditioned"):
        console.print(
            f"Constraint system ill-conditioned (max cond {estimate.diagnostics['max_condition']:.3g})",
            style="warn",
        )
    if "rfe_sigma_e" in extra:
        rfe_b = extra["rfe_b"]
        rfe_b_text = "n/a" if rfe_b is None else f"{rfe_b:.4f}"
        console.print(f"RFE_B: {rfe_b_text}  RFE_SigmaE: {extra['rfe_sigma_e']:.4f}", style="value")
    console.print(f"Estimate written to {out}", style="title")


@app.command()
def bench(
    config: Optional[Path] = typer.Option(None, "--config", exists=True, dir_okay=False),
    out_dir: Path = typer.Option(Path("bench_out"), "--out-dir"),
    n_models: Optional[int] = typer.Option(None, "--n-models", min=1),
    n: Optional[int] = typer.Option(None, "--n", min=2),
    epsilons: Optional[str] = typer.Option(None, "--epsilons", help="Comma-separated rates"),
    estimators: Optional[str] = typer.Option(None, "--estimators", help="Comma-separated back ends"),
    target: Optional[str] = typer.Option(None, "--target"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    jobs: int = typer.Option(1, "--jobs", min=1),
) -> None:
    """Run the contamination benchmark and write its report."""
    overrides = {
        "n_models": n_models,
        "n": n,
        "epsilons": _parse_list(epsilons, float),
        "estimators": _parse_list(estimators, _parse_backend),
        "target": _parse_target(target) if target is not None else None,
        "master_seed": seed,
    }
    try:
        if config is not None:
            cfg = BenchmarkConfig.from_json(config, **overrides)
        else:
            cfg = BenchmarkConfig.from_dict({}, **overrides)
    except (ValueError, TypeError) as exc:
        raise typer.BadParameter(f"invalid benchmark config: {exc}") from exc

    progress = Progress(
        TextColumn("[label]Benchmark"),
        BarColumn(),
        TaskProgressColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        TimeRemainingColumn(),
        console=err_console,
    )
    with progress:
        task_id = progress.add_task("models", total=cfg.n_models)

        def _progress_cb(done: int, total: int) -> None:
            progress.update(task_id, completed=done, total=total)

        report = run_benchmark(cfg, jobs=jobs, progress_cb=_progress_cb)

    written = emit_report(report, out_dir)
    _render_aggregates(report)
    console.print(f"Wrote {', '.join(p.name for p in written)} to {out_dir}", style="title")


@app.command("demo-breakdown")
def demo_breakdown() -> None:
    """Print the finite counterexamples behind the zero breakdown point."""
    _render_trace(
        "One scaled observation (two nodes, SCM)", "scale", "||B-hat||_F", "", scaled_outlier_trace()
    )
    _render_trace("Ridge on T = I", "lambda", "||b||", "||t||/(1+lambda)", ridge_trace())
    _render_trace(
        "Near-singular constraint block", "t23 - 1/t32", "block condition", "flagged", singular_block_trace()
    )


def run_cli(args: Sequence[str] | None = None) -> int:
    """Run the CLI and map the outcome to an exit code (0 ok, 1 usage, 2 runtime)."""
    command = typer.main.get_command(app)
    try:
        command.main(args=list(args) if args is not None else None, prog_name="llcrobust", standalone_mode=False)
    except click.exceptions.Abort:
        err_console.print("Interrupted", style="warn")
        return 130
    except click.ClickException as exc:
        exc.show()
        return 1
    except Exception as exc:
        log.debug("command failed", exc_info=True)
        err_console.print(f"Error: {exc}", style="error")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(run_cli(sys.argv[1:]))
