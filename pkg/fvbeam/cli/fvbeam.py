"""Typer-based CLI for the fvbeam command."""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Optional

import typer
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from fvbeam.bench import benchmark_names, load_benchmark, mesh_sweep, run_verification
from fvbeam.cases import CaseDefinition, describe_case, load_case, serialise_case
from fvbeam.errors import CaseFileError
from fvbeam.results_io import PolylineWriter, write_case_echo, write_final_state, write_history, write_table
from fvbeam.solver import IncrementReport, run_case
from fvbeam.state import BeamState

# FVBEAM_LOG_LEVEL may come from a local .env file
load_dotenv()

app = typer.Typer(
    name="fvbeam",
    help="Finite-volume solver for geometrically exact 3-D beams",
    no_args_is_help=True,
)
console = Console()

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ABORTED = 2


def setup_logging(level: Optional[str] = None) -> None:
    """Setup logging with Rich handler."""
    level = level or os.environ.get("FVBEAM_LOG_LEVEL", "INFO")
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True)],
    )


def resolve_case(case: str) -> CaseDefinition:
    """Load a case from a file path, falling back to a checked-in benchmark name."""
    path = Path(case)
    if path.exists():
        return load_case(path)
    if case in benchmark_names():
        return load_benchmark(case)
    raise CaseFileError(f"no case file or benchmark named '{case}'")


def parse_meshes(text: str) -> list[int]:
    """Parse ``"5,10,20,40"`` into cell counts (at least three levels)."""
    try:
        meshes = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise typer.BadParameter(f"meshes must be comma-separated integers, got: {text}")
    if len(meshes) < 3:
        raise typer.BadParameter(f"a convergence study needs at least 3 mesh levels, got {len(meshes)}")
    if any(m < 2 for m in meshes):
        raise typer.BadParameter("every mesh needs at least 2 cells")
    return meshes


def get_default_output_dir(name: str) -> Path:
    """Get default output directory (cwd-relative)."""
    return Path.cwd() / "results" / name


def _summary_table(report: IncrementReport) -> Table:
    table = Table(title=f"Increment {report.index} (load factor {report.load_factor:.6g})")
    table.add_column("monitor")
    table.add_column("value", justify="right")
    for key, value in report.monitors.items():
        if key.startswith(("tip_w", "tip_psi", "crown")):
            table.add_row(key, f"{value:.6g}")
    return table


@app.command()
def run(
    case: str = typer.Argument(..., help="Case file (JSON) or the name of a checked-in benchmark"),
    out: Optional[Path] = typer.Option(
        None,
        "--out",
        "-o",
        help="Output directory (default: ./results/<case name>)",
        file_okay=False,
        dir_okay=True,
    ),
    write_every: Optional[int] = typer.Option(
        None,
        "--write-every",
        min=1,
        help="Write a deformed-shape snapshot every N increments (default: from the case file)",
    ),
    log_level: Optional[str] = typer.Option(
        None,
        "--log-level",
        help="Logging level: DEBUG, INFO, WARNING, ERROR (default: $FVBEAM_LOG_LEVEL or INFO)",
    ),
) -> None:
    """Run the load schedule of a case and write its result files."""
    setup_logging(log_level)
    logger = logging.getLogger(__name__)

    try:
        case_def = resolve_case(case)
        if write_every is not None:
            output = case_def.output.model_copy(update={"write_every": write_every})
            case_def = case_def.model_copy(update={"output": output})
        out_dir = out or get_default_output_dir(case_def.name)
        out_dir.mkdir(parents=True, exist_ok=True)
        problem = case_def.to_problem()
    except (CaseFileError, OSError) as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_ERROR)

    every = case_def.output.write_every
    total = len(problem.load_factors)
    logger.info(f"Case: {case_def.name} ({problem.mesh.n_cells} cells, {total} increments)")
    logger.info(f"Output directory: {out_dir}")

    try:
        with PolylineWriter(out_dir / "mesh.polyline") as polyline:
            written: set[int] = set()

            def snapshot(report: IncrementReport, state: BeamState) -> None:
                if report.converged and (report.index % every == 0 or report.index == total):
                    polyline.write(state, problem.geometry)
                    written.add(report.index)

            result = run_case(problem, on_increment=snapshot)
            converged = [r.index for r in result.history if r.converged]
            if not result.completed and converged and converged[-1] not in written:
                polyline.write(result.state, problem.geometry)

        write_history(out_dir / "history.csv", result.history)
        write_final_state(out_dir / "final_state.csv", result.state, problem.geometry, problem.mesh)
        last = result.history[-1] if result.history else None
        summary = {
            "completed": result.completed,
            "increments_attempted": len(result.history),
            "last_converged_load_factor": result.last_converged_load,
            "total_iterations": result.total_iterations,
            "elapsed_s": result.elapsed,
            "failure": None if last is None or last.converged else last.reason,
        }
        write_case_echo(out_dir / "case_resolved.json", serialise_case(case_def), describe_case(case_def), summary)

        if last is not None:
            console.print(_summary_table(last))
        if not result.completed:
            logger.warning(
                f"Schedule aborted at increment {last.index}; last converged load factor "
                f"{result.last_converged_load:.6g}"
            )
            raise typer.Exit(EXIT_ABORTED)
        logger.info(f"Done in {result.elapsed:.2f} s, {result.total_iterations} Newton iterations")

    except typer.Exit:
        raise
    except OSError as e:
        logger.error(f"Could not write results: {e}")
        raise typer.Exit(EXIT_ERROR)
    except Exception as e:
        logger.error(f"Run failed: {e}", exc_info=True)
        raise typer.Exit(EXIT_ERROR)


@app.command()
def verify(
    name_filter: Optional[str] = typer.Option(
        None,
        "--filter",
        "-k",
        help="Only run check groups whose name contains this text",
    ),
    log_level: Optional[str] = typer.Option(
        None,
        "--log-level",
        help="Logging level: DEBUG, INFO, WARNING, ERROR (default: $FVBEAM_LOG_LEVEL or INFO)",
    ),
) -> None:
    """Run the acceptance checks and print a pass/fail table."""
    setup_logging(log_level)
    logger = logging.getLogger(__name__)

    try:
        results = run_verification(name_filter)
    except Exception as e:
        logger.error(f"Verification failed: {e}", exc_info=True)
        raise typer.Exit(EXIT_ERROR)

    if not results:
        console.print(f"[red]Error:[/red] no check group matches '{name_filter}'")
        raise typer.Exit(EXIT_ERROR)

    table = Table(title="fvbeam verification")
    for column in ("check", "measured", "expected", "tolerance", "status", "detail"):
        table.add_column(column, justify="right" if column == "measured" else "left")
    for r in results:
        status = "[green]PASS[/green]" if r.passed else "[red]FAIL[/red]"
        table.add_row(r.name, f"{r.measured:.6g}", r.expected, r.tolerance, status, r.detail)
    console.print(table)

    failed = [r.name for r in results if not r.passed]
    console.print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    raise typer.Exit(EXIT_OK if not failed else EXIT_ERROR)


@app.command()
def convergence(
    case: str = typer.Argument(..., help="Case file (JSON) or the name of a checked-in benchmark"),
    meshes: str = typer.Option("5,10,20,40", "--meshes", "-m", help="Comma-separated cell counts"),
    reference: Optional[int] = typer.Option(
        None,
        "--reference",
        "-r",
        help="Cell count of the reference run (default: closed-form solution where one exists)",
    ),
    quantities: str = typer.Option(
        "tip_wx,tip_wy,tip_wz",
        "--quantities",
        "-q",
        help="Comma-separated monitor keys to compare",
    ),
    jobs: int = typer.Option(1, "--jobs", "-j", min=1, help="Worker processes for the mesh levels"),
    out: Optional[Path] = typer.Option(
        None,
        "--out",
        "-o",
        help="Output directory (default: ./results/<case name>)",
        file_okay=False,
        dir_okay=True,
    ),
    log_level: Optional[str] = typer.Option(
        None,
        "--log-level",
        help="Logging level: DEBUG, INFO, WARNING, ERROR (default: $FVBEAM_LOG_LEVEL or INFO)",
    ),
) -> None:
    """Mesh-convergence study: errors against a reference and the fitted order."""
    setup_logging(log_level)
    logger = logging.getLogger(__name__)

    try:
        levels = parse_meshes(meshes)
    except typer.BadParameter as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_ERROR)
    keys = [q.strip() for q in quantities.split(",") if q.strip()]

    try:
        case_def = resolve_case(case)
        out_dir = out or get_default_output_dir(case_def.name)
        out_dir.mkdir(parents=True, exist_ok=True)
    except (CaseFileError, OSError) as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_ERROR)

    try:
        result = mesh_sweep(case_def, levels, quantities=keys, reference=reference, jobs=jobs)
    except ValueError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_ERROR)
    except Exception as e:
        logger.error(f"Convergence study failed: {e}", exc_info=True)
        raise typer.Exit(EXIT_ERROR)

    header = ["mesh", "h", "completed", "elapsed_s"]
    for q in keys:
        header += [q, f"{q}_error_pct", f"{q}_order"]
    rows = []
    for k, cells in enumerate(result.meshes):
        row: list[object] = [cells, result.spacings[k], int(result.completed[k]), result.elapsed[k]]
        for q in keys:
            errors = result.errors.get(q)
            order = result.orders.get(q)
            row += [
                result.values[k].get(q, ""),
                errors[k] if errors else "",
                order if order is not None else "",
            ]
        rows.append(row)
    write_table(out_dir / "convergence.csv", header, rows)

    table = Table(title=f"Convergence of {result.case}")
    table.add_column("quantity")
    table.add_column("reference", justify="right")
    table.add_column("errors (%)")
    table.add_column("order", justify="right")
    for q in keys:
        ref = result.reference.get(q)
        errors = result.errors.get(q, ())
        order = result.orders.get(q)
        table.add_row(
            q,
            "-" if ref is None else f"{ref:.6g}",
            ", ".join(f"{e:.3g}" for e in errors) or "-",
            "-" if order is None else f"{order:.2f}",
        )
    console.print(table)

    if not all(result.completed):
        logger.warning("Some mesh levels did not complete their schedule")
        raise typer.Exit(EXIT_ABORTED)


@app.command("cases")
def list_cases() -> None:
    """List the checked-in benchmark cases."""
    table = Table(title="Benchmark cases")
    table.add_column("name")
    table.add_column("cells", justify="right")
    table.add_column("increments", justify="right")
    table.add_column("description")
    for name in benchmark_names():
        case_def = load_benchmark(name)
        table.add_row(name, str(case_def.mesh.cells), str(len(case_def.load_factors())), case_def.description)
    console.print(table)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
