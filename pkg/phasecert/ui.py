"""Rich panels and tables for the phasecert CLI"""

from typing import Any, Dict, Iterable, List, Sequence

from rich.box import HEAVY, ROUNDED
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

console = Console()


def set_quiet(quiet: bool) -> None:
    """Silence the module consoles that print progress."""
    from phasecert import cli, lemmas, oscint, parallel

    for module in (cli, lemmas, oscint, parallel):
        module.console.quiet = quiet
    console.quiet = quiet


def create_progress() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        console=console,
        transient=True,
    )


def show_success_message(title, message):
    """Show a success message"""
    console.print()
    console.print(Panel(
        f"[bold green]✅ {message}[/bold green]",
        title=f"[green]{title}[/green]",
        border_style="green",
        box=ROUNDED,
        padding=(1, 2)
    ))
    console.print()


def show_error_message(title, message):
    """Show an error message"""
    console.print()
    console.print(Panel(
        f"[bold red]❌ {message}[/bold red]",
        title=f"[red]{title}[/red]",
        border_style="red",
        box=ROUNDED,
        padding=(1, 2)
    ))
    console.print()


def show_info_message(title, message):
    """Show an info message"""
    console.print()
    console.print(Panel(
        f"[bold cyan]ℹ️  {message}[/bold cyan]",
        title=f"[cyan]{title}[/cyan]",
        border_style="cyan",
        box=ROUNDED,
        padding=(1, 2)
    ))
    console.print()


def show_diagnostic(diagnostic: Dict[str, Any]) -> None:
    """Red panel for a DiagnosticFormatter dict."""
    lines = [
        f"[bold red]{diagnostic['error_type']}[/bold red] ({diagnostic['severity']})",
        diagnostic["message"],
        "",
        f"[dim]{diagnostic['description']}[/dim]",
        f"[yellow]→ {diagnostic['suggestion']}[/yellow]",
    ]
    context = {k: v for k, v in diagnostic.get("context", {}).items() if v is not None}
    if context:
        lines.append("")
        lines.extend(f"[dim]{k}: {v}[/dim]" for k, v in context.items())
    console.print(Panel("\n".join(lines), title="[red]phasecert error[/red]", border_style="red", box=ROUNDED, padding=(1, 2)))


def create_recheck_table(sector: int, case: str, checks: Iterable[Any]) -> Table:
    table = Table(
        title=f"Sector l = {sector}, case {case}",
        show_header=True,
        header_style="bold magenta",
        box=HEAVY,
        border_style="cyan",
    )
    table.add_column("Check", style="cyan")
    table.add_column("Result", justify="center")
    table.add_column("Detail", style="dim")
    for item in checks:
        mark = "[green]✓[/green]" if item.passed else "[red]✗[/red]"
        table.add_row(item.name, mark, item.detail)
    return table


def create_lemma_table(results: Sequence[Any]) -> Table:
    table = Table(title="Property ensembles", show_header=True, header_style="bold magenta", box=HEAVY, border_style="cyan")
    table.add_column("Ensemble", style="cyan")
    table.add_column("Instances", justify="right")
    table.add_column("Failures", justify="right")
    table.add_column("Result", justify="center")
    for r in results:
        table.add_row(r.name, str(r.instances), str(r.failures), "[green]pass[/green]" if r.passed else "[red]FAIL[/red]")
    return table


def create_scan_table(per_r: List[Dict[str, Any]]) -> Table:
    table = Table(title="Kernel decay scan", show_header=True, header_style="bold magenta", box=HEAVY, border_style="cyan")
    for name in ("r", "max|K| good", "max|K| mu=nu", "|G|", "|F|", "failures"):
        table.add_column(name, justify="right")
    for e in per_r:
        table.add_row(
            f"{e['r']:g}",
            f"{e['max_abs_good']:.4g}",
            f"{e['max_abs_equal_mu']:.4g}",
            f"{e['fraction_G']:.3f}",
            f"{e['fraction_F']:.3f}",
            str(e["quadrature_failures"]),
        )
    return table


def show_outputs(paths: Sequence[Any]) -> None:
    for path in paths:
        console.print(f"  [dim]wrote[/dim] [cyan]{path}[/cyan]")
