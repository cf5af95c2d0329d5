"""Main CLI interface for phasecert"""

import sys
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import Optional

import click
import numpy as np
from rich.console import Console
from rich.panel import Panel

from phasecert.__version__ import VERSION_INFO, __version__
from phasecert.coeffcalc import ChangeOfVars, expand_phase_in_sigma
from phasecert.config import LoadedConfig, load_config, sectors, stopping_value
from phasecert.errors import PhaseCertError, exit_code_for
from phasecert.lemmas import run_all
from phasecert.matrixcert import build_matrices, certify
from phasecert.oscint import QuadratureSettings, kernel_decay_scan, sublevel_bound, sublevel_measure, vdc_scan
from phasecert.parallel import ParallelMapper
from phasecert.polyring import parse_poly
from phasecert.quadform import StoppingValue, require_admissible
from phasecert.reports import (
    certificate_document,
    lemma_report,
    write_certificate,
    write_diagnostics,
    write_expansion,
    write_lemma_report,
    write_table,
)
from phasecert.schemas import SUBCOMMANDS, Diagnostic, KernelScanConfig, RunConfig
from phasecert.ui import (
    create_lemma_table,
    create_progress,
    create_recheck_table,
    create_scan_table,
    set_quiet,
    show_diagnostic,
    show_error_message,
    show_info_message,
    show_outputs,
    show_success_message,
)

console = Console()


def config_option(required: bool = True):
    return click.option("--config", "-c", "config_path", type=click.Path(dir_okay=False), required=required,
                        help="YAML config with family and run sections")


def out_option():
    return click.option("--out", "-o", "out_dir", type=click.Path(file_okay=False), default="./phasecert_out",
                        show_default=True, help="Output directory")


def seed_option():
    return click.option("--seed", type=int, default=None, help="Seed for randomized ensembles (overrides run.seed)")


@contextmanager
def guarded(out_dir: str):
    """Render PhaseCertErrors as diagnostics and exit with their status."""
    try:
        yield
    except PhaseCertError as exc:
        diagnostic = exc.to_diagnostic()
        code = exit_code_for(exc)
        show_diagnostic(diagnostic)
        write_diagnostics(Path(out_dir), Diagnostic(**diagnostic, exit_code=code))
        sys.exit(code)


def _settings(run: RunConfig) -> QuadratureSettings:
    return QuadratureSettings(rel_tol=run.tolerance, max_depth=run.max_depth, base_nodes=run.base_nodes)


def _load(config_path: Optional[str]) -> Optional[LoadedConfig]:
    return load_config(config_path) if config_path else None


@click.group()
@click.version_option(version=__version__, prog_name="phasecert")
@click.option("--quiet", "-q", is_flag=True, default=False, help="Suppress progress output")
def main(quiet):
    """phasecert - certificates and numerical checks for polynomial-phase kernels

    Run 'phasecert certify -c family.yaml' to certify a family, or
    'phasecert run -c config.yaml' to dispatch on run.subcommand.
    """
    set_quiet(quiet)


@main.command()
def version():
    """Show phasecert version and feature information"""
    console.print()
    console.print(Panel(
        f"[bold cyan]{VERSION_INFO['name']}[/bold cyan] [yellow]v{__version__}[/yellow]\n"
        f"[dim]{VERSION_INFO['description']}[/dim]",
        border_style="cyan",
        padding=(1, 2)
    ))

    console.print("\n[bold]Features:[/bold]")
    for feature in VERSION_INFO['features']:
        console.print(f"  ✓ {feature}")

    console.print(f"\n[dim]Author: {VERSION_INFO['author']} | License: {VERSION_INFO['license']}[/dim]")
    console.print()


@main.command(name="certify")
@config_option()
@out_option()
@seed_option()
def certify_cmd(config_path, out_dir, seed):
    """Certify the family at run.nu in every requested sector"""
    with guarded(out_dir):
        config = load_config(config_path)
        family = config.require_family()
        run = config.run
        if run.gate:
            require_admissible(family)
        stopping = stopping_value(config)
        console.print(Panel.fit(
            f"[bold cyan]Certifying {family.n}-variable family, Λ = {list(family.degrees)}[/bold cyan]",
            border_style="cyan",
        ))

        def one(l: int):
            cov = ChangeOfVars(family.q, l)
            bundle = build_matrices(family, cov, enforce_gate=run.gate)
            return certify(family, stopping, cov, enforce_gate=run.gate, bundle=bundle)

        certificates = ParallelMapper(run.workers).map(one, sectors(config))
        failed = []
        out = Path(out_dir)
        for cert in certificates:
            doc = certificate_document(cert, config.config_sha256)
            show_outputs(write_certificate(out, doc))
            console.print(create_recheck_table(cert.sector, cert.case.value, cert.checks))
            if not doc.passed:
                failed.append(cert.sector)
        if failed:
            show_error_message("Re-check failed", f"sectors {failed} did not pass the independent re-check")
            sys.exit(2)
        show_success_message("Certified", f"{len(certificates)} sector(s) certified and re-checked")


@main.command()
@config_option()
@out_option()
def expand(config_path, out_dir):
    """Write the B/D/E sigma-expansion of the family per sector"""
    with guarded(out_dir):
        config = load_config(config_path)
        family = config.require_family()
        paths = []
        for l in sectors(config):
            expansion = expand_phase_in_sigma(family, ChangeOfVars(family.q, l), enforce_gate=config.run.gate)
            paths.append(write_expansion(Path(out_dir), expansion))
        show_outputs(paths)
        show_success_message("Expanded", f"{len(paths)} sector(s) written")


@main.command(name="check-lemmas")
@config_option(required=False)
@out_option()
@seed_option()
def check_lemmas(config_path, out_dir, seed):
    """Run the seeded property ensembles"""
    with guarded(out_dir):
        config = _load(config_path)
        run = config.run if config else RunConfig()
        seed = run.seed if seed is None else seed
        rng = np.random.default_rng(seed)
        mapper = ParallelMapper(run.workers, processes=True)
        with create_progress() as progress:
            task = progress.add_task("[cyan]Running ensembles...", total=None)
            results = run_all(
                rng,
                run.ensembles.model_dump(),
                mapper,
                progress=lambda name: progress.update(task, description=f"[cyan]{name}"),
            )
        console.print(create_lemma_table(results))
        report = lemma_report(results, seed, config.config_sha256 if config else None)
        show_outputs(write_lemma_report(Path(out_dir), report))
        if not report.passed:
            show_error_message("Lemma checks failed", "see lemmas.json for the failing instances")
            sys.exit(2)
        show_success_message("Lemma checks", f"all {len(results)} ensembles passed")


@main.command(name="kernel-scan")
@config_option()
@out_option()
@seed_option()
@click.option("--no-certificate", is_flag=True, default=False, help="Scan without bad sets (negative control)")
def kernel_scan(config_path, out_dir, seed, no_certificate):
    """Scan max |K_sharp| over r with certificate-driven bad sets"""
    with guarded(out_dir):
        config = load_config(config_path)
        family = config.require_family()
        run = config.run
        seed = run.seed if seed is None else seed
        if not run.nu:
            raise click.UsageError("run.nu gives the scan direction and is required")
        sector = 1 if run.sector == "all" else int(run.sector)
        cert = None
        if run.gate:
            require_admissible(family)
        if run.gate and not no_certificate:
            direction = {j: Fraction(v) for j, v in run.nu.items()}
            stopping = StoppingValue.from_direction(Fraction(1), direction)
            cert = certify(family, stopping, ChangeOfVars(family.q, sector - 1))
            console.print(f"[green]✓ certificate: case {cert.case.value}, gamma {list(cert.gamma)}[/green]")
        elif not run.gate:
            show_info_message("Negative control", "admissibility gate disabled: scanning without bad sets")
        scan_cfg = KernelScanConfig.from_run(run, sector)
        report = kernel_decay_scan(
            scan_cfg,
            family,
            cert,
            np.random.default_rng(seed),
            mapper=ParallelMapper(run.workers),
            settings=_settings(run),
        )
        report.summary["seed"] = seed
        report.summary["config_sha256"] = config.config_sha256
        report.summary["family_sha256"] = config.family_sha256
        report.summary["version"] = __version__
        console.print(create_scan_table(report.summary["per_r"]))
        show_outputs(write_table(Path(out_dir), "kernel_scan", report.rows, report.summary))
        show_success_message("Kernel scan", f"slope outside bad sets {report.summary['slope_good']:.4g}")


@main.command(name="vdc-scan")
@config_option(required=False)
@out_option()
def vdc_scan_cmd(config_path, out_dir):
    """Fit the van der Corput decay of |int e^{i lambda Q}| and estimate a sublevel set"""
    with guarded(out_dir):
        config = _load(config_path)
        run = config.run if config else RunConfig()
        settings = _settings(run) if config else QuadratureSettings.from_env()
        base = parse_poly(run.vdc_phase, run.vdc_nvars)
        frame, summary = vdc_scan(base, run.lambdas, box=run.vdc_box, settings=settings)
        estimate = sublevel_measure(base, run.rho, run.grid)
        summary.update({
            "version": __version__,
            "phase": base.to_text([f"x{i + 1}" for i in range(base.nvars)]),
            "sublevel_rho": run.rho,
            "sublevel_measure": estimate.measure,
            "sublevel_resolution": estimate.resolution,
            "sublevel_bound": sublevel_bound(base, run.rho),
            "config_sha256": config.config_sha256 if config else None,
        })
        console.print(f"[dim]fitted slope {summary['slope']:.4f} (expected {summary['expected_slope']:.4f})[/dim]")
        show_outputs(write_table(Path(out_dir), "vdc_scan", frame, summary))
        if not summary["passed"]:
            show_error_message("vdc scan", "fitted slope is flatter than -1/d")
            sys.exit(2)
        show_success_message("vdc scan", f"slope {summary['slope']:.4f}")


@main.command(name="run")
@config_option()
@out_option()
@seed_option()
@click.option("--subcommand", "-s", type=click.Choice(SUBCOMMANDS), default=None, help="Overrides run.subcommand")
@click.pass_context
def run_cmd(ctx, config_path, out_dir, seed, subcommand):
    """Dispatch on run.subcommand (or --subcommand)"""
    with guarded(out_dir):
        name = subcommand or load_config(config_path).run.subcommand
    if name is None:
        raise click.UsageError("no subcommand: set run.subcommand or pass --subcommand")
    target = main.get_command(ctx, name)
    kwargs = {"config_path": config_path, "out_dir": out_dir}
    if "seed" in [p.name for p in target.params]:
        kwargs["seed"] = seed
    ctx.invoke(target, **kwargs)


if __name__ == "__main__":
    main()
