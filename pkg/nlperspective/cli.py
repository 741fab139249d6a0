import csv
import functools
import json
import os
import sys
from typing import Any, Callable, Dict, List, Optional

import click
import numpy as np
from dbt.adapters.events.logging import AdapterLogger

from nlperspective.__version__ import version
from nlperspective.config import Command, JobConfig, PairSpec, load_job, load_preset, preset_names
from nlperspective.exceptions import ConfigParse, NLPerspectiveError, VerificationFailed, exception_handler
from nlperspective.extreal import render
from nlperspective.funcs import Norm
from nlperspective.perspective import (
    Branch,
    Perspective,
    convexity_conditions,
    oracle_check,
    perspective_convergence,
    perspective_report,
    preperspective_conjugate_values,
    preperspective_values,
)

logger = AdapterLogger("nlperspective")


def _emit_error(exc: NLPerspectiveError) -> None:
    click.echo(f"Error: {getattr(exc, 'msg', exc)}", err=True)


def handles_errors(fn: Callable) -> Callable:
    """Map library errors onto exit codes: 2 for configuration, 3 for hypotheses."""

    @functools.wraps(fn)
    @click.pass_context
    def wrapper(ctx: click.Context, *args: Any, **kwargs: Any) -> Any:
        try:
            with exception_handler(f"nlperspective {ctx.info_name}"):
                return fn(*args, **kwargs)
        except NLPerspectiveError as exc:
            _emit_error(exc)
            ctx.exit(exc.exit_code)

    return wrapper


def job_options(fn: Callable) -> Callable:
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON job document."),
        click.option("--preset", type=str, help="Packaged job document."),
        click.option("--norm", type=click.Choice([str(n) for n in Norm]), help="Override the norm of every family."),
        click.option("--output-dir", type=click.Path(file_okay=False), help="Where CSV/JSON outputs go."),
        click.option("--tolerance", type=float, help="Verification tolerance."),
        click.option(
            "--debug-branch",
            type=click.Choice([str(b) for b in Branch]),
            help="Force a branch without re-checking its hypotheses.",
        ),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def resolve_job(
    command: Command,
    config_path: Optional[str],
    preset: Optional[str],
    norm: Optional[str],
    output_dir: Optional[str],
    tolerance: Optional[float],
    debug_branch: Optional[str],
) -> JobConfig:
    if config_path and preset:
        raise ConfigParse("Pass either --config or --preset, not both")
    if config_path:
        job = load_job(config_path)
    elif preset:
        job = load_preset(preset)
    else:
        raise ConfigParse("A job needs --config or --preset")
    job = job.overridden(
        command=str(command), norm=norm, output_dir=output_dir, tolerance=tolerance, debug_branch=debug_branch
    )
    logger.info(f"Running {command} job {job.name!r} with {len(job.pairs)} pair(s)")
    return job


def _model(job: JobConfig, pair: PairSpec) -> Perspective:
    phi, s = job.build_pair(pair)
    if job.debug_branch:
        return Perspective(phi, s, job.grids, Branch(job.debug_branch), unchecked=True)
    return Perspective(phi, s, job.grids)


def _coords(prefix: str, dim: int) -> List[str]:
    return [f"{prefix}{k}" for k in range(dim)]


def _metadata(job: JobConfig, pair: PairSpec) -> Dict[str, Any]:
    return {
        "norm": str(job.norm or Norm.euclidean),
        "params": {"phi": pair.phi.to_dict(omit_none=True), "s": pair.s.to_dict(omit_none=True)},
        "grid": job.surface.to_dict() if job.surface is not None else None,
        "version": version,
    }


@click.group()
@click.version_option(version, prog_name="nlperspective")
def cli() -> None:
    """Perspective functions with nonlinear scaling."""


@cli.command("eval")
@job_options
@handles_errors
def cmd_eval(**options: Any) -> None:
    """Preperspective, perspective, branch and conjugate at the configured points."""
    job = resolve_job(Command.eval, **options)
    if not job.points:
        raise ConfigParse("eval needs at least one point")
    for pair in job.pairs:
        model = _model(job, pair)
        X = np.asarray([p.x for p in job.points], dtype=float)
        Y = np.asarray([p.y for p in job.points], dtype=float)
        pre = preperspective_values(model.phi, model.s, X, Y)
        persp = model.values(X, Y)
        click.echo(f"[{pair.name}] branch {model.branch}")
        for point, a, b in zip(job.points, pre, persp):
            line = f"  x={point.x} y={point.y} prepersp={render(a)} persp={render(b)}"
            if point.xstar is not None and point.ystar is not None:
                conj = preperspective_conjugate_values(
                    model.phi, model.s, [point.xstar], [point.ystar], job.grids.scaling
                )[0]
                line += f" conj({point.xstar},{point.ystar})={render(conj)}"
            click.echo(line)


def _write_pair_surface(job: JobConfig, pair: PairSpec) -> str:
    model = _model(job, pair)
    spec = job.surface
    dx = model.phi.dim
    nodes = spec.nodes()
    X, Y = nodes[:, :dx], nodes[:, dx:]
    pre = preperspective_values(model.phi, model.s, X, Y)
    persp = model.values(X, Y)
    base = os.path.join(job.output_dir, f"{job.name}_{pair.name}")
    header = _coords("x", dx) + _coords("y", model.s.dim) + ["prepersp", "persp", "branch"]
    with open(f"{base}.csv", "w", newline="", encoding="utf8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for node, a, b in zip(nodes, pre, persp):
            writer.writerow([repr(float(c)) for c in node] + [render(a), render(b), str(model.branch)])
    document = {
        "metadata": _metadata(job, pair),
        "branch": str(model.branch),
        "columns": header[:-1],
        "rows": [[float(c) for c in node] + [render(a), render(b)] for node, a, b in zip(nodes, pre, persp)],
    }
    with open(f"{base}.json", "w", encoding="utf8") as f:
        json.dump(document, f, indent=1)
    logger.info(f"Wrote {base}.csv and {base}.json ({spec.size} nodes, branch {model.branch})")
    return base


def _write_functions(job: JobConfig) -> str:
    spec = job.function_grid
    if spec is None:
        raise ConfigParse("functions need a function_grid")
    handles = [f.build(job.norm) for f in job.functions]
    nodes = spec.nodes()
    columns = [h.values(nodes) for h in handles]
    largest = np.max(np.vstack(columns), axis=0)
    path = os.path.join(job.output_dir, f"{job.name}_functions.csv")
    with open(path, "w", newline="", encoding="utf8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(_coords("x", spec.dim) + [h.name for h in handles] + ["max"])
        for i, node in enumerate(nodes):
            writer.writerow([repr(float(c)) for c in node] + [render(col[i]) for col in columns] + [render(largest[i])])
    logger.info(f"Wrote {path}")
    return path


@cli.command("surface")
@job_options
@handles_errors
def cmd_surface(**options: Any) -> None:
    """Paired preperspective/perspective grids as CSV and JSON."""
    job = resolve_job(Command.surface, **options)
    os.makedirs(job.output_dir, exist_ok=True)
    if job.functions:
        click.echo(_write_functions(job))
    if job.pairs and job.surface is None:
        raise ConfigParse("surface needs a surface grid")
    for pair in job.pairs:
        click.echo(_write_pair_surface(job, pair))


@cli.command("verify")
@job_options
@handles_errors
def cmd_verify(**options: Any) -> None:
    """Closed form against the oracle biconjugate; exit 1 when any pair fails."""
    job = resolve_job(Command.verify, **options)
    if job.grids.joint is None:
        raise ConfigParse("verify needs grids.joint")
    failed = 0
    for pair in job.pairs:
        phi, s = job.build_pair(pair)
        branch = Branch(job.debug_branch) if job.debug_branch else None
        check = oracle_check(
            phi, s, job.grids.joint, job.grids.joint_dual, job.margin, job.window,
            branch=branch, unchecked=branch is not None, tolerance=job.tolerance,
        )
        verdict = "PASS" if check.passed else "FAIL"
        click.echo(
            f"[{pair.name}] {verdict} branch={check.branch} max_error={check.max_error:.3e} "
            f"tolerance={job.tolerance:.3e} nodes={check.nodes_compared}"
        )
        failed += not check.passed
    if failed:
        raise VerificationFailed(f"{failed} of {len(job.pairs)} pair(s) exceed the tolerance")


@cli.command("classify")
@job_options
@handles_errors
def cmd_classify(**options: Any) -> None:
    """Sign class, cam status, branch and convexity conditions as JSON."""
    job = resolve_job(Command.classify, **options)
    out = {}
    for pair in job.pairs:
        phi, s = job.build_pair(pair)
        report = perspective_report(phi, s, job.grids)
        conditions = convexity_conditions(phi, s, job.grids.scaling)
        out[pair.name] = {
            **report.to_dict(),
            "convexity_conditions": {tag: str(status) for tag, status in conditions.conditions.items()},
        }
    click.echo(json.dumps(out, indent=2, sort_keys=True))


@cli.command("convergence")
@job_options
@handles_errors
def cmd_convergence(**options: Any) -> None:
    """Oracle error of the closed form over grid refinements, as JSON."""
    job = resolve_job(Command.convergence, **options)
    if job.grids.joint is None:
        raise ConfigParse("convergence needs grids.joint")
    out = {}
    for pair in job.pairs:
        phi, s = job.build_pair(pair)
        report = perspective_convergence(
            phi, s, job.grids.joint, job.grids.joint_dual, job.refinements, job.margin, job.window
        )
        out[pair.name] = report.to_dict()
    click.echo(json.dumps(out, indent=2, sort_keys=True))


@cli.command("presets")
def cmd_presets() -> None:
    """List the packaged job documents."""
    for name in preset_names():
        click.echo(name)


def main(argv: Optional[List[str]] = None) -> int:
    result = cli.main(args=argv, prog_name="nlperspective", standalone_mode=False)
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(main())
