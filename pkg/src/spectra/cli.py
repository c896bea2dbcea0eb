"""Command-line entry points.

Exit codes: 0 success, 1 usage or run-level failure, 2 environment problem
(missing toolchain, unreachable provider), 3 run completed only partially.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import errors
from .config import AppConfig, load_config
from .corpus import load_corpus, load_program
from .csource import analyze
from .model import Language, Modality, aggregate_pass_at_k
from .provider.base import RecordingProvider
from .report import attribute, render_attribution, render_report, report_json
from .specgen import generate_until_valid
from .specval import validator_for
from .store import RunStore, SpecStore
from .translate import run_corpus, verify_stage_shape
from .project import ProjectManifest, ProjectRunner
from .project.build import combine_rust, copy_tree, splice_functions


def _store(config: AppConfig) -> SpecStore:
    return SpecStore(Path(config.store_dir))


def _runs(config: AppConfig) -> RunStore:
    return RunStore(Path(config.store_dir))


@click.group()
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              default=None, help="JSON config file (default: $SPECTRA_CONFIG).")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
              help="Override one config key; repeatable.")
@click.pass_context
def cli(ctx: click.Context, config_path: Path | None, overrides: tuple[str, ...]):
    """Specification-driven code translation."""
    parsed = {}
    for item in overrides:
        if "=" not in item:
            raise click.UsageError(f"--set takes KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        parsed[key.strip()] = value
    ctx.obj = load_config(config_path, parsed)


@cli.command("show-config")
@click.pass_obj
def show_config(config: AppConfig):
    """Print the effective configuration."""
    click.echo(json.dumps(config.as_dict(), indent=2))


@cli.command()
@click.pass_obj
def doctor(config: AppConfig):
    """Check toolchains and provider setup; --set provider=live checks keys."""
    sandbox = config.make_sandbox()
    missing = []
    for language in Language:
        try:
            sandbox.require(language)
        except errors.ToolchainMissing as exc:
            missing.append(language)
            click.echo(f"{language.value:<12} MISSING  ({exc.hint})")
        else:
            click.echo(f"{language.value:<12} ok")
    try:
        config.make_provider()
    except errors.SpectraError as exc:
        click.echo(f"provider     MISSING  ({exc})")
        raise errors.EnvironmentProblem(str(exc))
    click.echo(f"provider     ok ({config.provider})")
    if missing:
        raise errors.EnvironmentProblem(
            "missing toolchains: " + ", ".join(l.value for l in missing)
        )


_MODALITY_CHOICES = ["all"] + [m.value for m in Modality]


@cli.command("gen-specs")
@click.argument("corpus_dir", type=click.Path(exists=True, path_type=Path))
@click.option("--modality", type=click.Choice(_MODALITY_CHOICES), default="all")
@click.pass_obj
def gen_specs(config: AppConfig, corpus_dir: Path, modality: str):
    """Generate and validate specs for every program in a corpus.

    Every candidate is stored with its validation status; generation for a
    modality stops at the first accepted candidate.
    """
    wanted = list(Modality) if modality == "all" else [Modality.parse(modality)]
    programs = load_corpus(corpus_dir)
    provider = config.make_provider()
    sandbox = config.make_sandbox()
    library = config.make_library()
    store = _store(config)
    budget = config.budget()
    accepted = 0
    for program in programs:
        for m in wanted:
            def observer(spec, outcome, program_id=program.program_id):
                store.save(program_id, outcome.spec)

            validator = validator_for(m, program, provider, sandbox, library)
            spec = generate_until_valid(
                program, m, budget, provider, validator, library,
                observer=observer,
            )
            verdict = "accepted" if spec else "exhausted"
            if spec:
                accepted += 1
            click.echo(f"{program.program_id} {m.value}: {verdict}")
    click.echo(f"accepted {accepted} specs into {store.root}")


@cli.command()
@click.argument("corpus_dir", type=click.Path(exists=True, path_type=Path))
@click.pass_obj
def validate(config: AppConfig, corpus_dir: Path):
    """Re-check the stored best spec of every program against its program.

    An audit pass: reported, never silently rewritten.  Exits nonzero when
    a stored spec no longer validates.
    """
    programs = {p.program_id: p for p in load_corpus(corpus_dir)}
    provider = config.make_provider()
    sandbox = config.make_sandbox()
    library = config.make_library()
    store = _store(config)
    stale = 0
    for program_id in store.programs():
        program = programs.get(program_id)
        if program is None:
            click.echo(f"{program_id}: not in corpus, skipped")
            continue
        for m in Modality:
            spec = store.load(program_id, m)
            if spec is None:
                continue
            outcome = validator_for(m, program, provider, sandbox, library)(spec)
            status = "ok" if outcome.accepted else f"STALE ({outcome.reason})"
            stale += 0 if outcome.accepted else 1
            click.echo(f"{program_id} {m.value}: {status}")
    if stale:
        raise errors.UsageError(f"{stale} stored specs failed re-validation")
    click.echo("all stored specs validate")


@cli.command()
@click.argument("corpus_dir", type=click.Path(exists=True, path_type=Path))
@click.option("--baseline-run", default=None,
              help="Earlier run id to show as the baseline column.")
@click.pass_obj
def translate(config: AppConfig, corpus_dir: Path, baseline_run: str | None):
    """Translate a corpus using stored specs; writes a numbered run."""
    programs = load_corpus(corpus_dir)
    provider = RecordingProvider(config.make_provider())
    sandbox = config.make_sandbox()
    library = config.make_library()
    store = _store(config)
    runs = _runs(config)
    pipeline = config.pipeline()
    specs = {p.program_id: store.load_set(p.program_id) for p in programs}
    handle = runs.new_run("translate", config.as_dict())
    outcome = run_corpus(
        programs, specs, pipeline, provider, sandbox, library,
        workers=config.workers, progress=handle.append_result,
    )
    for request, response in provider.log:
        handle.append_request(request, response.provider_id)
    for result in outcome.results:
        verify_stage_shape(result, specs[result.program_id], pipeline)
    baseline = runs.load_results(baseline_run) if baseline_run else None
    report = outcome.report(pipeline.k_max, baseline=baseline)
    handle.write_report(report)
    click.echo(f"run {handle.run_id}")
    click.echo(render_report(report))
    if outcome.incomplete:
        raise errors.RunIncomplete(
            f"{len(outcome.incomplete)} of {len(programs)} programs "
            "did not finish; see the run's results"
        )


@cli.command()
@click.argument("manifest_path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="Write the migrated tree (C callers + Rust crate) here.")
@click.pass_obj
def project(config: AppConfig, manifest_path: Path, out_dir: Path | None):
    """Translate a whole C project function-by-function."""
    manifest = ProjectManifest.load(manifest_path)
    provider = config.make_provider()
    runner = ProjectRunner(
        manifest, provider,
        library=config.make_library(),
        k_max=config.k_max,
        repair_rounds=config.repair_rounds,
        budget=config.budget(),
        limits=config.limits(),
    )
    result = runner.run()
    runs = _runs(config)
    handle = runs.new_run("project", config.as_dict())
    for outcome in result.functions:
        if outcome.stages is not None:
            handle.append_result(outcome.stages)
        click.echo(f"{outcome.name}: {outcome.status.value}"
                   + (f" ({outcome.reason})" if outcome.reason else ""))
    handle.write_report(result.report)
    click.echo(f"run {handle.run_id}")
    click.echo(render_report(result.report))
    if out_dir is not None:
        _materialize(manifest, result, out_dir)
        click.echo(f"migrated tree written to {out_dir}")


def _materialize(manifest: ProjectManifest, result, dest: Path) -> None:
    """Splice the accepted translations into a copy of the project."""
    translations = result.translations()
    if not translations:
        raise errors.UsageError("no passing translations to write out")
    copy_tree(manifest.root, dest)
    by_file: dict[str, list] = {}
    for rel in manifest.entry_sources:
        text = (manifest.root / rel).read_text(encoding="utf-8")
        for unit in analyze(text):
            if unit.name in translations:
                by_file.setdefault(rel, []).append(unit)
    for rel, units in by_file.items():
        path = dest / rel
        path.write_text(
            splice_functions(path.read_text(encoding="utf-8"), units),
            encoding="utf-8",
        )
    (dest / "translations.rs").write_text(
        combine_rust(translations), encoding="utf-8"
    )


@cli.command()
@click.argument("run_id")
@click.option("--baseline-run", default=None,
              help="Another run id to compare against.")
@click.option("--as-json", is_flag=True, default=False)
@click.pass_obj
def report(config: AppConfig, run_id: str, baseline_run: str | None, as_json: bool):
    """Print a finished run's pass@k table."""
    runs = _runs(config)
    if baseline_run:
        results = runs.load_results(run_id)
        baseline = runs.load_results(baseline_run)
        k_max = int(runs.load_config(run_id).get("k_max", 3))
        table = aggregate_pass_at_k(results, k_max=k_max, baseline=baseline)
    else:
        table = runs.load_report(run_id)
    click.echo(json.dumps(report_json(table), indent=2) if as_json
               else render_report(table, title=run_id))


@cli.command()
@click.argument("run_ids", nargs=-1, required=True)
@click.option("--k", default=1, show_default=True)
@click.option("--as-json", is_flag=True, default=False)
@click.pass_obj
def attribution(config: AppConfig, run_ids: tuple[str, ...], k: int, as_json: bool):
    """Which runs solved which programs: disjoint regions summing to the corpus."""
    runs = _runs(config)
    labeled = {run_id: runs.load_results(run_id) for run_id in run_ids}
    result = attribute(labeled, k=k)
    if as_json:
        regions = {
            " + ".join(region) if region else "none": count
            for region, count in result.regions.items()
        }
        click.echo(json.dumps(
            {"k": result.k, "total": result.total, "regions": regions}, indent=2
        ))
    else:
        click.echo(render_attribution(result))


@cli.command("show-program")
@click.argument("problem_dir", type=click.Path(exists=True, path_type=Path))
def show_program(problem_dir: Path):
    """Describe one problem directory: language, functions, tests."""
    program = load_program(problem_dir)
    click.echo(f"{program.program_id}: {program.language.value}, "
               f"{len(program.functions)} functions, {len(program.tests)} tests")
    for fn in program.functions:
        click.echo(f"  {fn.name}  callees={sorted(fn.callees) or '-'}")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, obj=None)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except errors.EnvironmentProblem as exc:
        click.echo(f"environment: {exc}", err=True)
        return 2
    except errors.RunIncomplete as exc:
        click.echo(f"incomplete: {exc}", err=True)
        return 3
    except errors.SpectraError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
