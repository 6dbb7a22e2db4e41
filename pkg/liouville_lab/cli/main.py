# cli/main.py
import sys
import time

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Optional

import typer
from dotenv import load_dotenv

# Load .env before the settings are read
load_dotenv()

from pydantic import ValidationError

from liouville_lab.core.config import settings
from liouville_lab.core.exceptions import ExperimentConfigError, LiouvilleLabError
from liouville_lab.core.logging import log_error, log_experiment, setup_logging
from liouville_lab.core.types import Verdict
from liouville_lab.cli.dumps import dump_app
from liouville_lab.cli.experiments import ExperimentConfig, ExperimentKind
from liouville_lab.cli.output import write_csv, write_result
from liouville_lab.cli.registry import ExperimentRegistry

app = typer.Typer(help="Spectral experiments on model manifolds.", no_args_is_help=False)
run_app = typer.Typer(help="Run one experiment kind.")
app.add_typer(run_app, name="run")
app.add_typer(dump_app, name="dump")

EXIT_CODES = {Verdict.PASS: 0, Verdict.INCONCLUSIVE: 0, Verdict.FAIL: 2}


def load_config(
    kind: ExperimentKind, path: Optional[Path], overrides: Dict[str, Any]
) -> ExperimentConfig:
    """TOML file fields, then non-empty flag overrides, validated as one config."""
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as handle:
                data = tomllib.load(handle)
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ExperimentConfigError(f"cannot read config {path}: {e}") from e
    file_kind = data.get("kind", kind.value)
    if file_kind != kind.value:
        raise ExperimentConfigError(f"config is for '{file_kind}', not '{kind.value}'")
    data["kind"] = kind.value
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        messages = "; ".join(err["msg"] for err in e.errors())
        raise ExperimentConfigError(f"invalid {kind.value} config: {messages}") from e


def run_experiment(config: ExperimentConfig) -> int:
    settings.THREADS = config.threads
    experiment = ExperimentRegistry.get(config.kind.value)(config)
    log_experiment(config.kind.value, seed=config.seed, threads=config.threads)
    started = time.perf_counter()
    result = experiment.run()
    wall_time = time.perf_counter() - started
    if config.out:
        csv_path, meta = write_result(config.out, config, result, wall_time)
        typer.echo(f"wrote {csv_path} and {meta}")
    else:
        write_csv(typer.get_text_stream("stdout"), result)
    typer.echo(f"verdict: {result.verdict.value}")
    log_experiment(config.kind.value, verdict=result.verdict.value, wall_time_s=wall_time)
    return EXIT_CODES[result.verdict]


def _command(kind: ExperimentKind):
    def command(
        config: Optional[Path] = typer.Option(None, "--config", help="TOML config file"),
        seed: Optional[int] = typer.Option(None, "--seed"),
        threads: Optional[int] = typer.Option(None, "--threads"),
        out: Optional[str] = typer.Option(None, "--out", help="CSV path; a .meta.json sidecar is written next to it"),
        manifold: Optional[str] = typer.Option(None, "--manifold", help="s2, s4, s6, t2, t4 or s2xs2"),
        cutoff: Optional[int] = typer.Option(None, "--cutoff"),
        gamma: Optional[float] = typer.Option(None, "--gamma"),
        n: Optional[int] = typer.Option(None, "--n", help="sample count"),
    ):
        overrides = {
            "seed": seed,
            "threads": threads,
            "out": out,
            "manifold": manifold,
            "cutoff": cutoff,
            "gamma": gamma,
            "n": n,
        }
        try:
            code = run_experiment(load_config(kind, config, overrides))
        except (LiouvilleLabError, ValidationError) as e:
            log_error(e, {"kind": kind.value})
            typer.echo(f"error: {e}", err=True)
            code = 1
        raise typer.Exit(code)

    return command


for _experiment in ExperimentRegistry.get_all():
    run_app.command(_experiment.kind.value, help=_experiment.identity)(_command(_experiment.kind))


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    list_experiments: bool = typer.Option(False, "--list", help="Print the experiment catalog"),
):
    """Co-polyharmonic fields, LQG measures and Polyakov partition functions."""
    setup_logging(settings.LOG_LEVEL, settings.LOG_JSON_PATH, settings.LOG_CONSOLE)
    if list_experiments:
        for experiment in ExperimentRegistry.get_all():
            typer.echo(
                f"{experiment.kind.value:<18} {experiment.identity}  [{experiment.reference}]"
            )
        raise typer.Exit(0)
    if ctx.invoked_subcommand is None:
        typer.echo(ctx.get_help())


if __name__ == "__main__":
    app()
