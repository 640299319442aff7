from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional

import typer

from . import __VERSION__
from .config import create_default_config, get_config_path
from .errors import EXIT_INPUT, EXIT_IO, EXIT_NUMERICAL, OptimizationError
from .log import configure_logging, logger
from .output import print_key_value_table, print_result, print_version
from .services import CommandResult, PipelineService, RunOptions

CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}
APP_NAME = "forcedist"

app = typer.Typer(
    name="fdist",
    help="Force-distribution sensing: material fitting, FEM labels, flow features, MLP training.",
    no_args_is_help=True,
    context_settings=CONTEXT_SETTINGS,
    pretty_exceptions_show_locals=False,
)


def version_callback(value: bool) -> None:
    if value:
        print_version(APP_NAME, __VERSION__)
        raise typer.Exit()


@app.callback()
def app_callback(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(
        None, "--config", "-c", dir_okay=False, help="Pipeline config TOML."
    ),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Override the config seed."),
    threads: int = typer.Option(1, "--threads", "-j", min=1, help="Worker threads."),
    out: Optional[Path] = typer.Option(
        None, "--out", "-o", file_okay=False, help="Output directory."
    ),
    overrides: list[str] = typer.Option(
        [],
        "--set",
        help="JSON object deep-merged onto the config, e.g. {\"train\": {\"epochs\": 5}}. May be repeated.",
    ),
    verbose: list[bool] = typer.Option([], "--verbose", "-v", help="Verbose output."),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Quiet output."),
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-V",
        callback=version_callback,
        is_eager=True,
        help="Print version and exit.",
    ),
) -> None:
    configure_logging(len(verbose), quiet)
    ctx.obj = RunOptions(
        config_path=config,
        seed=seed,
        threads=threads,
        out=out,
        overrides=tuple(overrides),
    )


@app.command(no_args_is_help=True)
def fit(
    ctx: typer.Context,
    curves: list[str] = typer.Argument(..., help="Curve files as CASE:PATH, CASE in UA, PS, EB."),
    order: Optional[int] = typer.Option(None, "--order", "-n", help="Number of Ogden terms."),
) -> None:
    _run(lambda: _service(ctx).cmd_fit(curves, order))


@app.command(no_args_is_help=True)
def characterize(
    ctx: typer.Context,
    kind: str = typer.Argument(..., help="Test kind: tension or inflation."),
    inputs: list[Path] = typer.Argument(None, dir_okay=False, help="Raw test CSVs."),
    case: str = typer.Option("UA", "--case", help="Tension load case: UA or PS."),
    average: bool = typer.Option(False, "--average", help="Also write the specimen average."),
    tilt_deg: Optional[float] = typer.Option(
        None, "--tilt-deg", help="Sliding angle of a tilt test, in degrees."
    ),
) -> None:
    _run(lambda: _service(ctx).cmd_characterize(kind, inputs or [], case, average, tilt_deg))


@app.command()
def material(
    ctx: typer.Context,
    reference: Optional[str] = typer.Argument(
        None, help="Bundled material name or parameter JSON."
    ),
    phi: Optional[float] = typer.Option(None, "--phi", help="Particle volume fraction."),
) -> None:
    _run(lambda: _service(ctx).cmd_material(reference, phi))


@app.command(no_args_is_help=True)
def label(
    ctx: typer.Context,
    mesh: Path = typer.Option(..., "--mesh", dir_okay=False, help="Surface node CSV."),
    forces: Path = typer.Option(
        ..., "--forces", dir_okay=False, help="Nodal force CSV."
    ),
    metadata: Optional[Path] = typer.Option(
        None, "--metadata", dir_okay=False, help="Indentation metadata CSV."
    ),
    grid: Optional[str] = typer.Option(None, "--grid", help="Bin grid as ROWSxCOLS."),
    ft: Optional[Path] = typer.Option(
        None, "--ft", dir_okay=False, help="Force/torque sensor CSV."
    ),
) -> None:
    _run(lambda: _service(ctx).cmd_label(mesh, forces, metadata, grid, ft))


@app.command(no_args_is_help=True)
def features(
    ctx: typer.Context,
    ref: Path = typer.Argument(..., dir_okay=False, help="Reference image."),
    cur: Path = typer.Argument(..., dir_okay=False, help="Deformed image."),
    regions: Optional[str] = typer.Option(
        None,
        "--regions",
        help="Pooling tiling as ROWSxCOLS, giving ROWS*COLS regions; both must divide the frame.",
    ),
    dump_flow: bool = typer.Option(False, "--dump-flow", help="Also write the dense flow."),
) -> None:
    _run(lambda: _service(ctx).cmd_features(ref, cur, regions, dump_flow))


@app.command()
def synth(
    ctx: typer.Context,
    no_images: bool = typer.Option(False, "--no-images", help="Skip writing rendered frames."),
) -> None:
    _run(lambda: _service(ctx).cmd_synth(write_images=not no_images))


@app.command(no_args_is_help=True)
def train(
    ctx: typer.Context,
    dataset: Path = typer.Argument(..., dir_okay=False, help="Dataset manifest."),
) -> None:
    _run(lambda: _service(ctx).cmd_train(dataset))


@app.command(name="eval", no_args_is_help=True)
def evaluate(
    ctx: typer.Context,
    dataset: Path = typer.Argument(..., dir_okay=False, help="Dataset manifest."),
    checkpoint: Path = typer.Option(..., "--checkpoint", "-m", help="Trained model file."),
    ft: Optional[Path] = typer.Option(
        None, "--ft", dir_okay=False, help="Force/torque sensor CSV."
    ),
    split: str = typer.Option("test", "--split", help="Records to score: test or all."),
) -> None:
    _run(lambda: _service(ctx).cmd_eval(dataset, checkpoint, ft, split))


@app.command(no_args_is_help=True)
def predict(
    ctx: typer.Context,
    features_csv: Path = typer.Argument(
        ..., dir_okay=False, help="Feature CSV from fdist features."
    ),
    checkpoint: Path = typer.Option(..., "--checkpoint", "-m", help="Trained model file."),
    grid: Optional[str] = typer.Option(None, "--grid", help="Bin grid as ROWSxCOLS."),
) -> None:
    _run(lambda: _service(ctx).cmd_predict(checkpoint, features_csv, grid))


@app.command(name="init-config")
def init_config(
    path: Optional[Path] = typer.Argument(None, dir_okay=False, help="Where to write the config."),
) -> None:
    def action() -> None:
        target = path or get_config_path()
        if target.exists():
            raise ValueError(f"config already exists: {target}")
        create_default_config(target)
        print_key_value_table("fdist init-config", [("config", str(target))])

    _run(action)


def _service(ctx: typer.Context) -> PipelineService:
    options = ctx.obj if isinstance(ctx.obj, RunOptions) else RunOptions()
    return PipelineService.default(options)


def _run(action: Callable[[], CommandResult | None]) -> None:
    try:
        result = action()
    except OptimizationError as exc:
        logger.error(str(exc))
        raise typer.Exit(EXIT_NUMERICAL) from exc
    except ValueError as exc:
        logger.error(str(exc))
        raise typer.Exit(EXIT_INPUT) from exc
    except OSError as exc:
        logger.error(str(exc))
        raise typer.Exit(EXIT_IO) from exc
    if isinstance(result, CommandResult):
        print_result(result)
