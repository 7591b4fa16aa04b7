"""
CLI entry point: margin evaluate | train | metrics | phantom | calibrate | agreement | health.

Every command loads config from --config (default config.yaml, defaults when
absent), logs to stderr, emits structured events and records to the journal.
Exit codes: 0 success / clear margins, 2 positive margin, 1 any error
(usage errors included).
"""

import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, NoReturn

import click
from dotenv import load_dotenv

from cli.structured_log import StructuredEventLogger
from config import AppConfig, default_config, load_config

load_dotenv()

logger = logging.getLogger("margin")

DEFAULT_CONFIG_PATH = "config.yaml"


def _setup_logging() -> None:
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s  %(message)s",
        stream=sys.stderr,
    )


class _MarginGroup(click.Group):
    """Click group whose usage errors exit with 1 instead of click's 2."""

    def make_context(self, *args: Any, **kwargs: Any) -> click.Context:
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as exc:
            exc.exit_code = 1
            raise

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as exc:
            exc.exit_code = 1
            raise


@click.group(cls=_MarginGroup)
@click.option("--config", "config_path", default=DEFAULT_CONFIG_PATH, help="Path to config file.")
@click.option("--engine-config", "engine_override", default=None,
              help="Partial engine JSON deep-merged over docs/config/margin.default.json.")
@click.pass_context
def cli(ctx: click.Context, config_path: str, engine_override: str | None) -> None:
    """margin-engine: tumor margin evaluation on specimen mammograms."""
    _setup_logging()
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["engine_override"] = engine_override


# ---------- shared helpers ----------


def _app_config(ctx: click.Context) -> AppConfig:
    path = ctx.obj["config_path"]
    if path == DEFAULT_CONFIG_PATH and not Path(path).exists():
        cfg = default_config()
    else:
        cfg = load_config(path)
    logging.getLogger().setLevel(cfg.logging.level)
    return cfg


def _engine_config(ctx: click.Context, app: AppConfig):
    from config.margin_config import load_margin_config

    override = ctx.obj.get("engine_override") or app.engine_override or None
    return load_margin_config(override_path=override)


def _events(command: str, app: AppConfig) -> StructuredEventLogger:
    return StructuredEventLogger(
        command,
        enabled=app.logging.structured_events,
        webhook_url=app.logging.webhook_url,
    )


def _journal(app: AppConfig):
    if not app.journal.path:
        return None
    from journal import RunJournal

    return RunJournal(app.journal.path, echo_stdout=app.journal.echo_stdout)


def _fail(events: StructuredEventLogger | None, exc: BaseException, started: float) -> NoReturn:
    message = str(exc) or type(exc).__name__
    logger.error("%s: %s", type(exc).__name__, message)
    click.echo(f"error: {message}", err=True)
    if events is not None:
        events.error(message, detail=type(exc).__name__)
        events.run_complete(1, time.perf_counter() - started)
    raise SystemExit(1)


def _guarded_errors() -> tuple[type[BaseException], ...]:
    from config.margin_config import MarginConfigError
    from margin_core.errors import MarginEngineError

    return (MarginEngineError, MarginConfigError, OSError, ValueError, KeyError)


def _even_pairs(paths: tuple[str, ...], what: str) -> list[tuple[str, str]]:
    if not paths or len(paths) % 2:
        raise click.UsageError(f"expected {what} in pairs (an even, nonzero number of paths)")
    return [(paths[i], paths[i + 1]) for i in range(0, len(paths), 2)]


def _write_json(data: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


# ---------- margin evaluate ----------


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False),
              help="Specimen mammogram (binary PGM).")
@click.option("--mask", "mask_path", default=None, type=click.Path(dir_okay=False),
              help="Full-frame tumor mask PGM; bypasses the network.")
@click.option("--model", "model_path", default=None, help="MSG1 weights (default: model_path from config).")
@click.option("--density", type=float, default=None, help="Pixels per mm; skips coin detection.")
@click.option("--threshold-mm", type=float, default=None, help="Safety threshold (default 10 mm).")
@click.option("--out-dir", default=None, help="Output directory (default: output_dir from config).")
@click.option("--json", "as_json", is_flag=True, default=False, help="Print the report JSON instead of the summary.")
@click.pass_context
def evaluate(
    ctx: click.Context,
    input_path: str,
    mask_path: str | None,
    model_path: str | None,
    density: float | None,
    threshold_mm: float | None,
    out_dir: str | None,
    as_json: bool,
) -> None:
    """Evaluate margins on one image; exit 0 clear, 2 positive margin, 1 error."""
    started = time.perf_counter()
    events = None
    try:
        app = _app_config(ctx)
        events = _events("evaluate", app)
        events.run_start(input=input_path, mask=mask_path, density=density, threshold_mm=threshold_mm)
        engine = _engine_config(ctx, app)

        from cli.output import build_report, contour_polygon, format_evaluation, validate_report
        from cli.safety import check_margin
        from config.margin_config import DEFAULT_REPORT_SCHEMA_PATH
        from data.netpbm import read_gray, read_mask, write_gray, write_rgb
        from margin_core.contracts import PixelDensity
        from margin_core.pipeline import evaluate as run_evaluation

        img = read_gray(input_path)
        params = engine.evaluation_params(threshold_mm)
        kwargs: dict[str, Any] = {}
        if mask_path:
            kwargs["tumor_mask"] = read_mask(mask_path)
        else:
            from segnet.inference import segmenter
            from segnet.weights import load_weights

            weights = Path(model_path or app.model_path)
            if not weights.is_file():
                raise FileNotFoundError(f"model weights not found: {weights} (train one or pass --mask)")
            net = load_weights(weights, engine.network_spec(), engine.training.dtype)
            kwargs["segment"] = segmenter(net, engine.inference.erosion_radius)

        result = run_evaluation(
            img,
            params,
            density=PixelDensity(density) if density is not None else None,
            on_stage=events.stage_complete,
            **kwargs,
        )

        report = build_report(result)
        report["duration_s"] = round(time.perf_counter() - started, 4)
        validate_report(report, DEFAULT_REPORT_SCHEMA_PATH)

        out = Path(out_dir or app.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(report, out / "report.json")
        _write_json(contour_polygon(result.specimen), out / "specimen_contour.json")
        write_rgb(result.overlay, out / "overlay.ppm")
        write_gray(result.roi, out / "roi.pgm")

        verdict = check_margin(result.profile.min_margin_mm, result.threshold_mm)
        if not verdict.allowed:
            logger.warning(verdict.reason)
            events.positive_margin(result.profile.min_margin_mm, result.threshold_mm, len(result.caution_points))

        journal = _journal(app)
        if journal is not None:
            journal.evaluation(input_path, report, verdict.exit_code, out_dir=str(out))

        click.echo(json.dumps(report, indent=2) if as_json else format_evaluation(result, input_path))
        events.run_complete(verdict.exit_code, time.perf_counter() - started)
    except _guarded_errors() as exc:
        _fail(events, exc, started)
    raise SystemExit(verdict.exit_code)


# ---------- margin train ----------


@cli.command()
@click.option("--data", "data_dir", required=True, type=click.Path(file_okay=False),
              help="Dataset directory written by 'margin phantom --count'.")
@click.option("--seed", type=int, default=None, help="Seed for init, augmentation and batching.")
@click.option("--epochs", type=int, default=None, help="Maximum epochs (default from engine config).")
@click.option("--out", "out_path", default=None, help="Weights output path (default: model_path from config).")
@click.pass_context
def train(ctx: click.Context, data_dir: str, seed: int | None, epochs: int | None, out_path: str | None) -> None:
    """Train the segmenter on a phantom dataset; writes weights and a loss-history JSON."""
    started = time.perf_counter()
    events = None
    try:
        app = _app_config(ctx)
        events = _events("train", app)
        engine = _engine_config(ctx, app)
        cfg = engine.train_config(seed=seed, epochs=epochs)
        events.run_start(data=data_dir, seed=cfg.seed, epochs=cfg.epochs)

        from cli.output import format_training
        from data.dataset_store import DatasetStore
        from segnet.network import Network
        from segnet.trainer import augment_pairs, prepare_samples
        from segnet.trainer import train as run_training
        from segnet.weights import save_weights

        dataset = DatasetStore(data_dir).load()
        if not dataset.train_indices:
            raise ValueError(f"dataset {data_dir} has no training cases")
        spec = engine.network_spec()
        train_pairs = augment_pairs(dataset.train_pairs(), engine.augmentation_spec(), cfg.seed)
        samples = prepare_samples(train_pairs, spec.input_size, cfg.dtype)
        validation = (
            prepare_samples(dataset.validation_pairs(), spec.input_size, cfg.dtype)
            if dataset.validation_indices else None
        )
        logger.info("training on %d augmented samples, %d validation cases",
                    len(samples), 0 if validation is None else len(validation))

        net = Network.initialize(spec, seed=cfg.seed, dtype=cfg.dtype)
        result = run_training(
            net, samples, cfg, validation,
            on_epoch=lambda r: events.epoch_complete(r.epoch, r.train_loss, r.validation_loss),
        )

        weights = save_weights(result.network, out_path or app.model_path)
        history = result.history_dict()
        history_path = _write_json(history, weights.with_suffix(".history.json"))

        journal = _journal(app)
        if journal is not None:
            journal.training_run(data_dir, str(weights), cfg.seed, history, history_path=str(history_path))

        click.echo(format_training(history, weights))
        events.run_complete(0, time.perf_counter() - started)
    except _guarded_errors() as exc:
        _fail(events, exc, started)


# ---------- margin metrics ----------


@cli.command()
@click.argument("masks", nargs=-1, type=click.Path(dir_okay=False))
@click.pass_context
def metrics(ctx: click.Context, masks: tuple[str, ...]) -> None:
    """Similarity of AUTO MANUAL mask pairs: {"si","ov","of","ef"} (null when undefined).

    With more than one pair, prints every case plus the dataset summary.
    """
    started = time.perf_counter()
    pairs = _even_pairs(masks, "AUTO MANUAL masks")
    events = None
    try:
        app = _app_config(ctx)
        events = _events("metrics", app)
        events.run_start(pairs=len(pairs))

        from cli.output import summary_dict
        from data.netpbm import read_mask
        from margin_core.similarity import confusion, scores, summarize_scores

        results = [scores(confusion(read_mask(a), read_mask(m))) for a, m in pairs]
        cases = [r.as_dict() for r in results]
        if len(results) == 1:
            payload: dict[str, Any] = cases[0]
            summary = None
        else:
            summary = summary_dict(summarize_scores(results))
            payload = {
                "cases": [{"auto": a, "manual": m, **c} for (a, m), c in zip(pairs, cases)],
                "summary": summary,
            }

        journal = _journal(app)
        if journal is not None:
            journal.metrics(cases, summary, pairs=[list(p) for p in pairs])

        click.echo(json.dumps(payload))
        events.run_complete(0, time.perf_counter() - started)
    except _guarded_errors() as exc:
        _fail(events, exc, started)


# ---------- margin phantom ----------


@cli.command()
@click.option("--out-dir", required=True, help="Directory for the phantom files (or the dataset).")
@click.option("--seed", type=int, default=0, help="Generator seed.")
@click.option("--count", type=int, default=None, help="Write a training dataset of this many phantoms.")
@click.option("--margin-mm", type=float, default=None,
              help="Concentric phantom with this analytic margin instead of a sampled one.")
@click.option("--scale", type=float, default=1.0, help="Frame scale factor over the configured phantom frame.")
@click.option("--markers/--no-markers", default=None, help="Draw the marker glyph strip.")
@click.pass_context
def phantom(
    ctx: click.Context,
    out_dir: str,
    seed: int,
    count: int | None,
    margin_mm: float | None,
    scale: float,
    markers: bool | None,
) -> None:
    """Write a synthetic phantom (image, ground-truth masks, meta.json) or a dataset directory."""
    started = time.perf_counter()
    events = None
    try:
        app = _app_config(ctx)
        events = _events("phantom", app)
        events.run_start(seed=seed, count=count, margin_mm=margin_mm)
        engine = _engine_config(ctx, app)

        import dataclasses

        import numpy as np

        from data.netpbm import write_gray, write_mask
        from phantom.generator import concentric_spec, generate, generate_dataset, sample_spec

        if count is not None and margin_mm is not None:
            raise click.UsageError("--count and --margin-mm are mutually exclusive")
        ranges = engine.phantom_ranges()
        if scale != 1.0:
            ranges = ranges.scaled(scale)
        if markers is not None:
            ranges = dataclasses.replace(ranges, markers=markers)
        out = Path(out_dir)

        if count is not None:
            from data.dataset_store import DatasetStore

            bundle = generate_dataset(
                count, ranges, seed, engine.training.validation_fraction,
                smooth_radius=engine.specimen.smooth_radius, padding=engine.specimen.padding,
            )
            index = DatasetStore(out).write_bundle(bundle)
            click.echo(f"Wrote {len(bundle)} phantoms ({len(bundle.train_indices)} train / "
                       f"{len(bundle.validation_indices)} validation) to {index}")
        else:
            if margin_mm is not None:
                spec = concentric_spec(margin_mm, seed=seed, markers=bool(markers))
            else:
                spec = sample_spec(np.random.default_rng(seed), ranges)
            ph = generate(spec)
            out.mkdir(parents=True, exist_ok=True)
            write_gray(ph.image, out / "image.pgm")
            write_mask(ph.specimen_gt, out / "specimen_gt.pgm")
            write_mask(ph.tumor_gt, out / "tumor_gt.pgm")
            _write_json(ph.meta(), out / "meta.json")
            click.echo(f"Wrote phantom {ph.image.width}x{ph.image.height} to {out} "
                       f"(density {ph.density_gt.pixels_per_mm:.3f} px/mm, "
                       f"min margin {ph.min_margin_mm:.2f} mm)")
        events.run_complete(0, time.perf_counter() - started)
    except _guarded_errors() as exc:
        _fail(events, exc, started)


# ---------- margin calibrate ----------


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False),
              help="Specimen mammogram (binary PGM).")
@click.pass_context
def calibrate(ctx: click.Context, input_path: str) -> None:
    """Detect the reference coin and print {"pixels_per_mm", "coin"}."""
    started = time.perf_counter()
    events = None
    try:
        app = _app_config(ctx)
        events = _events("calibrate", app)
        events.run_start(input=input_path)
        engine = _engine_config(ctx, app)

        from cli.output import coin_dict
        from data.netpbm import read_gray
        from margin_core.calibration import calibrate as run_calibration

        coin, density = run_calibration(
            read_gray(input_path),
            coin_diameter_mm=engine.calibration.coin_diameter_mm,
            min_area_px=engine.calibration.min_area_px,
            min_circularity=engine.calibration.min_circularity,
            connectivity=engine.specimen.connectivity,
        )
        click.echo(json.dumps({"pixels_per_mm": density.pixels_per_mm, "coin": coin_dict(coin)}))
        events.run_complete(0, time.perf_counter() - started)
    except _guarded_errors() as exc:
        _fail(events, exc, started)


# ---------- margin agreement ----------


@cli.command()
@click.argument("reports", nargs=-1, type=click.Path(dir_okay=False))
@click.pass_context
def agreement(ctx: click.Context, reports: tuple[str, ...]) -> None:
    """Per-direction |auto - reference| clock-width statistics over AUTO REFERENCE report pairs."""
    started = time.perf_counter()
    pairs = _even_pairs(reports, "AUTO REFERENCE reports")
    events = None
    try:
        app = _app_config(ctx)
        events = _events("agreement", app)
        events.run_start(pairs=len(pairs))

        from cli.output import agreement_dict, clock_margins_from_report
        from margin_core.margins import margin_agreement

        loaded = [
            (clock_margins_from_report(json.loads(Path(a).read_text())),
             clock_margins_from_report(json.loads(Path(r).read_text())))
            for a, r in pairs
        ]
        click.echo(json.dumps(agreement_dict(margin_agreement(loaded))))
        events.run_complete(0, time.perf_counter() - started)
    except _guarded_errors() as exc:
        _fail(events, exc, started)


# ---------- margin health ----------


@cli.command()
@click.pass_context
def health(ctx: click.Context) -> None:
    """Check config, engine config and model weights.

    Exit code 0 = healthy, 1 = unhealthy.
    """
    checks: list[tuple[str, bool, str]] = []

    try:
        cfg = _app_config(ctx)
        checks.append(("config", True, f"loaded (model {cfg.model_path}, output {cfg.output_dir})"))
    except Exception as e:
        checks.append(("config", False, str(e)))
        _print_health(checks)
        raise SystemExit(1)

    engine = None
    try:
        engine = _engine_config(ctx, cfg)
        checks.append(("engine_config", True, f"validated (version {engine.version})"))
    except Exception as e:
        checks.append(("engine_config", False, str(e)))

    try:
        from segnet.weights import load_weights

        spec = engine.network_spec() if engine is not None else None
        net = load_weights(cfg.model_path, spec)
        checks.append(("model", True, f"{cfg.model_path} ({len(net.params)} parameter tensors)"))
    except Exception as e:
        checks.append(("model", False, str(e)))

    _print_health(checks)
    healthy = all(ok for _, ok, _ in checks)
    raise SystemExit(0 if healthy else 1)


def _print_health(checks: list[tuple[str, bool, str]]) -> None:
    for name, ok, detail in checks:
        status = "OK" if ok else "FAIL"
        click.echo(f"  [{status}] {name}: {detail}")
    healthy = all(ok for _, ok, _ in checks)
    click.echo(f"\nHealth: {'HEALTHY' if healthy else 'UNHEALTHY'}")


if __name__ == "__main__":
    cli()
