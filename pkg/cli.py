"""
Command-line interface for the embedding size search pipeline.

Exit codes: 0 success, 1 runtime failure, 2 input error, 3 state error.
"""

import json
import os
import sys
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
from rich.console import Console
from rich.table import Table

from src.config.settings import (
    create_sample_config,
    load_config,
    read_config_file,
    validate_config,
)
from src.core.errors import CIESSError, ConfigValidationError
from src.core.event_bus import EPISODE_COMPLETED, Event, EventBus
from src.main import CONFIG_FILE, CIESSPipeline
from src.models.manifest import MANIFEST_FILE, RunManifest
from src.utils.logging_utils import configure_logging

console = Console()

SPARSITY = click.FloatRange(0.0, 1.0, min_open=True, max_open=True)


def handle_errors(func: Callable) -> Callable:
    """Map pipeline errors onto exit codes"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ConfigValidationError as e:
            click.echo("❌ Configuration has errors:", err=True)
            for error in e.errors:
                click.echo(f"   • {error}", err=True)
            sys.exit(e.exit_code)
        except CIESSError as e:
            click.echo(f"❌ {e}", err=True)
            sys.exit(e.exit_code)
        except FileNotFoundError as e:
            click.echo(f"❌ {e}", err=True)
            sys.exit(2)
        except KeyboardInterrupt:
            click.echo("\n👋 Stopped by user", err=True)
            sys.exit(1)

    return wrapper


def _resolve_config(ctx: click.Context, overrides: Dict[str, Any],
                    fallback: Optional[Path] = None):
    config_file = ctx.obj.get("config_file")
    if config_file is None and fallback is not None and fallback.is_file():
        config_file = fallback
    config = load_config(config_file, overrides)
    level = "DEBUG" if ctx.obj.get("verbose") else config.runtime.log_level
    configure_logging(level, ctx.obj.get("json_logs") or config.runtime.json_logs)
    return config


def _threads_override(threads: Optional[int]) -> Dict[str, Any]:
    return {"runtime": {"threads": threads}} if threads else {}


def _print_metrics(title: str, payload: Dict[str, Any]) -> None:
    table = Table(title=title)
    table.add_column("metric")
    table.add_column("value", justify="right")
    for key in ("sparsity_target", "sparsity_achieved", "recall@5", "recall@20", "ndcg@5",
                "ndcg@20", "val_q_mean", "chosen_rank", "uniform_dim", "wall_seconds"):
        if key in payload and payload[key] is not None:
            value = payload[key]
            table.add_row(key, f"{value:.4f}" if isinstance(value, float) else str(value))
    console.print(table)


class EpisodeTable:
    """Collects episode summaries and renders them as one table"""

    def __init__(self):
        self.rows: List[Dict[str, Any]] = []

    def __call__(self, event: Event) -> None:
        self.rows.append(event.data)

    def render(self) -> Table:
        table = Table(title="Search episodes")
        for column in ("episode", "mean reward", "mean d (users)", "mean d (items)", "best q̄",
                       "sparsity"):
            table.add_column(column, justify="right")

        def fmt(value: Optional[float], digits: int = 4) -> str:
            return "-" if value is None else f"{value:.{digits}f}"

        for row in self.rows:
            table.add_row(
                str(row["episode"]),
                fmt(row["mean_reward"]),
                fmt(row["mean_action_users"], 1),
                fmt(row["mean_action_items"], 1),
                fmt(row["best_q_mean"]),
                fmt(row["sparsity"]),
            )
        return table


@click.group()
@click.option("--config", "-c", "config_file", type=click.Path(dir_okay=False),
              help="Configuration file path (YAML or JSON)")
@click.option("--verbose", "-v", is_flag=True, help="Verbose logging")
@click.option("--json-logs", is_flag=True, help="Emit logs as JSON lines on stderr")
@click.pass_context
def cli(ctx, config_file, verbose, json_logs):
    """Embedding size search for latent factor recommenders"""
    ctx.ensure_object(dict)
    ctx.obj["config_file"] = config_file
    ctx.obj["verbose"] = verbose
    ctx.obj["json_logs"] = json_logs
    configure_logging("DEBUG" if verbose else "INFO", json_logs)


@cli.command()
@click.option("--input", "-i", "input_path", required=True, type=click.Path(),
              help="Interaction file")
@click.option("--format", "-f", "data_format", type=click.Choice(["csv", "tsv", "dat"]),
              default=None, help="Input layout (default from config)")
@click.option("--out", "-o", required=True, type=click.Path(file_okay=False), help="Output directory")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Root seed override")
@click.option("--force", is_flag=True, help="Overwrite existing artifacts")
@click.pass_context
@handle_errors
def prepare(ctx, input_path, data_format, out, seed, force):
    """Parse, filter and split an interaction file"""
    overrides: Dict[str, Any] = {}
    if seed is not None:
        overrides["seed"] = seed
    if data_format:
        overrides["data"] = {"format": data_format}
    config = _resolve_config(ctx, overrides)

    click.echo(f"📥 Preparing dataset from {input_path}...")
    dataset = CIESSPipeline(config, force=force).prepare(input_path, out, data_format)
    click.echo(f"✅ {dataset.num_users} users, {dataset.num_items} items, "
               f"{len(dataset.train)}/{len(dataset.val)}/{len(dataset.test)} train/val/test")
    click.echo(f"📁 Snapshot written to {out}")


@cli.command()
@click.option("--data", "-d", "data_dir", required=True, type=click.Path(file_okay=False),
              help="Directory holding dataset.snapshot")
@click.option("--out", "-o", required=True, type=click.Path(file_okay=False), help="Run directory")
@click.option("--noise", type=click.Choice(["gaussian", "ou", "uniform"]), default=None,
              help="Exploration noise override")
@click.option("--random-walk/--no-random-walk", "random_walk", default=None,
              help="Enable or disable random-walk exploration")
@click.option("--threads", type=click.IntRange(min=1), default=None,
              help="Worker threads (CIESS_THREADS wins)")
@click.option("--force", is_flag=True, help="Overwrite existing artifacts")
@click.pass_context
@handle_errors
def search(ctx, data_dir, out, noise, random_walk, threads, force):
    """Run the RL embedding size search"""
    overrides = _threads_override(threads)
    search_overrides: Dict[str, Any] = {}
    if noise:
        search_overrides["noise"] = {"kind": noise}
    if random_walk is not None:
        search_overrides["walk"] = {"enabled": random_walk}
    if search_overrides:
        overrides["search"] = search_overrides
    config = _resolve_config(ctx, overrides)

    bus = EventBus()
    episodes = EpisodeTable()
    bus.subscribe(EPISODE_COMPLETED, episodes)

    s = config.search
    click.echo(f"🔎 Searching: {s.episodes} episodes x {s.iterations_per_episode} iterations, "
               f"noise={s.noise.kind}, random walk {'on' if s.walk.enabled else 'off'}")
    result = CIESSPipeline(config, force=force, event_bus=bus).search(data_dir, out)
    console.print(episodes.render())

    for c, candidate_set in result.tracker.global_sets.items():
        best = candidate_set.best()
        if best is None:
            click.echo(f"⚠️  c={c:g}: no candidates")
        else:
            click.echo(f"🎯 c={c:g}: {len(candidate_set)} candidates, best q̄={best.q_mean:.4f} "
                       f"(sparsity {best.sparsity:.4f})")
    click.echo(f"📁 Run directory: {out}")


@cli.command()
@click.option("--run", "-r", "run_dir", required=True, type=click.Path(file_okay=False),
              help="Run directory produced by search")
@click.option("--sparsity", "-s", required=True, type=SPARSITY, help="Target sparsity c")
@click.option("--window", type=click.IntRange(min=0), default=None,
              help="Use candidates of one episode window")
@click.option("--threads", type=click.IntRange(min=1), default=None,
              help="Worker threads (CIESS_THREADS wins)")
@click.option("--force", is_flag=True, help="Overwrite existing artifacts")
@click.pass_context
@handle_errors
def retrain(ctx, run_dir, sparsity, window, threads, force):
    """Retrain the top candidates for one sparsity and keep the best"""
    config = _resolve_config(ctx, _threads_override(threads), fallback=Path(run_dir) / CONFIG_FILE)
    click.echo(f"🏋️  Retraining candidates for sparsity {sparsity:g}...")
    payload = CIESSPipeline(config, force=force).retrain(run_dir, sparsity, window)
    _print_metrics(f"Selective retraining, c={sparsity:g}", payload)


@cli.command()
@click.option("--data", "-d", "data_dir", required=True, type=click.Path(file_okay=False),
              help="Directory holding dataset.snapshot")
@click.option("--kind", "-k", required=True, type=click.Choice(["es", "mr"]),
              help="es: equal sizes, mr: mixed random sizes")
@click.option("--sparsity", "-s", required=True, type=SPARSITY, help="Target sparsity c")
@click.option("--seed", type=click.IntRange(min=0), default=0, help="Size draw seed (mr)")
@click.option("--out", "-o", type=click.Path(file_okay=False), default=None,
              help="Output directory (default: --data)")
@click.option("--threads", type=click.IntRange(min=1), default=None,
              help="Worker threads (CIESS_THREADS wins)")
@click.option("--force", is_flag=True, help="Overwrite existing artifacts")
@click.pass_context
@handle_errors
def baseline(ctx, data_dir, kind, sparsity, seed, out, threads, force):
    """Train an ES or MR baseline at one sparsity"""
    config = _resolve_config(ctx, _threads_override(threads))
    click.echo(f"📏 Baseline {kind.upper()} at sparsity {sparsity:g}...")
    payload = CIESSPipeline(config, force=force).baseline(data_dir, kind, sparsity, out, seed)
    _print_metrics(f"{kind.upper()} baseline, c={sparsity:g}", payload)


@cli.command()
@click.option("--output", "-o", default="ciess.yaml", help="Output file name")
def init(output):
    """Create a sample configuration file"""
    click.echo(f"📝 Creating sample configuration: {output}")
    create_sample_config(output)

    click.echo("\n📋 Next steps:")
    click.echo(f"1. Edit {output}")
    click.echo(f"2. Run: python cli.py -c {output} validate")
    click.echo(f"3. Run: python cli.py -c {output} prepare --input ratings.dat --format dat --out runs/data")
    click.echo(f"4. Run: python cli.py -c {output} search --data runs/data --out runs/search")


@cli.command()
@click.argument("config_path", required=False, type=click.Path(dir_okay=False))
@click.pass_context
def validate(ctx, config_path):
    """Validate a configuration file and list every error"""
    config_file = config_path or ctx.obj.get("config_file") or "ciess.yaml"
    click.echo(f"🔍 Validating configuration: {config_file}")

    if not os.path.exists(config_file):
        click.echo(f"❌ Configuration file not found: {config_file}")
        click.echo("💡 Run 'python cli.py init' to create a sample config")
        sys.exit(2)

    try:
        raw = read_config_file(config_file)
    except ConfigValidationError as e:
        for error in e.errors:
            click.echo(f"   • {error}")
        sys.exit(2)

    is_valid, errors = validate_config(raw)
    if not is_valid:
        click.echo("❌ Configuration has errors:")
        for error in errors:
            click.echo(f"   • {error}")
        sys.exit(2)

    config = load_config(config_file)
    click.echo("✅ Configuration is valid!")
    click.echo(f"🧠 Backbone: {config.recommender.backbone} (d_max={config.recommender.d_max})")
    click.echo(f"🎲 Seed: {config.seed}")
    click.echo(f"🎯 Target sparsities: {', '.join(f'{c:g}' for c in config.search.target_sparsities)}")


@cli.command()
@click.option("--run", "-r", "run_dir", required=True, type=click.Path(file_okay=False),
              help="Run directory")
def status(run_dir):
    """Show stages and artifacts recorded in a run directory"""
    if not (Path(run_dir) / MANIFEST_FILE).is_file():
        click.echo(f"📊 No run manifest in {run_dir}")
        sys.exit(3)

    manifest = RunManifest.load(run_dir)
    table = Table(title=f"Run {manifest.run_id}")
    table.add_column("stage")
    table.add_column("status")
    for stage, state in sorted(manifest.stages.items()):
        table.add_row(stage, state)
    console.print(table)
    click.echo(f"🕒 Created {manifest.created_at}, updated {manifest.updated_at}")
    click.echo(f"📁 {len(manifest.artifacts)} artifacts:")
    for artifact in manifest.artifacts:
        click.echo(f"  • {artifact}")
    click.echo(json.dumps({"seeds": manifest.seeds}, sort_keys=True))


if __name__ == "__main__":
    cli()
