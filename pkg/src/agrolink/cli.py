"""Command-line entry points: run, serve, analyze, framedump, scenarios."""

from __future__ import annotations

import threading
import time
from pathlib import Path

import click

from . import analysis
from .config import load_scenario, shipped_scenarios
from .ctrlserver.api import create_app
from .ctrlserver.persist import EventLog, recover, save_snapshot
from .fieldnet import pack_frame, parse_frame
from .runner import SimRunner
from .xducer import SENSOR_KINDS

_DURATION_UNITS = {"s": 1.0, "m": 60.0, "h": 3600.0, "d": 86_400.0,
                   "y": 365.0 * 86_400.0}


def parse_duration(text: str) -> float:
    """Accept plain seconds or a number with an s/m/h/d/y suffix."""
    text = text.strip().lower()
    if text and text[-1] in _DURATION_UNITS:
        return float(text[:-1]) * _DURATION_UNITS[text[-1]]
    return float(text)


@click.group()
def main() -> None:
    """Desk-scale duplex remote sensing and control platform."""


@main.command()
@click.option("--scenario", "-s", default="default", show_default=True,
              help="Shipped scenario name or a YAML file path.")
@click.option("--duration", "-d", default=None,
              help="Run length (e.g. 600, 45m, 12h, 30d, 1y); defaults to the scenario's.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for per-sensor history CSV files.")
def run(scenario: str, duration: str | None, seed: int | None, out: str | None) -> None:
    """Run a scenario headless and print counters and the history digest."""
    sc = load_scenario(scenario)
    if seed is not None:
        sc = sc.__class__(**{**sc.__dict__, "seed": seed})
    runner = SimRunner(sc)
    t0 = time.perf_counter()
    runner.run(parse_duration(duration) if duration else None)
    elapsed = time.perf_counter() - t0
    click.echo(f"scenario: {sc.name}  seed: {sc.seed}")
    click.echo(f"simulated: {runner.t:.0f} s in {elapsed:.2f} s wall")
    click.echo(f"frames ok: {runner.gateway.frames_ok}"
               f"  rejected: {runner.gateway.frames_rejected}"
               f"  duplicates: {runner.gateway.duplicates}")
    click.echo(f"digest: {runner.digest()}")
    if out:
        for path in runner.write_histories(out):
            click.echo(f"wrote {path}")


@main.command()
@click.option("--scenario", "-s", default="default", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--speed", default=60.0, show_default=True, type=float,
              help="Simulated seconds advanced per wall second.")
@click.option("--log-dir", type=click.Path(file_okay=False), default=None,
              help="Enable the event log and periodic snapshots here.")
@click.option("--static-dir", type=click.Path(file_okay=True), default=None,
              help="Serve a built dashboard from this directory at /.")
def serve(scenario: str, host: str, port: int, speed: float,
          log_dir: str | None, static_dir: str | None) -> None:
    """Run the simulation live and serve the control API over HTTP."""
    import uvicorn

    sc = load_scenario(scenario)
    event_log = None
    snap_path = None
    if log_dir:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)
        event_log = EventLog(log_path / "events.jsonl")
        snap_path = log_path / "snapshot.json"
    runner = SimRunner(sc, event_log=event_log)
    if snap_path and snap_path.exists():
        if recover(runner.server, snap_path, log_path / "events.jsonl"):
            click.echo(f"recovered server state from {snap_path}")

    stop = threading.Event()

    def pace() -> None:
        next_wall = time.monotonic()
        last_snap = time.monotonic()
        while not stop.is_set() and runner.t < sc.duration_s:
            runner.step()
            if snap_path and time.monotonic() - last_snap >= 60.0:
                save_snapshot(snap_path, runner.server.snapshot())
                last_snap = time.monotonic()
            next_wall += runner.dt / speed
            delay = next_wall - time.monotonic()
            if delay > 0:
                stop.wait(delay)
            else:
                next_wall = time.monotonic()

    sim_thread = threading.Thread(target=pace, name="sim", daemon=True)
    sim_thread.start()
    app = create_app(runner.server, runner, static_dir=static_dir)
    click.echo(f"serving {sc.name} on http://{host}:{port} "
               f"(speed {speed:g}x, dt {sc.dt:g}s)")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        stop.set()
        sim_thread.join(timeout=5.0)
        if snap_path:
            save_snapshot(snap_path, runner.server.snapshot())


@main.command()
@click.option("--scenario", "-s", default="default", show_default=True)
@click.option("--years", default=10, show_default=True, type=int)
def analyze(scenario: str, years: int) -> None:
    """Print the seasonal profile, crop ranking, costs, and payback."""
    sc = load_scenario(scenario)

    click.echo("Seasonal profile (deterministic monthly means)")
    for row in analysis.seasonal_profile(sc.env_params):
        click.echo(f"  {row.month}  {row.mean_temp_c:6.2f} C  {row.season}")

    init = sc.env_initial
    conditions = {
        "temperature": analysis.monthly_mean_temperature(sc.env_params, 6),
        "soil_ph": init.soil_ph,
        "soil_moisture": init.soil_moisture,
    }
    click.echo(f"\nCrop fit at pH {conditions['soil_ph']:.1f}, moisture "
               f"{conditions['soil_moisture']:.2f}, July mean "
               f"{conditions['temperature']:.1f} C")
    for name, score in analysis.rank_crops(conditions):
        click.echo(f"  {name:<10} {score:0.3f}")

    click.echo("\nSeason expenditure, manual vs automated (cumulative)")
    for row in analysis.expenditure_comparison(sc.expenditure):
        click.echo(f"  month {row.month}:  manual {row.manual_cum:8.0f}  "
                   f"auto {row.auto_cum:8.0f}  saving {row.saving:7.0f}")

    click.echo("\nPayback")
    be = analysis.break_even_year(sc.finance)
    for row in analysis.cash_flow_rows(sc.finance, years=years):
        mark = "  <- break even" if row["year"] == be else ""
        click.echo(f"  year {row['year']:2d}:  saving {row['saving']:9.2f}  "
                   f"cumulative {row['cumulative']:10.2f}  "
                   f"({row['multiple_of_investment']:5.2f}x){mark}")


@main.command()
@click.option("--count", default=3, show_default=True, type=int)
def framedump(count: int) -> None:
    """Show example wire frames, hex plus decoded fields."""
    for i in range(count):
        kind = SENSOR_KINDS[i % len(SENSOR_KINDS)]
        raw = pack_frame(i + 1, kind, seq=100 + i, value=20.0 + i, flags=i % 8)
        frame = parse_frame(raw)
        click.echo(f"{raw.hex()}  node={frame.node_id} kind={frame.kind} "
                   f"seq={frame.seq} value={frame.value:g} flags=0b{frame.flags:03b}")


@main.command()
def scenarios() -> None:
    """List the scenarios shipped with the package."""
    for name in shipped_scenarios():
        click.echo(name)


if __name__ == "__main__":
    main()
