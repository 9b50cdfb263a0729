"""Command line front end: run, gen, sweep, solve, serve.

Every command is reproducible under a fixed seed and offers machine
readable output. Exit codes: 0 success/stabilized, 1 input error,
2 non-convergence.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import metrics as metrics_mod
from .engine import run_until_stable
from .errors import ReschedError
from .model import DisruptionEvent
from .scenario import (
    GeneratorParams,
    Scenario,
    canonical_json,
    fig2_scenario,
    generate_scenario,
    load_scenario,
)
from .solvers import (
    AllocationProblem,
    OrderSpec,
    ReductionProblem,
    WeightConfig,
    brute_force_oracle,
    solve_all_or_nothing,
    solve_capacity,
    solve_consolidation,
    solve_partial,
)

EVENT_ALIASES = {
    "rm-delay": "raw_material_delay",
    "raw_material_delay": "raw_material_delay",
    "quarantine": "sfg_quarantine",
    "sfg_quarantine": "sfg_quarantine",
    "stoppage": "line_stoppage",
    "line_stoppage": "line_stoppage",
}


def parse_event(spec: str) -> DisruptionEvent:
    """``kind:target:start:duration[:qty]`` with kind aliases."""
    parts = spec.split(":")
    if len(parts) not in (4, 5):
        raise click.BadParameter(
            f"expected kind:target:start:duration[:qty], got {spec!r}"
        )
    kind = EVENT_ALIASES.get(parts[0])
    if kind is None:
        raise click.BadParameter(f"unknown disruption kind {parts[0]!r}")
    try:
        start = int(parts[2])
        duration = int(parts[3])
        qty = int(parts[4]) if len(parts) == 5 else None
    except ValueError as err:
        raise click.BadParameter(f"non-integer field in {spec!r}") from err
    return DisruptionEvent(kind, parts[1], start, duration, qty)


def _load(path: str) -> Scenario:
    try:
        return load_scenario(Path(path).read_bytes())
    except FileNotFoundError:
        raise click.ClickException(f"scenario file not found: {path}")


@click.group()
@click.version_option(package_name="resched")
def main() -> None:
    """Multi-agent production rescheduling simulator."""


@main.command("run")
@click.option("--scenario", "scenario_path", required=True, help="Scenario JSON file.")
@click.option(
    "--event",
    "events",
    multiple=True,
    help="Disruption, kind:target:start:duration[:qty]; repeatable.",
)
@click.option(
    "--mode",
    type=click.Choice(["partial", "all_or_nothing"]),
    default=None,
    help="Override the scenario's fulfillment mode.",
)
@click.option("--max-iterations", type=int, default=None)
@click.option("--inventory-reduction/--no-inventory-reduction", default=None)
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@click.option("--json", "as_json", is_flag=True, help="Machine readable stdout.")
def cmd_run(scenario_path, events, mode, max_iterations, inventory_reduction, out, as_json):
    """Apply disruptions to a scenario and negotiate until stable."""
    try:
        scenario = _load(scenario_path)
        config = scenario.config
        if mode is not None:
            config.fulfillment_mode = mode
        if max_iterations is not None:
            config.max_iterations = max_iterations
        if inventory_reduction is not None:
            config.inventory_reduction_enabled = inventory_reduction
        all_events = list(scenario.events) + [parse_event(e) for e in events]
        result = run_until_stable(scenario.world, all_events, config)
        kpis = metrics_mod.compute_kpis(scenario.world, result)
    except ReschedError as err:
        raise click.ClickException(str(err))

    payload = {
        "kpis": kpis.to_dict(),
        "result": result.summary(),
    }
    if out is not None:
        directory = Path(out)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "kpis.json").write_text(
            json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"
        )
        (directory / "trace.ndjson").write_text(result.trace_ndjson() + "\n")
        (directory / "world.json").write_text(
            canonical_json(result.world.to_dict()) + "\n"
        )
    if as_json:
        click.echo(json.dumps(payload, sort_keys=True, separators=(",", ":")))
    else:
        click.echo(
            f"stabilized={result.stabilized} iterations={result.iterations_used} "
            f"by_orders={kpis.fg_fulfillment_by_orders:.4f} "
            f"by_volume={kpis.fg_fulfillment_by_volume:.4f} "
            f"max_delay={kpis.max_delay_days}"
        )
    if not result.stabilized:
        sys.exit(2)


def _generator_options(fn):
    options = [
        click.option("--boms", type=int, default=5, show_default=True),
        click.option("--depth-min", type=int, default=2, show_default=True),
        click.option("--depth-max", type=int, default=7, show_default=True),
        click.option("--materials", type=int, default=39, show_default=True),
        click.option("--capacities", type=int, default=18, show_default=True),
        click.option("--doh", type=float, default=6.7, show_default=True),
        click.option("--density", type=float, default=0.45, show_default=True),
        click.option("--horizon", type=int, default=14, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _params(boms, depth_min, depth_max, materials, capacities, doh, density, horizon, seed):
    return GeneratorParams(
        bom_count=boms,
        depth_min=depth_min,
        depth_max=depth_max,
        material_count=materials,
        capacity_count=capacities,
        days_on_hand=doh,
        order_density=density,
        horizon_days=horizon,
        seed=seed,
    )


@main.command("gen")
@_generator_options
@click.option("--fig2", is_flag=True, help="Emit the bundled demo network instead.")
@click.option("--out", type=click.Path(), default=None, help="Output file (default stdout).")
def cmd_gen(boms, depth_min, depth_max, materials, capacities, doh, density, horizon, seed, fig2, out):
    """Generate a synthetic scenario (deterministic per seed)."""
    try:
        if fig2:
            text = fig2_scenario().to_json()
        else:
            params = _params(
                boms, depth_min, depth_max, materials, capacities, doh, density, horizon, seed
            )
            text = canonical_json(generate_scenario(params))
    except ReschedError as err:
        raise click.ClickException(str(err))
    if out is None:
        click.echo(text)
    else:
        Path(out).write_text(text + "\n")
        click.echo(f"wrote {out}", err=True)


@main.command("sweep")
@_generator_options
@click.option(
    "--kinds",
    default="all",
    show_default=True,
    help="Comma list of line_stoppage,raw_material_delay,sfg_quarantine or 'all'.",
)
@click.option("--durations", default="1,3,5,7,9", show_default=True)
@click.option(
    "--doh-levels",
    default=None,
    help="Comma list of days-on-hand levels; default is the single --doh value.",
)
@click.option("--seeds", default="0", show_default=True)
@click.option("--start-day", type=int, default=None, help="Fixed start day for all events.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Output prefix for .csv/.json.")
@click.option("--json", "as_json", is_flag=True)
def cmd_sweep(
    boms, depth_min, depth_max, materials, capacities, doh, density, horizon, seed,
    kinds, durations, doh_levels, seeds, start_day, jobs, out, as_json,
):
    """Run the disruption grid and emit a KPI table."""
    try:
        params = _params(
            boms, depth_min, depth_max, materials, capacities, doh, density, horizon, seed
        )
        kind_list = (
            list(metrics_mod.DISRUPTION_KINDS)
            if kinds == "all"
            else [EVENT_ALIASES[k.strip()] for k in kinds.split(",")]
        )
        duration_list = [int(d) for d in durations.split(",")]
        seed_list = [int(s) for s in seeds.split(",")]
        doh_list = (
            [float(x) for x in doh_levels.split(",")] if doh_levels else None
        )
        rows = metrics_mod.sweep(
            params,
            kinds=kind_list,
            durations=duration_list,
            doh_levels=doh_list,
            seeds=seed_list,
            start_day=start_day,
            jobs=jobs,
        )
    except (ReschedError, KeyError, ValueError) as err:
        raise click.ClickException(str(err))
    csv_text = metrics_mod.sweep_csv(rows)
    json_text = metrics_mod.sweep_json(rows)
    if out is not None:
        Path(f"{out}.csv").write_text(csv_text)
        Path(f"{out}.json").write_text(json_text + "\n")
        click.echo(f"wrote {out}.csv and {out}.json", err=True)
    if as_json:
        click.echo(json_text)
    elif out is None:
        click.echo(csv_text, nl=False)
    failed = [r for r in rows if r.error or not r.stabilized]
    if failed:
        sys.exit(2)


def _weights_from(data: dict) -> WeightConfig:
    raw = data.get("weights", {})
    priority = raw.get("priority_weight")
    return WeightConfig(
        priority_weight={int(k): v for k, v in priority.items()} if priority else None,
        fulfillment_weight=raw.get("fulfillment_weight", 1),
        adherence_weight=raw.get("adherence_weight"),
        day_attenuation=tuple(raw["day_attenuation"])
        if raw.get("day_attenuation")
        else None,
    )


def _supply_series(data: dict, horizon: int) -> tuple[int, ...]:
    supply = data.get("supply", [])
    if isinstance(supply, dict):
        series = [0] * horizon
        for day, qty in supply.items():
            series[int(day)] = qty
        return tuple(series)
    if len(supply) != horizon:
        raise click.ClickException("supply list must cover the horizon")
    return tuple(supply)


@main.command("solve")
@click.option("--in", "in_path", type=click.Path(), default=None, help="Problem JSON (default stdin).")
@click.option("--oracle", is_flag=True, help="Cross-check against exhaustive enumeration.")
def cmd_solve(in_path, oracle):
    """Solve one local optimization problem from JSON."""
    raw = Path(in_path).read_text() if in_path else sys.stdin.read()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as err:
        raise click.ClickException(f"not valid JSON: {err}")
    mode = data.get("mode")
    try:
        if mode == "consolidation":
            problem = ReductionProblem(
                requested={
                    supplier: {int(d): q for d, q in series.items()}
                    for supplier, series in data.get("requested", {}).items()
                },
                horizon=data["horizon"],
                day_weights=tuple(data["day_weights"]) if data.get("day_weights") else None,
                max_per_day={int(d): q for d, q in data["max_per_day"].items()}
                if data.get("max_per_day")
                else None,
            )
            plan = solve_consolidation(problem)
            if oracle and brute_force_oracle(problem)[0] != plan.objective_value:
                raise click.ClickException("solver disagrees with oracle")
            click.echo(plan.to_json())
            return
        horizon = data["horizon"]
        problem = AllocationProblem(
            orders=tuple(
                OrderSpec(
                    order_id=o["id"],
                    demand={int(d): q for d, q in o["demand"].items()},
                    priority=o.get("priority", 1),
                )
                for o in data.get("orders", [])
            ),
            supply=_supply_series(data, horizon),
            horizon=horizon,
            mode=mode,
        )
        weights = _weights_from(data)
        if mode == "partial":
            allocation = solve_partial(problem, weights)
        elif mode == "all_or_nothing":
            allocation = solve_all_or_nothing(problem, weights)
        elif mode == "capacity":
            allocation = solve_capacity(problem)
        else:
            raise click.ClickException(f"unknown mode {mode!r}")
        if oracle and brute_force_oracle(problem, weights)[0] != allocation.objective_value:
            raise click.ClickException("solver disagrees with oracle")
        click.echo(allocation.to_json())
    except ReschedError as err:
        raise click.ClickException(str(err))
    except KeyError as err:
        raise click.ClickException(f"missing field {err}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=None, help="Defaults to $RESCHED_PORT or 8000.")
@click.option(
    "--static-dir",
    type=click.Path(),
    default=None,
    help="Directory with the built console bundle to serve at /.",
)
@click.option("--token", default=None, help="Require this bearer token on API calls.")
def cmd_serve(host, port, static_dir, token):
    """Serve the HTTP API (and optionally the console bundle)."""
    import os

    import uvicorn

    from .service import create_app

    if port is None:
        port = int(os.environ.get("RESCHED_PORT", "8000"))
    app = create_app(static_dir=static_dir, token=token)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
