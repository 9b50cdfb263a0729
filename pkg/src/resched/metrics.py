"""KPIs of a rescheduling run and the disruption sweep harness.

``compute_kpis`` is a pure function of (baseline world, run result); sweeps
regenerate a scenario per (days-on-hand, seed) cell, inject one disruption
per BOM, and emit rows plus per-group means in a fixed column layout.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict
from typing import Sequence

from .engine import EngineConfig, RunResult, run_until_stable
from .errors import MetricsError
from .model import WorldState, clean_series
from .scenario import GeneratorParams, events_for, generate_scenario, load_scenario

DISRUPTION_KINDS = ("line_stoppage", "raw_material_delay", "sfg_quarantine")
DEFAULT_DURATIONS = (1, 3, 5, 7, 9)
DEFAULT_DOH_LEVELS = (14.8, 6.7, 3.8)

CSV_COLUMNS = [
    "disruption_type",
    "disruption_duration",
    "days_on_hand",
    "seed",
    "iterations",
    "rescheduled_material_agents",
    "rescheduled_capacity_agents",
    "rescheduled_finished_goods",
    "fg_fulfillment_by_orders",
    "fg_fulfillment_by_volume",
    "max_delay_days",
    "stabilized",
]


@dataclass(frozen=True)
class KpiReport:
    iterations: int
    rescheduled_material_agents: int
    rescheduled_capacity_agents: int
    rescheduled_finished_goods: int
    fg_fulfillment_by_orders: float
    fg_fulfillment_by_volume: float
    max_delay_days: int

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def is_identity(self) -> bool:
        return (
            self.iterations == 0
            and self.rescheduled_material_agents == 0
            and self.rescheduled_capacity_agents == 0
            and self.rescheduled_finished_goods == 0
            and self.fg_fulfillment_by_orders == 1.0
            and self.fg_fulfillment_by_volume == 1.0
            and self.max_delay_days == 0
        )


def _material_schedule(world: WorldState, agent: str) -> tuple:
    production = clean_series(world.supply[agent].planned_production)
    orders = {
        o.id: (clean_series(o.demand), o.status)
        for o in world.orders.values()
        if o.supplier == agent
    }
    return production, orders


def compute_kpis(baseline: WorldState, result: RunResult) -> KpiReport:
    """Table-style KPIs for one run against the pre-disruption baseline."""
    final = result.world
    if (
        sorted(baseline.bom.nodes) != sorted(final.bom.nodes)
        or sorted(baseline.orders) != sorted(final.orders)
        or baseline.horizon_days != final.horizon_days
    ):
        raise MetricsError("baseline and result describe different worlds")

    rescheduled_material = [
        aid
        for aid in final.material_ids()
        if _material_schedule(baseline, aid) != _material_schedule(final, aid)
    ]
    rescheduled_capacity = []
    for pid in final.capacity_ids():
        if clean_series(
            baseline.capacity_packages[pid].profile.per_day
        ) != clean_series(final.capacity_packages[pid].profile.per_day):
            rescheduled_capacity.append(pid)
            continue
        members = final.capacity_packages[pid].member_materials
        if any(m in rescheduled_material for m in members):
            rescheduled_capacity.append(pid)
    rescheduled_fg = [
        aid for aid in rescheduled_material if final.bom.node(aid).is_finished_good
    ]

    fg_orders = [
        (baseline.orders[oid], order)
        for oid, order in sorted(final.orders.items())
        if order.is_external and final.bom.node(order.material).is_finished_good
    ]
    full_count = 0
    base_volume = 0
    final_volume = 0
    max_delay = 0
    for base_order, final_order in fg_orders:
        base_total = base_order.total()
        final_total = final_order.total()
        base_volume += base_total
        final_volume += final_total
        if final_total == base_total:
            full_count += 1
            base_done = base_order.completion_day()
            final_done = final_order.completion_day()
            if base_done is not None and final_done is not None:
                max_delay = max(max_delay, final_done - base_done)
    by_orders = full_count / len(fg_orders) if fg_orders else 1.0
    by_volume = final_volume / base_volume if base_volume else 1.0

    return KpiReport(
        iterations=result.iterations_used,
        rescheduled_material_agents=len(rescheduled_material),
        rescheduled_capacity_agents=len(rescheduled_capacity),
        rescheduled_finished_goods=len(rescheduled_fg),
        fg_fulfillment_by_orders=by_orders,
        fg_fulfillment_by_volume=by_volume,
        max_delay_days=max_delay,
    )


# -- sweeps ---------------------------------------------------------------------


@dataclass(frozen=True)
class SweepCell:
    kind: str
    duration: int
    days_on_hand: float
    seed: int


@dataclass
class SweepRow:
    cell: SweepCell
    kpis: KpiReport | None
    stabilized: bool
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "disruption_type": self.cell.kind,
            "disruption_duration": self.cell.duration,
            "days_on_hand": self.cell.days_on_hand,
            "seed": self.cell.seed,
            "stabilized": self.stabilized,
            "error": self.error,
            **(self.kpis.to_dict() if self.kpis else {}),
        }


def run_cell(
    params: GeneratorParams,
    cell: SweepCell,
    config: EngineConfig | None = None,
    start_day: int | None = None,
) -> SweepRow:
    """Generate the cell's scenario, disrupt one agent per BOM, run, score."""
    try:
        cell_params = GeneratorParams(
            **{
                **asdict(params),
                "days_on_hand": cell.days_on_hand,
                "seed": cell.seed,
            }
        )
        scenario = load_scenario(generate_scenario(cell_params))
        events = events_for(scenario.world, cell.kind, cell.duration, start_day)
        result = run_until_stable(scenario.world, events, config or scenario.config)
        kpis = compute_kpis(scenario.world, result)
        return SweepRow(cell=cell, kpis=kpis, stabilized=result.stabilized)
    except Exception as err:  # recorded per row, sweep continues
        return SweepRow(cell=cell, kpis=None, stabilized=False, error=str(err))


def _run_cell_packed(args) -> SweepRow:
    return run_cell(*args)


def sweep(
    params: GeneratorParams,
    kinds: Sequence[str] = DISRUPTION_KINDS,
    durations: Sequence[int] = DEFAULT_DURATIONS,
    doh_levels: Sequence[float] | None = None,
    seeds: Sequence[int] = (0,),
    config: EngineConfig | None = None,
    start_day: int | None = None,
    jobs: int = 1,
) -> list[SweepRow]:
    """Full factorial sweep; row order follows the grid regardless of
    ``jobs``, so outputs are byte-stable."""
    doh_levels = list(doh_levels) if doh_levels else [params.days_on_hand]
    cells = [
        SweepCell(kind, duration, doh, seed)
        for kind in kinds
        for duration in durations
        for doh in doh_levels
        for seed in seeds
    ]
    if jobs <= 1 or len(cells) <= 1:
        return [run_cell(params, cell, config, start_day) for cell in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        packed = [(params, cell, config, start_day) for cell in cells]
        return list(pool.map(_run_cell_packed, packed))


def _mean_rows(rows: list[SweepRow]) -> list[dict]:
    groups: dict[tuple, list[SweepRow]] = {}
    for row in rows:
        key = (row.cell.kind, row.cell.duration, row.cell.days_on_hand)
        groups.setdefault(key, []).append(row)
    means = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], -k[2])):
        bucket = [r for r in groups[key] if r.kpis is not None]
        if not bucket:
            continue
        count = len(bucket)
        means.append(
            {
                "disruption_type": key[0],
                "disruption_duration": key[1],
                "days_on_hand": key[2],
                "seed": "mean",
                "iterations": sum(r.kpis.iterations for r in bucket) / count,
                "rescheduled_material_agents": sum(
                    r.kpis.rescheduled_material_agents for r in bucket
                )
                / count,
                "rescheduled_capacity_agents": sum(
                    r.kpis.rescheduled_capacity_agents for r in bucket
                )
                / count,
                "rescheduled_finished_goods": sum(
                    r.kpis.rescheduled_finished_goods for r in bucket
                )
                / count,
                "fg_fulfillment_by_orders": sum(
                    r.kpis.fg_fulfillment_by_orders for r in bucket
                )
                / count,
                "fg_fulfillment_by_volume": sum(
                    r.kpis.fg_fulfillment_by_volume for r in bucket
                )
                / count,
                "max_delay_days": sum(r.kpis.max_delay_days for r in bucket) / count,
                "stabilized": all(r.stabilized for r in bucket),
            }
        )
    return means


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def sweep_csv(rows: list[SweepRow]) -> str:
    """Per-seed rows followed by per-cell means, fixed column layout."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        data = row.to_dict()
        writer.writerow([_format_cell(data.get(col, "")) for col in CSV_COLUMNS])
    for mean in _mean_rows(rows):
        writer.writerow([_format_cell(mean.get(col, "")) for col in CSV_COLUMNS])
    return out.getvalue()


def sweep_json(rows: list[SweepRow]) -> str:
    payload = {
        "rows": [row.to_dict() for row in rows],
        "means": _mean_rows(rows),
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))
