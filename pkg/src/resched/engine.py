"""Negotiation engine: phased rounds of local optimization and proposals.

A run applies disruption events, then iterates synchronous rounds until a
round produces no proposals and no schedule changes (or the iteration cap
is hit). Each round has four phases:

  1. supplier      - perturbed material agents re-check whether availability
                     still covers their committed deliveries; if not they
                     re-allocate and propose reductions to shorted customers
  2. consolidate   - material agents with pending proposals reconcile them,
                     reduce (and where components recover, re-place) their
                     production, notify their capacity package, and re-run
                     the supplier role against the new availability
  3. capacity      - capacity packages whose demand violates a per-day limit
                     re-allocate member production and propose the new
                     per-day grants
  4. consolidate   - like phase 2, consuming the capacity grants

Within a phase every step reads the same snapshot; updates and proposals
merge at phase end in ascending agent id, so results are independent of
processing order. Committed supply only degrades: per (order, day) the
cumulative committed quantity never exceeds what the round started with.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

from .errors import EngineError
from .model import (
    EXTERNAL_CUSTOMER,
    ORDER_CANCELLED,
    ORDER_PARTIALLY_REDUCED,
    DisruptionEvent,
    WorldState,
    apply_disruption,
    check_feasibility,
    clean_series,
    prefix_sums,
)
from .solvers import (
    MODE_ALL_OR_NOTHING,
    MODE_PARTIAL,
    MODE_CAPACITY,
    AllocationProblem,
    OrderSpec,
    ReductionProblem,
    WeightConfig,
    solve_all_or_nothing,
    solve_capacity,
    solve_consolidation,
    solve_partial,
)

CAPACITY_ORDER_PREFIX = "cap::"

PHASE_SUPPLIER = "supplier"
PHASE_CONSOLIDATE = "consolidate"
PHASE_CAPACITY = "capacity"
PHASE_CONSOLIDATE_2 = "consolidate2"
PHASE_INVENTORY = "inventory_reduction"


def capacity_order_id(package_id: str, member_id: str) -> str:
    return f"{CAPACITY_ORDER_PREFIX}{package_id}::{member_id}"


@dataclass(frozen=True)
class ChangeProposal:
    """Per-order, per-day requested reduction sent between neighbours.

    ``grant`` is only set on proposals from capacity agents and carries the
    member's full new per-day allowance (deltas alone cannot express moves).
    """

    sender: str
    receiver: str
    order: str
    deltas: dict[int, int]
    round_no: int
    grant: dict[int, int] | None = None

    def to_dict(self) -> dict:
        return {
            "from": self.sender,
            "to": self.receiver,
            "order": self.order,
            "deltas": {str(d): q for d, q in sorted(self.deltas.items())},
            "grant": None
            if self.grant is None
            else {str(d): q for d, q in sorted(self.grant.items())},
            "round": self.round_no,
        }


@dataclass
class EngineConfig:
    horizon_days: int = 14
    max_iterations: int = 50
    fulfillment_mode: str = MODE_PARTIAL
    weights: WeightConfig = field(default_factory=WeightConfig)
    inventory_reduction_enabled: bool = False
    deterministic_order: bool = True

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise EngineError("max_iterations must be at least 1")
        if self.fulfillment_mode not in (MODE_PARTIAL, MODE_ALL_OR_NOTHING):
            raise EngineError(f"unknown fulfillment mode {self.fulfillment_mode!r}")
        self.weights.validate()

    def to_dict(self) -> dict:
        data = asdict(self)
        data["weights"] = {
            "priority_weight": self.weights.priority_weight
            and {str(k): v for k, v in sorted(self.weights.priority_weight.items())},
            "fulfillment_weight": self.weights.fulfillment_weight,
            "adherence_weight": self.weights.adherence_weight,
            "day_attenuation": self.weights.day_attenuation
            and list(self.weights.day_attenuation),
        }
        return data


@dataclass
class ScheduleUpdate:
    """Output of one agent step; merged into the world at phase end."""

    agent: str
    production: dict[int, int] | None = None
    order_schedules: dict[str, dict[int, int]] = field(default_factory=dict)
    order_status: dict[str, str] = field(default_factory=dict)
    reduction_plan: dict[int, int] | None = None

    def is_empty(self) -> bool:
        return (
            self.production is None
            and not self.order_schedules
            and not self.order_status
        )


@dataclass
class TraceRecord:
    round_no: int
    phase: str
    agent: str
    proposals_in: list[dict]
    proposals_out: list[dict]
    schedule_delta: dict

    def to_dict(self) -> dict:
        return {
            "round": self.round_no,
            "phase": self.phase,
            "agent": self.agent,
            "proposals_in": self.proposals_in,
            "proposals_out": self.proposals_out,
            "schedule_delta": self.schedule_delta,
        }


@dataclass
class RunResult:
    world: WorldState
    iterations_used: int
    stabilized: bool
    trace: list[TraceRecord]
    affected_material: tuple[str, ...]
    affected_capacity: tuple[str, ...]
    affected_finished_goods: tuple[str, ...]
    events: tuple[DisruptionEvent, ...]

    def trace_ndjson(self) -> str:
        return "\n".join(
            json.dumps(r.to_dict(), sort_keys=True, separators=(",", ":"))
            for r in self.trace
        )

    def summary(self) -> dict:
        return {
            "iterations_used": self.iterations_used,
            "stabilized": self.stabilized,
            "affected_material": list(self.affected_material),
            "affected_capacity": list(self.affected_capacity),
            "affected_finished_goods": list(self.affected_finished_goods),
            "events": [asdict(e) for e in self.events],
        }


# -- helpers -----------------------------------------------------------------


def _positive_deltas(old: dict[int, int], new: dict[int, int]) -> dict[int, int]:
    days = set(old) | set(new)
    return {
        d: old.get(d, 0) - new.get(d, 0)
        for d in sorted(days)
        if old.get(d, 0) - new.get(d, 0) > 0
    }


def _delivered_cumulative(
    world: WorldState, customer: str, supplier: str
) -> list[int]:
    series = [0] * world.horizon_days
    for order in world.component_orders(customer, supplier):
        for d, q in order.demand.items():
            if 0 <= d < world.horizon_days:
                series[d] += q
    total = 0
    for d in range(world.horizon_days):
        total += series[d]
        series[d] = total
    return series


def _component_ceilings(world: WorldState, agent_id: str) -> dict[str, list[int]]:
    """Per supplier: max cumulative production its deliveries support."""
    node = world.bom.node(agent_id)
    ceilings: dict[str, list[int]] = {}
    for link in node.supplier_links:
        delivered = _delivered_cumulative(world, agent_id, link.supplier)
        ceilings[link.supplier] = [q // link.qty_per_unit for q in delivered]
    return ceilings


def _running_max(series: list[int]) -> list[int]:
    out = []
    top = 0
    for v in series:
        top = max(top, v)
        out.append(top)
    return out


def _series_diff(cum: list[int]) -> dict[int, int]:
    out: dict[int, int] = {}
    prev = 0
    for day, value in enumerate(cum):
        if value - prev > 0:
            out[day] = value - prev
        prev = value
    return out


def _order_status_for(total_now: int, baseline_total: int, current: str) -> str:
    if total_now == 0 and baseline_total > 0:
        return ORDER_CANCELLED
    if total_now < baseline_total:
        return ORDER_PARTIALLY_REDUCED
    return current


# -- agent steps ---------------------------------------------------------------


def material_agent_step(
    world: WorldState,
    agent_id: str,
    inbox: list[ChangeProposal],
    config: EngineConfig,
    round_no: int = 0,
) -> tuple[ScheduleUpdate, list[ChangeProposal]]:
    """One material-agent evaluation; pure with respect to ``world``.

    Consolidates pending proposals first (reducing production no further
    than needed and re-placing displaced quantity on later component- and
    grant-feasible days), then plays the supplier role: when availability
    no longer covers committed deliveries, re-allocates them and proposes
    the reductions to each shorted customer.
    """
    if not world.is_material(agent_id):
        raise EngineError(f"{agent_id!r} is not a material agent")
    node = world.bom.node(agent_id)
    profile = world.supply[agent_id]
    horizon = world.horizon_days
    update = ScheduleUpdate(agent=agent_id)
    proposals: list[ChangeProposal] = []
    production = dict(profile.planned_production)

    if inbox:
        production = _consolidate(
            world, agent_id, inbox, config, round_no, update, proposals, production
        )

    # supplier role: does availability still cover committed deliveries?
    inflow = [0] * horizon
    inflow[0] += profile.in_stock
    for d, q in profile.in_transit.items():
        if 0 <= d < horizon:
            inflow[d] += q
    for d, q in production.items():
        if 0 <= d < horizon:
            inflow[d] += q
    avail_cum = [0] * horizon
    total = 0
    for d in range(horizon):
        total += inflow[d]
        avail_cum[d] = total

    supplied = world.orders_supplied_by(agent_id)
    committed_cum = [0] * horizon
    for order in supplied:
        for d, q in order.demand.items():
            if 0 <= d < horizon:
                committed_cum[d] += q
    total = 0
    violated = False
    for d in range(horizon):
        total += committed_cum[d]
        committed_cum[d] = total
        if total > avail_cum[d]:
            violated = True

    if violated:
        specs = tuple(
            OrderSpec(o.id, dict(o.demand), priority=o.priority) for o in supplied
        )
        problem = AllocationProblem(
            orders=specs,
            supply=tuple(inflow),
            horizon=horizon,
            mode=config.fulfillment_mode,
        )
        if config.fulfillment_mode == MODE_PARTIAL:
            allocation = solve_partial(problem, config.weights)
        else:
            allocation = solve_all_or_nothing(problem, config.weights)
        baseline_orders = world.baseline()["orders"]
        for order in supplied:
            new_schedule = allocation.x.get(order.id, {})
            if new_schedule == clean_series(order.demand):
                continue
            update.order_schedules[order.id] = new_schedule
            baseline_total = sum(
                baseline_orders.get(order.id, {}).get("demand", {}).values()
            )
            status = _order_status_for(
                sum(new_schedule.values()), baseline_total, order.status
            )
            if status != order.status:
                update.order_status[order.id] = status
            deltas = _positive_deltas(order.demand, new_schedule)
            proposals.append(
                ChangeProposal(
                    sender=agent_id,
                    receiver=order.customer,
                    order=order.id,
                    deltas=deltas,
                    round_no=round_no,
                )
            )

    proposals.sort(key=lambda p: (p.receiver, p.order))
    return update, proposals


def _consolidate(
    world: WorldState,
    agent_id: str,
    inbox: list[ChangeProposal],
    config: EngineConfig,
    round_no: int,
    update: ScheduleUpdate,
    proposals: list[ChangeProposal],
    production: dict[int, int],
) -> dict[int, int]:
    node = world.bom.node(agent_id)
    horizon = world.horizon_days
    link_by_supplier = {l.supplier: l for l in node.supplier_links}

    proposing_suppliers: set[str] = set()
    grant_caps: list[int] | None = None
    for prop in inbox:
        if prop.receiver != agent_id:
            raise EngineError(
                f"proposal for {prop.receiver!r} delivered to {agent_id!r}"
            )
        if world.is_capacity(prop.sender):
            grant = prop.grant or {}
            caps = [grant.get(d, 0) for d in range(horizon)]
            if grant_caps is None:
                grant_caps = caps
            else:
                grant_caps = [min(a, b) for a, b in zip(grant_caps, caps)]
        else:
            if prop.order not in world.orders:
                raise EngineError(
                    f"proposal references unknown order {prop.order!r}"
                )
            if world.orders[prop.order].customer != agent_id:
                raise EngineError(
                    f"proposal order {prop.order!r} does not target {agent_id!r}"
                )
            if prop.sender not in link_by_supplier:
                raise EngineError(
                    f"{prop.sender!r} is not a supplier of {agent_id!r}"
                )
            proposing_suppliers.add(prop.sender)

    prod_cum = prefix_sums(production, horizon)
    ceilings = _component_ceilings(world, agent_id)

    # reduction requests per proposing source, in own-production units;
    # namespaced keys keep a supplier named "capacity" from colliding
    requested: dict[str, dict[int, int]] = {}
    for supplier in sorted(proposing_suppliers):
        ceiling = ceilings[supplier]
        shortfall = [max(0, prod_cum[d] - ceiling[d]) for d in range(horizon)]
        requested[f"supplier::{supplier}"] = _series_diff(_running_max(shortfall))
    if grant_caps is not None:
        grant_cum = []
        total = 0
        for d in range(horizon):
            total += grant_caps[d]
            grant_cum.append(total)
        shortfall = [max(0, prod_cum[d] - grant_cum[d]) for d in range(horizon)]
        requested["capacity::grant"] = _series_diff(_running_max(shortfall))

    plan = solve_consolidation(
        ReductionProblem(
            requested=requested,
            horizon=horizon,
            day_weights=tuple(config.weights.attenuation(horizon)),
            max_per_day={d: production.get(d, 0) for d in range(horizon)},
        )
    )
    if plan.reductions:
        update.reduction_plan = dict(plan.reductions)

    # new production: cut where forced, re-place displaced quantity on the
    # earliest later days components (and any capacity grant) still allow
    feasible_cum = [prod_cum[d] for d in range(horizon)]
    for ceiling in ceilings.values():
        feasible_cum = [min(a, b) for a, b in zip(feasible_cum, ceiling)]
    new_production: dict[int, int] = {}
    placed = 0
    for day in range(horizon):
        take = feasible_cum[day] - placed
        if grant_caps is not None:
            take = min(take, grant_caps[day])
        take = max(take, 0)
        if take:
            new_production[day] = take
        placed += take

    if new_production != clean_series(production):
        update.production = new_production
        if node.capacity_link is not None:
            deltas = _positive_deltas(production, new_production)
            proposals.append(
                ChangeProposal(
                    sender=agent_id,
                    receiver=node.capacity_link,
                    order=capacity_order_id(node.capacity_link, agent_id),
                    deltas=deltas,
                    round_no=round_no,
                )
            )
        return new_production
    return production


def capacity_agent_step(
    world: WorldState,
    agent_id: str,
    inbox: list[ChangeProposal],
    config: EngineConfig,
    round_no: int = 0,
) -> tuple[ScheduleUpdate, list[ChangeProposal]]:
    """Re-allocate member production when a per-day limit is violated.

    The capacity agent owns no schedule itself; it emits proposals whose
    ``grant`` carries each moved or cut member's new per-day allowance.
    Direct capacity bookings are fixed reservations that shrink what the
    members can use.
    """
    if not world.is_capacity(agent_id):
        raise EngineError(f"{agent_id!r} is not a capacity agent")
    pkg = world.capacity_packages[agent_id]
    horizon = world.horizon_days
    update = ScheduleUpdate(agent=agent_id)

    reserved = [0] * horizon
    for order in world.capacity_reservations(agent_id):
        for d, q in order.demand.items():
            if 0 <= d < horizon:
                reserved[d] += q
    effective = [
        max(0, pkg.profile.available(d) - reserved[d]) for d in range(horizon)
    ]

    members = sorted(pkg.member_materials)
    demand_rows = {
        member: clean_series(world.supply[member].planned_production)
        for member in members
    }
    violated = any(
        sum(demand_rows[m].get(d, 0) for m in members) > effective[d]
        for d in range(horizon)
    )
    if not violated:
        return update, []

    specs = tuple(
        OrderSpec(capacity_order_id(agent_id, member), demand_rows[member])
        for member in members
        if demand_rows[member]
    )
    allocation = solve_capacity(
        AllocationProblem(
            orders=specs, supply=tuple(effective), horizon=horizon, mode=MODE_CAPACITY
        )
    )
    proposals = []
    for member in members:
        row_id = capacity_order_id(agent_id, member)
        granted = allocation.x.get(row_id, {})
        if granted == demand_rows[member]:
            continue
        proposals.append(
            ChangeProposal(
                sender=agent_id,
                receiver=member,
                order=row_id,
                deltas=_positive_deltas(demand_rows[member], granted),
                round_no=round_no,
                grant=granted,
            )
        )
    return update, proposals


def trigger(world: WorldState, event: DisruptionEvent) -> frozenset[str]:
    """Agents whose supply or capacity profile the event actually changes."""
    return apply_disruption(world, event)[1]


# -- the run -------------------------------------------------------------------


class NegotiationRun:
    """Mutable run state; ``step()`` advances one round, ``run()`` finishes."""

    def __init__(
        self,
        world: WorldState,
        events: list[DisruptionEvent] | tuple[DisruptionEvent, ...],
        config: EngineConfig | None = None,
        extra_dirty: tuple[str, ...] = (),
    ):
        self.config = config or EngineConfig()
        self.config.validate()
        self.input_world = world
        self.events = tuple(events)
        current = world.clone()
        affected: set[str] = set(extra_dirty)
        for event in self.events:
            current, ids = apply_disruption(current, event)
            affected |= set(ids)
        self.world = current
        self.dirty_material = {a for a in affected if current.is_material(a)}
        self.dirty_capacity = {a for a in affected if current.is_capacity(a)}
        self.inboxes: dict[str, dict[tuple[str, str], ChangeProposal]] = {}
        self.trace: list[TraceRecord] = []
        self.iterations = 0
        self._finalized: RunResult | None = None

    # -- state inspection ---------------------------------------------------

    def has_pending_work(self) -> bool:
        return bool(self.dirty_material or self.dirty_capacity or self.inboxes)

    @property
    def stabilized(self) -> bool:
        return not self.has_pending_work()

    # -- round machinery ----------------------------------------------------

    def _ordered(self, agents) -> list[str]:
        ordered = sorted(agents)
        return ordered if self.config.deterministic_order else ordered[::-1]

    def _route(self, proposal: ChangeProposal) -> None:
        receiver = proposal.receiver
        if receiver == EXTERNAL_CUSTOMER:
            return
        if self.world.is_capacity(receiver):
            self.dirty_capacity.add(receiver)
            return
        if not self.world.is_material(receiver):
            raise EngineError(f"proposal routed to unknown agent {receiver!r}")
        box = self.inboxes.setdefault(receiver, {})
        box[(proposal.sender, proposal.order)] = proposal

    def _apply(self, update: ScheduleUpdate) -> dict:
        delta: dict = {}
        world = self.world
        if update.production is not None:
            profile = world.supply[update.agent]
            old = clean_series(profile.planned_production)
            new = clean_series(update.production)
            if old != new:
                delta["production"] = {
                    str(d): [old.get(d, 0), new.get(d, 0)]
                    for d in sorted(set(old) | set(new))
                    if old.get(d, 0) != new.get(d, 0)
                }
                profile.planned_production = new
        order_delta: dict = {}
        for oid, schedule in update.order_schedules.items():
            order = world.orders[oid]
            old = clean_series(order.demand)
            new = clean_series(schedule)
            if old != new:
                order_delta[oid] = {
                    str(d): [old.get(d, 0), new.get(d, 0)]
                    for d in sorted(set(old) | set(new))
                    if old.get(d, 0) != new.get(d, 0)
                }
                order.demand = new
        if order_delta:
            delta["orders"] = order_delta
        status_delta: dict = {}
        for oid, status in update.order_status.items():
            if world.orders[oid].status != status:
                world.orders[oid].status = status
                status_delta[oid] = status
        if status_delta:
            delta["status"] = status_delta
        if update.reduction_plan:
            delta["reduction_plan"] = {
                str(d): q for d, q in sorted(update.reduction_plan.items())
            }
        return delta

    def _material_phase(self, round_no: int, phase: str, agents: list[str]) -> bool:
        outputs = []
        for agent in self._ordered(agents):
            inbox_map = self.inboxes.pop(agent, {})
            inbox = [inbox_map[k] for k in sorted(inbox_map)]
            update, props = material_agent_step(
                self.world, agent, inbox, self.config, round_no
            )
            outputs.append((agent, inbox, update, props))
        changed = False
        for agent, inbox, update, props in sorted(outputs, key=lambda o: o[0]):
            delta = self._apply(update)
            for prop in props:
                self._route(prop)
            if delta or props:
                changed = True
            self.trace.append(
                TraceRecord(
                    round_no=round_no,
                    phase=phase,
                    agent=agent,
                    proposals_in=[p.to_dict() for p in inbox],
                    proposals_out=[p.to_dict() for p in props],
                    schedule_delta=delta,
                )
            )
        return changed

    def _capacity_phase(self, round_no: int, agents: list[str]) -> bool:
        outputs = []
        for agent in self._ordered(agents):
            update, props = capacity_agent_step(
                self.world, agent, [], self.config, round_no
            )
            outputs.append((agent, update, props))
        changed = False
        for agent, update, props in sorted(outputs, key=lambda o: o[0]):
            delta = self._apply(update)
            for prop in props:
                self._route(prop)
            if delta or props:
                changed = True
            self.trace.append(
                TraceRecord(
                    round_no=round_no,
                    phase=PHASE_CAPACITY,
                    agent=agent,
                    proposals_in=[],
                    proposals_out=[p.to_dict() for p in props],
                    schedule_delta=delta,
                )
            )
        return changed

    def step(self) -> list[TraceRecord] | None:
        """Run one round; None when already stable or out of iterations."""
        if self._finalized is not None:
            return None
        if not self.has_pending_work():
            return None
        if self.iterations >= self.config.max_iterations:
            return None
        self.iterations += 1
        round_no = self.iterations
        mark = len(self.trace)

        phase1 = sorted(self.dirty_material)
        self.dirty_material = set()
        self._material_phase(round_no, PHASE_SUPPLIER, phase1)

        phase2 = sorted(self.inboxes)
        self._material_phase(round_no, PHASE_CONSOLIDATE, phase2)

        phase3 = sorted(self.dirty_capacity)
        self.dirty_capacity = set()
        self._capacity_phase(round_no, phase3)

        phase4 = sorted(self.inboxes)
        self._material_phase(round_no, PHASE_CONSOLIDATE_2, phase4)

        return self.trace[mark:]

    def run(self) -> RunResult:
        while self.step() is not None:
            pass
        return self.result()

    # -- result assembly ------------------------------------------------------

    def _affected_sets(self) -> tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]:
        before = self.input_world
        after = self.world
        material: list[str] = []
        for aid in after.material_ids():
            prod_before = clean_series(before.supply[aid].planned_production)
            prod_after = clean_series(after.supply[aid].planned_production)
            orders_before = {
                o.id: (clean_series(o.demand), o.status)
                for o in before.orders.values()
                if o.supplier == aid
            }
            orders_after = {
                o.id: (clean_series(o.demand), o.status)
                for o in after.orders.values()
                if o.supplier == aid
            }
            if prod_before != prod_after or orders_before != orders_after:
                material.append(aid)
        capacity: list[str] = []
        for pid in after.capacity_ids():
            pkg_before = before.capacity_packages[pid]
            pkg_after = after.capacity_packages[pid]
            if clean_series(pkg_before.profile.per_day) != clean_series(
                pkg_after.profile.per_day
            ):
                capacity.append(pid)
                continue
            if any(m in material for m in pkg_after.member_materials):
                capacity.append(pid)
        finished = [
            aid for aid in material if after.bom.node(aid).is_finished_good
        ]
        return tuple(material), tuple(capacity), tuple(finished)

    def result(self) -> RunResult:
        if self._finalized is not None:
            return self._finalized
        stabilized = self.stabilized
        if stabilized and self.config.inventory_reduction_enabled:
            self.world, records = _inventory_reduction_traced(
                self.world, self.iterations
            )
            self.trace.extend(records)
        material, capacity, finished = self._affected_sets()
        self._finalized = RunResult(
            world=self.world,
            iterations_used=self.iterations,
            stabilized=stabilized,
            trace=self.trace,
            affected_material=material,
            affected_capacity=capacity,
            affected_finished_goods=finished,
            events=self.events,
        )
        if stabilized:
            leftovers = check_feasibility(self.world)
            if leftovers:
                raise EngineError(
                    f"stabilized run failed the feasibility check: {leftovers[0]}"
                )
        return self._finalized


def run_until_stable(
    world: WorldState,
    events: list[DisruptionEvent] | tuple[DisruptionEvent, ...],
    config: EngineConfig | None = None,
    extra_dirty: tuple[str, ...] = (),
) -> RunResult:
    return NegotiationRun(world, events, config, extra_dirty).run()


# -- optional inventory reduction ----------------------------------------------


def _inventory_reduction_traced(
    world: WorldState, round_no: int
) -> tuple[WorldState, list[TraceRecord]]:
    new_world = world.clone()
    baseline_orders = world.baseline()["orders"]
    horizon = world.horizon_days
    records: list[TraceRecord] = []

    for agent_id in new_world.bom.topological_order():  # customers first
        node = new_world.bom.node(agent_id)
        profile = new_world.supply[agent_id]
        lost_total = 0
        for order in new_world.orders.values():
            if order.supplier != agent_id:
                continue
            baseline_total = sum(
                baseline_orders.get(order.id, {}).get("demand", {}).values()
            )
            lost_total += max(0, baseline_total - order.total())
        if lost_total == 0 or not profile.planned_production:
            continue

        committed = [0] * horizon
        for order in new_world.orders_supplied_by(agent_id):
            for d, q in order.demand.items():
                if 0 <= d < horizon:
                    committed[d] += q
        total = 0
        floor_cum = [0] * horizon
        transit_cum = prefix_sums(profile.in_transit, horizon)
        top = 0
        for d in range(horizon):
            total += committed[d]
            need = max(0, total - profile.in_stock - transit_cum[d])
            top = max(top, need)
            floor_cum[d] = top

        prod = [profile.planned_production.get(d, 0) for d in range(horizon)]
        prod_cum = [0] * horizon
        total = 0
        for d in range(horizon):
            total += prod[d]
            prod_cum[d] = total
        trimmed: dict[int, int] = {}
        left = lost_total
        for day in range(horizon - 1, -1, -1):
            if left <= 0:
                break
            slack = min(prod_cum[n] - floor_cum[n] for n in range(day, horizon))
            take = min(prod[day], left, max(0, slack))
            if take <= 0:
                continue
            prod[day] -= take
            for n in range(day, horizon):
                prod_cum[n] -= take
            trimmed[day] = take
            left -= take
        trimmed_total = sum(trimmed.values())
        if trimmed_total == 0:
            continue

        update = ScheduleUpdate(agent=agent_id)
        update.production = {d: q for d, q in enumerate(prod) if q > 0}

        # strip the matching component deliveries, latest days first
        for link in node.supplier_links:
            to_strip = link.qty_per_unit * trimmed_total
            need_cum = [link.qty_per_unit * prod_cum[d] for d in range(horizon)]
            orders = new_world.component_orders(agent_id, link.supplier)
            delivered_cum = [0] * horizon
            for order in orders:
                for d, q in order.demand.items():
                    if 0 <= d < horizon:
                        delivered_cum[d] += q
            total = 0
            for d in range(horizon):
                total += delivered_cum[d]
                delivered_cum[d] = total
            for day in range(horizon - 1, -1, -1):
                if to_strip <= 0:
                    break
                slack = min(
                    delivered_cum[n] - need_cum[n] for n in range(day, horizon)
                )
                room = min(to_strip, max(0, slack))
                for order in orders:
                    if room <= 0:
                        break
                    sched = update.order_schedules.setdefault(
                        order.id, dict(order.demand)
                    )
                    have = sched.get(day, 0)
                    take = min(have, room)
                    if take <= 0:
                        continue
                    sched[day] = have - take
                    for n in range(day, horizon):
                        delivered_cum[n] -= take
                    room -= take
                    to_strip -= take
                    baseline_total = sum(
                        baseline_orders.get(order.id, {}).get("demand", {}).values()
                    )
                    status = _order_status_for(
                        sum(sched.values()), baseline_total, order.status
                    )
                    if status != order.status:
                        update.order_status[order.id] = status

        old_prod = clean_series(profile.planned_production)
        profile.planned_production = clean_series(update.production)
        delta: dict = {
            "production": {
                str(d): [old_prod.get(d, 0), update.production.get(d, 0)]
                for d in sorted(set(old_prod) | set(update.production))
                if old_prod.get(d, 0) != update.production.get(d, 0)
            }
        }
        order_delta = {}
        for oid, sched in update.order_schedules.items():
            order = new_world.orders[oid]
            old = clean_series(order.demand)
            new = clean_series(sched)
            if old != new:
                order_delta[oid] = {
                    str(d): [old.get(d, 0), new.get(d, 0)]
                    for d in sorted(set(old) | set(new))
                    if old.get(d, 0) != new.get(d, 0)
                }
                order.demand = new
        for oid, status in update.order_status.items():
            new_world.orders[oid].status = status
        if order_delta:
            delta["orders"] = order_delta
        records.append(
            TraceRecord(
                round_no=round_no,
                phase=PHASE_INVENTORY,
                agent=agent_id,
                proposals_in=[],
                proposals_out=[],
                schedule_delta=delta,
            )
        )
    return new_world, records


def inventory_reduction(world: WorldState) -> WorldState:
    """Strip production (and the component deliveries feeding it) that is no
    longer demanded downstream, never cutting below current commitments.

    Meant to run on a stabilized world; processes customers before their
    suppliers so reductions cascade down the BOM.
    """
    return _inventory_reduction_traced(world, 0)[0]
