"""Supply-network world state.

The world is a bill-of-materials graph of material nodes plus capacity
packages, an order book, and per-agent supply profiles over a discrete
horizon of integer days. Quantities are non-negative integer pieces.
A frozen baseline snapshot of all schedules is taken at build time and
every later mutation can be compared against it.

Conventions:
  * day 0 is the first day of the rescheduling horizon,
  * material supply accumulates across days, capacity does not,
  * an order's ``demand`` map is the currently committed delivery
    schedule of its supplier (the baseline keeps the original one).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import DisruptionError, InfeasibleBaselineError, WorldValidationError

EXTERNAL_CUSTOMER = "EXTERNAL"

RAW_MATERIAL_DELAY = "raw_material_delay"
SFG_QUARANTINE = "sfg_quarantine"
LINE_STOPPAGE = "line_stoppage"
DISRUPTION_KINDS = (RAW_MATERIAL_DELAY, SFG_QUARANTINE, LINE_STOPPAGE)

ORDER_ACTIVE = "active"
ORDER_PARTIALLY_REDUCED = "partially_reduced"
ORDER_CANCELLED = "cancelled"
ORDER_STATUSES = (ORDER_ACTIVE, ORDER_PARTIALLY_REDUCED, ORDER_CANCELLED)


def cumulative(series: Mapping[int, int], day: int) -> int:
    """Sum of ``series`` over all days <= ``day``."""
    return sum(q for d, q in series.items() if d <= day)


def prefix_sums(series: Mapping[int, int], horizon: int) -> list[int]:
    """Dense prefix sums of a sparse day->qty map over ``range(horizon)``."""
    out = [0] * horizon
    for d, q in series.items():
        if 0 <= d < horizon:
            out[d] += q
    total = 0
    for d in range(horizon):
        total += out[d]
        out[d] = total
    return out


def series_total(series: Mapping[int, int]) -> int:
    return sum(series.values())


def clean_series(series: Mapping[int, int]) -> dict[int, int]:
    """Sorted copy with zero entries dropped."""
    return {d: q for d, q in sorted(series.items()) if q != 0}


@dataclass(frozen=True)
class SupplierLink:
    """One BOM edge: producing a unit of the parent consumes
    ``qty_per_unit`` units of ``supplier``."""

    supplier: str
    qty_per_unit: int = 1


@dataclass
class MaterialNode:
    id: str
    location: str = ""
    level: int = 0
    supplier_links: tuple[SupplierLink, ...] = ()
    customer_links: tuple[str, ...] = ()
    capacity_link: str | None = None
    is_finished_good: bool = False
    substitutes: tuple[str, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.supplier_links


@dataclass
class BomGraph:
    nodes: dict[str, MaterialNode] = field(default_factory=dict)

    def node(self, node_id: str) -> MaterialNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise WorldValidationError(f"unknown material node {node_id!r}") from None

    def suppliers_of(self, node_id: str) -> tuple[SupplierLink, ...]:
        return self.node(node_id).supplier_links

    def customers_of(self, node_id: str) -> tuple[str, ...]:
        return self.node(node_id).customer_links

    def topological_order(self) -> list[str]:
        """Node ids ordered so every customer precedes its suppliers.

        Raises on cycles in the supplier graph.
        """
        state: dict[str, int] = {}  # 0 visiting, 1 done
        order: list[str] = []

        def visit(start: str) -> None:
            stack = [(start, iter(self.node(start).supplier_links))]
            state[start] = 0
            while stack:
                node_id, links = stack[-1]
                advanced = False
                for link in links:
                    child = link.supplier
                    mark = state.get(child)
                    if mark == 0:
                        raise WorldValidationError(
                            f"cycle in BOM involving {child!r}"
                        )
                    if mark is None:
                        state[child] = 0
                        stack.append((child, iter(self.node(child).supplier_links)))
                        advanced = True
                        break
                if not advanced:
                    stack.pop()
                    state[node_id] = 1
                    order.append(node_id)

        for node_id in sorted(self.nodes):
            if node_id not in state:
                visit(node_id)
        order.reverse()  # customers first
        return order

    def validate(self) -> None:
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            seen: set[str] = set()
            for link in node.supplier_links:
                if link.supplier not in self.nodes:
                    raise WorldValidationError(
                        f"node {node_id!r} lists unknown supplier {link.supplier!r}"
                    )
                if link.supplier in seen:
                    raise WorldValidationError(
                        f"node {node_id!r} lists supplier {link.supplier!r} twice"
                    )
                seen.add(link.supplier)
                if link.qty_per_unit <= 0:
                    raise WorldValidationError(
                        f"non-positive consumption {link.qty_per_unit} on "
                        f"{node_id!r} -> {link.supplier!r}"
                    )
                if node_id not in self.nodes[link.supplier].customer_links:
                    raise WorldValidationError(
                        f"{node_id!r} lists {link.supplier!r} as supplier but the "
                        "reverse customer link is missing"
                    )
            for customer in node.customer_links:
                if customer not in self.nodes:
                    raise WorldValidationError(
                        f"node {node_id!r} lists unknown customer {customer!r}"
                    )
                if all(
                    link.supplier != node_id
                    for link in self.nodes[customer].supplier_links
                ):
                    raise WorldValidationError(
                        f"{node_id!r} lists {customer!r} as customer but "
                        f"{customer!r} does not consume it"
                    )
        self.topological_order()  # raises on cycles


@dataclass
class CapacityProfile:
    """Per-day expiring capacity. Unused units never carry over."""

    per_day: dict[int, int] = field(default_factory=dict)

    def available(self, day: int) -> int:
        return self.per_day.get(day, 0)


@dataclass
class CapacityPackage:
    id: str
    member_materials: tuple[str, ...] = ()
    profile: CapacityProfile = field(default_factory=CapacityProfile)


@dataclass
class Order:
    """A dated, prioritized demand of one agent on one of its suppliers."""

    id: str
    supplier: str
    customer: str
    material: str
    demand: dict[int, int] = field(default_factory=dict)
    priority: int = 1
    status: str = ORDER_ACTIVE

    @property
    def is_external(self) -> bool:
        return self.customer == EXTERNAL_CUSTOMER

    def total(self) -> int:
        return series_total(self.demand)

    def completion_day(self) -> int | None:
        days = [d for d, q in self.demand.items() if q > 0]
        return max(days) if days else None


@dataclass
class SupplyProfile:
    """Material availability of one agent: starting stock, inbound
    arrivals, and the agent's own planned production."""

    in_stock: int = 0
    in_transit: dict[int, int] = field(default_factory=dict)
    planned_production: dict[int, int] = field(default_factory=dict)

    def gross_cumulative(self, day: int) -> int:
        return (
            self.in_stock
            + cumulative(self.in_transit, day)
            + cumulative(self.planned_production, day)
        )

    def inflow_series(self, horizon: int) -> list[int]:
        """Per-day availability gains; stock counts on day 0."""
        out = [0] * horizon
        out[0] += self.in_stock
        for d, q in self.in_transit.items():
            if 0 <= d < horizon:
                out[d] += q
        for d, q in self.planned_production.items():
            if 0 <= d < horizon:
                out[d] += q
        return out

    def clone(self) -> "SupplyProfile":
        return SupplyProfile(
            in_stock=self.in_stock,
            in_transit=dict(self.in_transit),
            planned_production=dict(self.planned_production),
        )


@dataclass(frozen=True)
class DisruptionEvent:
    kind: str
    target: str
    start_day: int
    duration_days: int
    affected_quantity: int | None = None

    @property
    def end_day(self) -> int:
        return self.start_day + self.duration_days

    def validate(self) -> None:
        if self.kind not in DISRUPTION_KINDS:
            raise DisruptionError(f"unknown disruption kind {self.kind!r}")
        if self.duration_days <= 0:
            raise DisruptionError("duration_days must be positive")
        if self.affected_quantity is not None and self.affected_quantity <= 0:
            raise DisruptionError("affected_quantity must be positive when given")


@dataclass
class WorldState:
    """Complete simulation state. Treated as immutable between engine
    rounds; all mutation goes through explicit copies."""

    bom: BomGraph
    capacity_packages: dict[str, CapacityPackage]
    orders: dict[str, Order]
    supply: dict[str, SupplyProfile]
    horizon_days: int
    baseline_json: str = ""

    # -- identity helpers -------------------------------------------------

    def is_material(self, agent_id: str) -> bool:
        return agent_id in self.bom.nodes

    def is_capacity(self, agent_id: str) -> bool:
        return agent_id in self.capacity_packages

    def material_ids(self) -> list[str]:
        return sorted(self.bom.nodes)

    def capacity_ids(self) -> list[str]:
        return sorted(self.capacity_packages)

    # -- order book views -------------------------------------------------

    def orders_supplied_by(self, agent_id: str) -> list[Order]:
        return [
            o
            for oid, o in sorted(self.orders.items())
            if o.supplier == agent_id and o.status != ORDER_CANCELLED
        ]

    def component_orders(self, customer_id: str, supplier_id: str) -> list[Order]:
        return [
            o
            for oid, o in sorted(self.orders.items())
            if o.customer == customer_id
            and o.supplier == supplier_id
            and o.status != ORDER_CANCELLED
        ]

    def capacity_reservations(self, package_id: str) -> list[Order]:
        """Orders booked directly against a capacity package; treated as
        fixed reservations that shrink the capacity visible to members."""
        return [
            o
            for oid, o in sorted(self.orders.items())
            if o.supplier == package_id and o.status != ORDER_CANCELLED
        ]

    def committed_cumulative(self, agent_id: str, day: int) -> int:
        return sum(
            cumulative(o.demand, day) for o in self.orders_supplied_by(agent_id)
        )

    # -- serialization ----------------------------------------------------

    def schedule_snapshot(self) -> dict:
        """Everything that counts as 'the schedule': order commitments,
        supply profiles, and capacity profiles."""
        return {
            "orders": {
                oid: {
                    "demand": {str(d): q for d, q in sorted(o.demand.items())},
                    "status": o.status,
                    "priority": o.priority,
                }
                for oid, o in sorted(self.orders.items())
            },
            "supply": {
                aid: {
                    "in_stock": p.in_stock,
                    "in_transit": {str(d): q for d, q in sorted(p.in_transit.items())},
                    "planned_production": {
                        str(d): q for d, q in sorted(p.planned_production.items())
                    },
                }
                for aid, p in sorted(self.supply.items())
            },
            "capacity": {
                pid: {str(d): q for d, q in sorted(pkg.profile.per_day.items())}
                for pid, pkg in sorted(self.capacity_packages.items())
            },
        }

    def to_dict(self) -> dict:
        return {
            "horizon_days": self.horizon_days,
            "nodes": {
                nid: {
                    "location": n.location,
                    "level": n.level,
                    "suppliers": [
                        {"id": l.supplier, "qty_per_unit": l.qty_per_unit}
                        for l in n.supplier_links
                    ],
                    "customers": list(n.customer_links),
                    "capacity_link": n.capacity_link,
                    "is_finished_good": n.is_finished_good,
                    "substitutes": list(n.substitutes),
                }
                for nid, n in sorted(self.bom.nodes.items())
            },
            "capacity_packages": {
                pid: {
                    "members": sorted(pkg.member_materials),
                    "per_day": {str(d): q for d, q in sorted(pkg.profile.per_day.items())},
                }
                for pid, pkg in sorted(self.capacity_packages.items())
            },
            "orders": {
                oid: {
                    "supplier": o.supplier,
                    "customer": o.customer,
                    "material": o.material,
                }
                for oid, o in sorted(self.orders.items())
            },
            "schedule": self.schedule_snapshot(),
        }

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()

    def clone(self) -> "WorldState":
        return WorldState(
            bom=self.bom,  # topology never mutates
            capacity_packages={
                pid: CapacityPackage(
                    id=pkg.id,
                    member_materials=pkg.member_materials,
                    profile=CapacityProfile(per_day=dict(pkg.profile.per_day)),
                )
                for pid, pkg in self.capacity_packages.items()
            },
            orders={
                oid: replace(o, demand=dict(o.demand)) for oid, o in self.orders.items()
            },
            supply={aid: p.clone() for aid, p in self.supply.items()},
            horizon_days=self.horizon_days,
            baseline_json=self.baseline_json,
        )

    def baseline(self) -> dict:
        return json.loads(self.baseline_json)

    def reset_to_baseline(self) -> "WorldState":
        """Fresh world with all schedules restored from the frozen snapshot."""
        base = self.baseline()
        world = self.clone()
        for oid, entry in base["orders"].items():
            order = world.orders[oid]
            order.demand = {int(d): q for d, q in entry["demand"].items()}
            order.status = entry["status"]
            order.priority = entry["priority"]
        for aid, entry in base["supply"].items():
            profile = world.supply[aid]
            profile.in_stock = entry["in_stock"]
            profile.in_transit = {int(d): q for d, q in entry["in_transit"].items()}
            profile.planned_production = {
                int(d): q for d, q in entry["planned_production"].items()
            }
        for pid, per_day in base["capacity"].items():
            world.capacity_packages[pid].profile.per_day = {
                int(d): q for d, q in per_day.items()
            }
        return world


# -- construction and validation -------------------------------------------


def build_world(
    nodes: Iterable[MaterialNode],
    packages: Iterable[CapacityPackage],
    orders: Iterable[Order],
    supplies: Mapping[str, SupplyProfile],
    horizon_days: int,
) -> WorldState:
    """Validate all inputs, snapshot the baseline, and return the world.

    Raises WorldValidationError on structural problems and
    InfeasibleBaselineError when the initial schedule cannot cover its
    own commitments.
    """
    if horizon_days <= 0:
        raise WorldValidationError("horizon_days must be positive")
    node_list = list(nodes)
    bom = BomGraph(nodes={n.id: n for n in node_list})
    if len(bom.nodes) != len(node_list):
        raise WorldValidationError("duplicate material node id")
    bom.validate()

    package_map: dict[str, CapacityPackage] = {}
    for pkg in packages:
        if pkg.id in package_map or pkg.id in bom.nodes:
            raise WorldValidationError(f"duplicate agent id {pkg.id!r}")
        package_map[pkg.id] = pkg
    for pkg in package_map.values():
        for member in pkg.member_materials:
            if member not in bom.nodes:
                raise WorldValidationError(
                    f"capacity package {pkg.id!r} lists unknown member {member!r}"
                )
            if bom.nodes[member].capacity_link != pkg.id:
                raise WorldValidationError(
                    f"member {member!r} of {pkg.id!r} does not link back to it"
                )
    for node in bom.nodes.values():
        if node.capacity_link is not None:
            pkg = package_map.get(node.capacity_link)
            if pkg is None:
                raise WorldValidationError(
                    f"node {node.id!r} links unknown capacity package "
                    f"{node.capacity_link!r}"
                )
            if node.id not in pkg.member_materials:
                raise WorldValidationError(
                    f"node {node.id!r} links {pkg.id!r} but is not a member"
                )

    order_map: dict[str, Order] = {}
    for order in orders:
        if order.id in order_map:
            raise WorldValidationError(f"duplicate order id {order.id!r}")
        if order.material not in bom.nodes:
            raise WorldValidationError(
                f"order {order.id!r} references unknown material {order.material!r}"
            )
        if order.supplier in package_map:
            if order.material not in package_map[order.supplier].member_materials:
                raise WorldValidationError(
                    f"order {order.id!r} books capacity {order.supplier!r} for a "
                    f"non-member material"
                )
        elif order.supplier not in bom.nodes:
            raise WorldValidationError(
                f"order {order.id!r} references unknown supplier {order.supplier!r}"
            )
        elif order.material != order.supplier:
            raise WorldValidationError(
                f"order {order.id!r} asks {order.supplier!r} for foreign material "
                f"{order.material!r}"
            )
        if order.customer != EXTERNAL_CUSTOMER and order.customer not in bom.nodes:
            raise WorldValidationError(
                f"order {order.id!r} references unknown customer {order.customer!r}"
            )
        if order.priority <= 0:
            raise WorldValidationError(f"order {order.id!r} has non-positive priority")
        if order.status not in ORDER_STATUSES:
            raise WorldValidationError(f"order {order.id!r} has unknown status")
        for day, qty in order.demand.items():
            if qty <= 0:
                raise WorldValidationError(
                    f"order {order.id!r} has non-positive quantity on day {day}"
                )
            if not 0 <= day < horizon_days:
                raise WorldValidationError(
                    f"order {order.id!r} demands outside the horizon (day {day})"
                )
        if order.status == ORDER_CANCELLED and order.total() != 0:
            raise WorldValidationError(
                f"cancelled order {order.id!r} still has demand"
            )
        order_map[order.id] = order

    supply_map: dict[str, SupplyProfile] = {}
    for aid in sorted(supplies):
        if aid not in bom.nodes:
            raise WorldValidationError(f"supply profile for unknown agent {aid!r}")
        profile = supplies[aid]
        if profile.in_stock < 0:
            raise WorldValidationError(f"negative in_stock for {aid!r}")
        for label, series in (
            ("in_transit", profile.in_transit),
            ("planned_production", profile.planned_production),
        ):
            for day, qty in series.items():
                if qty < 0:
                    raise WorldValidationError(
                        f"negative {label} quantity for {aid!r} on day {day}"
                    )
                if day < 0:
                    raise WorldValidationError(
                        f"{label} for {aid!r} on negative day {day}"
                    )
        # arrivals may land past the horizon (a disruption can push them
        # out), production may not
        for day in profile.planned_production:
            if day >= horizon_days:
                raise WorldValidationError(
                    f"planned_production for {aid!r} outside the horizon (day {day})"
                )
        supply_map[aid] = profile
    for nid in bom.nodes:
        supply_map.setdefault(nid, SupplyProfile())

    world = WorldState(
        bom=bom,
        capacity_packages=package_map,
        orders=order_map,
        supply=supply_map,
        horizon_days=horizon_days,
    )
    violations = check_feasibility(world)
    if violations:
        raise InfeasibleBaselineError(violations[0])
    world.baseline_json = json.dumps(
        world.schedule_snapshot(), sort_keys=True, separators=(",", ":")
    )
    return world


def check_feasibility(world: WorldState) -> list[str]:
    """Global schedule checker, independent of the negotiation engine.

    Returns human-readable violations; empty means the schedule is
    consistent: supplier availability covers commitments cumulatively,
    production never consumes components before they are delivered, and
    per-day capacity is respected.
    """
    violations: list[str] = []
    horizon = world.horizon_days

    for aid in world.material_ids():
        profile = world.supply[aid]
        committed = [0] * horizon
        for order in world.orders_supplied_by(aid):
            for d, q in order.demand.items():
                if 0 <= d < horizon:
                    committed[d] += q
        total = 0
        for day in range(horizon):
            total += committed[day]
            if total > profile.gross_cumulative(day):
                violations.append(
                    f"agent {aid}: cumulative supply "
                    f"{profile.gross_cumulative(day)} < committed {total} "
                    f"by day {day}"
                )
                break

    for aid in world.material_ids():
        node = world.bom.nodes[aid]
        prod_cum = prefix_sums(world.supply[aid].planned_production, horizon)
        for link in node.supplier_links:
            delivered = [0] * horizon
            for order in world.component_orders(aid, link.supplier):
                for d, q in order.demand.items():
                    if 0 <= d < horizon:
                        delivered[d] += q
            total = 0
            for day in range(horizon):
                total += delivered[day]
                need = link.qty_per_unit * prod_cum[day]
                if need > total:
                    violations.append(
                        f"agent {aid}: production needs {need} of "
                        f"{link.supplier} by day {day} but only {total} delivered"
                    )
                    break

    for pid in world.capacity_ids():
        pkg = world.capacity_packages[pid]
        reserved = [0] * horizon
        for order in world.capacity_reservations(pid):
            for d, q in order.demand.items():
                if 0 <= d < horizon:
                    reserved[d] += q
        for day in range(horizon):
            used = reserved[day]
            for member in pkg.member_materials:
                used += world.supply[member].planned_production.get(day, 0)
            if used > pkg.profile.available(day):
                violations.append(
                    f"package {pid}: demand {used} exceeds capacity "
                    f"{pkg.profile.available(day)} on day {day}"
                )
                break

    for oid, order in sorted(world.orders.items()):
        if order.status == ORDER_CANCELLED and order.total() != 0:
            violations.append(f"order {oid}: cancelled but has remaining demand")

    return violations


# -- disruption application --------------------------------------------------


def cumulative_available(world: WorldState, agent_id: str, day: int) -> int:
    """Gross availability by ``day``.

    Material agents accumulate stock, arrivals and production; capacity
    packages answer with that single day's expiring capacity. Committed
    quantities are not subtracted here; the feasibility checker compares
    this figure against commitments.
    """
    if not 0 <= day < world.horizon_days:
        raise WorldValidationError(f"day {day} outside horizon")
    if world.is_material(agent_id):
        return world.supply[agent_id].gross_cumulative(day)
    if world.is_capacity(agent_id):
        return world.capacity_packages[agent_id].profile.available(day)
    raise WorldValidationError(f"unknown agent {agent_id!r}")


def _drain(series: dict[int, int], window: range, budget: int | None) -> int:
    """Remove up to ``budget`` units from ``series`` inside ``window``
    (earliest first); None drains everything. Returns the drained total."""
    drained = 0
    for day in sorted(d for d in series if d in window):
        if budget is not None and drained >= budget:
            break
        take = series[day]
        if budget is not None:
            take = min(take, budget - drained)
        series[day] -= take
        if series[day] == 0:
            del series[day]
        drained += take
    return drained


def apply_disruption(
    world: WorldState, event: DisruptionEvent
) -> tuple[WorldState, frozenset[str]]:
    """Perturb a copy of the world and report which agents actually changed.

    raw_material_delay  - in-transit arrivals inside the window move to its end
    sfg_quarantine      - on-hand stock and production completing inside the
                          window are held back until the window ends
    line_stoppage       - per-day capacity is zero for the window
    """
    event.validate()
    if not 0 <= event.start_day < world.horizon_days:
        raise DisruptionError(
            f"disruption window starts outside the horizon (day {event.start_day})"
        )
    window = range(event.start_day, event.end_day)
    release = event.end_day
    new_world = world.clone()
    affected: set[str] = set()

    if event.kind == LINE_STOPPAGE:
        pkg = new_world.capacity_packages.get(event.target)
        if pkg is None:
            raise DisruptionError(
                f"line_stoppage target {event.target!r} is not a capacity package"
            )
        for day in window:
            if day >= world.horizon_days:
                break
            if pkg.profile.per_day.get(day, 0) != 0:
                pkg.profile.per_day[day] = 0
                affected.add(event.target)
        return new_world, frozenset(affected)

    if not new_world.is_material(event.target):
        raise DisruptionError(
            f"{event.kind} target {event.target!r} is not a material agent"
        )
    profile = new_world.supply[event.target]

    if event.kind == RAW_MATERIAL_DELAY:
        moved = _drain(profile.in_transit, window, event.affected_quantity)
    else:  # SFG_QUARANTINE: already-produced stock first, then window output
        budget = event.affected_quantity
        taken_stock = profile.in_stock if budget is None else min(profile.in_stock, budget)
        profile.in_stock -= taken_stock
        remaining = None if budget is None else budget - taken_stock
        moved = taken_stock + _drain(profile.planned_production, window, remaining)

    if moved:
        profile.in_transit[release] = profile.in_transit.get(release, 0) + moved
        profile.in_transit = clean_series(profile.in_transit)
        affected.add(event.target)
    return new_world, frozenset(affected)
