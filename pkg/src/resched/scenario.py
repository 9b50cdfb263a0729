"""Scenario files: schema-validated loading, canonical serialization, and a
seeded generator for synthetic supply networks.

The JSON document carries the complete day-0 state (the baseline schedule:
order book plus supply and capacity profiles), optional disruption events,
and engine config overrides. Canonical form is sorted keys with no
insignificant whitespace, so identical scenarios are identical bytes.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .engine import EngineConfig
from .errors import ReschedError, ScenarioError
from .model import (
    EXTERNAL_CUSTOMER,
    CapacityPackage,
    CapacityProfile,
    DisruptionEvent,
    MaterialNode,
    Order,
    SupplierLink,
    SupplyProfile,
    WorldState,
    build_world,
)

SCENARIO_VERSION = "1"


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _schema() -> dict:
    text = (
        resources.files("resched").joinpath("schema/scenario.schema.json").read_text()
    )
    return json.loads(text)


@dataclass
class Scenario:
    """A loaded scenario: validated world plus events and engine config."""

    world: WorldState
    events: list[DisruptionEvent] = field(default_factory=list)
    config: EngineConfig = field(default_factory=EngineConfig)

    def to_dict(self) -> dict:
        return scenario_dict(self.world, self.events, self.config)

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def _day_map(data: dict) -> dict[int, int]:
    return {int(day): qty for day, qty in sorted(data.items(), key=lambda kv: int(kv[0]))}


def _day_map_json(series: dict[int, int]) -> dict[str, int]:
    return {str(d): q for d, q in sorted(series.items()) if q != 0}


def scenario_dict(
    world: WorldState,
    events: list[DisruptionEvent] | tuple[DisruptionEvent, ...] = (),
    config: EngineConfig | None = None,
) -> dict:
    config = config or EngineConfig()
    return {
        "version": SCENARIO_VERSION,
        "horizon_days": world.horizon_days,
        "nodes": [
            {
                "id": node.id,
                "location": node.location,
                "level": node.level,
                "suppliers": [
                    {"id": link.supplier, "qty_per_unit": link.qty_per_unit}
                    for link in node.supplier_links
                ],
                "capacity_link": node.capacity_link,
                "is_finished_good": node.is_finished_good,
                "substitutes": list(node.substitutes),
            }
            for _, node in sorted(world.bom.nodes.items())
        ],
        "capacity_packages": [
            {
                "id": pkg.id,
                "members": sorted(pkg.member_materials),
                "per_day": _day_map_json(pkg.profile.per_day),
            }
            for _, pkg in sorted(world.capacity_packages.items())
        ],
        "orders": [
            {
                "id": order.id,
                "supplier": order.supplier,
                "customer": order.customer,
                "material": order.material,
                "demand": _day_map_json(order.demand),
                "priority": order.priority,
                "status": order.status,
            }
            for _, order in sorted(world.orders.items())
        ],
        "supply": {
            agent: {
                "in_stock": profile.in_stock,
                "in_transit": _day_map_json(profile.in_transit),
                "planned_production": _day_map_json(profile.planned_production),
            }
            for agent, profile in sorted(world.supply.items())
        },
        "events": [
            {
                "kind": e.kind,
                "target": e.target,
                "start_day": e.start_day,
                "duration_days": e.duration_days,
                "affected_quantity": e.affected_quantity,
            }
            for e in events
        ],
        "config": {
            "max_iterations": config.max_iterations,
            "fulfillment_mode": config.fulfillment_mode,
            "inventory_reduction": config.inventory_reduction_enabled,
        },
    }


def _check_references(data: dict) -> None:
    node_ids = {n["id"] for n in data["nodes"]}
    package_ids = {p["id"] for p in data["capacity_packages"]}
    horizon = data["horizon_days"]
    for i, node in enumerate(data["nodes"]):
        for j, link in enumerate(node.get("suppliers", [])):
            if link["id"] not in node_ids:
                raise ScenarioError(
                    f"unknown supplier {link['id']!r}", f"/nodes/{i}/suppliers/{j}/id"
                )
        cap = node.get("capacity_link")
        if cap is not None and cap not in package_ids:
            raise ScenarioError(
                f"unknown capacity package {cap!r}", f"/nodes/{i}/capacity_link"
            )
    for i, pkg in enumerate(data["capacity_packages"]):
        for j, member in enumerate(pkg["members"]):
            if member not in node_ids:
                raise ScenarioError(
                    f"unknown member {member!r}", f"/capacity_packages/{i}/members/{j}"
                )
    for i, order in enumerate(data["orders"]):
        if order["material"] not in node_ids:
            raise ScenarioError(
                f"unknown material {order['material']!r}", f"/orders/{i}/material"
            )
        if order["supplier"] not in node_ids | package_ids:
            raise ScenarioError(
                f"unknown supplier {order['supplier']!r}", f"/orders/{i}/supplier"
            )
        customer = order["customer"]
        if customer != EXTERNAL_CUSTOMER and customer not in node_ids:
            raise ScenarioError(
                f"unknown customer {customer!r}", f"/orders/{i}/customer"
            )
        for day in order["demand"]:
            if int(day) >= horizon:
                raise ScenarioError(
                    f"demand day {day} outside horizon {horizon}",
                    f"/orders/{i}/demand/{day}",
                )
    for agent in data.get("supply", {}):
        if agent not in node_ids:
            raise ScenarioError(f"unknown agent {agent!r}", f"/supply/{agent}")
    for i, event in enumerate(data.get("events", [])):
        if event["target"] not in node_ids | package_ids:
            raise ScenarioError(
                f"unknown target {event['target']!r}", f"/events/{i}/target"
            )


def load_scenario(source: bytes | str | dict) -> Scenario:
    """Parse, schema-validate, and build a feasible world from a scenario.

    Errors carry JSON pointers where one can be attributed.
    """
    if isinstance(source, (bytes, str)):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as err:
            raise ScenarioError(f"not valid JSON: {err}") from err
    else:
        data = source
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as err:
        pointer = "/" + "/".join(str(part) for part in err.absolute_path)
        raise ScenarioError(err.message, pointer if pointer != "/" else "") from err
    _check_references(data)

    nodes = []
    customers: dict[str, list[str]] = {}
    for raw in data["nodes"]:
        for link in raw.get("suppliers", []):
            customers.setdefault(link["id"], []).append(raw["id"])
    for raw in data["nodes"]:
        nodes.append(
            MaterialNode(
                id=raw["id"],
                location=raw.get("location", ""),
                level=raw["level"],
                supplier_links=tuple(
                    SupplierLink(link["id"], link.get("qty_per_unit", 1))
                    for link in raw.get("suppliers", [])
                ),
                customer_links=tuple(sorted(customers.get(raw["id"], []))),
                capacity_link=raw.get("capacity_link"),
                is_finished_good=raw.get("is_finished_good", False),
                substitutes=tuple(raw.get("substitutes", [])),
            )
        )
    packages = [
        CapacityPackage(
            id=raw["id"],
            member_materials=tuple(sorted(raw["members"])),
            profile=CapacityProfile(per_day=_day_map(raw["per_day"])),
        )
        for raw in data["capacity_packages"]
    ]
    orders = [
        Order(
            id=raw["id"],
            supplier=raw["supplier"],
            customer=raw["customer"],
            material=raw["material"],
            demand=_day_map(raw["demand"]),
            priority=raw.get("priority", 1),
            status=raw.get("status", "active"),
        )
        for raw in data["orders"]
    ]
    supplies = {
        agent: SupplyProfile(
            in_stock=raw.get("in_stock", 0),
            in_transit=_day_map(raw.get("in_transit", {})),
            planned_production=_day_map(raw.get("planned_production", {})),
        )
        for agent, raw in data.get("supply", {}).items()
    }
    try:
        world = build_world(nodes, packages, orders, supplies, data["horizon_days"])
    except ReschedError as err:
        raise ScenarioError(str(err)) from err

    events = [
        DisruptionEvent(
            kind=raw["kind"],
            target=raw["target"],
            start_day=raw["start_day"],
            duration_days=raw["duration_days"],
            affected_quantity=raw.get("affected_quantity"),
        )
        for raw in data.get("events", [])
    ]
    overrides = data.get("config", {})
    config = EngineConfig(
        horizon_days=data["horizon_days"],
        max_iterations=overrides.get("max_iterations", 50),
        fulfillment_mode=overrides.get("fulfillment_mode", "partial"),
        inventory_reduction_enabled=overrides.get("inventory_reduction", False),
    )
    return Scenario(world=world, events=events, config=config)


def fig2_scenario() -> Scenario:
    """The bundled seven-node, two-line demo network."""
    text = resources.files("resched").joinpath("data/fig2.json").read_text()
    return load_scenario(text)


# -- synthetic generation -------------------------------------------------------


@dataclass(frozen=True)
class GeneratorParams:
    """Shape of a synthetic scenario. Defaults mirror the reference
    experiment: five BOMs spanning depths 2..7, 39 material nodes, 18
    capacity packages, and one of three inventory days-on-hand levels."""

    bom_count: int = 5
    depth_min: int = 2
    depth_max: int = 7
    material_count: int = 39
    capacity_count: int = 18
    days_on_hand: float = 6.7
    order_density: float = 0.45
    horizon_days: int = 14
    seed: int = 0
    demand_min: int = 1
    demand_max: int = 4
    capacity_headroom: float = 1.3

    def validate(self) -> None:
        if self.bom_count < 1:
            raise ScenarioError("bom_count must be at least 1")
        if self.depth_min < 2:
            raise ScenarioError("depth_min must be at least 2")
        if self.depth_max < self.depth_min:
            raise ScenarioError("depth_max must be >= depth_min")
        if self.horizon_days < 4:
            raise ScenarioError("horizon_days must be at least 4")
        if not 0 < self.order_density <= 1:
            raise ScenarioError("order_density must be in (0, 1]")
        if self.days_on_hand <= 0:
            raise ScenarioError("days_on_hand must be positive")
        if not 1 <= self.demand_min <= self.demand_max:
            raise ScenarioError("demand bounds must satisfy 1 <= min <= max")
        if self.capacity_headroom < 1:
            raise ScenarioError("capacity_headroom must be at least 1")
        if self.capacity_count < self.bom_count:
            raise ScenarioError("need at least one capacity package per BOM")


def _bom_depths(params: GeneratorParams) -> list[int]:
    if params.bom_count == 1:
        return [params.depth_max]
    span = params.depth_max - params.depth_min
    return [
        params.depth_min + round(span * i / (params.bom_count - 1))
        for i in range(params.bom_count)
    ]


def generate_scenario(params: GeneratorParams | None = None) -> dict:
    """Deterministic synthetic scenario with a feasible baseline.

    External demand lands on each finished good, an MRP pass explodes it
    level by level into production plans and component orders (lead time
    zero, one unit of each component per unit produced), leaves receive
    just-in-time arrivals, and per-node starting stock realizes the
    requested days-on-hand with error-diffusion rounding so the network
    average stays within half a day of the target.
    """
    params = params or GeneratorParams()
    params.validate()
    rng = random.Random(params.seed)
    horizon = params.horizon_days
    depths = _bom_depths(params)

    chain_total = sum(depths)
    if params.material_count < chain_total:
        raise ScenarioError(
            f"material_count {params.material_count} cannot host "
            f"{params.bom_count} BOMs of depths {depths}"
        )
    extras = params.material_count - chain_total

    # chain skeletons: one node per level, level l consumes level l+1
    by_level: dict[int, dict[int, list[str]]] = {}
    suppliers: dict[str, list[str]] = {}
    for b, depth in enumerate(depths):
        by_level[b] = {}
        for level in range(depth):
            nid = f"B{b}-L{level}"
            by_level[b][level] = [nid]
            suppliers[nid] = []
            if level > 0:
                suppliers[f"B{b}-L{level - 1}"].append(nid)

    chain_producers = sum(depth - 1 for depth in depths)
    producer_extras_needed = max(0, params.capacity_count - chain_producers)
    if producer_extras_needed > extras:
        raise ScenarioError(
            "capacity_count requires more producing nodes than material_count allows"
        )
    producer_slots = [
        (b, level)
        for b, depth in enumerate(depths)
        for level in range(1, depth - 1)
    ]
    if producer_extras_needed and not producer_slots:
        raise ScenarioError("no BOM is deep enough for extra producing nodes")

    extra_index = 0
    for k in range(extras):
        make_producer = k < producer_extras_needed
        if make_producer:
            b, level = producer_slots[k % len(producer_slots)]
        else:
            b = rng.randrange(params.bom_count)
            level = rng.randint(1, depths[b] - 1)
        nid = f"B{b}-L{level}-X{extra_index}"
        extra_index += 1
        by_level[b].setdefault(level, []).append(nid)
        suppliers[nid] = []
        parent = rng.choice(sorted(by_level[b][level - 1]))
        suppliers[parent].append(nid)
        if make_producer:
            child = rng.choice(sorted(by_level[b][level + 1]))
            suppliers[nid].append(child)

    all_nodes = sorted(suppliers)
    node_bom = {nid: int(nid[1 : nid.index("-")]) for nid in all_nodes}
    node_level = {
        nid: next(
            level
            for level, members in by_level[node_bom[nid]].items()
            if nid in members
        )
        for nid in all_nodes
    }

    # capacity packages per BOM, proportional to producer counts
    producers_by_bom: dict[int, list[str]] = {b: [] for b in range(params.bom_count)}
    for nid in all_nodes:
        if suppliers[nid]:
            producers_by_bom[node_bom[nid]].append(nid)
    total_producers = sum(len(v) for v in producers_by_bom.values())
    if total_producers < params.capacity_count:
        raise ScenarioError("not enough producing nodes for capacity_count")
    quota = {b: 1 for b in range(params.bom_count)}
    remaining = params.capacity_count - params.bom_count
    shares = sorted(
        range(params.bom_count),
        key=lambda b: (-len(producers_by_bom[b]), b),
    )
    while remaining > 0:
        progressed = False
        for b in shares:
            if remaining == 0:
                break
            if quota[b] < len(producers_by_bom[b]):
                quota[b] += 1
                remaining -= 1
                progressed = True
        if not progressed:
            raise ScenarioError("cannot apportion capacity packages across BOMs")

    capacity_link: dict[str, str] = {}
    package_members: dict[str, list[str]] = {}
    for b in range(params.bom_count):
        members = sorted(producers_by_bom[b])
        count = quota[b]
        base = len(members) // count
        extra = len(members) % count
        start = 0
        for j in range(count):
            size = base + (1 if j < extra else 0)
            pkg_id = f"B{b}-CP{j}"
            chunk = members[start : start + size]
            start += size
            package_members[pkg_id] = chunk
            for member in chunk:
                capacity_link[member] = pkg_id

    # external demand on finished goods
    orders: list[dict] = []
    demand_on: dict[str, dict[int, int]] = {nid: {} for nid in all_nodes}
    for b in range(params.bom_count):
        fg = f"B{b}-L0"
        demand: dict[int, int] = {}
        for day in range(1, horizon):
            if rng.random() < params.order_density:
                demand[day] = rng.randint(params.demand_min, params.demand_max)
        if not demand:
            demand[horizon // 2] = params.demand_min
        orders.append(
            {
                "id": f"EXT-{fg}",
                "supplier": fg,
                "customer": EXTERNAL_CUSTOMER,
                "material": fg,
                "demand": {str(d): q for d, q in sorted(demand.items())},
                "priority": rng.randint(1, 3),
                "status": "active",
            }
        )
        for day, qty in demand.items():
            demand_on[fg][day] = demand_on[fg].get(day, 0) + qty

    # MRP pass, customers before suppliers (levels ascend toward leaves)
    supply: dict[str, dict] = {}
    production_of: dict[str, dict[int, int]] = {}
    stock_error = 0.0
    for nid in sorted(all_nodes, key=lambda n: (node_level[n], n)):
        demand = demand_on[nid]
        total_demand = sum(demand.values())
        avg_daily = total_demand / horizon
        desired = params.days_on_hand * avg_daily
        in_stock = max(0, math.floor(desired + stock_error + 0.5))
        stock_error += desired - in_stock

        need_cum = 0
        prod_cum_prev = 0
        production: dict[int, int] = {}
        arrivals: dict[int, int] = {}
        is_producer = bool(suppliers[nid])
        for day in range(horizon):
            need_cum += demand.get(day, 0)
            target = max(0, need_cum - in_stock)
            gain = target - prod_cum_prev
            if gain > 0:
                if is_producer:
                    production[day] = gain
                else:
                    arrivals[day] = gain
                prod_cum_prev = target
        production_of[nid] = production
        supply[nid] = {
            "in_stock": in_stock,
            "in_transit": {str(d): q for d, q in sorted(arrivals.items())},
            "planned_production": {str(d): q for d, q in sorted(production.items())},
        }
        for child in sorted(suppliers[nid]):
            if not production:
                continue
            orders.append(
                {
                    "id": f"ORD-{nid}-{child}",
                    "supplier": child,
                    "customer": nid,
                    "material": child,
                    "demand": {str(d): q for d, q in sorted(production.items())},
                    "priority": 1,
                    "status": "active",
                }
            )
            for day, qty in production.items():
                demand_on[child][day] = demand_on[child].get(day, 0) + qty

    packages = []
    for pkg_id in sorted(package_members):
        peak = 0
        for day in range(horizon):
            used = sum(
                production_of[m].get(day, 0) for m in package_members[pkg_id]
            )
            peak = max(peak, used)
        per_day = max(1, math.ceil(peak * params.capacity_headroom))
        packages.append(
            {
                "id": pkg_id,
                "members": sorted(package_members[pkg_id]),
                "per_day": {str(d): per_day for d in range(horizon)},
            }
        )

    nodes_json = [
        {
            "id": nid,
            "location": f"site-{node_bom[nid]}",
            "level": node_level[nid],
            "suppliers": [
                {"id": child, "qty_per_unit": 1} for child in sorted(suppliers[nid])
            ],
            "capacity_link": capacity_link.get(nid),
            "is_finished_good": node_level[nid] == 0,
            "substitutes": [],
        }
        for nid in all_nodes
    ]
    scenario = {
        "version": SCENARIO_VERSION,
        "horizon_days": horizon,
        "nodes": nodes_json,
        "capacity_packages": packages,
        "orders": sorted(orders, key=lambda o: o["id"]),
        "supply": {nid: supply[nid] for nid in sorted(supply)},
        "events": [],
        "config": {
            "max_iterations": 50,
            "fulfillment_mode": "partial",
            "inventory_reduction": False,
        },
    }
    load_scenario(scenario)  # feasibility by construction, verified
    return scenario


def network_days_on_hand(world: WorldState) -> float:
    """Total starting stock over total average daily committed demand."""
    total_stock = 0
    total_daily = 0.0
    for agent in world.material_ids():
        demand_total = sum(
            order.total() for order in world.orders_supplied_by(agent)
        )
        total_stock += world.supply[agent].in_stock
        total_daily += demand_total / world.horizon_days
    if total_daily == 0:
        return 0.0
    return total_stock / total_daily


# -- experiment target selection ------------------------------------------------


def bom_components(world: WorldState) -> list[list[str]]:
    """Connected components of the material graph, each sorted by id."""
    neighbours: dict[str, set[str]] = {nid: set() for nid in world.bom.nodes}
    for nid, node in world.bom.nodes.items():
        for link in node.supplier_links:
            neighbours[nid].add(link.supplier)
            neighbours[link.supplier].add(nid)
    seen: set[str] = set()
    components: list[list[str]] = []
    for start in sorted(neighbours):
        if start in seen:
            continue
        stack = [start]
        component = []
        seen.add(start)
        while stack:
            current = stack.pop()
            component.append(current)
            for other in sorted(neighbours[current]):
                if other not in seen:
                    seen.add(other)
                    stack.append(other)
        components.append(sorted(component))
    return components


def default_targets(world: WorldState, kind: str) -> list[str]:
    """One disruption target per BOM, mirroring the one-agent-per-BOM
    experiment layout: the busiest leaf for delays, a mid-level node for
    quarantines, the largest in-BOM capacity package for stoppages."""
    targets: list[str] = []
    for component in bom_components(world):
        nodes = [world.bom.node(nid) for nid in component]
        if kind == "raw_material_delay":
            leaves = [
                n
                for n in nodes
                if n.is_leaf and world.supply[n.id].in_transit
            ]
            if leaves:
                leaves.sort(
                    key=lambda n: (-sum(world.supply[n.id].in_transit.values()), n.id)
                )
                targets.append(leaves[0].id)
        elif kind == "sfg_quarantine":
            max_level = max(n.level for n in nodes)
            middle = [n for n in nodes if 0 < n.level < max_level]
            candidates = middle or [n for n in nodes if n.level > 0]
            if candidates:
                mid = max_level / 2
                candidates.sort(key=lambda n: (abs(n.level - mid), n.id))
                targets.append(candidates[0].id)
        elif kind == "line_stoppage":
            in_component = [
                pkg
                for pkg in world.capacity_packages.values()
                if pkg.member_materials
                and all(m in component for m in pkg.member_materials)
            ]
            if in_component:
                in_component.sort(key=lambda p: (-len(p.member_materials), p.id))
                targets.append(in_component[0].id)
        else:
            raise ScenarioError(f"unknown disruption kind {kind!r}")
    return targets


def _auto_start_day(world: WorldState, target: str, kind: str) -> int:
    """Default disruption start: delays anchor on the target's first
    arrival so the window catches real transit; the other kinds use a
    fixed early day so buffer levels, not window placement, decide how
    much is absorbed."""
    horizon = world.horizon_days
    if kind == "raw_material_delay":
        days = [d for d in world.supply[target].in_transit if 0 <= d < horizon]
        return min(days) if days else 1
    return 1


def events_for(
    world: WorldState, kind: str, duration: int, start_day: int | None = None
) -> list[DisruptionEvent]:
    """One event per BOM for a sweep cell; ``start_day=None`` anchors each
    window where the target's supply activity begins."""
    events = []
    for target in default_targets(world, kind):
        start = (
            start_day
            if start_day is not None
            else _auto_start_day(world, target, kind)
        )
        start = min(max(start, 0), world.horizon_days - 1)
        events.append(DisruptionEvent(kind, target, start, duration))
    return events
