"""Exact solvers for the local scheduling problems agents face.

Three allocation flavours share one problem shape:

  partial         maximize sum_m sum_n W_m * x[m,n]
  all_or_nothing  maximize sum F_m * x[m,n] + sum L_m * x[m,n] * (x[m,n] - d[m,n])
                  (the quadratic term drives each demand-day fill to 0 or d)
  capacity        maximize sum_m sum_n x[m,n]

subject to integer x >= 0 and

  * cumulative demand: sum_{i<=n} x[m,i] <= sum_{i<=n} d[m,i], so nothing is
    delivered ahead of its committed schedule (this implies the plain
    total-demand cap),
  * supply: cumulative inflow for partial/all_or_nothing, a per-day limit for
    capacity (unused capacity expires),
  * all_or_nothing only: x[m,n] <= d[m,n] per day.

The consolidation problem minimizes sum_n W_n * r[n] over per-day production
reductions whose running total dominates every requesting supplier's running
requested reduction; strictly decreasing day weights push reductions as late
as the constraints allow.

Every solver is a pure function and deterministic: ties are broken by earlier
allocation days, then lower order id (capacity additionally prefers higher
priority before the id). ``brute_force_oracle`` re-derives the constraints on
its own and exhaustively enumerates small instances for verification.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import SolverError

MODE_PARTIAL = "partial"
MODE_ALL_OR_NOTHING = "all_or_nothing"
MODE_CAPACITY = "capacity"
MODES = (MODE_PARTIAL, MODE_ALL_OR_NOTHING, MODE_CAPACITY)

DEFAULT_ORACLE_BOUND = 10_000_000


@dataclass(frozen=True)
class WeightConfig:
    """Objective weights; defaults follow the linear-in-priority and
    reduce-late conventions used throughout the engine."""

    priority_weight: Mapping[int, int] | None = None
    fulfillment_weight: int = 1
    adherence_weight: int | None = None
    day_attenuation: Sequence[int] | None = None

    def validate(self) -> None:
        if self.priority_weight is not None:
            items = sorted(self.priority_weight.items())
            for (p1, w1), (p2, w2) in zip(items, items[1:]):
                if w2 <= w1:
                    raise SolverError(
                        f"priority weights must strictly increase ({p1}:{w1} vs {p2}:{w2})"
                    )
            if any(w <= 0 for _, w in items):
                raise SolverError("priority weights must be positive")
        if self.fulfillment_weight <= 0:
            raise SolverError("fulfillment_weight must be positive")
        if self.adherence_weight is not None and self.adherence_weight <= 0:
            raise SolverError("adherence_weight must be positive")
        if self.day_attenuation is not None:
            att = list(self.day_attenuation)
            if any(w <= 0 for w in att):
                raise SolverError("day attenuation weights must be positive")
            if any(b >= a for a, b in zip(att, att[1:])):
                raise SolverError("day attenuation must strictly decrease")

    def order_weight(self, priority: int) -> int:
        if self.priority_weight is None:
            return priority
        try:
            return self.priority_weight[priority]
        except KeyError:
            raise SolverError(f"no weight configured for priority {priority}") from None

    def adherence_for(self, max_demand: int) -> int:
        if self.adherence_weight is not None:
            return self.adherence_weight
        # comfortably above the 0-or-full threshold for any seen demand
        return 2 * max(max_demand, 1) * self.fulfillment_weight

    def attenuation(self, horizon: int) -> list[int]:
        if self.day_attenuation is None:
            return [horizon - n for n in range(horizon)]
        att = list(self.day_attenuation)
        if len(att) < horizon:
            raise SolverError(
                f"day attenuation covers {len(att)} days, horizon is {horizon}"
            )
        return att[:horizon]


@dataclass(frozen=True)
class OrderSpec:
    """One demand row of an allocation problem."""

    order_id: str
    demand: Mapping[int, int]
    priority: int = 1
    fulfillment_weight: int | None = None
    adherence_weight: int | None = None

    def total(self) -> int:
        return sum(self.demand.values())


@dataclass(frozen=True)
class AllocationProblem:
    orders: tuple[OrderSpec, ...]
    supply: tuple[int, ...]  # per-day series; semantics depend on mode
    horizon: int
    mode: str

    def validate(self) -> None:
        if self.mode not in MODES:
            raise SolverError(f"unknown mode {self.mode!r}")
        if self.horizon <= 0:
            raise SolverError("horizon must be positive")
        if len(self.supply) != self.horizon:
            raise SolverError("supply series must cover the horizon")
        if any(s < 0 for s in self.supply):
            raise SolverError("negative supply")
        seen: set[str] = set()
        for spec in self.orders:
            if spec.order_id in seen:
                raise SolverError(f"duplicate order id {spec.order_id!r}")
            seen.add(spec.order_id)
            if spec.priority <= 0:
                raise SolverError(f"order {spec.order_id!r}: non-positive priority")
            for day, qty in spec.demand.items():
                if qty < 0:
                    raise SolverError(f"order {spec.order_id!r}: negative quantity")
                if not 0 <= day < self.horizon:
                    raise SolverError(
                        f"order {spec.order_id!r}: demand day {day} outside horizon"
                    )

    def max_demand(self) -> int:
        return max((q for o in self.orders for q in o.demand.values()), default=0)


@dataclass(frozen=True)
class Allocation:
    x: dict[str, dict[int, int]]
    objective_value: int

    def order_total(self, order_id: str) -> int:
        return sum(self.x.get(order_id, {}).values())

    def to_json(self) -> str:
        payload = {
            "objective": self.objective_value,
            "allocation": {
                oid: {str(d): q for d, q in sorted(days.items())}
                for oid, days in sorted(self.x.items())
            },
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ReductionProblem:
    """Per-supplier requested reductions to reconcile into one per-day
    reduction series. ``max_per_day`` optionally caps how much can come
    off a single day (the engine caps by scheduled production)."""

    requested: Mapping[str, Mapping[int, int]]
    horizon: int
    day_weights: tuple[int, ...] | None = None
    max_per_day: Mapping[int, int] | None = None

    def validate(self) -> None:
        if self.horizon <= 0:
            raise SolverError("horizon must be positive")
        for supplier, series in self.requested.items():
            for day, qty in series.items():
                if qty < 0:
                    raise SolverError(f"supplier {supplier!r}: negative reduction")
                if not 0 <= day < self.horizon:
                    raise SolverError(
                        f"supplier {supplier!r}: day {day} outside horizon"
                    )
        if self.day_weights is not None:
            if len(self.day_weights) < self.horizon:
                raise SolverError("day weights must cover the horizon")
            if any(w <= 0 for w in self.day_weights):
                raise SolverError("day weights must be positive")
            if any(b >= a for a, b in zip(self.day_weights, self.day_weights[1:])):
                raise SolverError("day weights must strictly decrease")
        if self.max_per_day is not None and any(
            v < 0 for v in self.max_per_day.values()
        ):
            raise SolverError("negative per-day cap")

    def weights(self) -> list[int]:
        if self.day_weights is None:
            return [self.horizon - n for n in range(self.horizon)]
        return list(self.day_weights[: self.horizon])

    def dominating_requirement(self) -> list[int]:
        """Pointwise max over suppliers of cumulative requested reduction."""
        req = [0] * self.horizon
        for series in self.requested.values():
            total = 0
            for day in range(self.horizon):
                total += series.get(day, 0)
                req[day] = max(req[day], total)
        return req


@dataclass(frozen=True)
class ReductionPlan:
    reductions: dict[int, int]
    objective_value: int

    def cumulative(self, horizon: int) -> list[int]:
        out = [0] * horizon
        total = 0
        for day in range(horizon):
            total += self.reductions.get(day, 0)
            out[day] = total
        return out

    def to_json(self) -> str:
        payload = {
            "objective": self.objective_value,
            "reductions": {str(d): q for d, q in sorted(self.reductions.items())},
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


# -- shared helpers -----------------------------------------------------------


def _cumulative_demand(spec: OrderSpec, horizon: int) -> list[int]:
    out = [0] * horizon
    total = 0
    for day in range(horizon):
        total += spec.demand.get(day, 0)
        out[day] = total
    return out


def _cumulative_supply(problem: AllocationProblem) -> list[int]:
    out: list[int] = []
    total = 0
    for s in problem.supply:
        total += s
        out.append(total)
    return out


def _as_result(x: dict[str, dict[int, int]], objective: int) -> Allocation:
    cleaned = {
        oid: {d: q for d, q in sorted(days.items()) if q > 0}
        for oid, days in sorted(x.items())
    }
    return Allocation(
        x={o: d for o, d in cleaned.items() if d}, objective_value=objective
    )


# -- partial fulfillment ------------------------------------------------------


def solve_partial(
    problem: AllocationProblem, weights: WeightConfig | None = None
) -> Allocation:
    """Weighted throughput maximization with partial fills allowed.

    Totals are granted greedily by descending order weight (exact: any unit
    can always be parked on the last day, so totals are limited only by the
    overall supply); placement then fills the earliest feasible days, lower
    order ids first within a day.
    """
    weights = weights or WeightConfig()
    weights.validate()
    problem.validate()
    if problem.mode != MODE_PARTIAL:
        raise SolverError(f"solve_partial got mode {problem.mode!r}")
    cum_supply = _cumulative_supply(problem)
    supply_total = cum_supply[-1] if cum_supply else 0

    order_weight = {
        o.order_id: weights.order_weight(o.priority) for o in problem.orders
    }
    group_left: dict[int, int] = {}
    remaining = supply_total
    objective = 0
    demand_by_weight: dict[int, int] = {}
    for spec in problem.orders:
        w = order_weight[spec.order_id]
        demand_by_weight[w] = demand_by_weight.get(w, 0) + spec.total()
    for w in sorted(demand_by_weight, reverse=True):
        grant = min(demand_by_weight[w], remaining)
        group_left[w] = grant
        remaining -= grant
        objective += w * grant

    specs = sorted(problem.orders, key=lambda o: o.order_id)
    cum_demand = {o.order_id: _cumulative_demand(o, problem.horizon) for o in specs}
    placed = {o.order_id: 0 for o in specs}
    x: dict[str, dict[int, int]] = {o.order_id: {} for o in specs}
    placed_total = 0
    for day in range(problem.horizon):
        room = cum_supply[day] - placed_total
        if room <= 0:
            continue
        for spec in specs:
            if room <= 0:
                break
            w = order_weight[spec.order_id]
            take = min(
                room,
                cum_demand[spec.order_id][day] - placed[spec.order_id],
                group_left[w],
            )
            if take <= 0:
                continue
            x[spec.order_id][day] = take
            placed[spec.order_id] += take
            group_left[w] -= take
            placed_total += take
            room -= take
    return _as_result(x, objective)


# -- all-or-nothing fulfillment ----------------------------------------------


def solve_all_or_nothing(
    problem: AllocationProblem, weights: WeightConfig | None = None
) -> Allocation:
    """Exact search over per-(order, demand-day) fill decisions.

    Branch and bound in (day, order id) order with cumulative-supply
    pruning. When every adherence weight exceeds its fulfillment weight a
    fractional fill is strictly dominated by dropping it, so only the
    endpoints 0 and d need exploring; otherwise the full range is searched.
    """
    weights = weights or WeightConfig()
    weights.validate()
    problem.validate()
    if problem.mode != MODE_ALL_OR_NOTHING:
        raise SolverError(f"solve_all_or_nothing got mode {problem.mode!r}")
    cum_supply = _cumulative_supply(problem)
    d_max = problem.max_demand()

    pairs: list[tuple[int, str, int, int, int]] = []  # day, order, demand, F, L
    endpoints_only = True
    for spec in sorted(problem.orders, key=lambda o: o.order_id):
        f_w = (
            spec.fulfillment_weight
            if spec.fulfillment_weight is not None
            else weights.fulfillment_weight
        )
        l_w = (
            spec.adherence_weight
            if spec.adherence_weight is not None
            else weights.adherence_for(d_max)
        )
        if f_w <= 0 or l_w <= 0:
            raise SolverError(f"order {spec.order_id!r}: non-positive weight")
        if l_w <= f_w:
            endpoints_only = False
        for day, qty in sorted(spec.demand.items()):
            if qty > 0:
                pairs.append((day, spec.order_id, qty, f_w, l_w))
    pairs.sort(key=lambda p: (p[0], p[1]))

    n_pairs = len(pairs)
    suffix_best = [0] * (n_pairs + 1)  # value if everything after fills in full
    suffix_max_f = [0] * (n_pairs + 1)
    for i in range(n_pairs - 1, -1, -1):
        _, _, qty, f_w, _ = pairs[i]
        suffix_best[i] = suffix_best[i + 1] + f_w * qty
        suffix_max_f[i] = max(suffix_max_f[i + 1], f_w)
    supply_total = cum_supply[-1] if cum_supply else 0

    best_value = -1
    best_assign: list[int] = [0] * n_pairs
    assign = [0] * n_pairs

    def search(i: int, used: int, value: int) -> None:
        nonlocal best_value, best_assign
        if i == n_pairs:
            if value > best_value:
                best_value = value
                best_assign = assign.copy()
            return
        bound = value + min(suffix_best[i], suffix_max_f[i] * (supply_total - used))
        if bound <= best_value:
            return
        day, _, qty, f_w, l_w = pairs[i]
        limit = min(qty, cum_supply[day] - used)
        if endpoints_only:
            candidates = [qty, 0] if limit >= qty else [0]
        else:
            candidates = list(range(limit, -1, -1))
        for val in candidates:
            assign[i] = val
            gain = f_w * val + l_w * val * (val - qty)
            search(i + 1, used + val, value + gain)
        assign[i] = 0

    search(0, 0, 0)
    x: dict[str, dict[int, int]] = {}
    for (day, oid, _, _, _), val in zip(pairs, best_assign):
        if val > 0:
            x.setdefault(oid, {})[day] = val
    return _as_result(x, max(best_value, 0))


# -- customer consolidation ---------------------------------------------------


def solve_consolidation(problem: ReductionProblem) -> ReductionPlan:
    """Minimal-weight reduction plan dominating every supplier's request.

    With strictly decreasing day weights the cheapest way to cover the
    cumulative requirement of day n is on day n itself, spilling backwards
    only when per-day caps bind; the result is the lexicographically
    smallest optimal plan read from day 0. An empty supplier set yields the
    all-zero plan.
    """
    problem.validate()
    requirement = problem.dominating_requirement()
    day_weights = problem.weights()
    caps = problem.max_per_day
    r = [0] * problem.horizon
    covered = 0
    for day in range(problem.horizon):
        need = requirement[day] - covered
        if need <= 0:
            continue
        for back in range(day, -1, -1):
            if need <= 0:
                break
            take = need
            if caps is not None:
                take = min(take, max(0, caps.get(back, 0) - r[back]))
            r[back] += take
            covered += take
            need -= take
        if need > 0:
            raise SolverError(
                f"per-day caps cannot cover required reduction by day {day}"
            )
    objective = sum(day_weights[d] * r[d] for d in range(problem.horizon))
    return ReductionPlan(
        reductions={d: q for d, q in enumerate(r) if q > 0},
        objective_value=objective,
    )


# -- capacity allocation ------------------------------------------------------


def solve_capacity(problem: AllocationProblem) -> Allocation:
    """Maximize produced quantity under expiring per-day capacity.

    Day-ascending maximal fill is exact: unused capacity is lost while
    order headroom only grows, and headroom is shared per order rather
    than per day, so how a day's fill is split never changes what later
    days can absorb. Within a day: higher priority first, then lower id.
    """
    problem.validate()
    if problem.mode != MODE_CAPACITY:
        raise SolverError(f"solve_capacity got mode {problem.mode!r}")
    specs = sorted(problem.orders, key=lambda o: (-o.priority, o.order_id))
    cum_demand = {o.order_id: _cumulative_demand(o, problem.horizon) for o in specs}
    placed = {o.order_id: 0 for o in specs}
    x: dict[str, dict[int, int]] = {o.order_id: {} for o in specs}
    total = 0
    for day in range(problem.horizon):
        room = problem.supply[day]
        for spec in specs:
            if room <= 0:
                break
            take = min(room, cum_demand[spec.order_id][day] - placed[spec.order_id])
            if take <= 0:
                continue
            x[spec.order_id][day] = take
            placed[spec.order_id] += take
            room -= take
            total += take
    return _as_result(x, total)


# -- exhaustive verification oracle -------------------------------------------


def _allocation_variables(
    problem: AllocationProblem,
) -> list[tuple[int, str, int]]:
    """(day, order, upper bound) decision variables with non-trivial range."""
    cum_supply = _cumulative_supply(problem)
    supply_total = cum_supply[-1] if cum_supply else 0
    variables: list[tuple[int, str, int]] = []
    for spec in sorted(problem.orders, key=lambda o: o.order_id):
        cum_d = 0
        for day in range(problem.horizon):
            cum_d += spec.demand.get(day, 0)
            if problem.mode == MODE_ALL_OR_NOTHING:
                ub = spec.demand.get(day, 0)
            else:
                ub = cum_d
            if problem.mode == MODE_CAPACITY:
                ub = min(ub, problem.supply[day])
            else:
                ub = min(ub, cum_supply[day])
            ub = min(ub, supply_total)
            if ub > 0:
                variables.append((day, spec.order_id, ub))
    variables.sort(key=lambda v: (v[0], v[1]))
    return variables


def _estimate_leaves(
    problem: AllocationProblem, variables: list[tuple[int, str, int]]
) -> int:
    """Sound upper bound on the number of feasible assignments: the
    product over orders of their demand-feasible assignment counts, also
    capped by the supply simplex."""
    cap = 10**18
    per_order: dict[str, list[tuple[int, int]]] = {}
    for day, oid, ub in variables:
        per_order.setdefault(oid, []).append((day, ub))
    demand_bound = 1
    for spec in sorted(problem.orders, key=lambda o: o.order_id):
        own_vars = per_order.get(spec.order_id, [])
        if not own_vars:
            continue
        cum_demand = _cumulative_demand(spec, problem.horizon)
        counts = {0: 1}
        for day, ub in sorted(own_vars):
            nxt: dict[int, int] = {}
            for total, ways in counts.items():
                limit = min(ub, cum_demand[day] - total)
                for val in range(limit + 1):
                    key = total + val
                    nxt[key] = nxt.get(key, 0) + ways
            counts = nxt
        demand_bound = min(cap, demand_bound * sum(counts.values()))
        if demand_bound >= cap:
            break
    if problem.mode == MODE_CAPACITY:
        per_day: dict[int, int] = {}
        for day, _, _ in variables:
            per_day[day] = per_day.get(day, 0) + 1
        supply_bound = 1
        for day, count in sorted(per_day.items()):
            supply_bound *= math.comb(problem.supply[day] + count, count)
            if supply_bound > cap:
                break
    else:
        total = sum(problem.supply)
        supply_bound = math.comb(total + len(variables), len(variables))
    return min(demand_bound, supply_bound)


def _oracle_allocation(
    problem: AllocationProblem, weights: WeightConfig, max_nodes: int
) -> tuple[int, dict[str, dict[int, int]]]:
    horizon = problem.horizon
    capacity_mode = problem.mode == MODE_CAPACITY
    cum_supply = _cumulative_supply(problem)
    d_max = problem.max_demand()
    specs = sorted(problem.orders, key=lambda o: o.order_id)

    variables = _allocation_variables(problem)
    if _estimate_leaves(problem, variables) > max_nodes:
        raise SolverError("instance too large for enumeration")

    weight_of = {o.order_id: weights.order_weight(o.priority) for o in specs}
    f_of = {
        o.order_id: (
            o.fulfillment_weight
            if o.fulfillment_weight is not None
            else weights.fulfillment_weight
        )
        for o in specs
    }
    l_of = {
        o.order_id: (
            o.adherence_weight
            if o.adherence_weight is not None
            else weights.adherence_for(d_max)
        )
        for o in specs
    }
    demand_of = {o.order_id: dict(o.demand) for o in specs}
    cum_demand = {o.order_id: _cumulative_demand(o, horizon) for o in specs}

    def gain(oid: str, day: int, val: int) -> int:
        if problem.mode == MODE_PARTIAL:
            return weight_of[oid] * val
        if capacity_mode:
            return val
        d = demand_of[oid].get(day, 0)
        return f_of[oid] * val + l_of[oid] * val * (val - d)

    best_value = -1
    best_solution: dict[str, dict[int, int]] = {}
    assign = [0] * len(variables)
    placed = {oid: 0 for oid in demand_of}
    used_per_day = [0] * horizon

    def rec(i: int, used_total: int, value: int) -> None:
        nonlocal best_value, best_solution
        if i == len(variables):
            if value > best_value:
                solution: dict[str, dict[int, int]] = {}
                for (day, oid, _), val in zip(variables, assign):
                    if val > 0:
                        solution.setdefault(oid, {})[day] = val
                best_value = value
                best_solution = solution
            return
        day, oid, ub = variables[i]
        limit = min(ub, cum_demand[oid][day] - placed[oid])
        if capacity_mode:
            limit = min(limit, problem.supply[day] - used_per_day[day])
        else:
            limit = min(limit, cum_supply[day] - used_total)
        for val in range(max(limit, 0), -1, -1):
            assign[i] = val
            placed[oid] += val
            used_per_day[day] += val
            rec(i + 1, used_total + val, value + gain(oid, day, val))
            placed[oid] -= val
            used_per_day[day] -= val
        assign[i] = 0

    rec(0, 0, 0)
    return max(best_value, 0), best_solution


def _oracle_consolidation(
    problem: ReductionProblem, max_nodes: int
) -> tuple[int, dict[int, int]]:
    horizon = problem.horizon
    requirement = problem.dominating_requirement()
    weights = problem.weights()
    top = requirement[-1] if requirement else 0
    bounds = []
    for day in range(horizon):
        ub = top
        if problem.max_per_day is not None:
            ub = min(ub, problem.max_per_day.get(day, 0))
        bounds.append(ub)
    size = 1
    for ub in bounds:
        size *= ub + 1
    if min(size, math.comb(top + horizon, horizon)) > max_nodes:
        raise SolverError("instance too large for enumeration")

    best: tuple[int, dict[int, int]] | None = None
    r = [0] * horizon
    suffix_room = [0] * (horizon + 1)
    for day in range(horizon - 1, -1, -1):
        suffix_room[day] = suffix_room[day + 1] + bounds[day]

    def rec(day: int, cum: int, cost: int) -> None:
        nonlocal best
        if cum + suffix_room[day] < top:
            return  # cannot reach the final requirement anymore
        if day == horizon:
            if all(sum(r[: n + 1]) >= requirement[n] for n in range(horizon)):
                if best is None or cost < best[0]:
                    best = (cost, {d: q for d, q in enumerate(r) if q > 0})
            return
        # exceeding the final cumulative requirement is never optimal
        for val in range(min(bounds[day], top - cum) + 1):
            r[day] = val
            rec(day + 1, cum + val, cost + weights[day] * val)
        r[day] = 0

    rec(0, 0, 0)
    if best is None:
        raise SolverError("no feasible reduction plan under the given caps")
    return best


def brute_force_oracle(
    problem: AllocationProblem | ReductionProblem,
    weights: WeightConfig | None = None,
    max_nodes: int = DEFAULT_ORACLE_BOUND,
):
    """Exhaustive search over all feasible integer solutions.

    Returns ``(objective, solution)``. Refuses instances whose estimated
    enumeration size exceeds ``max_nodes``. Independent of the production
    solvers: plain recursion over per-(order, day) quantities.
    """
    if isinstance(problem, ReductionProblem):
        problem.validate()
        return _oracle_consolidation(problem, max_nodes)
    weights = weights or WeightConfig()
    weights.validate()
    problem.validate()
    return _oracle_allocation(problem, weights, max_nodes)
