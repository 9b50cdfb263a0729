from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resched.errors import SolverError
from resched.solvers import (
    MODE_ALL_OR_NOTHING,
    MODE_CAPACITY,
    MODE_PARTIAL,
    Allocation,
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


def make_problem(mode, orders, supply, horizon=None):
    horizon = horizon if horizon is not None else len(supply)
    return AllocationProblem(
        orders=tuple(orders), supply=tuple(supply), horizon=horizon, mode=mode
    )


def check_allocation_constraints(problem: AllocationProblem, result: Allocation):
    for spec in problem.orders:
        cum_x = 0
        cum_d = 0
        for day in range(problem.horizon):
            cum_x += result.x.get(spec.order_id, {}).get(day, 0)
            cum_d += spec.demand.get(day, 0)
            assert cum_x <= cum_d, f"{spec.order_id} delivered ahead of demand"
            if problem.mode == MODE_ALL_OR_NOTHING:
                assert result.x.get(spec.order_id, {}).get(day, 0) <= spec.demand.get(
                    day, 0
                )
    if problem.mode == MODE_CAPACITY:
        for day in range(problem.horizon):
            used = sum(result.x.get(o.order_id, {}).get(day, 0) for o in problem.orders)
            assert used <= problem.supply[day]
    else:
        cum_s = 0
        cum_x = 0
        for day in range(problem.horizon):
            cum_s += problem.supply[day]
            cum_x += sum(
                result.x.get(o.order_id, {}).get(day, 0) for o in problem.orders
            )
            assert cum_x <= cum_s


# -- worked examples ----------------------------------------------------------


def test_partial_priority_split():
    problem = make_problem(
        MODE_PARTIAL,
        [
            OrderSpec("A", {0: 5}, priority=2),
            OrderSpec("B", {0: 5}, priority=1),
        ],
        [6, 0, 0],
    )
    result = solve_partial(problem)
    assert result.x == {"A": {0: 5}, "B": {0: 1}}
    assert result.objective_value == 11
    assert brute_force_oracle(problem)[0] == 11


def test_partial_unconstrained_lands_on_demand_days():
    problem = make_problem(
        MODE_PARTIAL,
        [OrderSpec("A", {1: 2, 3: 4}), OrderSpec("B", {2: 3})],
        [20, 0, 0, 0],
    )
    result = solve_partial(problem)
    assert result.x == {"A": {1: 2, 3: 4}, "B": {2: 3}}


def test_partial_zero_supply():
    problem = make_problem(
        MODE_PARTIAL, [OrderSpec("A", {0: 5})], [0, 0, 0]
    )
    result = solve_partial(problem)
    assert result.x == {}
    assert result.objective_value == 0


def test_partial_reschedules_after_supply_recovers():
    # supply arrives too late for the committed days and lands afterwards
    problem = make_problem(
        MODE_PARTIAL, [OrderSpec("A", {1: 4})], [2, 0, 0, 2]
    )
    result = solve_partial(problem)
    assert result.x == {"A": {1: 2, 3: 2}}
    assert result.objective_value == 4


def test_all_or_nothing_prefers_heavier_order():
    problem = make_problem(
        MODE_ALL_OR_NOTHING,
        [OrderSpec("A", {1: 4}), OrderSpec("B", {1: 3})],
        [5, 0],
    )
    weights = WeightConfig(fulfillment_weight=1, adherence_weight=1)
    result = solve_all_or_nothing(problem, weights)
    assert result.x == {"A": {1: 4}}
    assert result.objective_value == 4
    assert brute_force_oracle(problem, weights)[0] == 4


def test_all_or_nothing_ample_supply_fills_everything():
    problem = make_problem(
        MODE_ALL_OR_NOTHING,
        [OrderSpec("A", {0: 2, 2: 3}), OrderSpec("B", {1: 4})],
        [20, 0, 0],
    )
    result = solve_all_or_nothing(problem)
    assert result.x == {"A": {0: 2, 2: 3}, "B": {1: 4}}
    # adherence terms vanish at full fills
    assert result.objective_value == 9


def test_all_or_nothing_rejects_losing_partial_fill():
    problem = make_problem(
        MODE_ALL_OR_NOTHING, [OrderSpec("A", {0: 4})], [2, 0]
    )
    weights = WeightConfig(fulfillment_weight=1, adherence_weight=1)
    # x=2 scores 2 + 1*(2*(2-4)) = -2, worse than nothing
    result = solve_all_or_nothing(problem, weights)
    assert result.x == {}
    assert result.objective_value == 0
    assert brute_force_oracle(problem, weights)[0] == 0


def test_all_or_nothing_weak_adherence_allows_partial():
    problem = make_problem(
        MODE_ALL_OR_NOTHING, [OrderSpec("A", {0: 4})], [2, 0]
    )
    weights = WeightConfig(fulfillment_weight=5, adherence_weight=1)
    result = solve_all_or_nothing(problem, weights)
    # 5*2 + 1*(2*(2-4)) = 6 beats skipping
    assert result.x == {"A": {0: 2}}
    assert result.objective_value == 6
    assert brute_force_oracle(problem, weights)[0] == 6


def test_consolidation_two_suppliers():
    problem = ReductionProblem(
        requested={"s1": {0: 2}, "s2": {1: 3}},
        horizon=2,
        day_weights=(2, 1),
    )
    plan = solve_consolidation(problem)
    assert plan.reductions == {0: 2, 1: 1}
    assert plan.objective_value == 5
    assert brute_force_oracle(problem)[0] == 5


def test_consolidation_no_requests():
    plan = solve_consolidation(ReductionProblem(requested={}, horizon=4))
    assert plan.reductions == {}
    assert plan.objective_value == 0


def test_consolidation_duplicate_suppliers_collapse():
    single = solve_consolidation(
        ReductionProblem(requested={"s1": {0: 2, 2: 1}}, horizon=4)
    )
    double = solve_consolidation(
        ReductionProblem(
            requested={"s1": {0: 2, 2: 1}, "s2": {0: 2, 2: 1}}, horizon=4
        )
    )
    assert single == double


def test_consolidation_respects_caps():
    problem = ReductionProblem(
        requested={"s1": {2: 3}},
        horizon=3,
        max_per_day={0: 5, 1: 1, 2: 1},
    )
    plan = solve_consolidation(problem)
    assert plan.reductions == {0: 1, 1: 1, 2: 1}
    assert brute_force_oracle(problem)[0] == plan.objective_value


def test_capacity_shifts_overflow_to_next_day():
    problem = make_problem(
        MODE_CAPACITY,
        [OrderSpec("A", {0: 4}), OrderSpec("B", {1: 2})],
        [3, 3],
    )
    result = solve_capacity(problem)
    assert result.x == {"A": {0: 3, 1: 1}, "B": {1: 2}}
    assert result.objective_value == 6
    assert brute_force_oracle(problem)[0] == 6


def test_capacity_zero_everywhere():
    problem = make_problem(MODE_CAPACITY, [OrderSpec("A", {0: 4})], [0, 0])
    assert solve_capacity(problem).objective_value == 0


def test_capacity_ample_keeps_demand_days():
    problem = make_problem(
        MODE_CAPACITY,
        [OrderSpec("A", {0: 2, 1: 2}), OrderSpec("B", {1: 1})],
        [9, 9],
    )
    result = solve_capacity(problem)
    assert result.x == {"A": {0: 2, 1: 2}, "B": {1: 1}}


def test_capacity_priority_breaks_day_ties():
    problem = make_problem(
        MODE_CAPACITY,
        [OrderSpec("A", {0: 2}, priority=1), OrderSpec("B", {0: 2}, priority=3)],
        [2, 0],
    )
    result = solve_capacity(problem)
    assert result.x == {"B": {0: 2}}


def test_oracle_empty_problem():
    problem = make_problem(MODE_PARTIAL, [], [0, 0])
    assert brute_force_oracle(problem) == (0, {})


def test_oracle_zero_supply_probe_is_not_an_error():
    problem = make_problem(MODE_PARTIAL, [OrderSpec("A", {0: 3})], [0, 0])
    assert brute_force_oracle(problem)[0] == 0


def test_oracle_rejects_oversized_instance():
    orders = [OrderSpec(f"O{i}", {d: 9 for d in range(12)}) for i in range(6)]
    problem = make_problem(MODE_PARTIAL, orders, [9] * 12)
    with pytest.raises(SolverError, match="too large"):
        brute_force_oracle(problem, max_nodes=1000)


# -- randomized oracle equivalence ---------------------------------------------


def random_allocation_problem(rng: random.Random, mode: str) -> AllocationProblem:
    horizon = rng.randint(2, 5)
    orders = []
    for i in range(rng.randint(1, 3)):
        demand_days = rng.sample(range(horizon), rng.randint(1, 2))
        demand = {d: rng.randint(1, 5) for d in demand_days}
        orders.append(OrderSpec(f"O{i}", demand, priority=rng.randint(1, 3)))
    supply = [rng.randint(0, 4) for _ in range(horizon)]
    return make_problem(mode, orders, supply)


def random_reduction_problem(rng: random.Random) -> ReductionProblem:
    horizon = rng.randint(2, 5)
    requested = {}
    for i in range(rng.randint(1, 3)):
        days = rng.sample(range(horizon), rng.randint(1, 2))
        requested[f"s{i}"] = {d: rng.randint(0, 4) for d in days}
    return ReductionProblem(requested=requested, horizon=horizon)


@pytest.mark.parametrize(
    "mode,solver",
    [
        (MODE_PARTIAL, solve_partial),
        (MODE_ALL_OR_NOTHING, solve_all_or_nothing),
        (MODE_CAPACITY, solve_capacity),
    ],
)
def test_solvers_match_oracle_on_random_instances(mode, solver):
    rng = random.Random(20240229)
    for _ in range(60):
        problem = random_allocation_problem(rng, mode)
        if mode == MODE_CAPACITY:
            result = solver(problem)
        else:
            result = solver(problem)
        oracle_value, _ = brute_force_oracle(problem)
        assert result.objective_value == oracle_value, problem
        check_allocation_constraints(problem, result)


def test_consolidation_matches_oracle_on_random_instances():
    rng = random.Random(777)
    for _ in range(60):
        problem = random_reduction_problem(rng)
        plan = solve_consolidation(problem)
        oracle_value, _ = brute_force_oracle(problem)
        assert plan.objective_value == oracle_value, problem
        requirement = problem.dominating_requirement()
        cum = plan.cumulative(problem.horizon)
        assert all(cum[n] >= requirement[n] for n in range(problem.horizon))


def test_partial_priority_bump_never_reduces_allocation():
    rng = random.Random(4242)
    for _ in range(40):
        problem = random_allocation_problem(rng, MODE_PARTIAL)
        target = problem.orders[0]
        before = solve_partial(problem).order_total(target.order_id)
        bumped = AllocationProblem(
            orders=tuple(
                OrderSpec(
                    o.order_id,
                    o.demand,
                    priority=o.priority + (5 if o.order_id == target.order_id else 0),
                )
                for o in problem.orders
            ),
            supply=problem.supply,
            horizon=problem.horizon,
            mode=problem.mode,
        )
        after = solve_partial(bumped).order_total(target.order_id)
        assert after >= before


def test_all_or_nothing_threshold_forces_binary_fills():
    rng = random.Random(99)
    for _ in range(40):
        problem = random_allocation_problem(rng, MODE_ALL_OR_NOTHING)
        d_max = problem.max_demand()
        weights = WeightConfig(
            fulfillment_weight=1, adherence_weight=d_max + 1
        )
        result = solve_all_or_nothing(problem, weights)
        for spec in problem.orders:
            for day, d in spec.demand.items():
                got = result.x.get(spec.order_id, {}).get(day, 0)
                assert got in (0, d)


def test_solver_determinism_bytes():
    rng = random.Random(31337)
    problem = random_allocation_problem(rng, MODE_PARTIAL)
    a = solve_partial(problem).to_json()
    b = solve_partial(problem).to_json()
    assert a == b


def test_malformed_problems_raise():
    with pytest.raises(SolverError, match="negative"):
        make_problem(MODE_PARTIAL, [OrderSpec("A", {0: -1})], [1]).validate()
    with pytest.raises(SolverError, match="horizon"):
        make_problem(MODE_PARTIAL, [OrderSpec("A", {9: 1})], [1, 1]).validate()
    with pytest.raises(SolverError, match="mode"):
        solve_partial(make_problem(MODE_CAPACITY, [], [1]))
    with pytest.raises(SolverError):
        WeightConfig(priority_weight={1: 2, 2: 2}).validate()
    with pytest.raises(SolverError):
        WeightConfig(day_attenuation=(3, 3, 1)).validate()
    with pytest.raises(SolverError):
        ReductionProblem(requested={}, horizon=3, day_weights=(1, 2, 3)).validate()


@settings(max_examples=60, deadline=None)
@given(
    demands=st.lists(
        st.dictionaries(st.integers(0, 3), st.integers(0, 4), max_size=2),
        min_size=1,
        max_size=3,
    ),
    supply=st.lists(st.integers(0, 4), min_size=4, max_size=4),
)
def test_partial_objective_matches_oracle_hypothesis(demands, supply):
    orders = [OrderSpec(f"O{i}", d) for i, d in enumerate(demands)]
    problem = make_problem(MODE_PARTIAL, orders, supply)
    assert solve_partial(problem).objective_value == brute_force_oracle(problem)[0]


@settings(max_examples=60, deadline=None)
@given(
    requested=st.dictionaries(
        st.sampled_from(["s0", "s1", "s2"]),
        st.dictionaries(st.integers(0, 3), st.integers(0, 4), max_size=3),
        max_size=3,
    )
)
def test_consolidation_dominance_hypothesis(requested):
    problem = ReductionProblem(requested=requested, horizon=4)
    plan = solve_consolidation(problem)
    requirement = problem.dominating_requirement()
    cum = plan.cumulative(4)
    assert all(cum[n] >= requirement[n] for n in range(4))
    assert plan.objective_value == brute_force_oracle(problem)[0]


def test_partial_heavy_order_with_late_demand_wins_scarce_supply():
    # the heavier order demands later; scarce early supply must be held for it
    problem = make_problem(
        MODE_PARTIAL,
        [
            OrderSpec("A", {4: 1}, priority=3),
            OrderSpec("B", {0: 1}, priority=1),
        ],
        [1, 0, 0, 0, 0],
    )
    result = solve_partial(problem)
    assert result.x == {"A": {4: 1}}
    assert result.objective_value == 3
    assert brute_force_oracle(problem)[0] == 3
