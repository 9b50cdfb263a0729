from __future__ import annotations

import pytest

from resched.errors import (
    DisruptionError,
    InfeasibleBaselineError,
    WorldValidationError,
)
from resched.model import (
    EXTERNAL_CUSTOMER,
    CapacityPackage,
    CapacityProfile,
    DisruptionEvent,
    MaterialNode,
    Order,
    SupplierLink,
    SupplyProfile,
    apply_disruption,
    build_world,
    check_feasibility,
    cumulative_available,
)

from conftest import two_tree_world


def minimal_nodes():
    return [
        MaterialNode(
            id="A",
            level=0,
            supplier_links=(SupplierLink("B"),),
            is_finished_good=True,
        ),
        MaterialNode(id="B", level=1, customer_links=("A",)),
    ]


def test_build_world_demo_network(demo_world):
    assert len(demo_world.bom.nodes) == 7
    assert len(demo_world.capacity_packages) == 2
    linked = [n for n in demo_world.bom.nodes.values() if n.capacity_link]
    assert len(linked) == 4
    assert check_feasibility(demo_world) == []


def test_build_world_empty_orders_is_feasible():
    world = build_world(minimal_nodes(), [], [], {}, 14)
    assert check_feasibility(world) == []
    assert world.orders == {}


def test_build_world_rejects_two_node_cycle():
    nodes = [
        MaterialNode(
            id="A",
            supplier_links=(SupplierLink("B"),),
            customer_links=("B",),
        ),
        MaterialNode(
            id="B",
            supplier_links=(SupplierLink("A"),),
            customer_links=("A",),
        ),
    ]
    with pytest.raises(WorldValidationError, match="cycle"):
        build_world(nodes, [], [], {}, 14)


def test_build_world_rejects_dangling_supplier():
    nodes = [MaterialNode(id="A", supplier_links=(SupplierLink("GHOST"),))]
    with pytest.raises(WorldValidationError, match="GHOST"):
        build_world(nodes, [], [], {}, 14)


def test_build_world_rejects_inconsistent_links():
    nodes = [
        MaterialNode(id="A", supplier_links=(SupplierLink("B"),)),
        MaterialNode(id="B"),  # missing customer link back to A
    ]
    with pytest.raises(WorldValidationError, match="customer link"):
        build_world(nodes, [], [], {}, 14)


def test_build_world_rejects_infeasible_baseline():
    orders = [
        Order(
            id="O1",
            supplier="B",
            customer="A",
            material="B",
            demand={0: 5},
        )
    ]
    supplies = {"B": SupplyProfile(in_stock=1)}
    with pytest.raises(InfeasibleBaselineError) as err:
        build_world(minimal_nodes(), [], orders, supplies, 14)
    assert "day 0" in err.value.violation


def test_build_world_rejects_demand_outside_horizon():
    orders = [
        Order(id="O1", supplier="B", customer="A", material="B", demand={20: 1})
    ]
    with pytest.raises(WorldValidationError, match="horizon"):
        build_world(minimal_nodes(), [], orders, {"B": SupplyProfile(in_stock=5)}, 14)


def test_capacity_membership_must_be_mutual():
    nodes = [
        MaterialNode(id="A", capacity_link="P", is_finished_good=True),
    ]
    packages = [CapacityPackage(id="P", member_materials=())]
    with pytest.raises(WorldValidationError, match="member"):
        build_world(nodes, packages, [], {}, 14)


def test_cumulative_available_accumulates_for_materials():
    nodes = [MaterialNode(id="A")]
    supplies = {"A": SupplyProfile(in_stock=5, in_transit={2: 3})}
    world = build_world(nodes, [], [], supplies, 14)
    # naive accumulation oracle
    assert cumulative_available(world, "A", 0) == 5
    assert cumulative_available(world, "A", 1) == 5
    assert cumulative_available(world, "A", 2) == 8
    for day in range(13):
        assert cumulative_available(world, "A", day + 1) >= cumulative_available(
            world, "A", day
        )


def test_cumulative_available_zero_without_sources():
    world = build_world([MaterialNode(id="A")], [], [], {}, 14)
    assert all(cumulative_available(world, "A", d) == 0 for d in range(14))


def test_capacity_availability_does_not_accumulate(demo_world):
    # day 0 capacity goes unused by the baseline yet day 1 still offers
    # only its own per-day amount
    assert cumulative_available(demo_world, "CP1", 1) == 8


def test_line_stoppage_zeroes_window(demo_world):
    event = DisruptionEvent("line_stoppage", "CP1", 2, 3)
    world, affected = apply_disruption(demo_world, event)
    assert affected == {"CP1"}
    profile = world.capacity_packages["CP1"].profile
    assert [profile.available(d) for d in range(2, 5)] == [0, 0, 0]
    assert profile.available(5) == 8
    # original world untouched
    assert demo_world.capacity_packages["CP1"].profile.available(2) == 8


def test_delay_without_transit_in_window_changes_nothing(demo_world):
    event = DisruptionEvent("raw_material_delay", "RM1", 8, 2)
    world, affected = apply_disruption(demo_world, event)
    assert affected == frozenset()
    assert world.canonical_bytes() == demo_world.canonical_bytes()


def test_delay_moves_second_delivery(demo_world):
    event = DisruptionEvent("raw_material_delay", "RM1", 2, 4)
    world, affected = apply_disruption(demo_world, event)
    assert affected == {"RM1"}
    assert world.supply["RM1"].in_transit == {0: 3, 6: 3}


def test_delay_respects_affected_quantity(demo_world):
    event = DisruptionEvent("raw_material_delay", "RM1", 0, 3, affected_quantity=2)
    world, _ = apply_disruption(demo_world, event)
    assert world.supply["RM1"].in_transit == {0: 1, 2: 3, 3: 2}


def test_quarantine_holds_stock_and_window_production(demo_world):
    event = DisruptionEvent("sfg_quarantine", "SFG1", 2, 3)
    world, affected = apply_disruption(demo_world, event)
    assert affected == {"SFG1"}
    profile = world.supply["SFG1"]
    assert profile.in_stock == 0
    assert profile.planned_production == {}
    # 1 stock + 6 production released when the window lifts
    assert profile.in_transit == {5: 7}


def test_quarantine_with_quantity_takes_stock_first(demo_world):
    event = DisruptionEvent("sfg_quarantine", "SFG1", 2, 3, affected_quantity=3)
    world, _ = apply_disruption(demo_world, event)
    profile = world.supply["SFG1"]
    assert profile.in_stock == 0
    assert profile.planned_production == {2: 1, 3: 3}
    assert profile.in_transit == {5: 3}


def test_disruption_target_kind_mismatch(demo_world):
    with pytest.raises(DisruptionError):
        apply_disruption(demo_world, DisruptionEvent("line_stoppage", "RM1", 0, 1))
    with pytest.raises(DisruptionError):
        apply_disruption(demo_world, DisruptionEvent("sfg_quarantine", "CP1", 0, 1))


def test_disruption_window_outside_horizon(demo_world):
    with pytest.raises(DisruptionError):
        apply_disruption(
            demo_world, DisruptionEvent("raw_material_delay", "RM1", 14, 2)
        )


def test_apply_then_reset_restores_identical_bytes(demo_world):
    before = demo_world.canonical_bytes()
    disrupted, _ = apply_disruption(
        demo_world, DisruptionEvent("raw_material_delay", "RM1", 2, 4)
    )
    assert disrupted.canonical_bytes() != before
    assert disrupted.reset_to_baseline().canonical_bytes() == before


def test_clone_is_deep(demo_world):
    clone = demo_world.clone()
    clone.supply["RM1"].in_transit[9] = 99
    clone.orders["EXT-FG1"].demand[9] = 99
    assert 9 not in demo_world.supply["RM1"].in_transit
    assert 9 not in demo_world.orders["EXT-FG1"].demand


def test_capacity_reservation_counts_against_capacity():
    nodes = [
        MaterialNode(id="A", capacity_link="P", is_finished_good=True),
    ]
    packages = [
        CapacityPackage(
            id="P",
            member_materials=("A",),
            profile=CapacityProfile(per_day={0: 4}),
        )
    ]
    orders = [
        Order(id="RES", supplier="P", customer=EXTERNAL_CUSTOMER, material="A", demand={0: 3})
    ]
    supplies = {"A": SupplyProfile(planned_production={0: 2}, in_stock=0)}
    # 2 production + 3 reserved > 4 available
    with pytest.raises(InfeasibleBaselineError):
        build_world(nodes, packages, orders, supplies, 14)


def test_world_roundtrip_bytes_stable(demo_world):
    again = two_tree_world()
    assert again.canonical_bytes() == demo_world.canonical_bytes()
