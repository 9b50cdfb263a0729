from __future__ import annotations

import pytest

from resched.errors import ScenarioError
from resched.model import check_feasibility
from resched.scenario import (
    GeneratorParams,
    bom_components,
    canonical_json,
    default_targets,
    events_for,
    fig2_scenario,
    generate_scenario,
    load_scenario,
    network_days_on_hand,
    scenario_dict,
)


def test_bundled_demo_scenario_loads(demo_world):
    scenario = fig2_scenario()
    assert len(scenario.world.bom.nodes) == 7
    assert len(scenario.world.capacity_packages) == 2
    assert scenario.world.canonical_bytes() == demo_world.canonical_bytes()
    assert scenario.events == []


def test_empty_orders_scenario_is_valid():
    data = scenario_dict(fig2_scenario().world)
    data["orders"] = []
    for entry in data["supply"].values():
        entry["planned_production"] = {}  # nothing demanded, nothing produced
    scenario = load_scenario(data)
    assert scenario.world.orders == {}
    assert check_feasibility(scenario.world) == []


def test_dangling_order_material_reports_pointer():
    data = scenario_dict(fig2_scenario().world)
    data["orders"][0]["material"] = "GHOST"
    with pytest.raises(ScenarioError) as err:
        load_scenario(data)
    assert err.value.pointer == "/orders/0/material"


def test_schema_violation_reports_pointer():
    data = scenario_dict(fig2_scenario().world)
    data["orders"][0]["demand"] = {"4": -2}
    with pytest.raises(ScenarioError) as err:
        load_scenario(data)
    assert "/orders/0/demand" in err.value.pointer


def test_not_json_is_a_scenario_error():
    with pytest.raises(ScenarioError, match="not valid JSON"):
        load_scenario(b"{nope")


def test_infeasible_baseline_is_a_scenario_error():
    data = scenario_dict(fig2_scenario().world)
    for entry in data["supply"].values():
        entry["in_stock"] = 0
        entry["in_transit"] = {}
    with pytest.raises(ScenarioError, match="infeasible"):
        load_scenario(data)


def test_generated_scenario_matches_requested_shape():
    params = GeneratorParams(seed=11)
    scenario = load_scenario(generate_scenario(params))
    assert len(scenario.world.bom.nodes) == 39
    assert len(scenario.world.capacity_packages) == 18
    components = bom_components(scenario.world)
    assert len(components) == 5
    depths = sorted(
        max(scenario.world.bom.node(n).level for n in comp) + 1
        for comp in components
    )
    assert depths[0] == 2 and depths[-1] == 7
    assert check_feasibility(scenario.world) == []


def test_generated_scenario_minimal_chain():
    params = GeneratorParams(
        bom_count=1,
        depth_min=2,
        depth_max=2,
        material_count=2,
        capacity_count=1,
        seed=3,
    )
    scenario = load_scenario(generate_scenario(params))
    assert len(scenario.world.bom.nodes) == 2
    assert check_feasibility(scenario.world) == []


def test_generation_is_deterministic():
    a = canonical_json(generate_scenario(GeneratorParams(seed=5)))
    b = canonical_json(generate_scenario(GeneratorParams(seed=5)))
    assert a == b
    c = canonical_json(generate_scenario(GeneratorParams(seed=6)))
    assert a != c


def test_roundtrip_preserves_canonical_bytes():
    raw = canonical_json(generate_scenario(GeneratorParams(seed=9)))
    scenario = load_scenario(raw)
    again = canonical_json(
        scenario_dict(scenario.world, scenario.events, scenario.config)
    )
    assert again == raw


def test_days_on_hand_within_half_day():
    for target in (14.8, 6.7, 3.8):
        scenario = load_scenario(
            generate_scenario(GeneratorParams(seed=2, days_on_hand=target))
        )
        actual = network_days_on_hand(scenario.world)
        assert abs(actual - target) <= 0.5, (target, actual)


def test_contradictory_params_rejected():
    with pytest.raises(ScenarioError):
        GeneratorParams(material_count=5).validate()  # fewer nodes than chains
        generate_scenario(GeneratorParams(material_count=5))
    with pytest.raises(ScenarioError):
        generate_scenario(GeneratorParams(material_count=22, capacity_count=18))
    with pytest.raises(ScenarioError):
        GeneratorParams(order_density=0).validate()
    with pytest.raises(ScenarioError):
        GeneratorParams(depth_min=1).validate()


def test_default_targets_one_per_bom():
    scenario = load_scenario(generate_scenario(GeneratorParams(seed=4)))
    for kind in ("raw_material_delay", "sfg_quarantine", "line_stoppage"):
        targets = default_targets(scenario.world, kind)
        assert len(targets) == 5
        components = bom_components(scenario.world)
        hit = set()
        for target in targets:
            for i, comp in enumerate(components):
                if target in comp or any(
                    target == pid
                    and all(
                        m in comp
                        for m in scenario.world.capacity_packages[pid].member_materials
                    )
                    for pid in scenario.world.capacity_packages
                ):
                    hit.add(i)
        assert len(hit) == 5


def test_events_for_anchors_delay_on_first_arrival():
    scenario = load_scenario(generate_scenario(GeneratorParams(seed=4)))
    events = events_for(scenario.world, "raw_material_delay", 3)
    for event in events:
        transit = scenario.world.supply[event.target].in_transit
        assert transit
        assert event.start_day == min(transit)


def test_scenario_schema_published_copy_matches_package():
    from importlib import resources

    packaged = (
        resources.files("resched").joinpath("schema/scenario.schema.json").read_text()
    )
    with open("schema/scenario.schema.json") as f:
        published = f.read()
    assert packaged == published
