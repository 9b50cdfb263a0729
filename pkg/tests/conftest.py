from __future__ import annotations

import pytest


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            if "test_acceptance" in getattr(report, "nodeid", ""):
                name = report.nodeid.split("::")[-1]
                lines.append((name, label))
    if lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, label in sorted(lines):
            terminalreporter.write_line(f"  {label} {name}")

from resched.model import (
    EXTERNAL_CUSTOMER,
    CapacityPackage,
    CapacityProfile,
    MaterialNode,
    Order,
    SupplierLink,
    SupplyProfile,
    build_world,
)


def two_tree_world(horizon: int = 14, sfg1_stock: int = 1):
    """Seven-node demo network: two BOM trees sharing nothing.

    Tree 1: FG1 consumes SFG1 and RM2; SFG1 consumes RM1.
    Tree 2: FG2 consumes SFG2; SFG2 consumes RM3.
    FG1/SFG1 share line CP1, FG2/SFG2 share line CP2.
    """
    nodes = [
        MaterialNode(
            id="FG1",
            level=0,
            supplier_links=(SupplierLink("SFG1"), SupplierLink("RM2")),
            capacity_link="CP1",
            is_finished_good=True,
        ),
        MaterialNode(
            id="SFG1",
            level=1,
            supplier_links=(SupplierLink("RM1"),),
            customer_links=("FG1",),
            capacity_link="CP1",
        ),
        MaterialNode(id="RM1", level=2, customer_links=("SFG1",)),
        MaterialNode(id="RM2", level=1, customer_links=("FG1",)),
        MaterialNode(
            id="FG2",
            level=0,
            supplier_links=(SupplierLink("SFG2"),),
            capacity_link="CP2",
            is_finished_good=True,
        ),
        MaterialNode(
            id="SFG2",
            level=1,
            supplier_links=(SupplierLink("RM3"),),
            customer_links=("FG2",),
            capacity_link="CP2",
        ),
        MaterialNode(id="RM3", level=2, customer_links=("SFG2",)),
    ]
    packages = [
        CapacityPackage(
            id="CP1",
            member_materials=("FG1", "SFG1"),
            profile=CapacityProfile(per_day={d: 8 for d in range(horizon)}),
        ),
        CapacityPackage(
            id="CP2",
            member_materials=("FG2", "SFG2"),
            profile=CapacityProfile(per_day={d: 6 for d in range(horizon)}),
        ),
    ]
    orders = [
        Order(
            id="EXT-FG1",
            supplier="FG1",
            customer=EXTERNAL_CUSTOMER,
            material="FG1",
            demand={4: 3, 5: 3, 6: 2},
            priority=2,
        ),
        Order(
            id="ORD-FG1-SFG1",
            supplier="SFG1",
            customer="FG1",
            material="SFG1",
            demand={4: 2, 5: 3, 6: 2},
        ),
        Order(
            id="ORD-FG1-RM2",
            supplier="RM2",
            customer="FG1",
            material="RM2",
            demand={4: 2, 5: 3, 6: 2},
        ),
        Order(
            id="ORD-SFG1-RM1",
            supplier="RM1",
            customer="SFG1",
            material="RM1",
            demand={2: 3, 3: 3},
        ),
        Order(
            id="EXT-FG2",
            supplier="FG2",
            customer=EXTERNAL_CUSTOMER,
            material="FG2",
            demand={3: 2, 4: 2},
        ),
        Order(
            id="ORD-FG2-SFG2",
            supplier="SFG2",
            customer="FG2",
            material="SFG2",
            demand={3: 2, 4: 2},
        ),
        Order(
            id="ORD-SFG2-RM3",
            supplier="RM3",
            customer="SFG2",
            material="RM3",
            demand={1: 2, 2: 2},
        ),
    ]
    supplies = {
        "FG1": SupplyProfile(in_stock=1, planned_production={4: 2, 5: 3, 6: 2}),
        "SFG1": SupplyProfile(
            in_stock=sfg1_stock, planned_production={2: 3, 3: 3}
        ),
        "RM1": SupplyProfile(in_stock=0, in_transit={0: 3, 2: 3}),
        "RM2": SupplyProfile(in_stock=2, in_transit={0: 7}),
        "FG2": SupplyProfile(planned_production={3: 2, 4: 2}),
        "SFG2": SupplyProfile(in_stock=1, planned_production={1: 2, 2: 2}),
        "RM3": SupplyProfile(in_transit={0: 6}),
    }
    return build_world(nodes, packages, orders, supplies, horizon)


def chain_world(horizon: int = 14, buffer_stock: int = 4):
    """Three-level single chain FG <- SFG <- RM with a configurable
    downstream buffer at the SFG."""
    nodes = [
        MaterialNode(
            id="C-FG",
            level=0,
            supplier_links=(SupplierLink("C-SFG"),),
            is_finished_good=True,
        ),
        MaterialNode(
            id="C-SFG",
            level=1,
            supplier_links=(SupplierLink("C-RM"),),
            customer_links=("C-FG",),
        ),
        MaterialNode(id="C-RM", level=2, customer_links=("C-SFG",)),
    ]
    orders = [
        Order(
            id="EXT-C-FG",
            supplier="C-FG",
            customer=EXTERNAL_CUSTOMER,
            material="C-FG",
            demand={6: 2, 8: 2},
        ),
        Order(
            id="ORD-C-FG-SFG",
            supplier="C-SFG",
            customer="C-FG",
            material="C-SFG",
            demand={6: 2, 8: 2},
        ),
        Order(
            id="ORD-C-SFG-RM",
            supplier="C-RM",
            customer="C-SFG",
            material="C-RM",
            demand={4: 2, 6: 2},
        ),
    ]
    supplies = {
        "C-FG": SupplyProfile(planned_production={6: 2, 8: 2}),
        "C-SFG": SupplyProfile(
            in_stock=buffer_stock, planned_production={4: 2, 6: 2}
        ),
        "C-RM": SupplyProfile(in_transit={0: 2, 4: 2}),
    }
    return build_world(nodes, [], orders, supplies, horizon)


@pytest.fixture
def demo_world():
    return two_tree_world()
