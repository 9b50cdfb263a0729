import { describe, expect, it } from "vitest";

import type {
  DiffResponse,
  KpisResponse,
  StepResponse,
  WorldResponse,
} from "../src/types.js";
import {
  applyStepResponse,
  buildDiffOverlay,
  buildGraphLayout,
  buildScheduleLanes,
  initialStepper,
  kpiComparison,
  kpiRows,
  overlayKey,
  proposalEdges,
  startedStepper,
} from "../src/viewmodel.js";
import { fixture } from "./helpers.js";

const before = fixture<WorldResponse>("world_before.json").world;
const after = fixture<WorldResponse>("world_after.json").world;
const diff = fixture<DiffResponse>("diff.json").diff;
const kpis = fixture<KpisResponse>("kpis.json").kpis;
const step = fixture<StepResponse>("step.json");

describe("graph layout", () => {
  it("stacks levels top-down with finished goods in the first row", () => {
    const layout = buildGraphLayout(before);
    expect(layout.rows.map((r) => r.level)).toEqual([0, 1, 2]);
    expect(layout.rows[0].nodes.map((n) => n.id)).toEqual(["FG1", "FG2"]);
    expect(layout.rows[0].nodes.every((n) => n.isFinishedGood)).toBe(true);
  });

  it("emits one edge per supplier link", () => {
    const layout = buildGraphLayout(before);
    expect(layout.edges).toContainEqual({
      parent: "SFG1",
      supplier: "RM1",
      qtyPerUnit: 1,
    });
    expect(layout.edges).toHaveLength(5);
  });
});

describe("schedule lanes", () => {
  it("copies every production quantity verbatim from the payload", () => {
    const lanes = buildScheduleLanes(after);
    for (const lane of lanes.agents) {
      const payload = after.schedule.supply[lane.agent].planned_production;
      for (const day of lanes.days) {
        expect(lane.production[day]).toBe(payload[String(day)] ?? 0);
      }
    }
  });

  it("copies every order delivery quantity verbatim from the payload", () => {
    const lanes = buildScheduleLanes(after);
    for (const lane of lanes.agents) {
      for (const row of lane.orderRows) {
        const payload = after.schedule.orders[row.orderId].demand;
        for (const day of lanes.days) {
          expect(row.cells[day]).toBe(payload[String(day)] ?? 0);
        }
      }
    }
  });

  it("lists orders under their supplying agent", () => {
    const lanes = buildScheduleLanes(before);
    const rm1 = lanes.agents.find((lane) => lane.agent === "RM1");
    expect(rm1?.orderRows.map((r) => r.orderId)).toEqual(["ORD-SFG1-RM1"]);
    expect(rm1?.orderRows[0].customer).toBe("SFG1");
  });

  it("carries capacity per-day values verbatim", () => {
    const lanes = buildScheduleLanes(before);
    const cp1 = lanes.capacity.find((lane) => lane.packageId === "CP1");
    for (const day of lanes.days) {
      expect(cp1?.perDay[day]).toBe(
        before.capacity_packages.CP1.per_day[String(day)] ?? 0,
      );
    }
    expect(cp1?.memberRows.map((r) => r.member)).toEqual(["FG1", "SFG1"]);
  });
});

describe("diff overlay", () => {
  it("classifies moved production as removed plus added", () => {
    const overlay = buildDiffOverlay(diff);
    expect(overlay.index.get(overlayKey("production", "SFG1", 3))).toBe("removed");
    expect(overlay.index.get(overlayKey("production", "SFG1", 6))).toBe("added");
  });

  it("classifies partial reductions", () => {
    const overlay = buildDiffOverlay(diff);
    expect(overlay.index.get(overlayKey("orders", "EXT-FG1", 5))).toBe("reduced");
    expect(overlay.index.get(overlayKey("orders", "EXT-FG1", 6))).toBe("added");
  });

  it("keeps before/after values verbatim", () => {
    const overlay = buildDiffOverlay(diff);
    const cell = overlay.cells.find(
      (c) => c.section === "orders" && c.id === "EXT-FG1" && c.day === 5,
    );
    expect(cell).toMatchObject({ before: 3, after: 2 });
  });
});

describe("kpi panel", () => {
  it("renders raw payload values without reformatting", () => {
    const rows = kpiRows(kpis);
    const byKey = Object.fromEntries(rows.map((r) => [r.key, r.value]));
    expect(byKey.fg_fulfillment_by_orders).toBe(String(kpis.fg_fulfillment_by_orders));
    expect(byKey.iterations).toBe(String(kpis.iterations));
    expect(rows).toHaveLength(7);
  });

  it("pairs committed and sandbox values without arithmetic", () => {
    const rows = kpiComparison(kpis, { ...kpis, max_delay_days: 9 });
    const delay = rows.find((r) => r.label === "Max delay (days)");
    expect(delay).toEqual({
      label: "Max delay (days)",
      committed: String(kpis.max_delay_days),
      sandbox: "9",
    });
    expect(kpiComparison(kpis, null).every((r) => r.sandbox === null)).toBe(true);
  });
});

describe("round stepper", () => {
  it("collects active agents from a pending round", () => {
    const state = applyStepResponse(startedStepper(["RM1"]), step);
    expect(state.status).toBe("pending");
    expect(state.round).toBe(1);
    expect(state.highlights).toContain("RM1");
    expect(state.highlights).toContain("SFG1");
    expect(state.highlights).not.toContain("EXTERNAL");
  });

  it("terminates on a non-pending response", () => {
    const state = applyStepResponse(initialStepper(), {
      pending: false,
      stabilized: true,
    });
    expect(state).toMatchObject({ status: "done", stabilized: true });
  });

  it("extracts traversed proposal edges for the graph", () => {
    const edges = proposalEdges(step.records ?? []);
    expect(edges).toContainEqual({ from: "RM1", to: "SFG1" });
  });
});
