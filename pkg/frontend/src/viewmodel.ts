/** Pure transformations from API payloads to renderable structures.
 *
 * Every number that ends up on screen is read straight out of a payload
 * map; this module arranges values but never derives new quantities (KPIs
 * and schedule totals are the engine's job).
 */

import type {
  DayDiff,
  KpiReport,
  StepResponse,
  TraceRecord,
  WorldDiff,
  WorldDoc,
} from "./types.js";

// -- BOM graph layout ---------------------------------------------------------

export interface GraphNode {
  id: string;
  level: number;
  column: number;
  isFinishedGood: boolean;
  capacityLink: string | null;
}

export interface GraphEdge {
  parent: string;
  supplier: string;
  qtyPerUnit: number;
}

export interface GraphLayout {
  rows: { level: number; nodes: GraphNode[] }[];
  edges: GraphEdge[];
}

/** Levels top-down: finished goods in row 0, deeper suppliers below. */
export function buildGraphLayout(world: WorldDoc): GraphLayout {
  const byLevel = new Map<number, GraphNode[]>();
  const edges: GraphEdge[] = [];
  for (const id of Object.keys(world.nodes).sort()) {
    const node = world.nodes[id];
    const row = byLevel.get(node.level) ?? [];
    row.push({
      id,
      level: node.level,
      column: row.length,
      isFinishedGood: node.is_finished_good,
      capacityLink: node.capacity_link,
    });
    byLevel.set(node.level, row);
    for (const link of node.suppliers) {
      edges.push({ parent: id, supplier: link.id, qtyPerUnit: link.qty_per_unit });
    }
  }
  const rows = [...byLevel.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([level, nodes]) => ({ level, nodes }));
  edges.sort((a, b) =>
    a.parent === b.parent
      ? a.supplier.localeCompare(b.supplier)
      : a.parent.localeCompare(b.parent),
  );
  return { rows, edges };
}

// -- schedule lanes -----------------------------------------------------------

export interface OrderRow {
  orderId: string;
  customer: string;
  status: string;
  priority: number;
  cells: number[]; // demand per day, verbatim payload values
}

export interface AgentLane {
  agent: string;
  level: number;
  inStock: number;
  production: number[]; // per day, verbatim payload values
  arrivals: number[];
  orderRows: OrderRow[];
}

export interface CapacityLane {
  packageId: string;
  perDay: number[];
  memberRows: { member: string; cells: number[] }[];
}

export interface LaneModel {
  days: number[];
  agents: AgentLane[];
  capacity: CapacityLane[];
}

function seriesToCells(series: Record<string, number>, horizon: number): number[] {
  const cells = new Array<number>(horizon).fill(0);
  for (const [day, qty] of Object.entries(series)) {
    const index = Number(day);
    if (index >= 0 && index < horizon) cells[index] = qty;
  }
  return cells;
}

export function buildScheduleLanes(world: WorldDoc): LaneModel {
  const horizon = world.horizon_days;
  const days = Array.from({ length: horizon }, (_, i) => i);
  const agents: AgentLane[] = [];
  for (const agent of Object.keys(world.nodes).sort()) {
    const supply = world.schedule.supply[agent];
    const orderRows: OrderRow[] = [];
    for (const orderId of Object.keys(world.orders).sort()) {
      const routing = world.orders[orderId];
      if (routing.supplier !== agent) continue;
      const schedule = world.schedule.orders[orderId];
      orderRows.push({
        orderId,
        customer: routing.customer,
        status: schedule.status,
        priority: schedule.priority,
        cells: seriesToCells(schedule.demand, horizon),
      });
    }
    agents.push({
      agent,
      level: world.nodes[agent].level,
      inStock: supply?.in_stock ?? 0,
      production: seriesToCells(supply?.planned_production ?? {}, horizon),
      arrivals: seriesToCells(supply?.in_transit ?? {}, horizon),
      orderRows,
    });
  }
  const capacity: CapacityLane[] = [];
  for (const packageId of Object.keys(world.capacity_packages).sort()) {
    const pkg = world.capacity_packages[packageId];
    capacity.push({
      packageId,
      perDay: seriesToCells(pkg.per_day, horizon),
      memberRows: [...pkg.members].sort().map((member) => ({
        member,
        cells: seriesToCells(
          world.schedule.supply[member]?.planned_production ?? {},
          horizon,
        ),
      })),
    });
  }
  return { days, agents, capacity };
}

// -- diff overlay -------------------------------------------------------------

export type ChangeKind = "added" | "reduced" | "removed";

export interface DiffCell {
  section: "production" | "orders" | "capacity";
  id: string;
  day: number;
  before: number;
  after: number;
  change: ChangeKind;
}

export interface DiffOverlay {
  cells: DiffCell[];
  statusChanges: { orderId: string; before: string; after: string }[];
  /** (section, id, day) -> change kind, for cell highlighting */
  index: Map<string, ChangeKind>;
}

export function overlayKey(section: string, id: string, day: number): string {
  return `${section}|${id}|${day}`;
}

function classify(before: number, after: number): ChangeKind {
  if (after > before) return "added";
  return after === 0 ? "removed" : "reduced";
}

export function buildDiffOverlay(diff: WorldDiff): DiffOverlay {
  const cells: DiffCell[] = [];
  const index = new Map<string, ChangeKind>();
  const sections: ["production" | "orders" | "capacity", Record<string, DayDiff>][] = [
    ["production", diff.production],
    ["orders", diff.orders],
    ["capacity", diff.capacity],
  ];
  for (const [section, entries] of sections) {
    for (const id of Object.keys(entries).sort()) {
      for (const [day, [before, after]] of Object.entries(entries[id]).sort(
        (a, b) => Number(a[0]) - Number(b[0]),
      )) {
        const change = classify(before, after);
        cells.push({ section, id, day: Number(day), before, after, change });
        index.set(overlayKey(section, id, Number(day)), change);
      }
    }
  }
  const statusChanges = Object.entries(diff.order_status)
    .sort((a, b) => a[0].localeCompare(b[0]))
    .map(([orderId, [before, after]]) => ({ orderId, before, after }));
  return { cells, statusChanges, index };
}

// -- KPI panel ----------------------------------------------------------------

export interface KpiRow {
  key: keyof KpiReport;
  label: string;
  value: string;
}

const KPI_LABELS: [keyof KpiReport, string][] = [
  ["iterations", "Iterations to stabilize"],
  ["rescheduled_material_agents", "Rescheduled material agents"],
  ["rescheduled_capacity_agents", "Rescheduled capacity agents"],
  ["rescheduled_finished_goods", "Rescheduled finished goods"],
  ["fg_fulfillment_by_orders", "FG fulfillment by orders"],
  ["fg_fulfillment_by_volume", "FG fulfillment by volume"],
  ["max_delay_days", "Max delay (days)"],
];

/** Values are rendered verbatim; the panel never recomputes a KPI. */
export function kpiRows(kpis: KpiReport): KpiRow[] {
  return KPI_LABELS.map(([key, label]) => ({
    key,
    label,
    value: String(kpis[key]),
  }));
}

export interface KpiCompareRow {
  label: string;
  committed: string;
  sandbox: string | null;
}

export function kpiComparison(
  committed: KpiReport,
  sandbox: KpiReport | null,
): KpiCompareRow[] {
  const sandboxRows = sandbox ? kpiRows(sandbox) : null;
  return kpiRows(committed).map((row, i) => ({
    label: row.label,
    committed: row.value,
    sandbox: sandboxRows ? sandboxRows[i].value : null,
  }));
}

// -- round stepper ------------------------------------------------------------

export interface StepperState {
  status: "idle" | "pending" | "done";
  round: number;
  stabilized: boolean | null;
  /** agents that changed schedule or talked in the last round */
  highlights: string[];
  lastRecords: TraceRecord[];
}

export function initialStepper(): StepperState {
  return { status: "idle", round: 0, stabilized: null, highlights: [], lastRecords: [] };
}

export function startedStepper(affected: string[]): StepperState {
  return {
    status: "pending",
    round: 0,
    stabilized: null,
    highlights: [...affected].sort(),
    lastRecords: [],
  };
}

export function applyStepResponse(
  state: StepperState,
  response: StepResponse,
): StepperState {
  if (response.pending) {
    const records = response.records ?? [];
    const highlights = new Set<string>();
    for (const record of records) {
      const changed = Object.keys(record.schedule_delta).length > 0;
      if (changed || record.proposals_out.length > 0) highlights.add(record.agent);
      for (const proposal of record.proposals_out) highlights.add(proposal.to);
    }
    highlights.delete("EXTERNAL");
    return {
      status: "pending",
      round: response.round ?? state.round + 1,
      stabilized: null,
      highlights: [...highlights].sort(),
      lastRecords: records,
    };
  }
  return {
    status: "done",
    round: state.round,
    stabilized: response.stabilized ?? null,
    highlights: [],
    lastRecords: [],
  };
}

/** Proposal edges traversed in a round, for graph highlighting. */
export function proposalEdges(records: TraceRecord[]): { from: string; to: string }[] {
  const edges: { from: string; to: string }[] = [];
  for (const record of records) {
    for (const proposal of record.proposals_out) {
      if (proposal.to !== "EXTERNAL") {
        edges.push({ from: proposal.from, to: proposal.to });
      }
    }
  }
  return edges;
}
