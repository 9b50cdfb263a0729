/** HTML/SVG string renderers. Quantities land in both the cell text and a
 * ``data-qty`` attribute so tests can assert payload fidelity directly. */

import type { KpiCompareRow } from "./viewmodel.js";
import type {
  AgentLane,
  DiffOverlay,
  GraphLayout,
  LaneModel,
  StepperState,
} from "./viewmodel.js";
import { overlayKey } from "./viewmodel.js";
import type { TraceRecord } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// -- BOM graph ----------------------------------------------------------------

const NODE_W = 104;
const NODE_H = 34;
const GAP_X = 26;
const GAP_Y = 56;

export function renderGraphSvg(
  layout: GraphLayout,
  highlights: string[] = [],
  activeEdges: { from: string; to: string }[] = [],
): string {
  const positions = new Map<string, { x: number; y: number }>();
  let maxColumns = 1;
  layout.rows.forEach((row, rowIndex) => {
    maxColumns = Math.max(maxColumns, row.nodes.length);
    row.nodes.forEach((node, col) => {
      positions.set(node.id, {
        x: 10 + col * (NODE_W + GAP_X),
        y: 10 + rowIndex * (NODE_H + GAP_Y),
      });
    });
  });
  const width = 20 + maxColumns * (NODE_W + GAP_X);
  const height = 20 + layout.rows.length * (NODE_H + GAP_Y);
  const highlighted = new Set(highlights);
  const active = new Set(activeEdges.map((e) => `${e.from}->${e.to}`));

  const parts: string[] = [
    `<svg class="bom-graph" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  for (const edge of layout.edges) {
    const parent = positions.get(edge.parent);
    const supplier = positions.get(edge.supplier);
    if (!parent || !supplier) continue;
    const isActive =
      active.has(`${edge.parent}->${edge.supplier}`) ||
      active.has(`${edge.supplier}->${edge.parent}`);
    parts.push(
      `<line class="edge${isActive ? " active" : ""}" ` +
        `x1="${parent.x + NODE_W / 2}" y1="${parent.y + NODE_H}" ` +
        `x2="${supplier.x + NODE_W / 2}" y2="${supplier.y}"/>`,
    );
  }
  for (const row of layout.rows) {
    for (const node of row.nodes) {
      const pos = positions.get(node.id)!;
      const classes = ["node"];
      if (node.isFinishedGood) classes.push("fg");
      if (highlighted.has(node.id)) classes.push("highlight");
      parts.push(
        `<g class="${classes.join(" ")}" data-node="${escapeHtml(node.id)}">` +
          `<rect x="${pos.x}" y="${pos.y}" width="${NODE_W}" height="${NODE_H}" rx="6"/>` +
          `<text x="${pos.x + NODE_W / 2}" y="${pos.y + NODE_H / 2 + 4}">` +
          `${escapeHtml(node.id)}</text></g>`,
      );
    }
  }
  parts.push("</svg>");
  return parts.join("");
}

// -- schedule lanes -----------------------------------------------------------

function laneCells(
  section: "production" | "orders" | "capacity",
  ownerId: string,
  cells: number[],
  overlay: DiffOverlay | null,
): string {
  return cells
    .map((qty, day) => {
      const change = overlay?.index.get(overlayKey(section, ownerId, day));
      const classes = ["cell"];
      if (qty > 0) classes.push("filled");
      if (change) classes.push(`diff-${change}`);
      return (
        `<td class="${classes.join(" ")}" data-day="${day}" data-qty="${qty}">` +
        `${qty > 0 ? qty : ""}</td>`
      );
    })
    .join("");
}

function agentLaneRows(lane: AgentLane, overlay: DiffOverlay | null): string {
  const rows: string[] = [];
  rows.push(
    `<tr class="lane production" data-agent="${escapeHtml(lane.agent)}">` +
      `<th>${escapeHtml(lane.agent)} <span class="meta">production` +
      ` (stock ${lane.inStock})</span></th>` +
      laneCells("production", lane.agent, lane.production, overlay) +
      "</tr>",
  );
  if (lane.arrivals.some((qty) => qty > 0)) {
    rows.push(
      `<tr class="lane arrivals" data-agent="${escapeHtml(lane.agent)}">` +
        `<th class="sub">arrivals</th>` +
        laneCells("production", `${lane.agent}:arrivals`, lane.arrivals, null) +
        "</tr>",
    );
  }
  for (const order of lane.orderRows) {
    rows.push(
      `<tr class="lane order status-${escapeHtml(order.status)}" ` +
        `data-order="${escapeHtml(order.orderId)}">` +
        `<th class="sub">&rarr; ${escapeHtml(order.customer)} ` +
        `<span class="meta">${escapeHtml(order.orderId)} p${order.priority}` +
        ` ${escapeHtml(order.status)}</span></th>` +
        laneCells("orders", order.orderId, order.cells, overlay) +
        "</tr>",
    );
  }
  return rows.join("");
}

export function renderLanes(model: LaneModel, overlay: DiffOverlay | null = null): string {
  const header =
    "<tr><th>agent / day</th>" +
    model.days.map((d) => `<th class="day">${d}</th>`).join("") +
    "</tr>";
  const agentRows = model.agents.map((lane) => agentLaneRows(lane, overlay)).join("");
  const capacityRows = model.capacity
    .map(
      (lane) =>
        `<tr class="lane capacity" data-package="${escapeHtml(lane.packageId)}">` +
        `<th>${escapeHtml(lane.packageId)} <span class="meta">capacity/day</span></th>` +
        laneCells("capacity", lane.packageId, lane.perDay, overlay) +
        "</tr>",
    )
    .join("");
  return `<table class="lanes">${header}${agentRows}${capacityRows}</table>`;
}

// -- KPI panel ----------------------------------------------------------------

export function renderKpiTable(rows: KpiCompareRow[]): string {
  const hasSandbox = rows.some((row) => row.sandbox !== null);
  const head = hasSandbox
    ? "<tr><th>KPI</th><th>committed</th><th>what-if</th></tr>"
    : "<tr><th>KPI</th><th>value</th></tr>";
  const body = rows
    .map((row) => {
      const cells = [`<td class="kpi-value" data-kpi-committed>${escapeHtml(row.committed)}</td>`];
      if (hasSandbox) {
        const changed = row.sandbox !== null && row.sandbox !== row.committed;
        cells.push(
          `<td class="kpi-value${changed ? " changed" : ""}" data-kpi-sandbox>` +
            `${row.sandbox === null ? "" : escapeHtml(row.sandbox)}</td>`,
        );
      }
      return `<tr><th>${escapeHtml(row.label)}</th>${cells.join("")}</tr>`;
    })
    .join("");
  return `<table class="kpis">${head}${body}</table>`;
}

// -- diff summary and trace ---------------------------------------------------

export function renderDiffSummary(overlay: DiffOverlay): string {
  if (overlay.cells.length === 0 && overlay.statusChanges.length === 0) {
    return '<p class="empty">No differences against the baseline.</p>';
  }
  const items = overlay.cells
    .map(
      (cell) =>
        `<li class="diff-${cell.change}">` +
        `${escapeHtml(cell.section)} ${escapeHtml(cell.id)} day ${cell.day}: ` +
        `<span data-before>${cell.before}</span> &rarr; ` +
        `<span data-after>${cell.after}</span></li>`,
    )
    .join("");
  const statuses = overlay.statusChanges
    .map(
      (change) =>
        `<li class="status">${escapeHtml(change.orderId)}: ` +
        `${escapeHtml(change.before)} &rarr; ${escapeHtml(change.after)}</li>`,
    )
    .join("");
  return `<ul class="diff-list">${items}${statuses}</ul>`;
}

export function renderStepper(state: StepperState): string {
  if (state.status === "idle") {
    return '<p class="stepper idle">No staged run.</p>';
  }
  if (state.status === "pending") {
    const agents = state.highlights.map((a) => `<code>${escapeHtml(a)}</code>`).join(" ");
    return (
      `<p class="stepper pending">Round ${state.round}; active: ${agents || "none"}</p>`
    );
  }
  return `<p class="stepper done">Run finished (stabilized: ${state.stabilized}).</p>`;
}

export function renderTraceRound(records: TraceRecord[]): string {
  if (records.length === 0) return '<p class="empty">Quiet round.</p>';
  const items = records
    .map((record) => {
      const out = record.proposals_out
        .map((p) => `${escapeHtml(p.order)}&rarr;${escapeHtml(p.to)}`)
        .join(", ");
      const changed = Object.keys(record.schedule_delta).length > 0;
      return (
        `<li class="${changed ? "changed" : "quiet"}">` +
        `r${record.round}/${escapeHtml(record.phase)} ` +
        `<strong>${escapeHtml(record.agent)}</strong>` +
        `${out ? ` proposes ${out}` : ""}${changed ? " (schedule updated)" : ""}</li>`
      );
    })
    .join("");
  return `<ul class="trace">${items}</ul>`;
}
