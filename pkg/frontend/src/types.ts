/** Payload types mirroring the JSON the API serves. Day-keyed maps use
 * string keys ("0", "1", ...) exactly as they arrive on the wire. */

export type DayMap = Record<string, number>;

export interface NodeInfo {
  location: string;
  level: number;
  suppliers: { id: string; qty_per_unit: number }[];
  customers: string[];
  capacity_link: string | null;
  is_finished_good: boolean;
  substitutes: string[];
}

export interface OrderRouting {
  supplier: string;
  customer: string;
  material: string;
}

export interface OrderSchedule {
  demand: DayMap;
  status: string;
  priority: number;
}

export interface SupplyEntry {
  in_stock: number;
  in_transit: DayMap;
  planned_production: DayMap;
}

export interface WorldDoc {
  horizon_days: number;
  nodes: Record<string, NodeInfo>;
  capacity_packages: Record<string, { members: string[]; per_day: DayMap }>;
  orders: Record<string, OrderRouting>;
  schedule: {
    orders: Record<string, OrderSchedule>;
    supply: Record<string, SupplyEntry>;
    capacity: Record<string, DayMap>;
  };
}

export interface WorldResponse {
  sandbox: boolean;
  world: WorldDoc;
  config: unknown;
}

export interface KpiReport {
  iterations: number;
  rescheduled_material_agents: number;
  rescheduled_capacity_agents: number;
  rescheduled_finished_goods: number;
  fg_fulfillment_by_orders: number;
  fg_fulfillment_by_volume: number;
  max_delay_days: number;
}

export interface RunSummary {
  iterations_used: number;
  stabilized: boolean;
  affected_material: string[];
  affected_capacity: string[];
  affected_finished_goods: string[];
  events: unknown[];
}

export interface RunResponse {
  sandbox: boolean;
  stabilized: boolean;
  iterations_used: number;
  kpis: KpiReport;
  result: RunSummary;
}

export type DayDiff = Record<string, [number, number]>;

export interface WorldDiff {
  production: Record<string, DayDiff>;
  orders: Record<string, DayDiff>;
  order_status: Record<string, [string, string]>;
  capacity: Record<string, DayDiff>;
}

export interface DiffResponse {
  sandbox: boolean;
  diff: WorldDiff;
}

export interface ProposalDict {
  from: string;
  to: string;
  order: string;
  deltas: DayMap;
  grant: DayMap | null;
  round: number;
}

export interface TraceRecord {
  round: number;
  phase: string;
  agent: string;
  proposals_in: ProposalDict[];
  proposals_out: ProposalDict[];
  schedule_delta: Record<string, unknown>;
}

export interface StepResponse {
  pending: boolean;
  sandbox?: boolean;
  round?: number;
  records?: TraceRecord[];
  stabilized?: boolean;
  iterations_used?: number;
  kpis?: KpiReport;
  result?: RunSummary;
}

export interface SessionInfo {
  session_id: string;
  horizon_days: number;
}

export interface KpisResponse {
  sandbox: boolean;
  kpis: KpiReport;
}

export interface DisruptionEvent {
  kind: string;
  target: string;
  start_day: number;
  duration_days: number;
  affected_quantity?: number | null;
}

export interface Intervention {
  type: "priority_change" | "capacity_increase" | "expedite";
  [key: string]: unknown;
}
