/** DOM wiring for the war-room console. Pure glue: every state change
 * round-trips the API and re-renders from the response. */

import { ApiClient, ApiError } from "./api.js";
import type {
  DisruptionEvent,
  Intervention,
  KpiReport,
  RunResponse,
  StepResponse,
  WorldDoc,
} from "./types.js";
import {
  applyStepResponse,
  buildDiffOverlay,
  buildGraphLayout,
  buildScheduleLanes,
  initialStepper,
  kpiComparison,
  proposalEdges,
  startedStepper,
  type StepperState,
} from "./viewmodel.js";
import {
  renderDiffSummary,
  renderGraphSvg,
  renderKpiTable,
  renderLanes,
  renderStepper,
  renderTraceRound,
} from "./render.js";

const api = new ApiClient("");

interface ConsoleState {
  sessionId: string | null;
  world: WorldDoc | null;
  committedKpis: KpiReport | null;
  sandboxKpis: KpiReport | null;
  sandboxActive: boolean;
  stepper: StepperState;
}

const state: ConsoleState = {
  sessionId: null,
  world: null,
  committedKpis: null,
  sandboxKpis: null,
  sandboxActive: false,
  stepper: initialStepper(),
};

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function setStatus(message: string, isError = false): void {
  const bar = el("status");
  bar.textContent = message;
  bar.className = isError ? "error" : "";
}

async function refreshView(highlights: string[] = []): Promise<void> {
  if (!state.sessionId) return;
  const sandbox = state.sandboxActive;
  const [worldResponse, diffResponse, kpisResponse] = await Promise.all([
    api.getWorld(state.sessionId, sandbox),
    api.getDiff(state.sessionId, sandbox),
    api.getKpis(state.sessionId, sandbox),
  ]);
  state.world = worldResponse.world;
  const overlay = buildDiffOverlay(diffResponse.diff);
  if (sandbox) {
    state.sandboxKpis = kpisResponse.kpis;
    const committed = await api.getKpis(state.sessionId, false);
    state.committedKpis = committed.kpis;
  } else {
    state.committedKpis = kpisResponse.kpis;
    state.sandboxKpis = null;
  }

  const layout = buildGraphLayout(state.world);
  el("graph").innerHTML = renderGraphSvg(
    layout,
    highlights,
    proposalEdges(state.stepper.lastRecords),
  );
  el("lanes").innerHTML = renderLanes(buildScheduleLanes(state.world), overlay);
  el("kpis").innerHTML = renderKpiTable(
    kpiComparison(state.committedKpis!, state.sandboxKpis),
  );
  el("diff").innerHTML = renderDiffSummary(overlay);
  el("stepper-state").innerHTML = renderStepper(state.stepper);
  el("mode").textContent = sandbox ? "what-if sandbox" : "committed";
  fillTargetPicker();
}

function fillTargetPicker(): void {
  if (!state.world) return;
  const kind = (el<HTMLSelectElement>("event-kind")).value;
  const picker = el<HTMLSelectElement>("event-target");
  const previous = picker.value;
  picker.innerHTML = "";
  const ids =
    kind === "line_stoppage"
      ? Object.keys(state.world.capacity_packages)
      : Object.keys(state.world.nodes);
  for (const id of ids.sort()) {
    const option = document.createElement("option");
    option.value = id;
    option.textContent = id;
    picker.appendChild(option);
  }
  if (ids.includes(previous)) picker.value = previous;
}

function eventFromForm(): DisruptionEvent {
  const qty = el<HTMLInputElement>("event-qty").value;
  return {
    kind: el<HTMLSelectElement>("event-kind").value,
    target: el<HTMLSelectElement>("event-target").value,
    start_day: Number(el<HTMLInputElement>("event-start").value),
    duration_days: Number(el<HTMLInputElement>("event-duration").value),
    affected_quantity: qty ? Number(qty) : null,
  };
}

async function guard(action: () => Promise<void>): Promise<void> {
  try {
    await action();
  } catch (err) {
    if (err instanceof ApiError) {
      setStatus(`${err.status}: ${err.detail}`, true);
    } else {
      setStatus(String(err), true);
    }
  }
}

function describeRun(run: RunResponse): string {
  return (
    `stabilized=${run.stabilized} iterations=${run.iterations_used} ` +
    `by_orders=${run.kpis.fg_fulfillment_by_orders} ` +
    `by_volume=${run.kpis.fg_fulfillment_by_volume}`
  );
}

function wire(): void {
  el("scenario-file").addEventListener("change", (event) =>
    guard(async () => {
      const input = event.target as HTMLInputElement;
      const file = input.files?.[0];
      if (!file) return;
      const scenario = JSON.parse(await file.text());
      const info = await api.createSession(scenario);
      state.sessionId = info.session_id;
      state.sandboxActive = false;
      state.stepper = initialStepper();
      setStatus(`session ${info.session_id} over ${info.horizon_days} days`);
      await refreshView();
    }),
  );

  el("event-kind").addEventListener("change", fillTargetPicker);

  el("inject").addEventListener("click", () =>
    guard(async () => {
      if (!state.sessionId) return setStatus("load a scenario first", true);
      const sandbox = el<HTMLInputElement>("use-sandbox").checked;
      state.sandboxActive = sandbox;
      const response = (await api.postDisruptions(state.sessionId, [eventFromForm()], {
        sandbox,
      })) as RunResponse;
      setStatus(describeRun(response));
      await refreshView(response.result.affected_material);
    }),
  );

  el("stage").addEventListener("click", () =>
    guard(async () => {
      if (!state.sessionId) return setStatus("load a scenario first", true);
      const sandbox = el<HTMLInputElement>("use-sandbox").checked;
      state.sandboxActive = sandbox;
      const response = (await api.postDisruptions(state.sessionId, [eventFromForm()], {
        sandbox,
        stepwise: true,
      })) as StepResponse & { affected: string[] };
      state.stepper = startedStepper(response.affected ?? []);
      setStatus("staged; step through the rounds");
      await refreshView(state.stepper.highlights);
    }),
  );

  el("step").addEventListener("click", () =>
    guard(async () => {
      if (!state.sessionId) return setStatus("no session", true);
      const response = await api.step(state.sessionId);
      state.stepper = applyStepResponse(state.stepper, response);
      el("trace").innerHTML = renderTraceRound(state.stepper.lastRecords);
      setStatus(
        state.stepper.status === "done"
          ? `run finished (stabilized=${state.stepper.stabilized})`
          : `round ${state.stepper.round} done`,
      );
      await refreshView(state.stepper.highlights);
    }),
  );

  el("intervene").addEventListener("click", () =>
    guard(async () => {
      if (!state.sessionId) return setStatus("load a scenario first", true);
      const sandbox = el<HTMLInputElement>("use-sandbox").checked;
      state.sandboxActive = sandbox;
      const intervention = JSON.parse(
        el<HTMLTextAreaElement>("intervention-json").value,
      ) as Intervention;
      const response = await api.postIntervention(
        state.sessionId,
        intervention,
        sandbox,
      );
      setStatus(describeRun(response));
      await refreshView();
    }),
  );

  el("commit").addEventListener("click", () =>
    guard(async () => {
      if (!state.sessionId) return;
      const result = await api.commitSandbox(state.sessionId);
      state.sandboxActive = false;
      setStatus(`committed ${result.committed_ops} what-if operations`);
      await refreshView();
    }),
  );

  el("discard").addEventListener("click", () =>
    guard(async () => {
      if (!state.sessionId) return;
      await api.discardSandbox(state.sessionId);
      state.sandboxActive = false;
      state.stepper = initialStepper();
      setStatus("sandbox discarded");
      await refreshView();
    }),
  );

  el("view-committed").addEventListener("click", () =>
    guard(async () => {
      state.sandboxActive = false;
      await refreshView();
    }),
  );
  el("view-sandbox").addEventListener("click", () =>
    guard(async () => {
      state.sandboxActive = true;
      await refreshView();
    }),
  );
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", wire);
}
