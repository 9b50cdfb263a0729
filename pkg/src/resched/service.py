"""HTTP facade for the planner console.

Sessions are in-memory and event-sourced: every committed mutation is
appended to the session history, so replaying the history against a fresh
session from the same scenario reproduces identical world bytes. What-if
calls with ``?sandbox=true`` operate on a shadow copy that never touches
the committed world until explicitly committed.

Runs execute synchronously (networks of this scale stabilize in
milliseconds); a per-session lock serializes writers. The step endpoint
drives a staged run one negotiation round at a time for UI step-through.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field, asdict
from pathlib import Path

from fastapi import Body, Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse

from .engine import EngineConfig, NegotiationRun, RunResult, run_until_stable
from .errors import InfeasibleBaselineError, ReschedError, ScenarioError
from .metrics import compute_kpis
from .model import DisruptionEvent, WorldState, clean_series
from .scenario import load_scenario


@dataclass
class SideState:
    """One view of a session: the committed one or the sandbox shadow."""

    world: WorldState
    ops: list[dict] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)
    last_result: dict | None = None
    last_kpis: dict | None = None


@dataclass
class Session:
    id: str
    baseline_world: WorldState
    config: EngineConfig
    committed: SideState
    sandbox: SideState | None = None
    pending: NegotiationRun | None = None
    pending_sandbox: bool = False
    pending_op: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def side(self, sandbox: bool) -> SideState:
        if not sandbox:
            return self.committed
        if self.sandbox is None:
            self.sandbox = SideState(world=self.committed.world.clone())
        return self.sandbox


def _events_from(payload: dict) -> list[DisruptionEvent]:
    raw_events = payload.get("events")
    if raw_events is None:
        raw_events = [payload]
    try:
        return [
            DisruptionEvent(
                kind=e["kind"],
                target=e["target"],
                start_day=e["start_day"],
                duration_days=e["duration_days"],
                affected_quantity=e.get("affected_quantity"),
            )
            for e in raw_events
        ]
    except (KeyError, TypeError) as err:
        raise HTTPException(400, f"malformed event payload: {err}")


def _diff_day_maps(base: dict[int, int], cur: dict[int, int]) -> dict:
    days = sorted(set(base) | set(cur))
    return {
        str(d): [base.get(d, 0), cur.get(d, 0)]
        for d in days
        if base.get(d, 0) != cur.get(d, 0)
    }


def world_diff(baseline: WorldState, current: WorldState) -> dict:
    production = {}
    for aid in current.material_ids():
        delta = _diff_day_maps(
            clean_series(baseline.supply[aid].planned_production),
            clean_series(current.supply[aid].planned_production),
        )
        if delta:
            production[aid] = delta
    orders = {}
    status = {}
    for oid in sorted(current.orders):
        delta = _diff_day_maps(
            clean_series(baseline.orders[oid].demand),
            clean_series(current.orders[oid].demand),
        )
        if delta:
            orders[oid] = delta
        if baseline.orders[oid].status != current.orders[oid].status:
            status[oid] = [baseline.orders[oid].status, current.orders[oid].status]
    capacity = {}
    for pid in current.capacity_ids():
        delta = _diff_day_maps(
            clean_series(baseline.capacity_packages[pid].profile.per_day),
            clean_series(current.capacity_packages[pid].profile.per_day),
        )
        if delta:
            capacity[pid] = delta
    return {
        "production": production,
        "orders": orders,
        "order_status": status,
        "capacity": capacity,
    }


def _identity_kpis(session: Session, side: SideState) -> dict:
    if side.last_kpis is not None:
        return side.last_kpis
    result = run_until_stable(side.world, [], session.config)
    return compute_kpis(session.baseline_world, result).to_dict()


def _apply_run(session: Session, side: SideState, result: RunResult, op: dict) -> dict:
    kpis = compute_kpis(session.baseline_world, result)
    side.world = result.world
    side.ops.append(op)
    side.trace.extend(r.to_dict() for r in result.trace)
    side.last_result = result.summary()
    side.last_kpis = kpis.to_dict()
    return {
        "stabilized": result.stabilized,
        "iterations_used": result.iterations_used,
        "kpis": kpis.to_dict(),
        "result": result.summary(),
    }


def _apply_intervention(world: WorldState, data: dict) -> tuple[WorldState, tuple[str, ...]]:
    kind = data.get("type")
    new_world = world.clone()
    if kind == "priority_change":
        order = new_world.orders.get(data.get("order", ""))
        if order is None:
            raise HTTPException(404, f"unknown order {data.get('order')!r}")
        priority = data.get("priority")
        if not isinstance(priority, int) or priority < 1:
            raise HTTPException(400, "priority must be a positive integer")
        order.priority = priority
        return new_world, ()
    if kind == "capacity_increase":
        pkg = new_world.capacity_packages.get(data.get("target", ""))
        if pkg is None:
            raise HTTPException(404, f"unknown capacity package {data.get('target')!r}")
        try:
            start = int(data["start_day"])
            duration = int(data["duration_days"])
            delta = int(data["delta"])
        except (KeyError, ValueError, TypeError) as err:
            raise HTTPException(400, f"malformed capacity_increase: {err}")
        for day in range(start, start + duration):
            if 0 <= day < new_world.horizon_days:
                pkg.profile.per_day[day] = max(
                    0, pkg.profile.per_day.get(day, 0) + delta
                )
        return new_world, (pkg.id,)
    if kind == "expedite":
        profile = new_world.supply.get(data.get("target", ""))
        if profile is None:
            raise HTTPException(404, f"unknown material agent {data.get('target')!r}")
        try:
            from_day = int(data["from_day"])
            to_day = int(data["to_day"])
        except (KeyError, ValueError, TypeError) as err:
            raise HTTPException(400, f"malformed expedite: {err}")
        if to_day >= from_day or to_day < 0:
            raise HTTPException(400, "expedite must move arrivals earlier")
        available = profile.in_transit.get(from_day, 0)
        qty = data.get("quantity", available)
        if not isinstance(qty, int) or qty < 1 or qty > available:
            raise HTTPException(400, f"cannot expedite {qty} of {available} units")
        profile.in_transit[from_day] = available - qty
        profile.in_transit[to_day] = profile.in_transit.get(to_day, 0) + qty
        profile.in_transit = clean_series(profile.in_transit)
        return new_world, (data["target"],)
    raise HTTPException(400, f"unknown intervention type {kind!r}")


def create_app(static_dir: str | None = None, token: str | None = None) -> FastAPI:
    app = FastAPI(title="resched", version="0.1.0")
    sessions: dict[str, Session] = {}

    def auth(request: Request) -> None:
        if token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(401, "missing or invalid bearer token")

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return session

    @app.post("/sessions", dependencies=[Depends(auth)])
    def create_session(payload: dict = Body(...)):
        try:
            scenario = load_scenario(payload)
        except ScenarioError as err:
            status = 422 if isinstance(err.__cause__, InfeasibleBaselineError) else 400
            raise HTTPException(status, str(err))
        session = Session(
            id=uuid.uuid4().hex,
            baseline_world=scenario.world,
            config=scenario.config,
            committed=SideState(world=scenario.world.clone()),
        )
        if scenario.events:
            result = run_until_stable(session.committed.world, scenario.events, session.config)
            _apply_run(
                session,
                session.committed,
                result,
                {"op": "disruptions", "events": [asdict(e) for e in scenario.events]},
            )
        sessions[session.id] = session
        return {"session_id": session.id, "horizon_days": scenario.world.horizon_days}

    @app.get("/sessions/{session_id}/world", dependencies=[Depends(auth)])
    def get_world(session_id: str, sandbox: bool = Query(False)):
        session = get_session(session_id)
        with session.lock:
            side = session.side(sandbox)
            return {
                "sandbox": sandbox,
                "world": side.world.to_dict(),
                "config": session.config.to_dict(),
            }

    @app.post("/sessions/{session_id}/disruptions", dependencies=[Depends(auth)])
    def post_disruptions(
        session_id: str,
        payload: dict = Body(...),
        sandbox: bool = Query(False),
        stepwise: bool = Query(False),
    ):
        session = get_session(session_id)
        events = _events_from(payload)
        with session.lock:
            if session.pending is not None:
                raise HTTPException(409, "a stepwise run is in progress")
            side = session.side(sandbox)
            op = {"op": "disruptions", "events": [asdict(e) for e in events]}
            try:
                if stepwise:
                    session.pending = NegotiationRun(side.world, events, session.config)
                    session.pending_sandbox = sandbox
                    session.pending_op = op
                    return {
                        "pending": True,
                        "sandbox": sandbox,
                        "affected": sorted(
                            session.pending.dirty_material
                            | session.pending.dirty_capacity
                        ),
                    }
                result = run_until_stable(side.world, events, session.config)
            except ReschedError as err:
                raise HTTPException(422, str(err))
            return {"sandbox": sandbox, **_apply_run(session, side, result, op)}

    @app.post("/sessions/{session_id}/step", dependencies=[Depends(auth)])
    def post_step(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if session.pending is None:
                raise HTTPException(409, "no stepwise run is in progress")
            records = session.pending.step()
            if records is not None:
                return {
                    "pending": True,
                    "round": session.pending.iterations,
                    "records": [r.to_dict() for r in records],
                }
            result = session.pending.result()
            side = session.side(session.pending_sandbox)
            summary = _apply_run(session, side, result, session.pending_op)
            session.pending = None
            session.pending_op = None
            return {"pending": False, "sandbox": session.pending_sandbox, **summary}

    @app.post("/sessions/{session_id}/interventions", dependencies=[Depends(auth)])
    def post_intervention(
        session_id: str,
        payload: dict = Body(...),
        sandbox: bool = Query(False),
    ):
        session = get_session(session_id)
        with session.lock:
            if session.pending is not None:
                raise HTTPException(409, "a stepwise run is in progress")
            side = session.side(sandbox)
            new_world, dirty = _apply_intervention(side.world, payload)
            try:
                result = run_until_stable(new_world, [], session.config, extra_dirty=dirty)
            except ReschedError as err:
                raise HTTPException(422, str(err))
            op = {"op": "intervention", "intervention": payload}
            return {"sandbox": sandbox, **_apply_run(session, side, result, op)}

    @app.get("/sessions/{session_id}/kpis", dependencies=[Depends(auth)])
    def get_kpis(session_id: str, sandbox: bool = Query(False)):
        session = get_session(session_id)
        with session.lock:
            side = session.side(sandbox)
            return {"sandbox": sandbox, "kpis": _identity_kpis(session, side)}

    @app.get(
        "/sessions/{session_id}/trace",
        dependencies=[Depends(auth)],
        response_class=PlainTextResponse,
    )
    def get_trace(session_id: str, sandbox: bool = Query(False)):
        session = get_session(session_id)
        with session.lock:
            side = session.side(sandbox)
            return "\n".join(
                json.dumps(r, sort_keys=True, separators=(",", ":"))
                for r in side.trace
            )

    @app.get("/sessions/{session_id}/diff", dependencies=[Depends(auth)])
    def get_diff(session_id: str, sandbox: bool = Query(False)):
        session = get_session(session_id)
        with session.lock:
            side = session.side(sandbox)
            return {
                "sandbox": sandbox,
                "diff": world_diff(session.baseline_world, side.world),
            }

    @app.get("/sessions/{session_id}/history", dependencies=[Depends(auth)])
    def get_history(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {"history": list(session.committed.ops)}

    @app.post("/sessions/{session_id}/sandbox/commit", dependencies=[Depends(auth)])
    def commit_sandbox(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if session.sandbox is None:
                raise HTTPException(409, "no sandbox to commit")
            if session.pending is not None and session.pending_sandbox:
                raise HTTPException(409, "a stepwise run is in progress")
            sandbox = session.sandbox
            session.committed.world = sandbox.world
            session.committed.ops.extend(sandbox.ops)
            session.committed.trace.extend(sandbox.trace)
            session.committed.last_result = sandbox.last_result
            session.committed.last_kpis = sandbox.last_kpis
            session.sandbox = None
            return {"committed_ops": len(sandbox.ops)}

    @app.delete("/sessions/{session_id}/sandbox", dependencies=[Depends(auth)])
    def discard_sandbox(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if session.pending is not None and session.pending_sandbox:
                session.pending = None
                session.pending_op = None
            had = session.sandbox is not None
            session.sandbox = None
            return {"discarded": had}

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
