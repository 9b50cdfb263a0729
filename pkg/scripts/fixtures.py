"""Export API payload fixtures for the console's test suite.

Run ``python3 scripts/fixtures.py`` after changing the service so the
frontend tests keep exercising real wire formats; a service test compares
these files against live payloads.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi.testclient import TestClient

from resched.scenario import fig2_scenario
from resched.service import create_app

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures"

DELAY = {
    "kind": "raw_material_delay",
    "target": "RM1",
    "start_day": 2,
    "duration_days": 4,
}


def _dump(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def build_fixture_payloads() -> dict[str, str]:
    client = TestClient(create_app())
    scenario = json.loads(fig2_scenario().to_json())

    sid = client.post("/sessions", json=scenario).json()["session_id"]
    world_before = client.get(f"/sessions/{sid}/world").json()
    run = client.post(f"/sessions/{sid}/disruptions", json=DELAY).json()
    world_after = client.get(f"/sessions/{sid}/world").json()
    kpis = client.get(f"/sessions/{sid}/kpis").json()
    diff = client.get(f"/sessions/{sid}/diff").json()

    step_sid = client.post("/sessions", json=scenario).json()["session_id"]
    client.post(
        f"/sessions/{step_sid}/disruptions",
        params={"stepwise": True},
        json=DELAY,
    )
    step = client.post(f"/sessions/{step_sid}/step").json()

    return {
        "scenario.json": _dump(scenario),
        "world_before.json": _dump(world_before),
        "world_after.json": _dump(world_after),
        "run.json": _dump(run),
        "kpis.json": _dump(kpis),
        "diff.json": _dump(diff),
        "step.json": _dump(step),
    }


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    for name, text in build_fixture_payloads().items():
        (FIXTURE_DIR / name).write_text(text)
        print(f"wrote {FIXTURE_DIR / name}")


if __name__ == "__main__":
    main()
