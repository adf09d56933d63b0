"""Session recording and replay.

A session is a line-delimited JSON log: one self-describing record per line,
header first, every later record carrying a monotone logical tick. Floats
serialise with shortest-round-trip repr, so identical runs produce identical
bytes and recorded EM samples can be compared bitwise on replay.
"""

from __future__ import annotations

import json

from icectl.gateway.configio import plant_from_dict, plant_to_dict
from icectl.kinematics import Config
from icectl.plant import EMSample, PlantModel

_SESSION_VERSION = 1


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class SessionWriter:
    """Append-only event log with monotone ticks."""

    def __init__(self, session_id: str, plant: PlantModel):
        self.session_id = session_id
        self.records = [
            {
                "kind": "header",
                "v": _SESSION_VERSION,
                "session_id": session_id,
                "plant": plant_to_dict(plant),
            }
        ]
        self._last_tick = -1

    def _append(self, record: dict):
        tick = record["tick"]
        if tick < self._last_tick:
            raise ValueError("event ticks must be monotone")
        self._last_tick = tick
        self.records.append(record)

    def command(self, tick: int, q: Config, source: str):
        self._append(
            {"kind": "command", "tick": tick, "config": list(q.as_array()), "source": source}
        )

    def sample(self, tick: int, s: EMSample):
        self._append(
            {
                "kind": "sample",
                "tick": tick,
                "config": list(s.config.as_array()),
                "position": [float(x) for x in s.measured_pose.position],
                "rotation": [[float(x) for x in row] for row in s.measured_pose.rotation],
                "timestamp": s.timestamp,
            }
        )

    def save_view(self, tick: int, view_id: str, label: str, q: Config):
        self._append(
            {
                "kind": "save_view",
                "tick": tick,
                "view_id": view_id,
                "label": label,
                "config": list(q.as_array()),
            }
        )

    def recover_request(self, tick: int, view_id: str, waypoints: int, cost: float):
        self._append(
            {
                "kind": "recover_request",
                "tick": tick,
                "view_id": view_id,
                "waypoints": waypoints,
                "cost": cost,
            }
        )

    def recover_done(self, tick: int, view_id: str, emitted: int, aborted: bool):
        self._append(
            {
                "kind": "recover_done",
                "tick": tick,
                "view_id": view_id,
                "emitted": emitted,
                "aborted": aborted,
            }
        )

    def set_compensation(self, tick: int, enabled: bool):
        self._append({"kind": "set_compensation", "tick": tick, "enabled": enabled})

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for r in self.records:
                f.write(_dump(r) + "\n")


def read_session(path) -> list:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    if not records or records[0].get("kind") != "header":
        raise ValueError("session file has no header record")
    if records[0].get("v") != _SESSION_VERSION:
        raise ValueError(f"unsupported session version {records[0].get('v')}")
    return records


def plant_of_session(records: list) -> PlantModel:
    return plant_from_dict(records[0]["plant"])


def sample_lines(records: list) -> list:
    """Canonical serialisation of the sample events (for bitwise comparison)."""
    return [_dump(r) for r in records if r.get("kind") == "sample"]
