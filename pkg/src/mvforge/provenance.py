"""Authoring-session provenance: append-only events, snapshots, linear history.

Every dashboard-mutating event carries a self-contained payload plus the
serialized dashboard it produced, and the live session applies mutations
through the same pure transition function the replay test uses, so replaying
a log from an empty dashboard reproduces every snapshot exactly.

History is linear: restoring an old version appends a restore event rather
than rewriting anything. Whether a session's log may be persisted is the
user's call; the consent switch is enforced at the flush boundary (in-memory
recording always works, nothing is written without consent).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConsentDenied, PositionError, SessionClosed, UnknownVersion
from .featurize import TableFeatures
from .mvrank import MVState

EVENT_KINDS = (
    "upload_table",
    "add_chart",
    "remove_chart",
    "edit_encoding",
    "change_type",
    "move_chart",
    "resize_chart",
    "lock_chart",
    "unlock_chart",
    "recommend_mv_request",
    "chart_ideas_click",
    "cross_filter",
    "restore_version",
    "save_session",
)

# Kinds that change the dashboard; each of their events carries a snapshot.
MUTATING_KINDS = frozenset(EVENT_KINDS) - {"upload_table", "cross_filter", "save_session"}

LOG_SUFFIX = ".mvlog.jsonl"


@dataclass(frozen=True)
class ProvenanceEvent:
    seq: int
    timestamp_ms: int
    session_id: str
    kind: str
    payload: dict
    mv_snapshot: dict = None  # serialized MVState, present iff kind is mutating

    def to_json(self) -> dict:
        doc = {
            "seq": self.seq,
            "timestamp_ms": self.timestamp_ms,
            "session_id": self.session_id,
            "kind": self.kind,
            "payload": self.payload,
        }
        if self.mv_snapshot is not None:
            doc["mv_snapshot"] = self.mv_snapshot
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ProvenanceEvent":
        return cls(
            seq=doc["seq"],
            timestamp_ms=doc["timestamp_ms"],
            session_id=doc["session_id"],
            kind=doc["kind"],
            payload=doc.get("payload", {}),
            mv_snapshot=doc.get("mv_snapshot"),
        )


def _replace_chart(mv: MVState, position: int, chart) -> MVState:
    charts = list(mv.charts)
    charts[position] = chart
    return MVState(charts=tuple(charts), locked=mv.locked, layout=mv.layout)


def _check_position(mv: MVState, position) -> int:
    if not isinstance(position, int) or not 0 <= position < len(mv.charts):
        raise PositionError(f"position {position!r} out of range for {len(mv.charts)} charts")
    return position


def apply_event(mv: MVState, kind: str, payload: dict, snapshots: dict) -> MVState:
    """Pure dashboard transition for one mutating event.

    ``snapshots`` maps already-seen seq -> snapshot dict (needed only by
    restore_version). Payloads are self-contained; no table access required.
    """
    from .chartspec import ChartSpec

    if kind in ("add_chart", "chart_ideas_click"):
        chart = ChartSpec.from_json(payload["chart"])
        new = mv.append(chart, locked=bool(payload.get("locked", False)))
        if "layout" in payload:
            cells = list(new.layout)
            cells[-1] = dict(payload["layout"])
            new = MVState(charts=new.charts, locked=new.locked, layout=tuple(cells))
        return new
    if kind == "remove_chart":
        pos = _check_position(mv, payload["position"])
        charts = mv.charts[:pos] + mv.charts[pos + 1 :]
        layout = mv.layout[:pos] + mv.layout[pos + 1 :]
        locked = frozenset(p if p < pos else p - 1 for p in mv.locked if p != pos)
        return MVState(charts=charts, locked=locked, layout=layout)
    if kind in ("edit_encoding", "change_type"):
        pos = _check_position(mv, payload["position"])
        return _replace_chart(mv, pos, ChartSpec.from_json(payload["chart"]))
    if kind in ("move_chart", "resize_chart"):
        pos = _check_position(mv, payload["position"])
        cells = [dict(cell) for cell in mv.layout]
        for key in ("x", "y", "w", "h"):
            if key in payload:
                cells[pos][key] = payload[key]
        return MVState(charts=mv.charts, locked=mv.locked, layout=tuple(cells))
    if kind == "lock_chart":
        pos = _check_position(mv, payload["position"])
        return MVState(charts=mv.charts, locked=mv.locked | {pos}, layout=mv.layout)
    if kind == "unlock_chart":
        pos = _check_position(mv, payload["position"])
        return MVState(charts=mv.charts, locked=mv.locked - {pos}, layout=mv.layout)
    if kind == "recommend_mv_request":
        return MVState.from_json(payload["mv"])
    if kind == "restore_version":
        target = payload["target_seq"]
        if target not in snapshots:
            raise UnknownVersion(f"no snapshot at seq {target}")
        return MVState.from_json(snapshots[target])
    raise ValueError(f"not a mutating event kind: {kind!r}")


class AuthoringSession:
    """One user's live authoring state plus its append-only event log."""

    def __init__(self, session_id: str, features: TableFeatures, consent: bool = True,
                 clock=None):
        self.session_id = session_id
        self.features = features
        self.consent = consent
        self.mv = MVState()
        self.events = []
        self.closed = False
        self.saved = False
        self._snapshots = {}
        self._clock = clock or _logical_clock()

    def record(self, kind: str, payload: dict) -> ProvenanceEvent:
        if self.closed:
            raise SessionClosed(f"session {self.session_id} is closed")
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        seq = len(self.events) + 1
        snapshot = None
        if kind in MUTATING_KINDS:
            self.mv = apply_event(self.mv, kind, payload, self._snapshots)
            snapshot = self.mv.to_json()
            self._snapshots[seq] = snapshot
        event = ProvenanceEvent(
            seq=seq,
            timestamp_ms=next(self._clock),
            session_id=self.session_id,
            kind=kind,
            payload=payload,
            mv_snapshot=snapshot,
        )
        self.events.append(event)
        return event

    def restore(self, seq: int) -> MVState:
        """Replace the current dashboard with the snapshot at ``seq``.

        The restore itself is recorded, so history stays linear and grows."""
        if seq not in self._snapshots:
            raise UnknownVersion(f"no snapshot at seq {seq}")
        self.record("restore_version", {"target_seq": seq})
        return self.mv

    def history(self):
        """(seq, kind, snapshot) for every dashboard-mutating event, in order."""
        return [(e.seq, e.kind, e.mv_snapshot) for e in self.events if e.mv_snapshot is not None]

    def save(self, consent: bool = None, directory=None):
        """Record the save; flush to ``directory`` only when consent holds.

        Returns the written path, or None when nothing was persisted."""
        if consent is not None:
            self.consent = bool(consent)
        self.record("save_session", {"consent": self.consent})
        self.saved = True
        if self.consent and directory is not None:
            path = directory / f"{self.session_id}{LOG_SUFFIX}"
            path.write_text(self.export_log().to_jsonl(), encoding="utf-8")
            return path
        return None

    def export_log(self) -> "ProvenanceLog":
        if not self.consent:
            raise ConsentDenied(f"session {self.session_id} did not consent to log storage")
        if not self.saved:
            raise SessionClosed(f"session {self.session_id} has not been saved")
        return ProvenanceLog(
            session_id=self.session_id,
            consent=self.consent,
            table={"table_id": self.features.table_id, "name": self.features.name},
            features=self.features.to_dump(),
            events=list(self.events),
        )


def _logical_clock(start_ms: int = 0, step_ms: int = 1000):
    t = start_ms
    while True:
        t += step_ms
        yield t


@dataclass
class ProvenanceLog:
    session_id: str
    consent: bool
    table: dict
    features: dict
    events: list = field(default_factory=list)

    def to_jsonl(self) -> str:
        header = {
            "session_id": self.session_id,
            "consent": self.consent,
            "table": self.table,
            "features": self.features,
        }
        lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
        lines.extend(
            json.dumps(e.to_json(), sort_keys=True, separators=(",", ":")) for e in self.events
        )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "ProvenanceLog":
        lines = [line for line in text.splitlines() if line.strip()]
        header = json.loads(lines[0])
        events = [ProvenanceEvent.from_json(json.loads(line)) for line in lines[1:]]
        return cls(
            session_id=header["session_id"],
            consent=header["consent"],
            table=header["table"],
            features=header["features"],
            events=events,
        )

    def table_features(self) -> TableFeatures:
        return TableFeatures.from_dump(self.features)

    def snapshots(self):
        """(seq, MVState) for each mutating event, in order."""
        return [
            (e.seq, MVState.from_json(e.mv_snapshot))
            for e in self.events
            if e.mv_snapshot is not None
        ]


def replay(log: ProvenanceLog):
    """Recompute every snapshot from an empty dashboard; returns {seq: snapshot}."""
    mv = MVState()
    snapshots = {}
    for event in log.events:
        if event.kind in MUTATING_KINDS:
            mv = apply_event(mv, event.kind, event.payload, snapshots)
            snapshots[event.seq] = mv.to_json()
    return snapshots
