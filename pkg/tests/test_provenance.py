import json

import numpy as np
import pytest

from conftest import make_table
from mvforge.chartspec import ChartType, assign_encodings
from mvforge.errors import ConsentDenied, PositionError, SessionClosed, UnknownVersion
from mvforge.featurize import TableFeatures
from mvforge.mvrank import MVState
from mvforge.provenance import (
    EVENT_KINDS,
    MUTATING_KINDS,
    AuthoringSession,
    ProvenanceLog,
    replay,
)


@pytest.fixture
def features():
    rng = np.random.default_rng(0)
    table = make_table(
        "t", {f"c{i}": [str(x) for x in rng.integers(0, 99, size=8)] for i in range(5)}
    )
    return TableFeatures.from_table(table)


def chart(features, cols, chart_type=ChartType.BAR):
    return assign_encodings(features, cols, chart_type)


def test_record_sequences_and_snapshots(features):
    session = AuthoringSession("s1", features)
    session.record("upload_table", {"table_id": features.table_id, "name": "t"})
    session.record("add_chart", {"chart": chart(features, {0}).to_json()})
    session.record("remove_chart", {"position": 0})
    assert [e.seq for e in session.events] == [1, 2, 3]
    assert session.events[0].mv_snapshot is None  # upload does not mutate the dashboard
    assert len(session.events[1].mv_snapshot["charts"]) == 1
    assert len(session.events[2].mv_snapshot["charts"]) == 0
    assert len(session.mv.charts) == 0


def test_non_mutating_event_keeps_snapshot_identity(features):
    session = AuthoringSession("s1", features)
    session.record("add_chart", {"chart": chart(features, {0}).to_json()})
    before = session.mv.identity()
    event = session.record("cross_filter", {"column": 0, "range": [1, 5]})
    assert event.mv_snapshot is None
    assert session.mv.identity() == before


def test_restore_appends_event(features):
    session = AuthoringSession("s1", features)
    for i in range(5):
        session.record("add_chart", {"chart": chart(features, {i}).to_json()})
    n_events = len(session.events)
    restored = session.restore(1)
    assert len(restored.charts) == 1
    assert len(session.events) == n_events + 1
    assert session.events[-1].kind == "restore_version"
    # restoring the current head also records an event
    head_seq = session.events[-1].seq
    session.restore(head_seq)
    assert len(session.events) == n_events + 2


def test_restore_unknown_version(features):
    session = AuthoringSession("s1", features)
    session.record("add_chart", {"chart": chart(features, {0}).to_json()})
    with pytest.raises(UnknownVersion):
        session.restore(999)


def test_closed_session_rejects_recording(features):
    session = AuthoringSession("s1", features)
    session.closed = True
    with pytest.raises(SessionClosed):
        session.record("add_chart", {"chart": chart(features, {0}).to_json()})


def test_lock_unlock_and_edit_events(features):
    session = AuthoringSession("s1", features)
    session.record("add_chart", {"chart": chart(features, {0, 1}).to_json()})
    session.record("lock_chart", {"position": 0})
    assert session.mv.locked == {0}
    session.record("unlock_chart", {"position": 0})
    assert session.mv.locked == frozenset()
    session.record("change_type", {"position": 0,
                                   "chart": chart(features, {0, 1}, ChartType.LINE).to_json()})
    assert session.mv.charts[0].chart_type is ChartType.LINE
    session.record("move_chart", {"position": 0, "x": 5, "y": 2})
    assert session.mv.layout[0]["x"] == 5
    session.record("resize_chart", {"position": 0, "w": 6, "h": 3})
    assert session.mv.layout[0]["w"] == 6
    with pytest.raises(PositionError):
        session.record("remove_chart", {"position": 7})


def test_remove_shifts_lock_positions(features):
    session = AuthoringSession("s1", features)
    session.record("add_chart", {"chart": chart(features, {0}).to_json()})
    session.record("add_chart", {"chart": chart(features, {1}).to_json(), "locked": True})
    assert session.mv.locked == {1}
    session.record("remove_chart", {"position": 0})
    assert session.mv.locked == {0}


def test_consent_gates_export_and_flush(features, tmp_path):
    session = AuthoringSession("s1", features, consent=False)
    session.record("add_chart", {"chart": chart(features, {0}).to_json()})
    assert session.save(consent=False, directory=tmp_path) is None
    assert list(tmp_path.iterdir()) == []
    with pytest.raises(ConsentDenied):
        session.export_log()

    consenting = AuthoringSession("s2", features, consent=True)
    consenting.record("add_chart", {"chart": chart(features, {0}).to_json()})
    path = consenting.save(consent=True, directory=tmp_path)
    assert path is not None and path.exists()
    assert path.name == "s2.mvlog.jsonl"


def test_export_requires_save(features):
    session = AuthoringSession("s1", features, consent=True)
    session.record("add_chart", {"chart": chart(features, {0}).to_json()})
    with pytest.raises(SessionClosed):
        session.export_log()


def test_export_round_trip(features, tmp_path):
    session = AuthoringSession("s1", features, consent=True)
    session.record("upload_table", {"table_id": features.table_id, "name": "t"})
    session.record("add_chart", {"chart": chart(features, {0, 1}).to_json()})
    session.save(consent=True, directory=tmp_path)
    text = (tmp_path / "s1.mvlog.jsonl").read_text(encoding="utf-8")
    log = ProvenanceLog.from_jsonl(text)
    assert log.session_id == "s1"
    assert log.consent is True
    assert len(log.events) == len(session.events)
    assert log.to_jsonl() == text
    back = log.table_features()
    assert back.table_id == features.table_id
    header = json.loads(text.splitlines()[0])
    assert set(header) == {"session_id", "consent", "table", "features"}


def random_session(features, rng, n_events):
    """Random but valid event stream, exercising every mutating kind."""
    session = AuthoringSession(f"fuzz-{rng.integers(10**9)}", features)
    session.record("upload_table", {"table_id": features.table_id, "name": "t"})
    while len(session.events) < n_events:
        mv = session.mv
        n = len(mv.charts)
        options = ["add"]
        if n > 0:
            options += ["remove", "edit", "retype", "move", "resize", "lock", "unlock",
                        "cross", "recommend"]
        if session._snapshots:
            options.append("restore")
        if n >= 12:
            options = [o for o in options if o != "add"]
        action = options[int(rng.integers(len(options)))]
        k = int(rng.integers(1, 5))
        cols = tuple(sorted(rng.choice(features.n_columns, size=min(k, features.n_columns),
                                       replace=False).tolist()))
        ctype = list(ChartType)[int(rng.integers(5))]
        if action == "add":
            session.record("add_chart", {"chart": chart(features, cols, ctype).to_json(),
                                         "locked": bool(rng.integers(2))})
        elif action == "remove":
            session.record("remove_chart", {"position": int(rng.integers(n))})
        elif action == "edit":
            pos = int(rng.integers(n))
            session.record("edit_encoding",
                           {"position": pos, "chart": chart(features, cols, ctype).to_json()})
        elif action == "retype":
            pos = int(rng.integers(n))
            old = mv.charts[pos]
            session.record("change_type",
                           {"position": pos,
                            "chart": chart(features, old.column_indices, ctype).to_json()})
        elif action == "move":
            session.record("move_chart", {"position": int(rng.integers(n)),
                                          "x": int(rng.integers(12)), "y": int(rng.integers(24))})
        elif action == "resize":
            session.record("resize_chart", {"position": int(rng.integers(n)),
                                            "w": int(rng.integers(1, 13)),
                                            "h": int(rng.integers(1, 13))})
        elif action == "lock":
            session.record("lock_chart", {"position": int(rng.integers(n))})
        elif action == "unlock":
            session.record("unlock_chart", {"position": int(rng.integers(n))})
        elif action == "cross":
            session.record("cross_filter", {"column": int(rng.integers(features.n_columns))})
        elif action == "recommend":
            size = int(rng.integers(1, 4))
            target = MVState()
            for _ in range(size):
                kk = int(rng.integers(1, 4))
                cc = tuple(sorted(rng.choice(features.n_columns, size=kk,
                                             replace=False).tolist()))
                target = target.append(chart(features, cc, list(ChartType)[int(rng.integers(5))]))
            session.record("recommend_mv_request", {"n_charts": size, "mv": target.to_json()})
        elif action == "restore":
            seqs = sorted(session._snapshots)
            session.record("restore_version",
                           {"target_seq": seqs[int(rng.integers(len(seqs)))]})
    session.saved = True
    return session


def test_replay_reproduces_snapshots_fuzz(features):
    rng = np.random.default_rng(42)
    for trial in range(50):
        session = random_session(features, rng, n_events=int(rng.integers(5, 31)))
        log = session.export_log()
        recomputed = replay(log)
        recorded = {e.seq: e.mv_snapshot for e in log.events if e.mv_snapshot is not None}
        assert set(recomputed) == set(recorded)
        for seq in recorded:
            assert json.dumps(recomputed[seq], sort_keys=True) == json.dumps(
                recorded[seq], sort_keys=True
            ), (trial, seq)


def test_every_kind_classified():
    assert MUTATING_KINDS <= set(EVENT_KINDS)
    assert set(EVENT_KINDS) - MUTATING_KINDS == {"upload_table", "cross_filter", "save_session"}
