"""HTTP API binding ingestion, scoring, recommendation, and provenance.

Sessions are in-memory and isolated by id; every dashboard-mutating request
appends exactly one provenance event (a response header,
``x-events-appended``, exposes the count so the invariant is auditable from
the outside). Models are served from an atomic snapshot holder: training
runs offline behind a per-kind lock and publishes a new bundle in a single
reference swap, so each request sees exactly one model version.
"""

from __future__ import annotations

import itertools
import json
import threading
import time
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse

from . import __version__
from .chartspec import ChartSpec, ChartType, assign_encodings, emit_vegalite, valid_channels
from .config import ServiceConfig
from .errors import (
    CardinalityError,
    ConsentDenied,
    EmptyDataset,
    EmptyInput,
    InfeasibleRequest,
    MalformedCsv,
    MvForgeError,
    PositionError,
    SessionClosed,
    TooManyCharts,
    UnknownVersion,
)
from .featurize import EMBED_DIM, LAYOUT_VERSION, TableFeatures
from .ingest import parse_csv, table_summary
from .mvrank import CHART_EMBED_DIM, MAX_MV_CHARTS, MVState, MvScorer, score_mv, train_mv
from .neural import BiLstmScorer, ModelBundle, load_bundle, save_bundle
from .pairgen import read_chart_pairs, read_mv_pairs
from .provenance import AuthoringSession, _logical_clock
from .ranker import SingleChartScorer, TrainConfig, train_single
from .recommend import chart_ideas, enumerate_candidates, recommend_mv

API_VERSION = 1


def fresh_single_bundle(seed: int = 0) -> ModelBundle:
    net = BiLstmScorer(
        input_dim=EMBED_DIM, hidden_dim=64, head_dims=(32, 1), type_head_dims=(32, 5),
        max_len=4, seed=seed,
    )
    return ModelBundle(
        kind="single_chart",
        layout_version=LAYOUT_VERSION,
        hyper={"input_dim": EMBED_DIM, "hidden_dim": 64, "head_dims": [32, 1],
               "type_head_dims": [32, 5], "max_len": 4},
        params=net.params,
        meta={"seed": seed, "trained": False},
    )


def fresh_mv_bundle(seed: int = 0) -> ModelBundle:
    net = BiLstmScorer(
        input_dim=CHART_EMBED_DIM, hidden_dim=64, head_dims=(32, 1), type_head_dims=None,
        max_len=MAX_MV_CHARTS, seed=seed,
    )
    return ModelBundle(
        kind="mv",
        layout_version=LAYOUT_VERSION,
        hyper={"input_dim": CHART_EMBED_DIM, "hidden_dim": 64, "head_dims": [32, 1],
               "type_head_dims": None, "max_len": MAX_MV_CHARTS},
        params=net.params,
        meta={"seed": seed, "trained": False},
    )


class ModelStore:
    """Atomic holder for the serving model snapshots, one slot per kind."""

    def __init__(self, single: ModelBundle, mv: ModelBundle):
        self._single = SingleChartScorer(single)
        self._mv = MvScorer(mv)
        self.train_locks = {"single": threading.Lock(), "mv": threading.Lock()}

    @property
    def single(self) -> SingleChartScorer:
        return self._single

    @property
    def mv(self) -> MvScorer:
        return self._mv

    def swap(self, kind: str, bundle: ModelBundle):
        if kind == "single":
            self._single = SingleChartScorer(bundle)
        elif kind == "mv":
            self._mv = MvScorer(bundle)
        else:
            raise ValueError(f"unknown model kind {kind!r}")


class ServiceSession:
    def __init__(self, session_id, table, features, clock):
        self.session_id = session_id
        self.table = table
        self.features = features
        self.authoring = AuthoringSession(session_id, features, consent=True, clock=clock)
        self.lock = threading.Lock()

    @property
    def mv(self) -> MVState:
        return self.authoring.mv


def _chart_payload(spec: ChartSpec, features: TableFeatures, layout=None, locked=False,
                   position=None) -> dict:
    doc = spec.to_json()
    doc["vegalite"] = json.loads(emit_vegalite(spec, features))
    doc["valid_channels"] = list(valid_channels(spec.chart_type))
    if layout is not None:
        doc["layout"] = dict(layout)
    doc["locked"] = bool(locked)
    if position is not None:
        doc["position"] = position
    return doc


def _mv_payload(mv: MVState, features: TableFeatures) -> dict:
    return {
        "charts": [
            _chart_payload(spec, features, layout=mv.layout[i], locked=i in mv.locked, position=i)
            for i, spec in enumerate(mv.charts)
        ],
        "locked": [i in mv.locked for i in range(len(mv.charts))],
        "size": len(mv.charts),
    }


def create_app(config: ServiceConfig = None) -> FastAPI:
    config = config or ServiceConfig()
    data_dir = Path(config.data_dir)

    single = (
        load_bundle(Path(config.model_single).read_bytes(), expected_layout=LAYOUT_VERSION)
        if config.model_single
        else fresh_single_bundle(config.seed)
    )
    mv_bundle = (
        load_bundle(Path(config.model_mv).read_bytes(), expected_layout=LAYOUT_VERSION)
        if config.model_mv
        else fresh_mv_bundle(config.seed)
    )

    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app_: FastAPI):
        yield
        # flush consenting open sessions on shutdown (SIGTERM included)
        data_dir.mkdir(parents=True, exist_ok=True)
        for session in app_.state.sessions.values():
            if session.authoring.consent and not session.authoring.closed:
                try:
                    session.authoring.save(directory=data_dir)
                except MvForgeError:
                    continue

    app = FastAPI(title="mvforge", version=__version__, lifespan=lifespan)
    from fastapi.middleware.cors import CORSMiddleware

    # the authoring UI is served as static files, usually from another origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.config = config
    app.state.models = ModelStore(single, mv_bundle)
    app.state.sessions = {}
    app.state.session_counter = itertools.count(1)

    def new_clock():
        if config.deterministic:
            return _logical_clock()
        return iter(lambda: int(time.time() * 1000), None)

    def new_session_id() -> str:
        if config.deterministic:
            return f"s{next(app.state.session_counter):04d}"
        return uuid.uuid4().hex[:12]

    def get_session(session_id: str) -> ServiceSession:
        session = app.state.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    def check_token(request: Request):
        if config.api_token and request.headers.get("x-api-token") != config.api_token:
            raise HTTPException(status_code=401, detail="missing or wrong API token")

    @app.middleware("http")
    async def count_appended_events(request: Request, call_next):
        before = sum(len(s.authoring.events) for s in app.state.sessions.values())
        response = await call_next(request)
        after = sum(len(s.authoring.events) for s in app.state.sessions.values())
        response.headers["x-events-appended"] = str(after - before)
        return response

    @app.exception_handler(MvForgeError)
    async def domain_error(request: Request, exc: MvForgeError):
        if isinstance(exc, (EmptyInput, MalformedCsv)):
            status = 400
        elif isinstance(
            exc,
            (InfeasibleRequest, UnknownVersion, CardinalityError, PositionError,
             TooManyCharts, ConsentDenied, SessionClosed),
        ):
            status = 422
        else:
            status = 500
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc), "api_version": API_VERSION},
        )

    @app.get("/api/health")
    def health():
        return {"status": "ok", "version": __version__, "api_version": API_VERSION}

    @app.post("/api/datasets")
    async def upload_dataset(file: UploadFile, request: Request):
        check_token(request)
        data = await file.read()
        if len(data) > config.upload_limit_bytes:
            raise HTTPException(status_code=413, detail="upload exceeds the size limit")
        table = parse_csv(data, file.filename or "table")
        features = TableFeatures.from_table(table)
        session = ServiceSession(new_session_id(), table, features, new_clock())
        app.state.sessions[session.session_id] = session
        session.authoring.record(
            "upload_table", {"table_id": table.table_id, "name": table.name}
        )
        summary = table_summary(table)
        return {"api_version": API_VERSION, "session_id": session.session_id, **summary}

    @app.get("/api/sessions/{session_id}")
    def session_state(session_id: str):
        session = get_session(session_id)
        return {
            "api_version": API_VERSION,
            "session_id": session_id,
            "table": table_summary(session.table),
            "mv": _mv_payload(session.mv, session.features),
            "history_length": len(session.authoring.history()),
            "consent": session.authoring.consent,
        }

    @app.get("/api/sessions/{session_id}/data")
    def session_data(session_id: str):
        session = get_session(session_id)
        return {
            "api_version": API_VERSION,
            "columns": [c.header for c in session.table.columns],
            "types": [c.inferred_type for c in session.table.columns],
            "rows": [
                [col.values[r] for col in session.table.columns]
                for r in range(session.table.row_count)
            ],
        }

    def _parse_chart_ref(session: ServiceSession, ref: dict, single_scorer) -> ChartSpec:
        columns = ref.get("columns")
        if not columns:
            raise HTTPException(status_code=422, detail="chart ref needs columns")
        for idx in columns:
            if not isinstance(idx, int) or not 0 <= idx < session.features.n_columns:
                raise HTTPException(status_code=422, detail=f"column {idx!r} not in table")
        if "chart_type" in ref and ref["chart_type"]:
            chart_type = ChartType(ref["chart_type"])
        else:
            score = single_scorer.score_chart(session.features, columns)
            chart_type = score.best_type()
        if ref.get("encodings"):
            return ChartSpec.from_json(
                {"columns": columns, "chart_type": chart_type.value,
                 "encodings": ref["encodings"], "transforms": ref.get("transforms", {})}
            )
        return assign_encodings(session.features, columns, chart_type)

    @app.post("/api/sessions/{session_id}/recommend-mv")
    def recommend_endpoint(session_id: str, body: dict):
        session = get_session(session_id)
        n_charts = body.get("n_charts")
        if not isinstance(n_charts, int) or n_charts < 1:
            raise HTTPException(status_code=422, detail="n_charts must be a positive integer")
        # snapshot the serving models once, so a concurrent hot swap can
        # never mix two bundle versions within one request
        single_scorer = app.state.models.single
        mv_scorer = app.state.models.mv
        locked_specs = [_parse_chart_ref(session, ref, single_scorer)
                        for ref in body.get("locked", [])]
        with session.lock:
            mv = recommend_mv(
                session.features,
                n_charts,
                locked_specs,
                single_scorer,
                mv_scorer,
                dedup=bool(body.get("drop_alternative_types", True)),
            )
            session.authoring.record(
                "recommend_mv_request",
                {"n_charts": n_charts, "locked_count": len(locked_specs), "mv": mv.to_json()},
            )
            current = session.mv
        s_data, _ = single_scorer.subset_scores(
            session.features, [c.column_indices for c in current.charts]
        )
        return {
            "api_version": API_VERSION,
            "mv": _mv_payload(current, session.features),
            "scores": {
                "mv_score": score_mv(mv_scorer, current, single_scorer, session.features),
                "per_chart": [float(s) for s in s_data],
            },
        }

    @app.post("/api/sessions/{session_id}/chart-ideas")
    def chart_ideas_endpoint(session_id: str, body: dict = None):
        session = get_session(session_id)
        body = body or {}
        single_scorer = app.state.models.single
        mv_scorer = app.state.models.mv
        limit = body.get("limit", 10)
        if not isinstance(limit, int) or limit < 1:
            raise HTTPException(status_code=422, detail="limit must be a positive integer")
        must_include = body.get("must_include", [])
        ideas = chart_ideas(
            session.features,
            session.mv,
            must_include=must_include,
            dedup=bool(body.get("drop_alternative_types", True)),
            single_scorer=single_scorer,
            mv_scorer=mv_scorer,
            limit=limit,
        )
        return {
            "api_version": API_VERSION,
            "ideas": [
                {**_chart_payload(spec, session.features), "projected_score": float(score)}
                for spec, score in ideas
            ],
        }

    @app.post("/api/sessions/{session_id}/charts", status_code=201)
    def add_chart(session_id: str, body: dict):
        session = get_session(session_id)
        spec = _parse_chart_ref(session, body.get("chart", body), app.state.models.single)
        kind = "chart_ideas_click" if body.get("from_ideas") else "add_chart"
        with session.lock:
            session.authoring.record(
                kind, {"chart": spec.to_json(), "locked": bool(body.get("locked", False))}
            )
            mv = session.mv
        return {
            "api_version": API_VERSION,
            "mv": _mv_payload(mv, session.features),
            "position": len(mv.charts) - 1,
        }

    @app.patch("/api/sessions/{session_id}/charts/{position}")
    def edit_chart(session_id: str, position: int, body: dict):
        session = get_session(session_id)
        with session.lock:
            mv = session.mv
            if not 0 <= position < len(mv.charts):
                raise HTTPException(status_code=404, detail=f"no chart at position {position}")
            current = mv.charts[position]
            if "chart_type" in body:
                new_type = ChartType(body["chart_type"])
                spec = assign_encodings(session.features, current.column_indices, new_type)
                session.authoring.record(
                    "change_type", {"position": position, "chart": spec.to_json()}
                )
            elif "encodings" in body or "transforms" in body:
                encodings = body.get("encodings", dict(current.encodings))
                columns = sorted(
                    {idx for idx in encodings.values() if idx is not None}
                )
                if not columns:
                    raise HTTPException(status_code=422, detail="encodings cover no columns")
                for idx in columns:
                    if not isinstance(idx, int) or not 0 <= idx < session.features.n_columns:
                        raise HTTPException(status_code=422, detail=f"column {idx!r} not in table")
                if len(columns) > 4:
                    raise HTTPException(status_code=422, detail="a chart encodes at most 4 columns")
                allowed = set(valid_channels(current.chart_type))
                if not set(encodings) <= allowed:
                    raise HTTPException(
                        status_code=422,
                        detail=f"invalid channels for {current.chart_type.value}: "
                        f"{sorted(set(encodings) - allowed)}",
                    )
                spec = ChartSpec.from_json(
                    {
                        "columns": columns,
                        "chart_type": current.chart_type.value,
                        "encodings": encodings,
                        "transforms": body.get("transforms", current.to_json()["transforms"]),
                    }
                )
                session.authoring.record(
                    "edit_encoding", {"position": position, "chart": spec.to_json()}
                )
            elif "layout" in body:
                cell = body["layout"]
                kind = "move_chart" if ("x" in cell or "y" in cell) else "resize_chart"
                session.authoring.record("resize_chart" if kind == "resize_chart" else "move_chart",
                                         {"position": position, **cell})
            elif "lock" in body:
                kind = "lock_chart" if body["lock"] else "unlock_chart"
                session.authoring.record(kind, {"position": position})
            else:
                raise HTTPException(status_code=422, detail="nothing to edit")
            mv = session.mv
        return {"api_version": API_VERSION, "mv": _mv_payload(mv, session.features)}

    @app.delete("/api/sessions/{session_id}/charts/{position}")
    def delete_chart(session_id: str, position: int):
        session = get_session(session_id)
        with session.lock:
            if not 0 <= position < len(session.mv.charts):
                raise HTTPException(status_code=404, detail=f"no chart at position {position}")
            session.authoring.record("remove_chart", {"position": position})
            mv = session.mv
        return {"api_version": API_VERSION, "mv": _mv_payload(mv, session.features)}

    @app.post("/api/sessions/{session_id}/cross-filter")
    def cross_filter(session_id: str, body: dict = None):
        session = get_session(session_id)
        session.authoring.record("cross_filter", body or {})
        return {"api_version": API_VERSION, "recorded": True}

    @app.get("/api/sessions/{session_id}/history")
    def history(session_id: str):
        session = get_session(session_id)
        return {
            "api_version": API_VERSION,
            "history": [
                {"seq": seq, "kind": kind, "n_charts": len(snapshot.get("charts", []))}
                for seq, kind, snapshot in session.authoring.history()
            ],
        }

    @app.post("/api/sessions/{session_id}/restore")
    def restore(session_id: str, body: dict):
        session = get_session(session_id)
        seq = body.get("seq")
        if not isinstance(seq, int):
            raise HTTPException(status_code=422, detail="seq must be an integer")
        with session.lock:
            session.authoring.restore(seq)
            mv = session.mv
        return {"api_version": API_VERSION, "mv": _mv_payload(mv, session.features)}

    @app.post("/api/sessions/{session_id}/save")
    def save(session_id: str, body: dict = None):
        session = get_session(session_id)
        body = body or {}
        consent = bool(body.get("consent", session.authoring.consent))
        if consent:
            data_dir.mkdir(parents=True, exist_ok=True)
        with session.lock:
            path = session.authoring.save(consent=consent, directory=data_dir if consent else None)
        return {
            "api_version": API_VERSION,
            "consent": consent,
            "stored": str(path) if path else None,
        }

    @app.post("/api/admin/train")
    def admin_train(body: dict, request: Request):
        check_token(request)
        kind = body.get("kind")
        if kind not in ("single", "mv"):
            raise HTTPException(status_code=400, detail="kind must be 'single' or 'mv'")
        pairs_path = body.get("pairs_path")
        if not pairs_path or not Path(pairs_path).exists():
            raise HTTPException(status_code=400, detail=f"pairs file {pairs_path!r} not found")
        lock = app.state.models.train_locks[kind]
        if not lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail=f"a {kind} training run is in progress")
        try:
            overrides = body.get("config", {})
            config_kwargs = {
                k: tuple(v) if isinstance(v, list) else v for k, v in overrides.items()
            }
            train_config = TrainConfig(**config_kwargs)
            if kind == "single":
                pairs = read_chart_pairs(pairs_path)
                bundle = train_single(pairs, train_config)
            else:
                pairs = read_mv_pairs(pairs_path)
                bundle = train_mv(pairs, train_config)
            data_dir.mkdir(parents=True, exist_ok=True)
            bundle_id = f"{kind}-{uuid.uuid4().hex[:8]}"
            out_path = data_dir / f"{bundle_id}.model.json"
            out_path.write_bytes(save_bundle(bundle))
            app.state.models.swap(kind, bundle)
            return {
                "api_version": API_VERSION,
                "bundle_id": bundle_id,
                "kind": kind,
                "path": str(out_path),
                "pairs": len(pairs),
                "epochs": train_config.epochs,
                "final_loss": bundle.meta.get("final_loss"),
            }
        except (EmptyDataset, EmptyInput, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=f"bad pairs file: {exc}") from exc
        finally:
            lock.release()

    return app
