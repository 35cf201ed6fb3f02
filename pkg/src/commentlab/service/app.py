"""HTTP facade over the core workbench operations.

Every state-changing endpoint maps 1:1 onto a core operation and adds no
business logic of its own; mutating endpoints accept a client-supplied
request_id and replay the stored response on retry. Long experiment runs
execute in a background thread and are polled via GET /experiments/{id}.
"""

from __future__ import annotations

import os
import secrets
import threading
import time
from dataclasses import dataclass
from typing import Optional

import uvicorn
from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse

from .. import annotation as ann
from ..cycle import CycleEngine, PROCEED, RETURN_TO_MODEL
from ..errors import (
    CommentLabError,
    DegenerateAgreement,
    FoldTooSmall,
    IllegalTransition,
    IncompleteRound,
    MissingCell,
    NoComments,
    NotADisagreement,
    RoundClosed,
    StaleGuidelinesVersion,
    StoreCorrupt,
    UnknownRound,
)
from ..evaluation import EvaluationReport, render_tables, report_to_csv
from ..experiments import ExperimentConfig, run_grid
from ..store import ProjectStore
from . import schemas

_CONFLICT_ERRORS = (
    IncompleteRound,
    RoundClosed,
    NotADisagreement,
    StaleGuidelinesVersion,
    IllegalTransition,
    DegenerateAgreement,
    NoComments,
    FoldTooSmall,
    MissingCell,
)


class AuthError(CommentLabError):
    code = "unauthorized"


class ForbiddenError(CommentLabError):
    code = "forbidden"


def _status_for(exc: CommentLabError) -> int:
    if isinstance(exc, AuthError):
        return 401
    if isinstance(exc, ForbiddenError):
        return 403
    if isinstance(exc, StoreCorrupt):
        return 500
    if exc.code.startswith("unknown_"):
        return 404
    if isinstance(exc, _CONFLICT_ERRORS):
        return 409
    return 400


@dataclass
class SessionToken:
    token: str
    annotator_id: str
    project_id: str
    expiry: float  # epoch seconds

    def expired(self, now: Optional[float] = None) -> bool:
        return (now if now is not None else time.time()) >= self.expiry


class ExperimentHandle:
    def __init__(self, experiment_id: str):
        self.experiment_id = experiment_id
        self.status = "running"
        self.error: Optional[str] = None
        self.report: Optional[EvaluationReport] = None


class ServiceState:
    """Mutable service-wide state behind the route handlers."""

    def __init__(self, store: ProjectStore, auth_token: Optional[str] = None):
        self.store = store
        self.auth_token = auth_token
        self.engines: dict[str, CycleEngine] = {}
        self.experiments: dict[str, ExperimentHandle] = {}
        self.sessions: dict[str, SessionToken] = {}
        self.replays: dict[tuple[str, str], dict] = {}
        self.lock = threading.RLock()

    def engine(self, project_id: str) -> CycleEngine:
        self.store.get_project(project_id)
        with self.lock:
            if project_id not in self.engines:
                history = None
                if self.store.directory:
                    history = os.path.join(self.store.directory, "cycle_%s.jsonl" % project_id)
                self.engines[project_id] = CycleEngine(project_id, history_path=history)
            return self.engines[project_id]

    def find_round(self, round_id: str):
        for project in self.store.list_projects():
            if round_id in project.rounds:
                return project, project.rounds[round_id]
        raise UnknownRound("no round %r" % round_id)

    def replay_or_run(self, path: str, request_id: Optional[str], fn):
        """Idempotent mutation: the first call's response is stored under the
        client-supplied id and replayed verbatim on retries."""
        if not request_id:
            return fn()
        key = (path, request_id)
        with self.lock:
            if key in self.replays:
                return self.replays[key]
        result = fn()
        payload = result.model_dump() if hasattr(result, "model_dump") else result
        with self.lock:
            self.replays.setdefault(key, payload)
            return self.replays[key]


def create_app(
    store: ProjectStore,
    auth_token: Optional[str] = None,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    state = ServiceState(store, auth_token)
    app = FastAPI(title="commentlab", version="0.1.0")
    app.state.service = state

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(CommentLabError)
    async def domain_error_handler(request: Request, exc: CommentLabError):
        body = schemas.ErrorBody(code=exc.code, message=str(exc), details=exc.details or {})
        return JSONResponse(status_code=_status_for(exc), content=body.model_dump())

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        body = schemas.ErrorBody(code="invalid_value", message=str(exc))
        return JSONResponse(status_code=400, content=body.model_dump())

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError):
        body = schemas.ErrorBody(
            code="validation_error",
            message="request body or parameters failed validation",
            details={"errors": exc.errors()},
        )
        return JSONResponse(status_code=422, content=body.model_dump())

    def require_auth(x_auth_token: Optional[str] = Header(default=None)):
        if state.auth_token and x_auth_token != state.auth_token:
            raise AuthError("missing or wrong auth token")

    auth = [Depends(require_auth)]

    # -- projects and corpus --

    @app.post("/projects", response_model=schemas.ProjectResponse, dependencies=auth)
    def create_project(body: schemas.ProjectCreateRequest):
        def run():
            project = store.create_project(body.name)
            return schemas.ProjectResponse(project_id=project.project_id, name=project.name)

        return state.replay_or_run("/projects", body.request_id, run)

    @app.get("/projects", response_model=list[schemas.ProjectResponse], dependencies=auth)
    def list_projects():
        return [
            schemas.ProjectResponse(
                project_id=p.project_id,
                name=p.name,
                n_articles=len(p.articles),
                n_comments=len(p.comments),
            )
            for p in store.list_projects()
        ]

    @app.post("/projects/{project_id}/ingest", response_model=schemas.IngestResponse, dependencies=auth)
    def ingest(project_id: str, body: schemas.IngestRequest):
        def run():
            report = store.import_corpus(project_id, [r.model_dump() for r in body.records])
            return schemas.IngestResponse(**report.as_dict())

        return state.replay_or_run("/projects/%s/ingest" % project_id, body.request_id, run)

    # -- annotation rounds --

    def round_view(project, rnd) -> schemas.RoundResponse:
        kappa = None
        if rnd.is_complete():
            try:
                kappa = ann.compute_kappa(rnd).kappa
            except DegenerateAgreement:
                kappa = None
        return schemas.RoundResponse(
            round_id=rnd.round_id,
            project_id=project.project_id,
            n_comments=len(rnd.comment_ids),
            annotators=list(rnd.annotators),
            context_policy=rnd.guidelines.context_policy,
            guidelines_version=rnd.guidelines.version,
            guidelines_text=rnd.guidelines.text,
            closed=rnd.closed,
            progress=rnd.progress(),
            kappa=kappa,
        )

    @app.post("/projects/{project_id}/rounds", response_model=schemas.RoundResponse, dependencies=auth)
    def create_round(project_id: str, body: schemas.RoundCreateRequest):
        def run():
            project = store.get_project(project_id)
            with store.lock(project_id):
                comment_ids = body.comment_ids
                if comment_ids is None and (body.topic or body.source):
                    comment_ids = [
                        c.comment_id
                        for c in store.select_comments(project_id, body.topic, body.source)
                    ]
                rnd = ann.open_round(
                    project,
                    ann.Guidelines(
                        version=body.guidelines.version,
                        text=body.guidelines.text,
                        context_policy=body.guidelines.context_policy,
                    ),
                    comment_ids=comment_ids,
                    annotators=tuple(body.annotators),
                )
                store.save(project_id)
            return round_view(project, rnd)

        return state.replay_or_run("/projects/%s/rounds" % project_id, body.request_id, run)

    @app.get("/projects/{project_id}/rounds", response_model=list[schemas.RoundResponse], dependencies=auth)
    def list_rounds(project_id: str):
        project = store.get_project(project_id)
        return [round_view(project, rnd) for rnd in project.rounds.values()]

    @app.get("/rounds/{round_id}", response_model=schemas.RoundResponse, dependencies=auth)
    def get_round(round_id: str):
        project, rnd = state.find_round(round_id)
        return round_view(project, rnd)

    @app.get(
        "/rounds/{round_id}/next",
        response_model=schemas.NextCommentResponse,
        response_model_exclude_none=True,
        dependencies=auth,
    )
    def next_comment(round_id: str, annotator: str = Query(...)):
        project, rnd = state.find_round(round_id)
        pending = rnd.pending(annotator)
        if not pending:
            return schemas.NextCommentResponse(done=True, remaining=0)
        comment = project.comments[pending[0]]
        payload = schemas.NextCommentResponse(
            comment_id=comment.comment_id,
            text=comment.raw_text,
            remaining=len(pending),
        )
        # with_article rounds carry the source article; comment_only rounds
        # must not leak it on the wire at all
        if rnd.guidelines.context_policy == ann.CONTEXT_WITH_ARTICLE:
            article = project.articles[comment.article_id]
            payload.article = schemas.ArticleContext(
                article_id=article.article_id,
                source=article.source,
                topic=article.topic,
                title=article.title,
                url=article.url,
            )
        return payload

    @app.post("/rounds/{round_id}/annotations", response_model=schemas.AnnotationResponse, dependencies=auth)
    def post_annotation(
        round_id: str,
        body: schemas.AnnotationRequest,
        x_session_token: Optional[str] = Header(default=None),
    ):
        project, rnd = state.find_round(round_id)
        if x_session_token is not None:
            session = state.sessions.get(x_session_token)
            if session is None or session.expired():
                raise AuthError("session token invalid or expired")
            if session.annotator_id != body.annotator_id:
                raise ForbiddenError(
                    "session belongs to %r, not %r" % (session.annotator_id, body.annotator_id)
                )

        def run():
            with store.lock(project.project_id):
                ann.record_annotation(rnd, body.annotator_id, body.comment_id, body.label)
                store.save(project.project_id)
                return schemas.AnnotationResponse(
                    round_id=round_id,
                    annotator_id=body.annotator_id,
                    comment_id=body.comment_id,
                    label=body.label,
                    pending=len(rnd.pending(body.annotator_id)),
                )

        return state.replay_or_run("/rounds/%s/annotations" % round_id, body.request_id, run)

    @app.get("/rounds/{round_id}/iaa", response_model=schemas.IaaResponse, dependencies=auth)
    def get_iaa(round_id: str):
        _, rnd = state.find_round(round_id)
        result = ann.compute_kappa(rnd)
        return schemas.IaaResponse(
            kappa=result.kappa,
            pr_a=result.pr_a,
            pr_e=result.pr_e,
            n_items=result.n_items,
            labels=list(result.labels),
            contingency=result.contingency,
        )

    @app.get("/rounds/{round_id}/disagreements", response_model=list[schemas.DisagreementItem], dependencies=auth)
    def get_disagreements(round_id: str):
        project, rnd = state.find_round(round_id)
        return [
            schemas.DisagreementItem(
                comment_id=cid,
                text=project.comments[cid].raw_text,
                label_a1=la,
                label_a2=lb,
            )
            for cid, la, lb in ann.list_disagreements(rnd)
        ]

    @app.post("/rounds/{round_id}/adjudications", response_model=schemas.AdjudicationResponse, dependencies=auth)
    def post_adjudication(round_id: str, body: schemas.AdjudicationRequest):
        project, rnd = state.find_round(round_id)

        def run():
            with store.lock(project.project_id):
                gold = ann.adjudicate(rnd, body.comment_id, body.decision)
                store.save(project.project_id)
                return schemas.AdjudicationResponse(comment_id=body.comment_id, gold_label=gold)

        return state.replay_or_run("/rounds/%s/adjudications" % round_id, body.request_id, run)

    @app.post("/rounds/{round_id}/gold", response_model=schemas.GoldResponse, dependencies=auth)
    def post_gold(round_id: str, body: schemas.GoldRequest):
        project, rnd = state.find_round(round_id)

        def run():
            with store.lock(project.project_id):
                gold = ann.build_gold_standard(rnd, body.seed)
                store.save(project.project_id)
            counts = gold.counts()
            return schemas.GoldResponse(
                round_id=round_id,
                seed=body.seed,
                n_positive=counts[ann.POSITIVE],
                n_negative=counts[ann.NEGATIVE],
                items=[
                    schemas.GoldItem(
                        comment_id=cid,
                        text=project.comments[cid].raw_text,
                        label=label,
                    )
                    for cid, label in gold.items
                ],
            )

        return state.replay_or_run("/rounds/%s/gold" % round_id, body.request_id, run)

    # -- experiments --

    def _run_experiment(handle: ExperimentHandle, documents, labels, config: ExperimentConfig):
        try:
            handle.report = run_grid(documents, labels, config)
            handle.status = "done"
        except Exception as exc:  # surfaced via the polling endpoint
            handle.status = "failed"
            handle.error = str(exc)

    @app.post("/projects/{project_id}/experiments", response_model=schemas.ExperimentStatus, dependencies=auth)
    def start_experiment(project_id: str, body: schemas.ExperimentRequest):
        def run():
            project = store.get_project(project_id)
            if body.round_id not in project.rounds:
                raise UnknownRound("no round %r in project %s" % (body.round_id, project_id))
            rnd = project.rounds[body.round_id]
            if rnd.gold is None:
                raise IncompleteRound("round %s has no gold standard yet" % body.round_id)
            config = ExperimentConfig(
                stem=body.stem,
                schemes=tuple(body.schemes),
                ngrams=tuple(body.ngrams),
                classifiers=tuple(body.classifiers),
                k_folds=body.k_folds,
                seed=body.seed,
                nb_alpha=body.nb_alpha,
                svm_cost=body.svm_cost,
                svm_tolerance=body.svm_tolerance,
                svm_max_iters=body.svm_max_iters,
                knn_k=body.knn_k,
            )
            config.validate()
            documents = [project.comments[cid].raw_text for cid, _ in rnd.gold.items]
            labels = [label for _, label in rnd.gold.items]
            with state.lock:
                experiment_id = "e%d" % (len(state.experiments) + 1)
                handle = ExperimentHandle(experiment_id)
                state.experiments[experiment_id] = handle
            thread = threading.Thread(
                target=_run_experiment, args=(handle, documents, labels, config), daemon=True
            )
            thread.start()
            return schemas.ExperimentStatus(experiment_id=experiment_id, status=handle.status)

        return state.replay_or_run("/projects/%s/experiments" % project_id, body.request_id, run)

    def _handle(experiment_id: str) -> ExperimentHandle:
        handle = state.experiments.get(experiment_id)
        if handle is None:
            raise CommentLabError("no experiment %r" % experiment_id)
        return handle

    @app.get("/experiments/{experiment_id}", response_model=schemas.ExperimentResult, dependencies=auth)
    def get_experiment(experiment_id: str):
        handle = _handle(experiment_id)
        cells = []
        if handle.report is not None:
            for key, bundle in sorted(
                handle.report.rows.items(), key=lambda kv: (kv[0][3], kv[0][0], kv[0][1], kv[0][2])
            ):
                stem, scheme, ngram, classifier = key
                confusion = handle.report.confusions.get(key)
                cells.append(
                    schemas.MetricCell(
                        stem="yes" if stem else "no",
                        scheme=scheme,
                        ngram=ngram,
                        classifier=classifier,
                        **bundle.as_dict(),
                        tp=confusion.tp if confusion else None,
                        fp=confusion.fp if confusion else None,
                        fn=confusion.fn if confusion else None,
                        tn=confusion.tn if confusion else None,
                    )
                )
        return schemas.ExperimentResult(
            experiment_id=experiment_id, status=handle.status, error=handle.error, cells=cells
        )

    @app.get("/experiments/{experiment_id}/report", dependencies=auth)
    def get_experiment_report(experiment_id: str, format: str = Query("csv", pattern="^(csv|table)$")):
        handle = _handle(experiment_id)
        if handle.status == "running":
            raise IncompleteRound("experiment %s is still running" % experiment_id)
        if handle.status == "failed":
            raise CommentLabError("experiment %s failed: %s" % (experiment_id, handle.error))
        if format == "csv":
            return PlainTextResponse(report_to_csv(handle.report), media_type="text/csv; charset=utf-8")
        return PlainTextResponse(render_tables(handle.report), media_type="text/plain; charset=utf-8")

    # -- cycle --

    @app.get("/projects/{project_id}/cycle", response_model=schemas.CycleStateResponse, dependencies=auth)
    def get_cycle(project_id: str):
        engine = state.engine(project_id)
        history = engine.kappa_history()
        verdicts = []
        previous = None
        for kappa in history:
            verdicts.append(PROCEED if previous is None or kappa > previous else RETURN_TO_MODEL)
            previous = kappa
        return schemas.CycleStateResponse(
            project_id=project_id,
            phase=engine.state.phase,
            round_number=engine.state.round_number,
            current_iaa=engine.state.current_iaa,
            previous_iaa=engine.state.previous_iaa,
            kappa_history=history,
            gate_verdicts=verdicts,
        )

    @app.post("/projects/{project_id}/cycle/events", response_model=schemas.CycleStateResponse, dependencies=auth)
    def post_cycle_event(project_id: str, body: schemas.CycleEventRequest):
        def run():
            engine = state.engine(project_id)
            engine.apply(body.event, payload_ref=body.payload_ref, iaa=body.iaa)
            return get_cycle(project_id)

        return state.replay_or_run("/projects/%s/cycle/events" % project_id, body.request_id, run)

    # -- sessions (lab-grade: opaque bearer token per annotator) --

    @app.post("/sessions", dependencies=auth)
    def create_session(body: schemas.SessionRequest):
        store.get_project(body.project_id)
        token = secrets.token_urlsafe(16)
        state.sessions[token] = SessionToken(
            token=token,
            annotator_id=body.annotator_id,
            project_id=body.project_id,
            expiry=time.time() + body.ttl_seconds,
        )
        return {"token": token, "annotator_id": body.annotator_id, "project_id": body.project_id}

    return app


def serve(
    store_dir: Optional[str],
    host: str = "127.0.0.1",
    port: int = 8000,
    auth_token: Optional[str] = None,
    ui_dir: Optional[str] = None,
):
    """Run the service with a persistent (or in-memory) store."""
    import socket

    from ..errors import BindFailure

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise BindFailure("cannot bind %s:%d: %s" % (host, port, exc)) from exc
    finally:
        probe.close()
    app = create_app(ProjectStore(store_dir), auth_token=auth_token, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
