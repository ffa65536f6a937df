"""HTTP surface over a Platform: task delivery, response intake, reports.

Worker requests authenticate with a static per-worker token in the
X-Worker-Token header; admin requests use X-Admin-Token. Task payloads
sent to annotators never include gold labels or similarity scores.
A single lock serializes all mutations (single-writer model).
"""

from __future__ import annotations

import threading
from typing import Any

from fastapi import FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from . import reports as rpt
from . import retrieval as ret
from . import service as svc
from .errors import (
    AuthError,
    PrepsenseError,
    StaleAssignmentError,
    ValidationError,
)
from .vectors import argmax_label


def _assignment_view(platform: svc.Platform, assignment: svc.TaskAssignment) -> dict:
    task = platform.tasks[assignment.task_id]
    return {
        "assignment_id": assignment.assignment_id,
        "task_id": assignment.task_id,
        "kind": assignment.kind,
        "issued_at": assignment.issued_at,
        "payload": task.payload,
    }


def create_app(platform: svc.Platform, admin_token: str = "") -> FastAPI:
    app = FastAPI(title="prepsense", docs_url=None, redoc_url=None)
    lock = threading.Lock()

    def authenticate(worker: str, token: str | None) -> None:
        try:
            platform.authenticate(worker, token or "")
        except AuthError as exc:
            raise HTTPException(status_code=401, detail=str(exc)) from None

    def require_admin(token: str | None) -> None:
        if not admin_token or token != admin_token:
            raise HTTPException(status_code=401, detail="bad admin token")

    @app.exception_handler(PrepsenseError)
    async def platform_error(request: Request, exc: PrepsenseError):
        status = 409 if isinstance(exc, StaleAssignmentError) else 422
        return JSONResponse(
            status_code=status, content={"status": "rejected", "reason": str(exc)}
        )

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "events": len(platform.log)}

    @app.get("/tasks/next")
    def next_task(
        worker: str = Query(...),
        kind: str = Query(...),
        x_worker_token: str | None = Header(default=None),
    ) -> dict:
        authenticate(worker, x_worker_token)
        with lock:
            assignment = platform.assign_next_task(worker, kind)
        if assignment is None:
            return {"status": "no_work"}
        return {"status": "assigned", **_assignment_view(platform, assignment)}

    @app.post("/tasks/{task_id}/response")
    def submit(
        task_id: str,
        body: dict,
        x_worker_token: str | None = Header(default=None),
    ) -> dict:
        worker = body.get("worker", "")
        authenticate(worker, x_worker_token)
        response_body = {k: v for k, v in body.items() if k != "worker"}
        with lock:
            platform.submit_response(task_id, worker, response_body)
        return {"status": "accepted"}

    @app.get("/instances/{instance_id}")
    def instance(instance_id: str) -> dict:
        inst = platform.find_instance(instance_id)
        # No gold label here: annotator-facing surface.
        return {
            "instance_id": inst.instance_id,
            "doc_id": inst.doc_id,
            "sent_id": inst.sent_id,
            "tokens": list(inst.tokens),
            "target_index": inst.target_index,
            "lemma": inst.lemma,
        }

    @app.post("/admin/batches")
    def admin_batches(
        body: dict, x_admin_token: str | None = Header(default=None)
    ) -> dict:
        require_admin(x_admin_token)
        kind = body.get("kind")
        with lock:
            if kind == "selection":
                task_ids = platform.create_selection_tasks(
                    body.get("options_by_lemma"), body.get("instance_ids")
                )
            elif kind == "generation":
                task_ids = platform.create_generation_tasks(body.get("instance_ids"))
            elif kind == "neighbor":
                task_ids = _create_neighbor_tasks_from_body(platform, body)
            else:
                raise ValidationError(f"unknown batch kind {kind!r}")
        return {"status": "created", "task_ids": task_ids}

    @app.get("/reports/{name}")
    def report(name: str, x_admin_token: str | None = Header(default=None)) -> PlainTextResponse:
        require_admin(x_admin_token)
        if name not in rpt.REPORT_NAMES:
            raise HTTPException(status_code=404, detail=f"unknown report {name!r}")
        return PlainTextResponse(rpt.render_report(platform, name))

    @app.get("/admin/events")
    def events(x_admin_token: str | None = Header(default=None)) -> list[dict[str, Any]]:
        require_admin(x_admin_token)
        return [e.to_record() for e in platform.log]

    @app.post("/admin/workers")
    def register_worker(body: dict, x_admin_token: str | None = Header(default=None)) -> dict:
        require_admin(x_admin_token)
        with lock:
            platform.register_worker(body["worker_id"], body["token"])
        return {"status": "registered"}

    return app


def _create_neighbor_tasks_from_body(platform: svc.Platform, body: dict) -> list[str]:
    """Retrieve and enqueue neighbor batches for the given (or all) targets."""
    if platform.store is None:
        raise ValidationError("load vectors before creating neighbor batches")
    labeled = platform.corpora.get("labeled")
    if labeled is None:
        raise ValidationError("neighbor batches need a labeled corpus")
    strategy = ret.RetrievalStrategy.from_dict(body.get("strategy", {}))
    targets_corpus = platform._target_corpus()
    target_ids = body.get("target_ids") or sorted(
        i.instance_id for i in targets_corpus.instances
    )
    batches = []
    tagger_labels = {}
    for target_id in target_ids:
        target = targets_corpus.get(target_id)
        batch = ret.retrieve_batch(
            target, labeled, platform.store, strategy, inventory=platform.inventory
        )
        if batch.is_empty:
            continue
        batches.append(batch)
        if platform.inventory is not None and target.instance_id in platform.store.vectors:
            tagger_labels[target_id] = argmax_label(
                platform.store.require(target_id), platform.inventory
            )
    return platform.create_neighbor_tasks(batches, tagger_labels, strategy)
