"""HTTP surface of the triage service."""

from __future__ import annotations

import io
from typing import Optional, Union

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .records import DocumentRecord, normalize_label, parse_corpus
from .service import (
    AlreadyResolvedError,
    CurationItem,
    NoModelLoadedError,
    SameLabelCorrectionError,
    TriageService,
    UnknownItemError,
)


class ClassifyRequest(BaseModel):
    title: str = ""
    abstract: str = ""
    backend: str = "forest"


class CorrectDecision(BaseModel):
    correct: str


class FeedbackRequest(BaseModel):
    item_id: str
    decision: Union[str, CorrectDecision] = Field(
        description='either the string "accept" or {"correct": "<label>"}'
    )


class RetrainRequest(BaseModel):
    min_new_labels: Optional[int] = None


def _item_view(item: CurationItem) -> dict:
    return {
        "id": item.record.id,
        "title": item.record.title,
        "abstract": item.record.abstract,
        "source": item.record.source,
        "backend": item.backend,
        "predicted": item.prediction.predicted.label,
        "probabilities": list(item.prediction.probabilities),
        "entropy": item.prediction.entropy,
        "status": item.status,
        "final_label": item.final_label.label if item.final_label is not None else None,
        "created_at": item.created_at,
        "resolved_at": item.resolved_at,
    }


def create_app(service: TriageService, default_backend: str = "forest") -> FastAPI:
    app = FastAPI(title="littriage")

    @app.exception_handler(NoModelLoadedError)
    async def _no_model(request: Request, exc: NoModelLoadedError):
        return JSONResponse(status_code=503, content={"error": str(exc)})

    @app.post("/classify")
    def classify(req: ClassifyRequest) -> dict:
        if not req.title.strip() and not req.abstract.strip():
            return JSONResponse(status_code=400, content={"error": "empty document"})
        if req.backend not in ("forest", "linear"):
            return JSONResponse(status_code=400, content={"error": f"unknown backend {req.backend!r}"})
        result, _version = service.classify(req.title, req.abstract, req.backend)
        return {
            "predicted": result.predicted.label,
            "probabilities": list(result.probabilities),
            "entropy": result.entropy,
        }

    @app.post("/documents")
    async def documents(request: Request) -> dict:
        body = (await request.body()).decode("utf-8")
        records, errors = parse_corpus(io.StringIO(body))
        if not records and errors:
            return JSONResponse(
                status_code=400,
                content={"error": "no parseable records", "record_errors": len(errors)},
            )
        n = service.enqueue(records, backend=default_backend)
        return {"enqueued": n, "record_errors": len(errors)}

    @app.get("/queue")
    def queue(limit: int = Query(default=50, ge=1)) -> list[dict]:
        return [_item_view(it) for it in service.queue(limit)]

    @app.post("/feedback")
    def feedback(req: FeedbackRequest):
        try:
            if isinstance(req.decision, str):
                if req.decision != "accept":
                    return JSONResponse(
                        status_code=400, content={"error": f"unknown decision {req.decision!r}"}
                    )
                item = service.record_feedback(req.item_id, "accept")
            else:
                label = normalize_label(req.decision.correct)
                if label is None:
                    return JSONResponse(
                        status_code=400,
                        content={"error": f"unknown label {req.decision.correct!r}"},
                    )
                item = service.record_feedback(req.item_id, "correct", label)
        except UnknownItemError:
            return JSONResponse(status_code=404, content={"error": f"unknown item {req.item_id!r}"})
        except AlreadyResolvedError as exc:
            return JSONResponse(status_code=409, content={"error": str(exc)})
        except SameLabelCorrectionError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return _item_view(item)

    @app.post("/retrain")
    def retrain(req: RetrainRequest) -> dict:
        kwargs = {}
        if req.min_new_labels is not None:
            kwargs["min_new_labels"] = req.min_new_labels
        model = service.retrain_from_feedback(**kwargs)
        return {"retrained": model is not None}

    @app.get("/stats")
    def stats() -> dict:
        s = service.stats()
        return {
            "documents_classified": s.documents_classified,
            "items_resolved": s.items_resolved,
            "per_class_counts": s.per_class_counts,
            "estimated_minutes_saved": s.estimated_minutes_saved,
        }

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "model_versions": service.model_versions()}

    return app
