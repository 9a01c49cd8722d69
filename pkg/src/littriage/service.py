"""Serving layer: classification, the curation queue, feedback, retraining.

Persistence is an append-only JSONL event log plus an optional snapshot.
Every queue mutation is an event appended (and flushed) before the caller
sees a response; replaying the log over a fresh store reconstructs the
exact item states. The serving models live behind a single reference that
is swapped atomically, so in-flight classifications always use one model
end to end.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .embed import EmbeddingProvider
from .forest import ForestModel, PredictionResult, predict_forest
from .linear import LinearHyperparams, LinearModel, forward, train_linear
from .records import DocClass, DocumentRecord
from .textpipe import Vocabulary, featurize

MINUTES_PER_ARTICLE = 2.0  # manual review time per document
DEFAULT_MIN_NEW_LABELS = 25


class NoModelLoadedError(RuntimeError):
    pass


class UnknownItemError(KeyError):
    pass


class AlreadyResolvedError(RuntimeError):
    pass


class SameLabelCorrectionError(ValueError):
    """A correction must change the label; use accept instead."""


@dataclass
class CurationItem:
    record: DocumentRecord
    prediction: PredictionResult
    backend: str  # forest | linear
    status: str = "pending"  # pending | accepted | corrected
    final_label: Optional[DocClass] = None
    created_at: float = 0.0
    resolved_at: Optional[float] = None


@dataclass
class TriageStats:
    documents_classified: int = 0
    items_resolved: int = 0
    per_class_counts: dict[str, int] = field(default_factory=dict)

    @property
    def estimated_minutes_saved(self) -> float:
        return MINUTES_PER_ARTICLE * self.documents_classified


class EventLog:
    """Append-only JSONL log; appends are flushed before returning."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a", encoding="utf-8")
        self._lock = threading.Lock()

    def append(self, event: dict) -> None:
        with self._lock:
            self._fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def read_all(self) -> list[dict]:
        if not self.path.exists():
            return []
        events = []
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    events.append(json.loads(line))
        return events

    def close(self) -> None:
        self._fh.close()


def _item_to_obj(item: CurationItem) -> dict:
    return {
        "record": {
            "id": item.record.id,
            "title": item.record.title,
            "abstract": item.record.abstract,
            "source": item.record.source,
            "label": item.record.label.label if item.record.label is not None else None,
        },
        "prediction": {
            "predicted": item.prediction.predicted.label,
            "probabilities": list(item.prediction.probabilities),
            "entropy": item.prediction.entropy,
        },
        "backend": item.backend,
        "status": item.status,
        "final_label": item.final_label.label if item.final_label is not None else None,
        "created_at": item.created_at,
        "resolved_at": item.resolved_at,
    }


def _item_from_obj(obj: dict) -> CurationItem:
    rec = obj["record"]
    pred = obj["prediction"]
    return CurationItem(
        record=DocumentRecord(
            id=rec["id"],
            title=rec["title"],
            abstract=rec["abstract"],
            source=rec["source"],
            label=DocClass[rec["label"].upper()] if rec.get("label") else None,
        ),
        prediction=PredictionResult(
            predicted=DocClass[pred["predicted"].upper()],
            probabilities=tuple(pred["probabilities"]),
            entropy=pred["entropy"],
        ),
        backend=obj["backend"],
        status=obj["status"],
        final_label=DocClass[obj["final_label"].upper()] if obj.get("final_label") else None,
        created_at=obj["created_at"],
        resolved_at=obj.get("resolved_at"),
    )


class TriageService:
    def __init__(
        self,
        store_dir: str | Path,
        provider: Optional[EmbeddingProvider] = None,
        vocabulary: Optional[Vocabulary] = None,
        forest_model: Optional[ForestModel] = None,
        linear_model: Optional[LinearModel] = None,
        base_corpus: Optional[Sequence[DocumentRecord]] = None,
        linear_hyperparams: Optional[LinearHyperparams] = None,
        clock: Callable[[], float] = time.time,
    ):
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)
        self.provider = provider
        self.vocabulary = vocabulary
        self.base_corpus = list(base_corpus or [])
        self.linear_hyperparams = linear_hyperparams or LinearHyperparams()
        self.clock = clock

        self._lock = threading.RLock()
        self._forest = forest_model
        self._linear = linear_model
        self._forest_version = 1 if forest_model is not None else 0
        self._linear_version = 1 if linear_model is not None else 0

        self.items: dict[str, CurationItem] = {}
        self.documents_classified = 0
        self.per_class_counts: dict[str, int] = {c.label: 0 for c in DocClass}
        self._resolved_since_retrain = 0

        self.log = EventLog(self.store_dir / "events.jsonl")
        self._load_snapshot()
        for event in self.log.read_all()[self._snapshot_events :]:
            self._apply(event)

    # -- persistence ------------------------------------------------------

    @property
    def _snapshot_path(self) -> Path:
        return self.store_dir / "snapshot.json"

    def _load_snapshot(self) -> None:
        self._snapshot_events = 0
        if not self._snapshot_path.exists():
            return
        obj = json.loads(self._snapshot_path.read_text(encoding="utf-8"))
        self._snapshot_events = obj["events_applied"]
        self.items = {k: _item_from_obj(v) for k, v in obj["items"].items()}
        self.documents_classified = obj["documents_classified"]
        self.per_class_counts = obj["per_class_counts"]
        self._resolved_since_retrain = obj["resolved_since_retrain"]

    def snapshot(self) -> None:
        """Write a snapshot so future startups replay only the log tail."""
        with self._lock:
            n_events = len(self.log.read_all())
            obj = {
                "events_applied": n_events,
                "items": {k: _item_to_obj(v) for k, v in self.items.items()},
                "documents_classified": self.documents_classified,
                "per_class_counts": self.per_class_counts,
                "resolved_since_retrain": self._resolved_since_retrain,
            }
            tmp = self._snapshot_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(obj, ensure_ascii=False), encoding="utf-8")
            os.replace(tmp, self._snapshot_path)

    def _apply(self, event: dict) -> None:
        """State transition for one event; used both live and during replay."""
        kind = event["type"]
        if kind == "enqueue":
            item = _item_from_obj(event["item"])
            self.items[item.record.id] = item
            self.documents_classified += 1
            self.per_class_counts[item.prediction.predicted.label] += 1
        elif kind == "feedback":
            item = self.items[event["item_id"]]
            if event["decision"] == "accept":
                item.status = "accepted"
                item.final_label = item.prediction.predicted
            else:
                item.status = "corrected"
                item.final_label = DocClass[event["label"].upper()]
            item.resolved_at = event["resolved_at"]
            self._resolved_since_retrain += 1
        elif kind == "retrain":
            self._resolved_since_retrain = 0

    # -- classification ---------------------------------------------------

    def model_versions(self) -> dict[str, int]:
        with self._lock:
            return {"forest": self._forest_version, "linear": self._linear_version}

    def classify(self, title: str, abstract: str, backend: str = "forest") -> tuple[PredictionResult, int]:
        """Classify one document; returns (prediction, model version used)."""
        text = (title + " " + abstract).strip()
        if backend == "forest":
            with self._lock:
                model, version = self._forest, self._forest_version
            if model is None or self.vocabulary is None:
                raise NoModelLoadedError("no forest model/vocabulary loaded")
            result = predict_forest(model, featurize(text, self.vocabulary))
        elif backend == "linear":
            with self._lock:
                model, version = self._linear, self._linear_version
            if model is None:
                raise NoModelLoadedError("no linear model loaded")
            if self.provider is None:
                raise NoModelLoadedError("no embedding provider configured")
            result = forward(model, self.provider.embed(text))
        else:
            raise ValueError(f"unknown backend {backend!r}")
        with self._lock:
            self.documents_classified += 1
            self.per_class_counts[result.predicted.label] += 1
        return result, version

    # -- queue ------------------------------------------------------------

    def enqueue(self, records: Sequence[DocumentRecord], backend: str = "forest") -> int:
        """Classify records and add them to the curation queue."""
        n = 0
        for rec in records:
            text = rec.text()
            if backend == "forest":
                with self._lock:
                    model = self._forest
                if model is None or self.vocabulary is None:
                    raise NoModelLoadedError("no forest model/vocabulary loaded")
                pred = predict_forest(model, featurize(text, self.vocabulary))
            else:
                with self._lock:
                    model = self._linear
                if model is None or self.provider is None:
                    raise NoModelLoadedError("no linear model/provider loaded")
                pred = forward(model, self.provider.embed(text))
            item = CurationItem(
                record=rec, prediction=pred, backend=backend, created_at=self.clock()
            )
            with self._lock:
                if rec.id in self.items:
                    continue
                event = {"type": "enqueue", "item": _item_to_obj(item)}
                self.log.append(event)
                self._apply(event)
                n += 1
        return n

    def queue(self, limit: Optional[int] = None) -> list[CurationItem]:
        """Pending items: entropy desc, created_at asc, id asc — a total order."""
        with self._lock:
            pending = [it for it in self.items.values() if it.status == "pending"]
        pending.sort(key=lambda it: (-it.prediction.entropy, it.created_at, it.record.id))
        return pending[:limit] if limit is not None else pending

    def record_feedback(self, item_id: str, decision: str,
                        label: Optional[DocClass] = None) -> CurationItem:
        """Apply an accept/correct decision; the event is durable before return."""
        if decision not in ("accept", "correct"):
            raise ValueError(f"unknown decision {decision!r}")
        with self._lock:
            item = self.items.get(item_id)
            if item is None:
                raise UnknownItemError(item_id)
            if item.status != "pending":
                raise AlreadyResolvedError(f"item {item_id} is already {item.status}")
            if decision == "correct":
                if label is None:
                    raise ValueError("correct decision requires a label")
                if label == item.prediction.predicted:
                    raise SameLabelCorrectionError(
                        f"correction to {label.label} equals the prediction; use accept"
                    )
            event = {
                "type": "feedback",
                "item_id": item_id,
                "decision": decision,
                "label": label.label if label is not None else None,
                "resolved_at": self.clock(),
            }
            self.log.append(event)
            self._apply(event)
            return item

    # -- retraining -------------------------------------------------------

    def retrain_from_feedback(self, min_new_labels: int = DEFAULT_MIN_NEW_LABELS) -> Optional[LinearModel]:
        """Full linear-head retrain on base corpus + resolved feedback.

        No-op below the threshold. The swap is all-or-nothing: any failure
        (embedding provider, training) leaves the previous model serving.
        """
        with self._lock:
            if self._resolved_since_retrain < min_new_labels:
                return None
            resolved = [
                it for it in self.items.values() if it.status in ("accepted", "corrected")
            ]
        if self.provider is None:
            raise NoModelLoadedError("no embedding provider configured")

        texts: list[str] = []
        labels: list[DocClass] = []
        for rec in self.base_corpus:
            if rec.label is not None:
                texts.append(rec.text())
                labels.append(rec.label)
        for it in resolved:
            texts.append(it.record.text())
            labels.append(it.final_label)
        if not texts:
            return None

        # everything below may fail; state is only touched after success
        embeddings = self.provider.embed_batch(texts)
        new_model = train_linear(list(zip(embeddings, labels)), self.linear_hyperparams)
        event = {"type": "retrain", "at": self.clock(), "n_labels": len(texts)}
        with self._lock:
            self.log.append(event)
            self._apply(event)
            self._linear = new_model
            self._linear_version += 1
        return new_model

    # -- stats ------------------------------------------------------------

    def stats(self) -> TriageStats:
        with self._lock:
            resolved = sum(1 for it in self.items.values() if it.status != "pending")
            return TriageStats(
                documents_classified=self.documents_classified,
                items_resolved=resolved,
                per_class_counts=dict(self.per_class_counts),
            )
