"""Document-embedding providers: a deterministic local stub, a remote HTTP
client, and an on-disk cache.

The stub stands in for a real language-model service. Each token maps to a
pseudo-random unit vector derived from blake2b(f"{seed}:{token}") feeding a
PCG64 stream, so embeddings are identical across processes and platforms
given (text, dimension, seed). A document embedding is the L2-normalized
sum of its token vectors; empty token lists get the first basis vector as
a sentinel.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import httpx
import numpy as np

from .textpipe import tokenize

DEFAULT_DIMENSION = 256


class EmbeddingProviderError(RuntimeError):
    pass


class TransportError(EmbeddingProviderError):
    pass


class BadDimensionError(EmbeddingProviderError):
    pass


class NonFiniteValueError(EmbeddingProviderError):
    pass


@dataclass
class ProviderConfig:
    mode: str = "stub"  # stub | remote
    endpoint: str = ""
    dimension: int = DEFAULT_DIMENSION
    stub_seed: int = 0
    timeout: float = 10.0
    max_batch: int = 64

    def __post_init__(self):
        if self.mode not in ("stub", "remote"):
            raise ValueError(f"unknown provider mode {self.mode!r}")
        if self.dimension < 1 or self.max_batch < 1:
            raise ValueError("dimension and max_batch must be >= 1")

    @property
    def identity(self) -> str:
        if self.mode == "stub":
            return f"stub:{self.stub_seed}"
        return f"remote:{self.endpoint}"


@lru_cache(maxsize=1 << 16)
def _token_vector(token: str, dimension: int, seed: int) -> np.ndarray:
    digest = hashlib.blake2b(f"{seed}:{token}".encode(), digest_size=32).digest()
    words = [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))
    v = rng.standard_normal(dimension)
    v /= np.linalg.norm(v)
    v.flags.writeable = False
    return v


def embed_stub(text: str, dimension: int = DEFAULT_DIMENSION, seed: int = 0) -> np.ndarray:
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    tokens = tokenize(text)
    if not tokens:
        sentinel = np.zeros(dimension)
        sentinel[0] = 1.0
        return sentinel
    acc = np.zeros(dimension)
    for tok in tokens:
        acc += _token_vector(tok, dimension, seed)
    norm = np.linalg.norm(acc)
    if norm == 0.0:
        sentinel = np.zeros(dimension)
        sentinel[0] = 1.0
        return sentinel
    return acc / norm


def embed_remote(config: ProviderConfig, batch: Sequence[str]) -> list[np.ndarray]:
    """POST the batch to {endpoint}/embed; three attempts with backoff."""
    if config.mode != "remote":
        raise ValueError("embed_remote requires a remote-mode config")
    if len(batch) > config.max_batch:
        raise ValueError(f"batch size {len(batch)} exceeds max_batch {config.max_batch}")
    if not batch:
        return []

    last_exc: Optional[Exception] = None
    for attempt in range(3):
        try:
            resp = httpx.post(
                config.endpoint.rstrip("/") + "/embed",
                json={"texts": list(batch)},
                timeout=config.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
            break
        except (httpx.TransportError, httpx.HTTPStatusError, ValueError) as exc:
            last_exc = exc
            if attempt < 2:
                time.sleep(0.1 * 2**attempt)
    else:
        raise TransportError(f"embedding request failed after 3 attempts: {last_exc}")

    embeddings = payload.get("embeddings")
    if not isinstance(embeddings, list) or len(embeddings) != len(batch):
        raise BadDimensionError(
            f"provider returned {len(embeddings) if isinstance(embeddings, list) else '?'} "
            f"embeddings for {len(batch)} texts"
        )
    out = []
    for i, values in enumerate(embeddings):
        arr = np.asarray(values, dtype=float)
        if arr.shape != (config.dimension,):
            raise BadDimensionError(
                f"item {i}: expected {config.dimension} values, got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValueError(f"item {i}: non-finite embedding values")
        out.append(arr)
    return out


class EmbeddingCache:
    """Append-style JSONL cache keyed by (provider identity, text digest, dimension).

    Writes go to a temp file renamed over the old one, so readers never see
    a partial cache.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._data: dict[str, list[float]] = {}
        if self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        self._data[rec["digest"]] = rec["vector"]

    @staticmethod
    def key(provider_identity: str, text: str, dimension: int) -> str:
        h = hashlib.sha256(f"{provider_identity}|{dimension}|".encode() + text.encode())
        return h.hexdigest()

    def get(self, digest: str) -> Optional[np.ndarray]:
        vec = self._data.get(digest)
        return None if vec is None else np.array(vec)

    def put(self, digest: str, vector: np.ndarray) -> None:
        self._data[digest] = [float(x) for x in vector]
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            for d, v in self._data.items():
                fh.write(json.dumps({"digest": d, "vector": v}) + "\n")
        os.replace(tmp, self.path)


class EmbeddingProvider:
    """Unified entry point: dispatches to the stub or the remote client,
    consulting an optional cache first."""

    def __init__(self, config: ProviderConfig, cache: Optional[EmbeddingCache] = None):
        self.config = config
        self.cache = cache

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        cfg = self.config
        out: list[Optional[np.ndarray]] = [None] * len(texts)
        missing: list[int] = []
        for i, text in enumerate(texts):
            if self.cache is not None:
                hit = self.cache.get(EmbeddingCache.key(cfg.identity, text, cfg.dimension))
                if hit is not None:
                    out[i] = hit
                    continue
            missing.append(i)

        if missing:
            if cfg.mode == "stub":
                fresh = [embed_stub(texts[i], cfg.dimension, cfg.stub_seed) for i in missing]
            else:
                fresh = []
                for start in range(0, len(missing), cfg.max_batch):
                    chunk = missing[start : start + cfg.max_batch]
                    fresh.extend(embed_remote(cfg, [texts[i] for i in chunk]))
            for i, vec in zip(missing, fresh):
                out[i] = vec
                if self.cache is not None:
                    self.cache.put(EmbeddingCache.key(cfg.identity, texts[i], cfg.dimension), vec)
        return [v for v in out if v is not None]

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]
