"""Tokenizer and sparse-feature stage: vocabulary, count vectors, TF-IDF."""

from __future__ import annotations

import hashlib
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .stopwords import STOPWORDS

# A token is a maximal run of letters/digits; internal single hyphens are
# kept when both neighbors are alphanumeric ("covid-19", "double-blind").
_TOKEN_RE = re.compile(r"[^\W_]+(?:-[^\W_]+)*", re.UNICODE)

DEFAULT_MIN_DF = 2
DEFAULT_MAX_DF_RATIO = 0.9

VOCAB_FORMAT_VERSION = 1


class EmptyVocabularyError(ValueError):
    """No token survived the document-frequency bounds."""


class DimensionMismatchError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercase and split text into tokens.

    Rules: Unicode lowercasing; hyphenated compounds stay intact; tokens
    shorter than 2 characters and stopwords are dropped. Deterministic.
    """
    out = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if len(tok) < 2:
            continue
        if tok in STOPWORDS:
            continue
        out.append(tok)
    return out


@dataclass(frozen=True)
class SparseVector:
    """Pairs of (index, weight) with strictly ascending indices."""

    indices: tuple[int, ...]
    weights: tuple[float, ...]
    dimension: int

    def __post_init__(self):
        if len(self.indices) != len(self.weights):
            raise ValueError("indices and weights length mismatch")
        prev = -1
        for i, w in zip(self.indices, self.weights):
            if i <= prev or i >= self.dimension:
                raise ValueError(f"index {i} out of order or out of range")
            if not math.isfinite(w) or w == 0.0:
                raise ValueError(f"weight at index {i} must be finite and non-zero")
            prev = i

    def l1(self) -> float:
        return sum(abs(w) for w in self.weights)

    def l2(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights))


@dataclass
class Vocabulary:
    token_to_index: dict[str, int]
    document_frequency: dict[str, int]
    n_documents: int
    min_df: int = DEFAULT_MIN_DF
    max_df_ratio: float = DEFAULT_MAX_DF_RATIO
    # idf per index, precomputed at build/load time
    _idf: list[float] = field(default_factory=list, repr=False)

    @property
    def size(self) -> int:
        return len(self.token_to_index)

    def _compute_idf(self) -> None:
        idf = [0.0] * self.size
        for tok, idx in self.token_to_index.items():
            df = self.document_frequency[tok]
            idf[idx] = math.log((self.n_documents + 1) / (df + 1)) + 1.0
        self._idf = idf

    def content_hash(self) -> str:
        """Stable digest of the vocabulary contents, for model/vocab pairing."""
        h = hashlib.sha256()
        h.update(f"{self.n_documents}|{self.min_df}|{self.max_df_ratio}".encode())
        for tok in sorted(self.token_to_index):
            h.update(f"{tok}\t{self.document_frequency[tok]}\t{self.token_to_index[tok]}\n".encode())
        return h.hexdigest()

    def save(self, path: str | Path) -> None:
        obj = {
            "format_version": VOCAB_FORMAT_VERSION,
            "parameters": {"min_df": self.min_df, "max_df_ratio": self.max_df_ratio},
            "n_documents": self.n_documents,
            "tokens": [
                [tok, self.document_frequency[tok], idx]
                for tok, idx in sorted(self.token_to_index.items(), key=lambda kv: kv[1])
            ],
        }
        Path(path).write_text(json.dumps(obj, ensure_ascii=False, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        if obj.get("format_version") != VOCAB_FORMAT_VERSION:
            raise ValueError(f"unsupported vocabulary format_version {obj.get('format_version')!r}")
        vocab = cls(
            token_to_index={tok: idx for tok, _df, idx in obj["tokens"]},
            document_frequency={tok: df for tok, df, _idx in obj["tokens"]},
            n_documents=obj["n_documents"],
            min_df=obj["parameters"]["min_df"],
            max_df_ratio=obj["parameters"]["max_df_ratio"],
        )
        vocab._compute_idf()
        return vocab


def build_vocabulary(
    corpus: Sequence[list[str]],
    min_df: int = DEFAULT_MIN_DF,
    max_df_ratio: float = DEFAULT_MAX_DF_RATIO,
) -> Vocabulary:
    """Build a vocabulary from tokenized documents.

    Tokens must appear in at least min_df documents and in at most
    max_df_ratio of them. Indices are assigned by descending document
    frequency, ties lexicographic, so the result is order-free over the
    corpus.
    """
    if not corpus:
        raise ValueError("corpus must be non-empty")
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    if not (0.0 < max_df_ratio <= 1.0):
        raise ValueError("max_df_ratio must be in (0, 1]")

    df: Counter[str] = Counter()
    for tokens in corpus:
        df.update(set(tokens))
    n_docs = len(corpus)
    kept = [t for t, c in df.items() if c >= min_df and c / n_docs <= max_df_ratio]
    if not kept:
        raise EmptyVocabularyError(
            f"no token satisfies min_df={min_df}, max_df_ratio={max_df_ratio}"
        )
    kept.sort(key=lambda t: (-df[t], t))
    vocab = Vocabulary(
        token_to_index={t: i for i, t in enumerate(kept)},
        document_frequency={t: df[t] for t in kept},
        n_documents=n_docs,
        min_df=min_df,
        max_df_ratio=max_df_ratio,
    )
    vocab._compute_idf()
    return vocab


def vectorize_counts(tokens: Iterable[str], vocab: Vocabulary) -> SparseVector:
    """Raw term counts against the vocabulary; OOV tokens are ignored."""
    counts: Counter[int] = Counter()
    for tok in tokens:
        idx = vocab.token_to_index.get(tok)
        if idx is not None:
            counts[idx] += 1
    items = sorted(counts.items())
    return SparseVector(
        indices=tuple(i for i, _ in items),
        weights=tuple(float(c) for _, c in items),
        dimension=vocab.size,
    )


def tfidf_transform(counts: SparseVector, vocab: Vocabulary) -> SparseVector:
    """TF-IDF weighting with smoothed idf, then L2 normalization.

    weight_i = tf_i * (ln((n_documents + 1) / (df_i + 1)) + 1), normalized
    to unit L2 norm; the zero vector stays zero.
    """
    if counts.dimension != vocab.size:
        raise DimensionMismatchError(
            f"vector dimension {counts.dimension} != vocabulary size {vocab.size}"
        )
    if not counts.indices:
        return counts
    if not vocab._idf:
        vocab._compute_idf()
    weighted = [w * vocab._idf[i] for i, w in zip(counts.indices, counts.weights)]
    norm = math.sqrt(sum(w * w for w in weighted))
    return SparseVector(
        indices=counts.indices,
        weights=tuple(w / norm for w in weighted),
        dimension=counts.dimension,
    )


def featurize(text: str, vocab: Vocabulary) -> SparseVector:
    """tokenize -> counts -> tfidf in one step."""
    return tfidf_transform(vectorize_counts(tokenize(text), vocab), vocab)
