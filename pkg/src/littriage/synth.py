"""Synthetic labeled corpora for experiments and benchmarks.

Documents are separable by construction: every class owns a small
exclusive marker vocabulary, and each abstract mixes markers from its
class with fillers drawn from a shared pool. Class proportions default to
the published evaluation corpus distribution.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .evaluate import PUBLISHED_DOC_COUNTS
from .records import SOURCES, N_CLASSES, DocClass, DocumentRecord

_FILLER_POOL = [f"term{i:03d}" for i in range(100)]
_MARKERS = [[f"class{c}sig{j:02d}" for j in range(10)] for c in range(N_CLASSES)]


def apportion(n: int, proportions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment; every class gets at least one item."""
    total = sum(proportions)
    quotas = [n * p / total for p in proportions]
    counts = [int(q) for q in quotas]
    remainders = sorted(range(len(quotas)), key=lambda i: quotas[i] - counts[i], reverse=True)
    for i in remainders[: n - sum(counts)]:
        counts[i] += 1
    for i in range(len(counts)):
        if counts[i] == 0 and n >= len(counts):
            donor = max(range(len(counts)), key=lambda j: counts[j])
            counts[donor] -= 1
            counts[i] += 1
    return counts


def _make_doc(doc_id: str, cls: DocClass, rng: np.random.Generator,
              marker_rate: float = 0.2, n_abstract: int = 30) -> DocumentRecord:
    markers = _MARKERS[int(cls)]
    title_words = [str(rng.choice(markers))] + [
        str(rng.choice(_FILLER_POOL)) for _ in range(int(rng.integers(3, 7)))
    ]
    abstract_words = [
        str(rng.choice(markers)) if rng.random() < marker_rate else str(rng.choice(_FILLER_POOL))
        for _ in range(n_abstract)
    ]
    return DocumentRecord(
        id=doc_id,
        title=" ".join(title_words),
        abstract=" ".join(abstract_words),
        source=str(rng.choice(SOURCES)),
        label=cls,
    )


def make_corpus(
    n: int,
    seed: int = 0,
    proportions: Optional[Sequence[float]] = None,
) -> list[DocumentRecord]:
    """n labeled synthetic records at the given (default: published) class mix."""
    if proportions is None:
        proportions = PUBLISHED_DOC_COUNTS
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = apportion(n, proportions)
    docs: list[DocumentRecord] = []
    for c, count in enumerate(counts):
        for _ in range(count):
            docs.append(_make_doc(f"doc-{len(docs):06d}", DocClass(c), rng))
    perm = rng.permutation(len(docs))
    return [docs[i] for i in perm]


def make_imbalanced_corpus(
    n: int,
    seed: int = 0,
    minority_ratio: float = 0.01,
    marker_noise: float = 0.03,
) -> list[DocumentRecord]:
    """99:1-style binary-skew corpus with a noisy minority signal.

    Minority (excluded) documents always carry one weak marker token;
    majority (systematic review) documents carry it with probability
    marker_noise. The filler pool is kept small so the marker is a regular
    split candidate, yet marker leaves still mix classes, which is what
    makes unweighted training collapse to the dominant class.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    filler_pool = _FILLER_POOL[:20]
    n_minority = max(1, round(n * minority_ratio))
    docs: list[DocumentRecord] = []
    for i in range(n):
        minority = i < n_minority
        words = [str(rng.choice(filler_pool)) for _ in range(28)]
        if minority or rng.random() < marker_noise:
            words.insert(int(rng.integers(0, len(words))), "minoritysignal")
        cls = DocClass.EXCLUDED if minority else DocClass.SYSTEMATIC_REVIEW
        docs.append(
            DocumentRecord(
                id=f"doc-{i:06d}",
                title=" ".join(str(rng.choice(filler_pool)) for _ in range(5)),
                abstract=" ".join(words),
                source="other",
                label=cls,
            )
        )
    perm = rng.permutation(len(docs))
    return [docs[i] for i in perm]
