"""Literature-triage toolkit: classify research abstracts into five
evidence classes with a bag-of-words random forest or an embedding-backed
linear head, evaluate with per-class metrics, and serve a human-in-the-loop
curation queue."""

from .records import DocClass, DocumentRecord

__all__ = ["DocClass", "DocumentRecord"]
__version__ = "0.1.0"
