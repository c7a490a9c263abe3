"""Scoring backends.

The stub backend derives a deterministic pseudo-embedding from a SHA-256
expansion of the text, so scores are bit-identical across runs and
platforms and need no model downloads. A deliberately wide-range variant
exists to exercise the server-side clamping, and an optional
sentence-transformers backend wraps a real embedding model.
"""

from __future__ import annotations

import hashlib
import math
from typing import Sequence

TextPair = tuple[str, str]

STUB_DIM = 32


def _stub_embedding(text: str, dim: int = STUB_DIM) -> list[float]:
    """Unit vector from counter-mode SHA-256 expansion of the text."""
    values: list[float] = []
    data = text.encode("utf-8")
    counter = 0
    while len(values) < dim:
        digest = hashlib.sha256(data + b"\x00" + counter.to_bytes(4, "big")).digest()
        for offset in range(0, len(digest), 8):
            if len(values) >= dim:
                break
            chunk = int.from_bytes(digest[offset:offset + 8], "big")
            values.append(chunk / 2.0 ** 63 - 1.0)
        counter += 1
    norm = math.sqrt(sum(v * v for v in values))
    if norm == 0.0:  # astronomically unlikely, but keep the unit-norm contract
        values[0] = 1.0
        norm = 1.0
    return [v / norm for v in values]


class MetricBackend:
    """Scores ordered (hyp, ref) text pairs; raw values may leave [0, 1]."""

    name = "base"

    def score_texts(self, pairs: Sequence[TextPair]) -> list[float]:
        raise NotImplementedError


class StubCosine(MetricBackend):
    """Cosine of hash-derived embeddings, clamped; self pairs score exactly 1."""

    name = "stub"

    def __init__(self) -> None:
        self._cache: dict[str, list[float]] = {}

    def _vector(self, text: str) -> list[float]:
        vec = self._cache.get(text)
        if vec is None:
            vec = _stub_embedding(text)
            self._cache[text] = vec
        return vec

    def score_texts(self, pairs: Sequence[TextPair]) -> list[float]:
        out = []
        for hyp, ref in pairs:
            if hyp == ref:
                out.append(1.0)
                continue
            cos = sum(a * b for a, b in zip(self._vector(hyp), self._vector(ref)))
            out.append(min(max(cos, 0.0), 1.0))
        return out


class WideStubCosine(StubCosine):
    """Stub variant that deliberately returns values in [-0.5, 1.5].

    Exists to verify that the server clamps out-of-range model outputs
    before they reach the wire.
    """

    name = "stub-wide"

    def score_texts(self, pairs: Sequence[TextPair]) -> list[float]:
        return [2.0 * value - 0.5 for value in super().score_texts(pairs)]


class SbertCosine(MetricBackend):
    """Cosine similarity from a sentence-transformers model (optional)."""

    name = "sbert"

    def __init__(self, model_id: str, device: str = "cpu", batch_size: int = 32) -> None:
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as err:  # pragma: no cover - depends on extras
            raise RuntimeError(
                "the sbert metric needs the 'sentence-transformers' package "
                "(install the [sbert] extra)") from err
        self._model = SentenceTransformer(model_id, device=device)
        self._batch_size = batch_size

    def score_texts(self, pairs: Sequence[TextPair]) -> list[float]:  # pragma: no cover
        texts = [t for pair in pairs for t in pair]
        embeddings = self._model.encode(texts, batch_size=self._batch_size,
                                        normalize_embeddings=True)
        out = []
        for k, (hyp, ref) in enumerate(pairs):
            if hyp == ref:
                out.append(1.0)
                continue
            va, vb = embeddings[2 * k], embeddings[2 * k + 1]
            out.append(float(min(max(float(va @ vb), 0.0), 1.0)))
        return out


def build_registry(model_id: str | None = None, device: str = "cpu",
                   batch_size: int = 32) -> dict[str, MetricBackend]:
    """Backends served by this process, keyed by wire-protocol metric name."""
    registry: dict[str, MetricBackend] = {
        StubCosine.name: StubCosine(),
        WideStubCosine.name: WideStubCosine(),
    }
    if model_id:
        registry[SbertCosine.name] = SbertCosine(model_id, device, batch_size)
    return registry
