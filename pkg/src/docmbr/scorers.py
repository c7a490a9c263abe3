"""Sentence-pair utility scorers: lexical, embedding-based, and remote."""

from __future__ import annotations

import json
import math
from collections import Counter
from pathlib import Path
from typing import Sequence

import numpy as np

from .adapter import AdapterClient
from .documents import Segment
from .errors import DocMbrError, InputDataError, InvalidRange, MissingEmbedding

Pair = tuple[Segment, Segment]


def rescale_lower_better(raw: float, lo: float, hi: float) -> float:
    """Map a lower-is-better score on [lo, hi] to a utility in [0, 1].

    ``raw`` is clamped into [lo, hi] first, so the best possible raw score
    maps to 1 and the worst to 0.
    """
    if lo >= hi:
        raise InvalidRange(f"need lo < hi, got lo={lo!r} hi={hi!r}")
    clamped = min(max(raw, lo), hi)
    return (hi - clamped) / (hi - lo)


def _whitespace_tokens(text: str) -> list[str]:
    return text.split()


def _char_tokens(text: str) -> list[str]:
    return [c for c in text if not c.isspace()]


_TOKENIZERS = {"whitespace": _whitespace_tokens, "char": _char_tokens}


def _ngram_counts(tokens: Sequence, order: int) -> Counter:
    return Counter(tuple(tokens[i:i + order]) for i in range(len(tokens) - order + 1))


class SentenceUtility:
    """Scores a (hypothesis, reference) segment pair in [0, 1].

    ``is_symmetric`` declares that score_pair(a, b) == score_pair(b, a)
    exactly; the engine only exploits symmetry when this is set. The
    ``cache_key`` identifies the scorer and its parameters for pair caching
    and config fingerprints.
    """

    name: str = "base"
    is_symmetric: bool = False

    @property
    def cache_key(self) -> str:
        return self.name

    def score_pair(self, a: Segment, b: Segment) -> float:
        raise NotImplementedError

    def batch_score(self, pairs: Sequence[Pair]) -> list[float]:
        """Score pairs in order; errors gain the index of the failing pair."""
        out: list[float] = []
        for idx, (a, b) in enumerate(pairs):
            try:
                out.append(self.score_pair(a, b))
            except DocMbrError as err:
                if err.pair_index is None:
                    err.pair_index = idx
                raise
        return out


class ExactMatch(SentenceUtility):
    """1.0 iff the two segment texts are identical, else 0.0."""

    name = "exact-match"
    is_symmetric = True

    def score_pair(self, a: Segment, b: Segment) -> float:
        return 1.0 if a.text == b.text else 0.0


class TokenF1(SentenceUtility):
    """Multiset F1 over tokens (bag-of-words overlap)."""

    name = "token-f1"
    is_symmetric = True

    def __init__(self, tokenizer: str = "whitespace") -> None:
        self._tokenize = _TOKENIZERS[tokenizer]
        self._tokenizer = tokenizer

    @property
    def cache_key(self) -> str:
        return f"token-f1:{self._tokenizer}"

    def score_pair(self, a: Segment, b: Segment) -> float:
        ta = self._tokenize(a.text)
        tb = self._tokenize(b.text)
        if not ta or not tb:
            return 1.0 if a.text == b.text else 0.0
        overlap = sum((Counter(ta) & Counter(tb)).values())
        if overlap == 0:
            return 0.0
        precision = overlap / len(ta)
        recall = overlap / len(tb)
        return 2.0 * precision * recall / (precision + recall)


class SentenceBleu(SentenceUtility):
    """Sentence BLEU: up to 4-grams, add-one smoothing on orders above 1,
    and the standard brevity penalty. Not assumed symmetric."""

    name = "sentence-bleu"
    is_symmetric = False

    def __init__(self, max_order: int = 4, tokenizer: str = "whitespace") -> None:
        if max_order < 1:
            raise ValueError("max_order must be >= 1")
        self.max_order = max_order
        self._tokenize = _TOKENIZERS[tokenizer]
        self._tokenizer = tokenizer

    @property
    def cache_key(self) -> str:
        return f"sentence-bleu:{self.max_order}:{self._tokenizer}"

    def score_pair(self, hyp: Segment, ref: Segment) -> float:
        th = self._tokenize(hyp.text)
        tr = self._tokenize(ref.text)
        if not th or not tr:
            return 1.0 if hyp.text == ref.text else 0.0
        log_precision_sum = 0.0
        for order in range(1, self.max_order + 1):
            total = max(len(th) - order + 1, 0)
            hyp_ngrams = _ngram_counts(th, order)
            ref_ngrams = _ngram_counts(tr, order)
            matches = sum((hyp_ngrams & ref_ngrams).values())
            if order == 1:
                if matches == 0:
                    return 0.0
                precision = matches / total
            else:
                precision = (matches + 1) / (total + 1)
            log_precision_sum += math.log(precision)
        score = math.exp(log_precision_sum / self.max_order)
        if len(th) < len(tr):
            score *= math.exp(1.0 - len(tr) / len(th))
        return min(score, 1.0)


class ChrF(SentenceUtility):
    """Character n-gram F-beta averaged over orders 1..max_order.

    Whitespace is stripped before forming n-grams. Orders where neither
    side has any n-gram are skipped, so short identical strings still
    score 1. Not assumed symmetric (beta weights recall).
    """

    name = "chrf"
    is_symmetric = False

    def __init__(self, max_order: int = 6, beta: float = 2.0) -> None:
        self.max_order = max_order
        self.beta = beta

    @property
    def cache_key(self) -> str:
        return f"chrf:{self.max_order}:{self.beta}"

    def score_pair(self, hyp: Segment, ref: Segment) -> float:
        sh = "".join(hyp.text.split())
        sr = "".join(ref.text.split())
        beta_sq = self.beta * self.beta
        f_scores: list[float] = []
        for order in range(1, self.max_order + 1):
            n_hyp = max(len(sh) - order + 1, 0)
            n_ref = max(len(sr) - order + 1, 0)
            if n_hyp == 0 and n_ref == 0:
                continue
            overlap = sum((_ngram_counts(sh, order) & _ngram_counts(sr, order)).values())
            precision = overlap / n_hyp if n_hyp else 0.0
            recall = overlap / n_ref if n_ref else 0.0
            denom = beta_sq * precision + recall
            f_scores.append((1 + beta_sq) * precision * recall / denom if denom > 0 else 0.0)
        if not f_scores:
            return 1.0 if sh == sr else 0.0
        return sum(f_scores) / len(f_scores)


class EmbeddingTable:
    """Exact-string lookup of unit-norm vectors for segment texts."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int) -> None:
        self.vectors = vectors
        self.dim = dim

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        """Load JSONL lines {"text": str, "vector": [float,...]}.

        Vectors are L2-normalized; dimensions must be uniform and vectors
        non-zero.
        """
        vectors: dict[str, np.ndarray] = {}
        dim: int | None = None
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                    text = row["text"]
                    vec = np.asarray(row["vector"], dtype=np.float64)
                except (ValueError, KeyError, TypeError) as err:
                    raise InputDataError(f"{path}:{lineno}: bad embedding row: {err}") from err
                if vec.ndim != 1 or vec.size == 0:
                    raise InputDataError(f"{path}:{lineno}: vector must be a flat list")
                if dim is None:
                    dim = int(vec.size)
                elif vec.size != dim:
                    raise InputDataError(
                        f"{path}:{lineno}: dimension {vec.size} != {dim}")
                norm = float(np.linalg.norm(vec))
                if not math.isfinite(norm) or norm == 0.0:
                    raise InputDataError(f"{path}:{lineno}: zero or non-finite vector")
                vectors[text] = vec / norm
        if dim is None:
            raise InputDataError(f"{path}: no embeddings found")
        return cls(vectors, dim)

    def lookup(self, text: str) -> np.ndarray:
        try:
            return self.vectors[text]
        except KeyError:
            raise MissingEmbedding(f"no embedding for segment {text!r}") from None


class EmbeddingCosine(SentenceUtility):
    """Cosine similarity of precomputed segment embeddings, clamped to [0, 1].

    Negative cosines clamp to 0 so that unrelated segments score near 0 and
    identical segments score exactly 1 (self pairs short-circuit).
    """

    name = "embedding-cosine"
    is_symmetric = True

    def __init__(self, table: EmbeddingTable) -> None:
        self.table = table

    def score_pair(self, a: Segment, b: Segment) -> float:
        if a.text == b.text:
            self.table.lookup(a.text)  # still require presence
            return 1.0
        va = self.table.lookup(a.text)
        vb = self.table.lookup(b.text)
        return float(min(max(float(va @ vb), 0.0), 1.0))


class AdapterScore(SentenceUtility):
    """Sentence utility served by an external metric adapter.

    Not assumed symmetric and no self-pair shortcut: scores are whatever
    the adapter returns, validated into [0, 1] by the client.
    """

    name = "adapter"
    is_symmetric = False

    def __init__(self, client: AdapterClient, metric: str = "stub",
                 batch_size: int = 64) -> None:
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.client = client
        self.metric = metric
        self.batch_size = batch_size

    @property
    def cache_key(self) -> str:
        return f"adapter:{self.metric}"

    def score_pair(self, a: Segment, b: Segment) -> float:
        return self.client.score_texts([(a.text, b.text)])[0]

    def batch_score(self, pairs: Sequence[Pair]) -> list[float]:
        out: list[float] = []
        for offset in range(0, len(pairs), self.batch_size):
            chunk = pairs[offset:offset + self.batch_size]
            try:
                out.extend(self.client.score_texts(
                    [(a.text, b.text) for a, b in chunk]))
            except DocMbrError as err:
                err.pair_index = offset + (err.pair_index or 0)
                raise
        return out


def score_pair(utility: SentenceUtility, a: Segment, b: Segment) -> float:
    """Functional form of ``utility.score_pair``."""
    return utility.score_pair(a, b)


def batch_score(utility: SentenceUtility, pairs: Sequence[Pair]) -> list[float]:
    """Functional form of ``utility.batch_score``."""
    return utility.batch_score(pairs)
