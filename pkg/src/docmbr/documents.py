"""Document model: segments, segment weights, and rule-based sentence splitting."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import DegenerateDocument

_TERMINATORS = frozenset(".!?。！？")
_FULLWIDTH_TERMINATORS = frozenset("。！？")
_TRAILING_CLOSERS = frozenset("\"'”’»)）]}」』")

# Tokens whose trailing period does not end an English sentence. Lookup is
# lowercased; single uppercase initials ("J.") are handled separately.
ENGLISH_ABBREVIATIONS = frozenset({
    "mr.", "mrs.", "ms.", "dr.", "prof.", "rev.", "hon.", "st.", "mt.",
    "sr.", "jr.", "vs.", "etc.", "e.g.", "i.e.", "cf.", "ca.", "al.",
    "inc.", "ltd.", "co.", "corp.", "dept.", "univ.", "approx.",
    "fig.", "figs.", "eq.", "eqs.", "no.", "nos.", "vol.", "pp.",
    "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.",
    "sep.", "sept.", "oct.", "nov.", "dec.",
    "u.s.", "u.k.", "a.m.", "p.m.",
})


class WeightScheme(enum.Enum):
    """How probability mass is spread over a document's segments."""

    UNIFORM = "uniform"
    LENGTH_PROPORTIONAL = "length"


@dataclass(frozen=True)
class Segment:
    """One sentence-like unit of a document.

    ``text`` is non-empty and carries no leading/trailing whitespace;
    ``char_len`` is its character count (used by length-proportional
    weighting) and is filled in automatically.
    """

    text: str
    char_len: int = -1

    def __post_init__(self) -> None:
        if not self.text or self.text != self.text.strip():
            raise ValueError(f"segment text must be non-empty and trimmed: {self.text!r}")
        if self.char_len < 0:
            object.__setattr__(self, "char_len", len(self.text))
        elif self.char_len != len(self.text):
            raise ValueError(
                f"char_len {self.char_len} does not match text length {len(self.text)}"
            )


def make_weights(segments: list[Segment] | tuple[Segment, ...],
                 scheme: WeightScheme) -> list[float]:
    """Return the probability vector over ``segments`` for ``scheme``.

    Uniform gives every segment mass 1/k; length-proportional gives each
    segment mass proportional to its character count.
    """
    if not segments:
        raise DegenerateDocument("cannot build weights for an empty segment list")
    k = len(segments)
    if scheme is WeightScheme.UNIFORM:
        return [1.0 / k] * k
    total = sum(s.char_len for s in segments)
    return [s.char_len / total for s in segments]


def _is_abbreviation(text: str, period_index: int) -> bool:
    """True if the period at ``period_index`` ends an abbreviation token."""
    start = period_index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    token = text[start:period_index + 1].lstrip("\"'“‘([{«")
    if not token:
        return False
    if token.lower() in ENGLISH_ABBREVIATIONS:
        return True
    # Single uppercase initial, as in "J. Smith".
    return len(token) == 2 and token[0].isupper() and token[0].isalpha()


def segment(text: str, language: str = "en") -> list[Segment]:
    """Split ``text`` into sentence segments.

    Boundaries are terminal punctuation (. ! ? and fullwidth 。 ！ ？)
    followed by whitespace or end of text; fullwidth terminators break
    without trailing whitespace, matching CJK convention. Newlines always
    break. For English, an abbreviation list guards lone periods. If no
    boundary exists the whole text is one segment. Whitespace-only pieces
    are dropped.
    """
    if not text.strip():
        raise DegenerateDocument("empty or whitespace-only input")
    check_abbrev = language.lower().startswith("en")

    pieces: list[str] = []
    start = 0
    i = 0
    n = len(text)

    def flush(end: int) -> None:
        piece = text[start:end].strip()
        if piece:
            pieces.append(piece)

    while i < n:
        ch = text[i]
        if ch == "\n":
            flush(i)
            start = i + 1
            i += 1
            continue
        if ch not in _TERMINATORS:
            i += 1
            continue
        # Absorb a run of terminators ("?!", "。。") and trailing closers.
        term_end = i
        while term_end + 1 < n and text[term_end + 1] in _TERMINATORS:
            term_end += 1
        run_end = term_end
        while run_end + 1 < n and text[run_end + 1] in _TRAILING_CLOSERS:
            run_end += 1
        has_fullwidth = any(text[k] in _FULLWIDTH_TERMINATORS for k in range(i, term_end + 1))
        at_end = run_end + 1 >= n
        followed_by_space = at_end or text[run_end + 1].isspace()
        boundary = has_fullwidth or followed_by_space
        if boundary and not at_end and check_abbrev and term_end == i and ch == ".":
            if _is_abbreviation(text, i):
                boundary = False
        if boundary:
            flush(run_end + 1)
            start = run_end + 1
            i = run_end + 1
        else:
            i += 1
    flush(n)

    if not pieces:
        raise DegenerateDocument("segmentation produced no non-empty segments")
    return [Segment(p) for p in pieces]


@dataclass(frozen=True)
class Document:
    """An ordered list of segments with per-segment probability mass."""

    id: str
    segments: tuple[Segment, ...]
    weights: tuple[float, ...]
    text: str = ""  # original unsegmented text; derived from segments if absent

    def __post_init__(self) -> None:
        if not self.segments:
            raise DegenerateDocument(f"document {self.id!r} has no segments")
        if len(self.weights) != len(self.segments):
            raise ValueError("weights and segments length mismatch")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(self.weights)!r}")
        if not self.text:
            object.__setattr__(self, "text", " ".join(s.text for s in self.segments))

    @property
    def segment_texts(self) -> tuple[str, ...]:
        return tuple(s.text for s in self.segments)

    @classmethod
    def from_text(cls, doc_id: str, text: str, language: str = "en",
                  scheme: WeightScheme = WeightScheme.UNIFORM) -> "Document":
        segs = tuple(segment(text, language))
        return cls(id=doc_id, segments=segs,
                   weights=tuple(make_weights(segs, scheme)), text=text)

    @classmethod
    def from_segments(cls, doc_id: str, texts: list[str] | tuple[str, ...],
                      scheme: WeightScheme = WeightScheme.UNIFORM) -> "Document":
        stripped = [t.strip() for t in texts]
        stripped = [t for t in stripped if t]
        if not stripped:
            raise DegenerateDocument(f"document {doc_id!r} has no non-empty segments")
        segs = tuple(Segment(t) for t in stripped)
        return cls(id=doc_id, segments=segs,
                   weights=tuple(make_weights(segs, scheme)))
