"""Exception types shared across the engine."""

from __future__ import annotations


class DocMbrError(Exception):
    """Base class for engine errors.

    ``pair_index`` is set when the error surfaced while scoring a batch of
    segment pairs, so callers can tell which pair failed.
    """

    pair_index: int | None = None


class DegenerateDocument(DocMbrError):
    """Input text is empty or whitespace-only, or a document has no segments."""


class InvalidRange(DocMbrError):
    """A rescaling range with lo >= hi."""


class MissingEmbedding(DocMbrError):
    """A segment text has no entry in the embedding table."""


class AdapterError(DocMbrError):
    """Base class for metric-adapter failures."""


class AdapterUnavailable(AdapterError):
    """The adapter could not be reached or returned a malformed response."""


class AdapterRangeViolation(AdapterError):
    """The adapter returned a score outside [0, 1]."""


class SolverNonconvergence(DocMbrError):
    """The exact-transport pivoting safeguard was exceeded (internal bug signal)."""


class DegenerateVariance(DocMbrError):
    """Correlation requested but one side of the data is constant."""


class InputDataError(DocMbrError):
    """Malformed input file (JSONL/CSV schema violations)."""
