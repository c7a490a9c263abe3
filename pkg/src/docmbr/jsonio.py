"""JSON serialization with reproducible float formatting, plus JSONL input."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Iterable

from .decoder import CandidateSet
from .documents import Document, WeightScheme
from .errors import InputDataError


def format_float(value: float) -> str:
    """Serialize a float with 17 significant digits (round-trip exact)."""
    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite float {value!r}")
    text = format(value, ".17g")
    # Keep it a JSON number token ("1" is fine, "inf" would not be).
    return text


def to_json(obj, sort_keys: bool = False) -> str:
    """Compact JSON text; floats rendered via :func:`format_float`.

    The stdlib encoder does not allow custom float formatting, so this is a
    small recursive writer for the plain data this package emits.
    """
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v, sort_keys) for v in obj) + "]"
    if isinstance(obj, dict):
        keys = sorted(obj) if sort_keys else obj
        items = (f"{json.dumps(str(k), ensure_ascii=False)}: {to_json(obj[k], sort_keys)}"
                 for k in keys)
        return "{" + ", ".join(items) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def config_fingerprint(description: dict) -> str:
    """SHA-256 over the canonical JSON form of a config description."""
    canonical = to_json(description, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(to_json(row))
            handle.write("\n")


def read_candidate_sets(path: str | Path, language: str = "en",
                        scheme: WeightScheme = WeightScheme.UNIFORM,
                        ) -> list[CandidateSet]:
    """Read decoding instances from JSONL.

    Each line is either {"id": str, "source": str|null, "candidates":
    [str, ...]} or the pre-segmented form {"id": str,
    "candidates_segmented": [[str, ...], ...]} for callers that run their
    own sentencizer upstream.
    """
    instances: list[CandidateSet] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except ValueError as err:
                raise InputDataError(f"{path}:{lineno}: invalid JSON: {err}") from err
            if not isinstance(row, dict) or "id" not in row:
                raise InputDataError(f"{path}:{lineno}: missing 'id'")
            instance_id = str(row["id"])
            if instance_id in seen_ids:
                raise InputDataError(f"{path}:{lineno}: duplicate instance id {instance_id!r}")
            seen_ids.add(instance_id)
            try:
                candidates = _parse_candidates(row, language, scheme)
            except InputDataError:
                raise
            except Exception as err:
                raise InputDataError(f"{path}:{lineno}: {err}") from err
            instances.append(CandidateSet(instance_id=instance_id,
                                          candidates=tuple(candidates)))
    if not instances:
        raise InputDataError(f"{path}: no instances found")
    return instances


def _parse_candidates(row: dict, language: str,
                      scheme: WeightScheme) -> list[Document]:
    if "candidates_segmented" in row:
        segmented = row["candidates_segmented"]
        if (not isinstance(segmented, list) or not segmented
                or not all(isinstance(c, list) and c
                           and all(isinstance(s, str) for s in c)
                           for c in segmented)):
            raise InputDataError("'candidates_segmented' must be a non-empty "
                                 "list of non-empty string lists")
        return [Document.from_segments(str(idx), texts, scheme)
                for idx, texts in enumerate(segmented)]
    candidates = row.get("candidates")
    if (not isinstance(candidates, list) or not candidates
            or not all(isinstance(c, str) for c in candidates)):
        raise InputDataError("'candidates' must be a non-empty list of strings")
    return [Document.from_text(str(idx), text, language, scheme)
            for idx, text in enumerate(candidates)]
