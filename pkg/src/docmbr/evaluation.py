"""System-level metric evaluation: average document utilities, then correlate."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from scipy.stats import kendalltau

from .documents import Document, WeightScheme
from .errors import DegenerateDocument, DegenerateVariance, InputDataError
from .utility import DocUtilityConfig, PairScoreCache, doc_utility

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalInstance:
    instance_id: str
    hypothesis: Document
    reference: Document


@dataclass(frozen=True)
class SystemOutputs:
    """One system's hypothesis documents paired with their references."""

    system_id: str
    instances: tuple[EvalInstance, ...]

    def __post_init__(self) -> None:
        ids = [inst.instance_id for inst in self.instances]
        if len(set(ids)) != len(ids):
            raise ValueError(f"system {self.system_id!r} has duplicate instance ids")


def system_score(sys: SystemOutputs, cfg: DocUtilityConfig,
                 cache: PairScoreCache | None = None) -> float:
    """Mean document utility of the system's hypotheses against references."""
    if not sys.instances:
        raise ValueError(f"system {sys.system_id!r} has no instances")
    total = 0.0
    for inst in sys.instances:
        try:
            total += doc_utility(inst.hypothesis, inst.reference, cfg, cache)
        except Exception as err:
            raise type(err)(f"instance {inst.instance_id!r}: {err}") from err
    return total / len(sys.instances)


def pearson(metric_scores: Mapping[str, float],
            human_scores: Mapping[str, float]) -> float:
    """Sample Pearson correlation over the systems present on both sides."""
    common = sorted(set(metric_scores) & set(human_scores))
    if len(common) < 2:
        raise ValueError(f"need >= 2 common systems, got {len(common)}")
    xs = [metric_scores[s] for s in common]
    ys = [human_scores[s] for s in common]
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    var_x = sum(d * d for d in dx)
    var_y = sum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise DegenerateVariance("constant scores on one side; correlation undefined")
    cov = sum(a * b for a, b in zip(dx, dy))
    return cov / math.sqrt(var_x * var_y)


def kendall_tau(metric_scores: Mapping[str, float],
                human_scores: Mapping[str, float]) -> float:
    """Kendall's tau-b over common systems (reported as a bonus statistic)."""
    common = sorted(set(metric_scores) & set(human_scores))
    if len(common) < 2:
        raise ValueError(f"need >= 2 common systems, got {len(common)}")
    xs = [metric_scores[s] for s in common]
    ys = [human_scores[s] for s in common]
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        raise DegenerateVariance("constant scores on one side; correlation undefined")
    return float(kendalltau(xs, ys).statistic)


def load_references(path: str | Path, language: str,
                    scheme: WeightScheme) -> dict[str, Document]:
    """References JSONL: one {"id": str, "text": str} per line."""
    refs: dict[str, Document] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                instance_id = str(row["id"])
                text = row["text"]
            except (ValueError, KeyError, TypeError) as err:
                raise InputDataError(f"{path}:{lineno}: bad reference row: {err}") from err
            if instance_id in refs:
                raise InputDataError(f"{path}:{lineno}: duplicate reference id {instance_id!r}")
            refs[instance_id] = Document.from_text(f"ref:{instance_id}", text,
                                                   language, scheme)
    if not refs:
        raise InputDataError(f"{path}: no references found")
    return refs


def load_system_outputs(hyp_path: str | Path, references: Mapping[str, Document],
                        language: str, scheme: WeightScheme,
                        ) -> tuple[list[SystemOutputs], int]:
    """Hypotheses JSONL: {"system": str, "id": str, "text": str} per line.

    Instances whose hypothesis fails segmentation or has no reference are
    skipped with a logged count, matching robust harness practice.
    """
    by_system: dict[str, list[EvalInstance]] = {}
    skipped = 0
    with open(hyp_path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                system_id = str(row["system"])
                instance_id = str(row["id"])
                text = row["text"]
            except (ValueError, KeyError, TypeError) as err:
                raise InputDataError(f"{hyp_path}:{lineno}: bad hypothesis row: {err}") from err
            reference = references.get(instance_id)
            if reference is None:
                log.warning("%s:%d: no reference for instance %r; skipped",
                            hyp_path, lineno, instance_id)
                skipped += 1
                continue
            try:
                hyp = Document.from_text(f"{system_id}:{instance_id}", text,
                                         language, scheme)
            except DegenerateDocument:
                log.warning("%s:%d: degenerate hypothesis for instance %r; skipped",
                            hyp_path, lineno, instance_id)
                skipped += 1
                continue
            by_system.setdefault(system_id, []).append(
                EvalInstance(instance_id, hyp, reference))
    systems = [SystemOutputs(sid, tuple(instances))
               for sid, instances in sorted(by_system.items())]
    if not systems:
        raise InputDataError(f"{hyp_path}: no usable hypotheses found")
    return systems, skipped


def load_human_scores(path: str | Path) -> dict[str, float]:
    """Human scores CSV with rows "system,score"; a header row is tolerated."""
    scores: dict[str, float] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise InputDataError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            system_id, raw = row[0].strip(), row[1].strip()
            try:
                value = float(raw)
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise InputDataError(f"{path}:{lineno}: non-numeric score {raw!r}") from None
            scores[system_id] = value
    if not scores:
        raise InputDataError(f"{path}: no human scores found")
    return scores
