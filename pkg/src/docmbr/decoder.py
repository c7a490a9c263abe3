"""MBR candidate selection over a utility matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .documents import Document, Segment
from .errors import DocMbrError
from .scorers import SentenceUtility
from .utility import DocUtilityConfig, PairScoreCache, doc_utility_plan


@dataclass(frozen=True)
class CandidateSet:
    """The candidates of one decoding instance; also the reference pool."""

    instance_id: str
    candidates: tuple[Document, ...]

    def __post_init__(self) -> None:
        if not self.candidates:
            raise ValueError(f"instance {self.instance_id!r} has no candidates")
        ids = [c.id for c in self.candidates]
        if len(set(ids)) != len(ids):
            raise ValueError(f"instance {self.instance_id!r} has duplicate candidate ids")

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True, eq=False)
class UtilityMatrix:
    """All-pairs document utilities with solver diagnostics.

    ``pair_evaluations`` counts utility evaluations actually performed:
    N(N-1)/2 when symmetry was exploited, N(N-1) otherwise.
    ``nonconverged_pairs`` lists (i, j) whose Sinkhorn run hit the
    iteration cap; their values are used but flagged.
    """

    values: np.ndarray
    pair_evaluations: int
    nonconverged_pairs: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class SelectionResult:
    """The argmax candidate and the per-candidate expected utilities."""

    selected_index: int
    expected_utilities: tuple[float, ...]
    pair_evaluations: int
    nonconverged_pairs: tuple[tuple[int, int], ...] = ()


class PairEvaluationError(DocMbrError):
    """Wraps a failure while evaluating one candidate pair."""

    def __init__(self, instance_id: str, i: int, j: int, cause: Exception) -> None:
        super().__init__(f"instance {instance_id!r}, pair ({i}, {j}): {cause}")
        self.instance_id = instance_id
        self.pair = (i, j)
        self.cause = cause


def compute_utility_matrix(cands: CandidateSet, cfg: DocUtilityConfig,
                           cache: PairScoreCache | None = None,
                           use_symmetry: bool = True) -> UtilityMatrix:
    """Fill the N x N utility matrix, mirroring pairs when symmetry holds.

    The diagonal is fixed to exactly 1 (a document against itself). For
    symmetric configurations each unordered pair is evaluated once and the
    value mirrored bit-for-bit; ``use_symmetry=False`` forces the naive
    all-ordered-pairs path (useful for validation).
    """
    n = len(cands)
    U = np.ones((n, n))
    evaluations = 0
    flagged: list[tuple[int, int]] = []
    symmetric = use_symmetry and cfg.is_symmetric

    def evaluate(i: int, j: int) -> float:
        nonlocal evaluations
        evaluations += 1
        try:
            value, plan = doc_utility_plan(cands.candidates[i], cands.candidates[j],
                                           cfg, cache)
        except DocMbrError as err:
            raise PairEvaluationError(cands.instance_id, i, j, err) from err
        if plan is not None and not plan.converged:
            flagged.append((i, j))
        return value

    for i in range(n):
        for j in range(i + 1, n):
            value = evaluate(i, j)
            U[i, j] = value
            U[j, i] = value if symmetric else evaluate(j, i)
    return UtilityMatrix(values=U, pair_evaluations=evaluations,
                         nonconverged_pairs=tuple(flagged))


def select_from_matrix(matrix: UtilityMatrix) -> SelectionResult:
    """Argmax of row means with lowest-index tie-breaking.

    The self-pair is part of each row mean: the candidate pool doubles as
    the reference pool, so every row includes its own diagonal 1/N term,
    which shifts all means equally and never changes the argmax.
    """
    means = matrix.values.mean(axis=1)
    return SelectionResult(selected_index=int(np.argmax(means)),
                           expected_utilities=tuple(float(v) for v in means),
                           pair_evaluations=matrix.pair_evaluations,
                           nonconverged_pairs=matrix.nonconverged_pairs)


def select(cands: CandidateSet, cfg: DocUtilityConfig,
           cache: PairScoreCache | None = None,
           use_symmetry: bool = True) -> SelectionResult:
    """MBR selection: the candidate with the highest mean utility against all."""
    return select_from_matrix(compute_utility_matrix(cands, cfg, cache, use_symmetry))


def compute_baseline_matrix(cands: CandidateSet, scorer: SentenceUtility,
                            cache: PairScoreCache | None = None) -> UtilityMatrix:
    """Whole-document utility matrix: each candidate scored as one segment."""
    n = len(cands)
    whole = [Segment(" ".join(c.segment_texts)) for c in cands.candidates]
    U = np.ones((n, n))
    evaluations = 0

    def evaluate(i: int, j: int) -> float:
        nonlocal evaluations
        evaluations += 1
        try:
            if cache is not None:
                return cache.get_or_compute(scorer, whole[i], whole[j])
            return scorer.score_pair(whole[i], whole[j])
        except DocMbrError as err:
            raise PairEvaluationError(cands.instance_id, i, j, err) from err

    for i in range(n):
        for j in range(i + 1, n):
            if whole[i].text == whole[j].text:
                continue  # identity shortcut, diagonal convention extended
            U[i, j] = evaluate(i, j)
            U[j, i] = U[i, j] if scorer.is_symmetric else evaluate(j, i)
    return UtilityMatrix(values=U, pair_evaluations=evaluations)


def select_baseline(cands: CandidateSet, scorer: SentenceUtility,
                    cache: PairScoreCache | None = None) -> SelectionResult:
    """Plain MBR over whole documents, with no segmentation or transport."""
    return select_from_matrix(compute_baseline_matrix(cands, scorer, cache))
