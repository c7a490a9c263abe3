"""Document-pair utility: one minus the transport cost between documents."""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass

import numpy as np

from .documents import Document, WeightScheme, make_weights
from .scorers import SentenceUtility
from .transport import EntropicParams, TransportPlan, solve_ewd, solve_la, solve_wd


class Formulation(enum.Enum):
    """Which transport objective turns segment costs into a document cost."""

    LA = "la"
    WD = "wd"
    EWD = "ewd"


class PairScoreCache:
    """Memoizes sentence-pair scores within one decoding instance.

    Keys combine the scorer's cache key with the two segment texts; for
    scorers declared symmetric the text pair is stored order-independently.
    Writes are idempotent, so concurrent insertion of the same key is safe.
    """

    def __init__(self) -> None:
        self._store: dict[tuple[str, str, str], float] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._store)

    def get_or_compute(self, scorer: SentenceUtility, a, b) -> float:
        if scorer.is_symmetric and b.text < a.text:
            key = (scorer.cache_key, b.text, a.text)
        else:
            key = (scorer.cache_key, a.text, b.text)
        hit = self._store.get(key)
        if hit is not None:
            return hit
        value = scorer.score_pair(a, b)
        with self._lock:
            self._store.setdefault(key, value)
        return value


@dataclass(frozen=True)
class DocUtilityConfig:
    """Settings assembling a document utility from its three ingredients."""

    sent_utility: SentenceUtility
    formulation: Formulation = Formulation.WD
    weight_scheme: WeightScheme = WeightScheme.UNIFORM
    entropic: EntropicParams | None = None
    include_kl_in_utility: bool = True

    def __post_init__(self) -> None:
        if self.formulation is Formulation.EWD and self.entropic is None:
            raise ValueError("EWD requires entropic parameters")
        if self.formulation is not Formulation.EWD and self.entropic is not None:
            raise ValueError(f"entropic parameters are only valid with EWD, "
                             f"not {self.formulation.value}")

    @property
    def is_symmetric(self) -> bool:
        """Whether u(h, y) == u(y, h) is guaranteed for this configuration."""
        return self.formulation is not Formulation.LA and self.sent_utility.is_symmetric

    def describe(self) -> dict:
        """Stable description used for config fingerprints and manifests."""
        out: dict = {
            "formulation": self.formulation.value,
            "weight_scheme": self.weight_scheme.value,
            "sent_utility": self.sent_utility.cache_key,
        }
        if self.entropic is not None:
            out["epsilon"] = self.entropic.epsilon
            out["sinkhorn_max_iterations"] = self.entropic.max_iterations
            out["sinkhorn_tolerance"] = self.entropic.tolerance
            out["include_kl_in_utility"] = self.include_kl_in_utility
        return out


def build_cost_matrix(h: Document, y: Document, scorer: SentenceUtility,
                      cache: PairScoreCache | None = None) -> np.ndarray:
    """Pairwise costs ``1 - u_s(h_i, y_j)``, clamped into [0, 1]."""
    m = len(h.segments)
    n = len(y.segments)
    C = np.empty((m, n))
    for i, seg_h in enumerate(h.segments):
        for j, seg_y in enumerate(y.segments):
            if cache is not None:
                score = cache.get_or_compute(scorer, seg_h, seg_y)
            else:
                score = scorer.score_pair(seg_h, seg_y)
            C[i, j] = 1.0 - score
    return np.clip(C, 0.0, 1.0)


def _solve(C: np.ndarray, wh, wy, cfg: DocUtilityConfig) -> TransportPlan:
    if cfg.formulation is Formulation.LA:
        return solve_la(C, wh, wy)
    if cfg.formulation is Formulation.WD:
        return solve_wd(C, wh, wy)
    assert cfg.entropic is not None
    return solve_ewd(C, wh, wy, cfg.entropic)


def doc_utility_plan(h: Document, y: Document, cfg: DocUtilityConfig,
                     cache: PairScoreCache | None = None,
                     ) -> tuple[float, TransportPlan | None]:
    """Document utility plus the transport plan that produced it.

    Self-pairs (same object, or identical segment texts) short-circuit to
    utility 1.0 without invoking a solver, in which case the plan is None.
    For LA/WD the utility is ``1 - objective``; for EWD the KL penalty is
    added to the cost when the config says so. EWD utilities are never
    clamped.
    """
    if h is y or h.segment_texts == y.segment_texts:
        return 1.0, None
    C = build_cost_matrix(h, y, cfg.sent_utility, cache)
    wh = make_weights(h.segments, cfg.weight_scheme)
    wy = make_weights(y.segments, cfg.weight_scheme)
    plan = _solve(C, wh, wy, cfg)
    cost = plan.objective
    if cfg.formulation is Formulation.EWD and cfg.include_kl_in_utility:
        cost = plan.total_objective
    return 1.0 - cost, plan


def doc_utility(h: Document, y: Document, cfg: DocUtilityConfig,
                cache: PairScoreCache | None = None) -> float:
    """Utility ``1 - OT`` of hypothesis document ``h`` against reference ``y``."""
    value, _ = doc_utility_plan(h, y, cfg, cache)
    return value
