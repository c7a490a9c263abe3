"""Document-level MBR decoding with optimal-transport utilities.

Candidates are documents; each is split into sentence segments carrying
probability mass, and the utility of one document against another is
one minus an optimal-transport cost over sentence-pair scores. MBR then
selects the candidate with the highest mean utility against the pool.
"""

__version__ = "0.1.0"

from .adapter import AdapterClient, HttpAdapterClient, StdioAdapterClient
from .decoder import (CandidateSet, SelectionResult, UtilityMatrix,
                      compute_baseline_matrix, compute_utility_matrix, select,
                      select_baseline, select_from_matrix)
from .documents import (Document, Segment, WeightScheme, make_weights, segment)
from .errors import (AdapterRangeViolation, AdapterUnavailable,
                     DegenerateDocument, DegenerateVariance, DocMbrError,
                     InputDataError, InvalidRange, MissingEmbedding,
                     SolverNonconvergence)
from .evaluation import (EvalInstance, SystemOutputs, kendall_tau, pearson,
                         system_score)
from .scorers import (AdapterScore, ChrF, EmbeddingCosine, EmbeddingTable,
                      ExactMatch, SentenceBleu, SentenceUtility, TokenF1,
                      batch_score, rescale_lower_better, score_pair)
from .transport import (EntropicParams, TransportPlan, solve_ewd, solve_la,
                        solve_wd)
from .utility import (DocUtilityConfig, Formulation, PairScoreCache,
                      build_cost_matrix, doc_utility, doc_utility_plan)

__all__ = [
    "__version__",
    "AdapterClient", "HttpAdapterClient", "StdioAdapterClient",
    "CandidateSet", "SelectionResult", "UtilityMatrix",
    "compute_baseline_matrix", "compute_utility_matrix", "select",
    "select_baseline", "select_from_matrix",
    "Document", "Segment", "WeightScheme", "make_weights", "segment",
    "AdapterRangeViolation", "AdapterUnavailable", "DegenerateDocument",
    "DegenerateVariance", "DocMbrError", "InputDataError", "InvalidRange",
    "MissingEmbedding", "SolverNonconvergence",
    "EvalInstance", "SystemOutputs", "kendall_tau", "pearson", "system_score",
    "AdapterScore", "ChrF", "EmbeddingCosine", "EmbeddingTable", "ExactMatch",
    "SentenceBleu", "SentenceUtility", "TokenF1", "batch_score",
    "rescale_lower_better", "score_pair",
    "EntropicParams", "TransportPlan", "solve_ewd", "solve_la", "solve_wd",
    "DocUtilityConfig", "Formulation", "PairScoreCache", "build_cost_matrix",
    "doc_utility", "doc_utility_plan",
]
