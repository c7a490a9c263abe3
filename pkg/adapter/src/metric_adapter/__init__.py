"""Sentence-metric scoring service speaking the docmbr adapter protocol."""

__version__ = "0.1.0"

from .metrics import MetricBackend, SbertCosine, StubCosine, WideStubCosine, build_registry
from .server import AdapterServer
from .service import AdapterConfig, BadRequest, ScoringService

__all__ = [
    "__version__",
    "MetricBackend", "SbertCosine", "StubCosine", "WideStubCosine",
    "build_registry", "AdapterServer", "AdapterConfig", "BadRequest",
    "ScoringService",
]
