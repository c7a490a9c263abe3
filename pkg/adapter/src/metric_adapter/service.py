"""The wire protocol, shared by the HTTP and stdio transports.

Request:  {"pairs": [{"hyp": str, "ref": str}, ...], "metric": str}
Response: {"scores": [float, ...]}  with one score per pair, in order,
          every value clamped into [0, 1] before it leaves the adapter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .metrics import MetricBackend, build_registry

PROTOCOL_VERSION = "1"


class BadRequest(Exception):
    """The request violates the protocol schema."""


@dataclass(frozen=True)
class AdapterConfig:
    """Service settings; exactly one of HTTP port or stdio mode is active."""

    metric: str = "stub"
    model_id: str | None = None
    device: str = "cpu"
    batch_size: int = 32
    port: int | None = None
    stdio: bool = False

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if (self.port is None) == (not self.stdio):
            raise ValueError("exactly one transport mode must be active "
                             "(give a port or set stdio)")


class ScoringService:
    """Validates requests, dispatches to a backend, clamps the scores."""

    def __init__(self, config: AdapterConfig,
                 registry: Mapping[str, MetricBackend] | None = None) -> None:
        self.config = config
        self.registry = dict(registry) if registry is not None else build_registry(
            config.model_id, config.device, config.batch_size)
        if config.metric not in self.registry:
            raise ValueError(f"unknown metric {config.metric!r}; "
                             f"available: {sorted(self.registry)}")

    def parse_pairs(self, payload: object) -> tuple[list[tuple[str, str]], str]:
        if not isinstance(payload, dict):
            raise BadRequest("request body must be a JSON object")
        raw_pairs = payload.get("pairs")
        if not isinstance(raw_pairs, list) or not raw_pairs:
            raise BadRequest("'pairs' must be a non-empty list")
        pairs: list[tuple[str, str]] = []
        for idx, item in enumerate(raw_pairs):
            if (not isinstance(item, dict)
                    or not isinstance(item.get("hyp"), str)
                    or not isinstance(item.get("ref"), str)):
                raise BadRequest(f"pair {idx} must be an object with string "
                                 "'hyp' and 'ref'")
            pairs.append((item["hyp"], item["ref"]))
        metric = payload.get("metric", self.config.metric)
        if not isinstance(metric, str):
            raise BadRequest("'metric' must be a string")
        if metric not in self.registry:
            raise BadRequest(f"unknown metric {metric!r}; "
                             f"available: {sorted(self.registry)}")
        return pairs, metric

    def score(self, pairs: Sequence[tuple[str, str]], metric: str) -> list[float]:
        backend = self.registry[metric]
        scores: list[float] = []
        for offset in range(0, len(pairs), self.config.batch_size):
            chunk = pairs[offset:offset + self.config.batch_size]
            raw = backend.score_texts(chunk)
            if len(raw) != len(chunk):
                raise RuntimeError(f"backend {metric!r} returned {len(raw)} scores "
                                   f"for {len(chunk)} pairs")
            # Clamp here, not in clients: the wire contract is strict [0, 1].
            scores.extend(min(max(float(v), 0.0), 1.0) for v in raw)
        return scores

    def handle_request(self, payload: object) -> dict:
        pairs, metric = self.parse_pairs(payload)
        return {"scores": self.score(pairs, metric)}

    def handle_line(self, line: str) -> dict:
        """Stdio mode: one JSON request per line, errors reported in-band."""
        try:
            payload = json.loads(line)
        except ValueError as err:
            return {"error": f"invalid JSON: {err}"}
        try:
            return self.handle_request(payload)
        except BadRequest as err:
            return {"error": str(err)}
        except Exception as err:  # model failure: report, keep serving
            return {"error": f"scoring failed: {err}"}

    def health(self) -> dict:
        return {"metric": self.config.metric,
                "metrics_available": sorted(self.registry),
                "version": PROTOCOL_VERSION}
