"""Clients for the sentence-metric adapter wire protocol.

Two transports are supported: HTTP (``POST <endpoint>/v1/score``) and a
line-delimited stdio mode talking to a spawned subprocess. Both carry the
same JSON payloads:

    request:  {"pairs": [{"hyp": str, "ref": str}, ...], "metric": str}
    response: {"scores": [float, ...]}            # same order as pairs
              {"error": str}                      # stdio failure reporting
"""

from __future__ import annotations

import json
import subprocess
import threading
import time
import urllib.error
import urllib.request
from typing import Sequence

from .errors import AdapterRangeViolation, AdapterUnavailable

TextPair = tuple[str, str]


def _validate_scores(payload: object, n_pairs: int) -> list[float]:
    if not isinstance(payload, dict) or "scores" not in payload:
        raise AdapterUnavailable(f"malformed adapter response: {payload!r}")
    scores = payload["scores"]
    if not isinstance(scores, list) or len(scores) != n_pairs:
        raise AdapterUnavailable(
            f"adapter returned {len(scores) if isinstance(scores, list) else 'non-list'} "
            f"scores for {n_pairs} pairs"
        )
    out: list[float] = []
    for idx, value in enumerate(scores):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            err = AdapterUnavailable(f"non-numeric adapter score at index {idx}: {value!r}")
            err.pair_index = idx
            raise err
        if not 0.0 <= float(value) <= 1.0:
            err = AdapterRangeViolation(
                f"adapter score {value!r} at index {idx} outside [0, 1]"
            )
            err.pair_index = idx
            raise err
        out.append(float(value))
    return out


class AdapterClient:
    """Common interface: score an ordered batch of (hyp, ref) text pairs."""

    def score_texts(self, pairs: Sequence[TextPair]) -> list[float]:
        raise NotImplementedError

    def close(self) -> None:  # pragma: no cover - trivial default
        pass


class HttpAdapterClient(AdapterClient):
    """Scores pairs via ``POST <endpoint>/v1/score`` with bounded retries."""

    def __init__(self, endpoint: str, metric: str = "stub",
                 timeout: float = 10.0, retries: int = 2,
                 backoff: float = 0.1) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.metric = metric
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def score_texts(self, pairs: Sequence[TextPair]) -> list[float]:
        if not pairs:
            return []
        body = json.dumps({
            "pairs": [{"hyp": h, "ref": r} for h, r in pairs],
            "metric": self.metric,
        }).encode("utf-8")
        url = self.endpoint + "/v1/score"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            request = urllib.request.Request(
                url, data=body, headers={"Content-Type": "application/json"})
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
                return _validate_scores(payload, len(pairs))
            except urllib.error.HTTPError as err:
                if err.code == 400:
                    raise AdapterUnavailable(
                        f"adapter rejected request: HTTP 400 {err.read()[:200]!r}"
                    ) from err
                last_error = err
            except (urllib.error.URLError, OSError, ValueError) as err:
                last_error = err
            if attempt < self.retries:
                time.sleep(self.backoff * (2 ** attempt))
        raise AdapterUnavailable(
            f"adapter at {url} unreachable after {self.retries + 1} attempts: {last_error}"
        ) from last_error


class StdioAdapterClient(AdapterClient):
    """Scores pairs over a line-delimited stdio subprocess.

    Requests within one client are serialized by a lock, so ordering within
    a batch is guaranteed by construction. A dead process is respawned up
    to ``retries`` times.
    """

    def __init__(self, command: Sequence[str], metric: str = "stub",
                 retries: int = 1) -> None:
        self.command = list(command)
        self.metric = metric
        self.retries = retries
        self._proc: subprocess.Popen[str] | None = None
        self._lock = threading.Lock()

    def _ensure_process(self) -> subprocess.Popen[str]:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                    text=True, encoding="utf-8", bufsize=1)
            except OSError as err:
                raise AdapterUnavailable(
                    f"cannot spawn adapter command {self.command!r}: {err}") from err
        return self._proc

    def score_texts(self, pairs: Sequence[TextPair]) -> list[float]:
        if not pairs:
            return []
        request = json.dumps({
            "pairs": [{"hyp": h, "ref": r} for h, r in pairs],
            "metric": self.metric,
        })
        with self._lock:
            last_error: Exception | None = None
            for _ in range(self.retries + 1):
                proc = self._ensure_process()
                try:
                    assert proc.stdin is not None and proc.stdout is not None
                    proc.stdin.write(request + "\n")
                    proc.stdin.flush()
                    line = proc.stdout.readline()
                except (BrokenPipeError, OSError) as err:
                    last_error = err
                    self._kill()
                    continue
                if not line:
                    last_error = AdapterUnavailable("adapter process closed its stdout")
                    self._kill()
                    continue
                try:
                    payload = json.loads(line)
                except ValueError as err:
                    raise AdapterUnavailable(
                        f"non-JSON adapter line: {line[:200]!r}") from err
                if isinstance(payload, dict) and "error" in payload:
                    raise AdapterUnavailable(f"adapter error: {payload['error']}")
                return _validate_scores(payload, len(pairs))
            raise AdapterUnavailable(
                f"stdio adapter failed after {self.retries + 1} attempts: {last_error}"
            ) from last_error

    def _kill(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
            except OSError:
                pass
            self._proc = None

    def close(self) -> None:
        with self._lock:
            if self._proc is not None and self._proc.stdin is not None:
                try:
                    self._proc.stdin.close()
                    self._proc.wait(timeout=5)
                except (OSError, subprocess.TimeoutExpired):
                    self._kill()
            self._proc = None
