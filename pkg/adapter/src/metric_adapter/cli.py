"""Command-line entry point for the adapter service."""

from __future__ import annotations

import argparse
import json
import sys

from .server import AdapterServer
from .service import AdapterConfig, ScoringService


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metric-adapter",
        description="Serve sentence-pair utility scores over HTTP or stdio.")
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--port", type=int, default=None,
                      help="HTTP mode: listen on this port (0 picks a free one)")
    mode.add_argument("--stdio", action="store_true",
                      help="stdio mode: one JSON request per stdin line")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--metric", default="stub",
                        help="default metric when requests omit one (default: stub)")
    parser.add_argument("--model", default=None,
                        help="model identifier enabling the sbert backend")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def run_stdio(service: ScoringService) -> int:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        sys.stdout.write(json.dumps(service.handle_line(line)) + "\n")
        sys.stdout.flush()
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = AdapterConfig(metric=args.metric, model_id=args.model,
                               device=args.device, batch_size=args.batch_size,
                               port=args.port, stdio=args.stdio)
        service = ScoringService(config)
    except (ValueError, RuntimeError) as err:
        sys.stderr.write(json.dumps({"error": str(err)}) + "\n")
        return 2
    if config.stdio:
        return run_stdio(service)
    server = AdapterServer(service, host=args.host, port=config.port)
    sys.stderr.write(f"metric-adapter listening on {server.endpoint}\n")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
