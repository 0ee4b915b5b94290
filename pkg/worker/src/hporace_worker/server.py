"""The serve loop: handshake, then one JSON response line per request line.

Every write is flushed immediately; the loop is single-threaded so at
most one request is ever in flight, matching the engine's discipline.
"""

from __future__ import annotations

import json
from typing import IO

from .objectives import WorkerConfig, evaluate

PROTOCOL_VERSION = 1


def _reply(stdout: IO[str], payload: dict) -> None:
    stdout.write(json.dumps(payload, separators=(",", ":")) + "\n")
    stdout.flush()


def serve(stdin: IO[str], stdout: IO[str], config: WorkerConfig) -> int:
    """Run until stdin closes. Returns a process exit code."""
    hello_line = stdin.readline()
    if not hello_line:
        return 1
    try:
        hello = json.loads(hello_line)["hello"]
        protocol = hello["protocol"]
    except (json.JSONDecodeError, KeyError, TypeError):
        _reply(stdout, {"ready": False, "detail": "malformed handshake"})
        return 1
    if protocol != PROTOCOL_VERSION:
        _reply(stdout, {"ready": False, "detail": f"unsupported protocol {protocol!r}"})
        return 1
    _reply(stdout, {"ready": True})

    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            result = evaluate(config, int(request["trial"]), request["params"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            _reply(stdout, {"status": "failed", "detail": f"bad request: {exc}"})
            continue
        _reply(stdout, result)
    return 0
