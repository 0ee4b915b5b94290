"""Objective boundary: built-in synthetic objectives and external workers.

Synthetic objectives are pure functions of (config, generator) with a
simulated duration model, so benchmark timing is reproducible without the
original training workload. External objectives run as a subprocess
speaking newline-delimited JSON over stdin/stdout with a strict
one-request-in-flight discipline.
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ConfigError, ProtocolError, SpaceError
from .space import ParamDef, SearchSpace, space_to_dict, table2_space

PROTOCOL_VERSION = 1
HANDSHAKE_TIMEOUT_S = 30.0

OK = "ok"
FAILED = "failed"
TIMEOUT = "timeout"


@dataclass(frozen=True)
class ObjectiveRequest:
    trial_index: int
    params: dict
    deadline_s: float | None = None


@dataclass(frozen=True)
class ObjectiveResponse:
    score: float | None
    duration_s: float | None = None
    status: str = OK
    detail: str | None = None

    def __post_init__(self):
        if self.status == OK and (self.score is None or not math.isfinite(self.score)):
            raise ValueError(f"ok responses need a finite score, got {self.score!r}")


# -- synthetic objectives ---------------------------------------------------------


def mock_ser_score(lr: float, epochs: int, unfreeze: int, maxlen: int) -> float:
    """Noise-free mock fine-tuning score; peak 0.97 at lr=2.6e-5/8/4/maxlen>=64k."""
    penalty = (
        0.25 * (math.log10(lr) - math.log10(2.6e-5)) ** 2
        + 0.01 * abs(epochs - 8)
        + 0.005 * abs(unfreeze - 4)
        + 0.02 * (1.0 if maxlen < 64000 else 0.0)
    )
    return min(1.0, max(0.0, 0.97 - penalty))


def branin(x1: float, x2: float) -> float:
    """Branin function; global minimum 0.397887 at (-pi, 12.275), (pi, 2.275), (9.42478, 2.475)."""
    a, b, c = 1.0, 5.1 / (4.0 * math.pi**2), 5.0 / math.pi
    r, s, t = 6.0, 10.0, 1.0 / (8.0 * math.pi)
    return a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1.0 - t) * math.cos(x1) + s


class SyntheticObjective:
    """Deterministic landscape plus optional Gaussian score noise.

    ``duration_s`` may be a constant or a callable taking the params dict,
    giving each trial its simulated wall-clock cost.
    """

    kind: str = ""

    def __init__(self, noise_sd: float = 0.0, duration_s: float | Callable[[dict], float] = 1.0):
        if noise_sd < 0:
            raise ConfigError(f"noise_sd must be >= 0, got {noise_sd}")
        self.noise_sd = noise_sd
        self._duration = duration_s

    def space(self) -> SearchSpace:
        raise NotImplementedError

    def raw_score(self, params: dict) -> float:
        raise NotImplementedError

    def duration_for(self, params: dict) -> float:
        return float(self._duration(params)) if callable(self._duration) else float(self._duration)

    def evaluate(self, request: ObjectiveRequest, rng: np.random.Generator) -> ObjectiveResponse:
        try:
            self.space().from_params(request.params)
            score = self.raw_score(request.params)
        except SpaceError as exc:
            return ObjectiveResponse(score=None, status=FAILED, detail=str(exc))
        if self.noise_sd > 0:
            score += rng.normal(0.0, self.noise_sd)
        return ObjectiveResponse(score=float(score), duration_s=self.duration_for(request.params))


class Quadratic1d(SyntheticObjective):
    """Concave parabola -(x - vertex)^2 on the unit interval; maximum 0 at the vertex."""

    kind = "quadratic_1d"

    def __init__(self, vertex: float = 0.7, **kwargs):
        super().__init__(**kwargs)
        self.vertex = vertex

    def space(self) -> SearchSpace:
        return SearchSpace((ParamDef("x", "uniform", lo=0.0, hi=1.0),))

    def raw_score(self, params: dict) -> float:
        return -((params["x"] - self.vertex) ** 2)


class Branin2d(SyntheticObjective):
    """Negated Branin on [-5, 10] x [0, 15]; maximum -0.397887."""

    kind = "branin_2d"

    def space(self) -> SearchSpace:
        return SearchSpace(
            (ParamDef("x1", "uniform", lo=-5.0, hi=10.0), ParamDef("x2", "uniform", lo=0.0, hi=15.0))
        )

    def raw_score(self, params: dict) -> float:
        return -branin(params["x1"], params["x2"])


class MockSer(SyntheticObjective):
    """Mock fine-tuning objective on the table2.json space; scores clamped to [0, 1]."""

    kind = "mock_ser"

    def __init__(self, noise_sd: float = 0.0, duration_s: float | Callable[[dict], float] = 60.0):
        super().__init__(noise_sd=noise_sd, duration_s=duration_s)

    def space(self) -> SearchSpace:
        return table2_space()

    def raw_score(self, params: dict) -> float:
        return mock_ser_score(params["lr"], params["epochs"], params["unfreeze"], params["maxlen"])

    def evaluate(self, request: ObjectiveRequest, rng: np.random.Generator) -> ObjectiveResponse:
        response = super().evaluate(request, rng)
        if response.status != OK:
            return response
        return ObjectiveResponse(
            score=min(1.0, max(0.0, response.score)),
            duration_s=response.duration_s,
            status=OK,
        )


SYNTHETIC_KINDS = {cls.kind: cls for cls in (Quadratic1d, Branin2d, MockSer)}


# -- external worker --------------------------------------------------------------


class _LineReader:
    """Background reader turning a pipe into a queue of lines (None = EOF)."""

    def __init__(self, stream):
        self._queue: queue.Queue = queue.Queue()
        self._thread = threading.Thread(target=self._pump, args=(stream,), daemon=True)
        self._thread.start()

    def _pump(self, stream):
        for line in stream:
            self._queue.put(line)
        self._queue.put(None)

    def read(self, timeout: float | None):
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError from None


class ExternalObjective:
    """Client for the subprocess objective protocol.

    One worker per run, one request in flight. A trial that exceeds its
    deadline is marked timeout and the worker is replaced before the next
    trial; a crashed worker is replaced once per run, after which the run
    aborts.
    """

    def __init__(
        self,
        cmd: list[str] | str,
        space: SearchSpace,
        deadline_s: float | None = None,
    ):
        self.cmd = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        self.space = space
        self.deadline_s = deadline_s
        self._proc: subprocess.Popen | None = None
        self._reader: _LineReader | None = None
        self._dead_by_crash = False
        self._crash_restarts = 0

    # -- lifecycle

    def start(self) -> None:
        try:
            self._proc = subprocess.Popen(
                self.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot launch worker {self.cmd!r}: {exc}") from exc
        self._reader = _LineReader(self._proc.stdout)
        hello = {"hello": {"space": space_to_dict(self.space), "protocol": PROTOCOL_VERSION}}
        self._send(hello)
        try:
            line = self._reader.read(HANDSHAKE_TIMEOUT_S)
        except TimeoutError:
            self._kill()
            raise ProtocolError("worker did not answer the handshake in time") from None
        if line is None:
            raise ProtocolError("worker exited during handshake")
        try:
            ready = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"invalid handshake reply: {line!r}") from exc
        if ready.get("ready") is not True:
            raise ProtocolError(f"worker not ready: {line.strip()!r}")

    def close(self) -> None:
        self._kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _kill(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()
        self._proc = None
        self._reader = None

    def _send(self, obj: dict) -> None:
        assert self._proc is not None and self._proc.stdin is not None
        self._proc.stdin.write(json.dumps(obj, separators=(",", ":")) + "\n")
        self._proc.stdin.flush()

    def _ensure_alive(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            return
        if self._dead_by_crash:
            if self._crash_restarts >= 1:
                raise ProtocolError("worker crashed again after one restart; aborting run")
            self._crash_restarts += 1
            self._dead_by_crash = False
        self._kill()
        self.start()

    # -- protocol

    def evaluate(self, request: ObjectiveRequest, rng=None) -> ObjectiveResponse:
        self._ensure_alive()
        deadline = request.deadline_s if request.deadline_s is not None else self.deadline_s
        wire: dict = {"trial": request.trial_index, "params": request.params}
        if deadline is not None:
            wire["deadline_s"] = deadline
        try:
            self._send(wire)
        except (BrokenPipeError, OSError):
            self._dead_by_crash = True
            return ObjectiveResponse(score=None, status=FAILED, detail="worker pipe closed")
        try:
            line = self._reader.read(deadline)
        except TimeoutError:
            self._kill()  # replaced before the next trial; not counted as a crash
            return ObjectiveResponse(
                score=None, status=TIMEOUT, detail=f"no response within {deadline}s"
            )
        if line is None:
            self._dead_by_crash = True
            return ObjectiveResponse(score=None, status=FAILED, detail="worker exited mid-trial")
        try:
            reply = json.loads(line)
            if not isinstance(reply, dict):
                raise ValueError("response is not an object")
        except (json.JSONDecodeError, ValueError) as exc:
            # Pairing is broken; retire this worker.
            self._kill()
            self._dead_by_crash = True
            return ObjectiveResponse(
                score=None, status=FAILED, detail=f"malformed response line: {exc}"
            )
        status = reply.get("status", OK)
        if status != OK:
            return ObjectiveResponse(
                score=None, status=FAILED, detail=str(reply.get("detail", "worker reported failure"))
            )
        score = reply.get("score")
        if not isinstance(score, (int, float)) or not math.isfinite(score):
            self._kill()
            self._dead_by_crash = True
            return ObjectiveResponse(
                score=None, status=FAILED, detail=f"ok response without finite score: {line.strip()!r}"
            )
        duration = reply.get("duration_s")
        return ObjectiveResponse(
            score=float(score),
            duration_s=float(duration) if duration is not None else None,
        )


# -- construction from run configs -------------------------------------------------


def objective_factory(doc: dict, space: SearchSpace | None) -> Callable[[], object]:
    """Factory building a fresh objective per run from its JSON description."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError('objective description needs a "kind" field')
    kind = doc["kind"]
    if kind in SYNTHETIC_KINDS:
        cls = SYNTHETIC_KINDS[kind]
        kwargs = {k: v for k, v in doc.items() if k != "kind"}
        try:
            probe = cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad options for objective {kind!r}: {exc}") from exc
        if space is not None and space != probe.space():
            raise ConfigError(f"objective {kind!r} is defined on its own space, which differs "
                              f"from the configured one")
        return lambda: cls(**kwargs)
    if kind == "external":
        if "cmd" not in doc:
            raise ConfigError('external objective needs a "cmd" field')
        if space is None:
            raise ConfigError("external objectives require an explicit space")
        cmd, deadline = doc["cmd"], doc.get("deadline_s")
        return lambda: ExternalObjective(cmd, space, deadline_s=deadline)
    raise ConfigError(f"unknown objective kind {kind!r}")


def default_space_for(doc: dict) -> SearchSpace | None:
    """Canonical space of a synthetic objective, None for external ones."""
    kind = doc.get("kind")
    if kind in SYNTHETIC_KINDS:
        cls = SYNTHETIC_KINDS[kind]
        kwargs = {k: v for k, v in doc.items() if k != "kind"}
        return cls(**kwargs).space()
    return None
