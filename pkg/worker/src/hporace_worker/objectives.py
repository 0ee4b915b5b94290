"""Stub objectives served over the wire.

``mock-ser`` mirrors the engine's built-in mock fine-tuning landscape; a
real deployment would replace ``evaluate`` with the actual training-and-
validation call and report the measured metric and duration instead.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass


def mock_ser_score(lr: float, epochs: int, unfreeze: int, maxlen: int) -> float:
    """Mock fine-tuning score; must stay formula-identical to the engine's."""
    penalty = (
        0.25 * (math.log10(lr) - math.log10(2.6e-5)) ** 2
        + 0.01 * abs(epochs - 8)
        + 0.005 * abs(unfreeze - 4)
        + 0.02 * (1.0 if maxlen < 64000 else 0.0)
    )
    return min(1.0, max(0.0, 0.97 - penalty))


@dataclass(frozen=True)
class WorkerConfig:
    objective: str = "mock-ser"  # mock-ser | echo | sleep
    noise_sd: float = 0.0
    duration_s: float = 60.0
    sleep_s: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.objective not in ("mock-ser", "echo", "sleep"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.noise_sd < 0:
            raise ValueError("noise must be >= 0")


def evaluate(config: WorkerConfig, trial: int, params: dict) -> dict:
    """Score one request; raises KeyError/TypeError/ValueError on bad params."""
    if config.objective == "echo":
        return {"score": float(params["lr"]) * 1e4, "duration_s": config.duration_s, "status": "ok"}
    if config.objective == "sleep":
        time.sleep(config.sleep_s)
        return {"score": 0.0, "duration_s": config.duration_s, "status": "ok"}
    score = mock_ser_score(
        float(params["lr"]), int(params["epochs"]), int(params["unfreeze"]), int(params["maxlen"])
    )
    if config.noise_sd > 0:
        # Seeded per trial index: repeating a request repeats its noise.
        noise = random.Random((config.seed << 20) ^ trial).gauss(0.0, config.noise_sd)
        score = min(1.0, max(0.0, score + noise))
    return {"score": score, "duration_s": config.duration_s, "status": "ok"}
