"""Command line: `hporace-worker --objective mock-ser --noise 0.0`."""

from __future__ import annotations

import argparse
import sys

from .objectives import WorkerConfig
from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="stdio objective worker")
    parser.add_argument("--objective", default="mock-ser", choices=["mock-ser", "echo", "sleep"])
    parser.add_argument("--noise", type=float, default=0.0, help="score noise std dev")
    parser.add_argument("--duration", type=float, default=60.0, help="reported duration_s")
    parser.add_argument("--sleep", type=float, default=5.0, help="sleep objective delay")
    parser.add_argument("--seed", type=int, default=0, help="noise seed")
    args = parser.parse_args(argv)
    config = WorkerConfig(
        objective=args.objective,
        noise_sd=args.noise,
        duration_s=args.duration,
        sleep_s=args.sleep,
        seed=args.seed,
    )
    return serve(sys.stdin, sys.stdout, config)


if __name__ == "__main__":
    sys.exit(main())
