"""Command-line interface: run, race, report, grid-count, validate-space.

Exit codes: 0 success, 2 configuration problems, 3 objective/protocol
failures, 4 corrupt run logs. Flags override config-file values and the
effective configuration is echoed into the run directory.
"""

from __future__ import annotations

import contextlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from . import engine, metrics
from .exceptions import (
    ConfigError,
    HporaceError,
    LogParseError,
    MetricError,
    ProtocolError,
    RunError,
    SpaceError,
)
from .objectives import default_space_for, objective_factory
from .space import SearchSpace, grid_size, load_space, space_from_dict, space_to_dict
from .trials import load_history


@contextlib.contextmanager
def _exit_codes():
    try:
        yield
    except LogParseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(4)
    except (ProtocolError, RunError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except (ConfigError, SpaceError, MetricError, HporaceError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


def _load_json(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def _dump_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _resolve_space(config: dict, config_dir: Path) -> SearchSpace:
    if "space" in config and config["space"]:
        return load_space(config_dir / config["space"])
    space = default_space_for(config.get("objective", {}))
    if space is None:
        raise ConfigError('config needs a "space" path (objective has no built-in space)')
    return space


def _apply_overrides(config: dict, seed, budget, out_dir, worker) -> dict:
    config = json.loads(json.dumps(config))  # deep copy
    specs = config.get("optimizers", [])
    if "optimizer" in config:
        specs = specs + [config["optimizer"]]
    for spec in specs:
        if seed is not None:
            spec["seed"] = seed
        if budget is not None:
            spec["budget"] = budget
    if out_dir is not None:
        config["out_dir"] = str(out_dir)
    if worker is not None:
        objective = config.get("objective", {})
        config["objective"] = {
            "kind": "external",
            "cmd": worker,
            **({"deadline_s": objective["deadline_s"]} if "deadline_s" in objective else {}),
        }
    return config


def _new_run_dir(base: Path, seed: int) -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    run_id = f"{stamp}-s{seed}"
    path = base / run_id
    counter = 1
    while path.exists():
        counter += 1
        path = base / f"{run_id}-{counter}"
    path.mkdir(parents=True)
    return path


def _result_doc(space: SearchSpace, result: engine.RunResult) -> dict:
    best = result.best_trial
    return {
        "optimizer": engine.spec_to_dict(result.spec),
        "run_seed": result.run_seed,
        "repeat": result.repeat,
        "space": space_to_dict(space),
        "trials": len(result.history),
        "best": None if best is None else {
            "score": best.score,
            "trial": best.index,
            "params": space.to_params(best.config),
        },
        "wall_clock_s": result.wall_clock_s,
        "error": result.error,
    }


@click.group()
def main():
    """Optimizer racing over pluggable objectives."""


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=None, help="Override the optimizer seed.")
@click.option("--budget", type=int, default=None, help="Override the trial budget.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None)
@click.option("--worker", "worker_cmd", default=None, help="External objective launch line.")
def cmd_run(config_path: Path, seed, budget, out_dir, worker_cmd):
    """Execute a single optimization run."""
    with _exit_codes():
        config = _apply_overrides(_load_json(config_path), seed, budget, out_dir, worker_cmd)
        if "optimizer" not in config:
            raise ConfigError('run config needs an "optimizer" section')
        space = _resolve_space(config, config_path.parent)
        spec = engine.spec_from_dict(config["optimizer"])
        factory = objective_factory(config.get("objective", {}), space)
        run_dir = _new_run_dir(Path(config.get("out_dir", "runs")), spec.seed)
        _dump_json(run_dir / "config.json", {**config, "space_doc": space_to_dict(space)})
        with open(run_dir / "trials.jsonl", "w", encoding="utf-8") as log_file:
            result = engine.run(spec, space, factory(), log_file=log_file)
        _dump_json(run_dir / "result.json", _result_doc(space, result))
        best = result.best_trial
        click.echo(f"{run_dir}: best score {best.score:.4f} at trial {best.index}")


@main.command("race")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=None, help="Override every optimizer seed.")
@click.option("--budget", type=int, default=None, help="Override every trial budget.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None)
@click.option("--jobs", type=int, default=None, help="Concurrent runs.")
@click.option("--worker", "worker_cmd", default=None, help="External objective launch line.")
def cmd_race(config_path: Path, seed, budget, out_dir, jobs, worker_cmd):
    """Race several optimizers on one objective and write the report."""
    with _exit_codes():
        config = _apply_overrides(_load_json(config_path), seed, budget, out_dir, worker_cmd)
        optimizers = config.get("optimizers")
        if not isinstance(optimizers, list) or len(optimizers) < 2:
            raise ConfigError("race config needs at least two optimizer specs")
        space = _resolve_space(config, config_path.parent)
        specs = [engine.spec_from_dict(doc) for doc in optimizers]
        factory = objective_factory(config.get("objective", {}), space)
        repeats = int(config.get("repeats", 1))
        thresholds = config.get("thresholds", list(metrics.DEFAULT_THRESHOLDS))
        race_dir = _new_run_dir(Path(config.get("out_dir", "runs")), specs[0].seed)
        _dump_json(race_dir / "config.json", {**config, "space_doc": space_to_dict(space)})

        run_dirs: dict[tuple[int, int], Path] = {}

        def log_provider(spec_idx: int, spec: engine.OptimizerSpec, repeat: int):
            sub = race_dir / f"{spec_idx:02d}-{spec.display_name.replace(' ', '_')}-r{repeat:03d}"
            sub.mkdir(parents=True, exist_ok=True)
            run_dirs[(spec_idx, repeat)] = sub
            return open(sub / "trials.jsonl", "w", encoding="utf-8")

        results = engine.race(
            specs, space, factory,
            repeats=repeats,
            jobs=jobs if jobs is not None else int(config.get("jobs", 1)),
            log_provider=log_provider,
        )
        for (spec_idx, repeat), result in zip(
            [(i, r) for i in range(len(specs)) for r in range(repeats)], results
        ):
            _dump_json(run_dirs[(spec_idx, repeat)] / "result.json", _result_doc(space, result))
        report = metrics.build_report(results, thresholds)
        _dump_json(race_dir / "report.json", report)
        text = metrics.render_text(report)
        (race_dir / "report.txt").write_text(text, encoding="utf-8")
        click.echo(f"race written to {race_dir}")
        click.echo(text, nl=False)


def _discover_run_dirs(paths: list[Path]) -> list[Path]:
    found = []
    for path in paths:
        if (path / "trials.jsonl").exists():
            found.append(path)
            continue
        if path.is_dir():
            children = sorted(p for p in path.iterdir() if (p / "trials.jsonl").exists())
            found.extend(children)
    return found


@main.command("report")
@click.argument("run_dirs", nargs=-1, required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None)
@click.option("--thresholds", default=None, help="Comma-separated, e.g. 0.8,0.9.")
def cmd_report(run_dirs, out_dir, thresholds):
    """Regenerate reports from run logs without re-running objectives."""
    with _exit_codes():
        dirs = _discover_run_dirs(list(run_dirs))
        if not dirs:
            raise LogParseError(str(run_dirs[0]), 0, "no trials.jsonl found")
        if thresholds is not None:
            thr = [float(t) for t in thresholds.split(",")]
        else:
            thr = None
            for path in run_dirs:
                cfg = Path(path) / "config.json"
                if cfg.exists():
                    thr = _load_json(cfg).get("thresholds")
                    break
            if thr is None:
                thr = list(metrics.DEFAULT_THRESHOLDS)
        results = []
        for d in dirs:
            result_path = d / "result.json"
            if not result_path.exists():
                raise LogParseError(str(result_path), 0, "missing result.json next to trials.jsonl")
            meta = _load_json(result_path)
            space = space_from_dict(meta["space"])
            spec = engine.spec_from_dict(meta["optimizer"])
            history = load_history(d / "trials.jsonl", space)
            results.append(
                engine.RunResult(
                    spec=spec,
                    run_seed=meta.get("run_seed", spec.seed),
                    history=history,
                    wall_clock_s=meta.get("wall_clock_s", 0.0),
                    repeat=meta.get("repeat", 0),
                    error=meta.get("error"),
                )
            )
        report = metrics.build_report(results, thr)
        text = metrics.render_text(report)
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            _dump_json(out / "report.json", report)
            (out / "report.txt").write_text(text, encoding="utf-8")
        click.echo(text, nl=False)


@main.command("grid-count")
@click.option("--space", "space_path", required=True, type=click.Path(path_type=Path))
@click.option("--levels", required=True, help="Comma-separated levels per parameter.")
def cmd_grid_count(space_path: Path, levels: str):
    """Print how many configs a grid enumeration would produce."""
    with _exit_codes():
        space = load_space(space_path)
        counts = [int(v) for v in levels.split(",")]
        click.echo(str(grid_size(space, counts)))


@main.command("validate-space")
@click.argument("space_path", type=click.Path(path_type=Path))
def cmd_validate_space(space_path: Path):
    """Validate a space document and print its summary."""
    with _exit_codes():
        space = load_space(space_path)
        click.echo(f"{space_path}: valid, {space.dimension} parameters")
        for p in space.params:
            if p.kind == "categorical":
                click.echo(f"  {p.name}: categorical {list(p.choices)}")
            else:
                click.echo(f"  {p.name}: {p.kind} [{p.lo}, {p.hi}]")


if __name__ == "__main__":
    main()
