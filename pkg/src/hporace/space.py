"""Mixed continuous/discrete search spaces and their unit-cube encoding.

A space is an ordered list of parameter definitions. Every parameter maps
to exactly one coordinate of the unit hypercube: continuous kinds map
affinely (in log scale for ``log_uniform``), integer and categorical kinds
map to equal-width bins whose centers are the canonical encodings. The
encoding is bijective up to binning, which is what the surrogates operate
on.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import GridSizeError, SpaceError

KINDS = ("log_uniform", "uniform", "int", "categorical")

#: Refuse to enumerate grids larger than this unless the caller raises the cap.
DEFAULT_GRID_CAP = 1_000_000


@dataclass(frozen=True)
class ParamDef:
    """One dimension of the search space.

    ``lo``/``hi`` bound the continuous and integer kinds (inclusive for
    integers); ``choices`` lists the categorical values in a fixed order.
    """

    name: str
    kind: str
    lo: float | int | None = None
    hi: float | int | None = None
    choices: tuple = ()

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise SpaceError(f"parameter name must be a non-empty string, got {self.name!r}")
        if self.kind not in KINDS:
            raise SpaceError(f"{self.name}: unknown kind {self.kind!r}, expected one of {KINDS}")
        if self.kind == "categorical":
            object.__setattr__(self, "choices", tuple(self.choices))
            if len(self.choices) < 1:
                raise SpaceError(f"{self.name}: categorical needs at least one choice")
            if len(set(self.choices)) != len(self.choices):
                raise SpaceError(f"{self.name}: categorical choices must be distinct")
            if self.lo is not None or self.hi is not None:
                raise SpaceError(f"{self.name}: categorical takes choices, not bounds")
            return
        if self.choices:
            raise SpaceError(f"{self.name}: only categorical parameters take choices")
        if self.lo is None or self.hi is None:
            raise SpaceError(f"{self.name}: {self.kind} requires lo and hi bounds")
        if self.kind == "int":
            if int(self.lo) != self.lo or int(self.hi) != self.hi:
                raise SpaceError(f"{self.name}: int bounds must be integers")
            object.__setattr__(self, "lo", int(self.lo))
            object.__setattr__(self, "hi", int(self.hi))
            if self.lo > self.hi:
                raise SpaceError(f"{self.name}: need lo <= hi, got [{self.lo}, {self.hi}]")
            return
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not (self.lo < self.hi):
            raise SpaceError(f"{self.name}: need lo < hi, got [{self.lo}, {self.hi}]")
        if self.kind == "log_uniform" and self.lo <= 0:
            raise SpaceError(f"{self.name}: log_uniform requires lo > 0, got {self.lo}")

    @property
    def n_bins(self) -> int:
        """Number of encoding bins for discrete kinds (0 for continuous)."""
        if self.kind == "int":
            return int(self.hi) - int(self.lo) + 1
        if self.kind == "categorical":
            return len(self.choices)
        return 0

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("int", "categorical")


@dataclass(frozen=True)
class SearchSpace:
    """Ordered, immutable collection of parameter definitions."""

    params: tuple[ParamDef, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if len(self.params) < 1:
            raise SpaceError("a search space needs at least one parameter")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise SpaceError(f"duplicate parameter names: {names}")

    @property
    def dimension(self) -> int:
        return len(self.params)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    def __iter__(self):
        return iter(self.params)

    # -- config construction -------------------------------------------------

    def validate_config(self, config: "Config") -> None:
        if len(config.values) != self.dimension:
            raise SpaceError(
                f"config has {len(config.values)} values for a {self.dimension}-dim space"
            )
        for p, v in zip(self.params, config.values):
            if p.kind == "categorical":
                if not isinstance(v, (int, np.integer)) or not 0 <= v < len(p.choices):
                    raise SpaceError(f"{p.name}: choice index {v!r} outside 0..{len(p.choices) - 1}")
            elif p.kind == "int":
                if not isinstance(v, (int, np.integer)) or not p.lo <= v <= p.hi:
                    raise SpaceError(f"{p.name}: value {v!r} outside {{{p.lo}..{p.hi}}}")
            else:
                if not (p.lo <= v <= p.hi):
                    raise SpaceError(f"{p.name}: value {v!r} outside [{p.lo}, {p.hi}]")

    def to_params(self, config: "Config") -> dict:
        """Name->value mapping with categorical indices resolved to choices."""
        self.validate_config(config)
        out = {}
        for p, v in zip(self.params, config.values):
            if p.kind == "categorical":
                out[p.name] = p.choices[int(v)]
            elif p.kind == "int":
                out[p.name] = int(v)
            else:
                out[p.name] = float(v)
        return out

    def from_params(self, params: dict) -> "Config":
        """Inverse of :meth:`to_params`; raises on unknown or missing names."""
        extra = set(params) - set(self.names)
        if extra:
            raise SpaceError(f"unknown parameter names: {sorted(extra)}")
        values = []
        for p in self.params:
            if p.name not in params:
                raise SpaceError(f"missing parameter {p.name!r}")
            v = params[p.name]
            if p.kind == "categorical":
                try:
                    values.append(p.choices.index(v))
                except ValueError:
                    raise SpaceError(f"{p.name}: {v!r} is not one of {p.choices}") from None
            elif p.kind == "int":
                values.append(int(v))
            else:
                values.append(float(v))
        config = Config(tuple(values))
        self.validate_config(config)
        return config


@dataclass(frozen=True)
class Config:
    """One point of the space: a value per parameter, in declaration order.

    Continuous kinds store reals, integer kinds store the integer, and
    categorical kinds store the choice *index*.
    """

    values: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))


# -- sampling -----------------------------------------------------------------


def sample(space: SearchSpace, rng: np.random.Generator) -> Config:
    """Draw one config from the space prior.

    log_uniform draws exp(U(ln lo, ln hi)); uniform draws U(lo, hi); int and
    categorical draw uniformly over their bins.
    """
    values = []
    for p in space.params:
        if p.kind == "log_uniform":
            values.append(float(math.exp(rng.uniform(math.log(p.lo), math.log(p.hi)))))
        elif p.kind == "uniform":
            values.append(float(rng.uniform(p.lo, p.hi)))
        elif p.kind == "int":
            values.append(int(rng.integers(p.lo, p.hi + 1)))
        else:
            values.append(int(rng.integers(0, len(p.choices))))
    return Config(tuple(values))


# -- unit-cube encoding ---------------------------------------------------------


def _encode_one(p: ParamDef, v) -> float:
    if p.kind == "log_uniform":
        return (math.log(v) - math.log(p.lo)) / (math.log(p.hi) - math.log(p.lo))
    if p.kind == "uniform":
        return (v - p.lo) / (p.hi - p.lo)
    if p.kind == "int":
        return (int(v) - p.lo + 0.5) / p.n_bins
    return (int(v) + 0.5) / p.n_bins


def _decode_one(p: ParamDef, u: float):
    if p.kind == "log_uniform":
        if u <= 0.0:
            return float(p.lo)  # exp/log round-off would miss the exact bound
        if u >= 1.0:
            return float(p.hi)
        v = math.exp(math.log(p.lo) + u * (math.log(p.hi) - math.log(p.lo)))
        return float(min(max(v, p.lo), p.hi))
    if p.kind == "uniform":
        return float(min(max(p.lo + u * (p.hi - p.lo), p.lo), p.hi))
    # Coordinate 1.0 clamps into the final bin.
    i = min(int(u * p.n_bins), p.n_bins - 1)
    return int(p.lo) + i if p.kind == "int" else i


def encode(space: SearchSpace, config: Config) -> np.ndarray:
    """Map a config to its point in [0, 1]^k (bin centers for discrete kinds)."""
    space.validate_config(config)
    return np.array([_encode_one(p, v) for p, v in zip(space.params, config.values)])


def decode(space: SearchSpace, u) -> Config:
    """Inverse of :func:`encode` up to binning; coordinates must lie in [0, 1]."""
    u = np.asarray(u, dtype=float)
    if u.shape != (space.dimension,):
        raise SpaceError(f"expected {space.dimension} coordinates, got shape {u.shape}")
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise SpaceError(f"coordinates outside [0, 1]: {u.tolist()}")
    return Config(tuple(_decode_one(p, float(c)) for p, c in zip(space.params, u)))


def snap(space: SearchSpace, u) -> np.ndarray:
    """Project encoded coordinates onto representable configs (bin centers)."""
    return encode(space, decode(space, u))


# -- grid ----------------------------------------------------------------------


def grid_axis_values(p: ParamDef, levels: int) -> list:
    """Native values of one grid axis: encoded bin midpoints, deduplicated."""
    if levels < 1:
        raise SpaceError(f"{p.name}: grid levels must be >= 1, got {levels}")
    if p.kind == "categorical":
        if levels != len(p.choices):
            raise SpaceError(
                f"{p.name}: categorical grid levels must equal the {len(p.choices)} choices"
            )
        return list(range(levels))
    values = [_decode_one(p, (i + 0.5) / levels) for i in range(levels)]
    if p.kind == "int":
        values = list(dict.fromkeys(values))
    return values


def grid(space: SearchSpace, levels_per_param, cap: int = DEFAULT_GRID_CAP) -> list[Config]:
    """Full factorial design in deterministic lexicographic order.

    Continuous axes take the ``levels`` bin midpoints of the encoded
    interval; integer axes do the same and drop duplicates; categorical
    axes enumerate every choice. Refuses grids larger than ``cap``.
    """
    levels = list(levels_per_param)
    if len(levels) != space.dimension:
        raise SpaceError(f"expected {space.dimension} level counts, got {len(levels)}")
    axes = [grid_axis_values(p, int(n)) for p, n in zip(space.params, levels)]
    count = math.prod(len(a) for a in axes)
    if count > cap:
        raise GridSizeError(count, cap)
    return [Config(combo) for combo in itertools.product(*axes)]


def grid_size(space: SearchSpace, levels_per_param) -> int:
    """Number of configs :func:`grid` would produce (no cap applied)."""
    levels = list(levels_per_param)
    if len(levels) != space.dimension:
        raise SpaceError(f"expected {space.dimension} level counts, got {len(levels)}")
    axes = [grid_axis_values(p, int(n)) for p, n in zip(space.params, levels)]
    return math.prod(len(a) for a in axes)


# -- JSON interface --------------------------------------------------------------


def space_from_dict(doc: dict) -> SearchSpace:
    if not isinstance(doc, dict) or "params" not in doc:
        raise SpaceError('space document must be an object with a "params" list')
    defs = []
    for entry in doc["params"]:
        if not isinstance(entry, dict):
            raise SpaceError(f"parameter entry must be an object, got {entry!r}")
        known = {"name", "kind", "lo", "hi", "choices"}
        unknown = set(entry) - known
        if unknown:
            raise SpaceError(f"unknown parameter fields: {sorted(unknown)}")
        defs.append(
            ParamDef(
                name=entry.get("name", ""),
                kind=entry.get("kind", ""),
                lo=entry.get("lo"),
                hi=entry.get("hi"),
                choices=tuple(entry.get("choices", ())),
            )
        )
    return SearchSpace(tuple(defs))


def space_to_dict(space: SearchSpace) -> dict:
    params = []
    for p in space.params:
        if p.kind == "categorical":
            params.append({"name": p.name, "kind": p.kind, "choices": list(p.choices)})
        else:
            params.append({"name": p.name, "kind": p.kind, "lo": p.lo, "hi": p.hi})
    return {"params": params}


def load_space(path) -> SearchSpace:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SpaceError(f"cannot read space file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpaceError(f"invalid JSON in space file {path}: {exc}") from exc
    return space_from_dict(doc)


def table2_space() -> SearchSpace:
    """The four-dimensional fine-tuning space shipped as ``spaces/table2.json``."""
    return SearchSpace(
        (
            ParamDef("lr", "log_uniform", lo=1e-6, hi=1e-3),
            ParamDef("epochs", "int", lo=1, hi=10),
            ParamDef("unfreeze", "int", lo=0, hi=5),
            ParamDef("maxlen", "categorical", choices=(32000, 48000, 64000, 80000, 112000, 160000)),
        )
    )
