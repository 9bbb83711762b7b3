"""Experiment configuration: JSON parsing, validation and canonical serialization.

A config file is a JSON object::

    {
      "name": "cnj-k8",
      "algorithm": "cnj",              # cdj | cnj | cuj | myopic | mc | oracle
      "k": 8, "n": 4, "j": 2,
      "p": [0.2, 0.3, ...] | "spread",
      "horizon": 7000 | "auto",
      "schedule": {"t_c": 3000, "t_o": 50, "t_j": 1000}
                | {"kind": "theorem", "delta": 0.3, "epsilon": 0.05, "gamma": 0.4},
      "jammer_mode": "coordinated",    # optional, defaults by algorithm
      "theta": 0.45,                   # optional availability-floor override
      "runs": 50, "seed": 0            # optional
    }

``"spread"`` places the middle channel at 0.5 with 0.06 steps either side.
``"auto"`` horizon is the learning length plus 1000 slots.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import estimators as est
from .channel_env import ChannelModel
from .errors import (
    ConfigurationError,
    MissingFieldError,
    ModelError,
    RangeViolationError,
    ScheduleOverflowError,
)
from .su_agents import ALGORITHMS

AUTO_TAIL = 1000
SPREAD_CENTER = 0.5
SPREAD_STEP = 0.06
DEFAULT_MODE = {
    "cdj": est.COORDINATED,
    "cnj": est.COORDINATED,
    "cuj": est.UNCOORDINATED,
    "myopic": est.COORDINATED,
    "mc": est.COORDINATED,
    "oracle": est.COORDINATED,
}
_FIELDS = {"name", "algorithm", "k", "n", "j", "p", "horizon", "schedule",
           "jammer_mode", "theta", "runs", "seed"}
_REQUIRED = ("algorithm", "k", "n", "j", "p", "horizon", "schedule")


def spread_probabilities(k: int) -> tuple[float, ...]:
    """Busy probabilities 0.5 + 0.06 * (i - ceil(K/2)) for i = 1..K."""
    mid = math.ceil(k / 2)
    p = tuple(round(SPREAD_CENTER + SPREAD_STEP * (i - mid), 10) for i in range(1, k + 1))
    if any(not 0.0 <= v <= 1.0 for v in p):
        raise RangeViolationError(f"spread rule leaves [0, 1] for K={k}")
    return p


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    k: int
    n: int
    j: int
    p: tuple[float, ...]
    schedule: est.PhaseSchedule
    jammer_mode: str
    learning: est.LearningParams | None = None
    theta: float | None = None
    runs: int = 50
    seed: int = 0
    name: str = "run"
    model: ChannelModel = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if self.algorithm not in ALGORITHMS:
            raise RangeViolationError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.jammer_mode not in (est.COORDINATED, est.UNCOORDINATED):
            raise RangeViolationError(f"unknown jammer_mode {self.jammer_mode!r}")
        if not 1 <= self.n < self.k:
            raise RangeViolationError(f"need 1 <= n < k (n={self.n}, k={self.k})")
        if not 0 <= self.j < self.n:
            raise RangeViolationError(f"need 0 <= j < n (j={self.j}, n={self.n})")
        if len(self.p) != self.k:
            raise RangeViolationError(f"p has {len(self.p)} entries, expected k={self.k}")
        if not 1 <= self.runs:
            raise RangeViolationError("runs must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise RangeViolationError("seed must be an unsigned 64-bit integer")
        try:
            model = ChannelModel(self.p, self.theta)
        except ModelError as exc:
            raise RangeViolationError(str(exc)) from exc
        object.__setattr__(self, "model", model)
        s = self.schedule
        if self.algorithm != "oracle" and s.t_c < 1:
            raise RangeViolationError("t_c must be >= 1 for learning algorithms")
        if self.algorithm in ("cnj", "cuj") and s.t_j < 1:
            raise RangeViolationError("t_j must be >= 1 for cnj and cuj")

    @property
    def horizon(self) -> int:
        return self.schedule.horizon

    @property
    def distinguishable(self) -> bool:
        return self.algorithm == "cdj"

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        s = self.schedule
        sched: dict = {"t_c": s.t_c, "t_o": s.t_o, "t_j": s.t_j}
        if self.learning is not None:
            sched = {"kind": "theorem", "delta": self.learning.delta,
                     "epsilon": self.learning.epsilon, "gamma": self.learning.gamma, **sched}
        out = {
            "name": self.name,
            "algorithm": self.algorithm,
            "k": self.k,
            "n": self.n,
            "j": self.j,
            "p": list(self.p),
            "horizon": s.horizon,
            "schedule": sched,
            "jammer_mode": self.jammer_mode,
            "theta": self.theta,
            "runs": self.runs,
            "seed": self.seed,
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def key(self) -> str:
        """Identity of the simulated scenario (run count and seed excluded)."""
        d = self.to_dict()
        for name in ("runs", "seed", "name"):
            d.pop(name)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))


def _int(raw: dict, name: str) -> int:
    v = raw[name]
    if isinstance(v, bool) or not isinstance(v, int):
        raise RangeViolationError(f"{name} must be an integer, got {v!r}")
    return v


def _float(raw: dict, name: str) -> float:
    v = raw[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise RangeViolationError(f"{name} must be a number, got {v!r}")
    return float(v)


def _schedule(sched, algorithm: str, k: int, model: ChannelModel, horizon_raw):
    if not isinstance(sched, dict):
        raise ConfigurationError("schedule must be an object")
    learning = None
    if sched.get("kind", "explicit") == "theorem":
        for name in ("delta", "epsilon", "gamma"):
            if name not in sched:
                raise MissingFieldError(f"schedule.{name}")
        learning = est.LearningParams(
            _float(sched, "delta"), _float(sched, "epsilon"), _float(sched, "gamma")
        )
        mode = algorithm if algorithm in ("cdj", "cnj", "cuj") else "cnj"
        derived = est.phase_lengths(mode, k, model.theta, learning)
        t_c, t_o, t_j = derived.t_c, derived.t_o, derived.t_j
        source = "theorem"
    elif sched.get("kind", "explicit") == "explicit":
        for name in ("t_c", "t_o", "t_j"):
            if name not in sched:
                raise MissingFieldError(f"schedule.{name}")
        t_c, t_o, t_j = (_int(sched, name) for name in ("t_c", "t_o", "t_j"))
        source = "explicit"
    else:
        raise RangeViolationError(f"unknown schedule kind {sched['kind']!r}")
    if min(t_c, t_o, t_j) < 0:
        raise RangeViolationError("phase lengths must be nonnegative")
    if algorithm not in ("cnj", "cuj"):
        # only CNJ and CUJ have separate orthogonalization and jammer phases
        t_o = t_j = 0
    if learning is not None:
        for name, value in (("t_c", t_c), ("t_o", t_o), ("t_j", t_j)):
            if name in sched and sched[name] != value:
                raise RangeViolationError(
                    f"schedule.{name}={sched[name]} disagrees with derived value {value}"
                )
    learn = t_c + t_o + t_j
    if horizon_raw == "auto":
        horizon = learn + AUTO_TAIL
    elif isinstance(horizon_raw, int) and not isinstance(horizon_raw, bool) and horizon_raw >= 1:
        horizon = horizon_raw
    else:
        raise RangeViolationError(f"horizon must be a positive integer or 'auto', got {horizon_raw!r}")
    if learn > horizon:
        raise ScheduleOverflowError(f"learning phases ({learn} slots) exceed horizon {horizon}")
    return est.PhaseSchedule(t_c, t_o, t_j, horizon, source), learning


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    unknown = set(raw) - _FIELDS
    if unknown:
        raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
    for name in _REQUIRED:
        if name not in raw:
            raise MissingFieldError(name)
    algorithm = raw["algorithm"]
    k, n, j = _int(raw, "k"), _int(raw, "n"), _int(raw, "j")
    if k < 2:
        raise RangeViolationError(f"k must be >= 2, got {k}")
    if raw["p"] == "spread":
        p = spread_probabilities(k)
    elif isinstance(raw["p"], list):
        p = tuple(float(v) for v in raw["p"])
    else:
        raise RangeViolationError("p must be a list of probabilities or 'spread'")
    theta = None if raw.get("theta") is None else _float(raw, "theta")
    try:
        model = ChannelModel(p, theta)
    except ModelError as exc:
        raise RangeViolationError(str(exc)) from exc
    if len(p) != k:
        raise RangeViolationError(f"p has {len(p)} entries, expected k={k}")
    schedule, learning = _schedule(raw["schedule"], algorithm, k, model, raw["horizon"])
    return ExperimentConfig(
        algorithm=algorithm,
        k=k,
        n=n,
        j=j,
        p=p,
        schedule=schedule,
        jammer_mode=raw.get("jammer_mode") or DEFAULT_MODE.get(algorithm, est.COORDINATED),
        learning=learning,
        theta=theta,
        runs=_int(raw, "runs") if "runs" in raw else 50,
        seed=_int(raw, "seed") if "seed" in raw else 0,
        name=str(raw.get("name", "run")),
    )


def parse_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    return config_from_dict(raw)


def make_config(algorithm: str, k: int, n: int, j: int, p, t_c: int, t_o: int = 0,
                t_j: int = 0, horizon: int | str = "auto", **extra) -> ExperimentConfig:
    """Programmatic shortcut for an explicit-schedule config."""
    raw = {"algorithm": algorithm, "k": k, "n": n, "j": j,
           "p": p if isinstance(p, str) else list(p), "horizon": horizon,
           "schedule": {"t_c": t_c, "t_o": t_o, "t_j": t_j}, **extra}
    return config_from_dict(raw)
