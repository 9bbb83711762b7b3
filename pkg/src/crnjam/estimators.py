"""Closed-form collision models, population inversions, window optimizers and
phase-length calculators.

All functions are pure.  Count-style inputs may be numpy arrays, in which case
the estimate is computed elementwise (channel counts along the last axis).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, EstimationUnavailable

COORDINATED = "coordinated"
UNCOORDINATED = "uncoordinated"


class Mode(str, Enum):
    CDJ = "cdj"
    CNJ = "cnj"
    CUJ = "cuj"


def round_half_away(x):
    """Nearest integer, ties away from zero (Python's round() is banker's)."""
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return out.astype(np.int64) if out.ndim else int(out)


def _clip(x, lo, hi):
    out = np.clip(x, lo, hi)
    return out if np.ndim(out) else int(out)


def collision_ratio(c, f):
    """Empirical collision fraction c/f, kept below 1 so that log(1 - .) is finite.

    The cap is ``1 - 1/(2f)``; callers must ensure ``f >= 1``.
    """
    c = np.asarray(c, dtype=float)
    f = np.asarray(f, dtype=float)
    if np.any(f < 1):
        raise EstimationUnavailable("no free-slot observations")
    out = np.minimum(c / f, 1.0 - 1.0 / (2.0 * f))
    return out if out.ndim else float(out)


def rank_channels(p_hat) -> np.ndarray:
    """Channel indices sorted by increasing estimated busy probability.

    Ties keep the lower index first.  Works row-wise on 2-D input.
    """
    p_hat = np.asarray(p_hat, dtype=float)
    if not np.all(np.isfinite(p_hat)):
        raise ConfigurationError("busy-probability estimates must be finite")
    return np.argsort(p_hat, axis=-1, kind="stable")


def collision_prob(mode: str, n: int, j: int, k: int) -> float:
    """Probability that an SU's transmission on a vacant channel collides when
    all N SUs hop uniformly over K channels.

    Coordinated jammers occupy J distinct channels; uncoordinated jammers hop
    independently like extra users.
    """
    if k < 1 or n < 1 or j < 0:
        raise ConfigurationError(f"need k>=1, n>=1, j>=0 (got k={k}, n={n}, j={j})")
    if mode == COORDINATED:
        if j > k:
            raise ConfigurationError("coordinated mode needs j <= k")
        return 1.0 - (1.0 - j / k) * (1.0 - 1.0 / k) ** (n - 1)
    if mode == UNCOORDINATED:
        return 1.0 - (1.0 - 1.0 / k) ** (n + j - 1)
    raise ConfigurationError(f"unknown jammer mode {mode!r}")


def _log_step(k: int) -> float:
    if k < 2:
        raise ConfigurationError("population inversion needs K >= 2")
    return math.log(1.0 - 1.0 / k)


def invert_n_given_j_raw(p_c, j, k: int):
    """Unrounded N from the coordinated collision model, given J."""
    p_c = np.asarray(p_c, dtype=float)
    j = np.asarray(j, dtype=float)
    if np.any(p_c >= 1.0) or np.any(j >= k):
        raise ConfigurationError("need p_c < 1 and j < k")
    out = 1.0 + (np.log1p(-p_c) - np.log1p(-j / k)) / _log_step(k)
    return out if out.ndim else float(out)


def invert_n_given_j(p_c, j, k: int):
    """N estimate from a collision fraction when J is known; in [1, K]."""
    return _clip(round_half_away(invert_n_given_j_raw(p_c, j, k)), 1, k)


def invert_n_plus_j(p_c, k: int):
    """N+J estimate from a collision fraction under independent hopping; in [1, K]."""
    p_c = np.asarray(p_c, dtype=float)
    if np.any(p_c >= 1.0):
        raise ConfigurationError("need p_c < 1")
    raw = 1.0 + np.log1p(-p_c) / _log_step(k)
    return _clip(round_half_away(raw), 1, k)


def j_from_fraction(c_j, f, k: int):
    """J estimate ``round(K * C_J / F)`` from jammer-attributed collisions."""
    f_arr = np.asarray(f)
    if np.any(f_arr < 1):
        raise EstimationUnavailable("no free-slot observations")
    return _clip(round_half_away(k * np.asarray(c_j, dtype=float) / f_arr), 0, k - 1)


def _per_channel_rates(c, f):
    c = np.asarray(c, dtype=float)
    f = np.asarray(f, dtype=float)
    seen = f > 0
    if np.any(~seen.any(axis=-1)):
        raise EstimationUnavailable("no free-slot observations on any channel")
    return np.where(seen, c / np.where(seen, f, 1.0), 0.0), seen


def j_sequential(o, c, f, t_j: int, k: int):
    """J estimate from per-channel counts gathered while hopping sequentially.

    ``round(sum_i K * (o_i / t_j) * (c_i / f_i))``; channels never found free
    contribute nothing.  Counts lie along the last axis.
    """
    if t_j < 1:
        raise EstimationUnavailable("empty jammer-estimation phase")
    rates, _ = _per_channel_rates(c, f)
    o = np.asarray(o, dtype=float)
    raw = (k * (o / t_j) * rates).sum(axis=-1)
    return _clip(round_half_away(raw), 0, k - 1)


def j_hop_inversion(o, c, f, width):
    """J estimate for uncoordinated jammers after orthogonalizing on ``width``
    channels.

    The visit-weighted collision fraction is inverted through
    ``p_c = 1 - (1 - 1/width)^J``.
    """
    rates, seen = _per_channel_rates(c, f)
    o = np.asarray(o, dtype=float) * seen
    p_hat = (o * rates).sum(axis=-1) / o.sum(axis=-1)
    free = np.asarray(f, dtype=float).sum(axis=-1)
    p_hat = np.minimum(p_hat, 1.0 - 1.0 / (2.0 * free))
    width = np.asarray(width, dtype=float)
    safe = np.where(width >= 2, width, 2.0)
    raw = np.where(width >= 2, np.log1p(-p_hat) / np.log1p(-1.0 / safe), 0.0)
    return _clip(round_half_away(raw), 0, np.maximum(width - 1, 0))


def jammer_invert_n(c, b, j: int, t_c: int, k: int):
    """Coordinated jammer's N estimate from hits on its idle attacked channels."""
    denom = j * t_c - np.asarray(b, dtype=float)
    if np.any(denom < 1):
        raise EstimationUnavailable("jammer saw no idle attacked channel")
    ratio = collision_ratio(c, denom)
    raw = np.log1p(-np.asarray(ratio)) / _log_step(k)
    return _clip(round_half_away(raw), 1, k)


def window_objective(mode: str, n: int, j: int, p_sorted, w: int) -> float:
    """Per-SU throughput when N SUs hop sequentially over the best N+w channels."""
    a = 1.0 - np.asarray(p_sorted, dtype=float)
    if mode == COORDINATED:
        return (a[:n].sum() * (1.0 - j / n) + a[n : n + w].sum()) / (n + w)
    if mode == UNCOORDINATED:
        keep = (1.0 - 1.0 / (n + j - 1)) ** j if j > 0 else 1.0
        if w <= j - 1:
            return a[: n + w].sum() / (n + w) * keep
        head = n + j - 1
        return (a[:head].sum() * keep + a[head : n + w].sum()) / (n + w)
    raise ConfigurationError(f"unknown jammer mode {mode!r}")


TIE_TOL = 1e-12  # float noise on exactly tied windows


def optimize_window(mode: str, n: int, j: int, p_sorted) -> tuple[int, float]:
    """Number m of extra channels maximizing per-SU throughput, and that maximum.

    Scans every w in [0, K - N]; the smallest maximizer wins, with values
    within TIE_TOL of each other treated as equal.
    """
    k = len(p_sorted)
    if not (n >= 1 and 0 <= j < n and n <= k):
        raise ConfigurationError(f"need 1 <= n <= K and 0 <= j < n (n={n}, j={j}, K={k})")
    best_w, best = 0, window_objective(mode, n, j, p_sorted, 0)
    for w in range(1, k - n + 1):
        value = window_objective(mode, n, j, p_sorted, w)
        if value > best + TIE_TOL:
            best_w, best = w, value
    return best_w, float(best)


@dataclass(frozen=True)
class LearningParams:
    delta: float
    epsilon: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise ConfigurationError(f"delta must be in (0, 1], got {self.delta}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not 0.0 < self.gamma < 0.5:
            raise ConfigurationError(f"gamma must be in (0, 0.5), got {self.gamma}")

    def tolerances(self, mode: str, k: int) -> tuple[float, float]:
        """(epsilon1, epsilon2) for the given algorithm."""
        if Mode(mode) is Mode.CUJ:
            e = self.gamma / (math.e * k)
            return e, e
        return self.gamma / (2.0 * math.e * k), self.gamma / k


@dataclass(frozen=True)
class PhaseSchedule:
    t_c: int
    t_o: int
    t_j: int
    horizon: int
    source: str = "explicit"

    def __post_init__(self):
        if min(self.t_c, self.t_o, self.t_j) < 0:
            raise ConfigurationError("phase lengths must be nonnegative")
        if self.learning > self.horizon:
            from .errors import ScheduleOverflowError

            raise ScheduleOverflowError(
                f"t_c+t_o+t_j = {self.learning} exceeds horizon {self.horizon}"
            )

    @property
    def learning(self) -> int:
        return self.t_c + self.t_o + self.t_j


def _tc_terms(mode: Mode, k, theta, params: LearningParams) -> list[float]:
    d, eps = params.delta, params.epsilon
    e1, e2 = params.tolerances(mode.value, k)
    if mode is Mode.CDJ:
        return [
            8.0 / theta * math.log(18 * k / d),
            1.0 / (e1**2 * theta) * math.log(12 * k / d),
            1.0 / (e2**2 * theta) * math.log(24 * k / d),
            8.0 * k * math.log(4 * k**2 / d),
            4.0 * k / eps**2 * math.log(8 * k**2 / d),
        ]
    return [
        8.0 / theta * math.log(12 * k / d),
        1.0 / (e1**2 * theta) * math.log(24 * k / d),
        8.0 * k * math.log(12 * k**2 / d),
        4.0 * k / eps**2 * math.log(24 * k**2 / d),
    ]


def phase_lengths(
    mode: str, k: int, theta: float, params: LearningParams, horizon: int | None = None
) -> PhaseSchedule:
    """Learning-phase lengths that make all estimates correct w.p. >= 1 - delta.

    CDJ has a single ranking/estimation phase; CNJ and CUJ add an
    orthogonalization phase and a jammer-estimation phase.  If ``horizon`` is
    omitted the schedule's horizon is its learning length.
    """
    mode = Mode(mode)
    if theta <= 0 or k < 2:
        raise ConfigurationError(f"need theta > 0 and K >= 2 (theta={theta}, K={k})")
    t_c = round_half_away(max(_tc_terms(mode, k, theta, params)))
    t_o = t_j = 0
    if mode is not Mode.CDJ:
        d = params.delta
        _, e2 = params.tolerances(mode.value, k)
        hit = theta / k * (1.0 - 1.0 / k) ** (k - 1)
        t_o = round_half_away(math.log(d / (3 * k)) / math.log1p(-hit))
        t_j = round_half_away(
            max(8.0 / theta * math.log(6 * k / d), 1.0 / (e2**2 * theta) * math.log(12 * k / d))
        )
    total = t_c + t_o + t_j
    return PhaseSchedule(t_c, t_o, t_j, total if horizon is None else horizon, "theorem")
