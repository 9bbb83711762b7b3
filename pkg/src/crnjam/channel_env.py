"""Primary-user channel process and per-slot collision resolution.

Channels are indexed from 0.  A slot is sensed first and used second: an
agent whose channel is busy does not transmit, and a jammer that picks a
busy channel is inert for that slot.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ModelError


def availability_floor(p) -> float:
    """Tight lower bound on mean channel availability, ``1 - sum(p)/K``."""
    p = np.asarray(p, dtype=float)
    k = p.size
    total = float(p.sum())
    if k == 0 or total >= k:
        raise ModelError(f"sum of busy probabilities ({total:g}) must be < K ({k})")
    return 1.0 - total / k


@dataclass(frozen=True)
class ChannelModel:
    """Busy probabilities of the K channels.

    ``theta_override`` lets an experiment use a smaller availability floor than
    the tight one (the learner is not supposed to know it exactly).
    """

    p: tuple[float, ...]
    theta_override: float | None = None

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        object.__setattr__(self, "p", p)
        if not p:
            raise ModelError("need at least one channel")
        if any(not 0.0 <= v <= 1.0 for v in p):
            raise ModelError(f"busy probabilities must lie in [0, 1]: {p}")
        tight = availability_floor(p)
        if self.theta_override is not None and not 0.0 < self.theta_override <= tight + 1e-12:
            raise ModelError(
                f"theta override {self.theta_override} must be in (0, {tight:g}]"
            )

    @property
    def k(self) -> int:
        return len(self.p)

    @property
    def theta(self) -> float:
        if self.theta_override is not None:
            return self.theta_override
        return availability_floor(self.p)

    def ranking(self) -> np.ndarray:
        """True channel order, best (least busy) first."""
        return np.argsort(np.asarray(self.p), kind="stable")

    def gap(self, n: int) -> float:
        """Busy-probability gap between the (n+1)-th and n-th best channels."""
        if not 1 <= n < self.k:
            raise ModelError(f"gap needs 1 <= n < K, got n={n}, K={self.k}")
        s = np.sort(np.asarray(self.p))
        return float(s[n] - s[n - 1])


def draw_occupancy(model: ChannelModel, rng: np.random.Generator) -> np.ndarray:
    """One slot of PU activity: channel i busy with probability p_i."""
    return rng.random(model.k) < np.asarray(model.p)


@dataclass
class SlotOutcome:
    """What every secondary user and jammer learns at the end of a slot.

    SU arrays have shape ``(..., N)`` and jammer arrays ``(..., J)``; the leading
    axis is the batch of independent episodes when resolved in bulk.
    ``su_collision`` marks collisions where another SU was on the channel,
    ``jam_collision`` those where a jammer was (both may be set).
    """

    channel: np.ndarray
    busy: np.ndarray
    transmitted: np.ndarray
    success: np.ndarray
    collision: np.ndarray
    jammer: np.ndarray
    su_collision: np.ndarray
    jam_collision: np.ndarray
    jam_busy: np.ndarray
    jam_hit_su: np.ndarray
    jam_hit_any: np.ndarray


def resolve_batch(busy, su_sel, jam_sel, distinguishable: bool) -> SlotOutcome:
    """Resolve one slot for a batch of episodes.

    busy: ``(R, K)`` booleans; su_sel: ``(R, N)`` and jam_sel: ``(R, J)``
    channel indices.  Several jammers on one channel count as one presence.
    """
    busy = np.asarray(busy, dtype=bool)
    su_sel = np.asarray(su_sel, dtype=np.intp)
    jam_sel = np.asarray(jam_sel, dtype=np.intp)
    r, k = busy.shape
    for name, sel in (("SU", su_sel), ("jammer", jam_sel)):
        if sel.size and (sel.min() < 0 or sel.max() >= k):
            raise ConfigurationError(f"{name} channel index outside [0, {k - 1}]")

    base = (np.arange(r) * k)[:, None]
    su_flat = (base + su_sel).ravel()
    jam_flat = (base + jam_sel).ravel()
    su_count = np.bincount(su_flat, minlength=r * k)
    jam_count = np.bincount(jam_flat, minlength=r * k)
    busy_flat = busy.ravel()

    b = busy_flat[su_flat].reshape(su_sel.shape)
    vacant = ~b
    others = (su_count[su_flat] > 1).reshape(su_sel.shape)
    jammed = (jam_count[su_flat] > 0).reshape(su_sel.shape)
    su_col = vacant & others
    jam_col = vacant & jammed
    collision = su_col | jam_col
    success = vacant & ~collision
    flag = jam_col if distinguishable else np.zeros_like(jam_col)

    jb = busy_flat[jam_flat].reshape(jam_sel.shape)
    hit_su = ~jb & (su_count[jam_flat] > 0).reshape(jam_sel.shape)
    hit_jam = ~jb & (jam_count[jam_flat] > 1).reshape(jam_sel.shape)

    return SlotOutcome(
        channel=su_sel,
        busy=b,
        transmitted=vacant,
        success=success,
        collision=collision,
        jammer=flag,
        su_collision=su_col,
        jam_collision=jam_col,
        jam_busy=jb,
        jam_hit_su=hit_su,
        jam_hit_any=hit_su | hit_jam,
    )


def resolve_slot(busy, su_sel, jam_sel=(), distinguishable: bool = False) -> SlotOutcome:
    """Single-episode form of :func:`resolve_batch` (1-D inputs and outputs)."""
    busy = np.asarray(busy, dtype=bool)[None, :]
    su = np.asarray(su_sel, dtype=np.intp).reshape(1, -1)
    jam = np.asarray(jam_sel, dtype=np.intp).reshape(1, -1)
    out = resolve_batch(busy, su, jam, distinguishable)
    return SlotOutcome(**{name: value[0] for name, value in vars(out).items()})
