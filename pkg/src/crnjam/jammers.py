"""Jammer fleets, vectorized over a batch of independent episodes.

A coordinated fleet is one state per episode emitting J distinct channels; an
uncoordinated fleet is J independent states per episode.  Both learn by
uniform hopping for ``t_c`` slots, then attack the estimated top channels with
a fresh uniform draw every slot.
"""
from __future__ import annotations

import numpy as np

from . import estimators as est

LEARN = "learn"
ATTACK = "attack"


def _positions(pi: np.ndarray) -> np.ndarray:
    """Inverse permutation along the last axis: pos[..., pi[..., r]] = r."""
    pos = np.empty_like(pi)
    np.put_along_axis(pos, pi, np.arange(pi.shape[-1]), axis=-1)
    return pos


def _busy_estimates(o: np.ndarray, b: np.ndarray) -> np.ndarray:
    # never-visited channel is treated as always busy
    return np.where(o > 0, b / np.maximum(o, 1), 1.0)


class Jammers:
    """J jammers in each of R episodes.

    ``select(t, u)`` takes this slot's uniforms (``(R, K)`` coordinated,
    ``(R, J)`` uncoordinated) and returns ``(R, J)`` channel indices.
    """

    def __init__(self, mode: str, runs: int, k: int, j: int, t_c: int):
        if mode not in (est.COORDINATED, est.UNCOORDINATED):
            raise ValueError(f"unknown jammer mode {mode!r}")
        self.mode, self.r, self.k, self.j, self.t_c = mode, runs, k, j, t_c
        shape = (runs,) if mode == est.COORDINATED else (runs, j)
        self.o = np.zeros(shape + (k,), dtype=np.int64)
        self.b_i = np.zeros(shape + (k,), dtype=np.int64)
        self.busy = np.zeros(shape, dtype=np.int64)
        self.free = np.zeros(shape, dtype=np.int64)
        self.hits = np.zeros(shape, dtype=np.int64)
        self.pi = np.tile(np.arange(k), shape + (1,))
        self.n_hat = np.zeros(shape, dtype=np.int64)
        self.width = np.ones(shape, dtype=np.int64)
        self.degraded = np.zeros(shape, dtype=bool)
        self.phase = LEARN if t_c > 0 else ATTACK
        self._pos = _positions(self.pi)
        self._last = None

    @classmethod
    def informed(cls, mode: str, runs: int, p, n: int, j: int) -> "Jammers":
        """Fleet that knows the true ranking and N from slot 0."""
        k = len(p)
        fleet = cls(mode, runs, k, j, t_c=0)
        fleet.pi[...] = np.argsort(np.asarray(p), kind="stable")
        fleet._pos = _positions(fleet.pi)
        width = n if mode == est.COORDINATED else min(n + j - 1, k)
        fleet.n_hat[...] = n
        fleet.width[...] = max(width, j if mode == est.COORDINATED else 1)
        return fleet

    @property
    def n_uniforms(self) -> int:
        return self.k if self.mode == est.COORDINATED else self.j

    def select(self, t: int, u: np.ndarray) -> np.ndarray:
        if self.j == 0:
            self._last = np.zeros((self.r, 0), dtype=np.int64)
            return self._last
        if self.phase == LEARN and t >= self.t_c:
            self.finalize()
        if self.mode == est.COORDINATED:
            keys = u
            if self.phase == ATTACK:
                keys = np.where(self._pos < self.width[:, None], u, 2.0)
            sel = np.argsort(keys, axis=1)[:, : self.j]
        elif self.phase == LEARN:
            sel = np.minimum((u * self.k).astype(np.int64), self.k - 1)
        else:
            rank = np.minimum((u * self.width).astype(np.int64), self.width - 1)
            sel = np.take_along_axis(self.pi, rank[..., None], axis=-1)[..., 0]
        self._last = sel
        return sel

    def observe(self, jam_busy: np.ndarray, hit_su: np.ndarray, hit_any: np.ndarray) -> None:
        """Feedback for the last selection; only the learning phase uses it."""
        if self.phase != LEARN or self.j == 0:
            return
        sel = self._last
        if self.mode == est.COORDINATED:
            rows = np.repeat(np.arange(self.r), self.j)
            flat_sel = sel.ravel()
            np.add.at(self.o, (rows, flat_sel), 1)
            np.add.at(self.b_i, (rows, flat_sel), jam_busy.ravel().astype(np.int64))
            self.busy += jam_busy.sum(axis=1)
            self.hits += hit_su.sum(axis=1)
        else:
            rr, jj = np.indices(sel.shape)
            self.o[rr, jj, sel] += 1
            self.b_i[rr, jj, sel] += jam_busy
            self.free += ~jam_busy
            # an uncoordinated jammer cannot tell SUs from its peers
            self.hits += hit_any

    def finalize(self) -> None:
        """End of learning: rank channels and size the attack set."""
        self.pi = est.rank_channels(_busy_estimates(self.o, self.b_i))
        self._pos = _positions(self.pi)
        if self.mode == est.COORDINATED:
            ok = self.j * self.t_c - self.busy >= 1
            n_hat = np.ones(self.r, dtype=np.int64)
            if ok.any():
                n_hat[ok] = est.jammer_invert_n(
                    self.hits[ok], self.busy[ok], self.j, self.t_c, self.k
                )
            self.n_hat = n_hat
            self.width = np.where(ok, np.maximum(n_hat, self.j), self.j)
        else:
            ok = self.free >= 1
            total = np.ones(self.free.shape, dtype=np.int64)
            if ok.any():
                ratio = est.collision_ratio(self.hits[ok], self.free[ok])
                total[ok] = est.invert_n_plus_j(ratio, self.k)
            self.n_hat = total
            self.width = np.where(ok, np.maximum(total - 1, 1), 1)
        self.degraded = ~ok
        self.phase = ATTACK

