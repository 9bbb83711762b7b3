"""Consistency checks between the closed forms and the slot simulator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import estimators as est
from .channel_env import resolve_batch


def inversion_failures(max_n: int = 10, max_k: int = 20) -> list[tuple]:
    """Scenarios where an exact collision probability does not invert back.

    Covers 1 <= N <= max_n, 0 <= J < N, N + J <= K <= max_k for the two SU-side
    inversions and the jammer-side inversion (with C at its exact expectation).
    """
    bad = []
    for n in range(1, max_n + 1):
        for j in range(0, n):
            for k in range(max(n + j, 2), max_k + 1):
                pc = est.collision_prob(est.COORDINATED, n, j, k)
                if est.invert_n_given_j(pc, j, k) != n:
                    bad.append(("n_given_j", n, j, k))
                pu = est.collision_prob(est.UNCOORDINATED, n, j, k)
                if est.invert_n_plus_j(pu, k) != n + j:
                    bad.append(("n_plus_j", n, j, k))
                if j >= 1 and n <= k:
                    slots = 1000
                    hit = 1.0 - (1.0 - 1.0 / k) ** n
                    c = hit * j * slots
                    if est.jammer_invert_n(c, 0, j, slots, k) != n:
                        bad.append(("jammer", n, j, k))
    return bad


@dataclass
class CollisionCheck:
    mode: str
    k: int
    n: int
    j: int
    trials: int
    empirical: float
    expected: float
    stderr: float

    @property
    def z(self) -> float:
        return (self.empirical - self.expected) / self.stderr

    @property
    def ok(self) -> bool:
        return abs(self.z) <= 3.0


def simulate_collision_rate(
    mode: str, k: int, n: int, j: int, slots: int, rng: np.random.Generator,
    p=None, batch: int = 100_000,
) -> CollisionCheck:
    """Uniform hopping by all SUs and jammers; collision rate of SU 0 given its
    channel is vacant."""
    p = np.full(k, 0.5) if p is None else np.asarray(p, dtype=float)
    vacant = hits = 0
    done = 0
    while done < slots:
        r = min(batch, slots - done)
        busy = rng.random((r, k)) < p
        su = rng.integers(0, k, size=(r, n))
        if mode == est.COORDINATED:
            jam = np.argsort(rng.random((r, k)), axis=1)[:, :j]
        else:
            jam = rng.integers(0, k, size=(r, j))
        out = resolve_batch(busy, su, jam, distinguishable=False)
        free = ~out.busy[:, 0]
        vacant += int(free.sum())
        hits += int(out.collision[:, 0][free].sum())
        done += r
    expected = est.collision_prob(mode, n, j, k)
    se = float(np.sqrt(expected * (1 - expected) / vacant)) if 0 < expected < 1 else 1e-12
    return CollisionCheck(mode, k, n, j, vacant, hits / vacant, expected, se)
