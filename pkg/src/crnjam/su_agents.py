"""Secondary-user protocol state machines.

All N agents of all R episodes advance in lockstep, so state is stored as
``(R, N)`` and ``(R, N, K)`` arrays.  Each agent's update reads only its own
row: its selection, busy flag, collision flag and (for CDJ) jammer flag.

Phases per algorithm (slot ``t``, boundaries from the schedule):

- cdj:            CR [0, t_c), then OR over N* to the horizon
- cnj, cuj:       CR [0, t_c), OR-learn [t_c, t_c+t_o), JE [.., t_L), OR over N*
- myopic, mc:     CR [0, t_c), then OR over the estimated transmitter count
- oracle:         settled sequential hopping over the true top N* from slot 0
"""
from __future__ import annotations

import numpy as np

from . import estimators as est

ALGORITHMS = ("cdj", "cnj", "cuj", "myopic", "mc", "oracle")
LEARNING = ("cdj", "cnj", "cuj", "myopic", "mc")


def _window(mode: str, n_hat: np.ndarray, j_hat: np.ndarray, p_sorted: np.ndarray) -> np.ndarray:
    out = np.empty(n_hat.shape, dtype=np.int64)
    for idx in np.ndindex(n_hat.shape):
        n = int(n_hat[idx])
        j = min(int(j_hat[idx]), n - 1)
        out[idx] = est.optimize_window(mode, n, j, p_sorted[idx])[0]
    return out


class SecondaryUsers:
    """N agents running one algorithm in each of R episodes.

    ``j_rule`` picks the CUJ jammer-count estimator: ``"inversion"`` inverts
    the collision fraction over the orthogonalized width, ``"sequential"``
    uses the weighted-sum rule shared with CNJ.
    """

    def __init__(
        self,
        algorithm: str,
        runs: int,
        n: int,
        k: int,
        t_c: int = 0,
        t_o: int = 0,
        t_j: int = 0,
        *,
        j_rule: str = "inversion",
    ):
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        if j_rule not in ("inversion", "sequential"):
            raise ValueError(f"unknown j_rule {j_rule!r}")
        self.algorithm, self.r, self.n, self.k = algorithm, runs, n, k
        self.t_c, self.t_o, self.t_j = t_c, t_o, t_j
        self.j_rule = j_rule
        if algorithm in ("cnj", "cuj"):
            self.t_oe = t_c + t_o
            self.t_l = t_c + t_o + t_j
        else:
            self.t_oe = self.t_l = t_c
        self.mode = est.UNCOORDINATED if algorithm in ("cuj", "myopic", "mc") else est.COORDINATED

        s2, s3 = (runs, n), (runs, n, k)
        self.o = np.zeros(s3, dtype=np.int64)
        self.b_i = np.zeros(s3, dtype=np.int64)
        self.f = np.zeros(s2, dtype=np.int64)
        self.c = np.zeros(s2, dtype=np.int64)
        self.c_j = np.zeros(s2, dtype=np.int64)
        self.je_o = np.zeros(s3, dtype=np.int64)
        self.je_c = np.zeros(s3, dtype=np.int64)
        self.je_f = np.zeros(s3, dtype=np.int64)
        self.p_hat = np.ones((runs, n, k))
        self.pi = np.tile(np.arange(k), s2 + (1,))
        self.ratio = np.zeros(s2)
        self.n_hat = np.zeros(s2, dtype=np.int64)
        self.j_hat = np.zeros(s2, dtype=np.int64)
        self.nj_hat = np.zeros(s2, dtype=np.int64)
        self.n_star = np.zeros(s2, dtype=np.int64)
        self.width = np.full(s2, k, dtype=np.int64)
        self.settled = np.zeros(s2, dtype=bool)
        self.x = np.zeros(s2, dtype=np.int64)
        self.pos = np.full(s2, -1, dtype=np.int64)
        self.i0 = np.full(s2, -1, dtype=np.int64)
        self.settle_slot = np.full(s2, -1, dtype=np.int64)
        self.degraded = np.zeros(s2, dtype=bool)
        self.channel = np.zeros(s2, dtype=np.int64)
        self._phase = "cr" if algorithm in LEARNING and t_c > 0 else "or"

    @classmethod
    def oracle(cls, runs: int, p, n: int, j: int, mode: str) -> "SecondaryUsers":
        """Agents that know the true ranking, N and J and start orthogonal."""
        k = len(p)
        agents = cls("oracle", runs, n, k)
        agents.mode = mode
        p_sorted = np.sort(np.asarray(p, dtype=float))
        m, _ = est.optimize_window(mode, n, j, p_sorted)
        agents.pi[...] = np.argsort(np.asarray(p), kind="stable")
        agents.p_hat[...] = np.asarray(p, dtype=float)
        agents.n_hat[...], agents.j_hat[...], agents.nj_hat[...] = n, j, n + j
        agents.n_star[...] = agents.width[...] = n + m
        agents.settled[...] = True
        agents.x[...] = np.arange(n) - 1
        agents.settle_slot[...] = 0
        return agents

    # ------------------------------------------------------------------ phases
    def phase_at(self, t: int) -> str:
        if self.algorithm == "oracle":
            return "or"
        if t < self.t_c:
            return "cr"
        if self.algorithm in ("cnj", "cuj"):
            if t < self.t_oe:
                return "or-learn"
            if t < self.t_l:
                return "je"
        return "lock" if self.algorithm == "mc" else "or"

    def _advance(self, t: int) -> None:
        if self.algorithm == "oracle":
            return
        if t == self.t_c and self.t_c > 0:
            self.finalize_cr()
        if self.algorithm in ("cnj", "cuj"):
            if t == self.t_oe:
                self.i0 = self.pos.copy()
            if t == self.t_l:
                self.finalize_je()

    # -------------------------------------------------------------- interface
    def select(self, t: int, u: np.ndarray) -> np.ndarray:
        """Channel choices for slot ``t``; ``u`` holds one uniform per agent."""
        self._advance(t)
        phase = self._phase = self.phase_at(t)
        if phase == "cr":
            ch = np.minimum((u * self.k).astype(np.int64), self.k - 1)
            self.channel = ch
            return ch
        if phase == "je":
            pos = (self.i0 + 1 + (t - self.t_oe)) % self.width
        else:
            hop = np.minimum((u * self.width).astype(np.int64), self.width - 1)
            if phase == "lock":
                nxt = self.x
            else:
                nxt = (self.x + 1) % self.width
                self.x = np.where(self.settled, nxt, self.x)
            pos = np.where(self.settled, nxt, hop)
        self.pos = pos
        self.channel = np.take_along_axis(self.pi, pos[..., None], axis=-1)[..., 0]
        return self.channel

    def observe(self, t: int, busy: np.ndarray, collision: np.ndarray, jammer: np.ndarray) -> None:
        """Feedback for the selections made at slot ``t``."""
        phase = self._phase
        if phase == "cr":
            self._count(self.o, self.b_i, busy)
            self.f += ~busy
            self.c += collision
            if self.algorithm == "cdj":
                self.c_j += jammer
        elif phase == "je":
            idle = ~busy
            self._count(self.je_o, self.je_f, idle)
            self._bump(self.je_c, collision)
        elif self.algorithm != "oracle":
            fresh = ~self.settled & ~busy & ~collision
            if fresh.any():
                self.settled |= fresh
                self.x = np.where(fresh, self.pos, self.x)
                self.settle_slot = np.where(fresh, t, self.settle_slot)

    def _count(self, visits: np.ndarray, hits: np.ndarray, flag: np.ndarray) -> None:
        self._bump(visits, np.ones_like(flag))
        self._bump(hits, flag)

    def _bump(self, counts: np.ndarray, flag: np.ndarray) -> None:
        flat = counts.reshape(-1, self.k)
        flat[np.arange(flat.shape[0]), self.channel.ravel()] += flag.ravel()

    # -------------------------------------------------------------- estimates
    def _p_sorted(self) -> np.ndarray:
        return np.take_along_axis(self.p_hat, self.pi, axis=-1)

    def finalize_cr(self) -> None:
        """Close the CR phase: rank channels and form the count estimates."""
        self.p_hat = np.where(self.o > 0, self.b_i / np.maximum(self.o, 1), 1.0)
        self.pi = est.rank_channels(self.p_hat)
        ok = self.f >= 1
        self.degraded |= ~ok
        fsafe = np.maximum(self.f, 1)
        self.ratio = np.where(ok, est.collision_ratio(np.where(ok, self.c, 0), fsafe), 0.0)
        self.settled[...] = False
        self.settle_slot[...] = -1
        alg = self.algorithm
        if alg == "cdj":
            j_hat = est.j_from_fraction(self.c_j, fsafe, self.k)
            n_hat = est.invert_n_given_j(self.ratio, j_hat, self.k)
            self._install(np.where(ok, n_hat, 1), np.where(ok, j_hat, 0), ok)
        elif alg == "cnj":
            self.width[...] = self.k
        else:
            total = np.where(ok, est.invert_n_plus_j(self.ratio, self.k), 1)
            self.nj_hat = total
            self.width = total.copy()
            if alg in ("myopic", "mc"):
                self.n_star = total.copy()

    def finalize_je(self) -> None:
        """Close the JE phase: estimate J, then N, then the hopping width N*."""
        ok = ~self.degraded & (self.je_f.sum(axis=-1) >= 1) & (self.t_j >= 1)
        self.degraded |= ~ok
        j_hat = np.zeros(self.n_hat.shape, dtype=np.int64)
        if ok.any():
            o, c, f = self.je_o[ok], self.je_c[ok], self.je_f[ok]
            if self.algorithm == "cuj" and self.j_rule == "inversion":
                j_hat[ok] = est.j_hop_inversion(o, c, f, self.width[ok])
            else:
                j_hat[ok] = est.j_sequential(o, c, f, self.t_j, self.k)
        if self.algorithm == "cnj":
            n_hat = est.invert_n_given_j(self.ratio, j_hat, self.k)
        else:
            j_hat = np.minimum(j_hat, self.nj_hat - 1)
            n_hat = np.maximum(self.nj_hat - j_hat, 1)
        self._install(np.where(ok, n_hat, 1), np.where(ok, j_hat, 0), ok)

    def _install(self, n_hat: np.ndarray, j_hat: np.ndarray, ok: np.ndarray) -> None:
        self.n_hat, self.j_hat = n_hat.astype(np.int64), j_hat.astype(np.int64)
        if self.algorithm == "cdj":
            self.nj_hat = self.n_hat + self.j_hat
        m = _window(self.mode, self.n_hat, self.j_hat, self._p_sorted())
        self.n_star = np.where(ok, np.minimum(self.n_hat + m, self.k), 1)
        self.width = self.n_star.copy()
        self.settled[...] = False
        self.settle_slot[...] = -1
