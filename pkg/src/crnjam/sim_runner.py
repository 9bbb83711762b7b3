"""Episode engine, oracle benchmark and regret aggregation.

Episodes are simulated in batches: one slot at a time, vectorized across the
runs of the batch.  Every run draws from its own labeled random streams, so a
run's trajectory does not depend on which batch or process simulated it.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import estimators as est
from .channel_env import resolve_batch
from .config import ExperimentConfig
from .errors import ConfigurationError
from .jammers import Jammers
from .su_agents import SecondaryUsers

ENV, SU, JAMMER = 0, 1, 2
CHUNK = 1024


def run_seeds(master: int, runs: int) -> list[int]:
    """Per-run seeds derived from one master seed."""
    children = np.random.SeedSequence(master).spawn(runs)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def stream(run_seed: int, label: int, index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(run_seed, spawn_key=(label, index)))
    )


class _Draws:
    """Chunked uniforms for a batch: env (R, K), SU (R, N), jammer (R, width)."""

    def __init__(self, seeds, k: int, n: int, jam_streams: int, jam_width: int):
        self.k, self.n, self.jam_streams, self.jam_width = k, n, jam_streams, jam_width
        self.env = [stream(s, ENV, 0) for s in seeds]
        self.su = [[stream(s, SU, i) for i in range(n)] for s in seeds]
        self.jam = [[stream(s, JAMMER, i) for i in range(jam_streams)] for s in seeds]
        self._start = self._stop = 0

    def _refill(self, t: int) -> None:
        c = CHUNK
        self.env_u = np.stack([g.random((c, self.k)) for g in self.env], axis=1)
        self.su_u = np.stack(
            [np.stack([g.random(c) for g in row], axis=1) for row in self.su], axis=1
        )
        per = self.jam_width // max(self.jam_streams, 1)
        self.jam_u = np.stack(
            [np.concatenate([g.random((c, per)) for g in row], axis=1)
             if row else np.zeros((c, 0)) for row in self.jam],
            axis=1,
        )
        self._start, self._stop = t, t + c

    def at(self, t: int):
        if not self._start <= t < self._stop:
            self._refill(t)
        i = t - self._start
        return self.env_u[i], self.su_u[i], self.jam_u[i]


@dataclass
class Trajectory:
    """One episode.  Per-slot arrays count SUs; per-agent arrays have length N."""

    seed: int
    config_key: str
    r_op: float
    successes: np.ndarray
    collisions: np.ndarray
    su_collisions: np.ndarray
    jammer_collisions: np.ndarray
    busy: np.ndarray
    n_hat: np.ndarray
    j_hat: np.ndarray
    nj_hat: np.ndarray
    n_star: np.ndarray
    pi: np.ndarray
    degraded: np.ndarray
    settle_slot: np.ndarray
    jammer_n_hat: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.successes)

    @property
    def last_settle(self) -> int | None:
        """Slot at which the last agent settled for good, or None."""
        if np.any(self.settle_slot < 0):
            return None
        return int(self.settle_slot.max())

    def collisions_after_settle(self) -> int | None:
        last = self.last_settle
        if last is None:
            return None
        return int(self.su_collisions[last + 1 :].sum())


def oracle_throughput(p, n: int, j: int, mode: str) -> float:
    """Expected total successes per slot of the best sequential-hopping policy."""
    _, value = est.optimize_window(mode, n, j, np.sort(np.asarray(p, dtype=float)))
    return n * value


def _build(config: ExperimentConfig, runs: int):
    s = config.schedule
    if config.algorithm == "oracle":
        agents = SecondaryUsers.oracle(runs, config.p, config.n, config.j, config.jammer_mode)
        jammers = Jammers.informed(config.jammer_mode, runs, config.p, config.n, config.j)
    else:
        agents = SecondaryUsers(config.algorithm, runs, config.n, config.k, s.t_c, s.t_o, s.t_j)
        jammers = Jammers(config.jammer_mode, runs, config.k, config.j, s.t_c)
    return agents, jammers


def run_batch(config: ExperimentConfig, seeds) -> list[Trajectory]:
    """Simulate one episode per seed, vectorized across the batch."""
    seeds = list(seeds)
    r, t_end, n = len(seeds), config.horizon, config.n
    agents, jammers = _build(config, r)
    coordinated = config.jammer_mode == est.COORDINATED
    draws = _Draws(
        seeds,
        config.k,
        n,
        (1 if coordinated else config.j) if config.j else 0,
        jammers.n_uniforms if config.j else 0,
    )
    p = np.asarray(config.p)
    rec = {name: np.zeros((r, t_end), dtype=np.uint8)
           for name in ("successes", "collisions", "su_collisions", "jammer_collisions", "busy")}
    for t in range(t_end):
        env_u, su_u, jam_u = draws.at(t)
        busy = env_u < p
        su_sel = agents.select(t, su_u)
        jam_sel = jammers.select(t, jam_u)
        out = resolve_batch(busy, su_sel, jam_sel, config.distinguishable)
        agents.observe(t, out.busy, out.collision, out.jammer)
        jammers.observe(out.jam_busy, out.jam_hit_su, out.jam_hit_any)
        rec["successes"][:, t] = out.success.sum(axis=1)
        rec["collisions"][:, t] = out.collision.sum(axis=1)
        rec["su_collisions"][:, t] = out.su_collision.sum(axis=1)
        rec["jammer_collisions"][:, t] = out.jam_collision.sum(axis=1)
        rec["busy"][:, t] = out.busy.sum(axis=1)

    r_op = oracle_throughput(config.p, n, config.j, config.jammer_mode)
    key = config.key()
    jn = jammers.n_hat.reshape(r, -1)
    return [
        Trajectory(
            seed=seeds[i],
            config_key=key,
            r_op=r_op,
            **{name: arr[i] for name, arr in rec.items()},
            n_hat=agents.n_hat[i].copy(),
            j_hat=agents.j_hat[i].copy(),
            nj_hat=agents.nj_hat[i].copy(),
            n_star=agents.n_star[i].copy(),
            pi=agents.pi[i].copy(),
            degraded=agents.degraded[i].copy(),
            settle_slot=agents.settle_slot[i].copy(),
            jammer_n_hat=jn[i].copy(),
        )
        for i in range(r)
    ]


def run_episode(config: ExperimentConfig, seed: int) -> Trajectory:
    return run_batch(config, [seed])[0]


def _batch_job(args):
    config, seeds = args
    return run_batch(config, seeds)


def run_experiment(config: ExperimentConfig, parallel: int = 1) -> list[Trajectory]:
    """All ``config.runs`` episodes, in seed order.

    With ``parallel > 1`` the seeds are split into contiguous blocks handled by
    worker processes; the result is identical to the serial one.
    """
    seeds = run_seeds(config.seed, config.runs)
    if parallel <= 1 or len(seeds) == 1:
        return run_batch(config, seeds)
    bounds = np.linspace(0, len(seeds), min(parallel, len(seeds)) + 1).astype(int)
    blocks = [seeds[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        parts = list(pool.map(_batch_job, [(config, b) for b in blocks]))
    return [traj for part in parts for traj in part]


@dataclass
class RegretCurve:
    mean_regret: np.ndarray
    stderr_regret: np.ndarray
    mean_throughput: np.ndarray
    runs: int

    @property
    def final(self) -> float:
        return float(self.mean_regret[-1])

    def slope(self, window: int) -> float:
        """Average per-slot regret increase over the last ``window`` slots."""
        m = self.mean_regret
        window = min(window, len(m) - 1)
        return float((m[-1] - m[-1 - window]) / window)


def regret_curve(trajectories: list[Trajectory]) -> RegretCurve:
    """Cumulative regret t * R_op - successes(1..t), averaged over runs."""
    if not trajectories:
        raise ConfigurationError("need at least one trajectory")
    keys = {tr.config_key for tr in trajectories}
    if len(keys) != 1:
        raise ConfigurationError("trajectories come from different configs")
    cum = np.cumsum(np.stack([tr.successes for tr in trajectories]), axis=1, dtype=np.float64)
    t = np.arange(1, cum.shape[1] + 1, dtype=np.float64)
    regret = t * trajectories[0].r_op - cum
    runs = len(trajectories)
    stderr = regret.std(axis=0, ddof=1) / np.sqrt(runs) if runs > 1 else np.zeros_like(t)
    return RegretCurve(regret.mean(axis=0), stderr, cum.mean(axis=0), runs)


def correct_estimates(tr: Trajectory, n: int, j: int) -> bool:
    """Every agent ended with the true N and J and is not degraded."""
    return bool(np.all(tr.n_hat == n) and np.all(tr.j_hat == j) and not tr.degraded.any())


def ranking_eps_correct(pi: np.ndarray, p, eps: float) -> bool:
    """No pair of channels whose busy probabilities differ by more than eps is inverted."""
    p = np.asarray(p, dtype=float)
    ranked = p[pi]
    # ranked[a] - ranked[b] for a < b must not exceed eps
    diff = ranked[:, None] - ranked[None, :]
    upper = np.triu(np.ones_like(diff, dtype=bool), k=1)
    return bool(np.all(diff[upper] <= eps))


@dataclass
class Summary:
    name: str
    final_regret: float
    stderr_regret: float
    correct_fraction: float
    mean_settle_slot: float
    collisions_after_settle: int
    unsettled_runs: int


def summarize(config: ExperimentConfig, trajectories: list[Trajectory]) -> Summary:
    curve = regret_curve(trajectories)
    if config.algorithm in ("myopic", "mc"):
        correct = [bool(np.all(tr.nj_hat == config.n + config.j)) for tr in trajectories]
    else:
        correct = [correct_estimates(tr, config.n, config.j) for tr in trajectories]
    settles = [tr.last_settle for tr in trajectories]
    after = [tr.collisions_after_settle() for tr in trajectories]
    settled = [s for s in settles if s is not None]
    return Summary(
        name=config.name,
        final_regret=curve.final,
        stderr_regret=float(curve.stderr_regret[-1]),
        correct_fraction=float(np.mean(correct)),
        mean_settle_slot=float(np.mean(settled)) if settled else float("nan"),
        collisions_after_settle=int(sum(a for a in after if a is not None)),
        unsettled_runs=sum(s is None for s in settles),
    )
