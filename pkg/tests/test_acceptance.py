"""Acceptance criteria.  Each test prints one PASS/FAIL line with its measurement."""
import filecmp
import json
import time

import numpy as np
import pytest

from crnjam import cli
from crnjam import estimators as est
from crnjam.config import config_from_dict, make_config
from crnjam.selfcheck import inversion_failures, simulate_collision_rate
from crnjam.sim_runner import (
    correct_estimates,
    ranking_eps_correct,
    regret_curve,
    run_experiment,
)

pytestmark = pytest.mark.slow

P8 = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
SEED = 0

# pinned tolerances
C1_MAX_SECONDS = 1.0
C2_SLOTS = 1_000_000
C2_MAX_Z = 3.0
C2_MAX_SECONDS = 30.0
C3_RUNS = 200
C3_MIN_CORRECT = 0.90
C3_MAX_SECONDS = 10.0
C4_WINDOW = 2000
C4_SLOPE_PER_SU = 0.01
C5_RUNS = 50
C5_MAX_SECONDS = 300.0
C6_RUNS = 100
C6_DELTA = 0.3
C6_EPSILON = 0.05
C6_MAX_SECONDS = 120.0


def report(capsys, label: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n[{label}] {'PASS' if ok else 'FAIL'}  {detail}")


# 1 -------------------------------------------------------------------------

def test_c1_inversion_identities(capsys):
    start = time.perf_counter()
    failures = inversion_failures(max_n=10, max_k=20)
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < C1_MAX_SECONDS
    report(capsys, "C1 inversion identities", ok,
           f"failures={len(failures)} time={elapsed:.2f}s (limit {C1_MAX_SECONDS}s)")
    assert not failures
    assert elapsed < C1_MAX_SECONDS


# 2 -------------------------------------------------------------------------

def test_c2_closed_form_vs_monte_carlo(capsys):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    checks = [simulate_collision_rate(mode, k, n, j, C2_SLOTS, rng)
              for k, n, j in ((16, 8, 4), (8, 4, 2), (10, 5, 1))
              for mode in (est.COORDINATED, est.UNCOORDINATED)]
    elapsed = time.perf_counter() - start
    worst = max(abs(c.z) for c in checks)
    ok = worst <= C2_MAX_Z and elapsed < C2_MAX_SECONDS
    report(capsys, "C2 collision rates", ok,
           f"max|z|={worst:.2f} (limit {C2_MAX_Z}) time={elapsed:.1f}s (limit {C2_MAX_SECONDS}s)")
    assert all(abs(c.z) <= C2_MAX_Z for c in checks)
    assert elapsed < C2_MAX_SECONDS


# 3 and 4 -------------------------------------------------------------------

def _c3_config(algorithm, jammer_mode=None):
    extra = {"jammer_mode": jammer_mode} if jammer_mode else {}
    return make_config(algorithm, 8, 4, 2, P8, t_c=3000, t_o=50, t_j=1000, horizon=7000,
                       runs=C3_RUNS, seed=SEED, name=algorithm, **extra)


@pytest.fixture(scope="module")
def c3_runs():
    out, start = {}, time.perf_counter()
    for alg in ("cdj", "cnj", "cuj"):
        out[alg] = run_experiment(_c3_config(alg))
    learning_seconds = time.perf_counter() - start
    for mode in (est.COORDINATED, est.UNCOORDINATED):
        for alg in ("myopic", "mc"):
            out[(alg, mode)] = run_experiment(_c3_config(alg, mode))
    return out, learning_seconds


@pytest.mark.parametrize("algorithm", ["cdj", "cnj", "cuj"])
def test_c3_estimates_correct(c3_runs, algorithm, capsys):
    runs, _ = c3_runs
    frac = np.mean([correct_estimates(tr, 4, 2) for tr in runs[algorithm]])
    ok = frac >= C3_MIN_CORRECT
    report(capsys, f"C3 {algorithm} N,J correct", ok,
           f"fraction={frac:.3f} (need >= {C3_MIN_CORRECT})")
    assert frac >= C3_MIN_CORRECT


@pytest.mark.parametrize("algorithm", ["cdj", "cnj", "cuj"])
def test_c3_no_collisions_after_settle(c3_runs, algorithm, capsys):
    runs, _ = c3_runs
    good = [tr for tr in runs[algorithm] if correct_estimates(tr, 4, 2)]
    after = [tr.collisions_after_settle() for tr in good]
    unsettled = sum(a is None for a in after)
    total = sum(a for a in after if a is not None)
    dirty = sum(1 for a in after if a)
    ok = unsettled == 0 and total == 0
    report(capsys, f"C3 {algorithm} orthogonality", ok,
           f"SU-SU collisions after last settle={total} in {dirty}/{len(good)} correct runs, "
           f"unsettled={unsettled} (need 0)")
    assert unsettled == 0
    assert total == 0


def test_c3_runtime(c3_runs, capsys):
    _, seconds = c3_runs
    ok = seconds < C3_MAX_SECONDS
    report(capsys, "C3 runtime", ok, f"{seconds:.1f}s for 3 x {C3_RUNS} runs (limit {C3_MAX_SECONDS}s)")
    assert seconds < C3_MAX_SECONDS


@pytest.mark.parametrize("algorithm", ["cdj", "cnj", "cuj"])
def test_c4_regret_flattens(c3_runs, algorithm, capsys):
    runs, _ = c3_runs
    slope = regret_curve(runs[algorithm]).slope(C4_WINDOW)
    limit = C4_SLOPE_PER_SU * 4
    ok = slope < limit
    report(capsys, f"C4 {algorithm} final slope", ok,
           f"slope over last {C4_WINDOW} slots={slope:.4f} (need < {limit})")
    assert slope < limit


@pytest.mark.parametrize("algorithm", ["cdj", "cnj", "cuj"])
@pytest.mark.parametrize("baseline", ["myopic", "mc"])
def test_c4_beats_baselines(c3_runs, algorithm, baseline, capsys):
    runs, _ = c3_runs
    mode = est.UNCOORDINATED if algorithm == "cuj" else est.COORDINATED
    ours = regret_curve(runs[algorithm])
    theirs = regret_curve(runs[(baseline, mode)])
    ok = theirs.final > ours.final
    report(capsys, f"C4 {algorithm} vs {baseline} ({mode} jammers)", ok,
           f"final regret {ours.final:.0f} +- {ours.stderr_regret[-1]:.0f} vs "
           f"{theirs.final:.0f} +- {theirs.stderr_regret[-1]:.0f} (baseline must be larger)")
    assert theirs.final > ours.final


# 5 -------------------------------------------------------------------------

SWEEP_SCHEDULES = {"cdj": (13000, 0, 0), "cnj": (10000, 50, 1000), "cuj": (10000, 50, 1000)}
SWEEPS = {
    # name: (points as (k, n, j), expected direction)
    "N at K=16 J=6": ([(16, 7, 6), (16, 8, 6), (16, 9, 6)], "increasing"),
    "K at N=4 J=2": ([(8, 4, 2), (10, 4, 2), (12, 4, 2), (14, 4, 2)], "increasing"),
    "J at N=8 K=16": ([(16, 8, 4), (16, 8, 5), (16, 8, 6), (16, 8, 7)], "decreasing"),
}


@pytest.fixture(scope="module")
def c5_results():
    out, start = {}, time.perf_counter()
    for alg, (t_c, t_o, t_j) in SWEEP_SCHEDULES.items():
        for name, (points, _) in SWEEPS.items():
            finals = []
            for k, n, j in points:
                cfg = make_config(alg, k, n, j, "spread", t_c=t_c, t_o=t_o, t_j=t_j,
                                  horizon="auto", runs=C5_RUNS, seed=SEED)
                curve = regret_curve(run_experiment(cfg))
                finals.append((curve.final, float(curve.stderr_regret[-1])))
            out[(alg, name)] = finals
    return out, time.perf_counter() - start


@pytest.mark.parametrize("algorithm", list(SWEEP_SCHEDULES))
@pytest.mark.parametrize("sweep", list(SWEEPS))
def test_c5_trend(c5_results, algorithm, sweep, capsys):
    results, _ = c5_results
    finals = [f for f, _ in results[(algorithm, sweep)]]
    diffs = np.diff(finals)
    direction = SWEEPS[sweep][1]
    ok = bool(np.all(diffs > 0) if direction == "increasing" else np.all(diffs < 0))
    shown = ", ".join(f"{f:.0f}+-{s:.0f}" for f, s in results[(algorithm, sweep)])
    report(capsys, f"C5 {algorithm} over {sweep}", ok, f"{direction}? final regrets {shown}")
    assert ok


def test_c5_runtime(c5_results, capsys):
    _, seconds = c5_results
    ok = seconds < C5_MAX_SECONDS
    report(capsys, "C5 runtime", ok, f"{seconds:.0f}s (limit {C5_MAX_SECONDS:.0f}s)")
    assert seconds < C5_MAX_SECONDS


# 6 -------------------------------------------------------------------------

def test_c6_theorem_schedule(capsys):
    cfg = config_from_dict({
        "name": "theorem", "algorithm": "cnj", "k": 8, "n": 4, "j": 2, "p": list(P8),
        "theta": 0.45, "horizon": "auto", "runs": C6_RUNS, "seed": SEED,
        "schedule": {"kind": "theorem", "delta": C6_DELTA, "epsilon": C6_EPSILON, "gamma": 0.4},
    })
    s = cfg.schedule
    assert (s.t_c, s.t_o, s.t_j) == (169757, 196, 5127)
    start = time.perf_counter()
    runs = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    frac = np.mean([
        correct_estimates(tr, 4, 2) and all(ranking_eps_correct(pi, P8, C6_EPSILON) for pi in tr.pi)
        for tr in runs
    ])
    ok = frac >= 1 - C6_DELTA and elapsed < C6_MAX_SECONDS
    report(capsys, "C6 theorem schedule", ok,
           f"correct fraction={frac:.2f} (need >= {1 - C6_DELTA}) time={elapsed:.0f}s "
           f"(limit {C6_MAX_SECONDS:.0f}s)")
    assert frac >= 1 - C6_DELTA
    assert elapsed < C6_MAX_SECONDS


# 7 -------------------------------------------------------------------------

def test_c7_determinism(tmp_path, capsys):
    raw = {"name": "det", "algorithm": "cuj", "k": 8, "n": 4, "j": 2, "p": list(P8),
           "horizon": 2500, "schedule": {"t_c": 1000, "t_o": 50, "t_j": 500},
           "runs": 12, "seed": 5}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(raw))
    dirs = []
    for i, extra in enumerate(([], [], ["--parallel", "2"], ["--parallel", "3"])):
        out = tmp_path / f"out{i}"
        assert cli.main(["run", "--config", str(path), "--out", str(out), *extra]) == 0
        dirs.append(out)
    files = ("regret.csv", "summary.csv", "config.json")
    same = all(
        filecmp.cmp(dirs[0] / f, d / f, shallow=False) for d in dirs[1:] for f in files
    )
    report(capsys, "C7 determinism", same,
           "serial x2, --parallel 2, --parallel 3 outputs byte-identical" if same
           else "outputs differ")
    assert same
