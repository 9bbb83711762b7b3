"""Command-line entry point: ``crnjam run|sweep|phase-lengths|selfcheck``."""
from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import estimators as est
from .config import ExperimentConfig, config_from_dict
from .errors import ConfigurationError, CrnJamError, ModelError
from .selfcheck import inversion_failures, simulate_collision_rate
from .sim_runner import RegretCurve, Summary, regret_curve, run_experiment, summarize

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3, 4

SUMMARY_FIELDS = ("name", "algorithm", "k", "n", "j", "runs", "final_regret", "stderr_regret",
                  "correct_fraction", "mean_settle_slot", "collisions_after_settle",
                  "unsettled_runs")


def natural_key(name: str):
    return [int(part) if part.isdigit() else part for part in re.split(r"(\d+)", name)]


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_regret(curve: RegretCurve, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("slot", "mean_regret", "stderr_regret", "mean_throughput"))
        for t, (m, s, th) in enumerate(
            zip(curve.mean_regret, curve.stderr_regret, curve.mean_throughput), start=1
        ):
            w.writerow((t, _fmt(m), _fmt(s), _fmt(th)))


def write_summary(rows: list[tuple[ExperimentConfig, Summary]], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for cfg, s in sorted(rows, key=lambda row: natural_key(row[0].name)):
            w.writerow((cfg.name, cfg.algorithm, cfg.k, cfg.n, cfg.j, cfg.runs,
                        _fmt(s.final_regret), _fmt(s.stderr_regret), _fmt(s.correct_fraction),
                        _fmt(s.mean_settle_slot), s.collisions_after_settle, s.unsettled_runs))


def emit_results(results: list[tuple[ExperimentConfig, RegretCurve, Summary]], out: Path) -> None:
    """regret.csv and config.json per config (in a subdirectory when there are
    several), plus one summary.csv."""
    out.mkdir(parents=True, exist_ok=True)
    single = len(results) == 1
    for cfg, curve, _ in results:
        target = out if single else out / cfg.name
        target.mkdir(parents=True, exist_ok=True)
        write_regret(curve, target / "regret.csv")
        (target / "config.json").write_text(cfg.to_json(), encoding="utf-8")
    write_summary([(cfg, s) for cfg, _, s in results], out / "summary.csv")


def _load_raw(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    return raw


def _apply_overrides(raw: dict, args) -> dict:
    raw = dict(raw)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.runs is not None:
        raw["runs"] = args.runs
    return raw


def _execute(cfg: ExperimentConfig, parallel: int):
    trajectories = run_experiment(cfg, parallel=parallel)
    return cfg, regret_curve(trajectories), summarize(cfg, trajectories)


def cmd_run(args) -> int:
    cfg = config_from_dict(_apply_overrides(_load_raw(args.config), args))
    result = _execute(cfg, args.parallel)
    emit_results([result], Path(args.out))
    s = result[2]
    print(f"{cfg.name}: final regret {s.final_regret:.2f} +- {s.stderr_regret:.2f}, "
          f"correct {s.correct_fraction:.3f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _apply_overrides(_load_raw(args.config), args)
    stem = base.get("name", "run")
    configs = []
    for value in args.values:
        raw = dict(base, **{args.vary: value, "name": f"{stem}-{args.vary}{value}"})
        configs.append(config_from_dict(raw))
    results = []
    for cfg in configs:
        results.append(_execute(cfg, args.parallel))
        print(f"{cfg.name}: final regret {results[-1][2].final_regret:.2f}")
    emit_results(results, Path(args.out))
    return EXIT_OK


def cmd_phase_lengths(args) -> int:
    params = est.LearningParams(args.delta, args.epsilon, args.gamma)
    print("mode,t_c,t_o,t_j,t_l")
    for mode in args.modes:
        s = est.phase_lengths(mode, args.k, args.theta, params)
        print(f"{mode},{s.t_c},{s.t_o},{s.t_j},{s.learning}")
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    failures = inversion_failures()
    print(f"inversion identities: {'ok' if not failures else f'{len(failures)} failures'}")
    ok = not failures
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    for k, n, j in ((16, 8, 4), (8, 4, 2), (10, 5, 1)):
        for mode in (est.COORDINATED, est.UNCOORDINATED):
            chk = simulate_collision_rate(mode, k, n, j, args.slots, rng)
            ok &= chk.ok
            print(f"collision rate {mode} K={k} N={n} J={j}: empirical {chk.empirical:.5f} "
                  f"closed-form {chk.expected:.5f} z={chk.z:+.2f} {'ok' if chk.ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crnjam", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--runs", type=int, help="number of runs (overrides config)")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--parallel", type=int, default=1, help="worker processes")

    p_run = sub.add_parser("run", help="simulate one config")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="vary one of n, k, j over a list of values")
    common(p_sweep)
    p_sweep.add_argument("--vary", choices=("n", "k", "j"), required=True)
    p_sweep.add_argument("--values", type=int, nargs="+", required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_ph = sub.add_parser("phase-lengths", help="learning schedules guaranteeing confidence 1-delta")
    p_ph.add_argument("--k", type=int, required=True)
    p_ph.add_argument("--theta", type=float, required=True)
    p_ph.add_argument("--delta", type=float, required=True)
    p_ph.add_argument("--epsilon", type=float, required=True)
    p_ph.add_argument("--gamma", type=float, required=True)
    p_ph.add_argument("--modes", nargs="+", choices=("cdj", "cnj", "cuj"),
                      default=["cdj", "cnj", "cuj"])
    p_ph.set_defaults(func=cmd_phase_lengths)

    p_chk = sub.add_parser("selfcheck", help="closed forms vs inversions and simulation")
    p_chk.add_argument("--seed", type=int)
    p_chk.add_argument("--slots", type=int, default=1_000_000)
    p_chk.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "parallel", 1) < 1:
        print("error: --parallel must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigurationError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CrnJamError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
