"""Command-line experiment runner and bound calculator.

``stochefg run`` sweeps game x algorithm x estimator x stepsize over seeds
and writes one CSV per combination plus a summary CSV.  ``stochefg bounds``
prints the concentration bounds for given constants.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .bounds import BoundError, BoundInputs
from .efg import GameError
from .estimators import KINDS, OUTCOME_KINDS
from .games import GameSpec
from .regret import ALGORITHMS
from .selfplay import RunConfig, RunRecord, run, summarize

DEFAULT_STEPSIZES = (0.1, 1.0, 10.0, 100.0)
CONFIG_KEYS = (
    "game",
    "ranks",
    "horizon",
    "shots",
    "algorithm",
    "estimator",
    "stepsize",
    "seeds",
    "samples",
    "budget-traversals",
    "measure-every",
    "out-dir",
    "workers",
    "smoke",
)
GAME_PARAMS = {"ranks", "horizon", "shots"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    game: GameSpec
    algorithms: tuple[str, ...] = ALGORITHMS
    estimators: tuple[str, ...] = ("external", "outcome")
    stepsizes: tuple[float, ...] = DEFAULT_STEPSIZES
    seeds: int | None = None  # None: 10 for outcome variants, 50 otherwise
    samples: int | None = None  # None: 100 for outcome variants, 1 otherwise
    budget_traversals: float = 50.0
    measure_every: int | None = None
    out_dir: Path = Path("results")
    workers: int = 1

    def seeds_for(self, estimator: str) -> int:
        if self.seeds is not None:
            return self.seeds
        return 10 if estimator in OUTCOME_KINDS else 50

    def samples_for(self, estimator: str) -> int:
        if self.samples is not None:
            return self.samples
        return 100 if estimator in OUTCOME_KINDS else 1

    def combinations(self) -> list[RunConfig]:
        out = []
        for alg in self.algorithms:
            for est in self.estimators:
                etas: Iterable[float | None] = [None] if alg == "regret_matching" else self.stepsizes
                for eta in etas:
                    out.append(
                        RunConfig(
                            self.game,
                            alg,
                            eta,
                            est,
                            self.samples_for(est),
                            self.budget_traversals,
                            self.measure_every,
                        )
                    )
        return out


def _as_list(value: Any) -> list:
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = str(value).split(",")
    items = [i.strip() if isinstance(i, str) else i for i in items]
    return [i for i in items if i != ""]


def _positive(name: str, value: Any, kind=float):
    try:
        v = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {value!r}") from None
    if kind is int and float(value) != v:
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    if not v > 0 or (kind is float and not math.isfinite(v)):
        raise ConfigError(f"{name}: must be positive, got {value!r}")
    return v


def parse_config(values: dict) -> ExperimentConfig:
    """Validate a mapping of config keys (hyphenated) and fill in defaults."""
    values = {k.replace("_", "-"): v for k, v in values.items() if v is not None}
    unknown = sorted(set(values) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    if "game" not in values:
        raise ConfigError("game: required")
    params = {k: _positive(k, values[k], int) for k in GAME_PARAMS if k in values}
    try:
        spec = GameSpec(str(values["game"]), params)
    except GameError as e:
        raise ConfigError(f"game: {e}") from None

    kw: dict[str, Any] = {"game": spec}
    if "algorithm" in values:
        algs = tuple(_as_list(values["algorithm"]))
        bad = [a for a in algs if a not in ALGORITHMS]
        if bad or not algs:
            raise ConfigError(f"algorithm: invalid {bad or 'empty'}; choose from {', '.join(ALGORITHMS)}")
        kw["algorithms"] = algs
    if "estimator" in values:
        ests = tuple(_as_list(values["estimator"]))
        bad = [e for e in ests if e not in KINDS]
        if bad or not ests:
            raise ConfigError(f"estimator: invalid {bad or 'empty'}; choose from {', '.join(KINDS)}")
        kw["estimators"] = ests
    if "stepsize" in values:
        etas = tuple(_positive("stepsize", v) for v in _as_list(values["stepsize"]))
        if not etas:
            raise ConfigError("stepsize: empty list")
        kw["stepsizes"] = etas
    if "seeds" in values:
        kw["seeds"] = _positive("seeds", values["seeds"], int)
    if "samples" in values:
        kw["samples"] = _positive("samples", values["samples"], int)
    if "budget-traversals" in values:
        kw["budget_traversals"] = _positive("budget-traversals", values["budget-traversals"])
    if "measure-every" in values:
        kw["measure_every"] = _positive("measure-every", values["measure-every"], int)
    if "workers" in values:
        kw["workers"] = _positive("workers", values["workers"], int)
    if "out-dir" in values:
        kw["out_dir"] = Path(values["out-dir"])
    return ExperimentConfig(**kw)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _eta_tag(eta: float | None) -> str:
    return "na" if eta is None else f"{eta:g}"


def combination_stem(cfg: RunConfig, n_seeds: int) -> str:
    return (
        f"{cfg.game.label}__{cfg.algorithm}__{cfg.estimator}__eta{_eta_tag(cfg.stepsize)}"
        f"__n{cfg.samples}__b{cfg.budget_traversals:g}__seeds{n_seeds}"
    )


def write_run_csv(path: Path, records: Sequence[RunRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "iteration", "nodes_touched", "gap"])
        for rec in records:
            for row in rec.rows:
                w.writerow([rec.config.seed, row.iteration, row.nodes_touched, _fmt(row.gap)])


def write_summary_csv(path: Path, records: Sequence[RunRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["nodes_touched", "mean_gap", "std_gap"])
        for row in summarize(records):
            w.writerow([_fmt(row.nodes_touched), _fmt(row.mean_gap), _fmt(row.std_gap)])


def run_experiments(config: ExperimentConfig, log=print) -> int:
    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        probe = config.out_dir / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        print(f"error: cannot write to {config.out_dir}: {e}", file=sys.stderr)
        return 2

    combos = config.combinations()
    tasks: list[RunConfig] = []
    spans = []
    for c in combos:
        n = config.seeds_for(c.estimator)
        spans.append((len(tasks), n))
        tasks.extend(replace(c, seed=s) for s in range(n))

    try:
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                records = list(pool.map(run, tasks))
        else:
            records = [run(t) for t in tasks]
    except (GameError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    for c, (start, n) in zip(combos, spans):
        recs = records[start : start + n]
        stem = combination_stem(c, n)
        write_run_csv(config.out_dir / f"{stem}.csv", recs)
        write_summary_csv(config.out_dir / f"{stem}.summary.csv", recs)
        final = np.mean([r.final_gap for r in recs if r.rows]) if any(r.rows for r in recs) else float("nan")
        log(f"{stem}: mean final gap {final:.6g}")
    return 0


def run_smoke(log=print) -> int:
    """Every tiny game x algorithm x estimator for 100 iterations."""
    failures = 0
    for game in ("matching_pennies", "kuhn"):
        spec = GameSpec(game)
        for alg in ALGORITHMS:
            for est in KINDS:
                cfg = RunConfig(
                    spec,
                    alg,
                    None if alg == "regret_matching" else 1.0,
                    est,
                    budget_traversals=math.inf,
                    measure_every=100,
                    max_iterations=100,
                )
                rec = run(cfg)
                gap = rec.final_gap
                ok = rec.iterations == 100 and math.isfinite(gap) and gap >= -1e-12
                failures += not ok
                log(f"{'ok  ' if ok else 'FAIL'} {game} {alg} {est} gap={gap:.6g}")
    return 1 if failures else 0


def _bounds_report(args) -> int:
    try:
        inputs = BoundInputs(
            T=args.T,
            p=args.p,
            delta=args.delta,
            M=args.M,
            m1=args.m1,
            m2=args.m2,
            regret1=args.regret1,
            regret2=args.regret2,
            sigma=args.sigma,
            L=args.L,
            D0=args.D0,
        )
        rows = inputs.report()
    except BoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    width = max(len(name) for name, _ in rows)
    print(f"{'bound':<{width}}  value")
    for name, val in rows:
        print(f"{name:<{width}}  {_fmt(val) if isinstance(val, float) else val}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochefg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run self-play experiments and write CSVs")
    r.add_argument("--config", type=Path, help="JSON file with config keys; flags override it")
    r.add_argument("--game", choices=["leduc", "goofspiel", "search", "battleship", "matching_pennies", "kuhn"])
    r.add_argument("--ranks", type=int)
    r.add_argument("--horizon", type=int)
    r.add_argument("--shots", type=int)
    r.add_argument("--algorithm", help=f"comma list from {', '.join(ALGORITHMS)}")
    r.add_argument("--estimator", help=f"comma list from {', '.join(KINDS)}")
    r.add_argument("--stepsize", help="comma list of positive stepsizes")
    r.add_argument("--seeds", type=int, help="seeds per combination (seeds 0..n-1)")
    r.add_argument("--samples", type=int, help="estimates averaged per gradient")
    r.add_argument("--budget-traversals", type=float, dest="budget_traversals")
    r.add_argument("--measure-every", type=int, dest="measure_every")
    r.add_argument("--out-dir", type=Path, dest="out_dir")
    r.add_argument("--workers", type=int)
    r.add_argument("--smoke", action="store_true", help="quick run over the tiny games, then exit")

    b = sub.add_parser("bounds", help="print concentration bounds")
    b.add_argument("--T", type=int, required=True)
    b.add_argument("--p", type=float, default=0.05)
    b.add_argument("--delta", type=float, default=1.0, help="payoff range")
    b.add_argument("--M", type=float, help="true-loss range constant (default delta)")
    b.add_argument("--m1", type=float, help="estimator range constant of P1 (default delta)")
    b.add_argument("--m2", type=float, help="estimator range constant of P2 (default delta)")
    b.add_argument("--regret1", type=float, default=0.0)
    b.add_argument("--regret2", type=float, default=0.0)
    b.add_argument("--sigma", type=float)
    b.add_argument("--L", type=float)
    b.add_argument("--D0", type=float)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "bounds":
        return _bounds_report(args)
    values: dict[str, Any] = {}
    if args.config is not None:
        try:
            values = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as e:
            print(f"error: cannot read config {args.config}: {e}", file=sys.stderr)
            return 2
        if not isinstance(values, dict):
            print("error: config file must hold a JSON object", file=sys.stderr)
            return 2
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "smoke") and v is not None}
    values.update({k.replace("_", "-"): v for k, v in flags.items()})
    if args.smoke or values.pop("smoke", False):
        return run_smoke()
    try:
        config = parse_config(values)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return run_experiments(config)


if __name__ == "__main__":
    sys.exit(main())
