"""Self-play driver: two regret minimizers exchanging (estimated) losses."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .bounds import gap_probability_bound
from .efg import P1, P2, GameError, GameTree
from .estimators import Estimator, RngSampler, player_rngs
from .games import GameSpec
from .regret import RegretMeter, make_minimizer
from .strategy import saddle_point_gap

_GAMES: dict[tuple, GameTree] = {}


def load_game(spec: GameSpec) -> GameTree:
    """Build a game once per process."""
    key = (spec.variant, tuple(sorted(spec.resolved.items())))
    if key not in _GAMES:
        _GAMES[key] = spec.build()
    return _GAMES[key]


@dataclass(frozen=True)
class RunConfig:
    game: GameSpec
    algorithm: str = "regret_matching"
    stepsize: float | None = None
    estimator: str = "external"
    samples: int = 1
    budget_traversals: float = 50.0
    measure_every: int | None = None  # iterations; None picks the default schedule
    seed: int = 0
    dgf_scheme: str = "recursive"
    max_iterations: int | None = None

    def __post_init__(self):
        if not self.budget_traversals >= 0:
            raise GameError("budget must be nonnegative")
        if self.stepsize is not None and not self.stepsize > 0:
            raise GameError(f"stepsize must be positive, got {self.stepsize}")
        if self.algorithm in ("ftrl", "omd") and self.stepsize is None:
            raise GameError(f"{self.algorithm} needs a stepsize")
        if self.samples < 1:
            raise GameError("samples must be >= 1")
        if self.measure_every is not None and self.measure_every < 1:
            raise GameError("measure_every must be >= 1")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise GameError("max_iterations must be >= 0")


class Measurement(NamedTuple):
    iteration: int
    nodes_touched: int
    gap: float
    regret1: float  # regret of each minimizer on the losses it observed
    regret2: float


@dataclass
class RunRecord:
    config: RunConfig
    rows: list[Measurement]
    x_bar: np.ndarray | None
    y_bar: np.ndarray | None
    delta: float
    range_constants: tuple[float, float]
    wall_clock: float = field(default=0.0, compare=False)

    @property
    def iterations(self) -> int:
        return self.rows[-1].iteration if self.rows else 0

    @property
    def final_gap(self) -> float:
        return self.rows[-1].gap


def average_strategy(history: Sequence[np.ndarray]) -> np.ndarray:
    if len(history) == 0:
        raise GameError("cannot average an empty history")
    return np.mean(np.asarray(history, dtype=float), axis=0)


def run(config: RunConfig, game: GameTree | None = None) -> RunRecord:
    t0 = time.perf_counter()
    if game is None:
        game = load_game(config.game)
    tps = game.treeplexes
    mins = [make_minimizer(config.algorithm, tps[p], config.stepsize, config.dgf_scheme) for p in (P1, P2)]
    est = Estimator(game, config.estimator, config.samples)
    rngs = player_rngs(config.seed)
    samplers = [RngSampler(r) for r in rngs]
    meters = [RegretMeter(tps[p]) for p in (P1, P2)]
    budget = config.budget_traversals * game.num_nodes
    sums = [np.zeros(tp.num_sequences) for tp in tps]

    every = config.measure_every
    if every is None and not est.stochastic:
        every = 1
    checkpoint_step = budget / 100.0
    next_checkpoint = checkpoint_step

    cap = config.max_iterations
    rows: list[Measurement] = []
    touched = 0
    t = 0
    while touched < budget and (cap is None or t < cap):
        x = mins[P1].next_strategy()
        y = mins[P2].next_strategy()
        g1 = est.estimate(P1, y, samplers[P1])
        g2 = est.estimate(P2, x, samplers[P2])
        mins[P1].observe(g1.values)
        mins[P2].observe(g2.values)
        meters[P1].add(x, g1.values)
        meters[P2].add(y, g2.values)
        sums[P1] += x
        sums[P2] += y
        touched += g1.touched + g2.touched
        t += 1

        done = touched >= budget or t == cap
        if every is not None:
            due = t % every == 0
        else:
            due = t == 1 or touched >= next_checkpoint
            while next_checkpoint <= touched:
                next_checkpoint += checkpoint_step
        if due or done:
            gap = saddle_point_gap(game, sums[P1] / t, sums[P2] / t)
            rows.append(Measurement(t, touched, gap, meters[P1].regret, meters[P2].regret))

    x_bar = sums[P1] / t if t else None
    y_bar = sums[P2] / t if t else None
    return RunRecord(
        config,
        rows,
        x_bar,
        y_bar,
        game.payoff_range,
        (est.range_constant(P1), est.range_constant(P2)),
        time.perf_counter() - t0,
    )


class SummaryRow(NamedTuple):
    nodes_touched: float
    mean_gap: float
    std_gap: float


@dataclass
class BatchResult:
    records: list[RunRecord]
    summary: list[SummaryRow]


def summarize(records: Sequence[RunRecord]) -> list[SummaryRow]:
    """Mean and sample std of the gap, aligned by measurement index."""
    if not records:
        return []
    n = min(len(r.rows) for r in records)
    out = []
    for i in range(n):
        touched = np.array([r.rows[i].nodes_touched for r in records], dtype=float)
        gaps = np.array([r.rows[i].gap for r in records])
        # identical gaps must give exactly zero, not rounding residue
        std = float(gaps.std(ddof=1)) if len(gaps) > 1 and np.ptp(gaps) > 0 else 0.0
        out.append(SummaryRow(float(touched.mean()), float(gaps.mean()), std))
    return out


def run_batch(config: RunConfig, seeds: Sequence[int], workers: int = 1) -> BatchResult:
    if len(seeds) == 0:
        raise GameError("need at least one seed")
    configs = [replace(config, seed=int(s)) for s in seeds]
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, configs))
    else:
        records = [run(c) for c in configs]
    return BatchResult(records, summarize(records))


def gap_bound(record: RunRecord, p: float) -> float:
    """High-probability gap bound for a finished run from its measured regrets."""
    last = record.rows[-1]
    m1, m2 = record.range_constants
    return gap_probability_bound(
        regret1=last.regret1, regret2=last.regret2, T=last.iteration, p=p, delta=record.delta, m1=m1, m2=m2
    )


__all__ = [
    "RunConfig",
    "RunRecord",
    "Measurement",
    "SummaryRow",
    "BatchResult",
    "run",
    "run_batch",
    "summarize",
    "average_strategy",
    "gap_bound",
    "load_game",
]
