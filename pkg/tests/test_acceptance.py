"""Acceptance checks, one test and one PASS/FAIL line per criterion."""

import math

import numpy as np
import pytest

from stochefg import games
from stochefg.bounds import BoundError, azuma_regret_bound, freedman_regret_bound, gap_probability_bound
from stochefg.cli import ExperimentConfig, run_experiments
from stochefg.efg import P1, P2
from stochefg.estimators import KINDS, Estimator, ExpectationSampler
from stochefg.games import GameSpec
from stochefg.regret import ALGORITHMS, DilatedEntropy, make_minimizer, measure_regret
from stochefg.selfplay import RunConfig, gap_bound, run_batch
from stochefg.strategy import balanced_strategy, gradient, saddle_point_gap

from conftest import random_strategy, stacked_tree
from oracles import numerical_prox, random_two_level


@pytest.fixture
def verdict(capsys):
    def report(n, checks):
        """``checks`` maps a short label to (ok, detail)."""
        ok = all(c[0] for c in checks.values())
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}")
            for label, (good, detail) in checks.items():
                print(f"    {'ok  ' if good else 'FAIL'} {label}: {detail}")
        failed = [k for k, c in checks.items() if not c[0]]
        assert not failed, f"criterion {n} failed: {failed}"

    return report


def _eq(got, want):
    return got == want, f"{got} (want {want})"


def _close(got, want, rel=1e-12):
    # for values rebuilt through different float operation orders
    return math.isclose(got, want, rel_tol=rel), f"{got!r} (want {want!r})"


def test_criterion_1_game_sizes(verdict):
    checks = {}
    g = games.build_leduc(13)
    checks["leduc13 nodes"] = _eq(g.num_nodes, 166_336)
    checks["leduc13 sequences"] = _eq((g.num_sequences(P1), g.num_sequences(P2)), (6_007, 6_007))
    g = games.build_goofspiel(4)
    checks["goofspiel nodes"] = _eq(g.num_nodes, 54_421)
    checks["goofspiel sequences"] = _eq((g.num_sequences(P1), g.num_sequences(P2)), (21_329, 21_329))
    g = games.build_search(4)
    checks["search4 nodes"] = _eq(g.num_nodes, 21_613)
    checks["search4 defender sequences"] = _eq(g.num_sequences(P1), 2_029)
    checks["search4 attacker sequences"] = _eq(g.num_sequences(P2), 52)
    g = games.build_search(5)
    checks["search5 defender sequences"] = _eq(g.num_sequences(P1), 11_830)
    checks["search5 attacker sequences"] = _eq(g.num_sequences(P2), 69)
    g = games.build_battleship(3)
    checks["battleship nodes"] = _eq(g.num_nodes, 732_607)
    checks["battleship sequences"] = _eq((g.num_sequences(P1), g.num_sequences(P2)), (73_130, 253_940))
    verdict(1, checks)


def test_criterion_2_unbiasedness(verdict, kuhn, leduc3):
    rng = np.random.default_rng(2024)
    checks = {}
    variants = [(k, 1) for k in KINDS if k != "exact"] + [("external", 3), ("outcome", 3)]
    for name, game in (("kuhn", kuhn), ("leduc3", leduc3)):
        tol = 1e-12 * game.payoff_range
        x = random_strategy(game.treeplexes[P1], rng, 0.05)
        y = random_strategy(game.treeplexes[P2], rng, 0.05)
        for kind, n in variants:
            est = Estimator(game, kind, samples=n)
            err = max(
                np.abs(est.estimate(P1, y, ExpectationSampler()).values - gradient(game, P1, y).values).max(),
                np.abs(est.estimate(P2, x, ExpectationSampler()).values - gradient(game, P2, x).values).max(),
            )
            checks[f"{name} {kind} n={n}"] = (err <= tol, f"max error {err:.2e}")
    verdict(2, checks)


def test_criterion_3_balanced_strategy(verdict):
    checks = {}
    w = balanced_strategy(stacked_tree(), P1)
    err = np.abs(w[1:] - [2 / 3, 1 / 3, 1 / 3, 1 / 3]).max()
    checks["five-sequence example"] = (err <= 1e-15, f"{np.round(w[1:], 6).tolist()}")
    builders = {
        "matching_pennies": games.matching_pennies,
        "rock_paper_scissors": games.rock_paper_scissors,
        "kuhn": games.kuhn,
        "leduc3": lambda: games.build_leduc(3),
        "leduc13": lambda: games.build_leduc(13),
        "goofspiel4": lambda: games.build_goofspiel(4),
        "search4": lambda: games.build_search(4),
        "search5": lambda: games.build_search(5),
        "battleship3": lambda: games.build_battleship(3),
    }
    for name, build in builders.items():
        g = build()
        for p in (P1, P2):
            w = balanced_strategy(g, p)
            floor = 1.0 / (g.num_sequences(p) - 1)
            checks[f"{name} P{p + 1}"] = (w.min() >= floor - 1e-15, f"min {w.min():.3e} vs {floor:.3e}")
    verdict(3, checks)


def test_criterion_4_folk_lemma(verdict, mp, kuhn):
    checks = {}
    for name, game in (("matching_pennies", mp), ("kuhn", kuhn)):
        tol = 1e-9 * game.payoff_range
        tps = game.treeplexes
        for alg in ALGORITHMS:
            mins = [make_minimizer(alg, tp, None if alg == "regret_matching" else 1.0) for tp in tps]
            hist = ([], [])
            losses = ([], [])
            worst = -math.inf
            for t in range(1, 201):
                x, y = mins[P1].next_strategy(), mins[P2].next_strategy()
                l1, l2 = gradient(game, P1, y).values, gradient(game, P2, x).values
                mins[P1].observe(l1)
                mins[P2].observe(l2)
                hist[P1].append(x)
                hist[P2].append(y)
                losses[P1].append(l1)
                losses[P2].append(l2)
                gap = saddle_point_gap(game, np.mean(hist[P1], axis=0), np.mean(hist[P2], axis=0))
                r = measure_regret(tps[P1], hist[P1], losses[P1]) + measure_regret(tps[P2], hist[P2], losses[P2])
                worst = max(worst, gap - r / t)
            checks[f"{name} {alg}"] = (worst <= tol, f"max gap - (R1+R2)/T = {worst:.2e}")
    verdict(4, checks)


def test_criterion_5_prox(verdict):
    rng = np.random.default_rng(55)
    worst = 0.0
    for trial in range(100):
        tp = random_two_level(rng)
        dgf = DilatedEntropy(tp)
        g = rng.normal(size=tp.num_sequences)
        eta = float(10 ** rng.uniform(-1, 1))
        center = random_strategy(tp, rng, 0.1) if trial % 2 else None
        z = dgf.prox(g, eta, center)
        worst = max(worst, np.abs(z - numerical_prox(tp, dgf.beta, g, eta, center)).max())
    self_d, min_d = 0.0, math.inf
    for _ in range(1000):
        tp = random_two_level(rng)
        dgf = DilatedEntropy(tp)
        z, c = random_strategy(tp, rng, 0.01), random_strategy(tp, rng, 0.01)
        self_d = max(self_d, abs(dgf.bregman(z, z)))
        min_d = min(min_d, dgf.bregman(z, c))
    verdict(
        5,
        {
            "prox vs numerical minimizer": (worst <= 1e-6, f"max error {worst:.2e} over 100 instances"),
            "D(z, z) = 0": (self_d <= 1e-12, f"max |D(z,z)| {self_d:.2e}"),
            "D >= 0": (min_d >= -1e-12, f"min D {min_d:.2e} over 1000 pairs"),
        },
    )


def test_criterion_6_bound_calculators(verdict):
    e1 = math.exp(-1)
    checks = {}
    coeff = [gap_probability_bound(0, 0, 2, e1, d, d, d) / math.sqrt(2 / 2 * math.log(1 / e1)) for d in (1.0, 2.0, 7.0)]
    checks["gap tail coefficient 4 delta"] = _eq(coeff, [4.0, 8.0, 28.0])
    # per-player Azuma terms with M = M~ = delta, summed and divided by T
    d, T, p = 3.0, 50, 0.05
    per_player = azuma_regret_bound(0, d, d, T, p) * 2 / T
    checks["azuma composes to 4 delta"] = _close(per_player, 4 * d * math.sqrt(2 / T * math.log(1 / p)))
    checks["azuma hand value"] = _eq(azuma_regret_bound(0, 1, 1, 2, e1), 4.0)
    checks["gap hand value"] = _eq(gap_probability_bound(0, 0, 8, e1, 1, 1, 1), 2.0)
    rejected = []
    for t in range(1, 8):
        try:
            freedman_regret_bound(0, 1, 1, t, 0.05, 1)
        except BoundError:
            rejected.append(t)
    checks["freedman rejects T < 8"] = _eq(rejected, list(range(1, 8)))
    beta2 = math.log(3 * math.log(100) / (2 * 0.05))
    checks["freedman sigma = 0"] = _close(freedman_regret_bound(2.0, 1, 1, 100, 0.05, 0.0), 2.0 + 4 * 2 * beta2)
    p_unit = 3 * math.log(8) / (2 * math.e)
    for sigma in (1.0, 3.0):
        try:
            got = freedman_regret_bound(0, 1, 1, 8, p_unit, sigma)
        except BoundError as e:
            got = f"rejected ({e})"
        want = max(4 * sigma, 8.0)
        ok = isinstance(got, float) and abs(got - want) <= 1e-12
        checks[f"freedman beta = 1 point, sigma {sigma}"] = (ok, f"{got} (want {want})")
    verdict(6, checks)


@pytest.mark.slow
def test_criterion_7_convergence(verdict, leduc3_rm_batch):
    spec = GameSpec("leduc", {"ranks": 3})
    delta = leduc3_rm_batch.records[0].delta
    rm = leduc3_rm_batch.records
    rm_final = float(np.mean([r.final_gap for r in rm]))
    rm_first = float(np.mean([r.rows[0].gap for r in rm]))
    assert all(r.rows[0].iteration == 1 for r in rm)
    ftrl = {}
    for eta in (0.1, 1.0, 10.0, 100.0):
        batch = run_batch(RunConfig(spec, "ftrl", eta, "external"), range(50))
        ftrl[eta] = float(np.mean([r.final_gap for r in batch.records]))
    best_eta = min(ftrl, key=ftrl.get)
    held = np.mean([gap_bound(r, 0.05) >= r.final_gap for r in rm])
    verdict(
        7,
        {
            "(a) MCCFR final gap <= 0.2 delta": (rm_final <= 0.2 * delta, f"{rm_final:.4f} vs {0.2 * delta:.4f}"),
            "(a) MCCFR final gap <= 0.1 x iteration-1 gap": (
                rm_final <= 0.1 * rm_first,
                f"{rm_final:.4f} vs {0.1 * rm_first:.4f} (ratio {rm_final / rm_first:.3f})",
            ),
            "(b) best FTRL within 3x of MCCFR": (
                ftrl[best_eta] <= 3 * rm_final,
                f"eta={best_eta:g} gap {ftrl[best_eta]:.4f} vs {3 * rm_final:.4f}",
            ),
            "(c) gap bound holds in >= 90% of runs": (held >= 0.9, f"{held:.0%}"),
        },
    )


def test_criterion_8_determinism(verdict, tmp_path):
    def cfg(out):
        return ExperimentConfig(
            GameSpec("leduc", {"ranks": 3}),
            algorithms=("regret_matching", "omd"),
            estimators=("external", "balanced_outcome"),
            stepsizes=(1.0,),
            seeds=3,
            samples=2,
            budget_traversals=2.0,
            out_dir=out,
        )

    for d in ("a", "b"):
        assert run_experiments(cfg(tmp_path / d), log=lambda *_: None) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = [n for n in files if (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()]
    verdict(8, {"byte-identical CSVs": (len(same) == len(files) == 8, f"{len(same)}/{len(files)} files identical")})
