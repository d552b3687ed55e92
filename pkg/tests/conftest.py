import numpy as np
import pytest

from stochefg import games
from stochefg.efg import GameBuilder, P1, P2, Treeplex


def random_strategy(tp: Treeplex, rng: np.random.Generator, floor: float = 0.0) -> np.ndarray:
    local = np.ones(tp.num_sequences)
    for i in range(tp.num_infosets):
        r = rng.random(tp.num_actions[i]) + floor
        local[tp.sequences(i)] = r / r.sum()
    return tp.to_sequence_form(local)


def path_reach(game, leaf, x_local, y_local):
    """(chance, P1, P2) reach of ``leaf`` from explicit parent walking."""
    c = p1 = p2 = 1.0
    v = leaf
    while game.parent[v] >= 0:
        u = int(game.parent[v])
        a = int(game.action[v])
        pl = int(game.player[u])
        if pl == P1:
            p1 *= x_local[int(game.treeplexes[P1].first_seq[game.infoset[u]]) + a]
        elif pl == P2:
            p2 *= y_local[int(game.treeplexes[P2].first_seq[game.infoset[u]]) + a]
        else:
            c *= game.edge_prob[v]
        v = u
    return c, p1, p2


def stacked_tree():
    """P1 root infoset {a, b}; a leads to a second P1 infoset with two terminal actions."""
    b = GameBuilder("stacked")
    root = b.decision(P1, "I0", 2)
    inner = b.decision(P1, "I1", 2)
    b.attach(root, inner)
    b.attach(inner, b.terminal(1.0))
    b.attach(inner, b.terminal(-1.0))
    b.attach(root, b.terminal(0.0))
    return b.build()


@pytest.fixture(scope="session")
def mp():
    return games.matching_pennies()


@pytest.fixture(scope="session")
def kuhn():
    return games.kuhn()


@pytest.fixture(scope="session")
def leduc3():
    return games.build_leduc(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def leduc3_rm_batch():
    """Regret matching with external sampling on Leduc-3, 50 seeds, default budget."""
    from stochefg.games import GameSpec
    from stochefg.selfplay import RunConfig, run_batch

    return run_batch(RunConfig(GameSpec("leduc", {"ranks": 3}), "regret_matching", None, "external"), range(50))
