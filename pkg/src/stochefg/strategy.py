"""Sequence-form strategy arithmetic.

Strategies are plain float vectors indexed by one player's sequences.
Losses follow the minimization convention: P1's loss is ``l1 = A2 y`` and
P2's is ``l2 = -A2^T x``, where ``x^T A2 y`` is P2's expected utility.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .efg import P1, P2, GameError, GameTree, Treeplex


@dataclass(frozen=True)
class GradientVector:
    owner: int
    values: np.ndarray
    touched: int


class Violation(NamedTuple):
    sequence: int  # parent sequence whose flow constraint fails (0 = empty sequence)
    detail: str

    def __str__(self) -> str:
        return f"sequence {self.sequence}: {self.detail}"


def validate(tp: Treeplex, z: np.ndarray, tol: float = 1e-9) -> Violation | None:
    z = np.asarray(z, dtype=float)
    if z.shape != (tp.num_sequences,):
        raise GameError(f"strategy has length {z.shape}, expected {tp.num_sequences}")
    if np.any(z < 0):
        return Violation(int(np.flatnonzero(z < 0)[0]), "negative entry")
    if abs(z[0] - 1.0) > tol:
        return Violation(0, f"empty sequence has mass {z[0]!r}")
    if tp.num_infosets:
        err = np.abs(tp.infoset_sums(z) - z[tp.parent_seq])
        bad = np.flatnonzero(err > tol)
        if len(bad):
            i = int(bad[0])
            return Violation(int(tp.parent_seq[i]), f"infoset {i} children sum off by {err[i]:.3g}")
    return None


def is_valid(tp: Treeplex, z: np.ndarray, tol: float = 1e-9) -> bool:
    return validate(tp, z, tol) is None


def uniform_strategy(tp: Treeplex) -> np.ndarray:
    local = np.ones(tp.num_sequences)
    local[1:] = 1.0 / tp.num_actions[tp.seq_infoset[1:]]
    return tp.to_sequence_form(local)


def behavioral_to_sequence(tp: Treeplex, dists: Sequence[Sequence[float]], tol: float = 1e-9) -> np.ndarray:
    """``dists[I]`` is the action distribution at infoset ``I``."""
    if len(dists) != tp.num_infosets:
        raise GameError(f"expected {tp.num_infosets} distributions, got {len(dists)}")
    local = np.ones(tp.num_sequences)
    for i, d in enumerate(dists):
        d = np.asarray(d, dtype=float)
        if d.shape != (tp.num_actions[i],):
            raise GameError(f"infoset {i}: expected {tp.num_actions[i]} probabilities")
        if np.any(d < 0) or abs(d.sum() - 1.0) > tol:
            raise GameError(f"infoset {i}: distribution not normalized")
        local[tp.sequences(i)] = d
    return tp.to_sequence_form(local)


def gradient(game: GameTree, player: int, opponent: np.ndarray) -> GradientVector:
    """Exact loss of ``player`` against ``opponent``: ``A2 y`` for P1, ``-A2^T x`` for P2."""
    u2, s1, s2, c = game.leaf_data()
    if player == P1:
        vals = np.bincount(s1, weights=u2 * opponent[s2] * c, minlength=game.num_sequences(P1))
    elif player == P2:
        vals = -np.bincount(s2, weights=u2 * opponent[s1] * c, minlength=game.num_sequences(P2))
    else:
        raise GameError(f"bad player {player}")
    return GradientVector(player, vals, game.num_nodes)


def expected_utility(game: GameTree, x: np.ndarray, y: np.ndarray) -> float:
    """P2's expected utility; P1's is its negation."""
    u2, s1, s2, c = game.leaf_data()
    return float(np.sum(u2 * x[s1] * y[s2] * c))


def best_response_value(game: GameTree, player: int, opponent: np.ndarray) -> tuple[float, np.ndarray]:
    """Responder's best achievable expected utility and a pure maximizer."""
    loss = gradient(game, player, opponent).values
    val, br = game.treeplexes[player].best_response(loss)
    # the loss is the negated utility of the responder for both players
    return -val, br


def saddle_point_gap(game: GameTree, x: np.ndarray, y: np.ndarray) -> float:
    """max_yhat x^T A2 yhat - min_xhat xhat^T A2 y."""
    v2, _ = best_response_value(game, P2, x)  # = max_yhat x^T A2 yhat
    v1, _ = best_response_value(game, P1, y)  # = max_xhat -xhat^T A2 y
    return v2 + v1


def terminal_counts(tp: Treeplex) -> np.ndarray:
    """m[s]: number of terminal sequences in the subtree rooted at sequence s."""
    m = np.zeros(tp.num_sequences)
    m[tp.is_terminal_sequence()] = 1.0
    for lvl in tp.levels:
        # children are final by the time their level is reached
        sums = np.add.reduceat(m[lvl.seqs], lvl.starts)
        np.add.at(m, tp.parent_seq[lvl.infosets], sums)
    return m


def balanced_strategy(game: GameTree, player: int) -> np.ndarray:
    tp = game.treeplexes[player]
    if tp.num_infosets == 0:
        raise GameError(f"player {player} never acts")
    m = terminal_counts(tp)
    local = np.ones(tp.num_sequences)
    totals = tp.infoset_sums(m)
    local[1:] = m[1:] / totals[tp.seq_infoset[1:]]
    return tp.to_sequence_form(local)
