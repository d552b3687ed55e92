"""Unbiased estimators of the loss vectors ``A2 y`` and ``-A2^T x``.

Every sampling estimator is one depth-first traversal parameterized by which
node kinds are sampled.  Random choices go through a :class:`Sampler`; the
:class:`ExpectationSampler` replaces each draw by a probability-weighted
branch over all outcomes, which turns the same traversal into an exact
computation of the estimator's mean.
"""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .efg import CHANCE, P1, P2, TERMINAL, GameError, GameTree
from .strategy import GradientVector, balanced_strategy, gradient, uniform_strategy

KINDS = ("exact", "external", "opponent", "chance", "outcome", "balanced_outcome")
OUTCOME_KINDS = ("outcome", "balanced_outcome")


class Sampler(Protocol):
    def branch(self, probs: list[float]) -> list[tuple[int, float]]:
        """Outcomes to follow and the weight each contributes."""
        ...


class RngSampler:
    """One inverse-CDF draw per call, actions in index order."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def branch(self, probs):
        cum = list(itertools.accumulate(probs))
        u = self.rng.random() * cum[-1]
        a = min(bisect.bisect_right(cum, u), len(cum) - 1)
        while probs[a] <= 0:  # only reachable through rounding at the top end
            a -= 1
        return [(a, 1.0)]


class ExpectationSampler:
    """Follows every positive-probability outcome, weighted by its probability."""

    def branch(self, probs):
        return [(a, p) for a, p in enumerate(probs) if p > 0]


def player_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent streams for the two players of one run."""
    ss = np.random.SeedSequence(seed)
    return tuple(np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(2))


class _Flat:
    """Python-list view of a game, faster than numpy scalar access in recursion."""

    def __init__(self, game: GameTree):
        self.player = game.player.tolist()
        self.start = game.child_start.tolist()
        self.nchild = game.num_children.tolist()
        self.children = game.children.tolist()
        self.infoset = game.infoset.tolist()
        self.u2 = (-game.u1).tolist()
        self.edge_prob = game.edge_prob.tolist()
        self.first_seq = tuple(tp.first_seq.tolist() for tp in game.treeplexes)
        self.chance_probs = {}
        for v in np.flatnonzero(game.player == CHANCE).tolist():
            kids = self.children[self.start[v] : self.start[v] + self.nchild[v]]
            self.chance_probs[v] = [self.edge_prob[k] for k in kids]


def _flat(game: GameTree) -> _Flat:
    return game._cache("flat", lambda: _Flat(game))


def sampled_traversal(
    game: GameTree,
    owner: int,
    opponent: np.ndarray,
    sampler: Sampler,
    *,
    sample_chance: bool,
    sample_opponent: bool,
    owner_sampling: np.ndarray | None = None,
) -> GradientVector:
    """Traverse from the root, sampling the chosen node kinds and branching on the rest.

    Branched chance/opponent nodes scale the subtree by their probability.
    With ``owner_sampling`` (a sequence-form strategy) the owner is sampled
    too and the leaf value is importance-weighted by 1/w[sigma_owner].
    """
    f = _flat(game)
    tp_opp = game.treeplexes[1 - owner]
    opp_local = tp_opp.to_behavioral(opponent).tolist()
    own_first = f.first_seq[owner]
    opp_first = f.first_seq[1 - owner]
    w_local = None
    if owner_sampling is not None:
        w_local = game.treeplexes[owner].to_behavioral(owner_sampling).tolist()
    sign = 1.0 if owner == P1 else -1.0
    out = np.zeros(game.num_sequences(owner))
    touched = 0

    # explicit stack of (node, owner sequence so far, scale)
    stack = [(0, 0, 1.0)]
    player, start, nchild, children, infoset = f.player, f.start, f.nchild, f.children, f.infoset
    while stack:
        v, s, scale = stack.pop()
        touched += 1
        pl = player[v]
        if pl == TERMINAL:
            out[s] += scale * sign * f.u2[v]
            continue
        kids = children[start[v] : start[v] + nchild[v]]
        if pl == owner:
            base = own_first[infoset[v]]
            if w_local is None:
                for a in range(len(kids) - 1, -1, -1):
                    stack.append((kids[a], base + a, scale))
            else:
                probs = w_local[base : base + len(kids)]
                for a, wt in reversed(sampler.branch(probs)):
                    stack.append((kids[a], base + a, scale * wt / probs[a]))
            continue
        if pl == CHANCE:
            probs = f.chance_probs[v]
            sample = sample_chance
        else:
            base = opp_first[infoset[v]]
            probs = opp_local[base : base + len(kids)]
            sample = sample_opponent
        if sample:
            for a, wt in reversed(sampler.branch(probs)):
                stack.append((kids[a], s, scale * wt))
        else:
            for a in range(len(kids) - 1, -1, -1):
                if probs[a] > 0:
                    stack.append((kids[a], s, scale * probs[a]))
    return GradientVector(owner, out, touched)


@dataclass
class Estimator:
    """Configured gradient estimator for one game.

    ``samples`` > 1 averages that many independent draws.
    """

    game: GameTree
    kind: str
    samples: int = 1
    sampling: dict = field(default_factory=dict)  # owner -> fixed outcome-sampling strategy

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GameError(f"unknown estimator {self.kind!r}; choose from {KINDS}")
        if self.samples < 1:
            raise GameError("samples per estimate must be >= 1")
        if self.kind == "balanced_outcome":
            self.sampling = {p: balanced_strategy(self.game, p) for p in (P1, P2)}
        elif self.kind == "outcome":
            for p in (P1, P2):
                if p not in self.sampling:
                    self.sampling[p] = uniform_strategy(self.game.treeplexes[p])
            for p, w in self.sampling.items():
                if np.any(np.asarray(w) <= 0):
                    raise GameError("outcome sampling strategy must be strictly positive")

    @property
    def stochastic(self) -> bool:
        return self.kind != "exact"

    def single(self, owner: int, opponent: np.ndarray, sampler: Sampler) -> GradientVector:
        k = self.kind
        if k == "exact":
            return gradient(self.game, owner, opponent)
        if k in OUTCOME_KINDS:
            return sampled_traversal(
                self.game, owner, opponent, sampler, sample_chance=True, sample_opponent=True,
                owner_sampling=self.sampling[owner],
            )
        return sampled_traversal(
            self.game, owner, opponent, sampler,
            sample_chance=k in ("external", "chance"),
            sample_opponent=k in ("external", "opponent"),
        )

    def estimate(self, owner: int, opponent: np.ndarray, sampler: Sampler) -> GradientVector:
        return averaged_estimate(lambda: self.single(owner, opponent, sampler), self.samples)

    def range_constant(self, owner: int) -> float:
        """Declared M~ for this estimator and owner."""
        delta = self.game.payoff_range
        if self.kind in OUTCOME_KINDS:
            return delta * float(np.max(1.0 / self.sampling[owner]))
        return delta


def averaged_estimate(draw: Callable[[], GradientVector], n: int) -> GradientVector:
    if n < 1:
        raise GameError("need at least one sample")
    first = draw()
    if n == 1:
        return first
    total = first.values.copy()
    touched = first.touched
    for _ in range(n - 1):
        g = draw()
        total += g.values
        touched += g.touched
    return GradientVector(first.owner, total / n, touched)


# thin functional wrappers


def exact_estimate(game, owner, opponent) -> GradientVector:
    return gradient(game, owner, opponent)


def external_sampling_estimate(game, owner, opponent, sampler) -> GradientVector:
    return sampled_traversal(game, owner, opponent, sampler, sample_chance=True, sample_opponent=True)


def opponent_sampling_estimate(game, owner, opponent, sampler) -> GradientVector:
    return sampled_traversal(game, owner, opponent, sampler, sample_chance=False, sample_opponent=True)


def chance_sampling_estimate(game, owner, opponent, sampler) -> GradientVector:
    return sampled_traversal(game, owner, opponent, sampler, sample_chance=True, sample_opponent=False)


def outcome_sampling_estimate(game, owner, opponent, w, sampler) -> GradientVector:
    if np.any(np.asarray(w) <= 0):
        raise GameError("outcome sampling strategy must be strictly positive")
    return sampled_traversal(
        game, owner, opponent, sampler, sample_chance=True, sample_opponent=True, owner_sampling=w
    )


def balanced_outcome_sampling_estimate(game, owner, opponent, sampler) -> GradientVector:
    w = game._cache(("balanced", owner), lambda: balanced_strategy(game, owner))
    return outcome_sampling_estimate(game, owner, opponent, w, sampler)
