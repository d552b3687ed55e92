"""Immutable two-player zero-sum extensive-form games and their sequence form.

Nodes live in flat numpy arrays indexed in preorder (a node's id is smaller
than every id in its subtree).  Each player's information structure is
summarized by a :class:`Treeplex`, which numbers the player's sequences so
that a sequence always has a larger id than its parent sequence.  That
ordering is what lets every treeplex pass below run level by level with
vectorized numpy segment reductions.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Hashable, NamedTuple, Sequence

import numpy as np

P1, P2, CHANCE, TERMINAL = 0, 1, 2, -1
PLAYER_NAMES = {P1: "P1", P2: "P2", CHANCE: "C", TERMINAL: "T"}


class GameError(ValueError):
    """Raised when a game description violates a structural invariant."""


class PerfectRecallViolation(NamedTuple):
    player: int
    infoset: int
    node_a: int
    node_b: int

    def __str__(self) -> str:
        return (
            f"{PLAYER_NAMES[self.player]} infoset {self.infoset}: nodes {self.node_a} "
            f"and {self.node_b} have different sequence histories"
        )


class _Level(NamedTuple):
    infosets: np.ndarray  # infoset ids at this height
    seqs: np.ndarray  # their sequences, concatenated infoset by infoset
    starts: np.ndarray  # offset of each infoset's block inside ``seqs``
    owner: np.ndarray  # position in ``infosets`` of every entry of ``seqs``


@dataclass(frozen=True, eq=False)
class Treeplex:
    """Sequence index of one player.

    Sequence 0 is the empty sequence.  Infoset ``I`` owns the contiguous
    sequence ids ``first_seq[I] .. first_seq[I] + num_actions[I] - 1``;
    ``parent_seq[I]`` is the sequence leading to ``I``.
    """

    parent_seq: np.ndarray
    first_seq: np.ndarray
    num_actions: np.ndarray
    seq_infoset: np.ndarray
    seq_parent: np.ndarray
    levels: tuple[_Level, ...] = field(repr=False)

    @classmethod
    def from_infosets(cls, parent_seq: np.ndarray, num_actions: np.ndarray) -> "Treeplex":
        parent_seq = np.asarray(parent_seq, dtype=np.int64)
        num_actions = np.asarray(num_actions, dtype=np.int64)
        m = len(parent_seq)
        first_seq = 1 + np.concatenate(([0], np.cumsum(num_actions)[:-1])) if m else np.zeros(0, np.int64)
        n_seq = 1 + int(num_actions.sum())
        seq_infoset = np.full(n_seq, -1, dtype=np.int64)
        seq_infoset[1:] = np.repeat(np.arange(m), num_actions)
        if np.any(parent_seq >= first_seq):
            raise GameError("infosets must be numbered after their parent sequence")
        seq_parent = np.full(n_seq, -1, dtype=np.int64)
        seq_parent[1:] = parent_seq[seq_infoset[1:]]

        # height 0 = no infoset below; a parent sits strictly above its children
        height = np.zeros(m, dtype=np.int64)
        parent_infoset = seq_infoset[parent_seq]
        for i in range(m - 1, -1, -1):
            j = parent_infoset[i]
            if j >= 0 and height[j] <= height[i]:
                height[j] = height[i] + 1
        levels = []
        for h in range(int(height.max()) + 1 if m else 0):
            infs = np.flatnonzero(height == h)
            counts = num_actions[infs]
            starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
            owner = np.repeat(np.arange(len(infs)), counts)
            seqs = first_seq[infs][owner] + (np.arange(counts.sum()) - starts[owner])
            levels.append(_Level(infs, seqs, starts, owner))
        return cls(parent_seq, first_seq, num_actions, seq_infoset, seq_parent, tuple(levels))

    @property
    def num_sequences(self) -> int:
        return len(self.seq_infoset)

    @property
    def num_infosets(self) -> int:
        return len(self.parent_seq)

    def sequences(self, infoset: int) -> range:
        s = int(self.first_seq[infoset])
        return range(s, s + int(self.num_actions[infoset]))

    def child_infosets(self, seq: int) -> np.ndarray:
        return np.flatnonzero(self.parent_seq == seq)

    def is_terminal_sequence(self) -> np.ndarray:
        """Boolean mask of sequences with no infoset below them."""
        mask = np.ones(self.num_sequences, dtype=bool)
        mask[self.parent_seq] = False
        return mask

    # -- vectorized passes -------------------------------------------------

    def to_sequence_form(self, local: np.ndarray) -> np.ndarray:
        """Multiply per-infoset action probabilities down the treeplex."""
        z = np.empty(self.num_sequences)
        z[0] = 1.0
        for lvl in reversed(self.levels):
            z[lvl.seqs] = z[self.seq_parent[lvl.seqs]] * local[lvl.seqs]
        return z

    def to_behavioral(self, z: np.ndarray) -> np.ndarray:
        """Per-infoset conditional action probabilities; uniform where unreachable."""
        z = np.asarray(z, dtype=float)
        local = np.ones(self.num_sequences)
        if self.num_sequences == 1:
            return local
        parent_mass = z[self.seq_parent[1:]]
        uniform = 1.0 / self.num_actions[self.seq_infoset[1:]]
        with np.errstate(invalid="ignore", divide="ignore"):
            local[1:] = np.where(parent_mass > 0, z[1:] / parent_mass, uniform)
        return local

    def infoset_sums(self, z: np.ndarray) -> np.ndarray:
        """Sum of ``z`` over each infoset's sequences."""
        return np.add.reduceat(z[1:], self.first_seq - 1) if self.num_infosets else np.zeros(0)

    def best_response(self, loss: np.ndarray, *, maximize: bool = False) -> tuple[float, np.ndarray]:
        """Exact linear optimization over the treeplex.

        Returns ``(value, z)`` where ``z`` is a pure sequence-form strategy
        minimizing (or maximizing) ``loss @ z``.  Ties go to the lowest action.
        """
        sign = -1.0 if maximize else 1.0
        q = sign * np.asarray(loss, dtype=float).copy()
        choice = np.zeros(self.num_infosets, dtype=np.int64)
        for lvl in self.levels:
            vals = q[lvl.seqs]
            best = np.minimum.reduceat(vals, lvl.starts)
            # lowest index attaining the minimum inside each block
            hit = vals == best[lvl.owner]
            pos = np.arange(len(vals))
            first = np.minimum.reduceat(np.where(hit, pos, len(vals)), lvl.starts)
            choice[lvl.infosets] = first - lvl.starts
            np.add.at(q, self.parent_seq[lvl.infosets], best)
        local = np.zeros(self.num_sequences)
        local[self.first_seq + choice] = 1.0
        return sign * float(q[0]), self.to_sequence_form(local)


@dataclass(frozen=True, eq=False)
class GameTree:
    """Flat-array extensive-form game; build it with :class:`GameBuilder`."""

    name: str
    player: np.ndarray
    parent: np.ndarray
    action: np.ndarray
    child_start: np.ndarray
    num_children: np.ndarray
    children: np.ndarray
    infoset: np.ndarray
    u1: np.ndarray
    edge_prob: np.ndarray
    seq: np.ndarray  # (2, n): last own sequence on the path to each node
    chance_reach: np.ndarray
    treeplexes: tuple[Treeplex, Treeplex]
    infoset_keys: tuple[list, list] = field(repr=False)
    params: dict = field(default_factory=dict)

    @property
    def num_nodes(self) -> int:
        return len(self.player)

    @property
    def root(self) -> int:
        return 0

    @property
    def leaves(self) -> np.ndarray:
        return self._cache("leaves", lambda: np.flatnonzero(self.player == TERMINAL))

    @property
    def payoff_range(self) -> float:
        def compute():
            u = self.u1[self.leaves]
            both = np.concatenate((u, -u))
            return float(both.max() - both.min())

        return self._cache("delta", compute)

    def u2(self, node: int) -> float:
        return -float(self.u1[node])

    def num_sequences(self, player: int) -> int:
        return self.treeplexes[player].num_sequences

    def child(self, node: int, action: int) -> int:
        return int(self.children[self.child_start[node] + action])

    def node_children(self, node: int) -> np.ndarray:
        s = self.child_start[node]
        return self.children[s : s + self.num_children[node]]

    def leaf_data(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(u2, sigma_1, sigma_2, chance reach) over the leaves, in leaf order."""

        def compute():
            z = self.leaves
            return (-self.u1[z], self.seq[P1, z], self.seq[P2, z], self.chance_reach[z])

        return self._cache("leafdata", compute)

    def _cache(self, key, fn):
        store = self.__dict__.setdefault("_memo", {})
        if key not in store:
            store[key] = fn()
        return store[key]

    def dump(self) -> str:
        """Tab-separated node listing in preorder, for golden comparisons."""
        out = io.StringIO()
        out.write("id\tparent\taction\tplayer\tinfoset\tprob\tu1\n")
        for v in range(self.num_nodes):
            out.write(
                f"{v}\t{self.parent[v]}\t{self.action[v]}\t{PLAYER_NAMES[int(self.player[v])]}"
                f"\t{self.infoset[v]}\t{self.edge_prob[v]!r}\t{self.u1[v]!r}\n"
            )
        return out.getvalue()


def count_nodes(game: GameTree) -> int:
    return game.num_nodes


def count_sequences(game: GameTree, player: int) -> int:
    return game.num_sequences(player)


def validate_perfect_recall(game: GameTree) -> PerfectRecallViolation | None:
    """First infoset whose member nodes disagree on the owner's last sequence."""
    for p in (P1, P2):
        nodes = np.flatnonzero(game.player == p)
        infs = game.infoset[nodes]
        seqs = game.seq[p, nodes]
        first_node = {}
        for v, i, s in zip(nodes.tolist(), infs.tolist(), seqs.tolist()):
            if i not in first_node:
                first_node[i] = (v, s)
            elif first_node[i][1] != s:
                return PerfectRecallViolation(p, i, first_node[i][0], v)
    return None


class GameBuilder:
    """Incremental preorder construction of a :class:`GameTree`.

    Create a node, then recursively create and :meth:`attach` its children
    in action order::

        v = b.decision(P1, key, 2)
        for a in range(2):
            b.attach(v, build_child(a))
    """

    def __init__(self, name: str, **params):
        self.name = name
        self.params = params
        self._player: list[int] = []
        self._infoset: list[int] = []
        self._u1: list[float] = []
        self._probs: dict[int, Sequence[float]] = {}
        self._parent: list[int] = []
        self._action: list[int] = []
        self._nchild: list[int] = []
        self._expected: list[int] = []
        self._keys: tuple[dict, dict] = ({}, {})
        self._key_actions: tuple[list, list] = ([], [])

    def _new(self, player: int, infoset: int, u1: float, n_actions: int) -> int:
        v = len(self._player)
        self._player.append(player)
        self._infoset.append(infoset)
        self._u1.append(u1)
        self._parent.append(-1)
        self._action.append(-1)
        self._nchild.append(0)
        self._expected.append(n_actions)
        return v

    def terminal(self, u1: float, u2: float | None = None) -> int:
        if u2 is not None and u1 + u2 != 0:
            raise GameError(f"non-zero-sum leaf payoffs ({u1}, {u2})")
        return self._new(TERMINAL, -1, float(u1), 0)

    def chance(self, probs: Sequence[float]) -> int:
        probs = [float(p) for p in probs]
        if not probs or abs(sum(probs) - 1.0) > 1e-12 or min(probs) < 0:
            raise GameError("chance probabilities must be a distribution")
        v = self._new(CHANCE, -1, 0.0, len(probs))
        self._probs[v] = probs
        return v

    def decision(self, player: int, key: Hashable, num_actions: int) -> int:
        if player not in (P1, P2):
            raise GameError(f"bad player {player}")
        if num_actions < 1:
            raise GameError("decision node needs at least one action")
        keys = self._keys[player]
        idx = keys.get(key)
        if idx is None:
            idx = keys[key] = len(keys)
            self._key_actions[player].append(num_actions)
        elif self._key_actions[player][idx] != num_actions:
            raise GameError(f"infoset {key!r} has inconsistent action counts")
        return self._new(player, idx, 0.0, num_actions)

    def attach(self, parent: int, child: int) -> None:
        if self._parent[child] != -1 or child == 0:
            raise GameError(f"node {child} attached twice")
        self._parent[child] = parent
        self._action[child] = self._nchild[parent]
        self._nchild[parent] += 1

    def build(self, *, check: bool = True) -> GameTree:
        n = len(self._player)
        if n == 0:
            raise GameError("empty game")
        player = np.array(self._player, dtype=np.int8)
        parent = np.array(self._parent, dtype=np.int64)
        action = np.array(self._action, dtype=np.int64)
        nchild = np.array(self._nchild, dtype=np.int64)
        if np.any(parent[1:] < 0):
            raise GameError(f"orphan node {int(np.flatnonzero(parent[1:] < 0)[0]) + 1}")
        if np.any(nchild != np.array(self._expected)):
            bad = int(np.flatnonzero(nchild != np.array(self._expected))[0])
            raise GameError(f"node {bad} has {nchild[bad]} children, expected {self._expected[bad]}")
        if np.any(parent[1:] >= np.arange(1, n)):
            raise GameError("nodes must be created in preorder")

        # preorder => children of v sorted by id are in action order
        children = np.argsort(parent[1:], kind="stable") + 1
        child_start = np.concatenate(([0], np.cumsum(nchild)[:-1]))

        edge_prob = np.ones(n)
        for v, probs in self._probs.items():
            kids = children[child_start[v] : child_start[v] + nchild[v]]
            edge_prob[kids] = probs

        infoset = np.array(self._infoset, dtype=np.int64)
        n_actions = [np.array(a, dtype=np.int64) for a in self._key_actions]
        first_seq = [1 + np.concatenate(([0], np.cumsum(a)[:-1])) if len(a) else a for a in n_actions]
        parent_seq = [np.full(len(a), -1, dtype=np.int64) for a in n_actions]

        seq = np.zeros((2, n), dtype=np.int64)
        reach = np.ones(n)
        # vectorized over depth: process nodes in id order is the same as
        # processing parents before children
        par_player = np.where(parent >= 0, player[np.maximum(parent, 0)], TERMINAL)
        par_infoset = np.where(parent >= 0, infoset[np.maximum(parent, 0)], -1)
        depth = np.zeros(n, dtype=np.int64)
        for v in range(1, n):
            depth[v] = depth[parent[v]] + 1
        order = np.argsort(depth, kind="stable")
        bounds = np.searchsorted(depth[order], np.arange(depth.max() + 2))
        for d in range(1, int(depth.max()) + 1):
            vs = order[bounds[d] : bounds[d + 1]]
            ps = parent[vs]
            reach[vs] = reach[ps] * edge_prob[vs]
            for p in (P1, P2):
                own = par_player[vs] == p
                s = seq[p, ps].copy()
                s[own] = first_seq[p][par_infoset[vs[own]]] + action[vs[own]]
                seq[p, vs] = s
        for p in (P1, P2):
            nodes = np.flatnonzero(player == p)
            # first occurrence in preorder defines sigma_i(I)
            infs, first = np.unique(infoset[nodes], return_index=True)
            parent_seq[p][infs] = seq[p, nodes[first]]

        treeplexes = tuple(Treeplex.from_infosets(parent_seq[p], n_actions[p]) for p in (P1, P2))
        keys = tuple(list(k.keys()) for k in self._keys)
        game = GameTree(
            name=self.name,
            player=player,
            parent=parent,
            action=action,
            child_start=child_start,
            num_children=nchild,
            children=children,
            infoset=infoset,
            u1=np.array(self._u1),
            edge_prob=edge_prob,
            seq=seq,
            chance_reach=reach,
            treeplexes=treeplexes,
            infoset_keys=keys,
            params=dict(self.params),
        )
        if check:
            bad = validate_perfect_recall(game)
            if bad is not None:
                raise GameError(f"imperfect recall: {bad}")
        return game
