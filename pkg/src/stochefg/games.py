"""Generators for the benchmark games and a few tiny test games.

Every generator returns a validated :class:`~stochefg.efg.GameTree`.
Simultaneous moves are serialized: the first mover acts, then the second
mover acts in an infoset that pools over the first mover's pending choice.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

from .efg import CHANCE, P1, P2, GameBuilder, GameError, GameTree

__all__ = [
    "GameSpec",
    "build",
    "matching_pennies",
    "rock_paper_scissors",
    "kuhn",
    "build_leduc",
    "build_goofspiel",
    "build_search",
    "build_battleship",
]


def matching_pennies() -> GameTree:
    """P1 shows H/T, P2 answers without seeing it; P2 wins 1 on a match."""
    b = GameBuilder("matching_pennies")
    root = b.decision(P1, "p1", 2)
    for a in range(2):
        v = b.decision(P2, "p2", 2)
        b.attach(root, v)
        for c in range(2):
            b.attach(v, b.terminal(-1.0 if a == c else 1.0))
    return b.build()


def rock_paper_scissors() -> GameTree:
    b = GameBuilder("rock_paper_scissors")
    root = b.decision(P1, "p1", 3)
    for a in range(3):
        v = b.decision(P2, "p2", 3)
        b.attach(root, v)
        for c in range(3):
            # 0 rock, 1 paper, 2 scissors; a beats c when a == c + 1 mod 3
            u1 = 0.0 if a == c else (1.0 if (a - c) % 3 == 1 else -1.0)
            b.attach(v, b.terminal(u1))
    return b.build()


def kuhn() -> GameTree:
    """Three-card Kuhn poker, ante 1, single bet of 1."""
    b = GameBuilder("kuhn")
    deals = list(itertools.permutations(range(3), 2))
    root = b.chance([1.0 / len(deals)] * len(deals))

    def showdown(c1, c2, stake):
        return stake if c1 > c2 else -stake

    for c1, c2 in deals:
        v1 = b.decision(P1, (c1, ""), 2)  # 0 check, 1 bet
        b.attach(root, v1)
        # check
        v2 = b.decision(P2, (c2, "p"), 2)
        b.attach(v1, v2)
        b.attach(v2, b.terminal(showdown(c1, c2, 1)))
        v3 = b.decision(P1, (c1, "pb"), 2)  # 0 fold, 1 call
        b.attach(v2, v3)
        b.attach(v3, b.terminal(-1.0))
        b.attach(v3, b.terminal(showdown(c1, c2, 2)))
        # bet
        v4 = b.decision(P2, (c2, "b"), 2)  # 0 fold, 1 call
        b.attach(v1, v4)
        b.attach(v4, b.terminal(1.0))
        b.attach(v4, b.terminal(showdown(c1, c2, 2)))
    return b.build()


# -- Leduc -------------------------------------------------------------------

# betting histories -> legal actions; 'c' check/call, 'r' bet/raise, 'f' fold
_LEDUC_ACTIONS = {"": "cr", "c": "cr", "r": "fcr", "cr": "fcr", "rr": "fc", "crr": "fc"}


def build_leduc(ranks: int = 3) -> GameTree:
    """Leduc poker with ``ranks`` card ranks, two copies each.

    Both private cards are dealt by one chance node over rank pairs; one
    public card follows the first betting round.  Bets are 1 in the first
    round and 2 in the second, at most two bets per round, ante 1.
    """
    if ranks < 2:
        raise GameError("leduc needs at least 2 ranks")
    b = GameBuilder(f"leduc{ranks}", ranks=ranks)
    n_cards = 2 * ranks

    def winner(c1, c2, pub):
        if c1 == pub and c2 != pub:
            return 1
        if c2 == pub and c1 != pub:
            return -1
        return (c1 > c2) - (c1 < c2)

    def betting(rnd, hist, pot, c1, c2, pub, after_round, prev=""):
        # pot = (contribution P1, contribution P2)
        mover = P1 if len(hist) % 2 == 0 else P2
        acts = _LEDUC_ACTIONS[hist]
        own = c1 if mover == P1 else c2
        key = (own, pub, prev, hist)
        v = b.decision(mover, key, len(acts))
        bet = 1.0 if rnd == 1 else 2.0
        for a in acts:
            nh = hist + a
            contrib = list(pot)
            other = 1 - mover
            if a == "f":
                # folder forfeits what it has put in
                child = b.terminal(-contrib[P1] if mover == P1 else contrib[P2])
            else:
                if a == "c":
                    contrib[mover] = contrib[other]
                else:
                    contrib[mover] = contrib[other] + bet
                if nh in _LEDUC_ACTIONS:
                    child = betting(rnd, nh, tuple(contrib), c1, c2, pub, after_round, prev)
                else:
                    child = after_round(tuple(contrib), nh)
            b.attach(v, child)
        return v

    def showdown(pot, c1, c2, pub):
        w = winner(c1, c2, pub)
        return b.terminal(w * pot[P2] if w > 0 else (w * pot[P1] if w < 0 else 0.0))

    def public_card(pot, h1, c1, c2):
        remaining = [2 - (c1 == r) - (c2 == r) for r in range(ranks)]
        pubs = [r for r in range(ranks) if remaining[r] > 0]
        v = b.chance([remaining[r] / (n_cards - 2) for r in pubs])
        for pub in pubs:
            b.attach(v, betting(2, "", pot, c1, c2, pub, lambda p2, _, pub=pub: showdown(p2, c1, c2, pub), h1))
        return v

    pairs = [(c1, c2) for c1 in range(ranks) for c2 in range(ranks)]
    probs = [(2 / n_cards) * ((2 - (c1 == c2)) / (n_cards - 1)) for c1, c2 in pairs]
    root = b.chance(probs)
    for c1, c2 in pairs:
        b.attach(root, betting(1, "", (1.0, 1.0), c1, c2, None, lambda pot, h1, c1=c1, c2=c2: public_card(pot, h1, c1, c2)))
    return b.build()


# -- Goofspiel ---------------------------------------------------------------


def build_goofspiel(ranks: int = 4) -> GameTree:
    """Goofspiel with three ``ranks``-card suits.

    Each round chance turns up one of the remaining prize cards (no chance
    node once a single prize is left), P1 bids, then P2 bids without seeing
    P1's bid.  Both bids are revealed; the higher bid takes the prize and
    ties discard it.  u1 is P1's prize total minus P2's.
    """
    if ranks < 2:
        raise GameError("goofspiel needs at least 2 ranks")
    b = GameBuilder(f"goofspiel{ranks}", ranks=ranks)
    full = tuple(range(1, ranks + 1))

    def rnd(prizes, h1, h2, public, score):
        if not h1:
            return b.terminal(float(score))
        if len(prizes) > 1:
            v = b.chance([1.0 / len(prizes)] * len(prizes))
            for p in prizes:
                b.attach(v, bids(p, prizes, h1, h2, public, score))
            return v
        return bids(prizes[0], prizes, h1, h2, public, score)

    def bids(prize, prizes, h1, h2, public, score):
        public = public + (prize,)
        rest = tuple(c for c in prizes if c != prize)
        v1 = b.decision(P1, (public, h1), len(h1))
        for a in h1:
            v2 = b.decision(P2, (public, h2), len(h2))
            b.attach(v1, v2)
            for c in h2:
                gain = prize * ((a > c) - (a < c))
                b.attach(
                    v2,
                    rnd(
                        rest,
                        tuple(x for x in h1 if x != a),
                        tuple(x for x in h2 if x != c),
                        public + ((a, c),),
                        score + gain,
                    ),
                )
        return v1

    rnd(full, full, full, (), 0)
    return b.build()


# -- Search ------------------------------------------------------------------

_SEARCH_MOVES = {
    "S": "BCD",
    "B": "E",
    "C": "F",
    "D": "G",
    "E": "FH",
    "F": "I",
    "G": "FJ",
    "H": "K",
    "I": "L",
    "J": "M",
}
_SEARCH_GOALS = {"K": 5.0, "L": 10.0, "M": 3.0}
_PATROL_MOVES = {"B": "BC", "C": "BCD", "D": "CD", "H": "HI", "I": "HIJ", "J": "IJ"}


def build_search(horizon: int = 4, *, observe_traces: bool = False) -> GameTree:
    """Pursuit-evasion on the two-patrol graph.

    P1 is the defender: two patrols start at C and I and each step either
    stays or moves to a neighbouring node of its own line (B-C-D, H-I-J).
    P2 is the attacker: it starts at S and either waits or follows a graph
    edge; reaching K, L or M pays it 5, 10 or 3.  Sharing a node with a
    patrol after a step is a capture (+1 defender).  ``horizon`` steps
    without either event tie at 0.  Each step the defender moves first and
    the attacker answers in an infoset that hides the defender's move.

    With ``observe_traces`` the defender also learns, for each patrol,
    whether its new node holds an uncleaned trace (a node the attacker
    entered and did not wait on).
    """
    if horizon < 1:
        raise GameError("search horizon must be >= 1")
    b = GameBuilder(f"search{horizon}", horizon=horizon)

    def step(t, pos, patrols, dkey, akey, traces):
        if pos in _SEARCH_GOALS:
            return b.terminal(-_SEARCH_GOALS[pos])
        if t == horizon:
            return b.terminal(0.0)
        dmoves = [(q1, q2) for q1 in _PATROL_MOVES[patrols[0]] for q2 in _PATROL_MOVES[patrols[1]]]
        amoves = ["W"] + list(_SEARCH_MOVES[pos])
        vd = b.decision(P1, dkey, len(dmoves))
        for d in dmoves:
            va = b.decision(P2, akey, len(amoves))
            b.attach(vd, va)
            for a in amoves:
                npos = pos if a == "W" else a
                if npos in d:
                    b.attach(va, b.terminal(1.0))
                    continue
                ntr = traces - {pos} if a == "W" else traces | {npos}
                obs = (d, tuple(q in ntr for q in d)) if observe_traces else d
                b.attach(va, step(t + 1, npos, d, dkey + (obs,), akey + (a,), ntr))
        return vd

    step(0, "S", ("C", "I"), (), (), frozenset())
    return b.build()


# -- Battleship --------------------------------------------------------------


def _placements(rows: int, cols: int, size: int) -> list[frozenset]:
    out = []
    for r in range(rows):
        for c in range(cols):
            if c + size <= cols:
                out.append(frozenset((r, c + i) for i in range(size)))
            if r + size <= rows:
                out.append(frozenset((r + i, c) for i in range(size)))
    return out


def build_battleship(shots: int = 3, rows: int = 3, cols: int = 2, ship_size: int = 2) -> GameTree:
    """One-ship Battleship on a ``rows`` x ``cols`` grid per player.

    P1 then P2 secretly place a ship of length ``ship_size`` (value 1).
    Players then alternate shots, P1 first, never repeating a cell.  Every
    shot and whether it hit is seen by both players.  The game ends when a
    ship is sunk or both players have fired ``shots`` times; u1 is ships
    sunk by P1 minus ships lost by P1.
    """
    if shots < 1:
        raise GameError("battleship needs at least one shot")
    b = GameBuilder(f"battleship{shots}", shots=shots, rows=rows, cols=cols, ship_size=ship_size)
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    placements = _placements(rows, cols, ship_size)
    if not placements:
        raise GameError("ship does not fit on the grid")

    def fire(turn, ships, shot_sets, hits, history):
        # hits[i] = cells of player i's ship hit so far
        if len(hits[0]) == ship_size:
            return b.terminal(-1.0)
        if len(hits[1]) == ship_size:
            return b.terminal(1.0)
        if len(shot_sets[0]) == shots and len(shot_sets[1]) == shots:
            return b.terminal(0.0)
        target = 1 - turn
        opts = [c for c in cells if c not in shot_sets[turn]]
        v = b.decision(turn, (placements.index(ships[turn]), history), len(opts))
        for c in opts:
            hit = c in ships[target]
            ns = list(shot_sets)
            ns[turn] = shot_sets[turn] | {c}
            nh = list(hits)
            if hit:
                nh[target] = hits[target] | {c}
            b.attach(v, fire(target, ships, tuple(ns), tuple(nh), history + ((c, hit),)))
        return v

    root = b.decision(P1, "place", len(placements))
    for s1 in placements:
        v2 = b.decision(P2, "place", len(placements))
        b.attach(root, v2)
        for s2 in placements:
            b.attach(v2, fire(P1, (s1, s2), (frozenset(), frozenset()), (frozenset(), frozenset()), ()))
    return b.build()


# -- specs -------------------------------------------------------------------

_GENERATORS: dict[str, tuple[Callable[..., GameTree], str | None, int | None]] = {
    "leduc": (build_leduc, "ranks", 13),
    "goofspiel": (build_goofspiel, "ranks", 4),
    "search": (build_search, "horizon", 4),
    "battleship": (build_battleship, "shots", 3),
    "matching_pennies": (lambda: matching_pennies(), None, None),
    "rps": (lambda: rock_paper_scissors(), None, None),
    "kuhn": (lambda: kuhn(), None, None),
}


@dataclass(frozen=True)
class GameSpec:
    variant: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in _GENERATORS:
            raise GameError(f"unknown game {self.variant!r}; choose from {sorted(_GENERATORS)}")
        _, pname, _ = _GENERATORS[self.variant]
        extra = set(self.params) - ({pname} if pname else set())
        if extra:
            raise GameError(f"{self.variant} takes no parameter(s) {sorted(extra)}")

    @property
    def resolved(self) -> dict:
        _, pname, default = _GENERATORS[self.variant]
        if pname is None:
            return {}
        return {pname: int(self.params.get(pname, default))}

    @property
    def label(self) -> str:
        return self.variant + "".join(str(v) for v in self.resolved.values())

    def build(self) -> GameTree:
        fn, _, _ = _GENERATORS[self.variant]
        return fn(**self.resolved)


def build(variant: str, **params) -> GameTree:
    return GameSpec(variant, params).build()
