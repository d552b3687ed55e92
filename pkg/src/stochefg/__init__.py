"""Stochastic regret minimization for two-player zero-sum extensive-form games."""

from .efg import CHANCE, P1, P2, GameBuilder, GameError, GameTree, Treeplex, count_nodes, count_sequences, validate_perfect_recall
from .games import GameSpec, build
from .selfplay import RunConfig, RunRecord, run, run_batch

__all__ = [
    "CHANCE",
    "P1",
    "P2",
    "GameBuilder",
    "GameError",
    "GameTree",
    "GameSpec",
    "Treeplex",
    "RunConfig",
    "RunRecord",
    "build",
    "count_nodes",
    "count_sequences",
    "run",
    "run_batch",
    "validate_perfect_recall",
]
