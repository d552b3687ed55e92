"""Regret minimizers over a treeplex.

All minimizers consume losses (lower is better) indexed by the owner's
sequences and emit sequence-form strategies.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

from .efg import GameError, Treeplex


class RegretMinimizer(Protocol):
    tp: Treeplex

    def next_strategy(self) -> np.ndarray: ...

    def observe(self, loss: np.ndarray) -> None: ...


def _check_loss(tp: Treeplex, loss: np.ndarray) -> np.ndarray:
    loss = np.asarray(loss, dtype=float)
    if loss.shape != (tp.num_sequences,):
        raise GameError(f"loss has shape {loss.shape}, expected ({tp.num_sequences},)")
    return loss


class RegretMatching:
    """Per-infoset regret matching combined through the counterfactual decomposition."""

    def __init__(self, tp: Treeplex):
        self.tp = tp
        self.regrets = np.zeros(tp.num_sequences)
        self.local = np.ones(tp.num_sequences)
        self._refresh()

    def _refresh(self) -> None:
        tp = self.tp
        if not tp.num_infosets:
            return
        pos = np.maximum(self.regrets[1:], 0.0)
        tot = np.add.reduceat(pos, tp.first_seq - 1)[tp.seq_infoset[1:]]
        uniform = 1.0 / tp.num_actions[tp.seq_infoset[1:]]
        with np.errstate(invalid="ignore", divide="ignore"):
            self.local[1:] = np.where(tot > 0, pos / tot, uniform)

    def next_strategy(self) -> np.ndarray:
        return self.tp.to_sequence_form(self.local)

    def observe(self, loss: np.ndarray) -> None:
        tp = self.tp
        q = _check_loss(tp, loss).copy()
        for lvl in tp.levels:
            vals = q[lvl.seqs]
            v = np.add.reduceat(self.local[lvl.seqs] * vals, lvl.starts)
            self.regrets[lvl.seqs] += v[lvl.owner] - vals
            np.add.at(q, tp.parent_seq[lvl.infosets], v)
        self._refresh()


class DilatedEntropy:
    """Dilated negative entropy ``d(z) = sum_I beta_I sum_a z_a log(z_a / z_parent)``."""

    def __init__(self, tp: Treeplex, scheme: str = "recursive"):
        self.tp = tp
        self.scheme = scheme
        self.beta = dgf_weights(tp, scheme)
        self._seq_beta = np.concatenate(([0.0], self.beta[tp.seq_infoset[1:]]))
        # sum of child-infoset weights hanging below each sequence
        self._child_beta = np.bincount(tp.parent_seq, weights=self.beta, minlength=tp.num_sequences)

    def _ratios(self, z: np.ndarray) -> np.ndarray:
        tp = self.tp
        r = np.ones(tp.num_sequences)
        par = z[tp.seq_parent[1:]]
        with np.errstate(invalid="ignore", divide="ignore"):
            r[1:] = np.where(par > 0, z[1:] / par, 0.0)
        return r

    def value(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        r = self._ratios(z)
        with np.errstate(invalid="ignore", divide="ignore"):
            terms = np.where(z[1:] > 0, z[1:] * np.log(r[1:]), 0.0)
        return float(np.dot(self._seq_beta[1:], terms))

    def grad(self, z: np.ndarray) -> np.ndarray:
        """Gradient in the ambient space; ``z`` must be strictly positive."""
        z = np.asarray(z, dtype=float)
        if np.any(z <= 0):
            raise GameError("dilated entropy gradient needs a strictly positive point")
        tp = self.tp
        g = np.zeros(tp.num_sequences)
        g[1:] = self._seq_beta[1:] * (np.log(z[1:] / z[tp.seq_parent[1:]]) + 1.0)
        # d/dz_parent of beta_J * z_b log(z_b / z_parent) summed over J's actions
        mass = np.zeros(tp.num_sequences)
        np.add.at(mass, tp.seq_parent[1:], self._seq_beta[1:] * z[1:])
        g -= mass / z
        return g

    def grad_log_local(self, log_local: np.ndarray) -> np.ndarray:
        """Gradient at the point whose log conditional probabilities are ``log_local``.

        Equals :meth:`grad` but never exponentiates, so it stays finite when
        some probabilities underflow.
        """
        g = self._seq_beta * (log_local + 1.0)
        g[0] = 0.0
        return g - self._child_beta

    def bregman(self, z: np.ndarray, center: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        center = np.asarray(center, dtype=float)
        return self.value(z) - self.value(center) - float(np.dot(self.grad(center), z - center))

    def prox_log_local(self, g: np.ndarray, eta: float, center_log_local: np.ndarray | None = None) -> np.ndarray:
        """Log conditional action probabilities of the prox point."""
        if not eta > 0:
            raise GameError(f"stepsize must be positive, got {eta}")
        tp = self.tp
        q = _check_loss(tp, g).copy()
        if center_log_local is not None:
            q -= self.grad_log_local(center_log_local) / eta
        log_local = np.zeros(tp.num_sequences)
        for lvl in tp.levels:
            scale = eta / self.beta[lvl.infosets]
            s = -scale[lvl.owner] * q[lvl.seqs]
            m = np.maximum.reduceat(s, lvl.starts)
            lse = m + np.log(np.add.reduceat(np.exp(s - m[lvl.owner]), lvl.starts))
            log_local[lvl.seqs] = s - lse[lvl.owner]
            np.add.at(q, tp.parent_seq[lvl.infosets], -lse / scale)
        return log_local

    def prox(self, g: np.ndarray, eta: float, center: np.ndarray | None = None) -> np.ndarray:
        """argmin_z <g, z> + d(z)/eta, or + D(z || center)/eta when a center is given."""
        center_ll = None
        if center is not None:
            center = np.asarray(center, dtype=float)
            if np.any(center <= 0):
                raise GameError("prox center must be strictly positive")
            center_ll = np.log(self.tp.to_behavioral(center))
        return self.tp.to_sequence_form(np.exp(self.prox_log_local(g, eta, center_ll)))

    def minimizer(self) -> np.ndarray:
        return self.prox(np.zeros(self.tp.num_sequences), 1.0)


def dgf_weights(tp: Treeplex, scheme: str = "recursive") -> np.ndarray:
    if scheme == "constant":
        return np.ones(tp.num_infosets)
    if scheme != "recursive":
        raise GameError(f"unknown weight scheme {scheme!r}")
    beta = np.zeros(tp.num_infosets)
    below = np.zeros(tp.num_sequences)  # summed weight of child infosets per sequence
    for lvl in tp.levels:
        beta[lvl.infosets] = 1.0 + np.maximum.reduceat(below[lvl.seqs], lvl.starts)
        np.add.at(below, tp.parent_seq[lvl.infosets], beta[lvl.infosets])
    return beta


class FTRL:
    def __init__(self, dgf: DilatedEntropy, eta: float):
        if not eta > 0:
            raise GameError(f"stepsize must be positive, got {eta}")
        self.tp = dgf.tp
        self.dgf = dgf
        self.eta = float(eta)
        self.cum_loss = np.zeros(self.tp.num_sequences)

    def next_strategy(self) -> np.ndarray:
        return self.dgf.prox(self.cum_loss, self.eta)

    def observe(self, loss: np.ndarray) -> None:
        self.cum_loss += _check_loss(self.tp, loss)


class OMD:
    def __init__(self, dgf: DilatedEntropy, eta: float):
        if not eta > 0:
            raise GameError(f"stepsize must be positive, got {eta}")
        self.tp = dgf.tp
        self.dgf = dgf
        self.eta = float(eta)
        # the iterate is stored as log conditional probabilities so that it
        # stays strictly positive even when entries underflow in linear scale
        self.log_local = dgf.prox_log_local(np.zeros(self.tp.num_sequences), self.eta)

    def next_strategy(self) -> np.ndarray:
        return self.tp.to_sequence_form(np.exp(self.log_local))

    def observe(self, loss: np.ndarray) -> None:
        self.log_local = self.dgf.prox_log_local(_check_loss(self.tp, loss), self.eta, self.log_local)


ALGORITHMS = ("regret_matching", "ftrl", "omd")


def make_minimizer(algorithm: str, tp: Treeplex, eta: float | None = None, scheme: str = "recursive") -> RegretMinimizer:
    if algorithm == "regret_matching":
        return RegretMatching(tp)
    if algorithm in ("ftrl", "omd"):
        if eta is None:
            raise GameError(f"{algorithm} needs a stepsize")
        cls = FTRL if algorithm == "ftrl" else OMD
        return cls(DilatedEntropy(tp, scheme), eta)
    raise GameError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")


class RegretMeter:
    """Running regret ``sum_t l_t.z_t - min_zhat (sum_t l_t).zhat``."""

    def __init__(self, tp: Treeplex):
        self.tp = tp
        self.cum_loss = np.zeros(tp.num_sequences)
        self.incurred = 0.0
        self.rounds = 0

    def add(self, z: np.ndarray, loss: np.ndarray) -> None:
        self.cum_loss += loss
        self.incurred += float(np.dot(loss, z))
        self.rounds += 1

    @property
    def regret(self) -> float:
        best, _ = self.tp.best_response(self.cum_loss)
        return self.incurred - best


def measure_regret(tp: Treeplex, strategies, losses) -> float:
    strategies, losses = list(strategies), list(losses)
    if len(strategies) != len(losses):
        raise GameError("strategy and loss histories differ in length")
    meter = RegretMeter(tp)
    for z, loss in zip(strategies, losses):
        meter.add(np.asarray(z, dtype=float), np.asarray(loss, dtype=float))
    return meter.regret
