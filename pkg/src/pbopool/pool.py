"""Shared pool of feasible solutions, mixed rank rating and polarity weights."""

from __future__ import annotations

import enum
import logging
import threading
from dataclasses import dataclass
from typing import Sequence

from .formula import PboInstance

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Solution:
    assignment: tuple[int, ...]
    objective: int
    source_worker: int = -1
    discovery_step: int = 0


class InsertResult(enum.Enum):
    INSERTED = "inserted"
    REPLACED = "replaced"
    REJECTED = "rejected"


def hamming(a: Sequence[int], b: Sequence[int]) -> int:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return sum(x != y for x, y in zip(a, b))


def diversity(entries: Sequence[Solution], s: Solution) -> int:
    """Sum of Hamming distances from ``s`` to every entry other than itself."""
    return sum(hamming(s.assignment, e.assignment) for e in entries if e is not s)


def mixed_ratings(objectives: Sequence[int], diversities: Sequence[int], p_star: float) -> list[float]:
    """``rank_obj * p* + rank_div * (1 - p*)`` for each position.

    Rank 1 is the smallest objective / largest diversity; ties go to the
    earlier position.
    """
    idx = range(len(objectives))
    rank_obj = [0] * len(objectives)
    rank_div = [0] * len(objectives)
    for r, i in enumerate(sorted(idx, key=lambda i: (objectives[i], i)), start=1):
        rank_obj[i] = r
    for r, i in enumerate(sorted(idx, key=lambda i: (-diversities[i], i)), start=1):
        rank_div[i] = r
    return [ro * p_star + rd * (1 - p_star) for ro, rd in zip(rank_obj, rank_div)]


class PolarityTable:
    """Per-variable polarity density weights, kept within ``[1-eps, 1+eps]``."""

    def __init__(self, num_vars: int, beta: float = 0.03, epsilon: float = 0.144):
        if epsilon < 0 or epsilon >= 1:
            raise ValueError("epsilon must lie in [0, 1)")
        if beta < 0:
            raise ValueError("beta must be non-negative")
        self.beta = beta
        self.epsilon = epsilon
        self.weights = [1.0] * num_vars

    def update(self, assignment: Sequence[int]) -> None:
        lo, hi = 1 - self.epsilon, 1 + self.epsilon
        beta = self.beta
        # build a fresh list and swap it in, so lock-free readers never see
        # a half-applied update
        self.weights = [
            min(w + beta, hi) if v else max(w - beta, lo)
            for w, v in zip(self.weights, assignment)
        ]


class SolutionPool:
    """Bounded, thread-safe set of feasible solutions.

    Every operation holds one lock, so inserts and restart selections are
    linearizable. ``polarity.weights`` is read without the lock; readers may
    see a table that is one insertion behind.
    """

    def __init__(
        self,
        num_vars: int,
        capacity: int = 18,
        p_star: float = 0.58,
        beta: float = 0.03,
        epsilon: float = 0.144,
        instance: PboInstance | None = None,
    ):
        if capacity < 1:
            raise ValueError("pool capacity must be positive")
        if not 0 <= p_star <= 1:
            raise ValueError("p_star must lie in [0, 1]")
        self.num_vars = num_vars
        self.capacity = capacity
        self.p_star = p_star
        self.instance = instance
        self.polarity = PolarityTable(num_vars, beta, epsilon)
        self.entries: list[Solution] = []
        self._lock = threading.RLock()

    def __len__(self):
        return len(self.entries)

    def snapshot(self) -> list[Solution]:
        with self._lock:
            return list(self.entries)

    def rate_all(self) -> list[tuple[Solution, float]]:
        with self._lock:
            return list(zip(self.entries, self._rate(self.entries)))

    def _rate(self, members: Sequence[Solution]) -> list[float]:
        divs = [diversity(members, s) for s in members]
        return mixed_ratings([s.objective for s in members], divs, self.p_star)

    def try_insert(self, s: Solution) -> tuple[InsertResult, Solution | None]:
        """Offer a solution; returns the outcome and the evicted entry, if any."""
        if len(s.assignment) != self.num_vars:
            raise ValueError("solution has the wrong number of variables")
        if self.instance is not None:
            if not self.instance.is_feasible(s.assignment):
                raise AssertionError("infeasible solution offered to the pool")
            if self.instance.objective_value(s.assignment) != s.objective:
                raise AssertionError("solution objective does not match its assignment")
        with self._lock:
            if any(e.assignment == s.assignment for e in self.entries):
                return InsertResult.REJECTED, None
            if len(self.entries) < self.capacity:
                self.entries.append(s)
                self.polarity.update(s.assignment)
                log.debug("insert obj=%d size=%d", s.objective, len(self.entries))
                return InsertResult.INSERTED, None

            members = self.entries + [s]
            divs = [diversity(members, m) for m in members]
            ratings = mixed_ratings([m.objective for m in members], divs, self.p_star)
            worst = max(range(len(members)), key=lambda i: (ratings[i], i))
            if worst == len(members) - 1:
                log.debug("reject obj=%d div=%d r_mix=%.3f", s.objective, divs[-1], ratings[-1])
                return InsertResult.REJECTED, None
            evicted = self.entries.pop(worst)
            self.entries.append(s)
            self.polarity.update(s.assignment)
            log.debug(
                "replace obj=%d div=%d r_mix=%.3f; evict obj=%d div=%d r_mix=%.3f",
                s.objective,
                divs[-1],
                ratings[-1],
                evicted.objective,
                divs[worst],
                ratings[worst],
            )
            return InsertResult.REPLACED, evicted

    def select_for_restart(self, caller_best_obj, caller_best: Solution | None, rng) -> Solution | None:
        """Draw a restart point, favouring solutions well below the caller's best.

        Candidates are entries with objective <= ``caller_best_obj`` plus the
        caller's own best; each is drawn with probability proportional to
        ``caller_best_obj - objective``. When every gap is zero the caller's
        best comes back. A caller without any feasible solution yet gets a
        uniformly random entry (None for an empty pool).
        """
        with self._lock:
            if caller_best is None:
                return rng.choice(self.entries) if self.entries else None
            cands = [e for e in self.entries if e.objective <= caller_best_obj]
            cands.append(caller_best)
            deltas = [caller_best_obj - e.objective for e in cands]
        total = sum(deltas)
        if total <= 0:
            return caller_best
        r = rng.randrange(total)
        for e, d in zip(cands, deltas):
            if r < d:
                return e
            r -= d
        return caller_best  # unreachable
