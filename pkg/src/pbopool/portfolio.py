"""Master/worker orchestration of the local-search portfolio."""

from __future__ import annotations

import logging
import math
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .formula import PboInstance
from .pool import Solution, SolutionPool
from .presolve import PresolveResult, assume_and_propagate, select_assumed_literals
from .search import SearchConfig, WorkerStats, run_worker

log = logging.getLogger(__name__)


@dataclass
class PortfolioConfig:
    num_workers: int = 32
    cutoff_seconds: float = 300.0
    seed: int = 0
    search: SearchConfig = field(default_factory=SearchConfig)
    pool_size: int = 18
    p_star: float = 0.58
    beta: float = 0.03
    epsilon: float = 0.144
    # per-worker step budget; None means run until the cutoff
    max_steps: int | None = None

    def __post_init__(self):
        if self.num_workers < 1:
            raise ValueError("need at least one worker")
        if self.cutoff_seconds <= 0:
            raise ValueError("cutoff must be positive")


@dataclass
class RunResult:
    best: Solution | None
    status: str
    workers: list[WorkerStats]
    diagnostics: list[str] = field(default_factory=list)
    elapsed: float = 0.0


def aggregate_best(events: Iterable[tuple[int, Solution]]) -> Solution | None:
    """Minimum objective wins; on ties the earliest event is kept."""
    best = None
    for _, sol in events:
        if best is None or sol.objective < best.objective:
            best = sol
    return best


def _presolve_for(inst: PboInstance, assumption, diagnostics: list[str]) -> PresolveResult:
    if assumption is None:
        return PresolveResult.identity(inst)
    var, val = assumption
    r = assume_and_propagate(inst, (var, val))
    if not r.conflict:
        return r
    flipped = assume_and_propagate(inst, (var, 1 - val))
    if not flipped.conflict:
        diagnostics.append(
            f"{inst.variable_names[var]}={val} conflicts under propagation; "
            f"using {inst.variable_names[var]}={1 - val} (entailed at root)"
        )
        return flipped
    diagnostics.append(
        f"both polarities of {inst.variable_names[var]} conflict; "
        "running without an assumption"
    )
    return PresolveResult.identity(inst)


def run_portfolio(
    inst: PboInstance,
    cfg: PortfolioConfig,
    on_improve: Callable[[Solution], None] | None = None,
    stop: threading.Event | None = None,
) -> RunResult:
    """Run ``cfg.num_workers`` diversified workers sharing one solution pool.

    Workers are threads. ``on_improve`` fires in the calling thread each time
    the global best objective strictly improves. Setting ``stop`` ends the run
    early, as if the cutoff had been reached.
    """
    start = time.monotonic()
    deadline = start + cfg.cutoff_seconds
    T = cfg.num_workers
    diagnostics: list[str] = []

    k = math.ceil(T / 2)
    if inst.num_vars == 0:
        assumptions = []
    elif inst.num_vars < k:
        # not enough variables for distinct pairs: use them all, rest run bare
        assumptions = select_assumed_literals(2 * inst.num_vars, inst.num_vars, cfg.seed)
        diagnostics.append(
            f"{T - len(assumptions)} workers run without an assumed literal"
        )
    else:
        assumptions = select_assumed_literals(T, inst.num_vars, cfg.seed)

    pool = SolutionPool(inst.num_vars, cfg.pool_size, cfg.p_star, cfg.beta, cfg.epsilon, inst)
    stop = stop if stop is not None else threading.Event()
    events: queue.Queue = queue.Queue()
    stats = [
        WorkerStats(i, assumptions[i] if i < len(assumptions) else None) for i in range(T)
    ]
    errors: list[BaseException] = []

    def work(i: int):
        try:
            r = _presolve_for(inst, stats[i].assumption, diagnostics)
            stats[i].assumption = r.assumption
            search_cfg = SearchConfig(**{**vars(cfg.search), "seed": cfg.seed + i})
            run_worker(
                inst,
                r,
                search_cfg,
                pool,
                stop,
                worker_id=i,
                on_improve=lambda sol: events.put((i, sol)),
                max_steps=cfg.max_steps,
                stats=stats[i],
            )
        except BaseException as exc:  # surfaced by the master
            errors.append(exc)
            stop.set()
        finally:
            events.put((i, None))

    threads = [threading.Thread(target=work, args=(i,), daemon=True) for i in range(T)]
    for t in threads:
        t.start()

    best: Solution | None = None
    running = T

    def consume(item):
        nonlocal best, running
        i, sol = item
        if sol is None:
            running -= 1
            return
        if best is None or sol.objective < best.objective:
            best = sol
            if on_improve is not None:
                on_improve(sol)

    while running and not stop.is_set():
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            break
        try:
            consume(events.get(timeout=min(remaining, 0.05)))
        except queue.Empty:
            pass
    stop.set()
    for t in threads:
        t.join()
    while True:
        try:
            consume(events.get_nowait())
        except queue.Empty:
            break

    if errors:
        raise errors[0]
    if best is not None and not inst.is_feasible(best.assignment):
        raise AssertionError("portfolio best is infeasible")
    for d in diagnostics:
        log.info(d)
    return RunResult(
        best,
        "feasible" if best is not None else "unknown",
        stats,
        diagnostics,
        time.monotonic() - start,
    )
