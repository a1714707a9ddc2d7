"""Single-worker local search with constraint weighting and dynamic scoring.

The engine keeps per-constraint left-hand sides and per-variable hscore
caches up to date on every flip, so choosing a variable only needs cheap
lookups. Scores follow the usual weighted-penalty scheme:

* hscore(x): drop in sum of w(c) * max(0, degree - lhs) over hard constraints;
* oscore(x): drop in w(oc) * objective;
* score*(x) = hscore(x) + p * oscore(x), with p adjusted every K steps;
* score**(x) scales score* by the pool's polarity weight for x.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .formula import PboInstance
from .pool import InsertResult, Solution, SolutionPool
from .presolve import PresolveResult, lift_solution

log = logging.getLogger(__name__)


@dataclass
class SearchConfig:
    K: int = 566024
    R: int = 86295
    inc: float = 1.15
    seed: int = 0
    weight_cap: int = 1_000_000
    sample_size: int = 50
    ratio_min: float = 1e-6
    ratio_max: float = 1e6

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.R < 1:
            raise ValueError("R must be at least 1")
        if not self.inc > 1:
            raise ValueError("inc must be greater than 1")
        if self.weight_cap < 1 or self.sample_size < 1:
            raise ValueError("weight_cap and sample_size must be positive")
        if not 0 < self.ratio_min <= 1 <= self.ratio_max:
            raise ValueError("ratio bounds must satisfy 0 < min <= 1 <= max")


@dataclass
class WorkerStats:
    worker: int = 0
    assumption: tuple[int, int] | None = None
    steps: int = 0
    restarts: int = 0
    improvements: int = 0
    pool_insertions: int = 0
    best_objective: int | None = None
    conflict: bool = False


class SearchState:
    """Mutable search state for one worker over one (simplified) instance.

    ``polarity`` is any object exposing a ``weights`` list indexed by
    original variables; ``var_map[v]`` translates engine variable ``v`` to
    that index. Both are optional; without them score** equals score*.
    """

    def __init__(
        self,
        inst: PboInstance,
        config: SearchConfig | None = None,
        initial: Sequence[int] | None = None,
        polarity=None,
        var_map: Sequence[int] | None = None,
        hard_weights: Sequence[int] | None = None,
        obj_weight: int = 1,
        ratio=1.0,
    ):
        self.inst = inst
        self.config = config or SearchConfig()
        self.rng = random.Random(self.config.seed)
        n = self.n = inst.num_vars
        self.polarity = polarity
        self.var_map = list(var_map) if var_map is not None else list(range(n))

        # constraint j: terms[j] = [(var, coef, neg)], literal value = x[var] ^ neg
        self.terms: list[list[tuple[int, int, int]]] = []
        self.degree: list[int] = []
        self.occ: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
        for j, c in enumerate(inst.constraints):
            row = [(t.lit.var, t.coef, 0 if t.lit.positive else 1) for t in c.terms]
            row.sort(key=lambda r: -r[1])
            self.terms.append(row)
            self.degree.append(c.degree)
            for v, a, neg in row:
                self.occ[v].append((j, a, neg))
        self.m = len(self.terms)

        # objective over positive literals: const + sum(coef[v] * x[v])
        self.obj_coef = [0] * n
        self.obj_const = 0
        for t in inst.objective.terms:
            if t.lit.positive:
                self.obj_coef[t.lit.var] += t.coef
            else:
                self.obj_const += t.coef
                self.obj_coef[t.lit.var] -= t.coef
        self.obj_vars = [v for v in range(n) if self.obj_coef[v] != 0]

        if hard_weights is None:
            self.weight = [1] * self.m
        else:
            if len(hard_weights) != self.m:
                raise ValueError("one weight per constraint expected")
            self.weight = list(hard_weights)
        self.obj_weight = obj_weight
        self.ratio = ratio

        self.best_obj: int | None = None
        self.best: list[int] | None = None
        self.step = 0
        self.since_improvement = 0
        self.window_feasible = False
        self.on_improve: Callable[["SearchState"], None] | None = None

        x = [0] * n if initial is None else list(initial)
        self._load(x)

    # -- cache maintenance -------------------------------------------------

    def _load(self, x: list[int]) -> None:
        if len(x) != self.n:
            raise ValueError(f"assignment has {len(x)} values, expected {self.n}")
        self.x = x
        self.lhs = [sum(a for v, a, neg in row if x[v] ^ neg) for row in self.terms]
        self.unsat: list[int] = []
        self.unsat_pos = [-1] * self.m
        self.unsat_terms = 0
        for j in range(self.m):
            if self.lhs[j] < self.degree[j]:
                self._add_unsat(j)
        self.hs = self._scratch_hscores()
        self.obj_val = self.obj_const + sum(self.obj_coef[v] for v in range(self.n) if x[v])

    def _scratch_hscores(self) -> list[int]:
        hs = [0] * self.n
        x = self.x
        for j, row in enumerate(self.terms):
            b, L, w = self.degree[j], self.lhs[j], self.weight[j]
            viol = b - L if b > L else 0
            for v, a, neg in row:
                after = b - L + a if x[v] ^ neg else b - L - a
                hs[v] += w * (viol - (after if after > 0 else 0))
        return hs

    def _add_unsat(self, j: int) -> None:
        self.unsat_pos[j] = len(self.unsat)
        self.unsat.append(j)
        self.unsat_terms += len(self.terms[j])

    def _remove_unsat(self, j: int) -> None:
        pos = self.unsat_pos[j]
        last = self.unsat.pop()
        if last != j:
            self.unsat[pos] = last
            self.unsat_pos[last] = pos
        self.unsat_pos[j] = -1
        self.unsat_terms -= len(self.terms[j])

    def check_caches(self) -> bool:
        """Recompute every cache from scratch and compare."""
        x = self.x
        for j, row in enumerate(self.terms):
            L = sum(a for v, a, neg in row if x[v] ^ neg)
            if L != self.lhs[j]:
                return False
            if (L < self.degree[j]) != (self.unsat_pos[j] >= 0):
                return False
        if sorted(self.unsat) != [j for j in range(self.m) if self.lhs[j] < self.degree[j]]:
            return False
        if self.unsat_terms != sum(len(self.terms[j]) for j in self.unsat):
            return False
        if self.hs != self._scratch_hscores():
            return False
        obj = self.obj_const + sum(self.obj_coef[v] for v in range(self.n) if x[v])
        return obj == self.obj_val

    # -- scores ----------------------------------------------------------

    @property
    def feasible(self) -> bool:
        return not self.unsat

    def violation(self) -> int:
        return sum(
            self.degree[j] - self.lhs[j] for j in range(self.m) if self.lhs[j] < self.degree[j]
        )

    def hscore(self, v: int) -> int:
        return self.hs[v]

    def oscore(self, v: int) -> int:
        c = self.obj_coef[v]
        return self.obj_weight * (c if self.x[v] else -c)

    def dynamic_score(self, v: int):
        return self.hs[v] + self.ratio * self.oscore(v)

    def combined_score(self, v: int, wpd=None):
        """score* scaled by a polarity weight: times wpd if x=0, divided if x=1."""
        s = self.dynamic_score(v)
        if wpd is None:
            wpd = self._wpd(v)
        if wpd is None:
            return s
        return s / wpd if self.x[v] else s * wpd

    def _wpd(self, v: int):
        if self.polarity is None:
            return None
        return self.polarity.weights[self.var_map[v]]

    # -- moves -----------------------------------------------------------

    def flip(self, v: int) -> None:
        x = self.x
        xv = x[v]
        lhs, degree, weight, hs, terms = self.lhs, self.degree, self.weight, self.hs, self.terms
        # Per-term hscore contribution of constraint j at left-hand side L:
        #   false literal: min(a, b - L) while violated, else 0
        #   true literal:  -a while violated, else -max(0, a - (L - b))
        # Terms are sorted by decreasing coefficient, so when the constraint
        # keeps its status the scan stops at the first coefficient that is
        # too small to be affected.
        for j, a, neg in self.occ[v]:
            L = lhs[j]
            b = degree[j]
            w = weight[j]
            tv = xv ^ neg
            L2 = L - a if tv else L + a
            lhs[j] = L2
            if L >= b and L2 >= b:
                s1, s2 = L - b, L2 - b
                # v itself: true at L (if tv) and true at L2 (if not tv)
                old = (a - s1 if a > s1 else 0) if tv else 0
                new = 0 if tv else (a - s2 if a > s2 else 0)
                if new != old:
                    hs[v] -= w * (new - old)
                thr = s1 if s1 < s2 else s2
                for u, au, nu in terms[j]:
                    if au <= thr:
                        break
                    if u != v and x[u] ^ nu:
                        old = au - s1 if au > s1 else 0
                        new = au - s2 if au > s2 else 0
                        if new != old:
                            hs[u] -= w * (new - old)
            elif L < b and L2 < b:
                v1, v2 = b - L, b - L2
                old = -a if tv else (a if a < v1 else v1)
                new = (a if a < v2 else v2) if tv else -a
                hs[v] += w * (new - old)
                thr = v1 if v1 < v2 else v2
                for u, au, nu in terms[j]:
                    if au <= thr:
                        break
                    if u != v and not x[u] ^ nu:
                        old = au if au < v1 else v1
                        new = au if au < v2 else v2
                        if new != old:
                            hs[u] += w * (new - old)
            else:
                for u, au, nu in terms[j]:
                    t = x[u] ^ nu
                    if t:
                        d = au + b - L
                        old = -(au if au < d else d) if d > 0 else 0
                    else:
                        d = b - L
                        old = (au if au < d else d) if d > 0 else 0
                    if u == v:
                        t ^= 1
                    if t:
                        d = au + b - L2
                        new = -(au if au < d else d) if d > 0 else 0
                    else:
                        d = b - L2
                        new = (au if au < d else d) if d > 0 else 0
                    if new != old:
                        hs[u] += w * (new - old)
                if L2 < b:
                    self._add_unsat(j)
                else:
                    self._remove_unsat(j)
        x[v] = xv ^ 1
        self.obj_val += -self.obj_coef[v] if xv else self.obj_coef[v]
        self.step += 1
        self.since_improvement += 1
        if not self.unsat:
            self.window_feasible = True
            self.check_improvement()

    def check_improvement(self) -> bool:
        if self.unsat:
            return False
        self.window_feasible = True
        if self.best_obj is None or self.obj_val < self.best_obj:
            self.best_obj = self.obj_val
            self.best = list(self.x)
            self.since_improvement = 0
            if self.on_improve is not None:
                self.on_improve(self)
            return True
        return False

    def pick_variable(self):
        """Best positive score** over a bounded candidate sample, or None.

        Candidates are variables of falsified constraints plus objective
        variables. When there are at most ``sample_size`` candidate slots
        they are all scanned; otherwise ``sample_size`` draws are made, each
        an objective variable or a variable of a random falsified constraint
        in proportion to their counts.
        """
        rng = self.rng
        k = self.config.sample_size
        n_obj = len(self.obj_vars)
        total = n_obj + self.unsat_terms
        if total == 0:
            return None
        if total <= k:
            cands = dict.fromkeys(self.obj_vars)
            for j in self.unsat:
                for u, _, _ in self.terms[j]:
                    cands[u] = None
            cands = list(cands)
        else:
            rnd = rng.random
            obj_vars = self.obj_vars
            if not self.unsat:
                cands = [obj_vars[int(rnd() * n_obj)] for _ in range(k)]
            else:
                cands = []
                unsat, terms = self.unsat, self.terms
                nu = len(unsat)
                for _ in range(k):
                    r = int(rnd() * total)
                    if r < n_obj:
                        cands.append(obj_vars[r])
                    else:
                        row = terms[unsat[int(rnd() * nu)]]
                        cands.append(row[int(rnd() * len(row))][0])

        hs, x, coef = self.hs, self.x, self.obj_coef
        pw = self.ratio * self.obj_weight
        weights = self.polarity.weights if self.polarity is not None else None
        var_map = self.var_map
        best_v, best_s, ties = None, 0, 0
        for u in cands:
            c = coef[u]
            s = hs[u] + pw * (c if x[u] else -c)
            if weights is not None:
                w = weights[var_map[u]]
                s = s / w if x[u] else s * w
            if s > best_s:
                best_v, best_s, ties = u, s, 1
            elif s == best_s and best_v is not None and u != best_v:
                ties += 1
                if rng.randrange(ties) == 0:
                    best_v = u
        return best_v

    def bump_weight(self, j: int) -> None:
        w = self.weight[j]
        if w >= self.config.weight_cap:
            return
        self.weight[j] = w + 1
        b, L = self.degree[j], self.lhs[j]
        viol = b - L if b > L else 0
        x, hs = self.x, self.hs
        for u, au, nu in self.terms[j]:
            after = b - L + au if x[u] ^ nu else b - L - au
            hs[u] += viol - (after if after > 0 else 0)

    def escape_local_optimum(self) -> int | None:
        """Raise weights at a local optimum, then make one random-walk flip.

        Returns the flipped variable (None when there is nothing to flip).
        """
        rng = self.rng
        if self.unsat:
            for j in list(self.unsat):
                self.bump_weight(j)
            row = self.terms[self.unsat[rng.randrange(len(self.unsat))]]
            x = self.x
            falsified = [u for u, _, nu in row if not (x[u] ^ nu)]
            pool = falsified or [u for u, _, _ in row]
            v = pool[rng.randrange(len(pool))]
        else:
            self.obj_weight = min(self.obj_weight + 1, self.config.weight_cap)
            if self.obj_vars:
                x, coef = self.x, self.obj_coef
                improving = [u for u in self.obj_vars if (coef[u] > 0) == bool(x[u])]
                pool = improving or self.obj_vars
                v = pool[rng.randrange(len(pool))]
            elif self.n:
                v = rng.randrange(self.n)
            else:
                return None
        self.flip(v)
        return v

    def update_ratio(self):
        cfg = self.config
        if self.window_feasible:
            self.ratio = min(self.ratio * cfg.inc, cfg.ratio_max)
        else:
            self.ratio = max(self.ratio / cfg.inc, cfg.ratio_min)
        self.window_feasible = False
        return self.ratio

    def restart_from(self, assignment: Sequence[int]) -> None:
        """Jump to ``assignment``; weights and the ratio are kept."""
        if len(assignment) != self.n:
            raise ValueError(f"assignment has {len(assignment)} values, expected {self.n}")
        self._load(list(assignment))
        self.since_improvement = 0
        self.check_improvement()

    def step_once(self) -> int | None:
        v = self.pick_variable()
        if v is None:
            return self.escape_local_optimum()
        self.flip(v)
        return v


class _NeverStop:
    def is_set(self):
        return False


def run_worker(
    inst: PboInstance,
    presolve: PresolveResult,
    config: SearchConfig,
    pool: SolutionPool | None = None,
    stop=None,
    worker_id: int = 0,
    on_improve: Callable[[Solution], None] | None = None,
    max_steps: int | None = None,
    stats: WorkerStats | None = None,
) -> Solution | None:
    """Run local search until ``stop`` is set or ``max_steps`` is reached.

    ``inst`` is the original instance; the search runs on
    ``presolve.simplified`` and every reported solution is lifted back and
    re-checked against ``inst`` before it leaves the worker.
    """
    if presolve.conflict or presolve.simplified is None:
        raise ValueError("cannot search under a conflicting assumption")
    stop = stop or _NeverStop()
    stats = stats if stats is not None else WorkerStats(worker_id, presolve.assumption)
    if stop.is_set():
        return None

    st = SearchState(
        presolve.simplified,
        config,
        polarity=pool.polarity if pool is not None else None,
        var_map=presolve.free_vars,
    )
    rng = random.Random(config.seed ^ 0x5EED)
    best: list[Solution | None] = [None]

    def improved(state: SearchState):
        lifted = lift_solution(state.best, presolve)
        if not inst.is_feasible(lifted):
            raise AssertionError(f"worker {worker_id} produced an infeasible solution")
        obj = inst.objective_value(lifted)
        if obj != state.best_obj + presolve.objective_offset:
            raise AssertionError("objective offset bookkeeping is inconsistent")
        sol = Solution(tuple(lifted), obj, worker_id, state.step)
        best[0] = sol
        stats.improvements += 1
        stats.best_objective = obj
        if pool is not None:
            outcome, _ = pool.try_insert(sol)
            if outcome is not InsertResult.REJECTED:
                stats.pool_insertions += 1
        if on_improve is not None:
            on_improve(sol)

    st.on_improve = improved
    st.check_improvement()
    if st.n == 0:
        stats.steps = st.step
        return best[0]

    K, R = config.K, config.R
    while not stop.is_set():
        if max_steps is not None and st.step >= max_steps:
            break
        st.step_once()
        if st.step % K == 0:
            st.update_ratio()
        if st.since_improvement >= R:
            st.since_improvement = 0
            if pool is None:
                continue
            cand = pool.select_for_restart(
                best[0].objective if best[0] is not None else None, best[0], rng
            )
            if cand is None:
                continue
            proj = presolve.project(cand.assignment)
            if proj is None:
                if best[0] is None:
                    continue
                proj = presolve.project(best[0].assignment)
            stats.restarts += 1
            st.restart_from(proj)
    stats.steps = st.step
    return best[0]
