"""Literal-assume diversification and unit propagation under one assumption."""

from __future__ import annotations

import logging
import math
import random
from collections import deque
from dataclasses import dataclass

from .formula import Literal, NormalizedConstraint, Objective, PboInstance, Term

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PresolveResult:
    """Outcome of propagating one assumed literal.

    ``simplified`` is renumbered onto the free variables: simplified variable
    ``i`` is original variable ``free_vars[i]``. ``fixed`` maps original
    variables (the assumption plus everything it forced) to their values.
    """

    simplified: PboInstance | None
    fixed: dict[int, int]
    free_vars: tuple[int, ...]
    objective_offset: int = 0
    conflict: bool = False
    assumption: tuple[int, int] | None = None
    original_num_vars: int = 0

    @classmethod
    def identity(cls, inst: PboInstance) -> "PresolveResult":
        return cls(inst, {}, tuple(range(inst.num_vars)), 0, False, None, inst.num_vars)

    def project(self, original) -> list[int] | None:
        """Restrict an original-space assignment to the free variables.

        Returns None when it disagrees with a fixed value.
        """
        for var, val in self.fixed.items():
            if original[var] != val:
                return None
        return [original[ov] for ov in self.free_vars]


def select_assumed_literals(num_workers: int, num_vars: int, seed) -> list[tuple[int, int]]:
    """Pick ceil(T/2) variables and emit ``(v, 0), (v, 1)`` for each.

    Entry ``2i`` goes to worker ``2i`` and entry ``2i+1`` to worker ``2i+1``
    (0-based); with odd T the final entry is spare.
    """
    if num_workers < 1:
        raise ValueError("need at least one worker")
    k = math.ceil(num_workers / 2)
    rng = random.Random(seed)
    if num_vars >= k:
        chosen = rng.sample(range(num_vars), k)
    elif num_vars > 0:
        log.warning(
            "only %d variables for %d assumed variables; sampling with replacement",
            num_vars,
            k,
        )
        chosen = [rng.randrange(num_vars) for _ in range(k)]
    else:
        raise ValueError("cannot assume literals on an instance without variables")
    out = []
    for v in chosen:
        out.append((v, 0))
        out.append((v, 1))
    return out


def assume_and_propagate(inst: PboInstance, assumption: tuple[int, int]) -> PresolveResult:
    var0, val0 = assumption
    if not 0 <= var0 < inst.num_vars:
        raise IndexError(f"variable {var0} out of range")
    if val0 not in (0, 1):
        raise ValueError("assumed value must be 0 or 1")

    # live[j]: var -> (coef, positive); degree[j] is k_j, coef_sum[j] is S
    live: list[dict[int, tuple[int, bool]]] = []
    degree: list[int] = []
    coef_sum: list[int] = []
    occurs: list[list[int]] = [[] for _ in range(inst.num_vars)]
    for j, c in enumerate(inst.constraints):
        live.append({t.lit.var: (t.coef, t.lit.positive) for t in c.terms})
        degree.append(c.degree)
        coef_sum.append(c.coef_sum)
        for t in c.terms:
            occurs[t.lit.var].append(j)
    deleted = [False] * len(live)

    fixed = {var0: val0}
    queue = deque([(var0, val0)])
    conflict = False

    while queue and not conflict:
        xk, vk = queue.popleft()
        for j in occurs[xk]:
            if deleted[j] or xk not in live[j]:
                continue
            a, positive = live[j].pop(xk)
            if positive == (vk == 1):
                degree[j] -= a
            coef_sum[j] -= a
            if degree[j] <= 0:
                deleted[j] = True
                continue
            if coef_sum[j] < degree[j]:
                conflict = True
                break
            s, k = coef_sum[j], degree[j]
            for var, (a2, pos2) in live[j].items():
                if s - a2 + 1 <= k:
                    forced = 1 if pos2 else 0
                    prev = fixed.get(var)
                    if prev is None:
                        fixed[var] = forced
                        queue.append((var, forced))
                    elif prev != forced:
                        conflict = True
                        break
            if conflict:
                break

    n = inst.num_vars
    if conflict:
        log.debug("assumption x%d=%d is contradictory", var0 + 1, val0)
        return PresolveResult(None, fixed, (), 0, True, (var0, val0), n)

    free_vars = tuple(v for v in range(n) if v not in fixed)
    remap = {ov: i for i, ov in enumerate(free_vars)}
    constraints = []
    for j in range(len(live)):
        if deleted[j]:
            continue
        terms = tuple(
            Term(a, Literal(remap[var], pos)) for var, (a, pos) in sorted(live[j].items())
        )
        constraints.append(NormalizedConstraint(terms, degree[j]))

    offset = 0
    obj_terms = []
    for t in inst.objective.terms:
        if t.lit.var in fixed:
            val = fixed[t.lit.var]
            offset += t.coef * (val if t.lit.positive else 1 - val)
        else:
            obj_terms.append(Term(t.coef, Literal(remap[t.lit.var], t.lit.positive)))

    simplified = PboInstance(
        len(free_vars),
        tuple(constraints),
        Objective(tuple(obj_terms)),
        tuple(inst.variable_names[v] for v in free_vars),
    )
    return PresolveResult(simplified, fixed, free_vars, offset, False, (var0, val0), n)


def lift_solution(a, r: PresolveResult) -> list[int]:
    if r.conflict:
        raise ValueError("cannot lift through a conflicting presolve result")
    if len(a) != len(r.free_vars):
        raise ValueError(f"expected {len(r.free_vars)} values, got {len(a)}")
    out = [0] * r.original_num_vars
    for i, ov in enumerate(r.free_vars):
        out[ov] = a[i]
    for ov, val in r.fixed.items():
        out[ov] = val
    return out


def simplified_in_original_space(r: PresolveResult, original: PboInstance) -> PboInstance:
    """The simplified constraints/objective re-expressed over original indices.

    Handy for dumping: the result parses back with the original numbering.
    """
    if r.simplified is None:
        raise ValueError("presolve ended in conflict")
    back = r.free_vars

    def remap(terms):
        return tuple(Term(t.coef, Literal(back[t.lit.var], t.lit.positive)) for t in terms)

    return PboInstance(
        original.num_vars,
        tuple(NormalizedConstraint(remap(c.terms), c.degree) for c in r.simplified.constraints),
        Objective(remap(r.simplified.objective.terms)),
        original.variable_names,
    )
