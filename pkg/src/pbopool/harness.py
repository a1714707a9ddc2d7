"""Evaluation helpers: competition score, brute-force oracle, instance generator."""

from __future__ import annotations

import csv
import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .formula import Literal, NormalizedConstraint, Objective, PboInstance, Term
from .pool import Solution

MAX_BRUTE_FORCE_VARS = 24
_CHUNK_BITS = 16


def competition_score(cost_best: int, cost_s: int, negative_offset: int) -> Fraction:
    """(1 + cost_best + offset) / (1 + cost_s + offset) as an exact fraction."""
    if cost_best > cost_s:
        raise ValueError("cost_best must not exceed cost_s")
    if negative_offset < 0:
        raise ValueError("negative_offset is a sum of magnitudes")
    den = 1 + cost_s + negative_offset
    assert den > 0, "denominator must be positive when costs respect the offset"
    return Fraction(1 + cost_best + negative_offset, den)


def _chunks(n: int):
    """Yield (start, bits) where bits[k, i] is variable i of assignment start+k.

    Assignments are numbered with variable 0 as the most significant bit, so
    increasing numbers are lexicographically increasing assignments.
    """
    total = 1 << n
    step = 1 << min(n, _CHUNK_BITS)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, step):
        nums = np.arange(start, min(start + step, total), dtype=np.int64)
        yield start, ((nums[:, None] >> shifts[None, :]) & 1).astype(np.int64)


def _dense(inst: PboInstance):
    n = inst.num_vars
    A = np.zeros((len(inst.constraints), n), dtype=np.int64)
    const = np.zeros(len(inst.constraints), dtype=np.int64)
    b = np.array([c.degree for c in inst.constraints], dtype=np.int64)
    for j, c in enumerate(inst.constraints):
        for t in c.terms:
            if t.lit.positive:
                A[j, t.lit.var] += t.coef
            else:
                A[j, t.lit.var] -= t.coef
                const[j] += t.coef
    cobj = np.zeros(n, dtype=np.int64)
    obj_const = 0
    for t in inst.objective.terms:
        if t.lit.positive:
            cobj[t.lit.var] += t.coef
        else:
            cobj[t.lit.var] -= t.coef
            obj_const += t.coef
    return A, const, b, cobj, obj_const


def _evaluate_chunks(inst: PboInstance):
    if inst.num_vars > MAX_BRUTE_FORCE_VARS:
        raise ValueError(
            f"brute force is limited to {MAX_BRUTE_FORCE_VARS} variables, got {inst.num_vars}"
        )
    A, const, b, cobj, obj_const = _dense(inst)
    for start, bits in _chunks(inst.num_vars):
        lhs = bits @ A.T + const[None, :]
        ok = np.all(lhs >= b[None, :], axis=1)
        obj = bits @ cobj + obj_const
        yield start, bits, ok, obj


def enumerate_models(inst: PboInstance) -> list[tuple[int, ...]]:
    """All satisfying assignments, in lexicographic order."""
    out = []
    for _, bits, ok, _ in _evaluate_chunks(inst):
        out.extend(tuple(int(v) for v in row) for row in bits[ok])
    return out


def brute_force_solve(inst: PboInstance) -> Solution | None:
    """Exhaustive optimum; ties go to the lexicographically smallest assignment."""
    best_obj, best_bits = None, None
    for _, bits, ok, obj in _evaluate_chunks(inst):
        if not ok.any():
            continue
        idx = np.flatnonzero(ok)
        k = idx[np.argmin(obj[idx])]
        if best_obj is None or obj[k] < best_obj:
            best_obj, best_bits = int(obj[k]), bits[k]
    if best_bits is None:
        return None
    assignment = tuple(int(v) for v in best_bits)
    return Solution(assignment, inst.objective_value(assignment), source_worker=-1)


def generate_planted(
    num_vars: int, num_constraints: int, max_coeff: int, density: float, seed
) -> tuple[PboInstance, list[int]]:
    """Random normalized instance plus a planted model that satisfies it."""
    if num_vars < 1 or num_constraints < 0 or max_coeff < 1 or not 0 < density <= 1:
        raise ValueError("bad generator parameters")
    rng = random.Random(seed)
    planted = [rng.randrange(2) for _ in range(num_vars)]
    constraints = []
    for _ in range(num_constraints):
        vars_ = [v for v in range(num_vars) if rng.random() < density]
        if not vars_:
            vars_ = [rng.randrange(num_vars)]
        terms = [
            Term(rng.randint(1, max_coeff), Literal(v, rng.random() < 0.5)) for v in vars_
        ]
        lhs = sum(t.coef for t in terms if t.lit.value(planted))
        if lhs == 0:
            k = rng.randrange(len(terms))
            terms[k] = Term(terms[k].coef, -terms[k].lit)
            lhs = terms[k].coef
        degree = rng.randint((lhs + 1) // 2, lhs)
        constraints.append(NormalizedConstraint(tuple(terms), degree))
    obj_terms = []
    for v in range(num_vars):
        c = rng.randint(-max_coeff, max_coeff)
        if c:
            obj_terms.append(Term(c, Literal(v, True)))
    inst = PboInstance(num_vars, tuple(constraints), Objective(tuple(obj_terms)))
    return inst, planted


def generate_instance(num_vars, num_constraints, max_coeff=5, density=0.5, seed=0) -> PboInstance:
    return generate_planted(num_vars, num_constraints, max_coeff, density, seed)[0]


@dataclass
class ScoreReport:
    # instance -> solver -> cost (None when the solver found nothing)
    costs: dict[str, dict[str, int | None]]
    best: dict[str, int | None]
    scores: dict[str, dict[str, Fraction]]
    solvers: list[str] = field(default_factory=list)

    def avg_score(self, solver: str) -> float:
        vals = [self.scores[i][solver] for i in self.scores]
        return float(sum(vals, Fraction(0)) / len(vals)) if vals else 0.0

    def wins(self, solver: str) -> int:
        return sum(
            1
            for i, per in self.costs.items()
            if per.get(solver) is not None and per[solver] == self.best[i]
        )

    def render(self) -> str:
        lines = ["solver,instances,win,avg_sc*"]
        for s in self.solvers:
            lines.append(f"{s},{len(self.costs)},{self.wins(s)},{self.avg_score(s):.4f}")
        return "\n".join(lines) + "\n"


def score_report(paths) -> ScoreReport:
    """Aggregate CSV result rows ``instance,solver,cost,status[,negative_offset]``.

    Rows whose status is not a solution status, or whose cost is empty,
    count as "no solution" and score 0.
    """
    costs: dict[str, dict[str, int | None]] = defaultdict(dict)
    offsets: dict[str, int] = {}
    solvers: list[str] = []
    for path in paths:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                inst, solver = row["instance"].strip(), row["solver"].strip()
                status = (row.get("status") or "").strip().upper()
                cost = (row.get("cost") or "").strip()
                found = cost != "" and status not in ("UNKNOWN", "UNSATISFIABLE", "ERROR")
                value = int(cost) if found else None
                prev = costs[inst].get(solver)
                if prev is None or (value is not None and value < prev):
                    costs[inst][solver] = value
                if row.get("negative_offset"):
                    offsets[inst] = int(row["negative_offset"])
                if solver not in solvers:
                    solvers.append(solver)

    best = {}
    scores: dict[str, dict[str, Fraction]] = {}
    for inst, per in costs.items():
        found = [c for c in per.values() if c is not None]
        best[inst] = min(found) if found else None
        off = offsets.get(inst, 0)
        scores[inst] = {}
        for s in solvers:
            c = per.get(s)
            if c is None or best[inst] is None:
                scores[inst][s] = Fraction(0)
            else:
                scores[inst][s] = competition_score(best[inst], c, off)
    return ScoreReport(dict(costs), best, scores, solvers)
