"""Portfolio local search for pseudo-Boolean optimization with a shared solution pool."""

from .formula import (
    CoefficientOverflow,
    Literal,
    NormalizedConstraint,
    Objective,
    OpbSyntaxError,
    PboInstance,
    Term,
    constraint_violation,
    emit_opb,
    normalize,
    objective_value,
    parse_opb,
    read_opb,
)
from .harness import brute_force_solve, competition_score, generate_instance
from .pool import PolarityTable, Solution, SolutionPool, diversity, hamming
from .portfolio import PortfolioConfig, RunResult, aggregate_best, run_portfolio
from .presolve import (
    PresolveResult,
    assume_and_propagate,
    lift_solution,
    select_assumed_literals,
)
from .search import SearchConfig, SearchState, run_worker

__version__ = "0.1.0"
