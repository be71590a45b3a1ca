"""Ground-truth brute force for the double supremum over rules and priors.

Values are computed from the definition, by exhaustive enumeration of
stopping rules crossed with pure extreme-point selections, never by the
backward-induction recursion they are used to check.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import SizeGuardError
from .filtration import (
    AdaptedFamily,
    EventTree,
    StoppingRule,
    enumerate_rules,
)
from .priors import MAX_SELECTIONS, PriorSet
from .snell import solve

#: environment variable capping the worker count of parallel sections
THREADS_ENV = "ROBUST_SNELL_THREADS"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _subtree_selections(
    tree: EventTree, priors: PriorSet, v: str
) -> list[dict[str, int]]:
    """Pure extreme selections restricted to the decision nodes below ``v``.

    Ratios outside the subtree cannot affect a conditional value at ``v``, so
    restricting keeps the enumeration exact while shrinking it.
    """
    nodes = tree.decision_nodes(v)
    total = 1
    for n in nodes:
        total *= len(priors.extremes(n))
        if total > MAX_SELECTIONS:
            raise SizeGuardError(
                f"extreme selections below {v!r} exceed the guard {MAX_SELECTIONS}"
            )
    ranges = [range(len(priors.extremes(n))) for n in nodes]
    return [dict(zip(nodes, combo)) for combo in itertools.product(*ranges)]


def _gamma_under_selection(
    tree: EventTree,
    payoff: AdaptedFamily,
    priors: PriorSet,
    rule: StoppingRule,
    selection: dict[str, int],
    v: str,
) -> float:
    """Conditional expected stopped reward at ``v`` for one (rule, selection)."""

    def val(n: str) -> float:
        if rule.stops_at(n):
            return payoff[n]
        d = priors.extremes(n)[selection[n]]
        return sum(
            tree.edge_q(c) * dc * val(c)
            for c, dc in zip(tree.children(n), d)
        )

    return val(v)


@dataclass(frozen=True)
class BruteForceResult:
    value: float
    best_rule: StoppingRule
    best_selection: dict[str, int]


def brute_force_value(
    tree: EventTree, payoff: AdaptedFamily, priors: PriorSet, v: str
) -> BruteForceResult:
    """Max over all stopping rules at ``v`` and all extreme selections.

    Ties are broken by enumeration order: rules outer, selections inner.
    """
    return _brute_force(tree, payoff, priors, v, strict=False)


def brute_force_strict_value(
    tree: EventTree, payoff: AdaptedFamily, priors: PriorSet, v: str
) -> float:
    """Same supremum over rules that must continue at a non-terminal ``v``."""
    return _brute_force(tree, payoff, priors, v, strict=True).value


def _brute_force(
    tree: EventTree,
    payoff: AdaptedFamily,
    priors: PriorSet,
    v: str,
    strict: bool,
) -> BruteForceResult:
    rules = enumerate_rules(tree, v, strict=strict)
    selections = _subtree_selections(tree, priors, v)
    best_value = float("-inf")
    best_rule = rules[0]
    best_sel = selections[0]
    for rule in rules:
        for sel in selections:
            value = _gamma_under_selection(tree, payoff, priors, rule, sel, v)
            if value > best_value:
                best_value = value
                best_rule = rule
                best_sel = sel
    return BruteForceResult(value=best_value, best_rule=best_rule, best_selection=best_sel)


@dataclass(frozen=True)
class CrosscheckReport:
    max_deviation_R: float
    max_deviation_R_plus: float
    nodes_checked: int
    worst_node: str

    @property
    def max_deviation(self) -> float:
        return max(self.max_deviation_R, self.max_deviation_R_plus)


def crosscheck(
    tree: EventTree,
    payoff: AdaptedFamily,
    priors: PriorSet,
    solution=None,
) -> CrosscheckReport:
    """Compare backward-induction values against brute force at every node."""
    if solution is None:
        solution = solve(tree, payoff, priors)

    def deviations(n: str) -> tuple[float, float]:
        dev_r = abs(solution.R[n] - brute_force_value(tree, payoff, priors, n).value)
        dev_rp = abs(
            solution.R_plus[n] - brute_force_strict_value(tree, payoff, priors, n)
        )
        return dev_r, dev_rp

    nodes = tree.nodes()
    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(deviations, nodes))
    else:
        results = [deviations(n) for n in nodes]

    max_r = 0.0
    max_rp = 0.0
    worst = nodes[0]
    for n, (dev_r, dev_rp) in zip(nodes, results):
        if max(dev_r, dev_rp) > max(max_r, max_rp):
            worst = n
        max_r = max(max_r, dev_r)
        max_rp = max(max_rp, dev_rp)
    return CrosscheckReport(
        max_deviation_R=max_r,
        max_deviation_R_plus=max_rp,
        nodes_checked=len(nodes),
        worst_node=worst,
    )
