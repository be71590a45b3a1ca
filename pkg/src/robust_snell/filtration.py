"""Finite filtered probability bases: event trees, adapted families, stopping rules.

The tree nodes at time t are the atoms of the time-t sigma-field.  Every edge
carries a reference one-step probability q > 0, so the reference measure
charges every path and all measures built from density ratios share its null
sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .errors import (
    FloorMismatchError,
    InvalidFamilyError,
    InvalidRuleError,
    InvalidTreeError,
    SizeGuardError,
)

#: absolute tolerance on one-step probability sums
PROB_TOL = 1e-12

#: enumeration guard: maximum number of decision (non-terminal) nodes
MAX_DECISION_NODES = 24

#: defensive cap on the number of enumerated stopping rules
MAX_RULES = 200_000


@dataclass(frozen=True)
class NodeRecord:
    """A single tree node.

    ``q`` is the reference probability of the edge from ``parent`` to this
    node (absent at the root).  ``states`` holds optional numeric labels such
    as an asset price "S" or a barrier flag "hit".
    """

    id: str
    time: int
    parent: str | None = None
    q: float | None = None
    states: Mapping[str, float] = field(default_factory=dict)


class EventTree:
    """A finite, rooted event tree with horizon T and one-step probabilities.

    Construction only requires parent links to resolve; all quantitative
    invariants (probabilities summing to one, leaves sitting at the horizon,
    consecutive times) are checked by :func:`validate_tree` so that invalid
    trees can be diagnosed rather than rejected outright.
    """

    def __init__(self, horizon: int, records: Sequence[NodeRecord]):
        self.horizon = int(horizon)
        if self.horizon < 1:
            raise InvalidTreeError("horizon must be at least 1")
        if not records:
            raise InvalidTreeError("tree has no nodes")
        self._records: dict[str, NodeRecord] = {}
        for rec in records:
            if rec.id in self._records:
                raise InvalidTreeError(f"duplicate node id {rec.id!r}")
            self._records[rec.id] = rec
        roots = [r.id for r in records if r.parent is None]
        if len(roots) != 1:
            raise InvalidTreeError(f"expected exactly one root, found {len(roots)}")
        self.root = roots[0]
        self._children: dict[str, list[str]] = {r.id: [] for r in records}
        for rec in records:
            if rec.parent is not None:
                if rec.parent not in self._records:
                    raise InvalidTreeError(
                        f"node {rec.id!r} references unknown parent {rec.parent!r}"
                    )
                self._children[rec.parent].append(rec.id)

    # -- basic accessors -------------------------------------------------

    def nodes(self) -> tuple[str, ...]:
        """All node ids in construction order."""
        return tuple(self._records)

    def node(self, node_id: str) -> NodeRecord:
        try:
            return self._records[node_id]
        except KeyError:
            raise InvalidTreeError(f"unknown node {node_id!r}") from None

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._records

    def time(self, node_id: str) -> int:
        return self.node(node_id).time

    def parent(self, node_id: str) -> str | None:
        return self.node(node_id).parent

    def children(self, node_id: str) -> tuple[str, ...]:
        self.node(node_id)
        return tuple(self._children[node_id])

    def edge_q(self, child_id: str) -> float:
        q = self.node(child_id).q
        if q is None:
            raise InvalidTreeError(f"node {child_id!r} has no edge probability")
        return float(q)

    def q_vector(self, node_id: str) -> tuple[float, ...]:
        """One-step probabilities over the children of ``node_id``."""
        return tuple(self.edge_q(c) for c in self.children(node_id))

    def is_terminal(self, node_id: str) -> bool:
        return self.time(node_id) == self.horizon

    def leaves(self) -> tuple[str, ...]:
        return tuple(n for n in self._records if not self._children[n])

    def atoms_at(self, t: int) -> tuple[str, ...]:
        """Nodes at time t, the atoms of the time-t sigma-field."""
        return tuple(n for n, r in self._records.items() if r.time == t)

    # -- traversal helpers -----------------------------------------------

    def subtree(self, v: str) -> tuple[str, ...]:
        """Preorder listing of the subtree rooted at ``v``."""
        out: list[str] = []
        stack = [v]
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(reversed(self._children[n]))
        return tuple(out)

    def leaves_below(self, v: str) -> tuple[str, ...]:
        return tuple(n for n in self.subtree(v) if not self._children[n])

    def decision_nodes(self, v: str) -> tuple[str, ...]:
        """Non-terminal nodes of the subtree at ``v``, in preorder."""
        return tuple(n for n in self.subtree(v) if self._children[n])

    def path(self, ancestor: str, descendant: str) -> tuple[str, ...]:
        """Nodes from ``ancestor`` down to ``descendant``, both inclusive."""
        chain = [descendant]
        n = descendant
        while n != ancestor:
            p = self.parent(n)
            if p is None:
                raise InvalidTreeError(
                    f"{ancestor!r} is not an ancestor of {descendant!r}"
                )
            chain.append(p)
            n = p
        return tuple(reversed(chain))

    def ancestor_at(self, node_id: str, t: int) -> str:
        """The time-t ancestor of ``node_id`` (the atom containing it)."""
        n = node_id
        while self.time(n) > t:
            p = self.parent(n)
            if p is None:
                break
            n = p
        if self.time(n) != t:
            raise InvalidTreeError(f"node {node_id!r} has no ancestor at time {t}")
        return n

    def nodes_by_time(self, descending: bool = False) -> tuple[str, ...]:
        order = sorted(
            self._records,
            key=lambda n: self._records[n].time,
            reverse=descending,
        )
        return tuple(order)


def validate_tree(tree: EventTree) -> list[str]:
    """Diagnose structural invariant violations; an empty list means valid."""
    report: list[str] = []
    if tree.time(tree.root) != 0:
        report.append(f"root time {tree.time(tree.root)} != 0")
    for n in tree.nodes():
        rec = tree.node(n)
        if rec.time < 0 or rec.time > tree.horizon:
            report.append(f"node {n}: time {rec.time} outside [0, {tree.horizon}]")
        children = tree.children(n)
        if not children:
            if rec.time != tree.horizon:
                report.append(
                    f"node {n}: leaf at time {rec.time} before horizon {tree.horizon}"
                )
            continue
        if rec.time == tree.horizon:
            report.append(f"node {n}: terminal node has children")
        total = 0.0
        for c in children:
            crec = tree.node(c)
            if crec.time != rec.time + 1:
                report.append(f"node {c}: time {crec.time} != parent time + 1")
            if crec.q is None:
                report.append(f"node {c}: missing edge probability")
                continue
            if crec.q < 0:
                report.append(f"node {c}: negative probability {crec.q:g}")
            elif crec.q == 0:
                report.append(f"node {n}: zero-probability branch (child {c})")
            total += crec.q
        if abs(total - 1.0) > PROB_TOL:
            report.append(f"node {n}: probabilities sum {total:g} ≠ 1")
    return report


class AdaptedFamily:
    """Node-indexed real values: rewards, value families, process components."""

    __slots__ = ("values",)

    def __init__(self, values: Mapping[str, float]):
        self.values = {k: float(v) for k, v in values.items()}

    def __getitem__(self, node_id: str) -> float:
        try:
            return self.values[node_id]
        except KeyError:
            raise InvalidFamilyError(f"family has no value at node {node_id!r}") from None

    def get(self, node_id: str, default: float | None = None) -> float | None:
        return self.values.get(node_id, default)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.values

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def items(self):
        return self.values.items()

    def __repr__(self) -> str:
        return f"AdaptedFamily({self.values!r})"

    @classmethod
    def constant(cls, tree: EventTree, value: float) -> "AdaptedFamily":
        return cls({n: value for n in tree.nodes()})

    def scaled(self, factor: float) -> "AdaptedFamily":
        return AdaptedFamily({k: factor * v for k, v in self.values.items()})


def validate_family(
    tree: EventTree, family: AdaptedFamily, require_nonnegative: bool = False
) -> list[str]:
    """Check that a family is defined on every node (and nonnegative if asked)."""
    report = []
    for n in tree.nodes():
        if n not in family:
            report.append(f"family undefined at node {n}")
        elif require_nonnegative and family[n] < 0:
            report.append(f"family negative at node {n}: {family[n]:g}")
    return report


@dataclass(frozen=True)
class StoppingRule:
    """An adapted stop/continue labelling defining one stopping time.

    The rule belongs to the class anchored at ``floor`` and is only consulted
    on the subtree at or below it; the stopping node on each path is the first
    node labelled stop.  ``strict=True`` marks membership in the strictly-later
    class: the rule must continue at a non-terminal floor.
    """

    labels: Mapping[str, bool]
    floor: str
    strict: bool = False

    def stops_at(self, node_id: str) -> bool:
        return bool(self.labels.get(node_id, False))

    def stop_node(self, tree: EventTree, leaf: str) -> str:
        """First stop node on the path from the floor to ``leaf``."""
        for n in tree.path(self.floor, leaf):
            if self.stops_at(n):
                return n
        raise InvalidRuleError(f"rule never stops on the path to {leaf!r}")

    def stop_time(self, tree: EventTree, leaf: str) -> int:
        return tree.time(self.stop_node(tree, leaf))

    def cut(self, tree: EventTree) -> frozenset[str]:
        """The set of nodes at which the rule actually stops."""
        return frozenset(self.stop_node(tree, leaf) for leaf in tree.leaves_below(self.floor))

    def continuation_region(self, tree: EventTree) -> frozenset[str]:
        """Nodes the rule passes through without stopping."""
        out = set()
        stack = [self.floor]
        while stack:
            n = stack.pop()
            if self.stops_at(n):
                continue
            out.add(n)
            stack.extend(tree.children(n))
        return frozenset(out)

    def validate(self, tree: EventTree) -> list[str]:
        report = []
        if self.floor not in tree:
            return [f"floor {self.floor!r} not in tree"]
        if self.strict and not tree.is_terminal(self.floor) and self.stops_at(self.floor):
            report.append(f"strict rule stops at its non-terminal floor {self.floor}")
        for leaf in tree.leaves_below(self.floor):
            if not any(self.stops_at(n) for n in tree.path(self.floor, leaf)):
                report.append(f"path to {leaf} never stops")
        return report


def first_entry_rule(
    tree: EventTree, predicate: Callable[[str], bool], v: str
) -> StoppingRule:
    """Stop at the first node at or after ``v`` where ``predicate`` holds.

    Paths on which the predicate never holds stop at the horizon.
    """
    labels: dict[str, bool] = {}
    stack = [v]
    while stack:
        n = stack.pop()
        if tree.is_terminal(n) or predicate(n):
            labels[n] = True
        else:
            labels[n] = False
            stack.extend(tree.children(n))
    return StoppingRule(labels=labels, floor=v)


def stop_at_time_rule(tree: EventTree, t: int, v: str) -> StoppingRule:
    """Stop at the first node with time >= t (deterministic time rule)."""
    return first_entry_rule(tree, lambda n: tree.time(n) >= t, v)


def _check_compatible(r1: StoppingRule, r2: StoppingRule) -> None:
    if r1.floor != r2.floor:
        raise FloorMismatchError(
            f"rules anchored at different floors: {r1.floor!r} vs {r2.floor!r}"
        )


def min_rule(tree: EventTree, r1: StoppingRule, r2: StoppingRule) -> StoppingRule:
    """Pathwise minimum of two stopping times with a common floor."""
    _check_compatible(r1, r2)
    rule = first_entry_rule(
        tree, lambda n: r1.stops_at(n) or r2.stops_at(n), r1.floor
    )
    return StoppingRule(labels=rule.labels, floor=rule.floor, strict=r1.strict and r2.strict)


def max_rule(tree: EventTree, r1: StoppingRule, r2: StoppingRule) -> StoppingRule:
    """Pathwise maximum of two stopping times with a common floor."""
    _check_compatible(r1, r2)
    labels: dict[str, bool] = {}

    def walk(n: str, done1: bool, done2: bool) -> None:
        d1 = done1 or r1.stops_at(n)
        d2 = done2 or r2.stops_at(n)
        if d1 and d2:
            labels[n] = True
            return
        labels[n] = False
        for c in tree.children(n):
            walk(c, d1, d2)

    walk(r1.floor, False, False)
    return StoppingRule(labels=labels, floor=r1.floor, strict=r1.strict or r2.strict)


def count_rules(tree: EventTree, v: str, strict: bool = False) -> int:
    """Closed-form count of stopping rules on the subtree at ``v``."""

    def free(n: str) -> int:
        if tree.is_terminal(n):
            return 1
        prod = 1
        for c in tree.children(n):
            prod *= free(c)
        return 1 + prod

    if strict and not tree.is_terminal(v):
        prod = 1
        for c in tree.children(v):
            prod *= free(c)
        return prod
    return free(v)


def enumerate_rules(tree: EventTree, v: str, strict: bool = False) -> list[StoppingRule]:
    """All stopping rules anchored at ``v``, each exactly once, in a fixed order.

    The order is deterministic: on each subtree the immediate stop comes
    first, followed by the cartesian combinations of child enumerations.
    """
    n_decision = len(tree.decision_nodes(v))
    if n_decision > MAX_DECISION_NODES:
        raise SizeGuardError(
            f"subtree at {v!r} has {n_decision} decision nodes "
            f"(guard: {MAX_DECISION_NODES})"
        )
    total = count_rules(tree, v, strict)
    if total > MAX_RULES:
        raise SizeGuardError(f"{total} stopping rules exceed the cap {MAX_RULES}")

    def label_sets(n: str) -> list[dict[str, bool]]:
        if tree.is_terminal(n):
            return [{n: True}]
        combos: list[dict[str, bool]] = [{n: True}]
        child_sets = [label_sets(c) for c in tree.children(n)]
        for parts in itertools.product(*child_sets):
            lab = {n: False}
            for part in parts:
                lab.update(part)
            combos.append(lab)
        return combos

    if strict and not tree.is_terminal(v):
        child_sets = [label_sets(c) for c in tree.children(v)]
        all_labels = []
        for parts in itertools.product(*child_sets):
            lab = {v: False}
            for part in parts:
                lab.update(part)
            all_labels.append(lab)
    else:
        all_labels = label_sets(v)
    return [StoppingRule(labels=lab, floor=v, strict=strict) for lab in all_labels]


def step_expectation_q(
    tree: EventTree, child_values: Mapping[str, float], node: str
) -> float:
    """One-step conditional expectation under the reference measure."""
    children = tree.children(node)
    if not children:
        raise InvalidTreeError(f"node {node!r} is terminal")
    total = 0.0
    for c in children:
        if c not in child_values:
            raise InvalidFamilyError(f"missing value for child {c!r}")
        total += tree.edge_q(c) * child_values[c]
    return total


def expected_value_q(
    tree: EventTree, family: AdaptedFamily, rule: StoppingRule, v: str
) -> float:
    """Conditional expectation of the stopped family under the reference measure.

    Computed by backward accumulation from the rule's cut to ``v``.
    """
    if rule.floor != v:
        raise FloorMismatchError(f"rule floor {rule.floor!r} != evaluation node {v!r}")

    def val(n: str) -> float:
        if rule.stops_at(n):
            return family[n]
        children = tree.children(n)
        if not children:
            raise InvalidRuleError(f"rule never stops on the path through {n!r}")
        return sum(tree.edge_q(c) * val(c) for c in children)

    return val(v)
