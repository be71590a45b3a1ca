"""Universal supermartingale decomposition on event trees.

The value family R splits as R = X0 + M - C where M is a martingale under
every prior of the class simultaneously and C collects the remaining drift.
Per node, the reference Doob increment of R is projected (in the reference
weighted inner product) onto the span of the one-step density increments
{d - 1}; the projected part is absorbed into C, the orthogonal part forms M.
C is increasing exactly when the class is rich enough for the projection to
stay below the predictable drift; otherwise the failure is reported in the
diagnostics rather than raised.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import NotASupermartingaleError
from .filtration import AdaptedFamily, EventTree, StoppingRule
from .priors import DensityProcess, PriorSet
from .snell import SnellSolution

#: tolerance below which a projected basis candidate is considered dependent
RANK_TOL = 1e-10

#: tolerance for increasing/flatness checks on C
FLAT_TOL = 1e-10


def _weighted_dot(q: Sequence[float], x: Sequence[float], y: Sequence[float]) -> float:
    return float(sum(qc * xc * yc for qc, xc, yc in zip(q, x, y)))


def node_subspace_basis(
    tree: EventTree, priors: PriorSet, node: str
) -> list[tuple[float, ...]]:
    """Orthonormal basis of span{d - 1 over the node's extremes}.

    Orthonormal under the reference-weighted inner product
    <x, y> = sum_c q_c x_c y_c; every basis vector has zero reference mean.
    """
    q = tree.q_vector(node)
    basis: list[np.ndarray] = []
    for d in priors.extremes(node):
        vec = np.asarray(d, dtype=float) - 1.0
        for b in basis:
            vec = vec - _weighted_dot(q, vec, b) * b
        norm_sq = _weighted_dot(q, vec, vec)
        if norm_sq > RANK_TOL:
            basis.append(vec / np.sqrt(norm_sq))
    return [tuple(float(x) for x in b) for b in basis]


def kw_project(
    tree: EventTree,
    node: str,
    increment: Sequence[float],
    basis: Sequence[Sequence[float]],
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Orthogonal split of a zero-mean one-step increment.

    Returns (part inside the density-increment span, orthogonal part), both
    zero-mean under the reference weights.
    """
    q = tree.q_vector(node)
    mean = float(sum(qc * xc for qc, xc in zip(q, increment)))
    if abs(mean) > 1e-9 * max(1.0, max(abs(float(x)) for x in increment) if len(increment) else 1.0):
        raise NotASupermartingaleError(
            f"increment at node {node!r} has nonzero reference mean {mean:g}"
        )
    inc = np.asarray(increment, dtype=float)
    k_part = np.zeros_like(inc)
    for b in basis:
        k_part = k_part + _weighted_dot(q, inc, b) * np.asarray(b, dtype=float)
    orth = inc - k_part
    return tuple(float(x) for x in k_part), tuple(float(x) for x in orth)


def doob(
    tree: EventTree, family: AdaptedFamily, process: DensityProcess, tol: float = 1e-9
) -> tuple[AdaptedFamily, AdaptedFamily]:
    """Classical discrete Doob split of a supermartingale under one prior.

    Returns (A, M) with family = family(root) + M - A along every path,
    A predictable (increments constant across siblings) and nondecreasing,
    M a martingale under the given prior.
    """
    A: dict[str, float] = {tree.root: 0.0}
    M: dict[str, float] = {tree.root: 0.0}
    for n in tree.nodes_by_time():
        if tree.is_terminal(n):
            continue
        children = tree.children(n)
        r = process.ratio_at(n)
        cond = sum(
            tree.edge_q(c) * rc * family[c] for c, rc in zip(children, r)
        )
        drift = family[n] - cond
        if drift < -tol * max(1.0, abs(family[n])):
            raise NotASupermartingaleError(
                f"family gains {-drift:g} in one step at node {n!r}"
            )
        for c in children:
            A[c] = A[n] + drift
            M[c] = M[n] + family[c] - cond
    return AdaptedFamily(A), AdaptedFamily(M)


@dataclass(frozen=True)
class PremiseReport:
    """Per-node richness flags for the density-increment subspaces.

    ``full_slice``: the node polytope is the entire nonnegativity-truncated
    affine slice 1 + span{d - 1}.  ``scaling_closed``: arbitrary predictable
    scalings of the increments stay admissible, which on a finite tree forces
    the span to be trivial.
    """

    full_slice: Mapping[str, bool]
    scaling_closed: Mapping[str, bool]

    @property
    def scaling_closed_all(self) -> bool:
        return all(self.scaling_closed.values()) if self.scaling_closed else True

    @property
    def full_slice_all(self) -> bool:
        return all(self.full_slice.values()) if self.full_slice else True


def _slice_vertices(q: Sequence[float], basis: Sequence[Sequence[float]]) -> list[np.ndarray]:
    """Vertices of {1 + B l >= 0} mapped back to density space.

    The polytope is bounded because every direction in the span has zero
    reference mean, so it cannot be nonnegative without vanishing.
    """
    k = len(q)
    m = len(basis)
    B = np.asarray(basis, dtype=float).T  # shape (k, m)
    if m == 0:
        return [np.ones(k)]
    vertices: list[np.ndarray] = []
    for rows in itertools.combinations(range(k), m):
        sub = B[list(rows), :]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        lam = np.linalg.solve(sub, -np.ones(m))
        point = 1.0 + B @ lam
        if np.all(point >= -1e-9):
            if not any(np.allclose(point, v, atol=1e-9) for v in vertices):
                vertices.append(point)
    return vertices


def _in_hull(point: np.ndarray, extremes: Sequence[Sequence[float]]) -> bool:
    """Feasibility of expressing ``point`` as a convex combination of extremes."""
    E = np.asarray(extremes, dtype=float).T  # (k, n_ext)
    n_ext = E.shape[1]
    A_eq = np.vstack([E, np.ones((1, n_ext))])
    b_eq = np.concatenate([point, [1.0]])
    res = linprog(
        c=np.zeros(n_ext),
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=[(0, None)] * n_ext,
        method="highs",
    )
    return bool(res.status == 0)


def premise_check(tree: EventTree, priors: PriorSet) -> PremiseReport:
    """Check, node by node, whether the class meets the subspace premises.

    The global flag (all nodes scaling-closed) holds exactly when every
    node span is trivial, i.e. the class is the reference measure alone.
    """
    full_slice: dict[str, bool] = {}
    scaling_closed: dict[str, bool] = {}
    for n in tree.decision_nodes(tree.root):
        q = tree.q_vector(n)
        basis = node_subspace_basis(tree, priors, n)
        scaling_closed[n] = len(basis) == 0
        extremes = priors.extremes(n)
        if len(basis) == 0:
            full_slice[n] = all(
                max(abs(dc - 1.0) for dc in d) <= 1e-9 for d in extremes
            )
            continue
        vertices = _slice_vertices(q, basis)
        full_slice[n] = all(_in_hull(v, extremes) for v in vertices)
    return PremiseReport(full_slice=full_slice, scaling_closed=scaling_closed)


@dataclass(frozen=True)
class DecompositionDiagnostics:
    C_increasing: bool
    min_delta_C: float
    universal_martingale_residual: float
    premise: PremiseReport


@dataclass(frozen=True)
class Decomposition:
    """R = X0 + M - C with per-node bookkeeping of the construction.

    ``K`` accumulates the projected parts of the reference Doob martingale
    increments (so reference-increment = delta K + delta M at every node) and
    ``A_q`` the predictable reference drift; C = A_q - K by construction.
    """

    X0: float
    M: AdaptedFamily
    C: AdaptedFamily
    K: AdaptedFamily
    A_q: AdaptedFamily
    diagnostics: DecompositionDiagnostics


def universal_decompose(
    tree: EventTree, solution: SnellSolution, priors: PriorSet
) -> Decomposition:
    """Split the value family into a same-for-all-priors martingale and a drift.

    Never raises on a failed premise: a decreasing C is the informative
    outcome and is reported through the diagnostics.
    """
    R = solution.R
    M: dict[str, float] = {tree.root: 0.0}
    C: dict[str, float] = {tree.root: 0.0}
    K: dict[str, float] = {tree.root: 0.0}
    A: dict[str, float] = {tree.root: 0.0}
    min_delta_C = float("inf")
    residual = 0.0
    any_step = False
    for n in tree.nodes_by_time():
        if tree.is_terminal(n):
            continue
        any_step = True
        children = tree.children(n)
        q = tree.q_vector(n)
        cond = sum(qc * R[c] for qc, c in zip(q, children))
        drift = R[n] - cond
        increment = [R[c] - cond for c in children]
        basis = node_subspace_basis(tree, priors, n)
        k_part, m_part = kw_project(tree, n, increment, basis)
        for i, c in enumerate(children):
            delta_c = drift - k_part[i]
            min_delta_C = min(min_delta_C, delta_c)
            M[c] = M[n] + m_part[i]
            K[c] = K[n] + k_part[i]
            A[c] = A[n] + drift
            C[c] = C[n] + delta_c
        for d in priors.extremes(n):
            residual = max(
                residual,
                abs(sum(qc * dc * mc for qc, dc, mc in zip(q, d, m_part))),
            )
        residual = max(residual, abs(sum(qc * mc for qc, mc in zip(q, m_part))))
    if not any_step:
        min_delta_C = 0.0
    diag = DecompositionDiagnostics(
        C_increasing=min_delta_C >= -FLAT_TOL,
        min_delta_C=min_delta_C,
        universal_martingale_residual=residual,
        premise=premise_check(tree, priors),
    )
    return Decomposition(
        X0=R[tree.root],
        M=AdaptedFamily(M),
        C=AdaptedFamily(C),
        K=AdaptedFamily(K),
        A_q=AdaptedFamily(A),
        diagnostics=diag,
    )


def flat_off_check(
    decomposition: Decomposition,
    tree: EventTree,
    rule: StoppingRule,
    v: str,
) -> bool:
    """True when C never moves between ``v`` and the rule's stop on any path."""
    C = decomposition.C
    base = C[v]
    ok = True
    stack = [(v, rule.stops_at(v))]
    while stack:
        n, stopped = stack.pop()
        if abs(C[n] - base) > FLAT_TOL:
            ok = False
            break
        if stopped:
            continue
        for c in tree.children(n):
            stack.append((c, rule.stops_at(c)))
    return ok
