"""Greedy structure search over first-order Bayesian networks, organized
along the relationship lattice.

The search is the workload generator for the counting strategies: every
candidate move asks the provider for family tables, and the stream of family
requests (the trace) is what the benchmark compares across strategies.  Given
the same data and seed the stream is identical for all strategies, because
family tables are identical and scoring iterates them deterministically.

Concurrency: the search is single-threaded; it mutates one network state and
one trace in place.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .schema import FirstOrderVariable, LatticePoint, RelationshipLattice, derive_variables
from .score import BdeuParams, FamilySpec, bdeu_family, family_counts
from .store import Database

Edge = tuple[FirstOrderVariable, FirstOrderVariable]  # (parent, child)


@dataclass(frozen=True)
class SearchParams:
    bdeu: BdeuParams = field(default_factory=BdeuParams)
    max_parents: int = 4
    restarts: int = 0
    seed: int = 0


class BayesNetState:
    """Mutable DAG over the first-order variables with indegree bound."""

    def __init__(self, nodes: Sequence[FirstOrderVariable], edges: Iterable[Edge] = ()):
        self.nodes = tuple(nodes)
        self._nodeset = set(self.nodes)
        self.edges: set[Edge] = set()
        for parent, child in edges:
            self.add_edge(parent, child)

    def parents_of(self, child: FirstOrderVariable) -> tuple[FirstOrderVariable, ...]:
        return tuple(sorted((p for p, c in self.edges if c == child), key=str))

    def indegree(self, child: FirstOrderVariable) -> int:
        return sum(1 for _, c in self.edges if c == child)

    def would_cycle(self, parent: FirstOrderVariable, child: FirstOrderVariable) -> bool:
        """True if adding parent -> child closes a directed cycle."""
        if parent == child:
            return True
        stack, seen = [child], set()
        while stack:
            node = stack.pop()
            if node == parent:
                return True
            for p, c in self.edges:
                if p == node and c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    def add_edge(self, parent: FirstOrderVariable, child: FirstOrderVariable) -> None:
        assert parent in self._nodeset and child in self._nodeset
        assert not self.would_cycle(parent, child), "edge would create a cycle"
        self.edges.add((parent, child))

    def remove_edge(self, parent: FirstOrderVariable, child: FirstOrderVariable) -> None:
        self.edges.remove((parent, child))

    def copy(self) -> "BayesNetState":
        dup = BayesNetState(self.nodes)
        dup.edges = set(self.edges)
        return dup

    def family_of(self, child: FirstOrderVariable) -> FamilySpec:
        return FamilySpec(child, self.parents_of(child))

    def dump(self) -> str:
        """Edge-list text: one `child <- parent1, parent2` line per node with
        parents, children sorted."""
        lines = []
        for child in sorted({c for _, c in self.edges}, key=str):
            parents = ", ".join(str(p) for p in self.parents_of(child))
            lines.append(f"{child} <- {parents}")
        return "\n".join(lines) + ("\n" if lines else "")


@dataclass
class SearchTrace:
    """Ordered log of every family score request plus move accounting."""

    families_requested: list[FamilySpec] = field(default_factory=list)
    moves_accepted: int = 0

    @property
    def distinct_families(self) -> int:
        return len({f.key for f in self.families_requested})

    @property
    def distinct_relational_families(self) -> int:
        return len({f.key for f in self.families_requested if f.rel_bindings})

    def dump_jsonl(self) -> str:
        import json

        lines = [
            json.dumps(
                {"child": str(f.child), "parents": [str(p) for p in f.parents]},
                sort_keys=True,
            )
            for f in self.families_requested
        ]
        return "\n".join(lines) + ("\n" if lines else "")


class Scorer:
    """Caching family scorer; logs every request to the trace."""

    def __init__(self, provider, params: BdeuParams, trace: SearchTrace):
        self.provider = provider
        self.params = params
        self.trace = trace

    def family_score(self, family: FamilySpec) -> float:
        self.trace.families_requested.append(family)
        cached = self.provider.cache.scores.get(family.score_key)
        if cached is not None:
            return cached.value
        table = self.provider.family_ct(family)
        result = bdeu_family(family_counts(table, family), self.params)
        self.provider.cache.scores[family.score_key] = result
        return result.value


def _legal_moves(
    state: BayesNetState,
    variables: Sequence[FirstOrderVariable],
    frozen: set[Edge],
    max_parents: int,
) -> list[tuple[str, Edge]]:
    """Enumerate add/delete/reverse moves over ``variables`` in deterministic
    order.  Frozen edges (inherited from smaller lattice points) cannot be
    deleted or reversed; acyclicity and indegree are checked against the full
    graph, not just the local variables."""
    local = sorted(variables, key=str)
    localset = set(local)
    moves: list[tuple[str, Edge]] = []
    for child in local:
        if state.indegree(child) >= max_parents:
            can_add = False
        else:
            can_add = True
        for parent in local:
            if parent == child:
                continue
            edge = (parent, child)
            if edge in state.edges:
                continue
            if can_add and not state.would_cycle(parent, child):
                moves.append(("add", edge))
    for edge in sorted(state.edges, key=lambda e: (str(e[1]), str(e[0]))):
        parent, child = edge
        if parent not in localset or child not in localset or edge in frozen:
            continue
        moves.append(("delete", edge))
        state.remove_edge(parent, child)
        if state.indegree(parent) < max_parents and not state.would_cycle(child, parent):
            moves.append(("reverse", edge))
        state.add_edge(parent, child)
    return moves


def _move_delta(state: BayesNetState, scorer: Scorer, kind: str, edge: Edge) -> float:
    parent, child = edge
    before = scorer.family_score(state.family_of(child))
    if kind == "add":
        after = scorer.family_score(FamilySpec(child, state.parents_of(child) + (parent,)))
        delta = after - before
    elif kind == "delete":
        remaining = tuple(p for p in state.parents_of(child) if p != parent)
        delta = scorer.family_score(FamilySpec(child, remaining)) - before
    else:  # reverse: child loses parent, parent gains child
        remaining = tuple(p for p in state.parents_of(child) if p != parent)
        delta = scorer.family_score(FamilySpec(child, remaining)) - before
        before_p = scorer.family_score(state.family_of(parent))
        after_p = scorer.family_score(FamilySpec(parent, state.parents_of(parent) + (child,)))
        delta += after_p - before_p
    return delta


def _apply(state: BayesNetState, kind: str, edge: Edge) -> None:
    parent, child = edge
    if kind == "add":
        state.add_edge(parent, child)
    elif kind == "delete":
        state.remove_edge(parent, child)
    else:
        state.remove_edge(parent, child)
        state.add_edge(child, parent)


_MOVE_RANK = {"add": 0, "delete": 1, "reverse": 2}


def _climb_once(
    state: BayesNetState,
    variables: Sequence[FirstOrderVariable],
    frozen: set[Edge],
    scorer: Scorer,
    params: SearchParams,
    trace: SearchTrace,
    deadline=None,
) -> None:
    while True:
        if deadline is not None:
            deadline.check()
        moves = _legal_moves(state, variables, frozen, params.max_parents)
        best = None
        for kind, edge in moves:
            delta = _move_delta(state, scorer, kind, edge)
            if delta <= 0:
                continue
            # prefer the largest gain; break ties on the smallest
            # (child, parent, kind) triple for reproducibility
            rank = (-delta, str(edge[1]), str(edge[0]), _MOVE_RANK[kind])
            if best is None or rank < best[0]:
                best = (rank, kind, edge)
        if best is None:
            return
        _apply(state, best[1], best[2])
        trace.moves_accepted += 1


def hill_climb(
    point: LatticePoint,
    provider,
    params: SearchParams,
    inherited_edges: Iterable[Edge] = (),
    state: BayesNetState | None = None,
    trace: SearchTrace | None = None,
    deadline=None,
) -> BayesNetState:
    """Greedy local search over the point's applicable variables.

    Inherited edges are frozen.  With restarts > 0, additional passes start
    from seeded random edge sets and the best-scoring result wins; the
    default is a single pass from the inherited edges only.  Deterministic
    for a fixed seed.
    """
    trace = trace if trace is not None else SearchTrace()
    scorer = Scorer(provider, params.bdeu, trace)
    frozen = set(inherited_edges)
    if state is None:
        state = BayesNetState(point.variables, frozen)
    variables = [v for v in point.variables]

    def total(s: BayesNetState) -> float:
        return sum(scorer.family_score(s.family_of(v)) for v in sorted(variables, key=str))

    _climb_once(state, variables, frozen, scorer, params, trace, deadline)
    if params.restarts <= 0:
        return state
    best_state, best_score = state, total(state)
    rng = random.Random(params.seed)
    for _ in range(params.restarts):
        candidate = state.copy()
        for parent, child in list(candidate.edges):
            if (parent, child) not in frozen:
                candidate.remove_edge(parent, child)
        adds = [
            (p, c)
            for p in variables
            for c in variables
            if p != c and (p, c) not in candidate.edges
        ]
        rng.shuffle(adds)
        for parent, child in adds[: rng.randint(0, len(variables))]:
            if (
                candidate.indegree(child) < params.max_parents
                and not candidate.would_cycle(parent, child)
            ):
                candidate.add_edge(parent, child)
        _climb_once(candidate, variables, frozen, scorer, params, trace, deadline)
        score = total(candidate)
        if score > best_score:
            best_state, best_score = candidate, score
    state.edges = set(best_state.edges)
    return state


def learn_and_join(
    db: Database,
    lattice: RelationshipLattice,
    provider,
    params: SearchParams,
    deadline=None,
) -> tuple[BayesNetState, SearchTrace]:
    """Bottom-up structure learning: per-population-variable entity points
    first, then lattice points by ascending chain length, each inheriting
    (and freezing) the edges learned so far.  Returns the final model over
    all variables plus the trace of family requests."""
    schema = db.schema
    state = BayesNetState(derive_variables(schema))
    trace = SearchTrace()
    points: list[LatticePoint] = [schema.entity_point([label]) for label in schema.labels]
    points.extend(lattice.points)
    for point in points:
        if deadline is not None:
            deadline.check()
        local = set(point.variables)
        frozen = {(p, c) for p, c in state.edges if p in local and c in local}
        hill_climb(point, provider, params, frozen, state=state, trace=trace, deadline=deadline)
    return state, trace


def mean_parents_per_node(bn: BayesNetState) -> float:
    if not bn.nodes:
        return 0.0
    return len(bn.edges) / len(bn.nodes)
