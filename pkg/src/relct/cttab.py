"""Contingency-table algebra: projection, product, assembly of "at least"
tables, and the inclusion-exclusion pivot that extends positive tables to
complete ones covering false relationships without touching the data again.

A table maps value tuples over an ordered variable list to positive counts;
absent tuples mean zero.  Relationship attributes take the N/A sentinel
exactly when their relationship does not hold, so a complete table encodes
true and false relationships in one structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Mapping, Protocol, Sequence

from .schema import (
    ENTITY_ATTR,
    FALSE,
    NA,
    REL_ATTR,
    REL_INDICATOR,
    TRUE,
    FirstOrderVariable,
    RelBinding,
    connected_components,
)


class InconsistentCountsError(RuntimeError):
    """A pivot subtraction went negative: the positive inputs cannot all come
    from one database (integrity failure upstream)."""


def _row_sort_key(values: tuple[str, ...]) -> tuple:
    return tuple((1, "") if v == NA else (0, v) for v in values)


class ContingencyTable:
    """Immutable multiset of (value tuple -> count) rows over a variable list.

    Counts are strictly positive; zero-count rows are dropped on construction
    (consumers that need them, like the scorer, supply zeros for absent
    combinations).  ``total`` is maintained eagerly.
    """

    __slots__ = ("variables", "rows", "total")

    def __init__(
        self,
        variables: Sequence[FirstOrderVariable],
        rows: Mapping[tuple[str, ...], int],
    ):
        variables = tuple(variables)
        clean: dict[tuple[str, ...], int] = {}
        total = 0
        width = len(variables)
        for key, count in rows.items():
            if count == 0:
                continue
            if count < 0:
                raise ValueError(f"negative count {count} for {key}")
            if len(key) != width:
                raise ValueError(f"row width {len(key)} != {width} variables")
            clean[key] = count
            total += count
        if total > 2**63 - 1:
            raise OverflowError("contingency table total exceeds 64-bit range")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "rows", clean)
        object.__setattr__(self, "total", total)

    def __setattr__(self, name, value):  # immutable after __init__
        raise AttributeError("ContingencyTable is immutable")

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ContingencyTable)
            and self.variables == other.variables
            and self.rows == other.rows
        )

    def __len__(self) -> int:
        return len(self.rows)

    def __repr__(self) -> str:
        return f"ContingencyTable({len(self.rows)} rows, total={self.total}, vars={list(map(str, self.variables))})"

    def index_of(self, var: FirstOrderVariable) -> int:
        try:
            return self.variables.index(var)
        except ValueError:
            raise KeyError(f"variable {var} not in table") from None

    # -- algebra -----------------------------------------------------------

    def project(self, keep: Sequence[FirstOrderVariable]) -> "ContingencyTable":
        """Sum out every column not in ``keep``; counts group by the kept
        columns, total is preserved."""
        keep = tuple(keep)
        positions = [self.index_of(v) for v in keep]
        if keep == self.variables:
            return self
        out: dict[tuple[str, ...], int] = {}
        for key, count in self.rows.items():
            k = tuple(key[p] for p in positions)
            out[k] = out.get(k, 0) + count
        return ContingencyTable(keep, out)

    def with_column_order(self, variables: Sequence[FirstOrderVariable]) -> "ContingencyTable":
        """Reorder columns; ``variables`` must be a permutation of ours."""
        variables = tuple(variables)
        if variables == self.variables:
            return self
        if sorted(map(str, variables)) != sorted(map(str, self.variables)):
            raise ValueError("column reorder must use the same variable set")
        return self.project(variables)

    def product(self, other: "ContingencyTable") -> "ContingencyTable":
        """Cartesian product; counts multiply.  The operands must range over
        disjoint population variables (their groundings are independent)."""
        mine = {l for v in self.variables for l in v.labels}
        theirs = {l for v in other.variables for l in v.labels}
        shared = mine & theirs
        if shared:
            raise ValueError(f"product operands share population variables: {sorted(shared)}")
        out: dict[tuple[str, ...], int] = {}
        for k1, c1 in self.rows.items():
            for k2, c2 in other.rows.items():
                out[k1 + k2] = c1 * c2
        return ContingencyTable(self.variables + other.variables, out)

    def canonical(self) -> "ContingencyTable":
        return self.with_column_order(tuple(sorted(self.variables, key=str)))

    def sorted_rows(self) -> list[tuple[tuple[str, ...], int]]:
        return sorted(self.rows.items(), key=lambda kv: _row_sort_key(kv[0]))

    def to_csv(self) -> str:
        """Dump format: `count` column first, then one column per variable;
        rows sorted lexicographically with N/A last.  Variable names contain
        commas (e.g. RA(P,S)), so header cells are quoted per CSV rules."""
        import csv
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["count"] + [str(v) for v in self.variables])
        for key, count in self.sorted_rows():
            writer.writerow([count] + list(key))
        return buf.getvalue()

    def validate(self) -> None:
        """Debug check: every value in its domain, and the Table-2 pattern
        (relationship attribute is N/A iff its indicator column, when present,
        is F)."""
        indicator_pos = {
            v.binding: i for i, v in enumerate(self.variables) if v.kind == REL_INDICATOR
        }
        for key in self.rows:
            for i, v in enumerate(self.variables):
                value = key[i]
                if value == NA:
                    if not v.na_allowed:
                        raise AssertionError(f"{v} cannot be N/A")
                elif value not in v.domain:
                    raise AssertionError(f"value {value!r} outside domain of {v}")
                if v.kind == REL_ATTR and v.binding in indicator_pos:
                    ind = key[indicator_pos[v.binding]]
                    if (value == NA) != (ind == FALSE):
                        raise AssertionError(
                            f"N/A pattern violated for {v}: value={value!r}, indicator={ind!r}"
                        )


def empty_table(variables: Sequence[FirstOrderVariable] = ()) -> ContingencyTable:
    return ContingencyTable(variables, {})


def unit_table(count: int = 1) -> ContingencyTable:
    """The zero-column table: identity of the Cartesian product."""
    return ContingencyTable((), {(): count} if count else {})


class PositiveSource(Protocol):
    """Where "at least" assembly gets its positive building blocks.

    Strategies differ only here: pre-counting serves cached lattice tables,
    on-demand counting runs fresh joins, the hybrid projects cached positive
    lattice tables.
    """

    def positive_component(
        self, component: frozenset[RelBinding], attrs: Sequence[FirstOrderVariable]
    ) -> ContingencyTable: ...

    def entity_table(
        self, label: str, attrs: Sequence[FirstOrderVariable]
    ) -> ContingencyTable: ...


def at_least_ct(
    variables: Sequence[FirstOrderVariable],
    hold: Iterable[RelBinding],
    source: PositiveSource,
) -> ContingencyTable:
    """Counts over the full grounding space of ``variables`` where every
    relationship in ``hold`` holds and the rest are unconstrained.

    Columns: the entity attributes among ``variables`` plus the relationship
    attributes whose relationship is in ``hold``.  Assembled as a product of
    the positive tables of ``hold``'s connected components with one entity
    factor per population variable untouched by ``hold`` (independent
    groundings multiply).  For an empty ``hold`` this is the pure
    entity-product table.
    """
    variables = tuple(variables)
    hold = frozenset(hold)
    labels = sorted({l for v in variables for l in v.labels})
    key_vars = tuple(
        v
        for v in variables
        if v.kind == ENTITY_ATTR or (v.kind == REL_ATTR and v.binding in hold)
    )
    parts: list[ContingencyTable] = []
    touched: set[str] = set()
    for comp in connected_components(hold):
        comp_labels = {l for b in comp for l in b.labels}
        touched |= comp_labels
        attrs = tuple(
            v
            for v in key_vars
            if (v.kind == REL_ATTR and v.binding in comp)
            or (v.kind == ENTITY_ATTR and v.labels[0] in comp_labels)
        )
        parts.append(source.positive_component(comp, attrs))
    for label in labels:
        if label in touched:
            continue
        attrs = tuple(v for v in key_vars if v.kind == ENTITY_ATTR and v.labels[0] == label)
        parts.append(source.entity_table(label, attrs))
    if not parts:
        return unit_table()
    table = parts[0]
    for part in parts[1:]:
        table = table.product(part)
    return table.with_column_order(key_vars)


AtLeastProvider = Callable[[frozenset[RelBinding]], ContingencyTable]


def subset_tables(
    variables: Sequence[FirstOrderVariable], source: PositiveSource
) -> dict[frozenset[RelBinding], ContingencyTable]:
    """One "at least" table per subset of the relationships appearing in
    ``variables`` (2^m tables); the input family of the pivot below."""
    rels = sorted(
        {v.binding for v in variables if v.kind != ENTITY_ATTR}, key=lambda b: b.rel
    )
    out: dict[frozenset[RelBinding], ContingencyTable] = {}
    for r in range(len(rels) + 1):
        for combo in combinations(rels, r):
            out[frozenset(combo)] = at_least_ct(variables, combo, source)
    return out


def moebius_join(
    variables: Sequence[FirstOrderVariable],
    at_least: Mapping[frozenset[RelBinding], ContingencyTable] | AtLeastProvider,
    pivot_order: Sequence[RelBinding] | None = None,
) -> ContingencyTable:
    """Extend positive counts to a complete table over ``variables`` with
    every indicator taking both T and F, using only the supplied "at least"
    tables (no data access).

    Indicators are processed one at a time; at each step every table that is
    still unconstrained on the pivot relationship is replaced by the pair
    (pivot=T table, pivot=F table), where the F side is the rowwise
    difference (unconstrained minus T) aligned on the shared columns.  F-side
    attributes of the pivot relationship become N/A.  The result satisfies
    the inclusion-exclusion identity N(=P) = sum over Q >= P of (-1)^|Q\\P|
    N(>=Q) for every indicator pattern P.

    The pivot order does not affect the result; it defaults to lattice-point
    member order for reproducible timings.
    """
    variables = tuple(variables)
    indicators = [v for v in variables if v.kind == REL_INDICATOR]
    covered = {v.binding for v in indicators}
    for v in variables:
        if v.kind == REL_ATTR and v.binding not in covered:
            raise ValueError(
                f"attribute {v} has no indicator among the requested variables; "
                "close the variable list over indicators first"
            )
    getter = at_least.__getitem__ if isinstance(at_least, Mapping) else at_least

    def fetch(subset: frozenset[RelBinding]) -> ContingencyTable:
        try:
            return getter(subset)
        except KeyError:
            raise LookupError(
                f"positive source lacks the table for {{{', '.join(sorted(str(b) for b in subset))}}}"
            ) from None

    order = list(pivot_order) if pivot_order is not None else sorted(covered, key=lambda b: b.rel)
    if set(order) != covered:
        raise ValueError("pivot_order must enumerate exactly the indicator relationships")
    m = len(order)
    base_total = fetch(frozenset()).total
    # patterns: per pivot position 'T', 'F', or '*' (still unconstrained)
    state: dict[tuple[str, ...], ContingencyTable] = {}
    for mask in range(2**m):
        subset = frozenset(order[i] for i in range(m) if mask >> i & 1)
        pattern = tuple(TRUE if mask >> i & 1 else "*" for i in range(m))
        state[pattern] = fetch(subset)
    for j in range(m):
        nxt: dict[tuple[str, ...], ContingencyTable] = {}
        for pattern, table in state.items():
            if pattern[j] == TRUE:
                nxt[pattern] = table
        for pattern, table in state.items():
            if pattern[j] != "*":
                continue
            partner = state[pattern[:j] + (TRUE,) + pattern[j + 1 :]]
            f_table = _subtract(table, partner)
            nxt[pattern[:j] + (FALSE,) + pattern[j + 1 :]] = f_table
        state = nxt
    # assemble: patterns are disjoint indicator assignments, so rows merge
    # into the full table without collisions
    out: dict[tuple[str, ...], int] = {}
    pos_of = {b: i for i, b in enumerate(order)}
    for pattern in sorted(state):
        table = state[pattern]
        col = {v: i for i, v in enumerate(table.variables)}
        plan: list[tuple[str, int | str]] = []
        for v in variables:
            if v.kind == REL_INDICATOR:
                plan.append(("const", pattern[pos_of[v.binding]]))
            elif v in col:
                plan.append(("col", col[v]))
            else:
                if not (v.kind == REL_ATTR and pattern[pos_of[v.binding]] == FALSE):
                    raise AssertionError(f"unexpected missing column {v}")
                plan.append(("const", NA))
        for key, count in table.rows.items():
            full = tuple(key[spec] if tag == "col" else spec for tag, spec in plan)
            out[full] = count
    result = ContingencyTable(variables, out)
    if result.total != base_total:
        raise InconsistentCountsError(
            f"complete table total {result.total} != grounding space {base_total}"
        )
    return result


def _subtract(dontcare: ContingencyTable, t_side: ContingencyTable) -> ContingencyTable:
    """Rowwise F = dontcare - T, aligning on the dontcare columns.  Rows
    present only in the dontcare table pass through (T-count zero); a negative
    difference means the inputs are inconsistent."""
    projected = t_side.project(dontcare.variables)
    rows = dict(dontcare.rows)
    for key, count in projected.rows.items():
        left = rows.get(key, 0) - count
        if left < 0:
            raise InconsistentCountsError(
                f"negative count {left} at {key} while splitting on a relationship"
            )
        if left == 0:
            rows.pop(key, None)
        else:
            rows[key] = left
    return ContingencyTable(dontcare.variables, rows)


def close_over_indicators(
    variables: Sequence[FirstOrderVariable], indicator_for: Callable[[RelBinding], FirstOrderVariable]
) -> tuple[FirstOrderVariable, ...]:
    """Add the indicator of every relationship attribute that lacks one, so
    the pivot has a column to split on.  Added columns are projected away
    after completion."""
    variables = tuple(variables)
    present = {v.binding for v in variables if v.kind == REL_INDICATOR}
    needed = sorted(
        {v.binding for v in variables if v.kind == REL_ATTR} - present,
        key=lambda b: b.rel,
    )
    return variables + tuple(indicator_for(b) for b in needed)


def complete_ct(
    variables: Sequence[FirstOrderVariable],
    source: PositiveSource,
    indicator_for: Callable[[RelBinding], FirstOrderVariable],
) -> ContingencyTable:
    """Complete table over ``variables``: closes the list over indicators,
    assembles the per-subset "at least" tables, runs the pivot, and projects
    back to the requested columns."""
    variables = tuple(variables)
    closed = close_over_indicators(variables, indicator_for)
    tables = subset_tables(closed, source)
    full = moebius_join(closed, tables)
    return full.project(variables) if closed != variables else full


# -- size bounds -------------------------------------------------------------


@dataclass(frozen=True)
class SizeEstimate:
    rows: int
    saturated: bool = False


_SATURATION = 2**63 - 1


def _saturate(value: int) -> SizeEstimate:
    if value > _SATURATION:
        return SizeEstimate(_SATURATION, True)
    return SizeEstimate(value)


def estimate_ct_size_precount(max_domain: int, columns: int) -> SizeEstimate:
    """Row-count upper bound V^C for a single table over ``columns`` columns
    of at most ``max_domain`` values each (the growth law of whole-chain
    tables)."""
    if max_domain < 1:
        raise ValueError("max_domain must be >= 1")
    if columns < 0:
        raise ValueError("columns must be >= 0")
    return _saturate(max_domain**columns)


def estimate_ct_size_ondemand(max_domain: int, columns: int, max_parents: int) -> SizeEstimate:
    """Total row bound C * C-1 choose k * V^(k+1) for the per-family tables
    that replace one large table when each scored family has at most
    ``max_parents`` parents."""
    if max_domain < 1:
        raise ValueError("max_domain must be >= 1")
    if not 0 <= max_parents < columns:
        raise ValueError("require 0 <= max_parents < columns")
    value = columns * math.comb(columns - 1, max_parents) * max_domain ** (max_parents + 1)
    return _saturate(value)


def max_effective_domain(variables: Iterable[FirstOrderVariable]) -> int:
    """The V of the size bounds: the largest effective domain among the
    variables, counting N/A for relationship attributes and T/F for
    indicators."""
    return max((v.effective_size for v in variables), default=1)
