"""In-memory relational store: CSV ingestion, validation, and the two
positive-count query forms (entity group-by and relationship-chain join
group-by).

Tables are immutable after load.  Joins are hash joins on shared population
variables, left-deep in lattice-point member order; each executed join bumps
an explicit JoinCounter so the benchmark can account for join work exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .cttab import ContingencyTable
from .schema import (
    ENTITY_ATTR,
    REL_ATTR,
    AttributeDef,
    EntityType,
    FirstOrderVariable,
    LatticePoint,
    Schema,
    _sorted_bindings,
)

class DataError(ValueError):
    """Integrity or domain violation in input data."""


@dataclass
class JoinCounter:
    """Per-run accumulator of executed table joins."""

    joins: int = 0

    def add(self, n: int) -> None:
        self.joins += n


@dataclass(frozen=True)
class DataTable:
    name: str
    columns: tuple[tuple[str, str], ...]  # (name, role); role: key|fk|attr
    rows: tuple[tuple[str, ...], ...]

    @property
    def row_count(self) -> int:
        return len(self.rows)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c[0] for c in self.columns)


class Database:
    """A schema plus one validated table per entity/relationship type.

    Validation enforces unique entity keys, unique links, referential
    integrity on foreign keys, and domain membership of every attribute
    value.  All counting functions are pure reads over this structure.
    """

    def __init__(self, schema: Schema, tables: Mapping[str, DataTable]):
        self.schema = schema
        self.tables = dict(tables)
        missing = [n for n in schema.table_names if n not in self.tables]
        extra = [n for n in self.tables if n not in schema.table_names]
        if missing:
            raise DataError(f"missing table(s): {', '.join(missing)}")
        if extra:
            raise DataError(f"unexpected table(s): {', '.join(extra)}")
        # entity name -> {key -> attr tuple aligned with entity.attributes}
        self.entity_rows: dict[str, dict[str, tuple[str, ...]]] = {}
        # rel name -> {(k1, k2) -> attr tuple aligned with rel.attributes}
        self.links: dict[str, dict[tuple[str, str], tuple[str, ...]]] = {}
        self._validate_entities()
        self._validate_relationships()

    def _validate_entities(self) -> None:
        for e in self.schema.entities:
            t = self.tables[e.name]
            expected = (e.key_column,) + tuple(a.name for a in e.attributes)
            if t.column_names != expected:
                raise DataError(
                    f"{e.name}: header {t.column_names} does not match declared columns {expected}"
                )
            rows: dict[str, tuple[str, ...]] = {}
            for i, row in enumerate(t.rows, start=2):  # header is line 1
                key, vals = row[0], row[1:]
                if key in rows:
                    raise DataError(f"{e.name} row {i}: duplicate key {key!r}")
                for a, v in zip(e.attributes, vals):
                    if v not in a.domain:
                        raise DataError(
                            f"{e.name} row {i}: value {v!r} not in domain of {a.name}"
                        )
                rows[key] = vals
            self.entity_rows[e.name] = rows

    def _validate_relationships(self) -> None:
        for r in self.schema.relationships:
            t = self.tables[r.name]
            expected = r.labels + tuple(a.name for a in r.attributes)
            if t.column_names != expected:
                raise DataError(
                    f"{r.name}: header {t.column_names} does not match declared columns {expected}"
                )
            (e1, _), (e2, _) = r.endpoints
            keys1 = self.entity_rows[e1]
            keys2 = self.entity_rows[e2]
            links: dict[tuple[str, str], tuple[str, ...]] = {}
            for i, row in enumerate(t.rows, start=2):
                k1, k2, vals = row[0], row[1], row[2:]
                if k1 not in keys1:
                    raise DataError(f"{r.name} row {i}: unknown {e1} key {k1!r}")
                if k2 not in keys2:
                    raise DataError(f"{r.name} row {i}: unknown {e2} key {k2!r}")
                if (k1, k2) in links:
                    raise DataError(f"{r.name} row {i}: duplicate link ({k1!r}, {k2!r})")
                for a, v in zip(r.attributes, vals):
                    if v not in a.domain:
                        raise DataError(
                            f"{r.name} row {i}: value {v!r} not in domain of {a.name}"
                        )
                links[(k1, k2)] = vals
            self.links[r.name] = links

    # -- simple accessors --------------------------------------------------

    def population(self, entity_name: str) -> int:
        return len(self.entity_rows[entity_name])

    def population_of_label(self, label: str) -> int:
        return self.population(self.schema.entity_of_label(label).name)

    @property
    def total_rows(self) -> int:
        return sum(t.row_count for t in self.tables.values())

    def grounding_count(self, labels: Iterable[str]) -> int:
        n = 1
        for label in set(labels):
            n *= self.population_of_label(label)
        return n


def _parse_csv(name: str, text: str) -> list[list[str]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DataError(f"{name}: empty file (missing header)")
    width = len(rows[0])
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DataError(f"{name} row {i}: expected {width} fields, got {len(row)}")
        if any(v == "" for v in row):
            raise DataError(f"{name} row {i}: missing value")
    return rows


def load_database(schema: Schema, files: Mapping[str, str]) -> Database:
    """Build a validated Database from one CSV text per schema table.

    Entity files: key column then attributes.  Relationship files: the two
    foreign-key columns (named by the population variables) first, then
    attributes.  First row is the header and must match the declared columns.
    """
    tables: dict[str, DataTable] = {}
    for e in schema.entities:
        if e.name not in files:
            raise DataError(f"missing file for table {e.name}")
        raw = _parse_csv(e.name, files[e.name])
        cols = ((e.key_column, "key"),) + tuple((a.name, "attr") for a in e.attributes)
        if tuple(raw[0]) != tuple(c[0] for c in cols):
            raise DataError(
                f"{e.name}: header {tuple(raw[0])} does not match declared columns "
                f"{tuple(c[0] for c in cols)}"
            )
        tables[e.name] = DataTable(e.name, cols, tuple(tuple(r) for r in raw[1:]))
    for r in schema.relationships:
        if r.name not in files:
            raise DataError(f"missing file for table {r.name}")
        raw = _parse_csv(r.name, files[r.name])
        cols = tuple((l, "fk") for l in r.labels) + tuple((a.name, "attr") for a in r.attributes)
        if tuple(raw[0]) != tuple(c[0] for c in cols):
            raise DataError(
                f"{r.name}: header {tuple(raw[0])} does not match declared columns "
                f"{tuple(c[0] for c in cols)}"
            )
        tables[r.name] = DataTable(r.name, cols, tuple(tuple(row) for row in raw[1:]))
    unknown = set(files) - set(schema.table_names)
    if unknown:
        raise DataError(f"unexpected table(s): {', '.join(sorted(unknown))}")
    return Database(schema, tables)


def dump_database(db: Database) -> dict[str, str]:
    """Serialize back to the CSV format accepted by load_database."""
    out: dict[str, str] = {}
    for name, t in sorted(db.tables.items()):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(t.column_names)
        w.writerows(t.rows)
        out[name] = buf.getvalue()
    return out


# -- counting queries --------------------------------------------------------


def entity_ct(
    db: Database,
    entity: EntityType,
    attrs: Sequence[AttributeDef | str] = (),
    label: str | None = None,
) -> ContingencyTable:
    """Group-by count over one entity table; involves no joins.

    ``label`` selects the population variable the resulting columns are tagged
    with (an entity type used twice, e.g. Friend(X, Y), yields distinct tables
    for X and Y with identical counts).
    """
    resolved = [entity.attribute(a) if isinstance(a, str) else a for a in attrs]
    if label is None:
        label = db.schema.labels_of_entity(entity.name)[0]
    variables = tuple(db.schema.entity_attr_var(entity, a, label) for a in resolved)
    positions = [entity.attributes.index(a) for a in resolved]
    counts: dict[tuple[str, ...], int] = {}
    for vals in db.entity_rows[entity.name].values():
        key = tuple(vals[p] for p in positions)
        counts[key] = counts.get(key, 0) + 1
    return ContingencyTable(variables, counts)


def join_positive_ct(
    db: Database,
    point: LatticePoint,
    attrs: Sequence[FirstOrderVariable] | None = None,
    counter: JoinCounter | None = None,
) -> ContingencyTable:
    """The positive contingency table of a connected lattice point: counts
    grouped over the inner join of the member relationship tables with the
    entity tables of every touched population variable.  Indicator columns
    are omitted (they are implicitly true on every joined tuple).

    ``attrs`` restricts the grouping columns (default: all applicable
    attribute variables).  The join itself always covers all tables of the
    point, so the join count is (#relationships + #labels - 1) regardless of
    the grouping width.
    """
    if point.is_entity_point:
        raise ValueError("join_positive_ct requires a relationship lattice point")
    applicable = point.attr_variables
    if attrs is None:
        keep = applicable
    else:
        keep = tuple(attrs)
        bad = [v for v in keep if v not in applicable]
        if bad:
            raise ValueError(f"variables not applicable to {point.name}: {bad}")
    members = _sorted_bindings(point.relationships)
    keep_rel: dict[str, list[FirstOrderVariable]] = {}
    keep_ent: dict[str, list[FirstOrderVariable]] = {}
    for v in keep:
        if v.kind == REL_ATTR:
            keep_rel.setdefault(v.owner, []).append(v)
        elif v.kind == ENTITY_ATTR:
            keep_ent.setdefault(v.labels[0], []).append(v)

    def rel_attr_positions(binding) -> list[int]:
        rel = db.schema.relationship(binding.rel)
        names = [a.name for a in rel.attributes]
        return [names.index(v.attr) for v in keep_rel.get(binding.rel, [])]

    # working tuples: label keys first (per label_order), then kept attr values
    joins = 0
    first = members[0]
    pos = rel_attr_positions(first)
    label_order: list[str] = list(first.labels)
    out_vars: list[FirstOrderVariable] = list(keep_rel.get(first.rel, []))
    rows: list[tuple[str, ...]] = [
        (k1, k2) + tuple(vals[p] for p in pos)
        for (k1, k2), vals in db.links[first.rel].items()
    ]
    for b in members[1:]:
        pos = rel_attr_positions(b)
        shared = [l for l in b.labels if l in label_order]
        new_labels = [l for l in b.labels if l not in label_order]
        index: dict[tuple[str, ...], list[tuple[str, ...]]] = {}
        for (k1, k2), vals in db.links[b.rel].items():
            env = dict(zip(b.labels, (k1, k2)))
            key = tuple(env[l] for l in shared)
            payload = tuple(env[l] for l in new_labels) + tuple(vals[p] for p in pos)
            index.setdefault(key, []).append(payload)
        shared_pos = [label_order.index(l) for l in shared]
        nxt: list[tuple[str, ...]] = []
        for row in rows:
            key = tuple(row[p] for p in shared_pos)
            for payload in index.get(key, ()):
                nxt.append(row[: len(label_order)] + payload[: len(new_labels)]
                           + row[len(label_order):] + payload[len(new_labels):])
        # splice: labels stay in front, attr values accumulate at the back
        rows = nxt
        label_order.extend(new_labels)
        out_vars.extend(keep_rel.get(b.rel, []))
        joins += 1
    for label in sorted(label_order):
        ent = db.schema.entity_of_label(label)
        wanted = keep_ent.get(label, [])
        positions = [[a.name for a in ent.attributes].index(v.attr) for v in wanted]
        lookup = db.entity_rows[ent.name]
        lp = label_order.index(label)
        if positions:
            rows = [row + tuple(lookup[row[lp]][p] for p in positions) for row in rows]
        else:
            for row in rows:
                lookup[row[lp]]  # the join still executes; nothing is kept
        out_vars.extend(wanted)
        joins += 1
    if counter is not None:
        counter.add(joins)
    nlabels = len(label_order)
    counts: dict[tuple[str, ...], int] = {}
    for row in rows:
        key = row[nlabels:]
        counts[key] = counts.get(key, 0) + 1
    return ContingencyTable(tuple(out_vars), counts).with_column_order(keep)
