"""Relational vocabulary: entity/relationship metadata, first-order variables,
and the lattice of relationship chains.

A schema declares entity types (with finite-domain attributes) and binary
relationship types.  From it we derive the first-order variables that counting
and scoring operate on: one variable per (entity attribute, population
variable), plus an indicator and one variable per attribute for each
relationship.  Chains of relationships, ordered by subset inclusion, form the
relationship lattice; each lattice point carries the list of variables that
apply to it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

# Reserved sentinel for "relationship does not hold"; never a domain value.
NA = "N/A"
TRUE = "T"
FALSE = "F"

ENTITY_ATTR = "entity-attribute"
REL_ATTR = "relationship-attribute"
REL_INDICATOR = "relationship-indicator"

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"


class SchemaError(ValueError):
    """Malformed schema text or inconsistent declarations."""


class NoCoveringPointError(LookupError):
    """No lattice point covers the requested relationship set."""


@dataclass(frozen=True)
class AttributeDef:
    """A named attribute with a finite, ordered domain.

    ``includes_na`` is true exactly for relationship attributes: their value
    is N/A whenever the relationship does not hold.  N/A itself is never
    listed in ``domain``.
    """

    name: str
    domain: tuple[str, ...]
    includes_na: bool = False

    @property
    def effective_size(self) -> int:
        return len(self.domain) + (1 if self.includes_na else 0)


@dataclass(frozen=True)
class EntityType:
    name: str
    key_column: str
    attributes: tuple[AttributeDef, ...]

    def attribute(self, name: str) -> AttributeDef:
        for a in self.attributes:
            if a.name == name:
                return a
        raise SchemaError(f"entity {self.name} has no attribute {name!r}")


@dataclass(frozen=True)
class RelationshipType:
    """A binary relationship; each endpoint binds an entity type to a
    population-variable label.  The two labels are always distinct, even for
    self-relationships (e.g. Friend(X, Y) over Person)."""

    name: str
    endpoints: tuple[tuple[str, str], tuple[str, str]]  # (entity name, label)
    attributes: tuple[AttributeDef, ...]

    @property
    def labels(self) -> tuple[str, str]:
        return (self.endpoints[0][1], self.endpoints[1][1])

    def attribute(self, name: str) -> AttributeDef:
        for a in self.attributes:
            if a.name == name:
                return a
        raise SchemaError(f"relationship {self.name} has no attribute {name!r}")


@dataclass(frozen=True)
class FirstOrderVariable:
    """One column of a contingency table.

    kind is one of ENTITY_ATTR, REL_ATTR, REL_INDICATOR.  ``owner`` names the
    declaring entity or relationship type, ``attr`` the attribute (None for
    indicators), ``labels`` the population variables the pattern ranges over.
    ``domain`` excludes N/A; ``na_allowed`` marks relationship attributes.
    """

    kind: str
    owner: str
    attr: str | None
    labels: tuple[str, ...]
    domain: tuple[str, ...]
    na_allowed: bool

    def __str__(self) -> str:
        args = ",".join(self.labels)
        if self.kind == REL_INDICATOR:
            return f"{self.owner}({args})"
        return f"{self.owner}.{self.attr}({args})"

    __repr__ = __str__

    @property
    def effective_size(self) -> int:
        return len(self.domain) + (1 if self.na_allowed else 0)

    def values(self) -> tuple[str, ...]:
        """All values the variable can take, N/A last."""
        return self.domain + ((NA,) if self.na_allowed else ())

    @property
    def binding(self) -> "RelBinding":
        if self.kind == ENTITY_ATTR:
            raise ValueError(f"{self} is not a relationship variable")
        return RelBinding(self.owner, (self.labels[0], self.labels[1]))


@dataclass(frozen=True)
class RelBinding:
    """A relationship type bound to its population-variable labels; the unit
    a lattice point is made of."""

    rel: str
    labels: tuple[str, str]

    def __str__(self) -> str:
        return f"{self.rel}({','.join(self.labels)})"

    __repr__ = __str__


def _sorted_bindings(bindings: Iterable[RelBinding]) -> list[RelBinding]:
    return sorted(bindings, key=lambda b: b.rel)


@dataclass(frozen=True)
class LatticePoint:
    """A chain of relationships together with its applicable variables:
    indicators and attributes of the member relationships plus the entity
    attributes of every population variable they touch.

    An entity pseudo-point (empty relationship set, used to serve families
    with no relationship variables) carries only entity attributes.
    """

    relationships: frozenset[RelBinding]
    variables: tuple[FirstOrderVariable, ...]

    @property
    def is_entity_point(self) -> bool:
        return not self.relationships

    @property
    def labels(self) -> frozenset[str]:
        out: set[str] = set()
        for b in self.relationships:
            out.update(b.labels)
        for v in self.variables:
            out.update(v.labels)
        return frozenset(out)

    @property
    def attr_variables(self) -> tuple[FirstOrderVariable, ...]:
        return tuple(v for v in self.variables if v.kind != REL_INDICATOR)

    @property
    def name(self) -> str:
        if self.is_entity_point:
            return "{entity:" + ",".join(sorted(self.labels)) + "}"
        return "{" + ",".join(b.rel for b in _sorted_bindings(self.relationships)) + "}"

    def __str__(self) -> str:
        return self.name

    def sort_key(self) -> tuple:
        return (len(self.relationships), tuple(b.rel for b in _sorted_bindings(self.relationships)))


class Schema:
    """Validated relational vocabulary.  Immutable after construction."""

    def __init__(self, entities: Sequence[EntityType], relationships: Sequence[RelationshipType]):
        self.entities = tuple(entities)
        self.relationships = tuple(relationships)
        self._validate()
        self._entity_by_name = {e.name: e for e in self.entities}
        self._rel_by_name = {r.name: r for r in self.relationships}
        # label -> entity name; labels are globally typed
        self._label_entity: dict[str, str] = {}
        for r in self.relationships:
            for ent, label in r.endpoints:
                self._label_entity[label] = ent
        for e in self.entities:
            if not any(lbl for lbl, ent in self._label_entity.items() if ent == e.name):
                # entity appears in no relationship: its name doubles as label
                self._label_entity[e.name] = e.name
        # variable derivation is deferred to first use so benchmark metadata
        # timing captures it
        self._variables: tuple[FirstOrderVariable, ...] | None = None
        self._var_by_str: dict[str, FirstOrderVariable] = {}

    # -- validation ------------------------------------------------------

    def _validate(self) -> None:
        names: set[str] = set()
        for e in self.entities:
            if e.name in names:
                raise SchemaError(f"duplicate name {e.name!r}")
            names.add(e.name)
            self._check_attrs(e.name, e.attributes, key_column=e.key_column)
        entity_names = {e.name for e in self.entities}
        label_type: dict[str, str] = {}
        for r in self.relationships:
            if r.name in names:
                raise SchemaError(f"duplicate name {r.name!r}")
            names.add(r.name)
            if len(r.endpoints) != 2:
                raise SchemaError(f"relationship {r.name} must have exactly 2 endpoints")
            (e1, l1), (e2, l2) = r.endpoints
            for ent in (e1, e2):
                if ent not in entity_names:
                    raise SchemaError(f"unknown entity type {ent!r} in relationship {r.name}")
            if l1 == l2:
                raise SchemaError(
                    f"relationship {r.name}: population variables must be distinct, got {l1!r} twice"
                )
            for ent, lbl in r.endpoints:
                if label_type.setdefault(lbl, ent) != ent:
                    raise SchemaError(
                        f"label {lbl!r} bound to both {label_type[lbl]!r} and {ent!r}"
                    )
            self._check_attrs(r.name, r.attributes, forbidden=set(r.labels))

    @staticmethod
    def _check_attrs(
        owner: str,
        attrs: Sequence[AttributeDef],
        key_column: str | None = None,
        forbidden: set[str] | None = None,
    ) -> None:
        seen: set[str] = set()
        for a in attrs:
            if a.name in seen:
                raise SchemaError(f"{owner}: duplicate attribute {a.name!r}")
            if a.name == key_column:
                raise SchemaError(f"{owner}: attribute {a.name!r} collides with key column")
            if forbidden and a.name in forbidden:
                raise SchemaError(f"{owner}: attribute {a.name!r} collides with a population variable")
            seen.add(a.name)
            if not a.domain:
                raise SchemaError(f"{owner}.{a.name}: empty domain")
            if NA in a.domain:
                raise SchemaError(f"{owner}.{a.name}: {NA!r} is reserved and cannot be a domain value")
            if len(set(a.domain)) != len(a.domain):
                raise SchemaError(f"{owner}.{a.name}: duplicate domain values")

    # -- lookups ---------------------------------------------------------

    def entity(self, name: str) -> EntityType:
        try:
            return self._entity_by_name[name]
        except KeyError:
            raise SchemaError(f"unknown entity type {name!r}") from None

    def relationship(self, name: str) -> RelationshipType:
        try:
            return self._rel_by_name[name]
        except KeyError:
            raise SchemaError(f"unknown relationship type {name!r}") from None

    def entity_of_label(self, label: str) -> EntityType:
        try:
            return self.entity(self._label_entity[label])
        except KeyError:
            raise SchemaError(f"unknown population variable {label!r}") from None

    def labels_of_entity(self, name: str) -> tuple[str, ...]:
        return tuple(sorted(l for l, e in self._label_entity.items() if e == name))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(sorted(self._label_entity))

    @property
    def table_names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entities) + tuple(r.name for r in self.relationships)

    def variable(self, text: str) -> FirstOrderVariable:
        """Resolve a variable from its display string, e.g. ``RA(P,S)`` or
        ``Student.intelligence(S)``."""
        try:
            return self._derived_index()[text]
        except KeyError:
            raise SchemaError(f"unknown variable {text!r}") from None

    # -- first-order variables -------------------------------------------

    def entity_attr_var(self, entity: EntityType, attr: AttributeDef, label: str) -> FirstOrderVariable:
        return FirstOrderVariable(ENTITY_ATTR, entity.name, attr.name, (label,), attr.domain, False)

    def rel_vars(self, rel: RelationshipType) -> tuple[FirstOrderVariable, ...]:
        out = [FirstOrderVariable(REL_INDICATOR, rel.name, None, rel.labels, (FALSE, TRUE), False)]
        for a in rel.attributes:
            out.append(FirstOrderVariable(REL_ATTR, rel.name, a.name, rel.labels, a.domain, True))
        return tuple(out)

    def _derive_variables(self) -> tuple[FirstOrderVariable, ...]:
        if self._variables is None:
            out: list[FirstOrderVariable] = []
            for e in sorted(self.entities, key=lambda e: e.name):
                for label in self.labels_of_entity(e.name):
                    for a in e.attributes:
                        out.append(self.entity_attr_var(e, a, label))
            for r in sorted(self.relationships, key=lambda r: r.name):
                out.extend(self.rel_vars(r))
            self._variables = tuple(out)
        return self._variables

    def _derived_index(self) -> dict[str, FirstOrderVariable]:
        if not self._var_by_str:
            self._var_by_str = {str(v): v for v in self._derive_variables()}
        return self._var_by_str

    # -- points ------------------------------------------------------------

    def make_point(self, bindings: Iterable[RelBinding]) -> LatticePoint:
        """Build a lattice point for a set of relationship bindings, with the
        full applicable variable list."""
        bset = frozenset(bindings)
        if not bset:
            raise SchemaError("a lattice point needs at least one relationship")
        labels = sorted({l for b in bset for l in b.labels})
        variables: list[FirstOrderVariable] = []
        for label in labels:
            e = self.entity_of_label(label)
            for a in e.attributes:
                variables.append(self.entity_attr_var(e, a, label))
        for b in _sorted_bindings(bset):
            variables.extend(self.rel_vars(self.relationship(b.rel)))
        return LatticePoint(bset, tuple(variables))

    def entity_point(self, labels: Iterable[str]) -> LatticePoint:
        """The pseudo-point serving families with no relationship variables."""
        variables: list[FirstOrderVariable] = []
        for label in sorted(set(labels)):
            e = self.entity_of_label(label)
            for a in e.attributes:
                variables.append(self.entity_attr_var(e, a, label))
        return LatticePoint(frozenset(), tuple(variables))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Schema)
            and self.entities == other.entities
            and self.relationships == other.relationships
        )

    def __repr__(self) -> str:
        return f"Schema(entities={len(self.entities)}, relationships={len(self.relationships)})"


class RelationshipLattice:
    """All connected relationship chains up to a maximum length, ordered by
    subset inclusion.  Disconnected relationship subsets are never
    materialized: counts for them are assembled as products of the tables of
    their connected components, whose groundings range over disjoint
    population variables."""

    def __init__(self, schema: Schema, points: Sequence[LatticePoint], max_chain_length: int):
        self.schema = schema
        self.points = tuple(sorted(points, key=lambda p: p.sort_key()))
        self.max_chain_length = max_chain_length
        self._by_rels = {p.relationships: p for p in self.points}
        self.edges: tuple[tuple[LatticePoint, LatticePoint], ...] = tuple(
            (p, q)
            for p in self.points
            for q in self.points
            if p.relationships < q.relationships
            and len(q.relationships) == len(p.relationships) + 1
        )

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def point_for(self, bindings: Iterable[RelBinding]) -> LatticePoint:
        key = frozenset(bindings)
        try:
            return self._by_rels[key]
        except KeyError:
            raise NoCoveringPointError(
                f"no lattice point for {{{', '.join(str(b) for b in _sorted_bindings(key))}}}"
            ) from None

    def has_point(self, bindings: Iterable[RelBinding]) -> bool:
        return frozenset(bindings) in self._by_rels


def connected_components(bindings: Iterable[RelBinding]) -> list[frozenset[RelBinding]]:
    """Split a relationship set into maximal groups connected through shared
    population variables.  Order is deterministic (by first member name)."""
    remaining = _sorted_bindings(bindings)
    comps: list[frozenset[RelBinding]] = []
    while remaining:
        comp = {remaining.pop(0)}
        labels = {l for b in comp for l in b.labels}
        grew = True
        while grew:
            grew = False
            for b in list(remaining):
                if labels.intersection(b.labels):
                    comp.add(b)
                    labels.update(b.labels)
                    remaining.remove(b)
                    grew = True
        comps.append(frozenset(comp))
    return comps


# -- schema file parsing ---------------------------------------------------

_ENTITY_RE = re.compile(rf"^entity\s+({_IDENT})\s+key=({_IDENT})\s*(.*)$")
_REL_RE = re.compile(
    rf"^rel\s+({_IDENT})\(\s*({_IDENT})\s+as\s+({_IDENT})\s*,\s*({_IDENT})\s+as\s+({_IDENT})\s*\)\s*(.*)$"
)
_ATTR_RE = re.compile(rf"attr\s+({_IDENT})\{{([^}}]*)\}}")


def _parse_attrs(rest: str, lineno: int, includes_na: bool) -> tuple[AttributeDef, ...]:
    attrs: list[AttributeDef] = []
    pos = 0
    rest = rest.strip()
    while pos < len(rest):
        m = _ATTR_RE.match(rest, pos)
        if not m:
            raise SchemaError(f"line {lineno}: expected 'attr name{{...}}', got {rest[pos:]!r}")
        values = tuple(v.strip() for v in m.group(2).split(","))
        if values == ("",):
            raise SchemaError(f"line {lineno}: attribute {m.group(1)!r} has an empty domain")
        if any(not v for v in values):
            raise SchemaError(f"line {lineno}: attribute {m.group(1)!r} has an empty domain value")
        attrs.append(AttributeDef(m.group(1), values, includes_na))
        pos = m.end()
        while pos < len(rest) and rest[pos].isspace():
            pos += 1
    return tuple(attrs)


def load_schema(text: str) -> Schema:
    """Parse the line-oriented schema format.

    ``entity <Name> key=<col> attr <name>{v1,v2,...} ...`` declares an entity
    type; ``rel <Name>(<Entity> as <Var>, <Entity> as <Var>) attr ...`` a
    binary relationship.  ``#`` starts a comment.  Raises SchemaError with a
    line number on malformed input.
    """
    entities: list[EntityType] = []
    rels: list[RelationshipType] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("entity"):
            m = _ENTITY_RE.match(line)
            if not m:
                raise SchemaError(f"line {lineno}: malformed entity declaration")
            entities.append(
                EntityType(m.group(1), m.group(2), _parse_attrs(m.group(3), lineno, includes_na=False))
            )
        elif line.startswith("rel"):
            m = _REL_RE.match(line)
            if not m:
                raise SchemaError(f"line {lineno}: malformed relationship declaration")
            endpoints = ((m.group(2), m.group(3)), (m.group(4), m.group(5)))
            rels.append(
                RelationshipType(m.group(1), endpoints, _parse_attrs(m.group(6), lineno, includes_na=True))
            )
        else:
            raise SchemaError(f"line {lineno}: expected 'entity' or 'rel', got {line.split()[0]!r}")
    try:
        return Schema(entities, rels)
    except SchemaError:
        raise


def dump_schema(schema: Schema) -> str:
    """Inverse of load_schema, up to whitespace and comments."""
    lines: list[str] = []
    for e in schema.entities:
        parts = [f"entity {e.name} key={e.key_column}"]
        parts += [f"attr {a.name}{{{','.join(a.domain)}}}" for a in e.attributes]
        lines.append(" ".join(parts))
    for r in schema.relationships:
        (e1, l1), (e2, l2) = r.endpoints
        parts = [f"rel {r.name}({e1} as {l1}, {e2} as {l2})"]
        parts += [f"attr {a.name}{{{','.join(a.domain)}}}" for a in r.attributes]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def derive_variables(schema: Schema) -> tuple[FirstOrderVariable, ...]:
    """All first-order variables of a schema in deterministic order: entity
    attributes (entities alphabetical, then labels), then per relationship its
    indicator followed by its attributes."""
    return schema._derive_variables()


def build_lattice(schema: Schema, max_chain_length: int = 3) -> RelationshipLattice:
    """Enumerate every connected relationship chain of length up to
    ``max_chain_length``.  Connectivity is through shared population
    variables."""
    if max_chain_length < 1:
        raise ValueError("max_chain_length must be >= 1")
    atoms = [RelBinding(r.name, r.labels) for r in sorted(schema.relationships, key=lambda r: r.name)]
    seen: set[frozenset[RelBinding]] = {frozenset({a}) for a in atoms}
    frontier = list(seen)
    while frontier:
        nxt: list[frozenset[RelBinding]] = []
        for point in frontier:
            if len(point) >= max_chain_length:
                continue
            labels = {l for b in point for l in b.labels}
            for a in atoms:
                if a in point or not labels.intersection(a.labels):
                    continue
                grown = point | {a}
                if grown not in seen:
                    seen.add(grown)
                    nxt.append(grown)
        frontier = nxt
    points = [schema.make_point(rels) for rels in seen]
    return RelationshipLattice(schema, points, max_chain_length)


def family_lattice_point(family, lattice: RelationshipLattice) -> LatticePoint:
    """The minimal lattice point covering a family: its relationship set must
    contain every relationship variable's binding and its labels every
    population variable the family touches.  Entity-only families get an
    entity pseudo-point over their labels."""
    needed = frozenset(family.rel_bindings)
    if not needed:
        return lattice.schema.entity_point(family.labels)
    candidates = [
        p
        for p in lattice.points
        if needed <= p.relationships and family.labels <= p.labels
    ]
    if not candidates:
        raise NoCoveringPointError(
            f"no covering lattice point for family {family} "
            f"(max chain length {lattice.max_chain_length})"
        )
    return min(candidates, key=lambda p: p.sort_key())

