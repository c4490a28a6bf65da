"""The three count-caching strategies behind one provider contract.

* pre-counting: before search, build the complete contingency table of every
  lattice point; during search, family tables are projections of those.
* on-demand counting: no preparation; each family's tables are built from
  fresh joins when first requested and cached under the family key.
* hybrid: before search, build only the positive lattice tables; during
  search, each family's positive inputs come from projections of those and
  only the inclusion-exclusion completion runs per family.

All three produce identical family tables; they differ in when joins and
completions happen and in what stays resident.  Memory is accounted in
stored table rows, a deterministic proxy for resident set size.

Concurrency: one cache per run with a single logical writer.  Once prepared,
pre-count and hybrid providers expose pure reads over immutable tables;
concurrent family scoring would need externally partitioned family sets.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

from . import cttab, store
from .cttab import ContingencyTable
from .schema import (
    FirstOrderVariable,
    LatticePoint,
    RelBinding,
    RelationshipLattice,
    Schema,
    connected_components,
    family_lattice_point,
)
from .score import FamilyScore, FamilySpec
from .store import Database, JoinCounter


class MemoryCapExceeded(RuntimeError):
    """Stored contingency-table rows would exceed the configured cap."""


class StrategyStateError(RuntimeError):
    """Provider used out of order (e.g. search before preparation) or asked
    for a table its strategy never builds."""


class CountProviderKind(enum.Enum):
    PRECOUNT = "precount"
    ONDEMAND = "ondemand"
    HYBRID = "hybrid"

    @classmethod
    def from_scopes(cls, positive: str, negative: str) -> "CountProviderKind":
        """Resolve a strategy from where its positive and negative tables are
        built: per lattice point or per family.  Building positive tables per
        family while completing per lattice point is impossible (the lattice
        completion would need positive inputs that were never built)."""
        table = {
            ("lattice-point", "lattice-point"): cls.PRECOUNT,
            ("family", "family"): cls.ONDEMAND,
            ("lattice-point", "family"): cls.HYBRID,
        }
        try:
            return table[(positive, negative)]
        except KeyError:
            raise ValueError(
                f"IMPOSSIBLE strategy: positive={positive!r}, negative={negative!r}"
            ) from None


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    peak_total_rows: int = 0
    family_ct_rows: int = 0  # cumulative rows of distinct family tables
    lattice_ct_rows: int = 0  # rows of complete lattice-point tables


class CountCache:
    """Row-accounted store of positive and complete contingency tables plus
    the per-family score cache.

    Family tables are evictable (largest first) under the row cap; lattice
    tables are not, because the strategies depend on them, so exceeding the
    cap while preparing aborts.  Scores are never evicted (they are tiny).
    """

    def __init__(self, max_rows: int | None = None):
        self.positive: dict[tuple, ContingencyTable] = {}
        self.complete: dict[tuple, ContingencyTable] = {}
        self.scores: dict[tuple[str, ...], FamilyScore] = {}
        self.stats = CacheStats()
        self.max_rows = max_rows
        self.current_rows = 0
        self._evictable: list[tuple] = []  # complete-map keys, insertion order

    @staticmethod
    def point_key(point: LatticePoint) -> tuple:
        return ("point", point.relationships)

    @staticmethod
    def entity_key(label: str) -> tuple:
        return ("entity", label)

    @staticmethod
    def family_key(family: FamilySpec) -> tuple:
        return ("family", family.key)

    def _account(self, added_rows: int) -> None:
        if self.max_rows is not None and self.current_rows + added_rows > self.max_rows:
            self._evict(self.current_rows + added_rows - self.max_rows)
            if self.current_rows + added_rows > self.max_rows:
                raise MemoryCapExceeded(
                    f"cap {self.max_rows} rows; need {self.current_rows + added_rows}"
                )
        self.current_rows += added_rows
        self.stats.peak_total_rows = max(self.stats.peak_total_rows, self.current_rows)

    def _evict(self, need: int) -> None:
        victims = sorted(self._evictable, key=lambda k: -len(self.complete[k]))
        freed = 0
        for key in victims:
            if freed >= need:
                break
            freed += len(self.complete.pop(key))
            self._evictable.remove(key)
        self.current_rows -= freed

    def put_positive(self, key: tuple, table: ContingencyTable) -> None:
        self._account(len(table))
        self.positive[key] = table

    def put_complete(self, key: tuple, table: ContingencyTable, evictable: bool) -> None:
        self._account(len(table))
        self.complete[key] = table
        if evictable:
            self._evictable.append(key)
            self.stats.family_ct_rows += len(table)
        else:
            self.stats.lattice_ct_rows += len(table)


class ComponentTimer:
    """Accumulates wall time per counting component.

    Every counting operation belongs to exactly one component: "metadata"
    (schema/lattice work), "positive" (entity group-bys, joins, and any
    projection or product of positive-only tables) or "negative" (the
    inclusion-exclusion pivot and projections of complete tables, i.e. any
    work that creates or transforms rows for false relationships).
    """

    def __init__(self):
        self.seconds: dict[str, float] = {"metadata": 0.0, "positive": 0.0, "negative": 0.0}
        self.total_seconds = 0.0

    def add(self, component: str, seconds: float) -> None:
        self.seconds[component] += seconds
        self.total_seconds += seconds

    def time(self, component: str) -> "_TimerContext":
        return _TimerContext(self, component)


class _TimerContext:
    def __init__(self, timer: ComponentTimer, component: str):
        self.timer = timer
        self.component = component

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.timer.add(self.component, time.perf_counter() - self.start)
        return False


class Deadline:
    """Wall-clock budget; cooperative checks raise BudgetExceeded."""

    def __init__(self, seconds: float | None):
        self.expires = None if seconds is None else time.monotonic() + seconds

    def check(self) -> None:
        if self.expires is not None and time.monotonic() > self.expires:
            raise BudgetExceeded()


class BudgetExceeded(RuntimeError):
    pass


class _CacheSource:
    """PositiveSource serving projections of cached lattice positives and
    cached per-label entity tables (pre-count and hybrid search phases)."""

    def __init__(self, cache: CountCache):
        self.cache = cache

    def positive_component(self, component, attrs):
        try:
            table = self.cache.positive[("point", frozenset(component))]
        except KeyError:
            raise StrategyStateError(
                f"positive table for {{{', '.join(sorted(b.rel for b in component))}}} was never prepared"
            ) from None
        return table.project(attrs)

    def entity_table(self, label, attrs):
        try:
            table = self.cache.positive[CountCache.entity_key(label)]
        except KeyError:
            raise StrategyStateError(f"entity table for {label} was never prepared") from None
        return table.project(attrs)


class FreshSource:
    """PositiveSource running fresh queries against the database: the
    on-demand strategy's search phase, and the direct route to "at least"
    tables for library users driving the completion themselves."""

    def __init__(self, db: Database, schema: Schema, counter: JoinCounter):
        self.db = db
        self.schema = schema
        self.counter = counter

    def positive_component(self, component, attrs):
        point = self.schema.make_point(component)
        return store.join_positive_ct(self.db, point, attrs=attrs, counter=self.counter)

    def entity_table(self, label, attrs):
        entity = self.schema.entity_of_label(label)
        names = [v.attr for v in attrs]
        return store.entity_ct(self.db, entity, names, label=label)


class CountProvider:
    """Shared machinery: family-table caching, indicator closure, and the
    at-least assembly; subclasses choose the positive source and what the
    preparation phase builds."""

    kind: CountProviderKind

    def __init__(
        self,
        db: Database,
        lattice: RelationshipLattice,
        cache: CountCache | None = None,
        timer: ComponentTimer | None = None,
    ):
        self.db = db
        self.schema = db.schema
        self.lattice = lattice
        self.cache = cache if cache is not None else CountCache()
        self.timer = timer if timer is not None else ComponentTimer()
        self.counter = JoinCounter()
        self._prepared = False

    # -- hooks ---------------------------------------------------------------

    def prepare(self, deadline: Deadline | None = None) -> None:
        self._prepared = True

    def _family_miss(self, family: FamilySpec) -> ContingencyTable:
        raise NotImplementedError

    # -- common --------------------------------------------------------------

    def family_ct(self, family: FamilySpec) -> ContingencyTable:
        """The complete contingency table over the family's variables, in
        canonical column order; cached under the variable-set key."""
        key = CountCache.family_key(family)
        hit = self.cache.complete.get(key)
        if hit is not None:
            self.cache.stats.hits += 1
            return hit
        self.cache.stats.misses += 1
        table = self._family_miss(family)
        self.cache.put_complete(key, table, evictable=True)
        return table

    def _indicator_for(self, binding: RelBinding) -> FirstOrderVariable:
        return self.schema.rel_vars(self.schema.relationship(binding.rel))[0]

    def _complete_from(self, family: FamilySpec, source) -> ContingencyTable:
        variables = family.variables
        closed = cttab.close_over_indicators(variables, self._indicator_for)
        with self.timer.time("positive"):
            tables = cttab.subset_tables(closed, source)
        with self.timer.time("negative"):
            full = cttab.moebius_join(closed, tables)
            return full.project(variables)

    def join_count(self) -> int:
        return self.counter.joins


class PrecountProvider(CountProvider):
    """Build the complete table of every lattice point before search; serve
    families by projection afterwards, with no further data access."""

    kind = CountProviderKind.PRECOUNT

    def prepare(self, deadline: Deadline | None = None) -> None:
        if self.cache.positive or self.cache.complete:
            raise StrategyStateError("prepare requires an empty cache")
        _prepare_entity_tables(self)
        source = _CacheSource(self.cache)
        for point in self.lattice:
            if deadline is not None:
                deadline.check()
            with self.timer.time("positive"):
                table = store.join_positive_ct(self.db, point, counter=self.counter)
            self.cache.put_positive(CountCache.point_key(point), table)
            with self.timer.time("positive"):
                at_least = cttab.subset_tables(point.variables, source)
            with self.timer.time("negative"):
                complete = cttab.moebius_join(point.variables, at_least)
            self.cache.put_complete(CountCache.point_key(point), complete, evictable=False)
        self._prepared = True

    def _family_miss(self, family: FamilySpec) -> ContingencyTable:
        if not self._prepared:
            raise StrategyStateError("pre-count search phase requires prepare()")
        if not family.rel_bindings:
            return _entity_family_ct(self, family)
        point = family_lattice_point(family, self.lattice)
        key = CountCache.point_key(point)
        if key not in self.cache.complete:
            raise StrategyStateError(f"complete table for {point.name} was never prepared")
        with self.timer.time("negative"):
            return self.cache.complete[key].project(family.variables)


class OndemandProvider(CountProvider):
    """No preparation; every distinct family triggers fresh joins for its
    positive inputs, then a completion, with the result cached."""

    kind = CountProviderKind.ONDEMAND

    def _family_miss(self, family: FamilySpec) -> ContingencyTable:
        if not family.rel_bindings:
            with self.timer.time("positive"):
                return _entity_product(self, family)
        source = FreshSource(self.db, self.schema, self.counter)
        return self._complete_from(family, source)


class HybridProvider(CountProvider):
    """Positive lattice tables are built up front; during search each family
    gets its positive inputs by projection and only the completion runs, so
    no joins happen while searching."""

    kind = CountProviderKind.HYBRID

    def prepare(self, deadline: Deadline | None = None) -> None:
        if self.cache.positive or self.cache.complete:
            raise StrategyStateError("prepare requires an empty cache")
        _prepare_entity_tables(self)
        for point in self.lattice:
            if deadline is not None:
                deadline.check()
            with self.timer.time("positive"):
                table = store.join_positive_ct(self.db, point, counter=self.counter)
            self.cache.put_positive(CountCache.point_key(point), table)
        self._prepared = True

    def _family_miss(self, family: FamilySpec) -> ContingencyTable:
        if not self._prepared:
            raise StrategyStateError("hybrid search phase requires prepare()")
        if not family.rel_bindings:
            return _entity_family_ct(self, family)
        for component in connected_components(family.rel_bindings):
            if not self.lattice.has_point(component):
                raise StrategyStateError(
                    f"no prepared positive table covers {{{', '.join(sorted(b.rel for b in component))}}}"
                )
        source = _CacheSource(self.cache)
        return self._complete_from(family, source)


def _prepare_entity_tables(provider: CountProvider) -> None:
    """Cache the full-attribute group-by table of every population variable,
    so the search phase never touches the entity data."""
    for label in provider.schema.labels:
        entity = provider.schema.entity_of_label(label)
        with provider.timer.time("positive"):
            table = store.entity_ct(provider.db, entity, entity.attributes, label=label)
        provider.cache.put_positive(CountCache.entity_key(label), table)


def _entity_product(provider: CountProvider, family: FamilySpec) -> ContingencyTable:
    """Family table of an entity-only family from fresh group-bys: the product
    of one per-label table (independent groundings multiply)."""
    table = cttab.unit_table()
    for label in sorted(family.labels):
        entity = provider.schema.entity_of_label(label)
        attrs = [v.attr for v in family.variables if v.labels[0] == label]
        table = table.product(store.entity_ct(provider.db, entity, attrs, label=label))
    return table.with_column_order(family.variables)


def _entity_family_ct(provider: CountProvider, family: FamilySpec) -> ContingencyTable:
    """Entity-only family from the cached per-label tables."""
    source = _CacheSource(provider.cache)
    with provider.timer.time("positive"):
        table = cttab.at_least_ct(family.variables, frozenset(), source)
    return table.with_column_order(family.variables)


_PROVIDERS = {
    CountProviderKind.PRECOUNT: PrecountProvider,
    CountProviderKind.ONDEMAND: OndemandProvider,
    CountProviderKind.HYBRID: HybridProvider,
}


def make_provider(
    kind: CountProviderKind | str,
    db: Database,
    lattice: RelationshipLattice,
    cache: CountCache | None = None,
    timer: ComponentTimer | None = None,
) -> CountProvider:
    if isinstance(kind, str):
        kind = CountProviderKind(kind)
    return _PROVIDERS[kind](db, lattice, cache=cache, timer=timer)
