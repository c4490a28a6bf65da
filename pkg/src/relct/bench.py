"""End-to-end benchmark runs and machine-readable reports.

A run executes metadata extraction, the strategy's preparation phase, and a
full structure search, splitting counting wall time into three exhaustive,
mutually exclusive components (metadata / positive tables / negative tables)
and recording join counts and peak stored rows.  Reports are versioned JSON;
``compare`` aligns several runs over the same database and flags the
qualitative orderings the strategies are expected to show.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import store
from .schema import build_lattice, derive_variables, dump_schema
from .score import BdeuParams, FamilySpec
from .search import SearchParams, learn_and_join, mean_parents_per_node
from .store import Database
from .strategy import (
    BudgetExceeded,
    ComponentTimer,
    CountCache,
    CountProviderKind,
    Deadline,
    MemoryCapExceeded,
    make_provider,
)

REPORT_VERSION = 1

# a hundred minutes, after the reference experiments' runtime limit
DEFAULT_BUDGET_S = 6000.0


@dataclass(frozen=True)
class BenchParams:
    ess: float = 1.0
    structure_prior_log: float = 0.0
    max_parents: int = 4
    max_chain_length: int = 3
    budget_s: float | None = DEFAULT_BUDGET_S
    max_ct_rows: int | None = None
    seed: int = 0
    restarts: int = 0

    def search_params(self) -> SearchParams:
        return SearchParams(
            bdeu=BdeuParams(self.ess, self.structure_prior_log),
            max_parents=self.max_parents,
            restarts=self.restarts,
            seed=self.seed,
        )


@dataclass
class StrategyReport:
    strategy: str
    db_label: str
    db_fingerprint: str
    seed: int
    metadata_ms: float
    positive_ct_ms: float
    negative_ct_ms: float
    total_ms: float
    join_count: int
    peak_total_rows: int
    lattice_ct_rows: int
    family_ct_rows: int
    distinct_families: int
    distinct_relational_families: int
    families_requested: int
    moves_accepted: int
    final_score: float | None
    mp_per_node: float | None
    partial: bool
    partial_reason: str | None
    params: dict

    TIMING_FIELDS = ("metadata_ms", "positive_ct_ms", "negative_ct_ms", "total_ms")

    def to_dict(self) -> dict:
        out = {"report_version": REPORT_VERSION}
        out.update(self.__dict__)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, payload: Mapping) -> "StrategyReport":
        payload = dict(payload)
        version = payload.pop("report_version", None)
        if version != REPORT_VERSION:
            raise ValueError(f"unsupported report version {version!r}")
        return cls(**payload)

    @classmethod
    def from_json(cls, text: str) -> "StrategyReport":
        return cls.from_dict(json.loads(text))


def fingerprint(db: Database) -> str:
    """Content hash of schema plus data, for pairing comparable reports."""
    digest = hashlib.sha256()
    digest.update(dump_schema(db.schema).encode())
    for name, text in sorted(store.dump_database(db).items()):
        digest.update(name.encode())
        digest.update(text.encode())
    return "sha256:" + digest.hexdigest()[:16]


def run_benchmark(
    db: Database,
    strategy: CountProviderKind | str,
    params: BenchParams = BenchParams(),
    db_label: str = "",
) -> StrategyReport:
    """Full pipeline under one strategy.  On budget exhaustion or a memory
    cap hit the report is marked partial with the reason, carrying whatever
    statistics accumulated so far."""
    timer = ComponentTimer()
    deadline = Deadline(params.budget_s)
    wall_start = time.perf_counter()
    with timer.time("metadata"):
        derive_variables(db.schema)
        lattice = build_lattice(db.schema, params.max_chain_length)
    cache = CountCache(max_rows=params.max_ct_rows)
    provider = make_provider(strategy, db, lattice, cache=cache, timer=timer)
    partial_reason: str | None = None
    final_score: float | None = None
    mp: float | None = None
    moves = 0
    requested = 0
    distinct = 0
    distinct_rel = 0
    try:
        provider.prepare(deadline)
        state, trace = learn_and_join(db, lattice, provider, params.search_params(), deadline)
        moves = trace.moves_accepted
        requested = len(trace.families_requested)
        distinct = trace.distinct_families
        distinct_rel = trace.distinct_relational_families
        final_score = _total_score(state, provider, params)
        mp = mean_parents_per_node(state)
    except BudgetExceeded:
        partial_reason = "budget"
    except MemoryCapExceeded:
        partial_reason = "memory-cap"
    total_ms = (time.perf_counter() - wall_start) * 1000.0
    return StrategyReport(
        strategy=CountProviderKind(strategy).value if isinstance(strategy, str) else strategy.value,
        db_label=db_label,
        db_fingerprint=fingerprint(db),
        seed=params.seed,
        metadata_ms=timer.seconds["metadata"] * 1000.0,
        positive_ct_ms=timer.seconds["positive"] * 1000.0,
        negative_ct_ms=timer.seconds["negative"] * 1000.0,
        total_ms=total_ms,
        join_count=provider.join_count(),
        peak_total_rows=cache.stats.peak_total_rows,
        lattice_ct_rows=cache.stats.lattice_ct_rows,
        family_ct_rows=cache.stats.family_ct_rows,
        distinct_families=distinct,
        distinct_relational_families=distinct_rel,
        families_requested=requested,
        moves_accepted=moves,
        final_score=final_score,
        mp_per_node=mp,
        partial=partial_reason is not None,
        partial_reason=partial_reason,
        params={
            "ess": params.ess,
            "structure_prior_log": params.structure_prior_log,
            "max_parents": params.max_parents,
            "max_chain_length": params.max_chain_length,
            "budget_s": params.budget_s,
            "max_ct_rows": params.max_ct_rows,
            "seed": params.seed,
            "restarts": params.restarts,
        },
    )


def _total_score(state, provider, params: BenchParams) -> float:
    from .score import score_model

    return score_model(state, provider, BdeuParams(params.ess, params.structure_prior_log))


@dataclass
class Comparison:
    reports: tuple[StrategyReport, ...]
    flags: dict[str, bool]
    table: str


_NUMERIC_FIELDS = (
    "metadata_ms",
    "positive_ct_ms",
    "negative_ct_ms",
    "total_ms",
    "join_count",
    "peak_total_rows",
    "lattice_ct_rows",
    "family_ct_rows",
    "distinct_families",
    "distinct_relational_families",
    "moves_accepted",
    "final_score",
    "mp_per_node",
)


def compare(reports: Sequence[StrategyReport]) -> Comparison:
    """Align at least two reports taken on the same database and seed, and
    flag the expected qualitative orderings whenever the relevant strategy
    pair is present."""
    if len(reports) < 2:
        raise ValueError("compare needs at least two reports")
    first = reports[0]
    for r in reports[1:]:
        if r.db_fingerprint != first.db_fingerprint or r.seed != first.seed:
            raise ValueError("reports compare different databases or seeds")
    by_strategy = {r.strategy: r for r in reports}
    flags: dict[str, bool] = {}
    pre = by_strategy.get("precount")
    ond = by_strategy.get("ondemand")
    hyb = by_strategy.get("hybrid")
    if pre and hyb:
        flags["precount_joins_equal_hybrid"] = pre.join_count == hyb.join_count
        flags["precount_peak_ge_hybrid"] = pre.peak_total_rows >= hyb.peak_total_rows
        flags["precount_peak_ge_1_5x_hybrid"] = (
            pre.peak_total_rows >= 1.5 * hyb.peak_total_rows
        )
        flags["precount_negative_ms_ge_2x_hybrid"] = (
            pre.negative_ct_ms >= 2.0 * hyb.negative_ct_ms
        )
    if ond and hyb:
        flags["ondemand_joins_ge_2x_hybrid"] = ond.join_count >= 2 * hyb.join_count
    if pre:
        flags["family_rows_exceed_lattice_rows"] = (
            pre.family_ct_rows > pre.lattice_ct_rows
        )
    scores = [r.final_score for r in reports if r.final_score is not None]
    if len(scores) == len(reports):
        flags["final_scores_agree"] = max(scores) - min(scores) <= 1e-9 * max(1.0, abs(scores[0]))
    lines = ["metric".ljust(26) + "".join(r.strategy.rjust(16) for r in reports)]
    for name in _NUMERIC_FIELDS:
        cells = []
        for r in reports:
            value = getattr(r, name)
            cells.append(("-" if value is None else f"{value:.3f}" if isinstance(value, float) else str(value)).rjust(16))
        lines.append(name.ljust(26) + "".join(cells))
    lines.append("")
    for name in sorted(flags):
        lines.append(f"{name}: {'yes' if flags[name] else 'no'}")
    return Comparison(tuple(reports), flags, "\n".join(lines) + "\n")


def dump_ct(
    db: Database,
    target,
    strategy: CountProviderKind | str = CountProviderKind.HYBRID,
    params: BenchParams = BenchParams(),
) -> str:
    """CSV text of a complete contingency table: either a family
    (FamilySpec) or a lattice point's full variable list."""
    lattice = build_lattice(db.schema, params.max_chain_length)
    provider = make_provider(strategy, db, lattice, cache=CountCache(max_rows=params.max_ct_rows))
    provider.prepare()
    if isinstance(target, FamilySpec):
        family = target
    else:  # a lattice point: dump its whole variable list
        child, *rest = sorted(target.variables, key=str)
        family = FamilySpec(child, tuple(rest))
    return provider.family_ct(family).to_csv()
