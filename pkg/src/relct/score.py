"""BDeu scoring of model families from complete contingency tables.

A family is one child variable plus its parent set; its score is the family
term of the Bayesian Dirichlet equivalent uniform metric, computed in the log
domain with natural logarithms:

    prior + sum_j [ lgamma(N'/q) - lgamma(N_j + N'/q)
                    + sum_k ( lgamma(N_jk + N'/(r q)) - lgamma(N'/(r q)) ) ]

where j ranges over all q structurally possible parent configurations, k over
the child's r values, N' is the equivalent sample size, and N_j / N_jk are
instantiation counts.  Configurations with zero counts contribute exactly
zero, so only observed configurations need to be enumerated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .cttab import ContingencyTable
from .schema import (
    ENTITY_ATTR,
    REL_INDICATOR,
    FirstOrderVariable,
    RelBinding,
)


@dataclass(frozen=True)
class FamilySpec:
    """A child variable with an ordered parent tuple; the unit of scoring.

    Parents are stored sorted so permutations of the same parent set compare
    and hash equal, and the derived ``variables`` tuple is the canonical
    column order of the family's contingency table.
    """

    child: FirstOrderVariable
    parents: tuple[FirstOrderVariable, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(sorted(self.parents, key=str)))
        if self.child in self.parents:
            raise ValueError(f"child {self.child} cannot be its own parent")
        if len(set(self.parents)) != len(self.parents):
            raise ValueError("duplicate parents")

    @property
    def variables(self) -> tuple[FirstOrderVariable, ...]:
        return tuple(sorted((self.child,) + self.parents, key=str))

    @property
    def rel_bindings(self) -> frozenset[RelBinding]:
        return frozenset(v.binding for v in self.variables if v.kind != ENTITY_ATTR)

    @property
    def labels(self) -> frozenset[str]:
        return frozenset(l for v in self.variables for l in v.labels)

    @property
    def key(self) -> tuple[str, ...]:
        """Cache key of the family's contingency table: the variable set
        alone determines the table, not the child/parent split."""
        return tuple(str(v) for v in self.variables)

    @property
    def score_key(self) -> tuple[str, ...]:
        return (str(self.child),) + tuple(str(p) for p in self.parents)

    def __str__(self) -> str:
        if not self.parents:
            return str(self.child)
        return f"{self.child} <- {', '.join(str(p) for p in self.parents)}"


@dataclass(frozen=True)
class BdeuParams:
    """Equivalent sample size and the per-family log structure prior."""

    ess: float = 1.0
    structure_prior_log: float = 0.0

    def __post_init__(self):
        if not self.ess > 0:
            raise ValueError("ess must be positive")


@dataclass(frozen=True)
class FamilyScore:
    value: float
    n_ij_nonzero: int
    r_i: int
    q_i: int


@dataclass(frozen=True)
class FamilyCounts:
    """Sufficient statistics of one family: configuration counts keyed by
    parent value tuples (aligned with ``parents``), each mapping child values
    to counts.  Absent combinations are zero."""

    parents: tuple[FirstOrderVariable, ...]
    child: FirstOrderVariable
    nijk: Mapping[tuple[str, ...], Mapping[str, int]]
    r_i: int
    q_i: int

    def nij(self, config: tuple[str, ...]) -> int:
        return sum(self.nijk.get(config, {}).values())


def structural_config_count(parents: Sequence[FirstOrderVariable]) -> int:
    """Number of structurally possible parent configurations.

    Variables of one relationship are coupled: its attributes are N/A exactly
    when the relationship does not hold, so per relationship the possible
    joint values are (product of its attribute domains) + 1 (the all-N/A row,
    with indicator F when present).  Impossible combinations, e.g. an
    attribute N/A under indicator T, are excluded; counting them would
    distort the N'/q prior weights.  Entity attributes contribute their plain
    domain sizes.
    """
    q = 1
    rel_attr_prod: dict[RelBinding, int] = {}
    rel_seen: set[RelBinding] = set()
    for p in parents:
        if p.kind == ENTITY_ATTR:
            q *= len(p.domain)
        else:
            b = p.binding
            rel_seen.add(b)
            if p.kind != REL_INDICATOR:
                rel_attr_prod[b] = rel_attr_prod.get(b, 1) * len(p.domain)
    for b in rel_seen:
        q *= rel_attr_prod.get(b, 1) + 1
    return q


def family_counts(ct: ContingencyTable, family: FamilySpec) -> FamilyCounts:
    """Project a covering contingency table onto the family and split it into
    configuration counts.  Raises KeyError if the table misses a family
    variable."""
    needed = (family.child,) + family.parents
    projected = ct.project(needed)
    nijk: dict[tuple[str, ...], dict[str, int]] = {}
    for key, count in projected.rows.items():
        config = key[1:]
        nijk.setdefault(config, {})[key[0]] = count
    return FamilyCounts(
        parents=family.parents,
        child=family.child,
        nijk=nijk,
        r_i=family.child.effective_size,
        q_i=structural_config_count(family.parents),
    )


_FLOAT_PATH_ERROR_BUDGET = 2e-10


def bdeu_family(counts: FamilyCounts, params: BdeuParams) -> FamilyScore:
    """Evaluate the family term of the BDeu score.

    Configurations are visited in sorted order so the result is identical no
    matter how the table was produced; all three counting strategies
    therefore yield bit-equal scores.

    Large counts make the intermediate lgamma values so big that their
    float64 rounding alone would spill past 1e-9 into the (much smaller,
    heavily cancelled) result, so when the per-call rounding budget cannot be
    met in doubles the whole sum runs in extended precision and is rounded
    once at the end.
    """
    r_i, q_i = counts.r_i, counts.q_i
    if r_i < 1 or q_i < 1:
        raise ValueError("r_i and q_i must be >= 1")
    a = params.ess / q_i
    b = params.ess / (r_i * q_i)
    # a configuration with all-zero counts contributes exactly nothing
    assert (math.lgamma(a) - math.lgamma(0 + a)) + r_i * (
        math.lgamma(0 + b) - math.lgamma(b)
    ) == 0.0
    configs = sorted(counts.nijk, key=lambda c: tuple(c))
    lgamma_calls = 2 + sum(2 * len(counts.nijk[c]) for c in configs)
    max_arg = max(
        (sum(counts.nijk[c].values()) + a for c in configs), default=a + 1.0
    )
    per_call = 2.0 * math.ulp(abs(math.lgamma(max_arg)) + 32.0)
    if lgamma_calls * per_call <= _FLOAT_PATH_ERROR_BUDGET:
        value, nonzero = _bdeu_sum_float(counts, configs, a, b)
    else:
        value, nonzero = _bdeu_sum_mp(counts, configs, params.ess)
    value += params.structure_prior_log
    if not math.isfinite(value):
        raise ValueError(f"non-finite BDeu value (ess={params.ess}, q_i={q_i}, r_i={r_i})")
    return FamilyScore(value=value, n_ij_nonzero=nonzero, r_i=r_i, q_i=q_i)


def _bdeu_sum_float(counts: FamilyCounts, configs, a: float, b: float) -> tuple[float, int]:
    lg_a = math.lgamma(a)
    lg_b = math.lgamma(b)
    terms: list[float] = []
    nonzero = 0
    for config in configs:
        child_counts = counts.nijk[config]
        n_ij = sum(child_counts.values())
        if n_ij == 0:
            continue
        nonzero += 1
        terms.append(lg_a - math.lgamma(n_ij + a))
        for child_value in sorted(child_counts):
            terms.append(math.lgamma(child_counts[child_value] + b) - lg_b)
    return math.fsum(terms), nonzero


def _bdeu_sum_mp(counts: FamilyCounts, configs, ess: float) -> tuple[float, int]:
    # everything, including the lgamma arguments, is formed in extended
    # precision; the single rounding happens on the final (cancelled) sum
    import mpmath

    with mpmath.workdps(40):
        a = mpmath.mpf(ess) / counts.q_i
        b = mpmath.mpf(ess) / (counts.r_i * counts.q_i)
        lg_a = mpmath.loggamma(a)
        lg_b = mpmath.loggamma(b)
        total = mpmath.mpf(0)
        nonzero = 0
        for config in configs:
            child_counts = counts.nijk[config]
            n_ij = sum(child_counts.values())
            if n_ij == 0:
                continue
            nonzero += 1
            total += lg_a - mpmath.loggamma(n_ij + a)
            for child_value in sorted(child_counts):
                total += mpmath.loggamma(child_counts[child_value] + b) - lg_b
        return float(total), nonzero


def score_family_ct(ct: ContingencyTable, family: FamilySpec, params: BdeuParams) -> FamilyScore:
    return bdeu_family(family_counts(ct, family), params)


def score_model(bn, provider, params: BdeuParams) -> float:
    """Total score of a network state: the sum of its family scores.  The
    score is decomposable, so editing one family changes only that family's
    term.  ``bn`` needs ``nodes`` and ``parents_of``; ``provider`` serves
    complete family tables."""
    total = 0.0
    for node in bn.nodes:
        family = FamilySpec(node, tuple(bn.parents_of(node)))
        total += score_family_ct(provider.family_ct(family), family, params).value
    return total
