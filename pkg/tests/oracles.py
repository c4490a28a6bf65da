"""Independent reference implementations the tests check against.

These deliberately avoid the library's table algebra: counts come from plain
enumeration of groundings, and scores from arbitrary-precision evaluation of
the scoring formula.
"""

from __future__ import annotations

import itertools

import mpmath

from relct.schema import ENTITY_ATTR, FALSE, NA, REL_INDICATOR, TRUE


def brute_force_ct(db, variables):
    """Tally value tuples over the full Cartesian product of the populations
    behind the variables' labels; evaluates each variable per grounding."""
    variables = tuple(variables)
    labels = sorted({l for v in variables for l in v.labels})
    pools = [sorted(db.entity_rows[db.schema.entity_of_label(l).name]) for l in labels]
    counts: dict[tuple[str, ...], int] = {}
    for combo in itertools.product(*pools):
        env = dict(zip(labels, combo))
        key = tuple(_eval_variable(db, v, env) for v in variables)
        counts[key] = counts.get(key, 0) + 1
    return counts


def _eval_variable(db, v, env):
    if v.kind == ENTITY_ATTR:
        ent = db.schema.entity_of_label(v.labels[0])
        row = db.entity_rows[ent.name][env[v.labels[0]]]
        return row[[a.name for a in ent.attributes].index(v.attr)]
    pair = (env[v.labels[0]], env[v.labels[1]])
    link = db.links[v.owner].get(pair)
    if v.kind == REL_INDICATOR:
        return TRUE if link is not None else FALSE
    if link is None:
        return NA
    rel = db.schema.relationship(v.owner)
    return link[[a.name for a in rel.attributes].index(v.attr)]


def brute_force_positive_ct(db, variables, bindings):
    """Like brute_force_ct but restricted to groundings where every
    relationship in ``bindings`` holds, keyed by ``variables`` only."""
    bindings = list(bindings)
    labels = sorted(
        {l for v in variables for l in v.labels} | {l for b in bindings for l in b.labels}
    )
    pools = [sorted(db.entity_rows[db.schema.entity_of_label(l).name]) for l in labels]
    counts: dict[tuple[str, ...], int] = {}
    for combo in itertools.product(*pools):
        env = dict(zip(labels, combo))
        if any((env[b.labels[0]], env[b.labels[1]]) not in db.links[b.rel] for b in bindings):
            continue
        key = tuple(_eval_variable(db, v, env) for v in variables)
        counts[key] = counts.get(key, 0) + 1
    return counts


def bdeu_mp(nijk, r_i, q_i, ess, structure_prior_log=0.0, dps=60):
    """Arbitrary-precision family score: prior + sum over configurations j of
    lgamma(N'/q) - lgamma(N_j + N'/q) + sum_k lgamma(N_jk + N'/(rq)) -
    lgamma(N'/(rq)).  ``nijk`` maps parent configs to {child value: count}."""
    with mpmath.workdps(dps):
        ess = mpmath.mpf(ess)
        a = ess / q_i
        b = ess / (r_i * q_i)
        total = mpmath.mpf(structure_prior_log)
        for config in nijk.values():
            n_ij = sum(config.values())
            if n_ij == 0:
                continue
            total += mpmath.loggamma(a) - mpmath.loggamma(n_ij + a)
            for count in config.values():
                total += mpmath.loggamma(count + b) - mpmath.loggamma(b)
        return float(total)
