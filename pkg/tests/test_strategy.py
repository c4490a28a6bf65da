import numpy as np
import pytest

from relct import (
    CountCache,
    CountProviderKind,
    FamilySpec,
    MemoryCapExceeded,
    StrategyStateError,
    build_lattice,
    make_provider,
)

from conftest import random_family, random_micro_config
from oracles import brute_force_ct

ALL = ("precount", "ondemand", "hybrid")


class TestProviderKind:
    def test_three_kinds_resolve(self):
        assert CountProviderKind.from_scopes("lattice-point", "lattice-point") is CountProviderKind.PRECOUNT
        assert CountProviderKind.from_scopes("family", "family") is CountProviderKind.ONDEMAND
        assert CountProviderKind.from_scopes("lattice-point", "family") is CountProviderKind.HYBRID

    def test_fourth_combination_rejected(self):
        with pytest.raises(ValueError, match="IMPOSSIBLE"):
            CountProviderKind.from_scopes("family", "lattice-point")


class TestPrecount:
    def test_micro_prepare(self, micro_db, micro_lattice):
        provider = make_provider("precount", micro_db, micro_lattice)
        provider.prepare()
        point_keys = [k for k in provider.cache.complete if k[0] == "point"]
        assert len(point_keys) == 1
        assert provider.join_count() == 2

    def test_two_relationship_lattice_caches_three_completes(self, two_rel_db):
        lattice = build_lattice(two_rel_db.schema, 3)
        provider = make_provider("precount", two_rel_db, lattice)
        provider.prepare()
        point_keys = [k for k in provider.cache.complete if k[0] == "point"]
        assert len(point_keys) == 3

    def test_empty_lattice_is_noop(self):
        from relct import load_database, load_schema

        schema = load_schema("entity A key=id attr x{1,2}\n")
        db = load_database(schema, {"A": "id,x\na1,1\na2,2\n"})
        lattice = build_lattice(schema, 3)
        provider = make_provider("precount", db, lattice)
        provider.prepare()
        assert provider.join_count() == 0
        assert not provider.cache.complete

    def test_family_is_projection_with_no_new_work(self, micro_db, micro_schema, micro_lattice):
        provider = make_provider("precount", micro_db, micro_lattice)
        provider.prepare()
        joins_after_prepare = provider.join_count()
        fam = FamilySpec(
            micro_schema.variable("RA.salary(P,S)"),
            (micro_schema.variable("RA(P,S)"), micro_schema.variable("RA.capability(P,S)")),
        )
        table = provider.family_ct(fam)
        assert provider.join_count() == joins_after_prepare
        assert table.total == 6
        # whole-point family comes back as the cached table itself
        point = micro_lattice.points[0]
        child, *rest = sorted(point.variables, key=str)
        whole = provider.family_ct(FamilySpec(child, tuple(rest)))
        cached = provider.cache.complete[("point", point.relationships)]
        assert whole == cached.with_column_order(whole.variables)

    def test_repeated_request_hits_cache(self, micro_db, micro_schema, micro_lattice):
        provider = make_provider("precount", micro_db, micro_lattice)
        provider.prepare()
        fam = FamilySpec(micro_schema.variable("RA.salary(P,S)"))
        provider.family_ct(fam)
        hits_before = provider.cache.stats.hits
        provider.family_ct(fam)
        assert provider.cache.stats.hits == hits_before + 1

    def test_search_before_prepare_rejected(self, micro_db, micro_schema, micro_lattice):
        provider = make_provider("precount", micro_db, micro_lattice)
        with pytest.raises(StrategyStateError):
            provider.family_ct(FamilySpec(micro_schema.variable("RA.salary(P,S)")))

    def test_memory_cap_aborts_prepare(self, micro_db, micro_lattice):
        provider = make_provider(
            "precount", micro_db, micro_lattice, cache=CountCache(max_rows=3)
        )
        with pytest.raises(MemoryCapExceeded):
            provider.prepare()
        assert provider.cache.stats.peak_total_rows <= 3

    def test_missing_covering_point_rejected(self, two_rel_db):
        from relct import NoCoveringPointError

        lattice = build_lattice(two_rel_db.schema, 1)
        provider = make_provider("precount", two_rel_db, lattice)
        provider.prepare()
        schema = two_rel_db.schema
        fam = FamilySpec(
            schema.variable("RA.salary(P,S)"),
            (schema.variable("Registered.grade(S,C)"),),
        )
        with pytest.raises(NoCoveringPointError):
            provider.family_ct(fam)


class TestOndemand:
    def test_first_request_joins_then_cache_hit(self, micro_db, micro_schema, micro_lattice):
        provider = make_provider("ondemand", micro_db, micro_lattice)
        fam = FamilySpec(
            micro_schema.variable("RA.salary(P,S)"), (micro_schema.variable("RA(P,S)"),)
        )
        provider.family_ct(fam)
        assert provider.join_count() == 2
        provider.family_ct(fam)
        assert provider.join_count() == 2  # cache hit, no new joins

    def test_entity_only_family_runs_no_joins(self, micro_db, micro_schema, micro_lattice):
        provider = make_provider("ondemand", micro_db, micro_lattice)
        fam = FamilySpec(micro_schema.variable("Student.intelligence(S)"))
        table = provider.family_ct(fam)
        assert provider.join_count() == 0
        assert table.rows == {("1",): 1, ("2",): 2}

    def test_no_preparation_needed(self, micro_db, micro_schema, micro_lattice):
        provider = make_provider("ondemand", micro_db, micro_lattice)
        fam = FamilySpec(micro_schema.variable("RA(P,S)"))
        assert provider.family_ct(fam).total == 6


class TestHybrid:
    def test_prepare_caches_positives_only(self, two_rel_db):
        lattice = build_lattice(two_rel_db.schema, 3)
        provider = make_provider("hybrid", two_rel_db, lattice)
        provider.prepare()
        point_positives = [k for k in provider.cache.positive if k[0] == "point"]
        assert len(point_positives) == 3
        assert not provider.cache.complete

    def test_prepare_joins_match_precount(self, two_rel_db):
        lattice = build_lattice(two_rel_db.schema, 3)
        hybrid = make_provider("hybrid", two_rel_db, lattice)
        hybrid.prepare()
        precount = make_provider("precount", two_rel_db, lattice)
        precount.prepare()
        assert hybrid.join_count() == precount.join_count()

    def test_search_phase_runs_zero_joins(self, two_rel_db):
        lattice = build_lattice(two_rel_db.schema, 3)
        provider = make_provider("hybrid", two_rel_db, lattice)
        provider.prepare()
        joins = provider.join_count()
        schema = two_rel_db.schema
        fam = FamilySpec(
            schema.variable("RA.salary(P,S)"),
            (schema.variable("Registered.grade(S,C)"), schema.variable("Student.intelligence(S)")),
        )
        provider.family_ct(fam)
        assert provider.join_count() == joins

    def test_family_matches_ondemand(self, two_rel_db):
        lattice = build_lattice(two_rel_db.schema, 3)
        hybrid = make_provider("hybrid", two_rel_db, lattice)
        hybrid.prepare()
        ondemand = make_provider("ondemand", two_rel_db, lattice)
        schema = two_rel_db.schema
        fam = FamilySpec(
            schema.variable("Registered.grade(S,C)"),
            (schema.variable("RA(P,S)"), schema.variable("Course.rating(C)")),
        )
        assert hybrid.family_ct(fam) == ondemand.family_ct(fam)

    def test_repeated_family_skips_completion(self, two_rel_db):
        lattice = build_lattice(two_rel_db.schema, 3)
        provider = make_provider("hybrid", two_rel_db, lattice)
        provider.prepare()
        schema = two_rel_db.schema
        fam = FamilySpec(schema.variable("RA.salary(P,S)"))
        provider.family_ct(fam)
        negative_before = provider.timer.seconds["negative"]
        provider.family_ct(fam)
        assert provider.timer.seconds["negative"] == negative_before

    def test_uncovered_component_rejected(self, two_rel_db):
        # the two relationships chain through the student population, so the
        # family needs the length-2 point, which a chain cap of 1 never built
        lattice = build_lattice(two_rel_db.schema, 1)
        provider = make_provider("hybrid", two_rel_db, lattice)
        provider.prepare()
        schema = two_rel_db.schema
        fam = FamilySpec(
            schema.variable("RA.salary(P,S)"),
            (schema.variable("Registered.grade(S,C)"),),
        )
        with pytest.raises(StrategyStateError, match="covers"):
            provider.family_ct(fam)

    def test_disconnected_components_complete_via_products(self):
        # two relationships with no shared population variable: each
        # component is a singleton point, so even a chain cap of 1 serves a
        # family spanning both
        from relct import load_database, load_schema

        schema = load_schema(
            "entity A key=id attr x{1,2}\nentity B key=id attr y{1,2}\n"
            "entity C key=id attr z{1,2}\nentity D key=id attr w{1,2}\n"
            "rel R1(A as P, B as Q)\nrel R2(C as U, D as V)\n"
        )
        files = {
            "A": "id,x\na1,1\na2,2\n",
            "B": "id,y\nb1,1\nb2,2\n",
            "C": "id,z\nc1,1\nc2,1\n",
            "D": "id,w\nd1,2\nd2,2\n",
            "R1": "P,Q\na1,b1\na1,b2\n",
            "R2": "U,V\nc1,d1\n",
        }
        db = load_database(schema, files)
        lattice = build_lattice(schema, 1)
        provider = make_provider("hybrid", db, lattice)
        provider.prepare()
        fam = FamilySpec(schema.variable("R1(P,Q)"), (schema.variable("R2(U,V)"),))
        table = provider.family_ct(fam)
        assert table.total == 16  # 2*2*2*2 groundings
        assert table.rows[("T", "T")] == 2  # two R1 links times one R2 link


class TestSelfRelationship:
    def test_friend_point_counts_by_hand(self, friend_db):
        # persons a(m), b(w), c(w); links (a,b), (b,a), (c,a): nine ordered
        # pairs ground the pattern, three of them linked
        schema = friend_db.schema
        lattice = build_lattice(schema, 3)
        expected = {
            ("m", "m", "F"): 1,
            ("m", "w", "T"): 1,
            ("m", "w", "F"): 1,
            ("w", "m", "T"): 2,
            ("w", "w", "F"): 4,
        }
        point = lattice.points[0]
        child, *rest = sorted(point.variables, key=str)
        fam = FamilySpec(child, tuple(rest))
        for kind in ALL:
            provider = make_provider(kind, friend_db, lattice)
            provider.prepare()
            table = provider.family_ct(fam)
            by_point_order = table.with_column_order(point.variables)
            assert dict(by_point_order.rows) == expected
            assert by_point_order.total == 9

    def test_gender_of_each_slot_is_a_distinct_variable(self, friend_db):
        schema = friend_db.schema
        x = schema.variable("Person.gender(X)")
        y = schema.variable("Person.gender(Y)")
        assert x != y
        lattice = build_lattice(schema, 3)
        provider = make_provider("hybrid", friend_db, lattice)
        provider.prepare()
        fam = FamilySpec(x, (y,))
        table = provider.family_ct(fam)
        # both slots range over the whole population independently
        assert table.total == 9
        assert table.project((x,)).rows == {("m",): 3, ("w",): 6}


class TestStrategyEquivalence:
    def test_identical_family_tables_on_random_databases(self):
        rng = np.random.default_rng(20240)
        for _ in range(8):
            _, db = random_micro_config(rng)
            lattice = build_lattice(db.schema, 3)
            providers = []
            for kind in ALL:
                p = make_provider(kind, db, lattice)
                p.prepare()
                providers.append(p)
            for point in lattice:
                for _ in range(3):
                    fam = random_family(rng, point)
                    tables = [p.family_ct(fam) for p in providers]
                    assert tables[0] == tables[1] == tables[2]
                    # normalization: the complete total is the grounding count
                    assert tables[0].total == db.grounding_count(fam.labels)
                    # and agrees with plain enumeration
                    assert dict(tables[0].rows) == brute_force_ct(db, tables[0].variables)

    def test_cache_soundness(self, two_rel_db):
        lattice = build_lattice(two_rel_db.schema, 3)
        schema = two_rel_db.schema
        fam = FamilySpec(
            schema.variable("RA.salary(P,S)"), (schema.variable("Student.intelligence(S)"),)
        )
        cached_provider = make_provider("hybrid", two_rel_db, lattice)
        cached_provider.prepare()
        first = cached_provider.family_ct(fam)
        second = cached_provider.family_ct(fam)
        fresh = make_provider("hybrid", two_rel_db, lattice)
        fresh.prepare()
        assert first == second == fresh.family_ct(fam)

    def test_peak_rows_precount_dominates_hybrid(self):
        rng = np.random.default_rng(77)
        for _ in range(5):
            _, db = random_micro_config(rng)
            lattice = build_lattice(db.schema, 3)
            peaks = {}
            for kind in ("precount", "hybrid"):
                p = make_provider(kind, db, lattice)
                p.prepare()
                for point in lattice:
                    for _ in range(2):
                        p.family_ct(random_family(rng, point))
                peaks[kind] = p.cache.stats.peak_total_rows
            assert peaks["precount"] >= peaks["hybrid"]


class TestMemoryCap:
    def test_family_tables_evict_largest_first(self, two_rel_db):
        lattice = build_lattice(two_rel_db.schema, 3)
        unlimited = make_provider("ondemand", two_rel_db, lattice)
        schema = two_rel_db.schema
        families = [
            FamilySpec(schema.variable("RA.salary(P,S)"), (schema.variable("RA(P,S)"),)),
            FamilySpec(
                schema.variable("Registered.grade(S,C)"),
                (schema.variable("Student.intelligence(S)"),),
            ),
            FamilySpec(schema.variable("Course.rating(C)")),
        ]
        sizes = [len(unlimited.family_ct(f)) for f in families]
        cap = max(sizes) + min(sizes)
        capped = make_provider(
            "ondemand", two_rel_db, lattice, cache=CountCache(max_rows=cap)
        )
        for f in families:
            capped.family_ct(f)
        assert capped.cache.current_rows <= cap
        assert capped.cache.stats.peak_total_rows <= cap
        # results remain correct after eviction
        for f in families:
            assert capped.family_ct(f) == unlimited.family_ct(f)

    def test_single_table_exceeding_cap_raises(self, two_rel_db):
        lattice = build_lattice(two_rel_db.schema, 3)
        provider = make_provider(
            "ondemand", two_rel_db, lattice, cache=CountCache(max_rows=1)
        )
        fam = FamilySpec(
            two_rel_db.schema.variable("RA.salary(P,S)"),
            (two_rel_db.schema.variable("RA(P,S)"),),
        )
        with pytest.raises(MemoryCapExceeded):
            provider.family_ct(fam)
