import numpy as np
import pytest

from relct import (
    DataError,
    JoinCounter,
    build_lattice,
    dump_database,
    entity_ct,
    join_positive_ct,
    load_database,
)

from conftest import MICRO_FILES, random_micro_config
from oracles import brute_force_positive_ct


class TestLoadDatabase:
    def test_micro_loads_with_seven_rows(self, micro_db):
        assert micro_db.total_rows == 7
        assert micro_db.population("Prof") == 2
        assert micro_db.population("Student") == 3

    def test_missing_student_rejected(self, micro_schema):
        files = dict(MICRO_FILES)
        files["RA"] = "P,S,salary,capability\np1,s9,hi,3\n"
        with pytest.raises(DataError, match="unknown Student key 's9'"):
            load_database(micro_schema, files)

    def test_header_only_relationship_file(self, micro_schema):
        files = dict(MICRO_FILES)
        files["RA"] = "P,S,salary,capability\n"
        db = load_database(micro_schema, files)
        assert db.tables["RA"].row_count == 0

    def test_duplicate_key_rejected(self, micro_schema):
        files = dict(MICRO_FILES)
        files["Prof"] = "pid,popularity\np1,h\np1,l\n"
        with pytest.raises(DataError, match="duplicate key"):
            load_database(micro_schema, files)

    def test_duplicate_link_rejected(self, micro_schema):
        files = dict(MICRO_FILES)
        files["RA"] = "P,S,salary,capability\np1,s1,hi,3\np1,s1,lo,1\n"
        with pytest.raises(DataError, match="duplicate link"):
            load_database(micro_schema, files)

    def test_out_of_domain_value_rejected(self, micro_schema):
        files = dict(MICRO_FILES)
        files["Student"] = "sid,intelligence\ns1,9\ns2,2\ns3,2\n"
        with pytest.raises(DataError, match="not in domain"):
            load_database(micro_schema, files)

    def test_missing_value_rejected(self, micro_schema):
        files = dict(MICRO_FILES)
        files["Student"] = "sid,intelligence\ns1,\ns2,2\ns3,2\n"
        with pytest.raises(DataError, match="missing value"):
            load_database(micro_schema, files)

    def test_wrong_header_rejected(self, micro_schema):
        files = dict(MICRO_FILES)
        files["Prof"] = "id,popularity\np1,h\n"
        with pytest.raises(DataError, match="header"):
            load_database(micro_schema, files)

    def test_missing_table_rejected(self, micro_schema):
        files = dict(MICRO_FILES)
        del files["RA"]
        with pytest.raises(DataError, match="missing file"):
            load_database(micro_schema, files)

    def test_round_trip_preserves_row_multisets(self, two_rel_schema, two_rel_db):
        dumped = dump_database(two_rel_db)
        again = load_database(two_rel_schema, dumped)
        for name, table in two_rel_db.tables.items():
            assert sorted(table.rows) == sorted(again.tables[name].rows)
        assert dump_database(again) == dumped


class TestEntityCt:
    def test_intelligence_tally(self, micro_schema, micro_db):
        ct = entity_ct(micro_db, micro_schema.entity("Student"), ["intelligence"])
        assert ct.rows == {("1",): 1, ("2",): 2}
        assert ct.total == 3

    def test_no_attrs_gives_total(self, micro_schema, micro_db):
        ct = entity_ct(micro_db, micro_schema.entity("Student"), [])
        assert ct.rows == {(): 3}

    def test_empty_entity(self):
        from relct import load_schema

        schema = load_schema("entity A key=id attr x{1,2}\n")
        db = load_database(schema, {"A": "id,x\n"})
        ct = entity_ct(db, schema.entity("A"), ["x"])
        assert len(ct) == 0 and ct.total == 0

    def test_unknown_attribute(self, micro_schema, micro_db):
        with pytest.raises(Exception, match="no attribute"):
            entity_ct(micro_db, micro_schema.entity("Student"), ["nope"])


class TestJoinPositiveCt:
    def test_micro_point(self, mini_schema, mini_db):
        lattice = build_lattice(mini_schema, 3)
        counter = JoinCounter()
        ct = join_positive_ct(mini_db, lattice.points[0], counter=counter)
        assert [str(v) for v in ct.variables] == [
            "Prof.popularity(P)",
            "Student.intelligence(S)",
            "RA.salary(P,S)",
        ]
        assert ct.rows == {("h", "1", "hi"): 1, ("l", "2", "lo"): 1}
        assert counter.joins == 2  # relationship table plus two entity tables

    def test_zero_links_gives_empty_table(self, mini_schema):
        files = dict(
            Prof=MICRO_FILES["Prof"], Student=MICRO_FILES["Student"], RA="P,S,salary\n"
        )
        db = load_database(mini_schema, files)
        lattice = build_lattice(mini_schema, 3)
        ct = join_positive_ct(db, lattice.points[0])
        assert len(ct) == 0

    def test_single_relationship_total_equals_row_count(self, two_rel_schema, two_rel_db):
        lattice = build_lattice(two_rel_schema, 3)
        for point in lattice:
            if len(point.relationships) != 1:
                continue
            name = next(iter(point.relationships)).rel
            ct = join_positive_ct(two_rel_db, point)
            assert ct.total == two_rel_db.tables[name].row_count

    def test_two_chain_matches_enumeration(self, two_rel_db):
        lattice = build_lattice(two_rel_db.schema, 3)
        point = lattice.point_for(
            {b for p in lattice for b in p.relationships if len(p.relationships) == 2}
        )
        ct = join_positive_ct(two_rel_db, point)
        expect = brute_force_positive_ct(two_rel_db, ct.variables, point.relationships)
        assert dict(ct.rows) == expect

    def test_projection_consistency(self, two_rel_db):
        # the pair table projected onto the single-relationship variables
        # equals enumeration restricted to tuples where the other holds
        lattice = build_lattice(two_rel_db.schema, 3)
        pair = max(lattice, key=lambda p: len(p.relationships))
        single = lattice.point_for([b for b in pair.relationships if b.rel == "RA"])
        projected = join_positive_ct(two_rel_db, pair).project(single.attr_variables)
        expect = brute_force_positive_ct(two_rel_db, single.attr_variables, pair.relationships)
        assert dict(projected.rows) == expect

    def test_random_databases_match_oracle(self):
        rng = np.random.default_rng(999)
        for _ in range(15):
            _, db = random_micro_config(rng)
            lattice = build_lattice(db.schema, 3)
            counter = JoinCounter()
            for point in lattice:
                ct = join_positive_ct(db, point, counter=counter)
                expect = brute_force_positive_ct(db, ct.variables, point.relationships)
                assert dict(ct.rows) == expect
                assert ct.total == sum(expect.values())

    def test_restricted_grouping_keeps_join_count(self, mini_schema, mini_db):
        lattice = build_lattice(mini_schema, 3)
        point = lattice.points[0]
        counter = JoinCounter()
        salary = mini_schema.variable("RA.salary(P,S)")
        ct = join_positive_ct(mini_db, point, attrs=(salary,), counter=counter)
        assert counter.joins == 2
        assert ct.rows == {("hi",): 1, ("lo",): 1}
