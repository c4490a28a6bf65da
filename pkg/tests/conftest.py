import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from relct import (
    ContingencyTable,
    EntitySpec,
    FamilySpec,
    GenConfig,
    RelSpec,
    build_lattice,
    generate,
    load_database,
    load_schema,
)

MICRO_SCHEMA = """\
# toy faculty data
entity Prof key=pid attr popularity{h,l}
entity Student key=sid attr intelligence{1,2}
rel RA(Prof as P, Student as S) attr salary{hi,lo} attr capability{1,2,3}
"""

MICRO_FILES = {
    "Prof": "pid,popularity\np1,h\np2,l\n",
    "Student": "sid,intelligence\ns1,1\ns2,2\ns3,2\n",
    "RA": "P,S,salary,capability\np1,s1,hi,3\np2,s2,lo,1\n",
}

# same data, but the relationship carries only the salary attribute
MINI_SCHEMA = """\
entity Prof key=pid attr popularity{h,l}
entity Student key=sid attr intelligence{1,2}
rel RA(Prof as P, Student as S) attr salary{hi,lo}
"""

MINI_FILES = {
    "Prof": MICRO_FILES["Prof"],
    "Student": MICRO_FILES["Student"],
    "RA": "P,S,salary\np1,s1,hi\np2,s2,lo\n",
}

# two relationships sharing the student population
TWO_REL_SCHEMA = """\
entity Prof key=pid attr popularity{h,l}
entity Student key=sid attr intelligence{1,2}
entity Course key=cid attr rating{x,y}
rel RA(Prof as P, Student as S) attr salary{hi,lo}
rel Registered(Student as S, Course as C) attr grade{a,b}
"""

TWO_REL_FILES = {
    "Prof": MICRO_FILES["Prof"],
    "Student": MICRO_FILES["Student"],
    "Course": "cid,rating\nc1,x\nc2,y\n",
    "RA": MINI_FILES["RA"],
    "Registered": "S,C,grade\ns1,c1,a\ns2,c1,b\ns3,c2,a\n",
}

FRIEND_SCHEMA = """\
entity Person key=pid attr gender{m,w}
rel Friend(Person as X, Person as Y)
"""

FRIEND_FILES = {
    "Person": "pid,gender\na,m\nb,w\nc,w\n",
    "Friend": "X,Y\na,b\nb,a\nc,a\n",
}


@pytest.fixture(scope="session")
def micro_schema():
    return load_schema(MICRO_SCHEMA)


@pytest.fixture(scope="session")
def micro_db(micro_schema):
    return load_database(micro_schema, MICRO_FILES)


@pytest.fixture(scope="session")
def micro_lattice(micro_schema):
    return build_lattice(micro_schema, 3)


@pytest.fixture(scope="session")
def mini_schema():
    return load_schema(MINI_SCHEMA)


@pytest.fixture(scope="session")
def mini_db(mini_schema):
    return load_database(mini_schema, MINI_FILES)


@pytest.fixture(scope="session")
def two_rel_schema():
    return load_schema(TWO_REL_SCHEMA)


@pytest.fixture(scope="session")
def two_rel_db(two_rel_schema):
    return load_database(two_rel_schema, TWO_REL_FILES)


@pytest.fixture(scope="session")
def friend_db():
    return load_database(load_schema(FRIEND_SCHEMA), FRIEND_FILES)


# -- classic professor/student salary table ---------------------------------

SALARY_TABLE_SCHEMA = """\
entity Prof key=pid
entity Student key=sid
rel RA(Prof as P, Student as S) attr capability{1,2,3,4,5} attr salary{LOW,MED,HIGH}
"""

SALARY_ROWS = {
    ("N/A", "F", "N/A"): 203,
    ("4", "T", "HIGH"): 5,
    ("5", "T", "HIGH"): 4,
    ("3", "T", "HIGH"): 2,
    ("3", "T", "LOW"): 1,
    ("2", "T", "LOW"): 2,
    ("1", "T", "LOW"): 2,
    ("2", "T", "MED"): 2,
    ("3", "T", "MED"): 4,
    ("1", "T", "MED"): 3,
}


@pytest.fixture(scope="session")
def salary_ct():
    """Hand-built complete table over (capability, indicator, salary): 203
    pairs without an RA link, 25 with one."""
    schema = load_schema(SALARY_TABLE_SCHEMA)
    capa = schema.variable("RA.capability(P,S)")
    ind = schema.variable("RA(P,S)")
    sal = schema.variable("RA.salary(P,S)")
    return schema, ContingencyTable((capa, ind, sal), SALARY_ROWS)


# -- randomized micro-database corpus ----------------------------------------


def random_micro_config(rng, max_rels=3, max_grounding=1000):
    """A small random schema/config whose full grounding space stays below
    ``max_grounding`` tuples (so brute-force enumeration is cheap)."""
    while True:
        n_ent = int(rng.integers(1, 4))
        ents = tuple(
            EntitySpec(
                f"E{i}",
                int(rng.integers(2, 5)),
                attr_count=int(rng.integers(1, 3)),
                attr_domain=int(rng.integers(2, 4)),
            )
            for i in range(n_ent)
        )
        n_rel = int(rng.integers(1, max_rels + 1))
        rels = tuple(
            RelSpec(
                f"R{i}",
                (
                    ents[int(rng.integers(n_ent))].name,
                    ents[int(rng.integers(n_ent))].name,
                ),
                density=float(rng.uniform(0, 0.7)),
                attr_count=int(rng.integers(0, 3)),
                attr_domain=int(rng.integers(2, 4)),
            )
            for i in range(n_rel)
        )
        config = GenConfig(seed=int(rng.integers(1 << 30)), entities=ents, relationships=rels)
        db = generate(config)
        if db.grounding_count(db.schema.labels) <= max_grounding:
            return config, db


def random_family(rng, point):
    """A random family over a lattice point's applicable variables."""
    variables = point.variables
    size = min(len(variables), int(rng.integers(1, 5)))
    picked = [variables[i] for i in sorted(rng.choice(len(variables), size=size, replace=False))]
    child, *rest = sorted(picked, key=str)
    return FamilySpec(child, tuple(rest))
