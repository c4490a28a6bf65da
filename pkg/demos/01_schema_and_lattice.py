"""Declaring a relational schema and exploring its vocabulary.

A schema lists entity types with finite-domain attributes and binary
relationships between them.  From it the library derives first-order
variables (the columns every contingency table is built over) and the
lattice of relationship chains that structures counting and search.

Run:  python demos/01_schema_and_lattice.py
"""

from relct import build_lattice, derive_variables, load_schema

SCHEMA = """\
# a small university domain
entity Prof key=pid attr popularity{h,l} attr teaching{a,b,c}
entity Student key=sid attr intelligence{1,2,3}
entity Course key=cid attr rating{low,high}

rel RA(Prof as P, Student as S) attr salary{lo,med,hi}
rel Registered(Student as S, Course as C) attr grade{a,b,c,d}
"""

schema = load_schema(SCHEMA)
print(f"parsed: {len(schema.entities)} entity types, {len(schema.relationships)} relationships")

# Every entity attribute becomes one variable per population variable, and
# every relationship contributes an indicator plus one variable per attribute.
print("\nfirst-order variables:")
for v in derive_variables(schema):
    print(f"  {v}   [{v.kind}, {v.effective_size} values]")

# Chains of relationships connected through shared population variables form
# a lattice ordered by subset inclusion.  {RA} and {Registered} share the
# student population S, so the two-relationship chain exists.
lattice = build_lattice(schema, max_chain_length=3)
print("\nlattice points:")
for point in lattice:
    print(f"  {point.name}: {len(point.variables)} applicable variables over labels {sorted(point.labels)}")

print("\ncover edges (one relationship apart):")
for sub, sup in lattice.edges:
    print(f"  {sub.name} -> {sup.name}")
