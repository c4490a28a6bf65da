"""Deterministic synthetic relational databases.

A GenConfig describes entity populations, attribute shapes, and relationship
link densities; ``generate`` turns it into a validated Database, identically
for a given seed.  Presets mirror the shape (relationship count, relative
density ordering) of well-known benchmark databases at a configurable
fraction of their size, so speed/memory comparisons are reproducible without
the original data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .schema import AttributeDef, EntityType, RelationshipType, Schema
from .store import Database, DataTable

# sampling links switches from full-shuffle to rejection above this many pairs
_SHUFFLE_LIMIT = 10**6


@dataclass(frozen=True)
class EntitySpec:
    name: str
    size: int
    attr_count: int = 1
    attr_domain: int = 2


@dataclass(frozen=True)
class RelSpec:
    name: str
    endpoints: tuple[str, str]
    density: float = 0.1
    attr_count: int = 1
    attr_domain: int = 2


@dataclass(frozen=True)
class GenConfig:
    seed: int
    entities: tuple[EntitySpec, ...]
    relationships: tuple[RelSpec, ...] = ()
    preset: str | None = None

    def __post_init__(self):
        sizes = {e.name: e.size for e in self.entities}
        for r in self.relationships:
            if not 0.0 <= r.density <= 1.0:
                raise ValueError(f"{r.name}: density {r.density} out of [0, 1]")
            pairs = sizes[r.endpoints[0]] * sizes[r.endpoints[1]]
            if r.density * pairs > 2**63 - 1:
                raise ValueError(f"{r.name}: link count exceeds 64-bit range")
        for e in self.entities:
            if e.attr_count and e.attr_domain < 2:
                raise ValueError(f"{e.name}: attribute domains need >= 2 values")
        for r in self.relationships:
            if r.attr_count and r.attr_domain < 2:
                raise ValueError(f"{r.name}: attribute domains need >= 2 values")

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "preset": self.preset,
            "entities": [
                {"name": e.name, "size": e.size, "attrs": [e.attr_count, e.attr_domain]}
                for e in self.entities
            ],
            "relationships": [
                {
                    "name": r.name,
                    "endpoints": list(r.endpoints),
                    "density": r.density,
                    "attrs": [r.attr_count, r.attr_domain],
                }
                for r in self.relationships
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GenConfig":
        payload = json.loads(text)
        return cls(
            seed=payload["seed"],
            preset=payload.get("preset"),
            entities=tuple(
                EntitySpec(e["name"], e["size"], e["attrs"][0], e["attrs"][1])
                for e in payload["entities"]
            ),
            relationships=tuple(
                RelSpec(
                    r["name"],
                    tuple(r["endpoints"]),
                    r["density"],
                    r["attrs"][0],
                    r["attrs"][1],
                )
                for r in payload.get("relationships", ())
            ),
        )


def _labels_for(config: GenConfig) -> dict[str, str]:
    """One canonical population-variable label per entity type: the shortest
    unused prefix of the name, uppercased."""
    labels: dict[str, str] = {}
    used: set[str] = set()
    for e in config.entities:
        for n in range(1, len(e.name) + 1):
            cand = e.name[:n].upper()
            if cand not in used:
                break
        else:
            cand = e.name.upper() + str(len(used))
        labels[e.name] = cand
        used.add(cand)
    return labels


def build_schema(config: GenConfig) -> Schema:
    """The schema implied by a GenConfig.  Self-relationships bind their two
    slots to X and Y (X2/Y2 etc. when several entity types need them)."""
    labels = _labels_for(config)
    used = set(labels.values())
    entities = [
        EntityType(
            e.name,
            key_column=e.name.lower() + "_id",
            attributes=tuple(
                AttributeDef(f"a{i + 1}", tuple(f"v{j + 1}" for j in range(e.attr_domain)))
                for i in range(e.attr_count)
            ),
        )
        for e in config.entities
    ]
    rels = []
    self_labels: dict[str, tuple[str, str]] = {}
    for r in config.relationships:
        e1, e2 = r.endpoints
        if e1 == e2:
            # one X/Y pair per entity type, shared by all its self-relationships
            if e1 not in self_labels:
                suffix = ""
                while f"X{suffix}" in used or f"Y{suffix}" in used:
                    suffix = str(int(suffix or "1") + 1)
                self_labels[e1] = (f"X{suffix}", f"Y{suffix}")
                used.update(self_labels[e1])
            l1, l2 = self_labels[e1]
        else:
            l1, l2 = labels[e1], labels[e2]
        rels.append(
            RelationshipType(
                r.name,
                ((e1, l1), (e2, l2)),
                tuple(
                    AttributeDef(
                        f"b{i + 1}",
                        tuple(f"w{j + 1}" for j in range(r.attr_domain)),
                        includes_na=True,
                    )
                    for i in range(r.attr_count)
                ),
            )
        )
    return Schema(entities, rels)


AttrSampler = Callable[[np.random.Generator, str, AttributeDef, str, dict[str, str]], str | None]


def generate(config: GenConfig, attr_sampler: AttrSampler | None = None) -> Database:
    """Produce a validated Database: uniform random attributes and, per
    relationship, exactly floor(density * n1 * n2) links sampled without
    replacement.  A pure function of the config (and sampler).

    ``attr_sampler(rng, owner, attr, key, row_so_far)`` may override entity
    attribute values (return None to keep the uniform draw); tests use it to
    plant correlations for the search to find.
    """
    schema = build_schema(config)
    rng = np.random.default_rng(config.seed)
    tables: dict[str, DataTable] = {}
    keys: dict[str, list[str]] = {}
    for spec, ent in zip(config.entities, schema.entities):
        ids = [f"{ent.name.lower()}{i + 1}" for i in range(spec.size)]
        keys[ent.name] = ids
        rows = []
        for key in ids:
            row: dict[str, str] = {}
            values = [key]
            for a in ent.attributes:
                v = a.domain[int(rng.integers(len(a.domain)))]
                if attr_sampler is not None:
                    override = attr_sampler(rng, ent.name, a, key, row)
                    if override is not None:
                        v = override
                row[a.name] = v
                values.append(v)
            rows.append(tuple(values))
        cols = ((ent.key_column, "key"),) + tuple((a.name, "attr") for a in ent.attributes)
        tables[ent.name] = DataTable(ent.name, cols, tuple(rows))
    for spec, rel in zip(config.relationships, schema.relationships):
        n1 = len(keys[rel.endpoints[0][0]])
        n2 = len(keys[rel.endpoints[1][0]])
        want = int(spec.density * n1 * n2)
        pair_ids = _sample_pairs(rng, n1 * n2, want)
        rows = []
        for pid in pair_ids:
            i, j = divmod(int(pid), n2)
            values = [keys[rel.endpoints[0][0]][i], keys[rel.endpoints[1][0]][j]]
            for a in rel.attributes:
                values.append(a.domain[int(rng.integers(len(a.domain)))])
            rows.append(tuple(values))
        cols = tuple((l, "fk") for l in rel.labels) + tuple((a.name, "attr") for a in rel.attributes)
        tables[rel.name] = DataTable(rel.name, cols, tuple(rows))
    return Database(schema, tables)


def _sample_pairs(rng: np.random.Generator, total: int, want: int) -> Sequence[int]:
    """``want`` distinct pair indices below ``total``: a seeded shuffle when
    the index space is small, rejection sampling when it is not."""
    if want == 0 or total == 0:
        return ()
    if total <= _SHUFFLE_LIMIT:
        return rng.permutation(total)[:want]
    chosen: list[int] = []
    seen: set[int] = set()
    while len(chosen) < want:
        batch = rng.integers(0, total, size=max(1024, want - len(chosen)))
        for pid in batch:
            p = int(pid)
            if p not in seen:
                seen.add(p)
                chosen.append(p)
                if len(chosen) == want:
                    break
    return chosen


# -- presets -----------------------------------------------------------------

# Shapes echo the published benchmark databases: relationship-table count is
# preserved, total rows land near (scale x reference rows), and the relative
# link-density ordering holds (movielens densest, the large graphs sparsest).
_REFERENCE_ROWS = {
    "uw-like": 712,
    "mondial-like": 870,
    "hepatitis-like": 12_927,
    "mutagenesis-like": 14_540,
    "movielens-like": 74_402,
    "financial-like": 225_887,
    "imdb-like": 1_063_559,
    "visualgenome-like": 15_833_273,
}


def _preset_shape(name: str, rows: float) -> GenConfig:
    """Entity sizes and densities for ``rows`` expected total table rows."""
    if name == "uw-like":
        # two relationships sharing the student population
        n = max(6, int((rows / 8.0) ** 0.5) * 2)
        prof, student, course = max(3, n // 4), n, max(3, n // 2)
        d1 = min(1.0, 0.18 * rows / (prof * student))
        d2 = min(1.0, 0.55 * rows / (student * course))
        return GenConfig(
            seed=0,
            entities=(
                EntitySpec("Prof", prof, attr_count=2, attr_domain=3),
                EntitySpec("Student", student, attr_count=2, attr_domain=3),
                EntitySpec("Course", course, attr_count=2, attr_domain=3),
            ),
            relationships=(
                RelSpec("Advises", ("Prof", "Student"), d1, attr_count=1, attr_domain=3),
                RelSpec("Registered", ("Student", "Course"), d2, attr_count=1, attr_domain=3),
            ),
            preset=name,
        )
    if name == "hepatitis-like":
        # three relationships chained through the patient population; wide
        # entity attributes make whole-chain tables balloon
        n = max(8, int(rows / 14))
        pat, exam, bio = n, max(4, n // 2), max(4, n // 2)
        d1 = min(1.0, 0.30 * rows / (pat * exam))
        d2 = min(1.0, 0.30 * rows / (pat * bio))
        d3 = min(1.0, 0.25 * rows / (exam * bio))
        return GenConfig(
            seed=0,
            entities=(
                EntitySpec("Patient", pat, attr_count=3, attr_domain=3),
                EntitySpec("Exam", exam, attr_count=3, attr_domain=3),
                EntitySpec("Bio", bio, attr_count=3, attr_domain=3),
            ),
            relationships=(
                RelSpec("Underwent", ("Patient", "Exam"), d1, attr_count=1, attr_domain=2),
                RelSpec("Sampled", ("Patient", "Bio"), d2, attr_count=1, attr_domain=2),
                RelSpec("Assessed", ("Exam", "Bio"), d3, attr_count=1, attr_domain=2),
            ),
            preset=name,
        )
    if name == "financial-like":
        n = max(10, int(rows / 16))
        client, account, loan = n, n, max(5, n // 3)
        d1 = min(1.0, 0.40 * rows / (client * account))
        d2 = min(1.0, 0.30 * rows / (client * loan))
        d3 = min(1.0, 0.20 * rows / (account * loan))
        return GenConfig(
            seed=0,
            entities=(
                EntitySpec("Client", client, attr_count=2, attr_domain=3),
                EntitySpec("Account", account, attr_count=2, attr_domain=3),
                EntitySpec("Loan", loan, attr_count=2, attr_domain=3),
            ),
            relationships=(
                RelSpec("Owns", ("Client", "Account"), d1, attr_count=1, attr_domain=3),
                RelSpec("Borrows", ("Client", "Loan"), d2, attr_count=1, attr_domain=2),
                RelSpec("Serves", ("Account", "Loan"), d3, attr_count=1, attr_domain=2),
            ),
            preset=name,
        )
    if name == "imdb-like":
        n = max(10, int(rows / 18))
        movie, actor, director = n, n, max(5, n // 3)
        d1 = min(1.0, 0.45 * rows / (actor * movie))
        d2 = min(1.0, 0.25 * rows / (director * movie))
        d3 = min(1.0, 0.15 * rows / (actor * director))
        return GenConfig(
            seed=0,
            entities=(
                EntitySpec("Movie", movie, attr_count=2, attr_domain=3),
                EntitySpec("Actor", actor, attr_count=2, attr_domain=3),
                EntitySpec("Director", director, attr_count=2, attr_domain=3),
            ),
            relationships=(
                RelSpec("ActsIn", ("Actor", "Movie"), d1, attr_count=1, attr_domain=3),
                RelSpec("Directs", ("Director", "Movie"), d2, attr_count=1, attr_domain=2),
                RelSpec("WorksWith", ("Actor", "Director"), d3, attr_count=1, attr_domain=2),
            ),
            preset=name,
        )
    if name == "movielens-like":
        # one dense relationship over small populations with few, narrow
        # attributes: the whole-chain table saturates at a few dozen rows
        # while the per-family tables, summed over a search, exceed it
        n = max(6, int((rows / 0.35) ** 0.5))
        user, movie = n, n
        d = min(1.0, 0.85 * rows / (user * movie))
        return GenConfig(
            seed=0,
            entities=(
                EntitySpec("User", user, attr_count=2, attr_domain=2),
                EntitySpec("Movie", movie, attr_count=2, attr_domain=2),
            ),
            relationships=(
                RelSpec("Rates", ("User", "Movie"), d, attr_count=2, attr_domain=2),
            ),
            preset=name,
        )
    if name == "visualgenome-like":
        # eight self-relationships over one object population
        n = max(12, int(rows / 24))
        d = min(1.0, (rows / 8.5) / (n * n))
        return GenConfig(
            seed=0,
            entities=(EntitySpec("Object", n, attr_count=2, attr_domain=3),),
            relationships=tuple(
                RelSpec(f"Rel{i + 1}", ("Object", "Object"), d, attr_count=1, attr_domain=2)
                for i in range(8)
            ),
            preset=name,
        )
    if name in ("mondial-like", "mutagenesis-like"):
        n = max(8, int(rows / 10))
        a, b = n, max(4, n // 2)
        d1 = min(1.0, 0.45 * rows / (a * b))
        d2 = min(1.0, 0.35 * rows / (a * b))
        return GenConfig(
            seed=0,
            entities=(
                EntitySpec("Alpha", a, attr_count=2, attr_domain=3),
                EntitySpec("Beta", b, attr_count=2, attr_domain=3),
            ),
            relationships=(
                RelSpec("R1", ("Alpha", "Beta"), d1, attr_count=1, attr_domain=3),
                RelSpec("R2", ("Alpha", "Beta"), d2, attr_count=1, attr_domain=2),
            ),
            preset=name,
        )
    raise ValueError(f"unknown preset {name!r}")


def preset(name: str, scale: float = 0.1, seed: int = 0) -> GenConfig:
    """A GenConfig whose expected total rows approximate ``scale`` times the
    reference database the preset is shaped after."""
    if name not in _REFERENCE_ROWS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(_REFERENCE_ROWS)}")
    if scale <= 0:
        raise ValueError("scale must be positive")
    config = _preset_shape(name, _REFERENCE_ROWS[name] * scale)
    return GenConfig(
        seed=seed,
        entities=config.entities,
        relationships=config.relationships,
        preset=name,
    )
