"""relct: relational contingency tables under pluggable count-caching
strategies, with a BDeu-scored structure search and a benchmark harness."""

from .schema import (
    NA,
    AttributeDef,
    EntityType,
    FirstOrderVariable,
    LatticePoint,
    RelationshipLattice,
    RelationshipType,
    RelBinding,
    Schema,
    SchemaError,
    NoCoveringPointError,
    build_lattice,
    connected_components,
    derive_variables,
    dump_schema,
    family_lattice_point,
    load_schema,
)
from .store import (
    Database,
    DataError,
    DataTable,
    JoinCounter,
    dump_database,
    entity_ct,
    join_positive_ct,
    load_database,
)
from .cttab import (
    ContingencyTable,
    InconsistentCountsError,
    SizeEstimate,
    at_least_ct,
    complete_ct,
    estimate_ct_size_ondemand,
    estimate_ct_size_precount,
    max_effective_domain,
    moebius_join,
    subset_tables,
)
from .score import (
    BdeuParams,
    FamilyScore,
    FamilySpec,
    bdeu_family,
    family_counts,
    score_family_ct,
    score_model,
    structural_config_count,
)
from .strategy import (
    BudgetExceeded,
    ComponentTimer,
    CountCache,
    CountProvider,
    CountProviderKind,
    Deadline,
    HybridProvider,
    MemoryCapExceeded,
    OndemandProvider,
    PrecountProvider,
    StrategyStateError,
    make_provider,
)
from .search import (
    BayesNetState,
    SearchParams,
    SearchTrace,
    hill_climb,
    learn_and_join,
    mean_parents_per_node,
)
from .gen import EntitySpec, GenConfig, RelSpec, build_schema, generate, preset
from .bench import (
    BenchParams,
    Comparison,
    StrategyReport,
    compare,
    dump_ct,
    fingerprint,
    run_benchmark,
)

__version__ = "0.1.0"
