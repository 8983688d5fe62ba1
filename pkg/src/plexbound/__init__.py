"""Maximum k-plex branch-and-bound search with a learned bound constraint.

A k-plex is a vertex set in which every member is adjacent to all but at
most k of the set (so a 1-plex is a clique). The package searches for a
maximum k-plex of size at least a lower bound lb: graphs are reduced by
coreness and clique-witness rules, searched by a deterministic
include/exclude branch-and-bound with a handcrafted feasibility bound, and
optionally traced so a single quadratic constraint can be learned from the
bound's decisions and swapped in as a faster learned bound.
"""

from .bench import CSV_COLUMNS, BenchSpec, bench, load_bench_spec
from .errors import (
    DegenerateTraceError,
    EdgeListParseError,
    ModelFormatError,
    NoModelError,
    PlexboundError,
    TraceFormatError,
    UnsupportedProblemError,
)
from .features import (
    FEATURE_NAMES,
    TRACE_SCHEMA_VERSION,
    Example,
    ExampleMeta,
    FeatureVector,
    extract_features,
    read_trace,
    write_trace,
)
from .graph import (
    Graph,
    GraphStats,
    induced_subgraph,
    load_edge_list,
    stats,
    write_edge_list,
)
from .learn import (
    DEFAULT_BIG_M,
    DEFAULT_EPSILON,
    MODEL_SCHEMA_VERSION,
    WEIGHT_BOX,
    ConstraintModel,
    CoverageReport,
    MilpProblem,
    TermSpec,
    encode_milp,
    expand_terms,
    export_lp,
    load_model,
    model_bounds,
    read_lp,
    save_model,
    solve,
)
from .pipeline import (
    TrainingPlan,
    collect_training_data,
    default_plan,
    gen_random_graph,
    learned_search,
    load_plan,
    train,
)
from .plots import render_bench_figures
from .preprocess import (
    PreprocessParams,
    PreprocessReport,
    cliqueness_prune,
    coreness_prune,
    preprocess,
)
from .search import (
    SearchConfig,
    SearchResult,
    SearchState,
    SearchStats,
    Solution,
    branch_score,
    familiarity_bound,
    is_kplex,
    search,
    select_branch_vertex,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # graph
    "Graph",
    "GraphStats",
    "load_edge_list",
    "write_edge_list",
    "induced_subgraph",
    "stats",
    # preprocess
    "PreprocessParams",
    "PreprocessReport",
    "preprocess",
    "coreness_prune",
    "cliqueness_prune",
    # search
    "SearchConfig",
    "Solution",
    "SearchResult",
    "SearchStats",
    "SearchState",
    "search",
    "is_kplex",
    "branch_score",
    "select_branch_vertex",
    "familiarity_bound",
    # features / trace
    "FEATURE_NAMES",
    "TRACE_SCHEMA_VERSION",
    "FeatureVector",
    "Example",
    "ExampleMeta",
    "extract_features",
    "write_trace",
    "read_trace",
    # learning
    "TermSpec",
    "expand_terms",
    "MilpProblem",
    "encode_milp",
    "export_lp",
    "read_lp",
    "ConstraintModel",
    "CoverageReport",
    "model_bounds",
    "solve",
    "save_model",
    "load_model",
    "DEFAULT_BIG_M",
    "DEFAULT_EPSILON",
    "WEIGHT_BOX",
    "MODEL_SCHEMA_VERSION",
    # pipeline
    "TrainingPlan",
    "default_plan",
    "load_plan",
    "gen_random_graph",
    "collect_training_data",
    "train",
    "learned_search",
    # bench / plots
    "BenchSpec",
    "load_bench_spec",
    "bench",
    "CSV_COLUMNS",
    "render_bench_figures",
    # errors
    "PlexboundError",
    "EdgeListParseError",
    "TraceFormatError",
    "ModelFormatError",
    "DegenerateTraceError",
    "NoModelError",
    "UnsupportedProblemError",
]
