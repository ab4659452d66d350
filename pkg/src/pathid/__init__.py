"""Identification of total and path-specific causal effects in
hidden-variable DAGs, verified against an exact counterfactual oracle."""

from .evaluate import EvaluationError, JointTable, evaluate
from .expr import (
    Cond,
    Kernel,
    NotIdentifiable,
    Product,
    Ratio,
    Sum,
    VarRef,
    canonicalize,
    from_json,
    render,
    to_json,
)
from .factorize import edge_g_formula, edge_g_formula_hidden, truncated_factorization
from .fixing import identify_kernel, kernel_of_district
from .graphs import (
    Admg,
    CausalGraph,
    GraphError,
    ParseError,
    districts,
    hidden_form,
    induced_subgraph,
    latent_project,
    mutilate,
    normalize_hidden,
    parse_admg,
    parse_graph,
    render_admg,
    render_graph,
    ystar,
)
from .identify import (
    IdentifyResult,
    Query,
    UnsupportedQuery,
    identify_natural,
    identify_path_specific,
    identify_total,
    mediation_formula,
    natural_effect_paths,
    run_query,
)
from .npsem import (
    EstimandReport,
    NpsemSpec,
    cross_world_dist,
    estimands,
    interventional_dist,
    observed_joint,
    random_spec,
    spec_dumps,
    spec_loads,
)
from .pathsets import (
    DistrictAssignment,
    PathSet,
    complement,
    district_assignments,
    enumerate_proper_paths,
    recanting_district,
    recanting_witness,
)
from .search import counterexample_search
from .separation import (
    AdjustmentReport,
    SeparationQuery,
    cross_world_cov_check,
    d_separated,
    find_mediation_adjustment_sets,
    m_separated,
)
from .simplify import simplify
from .verify import verify_expression

__all__ = [name for name in dir() if not name.startswith("_")]
