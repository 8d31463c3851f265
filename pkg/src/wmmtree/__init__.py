"""Population size estimation on trees with the weighted multiplier method."""

__version__ = "0.1.0"

from .errors import (
    CodegenError,
    EstimationError,
    ModelSyntaxError,
    SamplingError,
    TreeDataError,
    WMMError,
)
from .estimate import (
    EstimateReport,
    SampleMatrix,
    WeightVector,
    back_calculate,
    build_sample_matrix,
    combination_weights,
    estimate_from_matrix,
    load_report,
    min_variance_weights,
    two_stage_estimate,
    wmm_estimate,
)
from .intervals import confidence_interval
from .jags import generate_model, parse_generated_model, sibling_tuple_name
from .moments import AnalyticMoments, analytic_path_moments, dirichlet_path_betas
from .render import RenderSpec, render_tree
from .sampling import (
    Regime,
    SamplingPlan,
    SiblingGroup,
    classify_sibling_group,
    plan_tree,
    sample_dirichlet_group,
    sample_importance_group,
    sample_realization,
    sample_rejection_group,
)
from .tree import (
    EdgeRecord,
    PopTree,
    RootPath,
    build_tree,
    informative_leaves,
    parse_edge_table,
    path_to_leaf,
    read_edge_table,
)
