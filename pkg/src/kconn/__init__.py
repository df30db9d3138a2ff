"""k-connectivity threshold lab for unions of random Bernoulli community layers."""

from .connectivity import (
    BkWitness,
    ConnectivityReport,
    Decision,
    brute_force_k_connected,
    components,
    connectivity_report,
    detect_Bk,
    is_k_edge_connected,
    is_k_vertex_connected,
)
from .graph_gen import (
    Layer,
    LayerSampler,
    ModelParams,
    UnionGraph,
    build_union,
    export_edge_list,
    generate,
    import_edge_list,
    sample_layer,
)
from .harness import SweepConfig, SweepRow, run_sweep, verify_bounds, write_csv
from .model_spec import (
    JointDistribution,
    ThresholdQuantities,
    check_moment_inequalities,
    falling_factorial,
    h,
    moments,
)
from .stats import (
    DegreeProfile,
    MCEstimate,
    PropertyDCount,
    degree_counts,
    estimate_layer_degree_pmf,
    estimate_qrs,
    property_D_count,
)
from .theory import (
    QBound,
    hat_qrs_bound,
    lambda_star,
    predicted_expected_ND,
    qrs_bound_sr1,
    qrs_bound_sr2,
    solve_m,
)

__version__ = "0.1.0"
