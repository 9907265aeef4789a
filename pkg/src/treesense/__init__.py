"""treesense: exact feature-sensitivity verification for decision-tree ensembles.

Decides whether two inputs that agree outside a chosen feature subset can
straddle a confidence gap (binary) or a softmax ratio gap (multiclass),
optionally steering counterexample pairs toward the data distribution via a
product-of-marginals objective and mined clause summaries of data cavities.
"""

__version__ = "1.0.0"

from .dataaware import (
    Clause,
    Dataset,
    MarginalTable,
    clause_satisfied,
    clauses_from_json,
    clauses_to_json,
    estimate_marginals,
    mine_clauses,
    objective_coeffs,
    utility_log,
)
from .encoding import (
    EncodingArtifact,
    EncodingError,
    SensitivityQuery,
    TriviallyUnsensitiveError,
    delta_from_gap,
    encode,
    eta_from_gap,
    export_lp,
)
from .metrics import RegionDistanceReport, compare_modes, region_distance
from .model import (
    Ensemble,
    GuardIndex,
    Leaf,
    ModelFormatError,
    Node,
    Tree,
    build_guard_index,
    dump_model,
    load_model,
    predict_prob,
    raw_score,
    representative_input,
    unaffected_leaves,
)
from .reductions import SubsetSumInstance, gen_subsetsum_ensemble, subsetsum_dp
from .solver import (
    NOT_SENSITIVE,
    SENSITIVE,
    TIMEOUT,
    Budget,
    CheckResult,
    CounterexamplePair,
    Outcome,
    SolveStats,
    brute_force_oracle,
    check_pair,
    depth1_poly_check,
    solve,
)

__all__ = [name for name in dir() if not name.startswith("_")]
