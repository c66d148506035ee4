"""Multi-threshold fuzzy discontinuity estimation.

Settlements become eligible for an administrative status when they clear
three cutoffs at once. This package builds the normalized running
variables, the joint-eligibility instrument, and a soft-minimum frontier
distance; estimates local treatment effects by fixed-effects 2SLS with
cluster-robust inference; and checks design validity (instrument strength,
density manipulation, covariate balance, exclusion). A synthetic generator
with planted effects serves as a verification oracle.
"""

from .data import (
    Dataset,
    Provenance,
    Schema,
    Settlement,
    crosstab_thresholds,
    crosstab_treatment,
    dataset_from_frame,
    ingest_csv,
    read_schema,
)
from .design import (
    DESIGN_COLUMNS,
    DesignConfig,
    DesignedRow,
    FrontierDesign,
    analysis_frame,
    build_design,
    default_controls,
    design_rows,
    eligibility,
    frontier_distance,
    hard_min,
    local_filter,
    normalize,
    write_design_csv,
)
from .dgp import DgpParams, ReplicationResult, generate, replicate
from .diagnostics import (
    BalanceRow,
    BinnedSeries,
    DensityTestResult,
    ExclusionCheckResult,
    FirstStageDiagnostics,
    balance_table,
    base_spec,
    binned_scatter,
    exclusion_check,
    first_stage,
    mccrary_test,
)
from .errors import (
    CollinearityError,
    ConfigError,
    DegenerateInstrumentError,
    DuplicateIdError,
    FrontierRDError,
    InferenceError,
    InputError,
    NumericalError,
    ParseError,
    SchemaError,
    UsageError,
)
from .estimators import (
    ClusterRobustIV,
    ClusterRobustOLS,
    FitResult,
    RegressionSpec,
    first_stage_regression,
    ols,
    partial_r2,
    reduced_form_regression,
    tsls,
    within_transform,
)

__all__ = [
    "BalanceRow",
    "BinnedSeries",
    "ClusterRobustIV",
    "ClusterRobustOLS",
    "CollinearityError",
    "ConfigError",
    "DESIGN_COLUMNS",
    "Dataset",
    "DegenerateInstrumentError",
    "DensityTestResult",
    "DesignConfig",
    "DesignedRow",
    "DgpParams",
    "DuplicateIdError",
    "ExclusionCheckResult",
    "FirstStageDiagnostics",
    "FitResult",
    "FrontierDesign",
    "FrontierRDError",
    "InferenceError",
    "InputError",
    "NumericalError",
    "ParseError",
    "Provenance",
    "RegressionSpec",
    "ReplicationResult",
    "Schema",
    "SchemaError",
    "Settlement",
    "UsageError",
    "analysis_frame",
    "balance_table",
    "base_spec",
    "binned_scatter",
    "build_design",
    "crosstab_thresholds",
    "crosstab_treatment",
    "dataset_from_frame",
    "default_controls",
    "design_rows",
    "eligibility",
    "exclusion_check",
    "first_stage",
    "first_stage_regression",
    "frontier_distance",
    "generate",
    "hard_min",
    "ingest_csv",
    "local_filter",
    "mccrary_test",
    "normalize",
    "ols",
    "partial_r2",
    "read_schema",
    "reduced_form_regression",
    "replicate",
    "tsls",
    "within_transform",
    "write_design_csv",
]
