"""Explanations for exploratory dataframe operations.

The package takes a dataframe step (filter, group-by, join, union), scores
how much each output column deviates from its inputs, attributes that change
to meaningful subsets of the input rows by re-running the step without them,
and renders the surviving explanations as captioned chart specs.
"""

from .errors import (
    AllNullError,
    ArityError,
    AttributeNotInInputError,
    DataError,
    DegeneratePartitionError,
    EmptyDistributionError,
    EmptyInputError,
    EngineError,
    IndexOutOfRangeError,
    InputFileError,
    MismatchedAttributeSetsError,
    NotManyToOneError,
    NotNumericError,
    OpSyntaxError,
    ParseError,
    SchemaMismatchError,
    SingleGroupError,
    TypeMismatchError,
    UndefinedContributionError,
    UnknownColumnError,
    ZeroMeanError,
)
from .evalharness import EvalReport, compare_rankings, evaluate_once, generate_synthetic, run_eval
from .frame import (
    Column,
    DataFrame,
    DiscreteDistribution,
    DType,
    RowIndexSet,
    column_distribution,
    frame_from_rows,
    ingest_csv,
    remove_rows,
)
from .measures import (
    InterestingnessScore,
    MeasureRegistry,
    SamplingConfig,
    diversity,
    exceptionality,
    ks_statistic,
    measure_for_step,
    sampled_step,
    score_all_columns,
)
from .ops import (
    ExploratoryStep,
    FilterOp,
    GroupByOp,
    JoinOp,
    UnionOp,
    execute,
    make_step,
    op_to_json,
    parse_operation,
    pretty_print,
)
from .partitions import (
    IntervalBin,
    MappedValueBin,
    PartitionConfig,
    RowPartition,
    RowSet,
    ValueBin,
    all_partitions,
    frequency_partition,
    many_to_one_partition,
    mine_many_to_one,
    numeric_partition,
    register_partition_scheme,
    registered_schemes,
)
from .pipeline import (
    ContributionScore,
    ExplainConfig,
    ExplanationCandidate,
    RankWeights,
    assemble_candidates,
    contribution,
    explain_step,
    rank_top_k,
    skyline,
    standardize,
)
from .render import (
    ChartGroup,
    ChartSpec,
    Explanation,
    build_payload,
    explanation_to_dict,
    load_schema,
    render_candidate,
    render_svg,
    serialize_explanations,
)

__version__ = "0.1.0"

__all__ = [
    "AllNullError",
    "ArityError",
    "AttributeNotInInputError",
    "ChartGroup",
    "ChartSpec",
    "Column",
    "ContributionScore",
    "DType",
    "DataError",
    "DataFrame",
    "DegeneratePartitionError",
    "DiscreteDistribution",
    "EmptyDistributionError",
    "EmptyInputError",
    "EngineError",
    "EvalReport",
    "ExplainConfig",
    "Explanation",
    "ExplanationCandidate",
    "ExploratoryStep",
    "FilterOp",
    "GroupByOp",
    "IndexOutOfRangeError",
    "InputFileError",
    "InterestingnessScore",
    "IntervalBin",
    "JoinOp",
    "MappedValueBin",
    "MeasureRegistry",
    "MismatchedAttributeSetsError",
    "NotManyToOneError",
    "NotNumericError",
    "OpSyntaxError",
    "ParseError",
    "PartitionConfig",
    "RankWeights",
    "RowIndexSet",
    "RowPartition",
    "RowSet",
    "SamplingConfig",
    "SchemaMismatchError",
    "SingleGroupError",
    "TypeMismatchError",
    "UndefinedContributionError",
    "UnionOp",
    "UnknownColumnError",
    "ValueBin",
    "ZeroMeanError",
    "all_partitions",
    "assemble_candidates",
    "build_payload",
    "column_distribution",
    "compare_rankings",
    "contribution",
    "diversity",
    "evaluate_once",
    "exceptionality",
    "execute",
    "explain_step",
    "explanation_to_dict",
    "frame_from_rows",
    "frequency_partition",
    "generate_synthetic",
    "ingest_csv",
    "ks_statistic",
    "load_schema",
    "make_step",
    "many_to_one_partition",
    "measure_for_step",
    "mine_many_to_one",
    "numeric_partition",
    "op_to_json",
    "parse_operation",
    "pretty_print",
    "rank_top_k",
    "register_partition_scheme",
    "registered_schemes",
    "remove_rows",
    "render_candidate",
    "render_svg",
    "run_eval",
    "sampled_step",
    "score_all_columns",
    "serialize_explanations",
    "skyline",
    "standardize",
]
