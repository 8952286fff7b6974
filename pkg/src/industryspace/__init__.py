"""Skill-relatedness industry networks and regional entry/exit analytics."""

__version__ = "0.1.0"

from .analytics import (
    DescriptorRow,
    describe,
    pairwise_correlations,
    presence_size_summary,
)
from .cohesion import (
    CohesionVector,
    CohesionWarning,
    cohesion_panel,
    strategic_closeness,
    weighted_closeness,
)
from .econometrics import (
    Design,
    RegressionResult,
    RegressionSpec,
    auc,
    build_design,
    fit_probit,
    newton_probit,
    probit_loglik,
    probit_score,
    robust_se_values,
    run_specification_grid,
)
from .errors import (
    CoverageError,
    EstimationError,
    IndustrySpaceError,
    ParseError,
    ValidationError,
)
from .ingest import (
    Crosswalk,
    EmploymentPanel,
    FlowMatrix,
    load_crosswalk,
    load_flows,
    load_panel,
    write_crosswalk,
    write_flows,
    write_panel,
)
from .panel import (
    PeriodSpec,
    PresenceCube,
    TransitionTable,
    build_presence,
    entry_counts,
    label_transitions,
    structural_change_curve,
)
from .relatedness import (
    RelatednessNetwork,
    build_relatedness,
    convert_scheme,
    export_network,
)
from .synth import SynthConfig, generate, write_fixture

__all__ = [
    "__version__",
    "CohesionVector",
    "CohesionWarning",
    "CoverageError",
    "Crosswalk",
    "DescriptorRow",
    "Design",
    "EmploymentPanel",
    "EstimationError",
    "FlowMatrix",
    "IndustrySpaceError",
    "ParseError",
    "PeriodSpec",
    "PresenceCube",
    "RegressionResult",
    "RegressionSpec",
    "RelatednessNetwork",
    "SynthConfig",
    "TransitionTable",
    "ValidationError",
    "auc",
    "build_design",
    "build_presence",
    "build_relatedness",
    "cohesion_panel",
    "convert_scheme",
    "describe",
    "entry_counts",
    "export_network",
    "fit_probit",
    "generate",
    "label_transitions",
    "load_crosswalk",
    "load_flows",
    "load_panel",
    "newton_probit",
    "pairwise_correlations",
    "presence_size_summary",
    "probit_loglik",
    "probit_score",
    "robust_se_values",
    "run_specification_grid",
    "strategic_closeness",
    "structural_change_curve",
    "weighted_closeness",
    "write_crosswalk",
    "write_fixture",
    "write_flows",
    "write_panel",
]
