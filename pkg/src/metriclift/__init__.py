"""Charted pseudo-Riemannian metrics: curvature, tension fields,
harmonicity checks and bundle-lift metrics."""

from .exprlang import (
    EvalDomainError,
    ExprAst,
    ExprError,
    ExprSyntaxError,
    eval_jet2,
    eval_value,
    parse_expression,
    to_source,
)
from .gallery import (
    EgorovSpec,
    GodelSpec,
    WalkerSpec,
    egorov_metric,
    egorov_residual_closed_form,
    godel_condition,
    godel_metric,
    walker_metric,
)
from .harmonic import (
    CoordinateMap,
    HarmonicityReport,
    check_harmonic,
    lattice_points,
    tension_identity_at,
    tension_map_at,
)
from .jets import Jet2
from .lifts import (
    FiberPoint,
    LiftBlocks,
    LiftKind,
    LiftedTension,
    check_lift_conditions,
    fiber_lattice,
    lift_blocks_at,
    lift_to_chart,
    lifted_tension_at,
)
from .metric import (
    ChartedMetric,
    ChristoffelSet,
    CurvatureField,
    MetricDegenerate,
    christoffel_at,
    curvature_at,
    inverse_metric_at,
    metric_at,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ExprAst",
    "ExprError",
    "ExprSyntaxError",
    "EvalDomainError",
    "parse_expression",
    "eval_value",
    "eval_jet2",
    "to_source",
    "Jet2",
    "ChartedMetric",
    "ChristoffelSet",
    "CurvatureField",
    "MetricDegenerate",
    "metric_at",
    "inverse_metric_at",
    "christoffel_at",
    "curvature_at",
    "CoordinateMap",
    "HarmonicityReport",
    "tension_identity_at",
    "tension_map_at",
    "check_harmonic",
    "lattice_points",
    "LiftKind",
    "FiberPoint",
    "LiftBlocks",
    "LiftedTension",
    "lift_blocks_at",
    "lifted_tension_at",
    "lift_to_chart",
    "check_lift_conditions",
    "fiber_lattice",
    "EgorovSpec",
    "WalkerSpec",
    "GodelSpec",
    "egorov_metric",
    "egorov_residual_closed_form",
    "walker_metric",
    "godel_metric",
    "godel_condition",
]
