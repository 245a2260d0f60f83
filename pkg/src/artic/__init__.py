"""Articulation joint estimation from segmented point-cloud sequences.

The discrete searcher (:func:`search`) scores joints placed on the
oriented bounding box of the moving part; the direct optimizer
(:func:`optimize`) descends the chamfer loss over continuous joint
parameters.  :mod:`artic.synth` provides objects with known joints and
:mod:`artic.metrics` scores estimates against them.
"""

from .chamfer import RigidChamfer, chamfer_brute_force, chamfer_distance, chamfer_sequence
from .direct import OptimizerConfig, OptTrace, optimize
from .errors import (ArticError, ConstructionError, DegenerateGeometryError,
                     EmptyInputError, FormatError, FrameCountError, InvalidAxisError,
                     KindMismatchError, NumericalFailureError, OverDegradedError,
                     PLYParseError)
from .geometry import (MotionAxis, MotionKind, ObservedSequence, PointCloud,
                       apply_motion, apply_prismatic, apply_revolute)
from .metrics import BenchmarkConfig, angular_error, position_error, run_benchmark
from .obb import CandidateSet, OrientedBox, enumerate_candidates, fit_obb
from .search import EstimateReport, Hypothesis, SearchConfig, search
from .synth import DegradeConfig, degrade, generate, make_suite, make_template

__version__ = "0.1.0"

__all__ = [
    "ArticError", "BenchmarkConfig", "CandidateSet", "ConstructionError",
    "DegenerateGeometryError", "DegradeConfig", "EmptyInputError", "EstimateReport",
    "FormatError", "FrameCountError", "Hypothesis", "InvalidAxisError",
    "KindMismatchError", "MotionAxis", "MotionKind", "NumericalFailureError",
    "ObservedSequence", "OptTrace", "OptimizerConfig", "OrientedBox", "PLYParseError",
    "PointCloud", "RigidChamfer", "SearchConfig", "angular_error", "apply_motion",
    "apply_prismatic", "apply_revolute", "chamfer_brute_force", "chamfer_distance",
    "chamfer_sequence", "degrade", "enumerate_candidates", "fit_obb", "generate",
    "make_suite", "make_template", "optimize", "position_error", "run_benchmark",
    "search",
]
