"""Monte Carlo checks of heavy-tail asymptotics for multivariate claims over ruin sets."""

from .geometry import (
    NotInFamilyError,
    RuinSet,
    RuinSetScalarizer,
    make_all_exceed_set,
    make_any_exceed_set,
    make_halfspace_set,
    member,
    sandwich_margin,
    y_a,
    y_a_translated,
)
from .randsrc import CountLaw, MarginalLaw, SampleBatch, SeedSpec, Stream, ThetaLaw, VectorLaw
from .tailstats import EmpiricalTail, HillEstimator, RatioCurve, TailEstimate, classify_tail

__version__ = "0.1.0"

__all__ = [
    "NotInFamilyError",
    "RuinSet",
    "RuinSetScalarizer",
    "make_all_exceed_set",
    "make_any_exceed_set",
    "make_halfspace_set",
    "member",
    "sandwich_margin",
    "y_a",
    "y_a_translated",
    "CountLaw",
    "MarginalLaw",
    "SampleBatch",
    "SeedSpec",
    "Stream",
    "ThetaLaw",
    "VectorLaw",
    "EmpiricalTail",
    "HillEstimator",
    "RatioCurve",
    "TailEstimate",
    "classify_tail",
    "__version__",
]
