"""Homological dimensions of Köthe algebras from their weight families."""

from .bar_complex import Chain, differential, openness_ratio, verify_d_squared
from .classify import DimensionReport, classify_dimensions, classify_power_series
from .conditions import (
    MatrixWitness,
    NotAnAlgebra,
    check_algebra,
    check_biprojective,
    check_matrix,
    check_nuclear,
    check_unital,
)
from .kothe_ops import (
    AnalysisOptions,
    DominationCertificate,
    KotheSet,
    Verdict,
    dominates,
    equivalent,
    explicit,
    finite_support,
    l1,
    matrix_example,
    power_series,
)
from .weights import AlphaRule, Element, IndexSet

__version__ = "0.1.0"
