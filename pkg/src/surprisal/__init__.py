"""P-values, S-values and compatibility analysis from published study summaries."""

__version__ = "0.1.0"

from .combine import CombinationInput, CombinedEvidence, combine, combine_p, null_calibration
from .compat import (
    CompatPoint,
    CurveSample,
    GridSpec,
    Hypothesis,
    IntervalEstimate,
    compatibility_interval,
    curve,
    deviance_from_p,
    display_round,
    hypothesis_table,
    likelihood_interval,
    mlr_from_p,
    p_directional,
    p_interval_hypothesis,
    p_point,
    s_table,
    s_value,
)
from .errors import DomainError, InputError, ParseError, SaturationError, ValidationError
from .study import NormalApprox, Scale, StudySummary, parse_study_file, recover_normal_approx

__all__ = [
    "CombinationInput", "CombinedEvidence", "CompatPoint", "CurveSample", "DomainError",
    "GridSpec", "Hypothesis", "InputError", "IntervalEstimate", "NormalApprox", "ParseError",
    "SaturationError", "Scale", "StudySummary", "ValidationError", "combine", "combine_p",
    "compatibility_interval", "curve", "deviance_from_p", "display_round", "hypothesis_table",
    "likelihood_interval", "mlr_from_p", "null_calibration", "p_directional",
    "p_interval_hypothesis", "p_point", "parse_study_file", "recover_normal_approx",
    "s_table", "s_value",
]
