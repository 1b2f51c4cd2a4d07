"""Robust Wasserstein distances: outlier-trimmed optimal transport."""
from .dual import (DualPotential, asymmetric_dual_objective, c_transform,
                   check_maximizer_structure, dual_ascent, dual_objective,
                   loss_trimming_objective, one_sided_dual_objective, union_support)
from .estimation import (CandidateFamily, Certificate, ResilienceProfile, SweepCurve,
                         TestDecision, detect_elbow, independence_test, mde, mde_scores,
                         resilience_bound, robust_distance_certificate, sweep_radius,
                         two_sample_test)
from .exact import (RobustProblem, TransportSolution, mass_addition_lp, one_sided,
                    robust_distance, solve_asymmetric, solve_robust, solve_standard,
                    solve_with_forced_meet, verify_mass_addition)
from .exceptions import (BeyondBreakdown, EmptyFamily, EmptyInput, InputFormatError,
                         InvalidDimensions, InvalidMomentOrder, InvalidRadius, MassMismatch,
                         NoElbow, NoPotentials, NotConverged, NumericalFailure, RobustOTError,
                         TooLarge, UnknownFamily, Unsupported)
from .measures import (ContaminationSpec, DiscreteMeasure, GroundCost, contaminate, empirical,
                       meet, sample_family, tv_distance, uniform_box)
from .sinkhorn import SinkhornConfig, solve_robust_entropic
from .sliced import (ProjectionFrame, SlicedEstimate, project, sample_frame,
                     sliced_distance, sliced_triangle_check)

__version__ = "0.1.0"

__all__ = [
    "asymmetric_dual_objective", "BeyondBreakdown", "c_transform", "CandidateFamily",
    "Certificate", "check_maximizer_structure", "contaminate", "ContaminationSpec",
    "detect_elbow", "DiscreteMeasure", "dual_ascent", "dual_objective", "DualPotential",
    "empirical", "EmptyFamily", "EmptyInput", "GroundCost", "independence_test",
    "InputFormatError", "InvalidDimensions", "InvalidMomentOrder", "InvalidRadius",
    "loss_trimming_objective", "mass_addition_lp", "MassMismatch", "mde", "mde_scores",
    "meet", "NoElbow", "NoPotentials", "NotConverged", "NumericalFailure", "one_sided",
    "one_sided_dual_objective", "project", "ProjectionFrame", "resilience_bound",
    "ResilienceProfile", "robust_distance", "robust_distance_certificate", "RobustOTError",
    "RobustProblem", "sample_family", "sample_frame", "SinkhornConfig", "sliced_distance",
    "sliced_triangle_check", "SlicedEstimate", "solve_asymmetric", "solve_robust",
    "solve_robust_entropic", "solve_standard", "solve_with_forced_meet", "sweep_radius",
    "SweepCurve", "TestDecision", "TooLarge", "TransportSolution", "tv_distance",
    "two_sample_test", "uniform_box", "union_support", "UnknownFamily", "Unsupported",
    "verify_mass_addition",
]
