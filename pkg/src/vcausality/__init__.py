"""Tools for testing finite-speed hidden-influence explanations of multipartite correlations."""

from .behavior import (Behavior, SignallingReport, is_local_2222, marginal, no_signalling_check,
                       pr_box, reduced, uniform)
from .inequality import S_FUNCTIONAL, evaluate_s, evaluate_s_quantum, max_deterministic
from .quantum import QuantumModel, behavior_of, build_paper_model

__all__ = [
    "Behavior", "SignallingReport", "is_local_2222", "marginal", "no_signalling_check", "pr_box",
    "reduced", "uniform", "S_FUNCTIONAL", "evaluate_s", "evaluate_s_quantum", "max_deterministic",
    "QuantumModel", "behavior_of", "build_paper_model",
]
