"""Classical simulation of short discrete logarithm, factoring and order-finding runs.

The quantum stage is replaced by an exact sampler for its output
distribution; everything after it (lattice recovery, verification,
factoring arithmetic) runs as it would on real measurement data.
"""
from .analysis import Check, analyze_instance
from .errors import (
    DegenerateSubsetError,
    ExhaustiveModeUnavailableError,
    GenerationFailedError,
    InconsistentCandidateError,
    InvalidArgumentError,
    InvalidBasisError,
    InvalidModulusError,
    NotInvertibleError,
    ShortDlogError,
    TooManyCandidatesError,
)
from .group import GroupElement, MulGroup, make_safe_prime_group
from .lattice import build_problem, candidate_logs, enumerate_within, lll_reduce, recover_d
from .pipelines import (
    SolveConfig,
    SolveOutcome,
    factor_rsa,
    make_dlog_fixture,
    make_fixture,
    make_order_fixture,
    make_rsa_fixture,
    order_with_hint,
    solve_short_dlog,
)
from .quantum import AlgorithmParams, OutcomePair, SecretInstance, derive_params, probability_table, sample_pair
from .report import ExperimentReport, emit_report, parse_report

__version__ = "0.1.0"

__all__ = [
    "AlgorithmParams", "Check", "DegenerateSubsetError", "ExhaustiveModeUnavailableError",
    "ExperimentReport", "GenerationFailedError", "GroupElement", "InconsistentCandidateError",
    "InvalidArgumentError", "InvalidBasisError", "InvalidModulusError", "MulGroup", "NotInvertibleError",
    "OutcomePair", "SecretInstance", "ShortDlogError", "SolveConfig", "SolveOutcome", "TooManyCandidatesError",
    "analyze_instance", "build_problem", "candidate_logs", "derive_params", "emit_report", "enumerate_within",
    "factor_rsa", "lll_reduce", "make_dlog_fixture", "make_fixture", "make_order_fixture", "make_rsa_fixture",
    "make_safe_prime_group", "order_with_hint", "parse_report", "probability_table", "recover_d",
    "sample_pair", "solve_short_dlog",
]
