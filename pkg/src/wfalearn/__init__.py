"""Learning weighted finite automata from string data.

Hankel sub-blocks on finite prefix/suffix bases are estimated from samples
(or computed exactly from a known model) and turned into automata three
ways: the SVD spectral method, its formulation as a constrained quadratic
loss, and a nuclear-norm regularized convex program solved by proximal
gradient. Basis selection, an EM baseline, and a reproducible experiment
harness with a CLI round out the package.
"""

from .automata import (
    LAMBDA,
    Alphabet,
    Pnfa,
    StringSample,
    WeightedAutomaton,
    change_of_basis,
    draw_sample,
    evaluate,
    pnfa_to_wa,
    random_pnfa,
    sample_string,
    to_prefix_automaton,
    to_substring_automaton,
)
from .convex_opt import (
    CoConfig,
    CoSolution,
    closed_form_infinite_tau,
    extract_wa_co,
    relaxed_loss,
    solve_co,
    svt,
)
from .em import EmConfig, em_fit, em_fit_with_trace, log_likelihood
from .errors import DegenerateFactorizationWarning, InputError, NumericError
from .hankel import (
    Basis,
    EstimatorKind,
    HankelBlocks,
    empirical_blocks,
    exact_blocks,
    frequency_basis,
    induced_factorization,
    length_k_basis,
    numerical_rank,
    random_basis,
    smallest_singular_value,
)
from .harness import (
    DEFAULT_TAU_GRID,
    BasisSpec,
    ExperimentConfig,
    LearnerSpec,
    ResultRecord,
    TargetSpec,
    basis_success_experiment,
    l1_error,
    max_deviation,
    model_select,
    run_learning_curve,
)
from .local_loss import SoVariables, extract_wa_so, local_loss_value, solve_given_x, solve_so
from .spectral import RankFactorization, svd_learn, wa_from_factorization

__version__ = "0.1.0"

__all__ = [
    "LAMBDA",
    "Alphabet",
    "Basis",
    "BasisSpec",
    "CoConfig",
    "CoSolution",
    "DEFAULT_TAU_GRID",
    "DegenerateFactorizationWarning",
    "EmConfig",
    "EstimatorKind",
    "ExperimentConfig",
    "HankelBlocks",
    "InputError",
    "LearnerSpec",
    "NumericError",
    "Pnfa",
    "RankFactorization",
    "ResultRecord",
    "SoVariables",
    "StringSample",
    "TargetSpec",
    "WeightedAutomaton",
    "basis_success_experiment",
    "change_of_basis",
    "closed_form_infinite_tau",
    "draw_sample",
    "em_fit",
    "em_fit_with_trace",
    "empirical_blocks",
    "evaluate",
    "exact_blocks",
    "extract_wa_co",
    "extract_wa_so",
    "frequency_basis",
    "induced_factorization",
    "l1_error",
    "length_k_basis",
    "local_loss_value",
    "log_likelihood",
    "max_deviation",
    "model_select",
    "numerical_rank",
    "pnfa_to_wa",
    "random_basis",
    "random_pnfa",
    "relaxed_loss",
    "run_learning_curve",
    "sample_string",
    "smallest_singular_value",
    "solve_co",
    "solve_given_x",
    "solve_so",
    "svd_learn",
    "svt",
    "to_prefix_automaton",
    "to_substring_automaton",
    "wa_from_factorization",
]
