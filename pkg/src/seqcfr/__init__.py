"""Sequence-form counterfactual regret minimization as sparse linear algebra.

Two-player zero-sum extensive-form games are solved by the CFR family
(cfr, cfr+, dcfr, pcfr, pcfr+) expressed entirely as CSR matrix-vector
products and elementwise kernels over each player's tree-form sequential
decision process, with interchangeable serial and parallel backends,
scalar tree-walk oracles for verification, and exploitability-based
convergence measurement.
"""

from .games import (
    BUILTIN_GAMES,
    Game,
    GameError,
    GameNode,
    GameParseError,
    GameSizeError,
    GameValidationError,
    kuhn_poker,
    leduc_poker,
    load_game,
    matching_pennies,
    random_game,
    rock_paper_scissors,
    save_game,
    validate_game,
)
from .decision_process import (
    DecisionProcess,
    LevelEdge,
    extract_decision_process,
    level_decomposition,
)
from .kernels import Backend, CsrMatrix, parallel_backend, serial_backend
from .operators import OperatorSet, build_operators, build_payoff_matrix
from .solvers import (
    GameBundle,
    RegretState,
    RunResult,
    SolverConfig,
    build_bundle,
    next_strategy,
    next_strategy_predictive,
    observe_utility,
    observe_utility_dcfr,
    observe_utility_plus,
    run,
)
from .metrics import ConvergenceRecord, exploitability, expected_value

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_GAMES", "Backend", "ConvergenceRecord", "CsrMatrix",
    "DecisionProcess", "Game", "GameBundle", "GameError", "GameNode",
    "GameParseError", "GameSizeError", "GameValidationError", "LevelEdge",
    "OperatorSet", "RegretState", "RunResult", "SolverConfig",
    "build_bundle", "build_operators", "build_payoff_matrix",
    "exploitability", "expected_value", "extract_decision_process",
    "kuhn_poker", "leduc_poker", "level_decomposition", "load_game",
    "matching_pennies", "next_strategy", "next_strategy_predictive",
    "observe_utility", "observe_utility_dcfr", "observe_utility_plus",
    "parallel_backend", "random_game", "rock_paper_scissors", "run",
    "save_game", "serial_backend", "validate_game",
]
