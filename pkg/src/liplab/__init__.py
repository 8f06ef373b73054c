"""liplab: query-complexity experiments on Lipschitz games."""

from liplab.errors import (
    BudgetExceeded,
    ContractError,
    InputError,
    LiplabError,
    LPInfeasible,
    PreconditionError,
    PromiseViolation,
    SizeError,
)
from liplab.game import (
    Concept,
    CorrelatedDistribution,
    GameOracle,
    MixedProfile,
    RegretReport,
    TensorGame,
    eval_payoffs,
    expected_payoff_mixed,
    is_equilibrium,
    measure_lipschitz,
    regret_correlated,
    regret_mixed,
    scale_game,
)
from liplab.hard_games import make_matching_pennies, rho, run_deterministic_adversary
from liplab.queries import DistQuerySpec, QueryLedger

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "Concept",
    "ContractError",
    "CorrelatedDistribution",
    "DistQuerySpec",
    "GameOracle",
    "InputError",
    "LPInfeasible",
    "LiplabError",
    "MixedProfile",
    "PreconditionError",
    "PromiseViolation",
    "QueryLedger",
    "RegretReport",
    "SizeError",
    "TensorGame",
    "eval_payoffs",
    "expected_payoff_mixed",
    "is_equilibrium",
    "make_matching_pennies",
    "measure_lipschitz",
    "regret_correlated",
    "regret_mixed",
    "rho",
    "run_deterministic_adversary",
    "scale_game",
]
