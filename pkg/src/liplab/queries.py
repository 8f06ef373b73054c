"""Charged query access to games.

Algorithms under test never hold a :class:`~liplab.game.GameOracle`; they get
an access handle (:class:`ProfileAccess`, :class:`DistributionAccess` or
:class:`SampledDistributionAccess`) whose only capability is a charged query.
Every answer is recorded on a :class:`QueryLedger`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from liplab.errors import BudgetExceeded, ContractError, InputError, PromiseViolation
from liplab.game import (
    TOL,
    GameOracle,
    MixedProfile,
    PureProfile,
    as_profile,
    expected_payoffs,
)


@dataclass(frozen=True)
class QueryRecord:
    profile: PureProfile
    reported: tuple[float, ...]


@dataclass(frozen=True)
class DistRecord:
    profile: MixedProfile
    reported: tuple[float, ...]


QueryLog = list[QueryRecord]


class QueryLedger:
    """Accounting for one algorithm run.

    ``profile_budget`` / ``dist_budget`` cap the number of queries of each kind;
    the query that would exceed a cap raises :class:`BudgetExceeded` and is not
    answered.
    """

    def __init__(self, profile_budget: int | None = None, dist_budget: int | None = None):
        self.profile_budget = profile_budget
        self.dist_budget = dist_budget
        self._profile_log: list[QueryRecord] = []
        self._dist_log: list[DistRecord] = []

    @property
    def profile_count(self) -> int:
        return len(self._profile_log)

    @property
    def dist_count(self) -> int:
        return len(self._dist_log)

    @property
    def log(self) -> tuple[QueryRecord, ...]:
        return tuple(self._profile_log)

    @property
    def dist_log(self) -> tuple[DistRecord, ...]:
        return tuple(self._dist_log)

    def _charge_profile(self, k: int = 1) -> None:
        if self.profile_budget is not None and self.profile_count + k > self.profile_budget:
            raise BudgetExceeded(
                f"profile budget {self.profile_budget} exhausted "
                f"({self.profile_count} used, {k} requested)"
            )

    def _charge_dist(self) -> None:
        if self.dist_budget is not None and self.dist_count >= self.dist_budget:
            raise BudgetExceeded(f"distribution budget {self.dist_budget} exhausted")

    def _record_profile(self, a: PureProfile, u: np.ndarray) -> None:
        self._profile_log.append(QueryRecord(a, tuple(float(x) for x in u)))

    def _record_dist(self, p: MixedProfile, u: np.ndarray) -> None:
        self._dist_log.append(DistRecord(p, tuple(float(x) for x in u)))

    def degenerate_dist_log(self) -> list[QueryRecord]:
        """Distribution queries of pure profiles, as (profile, reported) pairs."""
        return [QueryRecord(r.profile.as_pure(), r.reported) for r in self._dist_log if r.profile.is_pure()]

    def to_dict(self, one_based: bool = True) -> dict:
        shift = 1 if one_based else 0
        return {
            "profile_count": self.profile_count,
            "dist_count": self.dist_count,
            "log": [
                {"profile": [x + shift for x in r.profile], "reported": list(r.reported)}
                for r in self._profile_log
            ],
            "dist_log": [
                {"profile": r.profile.dists.tolist(), "reported": list(r.reported)}
                for r in self._dist_log
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class DistQuerySpec:
    """Parameters of a distribution query.

    ``gamma`` of None means a plain delta-distribution query with no support
    promise; ``eta`` is only used in sampling mode.
    """

    delta: float
    gamma: float | None = None
    eta: float = 0.05

    def __post_init__(self):
        if not (0 <= self.delta < 1):
            raise InputError(f"delta must lie in [0, 1), got {self.delta}")
        if self.gamma is not None and not (0 < self.gamma <= 1):
            raise InputError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not (0 < self.eta < 1):
            raise InputError(f"eta must lie in (0, 1), got {self.eta}")


# --------------------------------------------------------------------------
# perturbation adversaries: (true payoffs, delta, history) -> reported payoffs

Adversary = Callable[[np.ndarray, float, Sequence[DistRecord]], np.ndarray]


def zero_adversary(u, delta, history):
    return np.array(u, dtype=float)


def truncation_adversary(u, delta, history):
    return np.maximum(np.asarray(u, dtype=float) - delta, 0.0)


def rounding_adversary(u, delta, history):
    """Round to the grid of spacing delta (error at most delta / 2)."""
    u = np.asarray(u, dtype=float)
    if delta == 0:
        return u.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        r = np.clip(np.round(u / delta) * delta, 0.0, 1.0)
    # grid spacing below float resolution: keep the true value
    return np.where(np.isfinite(r) & (np.abs(r - u) <= delta), r, u)


def alternating_adversary(u, delta, history):
    """Shift by +delta on even-numbered queries and -delta on odd ones."""
    sign = 1.0 if len(history) % 2 == 0 else -1.0
    return np.clip(np.asarray(u, dtype=float) + sign * delta, 0.0, 1.0)


ADVERSARIES: dict[str, Adversary] = {
    "zero": zero_adversary,
    "truncation": truncation_adversary,
    "rounding": rounding_adversary,
    "alternating": alternating_adversary,
}


def get_adversary(name: str) -> Adversary:
    try:
        return ADVERSARIES[name]
    except KeyError:
        raise InputError(f"unknown adversary {name!r}; choose from {sorted(ADVERSARIES)}") from None


# --------------------------------------------------------------------------
# queries


def query_profile(ledger: QueryLedger, game: GameOracle, a: Sequence[int]) -> np.ndarray:
    """Profile query: exact payoffs, charged and logged."""
    a = as_profile(a, game.n, game.m)
    ledger._charge_profile()
    u = game.payoffs(a)
    ledger._record_profile(a, u)
    return u.copy()


def check_promise(p: MixedProfile, gamma: float | None) -> None:
    if gamma is None:
        return
    low = p.min_support_prob()
    if low < gamma - TOL:
        raise PromiseViolation(f"a supported action has probability {low} < gamma = {gamma}")


def _as_mixed(game: GameOracle, p) -> MixedProfile:
    if not isinstance(p, MixedProfile):
        p = MixedProfile(p)
    if (p.n, p.m) != (game.n, game.m):
        raise InputError("profile does not match the game's dimensions")
    return p


def query_distribution_adversarial(
    ledger: QueryLedger,
    game: GameOracle,
    p: MixedProfile,
    spec: DistQuerySpec,
    adversary: Adversary = zero_adversary,
) -> np.ndarray:
    """delta-distribution query answered by a deterministic perturbation adversary."""
    p = _as_mixed(game, p)
    check_promise(p, spec.gamma)
    ledger._charge_dist()
    u = expected_payoffs(game, p)
    reported = np.asarray(adversary(u, spec.delta, ledger.dist_log), dtype=float)
    if reported.shape != u.shape:
        raise ContractError("adversary returned a vector of the wrong length")
    if np.max(np.abs(reported - u)) > spec.delta + TOL:
        raise ContractError(f"adversary left the delta = {spec.delta} envelope")
    if np.any(reported < 0) or np.any(reported > 1):
        raise ContractError("adversary reported a payoff outside [0, 1]")
    ledger._record_dist(p, reported)
    return reported.copy()


def sample_count(n: int, delta: float, gamma: float, eta: float, log: Callable[[float], float] = math.log) -> int:
    """Profile queries needed to simulate one (delta, gamma)-distribution query
    with failure probability eta: ``max{log(8n/eta)/(gamma delta^2), 8 log(4n/eta)/gamma}``."""
    if delta <= 0:
        raise InputError("sampling needs delta > 0")
    if not (0 < gamma <= 1) or not (0 < eta < 1):
        raise InputError("need 0 < gamma <= 1 and 0 < eta < 1")
    t = max(log(8 * n / eta) / (gamma * delta**2), 8 * log(4 * n / eta) / gamma)
    return math.ceil(t)


def sample_count_simple(
    n: int, delta: float, gamma: float, eta: float, q: int = 1, log: Callable[[float], float] = math.log
) -> int:
    """Cruder bound for simulating q queries at once: ``8q/(gamma^2 delta^2) log^2(8nq/eta)``."""
    if delta <= 0:
        raise InputError("sampling needs delta > 0")
    return math.ceil(8 * q / (gamma**2 * delta**2) * log(8 * n * q / eta) ** 2)


def simulate_distribution_query(
    ledger: QueryLedger,
    game: GameOracle,
    p: MixedProfile,
    spec: DistQuerySpec,
    rng: np.random.Generator,
    log: Callable[[float], float] = math.log,
) -> np.ndarray:
    """Answer a (delta, gamma)-distribution query by averaging T sampled profile
    queries; the answer is within delta of the truth with probability >= 1 - eta."""
    p = _as_mixed(game, p)
    gamma = 1.0 if spec.gamma is None else spec.gamma
    check_promise(p, gamma)
    t = sample_count(game.n, spec.delta, gamma, spec.eta, log)
    ledger._charge_profile(t)
    draws = np.stack([rng.choice(game.m, size=t, p=row) for row in p.dists], axis=1)
    total = np.zeros(game.n)
    for row in draws:
        total += query_profile(ledger, game, row)
    return np.clip(total / t, 0.0, 1.0)


# --------------------------------------------------------------------------
# access handles handed to algorithms


class ProfileAccess:
    """What a profile-query algorithm sees: dimensions and a charged query."""

    def __init__(self, game: GameOracle, ledger: QueryLedger | None = None):
        self._game = game
        self.ledger = QueryLedger() if ledger is None else ledger
        self.n, self.m = game.n, game.m

    def query(self, a: Sequence[int]) -> np.ndarray:
        return query_profile(self.ledger, self._game, a)


class DistributionAccess:
    """delta-distribution queries answered by a perturbation adversary."""

    def __init__(self, game, spec: DistQuerySpec, adversary: Adversary = zero_adversary, ledger=None):
        self._game = game
        self.spec = spec
        self._adversary = adversary
        self.ledger = QueryLedger() if ledger is None else ledger
        self.n, self.m = game.n, game.m

    def query(self, p) -> np.ndarray:
        return query_distribution_adversarial(self.ledger, self._game, p, self.spec, self._adversary)


class SampledDistributionAccess:
    """(delta, gamma)-distribution queries simulated by profile sampling."""

    def __init__(self, game, spec: DistQuerySpec, rng: np.random.Generator, ledger=None, log=math.log):
        self._game = game
        self.spec = spec
        self._rng = rng
        self._log = log
        self.ledger = QueryLedger() if ledger is None else ledger
        self.n, self.m = game.n, game.m

    def query(self, p) -> np.ndarray:
        return simulate_distribution_query(self.ledger, self._game, p, self.spec, self._rng, self._log)


class _DegenerateProfileView:
    """Presents a distribution-query handle as a profile-query handle."""

    def __init__(self, dist_access):
        self._access = dist_access
        self.n, self.m = dist_access.n, dist_access.m
        self.ledger = dist_access.ledger

    def query(self, a):
        a = as_profile(a, self.n, self.m)
        return self._access.query(MixedProfile.from_pure(a, self.m))


def wrap_profile_algorithm_as_distribution(algorithm):
    """Turn a profile-query algorithm into one that issues a distribution query
    of the degenerate mixed profile in place of each profile query."""

    def wrapped(dist_access):
        return algorithm(_DegenerateProfileView(dist_access))

    wrapped.__name__ = f"distributional_{getattr(algorithm, '__name__', 'algorithm')}"
    wrapped.__wrapped__ = algorithm
    return wrapped
