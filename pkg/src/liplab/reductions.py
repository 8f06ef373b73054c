"""Induced population games and the reductions built on them.

* :class:`PopulationGame`: every base player becomes a population whose
  members play against the *aggregate* behaviour of the other populations.
* :func:`simulate_population_distribution_query`: answers a distribution
  query of the population game with ``n * m`` distribution queries of the base.
* :func:`multi_lipschitz_population_sizes`: population sizes that turn a
  multi-Lipschitz game into a (Lambda/n)-Lipschitz one.
* :func:`build_consistent_game`: the completion of a noisy query log that
  agrees with every reported answer and with the true game elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from liplab.errors import ContractError, InputError
from liplab.game import (
    TOL,
    GameOracle,
    MixedProfile,
    as_profile,
    check_enumerable,
    deviation_payoffs,
    measure_influences,
)
from liplab.queries import (
    Adversary,
    DistQuerySpec,
    QueryLedger,
    QueryRecord,
    check_promise,
    query_distribution_adversarial,
    simulate_distribution_query,
    zero_adversary,
)


class PopulationGame(GameOracle):
    """``g_G(L_1, ..., L_n)``. Flat player ``offsets[i] + l`` is member l of population i."""

    def __init__(self, base: GameOracle, sizes: Sequence[int]):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) != base.n:
            raise InputError(f"need {base.n} population sizes, got {len(sizes)}")
        if any(s < 1 for s in sizes):
            raise InputError("population sizes must be >= 1")
        lam = None
        if base.declared_lambda is not None:
            lam = base.declared_lambda / min(sizes)
        super().__init__(sum(sizes), base.m, lam)
        self.base = base
        self.sizes = sizes
        self.offsets = tuple(int(x) for x in np.cumsum((0,) + sizes[:-1]))
        self.population = tuple(i for i, s in enumerate(sizes) for _ in range(s))

    def flat_index(self, i: int, ell: int) -> int:
        if not (0 <= i < self.base.n and 0 <= ell < self.sizes[i]):
            raise InputError("population member out of range")
        return self.offsets[i] + ell

    def member(self, v: int) -> tuple[int, int]:
        i = self.population[v]
        return i, v - self.offsets[i]

    def aggregate(self, a) -> np.ndarray:
        """Empirical action distribution of each population, shape ``(n, m)``."""
        agg = np.zeros((self.base.n, self.m))
        for v, j in enumerate(a):
            agg[self.population[v], j] += 1
        return agg / np.asarray(self.sizes, dtype=float)[:, None]

    def _payoffs(self, a):
        w = deviation_payoffs(self.base.tensor(), self.aggregate(a))
        return np.array([w[self.population[v], j] for v, j in enumerate(a)])

    def _build_tensor(self):
        big_n, m, n = self.n, self.m, self.base.n
        profiles = np.indices((m,) * big_n).reshape(big_n, -1).T
        pop = np.asarray(self.population)
        counts = np.zeros((profiles.shape[0], n, m), dtype=np.int64)
        for v in range(big_n):
            np.add.at(counts, (np.arange(profiles.shape[0]), pop[v], profiles[:, v]), 1)
        keys, inverse = np.unique(counts.reshape(len(profiles), -1), axis=0, return_inverse=True)
        inverse = inverse.ravel()
        sizes = np.asarray(self.sizes, dtype=float)[:, None]
        base_t = self.base.tensor()
        table = np.stack([deviation_payoffs(base_t, key.reshape(n, m) / sizes) for key in keys])
        # payoff of flat player v = table[profile's aggregate, population(v), own action]
        out = table[inverse[:, None], pop[None, :], profiles]
        return out.T.reshape((big_n,) + (m,) * big_n)


def induce_population_game(base: GameOracle, sizes) -> PopulationGame:
    """``sizes`` may be a single int (every population the same size)."""
    check_enumerable(base.n, base.m)
    if isinstance(sizes, (int, np.integer)):
        sizes = (int(sizes),) * base.n
    return PopulationGame(base, sizes)


def aggregate_profile(pop_game: PopulationGame, a) -> MixedProfile:
    a = as_profile(a, pop_game.n, pop_game.m)
    return MixedProfile(pop_game.aggregate(a))


def _aggregate_mixed(pop_game: PopulationGame, p: MixedProfile) -> np.ndarray:
    agg = np.zeros((pop_game.base.n, pop_game.m))
    for v in range(pop_game.n):
        agg[pop_game.population[v]] += p.dists[v]
    agg /= np.asarray(pop_game.sizes, dtype=float)[:, None]
    return agg / agg.sum(axis=1, keepdims=True)


def simulate_population_distribution_query(
    base_ledger: QueryLedger,
    pop_game: PopulationGame,
    p_prime: MixedProfile,
    spec: DistQuerySpec,
    adversary: Adversary = zero_adversary,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Answer a distribution query of the population game using exactly ``n * m``
    distribution queries of the base game: player i pure on j against the
    other populations' aggregates. Each member's payoff is the mixture of those
    answers under its own strategy.

    The base queries are (delta, gamma / max L)-queries when ``p_prime`` honours
    the (delta, gamma) promise. With ``rng`` the base queries are simulated by
    sampling; otherwise ``adversary`` answers them.
    """
    if not isinstance(p_prime, MixedProfile):
        p_prime = MixedProfile(p_prime)
    if (p_prime.n, p_prime.m) != (pop_game.n, pop_game.m):
        raise InputError("profile does not match the population game")
    check_promise(p_prime, spec.gamma)
    base = pop_game.base
    n, m = base.n, base.m
    agg = _aggregate_mixed(pop_game, p_prime)
    base_gamma = None if spec.gamma is None else spec.gamma / max(pop_game.sizes)
    base_spec = DistQuerySpec(spec.delta, base_gamma, spec.eta)
    answers = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            d = agg.copy()
            d[i] = 0.0
            d[i, j] = 1.0
            q = MixedProfile(d)
            if rng is None:
                u = query_distribution_adversarial(base_ledger, base, q, base_spec, adversary)
            else:
                u = simulate_distribution_query(base_ledger, base, q, base_spec, rng)
            answers[i, j] = u[i]
    return np.array([p_prime.dists[v] @ answers[pop_game.population[v]] for v in range(pop_game.n)])


# --------------------------------------------------------------------------
# multi-Lipschitz games


class MultiLipschitzGame:
    """A base game together with per-player influence bounds ``lambdas``."""

    def __init__(self, base: GameOracle, lambdas: Sequence[float]):
        lam = tuple(float(x) for x in lambdas)
        if len(lam) != base.n:
            raise InputError("need one lambda per player")
        if any(x < 0 or x > 1 for x in lam):
            raise InputError("each lambda must lie in [0, 1]")
        self.base = base
        self.lambdas = lam

    @property
    def total(self) -> float:
        return sum(self.lambdas)

    def verify(self) -> bool:
        """Exhaustively check that player k's switch never moves another payoff by more than lambda_k."""
        return bool(np.all(measure_influences(self.base) <= np.asarray(self.lambdas) + TOL))


def multi_lipschitz_population_sizes(lambdas: Sequence[float], total: float | None = None) -> tuple[int, ...]:
    """``L_i = ceil(max(n * lambda_i / Lambda, 1))``; the ceiling keeps sizes
    integral, so ``sum L_i <= 3n``."""
    lam = [float(x) for x in lambdas]
    big = sum(lam) if total is None else float(total)
    if big <= 0:
        raise InputError("Lambda must be positive")
    n = len(lam)
    return tuple(math.ceil(max(n * x / big, 1.0) - 1e-9) for x in lam)


# --------------------------------------------------------------------------
# consistent completion of a noisy query log


@dataclass(frozen=True)
class ConsistencyCertificate:
    delta: float
    envelope: float
    base_lambda: float | None
    lipschitz_claim: float | None
    valid: bool


class ConsistentGame(GameOracle):
    """Reported payoffs on queried profiles, true payoffs elsewhere."""

    def __init__(self, base: GameOracle, overrides: dict, certificate: ConsistencyCertificate):
        claim = certificate.lipschitz_claim
        super().__init__(base.n, base.m, None if claim is None else min(claim, 1.0))
        self.base = base
        self.overrides = overrides
        self.certificate = certificate

    def _payoffs(self, a):
        if a in self.overrides:
            return np.asarray(self.overrides[a])
        return self.base.payoffs(a)

    def _build_tensor(self):
        t = np.array(self.base.tensor())
        for a, u in self.overrides.items():
            t[(slice(None),) + a] = u
        return t


def build_consistent_game(
    base: GameOracle,
    query_log: Iterable,
    delta: float,
    base_lambda: float | None = None,
) -> ConsistentGame:
    """Completion of ``query_log`` (:class:`QueryRecord` or ``(profile, reported)``
    pairs) that agrees with the base everywhere else.

    When ``delta < base_lambda / 4`` the certificate claims the result is
    ``1.5 * base_lambda``-Lipschitz; otherwise the certificate is void.
    """
    overrides = {}
    envelope = 0.0
    for rec in query_log:
        a, rep = (rec.profile, rec.reported) if isinstance(rec, QueryRecord) else rec
        a = as_profile(a, base.n, base.m)
        rep = np.asarray(rep, dtype=float)
        if rep.shape != (base.n,):
            raise InputError(f"reported vector for {a} has the wrong length")
        gap = float(np.max(np.abs(rep - base.payoffs(a))))
        if gap > delta + TOL:
            raise ContractError(f"logged answer for {a} is {gap} from the truth (delta = {delta})")
        if a in overrides and not np.array_equal(overrides[a], rep):
            raise ContractError(f"profile {a} was answered inconsistently")
        overrides[a] = rep
        envelope = max(envelope, gap)
    lam = base.declared_lambda if base_lambda is None else base_lambda
    valid = lam is not None and delta < lam / 4
    cert = ConsistencyCertificate(delta, envelope, lam, 1.5 * lam if valid else None, valid)
    return ConsistentGame(base, overrides, cert)
