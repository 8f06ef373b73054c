"""Baseline equilibrium finders, brute-force certifiers, the correlated
equilibrium LP, and seeded generators of Lipschitz games."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from liplab.errors import InputError, LPInfeasible
from liplab.game import (
    TOL,
    CorrelatedDistribution,
    GameOracle,
    MixedProfile,
    PureProfile,
    TensorGame,
    as_profile,
    check_enumerable,
)
from liplab.queries import DistQuerySpec, QueryLedger, query_distribution_adversarial
from liplab.simplex import LinearProgram, LPResult, solve_lp

LP_MAX_PROFILES = 2**12

__all__ = [
    "GeneratorConfig",
    "LinearProgram",
    "ace_linear_program",
    "all_pure_equilibria",
    "best_response_to_uniform",
    "brute_force_pure",
    "brute_force_pure_charged",
    "max_profile_prob_ace",
    "max_welfare_ce",
    "min_pure_epsilon",
    "pure_regret_tensor",
    "random_lipschitz_game",
    "random_multi_lipschitz_game",
    "solve_lp",
    "uniform_profile",
]


def uniform_profile(n: int, m: int) -> MixedProfile:
    return MixedProfile.uniform(n, m)


def best_response_to_uniform(ledger: QueryLedger, game: GameOracle) -> PureProfile:
    """Each player best-responds to everyone else mixing uniformly.

    Charges exactly ``2n`` exact distribution queries (binary-action games only).
    """
    if game.m != 2:
        raise InputError("best_response_to_uniform needs a binary-action game")
    spec = DistQuerySpec(delta=0.0)
    out = []
    for i in range(game.n):
        vals = []
        for j in range(2):
            d = np.full((game.n, 2), 0.5)
            d[i] = 0.0
            d[i, j] = 1.0
            vals.append(query_distribution_adversarial(ledger, game, MixedProfile(d), spec)[i])
        out.append(0 if vals[0] >= vals[1] else 1)
    return tuple(out)


# --------------------------------------------------------------------------
# exhaustive pure-equilibrium search


def pure_regret_tensor(game: GameOracle) -> np.ndarray:
    """Max-over-players regret of every pure profile, shape ``(m,) * n``."""
    t = game.tensor()
    worst = np.zeros(t.shape[1:])
    for i in range(game.n):
        best = t[i].max(axis=i, keepdims=True)
        worst = np.maximum(worst, best - t[i])
    return worst


def _unravel(flat: int, n: int, m: int) -> PureProfile:
    return tuple(int(x) for x in np.unravel_index(flat, (m,) * n))


def brute_force_pure(game: GameOracle, eps: float) -> PureProfile | None:
    """First eps-PNE in lexicographic order, or None if there is none."""
    hits = np.flatnonzero(pure_regret_tensor(game).ravel() <= eps + TOL)
    return _unravel(int(hits[0]), game.n, game.m) if hits.size else None


def all_pure_equilibria(game: GameOracle, eps: float) -> list[PureProfile]:
    hits = np.flatnonzero(pure_regret_tensor(game).ravel() <= eps + TOL)
    return [_unravel(int(h), game.n, game.m) for h in hits]


def min_pure_epsilon(game: GameOracle) -> tuple[float, PureProfile]:
    """Smallest eps for which an eps-PNE exists, and a profile attaining it."""
    r = pure_regret_tensor(game).ravel()
    k = int(r.argmin())
    return float(r[k]), _unravel(k, game.n, game.m)


def brute_force_pure_charged(access, eps: float) -> PureProfile | None:
    """Like :func:`brute_force_pure` but learns the game through ``m^n`` charged
    profile queries."""
    check_enumerable(access.n, access.m)
    t = np.empty((access.n,) + (access.m,) * access.n)
    for a in itertools.product(range(access.m), repeat=access.n):
        t[(slice(None),) + a] = access.query(a)
    return brute_force_pure(TensorGame(t), eps)


# --------------------------------------------------------------------------
# correlated-equilibrium LP


def _exact(v):
    return v if isinstance(v, Fraction) else Fraction(v)


def ace_linear_program(
    game: GameOracle,
    eps,
    objective: np.ndarray,
    fixed: Mapping[Sequence[int], object] | None = None,
) -> LinearProgram:
    """eps-ACE polytope in epigraph form.

    Variables are ``X(a)`` for every profile (lexicographic order) followed by
    ``t[i, j]`` for every player and action::

        t[i, j] >= sum_{a: a_i = j} X(a) (u_i(j', a_{-i}) - u_i(a))   for all j' != j
        sum_j t[i, j] <= eps,   sum_a X(a) = 1,   X, t >= 0

    ``objective`` is a weight per profile to maximize; ``fixed`` pins profile
    probabilities with extra equalities.
    """
    n, m = game.n, game.m
    check_enumerable(n, m, LP_MAX_PROFILES)
    if eps < 0:
        raise InputError("eps must be non-negative")
    t = game.tensor()
    size = m**n
    nv = size + n * m
    grids = np.indices((m,) * n)
    rows, rhs = [], []
    for i in range(n):
        for j in range(m):
            mask = grids[i] == j
            for jp in range(m):
                if jp == j:
                    continue
                shifted = np.expand_dims(np.take(t[i], jp, axis=i), i)
                row = np.zeros(nv, dtype=object)
                row[:size] = [_exact(v) for v in np.where(mask, shifted - t[i], 0.0).ravel()]
                row[size + i * m + j] = Fraction(-1)
                rows.append(row)
                rhs.append(Fraction(0))
        row = np.zeros(nv, dtype=object)
        row[size + i * m : size + (i + 1) * m] = Fraction(1)
        rows.append(row)
        rhs.append(_exact(eps))
    eq_rows, eq_rhs = [], []
    row = np.zeros(nv, dtype=object)
    row[:size] = Fraction(1)
    eq_rows.append(row)
    eq_rhs.append(Fraction(1))
    for a, v in (fixed or {}).items():
        a = as_profile(a, n, m)
        row = np.zeros(nv, dtype=object)
        row[np.ravel_multi_index(a, (m,) * n)] = Fraction(1)
        eq_rows.append(row)
        eq_rhs.append(_exact(v))
    c = np.zeros(nv, dtype=object)
    c[:size] = [_exact(v) for v in np.asarray(objective, dtype=float).ravel()]
    return LinearProgram(c, np.array(rows), np.array(rhs), np.array(eq_rows), np.array(eq_rhs))


@dataclass(frozen=True)
class ACEResult:
    value: object  # Fraction when solved exactly
    witness: CorrelatedDistribution
    exact: bool
    raw: LPResult


def _solve_ace(game, lp, method) -> ACEResult:
    res = solve_lp(lp, method)
    if res.status != "optimal":
        raise LPInfeasible(f"eps-ACE linear program is {res.status}")
    size = game.m**game.n
    x = np.array([float(v) for v in res.x[:size]]).reshape((game.m,) * game.n)
    x = np.clip(x, 0.0, None)
    witness = CorrelatedDistribution.from_dense(x / x.sum())
    return ACEResult(res.value, witness, res.exact, res)


def max_profile_prob_ace(
    game: GameOracle,
    eps,
    target: Sequence[int],
    fixed: Mapping[Sequence[int], object] | None = None,
    method: str = "auto",
) -> ACEResult:
    """Largest probability any eps-ACE of ``game`` can put on ``target``.

    Raises :class:`LPInfeasible` only when ``fixed`` makes the polytope empty.
    """
    target = as_profile(target, game.n, game.m)
    obj = np.zeros((game.m,) * game.n)
    obj[target] = 1.0
    return _solve_ace(game, ace_linear_program(game, eps, obj, fixed), method)


def max_welfare_ce(game: GameOracle, eps=0, method: str = "auto") -> CorrelatedDistribution:
    """An eps-ACE maximizing total expected payoff."""
    obj = game.tensor().sum(axis=0)
    return _solve_ace(game, ace_linear_program(game, eps, obj), method).witness


# --------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    m: int
    lam: float
    seed: int

    def __post_init__(self):
        if self.n < 1 or self.m < 2:
            raise InputError("need n >= 1 and m >= 2")
        if not (0 < self.lam <= 1):
            raise InputError("lambda must lie in (0, 1]")


def random_lipschitz_game(config: GeneratorConfig) -> TensorGame:
    """Pairwise-interaction game ``u_i(a) = mean_{i' != i} h[i, i'](a_i, a_i')`` with
    each ``h`` uniform on ``[0, min(1, (n-1) lambda)]``; lambda-Lipschitz by construction."""
    n, m = config.n, config.m
    rng = np.random.default_rng(config.seed)
    if n == 1:
        return TensorGame(rng.uniform(0.0, 1.0, size=(1, m)), declared_lambda=config.lam)
    check_enumerable(n, m)
    hi = min(1.0, (n - 1) * config.lam)
    h = rng.uniform(0.0, hi, size=(n, n, m, m))
    t = np.zeros((n,) + (m,) * n)
    for i in range(n):
        for k in range(n):
            if k == i:
                continue
            shape = [1] * n
            shape[i] = m
            shape[k] = m
            block = h[i, k] if i < k else h[i, k].T
            t[i] += block.reshape(shape)
        t[i] /= n - 1
    return TensorGame(np.clip(t, 0.0, 1.0), declared_lambda=config.lam)


def random_multi_lipschitz_game(lambdas: Sequence[float], m: int, seed: int) -> TensorGame:
    """Game in which player k's switch moves any other payoff by at most ``lambdas[k]``.

    ``u_i(a) = (1 - s_i) b_i(a_i) + sum_{k != i} w[i, k] h[i, k](a_i, a_k)`` with
    ``w[i, k] = lambdas[k] * min(1, 1 / sum_{k != i} lambdas[k])`` and ``s_i = sum_k w[i, k]``.
    """
    lam = np.asarray(lambdas, dtype=float)
    n = len(lam)
    if np.any(lam < 0) or np.any(lam > 1):
        raise InputError("each lambda must lie in [0, 1]")
    check_enumerable(n, m)
    rng = np.random.default_rng(seed)
    b = rng.uniform(0.0, 1.0, size=(n, m))
    h = rng.uniform(0.0, 1.0, size=(n, n, m, m))
    t = np.zeros((n,) + (m,) * n)
    for i in range(n):
        others = lam.sum() - lam[i]
        scale = 1.0 if others <= 1 else 1.0 / others
        w = lam * scale
        w[i] = 0.0
        shape = [1] * n
        shape[i] = m
        t[i] += ((1.0 - w.sum()) * b[i]).reshape(shape)
        for k in range(n):
            if k == i or w[k] == 0:
                continue
            shape = [1] * n
            shape[i] = m
            shape[k] = m
            block = h[i, k] if i < k else h[i, k].T
            t[i] += w[k] * block.reshape(shape)
    return TensorGame(np.clip(t, 0.0, 1.0))

