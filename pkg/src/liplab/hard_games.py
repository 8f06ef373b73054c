"""Generalized Matching Pennies, the single-profile probability cap, and the
adversary that defeats deterministic correlated-equilibrium finders.

The harness runs a deterministic algorithm on ``G_{k,m}``, then builds a game
``G'`` that agrees with ``G_{k,m}`` on every queried profile but pays player 0
for a rarely played action everywhere else. The algorithm cannot tell the two
games apart, and its output has large regret in ``G'``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from liplab.errors import InputError, PreconditionError
from liplab.game import (
    TOL,
    CorrelatedDistribution,
    GameOracle,
    PureProfile,
    as_profile,
    regret_correlated,
    scale_game,
)
from liplab.queries import ProfileAccess, QueryLedger, QueryRecord


class MatchingPennies(GameOracle):
    """``G_{k,m}``: 2k players in k independent pairs. In pair (2i, 2i+1)
    the first player earns 1 for matching, the second earns 1 for mismatching."""

    def __init__(self, k: int, m: int):
        if int(k) != k or k < 1:
            raise InputError(f"k must be a positive integer, got {k}")
        super().__init__(2 * k, m, declared_lambda=1.0)
        self.k = int(k)

    def _payoffs(self, a):
        u = np.empty(self.n)
        match = np.asarray(a[0::2]) == np.asarray(a[1::2])
        u[0::2] = match
        u[1::2] = ~match
        return u

    def _build_tensor(self):
        n, m = self.n, self.m
        grids = np.indices((m,) * n)
        t = np.empty((n,) + (m,) * n)
        for i in range(self.k):
            match = grids[2 * i] == grids[2 * i + 1]
            t[2 * i] = match
            t[2 * i + 1] = ~match
        return t


def make_matching_pennies(k: int, m: int) -> MatchingPennies:
    return MatchingPennies(k, m)


def rho(alpha, m: int):
    """Single-pair probability cap ``((2 - alpha) m - 1) / (2m)``.

    Exact when ``alpha`` is a :class:`~fractions.Fraction`.
    """
    if m < 2:
        raise InputError("m must be at least 2")
    if not (0 < alpha < Fraction(m - 1, m)):
        raise InputError(f"alpha must lie in (0, (m-1)/m), got {alpha}")
    return ((2 - alpha) * m - 1) / (2 * m)


def target_epsilon(alpha, m: int):
    return Fraction(m - 1, m) - alpha if isinstance(alpha, Fraction) else (m - 1) / m - alpha


def query_bound(alpha, m: int, n: int) -> float:
    """Largest query count the lower bound covers: ``(alpha/2) * rho^(-n/2)``."""
    return float(alpha) / 2 * float(rho(alpha, m)) ** (-n / 2)


@dataclass(frozen=True)
class Lemma3Check:
    holds: bool
    max_prob: float
    argmax: PureProfile
    cap: float


def check_lemma3_bound(x: CorrelatedDistribution, k: int, m: int, alpha) -> Lemma3Check:
    """Check that every profile has probability below ``rho^(n/2)`` in an
    ((m-1)/m - alpha)-ACE of ``G_{k,m}``.

    Raises :class:`PreconditionError` if ``x`` is not such an equilibrium.
    """
    game = make_matching_pennies(k, m)
    eps = float(target_epsilon(alpha, m))
    report = regret_correlated(game, x)
    if report.max_regret > eps + TOL:
        raise PreconditionError(
            f"distribution is not a {eps}-ACE of G_{{{k},{m}}} (max regret {report.max_regret})"
        )
    cap = float(rho(alpha, m)) ** k
    prob, a = x.max_prob()
    return Lemma3Check(prob < cap, prob, a, cap)


class PerturbedMatchingPennies(GameOracle):
    """``G'_{k,m}``: equals ``G_{k,m}`` on logged profiles; elsewhere player 0
    gets 1 iff it plays ``j_star`` and every other player gets 0."""

    def __init__(self, logged: Iterable[Sequence[int]], k: int, m: int, j_star: int):
        super().__init__(2 * k, m, declared_lambda=None)
        if not 0 <= j_star < m:
            raise InputError("j_star out of range")
        self.k = k
        self.j_star = j_star
        self.base = make_matching_pennies(k, m)
        self.logged = frozenset(as_profile(a, self.n, m) for a in logged)

    def _payoffs(self, a):
        if a in self.logged:
            return self.base.payoffs(a)
        u = np.zeros(self.n)
        u[0] = 1.0 if a[0] == self.j_star else 0.0
        return u


def build_perturbed_game(query_log: Iterable, k: int, m: int, j_star: int) -> PerturbedMatchingPennies:
    """``query_log`` holds :class:`QueryRecord` entries or bare profiles."""
    profiles = [r.profile if isinstance(r, QueryRecord) else r for r in query_log]
    return PerturbedMatchingPennies(profiles, k, m, j_star)


# --------------------------------------------------------------------------
# adversary harness

Algorithm = Callable[[ProfileAccess], CorrelatedDistribution]


@dataclass
class AdversaryOutcome:
    algorithm: str
    k: int
    m: int
    n: int
    alpha: float
    scale: float
    epsilon: float
    rho: float
    bound_q: float
    q: int
    within_budget: bool
    algorithm_output: CorrelatedDistribution
    query_log: tuple[QueryRecord, ...]
    base_max_regret: float
    is_ace_on_base: bool
    j_star: int
    j_star_marginal: float
    perturbed_game: GameOracle = field(repr=False)
    u_phi: float
    u_own: float
    regret_achieved: float
    max_profile_prob: float
    lower_u_phi: float
    upper_u_own: float
    utility_bounds_hold: bool
    utility_bounds_strict: bool
    indistinguishable: bool
    verdict: str

    def to_dict(self) -> dict:
        """JSON-ready view with 1-based action labels."""
        return _plain({
            "algorithm": self.algorithm,
            "k": self.k,
            "m": self.m,
            "n": self.n,
            "alpha": self.alpha,
            "scale": self.scale,
            "epsilon": self.epsilon,
            "rho": self.rho,
            "bound_q": self.bound_q,
            "q": self.q,
            "within_budget": self.within_budget,
            "algorithm_output": [
                {"profile": [x + 1 for x in a], "prob": p} for a, p in self.algorithm_output.support.items()
            ],
            "query_log": [
                {"profile": [x + 1 for x in r.profile], "reported": list(r.reported)} for r in self.query_log
            ],
            "base_max_regret": self.base_max_regret,
            "is_ace_on_base": self.is_ace_on_base,
            "chosen_action": self.j_star + 1,
            "chosen_action_marginal": self.j_star_marginal,
            "deviation": [self.j_star + 1] * self.m,
            "u_phi": self.u_phi,
            "u_own": self.u_own,
            "regret_achieved": self.regret_achieved,
            "max_profile_prob": self.max_profile_prob,
            "lower_u_phi": self.lower_u_phi,
            "upper_u_own": self.upper_u_own,
            "utility_bounds_hold": self.utility_bounds_hold,
            "utility_bounds_strict": self.utility_bounds_strict,
            "indistinguishable": self.indistinguishable,
            "verdict": self.verdict,
        })


def _plain(obj):
    """Replace numpy scalars by Python ones, recursively."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _run(algorithm: Algorithm, game: GameOracle):
    access = ProfileAccess(game, QueryLedger())
    out = algorithm(access)
    if not isinstance(out, CorrelatedDistribution) or (out.n, out.m) != (game.n, game.m):
        raise InputError("algorithm must return a CorrelatedDistribution for the input game")
    return out, access.ledger


def run_deterministic_adversary(algorithm: Algorithm, k: int, m: int, alpha, scale: float = 1.0) -> AdversaryOutcome:
    """Run ``algorithm`` against ``G_{k,m}`` (optionally scaled by ``scale``) and
    against the perturbed game built from its own query log.

    Verdicts: ``failed-on-base`` (output is not an eps-ACE of the input),
    ``hypothesis-unmet`` (query count not below the bound), ``lower-bound-confirmed``
    (deviation to the low-marginal action has regret above eps in ``G'``), or
    ``lower-bound-violated``.
    """
    if not (0 < scale <= 1):
        raise InputError("scale must lie in (0, 1]")
    n = 2 * k
    r = float(rho(alpha, m))
    eps = scale * float(target_epsilon(alpha, m))
    bound_q = query_bound(alpha, m, n)
    mp = make_matching_pennies(k, m)
    game = mp if scale == 1 else scale_game(mp, scale)

    x, ledger = _run(algorithm, game)
    q = ledger.profile_count
    base_report = regret_correlated(game, x)
    is_ace = base_report.max_regret <= eps + TOL

    marg = x.marginal(0)
    j_star = next(j for j in range(m) if marg[j] <= 1.0 / m + TOL)
    perturbed = build_perturbed_game(ledger.log, k, m, j_star)
    pgame = perturbed if scale == 1 else scale_game(perturbed, scale)

    u_phi = 0.0
    u_own = 0.0
    for a, prob in x.support.items():
        u_own += prob * pgame.payoffs(a)[0]
        u_phi += prob * pgame.payoffs((j_star,) + a[1:])[0]
    regret = u_phi - u_own

    cap = r ** (n / 2)
    lower = scale * (1 - q * cap)
    upper = scale * (1.0 / m + q * cap)
    c_holds = u_phi >= lower - TOL and u_own <= upper + TOL
    c_strict = u_phi > lower and u_own < upper

    x_again, ledger_again = _run(algorithm, pgame)
    indist = (
        [rec.profile for rec in ledger_again.log] == [rec.profile for rec in ledger.log]
        and [rec.reported for rec in ledger_again.log] == [rec.reported for rec in ledger.log]
        and x_again == x
    )

    within = q < bound_q
    if not is_ace:
        verdict = "failed-on-base"
    elif not within:
        verdict = "hypothesis-unmet"
    elif regret > eps:
        verdict = "lower-bound-confirmed"
    else:
        verdict = "lower-bound-violated"

    return AdversaryOutcome(
        algorithm=getattr(algorithm, "__name__", repr(algorithm)),
        k=k,
        m=m,
        n=n,
        alpha=float(alpha),
        scale=float(scale),
        epsilon=eps,
        rho=r,
        bound_q=bound_q,
        q=q,
        within_budget=within,
        algorithm_output=x,
        query_log=ledger.log,
        base_max_regret=base_report.max_regret,
        is_ace_on_base=is_ace,
        j_star=j_star,
        j_star_marginal=float(marg[j_star]),
        perturbed_game=pgame,
        u_phi=u_phi,
        u_own=u_own,
        regret_achieved=regret,
        max_profile_prob=x.max_prob()[0],
        lower_u_phi=lower,
        upper_u_own=upper,
        utility_bounds_hold=c_holds,
        utility_bounds_strict=c_strict,
        indistinguishable=indist,
        verdict=verdict,
    )


# --------------------------------------------------------------------------
# baseline deterministic algorithms (all take a ProfileAccess)


def uniform_output(access) -> CorrelatedDistribution:
    """No queries; uniform over all profiles."""
    return CorrelatedDistribution.uniform(access.n, access.m)


def point_mass_output(access) -> CorrelatedDistribution:
    """No queries; everyone plays action 0."""
    return CorrelatedDistribution.point_mass((0,) * access.n, access.m)


def _pairwise(access, pair_support) -> CorrelatedDistribution:
    k = access.n // 2
    sup = {}
    w = 1.0 / len(pair_support) ** k
    for combo in itertools.product(pair_support, repeat=k):
        a = tuple(x for pair in combo for x in pair)
        if len(a) < access.n:
            a += (0,)
        sup[a] = w
    return CorrelatedDistribution(access.n, access.m, sup)


def diagonal_output(access) -> CorrelatedDistribution:
    """No queries; each consecutive pair plays a uniformly random matched action."""
    return _pairwise(access, [(j, j) for j in range(access.m)])


def cyclic_shift_output(access) -> CorrelatedDistribution:
    """No queries; each pair plays (j, j+1 mod m) for uniformly random j."""
    return _pairwise(access, [(j, (j + 1) % access.m) for j in range(access.m)])


def make_scan_then_empirical(budget: int) -> Algorithm:
    """Query the first ``budget`` profiles in lexicographic order and output the
    uniform distribution over the queried profiles of least maximum one-shot gain
    (gain estimated only from queried neighbours)."""

    def scan_then_empirical(access):
        seen = {}
        for a in itertools.islice(itertools.product(range(access.m), repeat=access.n), budget):
            seen[a] = access.query(a)
        if not seen:
            return uniform_output(access)
        score = {}
        for a, u in seen.items():
            gain = 0.0
            for i in range(access.n):
                for j in range(access.m):
                    b = a[:i] + (j,) + a[i + 1 :]
                    if b in seen:
                        gain = max(gain, seen[b][i] - u[i])
            score[a] = gain
        best = min(score.values())
        chosen = [a for a in seen if score[a] == best]
        return CorrelatedDistribution(access.n, access.m, {a: 1.0 / len(chosen) for a in chosen})

    scan_then_empirical.__name__ = f"scan_then_empirical[{budget}]"
    return scan_then_empirical


def pairwise_probe(access) -> CorrelatedDistribution:
    """Learn each pair's local bimatrix (others fixed at action 0) with ``m^2``
    queries per pair, solve it for the welfare-maximizing exact correlated
    equilibrium, and output the product over pairs."""
    from liplab.game import TensorGame
    from liplab.solvers import max_welfare_ce

    k = access.n // 2
    factors = []
    for i in range(k):
        t = np.zeros((2, access.m, access.m))
        for j1, j2 in itertools.product(range(access.m), repeat=2):
            a = [0] * access.n
            a[2 * i], a[2 * i + 1] = j1, j2
            u = access.query(a)
            t[0, j1, j2], t[1, j1, j2] = u[2 * i], u[2 * i + 1]
        factors.append(max_welfare_ce(TensorGame(t)))
    sup = {(): 1.0}
    for f in factors:
        sup = {a + b: p * pb for a, p in sup.items() for b, pb in f.support.items()}
    return CorrelatedDistribution(access.n, access.m, sup)


BASELINES: dict[str, Algorithm] = {
    "uniform-output": uniform_output,
    "point-mass": point_mass_output,
    "diagonal": diagonal_output,
    "cyclic-shift": cyclic_shift_output,
    "pairwise-probe": pairwise_probe,
}


def get_baseline(name: str, budget: int | None = None) -> Algorithm:
    if name == "scan-then-empirical":
        return make_scan_then_empirical(16 if budget is None else budget)
    try:
        return BASELINES[name]
    except KeyError:
        names = sorted(BASELINES) + ["scan-then-empirical"]
        raise InputError(f"unknown baseline {name!r}; choose from {names}") from None
