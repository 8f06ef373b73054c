"""Game representations, exact payoff and regret evaluation, equilibrium
predicates and Lipschitz-constant measurement.

Actions are 0-based in the Python API (action ``j`` here is action ``j + 1``
in the usual 1-based notation); the JSON file formats in :mod:`liplab.formats`
use 1-based labels.
"""

from __future__ import annotations

import enum
import itertools
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from liplab.errors import ContractError, InputError, SizeError

TOL = 1e-12
DEFAULT_MAX_ENUM = 2**24

PureProfile = tuple[int, ...]
DeviationMap = tuple[int, ...]


def max_enum() -> int:
    """Largest number of pure profiles an operation may enumerate.

    ``LIPLAB_MAX_ENUM`` overrides the default of 2**24.
    """
    raw = os.environ.get("LIPLAB_MAX_ENUM")
    if raw is None:
        return DEFAULT_MAX_ENUM
    try:
        value = int(raw)
    except ValueError as exc:
        raise InputError(f"LIPLAB_MAX_ENUM must be an integer, got {raw!r}") from exc
    if value < 1:
        raise InputError("LIPLAB_MAX_ENUM must be positive")
    return value


def check_enumerable(n: int, m: int, limit: int | None = None) -> None:
    limit = max_enum() if limit is None else limit
    if m**n > limit:
        raise SizeError(f"{m}^{n} pure profiles exceed the enumeration limit {limit}")


class Concept(str, enum.Enum):
    PNE = "PNE"
    WSNE = "WSNE"
    ANE = "ANE"
    ACE = "ACE"


def as_profile(a: Iterable[int], n: int, m: int) -> PureProfile:
    """Validate ``a`` as a pure profile for an (n, m) game."""
    try:
        prof = tuple(int(x) for x in a)
    except (TypeError, ValueError) as exc:
        raise InputError(f"not a pure profile: {a!r}") from exc
    if len(prof) != n:
        raise InputError(f"profile has {len(prof)} entries, expected {n}")
    if any(x < 0 or x >= m for x in prof):
        raise InputError(f"profile {prof} has an action outside [0, {m})")
    return prof


def all_profiles(n: int, m: int) -> Iterable[PureProfile]:
    """All pure profiles in lexicographic order (player 0 most significant)."""
    return itertools.product(range(m), repeat=n)


# --------------------------------------------------------------------------
# strategy profiles


@dataclass(frozen=True, eq=False)
class MixedProfile:
    """Independent per-player distributions, shape ``(n, m)``."""

    dists: np.ndarray

    def __post_init__(self):
        d = np.array(self.dists, dtype=float)
        if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 2:
            raise InputError(f"mixed profile must have shape (n, m>=2), got {d.shape}")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise InputError("mixed profile has negative or non-finite entries")
        if np.any(np.abs(d.sum(axis=1) - 1.0) > TOL):
            raise InputError("each player's distribution must sum to 1")
        d.setflags(write=False)
        object.__setattr__(self, "dists", d)

    @property
    def n(self) -> int:
        return self.dists.shape[0]

    @property
    def m(self) -> int:
        return self.dists.shape[1]

    @classmethod
    def from_pure(cls, a: Sequence[int], m: int) -> MixedProfile:
        d = np.zeros((len(a), m))
        d[np.arange(len(a)), list(a)] = 1.0
        return cls(d)

    @classmethod
    def uniform(cls, n: int, m: int) -> MixedProfile:
        return cls(np.full((n, m), 1.0 / m))

    @classmethod
    def from_binary(cls, p: Sequence[float]) -> MixedProfile:
        """Binary-action profile from the probabilities of playing the first action."""
        p = np.asarray(p, dtype=float)
        return cls(np.stack([p, 1.0 - p], axis=1))

    @property
    def binary(self) -> np.ndarray:
        """Probability that each player plays the first action (binary games only)."""
        if self.m != 2:
            raise InputError("binary view needs m == 2")
        return self.dists[:, 0].copy()

    def support(self, i: int) -> list[int]:
        return [j for j in range(self.m) if self.dists[i, j] > 0]

    def min_support_prob(self) -> float:
        return float(self.dists[self.dists > 0].min())

    def is_pure(self) -> bool:
        return bool(np.all((self.dists == 0) | (self.dists == 1)))

    def as_pure(self) -> PureProfile:
        if not self.is_pure():
            raise InputError("profile is not degenerate")
        return tuple(int(j) for j in self.dists.argmax(axis=1))

    def __eq__(self, other):
        return isinstance(other, MixedProfile) and np.array_equal(self.dists, other.dists)

    def __hash__(self):
        return hash(self.dists.tobytes())


@dataclass(frozen=True)
class CorrelatedDistribution:
    """A joint distribution over pure profiles, stored sparsely."""

    n: int
    m: int
    support: Mapping[PureProfile, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for a, prob in self.support.items():
            a = as_profile(a, self.n, self.m)
            prob = float(prob)
            if prob < -TOL:
                raise InputError(f"negative probability {prob} on {a}")
            if prob > 0:
                clean[a] = clean.get(a, 0.0) + prob
        if abs(sum(clean.values()) - 1.0) > TOL:
            raise InputError("correlated distribution must sum to 1")
        object.__setattr__(self, "support", dict(sorted(clean.items())))

    @classmethod
    def point_mass(cls, a: Sequence[int], m: int) -> CorrelatedDistribution:
        return cls(len(a), m, {tuple(a): 1.0})

    @classmethod
    def uniform(cls, n: int, m: int) -> CorrelatedDistribution:
        check_enumerable(n, m)
        w = 1.0 / m**n
        return cls(n, m, {a: w for a in all_profiles(n, m)})

    @classmethod
    def from_dense(cls, x: np.ndarray, tol: float = 0.0) -> CorrelatedDistribution:
        x = np.asarray(x, dtype=float)
        n, m = x.ndim, x.shape[0]
        sup = {tuple(int(v) for v in idx): float(x[idx]) for idx in zip(*np.nonzero(x > tol))}
        total = sum(sup.values())
        if tol and total > 0:
            sup = {a: v / total for a, v in sup.items()}
        return cls(n, m, sup)

    @classmethod
    def from_mixed(cls, p: MixedProfile) -> CorrelatedDistribution:
        """Product distribution of independent mixed strategies."""
        check_enumerable(p.n, p.m)
        dense = np.ones(())
        for row in p.dists:
            dense = np.multiply.outer(dense, row)
        return cls.from_dense(dense)

    def dense(self) -> np.ndarray:
        check_enumerable(self.n, self.m)
        x = np.zeros((self.m,) * self.n)
        for a, prob in self.support.items():
            x[a] = prob
        return x

    def prob(self, a: Sequence[int]) -> float:
        return self.support.get(tuple(a), 0.0)

    def marginal(self, i: int) -> np.ndarray:
        out = np.zeros(self.m)
        for a, prob in self.support.items():
            out[a[i]] += prob
        return out

    def max_prob(self) -> tuple[float, PureProfile]:
        a = max(self.support, key=lambda b: (self.support[b], tuple(-x for x in b)))
        return self.support[a], a


@dataclass(frozen=True)
class RegretReport:
    """Per-player regrets and the deviation attaining each of them.

    Witnesses are actions for PNE/WSNE/ANE and deviation maps for ACE.
    """

    concept: Concept
    per_player_regret: tuple[float, ...]
    witnesses: tuple

    @property
    def max_regret(self) -> float:
        return max(self.per_player_regret)

    def to_dict(self, one_based: bool = True) -> dict:
        shift = 1 if one_based else 0

        def fmt(w):
            if isinstance(w, tuple):
                return [x + shift for x in w]
            return w + shift

        return {
            "concept": self.concept.value,
            "per_player_regret": [float(r) for r in self.per_player_regret],
            "witnesses": [fmt(w) for w in self.witnesses],
            "max_regret": float(self.max_regret),
        }


# --------------------------------------------------------------------------
# games


class GameOracle:
    """A payoff evaluator for an n-player, m-action game with payoffs in [0, 1].

    Subclasses implement ``_payoffs``; games whose full payoff tensor can be
    produced faster than by enumeration override ``_build_tensor``.
    """

    kind = "structured-rule"

    def __init__(self, n: int, m: int, declared_lambda: float | None = None):
        if int(n) != n or n < 1:
            raise InputError(f"player count must be >= 1, got {n}")
        if int(m) != m or m < 2:
            raise InputError(f"action count must be >= 2, got {m}")
        if declared_lambda is not None and not (0 <= declared_lambda <= 1):
            raise InputError(f"declared lambda must lie in [0, 1], got {declared_lambda}")
        self.n = int(n)
        self.m = int(m)
        self.declared_lambda = declared_lambda

    def payoffs(self, a: Sequence[int]) -> np.ndarray:
        a = as_profile(a, self.n, self.m)
        u = np.asarray(self._payoffs(a), dtype=float)
        if u.shape != (self.n,) or np.any(u < 0) or np.any(u > 1):
            raise ContractError(f"payoff vector {u} for {a} is malformed or outside [0, 1]")
        return u

    def _payoffs(self, a: PureProfile) -> np.ndarray:
        raise NotImplementedError

    def tensor(self) -> np.ndarray:
        """Full payoff tensor of shape ``(n,) + (m,) * n`` (read-only, cached)."""
        check_enumerable(self.n, self.m)
        return self._tensor

    @cached_property
    def _tensor(self) -> np.ndarray:
        t = np.asarray(self._build_tensor(), dtype=float)
        if t.shape != (self.n,) + (self.m,) * self.n:
            raise ContractError(f"tensor has shape {t.shape}")
        if np.any(t < 0) or np.any(t > 1):
            raise ContractError("payoff tensor leaves [0, 1]")
        t.setflags(write=False)
        return t

    def _build_tensor(self) -> np.ndarray:
        t = np.empty((self.n,) + (self.m,) * self.n)
        for a in all_profiles(self.n, self.m):
            t[(slice(None),) + a] = self._payoffs(a)
        return t

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, m={self.m})"


class TensorGame(GameOracle):
    """Explicitly stored game: exactly ``n * m**n`` payoff entries."""

    kind = "explicit-tensor"

    def __init__(self, payoffs, declared_lambda: float | None = None):
        t = np.array(payoffs, dtype=float)
        if t.ndim < 2:
            raise InputError("payoff tensor must have shape (n, m, ..., m)")
        n, m = t.shape[0], t.shape[1]
        super().__init__(n, m, declared_lambda)
        if t.shape != (n,) + (m,) * n:
            raise InputError(f"payoff tensor shape {t.shape} is not (n,) + (m,)*n")
        if not np.all(np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
            raise InputError("payoffs must lie in [0, 1]")
        t.setflags(write=False)
        self.__dict__["_tensor"] = t

    @classmethod
    def from_flat(cls, n: int, m: int, payoffs, declared_lambda=None) -> TensorGame:
        """Build from per-player row-major payoff lists (player 0 most significant)."""
        arr = np.asarray(payoffs, dtype=float)
        if arr.shape != (n, m**n):
            raise InputError(f"expected payoffs of shape ({n}, {m**n}), got {arr.shape}")
        return cls(arr.reshape((n,) + (m,) * n), declared_lambda)

    def _payoffs(self, a):
        return self._tensor[(slice(None),) + a]

    def tensor(self):
        return self._tensor


class RuleGame(GameOracle):
    """Game defined by a payoff rule ``fn(profile) -> n payoffs``."""

    def __init__(self, n, m, fn: Callable[[PureProfile], Sequence[float]], declared_lambda=None):
        super().__init__(n, m, declared_lambda)
        self._fn = fn

    def _payoffs(self, a):
        return self._fn(a)


class ScaledGame(GameOracle):
    """Every payoff of ``base`` multiplied by ``c``."""

    def __init__(self, base: GameOracle, c: float):
        lam = None if base.declared_lambda is None else base.declared_lambda * c
        super().__init__(base.n, base.m, lam)
        self.base = base
        self.c = c

    def _payoffs(self, a):
        return self.c * self.base.payoffs(a)

    def _build_tensor(self):
        return self.c * self.base.tensor()


def constant_game(n: int, m: int, value: float = 0.0) -> TensorGame:
    return TensorGame(np.full((n,) + (m,) * n, float(value)), declared_lambda=None)


def dominant_action_game(n: int, m: int) -> TensorGame:
    """Every player gets 1 for playing action 0 and 0 otherwise."""
    t = np.zeros((n,) + (m,) * n)
    for i in range(n):
        idx = [slice(None)] * n
        idx[i] = 0
        t[(i,) + tuple(idx)] = 1.0
    return TensorGame(t)


# --------------------------------------------------------------------------
# evaluation


def eval_payoffs(game: GameOracle, a: Sequence[int]) -> np.ndarray:
    """Raw (uncharged) payoff vector at a pure profile."""
    return game.payoffs(a)


def contract_others(ui: np.ndarray, dists: np.ndarray, i: int) -> np.ndarray:
    """Contract a single player's payoff tensor against every distribution except
    player ``i``'s, leaving a length-m vector indexed by i's action."""
    n = ui.ndim
    out = ui
    for k in range(n - 1, -1, -1):
        if k != i:
            out = np.tensordot(out, dists[k], axes=([k], [0]))
    return out


def deviation_payoffs(tensor: np.ndarray, dists: np.ndarray) -> np.ndarray:
    """``W[i, j] = u_i(j, p_{-i})`` for every player and action."""
    n = tensor.shape[0]
    return np.stack([contract_others(tensor[i], dists, i) for i in range(n)])


def _check_mixed(game: GameOracle, p: MixedProfile) -> None:
    if (p.n, p.m) != (game.n, game.m):
        raise InputError(f"profile is for an ({p.n}, {p.m}) game, not ({game.n}, {game.m})")


def expected_payoff_mixed(game: GameOracle, p: MixedProfile, i: int, j: int) -> float:
    """Exact ``u_i(j, p_{-i})`` by full enumeration."""
    _check_mixed(game, p)
    if not (0 <= i < game.n and 0 <= j < game.m):
        raise InputError("player or action out of range")
    return float(contract_others(game.tensor()[i], p.dists, i)[j])


def expected_payoffs(game: GameOracle, p: MixedProfile) -> np.ndarray:
    """Vector of ``u_i(p)`` for every player."""
    _check_mixed(game, p)
    w = deviation_payoffs(game.tensor(), p.dists)
    return np.einsum("ij,ij->i", w, p.dists)


def regret_pure(game: GameOracle, a: Sequence[int]) -> RegretReport:
    """Regret at a pure profile using ``n * m`` evaluations (no enumeration)."""
    a = as_profile(a, game.n, game.m)
    regrets, wit = [], []
    base = game.payoffs(a)
    for i in range(game.n):
        vals = []
        for j in range(game.m):
            b = a[:i] + (j,) + a[i + 1 :]
            vals.append(base[i] if j == a[i] else game.payoffs(b)[i])
        best = int(np.argmax(vals))
        regrets.append(max(0.0, float(vals[best] - base[i])))
        wit.append(best)
    return RegretReport(Concept.PNE, tuple(regrets), tuple(wit))


def regret_mixed(game: GameOracle, p: MixedProfile) -> RegretReport:
    """ANE regret ``max_j u_i(j, p_{-i}) - u_i(p)`` for each player."""
    _check_mixed(game, p)
    w = deviation_payoffs(game.tensor(), p.dists)
    own = np.einsum("ij,ij->i", w, p.dists)
    best = w.argmax(axis=1)
    regrets = np.maximum(w.max(axis=1) - own, 0.0)
    return RegretReport(Concept.ANE, tuple(float(r) for r in regrets), tuple(int(b) for b in best))


def regret_well_supported(game: GameOracle, p: MixedProfile) -> RegretReport:
    """Worst regret over support actions: ``max_{j in supp p_i} (max_j' u_i(j') - u_i(j))``."""
    _check_mixed(game, p)
    w = deviation_payoffs(game.tensor(), p.dists)
    regrets, wit = [], []
    for i in range(game.n):
        sup = p.support(i)
        gaps = w[i].max() - w[i, sup]
        regrets.append(float(max(gaps.max(), 0.0)))
        wit.append(int(w[i].argmax()))
    return RegretReport(Concept.WSNE, tuple(regrets), tuple(wit))


def swap_gains(game: GameOracle, x: CorrelatedDistribution, i: int) -> np.ndarray:
    """``G[j, j'] = sum_{a: a_i = j} X(a) (u_i(j', a_{-i}) - u_i(a))``."""
    t = game.tensor()
    dense = x.dense()
    xi = np.moveaxis(dense, i, 0).reshape(game.m, -1)
    ui = np.moveaxis(t[i], i, 0).reshape(game.m, -1)
    cross = xi @ ui.T
    return cross - np.diag(cross)[:, None]


def regret_correlated(game: GameOracle, x: CorrelatedDistribution) -> RegretReport:
    """Swap regret via the per-action decomposition
    ``sum_j max_j' G[j, j']`` (the ``j' = j`` term floors each summand at 0)."""
    if (x.n, x.m) != (game.n, game.m):
        raise InputError("distribution does not match the game's dimensions")
    regrets, wit = [], []
    for i in range(game.n):
        g = swap_gains(game, x, i)
        phi = []
        total = 0.0
        for j in range(game.m):
            best = int(g[j].argmax())
            if g[j, best] <= 0:
                best = j
            phi.append(best)
            total += g[j, best]
        regrets.append(float(total))
        wit.append(tuple(phi))
    return RegretReport(Concept.ACE, tuple(regrets), tuple(wit))


def deviation_regret(game: GameOracle, x: CorrelatedDistribution, i: int, phi: Sequence[int]) -> float:
    """``reg_i^(phi)(X)`` for one deviation map, by direct summation over the support."""
    total = 0.0
    for a, prob in x.support.items():
        b = a[:i] + (phi[a[i]],) + a[i + 1 :]
        total += prob * (game.payoffs(b)[i] - game.payoffs(a)[i])
    return total


def is_equilibrium(game: GameOracle, profile, eps: float, concept: Concept | str):
    """Return ``(holds, report)``: whether every regret for ``concept`` is at most eps."""
    concept = Concept(concept)
    if concept is Concept.PNE:
        if isinstance(profile, (MixedProfile, CorrelatedDistribution)):
            raise InputError("PNE needs a pure profile")
        report = regret_pure(game, profile)
    elif concept in (Concept.WSNE, Concept.ANE):
        if not isinstance(profile, MixedProfile):
            raise InputError(f"{concept.value} needs a MixedProfile")
        if concept is Concept.WSNE:
            report = regret_well_supported(game, profile)
        else:
            report = regret_mixed(game, profile)
    else:
        if not isinstance(profile, CorrelatedDistribution):
            raise InputError("ACE needs a CorrelatedDistribution")
        report = regret_correlated(game, profile)
    return report.max_regret <= eps + TOL, report


def measure_lipschitz(game: GameOracle) -> float:
    """Smallest lambda such that changing one other player's action moves any
    player's payoff by at most lambda (Hamming-distance-1 pairs)."""
    t = game.tensor()
    n = game.n
    lam = 0.0
    for k in range(n):
        spread = t.max(axis=k + 1) - t.min(axis=k + 1)
        per_player = spread.reshape(n, -1).max(axis=1)
        per_player[k] = 0.0
        lam = max(lam, float(per_player.max()))
    return lam


def measure_influences(game: GameOracle) -> np.ndarray:
    """Per-player influence: the most player k's switch moves any other player's payoff."""
    t = game.tensor()
    n = game.n
    out = np.zeros(n)
    for k in range(n):
        spread = t.max(axis=k + 1) - t.min(axis=k + 1)
        per_player = spread.reshape(n, -1).max(axis=1)
        per_player[k] = 0.0
        out[k] = per_player.max()
    return out


def scale_game(game: GameOracle, c: float) -> ScaledGame:
    if not (0 < c <= 1):
        raise InputError(f"scale factor must lie in (0, 1], got {c}")
    return ScaledGame(game, c)
