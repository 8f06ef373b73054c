"""JSON formats for games, profiles and population-game descriptors.

All action labels in files are 1-based.

Explicit game::

    {"n": 2, "m": 2, "payoffs": [[...m^n values...], [...]], "lambda": 1.0}

``payoffs[i][idx]`` with ``idx = sum_t (a_t - 1) m^(n-t)`` (player 1 most
significant). Structured games use a ``type`` key: ``matching_pennies``
(k, m), ``random_lipschitz`` (n, m, lambda, seed), ``dominant`` (n, m),
``constant`` (n, m, value) and ``scaled`` (base, c).

Profiles::

    {"kind": "pure", "actions": [1, 2]}
    {"kind": "mixed", "dists": [[0.5, 0.5], [1, 0]]}
    {"kind": "uniform"}
    {"kind": "correlated", "support": [{"profile": [1, 1], "prob": 0.5}, ...]}

Population game descriptor: ``{"base": <game>, "sizes": [2, 2]}``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from liplab.errors import InputError
from liplab.game import (
    CorrelatedDistribution,
    GameOracle,
    MixedProfile,
    TensorGame,
    as_profile,
    constant_game,
    dominant_action_game,
    scale_game,
)


def _require(obj: dict, *keys):
    missing = [k for k in keys if k not in obj]
    if missing:
        raise InputError(f"missing key(s) {missing} in {sorted(obj)}")
    return [obj[k] for k in keys]


def game_from_dict(obj) -> GameOracle:
    if not isinstance(obj, dict):
        raise InputError("game description must be a JSON object")
    kind = obj.get("type", "explicit")
    if kind == "explicit":
        n, m, payoffs = _require(obj, "n", "m", "payoffs")
        return TensorGame.from_flat(int(n), int(m), payoffs, obj.get("lambda"))
    if kind == "matching_pennies":
        from liplab.hard_games import make_matching_pennies

        k, m = _require(obj, "k", "m")
        return make_matching_pennies(int(k), int(m))
    if kind == "random_lipschitz":
        from liplab.solvers import GeneratorConfig, random_lipschitz_game

        n, m, lam = _require(obj, "n", "m", "lambda")
        return random_lipschitz_game(GeneratorConfig(int(n), int(m), float(lam), int(obj.get("seed", 0))))
    if kind == "dominant":
        n, m = _require(obj, "n", "m")
        return dominant_action_game(int(n), int(m))
    if kind == "constant":
        n, m = _require(obj, "n", "m")
        return constant_game(int(n), int(m), float(obj.get("value", 0.0)))
    if kind == "scaled":
        base, c = _require(obj, "base", "c")
        return scale_game(game_from_dict(base), float(c))
    raise InputError(f"unknown game type {kind!r}")


def game_to_dict(game: GameOracle) -> dict:
    """Explicit-tensor form of any enumerable game."""
    t = game.tensor()
    out = {"n": game.n, "m": game.m, "payoffs": t.reshape(game.n, -1).tolist()}
    if game.declared_lambda is not None:
        out["lambda"] = game.declared_lambda
    return out


def profile_from_dict(obj, n: int, m: int):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InputError("profile description must be an object with a 'kind'")
    kind = obj["kind"]
    if kind == "pure":
        (actions,) = _require(obj, "actions")
        return as_profile([int(x) - 1 for x in actions], n, m)
    if kind == "mixed":
        (dists,) = _require(obj, "dists")
        p = MixedProfile(np.asarray(dists, dtype=float))
        if (p.n, p.m) != (n, m):
            raise InputError(f"mixed profile is ({p.n}, {p.m}), game is ({n}, {m})")
        return p
    if kind == "uniform":
        return MixedProfile.uniform(n, m)
    if kind == "correlated":
        (support,) = _require(obj, "support")
        sup = {}
        for entry in support:
            a = tuple(int(x) - 1 for x in entry["profile"])
            sup[a] = sup.get(a, 0.0) + float(entry["prob"])
        return CorrelatedDistribution(n, m, sup)
    raise InputError(f"unknown profile kind {kind!r}")


def profile_to_dict(profile) -> dict:
    if isinstance(profile, MixedProfile):
        return {"kind": "mixed", "dists": profile.dists.tolist()}
    if isinstance(profile, CorrelatedDistribution):
        return {
            "kind": "correlated",
            "support": [{"profile": [x + 1 for x in a], "prob": p} for a, p in profile.support.items()],
        }
    return {"kind": "pure", "actions": [int(x) + 1 for x in profile]}


def population_from_dict(obj):
    from liplab.reductions import induce_population_game

    base, sizes = _require(obj, "base", "sizes")
    return induce_population_game(game_from_dict(base), [int(s) for s in sizes])


def population_to_dict(pop) -> dict:
    return {"base": game_to_dict(pop.base), "sizes": list(pop.sizes)}


def load_json_source(source: str):
    """Parse ``source`` as inline JSON if it starts with ``{``, else as a file path."""
    text = source.strip()
    try:
        if text.startswith("{"):
            return json.loads(text)
        return json.loads(Path(source).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {source!r}: {exc}") from exc
    except OSError as exc:
        raise InputError(f"cannot read {source!r}: {exc}") from exc
