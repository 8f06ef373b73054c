from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import profiles, small_games
from liplab.errors import InputError, LPInfeasible, SizeError
from liplab.game import (
    CorrelatedDistribution,
    MixedProfile,
    constant_game,
    dominant_action_game,
    is_equilibrium,
    measure_lipschitz,
    regret_correlated,
    regret_mixed,
    regret_pure,
)
from liplab.hard_games import make_matching_pennies
from liplab.queries import ProfileAccess, QueryLedger
from liplab.reductions import MultiLipschitzGame
from liplab.solvers import (
    GeneratorConfig,
    all_pure_equilibria,
    best_response_to_uniform,
    brute_force_pure,
    brute_force_pure_charged,
    max_profile_prob_ace,
    max_welfare_ce,
    min_pure_epsilon,
    random_lipschitz_game,
    random_multi_lipschitz_game,
    uniform_profile,
)

MP2 = make_matching_pennies(1, 2)


# --- uniform baseline -----------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(small_games(max_n=3, max_m=4))
def test_uniform_regret_bound(g):
    assert regret_mixed(g, uniform_profile(g.n, g.m)).max_regret <= (g.m - 1) / g.m + 1e-12


def test_uniform_examples():
    assert regret_mixed(MP2, uniform_profile(2, 2)).max_regret == 0
    for m in (2, 3, 4):
        r = regret_mixed(dominant_action_game(3, m), uniform_profile(3, m))
        assert r.max_regret == pytest.approx((m - 1) / m, abs=1e-12)


# --- best response to uniform -----------------------------------------------------


def test_best_response_to_uniform_no_interaction():
    g = random_multi_lipschitz_game([0.0] * 4, 2, seed=1)
    led = QueryLedger()
    a = best_response_to_uniform(led, g)
    assert led.dist_count == 8 and led.profile_count == 0
    assert regret_pure(g, a).max_regret <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_best_response_to_uniform_small_total_influence(seed):
    lams = np.random.default_rng(seed).dirichlet(np.ones(4)) * 0.05
    g = random_multi_lipschitz_game(lams, 2, seed)
    a = best_response_to_uniform(QueryLedger(), g)
    assert is_equilibrium(g, MixedProfile.from_pure(a, 2), 0.3, "ANE")[0]


def test_best_response_to_uniform_needs_binary():
    with pytest.raises(InputError):
        best_response_to_uniform(QueryLedger(), make_matching_pennies(1, 3))


# --- brute force --------------------------------------------------------------------


def test_brute_force_examples():
    assert brute_force_pure(MP2, 0.9) is None
    assert brute_force_pure(MP2, 1.0) == (0, 0)
    assert brute_force_pure(constant_game(3, 2), 0.0) == (0, 0, 0)


def test_brute_force_desk_scale_existence():
    eps = 0.3
    lam = eps / np.sqrt(8 * 10 * np.log(40))
    g = random_lipschitz_game(GeneratorConfig(10, 2, lam, seed=0))
    a = brute_force_pure(g, eps)
    assert a is not None and regret_pure(g, a).max_regret <= eps + 1e-12


@settings(max_examples=60, deadline=None)
@given(small_games(), st.floats(0, 1))
def test_brute_force_agrees_with_predicate(g, eps):
    hits = [a for a in profiles(g.n, g.m) if is_equilibrium(g, a, eps, "PNE")[0]]
    assert all_pure_equilibria(g, eps) == hits
    assert brute_force_pure(g, eps) == (hits[0] if hits else None)
    me, a = min_pure_epsilon(g)
    assert regret_pure(g, a).max_regret == pytest.approx(me, abs=1e-12)
    assert all(regret_pure(g, b).max_regret >= me - 1e-12 for b in profiles(g.n, g.m))


def test_charged_brute_force_counts_queries():
    g = random_lipschitz_game(GeneratorConfig(3, 3, 0.5, seed=4))
    pa = ProfileAccess(g, QueryLedger())
    assert brute_force_pure_charged(pa, 0.2) == brute_force_pure(g, 0.2)
    assert pa.ledger.profile_count == 27


# --- the eps-ACE linear program ---------------------------------------------------


def test_exact_ce_point():
    res = max_profile_prob_ace(MP2, 0, (0, 0))
    assert res.value == Fraction(1, 4) and res.exact
    assert np.allclose(res.witness.dense(), 0.25, atol=1e-9)


def test_single_profile_cap_for_alpha_sixth():
    res = max_profile_prob_ace(MP2, Fraction(1, 6), (0, 0))
    assert res.value < Fraction(7, 12)


def test_point_mass_allowed_at_eps_one():
    res = max_profile_prob_ace(MP2, 1, (0, 0))
    assert res.value == 1


def test_fixed_constraint_infeasible():
    with pytest.raises(LPInfeasible):
        max_profile_prob_ace(MP2, 0, (0, 0), fixed={(1, 1): Fraction(1, 2)})


@settings(max_examples=25, deadline=None)
@given(small_games(max_n=2, max_m=3), st.floats(0, 0.5), st.data())
def test_lp_witness_is_feasible_and_matches_highs(g, eps, data):
    target = tuple(data.draw(st.integers(0, g.m - 1)) for _ in range(g.n))
    res = max_profile_prob_ace(g, eps, target)
    assert regret_correlated(g, res.witness).max_regret <= eps + 1e-9
    assert res.witness.prob(target) == pytest.approx(float(res.value), abs=1e-9)
    ref = max_profile_prob_ace(g, eps, target, method="highs")
    assert float(res.value) == pytest.approx(float(ref.value), abs=1e-9)


def test_lp_size_guard():
    with pytest.raises(SizeError):
        max_profile_prob_ace(random_lipschitz_game(GeneratorConfig(13, 2, 0.1, 0)), 0.1, (0,) * 13)


def test_max_welfare_ce_is_exact_ce():
    x = max_welfare_ce(make_matching_pennies(1, 3))
    assert isinstance(x, CorrelatedDistribution)
    assert regret_correlated(make_matching_pennies(1, 3), x).max_regret <= 1e-9


# --- generators -------------------------------------------------------------------


def test_generator_determinism_and_bounds():
    a = random_lipschitz_game(GeneratorConfig(4, 2, 0.2, seed=7)).tensor()
    b = random_lipschitz_game(GeneratorConfig(4, 2, 0.2, seed=7)).tensor()
    assert np.array_equal(a, b)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        lam = float(rng.uniform(0.01, 1))
        g = random_lipschitz_game(GeneratorConfig(n, 2, lam, seed))
        t = g.tensor()
        assert measure_lipschitz(g) <= lam + 1e-12
        assert t.min() >= 0 and t.max() <= 1


def test_generator_lambda_one_two_players_unconstrained():
    g = random_lipschitz_game(GeneratorConfig(2, 3, 1.0, seed=0))
    assert measure_lipschitz(g) > 0.5


@pytest.mark.parametrize("bad", [dict(n=0, m=2, lam=0.1, seed=0), dict(n=2, m=1, lam=0.1, seed=0),
                                 dict(n=2, m=2, lam=0.0, seed=0)])
def test_generator_config_validation(bad):
    with pytest.raises(InputError):
        GeneratorConfig(**bad)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=4), st.integers(0, 10**6))
def test_multi_lipschitz_generator(lams, seed):
    g = random_multi_lipschitz_game(lams, 2, seed)
    assert MultiLipschitzGame(g, lams).verify()
    assert g.tensor().min() >= 0 and g.tensor().max() <= 1
