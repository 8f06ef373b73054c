import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import profiles
from liplab.errors import InputError, PreconditionError
from liplab.game import CorrelatedDistribution, regret_correlated
from liplab.hard_games import (
    BASELINES,
    build_perturbed_game,
    check_lemma3_bound,
    get_baseline,
    make_matching_pennies,
    make_scan_then_empirical,
    query_bound,
    rho,
    run_deterministic_adversary,
    target_epsilon,
)
from liplab.queries import ProfileAccess, QueryLedger

# cell (r, c) = (u1, u2) when player 1 plays r and player 2 plays c
TABLE_2X2 = [[(1, 0), (0, 1)], [(0, 1), (1, 0)]]
TABLE_3X3 = [[(1, 0), (0, 1), (0, 1)], [(0, 1), (1, 0), (0, 1)], [(0, 1), (0, 1), (1, 0)]]


@pytest.mark.parametrize("m,table", [(2, TABLE_2X2), (3, TABLE_3X3)])
def test_reference_tables(m, table):
    g = make_matching_pennies(1, m)
    for r in range(m):
        for c in range(m):
            assert tuple(g.payoffs((r, c))) == table[r][c]
    assert g.declared_lambda == 1


def test_matching_pennies_cell_3_3():
    assert tuple(make_matching_pennies(1, 3).payoffs((2, 2))) == (1, 0)


def test_tensor_matches_rule():
    g = make_matching_pennies(2, 3)
    t = g.tensor()
    for a in profiles(4, 3):
        u = [float(a[0] == a[1]), float(a[0] != a[1]), float(a[2] == a[3]), float(a[2] != a[3])]
        assert list(t[(slice(None),) + a]) == u


def test_pairs_are_independent():
    g = make_matching_pennies(2, 2)
    for a in profiles(4, 2):
        for b2 in profiles(2, 2):
            assert tuple(g.payoffs(a[:2] + b2)[:2]) == tuple(g.payoffs(a)[:2])


def test_pair_regret_depends_only_on_pair_marginal():
    rng = np.random.default_rng(0)
    g2 = make_matching_pennies(2, 2)
    g1 = make_matching_pennies(1, 2)
    for _ in range(20):
        x = rng.random((2,) * 4)
        x = CorrelatedDistribution.from_dense(x / x.sum())
        pair = x.dense().sum(axis=(2, 3))
        r_full = regret_correlated(g2, x).per_player_regret[:2]
        r_pair = regret_correlated(g1, CorrelatedDistribution.from_dense(pair)).per_player_regret
        assert np.allclose(r_full, r_pair, atol=1e-12)


def test_invalid_k():
    with pytest.raises(InputError):
        make_matching_pennies(0, 2)


# --- rho ----------------------------------------------------------------------


def test_rho_values():
    assert rho(Fraction(1, 6), 2) == Fraction(2, 3)
    assert rho(Fraction(1, 3), 3) == Fraction(2, 3)
    assert rho(Fraction(1, 3), 2) == Fraction(7, 12)
    assert rho(0.5 - 1e-9, 2) == pytest.approx(0.5, abs=1e-8)
    assert rho(0.5 - 1e-9, 2) > 0.5


@pytest.mark.parametrize("alpha,m", [(0, 2), (0.5, 2), (Fraction(2, 3), 3), (-0.1, 3)])
def test_rho_rejects_out_of_range(alpha, m):
    with pytest.raises(InputError):
        rho(alpha, m)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 10), st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_rho_monotonicity_and_range(m, f1, f2):
    top = (m - 1) / m
    a1, a2 = sorted((f1 * top, f2 * top))
    if a1 < a2:
        assert rho(a1, m) > rho(a2, m)
    assert 0.5 <= rho(a1, m) < 1
    if a1 < (m - 1) / m and a1 < m / (m + 1):
        assert rho(a1, m + 1) > rho(a1, m)


def test_query_bound_and_target():
    assert target_epsilon(Fraction(1, 3), 2) == Fraction(1, 6)
    assert query_bound(0.1, 2, 4) == pytest.approx(0.05 / 0.7**2)


# --- single-profile cap ----------------------------------------------------------


def test_single_profile_cap_uniform():
    for alpha in (0.05, 0.25, 0.45):
        res = check_lemma3_bound(CorrelatedDistribution.uniform(2, 2), 1, 2, alpha)
        assert res.holds and res.max_prob == 0.25


def test_single_profile_cap_precondition():
    with pytest.raises(PreconditionError):
        check_lemma3_bound(CorrelatedDistribution.point_mass((0, 0), 2), 1, 2, 1 / 3)


# --- perturbed game -------------------------------------------------------------


def test_perturbed_game_construction():
    g = build_perturbed_game([], 1, 2, 1)
    assert tuple(g.payoffs((1, 0))) == (1, 0)
    assert tuple(g.payoffs((0, 0))) == (0, 0)
    g = build_perturbed_game([(0, 0), (1, 1)], 1, 2, 1)
    base = make_matching_pennies(1, 2)
    for a in [(0, 0), (1, 1)]:
        assert tuple(g.payoffs(a)) == tuple(base.payoffs(a))
    assert tuple(g.payoffs((1, 0))) == (1, 0)


def test_replay_against_perturbed_game_is_identical():
    alg = make_scan_then_empirical(7)
    base = make_matching_pennies(2, 2)
    pa = ProfileAccess(base, QueryLedger())
    out = alg(pa)
    g2 = build_perturbed_game(pa.ledger.log, 2, 2, 1)
    pb = ProfileAccess(g2, QueryLedger())
    assert alg(pb) == out
    assert [r.reported for r in pb.ledger.log] == [r.reported for r in pa.ledger.log]


# --- harness ------------------------------------------------------------------------


def test_uniform_output_harness_example():
    o = run_deterministic_adversary(get_baseline("uniform-output"), 2, 2, 0.1)
    assert o.q == 0 and o.q < o.bound_q
    assert o.epsilon == pytest.approx(0.4)
    assert o.regret_achieved == pytest.approx(0.5)
    assert o.verdict == "lower-bound-confirmed"
    assert o.utility_bounds_hold and o.indistinguishable
    assert o.j_star_marginal <= 0.5 + 1e-12


def test_failed_on_base_flag():
    o = run_deterministic_adversary(get_baseline("point-mass"), 2, 2, 0.1)
    assert not o.is_ace_on_base and o.verdict == "failed-on-base"


def test_budget_exceeded_is_hypothesis_unmet():
    o = run_deterministic_adversary(make_scan_then_empirical(16), 2, 2, 0.3)
    assert o.q == 16 and o.q >= o.bound_q
    assert o.verdict in ("hypothesis-unmet", "failed-on-base")


def test_pairwise_probe_learns_an_exact_ce():
    o = run_deterministic_adversary(get_baseline("pairwise-probe"), 2, 2, 0.1)
    assert o.q == 8 and o.is_ace_on_base and o.verdict == "hypothesis-unmet"


@pytest.mark.parametrize("name", sorted(BASELINES))
@pytest.mark.parametrize("k,m", [(1, 2), (2, 2), (1, 3)])
def test_dichotomy_never_violated(name, k, m):
    o = run_deterministic_adversary(get_baseline(name), k, m, 0.1)
    assert o.verdict != "lower-bound-violated"
    assert o.indistinguishable
    assert set(a for a in o.perturbed_game.logged) == set(r.profile for r in o.query_log)


@pytest.mark.parametrize("scale", [0.5, 0.25])
def test_scaled_mode(scale):
    o = run_deterministic_adversary(get_baseline("uniform-output"), 2, 2, 0.1, scale=scale)
    assert o.epsilon == pytest.approx(scale * 0.4)
    assert o.regret_achieved == pytest.approx(scale * 0.5)
    assert o.verdict == "lower-bound-confirmed"


def test_outcome_dict_is_json_ready():
    d = run_deterministic_adversary(get_baseline("diagonal"), 1, 2, 0.1).to_dict()
    json.dumps(d)
    assert d["chosen_action"] in (1, 2)
    assert d["deviation"] == [d["chosen_action"]] * 2


def test_unknown_baseline():
    with pytest.raises(InputError):
        get_baseline("nope")
