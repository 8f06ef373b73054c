import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from liplab.game import CorrelatedDistribution, MixedProfile, TensorGame


def profiles(n, m):
    return list(itertools.product(range(m), repeat=n))


def brute_expected(game, dists, i, j=None):
    """u_i(j, p_-i) (or u_i(p) when j is None) by summing over every profile."""
    total = 0.0
    for a in profiles(game.n, game.m):
        if j is not None and a[i] != j:
            continue
        w = 1.0
        for t, x in enumerate(a):
            if t == i and j is not None:
                continue
            w *= dists[t][x]
        total += w * game.payoffs(a)[i]
    return total


def brute_swap_regret(game, x, i):
    """max over every deviation map phi: [m] -> [m], by direct summation."""
    best = 0.0
    for phi in itertools.product(range(game.m), repeat=game.m):
        val = 0.0
        for a, p in x.support.items():
            b = a[:i] + (phi[a[i]],) + a[i + 1 :]
            val += p * (game.payoffs(b)[i] - game.payoffs(a)[i])
        best = max(best, val)
    return best


@st.composite
def small_games(draw, max_n=3, max_m=3):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(2, max_m))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    t = rng.random((n,) + (m,) * n)
    # sprinkle exact ties so argmax tie-breaking gets exercised
    if draw(st.booleans()):
        t = np.round(t * 2) / 2
    return TensorGame(t)


@st.composite
def games_with_mixed(draw, max_n=3, max_m=3):
    g = draw(small_games(max_n, max_m))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    d = rng.random((g.n, g.m)) * (rng.random((g.n, g.m)) < 0.7)
    d[:, 0] += 1e-3
    return g, MixedProfile(d / d.sum(axis=1, keepdims=True))


@st.composite
def games_with_correlated(draw, max_n=3, max_m=3):
    g = draw(small_games(max_n, max_m))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    x = rng.random((g.m,) * g.n) * (rng.random((g.m,) * g.n) < 0.5)
    x.flat[0] += 1e-3
    return g, CorrelatedDistribution.from_dense(x / x.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
