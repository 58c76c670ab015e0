"""Strategy representation tests.

payoff_mixed (direct expectation over pure profiles) is the reference; the
behavioral and enabling routes must reproduce it exactly, not approximately,
on randomly sampled rational profiles.
"""

import random
from fractions import Fraction

import pytest

from efgkit.games import build_builtin, outcome_of
from efgkit import strategies as st

F = Fraction

GAMES = [
    ("fig1", None),
    ("fig2", None),
    ("beer_quiche", None),
    ("fig4_bq_extended", "1/100"),
    ("example44", None),
    ("example54_GO", None),
    ("km_extended", None),
    ("signaling", 2),
    ("example63_barG", "1/100"),
]


def random_mixed(game, rng):
    dists = {}
    for n in game.players:
        rs = list(game.reduced_strategies(n))
        k = rng.randrange(1, len(rs) + 1)
        support = rng.sample(rs, k)
        weights = [F(rng.randrange(1, 20)) for _ in support]
        total = sum(weights)
        dists[n] = {r: w / total for r, w in zip(support, weights)}
    return st.MixedProfile(game, dists)


@pytest.mark.parametrize("name,param", GAMES)
def test_payoff_routes_agree_exactly(name, param):
    game = build_builtin(name, param)
    rng = random.Random(f"routes:{name}")
    for _ in range(25):
        sigma = random_mixed(game, rng)
        reference = st.payoff_mixed(game, sigma)
        b = st.mixed_to_behavioral(game, sigma)
        p = st.mixed_to_enabling(game, sigma)
        assert st.payoff_behavioral(game, b) == reference
        assert st.payoff_enabling(game, p) == reference
        assert st.outcome_of_mixed(game, sigma).payoff(game) == reference
        assert st.outcome_of_enabling(game, p).payoff(game) == reference


@pytest.mark.parametrize("name,param", GAMES)
def test_kuhn_round_trip_preserves_outcomes(name, param):
    game = build_builtin(name, param)
    rng = random.Random(f"kuhn:{name}")
    for _ in range(10):
        sigma = random_mixed(game, rng)
        b = st.mixed_to_behavioral(game, sigma)
        back = st.behavioral_to_mixed(game, b)
        assert st.outcome_of_mixed(game, back) == st.outcome_of_mixed(game, sigma)
        assert st.payoff_mixed(game, back) == st.payoff_mixed(game, sigma)


@pytest.mark.parametrize("name,param", GAMES)
def test_enabling_map_is_linear(name, param):
    game = build_builtin(name, param)
    rng = random.Random(f"linear:{name}")
    for _ in range(5):
        s1 = random_mixed(game, rng)
        s2 = random_mixed(game, rng)
        lam = F(rng.randrange(1, 7), 7)
        mix = st.MixedProfile(game, {
            n: {r: lam * s1.dists[n].get(r, F(0)) + (1 - lam) * s2.dists[n].get(r, F(0))
                for r in set(s1.dists[n]) | set(s2.dists[n])}
            for n in game.players})
        p1 = st.mixed_to_enabling(game, s1)
        p2 = st.mixed_to_enabling(game, s2)
        pm = st.mixed_to_enabling(game, mix)
        for n in game.players:
            for a in game.last_actions[n]:
                assert pm.prob(n, a) == lam * p1.prob(n, a) + (1 - lam) * p2.prob(n, a)


def test_correlated_strategy_flattens_but_outcome_survives():
    # the receiver correlates his two response sets; the behavioral image
    # loses the correlation yet induces the same play
    game = build_builtin("beer_quiche")
    ff = (("hB", "fight_b"), ("hQ", "fight_q"))
    rr = (("hB", "retreat_b"), ("hQ", "retreat_q"))
    bw = game.reduce_strategy("weak", {"hw": "beer_w"})
    qs = game.reduce_strategy("strong", {"hs": "quiche_s"})
    sigma = st.MixedProfile(game, {
        "weak": {bw: F(1)},
        "strong": {qs: F(1)},
        "receiver": {ff: F(1, 2), rr: F(1, 2)},
    })
    b = st.mixed_to_behavioral(game, sigma)
    assert b.prob("hB", "fight_b") == F(1, 2)
    assert b.prob("hQ", "fight_q") == F(1, 2)
    back = st.behavioral_to_mixed(game, b)
    assert back.weight("receiver", (("hB", "fight_b"), ("hQ", "retreat_q"))) == F(1, 4)
    assert st.outcome_of_mixed(game, back) == st.outcome_of_mixed(game, sigma)


def test_off_path_sets_get_uniform_behavior():
    game = build_builtin("fig1")
    exit_ = game.reduce_strategy("1", {"h1a": "exit", "h1b": "r1"})
    sigma = st.MixedProfile(game, {
        "1": {exit_: F(1)},
        "2": {game.reduce_strategy("2", {"h2a": "up", "h2b": "left"}): F(1)},
    })
    b = st.mixed_to_behavioral(game, sigma)
    assert b.prob("h1b", "r1") == F(1, 2)
    assert b.prob("h1b", "r2") == F(1, 2)
    assert b.prob("h2b", "left") == F(1, 2)


def test_pure_profile_payoff_matches_tree_walk():
    game = build_builtin("fig1")
    choices = {"1": {"h1a": "go", "h1b": "r2"}, "2": {"h2a": "down", "h2b": "left"}}
    sigma = st.pure_mixed(game, choices)
    assert st.payoff_mixed(game, sigma) == (F(2), F(2))
    assert outcome_of(game, sigma).masses == {"z_2L": F(1)}


def test_enabling_prob_conventions():
    game = build_builtin("beer_quiche")
    sigma = st.uniform_mixed(game)
    p = st.mixed_to_enabling(game, sigma)
    # a player with no action on the path contributes one
    assert p.prob("strong", None) == F(1)
    assert p.prob("weak", game.last_action[("weak", "z_wbf")]) == F(1, 2)
    # p_{-receiver}(weak beer terminal) = 1/10 prior times weak's beer weight
    assert p.minus("receiver", "z_wbf") == F(1, 10) * F(1, 2)
    assert p.minus("weak", "z_wbf") == F(1, 10) * p.prob("receiver", "fight_b")


def test_fig1_enabling_vertices():
    game = build_builtin("fig1")
    verts = st.enabling_vertices(game, "1")
    as_sets = {tuple(sorted((a, v) for a, v in vec.items())) for vec, _ in verts}
    assert as_sets == {
        (("exit", F(1)), ("go", F(0)), ("r1", F(0)), ("r2", F(0))),
        (("exit", F(0)), ("go", F(1)), ("r1", F(1)), ("r2", F(0))),
        (("exit", F(0)), ("go", F(1)), ("r1", F(0)), ("r2", F(1))),
    }
    verts2 = st.enabling_vertices(game, "2")
    assert len(verts2) == 3


def test_is_realizable_accepts_images():
    for name, param in GAMES:
        game = build_builtin(name, param)
        rng = random.Random(f"real:{name}")
        sigma = random_mixed(game, rng)
        p = st.mixed_to_enabling(game, sigma)
        for n in game.players:
            ok, witness = st.is_realizable(game, n, p.vectors[n])
            assert ok
            # the witness must reproduce the vector exactly
            back = st.MixedProfile(game, {m: (witness if m == n else sigma.dists[m])
                                          for m in game.players})
            pb = st.mixed_to_enabling(game, back)
            assert pb.vectors[n] == p.vectors[n]


def test_is_realizable_rejects_exclusive_actions():
    game = build_builtin("fig1")
    # up and left cannot both carry probability one: left needs down
    ok, witness = st.is_realizable(game, "2", {"up": F(1), "left": F(1), "right": F(0)})
    assert not ok and witness is None


def test_is_realizable_rejects_inconsistent_split():
    game = build_builtin("fig1")
    # mass continuing past go must split exactly across r1, r2
    ok, _ = st.is_realizable(
        game, "1", {"exit": F(1, 2), "go": F(1, 2), "r1": F(1, 2), "r2": F(1, 4)})
    assert not ok
    ok, _ = st.is_realizable(
        game, "1", {"exit": F(1, 2), "go": F(1, 2), "r1": F(1, 4), "r2": F(1, 4)})
    assert ok


def test_realizable_set_is_convex():
    game = build_builtin("beer_quiche")
    rng = random.Random("convex")
    for _ in range(5):
        s1 = random_mixed(game, rng)
        s2 = random_mixed(game, rng)
        p1 = st.mixed_to_enabling(game, s1)
        p2 = st.mixed_to_enabling(game, s2)
        for n in game.players:
            mid = {a: (p1.prob(n, a) + p2.prob(n, a)) / 2 for a in game.last_actions[n]}
            ok, _ = st.is_realizable(game, n, mid)
            assert ok


def test_profile_validation_errors():
    game = build_builtin("fig1")
    r = game.reduced_strategies("1")[0]
    with pytest.raises(ValueError):
        st.MixedProfile(game, {"1": {r: F(1, 2)}, "2": {game.reduced_strategies("2")[0]: F(1)}})
    with pytest.raises(ValueError):
        st.BehavioralProfile(game, {"h1a": {"exit": F(1)}})  # h1b etc missing
    with pytest.raises(ValueError):
        st.EnablingProfile(game, {"1": {"exit": F(2), "go": F(0), "r1": F(0), "r2": F(0)},
                                  "2": {"up": F(1), "left": F(0), "right": F(0)}})
