"""Game model tests: tree structure, parsing, builtins, outcomes.

The oracle here is an independent depth-first path enumeration written
directly in the test file; the model's cached indexes must agree with it
on every builtin game.
"""

from fractions import Fraction

import pytest

from efgkit import games
from efgkit.games import (
    ChanceNode,
    GameFormatError,
    OutcomeDistribution,
    TerminalNode,
    build_builtin,
    builtin_names,
    outcome_of,
    parse_game,
    serialize_game,
    validate_perfect_recall,
)

F = Fraction


def walk_paths(g):
    """Independent enumeration of root-to-terminal paths.

    Returns a list of (terminal id, chance probability, {player: last action}).
    """
    out = []

    def rec(nid, prob, last):
        node = g.nodes[nid]
        if isinstance(node, TerminalNode):
            out.append((nid, prob, dict(last)))
            return
        if isinstance(node, ChanceNode):
            for child, p in node.children:
                rec(child, prob * p, last)
            return
        for action, child in node.children:
            prev = last.get(node.player)
            last[node.player] = action
            rec(child, prob, last)
            if prev is None:
                del last[node.player]
            else:
                last[node.player] = prev

    rec(g.root, F(1), {})
    return out


ALL_BUILTINS = [
    ("fig1", None),
    ("fig2", None),
    ("beer_quiche", None),
    ("fig4_bq_extended", "1/100"),
    ("example44", None),
    ("example54_GO", None),
    ("km_base", None),
    ("km_extended", None),
    ("signaling", 3),
    ("example63_barG", "1/100"),
]


@pytest.mark.parametrize("name,param", ALL_BUILTINS)
def test_last_actions_match_path_oracle(name, param):
    g = build_builtin(name, param)
    paths = walk_paths(g)
    assert sorted(z for z, _, _ in paths) == list(g.terminals)
    seen = {n: set() for n in g.players}
    for z, prob, last in paths:
        assert g.chance_probability(z) == prob
        for n in g.players:
            assert g.last_action[(n, z)] == last.get(n)
            if n in last:
                seen[n].add(last[n])
    for n in g.players:
        assert set(g.last_actions[n]) == seen[n]


@pytest.mark.parametrize("name,param", ALL_BUILTINS)
def test_builtins_have_perfect_recall(name, param):
    g = build_builtin(name, param)
    assert validate_perfect_recall(g) == []


@pytest.mark.parametrize("name,param", ALL_BUILTINS)
def test_serialize_round_trip(name, param):
    g = build_builtin(name, param)
    text = serialize_game(g)
    again = parse_game(text, name=g.name)
    assert serialize_game(again) == text
    assert again.players == g.players
    assert again.root == g.root
    assert set(again.terminals) == set(g.terminals)
    for z in g.terminals:
        assert again.payoff_vector(z) == g.payoff_vector(z)


def test_fig1_payoffs_and_shape():
    g = build_builtin("fig1")
    vectors = sorted(tuple(g.payoff_vector(z)) for z in g.terminals)
    assert vectors == sorted([(3, 6), (4, 3), (1, 1), (2, 4), (2, 2), (1, 1)])
    assert g.players == ("1", "2")
    assert len(g.infosets) == 4


def test_fig1_last_actions_include_the_continue_move():
    # "go" is player 1's last action on the path ending at (4, 3), so it is
    # a last action even though it is never last on the longer paths.
    g = build_builtin("fig1")
    assert set(g.last_actions["1"]) == {"exit", "go", "r1", "r2"}
    assert set(g.last_actions["2"]) == {"up", "left", "right"}
    assert g.last_action[("1", "z_up")] == "go"
    assert g.last_action[("2", "z_exit")] is None


def test_fig2_third_row():
    g = build_builtin("fig2")
    vectors = sorted(tuple(g.payoff_vector(z)) for z in g.terminals)
    assert vectors == sorted([(3, 6), (4, 3), (1, 1), (2, 4), (2, 2), (1, 1),
                              (1, 1), (3, 0)])
    h = g.infosets["h1b"]
    assert h.actions == ("r1", "r2", "r3")


def test_fig1_reduced_strategies():
    g = build_builtin("fig1")
    labels_1 = {g.reduced_label(r) for r in g.reduced_strategies("1")}
    labels_2 = {g.reduced_label(r) for r in g.reduced_strategies("2")}
    assert labels_1 == {"exit", "go.r1", "go.r2"}
    assert labels_2 == {"up", "down.left", "down.right"}
    assert len(g.full_strategies("1")) == 4


def test_own_history():
    g = build_builtin("fig1")
    assert g.own_history("h1b") == (("h1a", "go"),)
    assert g.own_history("h1a") == ()
    bq = build_builtin("beer_quiche")
    assert bq.own_history("hB") == ()


def test_beer_quiche_shape():
    g = build_builtin("beer_quiche")
    assert g.players == ("weak", "strong", "receiver")
    assert len(g.terminals) == 8
    assert set(g.infosets["hB"].nodes) == {"bw", "bs"}
    assert set(g.infosets["hQ"].nodes) == {"qw", "qs"}
    assert g.chance_probability("z_wbf") == F(1, 10)
    assert g.chance_probability("z_sqr") == F(9, 10)


def test_beer_quiche_pure_outcome():
    g = build_builtin("beer_quiche")
    profile = {
        "weak": {"hw": "beer_w"},
        "strong": {"hs": "beer_s"},
        "receiver": {"hB": "fight_b", "hQ": "fight_q"},
    }
    dist = outcome_of(g, profile)
    assert dist.masses == {"z_wbf": F(1, 10), "z_sbf": F(9, 10)}
    assert dist.payoff(g) == (F(0), F(9, 10), F(1, 10))


def test_fig1_uniform_behavioral_outcome():
    g = build_builtin("fig1")
    behavior = {hid: {a: F(1, len(h.actions)) for a in h.actions}
                for hid, h in g.infosets.items()}
    dist = outcome_of(g, behavior)
    assert dist.masses["z_exit"] == F(1, 2)
    assert dist.masses["z_up"] == F(1, 4)
    assert dist.masses["z_1L"] == F(1, 16)
    assert sum(dist.masses.values()) == 1


def test_fig4_literal_tree():
    g = build_builtin("fig4_bq_extended", "1/100")
    e = F(1, 100)
    assert len(g.terminals) == 12
    assert len(g.infosets["hB"].nodes) == 3
    assert len(g.infosets["hQ"].nodes) == 3
    assert g.payoff_vector("z_mbf") == (-e, F(9, 10), F(1, 10))
    assert g.payoff_vector("z_mbr") == (F(1, 5) - e, F(27, 10), F(9, 10))
    assert g.payoff_vector("z_mqf") == (F(1, 10) - e, F(0), F(1, 10))
    assert g.payoff_vector("z_mqr") == (F(3, 10) - e, F(9, 5), F(9, 10))
    labels = {g.reduced_label(r) for r in g.reduced_strategies("weak")}
    assert labels == {"hedge_w", "play_w.beer_w", "play_w.quiche_w"}
    # the base branch is exactly the beer-quiche game
    assert g.payoff_vector("z_sbr") == (F(0), F(3), F(1))


def test_fig4_eps_range():
    build_builtin("fig4_bq_extended", "1/10")
    with pytest.raises(GameFormatError):
        build_builtin("fig4_bq_extended", "11/100")
    with pytest.raises(GameFormatError):
        build_builtin("fig4_bq_extended", "0")


def test_example44_matrix():
    g = build_builtin("example44")
    rows = {("a1", "b1"): (4, 2), ("a1", "b2"): (0, 0), ("a1", "b3"): (4, 1),
            ("a2", "b1"): (0, 0), ("a2", "b2"): (2, 4), ("a2", "b3"): (0, 1),
            ("a3", "b1"): (1, 2), ("a3", "b2"): (1, 0), ("a3", "b3"): (0, 0)}
    for (ra, cb), u in rows.items():
        dist = outcome_of(g, {"1": {"h_1": ra}, "2": {"h_2": cb}})
        assert dist.payoff(g) == (F(u[0]), F(u[1]))
    assert len(g.reduced_strategies("1")) == 3
    assert len(g.reduced_strategies("2")) == 3


def test_km_games():
    base = build_builtin("km_base")
    assert len(base.reduced_strategies("1")) == 1
    assert len(base.reduced_strategies("2")) == 2
    ext = build_builtin("km_extended")
    dist = outcome_of(ext, {"1": {"h_1": "bottom"}, "2": {"h_2": "right"}})
    assert dist.payoff(ext) == (F(1), F(0))


def test_outside_option_game():
    g = build_builtin("example54_GO")
    labels = {g.reduced_label(r) for r in g.reduced_strategies("o1")}
    assert labels == {"opt_out", "opt_in.mid", "opt_in.low"}
    assert len(g.reduced_strategies("o2")) == 2
    assert len(g.infosets["g3"].nodes) == 2
    dist = outcome_of(g, {"o1": {"g1": "opt_out", "g2": "mid"}, "o2": {"g3": "resp_l"}})
    assert dist.masses == {"z_out": F(1)}
    dist = outcome_of(g, {"o1": {"g1": "opt_in", "g2": "mid"}, "o2": {"g3": "resp_l"}})
    assert dist.payoff(g) == (F(3), F(0))


def test_signaling_game():
    g = build_builtin("signaling", 3)
    assert g.players == ("o1", "o2", "o3", "resp")
    assert len(g.terminals) == 12
    assert len(g.infosets["hr"].nodes) == 3
    assert g.payoff_vector("z_h2") == (F(0), F(3), F(0), F(3))
    # named correctly: the named sender gets zero, responder gets one
    assert g.payoff_vector("z_l1_1") == (F(0), F(0), F(0), F(1))
    # named wrongly: the acting sender collects n + 1
    assert g.payoff_vector("z_l1_2") == (F(4), F(0), F(0), F(0))
    assert g.chance_probability("z_h1") == F(1, 3)
    assert build_builtin("signaling:2").players == ("o1", "o2", "resp")
    with pytest.raises(GameFormatError):
        build_builtin("signaling", 1)


def test_example63_composite_shape():
    g = build_builtin("example63_barG", "1/100")
    assert g.players == ("weak", "strong", "receiver", "o1", "o2")
    assert len(g.terminals) == 68
    assert len(g.infosets["g3"].nodes) == 5
    assert len(g.infosets["hs"].nodes) == 8
    assert len(g.infosets["g1"].nodes) == 2
    assert len(g.infosets["g2"].nodes) == 2
    labels = {g.reduced_label(r) for r in g.reduced_strategies("weak")}
    assert labels == {"quiche_w", "noquiche_w.hedge_w", "noquiche_w.beer_w"}
    with pytest.raises(GameFormatError):
        build_builtin("example63_barG", "6/100")


def test_example63_hedge_payoffs():
    # on the hedge branch the weak sender pays the penalty at every
    # terminal, so his expected transfer is exactly -eps
    e = F(1, 100)
    g = build_builtin("example63_barG", "1/100")
    hedge = None
    for r in g.reduced_strategies("weak"):
        if g.reduced_label(r) == "noquiche_w.hedge_w":
            hedge = dict(r)
    profile = {
        "weak": hedge,
        "strong": {"hs": "quiche_s"},
        "receiver": {"hB": "retreat_b", "hQ": "retreat_q"},
        "o1": {"g1": "opt_out", "g2": "mid"},
        "o2": {"g3": "resp_l"},
    }
    dist = outcome_of(g, profile)
    pv = dist.payoff(g)
    # weak: half beer (2), half quiche (3), against retreat, scaled by the
    # 1/10 type probability, minus the penalty; outsiders: o1 bypassed, the
    # subgame is entered at the bottom row against resp_l
    assert pv[0] == F(1, 10) * (F(1, 2) * 2 + F(1, 2) * 3) - e
    assert pv[1] == F(9, 10) * 2
    assert pv[3] == F(0)
    assert pv[4] == F(2)


def test_composed_no_hedge_is_product_structure():
    g = games.build_composed_bq(None)
    assert g.players == ("weak", "strong", "receiver", "o1", "o2")
    assert len(g.infosets["g3"].nodes) == 4
    profile = {
        "weak": {"hw": "quiche_w"},
        "strong": {"hs": "quiche_s"},
        "receiver": {"hB": "retreat_b", "hQ": "retreat_q"},
        "o1": {"g1": "opt_out", "g2": "mid"},
        "o2": {"g3": "resp_l"},
    }
    pv = outcome_of(g, profile).payoff(g)
    assert pv == (F(3, 10), F(9, 5), F(9, 10), F(2), F(2))


def test_mid_trigger_forces_strong_beer():
    g = games.build_composed_bq(None)
    profile = {
        "weak": {"hw": "quiche_w"},
        "strong": {"hs": "quiche_s"},
        "receiver": {"hB": "retreat_b", "hQ": "retreat_q"},
        "o1": {"g1": "opt_in", "g2": "mid"},
        "o2": {"g3": "resp_l"},
    }
    pv = outcome_of(g, profile).payoff(g)
    # strong is shown as beer despite choosing quiche: retreat at beer pays 3
    assert pv[1] == F(9, 10) * 3
    assert pv[3] == F(3) and pv[4] == F(0)


def test_low_trigger_forces_weak_beer():
    g = games.build_composed_bq(None)
    profile = {
        "weak": {"hw": "quiche_w"},
        "strong": {"hs": "quiche_s"},
        "receiver": {"hB": "fight_b", "hQ": "retreat_q"},
        "o1": {"g1": "opt_in", "g2": "low"},
        "o2": {"g3": "resp_r"},
    }
    pv = outcome_of(g, profile).payoff(g)
    # weak is shown as beer despite choosing quiche: fight at beer pays 0
    assert pv[0] == F(0)
    assert pv[3] == F(3) and pv[4] == F(0)


def test_builtin_registry():
    assert "fig1" in builtin_names()
    with pytest.raises(GameFormatError):
        build_builtin("nosuch")
    with pytest.raises(GameFormatError):
        build_builtin("fig1", "3")


def test_parse_basics():
    text = """
    # a tiny one-shot game with chance
    player left
    player right
    chance c { a:1/3 b:2/3 }
    infoset left hL { a } actions { stop go }
    node a { stop:z1 go:z2 }
    infoset right hR { b } actions { yes no }
    node b { yes:z3 no:z4 }
    terminal z1 payoffs ( 1, 0 )
    terminal z2 payoffs ( 0.5, -2 )
    terminal z3 payoffs ( 1/3, 1 )
    terminal z4 payoffs ( 0, 0 )
    """
    g = parse_game(text, name="tiny")
    assert g.root == "c"
    assert g.payoff_vector("z2") == (F(1, 2), F(-2))
    assert g.payoff_vector("z3") == (F(1, 3), F(1))
    assert g.chance_probability("z4") == F(2, 3)


def test_parse_errors():
    with pytest.raises(GameFormatError):
        parse_game("player 1\nbogus statement\n")
    with pytest.raises(GameFormatError):  # chance probabilities off
        parse_game("""
        player 1
        chance c { z1:1/2 z2:1/3 }
        terminal z1 payoffs ( 0 )
        terminal z2 payoffs ( 0 )
        """)
    with pytest.raises(GameFormatError):  # two parents
        parse_game("""
        player 1
        infoset 1 h { a } actions { l r }
        node a { l:z1 r:z1 }
        terminal z1 payoffs ( 0 )
        """)
    with pytest.raises(GameFormatError):  # node without infoset
        parse_game("""
        player 1
        node a { l:z1 }
        terminal z1 payoffs ( 0 )
        """)
    with pytest.raises(GameFormatError):  # duplicate action labels
        parse_game("""
        player 1
        infoset 1 h1 { a } actions { l r }
        infoset 1 h2 { b } actions { l m }
        node a { l:b r:z1 }
        node b { l:z2 m:z3 }
        terminal z1 payoffs ( 0 )
        terminal z2 payoffs ( 0 )
        terminal z3 payoffs ( 0 )
        """)


def test_float_payoffs_refused():
    with pytest.raises(GameFormatError):
        games.rational(0.5)
    # decimal strings are fine and exact
    assert games.rational("0.25") == F(1, 4)
    assert games.rational("-3/7") == F(-3, 7)


def test_perfect_recall_violation_detected():
    text = """
    player 1
    infoset 1 ha { r } actions { l r }
    infoset 1 hb { x y } actions { u v }
    node r { l:x r:y }
    node x { u:z1 v:z2 }
    node y { u:z3 v:z4 }
    terminal z1 payoffs ( 0 )
    terminal z2 payoffs ( 0 )
    terminal z3 payoffs ( 0 )
    terminal z4 payoffs ( 0 )
    """
    g = parse_game(text, name="forgetful")
    problems = validate_perfect_recall(g)
    assert len(problems) == 1
    assert problems[0].witnesses[0] == "hb"
    assert set(problems[0].witnesses[1:]) == {"x", "y"}


def test_outcome_distribution_helpers():
    d1 = OutcomeDistribution({"a": F(1, 2), "b": F(1, 2)})
    d2 = OutcomeDistribution({"a": F(1, 4), "c": F(3, 4)})
    assert d1.tv_distance(d2) == F(3, 4)
    assert d1.tv_distance(d1) == 0
    assert d1.support() == ("a", "b")
    with pytest.raises(ValueError):
        OutcomeDistribution({"a": F(1, 3)})


def test_terminals_after_infoset():
    g = build_builtin("fig1")
    zs = set(g.terminals_after_infoset("h2b"))
    assert zs == {"z_1L", "z_1R", "z_2L", "z_2R"}
    assert set(g.terminals_through("v2")) == {"z_up", "z_1L", "z_1R", "z_2L", "z_2R"}
