"""Normal form construction, dominance, and equilibrium enumeration.

The enumeration tests pin exact hand-derived component geometry for the
builtin games and cross-check random two-player games against an
independent oracle: completely labeled vertex pairs of the two
best-reply polytopes, computed here with a local Gaussian solver so no
package code is shared with the engine under test.
"""

import itertools
import random
from fractions import Fraction

import pytest

from efgkit.equilibria import (
    NormalForm,
    NormalFormSizeError,
    best_replies,
    dominance,
    enumerate_equilibria,
    group_components,
    profile_regrets,
    to_normal_form,
)
from efgkit.games import build_builtin, build_composed_bq, one_shot_game
from efgkit.strategies import MixedProfile, mixed_to_enabling, payoff_enabling

F = Fraction


# ---------------------------------------------------------------------------
# normal form construction


def _enabling_payoff(game, combo):
    """Payoff of a pure profile via the enabling-form route."""
    sigma = MixedProfile(game, {n: {s: F(1)} for n, s in zip(game.players, combo)})
    return payoff_enabling(game, mixed_to_enabling(game, sigma))


@pytest.mark.parametrize("name", ["fig1", "km_extended", "example54_GO",
                                  "beer_quiche"])
def test_normal_form_agrees_with_enabling_route(name):
    game = build_builtin(name)
    nf = to_normal_form(game)
    assert nf.profile_count() == len(nf.table)
    for combo, pv in nf.table.items():
        assert _enabling_payoff(game, combo) == pv


def test_normal_form_composite_spot_checks():
    game = build_builtin("example63_barG")
    nf = to_normal_form(game)
    rng = random.Random(7)
    combos = list(nf.table)
    for combo in rng.sample(combos, 25):
        assert _enabling_payoff(game, combo) == nf.table[combo]


def test_normal_form_cap():
    game = build_builtin("fig1")
    with pytest.raises(NormalFormSizeError):
        to_normal_form(game, cap=5)
    nf = to_normal_form(game, cap=9)
    assert nf.shape == (3, 3)


def _bimatrix_nf(A, B, name="rand"):
    m, n = len(A), len(A[0])
    rows = tuple(f"r{i}" for i in range(m))
    cols = tuple(f"c{j}" for j in range(n))
    table = {(rows[i], cols[j]): (F(A[i][j]), F(B[i][j]))
             for i in range(m) for j in range(n)}
    return NormalForm(("R", "C"), {"R": rows, "C": cols}, table, name=name)


def test_best_replies_reports_exact_ties():
    pennies = _bimatrix_nf([[1, -1], [-1, 1]], [[-1, 1], [1, -1]], "pennies")
    half = {"c0": F(1, 2), "c1": F(1, 2)}
    assert best_replies(pennies, "R", {"C": half}) == ("r0", "r1")
    assert best_replies(pennies, "R", {"C": {"c0": F(1)}}) == ("r0",)


# ---------------------------------------------------------------------------
# dominance


def _strategy(nf, player, label):
    return next(s for s in nf.strategies[player] if nf.label(player, s) == label)


def test_dominance_needs_a_mixture_in_example44():
    nf = to_normal_form(build_builtin("example44"))
    a3 = _strategy(nf, "1", "a3")
    assert not dominance(nf, "1", a3, mode="strict", against="pure").dominated
    rep = dominance(nf, "1", a3, mode="strict", against="mixed")
    assert rep.dominated
    # replay the witness against every opposing pure profile
    mix = rep.witness
    for t in mix:
        assert t != a3
    for c in nf.strategies["2"]:
        dominator = sum(w * nf.payoff((t, c), "1") for t, w in mix.items())
        assert dominator > nf.payoff((a3, c), "1")

    b3 = _strategy(nf, "2", "b3")
    assert not dominance(nf, "2", b3, mode="strict", against="pure").dominated
    assert dominance(nf, "2", b3, mode="strict", against="mixed").dominated


def test_dominance_pure_witness_in_km_extended():
    nf = to_normal_form(build_builtin("km_extended"))
    bottom = _strategy(nf, "1", "bottom")
    rep = dominance(nf, "1", bottom, mode="strict", against="pure")
    assert rep.dominated
    (t, w), = rep.witness.items()
    assert nf.label("1", t) == "top" and w == 1


def test_duplicate_strategies_are_not_dominated():
    nf = _bimatrix_nf([[1, 2], [1, 2]], [[0, 0], [0, 0]], "dup")
    for mode in ("weak", "strict"):
        for against in ("pure", "mixed"):
            assert not dominance(nf, "R", "r0", mode=mode,
                                 against=against).dominated


# ---------------------------------------------------------------------------
# enumeration on games solved by hand


def _dist(eq, player):
    return {k: v for k, v in eq.dists[player].items() if v != 0}


def test_matching_pennies_has_one_equilibrium():
    nf = _bimatrix_nf([[1, -1], [-1, 1]], [[-1, 1], [1, -1]], "pennies")
    res = enumerate_equilibria(nf)
    assert len(res) == 1
    eq = res.equilibria[0]
    assert eq.exact
    assert _dist(eq, "R") == {"r0": F(1, 2), "r1": F(1, 2)}
    assert _dist(eq, "C") == {"c0": F(1, 2), "c1": F(1, 2)}
    assert max(eq.regrets.values()) == 0
    comps = group_components(None, res)
    assert len(comps) == 1 and comps[0].connected == "verified"


def _family_vertices(res, player, labels):
    """Vertex set of the unique family whose polytope for ``player`` is
    over exactly ``labels``; coordinates returned in ``labels`` order."""
    hits = []
    for fam in res.families.values():
        poly = fam.polytopes.get(player)
        if poly is None or sorted(poly["strategies"]) != sorted(labels):
            continue
        order = [poly["strategies"].index(lab) for lab in labels]
        verts = {tuple(F(v[k]) for k in order) for v in poly["vertices"]}
        hits.append(verts)
    assert len(hits) == 1, f"expected one family over {labels}, got {len(hits)}"
    return hits[0]


def test_fig1_component_geometry():
    game = build_builtin("fig1")
    res = enumerate_equilibria(to_normal_form(game))
    assert not res.skipped and all(e.exact for e in res)
    comps = group_components(game, res)
    assert len(comps) == 2
    by_payoff = {c.payoff: c for c in comps}
    assert set(by_payoff) == {(F(3), F(6)), (F(4), F(3))}

    stop = by_payoff[(F(3), F(6))]
    assert stop.connected == "verified"
    for w in stop.witnesses:
        assert _dist(w, "1") == {_strategy(res.nf, "1", "exit"): F(1)}
    # the full-support polytope of the stopping component: 2u <= 1 + l
    # and 3u + l <= 2 over the simplex, five vertices
    verts = _family_vertices(res, "2", ["up", "down.left", "down.right"])
    assert verts == {
        (F(0), F(1), F(0)),
        (F(0), F(0), F(1)),
        (F(1, 2), F(0), F(1, 2)),
        (F(1, 2), F(1, 2), F(0)),
        (F(3, 5), F(1, 5), F(1, 5)),
    }

    enter = by_payoff[(F(4), F(3))]
    assert enter.connected == "verified"
    up = _strategy(res.nf, "2", "up")
    for w in enter.witnesses:
        assert _dist(w, "2") == {up: F(1)}
    verts = _family_vertices(res, "1", ["go.r1", "go.r2"])
    assert verts == {(F(0), F(1)), (F(2, 3), F(1, 3))}


def test_outside_option_single_component():
    game = build_builtin("example54_GO")
    res = enumerate_equilibria(to_normal_form(game))
    comps = group_components(game, res)
    assert len(comps) == 1
    comp = comps[0]
    assert comp.payoff == (F(2), F(2))
    assert comp.connected == "verified"
    out = _strategy(res.nf, "o1", "opt_out")
    for w in comp.witnesses:
        assert _dist(w, "o1") == {out: F(1)}
    verts = _family_vertices(res, "o2", ["resp_l", "resp_r"])
    assert verts == {(F(1, 3), F(2, 3)), (F(2, 3), F(1, 3))}


def test_beer_quiche_two_pooling_components():
    game = build_builtin("beer_quiche")
    res = enumerate_equilibria(to_normal_form(game))
    assert not res.skipped and not res.warnings
    comps = group_components(game, res)
    assert len(comps) == 2
    by_payoff = {c.payoff: c for c in comps}
    beer = by_payoff[(F(1, 5), F(27, 10), F(9, 10))]
    quiche = by_payoff[(F(3, 10), F(9, 5), F(9, 10))]

    assert beer.outcome.as_json() == {"z_wbr": "1/10", "z_sbr": "9/10"}
    assert quiche.outcome.as_json() == {"z_wqr": "1/10", "z_sqr": "9/10"}
    assert beer.connected == "verified"
    assert quiche.connected == "verified"

    # receivers mix the on-path retreat with enough off-path fight
    verts = _family_vertices(res, "receiver",
                             ["retreat_b.fight_q", "retreat_b.retreat_q"])
    assert verts == {(F(1, 2), F(1, 2)), (F(1), F(0))}
    verts = _family_vertices(res, "receiver",
                             ["fight_b.retreat_q", "retreat_b.retreat_q"])
    assert verts == {(F(1, 2), F(1, 2)), (F(1), F(0))}


def test_composite_components_are_products():
    game = build_composed_bq(None)
    res = enumerate_equilibria(to_normal_form(game))
    comps = group_components(game, res)
    assert len(comps) == 2
    payoffs = {c.payoff for c in comps}
    assert payoffs == {
        (F(1, 5), F(27, 10), F(9, 10), F(2), F(2)),
        (F(3, 10), F(9, 5), F(9, 10), F(2), F(2)),
    }
    for c in comps:
        assert c.connected == "verified"
    # degenerate three-mixer supports are reported, never silently dropped
    allowed = {"positive-dimensional-sampled", "multistart-only",
               "candidate-failed-verification", "too-many-unknowns"}
    assert {s["reason"] for s in res.skipped} <= allowed


def test_three_player_cycle_exact_interior_point():
    acts = [("a1", "b1"), ("a2", "b2"), ("a3", "b3")]

    def pay(combo):
        idx = [acts[k].index(combo[k]) for k in range(3)]
        return tuple(F(1 if idx[k] == idx[(k + 1) % 3] else 0)
                     for k in range(3))

    game = one_shot_game("cycle3", ["p1", "p2", "p3"], acts, pay)
    res = enumerate_equilibria(to_normal_form(game))
    assert len(res) == 3
    assert all(e.exact for e in res)
    interior = [e for e in res if all(len(_dist(e, n)) == 2
                                      for n in ("p1", "p2", "p3"))]
    assert len(interior) == 1
    assert all(w == F(1, 2) for n in ("p1", "p2", "p3")
               for w in interior[0].dists[n].values())
    comps = group_components(game, res)
    assert len(comps) == 3
    assert all(c.connected == "verified" for c in comps)


def test_km_outcome_drift_is_flagged():
    game = build_builtin("km_base")
    res = enumerate_equilibria(to_normal_form(game))
    comps = group_components(game, res)
    assert len(comps) == 1
    comp = comps[0]
    assert comp.payoff == (F(5, 2), F(2))
    assert comp.connected == "verified"
    assert any("spans" in w for w in comp.warnings)

    # the dominated extension adds strategies but no equilibria
    game2 = build_builtin("km_extended")
    res2 = enumerate_equilibria(to_normal_form(game2))
    comps2 = group_components(game2, res2)
    assert len(comps2) == 1
    assert comps2[0].payoff == (F(5, 2), F(2))


# ---------------------------------------------------------------------------
# budget, caps, determinism


def test_budget_is_honoured():
    nf = to_normal_form(build_builtin("fig1"))
    res = enumerate_equilibria(nf, budget=3)
    budget_skips = [s for s in res.skipped if s["reason"] == "budget"]
    assert len(budget_skips) == 49 - 3  # (2^3-1)^2 support pairs


def test_max_support_one_yields_the_pure_equilibria():
    nf = to_normal_form(build_builtin("fig1"))
    res = enumerate_equilibria(nf, max_support=1)
    found = {(nf.label("1", next(iter(_dist(e, "1")))),
              nf.label("2", next(iter(_dist(e, "2"))))) for e in res}
    assert found == {("exit", "down.left"), ("exit", "down.right"),
                     ("go.r2", "up")}


def test_enumeration_is_deterministic():
    nf = to_normal_form(build_builtin("beer_quiche"))
    a = enumerate_equilibria(nf, seed=3)
    b = enumerate_equilibria(nf, seed=3)
    assert [e.as_json(nf) for e in a] == [e.as_json(nf) for e in b]
    assert a.skipped == b.skipped and a.warnings == b.warnings


# ---------------------------------------------------------------------------
# random bimatrix games against the labeled-polytope oracle


def _solve_square(rows, rhs):
    n = len(rows)
    M = [[F(a) for a in row] + [F(v)] for row, v in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        M[col] = [a / M[col][col] for a in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def _poly_vertices(C, d):
    """Vertices of {x >= 0, Cx <= 1} by brute force over tight sets."""
    cons = [([F(int(k == i)) for k in range(d)], F(0)) for i in range(d)]
    cons += [([F(a) for a in row], F(1)) for row in C]
    verts = set()
    for combo in itertools.combinations(range(len(cons)), d):
        x = _solve_square([cons[i][0] for i in combo],
                          [cons[i][1] for i in combo])
        if x is None or any(v < 0 for v in x):
            continue
        if any(sum(F(a) * v for a, v in zip(row, x)) > 1 for row in C):
            continue
        verts.add(tuple(x))
    return verts


def _extreme_equilibria(A, B):
    """Completely labeled vertex pairs, normalized to distributions."""
    m, n = len(A), len(A[0])
    A1 = [[a + 1 - min(min(r) for r in A) for a in row] for row in A]
    B1 = [[b + 1 - min(min(r) for r in B) for b in row] for row in B]
    Bt = [[B1[i][j] for i in range(m)] for j in range(n)]
    full = set(range(m + n))
    out = set()
    for x in _poly_vertices(Bt, m):
        if not any(x):
            continue
        xl = {i for i in range(m) if x[i] == 0}
        xl |= {m + j for j in range(n)
               if sum(B1[i][j] * x[i] for i in range(m)) == 1}
        for y in _poly_vertices(A1, n):
            if not any(y):
                continue
            yl = {m + j for j in range(n) if y[j] == 0}
            yl |= {i for i in range(m)
                   if sum(A1[i][j] * y[j] for j in range(n)) == 1}
            if xl | yl == full:
                sx, sy = sum(x), sum(y)
                out.add((tuple(v / sx for v in x), tuple(v / sy for v in y)))
    return out


def _engine_points(nf, res):
    pts = set()
    for e in res:
        assert e.exact
        x = tuple(e.dists["R"].get(s, F(0)) for s in nf.strategies["R"])
        y = tuple(e.dists["C"].get(s, F(0)) for s in nf.strategies["C"])
        pts.add((x, y))
    return pts


def _local_regret(nf, eq):
    worst = F(0)
    for player, other in (("R", "C"), ("C", "R")):
        opp = eq.dists[other]
        cur = sum(wr * wc * nf.payoff((r, c) if player == "R" else (c, r),
                                      player)
                  for r, wr in eq.dists[player].items()
                  for c, wc in opp.items())
        for s in nf.strategies[player]:
            dev = sum(wc * nf.payoff((s, c) if player == "R" else (c, s),
                                     player)
                      for c, wc in opp.items())
            worst = max(worst, dev - cur)
    return worst


@pytest.mark.parametrize("shape,count", [((2, 2), 40), ((3, 2), 20),
                                         ((3, 3), 20)])
def test_random_bimatrix_against_polytope_oracle(shape, count):
    m, n = shape
    rng = random.Random(20260819 + 10 * m + n)
    for trial in range(count):
        A = [[rng.randint(-4, 4) for _ in range(n)] for _ in range(m)]
        B = [[rng.randint(-4, 4) for _ in range(n)] for _ in range(m)]
        nf = _bimatrix_nf(A, B, f"rand{m}{n}_{trial}")
        res = enumerate_equilibria(nf)
        assert not res.skipped
        got = _engine_points(nf, res)
        for e in res:
            assert _local_regret(nf, e) == 0
        oracle = _extreme_equilibria(A, B)
        assert oracle <= got, f"missed extreme equilibria in trial {trial}"
        if all(f.dimension == 0 for f in res.families.values()):
            assert got == oracle, f"spurious points in trial {trial}"


def test_profile_regrets_positive_off_equilibrium():
    nf = _bimatrix_nf([[1, -1], [-1, 1]], [[-1, 1], [1, -1]], "pennies")
    reg = profile_regrets(nf, {"R": {"r0": F(1)}, "C": {"c0": F(1)}})
    assert reg["C"] == 2 and reg["R"] == 0
