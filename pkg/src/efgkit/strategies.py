"""Strategy representations and the maps between them.

Three interchangeable views of play are used throughout:

* mixed: per player, a distribution over reduced pure strategies;
* behavioral: per information set, a local distribution over actions;
* enabling: per player, the probability p_n(a_n) of choosing every own
  action leading up to and including a_n, for each last action a_n.

All three carry exact rationals.  Payoffs in the enabling view use
U_n(p) = Σ_z p_0(z) · Π_m p_m(a_m(z)) · u_n(z), with p_m(a_m(z)) read as 1
when m never acts on the path to z.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple

from . import lp
from .games import (GameTree, OutcomeDistribution, format_rational, rational)


class MixedProfile:
    """Per player, a distribution over reduced pure strategies.

    Keys are the reduced strategies as returned by
    GameTree.reduced_strategies: tuples of (infoset, action) pairs.
    """

    def __init__(self, game: GameTree, dists: Mapping[str, Mapping]):
        self.game = game
        self.dists = {}
        for n in game.players:
            d = {r: Fraction(w) for r, w in dists[n].items() if w != 0}
            total = sum(d.values(), Fraction(0))
            if total != 1:
                raise ValueError(f"player {n} mixed weights sum to {total}")
            if any(w < 0 for w in d.values()):
                raise ValueError(f"player {n} has a negative weight")
            self.dists[n] = d

    def weight(self, n, reduced) -> Fraction:
        return self.dists[n].get(reduced, Fraction(0))

    def as_json(self):
        return {n: {self.game.reduced_label(r): format_rational(w)
                    for r, w in sorted(d.items())}
                for n, d in self.dists.items()}

    def __repr__(self):
        parts = []
        for n, d in self.dists.items():
            inner = ", ".join(f"{self.game.reduced_label(r)}: {format_rational(w)}"
                              for r, w in sorted(d.items()))
            parts.append(f"{n}: {{{inner}}}")
        return "MixedProfile(" + "; ".join(parts) + ")"


class BehavioralProfile:
    """Per information set, a local distribution over its actions."""

    def __init__(self, game: GameTree, tables: Mapping[str, Mapping[str, Fraction]]):
        self.game = game
        self.tables = {}
        for hid, h in game.infosets.items():
            local = tables.get(hid)
            if local is None:
                raise ValueError(f"missing local distribution for {hid}")
            d = {a: Fraction(local.get(a, 0)) for a in h.actions}
            total = sum(d.values(), Fraction(0))
            if total != 1:
                raise ValueError(f"infoset {hid} probabilities sum to {total}")
            if any(w < 0 for w in d.values()):
                raise ValueError(f"infoset {hid} has a negative probability")
            self.tables[hid] = d

    def prob(self, infoset: str, action: str) -> Fraction:
        return self.tables[infoset][action]

    def as_json(self):
        return {hid: {a: format_rational(w) for a, w in sorted(d.items())}
                for hid, d in sorted(self.tables.items())}

    def __repr__(self):
        return f"BehavioralProfile({self.as_json()})"


class EnablingProfile:
    """Per player, entries over the last actions L_n."""

    def __init__(self, game: GameTree, vectors: Mapping[str, Mapping[str, Fraction]]):
        self.game = game
        self.vectors = {}
        for n in game.players:
            vec = vectors[n]
            out = {}
            for a in game.last_actions[n]:
                v = Fraction(vec.get(a, 0))
                if not 0 <= v <= 1:
                    raise ValueError(f"entry p_{n}({a}) = {v} outside [0, 1]")
                out[a] = v
            self.vectors[n] = out

    def prob(self, n: str, action: Optional[str]) -> Fraction:
        if action is None:
            return Fraction(1)
        return self.vectors[n][action]

    def minus(self, n: str, z: str) -> Fraction:
        """p_{-n}(z): chance times every other player's last-action entry."""
        g = self.game
        out = g.chance_probability(z)
        for m in g.players:
            if m != n:
                out *= self.prob(m, g.last_action[(m, z)])
        return out

    def as_json(self):
        return {n: {a: format_rational(v) for a, v in sorted(vec.items())}
                for n, vec in self.vectors.items()}

    def __repr__(self):
        return f"EnablingProfile({self.as_json()})"


# ---------------------------------------------------------------------------
# conversions


def uniform_mixed(game: GameTree) -> MixedProfile:
    dists = {}
    for n in game.players:
        rs = game.reduced_strategies(n)
        dists[n] = {r: Fraction(1, len(rs)) for r in rs}
    return MixedProfile(game, dists)


def pure_mixed(game: GameTree, choices: Mapping[str, Mapping[str, str]]) -> MixedProfile:
    """Point-mass profile from full strategies keyed by player."""
    dists = {}
    for n in game.players:
        reduced = game.reduce_strategy(n, dict(choices[n]))
        dists[n] = {reduced: Fraction(1)}
    return MixedProfile(game, dists)


def mixed_to_enabling(game: GameTree, sigma: MixedProfile) -> EnablingProfile:
    vectors = {}
    for n in game.players:
        vec = {}
        for a in game.last_actions[n]:
            vec[a] = sum((w for r, w in sigma.dists[n].items()
                          if game.strategy_enables(n, r, a)), Fraction(0))
        vectors[n] = vec
    return EnablingProfile(game, vectors)


def mixed_to_behavioral(game: GameTree, sigma: MixedProfile) -> BehavioralProfile:
    """Kuhn conversion; information sets excluded by the player's own
    strategy get the uniform local distribution."""
    tables = {}
    for n in game.players:
        dist = sigma.dists[n]
        for hid in game.player_infosets[n]:
            h = game.infosets[hid]
            hist = game.own_history(hid)
            reach = Fraction(0)
            act_mass = {a: Fraction(0) for a in h.actions}
            for r, w in dist.items():
                table = dict(r)
                if all(table.get(hh) == aa for hh, aa in hist):
                    reach += w
                    chosen = table.get(hid)
                    if chosen is not None:
                        act_mass[chosen] += w
            if reach == 0:
                tables[hid] = {a: Fraction(1, len(h.actions)) for a in h.actions}
            else:
                tables[hid] = {a: act_mass[a] / reach for a in h.actions}
    return BehavioralProfile(game, tables)


def behavioral_to_mixed(game: GameTree, b: BehavioralProfile) -> MixedProfile:
    """Product-form mixed strategy over reduced pures."""
    dists = {}
    for n in game.players:
        d = {}
        for r in game.reduced_strategies(n):
            w = Fraction(1)
            for hid, a in r:
                w *= b.prob(hid, a)
                if w == 0:
                    break
            if w != 0:
                d[r] = w
        dists[n] = d
    return MixedProfile(game, dists)


def outcome_of_mixed(game: GameTree, sigma: MixedProfile) -> OutcomeDistribution:
    from .games import outcome_of
    return outcome_of(game, mixed_to_behavioral(game, sigma))


def outcome_of_enabling(game: GameTree, p: EnablingProfile) -> OutcomeDistribution:
    masses = {}
    for z in game.terminals:
        mass = game.chance_probability(z)
        for n in game.players:
            mass *= p.prob(n, game.last_action[(n, z)])
        if mass:
            masses[z] = mass
    return OutcomeDistribution(masses)


# ---------------------------------------------------------------------------
# payoffs


def payoff_pure(game: GameTree, profile: Mapping[str, Tuple]) -> Tuple[Fraction, ...]:
    """Payoff vector of a reduced pure profile, by direct tree walk."""
    total = [Fraction(0)] * len(game.players)
    tables = {n: dict(profile[n]) for n in game.players}
    for z in game.terminals:
        mass = game.chance_probability(z)
        if mass == 0:
            continue
        _, _, hist = game.path_to_terminal(z)
        ok = True
        for n in game.players:
            for hid, a in hist[n]:
                if tables[n].get(hid) != a:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            for i, u in enumerate(game.payoff_vector(z)):
                total[i] += mass * u
    return tuple(total)


def payoff_mixed(game: GameTree, sigma: MixedProfile, n=None):
    """Expected payoffs by direct expectation over pure profiles."""
    players = game.players
    supports = [sorted(sigma.dists[m].items()) for m in players]
    total = [Fraction(0)] * len(players)
    for combo in itertools.product(*supports):
        weight = Fraction(1)
        for _, w in combo:
            weight *= w
        pure = {m: r for m, (r, _) in zip(players, combo)}
        pv = payoff_pure(game, pure)
        for i in range(len(players)):
            total[i] += weight * pv[i]
    if n is None:
        return tuple(total)
    return total[players.index(n)]


def payoff_enabling(game: GameTree, p: EnablingProfile, n=None):
    """The last-action payoff formula, exactly."""
    players = game.players
    total = [Fraction(0)] * len(players)
    for z in game.terminals:
        mass = game.chance_probability(z)
        if mass == 0:
            continue
        for m in players:
            mass *= p.prob(m, game.last_action[(m, z)])
            if mass == 0:
                break
        if mass == 0:
            continue
        for i, u in enumerate(game.payoff_vector(z)):
            total[i] += mass * u
    if n is None:
        return tuple(total)
    return total[players.index(n)]


def payoff_behavioral(game: GameTree, b: BehavioralProfile, n=None):
    from .games import outcome_of
    dist = outcome_of(game, b)
    pv = dist.payoff(game)
    if n is None:
        return pv
    return pv[game.players.index(n)]


# ---------------------------------------------------------------------------
# realizability


def is_realizable(game: GameTree, n: str, vector: Mapping[str, Fraction]):
    """Membership of a candidate vector in P_n = π_n(Σ_n).

    Returns (True, witness MixedProfile dist for n) or (False, None); decided
    by exact linear feasibility over the reduced pure strategies.
    """
    last = game.last_actions[n]
    for a in last:
        v = Fraction(vector.get(a, 0))
        if not 0 <= v <= 1:
            return False, None
    reduced = game.reduced_strategies(n)
    A_eq = []
    b_eq = []
    for a in last:
        A_eq.append([Fraction(int(game.strategy_enables(n, r, a))) for r in reduced])
        b_eq.append(Fraction(vector.get(a, 0)))
    A_eq.append([Fraction(1)] * len(reduced))
    b_eq.append(Fraction(1))
    x = lp.linear_feasible(A_eq=A_eq, b_eq=b_eq)
    if x is None:
        return False, None
    witness = {r: w for r, w in zip(reduced, x) if w != 0}
    return True, witness


def enabling_vertices(game: GameTree, n: str):
    """Vertices of P_n: images of the reduced pure strategies (π is
    injective on reduced pures, so these are exactly the candidate
    vertices; duplicates are collapsed)."""
    seen = {}
    for r in game.reduced_strategies(n):
        key = tuple(Fraction(int(game.strategy_enables(n, r, a)))
                    for a in game.last_actions[n])
        seen.setdefault(key, r)
    return [(dict(zip(game.last_actions[n], key)), r) for key, r in seen.items()]
