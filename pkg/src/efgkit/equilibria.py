"""Normal forms, dominance tests, and exact Nash equilibrium enumeration.

Enumeration walks strategy supports in lexicographic order.  Supports where
at most two players mix reduce to linear systems over the mixing players and
are solved in exact rational arithmetic, continua included.  Supports with
three or more mixing players go through a polynomial back end (lex Groebner
basis, branching back-substitution, damped Newton polish); candidates from
that path are kept only when an independent regret check passes.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import lp
from .games import GameTree, OutcomeDistribution, format_rational
from .strategies import MixedProfile, outcome_of_mixed, payoff_pure

ZERO = Fraction(0)
ONE = Fraction(1)


class NormalFormSizeError(ValueError):
    """Raised when a game's pure-profile count exceeds the cap."""


class NormalForm:
    """A payoff tensor over pure strategy profiles.

    ``strategies[n]`` is an ordered tuple of strategy keys for player ``n``
    and ``table`` maps full profiles (one key per player, in player order) to
    exact payoff tuples.  When built from a game tree the keys are reduced
    strategies and ``game`` is retained so profiles can be mapped back.
    """

    def __init__(self, players, strategies, table, labels=None, game=None,
                 name="nf"):
        self.players = tuple(players)
        self.strategies = {n: tuple(strategies[n]) for n in self.players}
        self.table = dict(table)
        if labels is None:
            labels = {n: {s: str(s) for s in self.strategies[n]}
                      for n in self.players}
        self.labels = labels
        self.game = game
        self.name = name
        self._index = {n: i for i, n in enumerate(self.players)}

    @property
    def shape(self):
        return tuple(len(self.strategies[n]) for n in self.players)

    def profile_count(self) -> int:
        count = 1
        for n in self.players:
            count *= len(self.strategies[n])
        return count

    def label(self, n, s) -> str:
        return self.labels[n][s]

    def payoff(self, profile, player=None):
        pv = self.table[tuple(profile)]
        if player is None:
            return pv
        return pv[self._index[player]]

    def expected(self, dists, player=None):
        """Expected payoff of a product distribution over pure strategies."""
        supports = []
        for n in self.players:
            items = [(s, w) for s, w in sorted(dists[n].items()) if w != 0]
            supports.append(items)
        if player is None:
            total = [ZERO] * len(self.players)
        else:
            total = ZERO
        for combo in itertools.product(*supports):
            w = ONE
            for _, wn in combo:
                w *= wn
            if w == 0:
                continue
            pv = self.table[tuple(s for s, _ in combo)]
            if player is None:
                for i, u in enumerate(pv):
                    total[i] += w * u
            else:
                total += w * pv[self._index[player]]
        return tuple(total) if player is None else total

    def deviation_payoffs(self, player, dists):
        """U_n(s, sigma_{-n}) for every pure s of ``player``, exactly."""
        others = [m for m in self.players if m != player]
        supports = []
        for m in others:
            items = [(s, w) for s, w in sorted(dists[m].items()) if w != 0]
            supports.append(items)
        out = {s: ZERO for s in self.strategies[player]}
        pidx = self._index[player]
        for combo in itertools.product(*supports):
            w = ONE
            for _, wm in combo:
                w *= wm
            if w == 0:
                continue
            assign = dict(zip(others, (s for s, _ in combo)))
            for s in self.strategies[player]:
                assign[player] = s
                prof = tuple(assign[m] for m in self.players)
                out[s] += w * self.table[prof][pidx]
        return out


def to_normal_form(game: GameTree, cap: int = 10_000) -> NormalForm:
    """Reduced normal form of a game tree, with exact payoffs.

    Raises NormalFormSizeError when the profile count exceeds ``cap``.
    """
    strategies = {n: game.reduced_strategies(n) for n in game.players}
    count = 1
    for n in game.players:
        count *= len(strategies[n])
    if count > cap:
        raise NormalFormSizeError(
            f"{game.name}: {count} pure profiles exceed the cap of {cap}")
    table = {}
    for combo in itertools.product(*[strategies[n] for n in game.players]):
        profile = dict(zip(game.players, combo))
        table[combo] = payoff_pure(game, profile)
    labels = {n: {s: game.reduced_label(s) for s in strategies[n]}
              for n in game.players}
    return NormalForm(game.players, strategies, table, labels=labels,
                      game=game, name=game.name)


def profile_regrets(nf: NormalForm, dists) -> Dict[str, Fraction]:
    """Per-player regret: best pure deviation payoff minus current payoff.

    Computed directly from the payoff table, independent of how the profile
    was produced.  A profile is a Nash equilibrium iff every regret is 0.
    """
    out = {}
    for n in nf.players:
        dev = nf.deviation_payoffs(n, dists)
        current = sum((dists[n][s] * dev[s] for s in dists[n]
                       if dists[n][s] != 0), ZERO)
        out[n] = max(dev.values()) - current
    return out


def best_replies(nf: NormalForm, player, dists) -> tuple:
    """Pure best replies of ``player`` against the others' mix, exact ties."""
    dev = nf.deviation_payoffs(player, dists)
    top = max(dev.values())
    return tuple(s for s in nf.strategies[player] if dev[s] == top)


@dataclass
class DominanceReport:
    dominated: bool
    mode: str
    against: str
    witness: Optional[dict] = None

    def as_json(self):
        w = None
        if self.witness is not None:
            w = {str(s): format_rational(v) for s, v in self.witness.items()}
        return {"dominated": self.dominated, "mode": self.mode,
                "against": self.against, "witness": w}


def dominance(nf: NormalForm, player, strategy, mode: str = "weak",
              against: str = "mixed") -> DominanceReport:
    """Is ``strategy`` dominated?  Returns the dominating mixture if so.

    mode "weak" requires at least one strictly better profile; a duplicate
    of another strategy is therefore not weakly dominated.  against "pure"
    restricts dominators to single strategies.
    """
    if mode not in ("weak", "strict"):
        raise ValueError(f"unknown mode {mode!r}")
    if against not in ("pure", "mixed"):
        raise ValueError(f"unknown against {against!r}")
    others = [m for m in nf.players if m != player]
    opp_profiles = list(itertools.product(*[nf.strategies[m] for m in others]))

    def row(s):
        vals = []
        for opp in opp_profiles:
            assign = dict(zip(others, opp))
            assign[player] = s
            prof = tuple(assign[m] for m in nf.players)
            vals.append(nf.table[prof][nf._index[player]])
        return vals

    base = row(strategy)
    rivals = [t for t in nf.strategies[player] if t != strategy]
    if not rivals:
        return DominanceReport(False, mode, against)

    if against == "pure":
        for t in rivals:
            r = row(t)
            if mode == "strict":
                if all(a > b for a, b in zip(r, base)):
                    return DominanceReport(True, mode, against, {t: ONE})
            else:
                if all(a >= b for a, b in zip(r, base)) and \
                        any(a > b for a, b in zip(r, base)):
                    return DominanceReport(True, mode, against, {t: ONE})
        return DominanceReport(False, mode, against)

    rows = [row(t) for t in rivals]
    k, m = len(rivals), len(opp_profiles)
    if mode == "strict":
        # maximize d subject to sum_t x_t U(t,p) - U(s,p) >= d, x in simplex
        c = [ZERO] * k + [ONE]
        A_ub = []
        b_ub = []
        for j in range(m):
            A_ub.append([-rows[i][j] for i in range(k)] + [ONE])
            b_ub.append(-base[j])
        res = lp.lp_solve(c, A_ub=A_ub, b_ub=b_ub,
                          A_eq=[[ONE] * k + [ZERO]], b_eq=[ONE],
                          bounds=[(ZERO, None)] * k + [(None, None)],
                          maximize=True)
        if res.ok and res.fun > 0:
            witness = {rivals[i]: res.x[i] for i in range(k) if res.x[i] != 0}
            return DominanceReport(True, mode, against, witness)
        return DominanceReport(False, mode, against)

    # weak: maximize total surplus with per-profile surplus >= 0
    c = [ZERO] * k + [ONE] * m
    A_eq = [[ONE] * k + [ZERO] * m]
    b_eq = [ONE]
    for j in range(m):
        # sum_t x_t U(t,p_j) - s_j = U(s,p_j)
        A_eq.append([rows[i][j] for i in range(k)] +
                    [-ONE if jj == j else ZERO for jj in range(m)])
        b_eq.append(base[j])
    # cap surpluses so the LP stays bounded even with duplicate rows
    bounds = [(ZERO, None)] * k + [(ZERO, ONE)] * m
    res = lp.lp_solve(c, A_eq=A_eq, b_eq=b_eq, bounds=bounds, maximize=True)
    if res.ok and res.fun > 0:
        witness = {rivals[i]: res.x[i] for i in range(k) if res.x[i] != 0}
        return DominanceReport(True, mode, against, witness)
    return DominanceReport(False, mode, against)


# ---------------------------------------------------------------------------
# equilibrium enumeration


@dataclass
class Equilibrium:
    """One equilibrium point plus how it was certified.

    ``dists`` maps each player to a mapping from strategy key to exact
    weight.  ``exact`` is False when the point was only verified numerically
    (regret below the numeric tolerance); ``residual`` then records the
    float regret bound.  Witnesses of the same continuum share ``family``.
    """

    dists: Dict[str, Dict[object, Fraction]]
    regrets: Dict[str, Fraction]
    exact: bool
    support: Tuple[Tuple[str, tuple], ...]
    family: Optional[str] = None
    role: str = "point"
    residual: float = 0.0
    linked: List[str] = field(default_factory=list)

    def family_ids(self):
        out = [self.family] if self.family else []
        out.extend(self.linked)
        return out

    def mixed(self, game: GameTree) -> MixedProfile:
        return MixedProfile(game, self.dists)

    def payoff(self, nf: NormalForm):
        return nf.expected(self.dists)

    def key(self):
        parts = []
        for n in sorted(self.dists):
            for s, w in sorted(self.dists[n].items()):
                parts.append((n, s, w))
        return tuple(parts)

    def as_json(self, nf: Optional[NormalForm] = None):
        def name(n, s):
            return nf.label(n, s) if nf is not None else str(s)
        return {
            "profile": {n: {name(n, s): format_rational(w)
                            for s, w in sorted(self.dists[n].items())}
                        for n in sorted(self.dists)},
            "regret": {n: format_rational(r) if isinstance(r, Fraction)
                       else repr(r) for n, r in sorted(self.regrets.items())},
            "exact": self.exact,
            "family": self.family,
            "role": self.role,
        }


@dataclass
class FamilyInfo:
    """A product-of-polytopes continuum of equilibria at one support."""

    family_id: str
    support: Tuple[Tuple[str, tuple], ...]
    product_verified: bool
    dimension: int
    polytopes: Dict[str, dict] = field(default_factory=dict)


@dataclass
class EnumerationResult:
    equilibria: List[Equilibrium]
    skipped: List[dict] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    families: Dict[str, FamilyInfo] = field(default_factory=dict)
    nf: Optional[NormalForm] = None
    mode: str = "exact"
    seed: int = 0

    def __iter__(self):
        return iter(self.equilibria)

    def __len__(self):
        return len(self.equilibria)


def _support_signature(nf, T):
    parts = []
    for n in nf.players:
        parts.append(n + ":" + "+".join(nf.label(n, s) for s in T[n]))
    return "|".join(parts)


def _pointwise_prune(nf, T) -> bool:
    """Cheap necessary conditions on a support, by scanning pure profiles.

    A deviation that beats a support strategy at every support profile, or
    an indifference pair with a one-sided payoff gap, rules the support out
    before any LP work.
    """
    for n in nf.players:
        others = [m for m in nf.players if m != n]
        combos = list(itertools.product(*[T[m] for m in others]))
        pidx = nf._index[n]

        def vals(s):
            out = []
            for opp in combos:
                assign = dict(zip(others, opp))
                assign[n] = s
                out.append(nf.table[tuple(assign[m] for m in nf.players)][pidx])
            return out

        support_vals = [vals(s) for s in T[n]]
        all_vals = [vals(t) for t in nf.strategies[n] if t not in T[n]]
        all_vals.extend(support_vals)
        # any strategy beating a support strategy at every support profile
        # beats it against every mix on that support, so the support dies
        for sv in support_vals:
            for tv in all_vals:
                if tv is not sv and all(a > b for a, b in zip(tv, sv)):
                    return False
    return True


def _polytope_solve(d, A_eq, b_eq, A_ub, b_ub):
    """Relative interior point (max-margin on coordinates) of a polytope in
    the simplex slice {x >= 0, rows}.  Returns (interior, margin) or None."""
    # variables x_0..x_{d-1}, m; maximize m with m <= x_i
    c = [ZERO] * d + [ONE]
    rows_ub = [list(r) + [ZERO] for r in A_ub]
    rhs_ub = list(b_ub)
    for i in range(d):
        row = [ZERO] * (d + 1)
        row[i] = -ONE
        row[d] = ONE
        rows_ub.append(row)
        rhs_ub.append(ZERO)
    rows_eq = [list(r) + [ZERO] for r in A_eq]
    res = lp.lp_solve(c, A_ub=rows_ub, b_ub=rhs_ub, A_eq=rows_eq,
                      b_eq=list(b_eq),
                      bounds=[(ZERO, None)] * d + [(ZERO, ONE)],
                      maximize=True)
    if not res.ok:
        return None
    return res.x[:d], res.fun


def _polytope_vertices(d, A_eq, b_eq, A_ub, b_ub):
    """All vertices of {x >= 0, A_eq x = b_eq, A_ub x <= b_ub}, exactly."""
    ineqs = [(list(r), rhs) for r, rhs in zip(A_ub, b_ub)]
    for i in range(d):
        row = [ZERO] * d
        row[i] = -ONE
        ineqs.append((row, ZERO))
    eq_rank = lp.matrix_rank(A_eq) if A_eq else 0
    need = d - eq_rank
    verts = []
    seen = set()

    def feasible(x):
        for r, rhs in zip(A_eq, b_eq):
            if sum(a * v for a, v in zip(r, x)) != rhs:
                return False
        for r, rhs in ineqs:
            if sum(a * v for a, v in zip(r, x)) > rhs:
                return False
        return True

    if need <= 0:
        x = lp.solve_linear([list(r) for r in A_eq], list(b_eq))
        if x is not None and feasible(x):
            verts.append(tuple(x))
        return verts
    for combo in itertools.combinations(range(len(ineqs)), need):
        A = [list(r) for r in A_eq] + [ineqs[i][0] for i in combo]
        b = list(b_eq) + [ineqs[i][1] for i in combo]
        if lp.matrix_rank(A) < d:
            continue
        x = lp.solve_linear(A, b)
        if x is None:
            continue
        key = tuple(x)
        if key in seen:
            continue
        if feasible(x):
            seen.add(key)
            verts.append(key)
    verts.sort()
    return verts


def _dimension_of(vertices):
    if not vertices:
        return -1
    base = vertices[0]
    rows = [[v[i] - base[i] for i in range(len(base))] for v in vertices[1:]]
    return lp.matrix_rank(rows) if rows else 0


class _SupportContext:
    """Scratch data for one support: index maps and payoff lookups."""

    def __init__(self, nf, T):
        self.nf = nf
        self.T = T
        self.mixers = [n for n in nf.players if len(T[n]) > 1]
        self.pures = {n: T[n][0] for n in nf.players if len(T[n]) == 1}

    def pay(self, n, s, assign):
        """Payoff to n when n plays s, mixers take values from ``assign``
        and everyone else plays their pure support strategy."""
        prof = []
        for m in self.nf.players:
            if m == n:
                prof.append(s)
            elif m in assign:
                prof.append(assign[m])
            else:
                prof.append(self.pures[m])
        return self.nf.table[tuple(prof)][self.nf._index[n]]


def _linear_rows_for(ctx, cond_player, var_player):
    """Rows of cond_player's optimality conditions as linear functions of
    sigma_{var_player}; all other mixers must be absent or pure here."""
    nf, T = ctx.nf, ctx.T
    ref = T[cond_player][0]
    eqs, ubs = [], []

    def coeffs(a, b):
        out = []
        for s in T[var_player]:
            assign = {var_player: s}
            out.append(ctx.pay(cond_player, a, assign)
                       - ctx.pay(cond_player, b, assign))
        return out

    for r in T[cond_player][1:]:
        eqs.append((coeffs(r, ref), ZERO))
    for t in nf.strategies[cond_player]:
        if t in T[cond_player]:
            continue
        # U(t) - U(ref) <= 0
        ubs.append((coeffs(t, ref), ZERO))
    return eqs, ubs


def _register(eq: Equilibrium, out, seen):
    """Dedupe by profile; duplicates still contribute their family links."""
    prev = seen.get(eq.key())
    if prev is None:
        seen[eq.key()] = eq
        out.append(eq)
        return eq
    if eq.family:
        if prev.family is None:
            prev.family = eq.family
        elif eq.family != prev.family and eq.family not in prev.linked:
            prev.linked.append(eq.family)
    return prev


def _emit(nf, T, dists_mix, family, role, out, seen, mode, warnings):
    """Assemble a profile from mixer coordinates, verify, and append."""
    dists = {}
    for n in nf.players:
        if n in dists_mix:
            dists[n] = {s: w for s, w in dists_mix[n].items() if w != 0}
    for n, s in ((m, T[m][0]) for m in nf.players if len(T[m]) == 1):
        dists[n] = {s: ONE}
    regrets = profile_regrets(nf, dists)
    worst = max(regrets.values())
    if worst > 0:
        # the affine machinery should never produce this; drop loudly
        warnings.append(f"dropped unverified candidate at "
                        f"{_support_signature(nf, T)} (regret "
                        f"{format_rational(worst)})")
        return
    eq = Equilibrium(dists=dists, regrets=regrets, exact=True,
                     support=tuple((n, tuple(T[n])) for n in nf.players),
                     family=family, role=role)
    _register(eq, out, seen)


def _affine_support(nf, T, ctx, sig, out, seen, families, warnings):
    """Supports with at most two mixing players: exact linear treatment."""
    mixers = ctx.mixers

    # every non-mixer's conditions that involve no mixer are plain numbers
    for n in nf.players:
        ref = T[n][0]
        involved = [m for m in mixers if m != n]
        if involved:
            continue
        base = ctx.pay(n, ref, {})
        for r in T[n][1:]:
            if ctx.pay(n, r, {}) != base:
                return
        for t in nf.strategies[n]:
            if t not in T[n] and ctx.pay(n, t, {}) > base:
                return

    if not mixers:
        _emit(nf, T, {}, None, "pure", out, seen, "exact", warnings)
        return

    # collect linear constraints per mixer variable
    rows_eq = {v: [] for v in mixers}
    rows_ub = {v: [] for v in mixers}
    bilinear = []  # (player, deviation, matrix) kept for the vertex stage

    if len(mixers) == 1:
        v = mixers[0]
        for n in nf.players:
            if n == v:
                continue
            eqs, ubs = _linear_rows_for(ctx, n, v)
            rows_eq[v] += eqs
            rows_ub[v] += ubs
    else:
        i, j = mixers
        e, u = _linear_rows_for(ctx, i, j)
        rows_eq[j] += e
        rows_ub[j] += u
        e, u = _linear_rows_for(ctx, j, i)
        rows_eq[i] += e
        rows_ub[i] += u
        for n in nf.players:
            if n in mixers:
                continue
            ref = T[n][0]
            for t in nf.strategies[n]:
                if t == ref:
                    continue
                mat = [[ctx.pay(n, t, {i: si, j: sj})
                        - ctx.pay(n, ref, {i: si, j: sj})
                        for sj in T[j]] for si in T[i]]
                if all(row == mat[0] for row in mat):
                    rows_ub[j].append((list(mat[0]), ZERO))
                elif all(all(row[c] == row[0] for c in range(len(T[j])))
                         for row in mat):
                    rows_ub[i].append(([row[0] for row in mat], ZERO))
                else:
                    bilinear.append((n, t, mat))

    polys = {}
    for v in mixers:
        d = len(T[v])
        A_eq = [r for r, _ in rows_eq[v]] + [[ONE] * d]
        b_eq = [rhs for _, rhs in rows_eq[v]] + [ONE]
        A_ub = [r for r, _ in rows_ub[v]]
        b_ub = [rhs for _, rhs in rows_ub[v]]
        sol = _polytope_solve(d, A_eq, b_eq, A_ub, b_ub)
        if sol is None or sol[1] <= 0:
            return
        interior, _ = sol
        vertices = _polytope_vertices(d, A_eq, b_eq, A_ub, b_ub)
        polys[v] = (interior, vertices, (A_eq, b_eq, A_ub, b_ub))

    fam_id = sig
    if bilinear:
        i, j = mixers
        ok = True
        for _, _, mat in bilinear:
            for x in polys[i][1]:
                for y in polys[j][1]:
                    val = sum(x[a] * mat[a][b] * y[b]
                              for a in range(len(x)) for b in range(len(y)))
                    if val > 0:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if not ok:
            # the product is cut by bilinear constraints; sweep each vertex
            # of one factor and re-solve the other side with the induced
            # linear rows, emitting point witnesses only
            for y in polys[j][1]:
                extra_ub = []
                for _, _, mat in bilinear:
                    extra_ub.append((
                        [sum(mat[a][b] * y[b] for b in range(len(y)))
                         for a in range(len(T[i]))], ZERO))
                A_eq, b_eq, A_ub, b_ub = polys[i][2]
                A_ub2 = A_ub + [r for r, _ in extra_ub]
                b_ub2 = b_ub + [rhs for _, rhs in extra_ub]
                sol = _polytope_solve(len(T[i]), A_eq, b_eq, A_ub2, b_ub2)
                if sol is None:
                    continue
                xs = [sol[0]] + _polytope_vertices(len(T[i]), A_eq, b_eq,
                                                   A_ub2, b_ub2)
                for x in xs:
                    dm = {i: dict(zip(T[i], x)), j: dict(zip(T[j], y))}
                    _emit(nf, T, dm, fam_id + ":partial", "point",
                          out, seen, "exact", warnings)
            warnings.append(f"support {sig}: continuum cut by cross-player "
                            "constraints; reporting sampled witnesses")
            families[fam_id + ":partial"] = FamilyInfo(
                family_id=fam_id + ":partial",
                support=tuple((n, tuple(T[n])) for n in nf.players),
                product_verified=False, dimension=-1)
            return

    # full product of the polytopes is an equilibrium family
    dim = 0
    info = FamilyInfo(family_id=fam_id,
                      support=tuple((n, tuple(T[n])) for n in nf.players),
                      product_verified=True, dimension=0)
    for v in mixers:
        interior, vertices, (A_eq, b_eq, A_ub, b_ub) = polys[v]
        dv = _dimension_of(vertices)
        dim += max(dv, 0)
        info.polytopes[v] = {
            "strategies": [nf.label(v, s) for s in T[v]],
            "equalities": [([format_rational(a) for a in r],
                            format_rational(rhs))
                           for r, rhs in zip(A_eq, b_eq)],
            "upper_bounds": [([format_rational(a) for a in r],
                              format_rational(rhs))
                             for r, rhs in zip(A_ub, b_ub)],
            "vertices": [[format_rational(a) for a in vtx]
                         for vtx in vertices],
            "interior": [format_rational(a) for a in interior],
            "dimension": dv,
        }
    info.dimension = dim
    families[fam_id] = info

    interior_mix = {v: dict(zip(T[v], polys[v][0])) for v in mixers}
    _emit(nf, T, interior_mix, fam_id, "interior", out, seen, "exact",
          warnings)
    vertex_lists = [polys[v][1] for v in mixers]
    for combo in itertools.product(*vertex_lists):
        dm = {v: dict(zip(T[v], combo[k])) for k, v in enumerate(mixers)}
        _emit(nf, T, dm, fam_id, "vertex", out, seen, "exact", warnings)


# ---------------------------------------------------------------------------
# polynomial back end for three or more mixing players


def _payoff_expr(nf, T, ctx, syms, n, s):
    """U_n(s) as a sympy polynomial in the mixers' coordinate symbols."""
    import sympy as sp
    others = [m for m in ctx.mixers if m != n]
    total = sp.Integer(0)
    for combo in itertools.product(*[range(len(T[m])) for m in others]):
        w = sp.Integer(1)
        assign = {}
        for m, idx in zip(others, combo):
            w = w * syms[m][idx]
            assign[m] = T[m][idx]
        pay = ctx.pay(n, s, assign)
        total += sp.Rational(pay.numerator, pay.denominator) * w
    return total


def _poly_system(nf, T, ctx):
    """Sympy equations and symbols for the mixers' indifference system."""
    import sympy as sp
    mixers = ctx.mixers
    syms = {}
    order = []
    for n in mixers:
        row = sp.symbols(f"x_{nf._index[n]}_0:{len(T[n])}")
        syms[n] = list(row)
        order.extend(row)

    eqs = []
    for n in mixers:
        base = _payoff_expr(nf, T, ctx, syms, n, T[n][0])
        for k in range(1, len(T[n])):
            eqs.append(sp.expand(
                _payoff_expr(nf, T, ctx, syms, n, T[n][k]) - base))
        eqs.append(sum(syms[n]) - 1)
    return eqs, order, syms


def _rat(q) -> Fraction:
    return Fraction(int(q.p), int(q.q))


def _linear_variety_family(nf, T, ctx, sig, G, order, syms, out, seen,
                           families, warnings):
    """Positive-dimensional support whose reduced basis is affine.

    The tie conditions then carve an affine subspace, and when every
    off-support optimality condition also reduces to an affine function on
    that subspace the equilibria at this support form a polytope.  Its
    relative interior point and vertices are enumerated exactly, which is
    what random slicing cannot promise: a slice can miss a thin feasible
    region entirely and silently drop a whole family, distorting every
    component built on top of the enumeration.

    Returns True when the support is fully handled (family emitted, or
    proven empty on the open face); False defers to slice sampling.
    """
    import math
    import sympy as sp

    polys_e = []
    for e in G.exprs:
        p = sp.Poly(e, *order)
        if p.total_degree() > 1:
            return False
        polys_e.append(p)

    mixers = ctx.mixers
    d = len(order)
    A_eq, b_eq = [], []
    for p in polys_e:
        A_eq.append([_rat(p.coeff_monomial(s)) for s in order])
        b_eq.append(-_rat(p.coeff_monomial(1)))

    M = sp.Matrix([[sp.Rational(a.numerator, a.denominator) for a in row]
                   for row in A_eq])
    rhs = sp.Matrix([sp.Rational(v.numerator, v.denominator) for v in b_eq])
    sols = sp.linsolve((M, rhs), list(order))
    if not sols:
        return False
    sub = dict(zip(order, next(iter(sols))))

    # every optimality condition must stay affine once the pivots are
    # substituted away; cross-mixer curvature defers to sampling
    A_ub, b_ub = [], []
    for n in nf.players:
        uref = _payoff_expr(nf, T, ctx, syms, n, T[n][0])
        for t in nf.strategies[n]:
            if t in T[n]:
                continue
            gexpr = sp.expand((_payoff_expr(nf, T, ctx, syms, n, t)
                               - uref).subs(sub, simultaneous=True))
            p = sp.Poly(gexpr, *order)
            if p.total_degree() > 1:
                return False
            A_ub.append([_rat(p.coeff_monomial(s)) for s in order])
            b_ub.append(-_rat(p.coeff_monomial(1)))

    need = d - lp.matrix_rank(A_eq)
    if need > 4 or math.comb(len(A_ub) + d, max(need, 0)) > 20000:
        return False
    sol = _polytope_solve(d, A_eq, b_eq, A_ub, b_ub)
    if sol is None or sol[1] <= 0:
        return True  # nothing on the open face; smaller supports own it
    vertices = _polytope_vertices(d, A_eq, b_eq, A_ub, b_ub)
    if not vertices:
        return False

    def mixdict(x):
        dm = {}
        pos = 0
        for m in mixers:
            dm[m] = {T[m][k]: x[pos + k] for k in range(len(T[m]))}
            pos += len(T[m])
        return dm

    fam_id = sig
    info = FamilyInfo(family_id=fam_id,
                      support=tuple((n, tuple(T[n])) for n in nf.players),
                      product_verified=False,
                      dimension=max(_dimension_of(vertices), 0))
    info.polytopes["joint"] = {
        "strategies": [f"{m}:{nf.label(m, s)}" for m in mixers
                       for s in T[m]],
        "equalities": [([format_rational(a) for a in r],
                        format_rational(v))
                       for r, v in zip(A_eq, b_eq)],
        "upper_bounds": [([format_rational(a) for a in r],
                          format_rational(v))
                         for r, v in zip(A_ub, b_ub)],
        "vertices": [[format_rational(a) for a in v] for v in vertices],
        "interior": [format_rational(a) for a in sol[0]],
        "dimension": info.dimension,
    }
    families[fam_id] = info
    _emit(nf, T, mixdict(sol[0]), fam_id, "interior", out, seen, "exact",
          warnings)
    for v in vertices:
        _emit(nf, T, mixdict(v), fam_id, "vertex", out, seen, "exact",
              warnings)
    return True


def _real_roots_triangular(basis, symbols):
    """Branching back-substitution through a lex Groebner basis.

    Returns real solution vectors as float dicts.  Perturbed tables make
    these polynomials badly scaled, and double-precision roots can drift
    past any fixed matching tolerance and silently drop a solution, so
    roots are extracted at 50 digits and only rounded at the very end;
    the exact system polish downstream removes the remaining error.
    """
    import sympy as sp
    from mpmath import mp, polyroots

    def to_mpf(c):
        if getattr(c, "is_Rational", False):
            return mp.mpf(c.p) / c.q
        return mp.mpf(c._mpf_) if hasattr(c, "_mpf_") else mp.mpf(float(c))

    with mp.workdps(50):
        sols = [{}]
        for v in reversed(symbols):
            nxt = []
            for partial in sols:
                cands = []
                dead = False
                for p in basis:
                    q = p.subs(partial) if partial else p
                    fs = q.free_symbols
                    if not fs:
                        if abs(complex(q)) > 1e-6:
                            dead = True
                            break
                        continue
                    if fs <= {v}:
                        cands.append(q)
                if dead:
                    continue
                if not cands:
                    return None  # not triangular here; caller falls back
                roots = None
                for q in cands:
                    poly = sp.Poly(q, v)
                    coeffs = [to_mpf(c) for c in poly.all_coeffs()]
                    if len(coeffs) <= 1:
                        continue
                    try:
                        rs = polyroots(coeffs, maxsteps=200, extraprec=200)
                    except Exception:
                        return None
                    rs = [r for r in rs
                          if abs(mp.im(r)) <= mp.mpf('1e-20') * (1 + abs(r))]
                    if roots is None:
                        roots = rs
                    else:
                        roots = [r for r in roots
                                 if any(abs(r - r2) < mp.mpf('1e-12')
                                        for r2 in rs)]
                if roots is None:
                    return None
                for r in roots:
                    new = dict(partial)
                    new[v] = sp.Float(mp.re(r), 45)
                    nxt.append(new)
            sols = nxt
        return [{v: float(r) for v, r in sol.items()} for sol in sols]


def _newton_refine(F, J, x0, steps=120):
    import numpy as np
    x = np.array(x0, dtype=float)
    for _ in range(steps):
        fx = F(x)
        err = max(abs(v) for v in fx) if len(fx) else 0.0
        if err < 1e-14:
            return x, err
        try:
            delta = np.linalg.solve(J(x), -np.array(fx))
        except np.linalg.LinAlgError:
            return x, err
        t = 1.0
        base = float(np.linalg.norm(fx))
        for _ in range(30):
            cand = x + t * delta
            if float(np.linalg.norm(F(cand))) < (1 - 0.25 * t) * base:
                break
            t *= 0.5
        else:
            return x, err
        x = x + t * delta
    fx = F(x)
    return x, max(abs(v) for v in fx) if len(fx) else 0.0


def _poly_support(nf, T, ctx, sig, rng, mode, out, seen, skipped, warnings,
                  families):
    """Three or more mixers: Groebner elimination plus Newton polish."""
    import numpy as np

    mixers = ctx.mixers
    unknowns = sum(len(T[n]) for n in mixers)
    if unknowns > 9:
        skipped.append({"support": sig, "reason": "too-many-unknowns"})
        return

    eqs, order, syms = _poly_system(nf, T, ctx)
    offsets = {}
    pos = 0
    for n in mixers:
        offsets[n] = pos
        pos += len(T[n])

    def unpack(x):
        return {n: {T[n][k]: x[offsets[n] + k] for k in range(len(T[n]))}
                for n in mixers}

    # float system for polishing; payoffs are cached as floats up front so
    # the Newton loop never touches Fraction arithmetic
    others_of = {n: [m for m in mixers if m != n] for n in mixers}
    fpay = {}
    for n in mixers:
        for s in T[n]:
            for combo in itertools.product(*[T[m] for m in others_of[n]]):
                assign = dict(zip(others_of[n], combo))
                fpay[(n, s, combo)] = float(ctx.pay(n, s, assign))

    def F(x):
        vals = unpack(x)
        res = []
        for n in mixers:
            others = others_of[n]

            def U(s):
                total = 0.0
                for combo in itertools.product(
                        *[T[m] for m in others]):
                    w = 1.0
                    for m, sm in zip(others, combo):
                        w *= vals[m][sm]
                    total += w * fpay[(n, s, combo)]
                return total

            base = U(T[n][0])
            for k in range(1, len(T[n])):
                res.append(U(T[n][k]) - base)
            res.append(sum(vals[n].values()) - 1.0)
        return res

    def J(x):
        h = 1e-7
        base = F(x)
        cols = []
        for i in range(len(x)):
            xp = list(x)
            xp[i] += h
            cols.append([(a - b) / h for a, b in zip(F(xp), base)])
        return np.array(cols).T

    candidates = []
    complete = False
    positive_dim = False
    try:
        import sympy as sp
        G = sp.groebner(eqs, *order, order="lex")
        if list(G.exprs) == [sp.Integer(1)]:
            return
        if G.is_zero_dimensional:
            found = _real_roots_triangular(list(G.exprs), list(order))
            if found is not None:
                complete = True
                for sol in found:
                    candidates.append([sol[s] for s in order])
        else:
            if _linear_variety_family(nf, T, ctx, sig, G, order, syms,
                                      out, seen, families, warnings):
                return
            positive_dim = True
            for _ in range(4):
                cut = sum(sp.Rational(rng.randrange(1, 60)) * s
                          for s in order) - sp.Rational(rng.randrange(1, 60))
                G2 = sp.groebner(eqs + [cut], *order, order="lex")
                if G2.is_zero_dimensional:
                    found = _real_roots_triangular(list(G2.exprs),
                                                   list(order))
                    for sol in found or []:
                        candidates.append([sol[s] for s in order])
    except Exception as exc:  # pragma: no cover - algebra backend hiccup
        warnings.append(f"support {sig}: algebraic elimination failed "
                        f"({type(exc).__name__}); multistart only")

    # damped Newton multistart; when elimination already enumerated the
    # whole zero-dimensional variety this adds nothing, so it only runs on
    # the incomplete paths
    if not complete:
        starts = []
        center = []
        for n in mixers:
            center.extend([1.0 / len(T[n])] * len(T[n]))
        starts.append(center)
        for _ in range(8 + 2 * unknowns):
            x0 = []
            for n in mixers:
                draws = [rng.random() + 0.05 for _ in T[n]]
                tot = sum(draws)
                x0.extend([d / tot for d in draws])
            starts.append(x0)
        for x0 in starts:
            x, err = _newton_refine(F, J, x0)
            if err < 1e-10:
                candidates.append(list(x))

    if positive_dim:
        warnings.append(f"support {sig}: positive-dimensional solution "
                        "set; sampled with random slices")
        skipped.append({"support": sig,
                        "reason": "positive-dimensional-sampled"})
    elif not complete:
        skipped.append({"support": sig, "reason": "multistart-only"})

    # dedupe and verify
    kept = []
    for cand in candidates:
        x, err = _newton_refine(F, J, cand)
        if err > 1e-9:
            continue
        if any(max(abs(a - b) for a, b in zip(x, k)) < 1e-7 for k in kept):
            continue
        if any(v < 1e-7 or v > 1 + 1e-9 for v in x):
            continue  # leaves the open support; smaller supports own it
        kept.append(list(x))

    for x in kept:
        emitted = False
        for cap in (1, 2, 3, 4, 6, 8, 12, 24, 60, 10**3, 10**6, 10**9,
                    10**12):
            dists_mix = {}
            good = True
            for n in mixers:
                vals = [Fraction(x[offsets[n] + k]).limit_denominator(cap)
                        for k in range(len(T[n]))]
                tot = sum(vals)
                if tot == 0:
                    good = False
                    break
                vals = [v / tot for v in vals]
                if any(v <= 0 for v in vals):
                    good = False
                    break
                dists_mix[n] = dict(zip(T[n], vals))
            if not good:
                continue
            dists = {n: dict(dists_mix[n]) for n in mixers}
            for n in nf.players:
                if len(T[n]) == 1:
                    dists[n] = {T[n][0]: ONE}
            regrets = profile_regrets(nf, dists)
            if max(regrets.values()) <= 0:
                eq = Equilibrium(
                    dists=dists, regrets=regrets, exact=True,
                    support=tuple((n, tuple(T[n])) for n in nf.players),
                    family=None, role="point")
                _register(eq, out, seen)
                emitted = True
                break
        if emitted:
            continue
        # no small rational form; keep the numeric point if the float
        # regret clears the numeric tolerance
        dists = {}
        for n in mixers:
            vals = [Fraction(x[offsets[n] + k]).limit_denominator(10**12)
                    for k in range(len(T[n]))]
            tot = sum(vals)
            vals = [v / tot for v in vals]
            dists[n] = dict(zip(T[n], vals))
        for n in nf.players:
            if len(T[n]) == 1:
                dists[n] = {T[n][0]: ONE}
        regrets = profile_regrets(nf, dists)
        worst = max(regrets.values())
        if float(worst) <= 1e-9:
            eq = Equilibrium(
                dists=dists, regrets=regrets, exact=False,
                support=tuple((n, tuple(T[n])) for n in nf.players),
                family=None, role="point", residual=float(worst))
            _register(eq, out, seen)
            if mode == "exact":
                warnings.append(f"support {sig}: equilibrium verified only "
                                "numerically (residual "
                                f"{float(worst):.2e})")
        elif not complete:
            # on a fully solved support every root was examined, so a
            # refuted candidate is a refutation, not a gap worth recording
            skipped.append({"support": sig,
                            "reason": "candidate-failed-verification"})


def enumerate_equilibria(nf: NormalForm, budget: Optional[int] = None,
                         mode: str = "exact", seed: int = 0,
                         max_support: Optional[int] = None,
                         support_filter=None
                         ) -> EnumerationResult:
    """All Nash equilibria of ``nf``, walked support by support.

    ``budget`` caps how many supports are examined; anything left over is
    recorded in ``skipped``.  ``max_support`` caps per-player support sizes.
    Continua are returned as families: vertex witnesses plus one relative
    interior point each, sharing a family id.

    ``support_filter``, when given, is called with each support (a mapping
    from player to a tuple of strategy keys) before any solving; supports
    where it returns falsy are passed over with no skip record.  Skipping
    them is the caller's assumption, not this function's claim, so the
    result is only complete relative to the filter.
    """
    if mode not in ("exact", "numeric"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = random.Random(seed)
    out: List[Equilibrium] = []
    seen: Dict[tuple, Equilibrium] = {}
    skipped: List[dict] = []
    warnings: List[str] = []
    families: Dict[str, FamilyInfo] = {}

    per_player = []
    for n in nf.players:
        subs = []
        ks = range(1, len(nf.strategies[n]) + 1)
        for k in ks:
            for combo in itertools.combinations(
                    range(len(nf.strategies[n])), k):
                subs.append(combo)
        per_player.append(subs)
    combos = list(itertools.product(*per_player))
    combos.sort(key=lambda masks: (sum(len(m) for m in masks), masks))

    examined = 0
    for masks in combos:
        T = {n: tuple(nf.strategies[n][i] for i in mask)
             for n, mask in zip(nf.players, masks)}
        if support_filter is not None and not support_filter(T):
            continue
        sig = _support_signature(nf, T)
        if max_support is not None and any(len(m) > max_support
                                           for m in masks):
            skipped.append({"support": sig, "reason": "max_support"})
            continue
        if budget is not None and examined >= budget:
            skipped.append({"support": sig, "reason": "budget"})
            continue
        examined += 1
        if not _pointwise_prune(nf, T):
            continue
        ctx = _SupportContext(nf, T)
        if len(ctx.mixers) <= 2:
            _affine_support(nf, T, ctx, sig, out, seen, families, warnings)
        else:
            _poly_support(nf, T, ctx, sig, rng, mode, out, seen, skipped,
                          warnings, families)

    return EnumerationResult(equilibria=out, skipped=skipped,
                             warnings=warnings, families=families, nf=nf,
                             mode=mode, seed=seed)


# ---------------------------------------------------------------------------
# components


@dataclass
class EquilibriumComponent:
    """A cluster of equilibria sharing an outcome, with connectivity info.

    ``connected`` is "verified" when every witness is linked by segments or
    staircase paths that were checked exactly, "assumed" when the cluster
    merely shares an outcome, and "unknown" when numeric witnesses blocked
    the check.
    """

    outcome: OutcomeDistribution
    witnesses: List[Equilibrium]
    connected: str
    payoff: tuple
    families: List[str] = field(default_factory=list)
    polyhedral_description: Optional[dict] = None
    warnings: List[str] = field(default_factory=list)

    def as_json(self, nf=None):
        return {
            "outcome": self.outcome.as_json(),
            "payoff": [format_rational(u) for u in self.payoff],
            "connected": self.connected,
            "witnesses": [w.as_json(nf) for w in self.witnesses],
            "families": list(self.families),
            "warnings": list(self.warnings),
        }


def equilibrium_outcome(nf: NormalForm, eq: Equilibrium
                        ) -> OutcomeDistribution:
    if nf.game is not None:
        return outcome_of_mixed(nf.game, MixedProfile(nf.game, eq.dists))
    masses = {}
    supports = [sorted((s, w) for s, w in eq.dists[n].items() if w != 0)
                for n in nf.players]
    for combo in itertools.product(*supports):
        w = ONE
        for _, wn in combo:
            w *= wn
        if w == 0:
            continue
        key = "/".join(nf.label(n, s)
                       for n, (s, _) in zip(nf.players, combo))
        masses[key] = masses.get(key, ZERO) + w
    return OutcomeDistribution(masses)


def _segment_connected(nf, a: Equilibrium, b: Equilibrium) -> bool:
    """Can ``a`` be walked to ``b`` through Nash profiles, one player at a
    time?  Each leg changes a single player's mix, so the equilibrium
    conditions are linear along it and endpoint checks suffice."""
    differ = [n for n in nf.players if a.dists.get(n) != b.dists.get(n)]
    if not differ:
        return True
    if not (a.exact and b.exact):
        return False
    import itertools as it
    orders = list(it.permutations(differ)) if len(differ) <= 3 else \
        [tuple(differ)]
    for order in orders:
        current = {n: dict(a.dists[n]) for n in a.dists}
        ok = True
        for n in order:
            current[n] = dict(b.dists[n])
            regrets = profile_regrets(nf, current)
            if max(regrets.values()) > 0:
                ok = False
                break
        if ok:
            return True
    return False


def group_components(game, eqs, tau_out: Fraction = Fraction(1, 10**6)
                     ) -> List[EquilibriumComponent]:
    """Cluster equilibria by outcome and assess connectivity.

    ``eqs`` is an EnumerationResult (preferred) or a plain list, in which
    case the normal form is rebuilt from ``game``.
    """
    if isinstance(eqs, EnumerationResult):
        nf = eqs.nf if eqs.nf is not None else to_normal_form(game)
        eq_list = list(eqs.equilibria)
        fam_info = eqs.families
    else:
        nf = to_normal_form(game)
        eq_list = list(eqs)
        fam_info = {}
    if not eq_list:
        return []
    tau = Fraction(tau_out) if not isinstance(tau_out, Fraction) else tau_out

    outcomes = [equilibrium_outcome(nf, e) for e in eq_list]

    # union-find over witnesses: same outcome cluster, family links, then
    # verified staircase links decide the connectivity grade
    parent = list(range(len(eq_list)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj

    for i in range(len(eq_list)):
        for j in range(i + 1, len(eq_list)):
            if outcomes[i].tv_distance(outcomes[j]) <= tau:
                union(i, j)

    clusters: Dict[int, List[int]] = {}
    for i in range(len(eq_list)):
        clusters.setdefault(find(i), []).append(i)

    # merge outcome clusters that share a family (outcome drift inside a
    # connected continuum is a genericity failure, reported not hidden)
    genericity: List[str] = []
    by_family: Dict[str, List[int]] = {}
    for i, e in enumerate(eq_list):
        for fam in e.family_ids():
            by_family.setdefault(fam, []).append(i)
    for fam, members in by_family.items():
        roots = {find(i) for i in members}
        if len(roots) > 1:
            genericity.append(
                f"family {fam} spans {len(roots)} outcome clusters; "
                "outcome varies inside a connected equilibrium set")
            first = members[0]
            for i in members[1:]:
                union(first, i)

    clusters = {}
    for i in range(len(eq_list)):
        clusters.setdefault(find(i), []).append(i)

    components = []
    for members in clusters.values():
        members.sort()
        witnesses = [eq_list[i] for i in members]
        # connectivity inside the cluster
        cparent = {i: i for i in members}

        def cfind(i):
            while cparent[i] != i:
                cparent[i] = cparent[cparent[i]]
                i = cparent[i]
            return i

        def cunion(i, j):
            ri, rj = cfind(i), cfind(j)
            if ri != rj:
                cparent[ri] = rj

        for fam, fmembers in by_family.items():
            inside = [i for i in fmembers if i in cparent]
            for i in inside[1:]:
                cunion(inside[0], i)
        pieces = {cfind(i) for i in members}
        if len(pieces) > 1:
            reps = sorted(pieces)
            for a, b in itertools.combinations(reps, 2):
                if cfind(a) == cfind(b):
                    continue
                if _segment_connected(nf, eq_list[a], eq_list[b]):
                    cunion(a, b)
            pieces = {cfind(i) for i in members}
        if len(pieces) == 1:
            connected = "verified"
        elif all(e.exact for e in witnesses):
            connected = "assumed"
        else:
            connected = "unknown"

        fams = sorted({e.family for e in witnesses if e.family})
        interior = [eq_list[i] for i in members
                    if eq_list[i].role == "interior"]
        rep_eq = interior[0] if interior else witnesses[0]
        rep_outcome = equilibrium_outcome(nf, rep_eq)
        warn = list(genericity) if any(
            fam in fams for fam in
            [g.split()[1] for g in genericity]) else []
        desc = None
        if fams:
            desc = {f: {
                "support": [(n, [nf.label(n, s) for s in sup])
                            for n, sup in fam_info[f].support],
                "product_verified": fam_info[f].product_verified,
                "dimension": fam_info[f].dimension,
                "polytopes": fam_info[f].polytopes,
            } for f in fams if f in fam_info}
        components.append(EquilibriumComponent(
            outcome=rep_outcome, witnesses=witnesses, connected=connected,
            payoff=rep_outcome.payoff(nf.game) if nf.game is not None
            else nf.expected(rep_eq.dists),
            families=fams, polyhedral_description=desc, warnings=warn))

    components.sort(key=lambda c: sorted(c.outcome.as_json().items()))
    # a shared outcome between what remain distinct components cannot
    # happen here by construction; drifting families were merged above
    return components
