"""Limit beliefs from vanishing trembles.

A boundary enabling profile leaves some last actions at probability zero.
Conditional probabilities between such actions, and between terminal nodes
that an information set cannot tell apart, are then not pinned down by the
profile itself: they are limits along interior sequences.  Writing each
vanished action's probability as theta_a and taking logs, every
log-likelihood ratio is affine in the vector (ln theta_a)_a, so the set of
reachable limits is decided exactly: a multiplicative linear solve for the
finite targets plus a strict-sign feasibility LP over tremble directions.

Coordinates are keyed as follows: an ordered pair of last actions (a, b)
for the action-vs-action conditionals, and a triple (n, z0, z1) for the
terminal-vs-terminal conditionals as seen by player n.  Action labels are
globally unique, so a pair of labels identifies the owners.  Terminals
whose chance probability is zero are structurally unreachable and are left
out of the pair space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import lp
from .games import GameTree, format_rational
from .strategies import EnablingProfile, is_realizable

ZERO = Fraction(0)
ONE = Fraction(1)


def pair_space(game: GameTree):
    """All conditional-probability coordinates of the game.

    Returns (action_pairs, terminal_pairs): ordered pairs of distinct last
    actions across all players, and triples (n, z0, z1) of distinct
    terminals that share an information set of player n.
    """
    acts = [a for n in game.players for a in game.last_actions[n]]
    action_pairs = tuple((a, b) for a in acts for b in acts if a != b)
    seen = {}
    for hid, h in sorted(game.infosets.items()):
        zs = [z for z in game.terminals_after_infoset(hid)
              if game.chance_probability(z) > 0]
        for z0, z1 in itertools.permutations(zs, 2):
            seen.setdefault((h.player, z0, z1), None)
    return action_pairs, tuple(seen)


def _owner(game: GameTree, action: str) -> str:
    return game.infosets[game.action_owner[action]].player


def _ratio_parts(game: GameTree, vectors, key):
    """One coordinate's ratio split as (constant, tremble exponents).

    The ratio of the two tilde probabilities equals C * prod theta_a^row[a]
    with C a positive rational collecting every entry positive under the
    base profile and row the integer exponents of the vanished entries.
    """
    C = ONE
    row: Dict[str, int] = {}

    def absorb(player, action, sgn):
        if action is None:
            return
        v = vectors[player][action]
        if v > 0:
            nonlocal C
            C = C * v if sgn > 0 else C / v
        else:
            row[action] = row.get(action, 0) + sgn

    if len(key) == 2:
        a0, a1 = key
        absorb(_owner(game, a0), a0, +1)
        absorb(_owner(game, a1), a1, -1)
    else:
        n, z0, z1 = key
        C = game.chance_probability(z0) / game.chance_probability(z1)
        for z, sgn in ((z0, +1), (z1, -1)):
            for m in game.players:
                if m != n:
                    absorb(m, game.last_action[(m, z)], sgn)
    return C, {a: e for a, e in row.items() if e}


class ConditionalSystem:
    """A base enabling profile together with its conditional probabilities.

    lam maps every pair-space key to a value in [0, 1]; whenever both
    orders of a coordinate are present they must sum to one.
    """

    def __init__(self, base: EnablingProfile, lam: Mapping):
        self.base = base
        self.lam = {}
        for key, v in lam.items():
            v = Fraction(v)
            if not 0 <= v <= 1:
                raise ValueError(f"conditional {key} = {v} outside [0, 1]")
            self.lam[key] = v
        for key, v in self.lam.items():
            rev = (key[1], key[0]) if len(key) == 2 else (key[0], key[2], key[1])
            if rev in self.lam and self.lam[rev] + v != 1:
                raise ValueError(f"conditionals for {key} and {rev} do not sum to 1")

    def value(self, key) -> Fraction:
        return self.lam[key]

    def as_json(self):
        return {"|".join(key): format_rational(v)
                for key, v in sorted(self.lam.items(), key=lambda kv: kv[0])}

    @staticmethod
    def keys_from_json(data: Mapping):
        out = {}
        for raw, v in data.items():
            parts = tuple(raw.split("|"))
            if len(parts) not in (2, 3):
                raise ValueError(f"bad conditional key {raw!r}")
            out[parts] = v
        return out

    def __repr__(self):
        return f"ConditionalSystem({len(self.lam)} coordinates)"


def _tilde_conditionals(game: GameTree, base: EnablingProfile, vectors) -> ConditionalSystem:
    action_pairs, terminal_pairs = pair_space(game)
    lam = {}
    for key in action_pairs + terminal_pairs:
        C, row = _ratio_parts(game, vectors, key)
        if row:
            raise ValueError(f"coordinate {key} still depends on a zero entry")
        lam[key] = C / (1 + C)
    return ConditionalSystem(base, lam)


def conditionals_from_interior(game: GameTree, p: EnablingProfile) -> ConditionalSystem:
    """Exact conditionals of a strictly positive profile."""
    for n in game.players:
        for a, v in p.vectors[n].items():
            if v == 0:
                raise ValueError(f"p_{n}({a}) = 0; profile is not interior")
    return _tilde_conditionals(game, p, p.vectors)


def conditionals_at_theta(game: GameTree, p: EnablingProfile,
                          theta: Mapping[str, Fraction]) -> ConditionalSystem:
    """Conditionals of the profile with zero entries replaced by theta."""
    vectors = {}
    for n in game.players:
        vec = {}
        for a, v in p.vectors[n].items():
            if v > 0:
                vec[a] = v
            else:
                t = Fraction(theta[a])
                if t <= 0:
                    raise ValueError(f"theta[{a}] must be positive")
                vec[a] = t
        vectors[n] = vec
    return _tilde_conditionals(game, p, vectors)


def monomial_limit_conditionals(game: GameTree, p: EnablingProfile,
                                coeffs: Mapping[str, Fraction],
                                powers: Mapping[str, int]) -> ConditionalSystem:
    """Exact limit of the conditionals along theta_a = c_a * t^{k_a}, t -> 0+.

    Each ratio becomes C' * t^e for a rational C' and integer e, so the
    limit is 0, 1, or C'/(1+C') according to the sign of e.  This is the
    definition evaluated on one explicit sequence; the feasibility solver
    must accept every system produced here.
    """
    action_pairs, terminal_pairs = pair_space(game)
    lam = {}
    for key in action_pairs + terminal_pairs:
        C, row = _ratio_parts(game, p.vectors, key)
        e = sum(row[a] * powers[a] for a in row)
        if e > 0:
            lam[key] = ZERO
        elif e < 0:
            lam[key] = ONE
        else:
            for a, k in row.items():
                c = Fraction(coeffs[a])
                C = C * c**k
            lam[key] = C / (1 + C)
    return ConditionalSystem(p, lam)


# ---------------------------------------------------------------------------
# feasibility of a target system


@dataclass
class BeliefPartition:
    """Sign pattern of a boundary belief: coordinates with interior limit
    (r0), limit one (r1), and limit zero (r2), plus a strictly positive
    tremble-weight witness over A0 realizing the pattern.

    dimension is the rank of the r0 rows: the dimension of the manifold of
    finite limit values the pattern can carry.  theta_dimension is the
    dimension of the direction cell itself, |A0| - 1 - dimension.
    """
    r0: tuple
    r1: tuple
    r2: tuple
    feasible_direction: Optional[Dict[str, Fraction]]
    dimension: int
    theta_dimension: int
    in_closure_of: tuple = ()

    def as_json(self):
        return {
            "r0": sorted(map(list, self.r0)),
            "r1": sorted(map(list, self.r1)),
            "r2": sorted(map(list, self.r2)),
            "direction": None if self.feasible_direction is None else
                {a: format_rational(v) for a, v in sorted(self.feasible_direction.items())},
            "dimension": self.dimension,
            "theta_dimension": self.theta_dimension,
            "in_closure_of": list(self.in_closure_of),
        }


@dataclass
class LimitFeasibility:
    feasible: bool
    partition: Optional[BeliefPartition]
    reason: str = ""
    offending: Optional[tuple] = None

    def __bool__(self):
        return self.feasible


def _zero_actions(game: GameTree, p: EnablingProfile):
    out = []
    for n in game.players:
        for a in game.last_actions[n]:
            if p.vectors[n][a] == 0:
                out.append(a)
    return tuple(sorted(out))


def _check_realizable(game: GameTree, p: EnablingProfile):
    for n in game.players:
        ok, _ = is_realizable(game, n, p.vectors[n])
        if not ok:
            raise ValueError(f"player {n}'s vector is not an enabling strategy")


def _finite_targets_reachable(rows: List[Dict[str, int]], targets: List[Fraction],
                              cols: Sequence[str]):
    """Exact test that ln(targets) lies in the affine image of the rows.

    Integer row operations keep the right-hand sides multiplicative: a zero
    combination of rows is consistent iff its combined target equals one.
    Returns (ok, index of a failing row or None).
    """
    work = [[[r.get(c, 0) for c in cols], Fraction(t), i]
            for i, (r, t) in enumerate(zip(rows, targets))]
    ncols = len(cols)
    pivoted = set()
    for col in range(ncols):
        piv = None
        for w in work:
            if id(w) not in pivoted and w[0][col] != 0:
                piv = w
                break
        if piv is None:
            continue
        pivoted.add(id(piv))
        pr, pt = piv[0], piv[1]
        for w in work:
            if w is piv or w[0][col] == 0:
                continue
            f = w[0][col]
            w[0] = [pr[col] * wj - f * pj for wj, pj in zip(w[0], pr)]
            w[1] = w[1] ** pr[col] / pt**f
    for w in work:
        if not any(w[0]) and w[1] != 1:
            return False, w[2]
    return True, None


def _margin_lp(cols: Sequence[str], eq_rows, neg_rows, pos_rows):
    """Max-margin direction in the open simplex over cols.

    Finds theta > 0, sum theta = 1 with eq rows exactly zero, neg rows at
    most -t and pos rows at least t, maximizing t.  Returns (t, theta dict)
    or None when even the weak system is empty.
    """
    n = len(cols)
    A_eq = [[Fraction(r.get(c, 0)) for c in cols] + [ZERO] for r in eq_rows]
    A_eq.append([ONE] * n + [ZERO])
    b_eq = [ZERO] * len(eq_rows) + [ONE]
    A_ub = []
    for r in neg_rows:
        A_ub.append([Fraction(r.get(c, 0)) for c in cols] + [ONE])
    for r in pos_rows:
        A_ub.append([-Fraction(r.get(c, 0)) for c in cols] + [ONE])
    for i in range(n):
        row = [ZERO] * (n + 1)
        row[i] = -ONE
        row[n] = ONE
        A_ub.append(row)
    b_ub = [ZERO] * len(A_ub)
    bounds = [(None, None)] * n + [(None, ONE)]
    c = [ZERO] * n + [ONE]
    res = lp.lp_solve(c, A_ub, b_ub, A_eq, b_eq, bounds, maximize=True)
    if not res.ok:
        return None
    theta = dict(zip(cols, res.x[:n]))
    return res.fun, theta


def limit_belief_feasible(game: GameTree, p: EnablingProfile,
                          target: ConditionalSystem) -> LimitFeasibility:
    """Whether target is a limit of interior conditionals converging to p.

    Coordinates forced by the positive part of p must match exactly; the
    rest split by target value into finite (r0), one (r1) and zero (r2)
    classes, feasible iff the finite targets lie in the affine image of the
    log-likelihood map and a strictly positive tremble direction realizes
    the sign pattern.
    """
    _check_realizable(game, p)
    action_pairs, terminal_pairs = pair_space(game)
    keys = action_pairs + terminal_pairs
    missing = [k for k in keys if k not in target.lam]
    if missing:
        raise ValueError(f"target is missing {len(missing)} coordinates, "
                         f"first {missing[0]}")
    a0 = _zero_actions(game, p)

    r0, r1, r2 = [], [], []
    fin_rows, fin_targets, fin_keys = [], [], []
    neg_rows, pos_rows = [], []
    for key in keys:
        v = target.value(key)
        C, row = _ratio_parts(game, p.vectors, key)
        if not row:
            forced = C / (1 + C)
            if v != forced:
                return LimitFeasibility(
                    False, None, "forced coordinate mismatch", key)
            r0.append(key)
            continue
        if v == 1:
            r1.append(key)
            neg_rows.append(row)
        elif v == 0:
            r2.append(key)
            pos_rows.append(row)
        else:
            r0.append(key)
            fin_rows.append(row)
            fin_targets.append((v / (1 - v)) / C)
            fin_keys.append(key)

    if not a0:
        part = BeliefPartition(tuple(r0), (), (), None, 0, 0)
        return LimitFeasibility(True, part, "interior profile, all forced")

    ok, bad = _finite_targets_reachable(fin_rows, fin_targets, a0)
    if not ok:
        return LimitFeasibility(
            False, None, "finite targets outside the affine image", fin_keys[bad])
    sol = _margin_lp(a0, fin_rows, neg_rows, pos_rows)
    if sol is None or sol[0] <= 0:
        return LimitFeasibility(False, None, "no tremble direction fits the sign pattern")
    margin, theta = sol
    dim = lp.matrix_rank([[r.get(c, 0) for c in a0] for r in fin_rows]) if fin_rows else 0
    part = BeliefPartition(tuple(r0), tuple(r1), tuple(r2), theta,
                           dim, len(a0) - 1 - dim)
    return LimitFeasibility(True, part)


# ---------------------------------------------------------------------------
# strata


def enumerate_belief_strata(game: GameTree, p: EnablingProfile,
                            cap: int = 4) -> List[BeliefPartition]:
    """All sign-pattern strata of limit beliefs over p, with closures.

    Enumerates the cells of the hyperplane arrangement the nonconstant
    log-likelihood rows cut out of the open tremble simplex, depth first
    with LP pruning so the work is proportional to the number of nonempty
    cells.  Each stratum's in_closure_of lists the indices of the strata
    whose closure contains it: exactly the cells whose witness direction
    satisfies this stratum's weak sign system.
    """
    _check_realizable(game, p)
    a0 = _zero_actions(game, p)
    if len(a0) > cap:
        raise ValueError(f"|A0| = {len(a0)} exceeds cap {cap}")
    action_pairs, terminal_pairs = pair_space(game)
    keys = action_pairs + terminal_pairs

    forced = []
    by_row: Dict[tuple, list] = {}
    for key in keys:
        _, row = _ratio_parts(game, p.vectors, key)
        if not row:
            forced.append(key)
        else:
            by_row.setdefault(tuple(sorted(row.items())), []).append(key)
    rows = [dict(r) for r in by_row]
    row_keys = list(by_row.values())

    if not a0:
        return [BeliefPartition(tuple(keys), (), (), None, 0, 0)]

    cells = []

    def descend(i, signs):
        if i == len(rows):
            eq = [rows[j] for j, s in enumerate(signs) if s == 0]
            neg = [rows[j] for j, s in enumerate(signs) if s < 0]
            pos = [rows[j] for j, s in enumerate(signs) if s > 0]
            sol = _margin_lp(a0, eq, neg, pos)
            if sol and sol[0] > 0:
                cells.append((tuple(signs), sol[1]))
            return
        for s in (0, -1, +1):
            trial = signs + [s]
            eq = [rows[j] for j, v in enumerate(trial) if v == 0]
            neg = [rows[j] for j, v in enumerate(trial) if v < 0]
            pos = [rows[j] for j, v in enumerate(trial) if v > 0]
            sol = _margin_lp(a0, eq, neg, pos)
            if sol and sol[0] > 0:
                descend(i + 1, trial)

    descend(0, [])

    strata = []
    for signs, theta in cells:
        r0 = list(forced)
        r1, r2 = [], []
        zero_rows = []
        for j, s in enumerate(signs):
            if s == 0:
                r0.extend(row_keys[j])
                zero_rows.append(rows[j])
            elif s < 0:
                r1.extend(row_keys[j])
            else:
                r2.extend(row_keys[j])
        dim = lp.matrix_rank([[r.get(c, 0) for c in a0] for r in zero_rows]) \
            if zero_rows else 0
        strata.append((signs, BeliefPartition(
            tuple(r0), tuple(r1), tuple(r2), theta, dim, len(a0) - 1 - dim)))

    # closure: cell j is a face of cell i's closure iff j's witness
    # satisfies i's weak sign system
    def weak_member(theta, signs):
        for j, s in enumerate(signs):
            val = sum(Fraction(rows[j].get(c, 0)) * theta[c] for c in a0)
            if s == 0 and val != 0:
                return False
            if s < 0 and val > 0:
                return False
            if s > 0 and val < 0:
                return False
        return True

    out = []
    for i, (signs_i, part_i) in enumerate(strata):
        closure = tuple(j for j, (_, part_j) in enumerate(strata)
                        if j != i and weak_member(part_j.feasible_direction, signs_i))
        out.append(BeliefPartition(part_i.r0, part_i.r1, part_i.r2,
                                   part_i.feasible_direction, part_i.dimension,
                                   part_i.theta_dimension, closure))
    return out


# ---------------------------------------------------------------------------
# beliefs at information sets


@dataclass
class InfosetBelief:
    infoset: str
    player: str
    terminal_distribution: Dict[str, Fraction]
    node_beliefs: Dict[str, Fraction]
    determined: bool
    issues: tuple = ()

    def as_json(self):
        return {
            "infoset": self.infoset,
            "player": self.player,
            "terminals": {z: format_rational(v)
                          for z, v in sorted(self.terminal_distribution.items())},
            "nodes": {x: format_rational(v)
                      for x, v in sorted(self.node_beliefs.items())},
            "determined": self.determined,
            "issues": list(self.issues),
        }


def _reference_filter(game: GameTree, hid: str, z: str) -> bool:
    """Whether z follows the infoset owner's first-action continuation.

    Summing the distribution over just these terminals recovers node reach
    masses: with the owner's own play pinned to one continuation, each
    combination of the opponents' moves below a node hits one terminal.
    """
    h = game.infosets[hid]
    hist = game.path_to_terminal(z)[2][h.player]
    idx = next(i for i, (hh, _) in enumerate(hist) if hh == hid)
    for hh, aa in hist[idx:]:
        if aa != game.infosets[hh].actions[0]:
            return False
    return True


def beliefs_at_infosets(game: GameTree, q: EnablingProfile,
                        lam: ConditionalSystem) -> List[InfosetBelief]:
    """Per-information-set distributions implied by a conditional system.

    Each set gets the normalized distribution over its terminal nodes and
    the induced node beliefs.  Sets where lam is incomplete, cyclic, or
    inconsistent are flagged undetermined rather than rejected.
    """
    out = []
    for hid, h in sorted(game.infosets.items()):
        n = h.player
        zs = [z for z in game.terminals_after_infoset(hid)
              if game.chance_probability(z) > 0]
        issues = []
        if len(zs) == 1:
            out.append(InfosetBelief(hid, n, {zs[0]: ONE},
                                     {h.nodes[0]: ONE}, True))
            continue

        missing = [(n, z0, z1) for z0, z1 in itertools.permutations(zs, 2)
                   if (n, z0, z1) not in lam.lam]
        if missing:
            out.append(InfosetBelief(hid, n, {}, {}, False,
                                     (f"missing conditionals, first {missing[0]}",)))
            continue

        tops = [z for z in zs
                if all(z2 == z or lam.value((n, z, z2)) > 0 for z2 in zs)]
        if not tops:
            out.append(InfosetBelief(hid, n, {}, {}, False,
                                     ("likelihood order has no maximal terminal",)))
            continue
        ref = tops[0]
        weights = {}
        for z in zs:
            if z not in tops:
                weights[z] = ZERO
            elif z == ref:
                weights[z] = ONE
            else:
                v = lam.value((n, z, ref))
                if v == 1:
                    issues.append(f"{z} infinitely likelier than top terminal {ref}")
                    weights[z] = ZERO
                else:
                    weights[z] = v / (1 - v)
        for z0, z1 in itertools.combinations(tops, 2):
            want = weights[z0] / (weights[z0] + weights[z1])
            if lam.value((n, z0, z1)) != want:
                issues.append(f"pairwise conditional ({z0}, {z1}) breaks consistency")
        total = sum(weights.values(), ZERO)
        dist = {z: w / total for z, w in weights.items()}

        node_mass = {}
        for x in h.nodes:
            mass = sum((dist[z] for z in game.terminals_through(x)
                        if z in dist and _reference_filter(game, hid, z)), ZERO)
            node_mass[x] = mass
        node_total = sum(node_mass.values(), ZERO)
        if node_total == 0:
            issues.append("no mass under the reference continuation")
            out.append(InfosetBelief(hid, n, dist, {}, False, tuple(issues)))
            continue
        nodes = {x: m / node_total for x, m in node_mass.items()}
        out.append(InfosetBelief(hid, n, dist, nodes, not issues, tuple(issues)))
    return out
