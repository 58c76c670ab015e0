"""Fixed-point indices of equilibrium components, and outcome decompositions.

A component's index measures whether it survives small payoff perturbations:
it is the sum, over the regular equilibria a perturbed game keeps near the
component, of the Jacobian signs of the equilibrium map there.  Indices over
all components of a game sum to +1, and a component of index 0 can be wiped
out by an arbitrarily small perturbation.

Two routes compute the same number through different coordinates.
:func:`component_index` works in mixed strategies of the reduced normal
form.  :func:`index_via_enabling` replays the computation in last-action
probabilities, over the polytopes spanned by floored behavioral strategies;
the floor keeps every information set reached so the fixed points stay
isolated under generic perturbation.  The routes share no solving code, so
their agreement is a real check rather than a tautology.

:func:`decompose_outcome` splits a component's information sets into the
part its outcome reaches, the part a player could only reach by deviating
personally, and the part opponents keep closed.  The on-path play and the
deterrence margins of the unused actions are what the index factors through
in :func:`product_identity_check`.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import lp
from .equilibria import (EnumerationResult, Equilibrium, EquilibriumComponent,
                         NormalForm, enumerate_equilibria, group_components,
                         profile_regrets, to_normal_form)
from .games import (ChanceNode, DecisionNode, GameTree, InfoSet, TerminalNode,
                    format_rational)
from .strategies import BehavioralProfile, behavioral_to_mixed

ZERO = Fraction(0)
ONE = Fraction(1)

# denominator of the random rational perturbation draws; prime, so distinct
# draws rarely cancel
_DRAW_DEN = 997


class NonRegularError(ValueError):
    """An equilibrium failed the regularity checks (singular or
    ill-conditioned Jacobian, or the independent finite-difference rebuild
    disagreed with the exact one).  Callers fall back to perturbation."""


class DecompositionError(ValueError):
    """A component's witnesses do not pin down a single outcome structure,
    so the on-path/off-path split is not well defined for it."""


# ---------------------------------------------------------------------------
# the equilibrium maps


def _as_dists(profile) -> Dict[str, Dict[object, Fraction]]:
    if isinstance(profile, Equilibrium):
        return profile.dists
    dists = getattr(profile, "dists", profile)
    return {n: dict(d) for n, d in dists.items()}


def _clean_dists(dists):
    out = {}
    for n, d in dists.items():
        kept = {}
        for s, w in d.items():
            w = Fraction(w)
            if w < 0:
                raise ValueError(f"negative weight {w} on {s!r}")
            if w != 0:
                kept[s] = w
        out[n] = kept
    return out


def nash_map(nf: NormalForm, profile) -> Dict[str, Dict[object, Fraction]]:
    """One step of the gain-proportional equilibrium map, exactly.

    Each strategy's new weight is proportional to its old weight plus the
    positive part of its payoff gain over the current mix.  Fixed points
    are exactly the Nash equilibria: at an equilibrium no gain is positive,
    and away from one the profitable deviations soak up weight.
    """
    dists = _as_dists(profile)
    for n in nf.players:
        bad = set(dists[n]) - set(nf.strategies[n])
        if bad:
            raise ValueError(
                f"profile for {n!r} uses keys {sorted(map(repr, bad))} "
                "that are not normal-form strategies")
    out = {}
    for n in nf.players:
        dev = nf.deviation_payoffs(n, dists)
        current = sum((Fraction(w) * dev[s] for s, w in dists[n].items()
                       if w != 0), ZERO)
        weights = {}
        for s in nf.strategies[n]:
            gain = dev[s] - current
            weights[s] = Fraction(dists[n].get(s, ZERO)) + \
                (gain if gain > 0 else ZERO)
        total = sum(weights.values(), ZERO)
        out[n] = {s: w / total for s, w in weights.items()}
    return out


def nash_map_zeta(delta: Mapping, gains: Mapping, zeta) -> dict:
    """Floored variant of the gain map on a single simplex.

    ``delta`` is a distribution whose entries all sit at or above the floor
    ``zeta``; ``gains`` assigns each key its payoff gain.  The update moves
    the above-floor part of the mass proportionally to the positive gains
    and keeps the floored simplex invariant: entries never drop below
    ``zeta`` and the total stays 1.  With no positive gain the map is the
    identity.
    """
    zeta = Fraction(zeta)
    keys = list(delta)
    k = len(keys)
    if k == 0:
        raise ValueError("empty distribution")
    if zeta * k >= 1:
        raise ValueError(f"floor {zeta} is not below 1/{k}")
    total = ZERO
    for a in keys:
        if Fraction(delta[a]) < zeta:
            raise ValueError(f"entry {a!r} is below the floor")
        total += Fraction(delta[a])
    if total != 1:
        raise ValueError(f"distribution sums to {total}")
    gplus = {a: max(Fraction(gains[a]), ZERO) for a in keys}
    head = ONE - k * zeta
    scale = head / (ONE + sum(gplus.values(), ZERO))
    return {a: zeta + scale * ((Fraction(delta[a]) - zeta) / head + gplus[a])
            for a in keys}


# ---------------------------------------------------------------------------
# the Jacobian sign at a regular equilibrium


def _exact_det(M) -> Fraction:
    n = len(M)
    if n == 0:
        return ONE
    A = [row[:] for row in M]
    det = ONE
    for col in range(n):
        piv = None
        for r in range(col, n):
            if A[r][col] != 0:
                piv = r
                break
        if piv is None:
            return ZERO
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            det = -det
        det *= A[col][col]
        inv = ONE / A[col][col]
        for r in range(col + 1, n):
            if A[r][col] == 0:
                continue
            f = A[r][col] * inv
            for c2 in range(col, n):
                A[r][c2] -= f * A[col][c2]
    return det


def _invert(M):
    n = len(M)
    A = [row[:] + [ONE if i == j else ZERO for j in range(n)]
         for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise NonRegularError("singular Gram matrix")
        A[col], A[piv] = A[piv], A[col]
        inv = ONE / A[col][col]
        A[col] = [x * inv for x in A[col]]
        for r in range(n):
            if r == col or A[r][col] == 0:
                continue
            f = A[r][col]
            A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [row[n:] for row in A]


def _cross_payoffs(nf, n, rows, m, cols, dists):
    """U_n with n playing each of ``rows``, m each of ``cols``, the rest
    mixing as in ``dists``."""
    others = [p for p in nf.players if p not in (n, m)]
    support = [[(s, w) for s, w in sorted(dists[p].items()) if w != 0]
               for p in others]
    pidx = nf._index[n]
    out = {(r, c): ZERO for r in rows for c in cols}
    for combo in itertools.product(*support):
        w = ONE
        for _, wp in combo:
            w *= wp
        assign = dict(zip(others, (s for s, _ in combo)))
        for r in rows:
            assign[n] = r
            for c in cols:
                assign[m] = c
                prof = tuple(assign[p] for p in nf.players)
                out[(r, c)] += w * nf.table[prof][pidx]
    return out


def _mpf_to_fraction(x) -> Fraction:
    sign, man, exp, _ = x._mpf_
    if man == 0:
        return ZERO
    v = Fraction(man) * (Fraction(2) ** exp)
    return -v if sign else v


def _refine_on_support(nf: NormalForm, dists):
    """Polish a rational near-equilibrium to 60-digit precision on its own
    support and return it as an exact rational point.

    Newton iteration on the square support system (indifference gaps plus
    simplex sums) either converges to residual below 1e-45 or raises.  The
    refined point must stay strictly inside the open face and keep every
    off-support deviation strictly unprofitable by a payoff-scaled margin,
    so a near-miss that is not shadowing a true equilibrium cannot slip
    through.  Coordinates convert back to fractions exactly (binary
    mantissa over a power of two) and are renormalised per player.
    """
    from mpmath import mp

    players = nf.players
    supports = {n: tuple(s for s in nf.strategies[n]
                         if dists[n].get(s, ZERO) > 0) for n in players}
    mixers = [n for n in players if len(supports[n]) > 1]
    if not mixers:
        return dists
    pures = {n: supports[n][0] for n in players if len(supports[n]) == 1}
    idx = [(n, s) for n in mixers for s in supports[n]]
    pos = {pair: i for i, pair in enumerate(idx)}
    d = len(idx)
    with mp.workdps(60):
        pay_cache = {}

        def pay(n, s, combo):
            key = (n, s, combo)
            v = pay_cache.get(key)
            if v is None:
                assign = dict(pures)
                assign.update(zip([m for m in mixers if m != n], combo))
                assign[n] = s
                u = nf.table[tuple(assign[p] for p in players)][nf._index[n]]
                v = mp.mpf(u.numerator) / u.denominator
                pay_cache[key] = v
            return v

        def U(n, s, x):
            others = [m for m in mixers if m != n]
            total = mp.mpf(0)
            for combo in itertools.product(*[supports[m] for m in others]):
                w = mp.mpf(1)
                for m, sm in zip(others, combo):
                    w *= x[pos[(m, sm)]]
                total += w * pay(n, s, combo)
            return total

        def G(x):
            rows = []
            for n in mixers:
                u0 = U(n, supports[n][0], x)
                for s in supports[n][1:]:
                    rows.append(U(n, s, x) - u0)
                rows.append(sum(x[pos[(n, s)]] for s in supports[n]) - 1)
            return rows

        x = [mp.mpf(dists[n][s].numerator) / dists[n][s].denominator
             for (n, s) in idx]
        h = mp.mpf('1e-20')
        target = mp.mpf('1e-45')
        for _ in range(80):
            g = G(x)
            if max(abs(v) for v in g) < target:
                break
            jac = mp.matrix(d, d)
            for j in range(d):
                xp = list(x)
                xm = list(x)
                xp[j] += h
                xm[j] -= h
                gp = G(xp)
                gm = G(xm)
                for i in range(d):
                    jac[i, j] = (gp[i] - gm[i]) / (2 * h)
            try:
                delta = mp.lu_solve(jac, mp.matrix([-v for v in g]))
            except Exception as exc:
                raise NonRegularError(
                    f"support system is singular while refining ({exc})")
            x = [xi + delta[i] for i, xi in enumerate(x)]
        else:
            raise NonRegularError(
                "numeric equilibrium did not refine to working precision")
        for xi in x:
            if not mp.mpf('1e-12') < xi < 1 + mp.mpf('1e-12'):
                raise NonRegularError("refined point leaves the open face")
        margin = mp.mpf('1e-12') * max(float(_payoff_spread(nf)), 1.0)
        for n in players:
            u0 = U(n, supports[n][0], x)
            for t in nf.strategies[n]:
                if t not in supports[n] and U(n, t, x) - u0 > -margin:
                    raise NonRegularError(
                        "refined point cannot certify an off-support "
                        f"deviation as unprofitable for {n!r}")
        out = {}
        for n in players:
            if n not in mixers:
                out[n] = {supports[n][0]: ONE}
                continue
            vals = {s: _mpf_to_fraction(x[pos[(n, s)]]) for s in supports[n]}
            tot = sum(vals.values(), ZERO)
            out[n] = {s: v / tot for s, v in vals.items()}
        return out


def regular_equilibrium_index(nf: NormalForm, profile, fd_tol: float = 1e-4,
                              cond_cap: float = 1e8) -> int:
    """Sign of det(I - Df) for the payoff-projection map on the support face.

    The map moves each player's mix by its payoff gradient and projects the
    result back onto the affine hull of the support face; its fixed points
    are the equilibria with that support.  The Jacobian is assembled in
    exact rational arithmetic from pairwise payoff differences, then rebuilt
    through an independent evaluation path by central and forward
    differences of the map itself.  Any disagreement beyond ``fd_tol``, a
    zero determinant, or a condition number above ``cond_cap`` raises
    :class:`NonRegularError` so the caller can escalate to perturbation.

    Returns +1 or -1.  A strict pure equilibrium has an empty tangent space
    and index +1.  Profiles with a tiny positive regret are treated as
    rational snapshots of irrational equilibria and re-polished on their
    support before the Jacobian is assembled.
    """
    dists = _clean_dists(_as_dists(profile))
    missing = [n for n in nf.players if n not in dists]
    if missing:
        raise ValueError(f"profile misses players {missing}")
    regrets = profile_regrets(nf, dists)
    worst = max(regrets.values())
    det_floor = 0.0
    if worst > 0:
        # A tiny positive regret means the profile is a rational snapshot
        # of an irrational equilibrium (3+ mixing players generically put
        # equilibria at algebraic, non-rational points).  Re-polish it on
        # its own support at working precision far beyond double and carry
        # on from the refined point; anything worse is a genuine non-
        # equilibrium and stays an error.
        if float(worst) > 1e-6 * max(float(_payoff_spread(nf)), 1.0):
            raise ValueError(f"profile is not an equilibrium (regret {worst})")
        dists = _refine_on_support(nf, dists)
        det_floor = 1e-18
    supports = {n: tuple(s for s in nf.strategies[n]
                         if dists[n].get(s, ZERO) > 0)
                for n in nf.players}
    coords = [(n, s) for n in nf.players for s in supports[n][1:]]
    d = len(coords)
    if d == 0:
        return 1
    col_of = {pair: i for i, pair in enumerate(coords)}
    # Df in face coordinates: own blocks are the identity (a player's
    # gradient ignores the player's own mix), cross blocks are centred
    # payoff differences
    jac = [[ONE if i == j else ZERO for j in range(d)] for i in range(d)]
    for n in nf.players:
        if len(supports[n]) < 2:
            continue
        kn = len(supports[n])
        for m in nf.players:
            if m == n or len(supports[m]) < 2:
                continue
            w = _cross_payoffs(nf, n, supports[n], m, supports[m], dists)
            t0 = supports[m][0]
            for t in supports[m][1:]:
                col = col_of[(m, t)]
                diffs = {u: w[(u, t)] - w[(u, t0)] for u in supports[n]}
                avg = sum(diffs.values(), ZERO) / kn
                for s in supports[n][1:]:
                    jac[col_of[(n, s)]][col] += diffs[s] - avg
    M = [[(ONE if i == j else ZERO) - jac[i][j] for j in range(d)]
         for i in range(d)]
    det = _exact_det(M)
    if det == 0:
        raise NonRegularError(
            "equilibrium map Jacobian is singular on the support face")
    if det_floor and abs(float(det)) < det_floor:
        # the refined point carries ~1e-45 coordinate error; a determinant
        # this small could owe its sign to that error
        raise NonRegularError(
            "determinant below the validated-precision floor")

    base = {n: {s: dists[n].get(s, ZERO) for s in supports[n]}
            for n in nf.players}

    def evaluate(x):
        cur = {n: dict(base[n]) for n in nf.players}
        for (n, s), xi in zip(coords, x):
            if xi == 0:
                continue
            cur[n][s] += xi
            cur[n][supports[n][0]] -= xi
        out = []
        for n in nf.players:
            if len(supports[n]) < 2:
                continue
            dev = nf.deviation_payoffs(n, cur)
            grads = [dev[s] for s in supports[n]]
            avg = sum(grads, ZERO) / len(supports[n])
            for s in supports[n][1:]:
                out.append(cur[n][s] - base[n][s] + dev[s] - avg)
        return out

    h = Fraction(1, 10 ** 6)
    centre = evaluate([ZERO] * d)
    scale = 1.0 + max(abs(float(jac[i][j]))
                      for i in range(d) for j in range(d))
    for j in range(d):
        xp = [ZERO] * d
        xm = [ZERO] * d
        xp[j] = h
        xm[j] = -h
        fp = evaluate(xp)
        fm = evaluate(xm)
        for i in range(d):
            central = (fp[i] - fm[i]) / (2 * h)
            forward = (fp[i] - centre[i]) / h
            if abs(float(central - jac[i][j])) > fd_tol * scale:
                raise NonRegularError(
                    "finite-difference Jacobian disagrees with the exact one "
                    f"at entry ({i}, {j})")
            if abs(float(forward - central)) > 10 * fd_tol * scale:
                raise NonRegularError(
                    f"forward and central differences disagree at ({i}, {j})")
    cond = float(np.linalg.cond(
        np.array([[float(v) for v in row] for row in M])))
    if not np.isfinite(cond) or cond > cond_cap:
        raise NonRegularError(
            f"Jacobian condition number {cond:.3g} exceeds {cond_cap:g}")
    return 1 if det > 0 else -1


# ---------------------------------------------------------------------------
# component indices by perturbation


@dataclass
class ComponentIndex:
    """An index value plus the evidence that produced it.

    ``value`` is None when the perturbation trials disagreed or could not
    be completed; disagreement is reported, never averaged away.  The
    ``ledger`` keeps one entry per trial so a run can be audited or
    replayed from its seed.
    """

    value: Optional[int]
    method: str
    trials: int
    agreement: float
    ledger: List[dict] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.value is not None and self.agreement == 1.0

    def as_json(self):
        return {
            "value": self.value,
            "method": self.method,
            "trials": self.trials,
            "agreement": self.agreement,
            "certified": self.certified,
            "trial_ledger": self.ledger,
        }


def jacobian_component_index(nf: NormalForm, profile) -> ComponentIndex:
    """Index of an isolated regular equilibrium, straight from the Jacobian
    sign, with no perturbation trials."""
    sign = regular_equilibrium_index(nf, profile)
    return ComponentIndex(value=sign, method="jacobian-at-regular", trials=0,
                          agreement=1.0,
                          ledger=[{"note": "exact Jacobian sign", "value": sign}])


def _payoff_spread(nf: NormalForm) -> Fraction:
    lo = hi = None
    for pv in nf.table.values():
        for u in pv:
            if lo is None or u < lo:
                lo = u
            if hi is None or u > hi:
                hi = u
    spread = (hi - lo) if lo is not None else ZERO
    return spread if spread > 0 else ONE


def _perturbed_nf(nf: NormalForm, rho_abs: Fraction,
                  rng: random.Random) -> NormalForm:
    table = {}
    for prof, pv in nf.table.items():
        table[prof] = tuple(
            u + rho_abs * Fraction(rng.randint(-_DRAW_DEN, _DRAW_DEN),
                                   _DRAW_DEN)
            for u in pv)
    # the perturbed table no longer matches any game tree
    return NormalForm(nf.players, nf.strategies, table, labels=nf.labels,
                      game=None, name=nf.name + "+perturbed")


def _profile_distance(a, b, players) -> Fraction:
    worst = ZERO
    for n in players:
        da, db = a.get(n, {}), b.get(n, {})
        keys = set(da) | set(db)
        tv = sum((abs(da.get(s, ZERO) - db.get(s, ZERO)) for s in keys),
                 ZERO) / 2
        if tv > worst:
            worst = tv
    return worst


def _sibling_components(g, nf, comp):
    """Recompute the other components when the caller did not pass them."""
    res = enumerate_equilibria(nf)
    comps = group_components(nf.game, res) if nf.game is not None else \
        group_components(None, res)
    return [c for c in comps if c.outcome != comp.outcome]


def _assignment_radius(comp, others, players) -> Optional[Fraction]:
    mine = [_clean_dists(w.dists) for w in comp.witnesses]
    best = None
    for other in others or []:
        if other is comp:
            continue
        for w2 in other.witnesses:
            d2 = _clean_dists(w2.dists)
            for d1 in mine:
                dist = _profile_distance(d1, d2, players)
                if best is None or dist < best:
                    best = dist
    if best is None:
        return None
    radius = best / 2
    floor = Fraction(1, 1000)
    return radius if radius > floor else floor


_DRIFT_CAP = Fraction(1, 32)


def _has_partial_family(comp) -> bool:
    return any(w.family is not None and w.family.endswith(":partial")
               for w in comp.witnesses)


def _component_boxes(witnesses, nf, pad):
    """Per-coordinate range of the component cloud, padded for drift.

    The enumeration emits every family polytope vertex as a witness, so
    coordinate ranges over the witnesses bound the whole component by
    convexity; ``pad`` absorbs the displacement a small payoff perturbation
    can cause.  Unsound for sampled (partial) families, which the caller
    screens out."""
    lo, hi = {}, {}
    for n in nf.players:
        lo[n], hi[n] = {}, {}
        for s in nf.strategies[n]:
            vals = [w[n].get(s, ZERO) for w in witnesses]
            l, h = min(vals), max(vals)
            lo[n][s] = l - pad if l > pad else ZERO
            hi[n][s] = h + pad if h + pad < 1 else ONE
    return lo, hi


def _diff_interval(table, pidx, players, T, lo, hi, n, s_a, s_b):
    """Interval bound for U_n(s_a) - U_n(s_b) when each opponent coordinate
    ranges over its box on the face spanned by ``T``.  Works on the exact
    table with Fraction boxes or on a float table with float boxes."""
    others = [m for m in players if m != n]
    acc_lo = acc_hi = 0
    for combo in itertools.product(*[T[m] for m in others]):
        w_lo = w_hi = 1
        for m, sm in zip(others, combo):
            w_lo *= lo[m][sm]
            w_hi *= hi[m][sm]
        assign = dict(zip(others, combo))
        assign[n] = s_a
        pa = table[tuple(assign[p] for p in players)][pidx]
        assign[n] = s_b
        pb = table[tuple(assign[p] for p in players)][pidx]
        c = pa - pb
        if c > 0:
            acc_lo += c * w_lo
            acc_hi += c * w_hi
        else:
            acc_lo += c * w_hi
            acc_hi += c * w_lo
    return acc_lo, acc_hi


def _box_support_filter(pnf, lo, hi, scale, node_cap=2048):
    """Support filter for near-component enumeration.

    A support survives only if the component box could hold an equilibrium
    carried by it: each player's box mass must be able to reach 1, support
    strategies must be able to tie the support's reference strategy, and
    outside strategies must be able to weakly lose to it.  Interval
    arithmetic proves most supports empty without touching any algebra;
    floats decide clear cases and exact arithmetic settles borderline ones.

    Supports that survive the whole box are branch-and-pruned: the widest
    support coordinate is bisected and each half retested, so a support
    stays alive only if some sub-box satisfies every tie and loss condition
    at once.  Wide component faces otherwise let supports through whose tie
    surfaces pass the box in disjoint places.  Pruning discards a sub-box
    only on a margin-clear interval proof; past ``node_cap`` nodes the
    support is kept conservatively.
    """
    players = pnf.players
    flo = {n: {s: float(v) for s, v in lo[n].items()} for n in players}
    fhi = {n: {s: float(v) for s, v in hi[n].items()} for n in players}
    ftable = {prof: tuple(float(u) for u in pv)
              for prof, pv in pnf.table.items()}
    margin = 1e-7 * max(scale, 1.0)

    def exact_dead(T, n, s_a, s_b, indiff):
        a_lo, a_hi = _diff_interval(pnf.table, pnf._index[n], players, T,
                                    lo, hi, n, s_a, s_b)
        return (a_lo > 0 or a_hi < 0) if indiff else a_lo > 0

    def float_dead(T, nlo, nhi):
        for n in players:
            if sum(nhi[n][s] for s in T[n]) < 1 - 1e-9:
                return True
            if sum(nlo[n][s] for s in T[n]) > 1 + 1e-9:
                return True
        for n in players:
            pidx = pnf._index[n]
            base = T[n][0]
            for s in T[n][1:]:
                a_lo, a_hi = _diff_interval(ftable, pidx, players, T,
                                            nlo, nhi, n, s, base)
                if a_lo > margin or a_hi < -margin:
                    return True
            for t in pnf.strategies[n]:
                if t in T[n]:
                    continue
                a_lo, _ = _diff_interval(ftable, pidx, players, T,
                                         nlo, nhi, n, t, base)
                if a_lo > margin:
                    return True
        return False

    def keep(T):
        for n in players:
            if sum(fhi[n][s] for s in T[n]) < 1 - 1e-9:
                if sum((hi[n][s] for s in T[n]), ZERO) < 1:
                    return False
            if sum(flo[n][s] for s in T[n]) > 1 + 1e-9:
                if sum((lo[n][s] for s in T[n]), ZERO) > 1:
                    return False
        for n in players:
            pidx = pnf._index[n]
            base = T[n][0]
            for s in T[n][1:]:
                a_lo, a_hi = _diff_interval(ftable, pidx, players, T,
                                            flo, fhi, n, s, base)
                if a_lo > margin or a_hi < -margin:
                    return False
                if (a_lo > 0 or a_hi < 0) and exact_dead(T, n, s, base,
                                                         True):
                    return False
            for t in pnf.strategies[n]:
                if t in T[n]:
                    continue
                a_lo, _ = _diff_interval(ftable, pidx, players, T,
                                         flo, fhi, n, t, base)
                if a_lo > margin:
                    return False
                if a_lo > 0 and exact_dead(T, n, t, base, False):
                    return False
        # branch and prune: only support coordinates of mixing players feed
        # the interval tests, so those are the ones worth bisecting
        active = [(n, s) for n in players if len(T[n]) > 1 for s in T[n]]
        queue = [(flo, fhi)]
        nodes = 0
        while queue:
            nlo, nhi = queue.pop()
            nodes += 1
            if nodes > node_cap:
                return True
            if float_dead(T, nlo, nhi):
                continue
            pick, width = None, 1.0 / 64
            for pair in active:
                w = nhi[pair[0]][pair[1]] - nlo[pair[0]][pair[1]]
                if w > width:
                    pick, width = pair, w
            if pick is None:
                return True
            n, s = pick
            mid = (nlo[n][s] + nhi[n][s]) / 2
            for half in (0, 1):
                clo = {m: dict(nlo[m]) if m == n else nlo[m] for m in players}
                chi = {m: dict(nhi[m]) if m == n else nhi[m] for m in players}
                if half:
                    clo[n][s] = mid
                else:
                    chi[n][s] = mid
                queue.append((clo, chi))
        return False

    return keep


def _box_violation(dists, lo, hi, players, strategies):
    """Largest per-coordinate excursion of a profile outside the box."""
    worst = 0
    for n in players:
        d = dists.get(n, {})
        for s in strategies[n]:
            v = d.get(s, ZERO)
            l, h = lo[n][s], hi[n][s]
            gap = (l - v) if v < l else (v - h) if v > h else 0
            if gap > worst:
                worst = gap
    return worst


def component_index(g, comp: EquilibriumComponent, trials: int = 5,
                    rho: Fraction = Fraction(1, 10000), seed: int = 0,
                    others: Optional[Sequence[EquilibriumComponent]] = None,
                    retry_budget: int = 4) -> ComponentIndex:
    """Index of ``comp`` by random payoff perturbation.

    Each trial draws an independent rational perturbation of every payoff
    table entry, of magnitude at most ``rho`` times the payoff spread,
    enumerates the perturbed game's equilibria inside a box neighborhood of
    the component, and sums the Jacobian signs of the regular points found
    there.  The neighborhood is the per-coordinate range of the witnesses
    padded by twice the working radius (half the distance to the nearest
    other component, capped and floored); equilibria on the rim of the box
    fail the trial rather than being silently counted or dropped.  The
    value is certified only when every trial agrees; disagreeing trials
    yield an undetermined result with the evidence in the ledger, and each
    trial records the largest observed drift from the witness cloud.

    ``others`` passes the sibling components so the working radius can be
    derived; without them the siblings are recomputed from scratch.  A
    trial whose perturbed game resists resolution (skipped supports,
    surviving continua, regularity refusals) is redrawn up to
    ``retry_budget`` times and raises :class:`NonRegularError` beyond that.
    """
    nf = g if isinstance(g, NormalForm) else to_normal_form(g)
    if others is None:
        others = _sibling_components(g, nf, comp)
    witnesses = [_clean_dists(w.dists) for w in comp.witnesses]
    if not witnesses:
        raise ValueError("component has no witnesses")
    iso = _assignment_radius(comp, others, nf.players)
    if iso is None:
        r_eff = _DRIFT_CAP
    else:
        r_eff = max(min(iso, _DRIFT_CAP), Fraction(1, 1000))
    pad = 2 * r_eff
    # sampled families do not bound their polytopes, so the box shortcut is
    # off the table; fall back to full enumeration with distance assignment
    boxes = None if _has_partial_family(comp) else \
        _component_boxes(witnesses, nf, pad)
    scale = float(_payoff_spread(nf))
    rho_abs = Fraction(rho) * _payoff_spread(nf)
    rng = random.Random(seed)
    values: List[Optional[int]] = []
    ledger: List[dict] = []
    for trial in range(trials):
        entry = {"trial": trial, "attempts": 0, "failures": []}
        value = None
        for _ in range(retry_budget):
            entry["attempts"] += 1
            pnf = _perturbed_nf(nf, rho_abs, rng)
            if boxes is not None:
                lo, hi = boxes
                filt = _box_support_filter(pnf, lo, hi, scale)
            else:
                filt = None
            res = enumerate_equilibria(pnf, seed=rng.randrange(2 ** 30),
                                       support_filter=filt)
            if boxes is not None:
                outcome = _trial_value(pnf, res, lo, hi, pad, witnesses)
            else:
                outcome = _distance_trial_value(pnf, res, witnesses,
                                                iso if iso is not None
                                                else r_eff)
            if isinstance(outcome, str):
                entry["failures"].append(outcome)
                continue
            value, points, drift = outcome
            entry["value"] = value
            entry["points"] = points
            entry["max_drift"] = drift
            break
        else:
            raise NonRegularError(
                f"trial {trial}: no regular perturbation after "
                f"{retry_budget} draws ({'; '.join(entry['failures'])})")
        values.append(value)
        ledger.append(entry)
    agree = len(set(values)) == 1
    return ComponentIndex(
        value=values[0] if agree else None,
        method="regular-sum-perturbation",
        trials=trials,
        agreement=1.0 if agree else
        max(values.count(v) for v in set(values)) / trials,
        ledger=ledger)


def _trial_value(pnf, res: EnumerationResult, lo, hi, pad, witnesses):
    """Sum of Jacobian signs inside the component box, or a failure reason.

    Equilibria clearly outside the box belong to other parts of the
    strategy space and are ignored; anything in the rim band just outside
    it means the neighborhood did not separate cleanly, which fails the
    trial instead of guessing."""
    if res.skipped:
        reasons = sorted({rec["reason"] for rec in res.skipped})
        return "unresolved supports: " + ", ".join(reasons)
    signs = []
    drift = 0.0
    for eq in res.equilibria:
        dists = _clean_dists(eq.dists)
        viol = _box_violation(dists, lo, hi, pnf.players, pnf.strategies)
        if viol > pad:
            continue
        if viol > 1e-9:
            return "a perturbed equilibrium fell on the rim of the box"
        if eq.family is not None:
            # dimension-0 families are isolated points wearing the family
            # bookkeeping; anything larger means the draw was degenerate
            fam = res.families.get(eq.family)
            if fam is None or fam.dimension != 0:
                return "perturbation left a continuum near the component"
        try:
            signs.append(regular_equilibrium_index(pnf, eq))
        except (NonRegularError, ValueError) as exc:
            return f"non-regular point ({exc})"
        dist = min(float(_profile_distance(dists, w, pnf.players))
                   for w in witnesses)
        if dist > drift:
            drift = dist
    return sum(signs), len(signs), drift


def _distance_trial_value(pnf, res: EnumerationResult, witnesses, radius):
    """Witness-distance variant used when boxes are unavailable."""
    if res.skipped:
        reasons = sorted({rec["reason"] for rec in res.skipped})
        return "unresolved supports: " + ", ".join(reasons)
    signs = []
    drift = 0.0
    for eq in res.equilibria:
        dists = _clean_dists(eq.dists)
        dist = min(_profile_distance(dists, w, pnf.players)
                   for w in witnesses)
        if dist > radius:
            continue
        if eq.family is not None:
            fam = res.families.get(eq.family)
            if fam is None or fam.dimension != 0:
                return "perturbation left a continuum near the component"
        try:
            signs.append(regular_equilibrium_index(pnf, eq))
        except (NonRegularError, ValueError) as exc:
            return f"non-regular point ({exc})"
        if float(dist) > drift:
            drift = float(dist)
    return sum(signs), len(signs), drift


# ---------------------------------------------------------------------------
# the same index through enabling coordinates


def _full_strategy_keys(game: GameTree, n: str):
    sets = game.player_infosets[n]
    keys = [tuple((h, f[h]) for h in sets) for f in game.full_strategies(n)]
    return tuple(sorted(keys, key=lambda k: tuple(a for _, a in k)))


def _floored_enabling(game: GameTree, n: str, strategy, eps: Fraction):
    """Last-action probabilities of a pure strategy under an ``eps`` floor:
    chosen actions keep 1-(k-1)*eps, the rest get eps, and information sets
    the (reduced) strategy leaves open are played uniformly."""
    fmap = dict(strategy)
    vec = {}
    for a in game.last_actions[n]:
        hid = game.action_owner[a]
        seq = list(game.own_history(hid)) + [(hid, a)]
        w = ONE
        for hh, aa in seq:
            k = len(game.infosets[hh].actions)
            if hh in fmap:
                w *= (ONE - (k - 1) * eps) if fmap[hh] == aa else eps
            else:
                w *= Fraction(1, k)
        vec[a] = w
    return vec


def _signature_coefficients(game: GameTree):
    """Payoff coefficients of the multilinear form in enabling coordinates,
    grouped by the tuple of last actions that a terminal requires."""
    K = {}
    for z in game.terminals:
        c = game.chance_probability(z)
        if c == 0:
            continue
        alpha = tuple(game.last_action[(n, z)] for n in game.players)
        row = K.setdefault(alpha, [ZERO] * len(game.players))
        for i, u in enumerate(game.payoff_vector(z)):
            row[i] += c * u
    return K


def _perturb_coefficients(K, rho_abs: Fraction, rng: random.Random):
    return {alpha: [u + rho_abs * Fraction(rng.randint(-_DRAW_DEN, _DRAW_DEN),
                                           _DRAW_DEN)
                    for u in row]
            for alpha, row in K.items()}


def _floored_normal_form(game: GameTree, keys, qvecs, K,
                         name: str) -> NormalForm:
    players = game.players
    table = {}
    for combo in itertools.product(*[keys[n] for n in players]):
        totals = [ZERO] * len(players)
        for alpha, row in K.items():
            f = ONE
            for i, a in enumerate(alpha):
                if a is None:
                    continue
                f *= qvecs[players[i]][combo[i]][a]
                if f == 0:
                    break
            if f == 0:
                continue
            for i, u in enumerate(row):
                if u != 0:
                    totals[i] += f * u
        table[combo] = tuple(totals)
    labels = {n: {k: (".".join(a for _, a in k) or "(idle)") for k in keys[n]}
              for n in players}
    return NormalForm(players, keys, table, labels=labels, game=None,
                      name=name)


def _enabling_point(qvecs, n, dist):
    acc = {}
    for s, w in dist.items():
        if w == 0:
            continue
        for a, q in qvecs[n][s].items():
            acc[a] = acc.get(a, ZERO) + w * q
    return acc


def _enabling_distance(a, b, players) -> Fraction:
    worst = ZERO
    for n in players:
        da, db = a.get(n, {}), b.get(n, {})
        for key in set(da) | set(db):
            gap = abs(da.get(key, ZERO) - db.get(key, ZERO))
            if gap > worst:
                worst = gap
    return worst


def _minimal_face(verts, point, acts):
    """Vertices of the smallest polytope face containing ``point``: those
    that can carry positive weight in some convex combination giving it."""
    V = len(verts)
    A_eq = [[v[a] for v in verts] for a in acts]
    b_eq = [point.get(a, ZERO) for a in acts]
    A_eq.append([ONE] * V)
    b_eq.append(ONE)
    face = []
    for j in range(V):
        c = [ONE if i == j else ZERO for i in range(V)]
        r = lp.lp_solve(c, A_eq=A_eq, b_eq=b_eq, maximize=True)
        if r.status != "optimal":
            raise NonRegularError(
                "fixed point fell outside the floored polytope")
        if r.fun > 0:
            face.append(verts[j])
    return face


def _independent_differences(face, acts):
    rows, pivots, basis = [], [], []
    v0 = face[0]
    for v in face[1:]:
        vec = [v[a] - v0[a] for a in acts]
        red = vec[:]
        for prow, pcol in zip(rows, pivots):
            if red[pcol] != 0:
                f = red[pcol] / prow[pcol]
                red = [x - f * y for x, y in zip(red, prow)]
        pcol = next((i for i, x in enumerate(red) if x != 0), None)
        if pcol is None:
            continue
        rows.append(red)
        pivots.append(pcol)
        basis.append(vec)
    return basis


def _enabling_index_at(game: GameTree, keys, qvecs, K, pstar,
                       fd_tol: float = 1e-4, cond_cap: float = 1e8) -> int:
    """Jacobian sign of the projection map in enabling coordinates, on the
    minimal faces of the floored polytopes at ``pstar``."""
    players = list(game.players)
    acts = {n: list(game.last_actions[n]) for n in players}
    tangents: Dict[str, list] = {}
    grams: Dict[str, list] = {}
    for n in players:
        if not acts[n]:
            continue
        verts = [qvecs[n][k] for k in keys[n]]
        face = _minimal_face(verts, pstar.get(n, {}), acts[n])
        if len(face) <= 1:
            continue
        basis = _independent_differences(face, acts[n])
        if not basis:
            continue
        tangents[n] = basis
        gram = [[sum((x * y for x, y in zip(u, v)), ZERO) for v in basis]
                for u in basis]
        grams[n] = _invert(gram)
    coords = [(n, i) for n in players if n in tangents
              for i in range(len(tangents[n]))]
    d = len(coords)
    if d == 0:
        return 1
    col_of = {pair: i for i, pair in enumerate(coords)}
    pidx = {n: i for i, n in enumerate(players)}

    def hessian(n, m):
        H = {a: {b: ZERO for b in acts[m]} for a in acts[n]}
        i_n, i_m = pidx[n], pidx[m]
        for alpha, row in K.items():
            coef = row[i_n]
            if coef == 0 or alpha[i_n] is None or alpha[i_m] is None:
                continue
            f = coef
            for j, other in enumerate(alpha):
                if j in (i_n, i_m) or other is None:
                    continue
                f *= pstar[players[j]].get(other, ZERO)
                if f == 0:
                    break
            if f == 0:
                continue
            H[alpha[i_n]][alpha[i_m]] += f
        return H

    jac = [[ONE if i == j else ZERO for j in range(d)] for i in range(d)]
    for n in tangents:
        for m in tangents:
            if m == n:
                continue
            H = hessian(n, m)
            # (T_n' T_n)^-1 T_n' H T_m, all exact
            TtHT = []
            for u in tangents[n]:
                row = []
                for v in tangents[m]:
                    total = ZERO
                    for ia, a in enumerate(acts[n]):
                        if u[ia] == 0:
                            continue
                        inner = sum((H[a][b] * v[ib]
                                     for ib, b in enumerate(acts[m])
                                     if v[ib] != 0), ZERO)
                        total += u[ia] * inner
                    row.append(total)
                TtHT.append(row)
            block = [[sum((grams[n][i][k] * TtHT[k][j]
                           for k in range(len(tangents[n]))), ZERO)
                      for j in range(len(tangents[m]))]
                     for i in range(len(tangents[n]))]
            for i in range(len(tangents[n])):
                for j in range(len(tangents[m])):
                    jac[col_of[(n, i)]][col_of[(m, j)]] += block[i][j]
    M = [[(ONE if i == j else ZERO) - jac[i][j] for j in range(d)]
         for i in range(d)]
    det = _exact_det(M)
    if det == 0:
        raise NonRegularError("projection map Jacobian is singular at the "
                              "enabling fixed point")

    def gradient(n, pcur):
        i_n = pidx[n]
        g = {a: ZERO for a in acts[n]}
        for alpha, row in K.items():
            coef = row[i_n]
            if coef == 0 or alpha[i_n] is None:
                continue
            f = coef
            for j, other in enumerate(alpha):
                if j == i_n or other is None:
                    continue
                f *= pcur[players[j]].get(other, ZERO)
                if f == 0:
                    break
            if f == 0:
                continue
            g[alpha[i_n]] += f
        return g

    def evaluate(x):
        pcur = {n: dict(pstar.get(n, {})) for n in players}
        for (n, i), xi in zip(coords, x):
            if xi == 0:
                continue
            for ia, a in enumerate(acts[n]):
                delta = xi * tangents[n][i][ia]
                if delta != 0:
                    pcur[n][a] = pcur[n].get(a, ZERO) + delta
        out = []
        for (n, i), xi in zip(coords, x):
            g = gradient(n, pcur)
            gvec = [g[a] for a in acts[n]]
            proj = [sum((v[ia] * gvec[ia] for ia in range(len(acts[n]))),
                        ZERO) for v in tangents[n]]
            lifted = [sum((grams[n][r][k] * proj[k]
                           for k in range(len(proj))), ZERO)
                      for r in range(len(proj))]
            out.append(xi + lifted[i])
        return out

    h = Fraction(1, 10 ** 6)
    centre = evaluate([ZERO] * d)
    scale = 1.0 + max(abs(float(jac[i][j]))
                      for i in range(d) for j in range(d))
    for j in range(d):
        xp = [ZERO] * d
        xm = [ZERO] * d
        xp[j] = h
        xm[j] = -h
        fp = evaluate(xp)
        fm = evaluate(xm)
        for i in range(d):
            central = (fp[i] - fm[i]) / (2 * h)
            forward = (fp[i] - centre[i]) / h
            if abs(float(central - jac[i][j])) > fd_tol * scale:
                raise NonRegularError(
                    "finite-difference check failed in enabling coordinates "
                    f"at entry ({i}, {j})")
            if abs(float(forward - central)) > 10 * fd_tol * scale:
                raise NonRegularError(
                    f"forward and central differences disagree at ({i}, {j})")
    cond = float(np.linalg.cond(
        np.array([[float(v) for v in row] for row in M])))
    if not np.isfinite(cond) or cond > cond_cap:
        raise NonRegularError(
            f"Jacobian condition number {cond:.3g} exceeds {cond_cap:g}")
    return 1 if det > 0 else -1


def index_via_enabling(g, comp: EquilibriumComponent, trials: int = 5,
                       rho: Fraction = Fraction(1, 10000), seed: int = 0,
                       others: Optional[Sequence[EquilibriumComponent]] = None,
                       eps: Fraction = Fraction(1, 100),
                       retry_budget: int = 4,
                       support_cap: int = 2000) -> ComponentIndex:
    """The component index recomputed in enabling coordinates.

    The game's payoff function is rewritten as a multilinear form over
    last-action probabilities; behavioral floors of size ``eps`` keep every
    information set reached, so each trial's random perturbation of the
    form's coefficients leaves only isolated fixed points near the
    component.  Each fixed point's sign comes from an exact Jacobian on the
    minimal face of the floored polytope, and the trial values must agree,
    exactly as in :func:`component_index` - with which the result must
    agree wherever both certify.

    Fixed points are matched to the component through the eps-floored
    images of its witnesses; the assignment radius therefore never drops
    below a few multiples of ``eps``, since flooring moves every profile an
    eps-sized step into the polytope.  Games whose floored strategy space
    would need more than ``support_cap`` support combinations per trial are
    reported undetermined up front rather than ground through.
    """
    game = g.game if isinstance(g, NormalForm) else g
    if game is None:
        raise ValueError("enabling-route index needs a game tree")
    eps = Fraction(eps)
    nf = g if isinstance(g, NormalForm) else to_normal_form(g)
    if others is None:
        others = _sibling_components(g, nf, comp)
    keys = {n: _full_strategy_keys(game, n) for n in game.players}
    count = 1
    for n in game.players:
        count *= 2 ** len(keys[n]) - 1
    if count > support_cap:
        return ComponentIndex(
            value=None, method="regular-sum-perturbation", trials=0,
            agreement=0.0,
            ledger=[{"note": f"floored strategy space needs {count} support "
                             f"combinations per trial, above the cap of "
                             f"{support_cap}"}])
    qvecs = {n: {k: _floored_enabling(game, n, k, eps) for k in keys[n]}
             for n in game.players}
    K = _signature_coefficients(game)
    rho_abs = Fraction(rho) * _payoff_spread(nf)

    def floored_image(witness):
        dists = _clean_dists(witness.dists)
        out = {}
        for n in game.players:
            acc = {}
            for s, w in dists[n].items():
                for a, q in _floored_enabling(game, n, s, eps).items():
                    acc[a] = acc.get(a, ZERO) + w * q
            out[n] = acc
        return out

    anchors = [floored_image(w) for w in comp.witnesses]
    radius = None
    best = None
    for other in others or []:
        if other is comp:
            continue
        for w2 in other.witnesses:
            img = floored_image(w2)
            for a in anchors:
                dist = _enabling_distance(a, img, game.players)
                if best is None or dist < best:
                    best = dist
    if best is not None:
        radius = max(best / 2, Fraction(1, 1000), 3 * eps)

    rng = random.Random(seed)
    values: List[Optional[int]] = []
    ledger: List[dict] = []
    for trial in range(trials):
        entry = {"trial": trial, "attempts": 0, "failures": []}
        for _ in range(retry_budget):
            entry["attempts"] += 1
            Kt = _perturb_coefficients(K, rho_abs, rng)
            fnf = _floored_normal_form(game, keys, qvecs, Kt,
                                       game.name + "+floored")
            res = enumerate_equilibria(fnf, seed=rng.randrange(2 ** 30))
            outcome = _enabling_trial_value(game, keys, qvecs, Kt, res,
                                            anchors, radius)
            if isinstance(outcome, str):
                entry["failures"].append(outcome)
                continue
            entry["value"], entry["points"] = outcome
            break
        else:
            raise NonRegularError(
                f"trial {trial}: no regular perturbation after "
                f"{retry_budget} draws ({'; '.join(entry['failures'])})")
        values.append(entry["value"])
        ledger.append(entry)
    agree = len(set(values)) == 1
    return ComponentIndex(
        value=values[0] if agree else None,
        method="regular-sum-perturbation",
        trials=trials,
        agreement=1.0 if agree else
        max(values.count(v) for v in set(values)) / trials,
        ledger=ledger)


def _enabling_trial_value(game, keys, qvecs, Kt, res, anchors, radius):
    if res.skipped:
        reasons = sorted({rec["reason"] for rec in res.skipped})
        return "unresolved supports: " + ", ".join(reasons)
    # distinct mixed points can share an enabling image (mixing weight can
    # move between pure strategies without changing any last-action
    # probability), so a mixed continuum is fine as long as it maps to one
    # image; fixed points are deduplicated by image
    by_family: Dict[str, list] = {}
    points = []
    for eq in res.equilibria:
        p = {n: _enabling_point(qvecs, n, eq.dists[n]) for n in game.players}
        if eq.family is not None:
            fam = res.families.get(eq.family)
            if fam is None or fam.dimension < 0:
                # partially sampled set: its witnesses do not span it, so
                # image constancy below could not be trusted
                return "perturbation left a set the solver only sampled"
            by_family.setdefault(eq.family, []).append(p)
        points.append(p)
    for fam, imgs in by_family.items():
        # the image map is affine, so equality on all emitted vertices of a
        # product family pins it on the whole set
        base = imgs[0]
        for other in imgs[1:]:
            if _enabling_distance(base, other, game.players) != 0:
                return "perturbation left a continuum of enabling images"
    seen = set()
    signs = []
    for p in points:
        if radius is not None and min(
                _enabling_distance(p, a, game.players)
                for a in anchors) > radius:
            continue
        key = tuple((n, a, p[n][a]) for n in game.players
                    for a in sorted(p[n]))
        if key in seen:
            continue
        seen.add(key)
        try:
            signs.append(_enabling_index_at(game, keys, qvecs, Kt, p))
        except NonRegularError as exc:
            return f"non-regular enabling point ({exc})"
    return sum(signs), len(signs)


# ---------------------------------------------------------------------------
# outcome decomposition


@dataclass
class OutcomeDecomposition:
    """A component's information sets split by how its outcome treats them.

    ``h_plus`` holds the sets reached with positive probability; the play
    there is ``b_star_plus``, shared exactly by every witness, with
    ``a_plus``/``a_zero`` the used and unused actions.  ``h_zero`` holds
    the sets a player could only reach by deviating personally at a reached
    set; ``h_one`` the sets kept closed purely by opponents.  ``deterrence``
    evaluates, for each unused action, the best payoff gain any strategy
    enabling it can get against the witnesses - never positive, or the
    witnesses would not be equilibria.
    """

    h_plus: Dict[str, tuple]
    h_zero: Dict[str, tuple]
    h_one: Dict[str, tuple]
    a_plus: Dict[str, tuple]
    a_zero: Dict[str, tuple]
    b_star_plus: Dict[str, Dict[str, Fraction]]
    v_star: tuple
    deterrence: Dict[str, Fraction]

    def as_json(self):
        return {
            "reached_sets": {n: list(v) for n, v in sorted(self.h_plus.items())},
            "own_deviation_sets": {n: list(v)
                                   for n, v in sorted(self.h_zero.items())},
            "opponent_closed_sets": {n: list(v)
                                     for n, v in sorted(self.h_one.items())},
            "used_actions": {n: list(v) for n, v in sorted(self.a_plus.items())},
            "unused_actions": {n: list(v)
                               for n, v in sorted(self.a_zero.items())},
            "onpath_play": {h: {a: format_rational(w)
                                for a, w in sorted(d.items())}
                            for h, d in sorted(self.b_star_plus.items())},
            "payoff": [format_rational(u) for u in self.v_star],
            "deterrence_margins": {a: format_rational(m)
                                   for a, m in sorted(self.deterrence.items())},
        }


def _compat_mass(dist, seq) -> Fraction:
    total = ZERO
    for s, w in dist.items():
        if w == 0:
            continue
        table = dict(s)
        if all(table.get(hh) == aa for hh, aa in seq):
            total += w
    return total


def decompose_outcome(g, comp: EquilibriumComponent,
                      tau_out: float = 1e-6) -> OutcomeDecomposition:
    """Split the game's information sets by the component's outcome.

    All witnesses must agree on which sets are reached and, exactly for
    exact witnesses (within ``tau_out`` when numeric ones are involved), on
    the play there; otherwise the outcome structure is ambiguous and
    :class:`DecompositionError` reports the disagreement.
    """
    game = g.game if isinstance(g, NormalForm) else g
    if game is None:
        raise ValueError("outcome decomposition needs a game tree")
    nf = g if isinstance(g, NormalForm) else to_normal_form(g)
    witnesses = [_clean_dists(w.dists) for w in comp.witnesses]
    if not witnesses:
        raise ValueError("component has no witnesses")
    all_exact = all(w.exact for w in comp.witnesses)

    def reached_sets(dists):
        out = set()
        for hid, h in game.infosets.items():
            for nid in h.nodes:
                _, p0, hist = game._node_context[nid]
                mass = p0
                for m in game.players:
                    mass *= _compat_mass(dists[m], hist[m])
                    if mass == 0:
                        break
                if mass > 0:
                    out.add(hid)
                    break
        return out

    h_plus_set = reached_sets(witnesses[0])
    for i, w in enumerate(witnesses[1:], start=1):
        other = reached_sets(w)
        if other != h_plus_set:
            gap = sorted(h_plus_set.symmetric_difference(other))
            raise DecompositionError(
                f"witnesses 0 and {i} disagree on reached sets: {gap}")

    b_star: Dict[str, Dict[str, Fraction]] = {}
    for hid in sorted(h_plus_set):
        h = game.infosets[hid]
        hist = list(game.own_history(hid))
        locals_ = []
        for dists in witnesses:
            denom = _compat_mass(dists[h.player], hist)
            if denom == 0:
                raise DecompositionError(
                    f"reached set {hid} gets no mass from its own player")
            locals_.append({a: _compat_mass(dists[h.player],
                                            hist + [(hid, a)]) / denom
                            for a in h.actions})
        base = locals_[0]
        for i, local in enumerate(locals_[1:], start=1):
            for a in h.actions:
                gap = local[a] - base[a]
                if (gap != 0) if all_exact else (abs(float(gap)) > tau_out):
                    raise DecompositionError(
                        f"witnesses 0 and {i} disagree on the play at {hid} "
                        f"(action {a}: {base[a]} vs {local[a]})")
        b_star[hid] = base

    h_plus = {n: tuple(hid for hid in sorted(h_plus_set)
                       if game.infosets[hid].player == n)
              for n in game.players}
    a_plus = {n: tuple(sorted(a for hid in h_plus[n]
                              for a, w in b_star[hid].items() if w > 0))
              for n in game.players}
    a_zero = {n: tuple(sorted(a for hid in h_plus[n]
                              for a, w in b_star[hid].items() if w == 0))
              for n in game.players}

    h_zero: Dict[str, list] = {n: [] for n in game.players}
    h_one: Dict[str, list] = {n: [] for n in game.players}
    zero_actions = {n: set(a_zero[n]) for n in game.players}
    for n in game.players:
        for hid in game.player_infosets[n]:
            if hid in h_plus_set:
                continue
            pairs = game.own_history(hid)
            follows_own_deviation = any(
                hh in h_plus_set and aa in zero_actions[n]
                for hh, aa in pairs)
            (h_zero if follows_own_deviation else h_one)[n].append(hid)

    deterrence: Dict[str, Fraction] = {}
    for n in game.players:
        if not a_zero[n]:
            continue
        vn = comp.payoff[nf._index[n]]
        for dists in witnesses:
            dev = nf.deviation_payoffs(n, dists)
            for a0 in a_zero[n]:
                gain = max(dev[s] - vn for s in nf.strategies[n]
                           if game.strategy_enables(n, s, a0))
                if a0 not in deterrence or gain > deterrence[a0]:
                    deterrence[a0] = gain

    return OutcomeDecomposition(
        h_plus=h_plus,
        h_zero={n: tuple(v) for n, v in h_zero.items()},
        h_one={n: tuple(v) for n, v in h_one.items()},
        a_plus=a_plus,
        a_zero=a_zero,
        b_star_plus=b_star,
        v_star=tuple(comp.payoff),
        deterrence=deterrence)


def prune_to_outcome(game: GameTree,
                     decomp: OutcomeDecomposition) -> GameTree:
    """The game cut down to the outcome's reached part.

    Decision nodes at reached sets keep only the actions played with
    positive probability; subtrees that become unreachable are dropped.
    Chance moves are kept whole, so a zero-probability chance branch is
    rejected rather than silently renormalized.
    """
    allowed = {hid: {a for a, w in decomp.b_star_plus[hid].items() if w > 0}
               for hids in decomp.h_plus.values() for hid in hids}
    keep: Dict[str, object] = {}

    def walk(nid):
        node = game.nodes[nid]
        if isinstance(node, TerminalNode):
            keep[nid] = node
            return
        if isinstance(node, ChanceNode):
            for child, prob in node.children:
                if prob == 0:
                    raise DecompositionError(
                        f"chance branch to {child} has probability 0 and "
                        "would dangle after pruning")
                walk(child)
            keep[nid] = node
            return
        hid = node.infoset
        if hid not in allowed:
            raise DecompositionError(
                f"node {nid} at unreached set {hid} survives the outcome, "
                "which contradicts the decomposition")
        kids = tuple((a, c) for a, c in node.children if a in allowed[hid])
        for _, child in kids:
            walk(child)
        keep[nid] = DecisionNode(nid, node.player, hid, kids)

    walk(game.root)
    infosets = {}
    for hid, acts in allowed.items():
        h = game.infosets[hid]
        nodes = tuple(nid for nid in h.nodes if nid in keep)
        infosets[hid] = InfoSet(hid, h.player, nodes,
                                tuple(a for a in h.actions if a in acts))
    return GameTree(game.name + "+outcome", game.players, keep, infosets,
                    game.root)


@dataclass
class ProductIdentityReport:
    """Component index factored through the on-path play.

    ``onpath_index`` is the Jacobian sign of the outcome's behavioral play
    inside the pruned game, always +1 or -1; multiplying it back against
    ``offpath_index`` recovers ``component_index``.
    """

    component_index: Optional[int]
    onpath_index: int
    offpath_index: Optional[int]
    consistent: Optional[bool]

    def as_json(self):
        return {
            "component_index": self.component_index,
            "onpath_index": self.onpath_index,
            "offpath_index": self.offpath_index,
            "consistent": self.consistent,
        }


def product_identity_check(g, comp: EquilibriumComponent, index=None,
                           others: Optional[Sequence] = None,
                           trials: int = 5,
                           rho: Fraction = Fraction(1, 10000),
                           seed: int = 0) -> ProductIdentityReport:
    """Factor the component's index as on-path sign times off-path part.

    The outcome's play, viewed inside the pruned game, is an isolated
    regular equilibrium whose Jacobian sign is +1 or -1; dividing it out of
    the component index leaves the contribution of the off-path deterrence
    structure.  ``index`` accepts a precomputed :class:`ComponentIndex` (or
    a plain int) to avoid re-running the perturbation trials; a pruned-game
    equilibrium that fails the regularity checks raises
    :class:`NonRegularError` rather than guessing.
    """
    game = g.game if isinstance(g, NormalForm) else g
    if game is None:
        raise ValueError("product identity check needs a game tree")
    decomp = decompose_outcome(g, comp)
    pruned = prune_to_outcome(game, decomp)
    pruned_nf = to_normal_form(pruned)
    tables = {hid: {a: decomp.b_star_plus[hid][a]
                    for a in pruned.infosets[hid].actions}
              for hid in pruned.infosets}
    sigma = behavioral_to_mixed(pruned, BehavioralProfile(pruned, tables))
    onpath = regular_equilibrium_index(pruned_nf, sigma.dists)
    if index is None:
        index = component_index(g, comp, trials=trials, rho=rho, seed=seed,
                                others=others)
    value = index.value if isinstance(index, ComponentIndex) else index
    offpath = None if value is None else value * onpath
    return ProductIdentityReport(
        component_index=value,
        onpath_index=onpath,
        offpath_index=offpath,
        consistent=None if value is None else (value == onpath * offpath))
