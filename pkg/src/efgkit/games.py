"""Finite extensive-form games with perfect recall.

The model is deliberately small: a game is a tree of decision, chance and
terminal nodes.  Decision nodes are grouped into information sets; every
action label is globally unique, so a label identifies both the information
set that owns it and the edge it selects.  Payoffs and chance probabilities
are exact rationals (fractions.Fraction); floats never enter the model and
are only derived downstream.

Conventions used throughout the package:

* players are indexed by position in ``GameTree.players``; payoff vectors
  follow that order;
* a *last action* of player n is an action that is the last one n takes on
  some root-to-terminal path (the same action can be last on one path and
  non-last on another; it still counts);
* for a terminal z, ``a_n(z)`` is n's last action on the path to z, or None
  when n never acts on that path.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence


class GameFormatError(ValueError):
    """Raised when a game file or game description is malformed."""


class ValidationError(ValueError):
    """Raised when a structurally well-formed game violates an invariant."""

    def __init__(self, message: str, witnesses: Sequence[str] = ()):
        super().__init__(message)
        self.witnesses = tuple(witnesses)


def rational(value) -> Fraction:
    """Parse an exact rational from int, Fraction, 'p/q' or a decimal string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise GameFormatError(f"refusing float payoff {value!r}; write it as p/q")
    text = str(value).strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise GameFormatError(f"not a rational: {value!r}") from exc


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class DecisionNode:
    node_id: str
    player: str
    infoset: str
    children: tuple  # ((action, child_id), ...) in declared action order

    def child(self, action: str) -> str:
        for a, c in self.children:
            if a == action:
                return c
        raise KeyError(action)


@dataclass(frozen=True)
class ChanceNode:
    node_id: str
    children: tuple  # ((child_id, Fraction probability), ...)


@dataclass(frozen=True)
class TerminalNode:
    node_id: str
    payoffs: tuple  # Fraction per player


@dataclass(frozen=True)
class InfoSet:
    infoset_id: str
    player: str
    nodes: tuple
    actions: tuple


class GameTree:
    """Immutable extensive-form game.

    Construction runs the cheap structural checks (tree shape, label
    uniqueness, probability sums); perfect recall is checked separately by
    :func:`validate_perfect_recall` so that callers can inspect violations.
    """

    def __init__(self, name: str, players: Sequence[str], nodes: Mapping[str, object],
                 infosets: Mapping[str, InfoSet], root: str):
        self.name = name
        self.players = tuple(players)
        self.nodes = dict(nodes)
        self.infosets = dict(infosets)
        self.root = root
        self._check_structure()
        self._index()

    # -- structural checks -------------------------------------------------

    def _check_structure(self):
        if len(set(self.players)) != len(self.players):
            raise GameFormatError("duplicate player ids")
        seen_children = {}
        for node in self.nodes.values():
            if isinstance(node, (DecisionNode, ChanceNode)):
                pairs = node.children
                kids = [c for _, c in pairs] if isinstance(node, DecisionNode) else [c for c, _ in pairs]
                for child in kids:
                    if child not in self.nodes:
                        raise GameFormatError(f"node {node.node_id} references unknown child {child}")
                    if child in seen_children:
                        raise GameFormatError(f"node {child} has two parents")
                    seen_children[child] = node.node_id
        if self.root in seen_children:
            raise GameFormatError("root has a parent")
        # reachability and acyclicity in one sweep
        stack, seen = [self.root], set()
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise GameFormatError(f"cycle through {nid}")
            seen.add(nid)
            node = self.nodes[nid]
            if isinstance(node, DecisionNode):
                stack.extend(c for _, c in node.children)
            elif isinstance(node, ChanceNode):
                stack.extend(c for c, _ in node.children)
        unreachable = set(self.nodes) - seen
        if unreachable:
            raise GameFormatError(f"unreachable nodes: {sorted(unreachable)}")
        for node in self.nodes.values():
            if isinstance(node, ChanceNode):
                total = sum((p for _, p in node.children), Fraction(0))
                if total != 1:
                    raise GameFormatError(f"chance node {node.node_id} probabilities sum to {total}")
                if any(p < 0 for _, p in node.children):
                    raise GameFormatError(f"chance node {node.node_id} has a negative probability")
            elif isinstance(node, TerminalNode):
                if len(node.payoffs) != len(self.players):
                    raise GameFormatError(
                        f"terminal {node.node_id} has {len(node.payoffs)} payoffs for {len(self.players)} players")
        action_owner = {}
        for h in self.infosets.values():
            if h.player not in self.players:
                raise GameFormatError(f"infoset {h.infoset_id} owned by unknown player {h.player}")
            for a in h.actions:
                if a in action_owner:
                    raise GameFormatError(f"action label {a} appears at two information sets")
                action_owner[a] = h.infoset_id
            for nid in h.nodes:
                node = self.nodes.get(nid)
                if not isinstance(node, DecisionNode):
                    raise GameFormatError(f"infoset {h.infoset_id} lists non-decision node {nid}")
                if node.infoset != h.infoset_id or node.player != h.player:
                    raise GameFormatError(f"node {nid} disagrees with infoset {h.infoset_id}")
                if tuple(a for a, _ in node.children) != h.actions:
                    raise GameFormatError(f"node {nid} action labels differ from infoset {h.infoset_id}")
        for node in self.nodes.values():
            if isinstance(node, DecisionNode) and node.infoset not in self.infosets:
                raise GameFormatError(f"node {node.node_id} references unknown infoset {node.infoset}")
        self.action_owner = action_owner

    # -- derived indexes ----------------------------------------------------

    def _index(self):
        self.terminals = tuple(sorted(
            n.node_id for n in self.nodes.values() if isinstance(n, TerminalNode)))
        self.player_infosets = {p: tuple(h.infoset_id for h in sorted(
            self.infosets.values(), key=lambda h: h.infoset_id) if h.player == p)
            for p in self.players}
        # paths: terminal -> (node ids root..z, chance probability,
        #                     per-player list of (infoset, action) pairs)
        self._paths = {}
        self._node_context = {}

        def walk(nid, path, p0, hist):
            self._node_context[nid] = (tuple(path), p0, {p: tuple(hist[p]) for p in self.players})
            node = self.nodes[nid]
            if isinstance(node, TerminalNode):
                self._paths[nid] = (tuple(path) + (nid,), p0, {p: tuple(hist[p]) for p in self.players})
                return
            if isinstance(node, ChanceNode):
                for child, prob in node.children:
                    walk(child, path + [nid], p0 * prob, hist)
                return
            for action, child in node.children:
                hist[node.player].append((node.infoset, action))
                walk(child, path + [nid], p0, hist)
                hist[node.player].pop()

        walk(self.root, [], Fraction(1), {p: [] for p in self.players})
        # last actions per player, and a_n(z)
        self.last_action = {}  # (player, terminal) -> action or None
        last = {p: [] for p in self.players}
        for z in self.terminals:
            _, _, hist = self._paths[z]
            for p in self.players:
                act = hist[p][-1][1] if hist[p] else None
                self.last_action[(p, z)] = act
                if act is not None and act not in last[p]:
                    last[p].append(act)
        self.last_actions = {p: tuple(sorted(last[p])) for p in self.players}

    # -- queries -------------------------------------------------------------

    def infoset_of_action(self, action: str) -> InfoSet:
        return self.infosets[self.action_owner[action]]

    def own_history(self, infoset_id: str):
        """The (infoset, action) pairs of the owner on the way to the set.

        Under perfect recall this sequence is shared by every node of the
        set; the first node is used, so run validate_perfect_recall before
        trusting the answer on unvalidated input.
        """
        h = self.infosets[infoset_id]
        first = h.nodes[0]
        _, _, hist = self._node_context[first]
        return hist[h.player]

    def path_to_terminal(self, z: str):
        return self._paths[z]

    def chance_probability(self, z: str) -> Fraction:
        return self._paths[z][1]

    def payoff_vector(self, z: str):
        return self.nodes[z].payoffs

    def terminals_through(self, node_id: str):
        return tuple(z for z in self.terminals if node_id in self._paths[z][0])

    def terminals_after_infoset(self, infoset_id: str):
        nodes = set(self.infosets[infoset_id].nodes)
        out = []
        for z in self.terminals:
            if nodes.intersection(self._paths[z][0]):
                out.append(z)
        return tuple(out)

    # -- pure strategies ------------------------------------------------------

    def full_strategies(self, player: str):
        sets = self.player_infosets[player]
        if not sets:
            return ({},)
        choices = [self.infosets[h].actions for h in sets]
        return tuple(dict(zip(sets, combo)) for combo in itertools.product(*choices))

    def own_reachable_sets(self, player: str, strategy: Mapping[str, str]):
        out = []
        for h in self.player_infosets[player]:
            hist = self.own_history(h)
            if all(strategy.get(hh) == aa for hh, aa in hist):
                out.append(h)
        return tuple(out)

    def reduce_strategy(self, player: str, strategy: Mapping[str, str]):
        reach = self.own_reachable_sets(player, strategy)
        return tuple((h, strategy[h]) for h in reach)

    def reduced_strategies(self, player: str):
        seen = {}
        for s in self.full_strategies(player):
            r = self.reduce_strategy(player, s)
            if r not in seen:
                seen[r] = s
        return tuple(sorted(seen, key=lambda r: tuple(a for _, a in r)))

    def reduced_label(self, reduced) -> str:
        if not reduced:
            return "(idle)"
        return ".".join(a for _, a in reduced)

    def strategy_enables(self, player: str, reduced, action: str) -> bool:
        """True when the (reduced) strategy takes every own action leading
        up to and including the given action."""
        h = self.action_owner[action]
        need = list(self.own_history(h)) + [(h, action)]
        table = dict(reduced)
        return all(table.get(hh) == aa for hh, aa in need)

    def __repr__(self):
        return (f"GameTree({self.name!r}, players={len(self.players)}, "
                f"nodes={len(self.nodes)}, terminals={len(self.terminals)})")


class OutcomeDistribution:
    """Probability distribution over terminal nodes, exact."""

    def __init__(self, masses: Mapping[str, Fraction]):
        self.masses = {z: Fraction(m) for z, m in masses.items() if m != 0}
        total = sum(self.masses.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"outcome masses sum to {total}")

    def support(self):
        return tuple(sorted(self.masses))

    def payoff(self, game: GameTree):
        n = len(game.players)
        out = [Fraction(0)] * n
        for z, m in self.masses.items():
            for i, u in enumerate(game.payoff_vector(z)):
                out[i] += m * u
        return tuple(out)

    def tv_distance(self, other: "OutcomeDistribution") -> Fraction:
        keys = set(self.masses) | set(other.masses)
        diff = sum((abs(self.masses.get(z, Fraction(0)) - other.masses.get(z, Fraction(0)))
                    for z in keys), Fraction(0))
        return diff / 2

    def as_json(self):
        return {z: format_rational(m) for z, m in sorted(self.masses.items())}

    def __eq__(self, other):
        return isinstance(other, OutcomeDistribution) and self.masses == other.masses

    def __repr__(self):
        inner = ", ".join(f"{z}: {format_rational(m)}" for z, m in sorted(self.masses.items()))
        return "OutcomeDistribution({" + inner + "})"


def validate_perfect_recall(game: GameTree):
    """Check perfect recall; returns a list of violations (empty when fine).

    Each violation is a ValidationError carrying the offending information
    set and the pair of nodes whose own histories disagree.
    """
    problems = []
    for h in game.infosets.values():
        histories = {}
        for nid in h.nodes:
            hist = game._node_context[nid][2][h.player]
            histories.setdefault(hist, nid)
        if len(histories) > 1:
            pair = sorted(histories.values())[:2]
            problems.append(ValidationError(
                f"information set {h.infoset_id}: nodes {pair[0]} and {pair[1]} "
                f"reach it with different own histories", witnesses=[h.infoset_id] + pair))
    return problems


def outcome_of(game: GameTree, profile) -> OutcomeDistribution:
    """Outcome distribution induced by a profile.

    Accepts a behavioral profile (mapping infoset -> action -> Fraction),
    a pure profile (mapping player -> strategy mapping), or the profile
    objects from efgkit.strategies, which are converted first.
    """
    from . import strategies as _s  # local import; strategies depends on games

    if isinstance(profile, _s.MixedProfile):
        return _s.outcome_of_mixed(game, profile)
    if isinstance(profile, _s.EnablingProfile):
        return _s.outcome_of_enabling(game, profile)
    if isinstance(profile, _s.BehavioralProfile):
        behavior = profile.tables
    elif profile and all(k in game.infosets for k in profile):
        behavior = profile
    else:
        # pure profile keyed by player
        behavior = {}
        for p, strat in profile.items():
            table = dict(strat)
            for hid in game.player_infosets[p]:
                if hid in table:
                    behavior[hid] = {table[hid]: Fraction(1)}
                else:
                    acts = game.infosets[hid].actions
                    behavior[hid] = {a: Fraction(1, len(acts)) for a in acts}
    masses = {}

    def sweep(nid, mass):
        if mass == 0:
            return
        node = game.nodes[nid]
        if isinstance(node, TerminalNode):
            masses[nid] = masses.get(nid, Fraction(0)) + mass
            return
        if isinstance(node, ChanceNode):
            for child, prob in node.children:
                sweep(child, mass * prob)
            return
        table = behavior.get(node.infoset)
        if table is None:
            acts = game.infosets[node.infoset].actions
            table = {a: Fraction(1, len(acts)) for a in acts}
        for action, child in node.children:
            sweep(child, mass * table.get(action, Fraction(0)))

    sweep(game.root, Fraction(1))
    return OutcomeDistribution(masses)


# ---------------------------------------------------------------------------
# text format


_TOKEN = re.compile(r"\s+")


def parse_game(text: str, name: str = "game") -> GameTree:
    """Parse the line-oriented game format.

    Statements, one per line, ``#`` starts a comment:

    * ``player <id>``
    * ``chance <node> { <child>:<p/q> ... }``
    * ``node <node> { <action>:<child> ... }``   (decision-node edges)
    * ``infoset <player> <id> { <nodes...> } actions { <labels...> }``
    * ``terminal <node> payoffs ( r1, r2, ... )``

    The root is the unique node that is not any node's child.
    """
    players = []
    chance = {}
    edges = {}
    infosets_raw = []
    terminals = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            head, rest = (line.split(None, 1) + [""])[:2]
            if head == "player":
                players.append(rest.strip())
            elif head == "chance":
                node_id, body = rest.split("{", 1)
                body = body.rsplit("}", 1)[0]
                pairs = []
                for item in _TOKEN.split(body.strip()):
                    if not item:
                        continue
                    child, prob = item.rsplit(":", 1)
                    pairs.append((child, rational(prob)))
                chance[node_id.strip()] = tuple(pairs)
            elif head == "node":
                node_id, body = rest.split("{", 1)
                body = body.rsplit("}", 1)[0]
                pairs = []
                for item in _TOKEN.split(body.strip()):
                    if not item:
                        continue
                    action, child = item.split(":", 1)
                    pairs.append((action, child))
                edges[node_id.strip()] = tuple(pairs)
            elif head == "infoset":
                m = re.match(r"(\S+)\s+(\S+)\s*\{(.*?)\}\s*actions\s*\{(.*?)\}\s*$", rest)
                if not m:
                    raise GameFormatError("bad infoset statement")
                player, hid, nodes_part, actions_part = m.groups()
                infosets_raw.append((player, hid,
                                     tuple(_TOKEN.split(nodes_part.strip())),
                                     tuple(_TOKEN.split(actions_part.strip()))))
            elif head == "terminal":
                m = re.match(r"(\S+)\s+payoffs\s*\((.*?)\)\s*$", rest)
                if not m:
                    raise GameFormatError("bad terminal statement")
                node_id, payoff_part = m.groups()
                payoffs = tuple(rational(x.strip()) for x in payoff_part.split(","))
                terminals[node_id.strip()] = payoffs
            else:
                raise GameFormatError(f"unknown statement {head!r}")
        except GameFormatError as exc:
            raise GameFormatError(f"line {lineno}: {exc}") from None
        except Exception as exc:
            raise GameFormatError(f"line {lineno}: {exc}") from None

    nodes = {}
    infosets = {}
    node_infoset = {}
    for player, hid, node_ids, actions in infosets_raw:
        infosets[hid] = InfoSet(hid, player, node_ids, actions)
        for nid in node_ids:
            node_infoset[nid] = (player, hid, actions)
    for nid, pairs in edges.items():
        if nid not in node_infoset:
            raise GameFormatError(f"decision node {nid} appears in no infoset")
        player, hid, actions = node_infoset[nid]
        if tuple(a for a, _ in pairs) != tuple(actions):
            raise GameFormatError(f"node {nid} edges disagree with infoset {hid} actions")
        nodes[nid] = DecisionNode(nid, player, hid, pairs)
    for nid in node_infoset:
        if nid not in nodes:
            raise GameFormatError(f"infoset node {nid} has no node statement")
    for nid, pairs in chance.items():
        nodes[nid] = ChanceNode(nid, pairs)
    for nid, payoffs in terminals.items():
        nodes[nid] = TerminalNode(nid, payoffs)

    children = set()
    for node in nodes.values():
        if isinstance(node, DecisionNode):
            children.update(c for _, c in node.children)
        elif isinstance(node, ChanceNode):
            children.update(c for c, _ in node.children)
    roots = [nid for nid in nodes if nid not in children]
    if len(roots) != 1:
        raise GameFormatError(f"expected one root, found {sorted(roots)}")
    return GameTree(name, players, nodes, infosets, roots[0])


def serialize_game(game: GameTree) -> str:
    """Canonical text form: statements sorted by identifier; reparsing gives
    an identical tree."""
    lines = [f"player {p}" for p in game.players]
    for hid in sorted(game.infosets):
        h = game.infosets[hid]
        lines.append("infoset %s %s { %s } actions { %s }" % (
            h.player, hid, " ".join(h.nodes), " ".join(h.actions)))
    for nid in sorted(game.nodes):
        node = game.nodes[nid]
        if isinstance(node, DecisionNode):
            body = " ".join(f"{a}:{c}" for a, c in node.children)
            lines.append(f"node {nid} {{ {body} }}")
        elif isinstance(node, ChanceNode):
            body = " ".join(f"{c}:{format_rational(p)}" for c, p in node.children)
            lines.append(f"chance {nid} {{ {body} }}")
        else:
            body = ", ".join(format_rational(u) for u in node.payoffs)
            lines.append(f"terminal {nid} payoffs ( {body} )")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# builders


class _Builder:
    """Tiny helper for declaring trees in code."""

    def __init__(self, name, players):
        self.name = name
        self.players = list(players)
        self.nodes = {}
        self.infosets = {}
        self._pending = {}  # infoset -> [(node, ((action, child), ...))]

    def decision(self, node_id, player, infoset, children):
        self._pending.setdefault((player, infoset), []).append((node_id, tuple(children)))
        return node_id

    def chance(self, node_id, children):
        self.nodes[node_id] = ChanceNode(node_id, tuple((c, rational(p)) for c, p in children))
        return node_id

    def terminal(self, node_id, payoffs):
        self.nodes[node_id] = TerminalNode(node_id, tuple(rational(u) for u in payoffs))
        return node_id

    def build(self, root) -> GameTree:
        for (player, hid), entries in self._pending.items():
            actions = tuple(a for a, _ in entries[0][1])
            self.infosets[hid] = InfoSet(hid, player, tuple(n for n, _ in entries), actions)
            for node_id, children in entries:
                self.nodes[node_id] = DecisionNode(node_id, player, hid, children)
        return GameTree(self.name, self.players, self.nodes, self.infosets, root)


def one_shot_game(name, players, actions_per_player, payoff_fn) -> GameTree:
    """Simultaneous-move game as a tree: player 1 moves first, later players
    cannot distinguish earlier choices.  payoff_fn maps an action tuple to a
    payoff vector."""
    b = _Builder(name, players)
    combos = list(itertools.product(*actions_per_player))

    # nodes are identified by the prefix of actions taken so far
    def node_name(prefix):
        return "n_" + "_".join(prefix) if prefix else "n_root"

    prefixes = set()
    for combo in combos:
        for k in range(len(players)):
            prefixes.add(combo[:k])
    for prefix in sorted(prefixes, key=lambda t: (len(t), t)):
        k = len(prefix)
        player = players[k]
        hid = f"h_{player}"
        children = []
        for a in actions_per_player[k]:
            nxt = prefix + (a,)
            child = node_name(nxt) if k + 1 < len(players) else "z_" + "_".join(nxt)
            children.append((a, child))
        b.decision(node_name(prefix), player, hid, children)
    for combo in combos:
        b.terminal("z_" + "_".join(combo), payoff_fn(combo))
    return b.build(node_name(()))


def _fig_entry_game(name, third_rows):
    """Shared layout of the two alternating-move opening examples: player 1
    can stop immediately, player 2 can stop next, and otherwise a
    simultaneous stage follows with rows third_rows."""
    b = _Builder(name, ["1", "2"])
    b.decision("r", "1", "h1a", [("exit", "z_exit"), ("go", "v2")])
    b.terminal("z_exit", (3, 6))
    b.decision("v2", "2", "h2a", [("up", "z_up"), ("down", "v1b")])
    b.terminal("z_up", (4, 3))
    rows = list(third_rows)
    row_actions = [f"r{i+1}" for i in range(len(rows))]
    b.decision("v1b", "1", "h1b", [(a, f"w{i+1}") for i, a in enumerate(row_actions)])
    for i, (left, right) in enumerate(rows):
        b.decision(f"w{i+1}", "2", "h2b", [("left", f"z_{i+1}L"), ("right", f"z_{i+1}R")])
        b.terminal(f"z_{i+1}L", left)
        b.terminal(f"z_{i+1}R", right)
    return b.build("r")


def build_fig1() -> GameTree:
    return _fig_entry_game("fig1", [((1, 1), (2, 4)), ((2, 2), (1, 1))])


def build_fig2() -> GameTree:
    return _fig_entry_game("fig2", [((1, 1), (2, 4)), ((2, 2), (1, 1)), ((1, 1), (3, 0))])


def build_beer_quiche() -> GameTree:
    """Three-player form of the 0.1/0.9 signaling story: the two sender
    types are separate players (weak, strong) and the receiver pools the
    nodes behind each signal."""
    b = _Builder("beer_quiche", ["weak", "strong", "receiver"])
    b.chance("c", [("vw", Fraction(1, 10)), ("vs", Fraction(9, 10))])
    b.decision("vw", "weak", "hw", [("beer_w", "bw"), ("quiche_w", "qw")])
    b.decision("vs", "strong", "hs", [("beer_s", "bs"), ("quiche_s", "qs")])
    b.decision("bw", "receiver", "hB", [("fight_b", "z_wbf"), ("retreat_b", "z_wbr")])
    b.decision("bs", "receiver", "hB", [("fight_b", "z_sbf"), ("retreat_b", "z_sbr")])
    b.decision("qw", "receiver", "hQ", [("fight_q", "z_wqf"), ("retreat_q", "z_wqr")])
    b.decision("qs", "receiver", "hQ", [("fight_q", "z_sqf"), ("retreat_q", "z_sqr")])
    b.terminal("z_wbf", (0, 0, 1))
    b.terminal("z_wbr", (2, 0, 0))
    b.terminal("z_sbf", (0, 1, 0))
    b.terminal("z_sbr", (0, 3, 1))
    b.terminal("z_wqf", (1, 0, 1))
    b.terminal("z_wqr", (3, 0, 0))
    b.terminal("z_sqf", (0, 0, 0))
    b.terminal("z_sqr", (0, 2, 1))
    return b.build("c")


def build_bq_extended(eps) -> GameTree:
    """Beer-quiche with one extra strategy for the weak sender: a hedge that
    commits to a half/half signal mixture at a small cost eps.

    At the root weak either hedges or lets the base game play out.  On the
    hedge branch only the signal mixture is realized; the other players'
    contributions are folded into the terminal payoffs (weak's entries carry
    0.1 times his conditional payoff minus eps, the strong entries carry 0.9
    times a payoff computed at the realized signal).  The folded branch keeps
    the hedge strictly dominated for weak while leaving the receiver's
    information sets shared with the base game."""
    e = rational(eps)
    if not (0 < e <= Fraction(1, 10)):
        raise GameFormatError("hedge cost must lie in (0, 1/10]")
    b = _Builder("bq_extended", ["weak", "strong", "receiver"])
    b.decision("vw1", "weak", "hw1", [("hedge_w", "mix"), ("play_w", "c")])
    # the signal mixture: receiver sees beer or quiche with equal chance
    b.chance("mix", [("mb", Fraction(1, 2)), ("mq", Fraction(1, 2))])
    b.decision("mb", "receiver", "hB", [("fight_b", "z_mbf"), ("retreat_b", "z_mbr")])
    b.decision("mq", "receiver", "hQ", [("fight_q", "z_mqf"), ("retreat_q", "z_mqr")])
    b.terminal("z_mbf", (-e, Fraction(9, 10), Fraction(1, 10)))
    b.terminal("z_mbr", (Fraction(1, 5) - e, Fraction(27, 10), Fraction(9, 10)))
    b.terminal("z_mqf", (Fraction(1, 10) - e, 0, Fraction(1, 10)))
    b.terminal("z_mqr", (Fraction(3, 10) - e, Fraction(9, 5), Fraction(9, 10)))
    # the base game, exactly as in build_beer_quiche
    b.chance("c", [("vw2", Fraction(1, 10)), ("vs", Fraction(9, 10))])
    b.decision("vw2", "weak", "hw2", [("beer_w", "bw"), ("quiche_w", "qw")])
    b.decision("vs", "strong", "hs", [("beer_s", "bs"), ("quiche_s", "qs")])
    b.decision("bw", "receiver", "hB", [("fight_b", "z_wbf"), ("retreat_b", "z_wbr")])
    b.decision("bs", "receiver", "hB", [("fight_b", "z_sbf"), ("retreat_b", "z_sbr")])
    b.decision("qw", "receiver", "hQ", [("fight_q", "z_wqf"), ("retreat_q", "z_wqr")])
    b.decision("qs", "receiver", "hQ", [("fight_q", "z_sqf"), ("retreat_q", "z_sqr")])
    b.terminal("z_wbf", (0, 0, 1))
    b.terminal("z_wbr", (2, 0, 0))
    b.terminal("z_sbf", (0, 1, 0))
    b.terminal("z_sbr", (0, 3, 1))
    b.terminal("z_wqf", (1, 0, 1))
    b.terminal("z_wqr", (3, 0, 0))
    b.terminal("z_sqf", (0, 0, 0))
    b.terminal("z_sqr", (0, 2, 1))
    return b.build("vw1")


def build_km_base() -> GameTree:
    return one_shot_game("km_base", ["1", "2"], [("top",), ("left", "right")],
                         lambda c: {("top", "left"): (3, 2), ("top", "right"): (2, 2)}[c])


def build_km_extended() -> GameTree:
    table = {("top", "left"): (3, 2), ("top", "right"): (2, 2),
             ("bottom", "left"): (1, 1), ("bottom", "right"): (1, 0)}
    return one_shot_game("km_extended", ["1", "2"],
                         [("top", "bottom"), ("left", "right")], lambda c: table[c])


def build_example44() -> GameTree:
    rows = {("a1", "b1"): (4, 2), ("a1", "b2"): (0, 0), ("a1", "b3"): (4, 1),
            ("a2", "b1"): (0, 0), ("a2", "b2"): (2, 4), ("a2", "b3"): (0, 1),
            ("a3", "b1"): (1, 2), ("a3", "b2"): (1, 0), ("a3", "b3"): (0, 0)}
    return one_shot_game("example44", ["1", "2"],
                         [("a1", "a2", "a3"), ("b1", "b2", "b3")], lambda c: rows[c])


def build_outside_option() -> GameTree:
    """Two outsiders: o1 can take a safe (2,2) or enter a 2x2 stage that o2
    answers without seeing which entry was chosen."""
    b = _Builder("outside_option", ["o1", "o2"])
    b.decision("r", "o1", "g1", [("opt_out", "z_out"), ("opt_in", "v")])
    b.terminal("z_out", (2, 2))
    b.decision("v", "o1", "g2", [("mid", "m"), ("low", "w")])
    b.decision("m", "o2", "g3", [("resp_l", "z_ml"), ("resp_r", "z_mr")])
    b.decision("w", "o2", "g3", [("resp_l", "z_wl"), ("resp_r", "z_wr")])
    b.terminal("z_ml", (3, 0))
    b.terminal("z_mr", (0, 1))
    b.terminal("z_wl", (0, 2))
    b.terminal("z_wr", (3, 0))
    return b.build("r")


def build_signaling(n_types: int) -> GameTree:
    """Pooling signaling game with each sender type a separate player.

    Uniform chance over types; signal high ends the game with the acting
    type and the responder both paid n_types; signal low hands the move to
    the responder, who names a type: the named type gets 0 from low, every
    other type gets n_types + 1 from low, and the responder gets 1 exactly
    when he names the sender."""
    n = int(n_types)
    if n < 2:
        raise GameFormatError("need at least two sender types")
    senders = [f"o{i+1}" for i in range(n)]
    b = _Builder(f"signaling_{n}", senders + ["resp"])
    b.chance("c", [(f"t{i+1}", Fraction(1, n)) for i in range(n)])
    for i in range(n):
        b.decision(f"t{i+1}", senders[i], f"hs{i+1}",
                   [(f"high_{i+1}", f"z_h{i+1}"), (f"low_{i+1}", f"v{i+1}")])
        pay = [Fraction(0)] * (n + 1)
        pay[i] = Fraction(n)
        pay[n] = Fraction(n)
        b.terminal(f"z_h{i+1}", tuple(pay))
        b.decision(f"v{i+1}", "resp", "hr",
                   [(f"name_{j+1}", f"z_l{i+1}_{j+1}") for j in range(n)])
        for j in range(n):
            pay = [Fraction(0)] * (n + 1)
            pay[i] = Fraction(0) if j == i else Fraction(n + 1)
            pay[n] = Fraction(1) if j == i else Fraction(0)
            b.terminal(f"z_l{i+1}_{j+1}", tuple(pay))
    return b.build("c")


def build_composed_bq(eps=None) -> GameTree:
    """Beer-quiche coupled to the outside-option game, and optionally the
    weak sender's hedge strategy.

    The outsiders play the outside-option game on the side.  Coupling runs
    one way only: o1's mid entry forces the strong type's signal to beer,
    o1's low entry forces the weak type's signal to beer.  With eps set, the
    weak sender also gets the two-stage hedge of build_bq_extended; playing
    the hedge skips o1's move entirely and the rest of the game treats it as
    the low entry, while the hedge's own signal mixture stands.
    """
    with_hedge = eps is not None
    e = rational(eps) if with_hedge else None
    if with_hedge and not (0 < e <= Fraction(1, 20)):
        raise GameFormatError("hedge cost must lie in (0, 1/20]")
    players = ["weak", "strong", "receiver", "o1", "o2"]
    b = _Builder("composed_bq_hedged" if with_hedge else "composed_bq", players)

    bq = {"wbf": (0, 0, 1), "wbr": (2, 0, 0), "sbf": (0, 1, 0), "sbr": (0, 3, 1),
          "wqf": (1, 0, 1), "wqr": (3, 0, 0), "sqf": (0, 0, 0), "sqr": (0, 2, 1)}
    go = {("opt_out", None): (2, 2), ("mid", "resp_l"): (3, 0), ("mid", "resp_r"): (0, 1),
          ("low", "resp_l"): (0, 2), ("low", "resp_r"): (3, 0)}

    def pay(bq_key, o1_choice, o2_choice, hedged=False):
        u = list(bq[bq_key]) + list(go[(o1_choice, o2_choice)])
        if hedged:
            u[0] = rational(u[0]) - e
        return tuple(u)

    zc = itertools.count()

    def terminal(payoffs):
        zid = f"z{next(zc)}"
        b.terminal(zid, payoffs)
        return zid

    nc = itertools.count()

    def fresh(tag):
        return f"{tag}{next(nc)}"

    def receiver_node(signal, w_key, s_key, o1_choice, o2_choice, hedged=False):
        nid = fresh("R")
        hid = "hB" if signal == "b" else "hQ"
        acts = ("fight_b", "retreat_b") if signal == "b" else ("fight_q", "retreat_q")
        key_f = (w_key or s_key) + signal + "f"
        key_r = (w_key or s_key) + signal + "r"
        b.decision(nid, "receiver", hid,
                   [(acts[0], terminal(pay(key_f, o1_choice, o2_choice, hedged))),
                    (acts[1], terminal(pay(key_r, o1_choice, o2_choice, hedged)))])
        return nid

    def strong_node(o1_choice, o2_choice, w_hedged=False):
        # strong picks his signal unless o1's mid entry already forced beer
        if o1_choice == "mid":
            return receiver_node("b", None, "s", o1_choice, o2_choice, w_hedged)
        nid = fresh("S")
        b.decision(nid, "strong", "hs",
                   [("beer_s", receiver_node("b", None, "s", o1_choice, o2_choice, w_hedged)),
                    ("quiche_s", receiver_node("q", None, "s", o1_choice, o2_choice, w_hedged))])
        return nid

    def chance_types(weak_branch_fn, o1_choice, o2_choice, w_hedged=False):
        nid = fresh("C")
        b.chance(nid, [(weak_branch_fn(), Fraction(1, 10)),
                       (strong_node(o1_choice, o2_choice, w_hedged), Fraction(9, 10))])
        return nid

    def weak_signal_branch(w_signal, o1_choice, o2_choice):
        # o1's low entry forces the weak type's signal to beer
        signal = "b" if o1_choice == "low" else w_signal
        return lambda: receiver_node(signal, "w", None, o1_choice, o2_choice)

    def hedge_weak_branch(o2_choice):
        def make():
            nid = fresh("M")
            b.chance(nid, [(receiver_node("b", "w", None, "low", o2_choice, True), Fraction(1, 2)),
                           (receiver_node("q", "w", None, "low", o2_choice, True), Fraction(1, 2))])
            return nid
        return make

    def o2_node(w_signal, o1_choice, hedged=False):
        nid = fresh("T")
        kids = []
        for resp in ("resp_l", "resp_r"):
            if hedged:
                kids.append((resp, chance_types(hedge_weak_branch(resp), "low", resp, True)))
            else:
                kids.append((resp, chance_types(weak_signal_branch(w_signal, o1_choice, resp),
                                                o1_choice, resp)))
        b.decision(nid, "o2", "g3", kids)
        return nid

    def o1_nodes(w_signal):
        entry = fresh("E")
        b.decision(entry, "o1", "g2",
                   [("mid", o2_node(w_signal, "mid")), ("low", o2_node(w_signal, "low"))])
        top = fresh("O")
        b.decision(top, "o1", "g1",
                   [("opt_out", chance_types(weak_signal_branch(w_signal, "opt_out", None),
                                             "opt_out", None)),
                    ("opt_in", entry)])
        return top

    if with_hedge:
        b.decision("rw1", "weak", "hw1",
                   [("quiche_w", o1_nodes("q")), ("noquiche_w", "rw2")])
        b.decision("rw2", "weak", "hw2",
                   [("hedge_w", o2_node(None, "low", hedged=True)), ("beer_w", o1_nodes("b"))])
        return b.build("rw1")
    b.decision("rw", "weak", "hw", [("beer_w", o1_nodes("b")), ("quiche_w", o1_nodes("q"))])
    return b.build("rw")


_BUILTINS = {
    "fig1": (build_fig1, False),
    "fig2": (build_fig2, False),
    "beer_quiche": (build_beer_quiche, False),
    "fig4_bq_extended": (build_bq_extended, True),
    "example44": (build_example44, False),
    "example54_GO": (build_outside_option, False),
    "km_base": (build_km_base, False),
    "km_extended": (build_km_extended, False),
    "signaling": (build_signaling, True),
    "example63_barG": (build_composed_bq, True),
}


def builtin_names():
    return tuple(sorted(_BUILTINS))


def build_builtin(name: str, param=None) -> GameTree:
    """Construct a named example game; names taking a parameter accept it as
    second argument or suffixed after a colon, e.g. ``signaling:3``."""
    if ":" in name and param is None:
        name, param = name.split(":", 1)
    if name not in _BUILTINS:
        raise GameFormatError(f"unknown builtin {name!r}; known: {', '.join(builtin_names())}")
    fn, takes_param = _BUILTINS[name]
    if not takes_param:
        if param is not None:
            raise GameFormatError(f"builtin {name} takes no parameter")
        game = fn()
    elif name == "signaling":
        game = fn(int(param if param is not None else 2))
    elif name == "example63_barG":
        game = fn(rational(param) if param is not None else Fraction(1, 100))
    else:
        game = fn(rational(param) if param is not None else Fraction(1, 100))
    problems = validate_perfect_recall(game)
    if problems:
        raise problems[0]
    return game
