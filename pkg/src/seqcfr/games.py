"""Explicit two-player zero-sum extensive-form game trees.

A game is a rooted tree of chance, decision, and terminal nodes.  Terminal
nodes store the payoff to player 1 only; player 2's payoff is its negation
by representation, so zero-sum holds by construction.  Decision nodes carry
an acting player and an information-set label; all nodes sharing a label
must belong to the same player, expose identical action lists, and satisfy
perfect recall.

Built-in benchmark games (Kuhn poker, Leduc poker, and two one-shot matrix
games), a seeded synthetic generator, and a line-oriented JSON file format
live here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

CHANCE = "chance"
DECISION = "decision"
TERMINAL = "terminal"

_KINDS = (CHANCE, DECISION, TERMINAL)

# Sum-to-one tolerance for chance outcome probabilities.
PROB_TOL = 1e-12

# Default ceiling on generated tree sizes (see random_game).
DEFAULT_NODE_BUDGET = 4_000_000


class GameError(Exception):
    """Base class for game construction, parsing, and validation failures."""


class GameParseError(GameError):
    """Malformed game file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class GameValidationError(GameError):
    """A structural invariant failed; carries the offending node id."""

    def __init__(self, message: str, node_id: int | None = None):
        super().__init__(message if node_id is None else f"node {node_id}: {message}")
        self.node_id = node_id


class GameSizeError(GameError):
    """Requested synthetic game exceeds the configured node budget."""


@dataclass(slots=True, eq=True)
class GameNode:
    """One tree node.

    ``prob`` is the probability of the edge from the node's parent into this
    node and is present exactly when the parent is a chance node.  ``payoff``
    is the terminal payoff to player 1.
    """

    kind: str
    parent: int | None
    label_from_parent: str | None
    children: list[int] = field(default_factory=list)
    player: int | None = None
    infoset: str | None = None
    prob: float | None = None
    payoff: float | None = None


@dataclass(eq=True)
class Game:
    """A rooted game tree; node id 0 is the root."""

    name: str
    nodes: list[GameNode]

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def terminal_ids(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.kind == TERMINAL]

    def chance_reach(self) -> np.ndarray:
        """Product of chance probabilities along the path into each node."""
        reach = np.ones(len(self.nodes))
        for i, node in enumerate(self.nodes):
            if i == 0:
                continue
            p = reach[node.parent]
            if node.prob is not None:
                p *= node.prob
            reach[i] = p
        return reach


class GameBuilder:
    """Incremental construction helper; keeps parent/child links consistent."""

    def __init__(self, name: str):
        self.name = name
        self.nodes: list[GameNode] = []

    def _add(self, node: GameNode) -> int:
        nid = len(self.nodes)
        self.nodes.append(node)
        if node.parent is not None:
            self.nodes[node.parent].children.append(nid)
        return nid

    def chance(self, parent: int | None = None, label: str | None = None,
               prob: float | None = None) -> int:
        return self._add(GameNode(CHANCE, parent, label, prob=prob))

    def decision(self, parent: int | None, label: str | None, player: int,
                 infoset: str, prob: float | None = None) -> int:
        return self._add(GameNode(DECISION, parent, label, player=player,
                                  infoset=infoset, prob=prob))

    def terminal(self, parent: int, label: str, payoff: float,
                 prob: float | None = None) -> int:
        return self._add(GameNode(TERMINAL, parent, label, payoff=float(payoff),
                                  prob=prob))

    def build(self) -> Game:
        return Game(self.name, self.nodes)


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    """Outcome of validate_game: ok, or the first violated invariant."""

    ok: bool
    message: str | None = None
    node_id: int | None = None

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_failed(self) -> None:
        if not self.ok:
            raise GameValidationError(self.message, self.node_id)


def validate_game(game: Game) -> ValidationReport:
    """Check every structural invariant; report the first violation found.

    Checks, in order: rooted-tree shape, per-kind field consistency, chance
    probability sums, information-set consistency (single owner, identical
    ordered action lists), and perfect recall.
    """
    nodes = game.nodes
    if not nodes:
        return ValidationReport(False, "empty game")
    if nodes[0].parent is not None:
        return ValidationReport(False, "root must have no parent", 0)

    n = len(nodes)
    has_parent_slot: set[int] = set()
    for i, node in enumerate(nodes):
        if node.kind not in _KINDS:
            return ValidationReport(False, f"unknown kind {node.kind!r}", i)
        if i > 0:
            if node.parent is None:
                return ValidationReport(False, "not a tree: non-root node without parent", i)
            if not (0 <= node.parent < n) or node.parent == i:
                return ValidationReport(False, "not a tree: invalid parent id", i)
            if node.label_from_parent is None:
                return ValidationReport(False, "missing label_from_parent", i)
            if i not in nodes[node.parent].children:
                return ValidationReport(False, "not a tree: parent does not list node as child", i)
        for c in node.children:
            if not (0 <= c < n):
                return ValidationReport(False, "child id out of range", i)
            if c in has_parent_slot or c == 0:
                return ValidationReport(False, "not a tree: node has two parents", c)
            has_parent_slot.add(c)
        labels = [nodes[c].label_from_parent for c in node.children]
        if len(set(labels)) != len(labels):
            return ValidationReport(False, "duplicate sibling edge labels", i)

    # Reachability from the root; with the parent/child cross-checks above
    # this rules out cycles and disconnected components.
    reached = np.zeros(n, dtype=bool)
    stack = [0]
    reached[0] = True
    while stack:
        for c in nodes[stack.pop()].children:
            if not reached[c]:
                reached[c] = True
                stack.append(c)
    if not reached.all():
        bad = int(np.flatnonzero(~reached)[0])
        return ValidationReport(False, "not a tree: node unreachable from root", bad)

    for i, node in enumerate(nodes):
        if node.kind == TERMINAL:
            if node.children:
                return ValidationReport(False, "terminal node has children", i)
            if node.payoff is None or not math.isfinite(node.payoff):
                return ValidationReport(False, "terminal node needs a finite payoff", i)
        else:
            if node.payoff is not None:
                return ValidationReport(False, "non-terminal node carries a payoff", i)
            if not node.children:
                return ValidationReport(False, "internal node has no children", i)
        if node.kind == DECISION:
            if node.player not in (1, 2):
                return ValidationReport(False, "decision node needs player in {1,2}", i)
            if node.infoset is None:
                return ValidationReport(False, "decision node needs an infoset label", i)
        else:
            if node.player is not None or node.infoset is not None:
                return ValidationReport(False, "player/infoset on a non-decision node", i)
        if node.kind == CHANCE:
            total = 0.0
            for c in node.children:
                p = nodes[c].prob
                if p is None or not (0.0 <= p <= 1.0):
                    return ValidationReport(False, "chance outcome probability not in [0,1]", c)
                total += p
            if abs(total - 1.0) > PROB_TOL:
                return ValidationReport(
                    False, f"chance outcome probabilities sum to {total!r}, not 1", i)
        else:
            for c in node.children:
                if nodes[c].prob is not None:
                    return ValidationReport(False, "prob set on a non-chance outcome", c)

    # Information-set consistency: one owner, identical ordered action lists.
    infoset_sig: dict[tuple[int, str], tuple] = {}
    owner: dict[str, int] = {}
    for i, node in enumerate(nodes):
        if node.kind != DECISION:
            continue
        prev_owner = owner.setdefault(node.infoset, node.player)
        if prev_owner != node.player:
            return ValidationReport(
                False, f"infoset {node.infoset!r} spans both players", i)
        actions = tuple(nodes[c].label_from_parent for c in node.children)
        key = (node.player, node.infoset)
        sig = infoset_sig.setdefault(key, actions)
        if sig != actions:
            return ValidationReport(
                False, f"infoset {node.infoset!r} members have different action lists", i)

    # Perfect recall: all members of an infoset share the acting player's
    # (infoset, action) history.  Histories are interned to integer ids so
    # the walk stays linear in the number of nodes.
    hist_ids: dict[tuple, int] = {}
    node_hist = {1: np.zeros(n, dtype=np.int64), 2: np.zeros(n, dtype=np.int64)}
    infoset_hist: dict[tuple[int, str], int] = {}
    for i in _topological_order(nodes):
        node = nodes[i]
        if i != 0:
            parent = nodes[node.parent]
            for pl in (1, 2):
                h = node_hist[pl][node.parent]
                if parent.kind == DECISION and parent.player == pl:
                    key = (int(h), parent.infoset, node.label_from_parent)
                    h = hist_ids.setdefault(key, len(hist_ids) + 1)
                node_hist[pl][i] = h
        if node.kind == DECISION:
            key = (node.player, node.infoset)
            h = int(node_hist[node.player][i])
            known = infoset_hist.setdefault(key, h)
            if known != h:
                return ValidationReport(
                    False, f"perfect recall violated in infoset {node.infoset!r}", i)

    return ValidationReport(True)


def _topological_order(nodes: list[GameNode]) -> list[int]:
    """Root-first order (BFS); assumes tree shape was already verified."""
    order = [0]
    head = 0
    while head < len(order):
        order.extend(nodes[order[head]].children)
        head += 1
    return order


# ---------------------------------------------------------------------------
# Built-in benchmark games


def kuhn_poker() -> Game:
    """Three-card Kuhn poker with antes of 1.

    Cards are dealt through two sequential chance layers (player 1's card,
    then player 2's from the remaining two), which yields the conventional
    58-node tree with 30 terminals.  Infoset labels are
    ``"<own card>|<betting history>"``.
    """
    b = GameBuilder("kuhn_poker")
    root = b.chance()
    cards = ("0", "1", "2")

    def showdown(c1: int, c2: int, stake: int) -> float:
        return float(stake) if c1 > c2 else float(-stake)

    for c1 in range(3):
        deal2 = b.chance(root, cards[c1], prob=1.0 / 3.0)
        for c2 in range(3):
            if c2 == c1:
                continue
            # Player 1 acts first: check (c) or bet (b).
            d1 = b.decision(deal2, cards[c2], 1, f"{cards[c1]}|", prob=0.5)
            d2 = b.decision(d1, "c", 2, f"{cards[c2]}|c")
            b.terminal(d2, "c", showdown(c1, c2, 1))
            d3 = b.decision(d2, "b", 1, f"{cards[c1]}|cb")
            b.terminal(d3, "f", -1.0)
            b.terminal(d3, "c", showdown(c1, c2, 2))
            d4 = b.decision(d1, "b", 2, f"{cards[c2]}|b")
            b.terminal(d4, "f", 1.0)
            b.terminal(d4, "c", showdown(c1, c2, 2))
    return b.build()


def _leduc_showdown(c1: int, c2: int, pub: int, stake: int) -> float:
    r1, r2, rp = c1 // 2, c2 // 2, pub // 2
    if r1 == rp:
        return float(stake)
    if r2 == rp:
        return float(-stake)
    if r1 == r2:
        return 0.0
    return float(stake) if r1 > r2 else float(-stake)


def leduc_poker() -> Game:
    """Standard Leduc hold'em as an explicit tree.

    Six-card deck (three ranks, two suits), one private card each, a public
    card revealed after the first betting round, at most two wagers per round
    with sizes 2 then 4, antes of 1.  Pairing the public card beats rank-high;
    equal private ranks split the pot.  Round-1 infoset labels are
    ``"<own card>|<history>"``; round-2 labels add the public card and the
    full first-round history.
    """
    b = GameBuilder("leduc_poker")
    raise_size = (2, 4)

    def walk(parent: int, label: str, prob: float | None, rnd: int, player: int,
             hist: str, contrib: tuple[int, int], wagers: int,
             c1: int, c2: int, pub: int | None, hist1: str, on_round_end) -> None:
        """Expand one betting state and, recursively, the rest of the round.

        ``on_round_end(node, edge_label, contrib)`` receives every check-down
        or call continuation; fold terminals are emitted inline.
        """
        own = c1 if player == 1 else c2
        infoset = f"{own}|{hist}" if pub is None else f"{own}{pub}|{hist1}|{hist}"
        node = b.decision(parent, label, player, infoset, prob=prob)
        other = 2 if player == 1 else 1
        size = raise_size[rnd]
        if contrib[0] == contrib[1]:
            # No outstanding bet: check, or bet ("r").
            if hist.endswith("c"):
                on_round_end(node, "c", contrib)
            else:
                walk(node, "c", None, rnd, other, hist + "c", contrib, wagers,
                     c1, c2, pub, hist1, on_round_end)
            raised = _with_contrib(contrib, player, max(contrib) + size)
            walk(node, "r", None, rnd, other, hist + "r", raised, wagers + 1,
                 c1, c2, pub, hist1, on_round_end)
        else:
            # Facing a bet: fold, call ("k"), or raise while wagers remain.
            b.terminal(node, "f", float(-contrib[0]) if player == 1 else float(contrib[1]))
            on_round_end(node, "k", _with_contrib(contrib, player, max(contrib)))
            if wagers < 2:
                raised = _with_contrib(contrib, player, max(contrib) + size)
                walk(node, "r", None, rnd, other, hist + "r", raised, wagers + 1,
                     c1, c2, pub, hist1, on_round_end)

    root = b.chance()
    for c1 in range(6):
        deal2 = b.chance(root, str(c1), prob=1.0 / 6.0)
        for c2 in range(6):
            if c2 == c1:
                continue

            def reveal_public(node: int, edge: str, contrib: tuple[int, int],
                              c1: int = c1, c2: int = c2) -> None:
                hist1 = _betting_history(b, node) + edge
                pub_chance = b.chance(node, edge)
                for pub in range(6):
                    if pub in (c1, c2):
                        continue

                    def settle(n2: int, lbl: str, contrib2: tuple[int, int],
                               c1: int = c1, c2: int = c2, pub: int = pub) -> None:
                        b.terminal(n2, lbl, _leduc_showdown(c1, c2, pub, min(contrib2)))

                    walk(pub_chance, str(pub), 0.25, 1, 1, "", contrib, 0,
                         c1, c2, pub, hist1, settle)

            walk(deal2, str(c2), 0.2, 0, 1, "", (1, 1), 0,
                 c1, c2, None, "", reveal_public)
    return b.build()


def _with_contrib(contrib: tuple[int, int], player: int, value: int) -> tuple[int, int]:
    return (value, contrib[1]) if player == 1 else (contrib[0], value)


def _betting_history(b: GameBuilder, node_id: int) -> str:
    """Betting string from the current round's first action down to node."""
    labels = []
    node = b.nodes[node_id]
    while node.parent is not None and b.nodes[node.parent].kind == DECISION:
        labels.append(node.label_from_parent)
        node = b.nodes[node.parent]
    return "".join(reversed(labels))


def matching_pennies() -> Game:
    """One-shot matching pennies; player 1 wins +1 when the coins match."""
    b = GameBuilder("matching_pennies")
    d1 = b.decision(None, None, 1, "p1")
    for a1 in ("H", "T"):
        d2 = b.decision(d1, a1, 2, "p2")
        for a2 in ("H", "T"):
            b.terminal(d2, a2, 1.0 if a1 == a2 else -1.0)
    return b.build()


def rock_paper_scissors() -> Game:
    """One-shot rock-paper-scissors with unit payoffs."""
    beats = {("R", "S"), ("S", "P"), ("P", "R")}
    b = GameBuilder("rock_paper_scissors")
    d1 = b.decision(None, None, 1, "p1")
    for a1 in ("R", "P", "S"):
        d2 = b.decision(d1, a1, 2, "p2")
        for a2 in ("R", "P", "S"):
            pay = 0.0 if a1 == a2 else (1.0 if (a1, a2) in beats else -1.0)
            b.terminal(d2, a2, pay)
    return b.build()


BUILTIN_GAMES = {
    "kuhn": kuhn_poker,
    "kuhn_poker": kuhn_poker,
    "leduc": leduc_poker,
    "leduc_poker": leduc_poker,
    "matching_pennies": matching_pennies,
    "rps": rock_paper_scissors,
    "rock_paper_scissors": rock_paper_scissors,
}


# ---------------------------------------------------------------------------
# Synthetic generator


def random_game(depth: int, branching: int, infoset_merge_rate: float = 0.0,
                seed: int = 0, max_nodes: int = DEFAULT_NODE_BUDGET) -> Game:
    """Seeded synthetic game with alternating decision/chance layers.

    Layers ``0..depth-1`` are internal; even layers are decision layers whose
    acting player alternates (1, 2, 1, ...) and odd layers are uniform chance
    layers.  Every internal node has ``branching`` children; layer ``depth``
    holds terminals with payoffs drawn uniformly from [-1, 1].

    Decision nodes within a layer are merged into shared information sets at
    rate ``infoset_merge_rate``, but only among nodes with the same acting-
    player (infoset, action) history, so perfect recall holds by
    construction.  The result is a pure function of the arguments.
    """
    if depth < 1 or branching < 1:
        raise ValueError("depth and branching must be >= 1")
    if not (0.0 <= infoset_merge_rate <= 1.0):
        raise ValueError("infoset_merge_rate must be in [0, 1]")
    total = depth + 1 if branching == 1 else \
        (branching ** (depth + 1) - 1) // (branching - 1)
    if total > max_nodes:
        raise GameSizeError(
            f"random_game(depth={depth}, branching={branching}) needs {total} "
            f"nodes, exceeding the budget of {max_nodes}")

    rng = np.random.default_rng(seed)
    labels = [str(i) for i in range(branching)]
    chance_prob = 1.0 / branching
    b = GameBuilder(f"random_d{depth}_b{branching}_m{infoset_merge_rate}_s{seed}")

    # Frontier slots: (parent id or None, edge label, per-player history key).
    frontier: list[tuple[int | None, str | None, tuple[int, int]]] = \
        [(None, None, (0, 0))]
    hist_ids: dict[tuple, int] = {}

    for layer_idx in range(depth):
        is_decision = layer_idx % 2 == 0
        player = 1 + (layer_idx // 2) % 2
        infoset_of_slot: list[str] = []
        if is_decision:
            # Bucket slots by own-history; merging within a bucket keeps
            # perfect recall intact.
            buckets: dict[int, list[str]] = {}
            counter = 0
            for parent, edge, hists in frontier:
                key = hists[player - 1]
                open_sets = buckets.setdefault(key, [])
                if open_sets and rng.random() < infoset_merge_rate:
                    name = open_sets[int(rng.integers(len(open_sets)))]
                else:
                    name = f"L{layer_idx}N{counter}"
                    counter += 1
                    open_sets.append(name)
                infoset_of_slot.append(name)

        next_frontier: list[tuple[int, str, tuple[int, int]]] = []
        for slot, (parent, edge, hists) in enumerate(frontier):
            prob = None
            if parent is not None and b.nodes[parent].kind == CHANCE:
                prob = chance_prob
            if is_decision:
                infoset = infoset_of_slot[slot]
                nid = b.decision(parent, edge, player, infoset, prob=prob)
                for a in range(branching):
                    hkey = hist_ids.setdefault(
                        (hists[player - 1], infoset, a), len(hist_ids) + 1)
                    nh = (hkey, hists[1]) if player == 1 else (hists[0], hkey)
                    next_frontier.append((nid, labels[a], nh))
            else:
                nid = b.chance(parent, edge, prob=prob)
                for a in range(branching):
                    next_frontier.append((nid, labels[a], hists))
        frontier = next_frontier

    payoffs = rng.uniform(-1.0, 1.0, size=len(frontier))
    for (parent, edge, _), pay in zip(frontier, payoffs):
        prob = chance_prob if b.nodes[parent].kind == CHANCE else None
        b.terminal(parent, edge, pay, prob=prob)
    return b.build()


# ---------------------------------------------------------------------------
# Text format: one JSON object per line (header, then one line per node)

_COMMON_FIELDS = {"id", "kind", "parent", "label_from_parent"}
_OPTIONAL_FIELDS = {"player", "infoset", "prob", "payoff"}


def save_game(game: Game) -> str:
    """Serialize to the line-oriented JSON format; inverse of load_game."""
    lines = [json.dumps({"players": 2, "name": game.name})]
    for i, node in enumerate(game.nodes):
        obj: dict = {"id": i, "kind": node.kind, "parent": node.parent,
                     "label_from_parent": node.label_from_parent}
        if node.player is not None:
            obj["player"] = node.player
        if node.infoset is not None:
            obj["infoset"] = node.infoset
        if node.prob is not None:
            obj["prob"] = node.prob
        if node.payoff is not None:
            obj["payoff"] = node.payoff
        lines.append(json.dumps(obj))
    return "\n".join(lines) + "\n"


def load_game(text: str) -> Game:
    """Parse the line-oriented JSON format and validate the result.

    Raises GameParseError with the offending line for malformed input and
    GameValidationError when the decoded tree violates a game invariant.
    """
    content = [(no + 1, ln) for no, ln in enumerate(text.splitlines()) if ln.strip()]
    if not content:
        raise GameParseError("empty game file", 1)

    lineno, header_text = content[0]
    header = _parse_json_line(header_text, lineno)
    if set(header) != {"players", "name"}:
        raise GameParseError("header must contain exactly 'players' and 'name'", lineno)
    if header["players"] != 2:
        raise GameParseError("only two-player games are supported", lineno)

    raw: dict[int, tuple[int, dict]] = {}
    for lineno, line in content[1:]:
        obj = _parse_json_line(line, lineno)
        unknown = set(obj) - _COMMON_FIELDS - _OPTIONAL_FIELDS
        if unknown:
            raise GameParseError(f"unknown fields {sorted(unknown)}", lineno)
        missing = _COMMON_FIELDS - set(obj)
        if missing:
            raise GameParseError(f"missing fields {sorted(missing)}", lineno)
        nid = obj["id"]
        if not isinstance(nid, int) or isinstance(nid, bool) or nid < 0:
            raise GameParseError("id must be a non-negative integer", lineno)
        if nid in raw:
            raise GameParseError(f"duplicate node id {nid}", lineno)
        raw[nid] = (lineno, obj)

    n = len(raw)
    if n == 0:
        raise GameParseError("no nodes in game file", content[0][0])
    if set(raw) != set(range(n)):
        raise GameParseError("node ids must be dense integers starting at 0",
                             content[-1][0])

    nodes: list[GameNode] = []
    for nid in range(n):
        lineno, obj = raw[nid]
        kind = obj["kind"]
        if kind not in _KINDS:
            raise GameParseError(f"unknown kind {kind!r}", lineno)
        parent = obj["parent"]
        label = obj["label_from_parent"]
        if nid == 0:
            if parent is not None or label is not None:
                raise GameParseError("root must have null parent and label", lineno)
        else:
            if not isinstance(parent, int) or not isinstance(label, str):
                raise GameParseError(
                    "non-root nodes need an integer parent and string label", lineno)
            if not (0 <= parent < n):
                raise GameParseError("parent id out of range", lineno)
        for name, typ in (("player", int), ("infoset", str),
                          ("prob", (int, float)), ("payoff", (int, float))):
            if name in obj and not isinstance(obj[name], typ):
                raise GameParseError(f"field {name!r} has the wrong type", lineno)
        nodes.append(GameNode(kind, parent, label,
                              player=obj.get("player"),
                              infoset=obj.get("infoset"),
                              prob=float(obj["prob"]) if "prob" in obj else None,
                              payoff=float(obj["payoff"]) if "payoff" in obj else None))

    for nid in range(1, n):
        nodes[nodes[nid].parent].children.append(nid)

    game = Game(header["name"], nodes)
    validate_game(game).raise_if_failed()
    return game


def _parse_json_line(line: str, lineno: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise GameParseError(f"invalid JSON ({exc.msg}) at column {exc.colno}",
                             lineno) from exc
    if not isinstance(obj, dict):
        raise GameParseError("expected a JSON object", lineno)
    return obj
