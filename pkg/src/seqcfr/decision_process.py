"""Per-player tree-form sequential decision processes.

Each player's view of a game is extracted into a tree of decision points
(the player acts), observation points (the player's information branches),
and end nodes that close every branch.  Decision points correspond 1:1 to
the player's information sets.  A sequence is a (decision point, action)
pair; index 0 is reserved for the empty sequence, whose image is the root.

Paths where the player neither gains information nor acts are contracted:
an observation point is created only where more than one next information
set can follow a sequence.  Node and sequence ids are assigned in
breadth-first order, so every tree depth occupies a contiguous id range and
level-local kernels can address plain slices.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .games import DECISION, Game, GameValidationError

# Node kinds.
KIND_DECISION = 0
KIND_OBSERVATION = 1
KIND_END = 2

_KIND_NAMES = {KIND_DECISION: "decision", KIND_OBSERVATION: "observation",
               KIND_END: "end"}


@dataclass(frozen=True)
class LevelEdge:
    """One tree edge within a depth level.

    ``seq`` is the non-empty-sequence index whose current action probability
    weights the edge, or -1 for the constant weight 1 used on edges leaving
    observation points.
    """

    parent: int
    child: int
    seq: int


class DecisionProcess:
    """One player's sequential decision process over a game tree.

    Attributes
    ----------
    num_nodes, num_decisions, num_seqs: sizes |P|, |J|, |Sigma|.
    kind, depth, parent: per-node arrays; the root is node 0.
    seq_node: image of each sequence (index 0 = empty sequence -> root).
    node_seq: inverse of seq_node, -1 for nodes that are no sequence image.
    dp_node, dp_first_seq, dp_num_actions, dp_parent_seq: per decision point
        its node id, first action-sequence index, action count, and parent
        sequence index.
    levels: per depth d (1-based), arrays (parents, children, seqs) listing
        the edges from depth d-1 to depth d; ``seqs`` holds the non-empty
        sequence index weighting each edge or -1 for constant-1 edges.
    game_seq: for every game-tree node, the player's last sequence index on
        the path into that node (used for payoff-matrix construction).
    """

    def __init__(self, game: Game, player: int):
        if player not in (1, 2):
            raise ValueError("player must be 1 or 2")
        self.game = game
        self.player = player
        self._extract(game, player)

    # -- construction -----------------------------------------------------

    def _extract(self, game: Game, player: int) -> None:
        nodes = game.nodes
        n_game = len(nodes)

        # Game walk: provisional infoset ids in discovery order and, per game
        # node, the player's last provisional sequence key (0 = empty).
        pid_of_label: dict[str, int] = {}
        pid_first_key: list[int] = []     # provisional key of first action
        pid_parent_key: list[int] = []
        pid_labels: list[str] = []
        pid_actions: list[tuple[str, ...]] = []
        children_of_key: dict[int, list[int]] = {}
        game_seq_prov = np.zeros(n_game, dtype=np.int64)
        next_key = 1

        order = [0]
        head = 0
        while head < len(order):
            order.extend(nodes[order[head]].children)
            head += 1

        for g in order:
            node = nodes[g]
            if g != 0:
                par = nodes[node.parent]
                key = game_seq_prov[node.parent]
                if par.kind == DECISION and par.player == player:
                    a = par.children.index(g)
                    key = pid_first_key[pid_of_label[par.infoset]] + a
                game_seq_prov[g] = key
            if node.kind == DECISION and node.player == player:
                key = int(game_seq_prov[g])
                pid = pid_of_label.get(node.infoset)
                if pid is None:
                    pid = len(pid_first_key)
                    pid_of_label[node.infoset] = pid
                    pid_first_key.append(next_key)
                    pid_parent_key.append(key)
                    pid_labels.append(node.infoset)
                    pid_actions.append(tuple(
                        nodes[c].label_from_parent for c in node.children))
                    next_key += len(node.children)
                    children_of_key.setdefault(key, []).append(pid)
                elif pid_parent_key[pid] != key:
                    raise GameValidationError(
                        f"perfect recall violated in infoset {node.infoset!r}", g)

        # Assemble the process tree breadth-first.  Queue items are either a
        # sequence slot (resolve what follows a sequence) or a decision slot
        # (a decision point hanging under an observation point).
        kind: list[int] = []
        depth: list[int] = []
        parent: list[int] = []
        node_seq: list[int] = []
        num_seqs = 1 + sum(len(a) for a in pid_actions)
        seq_node = np.full(num_seqs, -1, dtype=np.int64)
        n_dp = len(pid_first_key)
        dp_node = np.zeros(n_dp, dtype=np.int64)
        dp_first_seq = np.zeros(n_dp, dtype=np.int64)
        dp_num_actions = np.zeros(n_dp, dtype=np.int64)
        dp_parent_seq = np.zeros(n_dp, dtype=np.int64)
        j_of_pid = np.full(n_dp, -1, dtype=np.int64)

        next_j = 0
        next_seq = 1
        queue: deque = deque()
        queue.append(("seq", 0, -1, 0, children_of_key.get(0, [])))

        def new_node(k: int, par: int, d: int, seq: int) -> int:
            nid = len(kind)
            kind.append(k)
            parent.append(par)
            depth.append(d)
            node_seq.append(seq)
            if seq >= 0:
                seq_node[seq] = nid
            return nid

        def open_decision(pid: int, par: int, d: int, parent_seq: int,
                          seq: int) -> None:
            nonlocal next_j, next_seq
            nid = new_node(KIND_DECISION, par, d, seq)
            j = next_j
            next_j += 1
            j_of_pid[pid] = j
            dp_node[j] = nid
            dp_first_seq[j] = next_seq
            n_act = len(pid_actions[pid])
            dp_num_actions[j] = n_act
            dp_parent_seq[j] = parent_seq
            first_key = pid_first_key[pid]
            for a in range(n_act):
                queue.append(("seq", next_seq + a, nid, d + 1,
                              children_of_key.get(first_key + a, [])))
            next_seq += n_act

        while queue:
            tag, *item = queue.popleft()
            if tag == "seq":
                seq, par, d, pids = item
                if not pids:
                    new_node(KIND_END, par, d, seq)
                elif len(pids) == 1:
                    open_decision(pids[0], par, d, seq, seq)
                else:
                    nid = new_node(KIND_OBSERVATION, par, d, seq)
                    for pid in pids:
                        queue.append(("dp", pid, nid, d + 1, seq))
            else:
                pid, par, d, parent_seq = item
                open_decision(pid, par, d, parent_seq, -1)

        self.num_nodes = len(kind)
        self.num_decisions = n_dp
        self.num_seqs = num_seqs
        self.kind = np.asarray(kind, dtype=np.int8)
        self.depth = np.asarray(depth, dtype=np.int64)
        self.parent = np.asarray(parent, dtype=np.int64)
        self.node_seq = np.asarray(node_seq, dtype=np.int64)
        self.seq_node = seq_node
        self.dp_node = dp_node
        self.dp_first_seq = dp_first_seq
        self.dp_num_actions = dp_num_actions
        self.dp_parent_seq = dp_parent_seq
        # Reorder per-infoset metadata from discovery (pid) to BFS (j) order.
        self.dp_label = [""] * n_dp
        self.dp_action_labels: list[tuple[str, ...]] = [()] * n_dp
        for pid in range(n_dp):
            j = int(j_of_pid[pid])
            self.dp_label[j] = pid_labels[pid]
            self.dp_action_labels[j] = pid_actions[pid]

        self.height = int(self.depth.max()) if self.num_nodes else 0
        counts = np.bincount(self.parent[1:], minlength=self.num_nodes) \
            if self.num_nodes > 1 else np.zeros(1, dtype=np.int64)
        self.degree = int(counts.max()) if counts.size else 0

        # Per-sequence decision point (for behavioral normalization).
        self.seq_dp = np.full(num_seqs, -1, dtype=np.int64)
        for j in range(n_dp):
            lo = int(dp_first_seq[j])
            self.seq_dp[lo:lo + int(dp_num_actions[j])] = j

        # Level decomposition: edges grouped by child depth; within a level,
        # edges are ordered by child id so CSR rows stay sorted.
        self.level_starts = np.searchsorted(
            self.depth, np.arange(self.height + 2))
        levels = []
        for d in range(1, self.height + 1):
            lo, hi = int(self.level_starts[d]), int(self.level_starts[d + 1])
            children = np.arange(lo, hi, dtype=np.int64)
            parents = self.parent[lo:hi].copy()
            seqs = np.where(self.kind[parents] == KIND_DECISION,
                            self.node_seq[lo:hi] - 1, -1)
            levels.append((parents, children, seqs))
        self.levels = levels

        # Map every game node to the player's last sequence index on the way
        # in; terminals index the payoff matrix through this.
        final_of_key = np.zeros(next_key, dtype=np.int64)
        for pid in range(n_dp):
            j = int(j_of_pid[pid])
            n_act = int(dp_num_actions[j])
            lo = pid_first_key[pid]
            final_of_key[lo:lo + n_act] = \
                np.arange(dp_first_seq[j], dp_first_seq[j] + n_act)
        self.game_seq = final_of_key[game_seq_prov]

    # -- queries -----------------------------------------------------------

    def seq_label(self, seq: int) -> str:
        """Readable label for a sequence: 'infoset/action', or '' for empty."""
        if seq == 0:
            return ""
        j = int(self.seq_dp[seq])
        a = seq - int(self.dp_first_seq[j])
        return f"{self.dp_label[j]}/{self.dp_action_labels[j][a]}"

    def uniform_behavior(self) -> np.ndarray:
        """Per-action uniform probabilities, one block per decision point."""
        out = np.zeros(self.num_seqs - 1)
        for j in range(self.num_decisions):
            lo = int(self.dp_first_seq[j]) - 1
            n = int(self.dp_num_actions[j])
            out[lo:lo + n] = 1.0 / n
        return out

    def dump(self) -> str:
        """Debug dump: one line per node (id, kind, depth, parent, sequence)."""
        lines = []
        for i in range(self.num_nodes):
            seq = int(self.node_seq[i])
            label = self.seq_label(seq) if seq > 0 else ("<root>" if seq == 0 else "-")
            lines.append(f"{i}\t{_KIND_NAMES[int(self.kind[i])]}\t"
                         f"{int(self.depth[i])}\t{int(self.parent[i])}\t{label}")
        return "\n".join(lines)


def extract_decision_process(game: Game, player: int) -> DecisionProcess:
    """Build the player's decision process from a validated game."""
    return DecisionProcess(game, player)


def level_decomposition(proc: DecisionProcess) -> list[list[LevelEdge]]:
    """Edges grouped by depth; depth-d edges connect depth d-1 to depth d."""
    out = []
    for parents, children, seqs in proc.levels:
        out.append([LevelEdge(int(p), int(c), int(s))
                    for p, c, s in zip(parents, children, seqs)])
    return out
