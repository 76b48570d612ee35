"""Iteration-invariant structural operators over a decision process.

Three 0/1 logic matrices convert between vector representations:

* ``seq_scatter`` (|P| x |Sigma|) places a per-sequence value on the node
  that sequence maps to; its transpose reads node values back per sequence.
  Every column has exactly one entry and every row at most one, so nnz
  equals |Sigma|.
* ``behav_scatter`` (|P| x |Sigma+|) is the same matrix without the
  empty-sequence column.
* ``block_sum`` (|J| x |Sigma+|) sums entries within each decision point's
  action block; transposing broadcasts the per-block sums back.

The per-depth level matrices apply one step of top-down or bottom-up tree
traversal.  Their CSR patterns are built once; each entry carries a weight
source (an action-sequence index, or constant 1 for edges leaving
observation points) and a value buffer refreshed from the current behavioral
strategy.  Because node ids are breadth-first, each depth occupies a
contiguous id range and the level matrices are stored restricted to their
nonzero row/column ranges, keeping per-level products linear in the level's
edge count.
"""

from __future__ import annotations

import numpy as np

from .decision_process import KIND_DECISION, DecisionProcess
from .games import Game
from .kernels import Backend, CsrMatrix


class LevelMatrix:
    """Weighted adjacency for the edges from depth d-1 to depth d.

    ``down`` has one row per depth-d node holding its single parent edge
    (used for top-down traversal); ``up`` has one row per depth-(d-1) node
    holding its child edges (bottom-up).  ``refresh`` rewrites both value
    buffers from a behavioral strategy; the patterns never change.
    """

    __slots__ = ("depth_index", "parent_lo", "parent_hi", "child_lo", "child_hi",
                 "down", "up", "src_down", "src_up")

    def __init__(self, depth_index: int, parents: np.ndarray,
                 children: np.ndarray, seqs: np.ndarray,
                 parent_range: tuple[int, int], child_range: tuple[int, int]):
        self.depth_index = depth_index
        self.parent_lo, self.parent_hi = parent_range
        self.child_lo, self.child_hi = child_range
        n_child = self.child_hi - self.child_lo
        n_parent = self.parent_hi - self.parent_lo

        # Children arrive ordered by id, one parent each.
        self.down = CsrMatrix(n_child, n_parent,
                              np.arange(n_child + 1, dtype=np.int64),
                              parents - self.parent_lo,
                              np.zeros(len(parents)), check=False)
        self.src_down = np.ascontiguousarray(seqs, dtype=np.int64)

        order = np.argsort(parents, kind="stable")
        counts = np.bincount(parents - self.parent_lo, minlength=n_parent)
        indptr = np.zeros(n_parent + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(counts)
        self.up = CsrMatrix(n_parent, n_child, indptr,
                            children[order] - self.child_lo,
                            np.zeros(len(children)), check=False)
        self.src_up = np.ascontiguousarray(seqs[order], dtype=np.int64)

    @property
    def nnz(self) -> int:
        return self.down.nnz

    def refresh(self, behavior: np.ndarray, backend: Backend) -> None:
        backend.gather_weights(self.src_down, behavior, out=self.down.data)
        backend.gather_weights(self.src_up, behavior, out=self.up.data)

    def nbytes(self) -> int:
        return (self.down.nbytes() + self.up.nbytes()
                + self.src_down.nbytes + self.src_up.nbytes)


class OperatorSet:
    """All structural operators for one player's decision process."""

    def __init__(self, proc: DecisionProcess):
        self.proc = proc
        n = proc.num_nodes
        n_seq = proc.num_seqs
        n_dp = proc.num_decisions

        # seq_scatter: entry (seq_node[s], s) = 1 for every sequence s.
        has_seq = proc.node_seq >= 0
        rows = np.flatnonzero(has_seq)
        indptr = np.zeros(n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(has_seq.astype(np.int64))
        self.seq_scatter = CsrMatrix(n, n_seq, indptr,
                                     proc.node_seq[rows],
                                     np.ones(len(rows)), check=False)
        self.seq_gather = self.seq_scatter.transposed()

        # behav_scatter: seq_scatter without the empty-sequence column.
        has_act = proc.node_seq >= 1
        rows_b = np.flatnonzero(has_act)
        indptr_b = np.zeros(n + 1, dtype=np.int64)
        indptr_b[1:] = np.cumsum(has_act.astype(np.int64))
        self.behav_scatter = CsrMatrix(n, n_seq - 1, indptr_b,
                                       proc.node_seq[rows_b] - 1,
                                       np.ones(len(rows_b)), check=False)
        self.behav_gather = self.behav_scatter.transposed()

        # block_sum: action-sequence indices are contiguous per decision
        # point and ordered by decision point, so each row is a plain range.
        indptr_c = np.zeros(n_dp + 1, dtype=np.int64)
        indptr_c[1:] = np.cumsum(proc.dp_num_actions)
        self.block_sum = CsrMatrix(n_dp, n_seq - 1, indptr_c,
                                   np.arange(n_seq - 1, dtype=np.int64),
                                   np.ones(n_seq - 1), check=False)
        self.block_expand = self.block_sum.transposed()

        self.levels = [
            LevelMatrix(d + 1, parents, children, seqs,
                        (int(proc.level_starts[d]), int(proc.level_starts[d + 1])),
                        (int(proc.level_starts[d + 1]), int(proc.level_starts[d + 2])))
            for d, (parents, children, seqs) in enumerate(proc.levels)
        ]

        # Uniform behavioral profile: the zero-denominator default.
        self.uniform_default = proc.uniform_behavior()

    @property
    def num_nodes(self) -> int:
        return self.proc.num_nodes

    @property
    def num_seqs(self) -> int:
        return self.proc.num_seqs

    def level_slice(self, vec: np.ndarray, depth: int) -> np.ndarray:
        """View of a per-node vector restricted to one depth's id range."""
        lo = int(self.proc.level_starts[depth])
        hi = int(self.proc.level_starts[depth + 1])
        return vec[lo:hi]

    def refresh_levels(self, behavior: np.ndarray, backend: Backend) -> None:
        """Load a behavioral strategy into every level's value buffers."""
        if behavior.shape[0] != self.num_seqs - 1:
            raise ValueError("behavior vector has the wrong length")
        for level in self.levels:
            level.refresh(behavior, backend)

    def nbytes(self) -> int:
        total = (self.seq_scatter.nbytes() + self.seq_gather.nbytes()
                 + self.behav_scatter.nbytes() + self.behav_gather.nbytes()
                 + self.block_sum.nbytes() + self.block_expand.nbytes()
                 + self.uniform_default.nbytes)
        return total + sum(level.nbytes() for level in self.levels)


def build_operators(proc: DecisionProcess) -> OperatorSet:
    return OperatorSet(proc)


def build_payoff_matrix(game: Game, proc1: DecisionProcess,
                        proc2: DecisionProcess) -> CsrMatrix:
    """Sparse payoff matrix over sequence pairs.

    Entry (s1, s2) accumulates, over terminal nodes reached when player 1's
    last sequence is s1 and player 2's is s2, the chance reach times the
    player-1 payoff.  Expected value of a profile (x1, x2) is then
    x1 . (U @ x2).  One tree walk; duplicate cells are summed.
    """
    if proc1.game is not game or proc2.game is not game:
        raise ValueError("decision processes were built from a different game")
    reach = game.chance_reach()
    terminals = game.terminal_ids()
    rows = proc1.game_seq[terminals]
    cols = proc2.game_seq[terminals]
    values = np.array([game.nodes[z].payoff for z in terminals]) * reach[terminals]
    return CsrMatrix.from_coo(proc1.num_seqs, proc2.num_seqs, rows, cols, values)
