"""Scalar, loop-based reference implementations used as ground truth.

Everything here walks trees one node at a time with plain Python loops:
regret matching and its variants over per-decision-point regret lists,
expected value and utility gradients by explicit game-tree traversal, and
best response by bottom-up maximization.  These functions are deliberately
slow and simple; the test suite runs them in lockstep against the
linear-algebra solver and they define correct behavior.

The scalar state shares the decision-process node and sequence indexing
with the main solver, so comparisons are index-aligned, and each update
mirrors the solver's operation order so agreement is exact rather than
merely within tolerance.
"""

from __future__ import annotations

import itertools

import numpy as np

from .decision_process import KIND_DECISION, KIND_END, DecisionProcess
from .games import Game


class ScalarCfrState:
    """Per-decision-point cumulative regrets and previous behavior."""

    def __init__(self, proc: DecisionProcess):
        self.proc = proc
        self.regrets = [np.zeros(int(n)) for n in proc.dp_num_actions]
        self.behavior = [np.full(int(n), 1.0 / int(n))
                         for n in proc.dp_num_actions]
        self.t = 1
        self._children = _children_lists(proc)


def _children_lists(proc: DecisionProcess) -> list[list[int]]:
    children: list[list[int]] = [[] for _ in range(proc.num_nodes)]
    for i in range(1, proc.num_nodes):
        children[int(proc.parent[i])].append(i)
    return children


def scalar_next_strategy(state: ScalarCfrState) -> np.ndarray:
    """Regret matching per decision point, then a top-down product pass."""
    proc = state.proc
    for j in range(proc.num_decisions):
        r = state.regrets[j]
        n = len(r)
        pos = np.empty(n)
        total = 0.0
        for a in range(n):
            pos[a] = r[a] if r[a] > 0.0 else 0.0
            total += pos[a]
        b = state.behavior[j]
        for a in range(n):
            b[a] = pos[a] / total if total != 0.0 else 1.0 / n

    x = np.zeros(proc.num_seqs)
    x[0] = 1.0
    for j in range(proc.num_decisions):
        first = int(proc.dp_first_seq[j])
        parent = int(proc.dp_parent_seq[j])
        b = state.behavior[j]
        for a in range(len(b)):
            x[first + a] = x[parent] * b[a]
    return x


def scalar_observe_utility(state: ScalarCfrState, u: np.ndarray) -> None:
    """Bottom-up counterfactual value pass, then per-point regret updates."""
    proc = state.proc
    v = np.zeros(proc.num_nodes)
    node_j = np.full(proc.num_nodes, -1, dtype=np.int64)
    node_j[proc.dp_node] = np.arange(proc.num_decisions)

    for p in range(proc.num_nodes - 1, -1, -1):
        kind = int(proc.kind[p])
        if kind == KIND_END:
            continue
        if kind == KIND_DECISION:
            j = int(node_j[p])
            first = int(proc.dp_first_seq[j])
            b = state.behavior[j]
            acc = 0.0
            for a in range(len(b)):
                child = int(proc.seq_node[first + a])
                acc += b[a] * (u[first + a] + v[child])
            v[p] = acc
        else:
            acc = 0.0
            for c in state._children[p]:
                acc += v[c]
            v[p] = acc

    for j in range(proc.num_decisions):
        first = int(proc.dp_first_seq[j])
        b = state.behavior[j]
        r = state.regrets[j]
        n = len(b)
        cf = np.empty(n)
        expected = 0.0
        for a in range(n):
            child = int(proc.seq_node[first + a])
            cf[a] = u[first + a] + v[child]
            expected += b[a] * cf[a]
        for a in range(n):
            r[a] = r[a] + (cf[a] - expected)


def scalar_observe_utility_plus(state: ScalarCfrState, u: np.ndarray) -> None:
    """Regret-matching-plus update: observe, then floor regrets at zero."""
    scalar_observe_utility(state, u)
    for r in state.regrets:
        for a in range(len(r)):
            if r[a] < 0.0:
                r[a] = 0.0


def scalar_observe_utility_dcfr(state: ScalarCfrState, u: np.ndarray,
                                alpha: float, beta: float) -> None:
    """Discounted update: observe, then scale regrets by sign-dependent
    factors of the current iteration count."""
    from .solvers import discount_factors

    scalar_observe_utility(state, u)
    pos_factor, neg_factor = discount_factors(state.t, alpha, beta)
    for r in state.regrets:
        for a in range(len(r)):
            if r[a] > 0.0:
                r[a] = r[a] * pos_factor
            elif r[a] < 0.0:
                r[a] = r[a] * neg_factor


def scalar_next_strategy_predictive(state: ScalarCfrState, m: np.ndarray,
                                    plus: bool = False) -> np.ndarray:
    """Back up regrets, observe the prediction, emit the resulting
    strategy, and restore the regrets."""
    snapshot = [r.copy() for r in state.regrets]
    if plus:
        scalar_observe_utility_plus(state, m)
    else:
        scalar_observe_utility(state, m)
    x = scalar_next_strategy(state)
    state.regrets = snapshot
    return x


# ---------------------------------------------------------------------------
# Tree-walk evaluation


def utility_gradient(game: Game, procs, player: int,
                     x_opponent: np.ndarray) -> np.ndarray:
    """Counterfactual utility vector for one player by direct tree walk.

    Accumulates, per terminal, chance reach times opponent sequence weight
    times the player's payoff, indexed by the player's last sequence.
    """
    proc_self = procs[player - 1]
    proc_opp = procs[2 - player]
    sign = 1.0 if player == 1 else -1.0
    reach = game.chance_reach()
    grad = np.zeros(proc_self.num_seqs)
    for z in game.terminal_ids():
        pay = sign * game.nodes[z].payoff
        grad[proc_self.game_seq[z]] += \
            reach[z] * x_opponent[proc_opp.game_seq[z]] * pay
    return grad


def expected_value_walk(game: Game, procs, x1: np.ndarray,
                        x2: np.ndarray) -> float:
    """Player-1 expected value of a profile by direct tree walk."""
    proc1, proc2 = procs
    reach = game.chance_reach()
    total = 0.0
    for z in game.terminal_ids():
        total += (reach[z] * game.nodes[z].payoff
                  * x1[proc1.game_seq[z]] * x2[proc2.game_seq[z]])
    return total


def scalar_best_response(proc: DecisionProcess,
                         gradient: np.ndarray) -> tuple[float, np.ndarray]:
    """Best response against a counterfactual utility gradient.

    Bottom-up over the decision process: maximize over actions at decision
    points, sum over signals at observation points.  Returns the attained
    value and the pure sequence-form strategy; ties pick the lowest action.
    """
    if gradient.shape[0] != proc.num_seqs:
        raise ValueError("gradient has the wrong length")
    children = _children_lists(proc)
    node_j = np.full(proc.num_nodes, -1, dtype=np.int64)
    node_j[proc.dp_node] = np.arange(proc.num_decisions)
    vals = np.zeros(proc.num_nodes)
    best = np.zeros(proc.num_decisions, dtype=np.int64)

    for p in range(proc.num_nodes - 1, -1, -1):
        kind = int(proc.kind[p])
        if kind == KIND_END:
            continue
        if kind == KIND_DECISION:
            j = int(node_j[p])
            first = int(proc.dp_first_seq[j])
            best_val = -np.inf
            for a in range(int(proc.dp_num_actions[j])):
                child = int(proc.seq_node[first + a])
                s = gradient[first + a] + vals[child]
                if s > best_val:
                    best_val = s
                    best[j] = a
            vals[p] = best_val
        else:
            vals[p] = sum(vals[c] for c in children[p])

    x = pure_strategy(proc, best)
    return float(gradient[0] + vals[0]), x


def pure_strategy(proc: DecisionProcess, actions) -> np.ndarray:
    """Sequence form of 'play actions[j] at decision point j'."""
    x = np.zeros(proc.num_seqs)
    x[0] = 1.0
    for j in range(proc.num_decisions):
        first = int(proc.dp_first_seq[j])
        x[first + int(actions[j])] = x[int(proc.dp_parent_seq[j])]
    return x


def enumerate_best_response(proc: DecisionProcess,
                            gradient: np.ndarray) -> float:
    """Brute-force best-response value over all pure strategies.

    Exponential in the number of decision points; only usable on toy games.
    """
    best = -np.inf
    ranges = [range(int(n)) for n in proc.dp_num_actions]
    for combo in itertools.product(*ranges):
        x = pure_strategy(proc, combo)
        val = float(np.dot(x, gradient))
        best = max(best, val)
    return best
