"""Regret-minimization solvers over sparse structural operators.

The strategy and regret updates are expressed entirely as matrix-vector
products and elementwise operations against an OperatorSet, so the chosen
backend decides serial or parallel execution:

* next_strategy: regret matching via positive part, block sums, and a
  Hadamard division with a uniform fallback, followed by a top-down pass
  over the level matrices and a per-sequence gather.
* observe_utility: scatter the utility to nodes, a bottom-up pass over the
  level matrices accumulating counterfactual values, a per-action gather,
  and the regret update with per-block expected values.

Variants decorate observe_utility (flooring for the plus family, sign-
dependent discounting for the discounted family) or wrap next_strategy
(predictive family: observe a prediction against backed-up regrets, emit
the resulting strategy, restore).  The two-player driver supports
simultaneous and alternating updates and records convergence checkpoints.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .games import Game, validate_game
from .kernels import Backend, CsrMatrix, serial_backend
from .decision_process import DecisionProcess, extract_decision_process
from .operators import OperatorSet, build_operators, build_payoff_matrix

VARIANTS = ("cfr", "cfr+", "dcfr", "pcfr", "pcfr+")

# Per-variant defaults: averaging exponent and update mode.
_VARIANT_DEFAULTS = {
    "cfr": (0.0, "sim"),
    "cfr+": (1.0, "alt"),
    "dcfr": (2.0, "alt"),
    "pcfr": (0.0, "sim"),
    "pcfr+": (2.0, "alt"),
}


@dataclass
class SolverConfig:
    """Variant selection plus its parameters.

    ``gamma`` (averaging exponent) and ``mode`` default per variant when
    left as None: cfr (0, sim), cfr+ (1, alt), dcfr (2, alt), pcfr (0, sim),
    pcfr+ (2, alt).
    """

    variant: str = "cfr"
    alpha: float = 1.5
    beta: float = 0.0
    gamma: float | None = None
    mode: str | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")
        default_gamma, default_mode = _VARIANT_DEFAULTS[self.variant]
        if self.gamma is None:
            self.gamma = default_gamma
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.mode is None:
            self.mode = default_mode
        if self.mode not in ("sim", "alt"):
            raise ValueError("mode must be 'sim' or 'alt'")

    @property
    def predictive(self) -> bool:
        return self.variant in ("pcfr", "pcfr+")


def discount_factors(t: int, alpha: float, beta: float) -> tuple[float, float]:
    """Sign-dependent regret multipliers t^e/(t^e+1), clamped on overflow.

    A power that overflows to infinity yields factor 1 (the large-exponent
    limit); t^e == 0 yields factor 0.
    """
    def factor(exponent: float) -> float:
        power = float(t) ** exponent
        if math.isinf(power):
            return 1.0
        return power / (power + 1.0)

    return factor(alpha), factor(beta)


class RegretState:
    """Mutable per-player solver state plus preallocated scratch vectors.

    Holds cumulative regrets over non-empty sequences, the previous
    behavioral strategy (uniform before the first iteration), the iteration
    counter, and the weighted average-strategy accumulator.  Scratch buffers
    are sized once so the per-iteration allocation footprint is zero and the
    space audit can sum fixed buffers.
    """

    def __init__(self, ops: OperatorSet, gamma: float = 0.0):
        n_seq = ops.num_seqs
        n_act = n_seq - 1
        n_nodes = ops.num_nodes
        n_dp = ops.proc.num_decisions
        self.ops = ops
        self.gamma = float(gamma)
        self.t = 1
        self.regrets = np.zeros(n_act)
        self.behavior = ops.uniform_default.copy()
        self.avg_accum = np.zeros(n_seq)
        self.avg_weight = 0.0
        self._pos = np.zeros(n_act)
        self._block = np.zeros(n_dp)
        self._expand = np.zeros(n_act)
        self._q = np.zeros(n_act)
        self._nodes_a = np.zeros(n_nodes)   # y / w
        self._nodes_b = np.zeros(n_nodes)   # v
        self._nodes_c = np.zeros(n_nodes)   # w + v
        self._snapshot = np.zeros(n_act)
        self._peek_b = np.zeros(n_act)

    def average_strategy(self) -> np.ndarray:
        """Normalized weighted average of emitted strategies; lies in the
        sequence-form polytope as a convex combination of its members."""
        if self.avg_weight == 0.0:
            raise ValueError("no strategies accumulated yet")
        return self.avg_accum / self.avg_weight

    def state_bytes(self) -> int:
        arrays = (self.regrets, self.behavior, self.avg_accum, self._pos,
                  self._block, self._expand, self._q, self._nodes_a,
                  self._nodes_b, self._nodes_c, self._snapshot, self._peek_b)
        return sum(a.nbytes for a in arrays)


def next_strategy(state: RegretState, ops: OperatorSet,
                  backend: Backend) -> np.ndarray:
    """Emit the sequence-form strategy for the current iteration.

    Regret-matches the floored cumulative regrets (uniform where a decision
    point has no positive regret), loads the result into the level matrices,
    pushes reach mass down the tree from the root, and reads the per-node
    mass back per sequence.  The behavioral strategy is kept for the paired
    utility observation and the strategy is folded into the running average
    with weight t^gamma.
    """
    if not np.isfinite(state.regrets).all():
        raise FloatingPointError("non-finite regrets")
    backend.positive_part(state.regrets, out=state._pos)
    backend.spmv(ops.block_sum, state._pos, out=state._block)
    backend.spmv_t(ops.block_sum, state._block, out=state._expand)
    backend.hadamard_div_or_default(state._pos, state._expand,
                                    ops.uniform_default, out=state.behavior)
    ops.refresh_levels(state.behavior, backend)

    y = state._nodes_a
    y[:] = 0.0
    y[0] = 1.0
    for level in ops.levels:
        backend.spmv(level.down,
                     ops.level_slice(y, level.depth_index - 1),
                     out=ops.level_slice(y, level.depth_index))
    x = backend.spmv_t(ops.seq_scatter, y)

    weight = float(state.t) ** state.gamma
    backend.axpy(weight, x, state.avg_accum, out=state.avg_accum)
    state.avg_weight += weight
    return x


def observe_utility(state: RegretState, u: np.ndarray, ops: OperatorSet,
                    backend: Backend) -> None:
    """Fold an observed utility vector into the cumulative regrets.

    Requires the paired next_strategy call for this iteration (the stored
    behavioral strategy weights both the bottom-up pass and the expected-
    value correction).
    """
    if u.shape[0] != ops.num_seqs:
        raise ValueError("utility vector has the wrong length")
    if not np.isfinite(u).all():
        raise FloatingPointError("non-finite utilities")
    ops.refresh_levels(state.behavior, backend)

    w = backend.spmv(ops.seq_scatter, u, out=state._nodes_a)
    v = state._nodes_b
    v[:] = 0.0
    for level in reversed(ops.levels):
        d = level.depth_index
        tmp = ops.level_slice(state._nodes_c, d)
        backend.add(ops.level_slice(w, d), ops.level_slice(v, d), out=tmp)
        backend.spmv(level.up, tmp, out=ops.level_slice(v, d - 1))

    wv = backend.add(w, v, out=state._nodes_c)
    q = backend.spmv_t(ops.behav_scatter, wv, out=state._q)
    backend.hadamard_mul(state.behavior, q, out=state._pos)
    backend.spmv(ops.block_sum, state._pos, out=state._block)
    backend.spmv_t(ops.block_sum, state._block, out=state._expand)
    backend.axpy(-1.0, state._expand, q, out=state._pos)
    backend.add(state.regrets, state._pos, out=state.regrets)


def observe_utility_plus(state: RegretState, u: np.ndarray, ops: OperatorSet,
                         backend: Backend) -> None:
    """Observe, then floor the cumulative regrets at zero."""
    observe_utility(state, u, ops, backend)
    backend.positive_part(state.regrets, out=state.regrets)


def observe_utility_dcfr(state: RegretState, u: np.ndarray, ops: OperatorSet,
                         backend: Backend, alpha: float = 1.5,
                         beta: float = 0.0) -> None:
    """Observe, then discount regrets by sign-dependent factors of t."""
    observe_utility(state, u, ops, backend)
    pos_factor, neg_factor = discount_factors(state.t, alpha, beta)
    backend.signed_scale(state.regrets, pos_factor, neg_factor,
                         out=state.regrets)


def next_strategy_predictive(state: RegretState, m: np.ndarray,
                             ops: OperatorSet, backend: Backend,
                             plus: bool = False) -> np.ndarray:
    """Emit the strategy implied by observing a prediction vector.

    Backs up the regrets, observes the prediction against the previous
    behavioral strategy (flooring when ``plus``), emits the strategy those
    predicted regrets induce, and restores the regrets.  The emitted
    strategy is the one actually played: it lands in the average and its
    behavior weights the following real observation.
    """
    np.copyto(state._snapshot, state.regrets)
    if plus:
        observe_utility_plus(state, m, ops, backend)
    else:
        observe_utility(state, m, ops, backend)
    x = next_strategy(state, ops, backend)
    np.copyto(state.regrets, state._snapshot)
    return x


def variant_next(state: RegretState, config: SolverConfig, ops: OperatorSet,
                 backend: Backend,
                 prediction: np.ndarray | None = None) -> np.ndarray:
    """next_strategy dispatched per variant (predictions for pcfr/pcfr+)."""
    if config.predictive:
        m = prediction if prediction is not None else np.zeros(ops.num_seqs)
        return next_strategy_predictive(state, m, ops, backend,
                                        plus=config.variant == "pcfr+")
    return next_strategy(state, ops, backend)


def variant_observe(state: RegretState, config: SolverConfig, u: np.ndarray,
                    ops: OperatorSet, backend: Backend) -> None:
    """observe_utility dispatched per variant."""
    if config.variant in ("cfr+", "pcfr+"):
        observe_utility_plus(state, u, ops, backend)
    elif config.variant == "dcfr":
        observe_utility_dcfr(state, u, ops, backend, config.alpha, config.beta)
    else:
        observe_utility(state, u, ops, backend)


def current_strategy(state: RegretState, ops: OperatorSet,
                     backend: Backend) -> np.ndarray:
    """Sequence-form strategy the current regrets induce, without emitting.

    Unlike next_strategy this has no side effects: nothing is averaged and
    the stored behavioral strategy is untouched.  The alternating driver
    uses it to expose a player's post-update strategy to the opponent.
    """
    backend.positive_part(state.regrets, out=state._pos)
    backend.spmv(ops.block_sum, state._pos, out=state._block)
    backend.spmv_t(ops.block_sum, state._block, out=state._expand)
    backend.hadamard_div_or_default(state._pos, state._expand,
                                    ops.uniform_default, out=state._peek_b)
    ops.refresh_levels(state._peek_b, backend)
    y = state._nodes_a
    y[:] = 0.0
    y[0] = 1.0
    for level in ops.levels:
        backend.spmv(level.down,
                     ops.level_slice(y, level.depth_index - 1),
                     out=ops.level_slice(y, level.depth_index))
    return backend.spmv_t(ops.seq_scatter, y)


def uniform_sequence_strategy(ops: OperatorSet, backend: Backend) -> np.ndarray:
    """Sequence form of the uniform behavioral profile."""
    ops.refresh_levels(ops.uniform_default, backend)
    y = np.zeros(ops.num_nodes)
    y[0] = 1.0
    for level in ops.levels:
        backend.spmv(level.down, ops.level_slice(y, level.depth_index - 1),
                     out=ops.level_slice(y, level.depth_index))
    return backend.spmv_t(ops.seq_scatter, y)


# ---------------------------------------------------------------------------
# Two-player driver


class GameBundle:
    """Everything iteration-invariant for solving one game: both decision
    processes, their operator sets, and the payoff matrix with its stored
    transpose."""

    def __init__(self, game: Game, validate: bool = True):
        if validate:
            validate_game(game).raise_if_failed()
        self.game = game
        self.procs = (extract_decision_process(game, 1),
                      extract_decision_process(game, 2))
        self.ops = (build_operators(self.procs[0]),
                    build_operators(self.procs[1]))
        self.payoff = build_payoff_matrix(game, *self.procs)
        self.payoff_t = self.payoff.transposed()

    @property
    def num_proc_nodes(self) -> int:
        """Combined decision-process size |P1| + |P2|."""
        return self.procs[0].num_nodes + self.procs[1].num_nodes

    def nbytes(self) -> int:
        return (self.ops[0].nbytes() + self.ops[1].nbytes()
                + self.payoff.nbytes() + self.payoff_t.nbytes())


def build_bundle(game: Game, validate: bool = True) -> GameBundle:
    return GameBundle(game, validate=validate)


@dataclass
class RunResult:
    """Average profile, per-checkpoint records, and the solving context."""

    bundle: GameBundle
    config: SolverConfig
    average: tuple[np.ndarray, np.ndarray]
    last_iterates: tuple[np.ndarray, np.ndarray]
    records: list[metrics.ConvergenceRecord]
    iterations: int


def _step(bundle: GameBundle, config: SolverConfig, backend: Backend,
          s1: RegretState, s2: RegretState, pred1, pred2):
    """One full iteration; returns the emitted strategies and utilities."""
    ops1, ops2 = bundle.ops
    if config.mode == "sim":
        x1 = variant_next(s1, config, ops1, backend, pred1)
        x2 = variant_next(s2, config, ops2, backend, pred2)
        u1 = backend.spmv(bundle.payoff, x2)
        u2 = backend.scale(-1.0, backend.spmv(bundle.payoff_t, x1))
        variant_observe(s1, config, u1, ops1, backend)
        variant_observe(s2, config, u2, ops2, backend)
    else:
        x1 = variant_next(s1, config, ops1, backend, pred1)
        x2 = variant_next(s2, config, ops2, backend, pred2)
        u1 = backend.spmv(bundle.payoff, x2)
        variant_observe(s1, config, u1, ops1, backend)
        x1_post = current_strategy(s1, ops1, backend)
        u2 = backend.scale(-1.0, backend.spmv(bundle.payoff_t, x1_post))
        variant_observe(s2, config, u2, ops2, backend)
    s1.t += 1
    s2.t += 1
    return x1, x2, u1, u2


def run(game: Game | GameBundle, config: SolverConfig,
        iterations: int | None = None, seconds: float | None = None,
        checkpoints=None, backend: Backend | None = None,
        record_current: bool = True) -> RunResult:
    """Solve a two-player zero-sum game and record convergence.

    Budget is an iteration count, a wall-clock allowance, or both
    (whichever ends first; at least one must be given and positive).  In
    simultaneous mode both players emit strategies, utilities are the
    payoff products against the other's emitted strategy, and both observe.
    In alternating mode player 1 updates first against player 2's strategy
    from the previous update, and player 2 then updates against player 1's
    post-update strategy (a side-effect-free read of the freshly updated
    regrets), which is what gives alternation its empirical edge.  The
    iteration counter advances once per full iteration in both modes.

    Exploitability at checkpoints is measured on the normalized average
    profile; the current iterates' exploitability is logged alongside.
    """
    if iterations is None and seconds is None:
        raise ValueError("budget must be positive: give iterations and/or seconds")
    if iterations is not None and iterations <= 0:
        raise ValueError("budget must be positive: iterations <= 0")
    if seconds is not None and seconds <= 0:
        raise ValueError("budget must be positive: seconds <= 0")

    bundle = game if isinstance(game, GameBundle) else GameBundle(game)
    backend = backend or serial_backend()
    ops1, ops2 = bundle.ops
    s1 = RegretState(ops1, config.gamma)
    s2 = RegretState(ops2, config.gamma)
    schedule = set(int(c) for c in checkpoints) if checkpoints else set()

    x1 = x2 = None
    pred1 = pred2 = None
    records: list[metrics.ConvergenceRecord] = []
    peak_bytes = bundle.nbytes() + s1.state_bytes() + s2.state_bytes()

    def record(t: int) -> None:
        avg = (s1.average_strategy(), s2.average_strategy())
        expl = metrics.exploitability(bundle, avg[0], avg[1])
        cur = metrics.exploitability(bundle, x1, x2) if record_current else math.nan
        records.append(metrics.ConvergenceRecord(
            iteration=t, seconds=time.perf_counter() - start,
            exploitability=expl, current_exploitability=cur,
            work=backend.work, peak_bytes=peak_bytes))

    start = time.perf_counter()
    t = 0
    while True:
        t += 1
        x1, x2, u1, u2 = _step(bundle, config, backend, s1, s2, pred1, pred2)
        pred1, pred2 = u1, u2

        done = (iterations is not None and t >= iterations) or \
            (seconds is not None and time.perf_counter() - start >= seconds)
        if t in schedule or done:
            record(t)
        if done:
            break

    return RunResult(bundle=bundle, config=config,
                     average=(s1.average_strategy(), s2.average_strategy()),
                     last_iterates=(x1, x2), records=records, iterations=t)


@dataclass
class IterationBenchmark:
    """Per-iteration timing and resource figures for one backend."""

    proc_nodes: int            # |P1| + |P2|
    backend_kind: str
    workers: int
    times: list[float]         # seconds per measured iteration
    work_per_iteration: int
    state_bytes: int

    @property
    def mean_seconds(self) -> float:
        return float(np.mean(self.times))

    @property
    def stderr_seconds(self) -> float:
        if len(self.times) < 2:
            return 0.0
        return float(np.std(self.times, ddof=1) / math.sqrt(len(self.times)))


def benchmark_iterations(bundle: GameBundle, config: SolverConfig,
                         backend: Backend, warmup: int = 2,
                         measured: int = 8) -> IterationBenchmark:
    """Time full solver iterations on one backend.

    Runs ``warmup`` untimed iterations (kernel compilation, cache warming),
    then times ``measured`` iterations individually.  The work figure is the
    counter delta of the last measured iteration; iterations are structurally
    identical so the delta is constant.
    """
    if measured < 1:
        raise ValueError("measured iterations must be >= 1")
    s1 = RegretState(bundle.ops[0], config.gamma)
    s2 = RegretState(bundle.ops[1], config.gamma)
    pred1 = pred2 = None
    for _ in range(warmup):
        _, _, pred1, pred2 = _step(bundle, config, backend, s1, s2, pred1, pred2)
    times = []
    work_per_iteration = 0
    for _ in range(measured):
        work_before = backend.work
        tic = time.perf_counter()
        _, _, pred1, pred2 = _step(bundle, config, backend, s1, s2, pred1, pred2)
        times.append(time.perf_counter() - tic)
        work_per_iteration = backend.work - work_before
    state_bytes = bundle.nbytes() + s1.state_bytes() + s2.state_bytes()
    return IterationBenchmark(
        proc_nodes=bundle.num_proc_nodes, backend_kind=backend.kind,
        workers=backend.workers, times=times,
        work_per_iteration=work_per_iteration, state_bytes=state_bytes)
