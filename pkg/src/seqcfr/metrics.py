"""Expected value, exploitability, and convergence records.

Exploitability is reported as the mean of the two players' best-response
gains (NashConv / 2): zero exactly at a Nash equilibrium of the zero-sum
game, positive otherwise.  Best responses come from the scalar bottom-up
oracle so the metric stays independent of the solver's update path.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .kernels import Backend, CsrMatrix, serial_backend
from .oracle import scalar_best_response

CSV_HEADER = ("iteration", "seconds", "exploitability",
              "current_exploitability", "work", "peak_bytes")


@dataclass
class ConvergenceRecord:
    """One checkpoint of a solver run."""

    iteration: int
    seconds: float
    exploitability: float
    current_exploitability: float
    work: int
    peak_bytes: int

    def row(self) -> list:
        return [self.iteration, repr(self.seconds), repr(self.exploitability),
                repr(self.current_exploitability), self.work, self.peak_bytes]


def records_to_csv(records) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.row())
    return out.getvalue()


def expected_value(payoff: CsrMatrix, x1: np.ndarray, x2: np.ndarray,
                   backend: Backend | None = None) -> float:
    """Player-1 expected value x1 . (U @ x2); player 2 receives the negation."""
    backend = backend or serial_backend()
    if x1.shape[0] != payoff.rows:
        raise ValueError("dimension mismatch: x1 does not match the payoff rows")
    return backend.dot(x1, backend.spmv(payoff, x2))


def best_response_values(bundle, x1: np.ndarray,
                         x2: np.ndarray,
                         backend: Backend | None = None) -> tuple[float, float]:
    """Each player's best attainable value against the other's strategy."""
    backend = backend or serial_backend()
    grad1 = backend.spmv(bundle.payoff, x2)
    br1, _ = scalar_best_response(bundle.procs[0], grad1)
    grad2 = backend.scale(-1.0, backend.spmv(bundle.payoff_t, x1))
    br2, _ = scalar_best_response(bundle.procs[1], grad2)
    return br1, br2


def exploitability(bundle, x1: np.ndarray, x2: np.ndarray,
                   backend: Backend | None = None) -> float:
    """Mean best-response gain of the profile; zero iff a Nash equilibrium."""
    br1, br2 = best_response_values(bundle, x1, x2, backend)
    return (br1 + br2) / 2.0
