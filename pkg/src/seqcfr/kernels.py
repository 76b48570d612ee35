"""CSR sparse-matrix and dense-vector kernels with two backends.

The serial backend runs plain compiled loops; the parallel backend runs the
same loops with row/element-level parallelism on a worker pool created once
per process.  Every output element is written by exactly one row of one
loop iteration, so each backend is bitwise deterministic for any worker
count, and both backends agree far inside the 1e-12 relative tolerance the
solver contracts require.

Each backend carries a work counter that is exact by construction: a
matrix-vector product adds nnz(M) (one multiply-add per stored entry) and
every elementwise operation adds the vector length.  Copies and zero-fills
are not counted.

All data is double precision; vectors are one-dimensional float64 arrays.
"""

from __future__ import annotations

import os

# Allow oversubscribed worker counts (benchmarks may request more workers
# than cores); must be configured before numba first initializes.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(os.cpu_count() or 1, 16)))

import numpy as np
from numba import config as _numba_config
from numba import get_num_threads, njit, prange, set_num_threads

WORKERS_ENV = "SEQCFR_WORKERS"


class CsrMatrix:
    """Compressed-sparse-row matrix of float64 values.

    Row offsets are non-decreasing with first 0 and last nnz; column indices
    are strictly increasing within each row.  Construction validates these
    invariants unless ``check=False``.
    """

    __slots__ = ("rows", "cols", "indptr", "indices", "data", "_transpose")

    def __init__(self, rows: int, cols: int, indptr, indices, data,
                 check: bool = True):
        self.rows = int(rows)
        self.cols = int(cols)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self._transpose: CsrMatrix | None = None
        if check:
            self._validate()

    def _validate(self) -> None:
        if self.indptr.shape != (self.rows + 1,):
            raise ValueError("indptr must have rows+1 entries")
        if self.indptr[0] != 0 or self.indptr[-1] != len(self.data):
            raise ValueError("indptr must start at 0 and end at nnz")
        if (np.diff(self.indptr) < 0).any():
            raise ValueError("indptr must be non-decreasing")
        if len(self.indices) != len(self.data):
            raise ValueError("indices and data lengths differ")
        if self.indices.size:
            if self.indices.min() < 0 or self.indices.max() >= self.cols:
                raise ValueError("column index out of range")
            starts = self.indptr[1:-1]
            intra = np.ones(len(self.indices), dtype=bool)
            intra[starts[starts < len(self.indices)]] = False
            bad = np.diff(self.indices) <= 0
            if (bad & intra[1:]).any():
                raise ValueError("column indices must be strictly increasing per row")

    @property
    def nnz(self) -> int:
        return len(self.data)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @classmethod
    def identity(cls, n: int) -> "CsrMatrix":
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n), check=False)

    @classmethod
    def from_dense(cls, array) -> "CsrMatrix":
        a = np.asarray(array, dtype=np.float64)
        rows, cols = a.shape
        r, c = np.nonzero(a)
        indptr = np.zeros(rows + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        return cls(rows, cols, np.cumsum(indptr), c, a[r, c])

    @classmethod
    def from_coo(cls, rows: int, cols: int, r, c, v,
                 sum_duplicates: bool = True) -> "CsrMatrix":
        """Build from coordinate triplets; duplicate cells are summed."""
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        v = np.asarray(v, dtype=np.float64)
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
        if sum_duplicates and len(r):
            fresh = np.empty(len(r), dtype=bool)
            fresh[0] = True
            fresh[1:] = (np.diff(r) != 0) | (np.diff(c) != 0)
            group = np.cumsum(fresh) - 1
            v = np.bincount(group, weights=v, minlength=group[-1] + 1)
            r, c = r[fresh], c[fresh]
        indptr = np.zeros(rows + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        return cls(rows, cols, np.cumsum(indptr), c, v)

    def transposed(self) -> "CsrMatrix":
        """Explicit transpose, built once and cached."""
        if self._transpose is None:
            row_of = np.repeat(np.arange(self.rows, dtype=np.int64),
                               np.diff(self.indptr))
            order = np.argsort(self.indices, kind="stable")
            indptr = np.zeros(self.cols + 1, dtype=np.int64)
            counts = np.bincount(self.indices, minlength=self.cols)
            indptr[1:] = np.cumsum(counts)
            t = CsrMatrix(self.cols, self.rows, indptr, row_of[order],
                          self.data[order], check=False)
            t._transpose = self
            self._transpose = t
        return self._transpose

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        for i in range(self.rows):
            for k in range(self.indptr[i], self.indptr[i + 1]):
                out[i, self.indices[k]] = self.data[k]
        return out

    def nbytes(self) -> int:
        return self.indptr.nbytes + self.indices.nbytes + self.data.nbytes

    def __repr__(self) -> str:
        return f"CsrMatrix({self.rows}x{self.cols}, nnz={self.nnz})"


# ---------------------------------------------------------------------------
# Compiled loops.  Serial and parallel bodies are kept textually identical so
# the only difference is the scheduling of independent iterations.


@njit(cache=True)
def _spmv_serial(indptr, indices, data, x, out):
    for i in range(out.shape[0]):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        out[i] = acc


@njit(parallel=True, cache=True)
def _spmv_parallel(indptr, indices, data, x, out):
    for i in prange(out.shape[0]):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        out[i] = acc


@njit(cache=True)
def _add_serial(x, y, out):
    for i in range(out.shape[0]):
        out[i] = x[i] + y[i]


@njit(parallel=True, cache=True)
def _add_parallel(x, y, out):
    for i in prange(out.shape[0]):
        out[i] = x[i] + y[i]


@njit(cache=True)
def _axpy_serial(a, x, y, out):
    for i in range(out.shape[0]):
        out[i] = a * x[i] + y[i]


@njit(parallel=True, cache=True)
def _axpy_parallel(a, x, y, out):
    for i in prange(out.shape[0]):
        out[i] = a * x[i] + y[i]


@njit(cache=True)
def _mul_serial(x, y, out):
    for i in range(out.shape[0]):
        out[i] = x[i] * y[i]


@njit(parallel=True, cache=True)
def _mul_parallel(x, y, out):
    for i in prange(out.shape[0]):
        out[i] = x[i] * y[i]


@njit(cache=True)
def _div_default_serial(x, y, default, out):
    for i in range(out.shape[0]):
        out[i] = x[i] / y[i] if y[i] != 0.0 else default[i]


@njit(parallel=True, cache=True)
def _div_default_parallel(x, y, default, out):
    for i in prange(out.shape[0]):
        out[i] = x[i] / y[i] if y[i] != 0.0 else default[i]


@njit(cache=True)
def _relu_serial(x, out):
    for i in range(out.shape[0]):
        v = x[i]
        out[i] = v if v > 0.0 else 0.0


@njit(parallel=True, cache=True)
def _relu_parallel(x, out):
    for i in prange(out.shape[0]):
        v = x[i]
        out[i] = v if v > 0.0 else 0.0


@njit(cache=True)
def _scale_serial(a, x, out):
    for i in range(out.shape[0]):
        out[i] = a * x[i]


@njit(parallel=True, cache=True)
def _scale_parallel(a, x, out):
    for i in prange(out.shape[0]):
        out[i] = a * x[i]


@njit(cache=True)
def _gather_serial(src, values, out):
    for i in range(out.shape[0]):
        s = src[i]
        out[i] = values[s] if s >= 0 else 1.0


@njit(parallel=True, cache=True)
def _gather_parallel(src, values, out):
    for i in prange(out.shape[0]):
        s = src[i]
        out[i] = values[s] if s >= 0 else 1.0


@njit(cache=True)
def _signed_scale_serial(x, pos_factor, neg_factor, out):
    for i in range(out.shape[0]):
        v = x[i]
        if v > 0.0:
            out[i] = v * pos_factor
        elif v < 0.0:
            out[i] = v * neg_factor
        else:
            out[i] = v


@njit(parallel=True, cache=True)
def _signed_scale_parallel(x, pos_factor, neg_factor, out):
    for i in prange(out.shape[0]):
        v = x[i]
        if v > 0.0:
            out[i] = v * pos_factor
        elif v < 0.0:
            out[i] = v * neg_factor
        else:
            out[i] = v


@njit(cache=True)
def _dot_serial(x, y):
    acc = 0.0
    for i in range(x.shape[0]):
        acc += x[i] * y[i]
    return acc


# ---------------------------------------------------------------------------
# Backends


def _max_workers() -> int:
    return int(_numba_config.NUMBA_NUM_THREADS)


class Backend:
    """Kernel dispatcher with an exact work counter.

    ``kind`` is "serial" or "parallel"; a parallel backend pins the shared
    worker pool to its worker count before each kernel batch.  Results are
    deterministic per backend: same inputs give bitwise-identical outputs
    regardless of worker count.
    """

    def __init__(self, kind: str, workers: int = 1):
        if kind not in ("serial", "parallel"):
            raise ValueError("kind must be 'serial' or 'parallel'")
        self.kind = kind
        self.workers = min(int(workers), _max_workers()) if kind == "parallel" else 1
        self.work = 0

    def reset_work(self) -> None:
        self.work = 0

    def _prepare(self) -> bool:
        if self.kind == "parallel":
            if get_num_threads() != self.workers:
                set_num_threads(self.workers)
            return True
        return False

    @staticmethod
    def _out(out, n: int) -> np.ndarray:
        if out is None:
            return np.empty(n)
        if out.shape[0] != n:
            raise ValueError("output vector has the wrong length")
        return out

    # -- sparse ------------------------------------------------------------

    def spmv(self, m: CsrMatrix, x: np.ndarray, out=None) -> np.ndarray:
        """out = m @ x; adds nnz(m) to the work counter."""
        if x.shape[0] != m.cols:
            raise ValueError(
                f"dimension mismatch: matrix is {m.rows}x{m.cols}, vector has {x.shape[0]}")
        out = self._out(out, m.rows)
        if self._prepare():
            _spmv_parallel(m.indptr, m.indices, m.data, x, out)
        else:
            _spmv_serial(m.indptr, m.indices, m.data, x, out)
        self.work += m.nnz
        return out

    def spmv_t(self, m: CsrMatrix, x: np.ndarray, out=None) -> np.ndarray:
        """out = m.T @ x via the stored explicit transpose; adds nnz(m)."""
        if x.shape[0] != m.rows:
            raise ValueError(
                f"dimension mismatch: matrix is {m.rows}x{m.cols}, vector has {x.shape[0]}")
        return self.spmv(m.transposed(), x, out)

    # -- elementwise ---------------------------------------------------------

    def _check_pair(self, x, y) -> None:
        if x.shape[0] != y.shape[0]:
            raise ValueError("dimension mismatch: vectors differ in length")

    def add(self, x, y, out=None) -> np.ndarray:
        self._check_pair(x, y)
        out = self._out(out, x.shape[0])
        if self._prepare():
            _add_parallel(x, y, out)
        else:
            _add_serial(x, y, out)
        self.work += x.shape[0]
        return out

    def axpy(self, a: float, x, y, out=None) -> np.ndarray:
        """out = a*x + y."""
        self._check_pair(x, y)
        out = self._out(out, x.shape[0])
        if self._prepare():
            _axpy_parallel(float(a), x, y, out)
        else:
            _axpy_serial(float(a), x, y, out)
        self.work += x.shape[0]
        return out

    def hadamard_mul(self, x, y, out=None) -> np.ndarray:
        self._check_pair(x, y)
        out = self._out(out, x.shape[0])
        if self._prepare():
            _mul_parallel(x, y, out)
        else:
            _mul_serial(x, y, out)
        self.work += x.shape[0]
        return out

    def hadamard_div_or_default(self, x, y, default, out=None) -> np.ndarray:
        """Elementwise x/y, substituting default where the denominator is 0."""
        self._check_pair(x, y)
        self._check_pair(x, default)
        out = self._out(out, x.shape[0])
        if self._prepare():
            _div_default_parallel(x, y, default, out)
        else:
            _div_default_serial(x, y, default, out)
        self.work += x.shape[0]
        return out

    def positive_part(self, x, out=None) -> np.ndarray:
        out = self._out(out, x.shape[0])
        if self._prepare():
            _relu_parallel(x, out)
        else:
            _relu_serial(x, out)
        self.work += x.shape[0]
        return out

    def scale(self, a: float, x, out=None) -> np.ndarray:
        out = self._out(out, x.shape[0])
        if self._prepare():
            _scale_parallel(float(a), x, out)
        else:
            _scale_serial(float(a), x, out)
        self.work += x.shape[0]
        return out

    def signed_scale(self, x, pos_factor: float, neg_factor: float,
                     out=None) -> np.ndarray:
        """Scale positive entries by pos_factor, negative by neg_factor;
        zeros pass through unchanged."""
        out = self._out(out, x.shape[0])
        if self._prepare():
            _signed_scale_parallel(x, float(pos_factor), float(neg_factor), out)
        else:
            _signed_scale_serial(x, float(pos_factor), float(neg_factor), out)
        self.work += x.shape[0]
        return out

    def gather_weights(self, src, values, out=None) -> np.ndarray:
        """out[i] = values[src[i]], or 1.0 where src[i] is negative."""
        out = self._out(out, src.shape[0])
        if self._prepare():
            _gather_parallel(src, values, out)
        else:
            _gather_serial(src, values, out)
        self.work += src.shape[0]
        return out

    def dot(self, x, y) -> float:
        """Sequential dot product in both backends (deterministic reduction)."""
        self._check_pair(x, y)
        self.work += x.shape[0]
        return float(_dot_serial(x, y))

    def __repr__(self) -> str:
        return f"Backend({self.kind}, workers={self.workers}, work={self.work})"


def serial_backend() -> Backend:
    return Backend("serial")


def parallel_backend(workers: int | None = None) -> Backend:
    """Parallel backend; worker count from the argument, the SEQCFR_WORKERS
    environment variable, or the machine's core count, in that order."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return Backend("parallel", workers)
