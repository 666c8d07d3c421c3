"""Exact rational and integral sparse linear algebra.

Every homology dimension in the engine is a rank computed here. Vectors are
`SparseRow`s (key -> nonzero Fraction); matrices are stored row-wise.
"""

import heapq
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

from sympy.polys.domains import ZZ

from cyclic_engine.validation import CyclicEngineValidationError

logger = logging.getLogger(__name__)

Scalar = int | Fraction


class SparseRow(dict):
    """Dictionary key -> Fraction where zero values are never stored.

    Missing keys read as 0. Supports the vector space operations used by
    chains, forms and cochains throughout the package.
    """

    def __init__(self, data: Mapping | Iterable[tuple[Hashable, Scalar]] = ()):
        if isinstance(data, SparseRow):
            super().__init__(data)
        else:
            super().__init__()
            self.__iadd__(data)

    def __getitem__(self, key: Hashable) -> Fraction:
        return self.get(key, Fraction(0))

    def copy(self) -> "SparseRow":
        return SparseRow(self)

    def __mul__(self, n: Scalar) -> "SparseRow":
        if n == 0:
            return SparseRow()
        return SparseRow((k, n * x) for (k, x) in self.items())

    def __rmul__(self, n: Scalar) -> "SparseRow":
        return self.__mul__(n)

    def __imul__(self, n: Scalar) -> "SparseRow":
        if n == 0:
            self.clear()
        else:
            for k, x in self.items():
                self[k] = x * n
        return self

    def __neg__(self) -> "SparseRow":
        return self * -1

    def iadd_coef(self, coef: Scalar, other: Mapping) -> "SparseRow":
        """self += coef * other"""
        if coef == 0:
            return self
        for k, x in other.items():
            if x == 0:
                continue
            x2 = self.get(k, 0) + coef * x
            if x2 == 0:
                del self[k]
            else:
                self[k] = x2 if isinstance(x2, Fraction) else Fraction(x2)
        return self

    def __iadd__(self, other: Mapping | Iterable[tuple[Hashable, Scalar]]) -> "SparseRow":  # type: ignore[override]
        items = other.items() if isinstance(other, Mapping) else other
        for k, x in items:
            if x == 0:
                continue
            if not isinstance(x, Fraction):
                x = Fraction(x)
            x2 = self.get(k, 0) + x
            if x2 == 0:
                del self[k]
            else:
                self[k] = x2
        return self

    def __add__(self, other: Mapping) -> "SparseRow":  # type: ignore[override]
        res = SparseRow(self)
        res.__iadd__(other)
        return res

    def __isub__(self, other: Mapping) -> "SparseRow":
        return self.iadd_coef(-1, other)

    def __sub__(self, other: Mapping) -> "SparseRow":
        res = SparseRow(self)
        res.iadd_coef(-1, other)
        return res

    def max_abs(self) -> Fraction:
        return max((abs(x) for x in self.values()), default=Fraction(0))

    def sorted_items(self) -> list[tuple[Hashable, Fraction]]:
        return sorted(self.items(), key=lambda kv: kv[0])


def _check_index(value: int, bound: int, what: str) -> None:
    if not 0 <= value < bound:
        raise CyclicEngineValidationError(f"{what} index {value} out of bounds [0, {bound}).")


@dataclass(frozen=True, eq=False)
class SparseRationalMatrix:
    """Exact sparse matrix with rows stored as `SparseRow(col -> Fraction)`."""

    rows: int
    cols: int
    row_data: dict[int, SparseRow] = field(default_factory=dict)

    @classmethod
    def zero(cls, rows: int, cols: int) -> "SparseRationalMatrix":
        return cls(rows, cols, {})

    @classmethod
    def identity(cls, n: int) -> "SparseRationalMatrix":
        return cls(n, n, {i: SparseRow({i: 1}) for i in range(n)})

    @classmethod
    def from_entries(
        cls, rows: int, cols: int, entries: Mapping[tuple[int, int], Scalar]
    ) -> "SparseRationalMatrix":
        data: dict[int, SparseRow] = {}
        for (r, c), value in entries.items():
            _check_index(r, rows, "row")
            _check_index(c, cols, "column")
            data.setdefault(r, SparseRow()).iadd_coef(1, {c: value})
        return cls(rows, cols, {r: row for r, row in data.items() if row})

    @classmethod
    def from_dense(cls, dense: Sequence[Sequence[Scalar]]) -> "SparseRationalMatrix":
        rows = len(dense)
        cols = len(dense[0]) if rows else 0
        data = {}
        for r, line in enumerate(dense):
            if len(line) != cols:
                raise CyclicEngineValidationError("Ragged dense matrix.")
            row = SparseRow((c, v) for c, v in enumerate(line))
            if row:
                data[r] = row
        return cls(rows, cols, data)

    @classmethod
    def from_columns(
        cls, rows: int, columns: Sequence[Mapping[int, Scalar]]
    ) -> "SparseRationalMatrix":
        """Builds a matrix whose j-th column is `columns[j]` (keyed by row index)."""
        data: dict[int, SparseRow] = {}
        for c, column in enumerate(columns):
            for r, value in column.items():
                if value == 0:
                    continue
                _check_index(r, rows, "row")
                data.setdefault(r, SparseRow())[c] = Fraction(value)
        return cls(rows, len(columns), data)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def entries(self) -> dict[tuple[int, int], Fraction]:
        return {(r, c): v for r, row in self.row_data.items() for c, v in row.items()}

    def nnz(self) -> int:
        return sum(len(row) for row in self.row_data.values())

    def get(self, r: int, c: int) -> Fraction:
        row = self.row_data.get(r)
        return row[c] if row is not None else Fraction(0)

    def is_zero(self) -> bool:
        return not any(self.row_data.values())

    def transpose(self) -> "SparseRationalMatrix":
        data: dict[int, SparseRow] = {}
        for r, row in self.row_data.items():
            for c, v in row.items():
                data.setdefault(c, SparseRow())[r] = v
        return SparseRationalMatrix(self.cols, self.rows, data)

    def columns(self) -> list[SparseRow]:
        cols = [SparseRow() for _ in range(self.cols)]
        for r, row in self.row_data.items():
            for c, v in row.items():
                cols[c][r] = v
        return cols

    def matvec(self, x: Mapping[int, Scalar]) -> SparseRow:
        out = SparseRow()
        for r, row in self.row_data.items():
            acc = Fraction(0)
            for c, v in row.items():
                xc = x.get(c, 0)
                if xc:
                    acc += v * xc
            if acc:
                out[r] = acc
        return out

    def matmul(self, other: "SparseRationalMatrix") -> "SparseRationalMatrix":
        if self.cols != other.rows:
            raise CyclicEngineValidationError(
                f"Cannot multiply {self.shape} by {other.shape} matrices."
            )
        data: dict[int, SparseRow] = {}
        for r, row in self.row_data.items():
            acc = SparseRow()
            for k, v in row.items():
                other_row = other.row_data.get(k)
                if other_row:
                    acc.iadd_coef(v, other_row)
            if acc:
                data[r] = acc
        return SparseRationalMatrix(self.rows, other.cols, data)

    def __matmul__(self, other: "SparseRationalMatrix") -> "SparseRationalMatrix":
        return self.matmul(other)

    def add(self, other: "SparseRationalMatrix", coef: Scalar = 1) -> "SparseRationalMatrix":
        if self.shape != other.shape:
            raise CyclicEngineValidationError(
                f"Cannot add {self.shape} and {other.shape} matrices."
            )
        data = {r: SparseRow(row) for r, row in self.row_data.items()}
        for r, row in other.row_data.items():
            data.setdefault(r, SparseRow()).iadd_coef(coef, row)
        return SparseRationalMatrix(self.rows, self.cols, {r: v for r, v in data.items() if v})

    def scale(self, coef: Scalar) -> "SparseRationalMatrix":
        if coef == 0:
            return SparseRationalMatrix.zero(self.rows, self.cols)
        return SparseRationalMatrix(
            self.rows, self.cols, {r: row * coef for r, row in self.row_data.items()}
        )

    def submatrix(self, row_keys: Sequence[int], col_keys: Sequence[int]) -> "SparseRationalMatrix":
        """Rows and columns picked (and renumbered) in the given order."""
        col_pos = {c: j for j, c in enumerate(col_keys)}
        data = {}
        for i, r in enumerate(row_keys):
            row = self.row_data.get(r)
            if not row:
                continue
            picked = SparseRow((col_pos[c], v) for c, v in row.items() if c in col_pos)
            if picked:
                data[i] = picked
        return SparseRationalMatrix(len(row_keys), len(col_keys), data)

    def to_dense(self) -> list[list[Fraction]]:
        dense = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            dense[r][c] = v
        return dense

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseRationalMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __repr__(self) -> str:
        return f"SparseRationalMatrix({self.rows}x{self.cols}, nnz={self.nnz()})"


@dataclass(frozen=True, eq=False)
class IntegerMatrix:
    rows: int
    cols: int
    entries: dict[tuple[int, int], int] = field(default_factory=dict)

    @classmethod
    def from_dense(cls, dense: Sequence[Sequence[int]]) -> "IntegerMatrix":
        rows = len(dense)
        cols = len(dense[0]) if rows else 0
        return cls(
            rows,
            cols,
            {(r, c): int(v) for r, line in enumerate(dense) for c, v in enumerate(line) if v},
        )

    @classmethod
    def identity(cls, n: int) -> "IntegerMatrix":
        return cls(n, n, {(i, i): 1 for i in range(n)})

    def to_dense(self) -> list[list[int]]:
        dense = [[0] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            dense[r][c] = v
        return dense

    def transpose(self) -> "IntegerMatrix":
        return IntegerMatrix(self.cols, self.rows, {(c, r): v for (r, c), v in self.entries.items()})

    def matmul(self, other: "IntegerMatrix") -> "IntegerMatrix":
        if self.cols != other.rows:
            raise CyclicEngineValidationError(
                f"Cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols} matrices."
            )
        by_row: dict[int, list[tuple[int, int]]] = defaultdict(list)
        for (r, c), v in other.entries.items():
            by_row[r].append((c, v))
        out: dict[tuple[int, int], int] = defaultdict(int)
        for (r, k), v in self.entries.items():
            for c, w in by_row.get(k, ()):
                out[(r, c)] += v * w
        return IntegerMatrix(self.rows, other.cols, {k: v for k, v in out.items() if v})

    def matvec(self, x: Sequence[int]) -> list[int]:
        out = [0] * self.rows
        for (r, c), v in self.entries.items():
            out[r] += v * x[c]
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntegerMatrix):
            return NotImplemented
        return (self.rows, self.cols, self.entries) == (other.rows, other.cols, other.entries)


# ---------------------------------------------------------------------------
# rank


def _integer_row(row: Mapping[int, Fraction]) -> dict[int, int]:
    denominator = 1
    for v in row.values():
        denominator = denominator * v.denominator // gcd(denominator, v.denominator)
    ints = {c: int(v * denominator) for c, v in row.items()}
    content = 0
    for v in ints.values():
        content = gcd(content, v)
    if content > 1:
        ints = {c: v // content for c, v in ints.items()}
    return ints


def rank(M: SparseRationalMatrix) -> int:
    """Rank by fraction-free elimination on integer rows.

    Pivot rows are taken shortest first, pivot columns by fewest active rows
    (Markowitz style); ties go to the lowest index so the elimination order is
    reproducible. Updated rows are divided by their content.
    """
    rows: dict[int, dict[int, int]] = {
        r: _integer_row(row) for r, row in M.row_data.items() if row
    }
    col_rows: dict[int, set[int]] = defaultdict(set)
    for r, row in rows.items():
        for c in row:
            col_rows[c].add(r)

    heap = [(len(row), r) for r, row in rows.items()]
    heapq.heapify(heap)
    result = 0
    updates = 0

    while heap:
        length, r = heapq.heappop(heap)
        row = rows.get(r)
        if row is None or len(row) != length:
            continue
        del rows[r]
        for c in row:
            col_rows[c].discard(r)
        if not row:
            continue

        pivot_col = min(row, key=lambda col: (len(col_rows[col]), col))
        pivot = row[pivot_col]
        result += 1

        for other in sorted(col_rows[pivot_col]):
            other_row = rows[other]
            factor = other_row[pivot_col]
            g = gcd(pivot, factor)
            a, b = pivot // g, factor // g
            new_row = {c: a * v for c, v in other_row.items()} if a != 1 else dict(other_row)
            for c, v in row.items():
                val = new_row.get(c, 0) - b * v
                if val:
                    new_row[c] = val
                else:
                    new_row.pop(c, None)
            content = 0
            for v in new_row.values():
                content = gcd(content, v)
                if content == 1:
                    break
            if content > 1:
                new_row = {c: v // content for c, v in new_row.items()}

            for c in other_row:
                if c not in new_row:
                    col_rows[c].discard(other)
            for c in new_row:
                col_rows[c].add(other)
            rows[other] = new_row
            heapq.heappush(heap, (len(new_row), other))
            updates += 1
        col_rows.pop(pivot_col, None)

    logger.debug("rank of %dx%d matrix: %d (%d row updates)", M.rows, M.cols, result, updates)
    return result


# ---------------------------------------------------------------------------
# reduced echelon bases


class EchelonBasis:
    """Reduced row echelon basis of a growing subspace of key-indexed vectors.

    Every stored row has coefficient 1 at its pivot (its smallest key) and
    zero at every other pivot.
    """

    def __init__(self) -> None:
        self._rows: dict[Hashable, SparseRow] = {}
        self._cols: dict[Hashable, set[Hashable]] = defaultdict(set)

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def pivots(self) -> list:
        return sorted(self._rows)

    def row(self, pivot: Hashable) -> SparseRow:
        return self._rows[pivot]

    def rows(self) -> Iterator[tuple[Hashable, SparseRow]]:
        for p in sorted(self._rows):
            yield p, self._rows[p]

    def reduce(self, vector: Mapping) -> SparseRow:
        residual = SparseRow(vector)
        for p in [k for k in residual if k in self._rows]:
            residual.iadd_coef(-residual[p], self._rows[p])
        return residual

    def contains(self, vector: Mapping) -> bool:
        return not self.reduce(vector)

    def _axpy(self, pivot: Hashable, coef: Fraction, other: SparseRow) -> None:
        row = self._rows[pivot]
        for k, x in other.items():
            x2 = row.get(k, 0) + coef * x
            if x2 == 0:
                if k in row:
                    del row[k]
                    self._cols[k].discard(pivot)
            else:
                if k not in row and k != pivot:
                    self._cols[k].add(pivot)
                row[k] = x2

    def add(self, vector: Mapping) -> bool:
        """Adds a vector; returns False when it already lies in the span."""
        residual = self.reduce(vector)
        if not residual:
            return False
        pivot = min(residual)
        residual *= 1 / residual[pivot]

        for other in sorted(self._cols.get(pivot, ())):
            self._axpy(other, -self._rows[other][pivot], residual)
        self._cols.pop(pivot, None)

        self._rows[pivot] = residual
        for k in residual:
            if k != pivot:
                self._cols[k].add(pivot)
        return True

    def rows_containing(self, key: Hashable) -> list[Hashable]:
        return sorted(self._cols.get(key, ()))


def span_basis(vectors: Iterable[Mapping]) -> list[SparseRow]:
    """Subset of the given vectors forming a basis of their span (first-come order)."""
    echelon = EchelonBasis()
    return [SparseRow(v) for v in vectors if echelon.add(v)]


def rank_and_kernel(M: SparseRationalMatrix) -> tuple[int, list[SparseRow]]:
    """Rank and a kernel basis (one vector per free column, in column order)."""
    echelon = EchelonBasis()
    for r in sorted(M.row_data):
        echelon.add(M.row_data[r])

    pivots = set(echelon.pivots)
    kernel = []
    for free in range(M.cols):
        if free in pivots:
            continue
        vec = SparseRow({free: 1})
        for p in echelon.rows_containing(free):
            vec[p] = -echelon.row(p)[free]
        kernel.append(vec)
    return len(echelon), kernel


def kernel_basis(M: SparseRationalMatrix) -> list[SparseRow]:
    return rank_and_kernel(M)[1]


def solve_linear(
    M: SparseRationalMatrix, b: Sequence[Scalar] | Mapping[int, Scalar]
) -> SparseRow | None:
    """Returns one exact solution of M x = b, or None when the system is inconsistent."""
    if isinstance(b, Mapping):
        for k in b:
            if not isinstance(k, int) or not 0 <= k < M.rows:
                raise CyclicEngineValidationError(
                    f"Right-hand side index {k} does not fit a matrix with {M.rows} rows."
                )
        rhs = SparseRow(b)
    else:
        if len(b) != M.rows:
            raise CyclicEngineValidationError(
                f"Right-hand side has length {len(b)} but the matrix has {M.rows} rows."
            )
        rhs = SparseRow(enumerate(b))

    augmented_key = M.cols
    echelon = EchelonBasis()
    for r in range(M.rows):
        row = SparseRow(M.row_data.get(r, ()))
        if rhs[r]:
            row[augmented_key] = rhs[r]
        if row:
            echelon.add(row)

    if augmented_key in set(echelon.pivots):
        return None
    return SparseRow((p, row[augmented_key]) for p, row in echelon.rows())


class QuotientBasis:
    """Chooses representatives of span(candidates) modulo span(denominator).

    `coordinates(v)` expresses v (which must lie in span(reps) + denominator)
    in the representative basis, dropping the denominator part.
    """

    def __init__(self, denominator: Iterable[Mapping], candidates: Iterable[Mapping], ambient_dim: int):
        self._tag_base = ambient_dim
        self._echelon = EchelonBasis()
        for vec in denominator:
            self._echelon.add(vec)
        self.denominator_dim = len(self._echelon)
        self.representatives: list[SparseRow] = []
        for vec in candidates:
            tagged = SparseRow(vec)
            tagged[self._tag_base + len(self.representatives)] = Fraction(1)
            residual = self._echelon.reduce(tagged)
            if any(k < self._tag_base for k in residual):
                self._echelon.add(residual)
                self.representatives.append(SparseRow(vec))

    def __len__(self) -> int:
        return len(self.representatives)

    def coordinates(self, vector: Mapping) -> list[Fraction] | None:
        residual = self._echelon.reduce(vector)
        if any(k < self._tag_base for k in residual):
            return None
        return [-residual[self._tag_base + j] for j in range(len(self.representatives))]


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SmithForm:
    D: IntegerMatrix
    U: IntegerMatrix
    V: IntegerMatrix
    invariant_factors: tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)


def _gcdex(a: int, b: int) -> tuple[int, int, int]:
    s, t, h = ZZ.gcdex(ZZ(a), ZZ(b))
    return int(s), int(t), int(h)


def smith_normal_form(M: IntegerMatrix) -> SmithForm:
    """Smith normal form with unimodular transforms: U·M·V = D."""
    m, n = M.rows, M.cols
    A = M.to_dense()
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def row_combine(i: int, k: int, a: int, b: int, c: int, d: int) -> None:
        # rows (i, k) <- (a*row_i + b*row_k, c*row_i + d*row_k)
        for mat in (A, U):
            ri, rk = mat[i], mat[k]
            for j in range(len(ri)):
                x, y = ri[j], rk[j]
                ri[j], rk[j] = a * x + b * y, c * x + d * y

    def col_combine(i: int, k: int, a: int, b: int, c: int, d: int) -> None:
        for mat in (A, V):
            for line in mat:
                x, y = line[i], line[k]
                line[i], line[k] = a * x + b * y, c * x + d * y

    def swap_rows(i: int, k: int) -> None:
        if i != k:
            A[i], A[k] = A[k], A[i]
            U[i], U[k] = U[k], U[i]

    def swap_cols(i: int, k: int) -> None:
        if i != k:
            for mat in (A, V):
                for line in mat:
                    line[i], line[k] = line[k], line[i]

    t = 0
    while t < min(m, n):
        candidates = [(abs(A[i][j]), i, j) for i in range(t, m) for j in range(t, n) if A[i][j]]
        if not candidates:
            break
        _, pi, pj = min(candidates)
        swap_rows(t, pi)
        swap_cols(t, pj)

        while True:
            changed = False
            for i in range(t + 1, m):
                if A[i][t] == 0:
                    continue
                p, q = A[t][t], A[i][t]
                if q % p == 0:
                    row_combine(t, i, 1, 0, -(q // p), 1)
                else:
                    s, u, g = _gcdex(p, q)
                    row_combine(t, i, s, u, -(q // g), p // g)
                changed = True
            for j in range(t + 1, n):
                if A[t][j] == 0:
                    continue
                p, q = A[t][t], A[t][j]
                if q % p == 0:
                    col_combine(t, j, 1, 0, -(q // p), 1)
                else:
                    s, u, g = _gcdex(p, q)
                    col_combine(t, j, s, u, -(q // g), p // g)
                changed = True
            if changed:
                continue
            offender = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % A[t][t]),
                None,
            )
            if offender is None:
                break
            row_combine(t, offender, 1, 1, 0, 1)

        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
        t += 1

    factors = tuple(A[i][i] for i in range(min(m, n)) if A[i][i])
    logger.debug("smith normal form of %dx%d matrix: %d invariant factors", m, n, len(factors))
    return SmithForm(
        D=IntegerMatrix.from_dense(A) if m and n else IntegerMatrix(m, n),
        U=IntegerMatrix.from_dense(U) if m else IntegerMatrix(0, 0),
        V=IntegerMatrix.from_dense(V) if n else IntegerMatrix(0, 0),
        invariant_factors=factors,
    )


def solve_integral(M: IntegerMatrix, y: Sequence[int], snf: SmithForm | None = None) -> list[int] | None:
    """Integral solution of M x = y, or None when none exists."""
    if len(y) != M.rows:
        raise CyclicEngineValidationError(
            f"Right-hand side has length {len(y)} but the matrix has {M.rows} rows."
        )
    snf = snf or smith_normal_form(M)
    z = snf.U.matvec(list(y))
    r = snf.rank
    w = [0] * M.cols
    for i, value in enumerate(z):
        if i < r:
            d = snf.invariant_factors[i]
            if value % d:
                return None
            w[i] = value // d
        elif value:
            return None
    return snf.V.matvec(w)
