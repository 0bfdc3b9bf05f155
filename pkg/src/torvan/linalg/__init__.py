"""Exact sparse matrices and subspaces.

A matrix is a dict of row dicts ``{i: {j: value}}`` holding only nonzero
raw field values (see :mod:`torvan.scalars`). Vectors are plain
``{index: value}`` dicts with no stored zeros.

Two eliminations live here:

* a Markowitz-ordered forward elimination, used by :func:`rank` and
  :func:`solve`;
* sympy's ``sdm_irref`` (see :mod:`torvan.linalg.dense`), used for the
  canonical bases stored by :class:`Subspace`. With leading pivots it yields
  the canonical basis of a span; with trailing pivots the null space read off
  from it is already in canonical form.
"""

import heapq
import logging
from collections import defaultdict
from dataclasses import dataclass, field as dataclass_field
from functools import cached_property
from typing import Iterable

from torvan.errors import DimensionMismatchError, FieldMismatchError, InclusionError
from torvan.linalg.dense import dense_rank, echelon
from torvan.scalars import RATIONALS, FieldSpec

LOGGER = logging.getLogger(__name__)

DENSE_FALLBACK_LIMIT = 64


def _check_field(a: FieldSpec, b: FieldSpec):
    if a != b:
        raise FieldMismatchError(a, b)


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    nrows: int
    ncols: int
    field: FieldSpec
    rows: dict = dataclass_field(default_factory=dict, repr=False)

    @classmethod
    def from_entries(cls, nrows, ncols, entries: Iterable, field: FieldSpec = RATIONALS):
        """Build from ``(i, j, value)`` triples; repeated positions are summed."""
        rows: dict = {}
        for i, j, value in entries:
            if not (0 <= i < nrows and 0 <= j < ncols):
                raise DimensionMismatchError(
                    f"Entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )
            value = field.coerce(value)
            row = rows.setdefault(i, {})
            if j in row:
                value = field.add(row[j], value)
            if value:
                row[j] = value
            else:
                row.pop(j, None)
        return cls(nrows, ncols, field, {i: r for i, r in rows.items() if r})

    @classmethod
    def from_dense(cls, data, field: FieldSpec = RATIONALS, ncols: int | None = None):
        data = [list(r) for r in data]
        if ncols is None:
            ncols = len(data[0]) if data else 0
        entries = (
            (i, j, v) for i, r in enumerate(data) for j, v in enumerate(r) if v != 0
        )
        return cls.from_entries(len(data), ncols, entries, field)

    @classmethod
    def zero(cls, nrows, ncols, field: FieldSpec = RATIONALS):
        return cls(nrows, ncols, field, {})

    @classmethod
    def identity(cls, n, field: FieldSpec = RATIONALS):
        return cls(n, n, field, {i: {i: field.one} for i in range(n)})

    @classmethod
    def from_columns(cls, nrows, columns, field: FieldSpec = RATIONALS):
        """Matrix whose j-th column is the sparse vector ``columns[j]``."""
        rows: dict = defaultdict(dict)
        for j, col in enumerate(columns):
            for i, value in col.items():
                rows[i][j] = value
        return cls(nrows, len(columns), field, dict(rows))

    @property
    def shape(self):
        return self.nrows, self.ncols

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz}, field={self.field})"

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.field == other.field
            and self.rows == other.rows
        )

    __hash__ = None

    @property
    def nnz(self):
        return sum(len(r) for r in self.rows.values())

    def get(self, i, j):
        return self.rows.get(i, {}).get(j, self.field.zero)

    def entries(self):
        for i in sorted(self.rows):
            row = self.rows[i]
            for j in sorted(row):
                yield i, j, row[j]

    def to_dense(self):
        zero = self.field.zero
        return [[self.rows.get(i, {}).get(j, zero) for j in range(self.ncols)]
                for i in range(self.nrows)]

    def is_zero(self):
        return not self.rows

    def transpose(self):
        cols: dict = defaultdict(dict)
        for i, row in self.rows.items():
            for j, value in row.items():
                cols[j][i] = value
        return SparseMatrix(self.ncols, self.nrows, self.field, dict(cols))

    def column(self, j):
        return {i: row[j] for i, row in self.rows.items() if j in row}

    def columns(self):
        t = self.transpose().rows
        return [t.get(j, {}) for j in range(self.ncols)]

    def matvec(self, v: dict) -> dict:
        f = self.field
        out = {}
        keys = set(v)
        for i, row in self.rows.items():
            acc = f.zero
            for j in keys.intersection(row):
                acc = f.add(acc, f.mul(row[j], v[j]))
            if acc:
                out[i] = acc
        return out

    def __matmul__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        _check_field(self.field, other.field)
        if self.ncols != other.nrows:
            raise DimensionMismatchError(
                f"Cannot multiply {self.nrows}x{self.ncols} by {other.nrows}x{other.ncols}"
            )
        f = self.field
        out = {}
        other_rows = other.rows
        other_nz = set(other_rows)
        for i, a_row in self.rows.items():
            c_row = {}
            for k in other_nz.intersection(a_row):
                a_ik = a_row[k]
                for j, b_kj in other_rows[k].items():
                    c_ij = f.add(c_row.get(j, f.zero), f.mul(a_ik, b_kj))
                    if c_ij:
                        c_row[j] = c_ij
                    else:
                        c_row.pop(j, None)
            if c_row:
                out[i] = c_row
        return SparseMatrix(self.nrows, other.ncols, f, out)

    def _combine(self, other, op):
        _check_field(self.field, other.field)
        if self.shape != other.shape:
            raise DimensionMismatchError(f"Shape mismatch: {self.shape} vs {other.shape}")
        f = self.field
        out = {i: dict(r) for i, r in self.rows.items()}
        for i, row in other.rows.items():
            target = out.setdefault(i, {})
            for j, value in row.items():
                new = op(target.get(j, f.zero), value)
                if new:
                    target[j] = new
                else:
                    target.pop(j, None)
        return SparseMatrix(self.nrows, self.ncols, f, {i: r for i, r in out.items() if r})

    def __add__(self, other):
        return self._combine(other, self.field.add)

    def __sub__(self, other):
        return self._combine(other, self.field.sub)

    def __neg__(self):
        f = self.field
        return SparseMatrix(
            self.nrows, self.ncols, f,
            {i: {j: f.neg(v) for j, v in r.items()} for i, r in self.rows.items()},
        )

    def scale(self, c):
        f = self.field
        c = f.coerce(c)
        if not c:
            return SparseMatrix.zero(self.nrows, self.ncols, f)
        return SparseMatrix(
            self.nrows, self.ncols, f,
            {i: {j: f.mul(c, v) for j, v in r.items()} for i, r in self.rows.items()},
        )

    def power(self, k: int):
        if self.nrows != self.ncols:
            raise DimensionMismatchError("Only square matrices have powers")
        result = SparseMatrix.identity(self.nrows, self.field)
        for _ in range(k):
            result = result @ self
        return result

    def kron(self, other):
        """Kronecker product; index (a, b) of the result is ``a * other_dim + b``."""
        _check_field(self.field, other.field)
        f = self.field
        out: dict = {}
        for i, a_row in self.rows.items():
            for k, b_row in other.rows.items():
                row = {}
                for j, a in a_row.items():
                    for m, b in b_row.items():
                        row[j * other.ncols + m] = f.mul(a, b)
                out[i * other.nrows + k] = row
        return SparseMatrix(
            self.nrows * other.nrows, self.ncols * other.ncols, f, out
        )


def vector_combine(v: dict, w: dict, c, field: FieldSpec) -> dict:
    """Return ``v + c * w`` as a new sparse vector."""
    out = dict(v)
    for j, value in w.items():
        new = field.add(out.get(j, field.zero), field.mul(c, value))
        if new:
            out[j] = new
        else:
            out.pop(j, None)
    return out


def _markowitz_eliminate(rows: dict, field: FieldSpec, pivot_limit: int):
    """Forward elimination with Markowitz-style pivoting.

    The pivot row is an active row with the fewest pivotable entries, then
    inside it the column with the fewest active rows; ties go to the smallest
    row, then the smallest column. Columns ``>= pivot_limit`` ride along (an
    augmented right-hand side) but are never pivots.

    Returns ``(pivots, leftovers)``: the ``(row, col, pivot_row)`` triples in
    elimination order and the rows left with no pivotable entry.
    """
    f = field
    active = {i: dict(r) for i, r in rows.items() if r}
    col_rows: dict = defaultdict(set)
    for i, r in active.items():
        for j in r:
            if j < pivot_limit:
                col_rows[j].add(i)

    def pivotable(r):
        return sum(1 for j in r if j < pivot_limit)

    counts = {i: pivotable(r) for i, r in active.items()}
    heap = [(c, i) for i, c in counts.items()]
    heapq.heapify(heap)

    pivots = []
    leftovers = []
    while heap:
        count, i = heapq.heappop(heap)
        if i not in active or counts[i] != count:
            continue
        row = active.pop(i)
        if count == 0:
            if row:
                leftovers.append((i, row))
            continue
        j = min((c for c in row if c < pivot_limit), key=lambda c: (len(col_rows[c]), c))
        for c in row:
            if c < pivot_limit:
                col_rows[c].discard(i)
        pivots.append((i, j, row))

        inverse = f.inv(row[j])
        for k in sorted(col_rows.pop(j, ())):
            target = active[k]
            factor = f.mul(target[j], inverse)
            for c, value in row.items():
                old = target.get(c)
                new = f.sub(old if old is not None else f.zero, f.mul(factor, value))
                if new:
                    target[c] = new
                    if old is None and c < pivot_limit:
                        col_rows[c].add(k)
                else:
                    target.pop(c, None)
                    if old is not None and c < pivot_limit and c != j:
                        col_rows[c].discard(k)
            counts[k] = pivotable(target)
            heapq.heappush(heap, (counts[k], k))

    return pivots, leftovers


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of ``field^ambient_dim`` stored by its canonical basis.

    The basis is in reduced echelon form: every vector's smallest index holds
    a 1, no other vector is nonzero there, and vectors are ordered by that
    pivot. Equal subspaces therefore have identical bases.
    """

    field: FieldSpec
    ambient_dim: int
    basis: tuple = ()

    @classmethod
    def span(cls, field: FieldSpec, ambient_dim: int, vectors: Iterable[dict]):
        pivot_rows, _ = echelon(vectors, ambient_dim, field)
        return cls(field, ambient_dim, tuple(pivot_rows[p] for p in sorted(pivot_rows)))

    @classmethod
    def full(cls, field: FieldSpec, ambient_dim: int):
        return cls(field, ambient_dim, tuple({i: field.one} for i in range(ambient_dim)))

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        return (
            self.field == other.field
            and self.ambient_dim == other.ambient_dim
            and self.basis == other.basis
        )

    __hash__ = None

    @property
    def dim(self):
        return len(self.basis)

    @property
    def pivots(self):
        return tuple(min(v) for v in self.basis)

    @cached_property
    def pivot_map(self):
        return {min(v): v for v in self.basis}

    def reduce(self, v: dict) -> dict:
        """Subtract the basis combination matching ``v`` on the pivot coordinates."""
        f = self.field
        out = dict(v)
        by_pivot = self.pivot_map
        for p in set(out).intersection(by_pivot):
            out = vector_combine(out, by_pivot[p], f.neg(out[p]), f)
        return out

    def contains(self, v: dict) -> bool:
        return not self.reduce(v)

    def coordinates(self, v: dict) -> list:
        """Coefficients of ``v`` in the canonical basis; ``v`` must lie in the span."""
        residue = self.reduce(v)
        if residue:
            raise InclusionError("Vector is not in the subspace", witness=residue)
        f = self.field
        return [v.get(p, f.zero) for p in self.pivots]

    def is_subspace_of(self, other) -> dict | None:
        """Return None when contained in ``other``, else a basis vector that escapes it."""
        for v in self.basis:
            if not other.contains(v):
                return v
        return None


def sparse_rank(M: SparseMatrix) -> int:
    """Rank by Markowitz elimination alone."""
    pivots, _ = _markowitz_eliminate(M.rows, M.field, M.ncols)
    return len(pivots)


def rank(M: SparseMatrix, dense_limit: int = DENSE_FALLBACK_LIMIT) -> int:
    """Dense sympy rank when both sides are below ``dense_limit``, else sparse."""
    if not M.rows:
        return 0
    if M.nrows < dense_limit and M.ncols < dense_limit:
        return dense_rank(M)
    return sparse_rank(M)


def kernel(M: SparseMatrix) -> Subspace:
    """Canonical basis of ``{v : M v = 0}``.

    Built from the trailing-pivot echelon form of the rows: the null vector of
    a free column ``c`` is supported on ``c`` and pivots above it, so ``c`` is
    its leading index and the family is already canonical.
    """
    f = M.field
    pivot_rows, nonzero_columns = echelon(M.rows.values(), M.ncols, f, trailing=True)
    vectors = []
    for c in range(M.ncols):
        if c in pivot_rows:
            continue
        v = {c: f.one}
        for p in nonzero_columns.get(c, ()):
            v[p] = f.neg(pivot_rows[p][c])
        vectors.append(v)
    return Subspace(f, M.ncols, tuple(vectors))


def image(M: SparseMatrix) -> Subspace:
    return Subspace.span(M.field, M.nrows, M.transpose().rows.values())


def solve(M: SparseMatrix, b) -> dict | None:
    """Some ``x`` with ``M x = b``, or None when the system is inconsistent.

    ``b`` is a sparse dict or a dense sequence of length ``M.nrows``. The
    solution sets every non-pivot unknown to zero, so it is fixed by the
    pivot order of :func:`_markowitz_eliminate`.
    """
    f = M.field
    if not isinstance(b, dict):
        b = list(b)
        if len(b) != M.nrows:
            raise DimensionMismatchError(
                f"Right-hand side has length {len(b)}, expected {M.nrows}"
            )
        b = {i: f.coerce(v) for i, v in enumerate(b) if v != 0}
    elif any(not 0 <= i < M.nrows for i in b):
        raise DimensionMismatchError("Right-hand side index out of range")

    rhs = M.ncols
    augmented = {i: dict(r) for i, r in M.rows.items()}
    for i, value in b.items():
        augmented.setdefault(i, {})[rhs] = value

    pivots, leftovers = _markowitz_eliminate(augmented, f, rhs)
    if any(rhs in row for _, row in leftovers):
        return None

    x: dict = {}
    for _, j, row in reversed(pivots):
        acc = row.get(rhs, f.zero)
        for c, value in row.items():
            if c != j and c != rhs and c in x:
                acc = f.sub(acc, f.mul(value, x[c]))
        if acc:
            x[j] = f.div(acc, row[j])
    return x


def quotient_dim(outer: Subspace, inner: Subspace) -> int:
    witness = inner.is_subspace_of(outer)
    if witness is not None:
        raise InclusionError("Inner subspace is not contained in the outer one", witness)
    return outer.dim - inner.dim


def dense_vector(v: dict, n: int, field: FieldSpec) -> list:
    zero = field.zero
    return [v.get(i, zero) for i in range(n)]


def vstack(matrices, ncols: int, field: FieldSpec = RATIONALS) -> SparseMatrix:
    """Stack matrices with ``ncols`` columns on top of each other."""
    rows: dict = {}
    offset = 0
    for M in matrices:
        _check_field(M.field, field)
        if M.ncols != ncols:
            raise DimensionMismatchError(f"Expected {ncols} columns, got {M.ncols}")
        for i, row in M.rows.items():
            rows[offset + i] = dict(row)
        offset += M.nrows
    return SparseMatrix(offset, ncols, field, rows)


def matrix_to_json(M: SparseMatrix) -> dict:
    render = M.field.render_value
    return {
        "rows": M.nrows,
        "cols": M.ncols,
        "entries": [[i, j, render(v)] for i, j, v in M.entries()],
    }


def matrix_from_json(doc: dict, field: FieldSpec) -> SparseMatrix:
    from torvan.errors import InputError

    try:
        nrows, ncols = int(doc["rows"]), int(doc["cols"])
        triples = [(int(i), int(j), str(v)) for i, j, v in doc["entries"]]
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"Malformed matrix document: {e}") from e
    if nrows < 0 or ncols < 0:
        raise InputError("Matrix dimensions must be non-negative")
    seen = set()
    for i, j, _ in triples:
        if (i, j) in seen:
            raise InputError(f"Duplicate matrix entry at ({i}, {j})")
        seen.add((i, j))
    try:
        return SparseMatrix.from_entries(
            nrows, ncols, ((i, j, field.parse_value(v)) for i, j, v in triples), field
        )
    except DimensionMismatchError as e:
        raise InputError(str(e)) from e
