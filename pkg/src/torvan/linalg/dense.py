"""Bridges to sympy's exact matrix code.

``DomainMatrix`` gives the dense rank used for small matrices and as the
independent oracle the sparse engine is cross-checked against.
``sdm_irref`` gives the reduced echelon forms behind canonical subspace
bases.
"""

import logging
from fractions import Fraction

from sympy import GF, QQ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.sdm import sdm_irref

from torvan.scalars import FieldSpec

LOGGER = logging.getLogger(__name__)


def sympy_domain(field: FieldSpec):
    if field.is_prime:
        return GF(field.p)
    return QQ


def to_domain_element(K, field: FieldSpec, value):
    if field.is_prime:
        return K(value)
    return K(value.numerator, value.denominator)


def from_domain_element(field: FieldSpec, x):
    if field.is_prime:
        return int(x) % field.p
    return Fraction(int(x.numerator), int(x.denominator))


def to_domain_matrix(M) -> DomainMatrix:
    K = sympy_domain(M.field)
    data = [[to_domain_element(K, M.field, v) for v in row] for row in M.to_dense()]
    return DomainMatrix(data, (M.nrows, M.ncols), K)


def dense_rank(M) -> int:
    if M.nrows == 0 or M.ncols == 0:
        return 0
    return to_domain_matrix(M).rank()


def echelon(rows, ncols: int, field: FieldSpec, trailing: bool = False):
    """Reduced row echelon form of sparse rows, keyed by pivot column.

    Returns ``(pivot_rows, nonzero_columns)``: each pivot column maps to its
    normalised row, each non-pivot column to the pivots whose rows are nonzero
    there. With ``trailing`` a row's pivot is its largest column, obtained by
    running ``sdm_irref`` on the column-reversed rows.
    """
    K = sympy_domain(field)
    last = ncols - 1

    def column(c):
        return last - c if trailing else c

    A = {
        i: {column(c): to_domain_element(K, field, v) for c, v in row.items()}
        for i, row in enumerate(rows) if row
    }
    rref, pivots, nonzero = sdm_irref(A)

    pivot_rows = {
        column(p): {column(c): from_domain_element(field, x) for c, x in rref[k].items()}
        for k, p in enumerate(pivots)
    }
    nonzero_columns = {
        column(c): {column(pivots[k]) for k in ks}
        for c, ks in nonzero.items() if ks
    }
    return pivot_rows, nonzero_columns
