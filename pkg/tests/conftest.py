from math import comb

from hypothesis import strategies as st

from torvan.linalg import SparseMatrix
from torvan.modules import FiniteModule
from torvan.scalars import RATIONALS, FieldSpec

F1009 = FieldSpec.prime(1009)
FIELDS = [RATIONALS, F1009]


def binom(n, k):
    if 0 <= k <= n:
        return comb(n, k)
    return 0


@st.composite
def sparse_matrices(draw, field=RATIONALS, max_side=6):
    nrows = draw(st.integers(0, max_side))
    ncols = draw(st.integers(0, max_side))
    if nrows == 0 or ncols == 0:
        return SparseMatrix.zero(nrows, ncols, field)
    cells = draw(
        st.lists(
            st.tuples(
                st.integers(0, nrows - 1),
                st.integers(0, ncols - 1),
                st.integers(-3, 3),
            ),
            max_size=nrows * ncols,
        )
    )
    return SparseMatrix.from_entries(nrows, ncols, cells, field)


@st.composite
def commuting_modules(draw, field=RATIONALS, max_vars=3, max_dim=4):
    """Each t_i acts as a polynomial without constant term in one nilpotent matrix."""
    n = draw(st.integers(1, max_vars))
    dim = draw(st.integers(1, max_dim))
    entries = [
        (i, j, draw(st.integers(-2, 2)))
        for i in range(dim)
        for j in range(i + 1, dim)
    ]
    nilpotent = SparseMatrix.from_entries(dim, dim, entries, field)
    square = nilpotent @ nilpotent
    actions = []
    for _ in range(n):
        a = draw(st.integers(-2, 2))
        b = draw(st.integers(-2, 2))
        actions.append(nilpotent.scale(a) + square.scale(b))
    return FiniteModule.create(field, n, dim, actions, locally_nilpotent=True, name="random")
