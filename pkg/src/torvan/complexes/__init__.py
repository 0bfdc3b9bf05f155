"""Koszul and Chevalley-Eilenberg complexes, homology and homotopies.

For a module M over k[t_1..t_n] the Koszul complex has terms
K_j = M (x) L^j(k^n), degrees 0..n. The wedge basis of L^j is the list of
j-element subsets of {1..n} as bitmasks in increasing order, and the basis
vector m (x) e_S sits at index ``position(S) * dim(M) + m``.

Signs: for S = {i_1 < ... < i_j},
    d(m (x) e_S) = sum_r (-1)^(r-1) T_{i_r}(m) (x) e_{S - i_r},
and the wedge homotopy e_i ^ - carries the same sign (-1)^#{s in S : s < i},
so that d h + h d = T_i (x) id.

Homology over a field is Tor_j(M, k); the cohomology of the CE complex of a
nilpotent module W is Ext^j(k, W).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

from torvan.errors import DimensionMismatchError, InputError, InvariantViolation
from torvan.linalg import (
    DENSE_FALLBACK_LIMIT,
    SparseMatrix,
    Subspace,
    dense_vector,
    image,
    kernel,
    matrix_from_json,
    matrix_to_json,
    quotient_dim,
    rank,
    solve,
)
from torvan.modules import FiniteModule, ModuleMap, validate
from torvan.scalars import FieldSpec

LOGGER = logging.getLogger(__name__)


class Orientation(Enum):
    HOMOLOGICAL = "homological"
    COHOMOLOGICAL = "cohomological"

    def flipped(self):
        if self is Orientation.HOMOLOGICAL:
            return Orientation.COHOMOLOGICAL
        return Orientation.HOMOLOGICAL


def wedge_basis(n: int, j: int) -> list:
    """j-subsets of {1..n} as bitmasks, ascending."""
    masks = [sum(1 << (i - 1) for i in subset) for subset in combinations(range(1, n + 1), j)]
    return sorted(masks)


def _wedge_positions(n: int, j: int) -> dict:
    return {mask: pos for pos, mask in enumerate(wedge_basis(n, j))}


def _sign(mask: int, bit: int, field: FieldSpec, value):
    """``value`` times (-1)^#{members of mask below bit}."""
    if (mask & (bit - 1)).bit_count() % 2:
        return field.neg(value)
    return value


@dataclass(frozen=True, eq=False)
class ChainComplex:
    """A bounded complex in degrees 0..top.

    ``differentials[j]`` leaves degree j: towards j-1 for a homological
    complex, towards j+1 for a cohomological one. Maps that would leave the
    range are omitted.
    """

    field: FieldSpec
    terms: tuple
    differentials: dict
    orientation: Orientation = Orientation.HOMOLOGICAL

    def __post_init__(self):
        for j, d in self.differentials.items():
            expected = (self.term_dim(self.next_degree(j)), self.term_dim(j))
            if d.shape != expected:
                raise DimensionMismatchError(
                    f"Differential from degree {j} is {d.shape}, expected {expected}"
                )
        for j in self.degrees:
            composite = self.outgoing(self.next_degree(j)) @ self.outgoing(j)
            if not composite.is_zero():
                column = min(c for _, c, _ in composite.entries())
                raise InvariantViolation(
                    f"d.d != 0 starting in degree {j}", witness={column: self.field.one}
                )

    @property
    def degrees(self):
        return range(len(self.terms))

    @property
    def top(self):
        return len(self.terms) - 1

    def term_dim(self, j: int) -> int:
        if 0 <= j < len(self.terms):
            return self.terms[j]
        return 0

    def next_degree(self, j: int) -> int:
        return j - 1 if self.orientation is Orientation.HOMOLOGICAL else j + 1

    def previous_degree(self, j: int) -> int:
        return j + 1 if self.orientation is Orientation.HOMOLOGICAL else j - 1

    def outgoing(self, j: int) -> SparseMatrix:
        d = self.differentials.get(j)
        if d is None:
            return SparseMatrix.zero(self.term_dim(self.next_degree(j)), self.term_dim(j), self.field)
        return d

    def incoming(self, j: int) -> SparseMatrix:
        return self.outgoing(self.previous_degree(j))

    def to_json(self):
        return {
            "field": self.field.render(),
            "orientation": self.orientation.value,
            "degrees": [0, self.top],
            "terms": list(self.terms),
            "differentials": {str(j): matrix_to_json(d) for j, d in sorted(self.differentials.items())},
        }

    @classmethod
    def from_json(cls, doc: dict):
        try:
            field = FieldSpec.parse(str(doc["field"]))
            orientation = Orientation(doc.get("orientation", Orientation.HOMOLOGICAL.value))
            terms = tuple(int(t) for t in doc["terms"])
            differentials = {
                int(j): matrix_from_json(m, field) for j, m in doc["differentials"].items()
            }
        except (AttributeError, KeyError, TypeError, ValueError) as e:
            raise InputError(f"Malformed complex document: {e}") from e
        if list(doc.get("degrees", [0, len(terms) - 1])) != [0, len(terms) - 1]:
            raise InputError(f"Degree range {doc['degrees']} does not match {len(terms)} terms")
        try:
            return cls(field, terms, differentials, orientation)
        except DimensionMismatchError as e:
            raise InputError(str(e)) from e


def _check_orientation(source: ChainComplex, target: ChainComplex):
    if source.orientation is not target.orientation:
        raise DimensionMismatchError("Complexes have different orientations")


@dataclass(frozen=True, eq=False)
class ChainMap:
    source: ChainComplex
    target: ChainComplex
    components: tuple

    def __post_init__(self):
        _check_orientation(self.source, self.target)
        if len(self.source.terms) != len(self.target.terms):
            raise DimensionMismatchError("Complexes span different degree ranges")
        if len(self.components) != len(self.source.terms):
            raise DimensionMismatchError("One chain map component is needed per degree")
        for j in self.source.degrees:
            F = self.component(j)
            if F.shape != (self.target.term_dim(j), self.source.term_dim(j)):
                raise DimensionMismatchError(f"Chain map component {j} has shape {F.shape}")
        for j in self.source.degrees:
            k = self.source.next_degree(j)
            defect = (self.target.outgoing(j) @ self.component(j)) - (
                self.component(k) @ self.source.outgoing(j)
            )
            if not defect.is_zero():
                column = min(c for _, c, _ in defect.entries())
                raise InvariantViolation(
                    f"Chain map does not commute with the differential in degree {j}",
                    witness={column: self.source.field.one},
                )

    def component(self, j: int) -> SparseMatrix:
        if 0 <= j < len(self.components):
            return self.components[j]
        return SparseMatrix.zero(self.target.term_dim(j), self.source.term_dim(j), self.source.field)

    def is_zero(self) -> bool:
        return all(F.is_zero() for F in self.components)


@dataclass(frozen=True, eq=False)
class Homotopy:
    """Components h_j with d h + h d = f - g in every degree."""

    f: ChainMap
    g: ChainMap
    components: tuple

    def __post_init__(self):
        source, target = self.f.source, self.f.target
        for j in source.degrees:
            s = source.previous_degree(j)
            h = self.component(j)
            if h.shape != (target.term_dim(s), source.term_dim(j)):
                raise DimensionMismatchError(f"Homotopy component {j} has shape {h.shape}")
        for j in source.degrees:
            lhs = (target.incoming(j) @ self.component(j)) + (
                self.component(source.next_degree(j)) @ source.outgoing(j)
            )
            rhs = self.f.component(j) - self.g.component(j)
            defect = lhs - rhs
            if not defect.is_zero():
                column = min(c for _, c, _ in defect.entries())
                raise InvariantViolation(
                    f"Homotopy identity fails in degree {j}",
                    witness={column: source.field.one},
                )

    def component(self, j: int) -> SparseMatrix:
        source, target = self.f.source, self.f.target
        if 0 <= j < len(self.components):
            return self.components[j]
        return SparseMatrix.zero(
            target.term_dim(source.previous_degree(j)), source.term_dim(j), source.field
        )


@dataclass(frozen=True, eq=False)
class HomologyTable:
    """Per degree: cycles Z, boundaries B and the canonical class representatives.

    The representatives span the cycles vanishing on every pivot of B; that
    complement is unique, so its echelon basis is canonical.
    """

    field: FieldSpec
    cycles: tuple
    boundaries: tuple
    classes: tuple

    @property
    def dims(self):
        return [c.dim for c in self.classes]

    @property
    def representatives(self):
        return [c.basis for c in self.classes]

    def coordinates(self, j: int, y: dict) -> list:
        """Coordinates of the class of the cycle ``y`` in degree j."""
        return self.classes[j].coordinates(self.boundaries[j].reduce(y))

    def to_json(self):
        render = self.field.render_value
        return {
            "dims": self.dims,
            "representatives": [
                [[render(x) for x in dense_vector(v, c.ambient_dim, self.field)] for v in c.basis]
                for c in self.classes
            ],
        }


def _module_blocks(M: FiniteModule):
    return [(i, T) for i, T in enumerate(M.actions, start=1)]


def koszul_complex(M: FiniteModule) -> ChainComplex:
    n, dim, f = M.num_vars, M.dim, M.field
    terms = tuple(dim * len(wedge_basis(n, j)) for j in range(n + 1))
    differentials = {}
    for j in range(1, n + 1):
        lower = _wedge_positions(n, j - 1)
        rows: dict = {}
        for s, mask in enumerate(wedge_basis(n, j)):
            for i, T in _module_blocks(M):
                bit = 1 << (i - 1)
                if not mask & bit:
                    continue
                t = lower[mask ^ bit]
                for a, b, value in T.entries():
                    rows.setdefault(t * dim + a, {})[s * dim + b] = _sign(mask, bit, f, value)
        differentials[j] = SparseMatrix(terms[j - 1], terms[j], f, rows)
    LOGGER.debug(f"Koszul complex of {M.name or 'module'}: terms {terms}")
    return ChainComplex(f, terms, differentials, Orientation.HOMOLOGICAL)


def ce_complex(M: FiniteModule) -> ChainComplex:
    """The cochain complex M (x) L^j(k^n)^* with d(m (x) w) = sum_i T_i m (x) e_i^* ^ w."""
    n, dim, f = M.num_vars, M.dim, M.field
    terms = tuple(dim * len(wedge_basis(n, j)) for j in range(n + 1))
    differentials = {}
    for j in range(n):
        upper = _wedge_positions(n, j + 1)
        rows: dict = {}
        for s, mask in enumerate(wedge_basis(n, j)):
            for i, T in _module_blocks(M):
                bit = 1 << (i - 1)
                if mask & bit:
                    continue
                t = upper[mask | bit]
                for a, b, value in T.entries():
                    rows.setdefault(t * dim + a, {})[s * dim + b] = _sign(mask, bit, f, value)
        differentials[j] = SparseMatrix(terms[j + 1], terms[j], f, rows)
    return ChainComplex(f, terms, differentials, Orientation.COHOMOLOGICAL)


def homology(C: ChainComplex) -> HomologyTable:
    cycles, boundaries, classes = [], [], []
    for j in C.degrees:
        Z = kernel(C.outgoing(j))
        B = image(C.incoming(j))
        expected = quotient_dim(Z, B)
        H = Subspace.span(C.field, C.terms[j], (B.reduce(z) for z in Z.basis))
        if H.dim != expected:
            raise InvariantViolation(f"Homology in degree {j} has dimension {H.dim}, expected {expected}")
        cycles.append(Z)
        boundaries.append(B)
        classes.append(H)
    return HomologyTable(C.field, tuple(cycles), tuple(boundaries), tuple(classes))


def homology_dims(C: ChainComplex, dense_limit: int = DENSE_FALLBACK_LIMIT) -> list:
    """Homology dimensions from ranks alone: dim C_j - rank(out_j) - rank(in_j)."""
    ranks = {j: rank(d, dense_limit) for j, d in C.differentials.items()}
    return [
        C.terms[j] - ranks.get(j, 0) - ranks.get(C.previous_degree(j), 0)
        for j in C.degrees
    ]


def euler_characteristic(C: ChainComplex) -> int:
    return sum((-1) ** j * dim for j, dim in enumerate(C.terms))


def tor_dims(M: FiniteModule, dense_limit: int = DENSE_FALLBACK_LIMIT) -> list:
    return homology_dims(koszul_complex(M), dense_limit)


def _block_diagonal(block: SparseMatrix, copies: int) -> SparseMatrix:
    rows: dict = {}
    for w in range(copies):
        for i, row in block.rows.items():
            rows[w * block.nrows + i] = {w * block.ncols + j: v for j, v in row.items()}
    return SparseMatrix(block.nrows * copies, block.ncols * copies, block.field, rows)


def induced_chain_map(f: ModuleMap, source: ChainComplex | None = None,
                      target: ChainComplex | None = None) -> ChainMap:
    """Component j is f (x) id on M (x) L^j."""
    n = f.source.num_vars
    source = source or koszul_complex(f.source)
    target = target or koszul_complex(f.target)
    components = tuple(_block_diagonal(f.matrix, len(wedge_basis(n, j))) for j in range(n + 1))
    return ChainMap(source, target, components)


def identity_chain_map(C: ChainComplex) -> ChainMap:
    return ChainMap(C, C, tuple(SparseMatrix.identity(d, C.field) for d in C.terms))


def zero_chain_map(source: ChainComplex, target: ChainComplex) -> ChainMap:
    return ChainMap(
        source, target,
        tuple(SparseMatrix.zero(target.term_dim(j), source.term_dim(j), source.field)
              for j in source.degrees),
    )


def compose_chain_maps(second: ChainMap, first: ChainMap) -> ChainMap:
    return ChainMap(
        first.source, second.target,
        tuple(second.component(j) @ first.component(j) for j in first.source.degrees),
    )


def induced_on_homology(F: ChainMap, source_table: HomologyTable | None = None,
                        target_table: HomologyTable | None = None) -> list:
    """Matrices of H_j(F) in the canonical representative bases."""
    source_table = source_table or homology(F.source)
    target_table = target_table or homology(F.target)
    f = F.source.field
    matrices = []
    for j in F.source.degrees:
        columns = []
        for rep in source_table.representatives[j]:
            coords = target_table.coordinates(j, F.component(j).matvec(rep))
            columns.append({i: c for i, c in enumerate(coords) if c})
        matrices.append(
            SparseMatrix.from_columns(target_table.classes[j].dim, columns, f)
        )
    return matrices


def boundary_witness(C: ChainComplex, j: int, y: dict) -> dict | None:
    """Some x with (incoming differential) x = y, i.e. proof that [y] = 0."""
    return solve(C.incoming(j), y)


def wedge_multiplication(n: int, dim: int, i: int, j: int, field: FieldSpec) -> SparseMatrix:
    """e_i ^ - from M (x) L^j to M (x) L^{j+1}."""
    bit = 1 << (i - 1)
    source_masks = wedge_basis(n, j)
    rows: dict = {}
    if j < n:
        upper = _wedge_positions(n, j + 1)
        for s, mask in enumerate(source_masks):
            if mask & bit:
                continue
            t = upper[mask | bit]
            value = _sign(mask, bit, field, field.one)
            for m in range(dim):
                rows[t * dim + m] = {s * dim + m: value}
    return SparseMatrix(dim * len(wedge_basis(n, j + 1)), dim * len(source_masks), field, rows)


def wedge_projection(n: int, dim: int, i: int, j: int, field: FieldSpec) -> SparseMatrix:
    """Projection of M (x) L^j onto the forms containing e_i."""
    bit = 1 << (i - 1)
    rows = {}
    for w, mask in enumerate(wedge_basis(n, j)):
        if mask & bit:
            for m in range(dim):
                rows[w * dim + m] = {w * dim + m: field.one}
    size = dim * len(wedge_basis(n, j))
    return SparseMatrix(size, size, field, rows)


def multiplication_chain_map(M: FiniteModule, i: int, K: ChainComplex | None = None) -> ChainMap:
    """T_i (x) id as a self-map of the Koszul complex."""
    K = K or koszul_complex(M)
    components = tuple(
        _block_diagonal(M.action(i), len(wedge_basis(M.num_vars, j))) for j in K.degrees
    )
    return ChainMap(K, K, components)


def multiplication_homotopy(M: FiniteModule, i: int, K: ChainComplex | None = None) -> Homotopy:
    """The witness h = e_i ^ - for d h + h d = T_i (x) id."""
    if not 1 <= i <= M.num_vars:
        raise DimensionMismatchError(f"Variable index {i} outside 1..{M.num_vars}")
    K = K or koszul_complex(M)
    components = tuple(
        wedge_multiplication(M.num_vars, M.dim, i, j, M.field) for j in K.degrees
    )
    return Homotopy(multiplication_chain_map(M, i, K), zero_chain_map(K, K), components)


def transition_homotopy(f: ModuleMap, lift: SparseMatrix, i: int,
                        source: ChainComplex | None = None,
                        target: ChainComplex | None = None) -> Homotopy:
    """Homotopy between F = f (x) id and F . pi_i for a map f = t_i . lift.

    Requires T_i = 0 on the source and ``lift`` commuting with every other
    T_k. Components are (e_i ^ -) . (lift (x) id). In degree 0, pi_i = 0, so
    F_0 is a boundary: f is zero on Tor_0.
    """
    M, N = f.source, f.target
    if not M.action(i).is_zero():
        raise InvariantViolation(f"t_{i} does not act by zero on the source")
    if f.matrix != N.action(i) @ lift:
        raise InvariantViolation(f"Map is not t_{i} composed with the given lift")
    for k in range(1, M.num_vars + 1):
        if k != i and (lift @ M.action(k)) != (N.action(k) @ lift):
            raise InvariantViolation(f"Lift does not commute with t_{k}")

    F = induced_chain_map(f, source, target)
    n, field = M.num_vars, M.field
    G = ChainMap(
        F.source, F.target,
        tuple(F.component(j) @ wedge_projection(n, M.dim, i, j, field) for j in F.source.degrees),
    )
    components = tuple(
        wedge_multiplication(n, N.dim, i, j, field) @ _block_diagonal(lift, len(wedge_basis(n, j)))
        for j in F.source.degrees
    )
    return Homotopy(F, G, components)


def compose_homotopies(second: Homotopy, first: Homotopy) -> Homotopy:
    """From F1 ~ G1 and F2 ~ G2 build F2 F1 ~ G2 G1 with components F2 H1 + H2 G1."""
    F = compose_chain_maps(second.f, first.f)
    G = compose_chain_maps(second.g, first.g)
    source = first.f.source
    components = tuple(
        (second.f.component(source.previous_degree(j)) @ first.component(j))
        + (second.component(j) @ first.g.component(j))
        for j in source.degrees
    )
    return Homotopy(F, G, components)


def dualize_complex(C: ChainComplex) -> ChainComplex:
    """Dual complex: same term dimensions, transposed differentials, flipped orientation."""
    orientation = C.orientation.flipped()
    differentials = {C.next_degree(j): d.transpose() for j, d in C.differentials.items()}
    return ChainComplex(C.field, C.terms, differentials, orientation)


def _require_nilpotent(M: FiniteModule):
    report = validate(M)
    if not report.commuting or any(d is None for d in report.nilpotency_degrees):
        raise InvariantViolation(
            f"{M.name or 'Module'} is not a nilpotent commuting representation",
            witness=report.violations[0].witness if report.violations else None,
            report=report,
        )


def ce_cohomology(M: FiniteModule) -> HomologyTable:
    _require_nilpotent(M)
    return homology(ce_complex(M))


def ce_cohomology_dims(M: FiniteModule, dense_limit: int = DENSE_FALLBACK_LIMIT) -> list:
    _require_nilpotent(M)
    return homology_dims(ce_complex(M), dense_limit)
