"""Finite-dimensional modules over k[t_1..t_n] given by commuting operators.

A module is a vector space of dimension ``dim`` with one square matrix per
variable. The built-in families are:

* ``subset_module(n)``: basis v_S for S in {1..n}, indexed by the bitmask
  of S, with t_i v_S = v_{S - i} when i is in S and 0 otherwise;
* ``quotient_module(N, n)``: A_N / I_n with I_n generated by t_1^2..t_n^2
  and t_{n+1}..t_N, basis the squarefree monomials t^U, U in {1..n},
  indexed by bitmask;
* ``trivial_module(N)``: the residue field k with every t_i acting by 0.
"""

import logging
from dataclasses import dataclass

from torvan.errors import DimensionMismatchError, FieldMismatchError, InvariantViolation
from torvan.linalg import DENSE_FALLBACK_LIMIT, SparseMatrix, Subspace, kernel, rank, vstack
from torvan.scalars import RATIONALS, FieldSpec

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Violation:
    kind: str
    operators: tuple
    witness: dict

    def to_dict(self, field: FieldSpec):
        return {
            "kind": self.kind,
            "operators": list(self.operators),
            "witness": {str(i): field.render_value(v) for i, v in sorted(self.witness.items())},
        }


@dataclass(frozen=True)
class ValidationReport:
    commuting: bool
    nilpotency_degrees: tuple
    square_zero: tuple
    violations: tuple

    @property
    def ok(self):
        return not self.violations

    def to_dict(self, field: FieldSpec):
        return {
            "commuting": self.commuting,
            "nilpotency_degrees": list(self.nilpotency_degrees),
            "square_zero": list(self.square_zero),
            "violations": [v.to_dict(field) for v in self.violations],
        }


@dataclass(frozen=True, eq=False)
class FiniteModule:
    field: FieldSpec
    num_vars: int
    dim: int
    actions: tuple
    labels: tuple | None = None
    locally_nilpotent: bool = False
    name: str = ""

    def __post_init__(self):
        if self.num_vars < 0 or self.dim < 0:
            raise DimensionMismatchError(
                f"Module sizes must be non-negative, got num_vars={self.num_vars}, dim={self.dim}"
            )
        if len(self.actions) != self.num_vars:
            raise DimensionMismatchError(
                f"{self.num_vars} variables but {len(self.actions)} action matrices"
            )
        for i, T in enumerate(self.actions, start=1):
            if T.shape != (self.dim, self.dim):
                raise DimensionMismatchError(
                    f"Action of t_{i} is {T.nrows}x{T.ncols}, expected {self.dim}x{self.dim}"
                )
            if T.field != self.field:
                raise FieldMismatchError(T.field, self.field)
        if self.labels is not None and len(self.labels) != self.dim:
            raise DimensionMismatchError(f"{len(self.labels)} labels for dimension {self.dim}")

    @classmethod
    def create(cls, field, num_vars, dim, actions, labels=None,
               locally_nilpotent=False, name="", check=True):
        module = cls(field, num_vars, dim, tuple(actions),
                     tuple(labels) if labels is not None else None,
                     locally_nilpotent, name)
        if check:
            report = validate(module)
            if not report.ok:
                first = report.violations[0]
                raise InvariantViolation(
                    f"Module {name or '<anonymous>'} fails {first.kind} "
                    f"for operators {first.operators}",
                    witness=first.witness,
                    report=report,
                )
        return module

    def action(self, i: int) -> SparseMatrix:
        """Matrix of t_i, with i counted from 1."""
        return self.actions[i - 1]

    def label(self, index: int) -> str:
        if self.labels is None:
            return f"e{index}"
        return self.labels[index]


@dataclass(frozen=True, eq=False)
class ModuleMap:
    source: FiniteModule
    target: FiniteModule
    matrix: SparseMatrix

    def __post_init__(self):
        if self.source.num_vars != self.target.num_vars:
            raise DimensionMismatchError(
                f"Source has {self.source.num_vars} variables, target {self.target.num_vars}"
            )
        if self.matrix.shape != (self.target.dim, self.source.dim):
            raise DimensionMismatchError(
                f"Map matrix is {self.matrix.nrows}x{self.matrix.ncols}, "
                f"expected {self.target.dim}x{self.source.dim}"
            )

    @classmethod
    def create(cls, source, target, matrix, check=True):
        module_map = cls(source, target, matrix)
        if check:
            failure = module_map.equivariance_failure()
            if failure is not None:
                i, witness = failure
                raise InvariantViolation(
                    f"Map is not equivariant for t_{i}", witness=witness
                )
        return module_map

    def equivariance_failure(self):
        """First ``(i, witness)`` with f T_i != T_i f, or None."""
        for i in range(1, self.source.num_vars + 1):
            defect = (self.matrix @ self.source.action(i)) - (self.target.action(i) @ self.matrix)
            if not defect.is_zero():
                column = min(j for _, j, _ in defect.entries())
                return i, {column: self.source.field.one}
        return None

    def compose(self, first: "ModuleMap") -> "ModuleMap":
        """``self . first``."""
        return ModuleMap(first.source, self.target, self.matrix @ first.matrix)

    def is_injective(self, dense_limit: int = DENSE_FALLBACK_LIMIT) -> bool:
        return rank(self.matrix, dense_limit) == self.source.dim


def nilpotency_degree(T: SparseMatrix) -> int | None:
    power = T
    for m in range(1, max(T.nrows, 1) + 1):
        if power.is_zero():
            return m
        power = power @ T
    return None


def validate(M: FiniteModule) -> ValidationReport:
    violations = []
    commuting = True
    for i in range(1, M.num_vars + 1):
        for j in range(i + 1, M.num_vars + 1):
            defect = (M.action(i) @ M.action(j)) - (M.action(j) @ M.action(i))
            if not defect.is_zero():
                column = min(c for _, c, _ in defect.entries())
                violations.append(Violation("noncommuting", (i, j), {column: M.field.one}))
                commuting = False
                break
        if not commuting:
            break

    degrees = []
    square_zero = []
    for i, T in enumerate(M.actions, start=1):
        degree = nilpotency_degree(T)
        degrees.append(degree)
        square_zero.append(degree is not None and degree <= 2)
        if degree is None and M.locally_nilpotent:
            top = T.power(M.dim)
            column = min(c for _, c, _ in top.entries())
            violations.append(Violation("not-nilpotent", (i,), {column: M.field.one}))

    report = ValidationReport(commuting, tuple(degrees), tuple(square_zero), tuple(violations))
    LOGGER.debug(f"Validated {M.name or 'module'}: {report}")
    return report


def _popcount(mask: int) -> int:
    return mask.bit_count()


def subset_label(mask: int) -> str:
    members = [str(i + 1) for i in range(mask.bit_length()) if mask >> i & 1]
    return "v_{" + ",".join(members) + "}"


def monomial_label(mask: int) -> str:
    members = [f"t{i + 1}" for i in range(mask.bit_length()) if mask >> i & 1]
    return "*".join(members) or "1"


def build_subset_module(n: int, field: FieldSpec = RATIONALS) -> FiniteModule:
    if n < 0:
        raise DimensionMismatchError("Number of variables must be non-negative")
    dim = 1 << n
    one = field.one
    actions = []
    for i in range(n):
        bit = 1 << i
        actions.append(
            SparseMatrix(dim, dim, field, {mask ^ bit: {mask: one} for mask in range(dim) if mask & bit})
        )
    return FiniteModule.create(
        field, n, dim, actions,
        labels=[subset_label(mask) for mask in range(dim)],
        locally_nilpotent=True, name=f"subset:{n}",
    )


def build_quotient_module(ambient: int, level: int, field: FieldSpec = RATIONALS) -> FiniteModule:
    if not 0 <= level <= ambient:
        raise DimensionMismatchError(f"Level {level} must lie in 0..{ambient}")
    dim = 1 << level
    one = field.one
    actions = []
    for i in range(ambient):
        bit = 1 << i
        if i < level:
            rows = {mask | bit: {mask: one} for mask in range(dim) if not mask & bit}
        else:
            rows = {}
        actions.append(SparseMatrix(dim, dim, field, rows))
    return FiniteModule.create(
        field, ambient, dim, actions,
        labels=[monomial_label(mask) for mask in range(dim)],
        locally_nilpotent=True, name=f"quotient:{ambient}:{level}",
    )


def build_trivial_module(ambient: int, field: FieldSpec = RATIONALS) -> FiniteModule:
    module = build_quotient_module(ambient, 0, field)
    return FiniteModule(field, ambient, 1, module.actions, ("1",), True, f"trivial:{ambient}")


def build_transition_map(ambient: int, level: int, field: FieldSpec = RATIONALS) -> ModuleMap:
    """A_N/I_n -> A_N/I_{n+1}, x -> t_{n+1} x."""
    if level + 1 > ambient or level < 0:
        raise DimensionMismatchError(f"Transition from level {level} needs ambient > {level}")
    source = build_quotient_module(ambient, level, field)
    target = build_quotient_module(ambient, level + 1, field)
    return ModuleMap.create(source, target, transition_matrix(level, field))


def transition_matrix(level: int, field: FieldSpec = RATIONALS) -> SparseMatrix:
    """Multiplication by t_{n+1} on monomial bases, 2^(n+1) x 2^n."""
    bit = 1 << level
    return SparseMatrix(
        2 * bit, bit, field, {mask | bit: {mask: field.one} for mask in range(bit)}
    )


def build_transition_lift(ambient: int, level: int, field: FieldSpec = RATIONALS) -> SparseMatrix:
    """The linear inclusion of monomial bases A_N/I_n -> A_N/I_{n+1}.

    Not a module map (t_{n+1} kills the source only), but the transition
    equals t_{n+1} composed with it.
    """
    return SparseMatrix(
        1 << (level + 1), 1 << level, field, {mask: {mask: field.one} for mask in range(1 << level)}
    )


def vacuum_embedding(ambient: int, level: int, field: FieldSpec = RATIONALS) -> ModuleMap:
    """A_N/I_n -> subset_module(N) sending the vacuum vector 1 to v_{1..n}.

    A monomial t^U goes to v_{{1..n} - U}. At level = ambient this is the
    relabelling of the top level onto the subset basis.
    """
    source = build_quotient_module(ambient, level, field)
    target = build_subset_module(ambient, field)
    full = (1 << level) - 1
    matrix = SparseMatrix(
        target.dim, source.dim, field, {full ^ mask: {mask: field.one} for mask in range(source.dim)}
    )
    return ModuleMap.create(source, target, matrix)


def cocone_check(
    ambient: int, level: int, field: FieldSpec = RATIONALS, transition: SparseMatrix | None = None
) -> bool:
    """vacuum_embedding(N, n+1) . transition == vacuum_embedding(N, n).

    ``transition`` defaults to multiplication by t_{n+1}.
    """
    if transition is None:
        transition = transition_matrix(level, field)
    later = vacuum_embedding(ambient, level + 1, field).matrix @ transition
    return later == vacuum_embedding(ambient, level, field).matrix


def dual_module(M: FiniteModule) -> FiniteModule:
    labels = None
    if M.labels is not None:
        labels = tuple(
            label[:-2] if label.endswith("^*") else f"{label}^*" for label in M.labels
        )
    name = M.name[5:] if M.name.startswith("dual:") else f"dual:{M.name}"
    return FiniteModule(
        M.field, M.num_vars, M.dim,
        tuple(T.transpose() for T in M.actions),
        labels, M.locally_nilpotent, name,
    )


def dual_map(f: ModuleMap) -> ModuleMap:
    """The transpose f^*: target^* -> source^*."""
    return ModuleMap(dual_module(f.target), dual_module(f.source), f.matrix.transpose())


def tensor_product(M: FiniteModule, M2: FiniteModule) -> FiniteModule:
    """M (x) M2 over the concatenated variables; basis index ``b * M.dim + a``.

    The first factor is the low digit, so the n-fold product of
    subset_module(1) is subset_module(n) in its bitmask order.
    """
    if M.field != M2.field:
        raise FieldMismatchError(M.field, M2.field)
    left_id = SparseMatrix.identity(M.dim, M.field)
    right_id = SparseMatrix.identity(M2.dim, M.field)
    actions = [right_id.kron(T) for T in M.actions] + [T.kron(left_id) for T in M2.actions]
    labels = None
    if M.labels is not None and M2.labels is not None:
        labels = [f"{a}|{b}" for b in M2.labels for a in M.labels]
    return FiniteModule.create(
        M.field, M.num_vars + M2.num_vars, M.dim * M2.dim, actions,
        labels=labels,
        locally_nilpotent=M.locally_nilpotent and M2.locally_nilpotent,
        name=f"{M.name}*{M2.name}",
    )


def hom_to_trivial_basis(M: FiniteModule) -> Subspace:
    """Functionals f on M (as vectors in M^*) with f . T_i = 0 for every i."""
    stacked = vstack([T.transpose() for T in M.actions], M.dim, M.field)
    return kernel(stacked)


def hom_to_trivial(M: FiniteModule) -> int:
    return hom_to_trivial_basis(M).dim
