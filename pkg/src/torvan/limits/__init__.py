"""Directed systems of modules, their Tor towers, and vanishing certificates.

The tower of interest is paper_system(N): the quotients A_N/I_0 -> A_N/I_1
-> ... -> A_N/I_N, each step multiplication by the next variable. Its
colimit over N is the square-zero module with basis v_S.

Certified facts, for every level n of the truncation:

* each transition is injective and equivariant, and the vacuum embeddings
  into subset_module(N) form a compatible cocone;
* each transition is zero on Tor_0;
* a composite of j + 1 consecutive transitions is zero on Tor_j, with an
  explicit homotopy; a single transition is *not* zero on Tor_j for j >= 1
  (its rank is C(N-1, j-1));
* the CE cohomology of the dual of each level matches its Tor dimensions.

A class of degree j dies after j + 1 steps, so the colimit of Tor_j over the
infinite tower vanishes.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from math import comb

from torvan.complexes import (
    boundary_witness,
    ce_cohomology_dims,
    compose_homotopies,
    homology,
    induced_chain_map,
    induced_on_homology,
    koszul_complex,
    transition_homotopy,
)
from torvan.errors import DimensionMismatchError, InvariantViolation
from torvan.linalg import DENSE_FALLBACK_LIMIT, SparseMatrix, kernel, matrix_to_json, rank
from torvan.modules import (
    FiniteModule,
    ModuleMap,
    build_quotient_module,
    build_subset_module,
    build_transition_lift,
    cocone_check,
    dual_module,
    hom_to_trivial_basis,
    transition_matrix,
    vacuum_embedding,
    validate,
)
from torvan.scalars import RATIONALS, FieldSpec

LOGGER = logging.getLogger(__name__)

COLIMIT_CAVEAT = (
    "Finite truncation: the colimit of a finite chain is its last level. The statement "
    "about the infinite tower is inferred from the vanishing of composites, not computed."
)

CLAIMS = {
    "level-valid": "Each t_i acts nilpotently, in fact with square zero, and the t_i commute",
    "transition-equivariant": "The structure maps A/I_n -> A/I_{n+1} are module maps",
    "transition-injective": "Multiplication by t_{n+1} embeds A/I_n into A/I_{n+1}",
    "vacuum-cocone": "V = colim A/I_n via the vacuum vector 1 -> v_{1..n}",
    "top-level-iso": "The top level is the span of v_S, S in {1..N}",
    "hom-vanishing": "Every f: A/I_{n+1} -> k kills the image of t_{n+1}: f(v_S) = t_i f(v_{S+i}) = 0",
    "tor0-zero": "The transition is zero on Tor_0 (its image lies in m . A/I_{n+1})",
    "transition-homotopy": "F - F.pi = dH + Hd for H = (e_{n+1} ^ -) . (lift (x) id)",
    "transition-rank": "A single transition has rank C(N-1, j-1) on Tor_j",
    "composite-vanishing": "A composite of j+1 transitions is nullhomotopic in degree j, hence zero on Tor_j",
    "duality": "Ext^j(k, (A/I_n)^*) has the dimension of Tor_j(A/I_n, k)",
}


@dataclass(frozen=True, eq=False)
class DirectedSystem:
    """levels[m] -> levels[m+1] via transitions[m].

    ``lifts[m]`` and ``lift_variables[m]``, when given, exhibit
    transitions[m] as t_i . lift with t_i zero on levels[m]; they feed the
    homotopy witnesses. ``start`` numbers the first level in reports.
    ``square_zero_tower`` marks the levels A_N/I_n of the square-zero
    tower, which turns on the checks specific to it.
    """

    levels: tuple
    transitions: tuple
    lifts: tuple | None = None
    lift_variables: tuple | None = None
    name: str = ""
    start: int = 0
    square_zero_tower: bool = False

    def __post_init__(self):
        if len(self.transitions) != max(len(self.levels) - 1, 0):
            raise DimensionMismatchError(
                f"{len(self.levels)} levels need {len(self.levels) - 1} transitions"
            )
        num_vars = {M.num_vars for M in self.levels}
        if len(num_vars) > 1:
            raise DimensionMismatchError(f"Levels live over different rings: {sorted(num_vars)}")
        for m, t in enumerate(self.transitions):
            if t.source.dim != self.levels[m].dim or t.target.dim != self.levels[m + 1].dim:
                raise DimensionMismatchError(f"Transition {m} does not fit levels {m} and {m + 1}")

    @property
    def ambient(self):
        return self.levels[0].num_vars if self.levels else 0

    @property
    def field(self) -> FieldSpec:
        return self.levels[0].field


@dataclass(frozen=True, eq=False)
class VectorSystem:
    dims: tuple
    maps: tuple
    field: FieldSpec = RATIONALS

    def __post_init__(self):
        if len(self.maps) != max(len(self.dims) - 1, 0):
            raise DimensionMismatchError("A vector system needs one map per step")
        for m, A in enumerate(self.maps):
            if A.shape != (self.dims[m + 1], self.dims[m]):
                raise DimensionMismatchError(f"Map {m} has shape {A.shape}")


def paper_system(ambient: int, field: FieldSpec = RATIONALS,
                 start: int = 0, stop: int | None = None) -> DirectedSystem:
    """The levels A_N/I_start -> ... -> A_N/I_stop (the whole tower by default)."""
    if ambient < 1:
        raise DimensionMismatchError("The tower needs at least one variable")
    stop = ambient if stop is None else stop
    if not 0 <= start <= stop <= ambient:
        raise DimensionMismatchError(f"Levels {start}..{stop} must lie in 0..{ambient}")
    steps = range(start, stop)
    levels = tuple(build_quotient_module(ambient, n, field) for n in range(start, stop + 1))
    transitions = tuple(
        ModuleMap.create(levels[n - start], levels[n - start + 1], transition_matrix(n, field))
        for n in steps
    )
    lifts = tuple(build_transition_lift(ambient, n, field) for n in steps)
    return DirectedSystem(
        levels, transitions, lifts, tuple(n + 1 for n in steps),
        name=f"square-zero-tower:{ambient}", start=start, square_zero_tower=True,
    )


@dataclass(frozen=True, eq=False)
class TorTower:
    """Koszul complexes, homology tables and induced maps of a directed system."""

    complexes: tuple
    tables: tuple
    chain_maps: tuple
    systems: tuple


def _level_homology(level: FiniteModule):
    K = koszul_complex(level)
    return K, homology(K)


def tor_tower(S: DirectedSystem, workers: int = 1) -> TorTower:
    if workers > 1 and len(S.levels) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_level_homology, S.levels))
    else:
        results = [_level_homology(level) for level in S.levels]
    complexes = tuple(K for K, _ in results)
    tables = tuple(H for _, H in results)

    chain_maps = tuple(
        induced_chain_map(t, complexes[m], complexes[m + 1]) for m, t in enumerate(S.transitions)
    )
    induced = [
        induced_on_homology(F, tables[m], tables[m + 1]) for m, F in enumerate(chain_maps)
    ]
    systems = tuple(
        VectorSystem(
            tuple(H.dims[j] for H in tables),
            tuple(maps[j] for maps in induced),
            S.field,
        )
        for j in range(S.ambient + 1)
    )
    return TorTower(complexes, tables, chain_maps, systems)


def tor_system(S: DirectedSystem) -> list:
    """One VectorSystem per homological degree 0..N."""
    return list(tor_tower(S).systems)


def composite_map(S: VectorSystem, start: int, stop: int) -> SparseMatrix:
    """levels[start] -> levels[stop] along the chain."""
    result = SparseMatrix.identity(S.dims[start], S.field)
    for m in range(start, stop):
        result = S.maps[m] @ result
    return result


def colim_dim(S: VectorSystem) -> int:
    """The colimit of a finite chain is its last level."""
    if not S.dims:
        return 0
    return S.dims[-1]


def surviving_ranks(S: VectorSystem, dense_limit: int = DENSE_FALLBACK_LIMIT) -> list:
    last = len(S.dims) - 1
    return [rank(composite_map(S, m, last), dense_limit) for m in range(len(S.dims))]


def death_steps(S: VectorSystem) -> list:
    """Per level: the fewest steps after which everything is zero, or None."""
    steps = []
    for m in range(len(S.dims)):
        found = None
        for s in range(len(S.dims) - m):
            if composite_map(S, m, m + s).is_zero():
                found = s
                break
        steps.append(found)
    return steps


def transition_rank_table(S: DirectedSystem, tower: TorTower | None = None,
                          dense_limit: int = DENSE_FALLBACK_LIMIT) -> list:
    tower = tower or tor_tower(S)
    return [
        [rank(system.maps[m], dense_limit) for system in tower.systems]
        for m in range(len(S.transitions))
    ]


def colimit_summary(tower: TorTower, dense_limit: int = DENSE_FALLBACK_LIMIT) -> list:
    """Per degree: level dims, the finite colimit and how long classes survive."""
    return [
        {
            "degree": j,
            "dims": list(system.dims),
            "colim_dim": colim_dim(system),
            "surviving_ranks": surviving_ranks(system, dense_limit),
            "death_steps": death_steps(system),
        }
        for j, system in enumerate(tower.systems)
    ]


@dataclass
class Check:
    name: str
    status: str
    level: int | None = None
    degree: int | None = None
    witness: object = None

    def to_json(self):
        doc = {"name": self.name, "status": self.status, "claim": CLAIMS[self.name]}
        if self.level is not None:
            doc["level"] = self.level
        if self.degree is not None:
            doc["degree"] = self.degree
        if self.witness is not None:
            doc["witness"] = self.witness
        return doc


@dataclass
class Certificate:
    ambient: int
    field: FieldSpec
    levels: list = dataclass_field(default_factory=list)
    checks: list = dataclass_field(default_factory=list)
    colimit: list = dataclass_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if c.status == "fail"]

    def add(self, name, ok, level=None, degree=None, witness=None):
        self.checks.append(Check(name, "pass" if ok else "fail", level, degree, witness))

    def skip(self, name, level=None, degree=None, reason=""):
        self.checks.append(Check(name, "skip", level, degree, reason or None))

    @property
    def conclusion(self) -> str:
        if not self.passed:
            names = sorted({c.name for c in self.failures})
            return f"Certificate FAILED: {', '.join(names)}."
        return (
            "All checks pass. Every transition vanishes on Tor_0 and every composite of j+1 "
            "consecutive transitions vanishes on Tor_j. In a directed system in which every "
            "element dies after finitely many steps the colimit is zero; Tor commutes with "
            "filtered colimits, so Tor_j(V, k) = 0 for all j, while every finite level has "
            "nonzero Tor and its dual nonzero group cohomology."
        )

    def to_json(self):
        return {
            "ambient": self.ambient,
            "field": self.field.render(),
            "levels": self.levels,
            "checks": [c.to_json() for c in self.checks],
            "colimit": self.colimit,
            "conclusion": self.conclusion,
            "caveat": COLIMIT_CAVEAT,
        }


def _render_vector(v: dict, field: FieldSpec) -> dict:
    return {str(i): field.render_value(x) for i, x in sorted(v.items())}


def _homotopy_witness(h, with_matrices: bool) -> dict:
    """Shape and size of every homotopy component; the matrices on request."""
    components = []
    for j, H in enumerate(h.components):
        entry = {"degree": j, "shape": list(H.shape), "nnz": H.nnz}
        if with_matrices:
            entry["matrix"] = matrix_to_json(H)
        components.append(entry)
    return {"components": components}


def _level_checks(cert: Certificate, S: DirectedSystem, tower: TorTower | None, dense_limit: int):
    for m, level in enumerate(S.levels):
        report = validate(level)
        ok = report.ok and report.commuting and all(report.square_zero)
        witness = report.violations[0].to_dict(S.field) if report.violations else {
            "nilpotency_degrees": list(report.nilpotency_degrees)
        }
        cert.add("level-valid", ok, level=S.start + m, witness=witness)

        if tower is None:
            cert.skip("duality", level=S.start + m, reason="no Tor tower")
            continue
        tor = tower.tables[m].dims
        try:
            ext = ce_cohomology_dims(dual_module(level), dense_limit)
        except InvariantViolation as e:
            cert.add("duality", False, level=S.start + m, witness=str(e))
            continue
        cert.add("duality", ext == tor, level=S.start + m, witness={"ext": ext, "tor": tor})


def _transition_checks(cert: Certificate, S: DirectedSystem) -> set:
    broken = set()
    for m, t in enumerate(S.transitions):
        level = S.start + m
        failure = t.equivariance_failure()
        if failure is not None:
            broken.add(m)
            i, witness = failure
            cert.add("transition-equivariant", False, level=level,
                     witness={"variable": i, "vector": _render_vector(witness, S.field)})
        else:
            cert.add("transition-equivariant", True, level=level)

        K = kernel(t.matrix)
        cert.add("transition-injective", K.dim == 0, level=level,
                 witness=_render_vector(K.basis[0], S.field) if K.dim else None)

        if m in broken:
            cert.skip("hom-vanishing", level=level, reason="transition is not equivariant")
            continue
        functionals = hom_to_trivial_basis(t.target)
        offending = [
            phi for phi in functionals.basis
            if t.matrix.transpose().matvec(phi)
        ]
        cert.add("hom-vanishing", not offending, level=level,
                 witness=_render_vector(offending[0], S.field) if offending
                 else {"functionals": functionals.dim})
    return broken


def _tower_checks(cert: Certificate, S: DirectedSystem, dense_limit: int):
    N, field = S.ambient, S.field
    for m, t in enumerate(S.transitions):
        n = S.start + m
        cert.add("vacuum-cocone", cocone_check(N, n, field, t.matrix), level=n)
    if S.start + len(S.levels) - 1 == N:
        top = vacuum_embedding(N, N, field)
        subset = build_subset_module(N, field)
        is_iso = top.matrix.nrows == subset.dim and rank(top.matrix, dense_limit) == subset.dim
        cert.add("top-level-iso", is_iso and top.equivariance_failure() is None, level=N)


def _homotopy_checks(cert: Certificate, S: DirectedSystem, tower: TorTower,
                     dense_limit: int, homotopy_matrices: bool):
    field = S.field
    steps = len(S.transitions)
    homotopies = {}
    for m, t in enumerate(S.transitions):
        level = S.start + m
        tor0 = tower.systems[0].maps[m]
        witness = None
        preimages = []
        if not tor0.is_zero():
            witness = {"nonzero_entries": tor0.nnz}
        else:
            for rep in tower.tables[m].representatives[0]:
                image_vector = tower.chain_maps[m].component(0).matvec(rep)
                x = boundary_witness(tower.complexes[m + 1], 0, image_vector)
                if x is None:
                    witness = {"unbounded_image": _render_vector(image_vector, field)}
                    break
                preimages.append(_render_vector(x, field))
        cert.add("tor0-zero", witness is None, level=level, degree=0,
                 witness=witness if witness is not None else {"preimages": preimages})

        if S.lifts is None:
            cert.skip("transition-homotopy", level=level, reason="no lift for this transition")
            continue
        try:
            homotopies[m] = transition_homotopy(
                t, S.lifts[m], S.lift_variables[m], tower.complexes[m], tower.complexes[m + 1]
            )
            cert.add("transition-homotopy", True, level=level,
                     witness=_homotopy_witness(homotopies[m], homotopy_matrices))
        except InvariantViolation as e:
            cert.add("transition-homotopy", False, level=level, witness=str(e))

    if S.square_zero_tower:
        N = S.ambient
        for m in range(steps):
            for j, system in enumerate(tower.systems):
                expected = comb(N - 1, j - 1) if j >= 1 else 0
                observed = rank(system.maps[m], dense_limit)
                cert.add("transition-rank", observed == expected, level=S.start + m, degree=j,
                         witness={"expected": expected, "observed": observed})

    for m in range(steps):
        composite = None
        for s in range(1, min(steps - m, len(tower.systems)) + 1):
            j = s - 1
            last = m + s - 1
            induced = composite_map(tower.systems[j], m, m + s)
            direct_ok = induced.is_zero()
            if last not in homotopies or (s > 1 and composite is None):
                composite = None
                cert.add("composite-vanishing", direct_ok, level=S.start + m, degree=j,
                         witness={"rank": rank(induced, dense_limit)})
                continue
            composite = homotopies[last] if s == 1 else compose_homotopies(homotopies[last], composite)
            residual_zero = composite.g.component(j).is_zero()
            cert.add("composite-vanishing", direct_ok and residual_zero, level=S.start + m,
                     degree=j, witness={
                         "rank": rank(induced, dense_limit),
                         "residual_zero": residual_zero,
                         "steps": s,
                         "homotopy": _homotopy_witness(composite, homotopy_matrices),
                     })


def vanishing_certificate(S: DirectedSystem, workers: int = 1,
                          dense_limit: int = DENSE_FALLBACK_LIMIT,
                          homotopy_matrices: bool = False) -> Certificate:
    """Run every check on ``S``; ``homotopy_matrices`` embeds the homotopy components."""
    cert = Certificate(S.ambient, S.field)
    LOGGER.info(f"Certifying {S.name or 'directed system'} with {len(S.levels)} levels")

    broken = _transition_checks(cert, S)
    if S.square_zero_tower:
        _tower_checks(cert, S, dense_limit)

    tower = None
    if not broken:
        tower = tor_tower(S, workers=workers)
        _homotopy_checks(cert, S, tower, dense_limit, homotopy_matrices)
        cert.colimit = colimit_summary(tower, dense_limit)
    else:
        LOGGER.warning(f"Transitions {sorted(broken)} are not module maps; skipping Tor checks")

    _level_checks(cert, S, tower, dense_limit)

    cert.levels = [
        {
            "level": S.start + m,
            "dim": level.dim,
            "module": level.name,
            "tor_dims": tower.tables[m].dims if tower else None,
        }
        for m, level in enumerate(S.levels)
    ]
    cert.checks.sort(key=lambda c: (
        -1 if c.level is None else c.level,
        -1 if c.degree is None else c.degree,
    ))
    LOGGER.info(f"Certificate {'passed' if cert.passed else 'failed'} with {len(cert.checks)} checks")
    return cert
