import json
from functools import reduce

import pytest

from torvan.errors import DimensionMismatchError, FieldMismatchError, InputError, InvariantViolation
from torvan.linalg import SparseMatrix, rank
from torvan.modules import (
    FiniteModule,
    ModuleMap,
    build_quotient_module,
    build_subset_module,
    build_transition_lift,
    build_transition_map,
    build_trivial_module,
    cocone_check,
    dual_map,
    dual_module,
    hom_to_trivial,
    hom_to_trivial_basis,
    nilpotency_degree,
    tensor_product,
    vacuum_embedding,
    validate,
)
from torvan.modules.catalog import is_builtin, load_module, module_to_json, parse_module
from torvan.scalars import RATIONALS

from conftest import F1009


@pytest.mark.parametrize("n", range(1, 11))
def test_subset_module_is_square_zero(n):
    M = build_subset_module(n)
    assert M.dim == 2 ** n
    for T in M.actions:
        assert (T @ T).is_zero()


def test_subset_action_removes_element():
    M = build_subset_module(3)
    # t_2 v_{1,2} = v_{1}
    assert M.action(2).column(0b011) == {0b001: 1}
    assert M.action(2).column(0b001) == {}
    assert M.label(0b011) == "v_{1,2}"


def test_quotient_module_shape():
    M = build_quotient_module(4, 2)
    assert (M.num_vars, M.dim) == (4, 4)
    assert M.action(3).is_zero() and M.action(4).is_zero()
    assert M.action(1).column(0b10) == {0b11: 1}
    assert M.label(0b11) == "t1*t2"
    with pytest.raises(DimensionMismatchError):
        build_quotient_module(2, 3)


def test_trivial_module_is_level_zero():
    T = build_trivial_module(3)
    Q = build_quotient_module(3, 0)
    assert T.dim == 1 and T.num_vars == 3
    assert T.actions == Q.actions


def test_nilpotency_degree():
    assert nilpotency_degree(SparseMatrix.zero(2, 2)) == 1
    assert nilpotency_degree(SparseMatrix.from_dense([[0, 1], [0, 0]])) == 2
    assert nilpotency_degree(SparseMatrix.from_dense([[0, 1, 0], [0, 0, 1], [0, 0, 0]])) == 3
    assert nilpotency_degree(SparseMatrix.identity(2)) is None


def _noncommuting():
    return [
        SparseMatrix.from_dense([[0, 1], [0, 0]]),
        SparseMatrix.from_dense([[0, 0], [1, 0]]),
    ]


def test_create_rejects_noncommuting_operators():
    with pytest.raises(InvariantViolation) as excinfo:
        FiniteModule.create(RATIONALS, 2, 2, _noncommuting(), name="bad")
    report = excinfo.value.report
    assert not report.commuting
    assert report.violations[0].kind == "noncommuting"
    assert report.violations[0].operators == (1, 2)
    assert excinfo.value.witness == {0: 1}


def test_validate_flags_non_nilpotent_operator():
    M = FiniteModule(RATIONALS, 1, 2, (SparseMatrix.identity(2),), locally_nilpotent=True)
    report = validate(M)
    assert report.commuting
    assert report.nilpotency_degrees == (None,)
    assert [v.kind for v in report.violations] == ["not-nilpotent"]


def test_validate_report_dict():
    report = validate(build_subset_module(2))
    assert report.to_dict(RATIONALS) == {
        "commuting": True,
        "nilpotency_degrees": [2, 2],
        "square_zero": [True, True],
        "violations": [],
    }


def test_module_shape_checks():
    with pytest.raises(DimensionMismatchError):
        FiniteModule(RATIONALS, 2, 2, (SparseMatrix.zero(2, 2),))
    with pytest.raises(DimensionMismatchError):
        FiniteModule(RATIONALS, 1, 2, (SparseMatrix.zero(3, 3),))


@pytest.mark.parametrize("N", range(1, 6))
def test_transitions_are_injective_module_maps(N):
    for n in range(N):
        t = build_transition_map(N, n)
        assert t.equivariance_failure() is None
        assert t.is_injective()
        assert t.is_injective(dense_limit=0)
        lift = build_transition_lift(N, n)
        assert t.matrix == t.target.action(n + 1) @ lift


def test_lift_is_not_a_module_map():
    source = build_quotient_module(2, 1)
    target = build_quotient_module(2, 2)
    with pytest.raises(InvariantViolation):
        ModuleMap.create(source, target, build_transition_lift(2, 1))


@pytest.mark.parametrize("N", range(1, 6))
def test_vacuum_embeddings_form_a_cocone(N):
    for n in range(N):
        later = vacuum_embedding(N, n + 1).matrix @ build_transition_map(N, n).matrix
        assert later == vacuum_embedding(N, n).matrix
        assert cocone_check(N, n)
        assert cocone_check(N, n, F1009)


def test_cocone_check_rejects_the_lift():
    assert not cocone_check(2, 1, transition=build_transition_lift(2, 1))


@pytest.mark.parametrize("N", range(1, 9))
def test_top_level_is_the_subset_module(N):
    top = vacuum_embedding(N, N)
    assert top.source.dim == top.target.dim == 2 ** N
    assert rank(top.matrix) == 2 ** N
    assert top.equivariance_failure() is None
    # 1 goes to v_{1..N}
    assert top.matrix.column(0) == {2 ** N - 1: 1}


@pytest.mark.parametrize("M", [
    build_subset_module(3),
    build_quotient_module(4, 2),
    build_trivial_module(2),
], ids=lambda M: M.name)
def test_hom_to_trivial_is_one_dimensional(M):
    assert hom_to_trivial(M) == 1


@pytest.mark.parametrize("N", range(1, 6))
def test_functionals_kill_the_image_of_a_transition(N):
    for n in range(N):
        t = build_transition_map(N, n)
        for phi in hom_to_trivial_basis(t.target).basis:
            assert t.matrix.transpose().matvec(phi) == {}


def test_dual_module_involution():
    M = build_quotient_module(3, 2)
    D = dual_module(M)
    assert D.name == "dual:quotient:3:2"
    assert D.action(1) == M.action(1).transpose()
    back = dual_module(D)
    assert back.name == M.name
    assert back.labels == M.labels
    assert back.actions == M.actions


def test_dual_reverses_composition():
    f = build_transition_map(3, 0)
    g = build_transition_map(3, 1)
    composite = g.compose(f)
    assert composite.matrix == g.matrix @ f.matrix
    assert composite.equivariance_failure() is None
    reversed_ = dual_map(f).compose(dual_map(g))
    assert dual_map(composite).matrix == reversed_.matrix
    assert reversed_.source.name == "dual:quotient:3:2"
    assert reversed_.target.name == "dual:quotient:3:0"
    for h in (f, g, composite):
        assert dual_map(h).equivariance_failure() is None


def test_tensor_product():
    P = tensor_product(build_subset_module(1), build_trivial_module(2))
    assert (P.num_vars, P.dim) == (3, 2)
    assert P.name == "subset:1*trivial:2"
    assert P.label(1) == "v_{1}|1"


@pytest.mark.parametrize("n", range(1, 7))
def test_subset_module_is_a_tensor_power(n):
    P = reduce(tensor_product, [build_subset_module(1)] * n)
    assert P.dim == 2 ** n
    assert P.actions == build_subset_module(n).actions


@pytest.mark.parametrize("M", [
    build_subset_module(2),
    build_quotient_module(3, 1),
], ids=lambda M: M.name)
def test_tensor_with_the_ground_field_is_the_module(M):
    unit = build_trivial_module(0)
    for P in (tensor_product(M, unit), tensor_product(unit, M)):
        assert (P.num_vars, P.dim) == (M.num_vars, M.dim)
        assert P.actions == M.actions


def test_tensor_product_puts_the_first_factor_low():
    P = tensor_product(build_subset_module(1), build_quotient_module(1, 0))
    assert P.dim == 2
    assert P.action(1) == build_subset_module(1).action(1)
    assert P.action(2).is_zero()


def test_tensor_product_field_mismatch():
    with pytest.raises(FieldMismatchError):
        tensor_product(build_subset_module(1), build_subset_module(1, F1009))


def test_parse_module_names():
    assert parse_module("subset:2*trivial:1").num_vars == 3
    assert parse_module("dual:quotient:3:1").name == "dual:quotient:3:1"
    assert parse_module("quotient:2:2", F1009).field == F1009


@pytest.mark.parametrize("name", ["quotient:2:3", "subset:-1", "subset:x", "bogus", "subset:1*", "quotient:2"])
def test_parse_module_rejects(name):
    with pytest.raises(InputError):
        parse_module(name)


def test_is_builtin():
    assert is_builtin("dual:subset:2*trivial:1")
    assert not is_builtin("subset:1*mine.json")


def test_json_module_file(tmp_path):
    M = build_quotient_module(2, 2)
    path = tmp_path / "quotient.json"
    path.write_text(json.dumps(module_to_json(M)))
    loaded = load_module(path)
    assert loaded.actions == M.actions
    assert loaded.labels == M.labels
    assert parse_module(str(path)).dim == 4


def test_json_module_file_errors(tmp_path):
    with pytest.raises(InputError):
        load_module(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(InputError):
        load_module(broken)
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"num_vars": 1, "dim": 2, "actions": []}))
    with pytest.raises(InputError):
        load_module(wrong)


@pytest.mark.parametrize("num_vars, dim", [(0, -3), (-1, 2)])
def test_negative_sizes_are_rejected(num_vars, dim):
    with pytest.raises(DimensionMismatchError):
        FiniteModule(RATIONALS, num_vars, dim, ())


def test_negative_dimension_in_a_module_file(tmp_path):
    path = tmp_path / "negative.json"
    path.write_text(json.dumps({"field": "q", "num_vars": 0, "dim": -3, "actions": []}))
    with pytest.raises(InputError):
        load_module(path)
