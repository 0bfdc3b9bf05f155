import json
import re

import pytest

from torvan.__main__ import (
    EXIT_CHECK_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    RunConfig,
    build_run_config,
    get_config_args,
    main,
    run,
)
from torvan.errors import InputError
from torvan.linalg.dense import dense_rank
from torvan.runmodes.kunneth import kunnethreport
from torvan.scalars import RATIONALS


def _run(capsys, *argv):
    with pytest.raises(SystemExit) as excinfo:
        main(list(argv))
    captured = capsys.readouterr()
    return excinfo.value.code, captured.out, captured.err


def test_tor_subset_module(capsys):
    code, out, _ = _run(capsys, "tor", "--module", "subset:3", "--output", "json")
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["dims"] == [1, 3, 3, 1]
    assert report["degrees"] == [0, 1, 2, 3]


def test_tor_trivial_module(capsys):
    code, out, _ = _run(capsys, "tor", "--module", "trivial:5", "--output", "json")
    assert code == EXIT_OK
    assert json.loads(out)["dims"] == [1, 5, 10, 10, 5, 1]


def test_tor_table_has_the_same_numbers(capsys):
    code, out, _ = _run(capsys, "tor", "--module", "subset:3")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert "degree\t0\t1\t2\t3" in lines
    assert "dims\t1\t3\t3\t1" in lines
    assert "status\tpass" in lines


def test_single_degree(capsys):
    code, out, _ = _run(capsys, "tor", "--module", "trivial:4", "--degrees", "2", "--output", "json")
    assert code == EXIT_OK
    assert json.loads(out)["dims"] == [6]


def test_degree_out_of_range(capsys):
    code, out, err = _run(capsys, "tor", "--module", "trivial:2", "--degrees", "5")
    assert code == EXIT_USAGE
    assert out == ""
    assert "Degree 5" in err


def test_ce_of_dual(capsys):
    code, out, _ = _run(capsys, "ce", "--module", "dual:subset:2", "--output", "json")
    assert code == EXIT_OK
    assert json.loads(out)["dims"] == [1, 2, 1]


def test_certify(capsys):
    code, out, _ = _run(capsys, "certify", "--ambient", "3", "--output", "json")
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["status"] == "pass"
    assert report["ambient"] == 3
    assert all(check["status"] == "pass" for check in report["checks"])
    assert "caveat" in report


def test_certify_is_byte_identical(capsys):
    _, first, _ = _run(capsys, "certify", "--ambient", "3", "--output", "json")
    _, second, _ = _run(capsys, "certify", "--ambient", "3", "--output", "json")
    assert first == second


def test_certify_table(capsys):
    code, out, _ = _run(capsys, "certify", "--ambient", "2", "--field", "fp:1009")
    assert code == EXIT_OK
    assert "field\tfp:1009" in out.splitlines()


def test_transition_check(capsys):
    code, out, _ = _run(capsys, "transition-check", "--ambient", "3", "--level", "1", "--output", "json")
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["module"] == "quotient:3:1 -> quotient:3:2"


def test_transition_check_needs_a_next_level(capsys):
    code, _, _ = _run(capsys, "transition-check", "--ambient", "3", "--level", "3")
    assert code == EXIT_USAGE


def test_kunneth_check(capsys):
    code, out, _ = _run(capsys, "kunneth-check", "--module", "subset:1*trivial:2", "--output", "json")
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["dims"] == report["predicted"] == [1, 3, 3, 1]
    assert [c["status"] for c in report["checks"]] == ["pass", "pass", "pass"]


def test_kunneth_default_factors(capsys):
    code, out, _ = _run(capsys, "kunneth-check", "--ambient", "3", "--level", "2", "--output", "json")
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["module"] == "quotient:1:1*quotient:1:1*trivial:1"
    assert report["dims"] == [1, 3, 3, 1]


@pytest.mark.parametrize("argv", [
    ["tor", "--field", "fp:8"],
    ["tor", "--module", "nonsense"],
    ["certify", "--ambient", "40"],
    ["certify", "--workers", "0"],
    ["tor", "--degrees", "some"],
])
def test_usage_errors(capsys, argv):
    code, out, _ = _run(capsys, *argv)
    assert code == EXIT_USAGE
    assert out == ""


def test_unknown_command(capsys):
    code, _, _ = _run(capsys, "plot")
    assert code == EXIT_USAGE


def _noncommuting_module(path):
    path.write_text(json.dumps({
        "field": "q",
        "num_vars": 2,
        "dim": 2,
        "actions": [
            {"rows": 2, "cols": 2, "entries": [[0, 1, "1"]]},
            {"rows": 2, "cols": 2, "entries": [[1, 0, "1"]]},
        ],
    }))
    return path


def test_validate_reports_violation(tmp_path, capsys):
    path = _noncommuting_module(tmp_path / "bad.json")
    code, out, _ = _run(capsys, "validate", "--module", str(path), "--output", "json")
    assert code == EXIT_CHECK_FAILED
    report = json.loads(out)
    assert report["validation"]["violations"][0]["kind"] == "noncommuting"
    assert report["validation"]["violations"][0]["witness"] == {"0": "1"}


def test_tor_of_invalid_module_is_a_usage_error(tmp_path, capsys):
    path = _noncommuting_module(tmp_path / "bad.json")
    code, out, err = _run(capsys, "tor", "--module", str(path))
    assert code == EXIT_USAGE
    assert out == ""
    assert "witness" in err


def test_validate_builtin(capsys):
    code, out, _ = _run(capsys, "validate", "--module", "subset:2")
    assert code == EXIT_OK
    assert "square_zero\tTrue\tTrue" in out.splitlines()


def test_export_file(tmp_path, capsys):
    target = tmp_path / "reports" / "tor.json"
    code, out, _ = _run(capsys, "tor", "--module", "subset:2", "--output", "json",
                        "--export-file", str(target))
    assert code == EXIT_OK
    assert out == ""
    assert json.loads(target.read_text())["dims"] == [1, 2, 1]
    assert [p.name for p in target.parent.iterdir()] == ["tor.json"]


def test_config_file_supplies_defaults(tmp_path, capsys):
    config = tmp_path / "config.yaml"
    config.write_text("defaults:\n  field: fp:7\n  output: json\n  ambient: 2\n")
    code, out, _ = _run(capsys, "tor", "--config-file", str(config))
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["field"] == "fp:7"
    assert report["module"] == "quotient:2:0"


def test_flags_override_config():
    args = get_config_args(["tor", "--field", "q", "--ambient", "3"])
    config = build_run_config(args, {"defaults": {"field": "fp:5", "ambient": 2}})
    assert config.field == RATIONALS
    assert config.ambient == 3


def test_run_config_validates_ranges():
    with pytest.raises(InputError):
        RunConfig(command="certify", field=RATIONALS, ambient=0)
    with pytest.raises(InputError):
        RunConfig(command="tor", field=RATIONALS, ambient=2, level=3)
    with pytest.raises(InputError):
        RunConfig(command="tor", field=RATIONALS, crosscheck_prime=12)


def test_run_returns_exit_code(capsys):
    config = RunConfig(command="tor", field=RATIONALS, module="subset:1", output="json")
    assert run(config) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["dims"] == [1, 1]


def test_negative_dimension_module_is_a_usage_error(tmp_path, capsys):
    path = tmp_path / "negative.json"
    path.write_text(json.dumps({"field": "q", "num_vars": 0, "dim": -3, "actions": []}))
    code, out, err = _run(capsys, "tor", "--module", str(path))
    assert code == EXIT_USAGE
    assert out == ""
    assert "non-negative" in err


def _integers(doc):
    if isinstance(doc, bool):
        return
    if isinstance(doc, int):
        yield doc
    elif isinstance(doc, dict):
        for value in doc.values():
            yield from _integers(value)
    elif isinstance(doc, list):
        for value in doc:
            yield from _integers(value)


@pytest.mark.parametrize("argv", [
    ["tor", "--module", "subset:3"],
    ["ce", "--module", "dual:subset:2"],
    ["validate", "--module", "quotient:3:2"],
    ["certify", "--ambient", "3"],
    ["transition-check", "--ambient", "4", "--level", "2"],
    ["kunneth-check", "--module", "subset:1*trivial:2"],
], ids=lambda argv: argv[0])
def test_table_carries_every_number_of_the_json(capsys, argv):
    code, out, _ = _run(capsys, *argv, "--output", "json")
    assert code == EXIT_OK
    numbers = set(_integers(json.loads(out)))

    code, table, _ = _run(capsys, *argv, "--output", "table")
    assert code == EXIT_OK
    tokens = set(re.findall(r"\d+", table))
    assert {str(abs(n)) for n in numbers} <= tokens


def test_tor_table_lists_sizes_and_terms(capsys):
    code, out, _ = _run(capsys, "tor", "--module", "subset:2")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert "num_vars\t2" in lines
    assert "dim\t4" in lines
    assert "terms\t4\t8\t4" in lines


def test_certify_table_lists_levels(capsys):
    code, out, _ = _run(capsys, "certify", "--ambient", "2")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert "level\tdim\tlevel_module\ttor_dims" in lines
    assert "0\t1\tquotient:2:0\t1 2 1" in lines
    assert "2\t4\tquotient:2:2\t1 2 1" in lines


def test_dense_limit_from_the_config_file_reaches_the_engine(tmp_path, capsys, monkeypatch):
    def refuse(M):
        raise AssertionError("dense rank used below a zero limit")

    monkeypatch.setattr("torvan.linalg.dense_rank", refuse)
    config = tmp_path / "config.yaml"
    config.write_text("linalg:\n  dense-fallback-limit: 0\n")
    for argv in (["tor", "--module", "subset:3"], ["certify", "--ambient", "3"]):
        code, out, _ = _run(capsys, *argv, "--config-file", str(config), "--output", "json")
        assert code == EXIT_OK
        assert json.loads(out)["status"] == "pass"


def test_run_passes_the_dense_limit_explicitly(capsys, monkeypatch):
    calls = []
    monkeypatch.setattr("torvan.linalg.dense_rank", lambda M: calls.append(M.shape) or 0)
    config = RunConfig(command="tor", field=RATIONALS, module="subset:2", output="json",
                       dense_fallback_limit=0)
    assert run(config) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["dims"] == [1, 2, 1]
    assert calls == []


def test_kunneth_oracle_is_independent_of_the_sparse_path(monkeypatch):
    dense_calls = []

    def refuse(M):
        raise AssertionError("sparse path reached the dense engine")

    def counting(M):
        dense_calls.append(M.shape)
        return dense_rank(M)

    monkeypatch.setattr("torvan.linalg.dense_rank", refuse)
    monkeypatch.setattr("torvan.runmodes.kunneth.dense_rank", counting)
    report = kunnethreport("quotient:1:1*trivial:2", RATIONALS, 1009, dense_limit=0)
    oracle = next(c for c in report["checks"] if c["name"] == "dense-oracle")
    assert oracle["status"] == "pass"
    assert oracle["witness"] == {"sparse": [1, 3, 3, 1], "dense": [1, 3, 3, 1]}
    assert len(dense_calls) == 3
