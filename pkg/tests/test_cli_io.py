import json
from fractions import Fraction

import pytest
from pydantic import ValidationError

from cyclic_engine.cli_io import (
    ParsedInputs,
    RunConfig,
    canonical_json,
    emit_report,
    load_algebra,
    load_cdga,
    load_cocycle,
    load_nerve,
    load_report,
    load_three_cochain,
    main,
    parse_twist,
    render_text,
    run_command,
)
from cyclic_engine.validation import CyclicEngineValidationError, ResourceCapError

from .conftest import BOUNDARY_4SIMPLEX_COCYCLE_FIXTURE, DUAL_NUMBERS_FIXTURE, M2_FIXTURE, S3_FIXTURE


def _rows(report, table: str) -> dict[int, int | None]:
    return {row.degree: row.dim for row in report.tables if row.table == table and row.certified}


def test_bundled_fixtures_load():
    m2 = load_algebra("m2.json")
    assert m2.dim == 4
    assert m2.labels == ("E11", "E12", "E21", "E22")
    assert load_algebra(str(DUAL_NUMBERS_FIXTURE)).labels == ("1", "x")
    assert not load_algebra("nilpotent.json").is_unital

    s3, twist = load_cdga(str(S3_FIXTURE))
    assert twist == s3.element({"x3": 1})

    assert load_nerve("suspension_rp2.json").dimension == 3
    g = load_cocycle("clock_shift.json")
    assert (g.N, g.n) == (3, 3)


def test_broken_algebra_file_names_the_triple(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps({"labels": ["a", "b"], "products": [[0, 0, [[1, 1, 1]]], [1, 0, [[0, 1, 1]]]]}))
    with pytest.raises(CyclicEngineValidationError, match=r"\(a, a, a\)"):
        load_algebra(str(path))


def test_schema_violations_are_reported(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"labels": ["1"], "products": [[0, 3, []]]}))
    with pytest.raises(CyclicEngineValidationError, match="Schema violation in") as exc_info:
        load_algebra(str(path))
    assert "outside 0..0" in exc_info.value.error_msgs[0]

    path.write_text(json.dumps({"name": "both", "generators": [["x", 3]], "labels": ["1"], "degrees": [0]}))
    with pytest.raises(CyclicEngineValidationError, match="exactly one of"):
        load_cdga(str(path))

    path.write_text("[1, 2]")
    with pytest.raises(CyclicEngineValidationError, match="JSON object"):
        load_nerve(str(path))

    with pytest.raises(CyclicEngineValidationError, match="is not a bundled fixture"):
        load_algebra("no_such_algebra.json")


def test_parse_twist(s3, s2xs3):
    assert parse_twist(s3, "x3") == s3.element({"x3": 1})
    assert parse_twist(s3, "0") == {}
    assert parse_twist(s2xs3, "2*b3 - 1/2*a2b3") == s2xs3.element({"b3": 2, "a2b3": Fraction(-1, 2)})
    assert parse_twist(s2xs3, "-b3") == s2xs3.element({"b3": -1})
    with pytest.raises(CyclicEngineValidationError, match="not a basis label"):
        parse_twist(s3, "y")
    with pytest.raises(CyclicEngineValidationError, match="Cannot read the coefficient"):
        parse_twist(s3, "a*x3")


def test_hochschild_report():
    report = run_command(RunConfig(command="hh", algebra=str(M2_FIXTURE), max_degree=4))
    assert _rows(report, "HH") == {0: 1, 1: 0, 2: 0, 3: 0}
    assert "Omega" not in {row.table for row in report.tables}

    report = run_command(RunConfig(command="hh", algebra="dual_numbers.json", max_degree=4))
    assert _rows(report, "Omega") == {0: 2, 1: 1, 2: 0, 3: 0}


def test_twisted_report_on_s3():
    report = run_command(RunConfig(command="twisted", cdga="s3.json"))
    assert _rows(report, "H_twisted") == {n: 0 for n in range(1, 6)}
    assert _rows(report, "H_untwisted") == {0: 1, 1: 0, 2: 0, 3: 1}

    report = run_command(RunConfig(command="twisted", cdga="s3.json", twist="0"))
    assert _rows(report, "H_twisted") == {n: 1 for n in range(1, 6)}


def test_twist_must_be_a_three_form():
    with pytest.raises(CyclicEngineValidationError, match="not a 3-form"):
        run_command(RunConfig(command="twisted", cdga="s2xs3.json", twist="a2"))


def test_dd_report_on_boundary_cocycle():
    report = run_command(RunConfig(command="dd", cocycle=str(BOUNDARY_4SIMPLEX_COCYCLE_FIXTURE), samples=3))
    assert report.flags["delta_epsilon_zero_mod_N"]
    assert report.flags["delta_n_zero"]
    assert report.flags["liftable"]
    assert report.flags["class_is_zero"]
    assert report.classes[0].torsion == []
    assert report.failures == 0


def test_dd_report_from_torsion():
    report = run_command(RunConfig(command="dd", nerve="suspension_rp2.json", torsion=2))
    assert not report.flags["class_is_zero"]
    assert not report.flags["liftable"]
    assert report.classes[0].torsion == [(1, 2)]
    assert report.failures == 0

    with pytest.raises(CyclicEngineValidationError, match="--torsion"):
        run_command(RunConfig(command="dd", nerve="suspension_rp2.json"))


def test_class_compare():
    report = run_command(
        RunConfig(command="class-compare", first="generator_cochain.json", second="boundary_4simplex_cocycle.json")
    )
    assert not report.flags["equal"]
    assert [record.name for record in report.classes] == ["first", "second"]

    report = run_command(
        RunConfig(command="class-compare", first="generator_cochain.json", second="generator_cochain.json")
    )
    assert report.flags["equal"]

    nerve, n = load_three_cochain("generator_cochain.json")
    assert n == {(0, 1, 2, 3): 1}
    assert nerve.dimension == 3


def test_reports_are_reproducible(tmp_path):
    cfg = RunConfig(command="hc", algebra="ground_field.json", max_degree=5)
    first, second = run_command(cfg), run_command(cfg)
    assert canonical_json(first) == canonical_json(second)

    path = tmp_path / "reports" / "hc.json"
    payload = emit_report(first, "json", path)
    assert path.read_text() == payload
    assert canonical_json(load_report(path)) == canonical_json(first)

    text = render_text(first)
    assert text.startswith("cyclic_engine ")
    assert "HC:" in text


def test_main_writes_report_to_stdout(capsys):
    assert main(["hh", "--algebra", "m2.json", "--max-degree", "3"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["config"]["command"] == "hh"
    assert payload["tool"] == "cyclic_engine"


def test_main_writes_report_to_file(tmp_path, capsys):
    out = tmp_path / "twisted.txt"
    assert main(["twisted", "--cdga", "s3.json", "--format", "text", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert "H_twisted:" in out.read_text()


def test_main_exit_codes(capsys):
    assert main(["hh", "--algebra", "missing.json"]) == 1
    assert "does not exist" in capsys.readouterr().err

    assert main(["twisted", "--cdga", "s3.json", "--window", "1"]) == 1
    assert "invalid option window" in capsys.readouterr().err

    assert main(["hh", "--algebra", "m2.json", "--cap", "10"]) == 2
    assert "resource cap" in capsys.readouterr().err


def test_twisted_report_is_stabilized_on_interior_degrees(capsys):
    assert main(["twisted", "--cdga", "s3.json", "--twist", "x3", "--window", "6"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["flags"]["stabilized"] is True

    report = run_command(RunConfig(command="twisted", cdga="s3.json", twist="x3", window=6))
    assert report.flags["stabilized"]
    edges = {row.degree for row in report.tables if row.table == "H_twisted" and not row.certified}
    assert edges == {0, 6}


def test_limits_reach_every_command(monkeypatch):
    monkeypatch.setenv("CYCLIC_ENGINE_MAX_PAGES", "3")
    with pytest.raises(ResourceCapError, match="page cap of 3"):
        run_command(RunConfig(command="ss", cdga="s2xs3.json", twist="b3", pages=5))

    with pytest.raises(ResourceCapError, match="above the cap of 10"):
        run_command(RunConfig(command="chern", algebra="dual_numbers.json", samples=1, cap=10))


def test_cap_flag_reaches_chern_budget(capsys):
    assert main(["chern", "--algebra", "dual_numbers.json", "--samples", "1", "--cap", "10"]) == 2
    assert "resource cap" in capsys.readouterr().err


def test_periodic_report_on_dual_numbers():
    report = run_command(RunConfig(command="hp", algebra="dual_numbers.json", max_degree=4))
    assert _rows(report, "HP") == {0: 1, 1: 0}
    assert report.flags["stabilized"]


def test_parsed_inputs_hold_loaded_objects():
    inputs = ParsedInputs(algebra=load_algebra("m2.json"))
    report = run_command(RunConfig(command="hh", algebra="unused.json", max_degree=3), inputs)
    assert _rows(report, "HH") == {0: 1, 1: 0, 2: 0}
    with pytest.raises(ValidationError):
        ParsedInputs(algebra="m2.json")
