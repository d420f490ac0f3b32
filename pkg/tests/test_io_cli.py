import json
import subprocess
import sys
from fractions import Fraction

import pytest
from hypothesis import given, settings

from egalitarian import (
    BipartiteGraph,
    GenerationExhausted,
    OneSidedInstance,
    ParseError,
    TwoSidedInstance,
    ValidationError,
    emit_instance,
    generate_random,
    load_fixture,
    parse_instance,
)
from egalitarian.cli import main
from egalitarian.instance_io import fixture_names

from helpers import one_sided_instances, two_sided_instances

MINIMAL = """{"model": "one_sided",
  "suppliers": [{"id": "a", "peak": "3/2", "lower": 0, "upper": 2}],
  "demanders": [{"id": "b", "peak": 1}],
  "links": [["a", "b"]]}"""


def doc(**changes):
    base = json.loads(MINIMAL)
    base.update(changes)
    return json.dumps(base)


def test_parse_minimal():
    inst = parse_instance(MINIMAL)
    assert isinstance(inst, OneSidedInstance)
    assert inst.s == (Fraction(3, 2),) and inst.upper == (2,) and inst.graph.links == {(0, 0)}
    assert inst.supplier_ids == ("a",)


@pytest.mark.parametrize("text, error", [
    (MINIMAL.replace('"3/2"', "0.5"), ParseError),
    (MINIMAL.replace('"3/2"', '"0.5"'), ParseError),
    (MINIMAL.replace('"lower": 0', '"lower": 2'), ValidationError),
    (MINIMAL.replace('"peak": 1', '"peak": -1'), ValidationError),
    (MINIMAL.replace('"upper": 2', '"upper": 2, "weight": 1'), ParseError),
    (doc(extra=1), ParseError),
    (doc(model="three_sided"), ParseError),
    (doc(links=[["a", "zz"]]), ValidationError),
    (doc(links=[["a", "b"], ["a", "b"]]), ValidationError),
    (MINIMAL[:-3], ParseError),
    (MINIMAL.replace('"3/2"', "NaN"), ParseError),
])
def test_parse_errors(text, error):
    with pytest.raises(error):
        parse_instance(text)


def test_two_sided_suppliers_have_no_bounds():
    text = doc(model="two_sided")
    with pytest.raises(ParseError):
        parse_instance(text)


def test_parse_error_has_position():
    with pytest.raises(ParseError, match="line 2"):
        parse_instance('{"model":\n  }')


@settings(max_examples=80, deadline=None)
@given(one_sided_instances(denominators=(1, 2, 3)))
def test_one_sided_round_trip(inst):
    back = parse_instance(emit_instance(inst))
    assert back == inst and emit_instance(back) == emit_instance(inst)


@settings(max_examples=80, deadline=None)
@given(two_sided_instances(denominators=(1, 2, 7)))
def test_two_sided_round_trip(inst):
    assert parse_instance(emit_instance(inst)) == inst
    assert "." not in emit_instance(inst)


def test_generate_is_deterministic():
    a = emit_instance(generate_random("one_sided", 3, 3, 0.5, (0, 4), seed=42))
    b = emit_instance(generate_random("one_sided", 3, 3, 0.5, (0, 4), seed=42))
    assert a == b
    assert a != emit_instance(generate_random("one_sided", 3, 3, 0.5, (0, 4), seed=43))


def test_generate_complete_graph():
    inst = generate_random("two_sided", 3, 4, 1.0, (0, 4), seed=1)
    assert inst.graph == BipartiteGraph.complete(3, 4)


def test_generate_exhausted():
    with pytest.raises(GenerationExhausted):
        generate_random("one_sided", 1, 3, 1.0, (0, 1), seed=0, demand_range=(2, 2), max_tries=50)


def test_fixtures_load():
    assert set(fixture_names()) >= {"lone_supplier", "link_coalition", "shortage_pair"}
    assert isinstance(load_fixture("link_coalition"), TwoSidedInstance)


# --- command line


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_cli_solve_lone_supplier(capsys):
    code, out = run(capsys, "solve", "--instance", "lone_supplier")
    assert code == 0 and out["x"] == {"s1": 2}


def test_cli_solve_file(tmp_path, capsys):
    path = tmp_path / "inst.json"
    path.write_text(MINIMAL)
    code, out = run(capsys, "solve", "--instance", str(path))
    assert code == 0 and out["x"] == {"a": 1}


def test_cli_exact_output(tmp_path, capsys):
    inst = TwoSidedInstance(BipartiteGraph(3, 1, frozenset({(0, 0), (1, 0), (2, 0)})), [1, 1, 1], [2])
    path = tmp_path / "three.json"
    path.write_text(emit_instance(inst))
    code, out = run(capsys, "solve", "--instance", str(path))
    assert code == 0 and out["x"] == {"s1": "2/3", "s2": "2/3", "s3": "2/3"} and out["y"] == {"d1": 2}


def test_cli_fuzz_peaks_fixtures(capsys):
    code, out = run(capsys, "fuzz-peaks", "--coalition", "2", "--all-fixtures")
    assert code == 0 and not any(r["found"] for r in out)


def test_cli_fuzz_links(capsys):
    code, out = run(capsys, "fuzz-links", "--side", "mixed", "--instance", "link_coalition")
    assert code == 1 and out["found"]
    code, out = run(capsys, "fuzz-links", "--side", "suppliers", "--instance", "link_coalition")
    assert code == 0 and not out["found"]


def test_cli_other_commands(capsys):
    assert run(capsys, "decompose", "--instance", "shortage_pair")[1]["suppliers_minus"] == ["s1", "s2"]
    assert run(capsys, "feasible", "--instance", "lone_supplier")[0] == 0
    code, out = run(capsys, "check-lorenz", "--instance", "shortage_pair")
    assert code == 0 and out["violations"] == 0
    code, out = run(capsys, "oracle-compare", "--all-fixtures")
    assert code == 0 and all(row["agree"] for r in out for row in r["passes"])
    code, out = run(capsys, "bossiness", "--instance", "link_coalition", "--links")
    assert code == 0


def test_cli_gen_round_trips(capsys):
    assert main(["gen", "--model", "one_sided", "--seed", "7"]) == 0
    text = capsys.readouterr().out
    assert emit_instance(parse_instance(text)) == text


def test_cli_usage_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(MINIMAL.replace('"3/2"', "1.5"))
    assert main(["solve", "--instance", str(bad)]) == 2
    assert main(["solve", "--instance", "no_such_fixture"]) == 2
    assert main(["fuzz-peaks", "--instance", "lone_supplier", "--grid-step", "0.5"]) == 2
    assert main(["bogus"]) == 2
    assert main(["fuzz-peaks", "--instance", "shortage_pair", "--coalition", "2", "--budget", "3"]) == 2


def test_console_script_module():
    out = subprocess.run([sys.executable, "-m", "egalitarian.cli", "solve", "--instance", "lone_supplier"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["x"] == {"s1": 2}
    assert "x = 2" in out.stderr
