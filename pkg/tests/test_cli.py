import json
import math

import pytest

from conftest import SPECS
from kothedim.cli import SpecError, dumps, main, parse_spec


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_examples():
    s = parse_spec('{"family":"power_series","R":"inf","alpha":"log_n"}')
    assert s.family.generator.R == math.inf
    assert parse_spec('{"family":"l1"}').family.describe() == "l1"
    with pytest.raises(SpecError, match="R ≥ 1 required"):
        parse_spec('{"family":"power_series","R":0.5,"alpha":"linear"}')


@pytest.mark.parametrize("text,path", [
    ('{"family":"l1","colour":1}', "colour"),
    ('{"family":"cubes"}', "family"),
    ('{"family":"l1","R":2}', "R"),
    ('{"family":"power_series","R":2}', "parameters"),
    ('{"family":"power_series","R":2,"alpha":"cubic"}', "alpha"),
    ('{"family":"power_series","R":2,"alpha":"linear","grid":"exp"}', "grid"),
    ('{"family":"l1","options":{"depth":3}}', "options.depth"),
    ('{"family":"explicit","weights":[[1,2],[0.5,3]]}', "weights"),
    ('{"family":"explicit","weights":[[0,1],[0,2]]}', "weights[1]"),
    ('{"family":"explicit","weights":[[1,-2]]}', "weights[0][1]"),
    ('[1]', "$"),
    ('{', "$"),
])
def test_validation_paths(text, path):
    with pytest.raises(SpecError) as exc:
        parse_spec(text)
    assert exc.value.path == path


def test_analyze_l1(capsys):
    code, out, err = run(capsys, "analyze", str(SPECS / "l1.json"))
    assert code == 0
    rep = json.loads(out)
    assert rep["dimensions"] == {"dg": 2, "db": 2, "wdg": 2, "wdb": 2}
    assert "dg = db = 2" in err


def test_analyze_matrix_example(capsys):
    code, out, _ = run(capsys, "analyze", str(SPECS / "matrix_example.json"), "--quiet")
    rep = json.loads(out)
    assert code == 0 and rep["dimensions"]["dg"] == 2 and rep["dimensions"]["wdg"] == 1


def test_analyze_is_byte_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(capsys, "analyze", str(SPECS / "s.json"), "--quiet", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_infinite_dimension_serialised_as_string(capsys):
    code, out, _ = run(capsys, "analyze", str(SPECS / "h_d2.json"), "--quiet")
    assert json.loads(out)["dimensions"]["dg"] == "inf"


def test_strict_unknown_exit(capsys):
    spec = str(SPECS / "explicit_decay.json")
    assert run(capsys, "analyze", spec, "--quiet")[0] == 0
    assert run(capsys, "analyze", spec, "--quiet", "--strict")[0] == 3


def test_small_radius_rejected_at_parse_time(capsys, tmp_path):
    spec = tmp_path / "p.json"
    spec.write_text(json.dumps({"family": "power_series", "R": 0.5, "alpha": "linear"}))
    code, _, err = run(capsys, "analyze", str(spec))
    assert code == 2 and "R ≥ 1 required" in err


def test_not_an_algebra_and_internal_exit_codes(capsys, monkeypatch):
    import kothedim.cli as cli
    from kothedim.conditions import NotAnAlgebra
    from kothedim.kothe_ops import CertificateError

    def boom(exc):
        def f(*a, **k):
            raise exc
        return f

    spec = str(SPECS / "l1.json")
    monkeypatch.setattr(cli, "classify_dimensions", boom(NotAnAlgebra("no")))
    assert run(capsys, "analyze", spec)[0] == 4
    monkeypatch.setattr(cli, "classify_dimensions", boom(CertificateError("bad")))
    assert run(capsys, "analyze", spec)[0] == 5
    monkeypatch.setattr(cli, "classify_dimensions", boom(ZeroDivisionError()))
    assert run(capsys, "analyze", spec)[0] == 5


def test_check_b_on_disk_of_radius_two(capsys):
    code, out, _ = run(capsys, "check", "B", str(SPECS / "h_d2.json"), "--quiet")
    v = json.loads(out)["verdict"]
    assert code == 0 and v["status"] == "Fails" and v["soundness"] == "Exact"


def test_check_unknown_condition(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["check", "Q", str(SPECS / "l1.json")])
    assert exc.value.code == 2


def test_bar_command(capsys, tmp_path):
    csv = tmp_path / "t.csv"
    code, out, _ = run(capsys, "bar", str(SPECS / "l1.json"), "--arity", "3", "--trunc", "3",
                       "--quiet", "--csv", str(csv))
    rep = json.loads(out)
    assert code == 0
    assert rep["d_squared"]["checked"] == 39 and rep["d_squared"]["violations"] == []
    assert rep["openness"]["status"] == "Bounded"
    assert csv.read_text().startswith("N',k,m,R")


def test_eval_weight_two_on_e5_for_s(capsys, tmp_path):
    el = tmp_path / "x.json"
    el.write_text("[[5, 1, 0]]")
    code, out, _ = run(capsys, "eval", str(SPECS / "s.json"), "--weight", "2", "--element", str(el))
    rep = json.loads(out)
    assert code == 0
    assert rep["l1"] == pytest.approx(25.0, rel=1e-14)
    assert rep["sup"] == pytest.approx(25.0, rel=1e-14)


def test_eval_rejects_bad_index(capsys, tmp_path):
    el = tmp_path / "x.json"
    el.write_text("[[0, 1, 0]]")
    assert run(capsys, "eval", str(SPECS / "s.json"), "--weight", "1", "--element", str(el))[0] == 2
    el.write_text('[[1, 1, 0]]')
    assert run(capsys, "eval", str(SPECS / "matrix_example.json"), "--weight", "1", "--element", str(el))[0] == 2


def test_missing_file_is_input_error(capsys, tmp_path):
    assert run(capsys, "analyze", str(tmp_path / "nope.json"))[0] == 2


def test_dumps_handles_non_finite():
    text = dumps({"b": math.inf, "a": -math.inf, "c": (1, 2.5)})
    assert json.loads(text) == {"a": "-inf", "b": "inf", "c": [1, 2.5]}
    assert text.index('"a"') < text.index('"b"')
