import json
import shutil
import subprocess
from pathlib import Path

import pytest

from tausheaf.cli import main
from tausheaf.errors import ParseError
from tausheaf.problem import parse_problem

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"
LIT = "2^1 {{{}:1}} prec:exact"


def family_problem(va, vb, ops=("trivial",)):
    return {"version": 1, "session": {"p": 2, "prec": "32"},
            "objects": {"P": {"kind": "pink", "a": LIT.format(va), "b": LIT.format(vb),
                              "zeta": LIT.format(1)}},
            "commands": [{"op": op, "object": "P"} for op in ops]}


def write(tmp_path, raw, name="p.json"):
    path = tmp_path / name
    path.write_text(raw if isinstance(raw, str) else json.dumps(raw, indent=2))
    return str(path)


def line_of(text, needle):
    return text[:text.index(needle)].count("\n") + 1


def run_cli(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_round_trip():
    pf = parse_problem((PROBLEMS / "carlitz.json").read_text())
    again = parse_problem(pf.to_json())
    assert again.to_json() == pf.to_json()
    assert [c.op for c in again.commands] == [c.op for c in pf.commands]


def test_unknown_key_rejected():
    raw = family_problem(1, 0)
    raw["session"]["colour"] = "blue"
    text = json.dumps(raw, indent=2)
    with pytest.raises(ParseError) as info:
        parse_problem(text)
    assert info.value.line == line_of(text, '"colour"')


def test_json_syntax_error_location():
    with pytest.raises(ParseError) as info:
        parse_problem('{"version": 1,\n  "session": {"p": 2,}\n}')
    assert (info.value.line, info.value.column) == (2, 22)


def test_bad_literal_exit_code_and_location(tmp_path, capsys):
    raw = family_problem(1, 0)
    raw["objects"]["P"]["b"] = "2^1 {0:1 prec:exact"
    path = write(tmp_path, raw)
    code, out, err = run_cli(["trivial", "--problem", path], capsys)
    assert code == 1 and "tausheaf:" in err
    rep = json.loads(out)
    assert rep["status"] == "error"
    text = Path(path).read_text()
    assert rep["error"]["line"] == line_of(text, "{0:1 prec")
    assert rep["error"]["column"] > 1


def test_exit_codes(tmp_path, capsys):
    ok = write(tmp_path, family_problem(1, 0), "ok.json")
    assert run_cli(["trivial", "--problem", ok], capsys)[0] == 0
    undecided = write(tmp_path, family_problem(-1, -2), "u.json")
    code, out, _ = run_cli(["trivial", "--problem", undecided], capsys)
    assert code == 2 and json.loads(out)["status"] == "undetermined"
    code, _, _ = run_cli(["torsion"], capsys)
    assert code == 1


def test_output_is_byte_deterministic(tmp_path, capsys):
    args = ["verify-norm-law", "--problem", str(PROBLEMS / "pink.json")]
    first = run_cli(args, capsys)[1]
    second = run_cli(args, capsys)[1]
    assert first == second
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["remark72", "--json-out", str(a), "--g", "1"])
    main(["remark72", "--json-out", str(b), "--g", "1"])
    assert a.read_bytes() == b.read_bytes()


def test_scan_tsv(tmp_path, capsys):
    tsv = tmp_path / "grid.tsv"
    code, out, _ = run_cli(["scan", "--grid", "va=0:1,vb=0:1", "--horizon", "6",
                            "--tsv-out", str(tsv)], capsys)
    assert code == 0
    rows = [line.split("\t") for line in tsv.read_text().splitlines()]
    assert rows[0] == ["va", "vb", "verdict", "oracle", "agree"]
    assert len(rows) == 5 and all(r[-1] == "yes" for r in rows[1:])


def test_builtin_perturbation_reports_first_violation(capsys):
    code, out, _ = run_cli(["verify-norm-law", "--point", "va=-1,vb=-2",
                            "--perturb", "2:1/2"], capsys)
    assert code == 0
    res = json.loads(out)["results"][0]["result"]
    assert res["first_violation"] == 2


def test_periods_file(capsys):
    code, out, _ = run_cli(["periods", "--problem", str(PROBLEMS / "carlitz.json")], capsys)
    assert code == 0
    res = json.loads(out)["results"][0]["result"]
    assert res["slopes"][0] == "2"


@pytest.mark.skipif(shutil.which("tausheaf") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["tausheaf", "remark72", "--g", "0"], capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"][0]["result"]["action"]["fixes_solution"]
