import json
import re
import shlex
from pathlib import Path

import pytest

from kroncirc.cli import EXIT_CAP, EXIT_FAIL, EXIT_INPUT, EXIT_OK, run
from kroncirc.store import load_circuit, save_circuit

README = Path(__file__).resolve().parents[1] / "README.md"
NUMBER = re.compile(r"-?\d+\.\d+|-?\d+")


def readme_session():
    text = README.read_text()
    block = re.search(r"```console\n(.*?)```", text, re.S).group(1)
    cases, cmd, out = [], None, []
    for line in block.splitlines():
        if line.startswith("$ kroncirc "):
            if cmd is not None:
                cases.append((cmd, out))
            cmd, out = shlex.split(line[len("$ kroncirc ") :]), []
        else:
            out.append(line)
    cases.append((cmd, out))
    return cases


def same_output(got: str, want: list[str]) -> bool:
    g, w = got.rstrip("\n").splitlines(), want
    if len(g) != len(w):
        return False
    for a, b in zip(g, w):
        if NUMBER.sub("#", a) != NUMBER.sub("#", b):
            return False
        for x, y in zip(NUMBER.findall(a), NUMBER.findall(b)):
            if "." in x or "." in y:
                if abs(float(x) - float(y)) > 1e-4:
                    return False
            elif int(x) != int(y):
                return False
    return True


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("KRONCIRC_CACHE", str(tmp_path / "cache"))
    return tmp_path


def test_readme_session_replays(workdir, capsys):
    cases = readme_session()
    assert len(cases) >= 10
    for argv, want in cases:
        code = run(argv)
        got = capsys.readouterr().out
        assert code == EXIT_OK, argv
        assert same_output(got, want), f"{argv}\n{got}"


def test_exponent_json(capsys):
    assert run(["exponent", "--family", "wh", "--k", "6", "--json"]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["changes"] == 1792
    assert abs(obj["c"] - 1.4422) < 1e-4


def test_flags_before_or_after_subcommand(capsys):
    assert run(["--json", "exponent", "--family", "js"]) == EXIT_OK
    a = json.loads(capsys.readouterr().out)
    assert run(["exponent", "--family", "js", "--json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == a


def test_mixed_product_build_and_random_verify(workdir, capsys):
    assert run(["build", "--method", "mixed-product", "--base", "h1", "--n", "12", "--depth", "2", "--out", "h12"]) == EXIT_OK
    capsys.readouterr()
    assert run(["verify", "--circuit", "h12", "--mode", "random", "--trials", "20", "--json"]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["report"]["pass"] is True and obj["size_report"]["total"] == 2 * 4**6 * 2**6
    assert run(["verify", "--circuit", "h12", "--mode", "exact"]) == EXIT_OK


def test_verify_fails_on_tampered_circuit(workdir):
    assert run(["build", "--method", "mixed-product", "--base", "r1", "--n", "4", "--depth", "2", "--out", "c"]) == EXIT_OK
    c = load_circuit("c")
    f = c.factors[1]
    c.factors[1] = f.__class__.from_coo(f.rows, f.cols, [r for r, _, _ in f.entries], [k for _, k, _ in f.entries], [v + 1 for *_, v in f.entries])
    save_circuit(c, "bad")
    assert run(["verify", "--circuit", "bad", "--mode", "exact"]) == EXIT_FAIL
    assert run(["verify", "--circuit", "bad", "--mode", "random", "--trials", "3"]) == EXIT_FAIL


def test_input_errors_exit_2(workdir):
    assert run(["build", "--n", "2"]) == EXIT_INPUT  # auto needs --decomp
    assert run(["stats", "--decomp", "nonsense"]) == EXIT_INPUT
    assert run(["stats", "--decomp", "onehot:x9"]) == EXIT_INPUT
    assert run(["verify", "--circuit", "missing"]) == EXIT_INPUT
    assert run(["exponent", "--family", "wh"]) == EXIT_INPUT  # no --k
    assert run(["--field", "GF4", "exponent", "--family", "js"]) == EXIT_INPUT
    assert run(["no-such-command"]) == EXIT_INPUT
    assert run(["rigidity", "construct", "--family", "kron2", "--omega", "1", "--k", "3"]) == EXIT_INPUT


def test_refused_build_exits_2(workdir, tmp_path):
    from kroncirc.decomp import from_partition, to_json
    from kroncirc.partition import RectPartition
    from kroncirc.presets import disjointness

    p = RectPartition(disjointness(2), [((0, 1), (0, 2)), ((0,), (1, 3)), ((2, 3), (0,)), ((2,), (1,))])
    path = tmp_path / "d.json"
    path.write_text(json.dumps(to_json(from_partition(p))))
    assert run(["build", "--decomp", f"file:{path}", "--n", "2"]) == EXIT_INPUT


def test_cap_exits_3(workdir, capsys):
    code = run(["build", "--decomp", "onehot:h1", "--n", "20", "--max-terms", "50"])
    assert code == EXIT_CAP
    assert "partial" in capsys.readouterr().err
    assert run(["verify", "--circuit", "nowhere", "--mode", "exact"]) == EXIT_INPUT


def test_exact_verify_over_cap_exits_3(workdir):
    assert run(["build", "--method", "mixed-product", "--base", "h1", "--n", "14", "--depth", "2", "--out", "h14"]) == EXIT_OK
    assert run(["verify", "--circuit", "h14", "--mode", "exact"]) == EXIT_CAP


def test_prime_field_flag(workdir, capsys):
    assert run(["--field", "GF5", "rigidity", "construct", "--family", "kron2", "--omega", "3", "--k", "4"]) == EXIT_OK
    assert "changes 96" in capsys.readouterr().out


def test_file_decomposition_round_trip(workdir, capsys):
    from kroncirc.decomp import gen_one_hot, to_json
    from kroncirc.presets import hadamard1

    Path("d.json").write_text(json.dumps(to_json(gen_one_hot(hadamard1()))))
    assert run(["stats", "--decomp", "file:d.json", "--json"]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["stats"]["one_sided"] is True


def test_rigidity_report_and_outputs(workdir, capsys):
    assert run(["rigidity", "report", "--nmax", "6", "--brute-max", "4"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "MISMATCH" not in out and out.count("ok") == 4
    assert run(["rigidity", "construct", "--family", "wh", "--k", "3", "--out", "w.json"]) == EXIT_OK
    assert json.loads(Path("w.json").read_text())
    assert run(["partition", "search", "--base", "r2", "--out", "p.json"]) == EXIT_OK
    assert json.loads(Path("p.json").read_text())["rects"]
