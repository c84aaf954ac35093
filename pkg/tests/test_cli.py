import json

import pytest

from effortprop.cli import main
from effortprop.data import fixture_path

CASE_STUDY = str(fixture_path("highschool"))
SYNTH = str(fixture_path("highschool_synthetic"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def small_project(tmp_path, **overrides):
    data = {
        "name": "small",
        "factors": [
            {"id": "A", "accessible": True, "level": "I"},
            {"id": "B", "accessible": True, "level": "II"},
            {"id": "C", "accessible": False, "level": "III"},
        ],
        "nsig": {"A": 0.2, "B": 0.3, "C": 0.5},
        "dim": [[0, 2, 2], [1, 0, 3], [0, 0, 0]],
    }
    data.update(overrides)
    path = tmp_path / "small.json"
    path.write_text(json.dumps(data))
    return str(path)


class TestCommands:
    def test_normalize_csv(self, capsys, tmp_path):
        (tmp_path / "m.csv").write_text("factor,A,B,C\nA,0,2,2\nB,1,0,1\nC,0,0,0\n")
        code, out, _ = run(capsys, "normalize", str(tmp_path / "m.csv"), "--format", "json")
        assert code == 0
        assert json.loads(out)["ndim"][0] == [0.0, 0.5, 0.5]
        assert json.loads(out)["ndim"][2] == [0.0, 0.0, 0.0]

    def test_normalize_row(self, capsys, tmp_path):
        (tmp_path / "m.csv").write_text("factor,A,B,C\nA,2,1,1\nB,1,0,1\nC,0,0,0\n")
        code, out, _ = run(capsys, "normalize", str(tmp_path / "m.csv"), "--format", "json")
        assert json.loads(out)["ndim"][0] == [0.5, 0.25, 0.25]

    def test_normalize_partial_project(self, capsys):
        code, out, _ = run(capsys, "normalize", "--project", CASE_STUDY, "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert None in payload["ndim"][0]

    def test_trm(self, capsys):
        code, out, _ = run(capsys, "trm", "--project", SYNTH, "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["rule"] == "mean_half_std"
        assert all(e["t"] > payload["threshold"] for e in payload["edges"])

    def test_trm_partial_fails(self, capsys):
        code, out, err = run(capsys, "trm", "--project", CASE_STUDY)
        assert code == 1 and out == "" and "unknown entries" in err

    def test_classify(self, capsys):
        code, out, _ = run(capsys, "classify", "--project", CASE_STUDY, "--format", "json")
        assert code == 0
        text = json.dumps(json.loads(out))
        for fid in ("Pabl", "TeachSat", "StudSat", "NStud"):
            assert fid in text

    def test_paths(self, capsys):
        code, out, _ = run(capsys, "paths", "--project", CASE_STUDY)
        assert code == 0
        assert "3 strategic path(s)" in out

    def test_evaluate_peap(self, capsys):
        code, out, _ = run(capsys, "evaluate", "--project", SYNTH, "--strategy", "w-peap", "--format", "json")
        assert code == 0
        assert json.loads(out)["total_epi"] == pytest.approx(0.10247758794017658, abs=1e-12)

    def test_evaluate_heap(self, capsys):
        code, out, _ = run(capsys, "evaluate", "--project", SYNTH, "--strategy", "heap",
                           "--block", "BSR", "--unit", "nSig", "--path", "2", "--format", "json")
        assert code == 0
        assert json.loads(out)["total_epi"] == pytest.approx(0.131253, abs=1e-6)

    def test_evaluate_bad_path(self, capsys):
        code, out, _ = run(capsys, "evaluate", "--project", SYNTH, "--strategy", "heap", "--path", "9")
        assert code == 1 and out == ""

    def test_verify(self, capsys):
        code, out, _ = run(capsys, "verify", "--cases", "10", "--format", "json")
        assert code == 0
        assert all(c["passed"] for c in json.loads(out)["checks"])


class TestCompare:
    def test_single_strategy(self, capsys):
        code, out, _ = run(capsys, "compare", "--project", SYNTH, "--strategy", "u-peap", "--format", "json")
        rows = json.loads(out)["rows"]
        assert code == 0 and len(rows) == 1 and rows[0]["strategy"] == "U-PEAP"

    def test_full_grid(self, capsys):
        code, out, _ = run(capsys, "compare", "--project", SYNTH, "--format", "json")
        rows = json.loads(out)["rows"]
        assert len(rows) == 2 + 9 * 3
        assert sum(r["best"] for r in rows) == 1
        best = max(rows, key=lambda r: r["total_epi"])
        assert best["best"]

    def test_selection(self, capsys):
        code, out, _ = run(capsys, "compare", "--project", SYNTH, "--strategy", "heap", "--block", "BSR",
                           "--unit", "nSig", "--unit", "Uni", "--path", "1", "--format", "json")
        assert len(json.loads(out)["rows"]) == 2

    def test_md_matches_json(self, capsys):
        _, js, _ = run(capsys, "compare", "--project", SYNTH, "--format", "json")
        _, md, _ = run(capsys, "compare", "--project", SYNTH)
        for row in json.loads(js)["rows"]:
            assert f"{row['total_epi']:.6f}" in md

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "compare", "--project", SYNTH, "--format", "csv")
        assert code == 0 and len(out.strip().splitlines()) == 1 + 29

    def test_gating_never_increases_peap(self, capsys):
        _, off, _ = run(capsys, "compare", "--project", SYNTH, "--strategy", "peap", "--format", "json")
        _, on, _ = run(capsys, "compare", "--project", SYNTH, "--strategy", "peap", "--gating", "on",
                       "--format", "json")
        for a, b in zip(json.loads(off)["rows"], json.loads(on)["rows"]):
            assert b["total_epi"] <= a["total_epi"]
        assert json.loads(on)["metadata"]["options"]["peap_gating"] is True

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "r.json"
        code, out, _ = run(capsys, "compare", "--project", SYNTH, "--format", "json", "--out", str(target))
        assert code == 0 and out == ""
        assert len(json.loads(target.read_text())["rows"]) == 29

    def test_deterministic(self, capsys):
        outs = [run(capsys, "compare", "--project", SYNTH, "--format", "json")[1] for _ in range(3)]
        assert outs[0] == outs[1] == outs[2]


class TestExitCodes:
    def test_missing_project(self, capsys):
        code, out, _ = run(capsys, "classify")
        assert code == 2 and out == ""

    def test_malformed_project(self, capsys, tmp_path):
        (tmp_path / "bad.json").write_text("{broken")
        target = tmp_path / "out.json"
        code, out, _ = run(capsys, "compare", "--project", str(tmp_path / "bad.json"), "--out", str(target))
        assert code == 2 and out == "" and not target.exists()

    def test_validation_failure(self, capsys, tmp_path):
        project = small_project(tmp_path, nsig={"A": 0.2, "B": 0.3, "C": 0.4})
        code, out, err = run(capsys, "compare", "--project", project)
        assert code == 1 and out == ""
        assert "significance not normalized" in err

    def test_partial_matrix_no_output(self, capsys, tmp_path):
        target = tmp_path / "out.md"
        code, out, _ = run(capsys, "compare", "--project", CASE_STUDY, "--out", str(target))
        assert code == 1 and not target.exists()

    def test_small_project_ok(self, capsys, tmp_path):
        code, out, _ = run(capsys, "compare", "--project", small_project(tmp_path), "--format", "json")
        assert code == 0
        assert len(json.loads(out)["rows"]) == 2 + 9
