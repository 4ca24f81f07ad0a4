import json

import pytest

from upbkit.cli import main
from upbkit.serialize import dumps_report, upb_to_document
from upbkit.upb import shifts

SHIFTS_CLASS = "canonical:1.5707963267948966,1.5707963267948966,1.5707963267948966"
THIRD_CLASS = "canonical:1.0471975511965976,1.0471975511965976,1.0471975511965976"


@pytest.fixture()
def shifts_file(tmp_path):
    path = tmp_path / "shifts.json"
    path.write_text(dumps_report(upb_to_document(shifts())))
    return str(path)


def run(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = main(list(argv) + ["--out", str(out)])
    return code, json.loads(out.read_text())


class TestExitCodes:
    def test_equiv_negative(self, tmp_path):
        code, report = run(
            tmp_path, "equiv", "--a", SHIFTS_CLASS, "--b",
            "canonical:1.0472,1.5708,1.5708",
        )
        assert code == 1
        assert report["result"]["equivalent"] is False

    def test_equiv_positive(self, tmp_path, shifts_file):
        code, report = run(tmp_path, "equiv", "--a", SHIFTS_CLASS, "--b", shifts_file)
        assert code == 0
        assert report["result"]["equivalent"] is True
        assert report["result"]["witness"]["max_error"] < 1e-9

    def test_validate_upb_file(self, tmp_path, shifts_file):
        code, report = run(tmp_path, "validate", "--upb", shifts_file)
        assert code == 0
        assert report["result"]["passed"] is True

    def test_validate_partial_family_fails(self, tmp_path):
        doc = upb_to_document(shifts())
        doc["members"] = doc["members"][:3]
        path = tmp_path / "partial.json"
        path.write_text(json.dumps(doc))
        code, report = run(tmp_path, "validate", "--upb", str(path))
        assert code == 1
        assert report["result"]["unextendible"] is False

    def test_certify_equivalent_pair_is_usage_error(self, shifts_file):
        code = main(["certify", "--source", SHIFTS_CLASS, "--target", shifts_file])
        assert code == 3

    def test_bad_arguments_are_usage_errors(self):
        assert main(["equiv", "--a", "canonical:1.0"]) == 3
        assert main(["no-such-command"]) == 3
        assert main(["build", "--angles", "0.0,1.0,1.0"]) == 3

    def test_numerical_error_exit(self, tmp_path):
        doc = {"dims": [2, 2, 2], "members": [[[[1.0, 0.0], [0.0, 0.0]]] * 3] * 2}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        assert main(["validate", "--upb", str(path)]) == 2


class TestReports:
    def test_build_emits_upb_document(self, tmp_path):
        code, report = run(tmp_path, "build", "--angles", "1.0,2.0,0.5")
        assert code == 0
        assert report["result"]["dims"] == [2, 2, 2]
        assert len(report["result"]["members"]) == 4
        assert report["config"]["subcommand"] == "build"

    def test_build_output_feeds_back_as_input(self, tmp_path):
        # the CLI must accept its own reports as UPB inputs
        upb_path = tmp_path / "built.json"
        assert main(["build", "--angles", "1.0,2.0,0.5", "--out", str(upb_path)]) == 0
        code, report = run(tmp_path, "equiv", "--a", str(upb_path), "--b", "canonical:1.0,2.0,0.5")
        assert code == 0
        assert report["result"]["equivalent"] is True
        assert main(["validate", "--upb", str(upb_path)]) == 0

    def test_state_emits_density_matrix(self, tmp_path):
        code, report = run(tmp_path, "state", "--upb", SHIFTS_CLASS)
        assert code == 0
        m = report["result"]["matrix"]
        assert len(m) == 8
        trace = sum(m[i][i][0] for i in range(8))
        assert abs(trace - 1) < 1e-12

    def test_search_pv_finds_members(self, tmp_path, shifts_file):
        code, report = run(tmp_path, "search-pv", "--upb", shifts_file, "--space", "span")
        assert code == 0
        assert report["result"]["n_hits"] == 4
        code, report = run(tmp_path, "search-pv", "--upb", shifts_file, "--space", "complement")
        assert code == 0
        assert report["result"]["n_hits"] == 0

    def test_search_pv_partition_flag(self, tmp_path, shifts_file):
        code, report = run(
            tmp_path, "search-pv", "--upb", shifts_file, "--partition", "0|1,2"
        )
        assert code == 0
        assert report["result"]["n_hits"] == 4

    def test_graphs_report(self, tmp_path):
        code, report = run(tmp_path, "graphs")
        assert code == 0
        assert report["result"]["scanned"] == 59049
        assert report["result"]["survivor_count"] == 4590
        assert len(report["result"]["classes"]) == 2
        assert sum(report["result"]["survivors_per_class"]) == 4590

    def test_qutrit_extras_report(self, tmp_path):
        code, report = run(tmp_path, "qutrit-extras", "--upb", "tiles")
        assert code == 0
        assert report["result"]["total_product_vectors"] == 6
        assert report["result"]["n_extras"] == 1

    def test_certify_report(self, tmp_path):
        code, report = run(
            tmp_path, "certify", "--source", SHIFTS_CLASS, "--target", THIRD_CLASS,
            "--restarts", "12", "--budget", "600",
        )
        assert code == 0
        assert report["result"]["consistent"] is True
        assert report["result"]["delta_min"] > 1e-3
        assert report["config"]["restarts"] == 12

    def test_text_format(self, tmp_path, capsys):
        code = main(["equiv", "--a", SHIFTS_CLASS, "--b", SHIFTS_CLASS, "--format", "text"])
        captured = capsys.readouterr()
        assert code == 0
        assert "equivalent: True" in captured.out


class TestReproducibility:
    def test_identical_argv_gives_identical_bytes(self, tmp_path, shifts_file):
        argvs = [
            ["equiv", "--a", SHIFTS_CLASS, "--b", THIRD_CLASS],
            ["search-pv", "--upb", shifts_file, "--seed", "5"],
            ["certify", "--source", SHIFTS_CLASS, "--target", THIRD_CLASS,
             "--restarts", "8", "--budget", "400", "--seed", "9"],
        ]
        for i, argv in enumerate(argvs):
            a = tmp_path / f"a{i}.json"
            b = tmp_path / f"b{i}.json"
            main(argv + ["--out", str(a)])
            main(argv + ["--out", str(b)])
            assert a.read_bytes() == b.read_bytes()
