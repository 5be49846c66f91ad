"""
Testes da linha de comando, do sorteio de parceiros até o relatório.
"""

import orjson
import pytest

from app.main import main

pytestmark = pytest.mark.integration

EXPECTED_CHANNELS = {
    "coord_simple": 40,
    "coord_ring": 40,
    "test_simple": 41,
    "test_wide": 46,
    "demo_simple": 40,
    "demo_wide": 45,
    "asymm_both": 35,
    "asymm_right": 35,
    "cramped_up": 35,
    "cramped_down": 35,
}


def run_cli(capsys, *argv):
    code = main([*argv])
    captured = capsys.readouterr()
    lines = [orjson.loads(line) for line in captured.out.splitlines() if line.startswith("{")]
    return code, lines, captured


class TestLayoutsCommand:
    """Testes de `layouts`."""

    def test_list_json(self, capsys):
        code, lines, _ = run_cli(capsys, "layouts", "list", "--json")
        assert code == 0
        assert {line["name"]: line["channels"] for line in lines} == EXPECTED_CHANNELS

    def test_list_text(self, capsys):
        code, _, captured = run_cli(capsys, "layouts", "list", "coord_simple")
        assert code == 0
        assert captured.out.startswith("coord_simple\tn=3 C=40\t")

    def test_check(self, capsys):
        code, lines, _ = run_cli(capsys, "layouts", "check")
        assert code == 0
        assert len(lines) == 10
        assert all(line["ok"] and line["observed"] == EXPECTED_CHANNELS[line["layout"]] for line in lines)

    def test_unknown_layout(self, capsys):
        code, _, captured = run_cli(capsys, "layouts", "list", "nowhere")
        assert code == 1
        assert "erro:" in captured.err


class TestPipelineCommands:
    """Pipeline completo em escala mínima."""

    def test_end_to_end(self, tmp_path, capsys):
        out = str(tmp_path)

        code, lines, _ = run_cli(capsys, "teammates", "sample", "--split", "train", "--family", "H1", "h4",
                                 "--count", "1", "--out", out)
        assert code == 0 and lines[0]["count"] == 2
        train_path = lines[0]["path"]
        assert train_path.endswith("teammates/train.jsonl")

        code, lines, _ = run_cli(capsys, "manifest", "collect", "--teammates", train_path,
                                 "--layouts", "coord_simple", "--out", out, "--seed", "3")
        assert code == 0 and lines[0]["records"] == 2

        collect_args = ("collect", "--out", out, "--streams", "2", "--episodes", "2",
                        "--recorded-steps", "5", "--save-interval", "1", "--ego", "random")
        code, lines, _ = run_cli(capsys, *collect_args)
        assert code == 0
        assert [line["status"] for line in lines] == ["completed", "completed"]
        assert all(line["transitions"] == 20 for line in lines)

        code, lines, _ = run_cli(capsys, *collect_args)
        assert [line["status"] for line in lines] == ["skipped", "skipped"]

        code, lines, _ = run_cli(capsys, "dataset", "build", "--out", out, "--filter-k", "1")
        assert code == 0
        assert lines[0]["histories_written"] == 2
        assert lines[0]["retained_ratio"] == 0.5

        code, lines, _ = run_cli(capsys, "dataset", "inspect", "--out", out)
        assert code == 0
        assert lines[0]["index"] == lines[0]["scan"]
        assert lines[0]["index"]["transitions"] == 20

        code, lines, _ = run_cli(capsys, "teammates", "sample", "--split", "test", "--out", out)
        test_path = lines[0]["path"]
        assert lines[0]["count"] == 4

        code, lines, _ = run_cli(capsys, "manifest", "track", "--track", "layout", "--teammates", test_path,
                                 "--out", out)
        assert code == 0 and lines[0]["records"] == 8
        manifest_path = lines[0]["path"]

        code, lines, _ = run_cli(capsys, "eval", "--manifest", manifest_path, "--ego", "stay", "--episodes", "2",
                                 "--instances", "1", "--episode-len", "10", "--out", out)
        assert code == 0
        assert len(lines) == 8
        assert {line["layout"] for line in lines} == {"asymm_right", "cramped_down"}
        assert (tmp_path / "eval" / "summary.json").exists()

        code, lines, _ = run_cli(capsys, "diversity", "--policies", test_path, "--states", "30",
                                 "--episode-len", "10", "--out", out)
        assert code == 0
        assert lines[0]["families"] == ["H1", "H2", "H3", "H4"]
        assert (tmp_path / "diversity" / "pairwise.csv").exists()
        assert (tmp_path / "diversity" / "family_mean.csv").exists()

    def test_train_teammates_rejected_in_track(self, tmp_path, capsys):
        out = str(tmp_path)
        _, lines, _ = run_cli(capsys, "teammates", "sample", "--split", "train", "--out", out)
        code, _, captured = run_cli(capsys, "manifest", "track", "--track", "teammate",
                                    "--teammates", lines[0]["path"], "--out", out)
        assert code == 1
        assert "erro:" in captured.err

    def test_missing_manifest(self, tmp_path, capsys):
        code, _, captured = run_cli(capsys, "collect", "--out", str(tmp_path), "--streams", "1")
        assert code == 1
        assert "erro:" in captured.err

    def test_unknown_family(self, tmp_path, capsys):
        code, _, _ = run_cli(capsys, "teammates", "sample", "--split", "train", "--family", "H9",
                             "--out", str(tmp_path))
        assert code == 1

    def test_dataset_inspect_empty(self, tmp_path, capsys):
        code, lines, _ = run_cli(capsys, "dataset", "inspect", "--out", str(tmp_path))
        assert code == 0
        assert lines[0]["index"]["histories"] == 0
