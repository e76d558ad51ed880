"""Command-line behavior: outputs, schemas, exit codes, reproducibility."""

import io
import json

import jsonschema
import pytest

from clipaudit import schemas
from clipaudit.cli import main


@pytest.fixture
def race_files(tmp_path):
    """A two-candidate contest with a tied 10-ballot manifest."""
    manifest = tmp_path / "tied.csv"
    manifest.write_text(
        "ballot_id,contest_id,choice\n"
        + "".join(f"t{i:02d},race,{'alice' if i < 5 else 'bob'}\n" for i in range(10))
    )
    contests = tmp_path / "contests.json"
    contests.write_text(
        json.dumps(
            [
                {
                    "contest_id": "race",
                    "candidates": ["alice", "bob"],
                    "winner_count": 1,
                    "reported_winners": ["alice"],
                }
            ]
        )
    )
    return manifest, contests


@pytest.fixture
def landslide_files(tmp_path):
    manifest = tmp_path / "landslide.csv"
    manifest.write_text(
        "ballot_id,contest_id,choice\n"
        + "".join(f"c{i:03d},race,alice\n" for i in range(100))
    )
    contests = tmp_path / "contests.json"
    contests.write_text(
        json.dumps(
            {
                "contest_id": "race",
                "candidates": ["alice", "bob"],
                "winner_count": 1,
                "reported_winners": ["alice"],
            }
        )
    )
    return manifest, contests


class TestBetaCommand:
    def test_table_lookup(self, capsys):
        assert main(["beta", "10000", "0.05", "--source=table"]) == 0
        out = capsys.readouterr().out
        assert "beta: 2.7700" in out
        assert "resolved_n: 10000" in out

    def test_formula_json_validates(self, capsys):
        assert main(["beta", "50000", "0.10", "--source=formula", "--format=json"]) == 0
        report = json.loads(capsys.readouterr().out)
        jsonschema.validate(report, schemas.BETA_REPORT_SCHEMA)
        assert abs(report["beta"] - 2.568) <= 1e-3

    def test_simulate_small_case_matches_oracle(self, capsys):
        rc = main(
            [
                "beta",
                "4",
                "0.5",
                "--source=simulate",
                "--trials=1000000",
                "--seed=1",
                "--format=json",
            ]
        )
        assert rc == 0
        captured = capsys.readouterr()
        report = json.loads(captured.out)
        assert abs(report["beta"] - 0.5774) <= 0.02
        assert "trials" in captured.err  # progress goes to stderr

    def test_out_of_table_exit_code(self, capsys):
        assert main(["beta", "5000000", "0.05"]) == 4
        assert "error" in capsys.readouterr().err

    def test_csv_format(self, capsys):
        assert main(["beta", "100", "0.5", "--format=csv"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "n,alpha,beta,trials,seed,generator"
        assert lines[1].startswith("100,0.5,1.1550,")

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["beta", "100", "1.7"])
        assert exc.value.code == 2


class TestTableCommand:
    def test_small_table_round_trips(self, capsys):
        args = [
            "table",
            "--n-list=4,8",
            "--alpha-list=0.25,0.5",
            "--trials=2000",
            "--seed=3",
        ]
        assert main(args) == 0
        first = capsys.readouterr()
        lines = first.out.strip().split("\n")
        assert lines[0] == "n,alpha,beta,trials,seed,generator"
        assert len(lines) == 5
        assert "steps/s" in first.err
        # identical invocation, identical stdout bytes
        assert main(args) == 0
        assert capsys.readouterr().out == first.out

    def test_out_file(self, capsys, tmp_path):
        out = tmp_path / "table.csv"
        assert main(
            ["table", "--n-list=4", "--alpha-list=0.5", "--trials=500", "--seed=1", f"--out={out}"]
        ) == 0
        assert out.read_text().startswith("n,alpha,beta,trials,seed,generator")
        assert capsys.readouterr().out == ""

    def test_empty_n_list_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["table", "--n-list=", "--alpha-list=0.5"])
        assert exc.value.code == 2


class TestEstimateCommand:
    def test_reference_example(self, capsys):
        assert main(["estimate", "50000", "0.10", "0.2", "--format=json"]) == 0
        report = json.loads(capsys.readouterr().out)
        jsonschema.validate(report, schemas.ESTIMATE_REPORT_SCHEMA)
        assert report["clip"]["ballots"] == 165
        assert abs(report["clip"]["raw"] - 164.87) <= 1.0
        assert report["bravo"]["raw"] == pytest.approx(115.1293, abs=1e-3)
        assert report["bravo"]["ballots"] == 116

    def test_manual_beta(self, capsys):
        assert main(["estimate", "50000", "0.10", "0.2", "--beta=2.568", "--format=json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["beta_source"] == "manual"
        assert report["clip"]["raw"] == pytest.approx(164.8656, abs=1e-4)

    def test_zero_margin_reports_infinite(self, capsys):
        assert main(["estimate", "1000", "0.05", "0"]) == 0
        assert "infinite" in capsys.readouterr().out

    def test_human_output_side_by_side(self, capsys):
        assert main(["estimate", "50000", "0.10", "0.2"]) == 0
        out = capsys.readouterr().out
        assert "clip ballots: 164.94 -> 165" in out
        assert "bravo ballots: 115.13 -> 116" in out


class TestSimulateCommand:
    def test_single_trial_csv(self, capsys, tmp_path):
        csv_path = tmp_path / "trials.csv"
        args = [
            "simulate",
            "--n=100",
            "--margin=1.0",
            "--alpha=0.05",
            "--beta=2.236",
            "--trials=1",
            "--seed=0",
            f"--csv={csv_path}",
            "--format=json",
        ]
        assert main(args) == 0
        report = json.loads(capsys.readouterr().out)
        jsonschema.validate(report, schemas.SIMULATE_REPORT_SCHEMA)
        lines = csv_path.read_text().strip().split("\n")
        assert lines == ["trial,final_sample_size,stopped", "0,5,true"]

    def test_reproducible_stdout(self, capsys):
        args = [
            "simulate",
            "--n=500",
            "--margin=0.3",
            "--alpha=0.1",
            "--trials=200",
            "--seed=7",
            "--format=json",
        ]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        assert capsys.readouterr().out == first


class TestAuditCommand:
    def test_tied_manifest_replays_to_full_count_tie(self, capsys, race_files):
        manifest, contests = race_files
        rc = main(
            [
                "audit",
                f"--manifest={manifest}",
                f"--contests={contests}",
                "--alpha=0.05",
                "--beta=2.236",
                "--seed=3",
                f"--replay={manifest}",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "draw 10:" in out
        assert "tie at the winner boundary" in out
        assert "verdict: full_count" in out

    def test_landslide_stops_at_draw_five(self, capsys, landslide_files):
        manifest, contests = landslide_files
        rc = main(
            [
                "audit",
                f"--manifest={manifest}",
                f"--contests={contests}",
                "--alpha=0.05",
                "--beta=2.236",
                "--seed=1",
                f"--replay={manifest}",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        # every ballot votes for the reported winner; 5 > 2.236 sqrt(5)
        assert "draw 5:" in out
        assert "draw 6:" not in out
        assert "verdict: all_accepted" in out

    def test_json_snapshot_validates_and_reproduces(self, capsys, race_files):
        manifest, contests = race_files
        args = [
            "audit",
            f"--manifest={manifest}",
            f"--contests={contests}",
            "--alpha=0.05",
            "--beta=2.236",
            "--seed=3",
            f"--replay={manifest}",
            "--format=json",
        ]
        assert main(args) == 0
        first = capsys.readouterr().out
        report = json.loads(first)
        jsonschema.validate(report, schemas.AUDIT_REPORT_SCHEMA)
        assert report["snapshot"]["verdict"]["kind"] == "full_count"
        assert report["snapshot"]["full_counts"]["race"]["tie"] is True
        assert main(args) == 0
        assert capsys.readouterr().out == first

    def test_replay_with_unknown_ballot_is_data_error(self, capsys, race_files, tmp_path):
        manifest, contests = race_files
        rogue = tmp_path / "rogue.csv"
        rogue.write_text("ballot_id,contest_id,choice\nzz99,race,alice\n")
        rc = main(
            [
                "audit",
                f"--manifest={manifest}",
                f"--contests={contests}",
                "--alpha=0.05",
                "--beta=2.236",
                "--seed=3",
                f"--replay={rogue}",
            ]
        )
        assert rc == 3
        assert "not in the manifest" in capsys.readouterr().err

    def test_replay_with_duplicate_row_is_data_error(self, capsys, race_files, tmp_path):
        manifest, contests = race_files
        dupe = tmp_path / "dupe.csv"
        dupe.write_text(
            "ballot_id,contest_id,choice\nt00,race,alice\nt00,race,bob\n"
        )
        rc = main(
            [
                "audit",
                f"--manifest={manifest}",
                f"--contests={contests}",
                "--alpha=0.05",
                "--beta=2.236",
                "--seed=3",
                f"--replay={dupe}",
            ]
        )
        assert rc == 3
        assert "line 3" in capsys.readouterr().err

    def test_missing_manifest_is_data_error(self, capsys, race_files):
        _, contests = race_files
        rc = main(
            [
                "audit",
                "--manifest=/nonexistent/m.csv",
                f"--contests={contests}",
                "--alpha=0.05",
                "--beta=2.236",
                "--seed=1",
                "--interactive",
            ]
        )
        assert rc == 3

    def test_interactive_reprompts_on_unknown_token(self, capsys, monkeypatch, tmp_path):
        manifest = tmp_path / "four.csv"
        manifest.write_text(
            "ballot_id,contest_id,choice\n"
            + "".join(f"q{i},race,alice\n" for i in range(4))
        )
        contests = tmp_path / "contests.json"
        contests.write_text(
            json.dumps(
                {
                    "contest_id": "race",
                    "candidates": ["alice", "bob"],
                    "winner_count": 1,
                    "reported_winners": ["alice"],
                }
            )
        )
        monkeypatch.setattr("sys.stdin", io.StringIO("zzz\nalice\nalice\nalice\nalice\n"))
        rc = main(
            [
                "audit",
                f"--manifest={manifest}",
                f"--contests={contests}",
                "--alpha=0.25",
                "--beta=1.9",
                "--seed=1",
                "--interactive",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "unknown token 'zzz'" in out
        assert "verdict: all_accepted" in out
