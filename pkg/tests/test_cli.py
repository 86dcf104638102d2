import json
import shutil
from importlib import resources

import pytest

from keyrank.cli import main
from keyrank.stub_server import StubScorerServer

FIXTURE5 = str(resources.files("keyrank") / "data" / "fixture.jsonl")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestExtract:
    def test_single_candidate_document(self, capsys):
        code, out, _ = run(capsys, "extract", "--text", "the neural network.", "--prompt", "p2")
        assert code == 0
        data = json.loads(out)
        assert [k["phrase"] for k in data["keyphrases"]] == ["neural network"]
        assert data["keyphrases"][0]["offset"] == 4
        assert data["keyphrases"][0]["score"] >= 0

    def test_no_candidates(self, capsys):
        code, out, _ = run(capsys, "extract", "--text", "of the and.")
        assert code == 0 and json.loads(out) == {"keyphrases": []}

    def test_unknown_prompt(self, capsys):
        code, _, err = run(capsys, "extract", "--text", "x", "--prompt", "nosuch")
        assert code == 2 and "nosuch" in err

    def test_top_k_and_ascending_scores(self, capsys, tmp_path):
        doc = tmp_path / "doc.txt"
        doc.write_text("Graph ranking and language model scoring of keyphrase candidates. "
                       "The language model ranks candidates.", encoding="utf-8")
        code, out, _ = run(capsys, "extract", str(doc), "--top-k", "2")
        scores = [k["score"] for k in json.loads(out)["keyphrases"]]
        assert code == 0 and len(scores) == 2 and scores == sorted(scores)

    def test_pretagged_input(self, capsys, tmp_path):
        tagged = tmp_path / "doc.tsv"
        tagged.write_text("Deep\tJJ\nnets\tNNS\nwork\tVBP\n.\t.\n", encoding="utf-8")
        code, out, _ = run(capsys, "extract", str(tagged), "--tagged")
        assert code == 0
        assert json.loads(out)["keyphrases"][0]["phrase"] == "Deep nets"

    def test_remote_matches_reference(self, capsys):
        text = "Language models score keyphrase candidates under prompt templates."
        _, ref, _ = run(capsys, "extract", "--text", text)
        with StubScorerServer() as server:
            code, remote, _ = run(capsys, "extract", "--text", text, "--scorer", "remote",
                                  "--endpoint", server.url, "--max-batch", "2")
        assert code == 0 and remote == ref

    def test_remote_endpoint_from_env(self, capsys, monkeypatch):
        with StubScorerServer() as server:
            monkeypatch.setenv("KEYRANK_SCORER_URL", server.url)
            code, _, _ = run(capsys, "extract", "--text", "deep nets", "--scorer", "remote")
            assert code == 0 and server.requests

    def test_unreachable_scorer(self, capsys):
        server = StubScorerServer()
        url = server.url
        server._httpd.server_close()
        code, _, err = run(capsys, "extract", "--text", "deep nets", "--scorer", "remote",
                           "--endpoint", url, "--timeout", "2")
        assert code == 3 and "scorer" in err


class TestBenchmark:
    def test_hand_traced_report(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "benchmark", str(fixtures_dir / "tiny3.jsonl"), "--prompt", "p1",
                           "--ks", "1,5", "--top-k", "5", "--format", "json")
        assert code == 0
        (row,) = json.loads(out)["rows"]
        assert row["num_documents"] == 3
        k1, k5 = row["per_k"]["1"], row["per_k"]["5"]
        assert k1["precision"] == pytest.approx(1 / 3, abs=1e-12)
        assert k1["recall"] == pytest.approx(1 / 6, abs=1e-12)
        assert k1["f1"] == pytest.approx(2 / 9, abs=1e-12)
        assert (k5["precision"], k5["recall"], k5["f1"]) == pytest.approx((0.5, 0.5, 0.5), abs=1e-12)

    def test_micro_aggregation(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "benchmark", str(fixtures_dir / "tiny3.jsonl"), "--prompt", "p1",
                           "--ks", "5", "--top-k", "5", "--aggregation", "micro")
        k5 = json.loads(out)["rows"][0]["per_k"]["5"]
        assert (k5["precision"], k5["recall"], k5["f1"]) == pytest.approx((0.5, 0.6, 6 / 11), abs=1e-12)

    def test_audit_log(self, capsys, fixtures_dir, tmp_path):
        log = tmp_path / "docs.jsonl"
        run(capsys, "benchmark", str(fixtures_dir / "tiny3.jsonl"), "--prompt", "p1",
            "--ks", "1,5", "--top-k", "5", "--log", str(log))
        entries = [json.loads(line) for line in log.read_text().splitlines()]
        assert [e["id"] for e in entries] == ["A", "B", "C"]
        assert [c["phrase"] for c in entries[1]["candidates"]] == ["dog", "cat"]
        scores = [c["score"] for c in entries[0]["candidates"]]
        assert scores == sorted(scores)

    def test_empty_dataset(self, capsys, fixtures_dir):
        code, _, err = run(capsys, "benchmark", str(fixtures_dir / "empty.jsonl"))
        assert code == 2 and "empty" in err

    def test_top_k_below_max_k(self, capsys):
        code, _, err = run(capsys, "benchmark", FIXTURE5, "--top-k", "10")
        assert code == 2 and "top-k" in err

    def test_parse_error_has_line_number(self, capsys, fixtures_dir):
        code, _, err = run(capsys, "benchmark", str(fixtures_dir / "broken.jsonl"))
        assert code == 4 and "line 2" in err

    def test_present_only_flag(self, capsys, fixtures_dir):
        code, out, _ = run(capsys, "benchmark", str(fixtures_dir / "tiny3.jsonl"), "--prompt", "p1",
                           "--ks", "5", "--top-k", "5", "--present-only")
        row = json.loads(out)["rows"][0]
        # doc C has no gold phrase in its text and drops out; A keeps only "tree"
        assert row["num_documents"] == 2
        assert row["per_k"]["5"]["recall"] == pytest.approx(1.0)


class TestSweep:
    def test_all_prompts_one_dataset(self, capsys):
        code, out, _ = run(capsys, "sweep", FIXTURE5)
        lines = out.strip().splitlines()
        assert code == 0
        assert len(lines) == 1 + 15 + 15
        assert sum(1 for l in lines if ",Avg.," in l) == 15

    def test_two_by_two(self, capsys, fixtures_dir, tmp_path):
        second = tmp_path / "other.jsonl"
        shutil.copy(fixtures_dir / "tiny3.jsonl", second)
        code, out, _ = run(capsys, "sweep", FIXTURE5, str(second), "--prompts", "p1,p2_6")
        rows = out.strip().splitlines()[1:]
        assert code == 0
        assert [tuple(r.split(",")[:3]) for r in rows] == [
            ("p1", "reference", "fixture"), ("p1", "reference", "other"), ("p1", "reference", "Avg."),
            ("p2_6", "reference", "fixture"), ("p2_6", "reference", "other"), ("p2_6", "reference", "Avg."),
        ]

    def test_markdown_matches_csv_and_bolds_best(self, capsys, fixtures_dir):
        args = ["sweep", FIXTURE5, str(fixtures_dir / "tiny3.jsonl"), "--prompts", "p1,p3_3"]
        _, csv_out, _ = run(capsys, *args, "--format", "csv")
        _, md_out, _ = run(capsys, *args, "--format", "md")
        csv_numbers = sorted(v for line in csv_out.splitlines()[1:] for v in line.split(",")[4:])
        md_rows = [l for l in md_out.splitlines() if l.startswith("| p")]
        md_numbers = sorted(c.strip().strip("*") for l in md_rows for c in l.strip("|").split("|")[2:])
        assert csv_numbers == md_numbers
        assert "**" in md_out and "### Avg." in md_out

    def test_report_rerenders_json(self, capsys, tmp_path):
        js = tmp_path / "sweep.json"
        run(capsys, "sweep", FIXTURE5, "--prompts", "p2,p3", "--format", "json", "--out", str(js))
        _, direct, _ = run(capsys, "sweep", FIXTURE5, "--prompts", "p2,p3", "--format", "md")
        code, rendered, _ = run(capsys, "report", str(js), "--format", "md")
        assert code == 0 and rendered == direct

    def test_report_rejects_garbage(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("[1, 2]")
        code, _, _ = run(capsys, "report", str(bad))
        assert code == 4

    def test_custom_catalog(self, capsys, tmp_path):
        cat = tmp_path / "cat.json"
        cat.write_text(json.dumps([{"id": "mine", "encoder": "Doc: {document}",
                                    "decoder": "Topic: {candidate}"}]))
        code, out, _ = run(capsys, "sweep", FIXTURE5, "--catalog", str(cat))
        assert code == 0 and out.splitlines()[1].startswith("mine,")
