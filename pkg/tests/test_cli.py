import hashlib
import json
import subprocess
import sys

import pytest

from semgraph.cli import main
from semgraph.synth import (make_polysemy_corpus, write_corpus_jsonl,
                            write_qrels_tsv, write_queries_jsonl)

SYNTH_CONFIG = {"chunking.chunk_size": 32, "induction.tau_disp": 0.95}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    corpus = make_polysemy_corpus()
    write_corpus_jsonl(root / "corpus.jsonl", corpus.docs)
    write_queries_jsonl(root / "queries.jsonl", corpus.queries)
    write_qrels_tsv(root / "qrels.tsv", corpus.qrels)
    (root / "config.json").write_text(json.dumps(SYNTH_CONFIG))
    return root


@pytest.fixture(scope="module")
def built_index(workdir, capfdbinary=None):
    rc = main(["index", "--corpus", str(workdir / "corpus.jsonl"),
               "--out", str(workdir / "index.bin"),
               "--config", str(workdir / "config.json"), "--seed", "42"])
    assert rc == 0
    return workdir / "index.bin"


def run_main(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


class TestIndex:
    def test_summary(self, workdir, capsys):
        rc, out, _ = run_main(capsys, [
            "index", "--corpus", str(workdir / "corpus.jsonl"),
            "--out", str(workdir / "tmp.bin"),
            "--config", str(workdir / "config.json")])
        assert rc == 0
        summary = json.loads(out)
        assert summary["docs"] == 60
        assert summary["chunks"] == 60
        assert summary["multi_sense_tokens"] == 1
        assert summary["ait_s"] >= 0

    def test_bad_jsonl_line_cited(self, tmp_path, capsys):
        corpus = tmp_path / "bad.jsonl"
        lines = ['{"doc_id": "d%d", "title": "", "text": "alpha beta"}' % i
                 for i in range(6)]
        lines.append("{not json")
        corpus.write_text("\n".join(lines) + "\n")
        rc, _, err = run_main(capsys, [
            "index", "--corpus", str(corpus), "--out", str(tmp_path / "x.bin")])
        assert rc == 2
        assert "line 7" in err

    def test_missing_corpus(self, tmp_path, capsys):
        rc, _, err = run_main(capsys, [
            "index", "--corpus", str(tmp_path / "none.jsonl"),
            "--out", str(tmp_path / "x.bin")])
        assert rc == 2

    def test_http_provider_down_exit_3(self, workdir, tmp_path, capsys):
        cfg = tmp_path / "http.json"
        cfg.write_text(json.dumps({"provider.kind": "http",
                                   "provider.url": "http://127.0.0.1:1",
                                   "provider.timeout": 0.3}))
        rc, _, err = run_main(capsys, [
            "index", "--corpus", str(workdir / "corpus.jsonl"),
            "--out", str(tmp_path / "x.bin"), "--config", str(cfg)])
        assert rc == 3
        assert "provider" in err

    def test_invalid_config_exit_2(self, workdir, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"query.alpha_exact": 1.0,
                                   "query.alpha_partial": 2.0}))
        rc, _, err = run_main(capsys, [
            "index", "--corpus", str(workdir / "corpus.jsonl"),
            "--out", str(tmp_path / "x.bin"), "--config", str(cfg)])
        assert rc == 2
        assert "config" in err

    def test_unknown_config_key_exit_2(self, workdir, tmp_path, capsys):
        cfg = tmp_path / "odd.json"
        cfg.write_text(json.dumps({"induction.tau_dispp": 0.9}))
        rc, _, _ = run_main(capsys, [
            "index", "--corpus", str(workdir / "corpus.jsonl"),
            "--out", str(tmp_path / "x.bin"), "--config", str(cfg)])
        assert rc == 2


class TestQuery:
    def test_run_file_shape(self, workdir, built_index, capsys):
        rc, out, _ = run_main(capsys, [
            "query", "--index", str(built_index),
            "--queries", str(workdir / "queries.jsonl"),
            "--k", "10", "--out", str(workdir / "run.tsv"),
            "--config", str(workdir / "config.json")])
        assert rc == 0
        lines = (workdir / "run.tsv").read_text().splitlines()
        assert 0 < len(lines) <= 70
        by_query = {}
        for line in lines:
            cols = line.split("\t")
            assert len(cols) == 6
            by_query.setdefault(cols[0], []).append(int(cols[3]))
        for ranks in by_query.values():
            assert ranks == list(range(1, len(ranks) + 1))
        assert json.loads(out)["queries"] == 7

    def test_empty_queries(self, workdir, built_index, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        out_path = tmp_path / "empty_run.tsv"
        rc, _, _ = run_main(capsys, [
            "query", "--index", str(built_index), "--queries", str(empty),
            "--out", str(out_path), "--config", str(workdir / "config.json")])
        assert rc == 0
        assert out_path.read_text() == ""

    def test_inline_text(self, workdir, built_index, capsys):
        rc, out, _ = run_main(capsys, [
            "query", "--index", str(built_index),
            "--text", "apple cider orchard", "--k", "3",
            "--config", str(workdir / "config.json")])
        assert rc == 0
        rows = [line.split("\t") for line in out.strip().splitlines()]
        assert len(rows) == 3
        assert all(r[2].startswith("fruit") for r in rows)

    def test_missing_index_exit_2(self, workdir, tmp_path, capsys):
        rc, _, _ = run_main(capsys, [
            "query", "--index", str(tmp_path / "none.bin"),
            "--queries", str(workdir / "queries.jsonl"),
            "--out", str(tmp_path / "r.tsv")])
        assert rc == 2


class TestEval:
    def test_metrics_match_library(self, workdir, built_index, capsys):
        run_main(capsys, [
            "query", "--index", str(built_index),
            "--queries", str(workdir / "queries.jsonl"),
            "--k", "10", "--out", str(workdir / "run2.tsv"),
            "--config", str(workdir / "config.json")])
        rc, out, _ = run_main(capsys, [
            "eval", "--run", str(workdir / "run2.tsv"),
            "--qrels", str(workdir / "qrels.tsv"),
            "--index", str(built_index)])
        assert rc == 0
        metrics = json.loads(out)
        from semgraph import load_qrels_tsv, load_run_tsv, mrr_at_10, recall_at_10
        run = load_run_tsv(str(workdir / "run2.tsv"))
        qrels = load_qrels_tsv(str(workdir / "qrels.tsv"))
        assert metrics["recall_at_10"] == pytest.approx(recall_at_10(run, qrels))
        assert metrics["mrr_at_10"] == pytest.approx(mrr_at_10(run, qrels))
        assert metrics["num_queries"] == 7
        assert metrics["num_docs"] == 60
        assert metrics["recall_at_10"] == 1.0

    def test_id_mismatch_exit_2(self, workdir, built_index, tmp_path, capsys):
        bad_qrels = tmp_path / "bad_qrels.tsv"
        bad_qrels.write_text("only_query\td1\t1\n")
        rc, _, err = run_main(capsys, [
            "eval", "--run", str(workdir / "run2.tsv"),
            "--qrels", str(bad_qrels), "--index", str(built_index)])
        assert rc == 2
        assert "q_" in err

    def test_timings_merged(self, workdir, built_index, tmp_path, capsys):
        t = tmp_path / "timings.json"
        t.write_text(json.dumps({"ait_s": 0.012, "aqt_s": 0.003}))
        rc, out, _ = run_main(capsys, [
            "eval", "--run", str(workdir / "run2.tsv"),
            "--qrels", str(workdir / "qrels.tsv"),
            "--index", str(built_index), "--timings", str(t)])
        assert rc == 0
        metrics = json.loads(out)
        assert metrics["ait_s"] == 0.012
        assert metrics["aqt_s"] == 0.003

    def test_no_timings_keys_absent(self, workdir, built_index, capsys):
        rc, out, _ = run_main(capsys, [
            "eval", "--run", str(workdir / "run2.tsv"),
            "--qrels", str(workdir / "qrels.tsv"),
            "--index", str(built_index)])
        metrics = json.loads(out)
        assert "ait_s" not in metrics and "aqt_s" not in metrics


class TestStats:
    def test_summary(self, built_index, capsys):
        rc, out, _ = run_main(capsys, ["stats", "--index", str(built_index)])
        assert rc == 0
        stats = json.loads(out)
        assert stats["docs"] == 60 and stats["semantic_nodes"] > 0


class TestDeterminism:
    def test_parallel_jobs_identical_index(self, workdir, tmp_path):
        files = []
        for jobs, tag in ((1, "serial"), (4, "parallel")):
            out = tmp_path / f"{tag}.bin"
            rc = main(["index", "--corpus", str(workdir / "corpus.jsonl"),
                       "--out", str(out), "--config", str(workdir / "config.json"),
                       "--seed", "42", "--jobs", str(jobs)])
            assert rc == 0
            files.append(out.read_bytes())
        assert files[0] == files[1]

    def test_same_seed_identical_files_across_processes(self, workdir, tmp_path):
        def build_and_query(tag):
            idx = tmp_path / f"{tag}.bin"
            run = tmp_path / f"{tag}.tsv"
            for args in ([
                "index", "--corpus", str(workdir / "corpus.jsonl"),
                "--out", str(idx), "--config", str(workdir / "config.json"),
                "--seed", "42",
            ], [
                "query", "--index", str(idx),
                "--queries", str(workdir / "queries.jsonl"),
                "--k", "10", "--out", str(run),
                "--config", str(workdir / "config.json"),
            ]):
                proc = subprocess.run([sys.executable, "-m", "semgraph.cli"] + args,
                                      capture_output=True, text=True)
                assert proc.returncode == 0, proc.stderr
            return (hashlib.sha256(idx.read_bytes()).hexdigest(),
                    hashlib.sha256(run.read_bytes()).hexdigest())

        assert build_and_query("one") == build_and_query("two")
