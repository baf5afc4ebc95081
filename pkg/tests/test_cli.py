"""End-to-end CLI coverage: flags, exit codes and byte determinism."""

import json

import pytest

from lmpoll.cli import build_parser, main

SYNTH = ["synth", "--n", "400", "--star-weights", "0.12,0.10,0.14,0.24,0.40",
         "--positivity", "0.1,0.3,0.5,0.7,0.9", "--tokens", "6:14",
         "--seed", "99"]


@pytest.mark.parametrize("argv", [
    ["synth"], ["ingest"], ["filter"], ["corpus", "build"], ["corpus", "mask"],
    ["corpus", "balance"], ["corpus", "isolate"], ["corpus", "split"],
    ["train-ngram"], ["generate"], ["parse"], ["classify"],
    ["stats", "pearson"], ["stats", "hist"], ["stats", "l2"],
    ["stats", "avg-stars"], ["experiment", "create"], ["experiment", "run"],
    ["experiment", "report"], ["backend-health"],
])
def test_every_subcommand_has_help(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv + ["--help"])
    assert exc.value.code == 0
    assert "usage:" in capsys.readouterr().out


def test_help_lists_key_flags(capsys):
    with pytest.raises(SystemExit):
        main(["generate", "--help"])
    out = capsys.readouterr().out
    for flag in ("--backend", "--prompt", "--n", "--seed", "--max-tokens",
                 "--temperature", "--out"):
        assert flag in out


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--no-such-flag"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["not-a-command"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1
    capsys.readouterr()


def test_argument_errors_exit_1(tmp_path, capsys):
    out = tmp_path / "o.rs"
    code = main(["synth", "--n", "10", "--star-weights", "1,1",
                 "--positivity", "0.1,0.3,0.5,0.7,0.9", "--tokens", "6:14",
                 "--seed", "1", "--out", str(out)])
    assert code == 1
    assert "lmpoll: error:" in capsys.readouterr().err
    assert not out.exists()


def test_missing_file_exits_2(tmp_path, capsys):
    code = main(["filter", "--in", str(tmp_path / "absent.rs"),
                 "--out", str(tmp_path / "o.rs")])
    assert code == 2
    capsys.readouterr()


def test_data_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("not a record\n", encoding="utf-8")
    code = main(["train-ngram", "--corpus", str(bad), "--format", "numeric",
                 "--out", str(tmp_path / "m.ng")])
    assert code == 2
    capsys.readouterr()


def test_backend_errors_exit_3(tmp_path, capsys):
    code = main(["generate", "--backend", "remote:http://127.0.0.1:9",
                 "--n", "1", "--seed", "1", "--out", str(tmp_path / "g.txt")])
    assert code == 3
    assert "lmpoll: error:" in capsys.readouterr().err
    code = main(["backend-health", "--url", "http://127.0.0.1:9"])
    assert code == 3
    capsys.readouterr()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One synthesized population + corpus + model shared by the module."""
    root = tmp_path_factory.mktemp("cliwork")
    pop = root / "pop.rs"
    assert _run(SYNTH + ["--out", str(pop)]) == 0
    corpus = root / "reviews.txt"
    assert _run(["corpus", "build", "--in", str(pop), "--format", "review-stars",
                 "--lines", "300", "--seed", "7", "--out", str(corpus)]) == 0
    model = root / "model.ng"
    assert _run(["train-ngram", "--corpus", str(corpus), "--format",
                 "review-stars", "--order", "4", "--out", str(model)]) == 0
    return root


def _run(argv):
    return main(argv)


def test_pipeline_generate_parse_classify(workdir, tmp_path, capsys):
    gen = tmp_path / "gen.txt"
    code = _run(["generate", "--backend", f"ngram:{workdir / 'model.ng'}",
                 "--prompt", "review:", "--n", "200", "--seed", "11",
                 "--temperature", "0.5", "--out", str(gen)])
    assert code == 0
    lines = gen.read_text().splitlines()
    assert len(lines) == 200
    assert all(ln.startswith("review:") for ln in lines)

    rows = tmp_path / "rows.csv"
    code = _run(["parse", "--format", "review-stars", "--in", str(gen),
                 "--out", str(rows), "--out-format", "csv"])
    assert code == 0
    head = capsys.readouterr().out
    assert "records 200" in head and "error" in head
    assert rows.read_text().splitlines()[0] == \
        "status,reason,stars,useful,funny,cool,text,raw"

    labeled = tmp_path / "labels.jsonl"
    code = _run(["classify", "--in", str(workdir / "pop.rs"),
                 "--out", str(labeled), "--format", "lines"])
    assert code == 0
    out = capsys.readouterr().out
    assert "POSITIVE" in out and "NEGATIVE" in out
    first = json.loads(labeled.read_text().splitlines()[0])
    assert set(first) == {"review_id", "label", "pos_hits", "neg_hits"}


def test_corpus_tools_round_trip(workdir, tmp_path, capsys):
    masked = tmp_path / "masked.rs"
    assert _run(["corpus", "mask", "--in", str(workdir / "pop.rs"),
                 "--phrase", "vegetarian options", "--out", str(masked)]) == 0
    balanced = tmp_path / "balanced.rs"
    assert _run(["corpus", "balance", "--in", str(workdir / "pop.rs"),
                 "--per-star", "20", "--seed", "3", "--out", str(balanced)]) == 0
    isolated = tmp_path / "only5.rs"
    assert _run(["corpus", "isolate", "--in", str(balanced), "--star", "5",
                 "--out", str(isolated)]) == 0
    train_out = tmp_path / "train.txt"
    test_out = tmp_path / "test.txt"
    assert _run(["corpus", "split", "--in", str(workdir / "reviews.txt"),
                 "--format", "review-stars", "--fraction", "0.8", "--seed", "5",
                 "--train-out", str(train_out), "--test-out", str(test_out)]) == 0
    assert len(train_out.read_text().splitlines()) == 240
    assert len(test_out.read_text().splitlines()) == 60
    capsys.readouterr()


def test_stats_commands(workdir, tmp_path, capsys):
    assert _run(["stats", "pearson", "--x", "1,2,3", "--y", "1,3,2"]) == 0
    assert capsys.readouterr().out.strip() == "0.5"

    assert _run(["stats", "hist", "--in", str(workdir / "pop.rs")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("star histogram")
    assert "stars" in out

    assert _run(["stats", "l2", "--in", str(workdir / "pop.rs"),
                 "--sample-size", "8", "--repeats", "200", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "l2_error" in out and "mean_split" in out

    assert _run(["stats", "avg-stars", "--in", str(workdir / "pop.rs"),
                 "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "sentiment,avg stars"


def test_experiment_cli_flow(workdir, tmp_path, capsys):
    store = str(tmp_path / "store")
    code = _run(["experiment", "create", "--store", store,
                 "--description", "cli flow", "--model-name", "m4",
                 "--probe", "", "--seed", "13",
                 "--hyper", "temperature=0.5", "--hyper", "lines=300"])
    assert code == 0
    exp_id = capsys.readouterr().out.strip()
    assert exp_id == "000001"

    code = _run(["experiment", "run", "--store", store, "--id", exp_id,
                 "--backend", f"ngram:{workdir / 'model.ng'}", "--n", "150"])
    assert code == 0
    out = capsys.readouterr().out
    assert "total rows 150" in out

    code = _run(["experiment", "report", "--store", store, "--table", "T1",
                 "--ids", exp_id, "--truth", str(workdir / "pop.rs")])
    assert code == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "T1 model quality"
    assert "model lines" in out and "300" in out

    code = _run(["experiment", "report", "--store", store, "--table", "HIST",
                 "--ids", exp_id, "--format", "csv"])
    assert code == 0
    assert capsys.readouterr().out.splitlines()[0] == "stars,count,%"

    code = _run(["experiment", "report", "--store", store, "--table", "T7",
                 "--ids", exp_id, "--population", str(workdir / "pop.rs"),
                 "--baseline-seed", "4", "--baseline-repeats", "200"])
    assert code == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "T7 extrapolation vs baselines"
    assert "ground truth" in out and "baseline(8)" in out

    code = _run(["experiment", "report", "--store", store, "--table", "T2",
                 "--ids", exp_id, "--truth", str(workdir / "pop.rs")])
    assert code == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "T2 average stars by sentiment"


def test_experiment_adhoc_run(workdir, tmp_path, capsys):
    store = str(tmp_path / "store")
    code = _run(["experiment", "run", "--store", store,
                 "--backend", f"ngram:{workdir / 'model.ng'}",
                 "--probe", "", "--n", "50", "--seed", "44",
                 "--hyper", "temperature=0.5"])
    assert code == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "experiment 000001"

    # ad-hoc validation paths
    assert _run(["experiment", "run", "--store", store, "--backend",
                 f"ngram:{workdir / 'model.ng'}", "--n", "5",
                 "--id", "000001", "--probe", "x"]) == 1
    assert "not both" in capsys.readouterr().err
    assert _run(["experiment", "run", "--store", store, "--backend",
                 f"ngram:{workdir / 'model.ng'}", "--n", "5"]) == 1
    assert "--probe" in capsys.readouterr().err
    assert _run(["experiment", "run", "--store", store, "--backend",
                 f"ngram:{workdir / 'model.ng'}", "--n", "5",
                 "--probe", ""]) == 1
    assert "--seed" in capsys.readouterr().err


def test_replay_backend_via_cli(workdir, tmp_path, capsys):
    gen = tmp_path / "replayed.txt"
    code = _run(["generate", "--backend", f"replay:{workdir / 'pop.rs'}",
                 "--n", "25", "--seed", "3", "--out", str(gen)])
    assert code == 0
    lines = gen.read_text().splitlines()
    assert len(lines) == 25
    assert all(ln.startswith("review: ") and ln.endswith(" --") for ln in lines)
    capsys.readouterr()


def test_outputs_are_byte_deterministic(workdir, tmp_path, capsys):
    a = tmp_path / "a.rs"
    b = tmp_path / "b.rs"
    assert _run(SYNTH + ["--out", str(a)]) == 0
    assert _run(SYNTH + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()

    g1 = tmp_path / "g1.txt"
    g2 = tmp_path / "g2.txt"
    for g in (g1, g2):
        assert _run(["generate", "--backend", f"ngram:{workdir / 'model.ng'}",
                     "--prompt", "review:", "--n", "50", "--seed", "21",
                     "--out", str(g)]) == 0
    assert g1.read_bytes() == g2.read_bytes()
    capsys.readouterr()


def test_parser_exits_1_not_2_on_usage():
    parser = build_parser()
    with pytest.raises(SystemExit) as exc:
        parser.parse_args(["corpus", "build", "--format", "yaml"])
    assert exc.value.code == 1
