import pytest

from delaes import forward, load_model
from delaes.cli import main

from cli_driver import MICRO_CONFIG
from synthdata import make_corpus, make_table, write_asap_tsv, write_embeddings


@pytest.fixture(scope="module")
def data_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-data")
    corpus = make_corpus(24, seed=5)
    table = make_table(12, seed=9)
    data = root / "essays.tsv"
    vectors = root / "vectors.txt"
    config = root / "micro.cfg"
    write_asap_tsv(data, corpus)
    write_embeddings(vectors, table)
    config.write_text(MICRO_CONFIG)
    return {"data": data, "vectors": vectors, "config": config, "corpus": corpus}


def train_args(files, out, seed=5):
    return ["train", "--data", str(files["data"]), "--prompt", "1",
            "--embeddings", str(files["vectors"]), "--out", str(out),
            "--config", str(files["config"]), "--seed", str(seed)]


class TestTrain:
    def test_missing_data_flag_exits_2(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["train", "--prompt", "1", "--embeddings", "x", "--out", "y"])
        assert excinfo.value.code == 2

    def test_micro_run_writes_artifact_and_history(self, data_files, tmp_path,
                                                   capsys):
        out = tmp_path / "model.bin"
        assert main(train_args(data_files, out)) == 0
        assert out.exists()
        history = (tmp_path / "model.bin.history.csv").read_text()
        assert history.startswith("epoch,train_mse,val_qwk")
        assert len(history.strip().splitlines()) == 4
        printed = capsys.readouterr().out
        assert "val QWK:" in printed
        loaded = load_model(out)
        assert loaded.score_range.min_score == 0
        assert loaded.score_range.max_score == 2

    def test_fixed_seed_byte_identical_artifacts(self, data_files, tmp_path):
        first = tmp_path / "a.bin"
        second = tmp_path / "b.bin"
        assert main(train_args(data_files, first)) == 0
        assert main(train_args(data_files, second)) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_missing_data_file_exits_1(self, data_files, tmp_path, capsys):
        args = train_args(data_files, tmp_path / "m.bin")
        args[args.index("--data") + 1] = str(tmp_path / "nope.tsv")
        assert main(args) == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_score_in_data_exits_1(self, data_files, tmp_path, capsys):
        bad = tmp_path / "bad.tsv"
        bad.write_text("essay_id\tessay_set\tessay\tdomain1_score\n"
                       "1\t1\tsome text here\t9\n")
        args = train_args(data_files, tmp_path / "m.bin")
        args[args.index("--data") + 1] = str(bad)
        assert main(args) == 1
        assert "outside range" in capsys.readouterr().err


@pytest.fixture(scope="module")
def model_path(data_files, tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "model.bin"
    assert main(train_args(data_files, out)) == 0
    return out


class TestPredict:
    def test_round_trip_matches_in_memory(self, data_files, model_path, tmp_path):
        out = tmp_path / "pred.csv"
        assert main(["predict", "--model", str(model_path),
                     "--data", str(data_files["data"]), "--out", str(out)]) == 0
        rows = out.read_text().strip().splitlines()
        assert len(rows) == len(data_files["corpus"])
        loaded = load_model(model_path)
        from delaes import denormalize_score
        essay = data_files["corpus"].essays[0]
        expected = denormalize_score(
            forward(loaded.vocab.encode(essay.tokens), loaded.params),
            loaded.score_range)
        assert rows[0] == f"{essay.essay_id},{expected}"

    def test_constant_head_predicts_midpoint(self, model_path, data_files,
                                             tmp_path):
        from delaes import save_model
        loaded = load_model(model_path)
        loaded.params.dense.weights[:] = 0.0
        loaded.params.dense.bias[:] = 0.0
        flat = tmp_path / "flat.bin"
        save_model(loaded.params, loaded.vocab, loaded.score_range, flat)
        out = tmp_path / "pred.csv"
        assert main(["predict", "--model", str(flat),
                     "--data", str(data_files["data"]), "--out", str(out)]) == 0
        scores = {int(line.split(",")[1]) for line in
                  out.read_text().strip().splitlines()}
        assert scores == {1}  # sigmoid(0) = 0.5 over range 0..2

    def test_empty_input_empty_output(self, model_path, tmp_path):
        empty = tmp_path / "empty.tsv"
        empty.write_text("")
        out = tmp_path / "pred.csv"
        assert main(["predict", "--model", str(model_path),
                     "--data", str(empty), "--out", str(out)]) == 0
        assert out.read_text() == ""

    def test_not_an_artifact_exits_1(self, data_files, tmp_path, capsys):
        fake = tmp_path / "fake.bin"
        fake.write_bytes(b"GARBAGE!" * 16)
        assert main(["predict", "--model", str(fake),
                     "--data", str(data_files["data"]),
                     "--out", str(tmp_path / "p.csv")]) == 1
        assert "not a DELAES01 artifact" in capsys.readouterr().err


class TestEval:
    def test_perfect_agreement_prints_one(self, tmp_path, capsys):
        pred = tmp_path / "pred.csv"
        gold = tmp_path / "gold.csv"
        pred.write_text("1,2\n2,3\n3,4\n")
        gold.write_text("1,2\n2,3\n3,4\n")
        assert main(["eval", "--pred", str(pred), "--gold", str(gold),
                     "--range", "2:4"]) == 0
        assert capsys.readouterr().out.strip() == "1.0000"

    def test_known_value_from_oracle(self, tmp_path, capsys):
        from oracles import qwk_oracle
        pred = tmp_path / "pred.csv"
        gold = tmp_path / "gold.csv"
        gold.write_text("1,1\n2,2\n3,3\n4,1\n")
        pred.write_text("1,1\n2,2\n3,3\n4,2\n")
        expected = qwk_oracle([1, 2, 3, 1], [1, 2, 3, 2], 1, 3)
        assert main(["eval", "--pred", str(pred), "--gold", str(gold),
                     "--range", "1:3"]) == 0
        assert capsys.readouterr().out.strip() == f"{expected:.4f}"

    def test_gold_may_be_asap_tsv(self, tmp_path, capsys):
        gold = tmp_path / "gold.tsv"
        gold.write_text("essay_id\tessay_set\tessay\tdomain1_score\n"
                        "1\t1\twords here\t3\n")
        pred = tmp_path / "pred.csv"
        pred.write_text("1,3\n")
        assert main(["eval", "--pred", str(pred), "--gold", str(gold),
                     "--range", "2:4"]) == 0
        assert capsys.readouterr().out.strip() == "1.0000"

    def test_unmatched_id_exits_1(self, tmp_path, capsys):
        pred = tmp_path / "pred.csv"
        gold = tmp_path / "gold.csv"
        pred.write_text("1,2\n9,3\n")
        gold.write_text("1,2\n2,3\n")
        assert main(["eval", "--pred", str(pred), "--gold", str(gold),
                     "--range", "2:4"]) == 1
        assert "9" in capsys.readouterr().err

    def test_malformed_range_exits_2(self, tmp_path):
        pred = tmp_path / "p.csv"
        pred.write_text("1,2\n")
        with pytest.raises(SystemExit) as excinfo:
            main(["eval", "--pred", str(pred), "--gold", str(pred),
                  "--range", "oops"])
        assert excinfo.value.code == 2


class TestCv:
    def test_micro_cv_writes_reports(self, data_files, tmp_path, capsys):
        out = tmp_path / "report"
        assert main(["cv", "--data", str(data_files["data"]), "--prompt", "1",
                     "--embeddings", str(data_files["vectors"]),
                     "--k", "2", "--seed", "3", "--out", str(out),
                     "--config", str(data_files["config"])]) == 0
        csv_lines = (tmp_path / "report.csv").read_text().strip().splitlines()
        assert csv_lines[0] == "fold,qwk"
        assert len(csv_lines) == 3
        import json
        payload = json.loads((tmp_path / "report.json").read_text())
        assert len(payload["rounds"]) == 2
        assert "mean QWK" in capsys.readouterr().out

    def test_same_seed_identical_reports(self, data_files, tmp_path):
        args = lambda out: ["cv", "--data", str(data_files["data"]),
                            "--prompt", "1",
                            "--embeddings", str(data_files["vectors"]),
                            "--k", "2", "--seed", "3", "--out", str(out),
                            "--config", str(data_files["config"])]
        assert main(args(tmp_path / "r1")) == 0
        assert main(args(tmp_path / "r2")) == 0
        assert (tmp_path / "r1.json").read_bytes() == \
            (tmp_path / "r2.json").read_bytes()
        assert (tmp_path / "r1.csv").read_bytes() == \
            (tmp_path / "r2.csv").read_bytes()

    def test_k_larger_than_corpus_exits_1(self, data_files, tmp_path, capsys):
        assert main(["cv", "--data", str(data_files["data"]), "--prompt", "1",
                     "--embeddings", str(data_files["vectors"]),
                     "--k", "200", "--seed", "3",
                     "--out", str(tmp_path / "r"),
                     "--config", str(data_files["config"])]) == 1
        assert "error:" in capsys.readouterr().err
