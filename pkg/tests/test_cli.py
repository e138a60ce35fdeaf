import json

import pytest

from lowdep.cli import main
from lowdep.conllu import Treebank, read_conllu, validate_tree, write_conllu

from .mini import TINY_ENCODER, write_config, write_treebank_files

SETS = [f"--set={k}={v}" for k, v in TINY_ENCODER.items()] + ["--set=max_epochs=2", "--set=patience=2"]


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    names = write_treebank_files(root, "syn", train=20, dev=6, test=6, seed=4)
    return root, {k: root / v for k, v in names.items() if k != "name"}


def test_stats(files, capsys):
    _, f = files
    assert main(["stats", "--in", str(f["train"])]) == 0
    sentences, tokens = capsys.readouterr().out.strip().split("\t")
    tb = read_conllu(f["train"])
    assert int(sentences) == 20 and int(tokens) == sum(len(s) for s in tb)


def test_split_and_sample(files, tmp_path):
    _, f = files
    out_train, out_dev = tmp_path / "a.conllu", tmp_path / "b.conllu"
    assert main(["split", "--train", str(f["train"]), "--dev", str(f["dev"]), "--fraction", "0.8", "--seed", "3",
                 "--out-train", str(out_train), "--out-dev", str(out_dev)]) == 0
    assert (len(read_conllu(out_train)), len(read_conllu(out_dev))) == (20, 6)
    sample = tmp_path / "s.conllu"
    assert main(["sample", "--in", str(f["train"]), "--n", "5", "--seed", "1", "--out", str(sample)]) == 0
    assert len(read_conllu(sample)) == 5


def test_sample_too_large_is_an_error(files, tmp_path, capsys):
    _, f = files
    assert main(["sample", "--in", str(f["dev"]), "--n", "50", "--seed", "1", "--out", str(tmp_path / "x")]) == 2
    assert "error" in capsys.readouterr().err


def test_augment_with_relations_file(files, tmp_path):
    _, f = files
    rels = tmp_path / "rels.txt"
    rels.write_text("nsubj\nobj\n")
    out = tmp_path / "aug.conllu"
    assert main(["augment", "--in", str(f["dev"]), "--n", "4", "--seed", "2", "--out", str(out),
                 "--relations-file", str(rels)]) == 0
    tb = read_conllu(out)
    assert 0 < len(tb) <= 4 and all(validate_tree(s).ok for s in tb)


def test_tagger_parser_eval_pipeline(files, tmp_path, capsys):
    _, f = files
    tag_dir = tmp_path / "tagger"
    assert main(["tagger", "train", "--train", str(f["train"]), "--dev", str(f["dev"]), "--bins", "10,95",
                 "--window", "10", "--retries", "0", "--seed", "0", "--out-dir", str(tag_dir), *SETS]) == 0
    manifest = json.loads((tag_dir / "manifest.json").read_text())
    captured = [b for b in manifest["bins"] if b["status"] == "captured"]
    assert captured
    ckpt = tag_dir / captured[0]["checkpoint"]

    tagged_train, tagged_dev = tmp_path / "tt.conllu", tmp_path / "td.conllu"
    for src, dst in ((f["train"], tagged_train), (f["dev"], tagged_dev)):
        assert main(["tagger", "tag", "--model", str(ckpt), "--in", str(src), "--out", str(dst)]) == 0
    model = tmp_path / "parser.ckpt"
    assert main(["parser", "train", "--train", str(tagged_train), "--dev", str(tagged_dev), "--mode", "pred",
                 "--tagger-manifest", str(tag_dir / "manifest.json"), "--seed", "1", "--out", str(model), *SETS]) == 0
    parsed = tmp_path / "parsed.conllu"
    assert main(["parser", "parse", "--model", str(model), "--in", str(tagged_dev), "--out", str(parsed)]) == 0
    assert all(validate_tree(s).ok for s in read_conllu(parsed))
    capsys.readouterr()
    assert main(["eval", "--system", str(parsed), "--gold", str(f["dev"]), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"uas", "las", "upos", "tokens"}
    assert 0 <= report["las"] <= report["uas"] <= 100 and isinstance(report["upos"], float)


def test_parser_pred_without_manifest_fails(files, tmp_path):
    _, f = files
    assert main(["parser", "train", "--train", str(f["train"]), "--dev", str(f["dev"]), "--mode", "pred",
                 "--out", str(tmp_path / "p.ckpt"), *SETS]) == 2


def test_multi_mode_parse_writes_upos(files, tmp_path):
    _, f = files
    model = tmp_path / "multi.ckpt"
    assert main(["parser", "train", "--train", str(f["train"]), "--dev", str(f["dev"]), "--mode", "multi",
                 "--aux-weight", "0.5", "--out", str(model), *SETS]) == 0
    untagged = tmp_path / "untagged.conllu"
    tb = read_conllu(f["test"])
    write_conllu(Treebank([s.with_column("upos", ["_"] * len(s)) for s in tb]), untagged)
    out = tmp_path / "out.conllu"
    assert main(["parser", "parse", "--model", str(model), "--in", str(untagged), "--out", str(out)]) == 0
    assert all(t.upos != "_" for s in read_conllu(out) for t in s.tokens)


def test_exp_run(files, tmp_path):
    root, _ = files
    cfg = write_config(root, "real_low_resource", [{"name": "syn", "train": "syn-train.conllu",
                                                    "dev": "syn-dev.conllu", "test": "syn-test.conllu"}],
                       modes=["none"])
    assert main(["exp", "run", "--config", str(cfg), "--output-dir", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "records.csv").is_file() and (tmp_path / "r" / "manifest.json").is_file()


def test_synth(tmp_path):
    out = tmp_path / "syn.conllu"
    assert main(["synth", "--n", "7", "--seed", "1", "--out", str(out)]) == 0
    assert len(read_conllu(out)) == 7
