import json

import pytest

from lowdep.conllu import UPOS_TAGS, Treebank
from lowdep.neural.training import OptimizerConfig
from lowdep.synthetic import generate_treebank, make_lexicon
from lowdep.tagger import (
    AccuracyBin, BinSchedule, TaggerModel, capture_bins, jackknife_tag, load_bin_manifest, tag, tag_treebank,
    tagging_accuracy, train_tagger, treebank_accuracy, treebank_tag_counts,
)

from .conftest import QUICK, TINY, make_sentence

LEX = make_lexicon(seed=0)


@pytest.fixture(scope="module")
def data():
    return generate_treebank(20, seed=1, lexicon=LEX), generate_treebank(6, seed=2, lexicon=LEX)


@pytest.fixture(scope="module")
def trained(data):
    return train_tagger(*data, TINY, QUICK, seed=4)


def test_tagging_accuracy_examples():
    assert tagging_accuracy(["A", "B"], ["A", "B"]) == 100.0
    assert tagging_accuracy(list("abcd"), list("axyz")) == 25.0
    with pytest.raises(ValueError):
        tagging_accuracy(["A"], ["A", "B"])


def test_treebank_accuracy_is_token_weighted(trained, data):
    model, _ = trained
    dev = data[1]
    correct = total = 0
    for s in dev:
        for p, t in zip(tag(model, s), s.tokens):
            correct += p == t.upos
            total += 1
    assert treebank_tag_counts(model, list(dev)) == (correct, total)
    assert treebank_accuracy(model, list(dev)) == pytest.approx(100.0 * correct / total)


def test_history_in_range_and_deterministic(data, trained):
    _, history = trained
    assert history and all(0.0 <= p.score <= 100.0 for p in history)
    _, again = train_tagger(*data, TINY, QUICK, seed=4)
    assert [p.score for p in again] == [p.score for p in history]


def test_tag_outputs(trained):
    model, _ = trained
    one = make_sentence([("unseenword", "_", 0, "root")])
    labels = tag(model, one)
    assert len(labels) == 1 and labels[0] in UPOS_TAGS
    s = generate_treebank(1, seed=50, lexicon=LEX)[0]
    assert tag(model, s) == tag(model, s)
    assert len(tag(model, s)) == len(s)


def test_tag_treebank_rewrites_only_upos(trained, data):
    model, _ = trained
    tagged = tag_treebank(model, data[1])
    for a, b in zip(tagged, data[1]):
        assert a.heads == b.heads and a.forms == b.forms and a.deprels == b.deprels


def test_empty_label_set_raises(data):
    bare = Treebank([s.with_column("upos", ["_"] * len(s)) for s in data[0]])
    with pytest.raises(ValueError):
        train_tagger(bare, data[1], TINY, QUICK)
    with pytest.raises(ValueError):
        train_tagger(Treebank([]), data[1], TINY, QUICK)


def test_schedule_validation():
    with pytest.raises(ValueError):
        BinSchedule((60, 60))
    with pytest.raises(ValueError):
        BinSchedule(())
    assert AccuracyBin(60, 0.25).accepts(60.25) and not AccuracyBin(60, 0.25).accepts(60.26)


def test_unreachable_bin_is_absent_with_diagnostic(tmp_path, data):
    noisy_dev = generate_treebank(6, seed=3, lexicon=LEX, label_noise=0.5)
    result = capture_bins(data[0], noisy_dev, TINY, BinSchedule((100.0,)), OptimizerConfig(max_epochs=2, patience=5),
                          retries=1, seed=0)
    (b,) = result.bins
    assert not b.captured and "never within" in b.diagnostic
    manifest = json.loads(result.save(tmp_path).read_text())
    assert manifest["retries"] == 1 and len(manifest["attempts"]) == 2
    assert manifest["bins"][0]["status"] == "absent"
    assert manifest["tagging_mode"] == "direct"


def test_captured_bins_respect_window(tmp_path, data):
    opt = OptimizerConfig(max_epochs=6, patience=50)
    result = capture_bins(data[0], data[1], TINY, BinSchedule((5.0, 100.0), window=100.0), opt, retries=0, seed=1)
    low, high = result.bins
    assert low.captured and abs(low.achieved - low.target) <= low.window
    path = result.save(tmp_path)
    manifest = load_bin_manifest(path)
    assert (tmp_path / "bin5.ckpt").is_file()
    entry = manifest["bins"][0]
    assert entry["checkpoint"] == "bin5.ckpt" and entry["achieved"] == low.achieved
    reloaded = TaggerModel.load(tmp_path / "bin5.ckpt")
    assert treebank_accuracy(reloaded, list(data[1])) == pytest.approx(low.achieved)


def test_jackknife_tags_every_sentence(data):
    tagged = jackknife_tag(data[0], TINY, OptimizerConfig(max_epochs=1, patience=1), folds=3, seed=0)
    assert len(tagged) == len(data[0])
    assert all(all(t in UPOS_TAGS for t in s.upos) for s in tagged)
