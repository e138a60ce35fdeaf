import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowdep.conllu import Treebank
from lowdep.synthetic import generate_treebank
from lowdep.treebank_ops import SplitSpec, combine_and_split, compute_stats, sample_subset, train_size

from .conftest import make_sentence


def _tb(n, name="tb"):
    return Treebank([make_sentence([(f"w{i}", "NOUN", 0, "root")]) for i in range(n)], name)


@pytest.mark.parametrize("train,dev,expected", [((15, 4), None, (15, 4)), ((307, 77), None, (307, 77)),
                                                ((10, 0), None, (8, 2))])
def test_split_examples(train, dev, expected):
    out_train, out_dev = combine_and_split(_tb(train[0]), _tb(train[1]) if train[1] else None, SplitSpec(seed=3))
    assert (len(out_train), len(out_dev)) == expected


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 600), st.integers(0, 2**32))
def test_split_sizes_property(n, seed):
    a, b = combine_and_split(_tb(n), None, SplitSpec(seed=seed))
    assert len(a) + len(b) == n
    assert len(a) == math.floor(0.8 * n) == train_size(n)
    forms = sorted(s.forms[0] for s in a.sentences + b.sentences)
    assert forms == sorted(f"w{i}" for i in range(n))


def test_split_without_shuffle_keeps_prefix():
    a, b = combine_and_split(_tb(10), None, SplitSpec(shuffle=False))
    assert [s.forms[0] for s in a] == [f"w{i}" for i in range(8)]


def test_split_deterministic_and_seed_sensitive():
    tb = _tb(50)
    assert combine_and_split(tb, None, SplitSpec(seed=1)) == combine_and_split(tb, None, SplitSpec(seed=1))
    assert combine_and_split(tb, None, SplitSpec(seed=1))[0] != combine_and_split(tb, None, SplitSpec(seed=2))[0]


def test_split_errors():
    with pytest.raises(ValueError):
        combine_and_split(_tb(1), None)
    with pytest.raises(ValueError):
        SplitSpec(train_fraction=Fraction(1))
    with pytest.raises(ValueError):
        combine_and_split(_tb(2), None, SplitSpec(train_fraction=0.1))  # dev would take everything


def test_sample_examples():
    tb = generate_treebank(40, seed=2)
    assert sample_subset(tb, len(tb), 0).sentences == tb.sentences
    assert len(sample_subset(tb, 0, 0)) == 0
    with pytest.raises(ValueError):
        sample_subset(tb, 41, 0)


def test_sample_two_seeds_differ_and_preserve_order():
    tb = _tb(4000)
    a, b = sample_subset(tb, 100, 1), sample_subset(tb, 100, 2)
    ia = [int(s.forms[0][1:]) for s in a]
    assert ia == sorted(ia) and len(set(ia)) == 100
    assert {s.forms[0] for s in a} ^ {s.forms[0] for s in b}
    assert sample_subset(tb, 100, 1) == a


def test_stats():
    empty = compute_stats(Treebank([]))
    assert (empty.sentence_count, empty.token_count) == (0, 0)
    two = Treebank([make_sentence([("a", "X", 0, "root")] + [("b", "X", 1, "dep")] * 2),
                    make_sentence([("a", "X", 0, "root")] + [("b", "X", 1, "dep")] * 3)])
    stats = compute_stats(two)
    assert (stats.sentence_count, stats.token_count) == (2, 7)
