from __future__ import annotations

import itertools

import pytest

from lowdep.conllu import Sentence, Token
from lowdep.neural.layers import EncoderConfig
from lowdep.neural.training import OptimizerConfig

TINY = EncoderConfig(num_layers=1, hidden_per_direction=16, word_dim=16, char_input_dim=8, char_out_dim=8,
                     upos_dim=8, arc_mlp_dim=16, rel_mlp_dim=8, tag_mlp_dim=16, dropout=0.0, seed=0)
QUICK = OptimizerConfig(max_epochs=3, patience=2, word_dropout=0.0)


def make_sentence(rows, comments=()) -> Sentence:
    """rows: (form, upos, head, deprel[, feats]) tuples, ids assigned 1..n."""
    tokens = []
    for i, row in enumerate(rows, 1):
        form, upos, head, deprel = row[:4]
        feats = row[4] if len(row) > 4 else "_"
        tokens.append(Token(id=i, form=form, lemma=form.lower(), upos=upos, feats=feats, head=head, deprel=deprel))
    return Sentence(tokens, comments)


def is_tree_bruteforce(heads) -> bool:
    """Independent check: exactly one root, every node reaches 0 in at most n steps."""
    n = len(heads)
    if sum(h == 0 for h in heads) != 1 or any(h < 0 or h > n for h in heads):
        return False
    for start in range(1, n + 1):
        node, steps = start, 0
        while node != 0 and steps <= n:
            node = heads[node - 1]
            steps += 1
        if node != 0:
            return False
    return True


def all_trees(n):
    for heads in itertools.product(range(n + 1), repeat=n):
        if is_tree_bruteforce(heads):
            yield list(heads)


@pytest.fixture
def dog_sentence() -> Sentence:
    return make_sentence([
        ("The", "DET", 3, "det"),
        ("big", "ADJ", 3, "amod", "Degree=Pos"),
        ("dog", "NOUN", 4, "nsubj", "Number=Sing"),
        ("barked", "VERB", 0, "root", "Tense=Past"),
        ("loudly", "ADV", 4, "advmod"),
    ])


@pytest.fixture
def tiny_cfg() -> EncoderConfig:
    return TINY


@pytest.fixture
def quick_opt() -> OptimizerConfig:
    return QUICK
