import itertools
import warnings
from collections import Counter

import pytest

from lowdep.augment import (
    AugmentConfig, PoolTooSmallWarning, SubtreeRef, SwapError, augment_treebank, build_pool, compatible,
    extract_subtrees, generate_from_triplet, read_relations_file, swap, triplet_products,
)
from lowdep.conllu import Treebank, validate_tree
from lowdep.synthetic import generate_treebank

from . import augment_oracle as oracle
from .conftest import make_sentence


def _ref(upos, deprel, feats, surface):
    return SubtreeRef(0, 1, (1, 1), upos, deprel, feats, surface)


def test_extract_dog_sentence(dog_sentence):
    refs = extract_subtrees(dog_sentence)
    assert {(r.root, r.span) for r in refs} == {(2, (2, 2)), (3, (1, 3))}
    dog = next(r for r in refs if r.root == 3)
    assert dog.surface == "The big dog"
    assert (dog.root_upos, dog.root_deprel, dog.root_feats) == ("NOUN", "nsubj", "Number=Sing")


def test_extract_single_token_and_nonprojective():
    assert extract_subtrees(make_sentence([("go", "VERB", 0, "root")])) == []
    # token 2 governs 4 across token 3: yield {2, 4} is not a span
    gap = make_sentence([("v", "VERB", 0, "root"), ("n", "NOUN", 1, "obj"),
                         ("x", "ADV", 1, "advmod"), ("a", "ADJ", 2, "amod")])
    roots = {r.root for r in extract_subtrees(gap)}
    assert 2 not in roots and 4 in roots


def test_extract_rejects_invalid():
    with pytest.raises(SwapError):
        extract_subtrees(make_sentence([("a", "NOUN", 2, "nsubj"), ("b", "NOUN", 1, "obj")]))


def test_extract_matches_bruteforce_on_synthetic():
    for s in generate_treebank(40, seed=9):
        mine = {(r.root, r.span) for r in extract_subtrees(s)}
        theirs = {(r, (lo, hi)) for r, lo, hi in oracle.candidates(oracle.rows_of(s))}
        assert mine == theirs


def test_compatible_examples():
    a = _ref("NOUN", "nsubj", "Number=Sing", "the dog")
    assert not compatible(a, a)
    assert compatible(a, _ref("NOUN", "nsubj", "Number=Sing", "a cat"))
    assert not compatible(a, _ref("NOUN", "obj", "Number=Sing", "a cat"))
    assert not compatible(a, _ref("NOUN", "nsubj", "Number=Plur", "cats"))
    sub = _ref("NOUN", "nsubj:pass", "Number=Sing", "a cat")
    assert not compatible(a, sub)
    assert compatible(a, sub, match_base_deprel=True)


def _cat_sentence():
    return make_sentence([("A", "DET", 2, "det"), ("cat", "NOUN", 3, "nsubj", "Number=Sing"),
                          ("slept", "VERB", 0, "root", "Tense=Past")])


def test_swap_shrinks_and_reindexes(dog_sentence):
    donor_sentence = _cat_sentence()
    target = next(r for r in extract_subtrees(dog_sentence) if r.root == 3)
    donor = next(r for r in extract_subtrees(donor_sentence, 1) if r.root == 2)
    out = swap(dog_sentence, target, donor_sentence, donor)
    assert out.forms == ["A", "cat", "barked", "loudly"]
    assert out.heads == [2, 3, 0, 3]  # old token 4 is now 3; heads >= 4 dropped by one
    assert out.deprels[1] == "nsubj"
    assert validate_tree(out).ok


def test_swap_equal_length_keeps_outside_heads():
    host = make_sentence([("dogs", "NOUN", 2, "nsubj", "Number=Plur"), ("bark", "VERB", 0, "root"),
                          ("here", "ADV", 2, "advmod")])
    donor_s = make_sentence([("cats", "NOUN", 2, "nsubj", "Number=Plur"), ("sleep", "VERB", 0, "root")])
    out = swap(host, extract_subtrees(host)[0], donor_s, extract_subtrees(donor_s)[0])
    assert len(out) == 3 and out.heads == host.heads and out.forms[0] == "cats"


def test_swap_back_restores_host(dog_sentence):
    donor_sentence = _cat_sentence()
    target = next(r for r in extract_subtrees(dog_sentence) if r.root == 3)
    donor = next(r for r in extract_subtrees(donor_sentence, 1) if r.root == 2)
    out = swap(dog_sentence, target, donor_sentence, donor)
    inserted = next(r for r in extract_subtrees(out) if r.root == 2)
    back = swap(out, inserted, dog_sentence, target)
    assert [(t.form, t.upos, t.feats, t.head, t.deprel) for t in back.tokens] == \
           [(t.form, t.upos, t.feats, t.head, t.deprel) for t in dog_sentence.tokens]


def test_swap_rejects_incompatible(dog_sentence):
    target = next(r for r in extract_subtrees(dog_sentence) if r.root == 3)
    with pytest.raises(SwapError):
        swap(dog_sentence, target, dog_sentence, target)


def test_triplet_trivial_cases(dog_sentence):
    flat = make_sentence([("oh", "INTJ", 0, "root")])
    assert generate_from_triplet(flat, flat, flat) == []
    assert generate_from_triplet(dog_sentence, dog_sentence, dog_sentence) == []


def test_triplet_single_compatible_pair(dog_sentence):
    third = make_sentence([("oh", "INTJ", 0, "root")])
    cat = make_sentence([("A", "DET", 2, "det"), ("cat", "NOUN", 3, "nsubj", "Number=Sing"),
                         ("ran", "VERB", 0, "root", "Tense=Past")])
    out = generate_from_triplet(dog_sentence, cat, third)
    # dog<-cat and cat<-dog are both single swaps; the hand count is two products
    assert sorted(" ".join(s.forms) for s in out) == ["A cat barked loudly", "The big dog ran"]


def test_triplet_one_directional_pair():
    host = make_sentence([("dog", "NOUN", 2, "nsubj", "Number=Sing"), ("ran", "VERB", 0, "root")])
    donor = make_sentence([("big", "ADJ", 2, "amod"), ("cat", "NOUN", 3, "nsubj", "Number=Sing"),
                           ("slept", "VERB", 0, "root")])
    third = make_sentence([("oh", "INTJ", 0, "root")])
    products = triplet_products([host, donor, third])
    forms = sorted(" ".join(p.sentence.forms) for p in products)
    assert forms == ["big cat ran", "dog slept"]
    assert all(len(p.records) == 1 for p in products)


def _synthetic_triplets(count, seed):
    tb = generate_treebank(12, seed=seed)
    return [[tb[i] for i in t] for t in itertools.islice(itertools.combinations(range(len(tb)), 3), count)]


def test_closure_matches_oracle():
    checked = 0
    for trip in _synthetic_triplets(60, seed=5):
        mine = {tuple((t.form, t.upos, t.feats_str, t.head, t.deprel) for t in s.tokens)
                for s in generate_from_triplet(*trip)}
        assert mine == oracle.closure([oracle.rows_of(s) for s in trip])
        checked += bool(mine)
    assert checked > 10


def test_closure_products_respect_constraints():
    for trip in _synthetic_triplets(30, seed=6):
        for prod in triplet_products(trip):
            s = prod.sentence
            assert validate_tree(s).ok
            host = trip[prod.records[0].host_sentence]
            assert s.forms != host.forms
            rec1 = prod.records[0]
            assert compatible(rec1.replaced, rec1.inserted)
            if len(prod.records) == 2:
                rec2 = prod.records[1]
                assert not rec2.replaced.overlaps(rec1.inserted_span)
                assert rec2.inserted.sentence_id not in (rec1.host_sentence, rec1.inserted.sentence_id)
                assert compatible(rec2.replaced, rec2.inserted)
            else:
                # conservation of the UPOS/feats multiset for single swaps
                donor = trip[rec1.inserted.sentence_id]
                expect = Counter((t.upos, t.feats) for t in host.tokens)
                expect.subtract((t.upos, t.feats) for t in host.tokens[rec1.replaced.lo - 1:rec1.replaced.hi])
                expect.update((t.upos, t.feats) for t in donor.tokens[rec1.inserted.lo - 1:rec1.inserted.hi])
                assert +expect == Counter((t.upos, t.feats) for t in s.tokens)


def test_any_donor_is_superset():
    for trip in _synthetic_triplets(10, seed=7):
        strict = {tuple(s.forms) for s in generate_from_triplet(*trip)}
        loose = {tuple(s.forms) for s in generate_from_triplet(*trip, cfg=AugmentConfig(any_donor=True))}
        assert strict <= loose


def test_augment_n_zero_and_empty_pool(dog_sentence):
    assert len(augment_treebank(generate_treebank(5, seed=1), 0, seed=1)) == 0
    flat = Treebank([make_sentence([(w, "INTJ", 0, "root")]) for w in "abc"])
    with pytest.warns(PoolTooSmallWarning):
        assert len(augment_treebank(flat, 3, seed=1)) == 0


def test_augment_samples_from_pool():
    tb = generate_treebank(5, seed=3)
    pool = build_pool(tb)
    pool_keys = {tuple(pool.sentence(i).forms) for i in range(len(pool))}
    assert len(pool) >= 3
    out = augment_treebank(tb, 3, seed=11)
    assert len(out) == 3 and len({tuple(s.forms) for s in out}) == 3
    assert all(tuple(s.forms) in pool_keys for s in out)
    assert augment_treebank(tb, 3, seed=11) == out
    assert any(c.startswith("# swap_rounds") for c in out[0].comments)


def test_augment_warns_when_short():
    tb = generate_treebank(3, seed=3)
    size = len(build_pool(tb))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = augment_treebank(tb, size + 5, seed=0)
    assert len(out) == size
    assert any(issubclass(w.category, PoolTooSmallWarning) for w in caught)


def test_relations_file(tmp_path, dog_sentence):
    path = tmp_path / "rels.txt"
    path.write_text("# only subjects\nnsubj\n")
    rels = read_relations_file(path)
    assert rels == {"nsubj"}
    assert [r.root for r in extract_subtrees(dog_sentence, relations=rels)] == [3]
