"""Subtree-swapping augmentation.

A subtree qualifies for swapping when its yield is a contiguous span, its
root is a NOUN, VERB, ADJ or PROPN, and the root relation is one of
:data:`ALLOWED_RELATIONS`. Two subtrees can be exchanged when their roots
agree on UPOS, relation and FEATS and their surface strings differ.

From a triplet of trees every tree acts as host once: a first swap takes a
donor from one of the other two trees, a second swap takes a donor from the
remaining tree and may not touch the span inserted by the first.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .conllu import Sentence, Token, Treebank, base_deprel, validate_tree
from .treebank_ops import make_rng

logger = logging.getLogger(__name__)

SWAPPABLE_UPOS = frozenset({"NOUN", "VERB", "ADJ", "PROPN"})

CORE_ARGUMENTS = frozenset({"nsubj", "obj", "iobj", "csubj", "ccomp", "xcomp"})
NOMINAL_DEPENDENTS = frozenset({"nmod", "appos", "nummod", "acl", "amod", "det", "clf", "case"})
NON_CORE_DEPENDENTS = frozenset({"obl", "vocative", "advcl", "advmod", "aux", "cop", "mark"})
ALLOWED_RELATIONS = CORE_ARGUMENTS | NOMINAL_DEPENDENTS | NON_CORE_DEPENDENTS

FULL_TRIPLET_LIMIT = 30
DEFAULT_TRIPLET_BUDGET = 4060  # C(30, 3)


class PoolTooSmallWarning(UserWarning):
    pass


class SwapError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentConfig:
    relations: frozenset[str] = ALLOWED_RELATIONS
    match_base_deprel: bool = False
    any_donor: bool = False
    triplet_budget: int = DEFAULT_TRIPLET_BUDGET


@dataclass(frozen=True)
class SubtreeRef:
    sentence_id: int
    root: int
    span: tuple[int, int]
    root_upos: str
    root_deprel: str
    root_feats: str
    surface: str

    @property
    def lo(self) -> int:
        return self.span[0]

    @property
    def hi(self) -> int:
        return self.span[1]

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def overlaps(self, span: tuple[int, int]) -> bool:
        return self.lo <= span[1] and span[0] <= self.hi


@dataclass(frozen=True)
class SwapRecord:
    host_sentence: int
    replaced: SubtreeRef
    inserted: SubtreeRef
    round: int

    @property
    def inserted_span(self) -> tuple[int, int]:
        """Token ids the donor material occupies in the output sentence."""
        lo = self.replaced.lo
        return (lo, lo + len(self.inserted) - 1)


@dataclass(frozen=True)
class Product:
    sentence: Sentence
    records: tuple[SwapRecord, ...]


def read_relations_file(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as f:
        rels = {line.strip() for line in f if line.strip() and not line.startswith("#")}
    return frozenset(rels)


def _children(heads: Sequence[int]) -> list[list[int]]:
    children: list[list[int]] = [[] for _ in range(len(heads) + 1)]
    for dep, head in enumerate(heads, 1):
        children[head].append(dep)
    return children


def subtree_yield(heads: Sequence[int], root: int) -> set[int]:
    """Ids of ``root`` and all its descendants."""
    children = _children(heads)
    stack, seen = [root], set()
    while stack:
        cur = stack.pop()
        seen.add(cur)
        stack.extend(children[cur])
    return seen


def _spans(heads: Sequence[int]) -> list[tuple[int, int, int]]:
    """``(lo, hi, size)`` of every node's yield, index 0 unused."""
    n = len(heads)
    children = _children(heads)
    order, stack = [], [0]
    while stack:
        cur = stack.pop()
        order.append(cur)
        stack.extend(children[cur])
    lo = list(range(n + 1))
    hi = list(range(n + 1))
    size = [1] * (n + 1)
    for node in reversed(order):
        if node == 0:
            continue
        head = heads[node - 1]
        if head:
            lo[head] = min(lo[head], lo[node])
            hi[head] = max(hi[head], hi[node])
            size[head] += size[node]
    return list(zip(lo, hi, size))


@dataclass(frozen=True)
class _Tree:
    """Lightweight tree used while enumerating products.

    ``codes`` intern (form, upos, feats) so that dedup keys are cheap tuples.
    """

    tokens: tuple[Token, ...]
    codes: tuple[int, ...]
    heads: tuple[int, ...]
    deprels: tuple[str, ...]

    @property
    def key(self):
        return (self.codes, self.heads, self.deprels)

    def to_sentence(self, comments: Sequence[str] = ()) -> Sentence:
        return Sentence([t.relocated(i, h, r) for i, (t, h, r) in enumerate(zip(self.tokens, self.heads, self.deprels), 1)],
                        comments)


class _Interner:
    def __init__(self):
        self.table: dict[tuple, int] = {}

    def tree(self, sentence: Sentence) -> _Tree:
        codes = tuple(self.table.setdefault((t.form, t.upos, t.feats), len(self.table)) for t in sentence.tokens)
        return _Tree(sentence.tokens, codes, tuple(sentence.heads), tuple(sentence.deprels))


def _extract(tree: _Tree, sentence_id: int, relations: frozenset[str]) -> list[SubtreeRef]:
    refs = []
    spans = None
    for i, tok in enumerate(tree.tokens, 1):
        deprel = tree.deprels[i - 1]
        if tok.upos not in SWAPPABLE_UPOS or base_deprel(deprel) not in relations:
            continue
        if spans is None:
            spans = _spans(tree.heads)
        lo, hi, size = spans[i]
        if hi - lo + 1 != size:
            continue
        refs.append(SubtreeRef(
            sentence_id=sentence_id, root=i, span=(lo, hi), root_upos=tok.upos, root_deprel=deprel,
            root_feats=tok.feats_str, surface=" ".join(t.form for t in tree.tokens[lo - 1:hi]),
        ))
    return refs


def extract_subtrees(sentence: Sentence, sentence_id: int = 0,
                     relations: Iterable[str] = ALLOWED_RELATIONS) -> list[SubtreeRef]:
    """Every swappable subtree of ``sentence``, ordered by root id."""
    check = validate_tree(sentence)
    if not check.ok:
        raise SwapError(f"invalid sentence: {', '.join(check.violations)}")
    tree = _Tree(sentence.tokens, (), tuple(sentence.heads), tuple(sentence.deprels))
    return _extract(tree, sentence_id, frozenset(relations))


def compatible(a: SubtreeRef, b: SubtreeRef, match_base_deprel: bool = False) -> bool:
    if match_base_deprel:
        same_rel = base_deprel(a.root_deprel) == base_deprel(b.root_deprel)
    else:
        same_rel = a.root_deprel == b.root_deprel
    return (a.root_upos == b.root_upos and same_rel
            and a.root_feats == b.root_feats and a.surface != b.surface)


def _check_ref(sentence: Sentence, ref: SubtreeRef, role: str) -> None:
    n = len(sentence)
    if not (1 <= ref.lo <= ref.root <= ref.hi <= n):
        raise SwapError(f"{role} span {ref.span} does not fit a sentence of {n} tokens")
    if subtree_yield(sentence.heads, ref.root) != set(range(ref.lo, ref.hi + 1)):
        raise SwapError(f"{role} span {ref.span} is not the yield of token {ref.root}")


def _splice(host: _Tree, target: SubtreeRef, donor: _Tree, ref: SubtreeRef) -> _Tree:
    delta = len(ref) - len(target)
    lo, hi = target.lo, target.hi
    attach_head = host.heads[target.root - 1]
    if attach_head > hi:
        attach_head += delta
    shift = lo - ref.lo
    inner = [h + shift for h in donor.heads[ref.lo - 1:ref.hi]]
    inner[ref.root - ref.lo] = attach_head
    inner_rels = list(donor.deprels[ref.lo - 1:ref.hi])
    inner_rels[ref.root - ref.lo] = host.deprels[target.root - 1]
    heads = (tuple(h + delta if h > hi else h for h in host.heads[:lo - 1]) + tuple(inner)
             + tuple(h + delta if h > hi else h for h in host.heads[hi:]))
    return _Tree(
        host.tokens[:lo - 1] + donor.tokens[ref.lo - 1:ref.hi] + host.tokens[hi:],
        host.codes[:lo - 1] + donor.codes[ref.lo - 1:ref.hi] + host.codes[hi:],
        heads,
        host.deprels[:lo - 1] + tuple(inner_rels) + host.deprels[hi:],
    )


def swap(host: Sentence, target: SubtreeRef, donor_sentence: Sentence, donor: SubtreeRef,
         match_base_deprel: bool = False) -> Sentence:
    """Replace ``target``'s span in ``host`` with a copy of ``donor``'s span.

    The donor keeps its internal arcs; its root attaches where the target
    root was attached, with the target's relation. Tokens right of the span
    shift by the length difference.
    """
    if not compatible(target, donor, match_base_deprel):
        raise SwapError("target and donor subtrees are not compatible")
    _check_ref(host, target, "target")
    _check_ref(donor_sentence, donor, "donor")
    interner = _Interner()
    tree = _splice(interner.tree(host), target, interner.tree(donor_sentence), donor)
    result = tree.to_sentence(host.comments)
    check = validate_tree(result)
    if not check.ok:  # unreachable when both refs are true yields
        raise SwapError(f"swap produced an invalid tree: {check.violations}")
    return result


def dedup_key(sentence: Sentence) -> tuple:
    """Identity of a tree for deduplication: comments, lemmas and misc are ignored."""
    return tuple((t.form, t.upos, t.feats, t.head, t.deprel) for t in sentence.tokens)


class _Member:
    """A triplet member with its swappable subtrees indexed by root signature."""

    def __init__(self, index: int, tree: _Tree, cfg: AugmentConfig):
        self.index = index
        self.tree = tree
        self.refs = _extract(tree, index, cfg.relations)
        self.by_signature: dict[tuple[str, str, str], list[SubtreeRef]] = {}
        for ref in self.refs:
            self.by_signature.setdefault(_signature(ref, cfg), []).append(ref)


def _signature(ref: SubtreeRef, cfg: AugmentConfig) -> tuple[str, str, str]:
    rel = base_deprel(ref.root_deprel) if cfg.match_base_deprel else ref.root_deprel
    return (ref.root_upos, rel, ref.root_feats)


def _swaps(host: _Tree, targets: Iterable[SubtreeRef], donors: Sequence[_Member], cfg: AugmentConfig):
    for target in targets:
        sig = _signature(target, cfg)
        for donor in donors:
            for ref in donor.by_signature.get(sig, ()):
                if ref.surface != target.surface:
                    yield target, ref, _splice(host, target, donor.tree, ref)


def _same_words(a: _Tree, b: _Tree) -> bool:
    return len(a.tokens) == len(b.tokens) and all(x.form == y.form for x, y in zip(a.tokens, b.tokens))


def _triplet_products(members: Sequence[_Member], cfg: AugmentConfig):
    """Yield ``(tree, records)`` for every one- and two-swap product, duplicates included."""
    for h, host in enumerate(members):
        others = [m for i, m in enumerate(members) if i != h]
        for d, first_donor in enumerate(others):
            third = others if cfg.any_donor else [others[1 - d]]
            for target, ref, first in _swaps(host.tree, host.refs, [first_donor], cfg):
                rec1 = SwapRecord(host.index, target, ref, 1)
                yield first, (rec1,)
                protected = rec1.inserted_span
                second_targets = [t for t in _extract(first, host.index, cfg.relations) if not t.overlaps(protected)]
                for target2, ref2, second in _swaps(first, second_targets, third, cfg):
                    if _same_words(second, host.tree):
                        continue  # two swaps that happen to spell the host sentence again
                    yield second, (rec1, SwapRecord(host.index, target2, ref2, 2))


def triplet_products(trees: Sequence[Sentence], ids: Sequence[int] = (0, 1, 2),
                     cfg: AugmentConfig = AugmentConfig()) -> list[Product]:
    """All one- and two-swap products of a triplet, with swap provenance.

    Duplicates and trees identical to one of the originals are removed; the
    first occurrence in generation order is kept.
    """
    if len(trees) != 3:
        raise ValueError("a triplet needs exactly three trees")
    for t in trees:
        check = validate_tree(t)
        if not check.ok:
            raise SwapError(f"invalid sentence: {', '.join(check.violations)}")
    interner = _Interner()
    members = [_Member(i, interner.tree(t), cfg) for i, t in zip(ids, trees)]
    seen = {m.tree.key for m in members}
    out: list[Product] = []
    for tree, records in _triplet_products(members, cfg):
        if tree.key not in seen:
            seen.add(tree.key)
            out.append(Product(tree.to_sentence(), records))
    return out


def _annotate(sentence: Sentence, records: Sequence[SwapRecord], index: int) -> Sentence:
    comments = [f"# sent_id = aug-{index}"]
    for rec in records:
        comments.append(
            f"# swap_round{rec.round} = host {rec.host_sentence} span {rec.replaced.lo}-{rec.replaced.hi}"
            f" <- sentence {rec.inserted.sentence_id} span {rec.inserted.lo}-{rec.inserted.hi}"
        )
    comments.append(f"# swap_rounds = {len(records)}")
    comments.append("# text = " + " ".join(sentence.forms))
    return replace(sentence, comments=tuple(comments))


def generate_from_triplet(t1: Sentence, t2: Sentence, t3: Sentence,
                          cfg: AugmentConfig = AugmentConfig()) -> list[Sentence]:
    return [p.sentence for p in triplet_products([t1, t2, t3], (0, 1, 2), cfg)]


def _triplets(n: int, budget: int, seed: int) -> list[tuple[int, int, int]]:
    if n <= FULL_TRIPLET_LIMIT:
        return list(itertools.combinations(range(n), 3))
    rng = make_rng(seed)
    chosen: set[tuple[int, int, int]] = set()
    limit = min(budget, n * (n - 1) * (n - 2) // 6)
    while len(chosen) < limit:
        chosen.add(tuple(sorted(int(i) for i in rng.choice(n, size=3, replace=False))))
    return sorted(chosen)


class Pool:
    """Deduplicated products of a treebank, in canonical (triplet, generation) order."""

    def __init__(self, trees: list[_Tree], records: list[tuple[SwapRecord, ...]]):
        self._trees = trees
        self.records = records

    def __len__(self) -> int:
        return len(self._trees)

    def sentence(self, index: int) -> Sentence:
        return self._trees[index].to_sentence()

    def product(self, index: int) -> Product:
        return Product(self.sentence(index), self.records[index])


def build_pool(tb: Treebank, cfg: AugmentConfig = AugmentConfig(), seed: int = 0) -> Pool:
    for i, s in enumerate(tb):
        check = validate_tree(s)
        if not check.ok:
            raise SwapError(f"sentence {i} is invalid: {', '.join(check.violations)}")
    interner = _Interner()
    members: dict[int, _Member] = {}
    seen = {interner.tree(s).key for s in tb}
    trees: list[_Tree] = []
    records: list[tuple[SwapRecord, ...]] = []
    for triplet in _triplets(len(tb), cfg.triplet_budget, seed):
        for i in triplet:
            if i not in members:
                members[i] = _Member(i, interner.tree(tb[i]), cfg)
        for tree, recs in _triplet_products([members[i] for i in triplet], cfg):
            if tree.key not in seen:
                seen.add(tree.key)
                trees.append(tree)
                records.append(recs)
    return Pool(trees, records)


def sample_pool(pool: Pool, n: int, seed: int, name: str = "") -> Treebank:
    """Draw ``n`` annotated, validated trees from an already built pool.

    Warns with :class:`PoolTooSmallWarning` and returns the whole pool when it
    holds fewer than ``n`` trees.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n and len(pool) < n:
        warnings.warn(f"augmentation pool has {len(pool)} trees, fewer than the {n} requested",
                      PoolTooSmallWarning, stacklevel=2)
    take = min(n, len(pool))
    chosen = sorted(int(i) for i in make_rng(seed).choice(len(pool), size=take, replace=False)) if take else []
    out = []
    for i in chosen:
        sentence = _annotate(pool.sentence(i), pool.records[i], i)
        check = validate_tree(sentence)
        if not check.ok:
            raise SwapError(f"generated tree {i} is invalid: {check.violations}")
        out.append(sentence)
    return Treebank(out, name)


def augment_treebank(tb: Treebank, n: int, seed: int, cfg: AugmentConfig = AugmentConfig()) -> Treebank:
    """Sample ``n`` generated trees from the pooled triplet products of ``tb``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    name = f"{tb.name}-aug{n}" if tb.name else ""
    if n == 0:
        return Treebank([], name)
    return sample_pool(build_pool(tb, cfg, seed), n, seed, name)
