"""Small grammar-generated treebanks for tests, demos and miniature experiments.

Sentences follow ``subject verb [object] [prepositional phrase] [adverb] .``
with determiners, adjectives and prepositional modifiers inside noun
phrases. Nouns carry ``Number`` and verbs agree with their subject, so
subtree swapping finds compatible material. A share of word forms is
ambiguous between NOUN and VERB, which keeps tagging imperfect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conllu import UPOS_TAGS, Sentence, Token, Treebank
from .treebank_ops import make_rng

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "tr", "kl", "br"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou"]


@dataclass(frozen=True)
class Lexicon:
    nouns: tuple[str, ...]
    verbs: tuple[str, ...]
    adjs: tuple[str, ...]
    propns: tuple[str, ...]
    advs: tuple[str, ...]
    dets: tuple[str, ...] = ("ta", "ke", "mu")
    adps: tuple[str, ...] = ("na", "ri", "so", "vel")


def _word(rng: np.random.Generator, syllables: int, suffix: str) -> str:
    return "".join(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
                   for _ in range(syllables)) + suffix


def make_lexicon(size: int = 60, ambiguity: float = 0.15, seed: int = 0) -> Lexicon:
    """``size`` words per open class; a fraction ``ambiguity`` of verbs reuse noun forms."""
    rng = make_rng(seed)

    def words(n, suffix, syllables=(2, 3)):
        out: list[str] = []
        while len(out) < n:
            w = _word(rng, int(rng.integers(syllables[0], syllables[1] + 1)), suffix)
            if w not in out:
                out.append(w)
        return out

    nouns = words(size, "")
    verbs = words(size, "t")
    shared = int(round(ambiguity * size))
    verbs[:shared] = nouns[:shared]
    adjs = words(size // 2, "ic")
    propns = [w.capitalize() for w in words(size // 3, "")]
    advs = words(max(3, size // 6), "ly", (1, 2))
    return Lexicon(tuple(nouns), tuple(verbs), tuple(adjs), tuple(propns), tuple(advs))


class _Builder:
    def __init__(self):
        self.rows: list[dict] = []

    def add(self, form, upos, deprel, head=None, feats=()):
        self.rows.append({"form": form, "upos": upos, "deprel": deprel, "head": head, "feats": tuple(feats)})
        return len(self.rows)  # 1-based id


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _noun_phrase(b: _Builder, rng, lex: Lexicon, deprel: str, allow_pp: bool, number: str) -> int:
    """Append a noun phrase and return the position of its head noun; the caller attaches it."""
    if rng.random() < 0.2:
        head = b.add(_pick(rng, lex.propns), "PROPN", deprel, feats=[("Number", "Sing")])
        return head
    pending = []
    if rng.random() < 0.8:
        pending.append(b.add(_pick(rng, lex.dets), "DET", "det"))
    for _ in range(int(rng.integers(0, 3))):
        pending.append(b.add(_pick(rng, lex.adjs), "ADJ", "amod", feats=[("Degree", "Pos")]))
    head = b.add(_pick(rng, lex.nouns), "NOUN", deprel, feats=[("Number", number)])
    for p in pending:
        b.rows[p - 1]["head"] = head
    if allow_pp and rng.random() < 0.3:
        case = b.add(_pick(rng, lex.adps), "ADP", "case")
        nmod = _noun_phrase(b, rng, lex, "nmod", False, _pick(rng, ("Sing", "Plur")))
        b.rows[case - 1]["head"] = nmod
        b.rows[nmod - 1]["head"] = head
    return head


def generate_sentence(rng: np.random.Generator, lex: Lexicon) -> list[dict]:
    b = _Builder()
    subj_number = _pick(rng, ("Sing", "Plur"))
    subj = _noun_phrase(b, rng, lex, "nsubj", True, subj_number)
    verb = b.add(_pick(rng, lex.verbs), "VERB", "root", head=0,
                 feats=[("Number", subj_number), ("Tense", _pick(rng, ("Past", "Pres")))])
    b.rows[subj - 1]["head"] = verb
    if rng.random() < 0.75:
        obj = _noun_phrase(b, rng, lex, "obj", True, _pick(rng, ("Sing", "Plur")))
        b.rows[obj - 1]["head"] = verb
    if rng.random() < 0.5:
        case = b.add(_pick(rng, lex.adps), "ADP", "case")
        obl = _noun_phrase(b, rng, lex, "obl", False, _pick(rng, ("Sing", "Plur")))
        b.rows[case - 1]["head"] = obl
        b.rows[obl - 1]["head"] = verb
    if rng.random() < 0.4:
        b.add(_pick(rng, lex.advs), "ADV", "advmod", head=verb)
    b.add(".", "PUNCT", "punct", head=verb)
    return b.rows


def generate_treebank(n_sentences: int, seed: int = 0, lexicon: Lexicon | None = None,
                      label_noise: float = 0.0, name: str = "synthetic") -> Treebank:
    """Generate ``n_sentences`` valid trees; ``label_noise`` relabels that share of UPOS tags at random."""
    rng = make_rng(seed)
    lex = lexicon or make_lexicon(seed=seed)
    sentences = []
    for k in range(n_sentences):
        rows = generate_sentence(rng, lex)
        tokens = []
        for i, r in enumerate(rows, 1):
            upos = r["upos"]
            if label_noise and rng.random() < label_noise:
                upos = _pick(rng, UPOS_TAGS)
            tokens.append(Token(id=i, form=r["form"], lemma=r["form"].lower(), upos=upos, feats=r["feats"],
                                head=r["head"], deprel=r["deprel"]))
        comments = (f"# sent_id = {name}-{k + 1}", "# text = " + " ".join(r["form"] for r in rows))
        sentences.append(Sentence(tokens, comments))
    return Treebank(sentences, name)
