from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from ..conllu import UPOS_TAGS, Sentence

PAD, UNK, ROOT = "<pad>", "<unk>", "<root>"
SPECIALS = (PAD, UNK, ROOT)
PAD_ID, UNK_ID, ROOT_ID = 0, 1, 2


def _index(items: Iterable[str]) -> dict[str, int]:
    table = {s: i for i, s in enumerate(SPECIALS)}
    for item in items:
        table.setdefault(item, len(table))
    return table


@dataclass
class Vocab:
    words: dict[str, int]
    chars: dict[str, int]
    upos: dict[str, int]
    deprels: list[str]
    word_counts: dict[str, int] = field(default_factory=dict)
    min_freq: int = 1

    @classmethod
    def build(cls, sentences: Iterable[Sentence], min_freq: int = 1) -> "Vocab":
        sentences = list(sentences)
        counts = Counter(t.form for s in sentences for t in s.tokens)
        words = _index(sorted(w for w, c in counts.items() if c >= min_freq))
        chars = _index(sorted({c for w in counts for c in w}))
        upos = _index(UPOS_TAGS)
        deprels = sorted({t.deprel for s in sentences for t in s.tokens} | {"root"})
        return cls(words, chars, upos, deprels, dict(counts), min_freq)

    @property
    def upos_labels(self) -> list[str]:
        """UPOS labels in index order, specials excluded."""
        return [t for t, i in sorted(self.upos.items(), key=lambda kv: kv[1]) if t not in SPECIALS]

    def word_id(self, form: str) -> int:
        return self.words.get(form, UNK_ID)

    def char_ids(self, form: str) -> list[int]:
        return [self.chars.get(c, UNK_ID) for c in form] or [UNK_ID]

    def upos_id(self, tag: str) -> int:
        return self.upos.get(tag, UNK_ID)

    def deprel_id(self, rel: str) -> int:
        try:
            return self.deprels.index(rel)
        except ValueError:
            return -100  # ignored by the loss

    def is_singleton(self, form: str) -> bool:
        return self.word_counts.get(form, 0) == 1

    def to_dict(self) -> dict:
        return {
            "words": self.words, "chars": self.chars, "upos": self.upos,
            "deprels": self.deprels, "word_counts": self.word_counts, "min_freq": self.min_freq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vocab":
        return cls(dict(d["words"]), dict(d["chars"]), dict(d["upos"]), list(d["deprels"]),
                   dict(d.get("word_counts", {})), d.get("min_freq", 1))
