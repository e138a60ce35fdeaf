"""Attachment and tagging scores.

Every syntactic word counts, punctuation included, and relations are
compared on the full label (subtypes included). Scores are token-weighted
over the whole treebank.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

from .conllu import Treebank


class AlignmentError(ValueError):
    pass


def percent(numerator: int, denominator: int) -> float:
    return 100.0 * numerator / denominator if denominator else 0.0


def round_half_up(value: float, places: int = 2) -> float:
    return float(Decimal(repr(value)).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))


def percent_2dp(numerator: int, denominator: int) -> float:
    """Exact ``100 * numerator / denominator`` rounded half-up to two decimals."""
    if not denominator:
        return 0.0
    exact = Decimal(100 * numerator) / Decimal(denominator)
    return float(exact.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass
class EvalReport:
    token_count: int
    head_correct: int
    labeled_correct: int
    upos_correct: int | None = None
    per_sentence: list[tuple[int, int, int]] = field(default_factory=list, repr=False)

    @property
    def uas(self) -> float:
        return percent(self.head_correct, self.token_count)

    @property
    def las(self) -> float:
        return percent(self.labeled_correct, self.token_count)

    @property
    def upos_acc(self) -> float | None:
        return None if self.upos_correct is None else percent(self.upos_correct, self.token_count)

    def rounded(self) -> dict:
        return {
            "uas": percent_2dp(self.head_correct, self.token_count),
            "las": percent_2dp(self.labeled_correct, self.token_count),
            "upos": None if self.upos_correct is None else percent_2dp(self.upos_correct, self.token_count),
            "tokens": self.token_count,
        }


def _has_tags(tb: Treebank) -> bool:
    return all(t.upos != "_" for s in tb for t in s.tokens)


def evaluate(system: Treebank, gold: Treebank) -> EvalReport:
    if len(system) != len(gold):
        raise AlignmentError(f"system has {len(system)} sentences, gold has {len(gold)}")
    for i, (s, g) in enumerate(zip(system, gold)):
        if len(s) != len(g):
            raise AlignmentError(f"sentence {i}: system has {len(s)} tokens, gold has {len(g)}")
    score_tags = _has_tags(system) and _has_tags(gold)
    total = heads = labeled = tags = 0
    per_sentence = []
    for s, g in zip(system, gold):
        sh = sl = 0
        for st, gt in zip(s.tokens, g.tokens):
            if st.head == gt.head:
                sh += 1
                if st.deprel == gt.deprel:
                    sl += 1
            if score_tags and st.upos == gt.upos:
                tags += 1
        total += len(g)
        heads += sh
        labeled += sl
        per_sentence.append((len(g), sh, sl))
    return EvalReport(total, heads, labeled, tags if score_tags else None, per_sentence)
