"""Combining, splitting, sampling and counting treebanks.

All randomness goes through :func:`make_rng`, a numpy ``Generator`` backed by
PCG64, so a seed gives the same split or sample on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .conllu import Treebank


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: Fraction = Fraction(4, 5)
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        frac = Fraction(self.train_fraction).limit_denominator(10**6)
        if not 0 < frac < 1:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        object.__setattr__(self, "train_fraction", frac)


@dataclass(frozen=True)
class TreebankStats:
    sentence_count: int
    token_count: int


def train_size(n: int, fraction: Fraction = Fraction(4, 5)) -> int:
    return math.floor(Fraction(fraction) * n)


def combine_and_split(train: Treebank, dev: Treebank | None, spec: SplitSpec = SplitSpec()) -> tuple[Treebank, Treebank]:
    """Pool ``train`` and ``dev`` and re-split so that train gets floor(fraction * N)."""
    pooled = list(train.sentences) + (list(dev.sentences) if dev is not None else [])
    n = len(pooled)
    if n < 2:
        raise ValueError(f"need at least 2 sentences to split, got {n}")
    k = train_size(n, spec.train_fraction)
    if k == 0 or k == n:
        raise ValueError(f"fraction {spec.train_fraction} leaves an empty side for N={n}")
    order = make_rng(spec.seed).permutation(n) if spec.shuffle else np.arange(n)
    name = train.name
    return (
        Treebank([pooled[i] for i in order[:k]], f"{name}-train" if name else ""),
        Treebank([pooled[i] for i in order[k:]], f"{name}-dev" if name else ""),
    )


def sample_subset(tb: Treebank, n: int, seed: int) -> Treebank:
    """Uniform sample of ``n`` sentences without replacement, original order kept."""
    if n < 0 or n > len(tb):
        raise ValueError(f"cannot sample {n} sentences from a treebank of {len(tb)}")
    chosen = np.sort(make_rng(seed).choice(len(tb), size=n, replace=False))
    return Treebank([tb.sentences[i] for i in chosen], tb.name)


def compute_stats(tb: Treebank) -> TreebankStats:
    return TreebankStats(len(tb), sum(len(s.tokens) for s in tb))
