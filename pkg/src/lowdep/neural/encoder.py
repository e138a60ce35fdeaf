from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from ..conllu import Sentence
from .layers import BiLSTMEncoder, Embedder, EncoderConfig
from .vocab import PAD_ID, ROOT_ID, UNK_ID, Vocab

IGNORE = -100


@dataclass
class Batch:
    words: torch.Tensor         # (B, T)
    chars: torch.Tensor         # (B, T, C)
    char_lengths: torch.Tensor  # (B, T)
    upos: torch.Tensor          # (B, T) input tag ids
    lengths: torch.Tensor       # (B,)
    tags: torch.Tensor          # (B, T) tagging targets, IGNORE where absent
    heads: torch.Tensor         # (B, T) IGNORE where absent
    rels: torch.Tensor          # (B, T) IGNORE where absent
    with_root: bool

    @property
    def mask(self) -> torch.Tensor:
        t = self.words.shape[1]
        return torch.arange(t).unsqueeze(0) < self.lengths.unsqueeze(1)


def make_batch(sentences: Sequence[Sentence], vocab: Vocab, with_root: bool,
               word_dropout: float = 0.0, rng: np.random.Generator | None = None) -> Batch:
    """Index a list of sentences; position 0 holds the artificial root when ``with_root``."""
    offset = 1 if with_root else 0
    b = len(sentences)
    t = max(len(s) for s in sentences) + offset
    c = max(len(tok.form) for s in sentences for tok in s.tokens) or 1
    words = torch.full((b, t), PAD_ID, dtype=torch.long)
    chars = torch.full((b, t, c), PAD_ID, dtype=torch.long)
    char_lengths = torch.ones((b, t), dtype=torch.long)
    upos = torch.full((b, t), PAD_ID, dtype=torch.long)
    tags = torch.full((b, t), IGNORE, dtype=torch.long)
    heads = torch.full((b, t), IGNORE, dtype=torch.long)
    rels = torch.full((b, t), IGNORE, dtype=torch.long)
    labels = {tag: i for i, tag in enumerate(vocab.upos_labels)}
    rel_ids = {rel: i for i, rel in enumerate(vocab.deprels)}
    for i, sent in enumerate(sentences):
        if with_root:
            words[i, 0] = ROOT_ID
            chars[i, 0, 0] = ROOT_ID
            upos[i, 0] = ROOT_ID
        for j, tok in enumerate(sent.tokens, offset):
            wid = vocab.word_id(tok.form)
            if word_dropout and rng is not None and vocab.is_singleton(tok.form) and rng.random() < word_dropout:
                wid = UNK_ID
            words[i, j] = wid
            ids = vocab.char_ids(tok.form)
            chars[i, j, :len(ids)] = torch.tensor(ids)
            char_lengths[i, j] = len(ids)
            upos[i, j] = vocab.upos_id(tok.upos)
            tags[i, j] = labels.get(tok.upos, IGNORE)
            if with_root:
                heads[i, j] = tok.head
                rels[i, j] = rel_ids.get(tok.deprel, IGNORE)
    lengths = torch.tensor([len(s) + offset for s in sentences], dtype=torch.long)
    return Batch(words, chars, char_lengths, upos, lengths, tags, heads, rels, with_root)


class SentenceEncoder(nn.Module):
    """Token embeddings followed by the stacked BiLSTM."""

    def __init__(self, vocab: Vocab, cfg: EncoderConfig, use_upos: bool):
        super().__init__()
        self.embedder = Embedder(len(vocab.words), len(vocab.chars), len(vocab.upos), cfg, use_upos)
        self.input_dropout = nn.Dropout(cfg.dropout)
        self.bilstm = BiLSTMEncoder(self.embedder.output_dim, cfg)
        self.output_dropout = nn.Dropout(cfg.dropout)

    @property
    def use_upos(self) -> bool:
        return self.embedder.use_upos

    def embed(self, batch: Batch) -> torch.Tensor:
        return self.embedder(batch.words, batch.chars, batch.char_lengths,
                             batch.upos if self.use_upos else None)

    def forward(self, batch: Batch) -> torch.Tensor:
        x = self.input_dropout(self.embed(batch))
        return self.output_dropout(self.bilstm(x, batch.lengths))


def embed_tokens(sentence: Sentence, vocab: Vocab, encoder: SentenceEncoder, use_upos: bool | None = None) -> torch.Tensor:
    """Per-token input vectors (no artificial root): (n, word + char [+ upos] dims)."""
    if use_upos is None:
        use_upos = encoder.use_upos
    if use_upos and not encoder.use_upos:
        raise ValueError("this encoder has no UPOS embedding")
    if use_upos and any(t.upos == "_" for t in sentence.tokens):
        raise ValueError("UPOS embeddings requested but the sentence carries no tags")
    batch = make_batch([sentence], vocab, with_root=False)
    with torch.no_grad():
        emb = encoder.embedder
        parts = [emb.word(batch.words)]
        b, t = batch.words.shape
        parts.append(emb.chars(batch.chars.reshape(b * t, -1), batch.char_lengths.reshape(-1)).reshape(b, t, -1))
        if use_upos:
            parts.append(emb.upos(batch.upos))
    return torch.cat(parts, dim=-1)[0]
