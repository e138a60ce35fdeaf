"""Biaffine dependency parser with four ways of using UPOS tags.

``none``   no tag input;
``gold``   gold tags embedded as input;
``pred``   tags produced by a tagger embedded as input (same network as gold);
``multi``  no tag input, tagging trained as an auxiliary task on the shared encoder.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import torch
from torch import nn

from .conllu import Sentence, Treebank
from .mst import mst_decode
from .neural.checkpoint import load_checkpoint, save_checkpoint
from .neural.encoder import IGNORE, SentenceEncoder, make_batch
from .neural.layers import MLP, Biaffine, EncoderConfig, init_embeddings_, softmax_cross_entropy
from .neural.training import OptimizerConfig, seed_everything, train
from .neural.vocab import Vocab

logger = logging.getLogger(__name__)

MODES = ("none", "pred", "gold", "multi")


@dataclass(frozen=True)
class TagMode:
    kind: str = "none"
    tagger_manifest: str | None = None
    aux_weight: float = 1.0

    def __post_init__(self):
        if self.kind not in MODES:
            raise ValueError(f"unknown tag mode {self.kind!r}; expected one of {MODES}")

    @property
    def uses_tag_input(self) -> bool:
        return self.kind in ("pred", "gold")

    @property
    def multitask(self) -> bool:
        return self.kind == "multi"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "tagger_manifest": self.tagger_manifest, "aux_weight": self.aux_weight}


@dataclass
class ParseResult:
    heads: list[int]
    deprels: list[str]
    predicted_upos: list[str] | None = None


class ParserModel(nn.Module):
    def __init__(self, vocab: Vocab, cfg: EncoderConfig, mode: TagMode):
        super().__init__()
        self.vocab = vocab
        self.cfg = cfg
        self.mode = mode
        seed_everything(cfg.seed)
        self.encoder = SentenceEncoder(vocab, cfg, use_upos=mode.uses_tag_input)
        d = cfg.state_dim
        self.arc_head = MLP(d, cfg.arc_mlp_dim, cfg.dropout)
        self.arc_dep = MLP(d, cfg.arc_mlp_dim, cfg.dropout)
        self.rel_head = MLP(d, cfg.rel_mlp_dim, cfg.dropout)
        self.rel_dep = MLP(d, cfg.rel_mlp_dim, cfg.dropout)
        self.arc_biaffine = Biaffine(cfg.arc_mlp_dim, 1)
        self.rel_biaffine = Biaffine(cfg.rel_mlp_dim, len(vocab.deprels))
        if mode.multitask:
            self.tag_labels = vocab.upos_labels
            self.tag_mlp = MLP(d, cfg.tag_mlp_dim, cfg.dropout)
            self.tag_out = nn.Linear(cfg.tag_mlp_dim, len(self.tag_labels))
        init_embeddings_(self)

    def batch(self, sentences, word_dropout=0.0, rng=None):
        return make_batch(sentences, self.vocab, with_root=True, word_dropout=word_dropout, rng=rng)

    def forward(self, batch):
        states = self.encoder(batch)
        arc = self.arc_biaffine(self.arc_head(states), self.arc_dep(states)).squeeze(-1)
        rel = self.rel_biaffine(self.rel_head(states), self.rel_dep(states))
        pad = ~batch.mask
        arc = arc.masked_fill(pad.unsqueeze(1), float("-inf"))
        tags = self.tag_out(self.tag_mlp(states)) if self.mode.multitask else None
        return arc, rel, tags

    def loss(self, batch) -> torch.Tensor:
        arc, rel, tags = self(batch)
        heads = batch.heads
        loss = softmax_cross_entropy(arc, heads)
        gold_heads = heads.clamp(min=0)
        idx = gold_heads.unsqueeze(-1).unsqueeze(-1).expand(-1, -1, 1, rel.shape[-1])
        rel_at_gold = rel.gather(2, idx).squeeze(2)
        rels = batch.rels.masked_fill(heads == IGNORE, IGNORE)
        loss = loss + softmax_cross_entropy(rel_at_gold, rels)
        if tags is not None:
            loss = loss + self.mode.aux_weight * softmax_cross_entropy(tags, batch.tags)
        return loss

    @torch.no_grad()
    def predict(self, sentences: Sequence[Sentence], batch_size: int = 64) -> list[ParseResult]:
        was_training = self.training
        self.eval()
        out = []
        root_id = self.vocab.deprels.index("root")
        for start in range(0, len(sentences), batch_size):
            chunk = sentences[start:start + batch_size]
            arc, rel, tags = self(self.batch(chunk))
            for i, sent in enumerate(chunk):
                n = len(sent)
                scores = arc[i, :n + 1, :n + 1].double().numpy().copy()
                scores[0, :] = 0.0
                heads = mst_decode(scores)
                labels = []
                for dep, head in enumerate(heads, 1):
                    row = rel[i, dep, head].clone()
                    if head == 0:
                        label = root_id
                    else:
                        row[root_id] = float("-inf")
                        label = int(row.argmax())
                    labels.append(self.vocab.deprels[label])
                upos = None
                if tags is not None:
                    upos = [self.tag_labels[k] for k in tags[i, 1:n + 1].argmax(-1).tolist()]
                out.append(ParseResult(heads, labels, upos))
        self.train(was_training)
        return out

    def save(self, path, extra: dict | None = None) -> None:
        extra = dict(extra or {})
        extra["mode"] = self.mode.to_dict()
        save_checkpoint(path, "parser", self.cfg.to_dict(), self.vocab.to_dict(), self.state_dict(), extra)

    @classmethod
    def load(cls, path) -> "ParserModel":
        meta, state = load_checkpoint(path)
        if meta["kind"] != "parser":
            raise ValueError(f"{path} holds a {meta['kind']} checkpoint, not a parser")
        mode = TagMode(**meta["extra"]["mode"])
        model = cls(Vocab.from_dict(meta["vocab"]), EncoderConfig.from_dict(meta["config"]), mode)
        model.load_state_dict(state)
        model.eval()
        model.meta = meta
        return model


def apply_parse(sentence: Sentence, result: ParseResult) -> Sentence:
    """Write a parse into a copy of ``sentence`` (HEAD, DEPREL, and UPOS when predicted)."""
    out = sentence.with_column("head", result.heads).with_column("deprel", result.deprels)
    if result.predicted_upos is not None:
        out = out.with_column("upos", result.predicted_upos)
    return out


def parse(model: ParserModel, sentence: Sentence, mode: TagMode | None = None) -> ParseResult:
    if mode is not None and mode.kind != model.mode.kind:
        raise ValueError(f"model was trained in {model.mode.kind!r} mode, not {mode.kind!r}")
    return model.predict([sentence])[0]


def parse_treebank(model: ParserModel, tb: Treebank) -> Treebank:
    results = model.predict(tb.sentences)
    return Treebank([apply_parse(s, r) for s, r in zip(tb.sentences, results)], tb.name)


def _dev_las(model: ParserModel, dev: list[Sentence]) -> float:
    from .evaluation import evaluate

    system = [apply_parse(s, r) for s, r in zip(dev, model.predict(dev))]
    return evaluate(Treebank(system), Treebank(dev)).las


def train_parser(train_tb: Treebank, dev_tb: Treebank, mode: TagMode, cfg: EncoderConfig = EncoderConfig(),
                 opt: OptimizerConfig = OptimizerConfig(), seed: int | None = None,
                 evaluate_dev: bool = True) -> tuple[ParserModel, list]:
    """Train a parser; returns the best-dev-LAS model and the dev trajectory.

    In ``pred`` mode the UPOS columns of both treebanks must already hold
    tagger output and ``mode.tagger_manifest`` must name the tagger's
    manifest file.
    """
    if not len(train_tb) or not len(dev_tb):
        raise ValueError("parser training needs non-empty train and dev treebanks")
    if mode.kind == "pred":
        if not mode.tagger_manifest or not Path(mode.tagger_manifest).is_file():
            raise FileNotFoundError(f"predicted-tag mode needs a tagger manifest, got {mode.tagger_manifest!r}")
    seed = cfg.seed if seed is None else seed
    cfg = replace(cfg, seed=seed)
    model = ParserModel(Vocab.build(train_tb), cfg, mode)
    dev = list(dev_tb)
    result = train(model, list(train_tb), opt, seed,
                   evaluate=(lambda m: _dev_las(m, dev)) if evaluate_dev else None)
    model.load_state_dict(result.best_state)
    model.eval()
    return model, result.history


def upos_embedding_parameters(model: ParserModel) -> list[str]:
    return [name for name, _ in model.named_parameters() if ".upos." in name]


__all__ = [
    "MODES", "ParseResult", "ParserModel", "TagMode", "apply_parse", "mst_decode", "parse",
    "parse_treebank", "train_parser", "upos_embedding_parameters",
]
