"""UPOS tagger and accuracy-binned checkpoint capture.

The tagger is the shared sentence encoder followed by an MLP and a softmax
over the 17 UPOS labels. :func:`capture_bins` trains taggers normally and
snapshots the model the first time dev accuracy lands inside each target
window, which gives taggers of controlled quality.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .conllu import Sentence, Treebank
from .neural.checkpoint import load_checkpoint, save_checkpoint
from .neural.encoder import SentenceEncoder, make_batch
from .neural.layers import MLP, EncoderConfig, init_embeddings_, softmax_cross_entropy
from .neural.training import OptimizerConfig, seed_everything, train
from .neural.vocab import Vocab

logger = logging.getLogger(__name__)

ARTIFICIAL_BINS = (60, 66, 72, 78, 85, 89)
AUGMENTED_BINS = (41, 44, 48, 51)
DEFAULT_WINDOW = 0.25
DEFAULT_RETRIES = 5


class TaggerModel(nn.Module):
    def __init__(self, vocab: Vocab, cfg: EncoderConfig):
        super().__init__()
        self.vocab = vocab
        self.cfg = cfg
        self.labels = vocab.upos_labels
        if not self.labels:
            raise ValueError("empty UPOS label set")
        seed_everything(cfg.seed)
        self.encoder = SentenceEncoder(vocab, cfg, use_upos=False)
        self.mlp = MLP(cfg.state_dim, cfg.tag_mlp_dim, cfg.dropout)
        self.out = nn.Linear(cfg.tag_mlp_dim, len(self.labels))
        init_embeddings_(self)

    def batch(self, sentences, word_dropout=0.0, rng=None):
        return make_batch(sentences, self.vocab, with_root=False, word_dropout=word_dropout, rng=rng)

    def forward(self, batch) -> torch.Tensor:
        return self.out(self.mlp(self.encoder(batch)))

    def loss(self, batch) -> torch.Tensor:
        return softmax_cross_entropy(self(batch), batch.tags)

    @torch.no_grad()
    def predict(self, sentences: Sequence[Sentence], batch_size: int = 64) -> list[list[str]]:
        was_training = self.training
        self.eval()
        out = []
        for start in range(0, len(sentences), batch_size):
            chunk = sentences[start:start + batch_size]
            best = self(self.batch(chunk)).argmax(-1)
            for i, sent in enumerate(chunk):
                out.append([self.labels[k] for k in best[i, :len(sent)].tolist()])
        self.train(was_training)
        return out

    def save(self, path, extra: dict | None = None) -> None:
        save_checkpoint(path, "tagger", self.cfg.to_dict(), self.vocab.to_dict(), self.state_dict(), extra)

    @classmethod
    def load(cls, path) -> "TaggerModel":
        meta, state = load_checkpoint(path)
        if meta["kind"] != "tagger":
            raise ValueError(f"{path} holds a {meta['kind']} checkpoint, not a tagger")
        model = cls(Vocab.from_dict(meta["vocab"]), EncoderConfig.from_dict(meta["config"]))
        model.load_state_dict(state)
        model.eval()
        model.meta = meta
        return model


def tagging_accuracy(pred: Sequence[str], gold: Sequence[str]) -> float:
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} predicted vs {len(gold)} gold tags")
    if not gold:
        raise ValueError("no tags to score")
    return 100.0 * sum(p == g for p, g in zip(pred, gold)) / len(gold)


def treebank_tag_counts(model: TaggerModel, tb: Sequence[Sentence]) -> tuple[int, int]:
    pred = model.predict(list(tb))
    correct = sum(p == t.upos for tags, s in zip(pred, tb) for p, t in zip(tags, s.tokens))
    return correct, sum(len(s) for s in tb)


def treebank_accuracy(model: TaggerModel, tb: Sequence[Sentence]) -> float:
    """Token-weighted UPOS accuracy of ``model`` on ``tb``."""
    correct, total = treebank_tag_counts(model, tb)
    return 100.0 * correct / total


def tag(model: TaggerModel, sentence: Sentence) -> list[str]:
    return model.predict([sentence])[0]


def tag_treebank(model: TaggerModel, tb: Treebank) -> Treebank:
    """Copy of ``tb`` with the UPOS column replaced by predictions."""
    pred = model.predict(tb.sentences)
    return Treebank([s.with_column("upos", tags) for s, tags in zip(tb.sentences, pred)], tb.name)


def _check_data(train_tb, dev_tb) -> None:
    if not len(train_tb) or not len(dev_tb):
        raise ValueError("tagger training needs non-empty train and dev treebanks")


def train_tagger(train_tb: Treebank, dev_tb: Treebank, cfg: EncoderConfig = EncoderConfig(),
                 opt: OptimizerConfig = OptimizerConfig(), seed: int | None = None,
                 vocab: Vocab | None = None) -> tuple[TaggerModel, list]:
    """Train with early stopping on dev accuracy; returns the best-dev model and the dev trajectory."""
    _check_data(train_tb, dev_tb)
    seed = cfg.seed if seed is None else seed
    cfg = replace(cfg, seed=seed)
    vocab = vocab or Vocab.build(train_tb)
    model = TaggerModel(vocab, cfg)
    if not any(t.upos in model.labels for s in train_tb for t in s.tokens):
        raise ValueError("training data carries no UPOS labels")
    dev = list(dev_tb)
    result = train(model, list(train_tb), opt, seed, evaluate=lambda m: treebank_accuracy(m, dev))
    model.load_state_dict(result.best_state)
    model.eval()
    return model, result.history


def jackknife_tag(train_tb: Treebank, cfg: EncoderConfig, opt: OptimizerConfig, folds: int = 5,
                  seed: int = 0) -> Treebank:
    """Tag each fold of ``train_tb`` with a tagger trained on the other folds.

    The held-in folds are split 80|20 internally for early stopping.
    """
    from .treebank_ops import SplitSpec, combine_and_split

    n = len(train_tb)
    folds = min(folds, n)
    assignment = np.arange(n) % folds
    tagged: list[Sentence | None] = [None] * n
    for k in range(folds):
        held_out = [i for i in range(n) if assignment[i] == k]
        rest = Treebank([train_tb[i] for i in range(n) if assignment[i] != k])
        tr, dv = combine_and_split(rest, None, SplitSpec(seed=seed + k))
        model, _ = train_tagger(tr, dv, cfg, opt, seed=seed + k)
        for i, tags in zip(held_out, model.predict([train_tb[i] for i in held_out])):
            tagged[i] = train_tb[i].with_column("upos", tags)
    return Treebank(tagged, train_tb.name)


@dataclass
class AccuracyBin:
    target: float
    window: float = DEFAULT_WINDOW
    checkpoint: dict | None = None
    achieved: float | None = None
    attempt: int | None = None
    seed: int | None = None
    epoch: int | None = None
    step: int | None = None
    diagnostic: str = ""

    @property
    def captured(self) -> bool:
        return self.checkpoint is not None

    def accepts(self, accuracy: float) -> bool:
        return abs(accuracy - self.target) <= self.window

    def manifest_entry(self) -> dict:
        return {
            "target": self.target, "window": self.window, "achieved": self.achieved,
            "status": "captured" if self.captured else "absent", "attempt": self.attempt,
            "seed": self.seed, "epoch": self.epoch, "step": self.step,
            "checkpoint": bin_filename(self.target) if self.captured else None,
            "diagnostic": self.diagnostic,
        }


@dataclass
class BinSchedule:
    targets: tuple[float, ...]
    window: float = DEFAULT_WINDOW

    def __post_init__(self):
        self.targets = tuple(self.targets)
        if not self.targets:
            raise ValueError("bin schedule is empty")
        if any(b <= a for a, b in zip(self.targets, self.targets[1:])):
            raise ValueError(f"bin targets must be strictly increasing: {self.targets}")
        if self.window < 0:
            raise ValueError("window must be non-negative")


@dataclass
class CaptureResult:
    bins: list[AccuracyBin]
    model_template: TaggerModel
    attempts: list[dict] = field(default_factory=list)

    def model_for(self, bin_: AccuracyBin) -> TaggerModel:
        model = copy.deepcopy(self.model_template)
        model.load_state_dict(bin_.checkpoint)
        model.eval()
        return model

    def manifest(self) -> dict:
        return {
            "window": self.bins[0].window if self.bins else DEFAULT_WINDOW,
            "bins": [b.manifest_entry() for b in self.bins],
            "attempts": self.attempts,
            "retries": max(0, len(self.attempts) - 1),
            "tagging_mode": "direct",
        }

    def save(self, out_dir) -> Path:
        """Write ``bin<target>.ckpt`` per captured bin plus ``manifest.json``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for b in self.bins:
            if b.captured:
                self.model_for(b).save(out_dir / bin_filename(b.target), extra={"bin": b.manifest_entry()})
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n")
        return path


def bin_filename(target: float) -> str:
    return f"bin{target:g}.ckpt"


class _BinPolicy:
    """Decides when to measure dev accuracy during capture.

    Every 10 batches (and at epoch end) during epochs 1-5; afterwards every
    batch while the last reading is within 2 points of an open bin, else at
    epoch end. With ``every_batch`` set, always every batch.
    """

    def __init__(self, bins: list[AccuracyBin], every_batch: bool, near: float = 2.0):
        self.bins = bins
        self.every_batch = every_batch
        self.near = near
        self.counter = 0

    def __call__(self, epoch: int, index: int, per_epoch: int, last: float | None) -> bool:
        self.counter += 1
        if self.every_batch:
            return True
        if index == per_epoch - 1:
            return True
        if epoch <= 5:
            return self.counter % 10 == 0
        if last is None:
            return True
        return any(not b.captured and abs(last - b.target) <= self.near for b in self.bins)


def capture_bins(train_tb: Treebank, dev_tb: Treebank, cfg: EncoderConfig, schedule: BinSchedule,
                 opt: OptimizerConfig = OptimizerConfig(), retries: int = DEFAULT_RETRIES,
                 seed: int | None = None) -> CaptureResult:
    """Train taggers and keep the first checkpoint inside each accuracy window.

    Attempt 0 trains normally. Bins it never enters are retried with fresh
    seeds, evaluation after every batch and a learning rate halved per
    retry, up to ``retries`` times. Bins still open afterwards stay absent
    and carry a diagnostic.
    """
    _check_data(train_tb, dev_tb)
    base_seed = cfg.seed if seed is None else seed
    vocab = Vocab.build(train_tb)
    bins = [AccuracyBin(float(t), schedule.window) for t in schedule.targets]
    dev = list(dev_tb)
    train_sents = list(train_tb)
    attempts = []
    template = None
    peak = None
    for attempt in range(retries + 1):
        open_bins = [b for b in bins if not b.captured]
        if not open_bins:
            break
        run_seed = base_seed + attempt
        run_cfg = replace(cfg, seed=run_seed)
        run_opt = replace(opt, lr=opt.lr * 0.5 ** attempt)
        model = TaggerModel(vocab, run_cfg)
        if template is None:
            template = copy.deepcopy(model)

        def on_eval(point, live, attempt=attempt, run_seed=run_seed):
            for b in bins:
                if not b.captured and b.accepts(point.score):
                    b.checkpoint = copy.deepcopy(live.state_dict())
                    b.achieved = point.score
                    b.attempt, b.seed, b.epoch, b.step = attempt, run_seed, point.epoch, point.step
            return all(b.captured for b in bins)

        policy = _BinPolicy(bins, every_batch=attempt > 0)
        result = train(model, train_sents, run_opt, run_seed,
                       evaluate=lambda m: treebank_accuracy(m, dev), callbacks=[on_eval], eval_policy=policy)
        scores = [p.score for p in result.history]
        run_peak = max(scores) if scores else None
        if run_peak is not None:
            peak = run_peak if peak is None else max(peak, run_peak)
        attempts.append({
            "attempt": attempt, "seed": run_seed, "lr": run_opt.lr, "evaluations": len(scores),
            "epochs": result.epochs, "peak_dev_accuracy": run_peak,
            "open_bins": [b.target for b in open_bins],
        })
        logger.info("bin capture attempt %d: peak %.2f, open %s", attempt, run_peak or 0.0,
                    [b.target for b in bins if not b.captured])
    for b in bins:
        if not b.captured:
            b.diagnostic = (f"dev accuracy never within ±{b.window} of {b.target:g} after "
                            f"{len(attempts)} attempt(s); peak dev accuracy {peak if peak is not None else float('nan'):.2f}")
    return CaptureResult(bins, template, attempts)


def load_bin_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


__all__ = [
    "ARTIFICIAL_BINS", "AUGMENTED_BINS", "AccuracyBin", "BinSchedule", "CaptureResult", "TaggerModel",
    "capture_bins", "jackknife_tag", "tag", "tag_treebank", "tagging_accuracy", "train_tagger",
    "treebank_accuracy",
]
