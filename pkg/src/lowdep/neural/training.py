"""Seeded mini-batch training with periodic evaluation and callbacks."""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
import torch

from ..conllu import Sentence
from ..treebank_ops import make_rng

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 2e-3
    betas: tuple[float, float] = (0.9, 0.999)
    batch_size: int = 16
    max_epochs: int = 300
    patience: int = 30  # evaluations without improvement
    word_dropout: float = 0.25

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        d = dict(d)
        if "betas" in d:
            d["betas"] = tuple(d["betas"])
        return cls(**d)


@dataclass(frozen=True)
class EvalPoint:
    epoch: int
    step: int
    score: float


@dataclass
class TrainResult:
    best_state: dict
    best_score: float | None
    history: list[EvalPoint] = field(default_factory=list)
    epochs: int = 0
    stopped_by_callback: bool = False


class Trainable(Protocol):
    def batch(self, sentences: Sequence[Sentence], word_dropout: float = 0.0,
              rng: np.random.Generator | None = None): ...

    def loss(self, batch) -> torch.Tensor: ...


# called as policy(epoch, batch_index, batches_per_epoch, last_score) -> evaluate now?
EvalPolicy = Callable[[int, int, int, "float | None"], bool]
Callback = Callable[[EvalPoint, torch.nn.Module], "bool | None"]


def end_of_epoch(epoch: int, index: int, per_epoch: int, last: float | None) -> bool:
    return index == per_epoch - 1


def seed_everything(seed: int) -> None:
    torch.manual_seed(seed)
    torch.set_num_threads(1)


def train(model, sentences: Sequence[Sentence], opt: OptimizerConfig, seed: int,
          evaluate: Callable[[torch.nn.Module], float] | None = None,
          callbacks: Sequence[Callback] = (), eval_policy: EvalPolicy = end_of_epoch) -> TrainResult:
    """Minimise ``model.loss`` with Adam.

    ``evaluate`` returns a score to maximise (dev accuracy or LAS). After
    each evaluation every callback sees the point and the live model; a
    callback returning True ends training. Without ``evaluate`` the final
    parameters are returned.
    """
    if not sentences:
        raise TrainingError("no training data")
    seed_everything(seed)
    rng = make_rng(seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=opt.lr, betas=opt.betas)
    n_batches = math.ceil(len(sentences) / opt.batch_size)
    result = TrainResult(copy.deepcopy(model.state_dict()), None)
    since_best = 0
    step = 0
    last: float | None = None
    for epoch in range(1, opt.max_epochs + 1):
        order = rng.permutation(len(sentences))
        result.epochs = epoch
        for index in range(n_batches):
            chunk = [sentences[i] for i in order[index * opt.batch_size:(index + 1) * opt.batch_size]]
            model.train()
            loss = model.loss(model.batch(chunk, opt.word_dropout, rng))
            if not torch.isfinite(loss):
                raise TrainingError(f"non-finite loss {loss.item()} at epoch {epoch}, step {step}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            step += 1
            if evaluate is None or not eval_policy(epoch, index, n_batches, last):
                continue
            model.eval()
            with torch.no_grad():
                last = float(evaluate(model))
            point = EvalPoint(epoch, step, last)
            result.history.append(point)
            if result.best_score is None or last > result.best_score:
                result.best_score = last
                result.best_state = copy.deepcopy(model.state_dict())
                since_best = 0
            else:
                since_best += 1
            stop = False
            for cb in callbacks:
                stop = bool(cb(point, model)) or stop
            if stop:
                result.stopped_by_callback = True
                model.eval()
                return result
            if since_best >= opt.patience:
                logger.debug("early stop at epoch %d (best %.2f)", epoch, result.best_score)
                model.eval()
                return result
    if evaluate is None:
        result.best_state = copy.deepcopy(model.state_dict())
    model.eval()
    return result
