"""Building blocks shared by the tagger and the parser."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .vocab import PAD_ID


@dataclass(frozen=True)
class EncoderConfig:
    num_layers: int = 3
    hidden_per_direction: int = 200
    word_dim: int = 100
    char_input_dim: int = 100
    char_out_dim: int = 100
    upos_dim: int = 100
    arc_mlp_dim: int = 100
    rel_mlp_dim: int = 50
    tag_mlp_dim: int = 100
    dropout: float = 0.33
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            if f.name not in ("seed", "dropout") and getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")

    @property
    def state_dim(self) -> int:
        return 2 * self.hidden_per_direction

    def input_dim(self, use_upos: bool) -> int:
        return self.word_dim + self.char_out_dim + (self.upos_dim if use_upos else 0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def init_embeddings_(module: nn.Module, scale: float = 0.1) -> None:
    """Draw every embedding table from U(-scale, scale).

    Recurrent and linear layers keep torch's default scaled-uniform init.
    """
    for sub in module.modules():
        if isinstance(sub, nn.Embedding):
            nn.init.uniform_(sub.weight, -scale, scale)
            if sub.padding_idx is not None:
                with torch.no_grad():
                    sub.weight[sub.padding_idx].zero_()


class CharEncoder(nn.Module):
    """Bidirectional LSTM over the characters of each word.

    The last forward state and the first backward state are concatenated and
    projected to ``out_dim``.
    """

    def __init__(self, n_chars: int, input_dim: int, out_dim: int):
        super().__init__()
        self.embed = nn.Embedding(n_chars, input_dim, padding_idx=PAD_ID)
        self.lstm = nn.LSTM(input_dim, out_dim, batch_first=True, bidirectional=True)
        self.proj = nn.Linear(2 * out_dim, out_dim)

    def forward(self, chars: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        # chars: (words, max_chars); lengths >= 1
        x = self.embed(chars)
        packed = pack_padded_sequence(x, lengths.cpu(), batch_first=True, enforce_sorted=False)
        _, (h, _) = self.lstm(packed)
        return self.proj(torch.cat([h[0], h[1]], dim=-1))


class Embedder(nn.Module):
    """Word embedding, character encoding and, optionally, a UPOS embedding per token."""

    def __init__(self, n_words: int, n_chars: int, n_upos: int, cfg: EncoderConfig, use_upos: bool):
        super().__init__()
        self.use_upos = use_upos
        self.word = nn.Embedding(n_words, cfg.word_dim, padding_idx=PAD_ID)
        self.chars = CharEncoder(n_chars, cfg.char_input_dim, cfg.char_out_dim)
        self.upos = nn.Embedding(n_upos, cfg.upos_dim, padding_idx=PAD_ID) if use_upos else None
        self.output_dim = cfg.input_dim(use_upos)

    def forward(self, words, chars, char_lengths, upos=None) -> torch.Tensor:
        # words: (B, T); chars: (B, T, C); char_lengths: (B, T)
        b, t = words.shape
        flat_chars = chars.reshape(b * t, -1)
        flat_len = char_lengths.reshape(-1).clamp(min=1)
        char_vecs = self.chars(flat_chars, flat_len).reshape(b, t, -1)
        parts = [self.word(words), char_vecs]
        if self.use_upos:
            if upos is None:
                raise ValueError("UPOS embeddings requested but no tags were supplied")
            parts.append(self.upos(upos))
        return torch.cat(parts, dim=-1)


class BiLSTMEncoder(nn.Module):
    def __init__(self, input_dim: int, cfg: EncoderConfig):
        super().__init__()
        self.lstm = nn.LSTM(input_dim, cfg.hidden_per_direction, num_layers=cfg.num_layers,
                            batch_first=True, bidirectional=True,
                            dropout=cfg.dropout if cfg.num_layers > 1 else 0.0)

    def forward(self, x: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        packed = pack_padded_sequence(x, lengths.cpu(), batch_first=True, enforce_sorted=False)
        out, _ = self.lstm(packed)
        out, _ = pad_packed_sequence(out, batch_first=True, total_length=x.shape[1])
        return out


class MLP(nn.Module):
    def __init__(self, input_dim: int, output_dim: int, dropout: float = 0.0):
        super().__init__()
        self.linear = nn.Linear(input_dim, output_dim)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x):
        return self.dropout(F.leaky_relu(self.linear(x), 0.1))


def biaffine_score(head: torch.Tensor, dep: torch.Tensor, U: torch.Tensor, W_h: torch.Tensor,
                   W_d: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Score every (dependent, head) pair for each of ``L`` labels.

    ``head``: (..., m, d); ``dep``: (..., n, d); ``U``: (L, d, d);
    ``W_h``, ``W_d``: (L, d); ``b``: (L,). Returns (..., n, m, L) with
    ``S[i, j, l] = dep_i U_l head_j + W_h[l] head_j + W_d[l] dep_i + b[l]``.
    """
    d = head.shape[-1]
    if dep.shape[-1] != d or U.shape[-2:] != (d, d) or W_h.shape[-1] != d or W_d.shape[-1] != d:
        raise ValueError(f"biaffine shape mismatch: head {tuple(head.shape)}, dep {tuple(dep.shape)}, U {tuple(U.shape)}")
    if not (U.shape[0] == W_h.shape[0] == W_d.shape[0] == b.shape[0]):
        raise ValueError("biaffine label dimensions disagree")
    bilinear = torch.einsum("...id,lde,...je->...ijl", dep, U, head)
    head_term = torch.einsum("...jd,ld->...jl", head, W_h).unsqueeze(-3)
    dep_term = torch.einsum("...id,ld->...il", dep, W_d).unsqueeze(-2)
    return bilinear + head_term + dep_term + b


class Biaffine(nn.Module):
    def __init__(self, dim: int, n_labels: int = 1):
        super().__init__()
        self.U = nn.Parameter(torch.zeros(n_labels, dim, dim))
        self.W_h = nn.Parameter(torch.zeros(n_labels, dim))
        self.W_d = nn.Parameter(torch.zeros(n_labels, dim))
        self.b = nn.Parameter(torch.zeros(n_labels))

    def forward(self, head, dep):
        return biaffine_score(head, dep, self.U, self.W_h, self.W_d, self.b)


def softmax_cross_entropy(logits: torch.Tensor, targets: torch.Tensor, ignore_index: int = -100) -> torch.Tensor:
    """Mean negative log-likelihood over targets that are not ``ignore_index``."""
    return F.cross_entropy(logits.reshape(-1, logits.shape[-1]), targets.reshape(-1),
                           ignore_index=ignore_index, reduction="mean")


def flatten_params(module: nn.Module) -> torch.Tensor:
    return torch.nn.utils.parameters_to_vector(module.parameters()).detach().clone()


def unflatten_params(module: nn.Module, vector: torch.Tensor) -> None:
    with torch.no_grad():
        torch.nn.utils.vector_to_parameters(vector, module.parameters())
