"""Central finite differences in float64, used as an oracle for autograd."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from lowdep.neural.layers import MLP, Biaffine, BiLSTMEncoder, CharEncoder, EncoderConfig, softmax_cross_entropy

EPS = 1e-6


def max_relative_error(fn, tensors, eps=EPS) -> float:
    """Worst per-tensor ||analytic - numeric|| / max(||analytic||, ||numeric||)."""
    for t in tensors:
        t.grad = None
    fn().backward()
    worst = 0.0
    for t in tensors:
        analytic = t.grad.detach().clone() if t.grad is not None else torch.zeros_like(t)
        numeric = torch.zeros_like(t)
        flat, num = t.data.view(-1), numeric.view(-1)
        with torch.no_grad():
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + eps
                plus = fn().item()
                flat[i] = orig - eps
                minus = fn().item()
                flat[i] = orig
                num[i] = (plus - minus) / (2 * eps)
        scale = max(analytic.norm().item(), numeric.norm().item())
        if scale > 1e-12:
            worst = max(worst, (analytic - numeric).norm().item() / scale)
    return worst


def _projection(shape, gen):
    return torch.randn(shape, generator=gen, dtype=torch.float64)


def case_embedding(seed: int):
    gen = torch.Generator().manual_seed(seed)
    vocab, dim = int(torch.randint(3, 8, (1,), generator=gen)), int(torch.randint(2, 5, (1,), generator=gen))
    layer = nn.Embedding(vocab, dim).double()
    ids = torch.randint(0, vocab, (2, 4), generator=gen)
    proj = _projection((2, 4, dim), gen)
    return (lambda: (layer(ids) * proj).sum()), list(layer.parameters())


def case_char_encoder(seed: int):
    gen = torch.Generator().manual_seed(seed)
    n_chars = int(torch.randint(4, 8, (1,), generator=gen))
    in_dim, out_dim = int(torch.randint(2, 4, (1,), generator=gen)), int(torch.randint(2, 4, (1,), generator=gen))
    layer = CharEncoder(n_chars, in_dim, out_dim).double()
    lengths = torch.randint(1, 5, (3,), generator=gen)
    chars = torch.zeros((3, int(lengths.max())), dtype=torch.long)
    for w, n in enumerate(lengths):
        chars[w, :n] = torch.randint(1, n_chars, (int(n),), generator=gen)
    proj = _projection((3, out_dim), gen)
    return (lambda: (layer(chars, lengths) * proj).sum()), list(layer.parameters())


def case_recurrent(seed: int):
    gen = torch.Generator().manual_seed(seed)
    layers = int(torch.randint(1, 4, (1,), generator=gen))
    hidden, in_dim = int(torch.randint(2, 4, (1,), generator=gen)), int(torch.randint(2, 4, (1,), generator=gen))
    cfg = EncoderConfig(num_layers=layers, hidden_per_direction=hidden, dropout=0.0)
    layer = BiLSTMEncoder(in_dim, cfg).double()
    lengths = torch.tensor([4, int(torch.randint(1, 5, (1,), generator=gen))])
    x = torch.randn((2, 4, in_dim), generator=gen, dtype=torch.float64, requires_grad=True)
    proj = _projection((2, 4, 2 * hidden), gen)
    return (lambda: (layer(x, lengths) * proj).sum()), list(layer.parameters()) + [x]


def case_mlp(seed: int):
    gen = torch.Generator().manual_seed(seed)
    in_dim, out_dim = int(torch.randint(2, 6, (1,), generator=gen)), int(torch.randint(2, 6, (1,), generator=gen))
    layer = MLP(in_dim, out_dim).double()
    x = torch.randn((3, in_dim), generator=gen, dtype=torch.float64, requires_grad=True)
    proj = _projection((3, out_dim), gen)
    return (lambda: (layer(x) * proj).sum()), list(layer.parameters()) + [x]


def case_biaffine(seed: int):
    gen = torch.Generator().manual_seed(seed)
    dim, labels, n = (int(torch.randint(2, 4, (1,), generator=gen)), int(torch.randint(1, 4, (1,), generator=gen)),
                      int(torch.randint(1, 4, (1,), generator=gen)))
    layer = Biaffine(dim, labels).double()
    with torch.no_grad():
        for p in layer.parameters():
            p.copy_(torch.randn(p.shape, generator=gen, dtype=torch.float64))
    head = torch.randn((n + 1, dim), generator=gen, dtype=torch.float64, requires_grad=True)
    dep = torch.randn((n, dim), generator=gen, dtype=torch.float64, requires_grad=True)
    proj = _projection((n, n + 1, labels), gen)
    return (lambda: (layer(head, dep) * proj).sum()), list(layer.parameters()) + [head, dep]


def case_cross_entropy(seed: int):
    gen = torch.Generator().manual_seed(seed)
    rows, classes = int(torch.randint(2, 6, (1,), generator=gen)), int(torch.randint(2, 6, (1,), generator=gen))
    logits = torch.randn((rows, classes), generator=gen, dtype=torch.float64, requires_grad=True)
    targets = torch.randint(0, classes, (rows,), generator=gen)
    targets[0] = -100  # ignored position must not contribute
    return (lambda: softmax_cross_entropy(logits, targets)), [logits]


CASES = {
    "embedding": case_embedding,
    "char_encoder": case_char_encoder,
    "recurrent": case_recurrent,
    "mlp": case_mlp,
    "biaffine": case_biaffine,
    "softmax_cross_entropy": case_cross_entropy,
}


def check_layer(name: str, configs: int = 20) -> float:
    worst = 0.0
    for seed in range(configs):
        fn, tensors = CASES[name](int(np.uint32(seed * 7919 + 17)))
        worst = max(worst, max_relative_error(fn, tensors))
    return worst
