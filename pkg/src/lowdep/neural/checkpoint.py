"""Model checkpoint files.

A checkpoint is a numpy ``.npz`` archive. The entry ``__meta__`` holds UTF-8
JSON with ``format`` ("lowdep-checkpoint"), ``version``, ``kind`` ("tagger"
or "parser"), the encoder ``config``, the ``vocab`` tables and free-form
``extra`` metadata. Every other entry is ``param/<name>``, one float array
per named parameter of the model. Nothing is pickled.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np
import torch

FORMAT = "lowdep-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, kind: str, config: dict, vocab: dict, state: dict, extra: dict | None = None) -> None:
    meta = {"format": FORMAT, "version": VERSION, "kind": kind, "config": config,
            "vocab": vocab, "extra": extra or {}}
    arrays = {"__meta__": np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)}
    for name, tensor in state.items():
        arrays[f"param/{name}"] = tensor.detach().cpu().numpy()
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path) -> tuple[dict, dict]:
    """Return ``(meta, state_dict)``."""
    with np.load(path, allow_pickle=False) as archive:
        if "__meta__" not in archive:
            raise CheckpointError(f"{path}: not a checkpoint (no __meta__ entry)")
        meta = json.loads(archive["__meta__"].tobytes().decode("utf-8"))
        if meta.get("format") != FORMAT:
            raise CheckpointError(f"{path}: unknown format {meta.get('format')!r}")
        if meta.get("version", 0) > VERSION:
            raise CheckpointError(f"{path}: checkpoint version {meta['version']} is newer than supported {VERSION}")
        state = {k[len("param/"):]: torch.from_numpy(archive[k].copy()) for k in archive.files if k.startswith("param/")}
    return meta, state
