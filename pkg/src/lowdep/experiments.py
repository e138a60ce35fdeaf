"""Config-driven experiment grids.

Three experiments are supported:

``real_low_resource``
    per treebank: pool train+dev, split 80|20, train one tagger, train
    parsers without tags, with predicted tags, with gold tags and with
    tagging as an auxiliary task; score everything on the test file.
``artificial_low_resource``
    per treebank, size and repetition: sample, split, capture taggers at
    accuracy bins, then train parsers on every (parser size, tagger size,
    bin) combination plus a no-tag baseline per parser size.
``augmented``
    like the artificial grid, but the size axis is the number of
    subtree-swapped trees stacked on top of the gold split.

Work is cut into cells (one tagger capture or one parser run). Each cell
gets a seed derived from its coordinates, writes its result to
``cells/<id>.json`` and can therefore run in any order, in parallel, or be
skipped on ``--resume``. Test files are opened only by the evaluation step
at the end of a parser cell.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import platform
import statistics
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
import torch
import yaml

from . import __version__
from .augment import AugmentConfig, PoolTooSmallWarning, build_pool, sample_pool
from .conllu import Treebank, read_conllu, validate_tree, write_conllu
from .evaluation import evaluate, percent_2dp, round_half_up
from .neural.layers import EncoderConfig
from .neural.training import OptimizerConfig
from .parser import ParserModel, TagMode, parse_treebank, train_parser
from .tagger import (
    ARTIFICIAL_BINS, AUGMENTED_BINS, BinSchedule, TaggerModel, capture_bins,
    jackknife_tag, tag_treebank, train_tagger, treebank_tag_counts,
)
from .treebank_ops import SplitSpec, combine_and_split, sample_subset

logger = logging.getLogger(__name__)

EXPERIMENTS = ("real_low_resource", "artificial_low_resource", "augmented")
TABLE_HEADER = ["treebank", "upos_single", "upos_multi", "las_none", "las_pred", "las_gold", "las_multi"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TreebankPaths:
    name: str
    train: Path
    test: Path
    dev: Path | None = None


@dataclass
class ExperimentConfig:
    experiment: str
    treebanks: list[TreebankPaths]
    output_dir: Path
    seed: int = 1
    repetitions: int = 3
    sizes: list[int] = field(default_factory=list)
    bins: tuple[float, ...] = ()
    window: float = 0.25
    retries: int = 5
    modes: list[str] = field(default_factory=lambda: ["none", "pred", "gold", "multi"])
    aux_weight: float = 1.0
    jackknife: bool = False
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    augment_any_donor: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.treebanks:
            raise ConfigError("no treebanks configured")
        if self.experiment == "artificial_low_resource" and not self.sizes:
            raise ConfigError("artificial_low_resource needs a non-empty 'sizes' list")
        if not self.bins:
            self.bins = AUGMENTED_BINS if self.experiment == "augmented" else ARTIFICIAL_BINS
        if self.experiment == "augmented" and not self.sizes:
            self.sizes = [0, 10, 25, 50]
        for mode in self.modes:
            TagMode(mode)

    @property
    def schedule(self) -> BinSchedule:
        return BinSchedule(tuple(float(b) for b in self.bins), self.window)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment, "seed": self.seed, "repetitions": self.repetitions,
            "sizes": list(self.sizes), "bins": list(self.bins), "window": self.window,
            "retries": self.retries, "modes": list(self.modes), "aux_weight": self.aux_weight,
            "jackknife": self.jackknife, "encoder": self.encoder.to_dict(),
            "optimizer": {**self.optimizer.__dict__, "betas": list(self.optimizer.betas)},
            "augment_any_donor": self.augment_any_donor,
            "treebanks": [{"name": t.name, "train": str(t.train), "dev": str(t.dev) if t.dev else None,
                           "test": str(t.test)} for t in self.treebanks],
        }


def load_config(path, output_dir=None) -> ExperimentConfig:
    """Read a YAML (or JSON) experiment config; relative paths resolve against its folder."""
    path = Path(path)
    raw = yaml.safe_load(path.read_text()) or {}
    base = path.parent

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else (base / p)

    try:
        treebanks = [TreebankPaths(t["name"], resolve(t["train"]), resolve(t["test"]), resolve(t.get("dev")))
                     for t in raw.get("treebanks", [])]
    except KeyError as exc:
        raise ConfigError(f"treebank entry missing key {exc}") from None
    known = {"experiment", "treebanks", "output_dir", "seed", "repetitions", "sizes", "bins", "window",
             "retries", "modes", "aux_weight", "jackknife", "encoder", "optimizer", "augment_any_donor"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: v for k, v in raw.items() if k in known - {"treebanks", "output_dir", "encoder", "optimizer"}}
    if "bins" in kwargs:
        kwargs["bins"] = tuple(kwargs["bins"])
    return ExperimentConfig(
        treebanks=treebanks,
        output_dir=Path(output_dir) if output_dir else resolve(raw.get("output_dir", "results")),
        encoder=EncoderConfig.from_dict(raw.get("encoder", {})),
        optimizer=OptimizerConfig.from_dict(raw.get("optimizer", {})),
        **kwargs,
    )


def cell_seed(base: int, *parts) -> int:
    """Stable 60-bit seed from the base seed and a cell's coordinates."""
    digest = hashlib.sha256(repr((base,) + tuple(str(p) for p in parts)).encode()).hexdigest()
    return int(digest[:15], 16)


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[dict]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row.get(h)) for h in header])
    path.write_text(buf.getvalue())


# ---------------------------------------------------------------- cell workers


def _encoder(spec: dict, seed: int) -> EncoderConfig:
    return replace(EncoderConfig.from_dict(spec["encoder"]), seed=seed)


def _optimizer(spec: dict) -> OptimizerConfig:
    return OptimizerConfig.from_dict(spec["optimizer"])


def _tagger_cell(spec: dict) -> dict:
    """Train one tagger (best dev) and write tagged copies of train/dev."""
    train_tb, dev_tb = read_conllu(spec["train"]), read_conllu(spec["dev"])
    cfg, opt = _encoder(spec, spec["seed"]), _optimizer(spec)
    model, history = train_tagger(train_tb, dev_tb, cfg, opt, seed=spec["seed"])
    out = Path(spec["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "tagger.ckpt"
    model.save(ckpt)
    tagged_train = (jackknife_tag(train_tb, cfg, opt, seed=spec["seed"]) if spec.get("jackknife")
                    else tag_treebank(model, train_tb))
    write_conllu(tagged_train, out / "train.tagged.conllu")
    write_conllu(tag_treebank(model, dev_tb), out / "dev.tagged.conllu")
    manifest = {"checkpoint": ckpt.name, "tagging_mode": "jackknife" if spec.get("jackknife") else "direct",
                "seed": spec["seed"], "dev_accuracy": max((p.score for p in history), default=None)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return {"status": "ok", "checkpoint": str(ckpt), "manifest": str(out / "manifest.json")}


def _capture_cell(spec: dict) -> dict:
    train_tb, dev_tb = read_conllu(spec["train"]), read_conllu(spec["dev"])
    schedule = BinSchedule(tuple(spec["bins"]), spec["window"])
    result = capture_bins(train_tb, dev_tb, _encoder(spec, spec["seed"]), schedule, _optimizer(spec),
                          retries=spec["retries"], seed=spec["seed"])
    manifest_path = result.save(spec["out_dir"])
    return {"status": "ok", "manifest": str(manifest_path), "bins": [b.manifest_entry() for b in result.bins]}


def _train_parser_stage(spec: dict, train_path: str, dev_path: str) -> Path:
    """Training half of a parser cell; it never sees the test path."""
    mode = TagMode(spec["mode"], spec.get("tagger_manifest"), spec.get("aux_weight", 1.0))
    train_tb, dev_tb = read_conllu(train_path), read_conllu(dev_path)
    model, _ = train_parser(train_tb, dev_tb, mode, _encoder(spec, spec["seed"]), _optimizer(spec), seed=spec["seed"])
    out = Path(spec["model_path"])
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out, extra={"seed": spec["seed"]})
    return out


def _evaluate_stage(model_path: Path, test_path: str, tagger_path: str | None) -> dict:
    gold = read_conllu(test_path)
    system_input = gold
    tag_counts = None
    if tagger_path:
        tagger = TaggerModel.load(tagger_path)
        tag_counts = treebank_tag_counts(tagger, gold)
        system_input = tag_treebank(tagger, gold)
    parser = ParserModel.load(model_path)
    system = parse_treebank(parser, system_input)
    report = evaluate(system, gold)
    result = {"tokens": report.token_count, "head_correct": report.head_correct,
              "labeled_correct": report.labeled_correct, "las": percent_2dp(report.labeled_correct, report.token_count),
              "uas": percent_2dp(report.head_correct, report.token_count)}
    if parser.mode.multitask:
        result["upos_multi"] = percent_2dp(report.upos_correct or 0, report.token_count)
    if tag_counts is not None:
        result["upos_tagger"] = percent_2dp(*tag_counts)
    return result


def _parser_cell(spec: dict) -> dict:
    model_path = _train_parser_stage(spec, spec["train"], spec["dev"])
    result = _evaluate_stage(model_path, spec["test"], spec.get("tagger_checkpoint"))
    result["status"] = "ok"
    return result


WORKERS: dict[str, Callable[[dict], dict]] = {
    "tagger": _tagger_cell, "capture": _capture_cell, "parser": _parser_cell,
}


def _run_one(cell: tuple[str, str, dict]) -> tuple[str, dict, float]:
    cell_id, kind, spec = cell
    start = time.perf_counter()
    try:
        result = WORKERS[kind](spec)
    except Exception as exc:  # a failed cell is recorded, the grid goes on
        logger.exception("cell %s failed", cell_id)
        result = {"status": f"error: {type(exc).__name__}: {exc}"}
    return cell_id, result, time.perf_counter() - start


class CellRunner:
    """Runs cells serially or in a process pool, caching results as JSON."""

    def __init__(self, out_dir: Path, jobs: int = 1, resume: bool = False):
        self.cells_dir = out_dir / "cells"
        self.cells_dir.mkdir(parents=True, exist_ok=True)
        self.jobs = jobs
        self.resume = resume
        self.wall_times: dict[str, float] = {}
        self.seeds: dict[str, int] = {}

    def _path(self, cell_id: str) -> Path:
        return self.cells_dir / f"{cell_id}.json"

    def run(self, cells: list[tuple[str, str, dict]]) -> dict[str, dict]:
        results: dict[str, dict] = {}
        todo = []
        for cell_id, kind, spec in cells:
            self.seeds[cell_id] = spec["seed"]
            path = self._path(cell_id)
            if self.resume and path.is_file():
                results[cell_id] = json.loads(path.read_text())
            else:
                todo.append((cell_id, kind, spec))
        if self.jobs > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                finished = list(pool.map(_run_one, todo))
        else:
            finished = [_run_one(c) for c in todo]
        for cell_id, result, seconds in finished:
            self._path(cell_id).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
            self.wall_times[cell_id] = round(seconds, 3)
            results[cell_id] = result
        return {cid: results[cid] for cid, _, _ in cells}


# ---------------------------------------------------------------- experiments


def _check_inputs(cfg: ExperimentConfig) -> None:
    missing = []
    for tb in cfg.treebanks:
        for p in (tb.train, tb.dev, tb.test):
            if p is not None and not Path(p).is_file():
                missing.append(str(p))
    if missing:
        raise FileNotFoundError(f"missing treebank files: {', '.join(missing)}")


def _base_spec(cfg: ExperimentConfig) -> dict:
    return {"encoder": cfg.encoder.to_dict(),
            "optimizer": {**cfg.optimizer.__dict__, "betas": list(cfg.optimizer.betas)}}


def _write_split(out: Path, train_tb: Treebank, dev_tb: Treebank) -> tuple[str, str]:
    out.mkdir(parents=True, exist_ok=True)
    write_conllu(train_tb, out / "train.conllu")
    write_conllu(dev_tb, out / "dev.conllu")
    return str(out / "train.conllu"), str(out / "dev.conllu")


def run_real_low_resource(cfg: ExperimentConfig, runner: CellRunner) -> tuple[list[dict], list[dict]]:
    base = _base_spec(cfg)
    data = cfg.output_dir / "data"
    splits = {}
    tagger_cells = []
    for tb in cfg.treebanks:
        spec = SplitSpec(seed=cell_seed(cfg.seed, tb.name, "split"))
        train_tb, dev_tb = combine_and_split(read_conllu(tb.train), read_conllu(tb.dev) if tb.dev else None, spec)
        splits[tb.name] = _write_split(data / tb.name, train_tb, dev_tb)
        if "pred" in cfg.modes:
            tagger_cells.append((f"{tb.name}__tagger", "tagger", {
                **base, "seed": cell_seed(cfg.seed, tb.name, 0, 0, "", "tagger"),
                "train": splits[tb.name][0], "dev": splits[tb.name][1], "jackknife": cfg.jackknife,
                "out_dir": str(cfg.output_dir / "taggers" / tb.name)}))
    tagger_results = runner.run(tagger_cells)

    parser_cells = []
    for tb in cfg.treebanks:
        train_path, dev_path = splits[tb.name]
        for mode in cfg.modes:
            spec = {**base, "seed": cell_seed(cfg.seed, tb.name, 0, 0, "", mode), "mode": mode,
                    "aux_weight": cfg.aux_weight, "train": train_path, "dev": dev_path, "test": str(tb.test),
                    "model_path": str(cfg.output_dir / "parsers" / tb.name / f"{mode}.ckpt")}
            if mode == "pred":
                tagged = tagger_results[f"{tb.name}__tagger"]
                if tagged.get("status") != "ok":
                    continue
                tag_dir = Path(tagged["manifest"]).parent
                spec.update(train=str(tag_dir / "train.tagged.conllu"), dev=str(tag_dir / "dev.tagged.conllu"),
                            tagger_manifest=tagged["manifest"], tagger_checkpoint=tagged["checkpoint"])
            parser_cells.append((f"{tb.name}__parser__{mode}", "parser", spec))
    parser_results = runner.run(parser_cells)

    records, table = [], []
    for tb in cfg.treebanks:
        row = {"treebank": tb.name}
        for mode in cfg.modes:
            res = parser_results.get(f"{tb.name}__parser__{mode}", {"status": "skipped: tagger failed"})
            ok = res.get("status") == "ok"
            records.append({"treebank": tb.name, "mode": mode, "las": res.get("las"), "uas": res.get("uas"),
                            "upos": res.get("upos_tagger", res.get("upos_multi")), "tokens": res.get("tokens"),
                            "seed": runner.seeds.get(f"{tb.name}__parser__{mode}"), "status": res.get("status")})
            if ok:
                row[f"las_{mode}"] = res["las"]
                if mode == "pred":
                    row["upos_single"] = res.get("upos_tagger")
                if mode == "multi":
                    row["upos_multi"] = res.get("upos_multi")
        table.append(row)
    table.append(average_row(table))
    return records, table


def average_row(table: list[dict]) -> dict:
    """Unweighted mean over treebanks of every score column, rounded half-up to 2 places."""
    avg = {"treebank": "avg"}
    for col in TABLE_HEADER[1:]:
        vals = [r[col] for r in table if r.get(col) is not None]
        if vals:
            avg[col] = round_half_up(statistics.fmean(vals))
    return avg


def _grid_data(cfg: ExperimentConfig, tb: TreebankPaths) -> dict[tuple[int, int], tuple[str, str]]:
    """Write the train/dev files for every (size, repetition) of one treebank."""
    out: dict[tuple[int, int], tuple[str, str]] = {}
    data = cfg.output_dir / "data" / tb.name
    if cfg.experiment == "artificial_low_resource":
        pooled = Treebank(read_conllu(tb.train).sentences + (read_conllu(tb.dev).sentences if tb.dev else []), tb.name)
        for size in cfg.sizes:
            base = cell_seed(cfg.seed, tb.name, size, "sample")
            for rep in range(cfg.repetitions):
                sample = sample_subset(pooled, size, (base + rep) % 2**63)
                train_tb, dev_tb = combine_and_split(sample, None, SplitSpec(seed=cell_seed(cfg.seed, tb.name, size, rep, "split")))
                out[size, rep] = _write_split(data / f"n{size}_rep{rep}", train_tb, dev_tb)
        return out

    gold_train, gold_dev = combine_and_split(read_conllu(tb.train), read_conllu(tb.dev) if tb.dev else None,
                                             SplitSpec(seed=cell_seed(cfg.seed, tb.name, "split")))
    pool = None
    if any(cfg.sizes):
        pool = build_pool(gold_train, AugmentConfig(any_donor=cfg.augment_any_donor),
                          cell_seed(cfg.seed, tb.name, "pool"))
    for size in cfg.sizes:
        for rep in range(cfg.repetitions):
            extra_train, extra_dev = [], []
            if size:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", PoolTooSmallWarning)
                    generated = sample_pool(pool, size, cell_seed(cfg.seed, tb.name, size, rep, "augment"))
                for w in caught:
                    logger.warning("%s aug%d rep%d: %s", tb.name, size, rep, w.message)
                bad = [i for i, s in enumerate(generated) if not validate_tree(s).ok]
                if bad:
                    raise ValueError(f"augmented trees {bad} failed validation")
                if len(generated) >= 2:
                    aug_train, aug_dev = combine_and_split(generated, None, SplitSpec(seed=cell_seed(cfg.seed, tb.name, size, rep, "augsplit")))
                    extra_train, extra_dev = aug_train.sentences, aug_dev.sentences
                else:
                    extra_train = generated.sentences
            out[size, rep] = _write_split(data / f"aug{size}_rep{rep}",
                                          Treebank(gold_train.sentences + extra_train),
                                          Treebank(gold_dev.sentences + extra_dev))
    return out


def run_grid(cfg: ExperimentConfig, runner: CellRunner) -> tuple[list[dict], list[dict]]:
    """Artificial and augmented experiments: bins x sizes x repetitions."""
    base = _base_spec(cfg)
    size_col = "parser_n" if cfg.experiment == "artificial_low_resource" else "parser_aug"
    tagger_col = "tagger_n" if cfg.experiment == "artificial_low_resource" else "tagger_aug"
    data = {tb.name: _grid_data(cfg, tb) for tb in cfg.treebanks}

    capture_cells = []
    for tb in cfg.treebanks:
        for (size, rep), (train_path, dev_path) in data[tb.name].items():
            capture_cells.append((f"{tb.name}__capture__{size}__{rep}", "capture", {
                **base, "seed": cell_seed(cfg.seed, tb.name, size, rep, "", "tagger"),
                "train": train_path, "dev": dev_path, "bins": list(cfg.schedule.targets),
                "window": cfg.window, "retries": cfg.retries,
                "out_dir": str(cfg.output_dir / "taggers" / tb.name / f"{size}_rep{rep}")}))
    captures = runner.run(capture_cells)

    parser_cells, rows = [], []
    for tb in cfg.treebanks:
        for (size, rep), (train_path, dev_path) in data[tb.name].items():
            baseline_id = f"{tb.name}__baseline__{size}__{rep}"
            parser_cells.append((baseline_id, "parser", {
                **base, "seed": cell_seed(cfg.seed, tb.name, size, rep, "", "none"), "mode": "none",
                "train": train_path, "dev": dev_path, "test": str(tb.test),
                "model_path": str(cfg.output_dir / "parsers" / tb.name / f"{size}_rep{rep}" / "none.ckpt")}))
            rows.append({"key": (tb.name, size, rep, None, None), "cell": baseline_id})
            for tagger_size in cfg.sizes:
                cap = captures[f"{tb.name}__capture__{tagger_size}__{rep}"]
                bins = cap.get("bins") or [{"target": float(t), "status": "absent", "achieved": None}
                                           for t in cfg.schedule.targets]
                for entry in bins:
                    key = (tb.name, size, rep, tagger_size, entry["target"])
                    if entry.get("status") != "captured":
                        rows.append({"key": key, "cell": None, "achieved": None,
                                     "status": "bin not captured" if cap.get("status") == "ok" else cap.get("status")})
                        continue
                    tag_dir = Path(cap["manifest"]).parent
                    ckpt = str(tag_dir / entry["checkpoint"])
                    cell_id = f"{tb.name}__pred__{size}__{rep}__{tagger_size}__{entry['target']:g}"
                    tagged_dir = cfg.output_dir / "data" / tb.name / "tagged" / f"{size}_rep{rep}_by_{tagger_size}_bin{entry['target']:g}"
                    parser_cells.append((cell_id, "pred_grid", {
                        **base, "seed": cell_seed(cfg.seed, tb.name, size, rep, entry["target"], f"pred{tagger_size}"),
                        "mode": "pred", "train": train_path, "dev": dev_path, "test": str(tb.test),
                        "tagger_checkpoint": ckpt, "tagger_manifest": cap["manifest"], "tagged_dir": str(tagged_dir),
                        "model_path": str(cfg.output_dir / "parsers" / tb.name / f"{size}_rep{rep}" / f"pred_{tagger_size}_bin{entry['target']:g}.ckpt")}))
                    rows.append({"key": key, "cell": cell_id, "achieved": entry["achieved"]})
    results = runner.run(parser_cells)

    records = []
    for row in rows:
        name, size, rep, tagger_size, target = row["key"]
        base_res = results[f"{name}__baseline__{size}__{rep}"]
        res = results[row["cell"]] if row["cell"] else {"status": row["status"]}
        records.append({
            "treebank": name, size_col: size, tagger_col: "" if tagger_size is None else tagger_size,
            "bin_target": "" if target is None else target, "bin_achieved": row.get("achieved"),
            "rep": rep, "las": res.get("las"), "baseline_las": base_res.get("las"), "status": res.get("status"),
        })
    records.sort(key=lambda r: (r["treebank"], r[size_col], r["rep"], r[tagger_col] == "", str(r[tagger_col]).zfill(8),
                                float(r["bin_target"]) if r["bin_target"] != "" else -1.0))
    return records, summarize(records, size_col, tagger_col)


def _pred_grid_cell(spec: dict) -> dict:
    """Parser on data tagged by one captured bin tagger."""
    tagger = TaggerModel.load(spec["tagger_checkpoint"])
    out = Path(spec["tagged_dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_conllu(tag_treebank(tagger, read_conllu(spec["train"])), out / "train.conllu")
    write_conllu(tag_treebank(tagger, read_conllu(spec["dev"])), out / "dev.conllu")
    model_path = _train_parser_stage(spec, str(out / "train.conllu"), str(out / "dev.conllu"))
    result = _evaluate_stage(model_path, spec["test"], spec["tagger_checkpoint"])
    result["status"] = "ok"
    return result


WORKERS["pred_grid"] = _pred_grid_cell


def _se(values: list[float]) -> float | None:
    if len(values) < 2:
        return None
    return statistics.stdev(values) / len(values) ** 0.5


def summarize(records: list[dict], size_col: str, tagger_col: str) -> list[dict]:
    """Mean and standard error of LAS per (treebank, parser size, tagger size, bin)."""
    groups: dict[tuple, list[dict]] = {}
    for r in records:
        groups.setdefault((r["treebank"], r[size_col], r[tagger_col], r["bin_target"]), []).append(r)
    out = []
    for (name, size, tagger_size, target), rs in groups.items():
        las = [r["las"] for r in rs if r["las"] is not None]
        base = [r["baseline_las"] for r in rs if r["baseline_las"] is not None]
        ach = [r["bin_achieved"] for r in rs if r["bin_achieved"] is not None]
        out.append({
            "treebank": name, size_col: size, tagger_col: tagger_size, "bin_target": target, "runs": len(las),
            "las_mean": round_half_up(statistics.fmean(las)) if las else None,
            "las_se": round_half_up(_se(las)) if _se(las) is not None else None,
            "bin_achieved_mean": round_half_up(statistics.fmean(ach)) if ach else None,
            "baseline_las_mean": round_half_up(statistics.fmean(base)) if base else None,
            "baseline_las_se": round_half_up(_se(base)) if _se(base) is not None else None,
        })
    return out


def record_header(cfg: ExperimentConfig) -> list[str]:
    if cfg.experiment == "real_low_resource":
        return ["treebank", "mode", "las", "uas", "upos", "tokens", "seed", "status"]
    size_col, tagger_col = (("parser_n", "tagger_n") if cfg.experiment == "artificial_low_resource"
                            else ("parser_aug", "tagger_aug"))
    return ["treebank", size_col, tagger_col, "bin_target", "bin_achieved", "rep", "las", "baseline_las", "status"]


def summary_header(cfg: ExperimentConfig) -> list[str]:
    if cfg.experiment == "real_low_resource":
        return TABLE_HEADER
    size_col, tagger_col = (("parser_n", "tagger_n") if cfg.experiment == "artificial_low_resource"
                            else ("parser_aug", "tagger_aug"))
    return ["treebank", size_col, tagger_col, "bin_target", "runs", "las_mean", "las_se",
            "bin_achieved_mean", "baseline_las_mean", "baseline_las_se"]


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, resume: bool = False) -> dict:
    """Run a configured experiment; returns the manifest that is also written to disk."""
    _check_inputs(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    runner = CellRunner(cfg.output_dir, jobs=jobs, resume=resume)
    if cfg.experiment == "real_low_resource":
        records, summary = run_real_low_resource(cfg, runner)
    else:
        records, summary = run_grid(cfg, runner)
    records_path = cfg.output_dir / "records.csv"
    summary_path = cfg.output_dir / "summary.csv"
    _write_csv(records_path, record_header(cfg), records)
    _write_csv(summary_path, summary_header(cfg), summary)
    manifest = {
        "config": cfg.to_dict(),
        "versions": {"lowdep": __version__, "python": platform.python_version(), "torch": torch.__version__,
                     "numpy": np.__version__},
        "inputs": {str(p): sha256_file(p) for tb in cfg.treebanks for p in (tb.train, tb.dev, tb.test) if p},
        "outputs": {"records.csv": sha256_file(records_path), "summary.csv": sha256_file(summary_path)},
        "cell_seeds": dict(sorted(runner.seeds.items())),
        "wall_seconds": dict(sorted(runner.wall_times.items())),
        "argv": sys.argv,
    }
    (cfg.output_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
