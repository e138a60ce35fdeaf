"""Command-line entry point: ``lowdep <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from fractions import Fraction
from pathlib import Path

from .conllu import read_conllu, write_conllu


def _overrides(pairs):
    """Split ``KEY=VALUE`` overrides between encoder and optimizer settings."""
    from .neural.layers import EncoderConfig
    from .neural.training import OptimizerConfig

    enc_names = {f.name for f in fields(EncoderConfig)}
    opt_names = {f.name for f in fields(OptimizerConfig)}
    enc, opt = {}, {}
    for pair in pairs or ():
        key, sep, raw = pair.partition("=")
        if not sep:
            raise SystemExit(f"bad override {pair!r}; expected KEY=VALUE")
        value = json.loads(raw) if raw[:1] in "[{0123456789-." or raw in ("true", "false") else raw
        if key in enc_names:
            enc[key] = value
        elif key in opt_names:
            opt[key] = value
        else:
            raise SystemExit(f"unknown override {key!r}")
    return EncoderConfig.from_dict(enc), OptimizerConfig.from_dict(opt)


def cmd_split(args):
    from .treebank_ops import SplitSpec, combine_and_split

    train = read_conllu(args.train)
    dev = read_conllu(args.dev) if args.dev else None
    fraction = Fraction(args.fraction).limit_denominator(10_000)
    out_train, out_dev = combine_and_split(train, dev, SplitSpec(fraction, args.seed))
    write_conllu(out_train, args.out_train)
    write_conllu(out_dev, args.out_dev)
    print(f"train\t{len(out_train)}\ndev\t{len(out_dev)}")


def cmd_sample(args):
    from .treebank_ops import sample_subset

    write_conllu(sample_subset(read_conllu(args.input), args.n, args.seed), args.out)


def cmd_stats(args):
    from .treebank_ops import compute_stats

    stats = compute_stats(read_conllu(args.input))
    print(f"{stats.sentence_count}\t{stats.token_count}")


def cmd_augment(args):
    from .augment import ALLOWED_RELATIONS, AugmentConfig, augment_treebank, read_relations_file

    relations = read_relations_file(args.relations_file) if args.relations_file else ALLOWED_RELATIONS
    cfg = AugmentConfig(relations=relations, any_donor=args.any_donor)
    out = augment_treebank(read_conllu(args.input), args.n, args.seed, cfg)
    write_conllu(out, args.out)
    print(f"generated\t{len(out)}")


def cmd_synth(args):
    from .synthetic import generate_treebank, make_lexicon

    lex = make_lexicon(seed=args.lexicon_seed)
    write_conllu(generate_treebank(args.n, seed=args.seed, lexicon=lex, label_noise=args.label_noise), args.out)


def cmd_tagger_train(args):
    from .tagger import BinSchedule, capture_bins, train_tagger

    cfg, opt = _overrides(args.set)
    train, dev = read_conllu(args.train), read_conllu(args.dev)
    if args.bins:
        schedule = BinSchedule(tuple(float(b) for b in args.bins.split(",")), args.window)
        result = capture_bins(train, dev, cfg, schedule, opt, retries=args.retries, seed=args.seed)
        manifest = result.save(args.out_dir)
        for b in result.bins:
            achieved = "-" if b.achieved is None else f"{b.achieved:.2f}"
            print(f"bin {b.target:g}\t{achieved}\t{'captured' if b.captured else 'absent'}")
        print(f"manifest\t{manifest}")
        return
    model, history = train_tagger(train, dev, cfg, opt, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "tagger.ckpt")
    best = max((p.score for p in history), default=0.0)
    manifest = {"checkpoint": "tagger.ckpt", "tagging_mode": "direct", "seed": args.seed, "dev_accuracy": best}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"dev_accuracy\t{best:.2f}")


def cmd_tagger_tag(args):
    from .tagger import TaggerModel, tag_treebank

    write_conllu(tag_treebank(TaggerModel.load(args.model), read_conllu(args.input)), args.out)


def cmd_parser_train(args):
    from .parser import TagMode, train_parser

    cfg, opt = _overrides(args.set)
    mode = TagMode(args.mode, args.tagger_manifest, args.aux_weight)
    model, history = train_parser(read_conllu(args.train), read_conllu(args.dev), mode, cfg, opt, seed=args.seed)
    model.save(args.out, extra={"seed": args.seed})
    print(f"dev_las\t{max((p.score for p in history), default=0.0):.2f}")


def cmd_parser_parse(args):
    from .parser import ParserModel, parse_treebank

    write_conllu(parse_treebank(ParserModel.load(args.model), read_conllu(args.input)), args.out)


def cmd_eval(args):
    from .evaluation import evaluate

    report = evaluate(read_conllu(args.system, validate=False), read_conllu(args.gold)).rounded()
    if args.json:
        print(json.dumps(report))
    else:
        upos = "-" if report["upos"] is None else f"{report['upos']:.2f}"
        print(f"UAS\t{report['uas']:.2f}\nLAS\t{report['las']:.2f}\nUPOS\t{upos}\ntokens\t{report['tokens']}")


def cmd_exp_run(args):
    from .experiments import load_config, run_experiment

    cfg = load_config(args.config, output_dir=args.output_dir)
    run_experiment(cfg, jobs=args.jobs, resume=args.resume)
    print(f"results\t{cfg.output_dir}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lowdep", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("split", help="pool train+dev and re-split")
    s.add_argument("--train", required=True)
    s.add_argument("--dev")
    s.add_argument("--fraction", type=float, default=0.8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-train", required=True)
    s.add_argument("--out-dev", required=True)
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("sample", help="draw N sentences without replacement")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("stats", help="print sentence and token counts")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("augment", help="generate subtree-swapped trees")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--relations-file")
    s.add_argument("--any-donor", action="store_true", help="let round 2 draw from either other tree")
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("synth", help="write a grammar-generated treebank")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--lexicon-seed", type=int, default=0, help="files sharing it share a vocabulary")
    s.add_argument("--label-noise", type=float, default=0.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    tagger = sub.add_parser("tagger", help="train taggers (optionally binned) and tag files").add_subparsers(dest="tagger_command", required=True)
    s = tagger.add_parser("train", help="train a tagger, optionally capturing accuracy bins")
    s.add_argument("--train", required=True)
    s.add_argument("--dev", required=True)
    s.add_argument("--bins", help="comma-separated dev accuracy targets, e.g. 60,66,72")
    s.add_argument("--window", type=float, default=0.25)
    s.add_argument("--retries", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="encoder/optimizer override")
    s.set_defaults(func=cmd_tagger_train)
    s = tagger.add_parser("tag", help="rewrite the UPOS column")
    s.add_argument("--model", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_tagger_tag)

    parser = sub.add_parser("parser", help="train parsers and parse files").add_subparsers(dest="parser_command", required=True)
    s = parser.add_parser("train", help="train a biaffine parser")
    s.add_argument("--train", required=True)
    s.add_argument("--dev", required=True)
    s.add_argument("--mode", choices=("none", "pred", "gold", "multi"), default="none")
    s.add_argument("--tagger-manifest")
    s.add_argument("--aux-weight", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="encoder/optimizer override")
    s.set_defaults(func=cmd_parser_train)
    s = parser.add_parser("parse", help="write HEAD/DEPREL (and UPOS in multi mode)")
    s.add_argument("--model", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_parser_parse)

    s = sub.add_parser("eval", help="UAS/LAS/UPOS against gold")
    s.add_argument("--system", required=True)
    s.add_argument("--gold", required=True)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_eval)

    exp = sub.add_parser("exp", help="run a configured experiment").add_subparsers(dest="exp_command", required=True)
    s = exp.add_parser("run", help="run an experiment grid from a YAML/JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--resume", action="store_true")
    s.add_argument("--output-dir", help="override output_dir from the config")
    s.set_defaults(func=cmd_exp_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
