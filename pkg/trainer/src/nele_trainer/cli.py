"""Trainer command line: synthesize a desk corpus, or train from a manifest."""

import argparse
import sys

from .data import build_desk_corpus, load_manifest, write_corpus
from .train import TrainConfig, train


def cmd_synth(args):
    triples = build_desk_corpus(
        n_utterances=args.utterances,
        noises=tuple(args.noises.split(",")),
        snr_db=args.snr,
        duration=args.duration,
        seed=args.seed,
    )
    manifest = write_corpus(args.out_dir, triples)
    print("wrote %d items, manifest %s" % (len(triples), manifest))
    return 0


def cmd_train(args):
    triples = load_manifest(args.manifest)
    n_val = max(1, int(round(args.val_fraction * len(triples))))
    train_triples, val_triples = triples[:-n_val], triples[-n_val:]
    config = TrainConfig(
        quality_weight=args.quality_weight,
        lr_g=args.lr_g,
        lr_d=args.lr_d,
        patience=args.patience,
        max_epochs=args.epochs,
        seed=args.seed,
    )
    history = train(config, train_triples, val_triples, args.out,
                    log_path=args.log, verbose=True)
    print("exported %s after %d epochs (best val ESTOI %.4f)"
          % (args.out, len(history), max(h["val_estoi"] for h in history)))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="nele-train")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a desk corpus with a manifest")
    p.add_argument("out_dir")
    p.add_argument("--utterances", type=int, default=20)
    p.add_argument("--noises", default="lowpass,white")
    p.add_argument("--snr", type=float, default=-5.0)
    p.add_argument("--duration", type=float, default=1.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train from a manifest and export NELW weights")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="training log CSV")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--quality-weight", type=float, default=0.5)
    p.add_argument("--lr-g", type=float, default=4e-4)
    p.add_argument("--lr-d", type=float, default=2e-4)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
