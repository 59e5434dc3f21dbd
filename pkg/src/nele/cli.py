"""Command-line surface binding the pipeline end to end.

Subcommands: enhance, mix, evaluate, analyze, baseline, psd, fb-dump.
All engine errors are printed to stderr as ``error: <Name>: <detail>`` with
exit code 1 so harnesses can match on the class name; I/O problems map to
``IoError``. Every command is deterministic given its arguments and seed.
"""

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics
from .dsp import mix_observed, read_wav, write_wav
from .engine import Enhancer
from .erb import build_filterbank
from .errors import BadGamma, MissingPair, NeleError
from .noise import estimate_noise_psd
from .ssdrc import SsdrcConfig, ssdrc
from .weights import load_matrix, save_matrix


@dataclass
class EngineConfig:
    """Validated CLI options for the enhance command."""

    weights_path: str | None
    mode: str
    gamma: float | None
    noise_ref: str | None
    noise_psd: str | None
    error_rate: float
    seed: int | None
    identity_gains: bool
    out: str
    dump_gains: str | None

    def __post_init__(self):
        if not (0.0 <= self.error_rate <= 100.0):
            raise NeleError("error rate must be in [0, 100]")
        if self.weights_path is None and not self.identity_gains:
            raise NeleError("enhance needs --weights or the --identity-gains bypass")
        if self.weights_path is not None and not Path(self.weights_path).exists():
            raise FileNotFoundError(self.weights_path)


def parse_mode(text):
    """--mode values: 'ul', 'fl', or 'soft:<gamma>'."""
    if text == "ul":
        return "utterance", None
    if text == "fl":
        return "frame", None
    if text.startswith("soft:"):
        try:
            gamma = float(text.split(":", 1)[1])
        except ValueError:
            raise BadGamma("cannot parse soft scale in %r" % text)
        return "soft", gamma
    raise BadGamma("unknown mode %r (expected ul, fl or soft:<gamma>)" % text)


def cmd_enhance(args):
    mode, gamma = parse_mode(args.mode)
    config = EngineConfig(
        weights_path=args.weights,
        mode=mode,
        gamma=gamma,
        noise_ref=args.noise_ref,
        noise_psd=args.noise_psd,
        error_rate=args.error_rate,
        seed=args.seed,
        identity_gains=args.identity_gains,
        out=args.out,
        dump_gains=args.dump_gains,
    )
    enhancer = Enhancer(
        weights=config.weights_path,
        mode=config.mode,
        gamma=config.gamma,
        error_rate=config.error_rate,
        seed=config.seed,
        identity_gains=config.identity_gains,
    ).fit()
    speech = read_wav(args.speech)
    noise = read_wav(config.noise_ref) if config.noise_ref else None
    noise_psd = load_matrix(config.noise_psd) if config.noise_psd else None
    enhanced, gains = enhancer.enhance(speech, noise=noise, noise_psd=noise_psd, return_gains=True)
    write_wav(config.out, enhanced)
    if config.dump_gains:
        save_matrix(gains, config.dump_gains)
    return 0


def cmd_mix(args):
    speech = read_wav(args.speech)
    noise = read_wav(args.noise)
    rir = read_wav(args.rir) if args.rir else np.array([1.0])
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    write_wav(args.out, mix_observed(speech, rir, noise, args.snr, rng=rng))
    return 0


def _paired_wavs(clean_dir, processed_dir):
    clean_dir, processed_dir = Path(clean_dir), Path(processed_dir)
    ids = sorted(p.stem for p in clean_dir.glob("*.wav"))
    if not ids:
        raise MissingPair("no utterances found in %s" % clean_dir)
    pairs = []
    for utt in ids:
        processed = processed_dir / ("%s.wav" % utt)
        if not processed.exists():
            raise MissingPair("no processed file for utterance %r" % utt)
        pairs.append((utt, clean_dir / ("%s.wav" % utt), processed))
    return pairs


def _read_conditions(path):
    conditions = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0] == "utterance_id":
                continue
            conditions[row[0]] = row[1] if len(row) > 1 else "all"
    return conditions


def cmd_evaluate(args):
    pairs = _paired_wavs(args.clean_dir, args.processed_dir)
    conditions = _read_conditions(args.conditions) if args.conditions else {}
    rows = []
    for utt, clean_path, processed_path in pairs:
        clean, processed = read_wav(clean_path), read_wav(processed_path)
        clean, processed = metrics.align_signals(clean, processed)
        score = metrics.score_estoi(clean, processed)
        rows.append((utt, conditions.get(utt, "all"), score))
    if args.per_utterance:
        metrics.write_scores_csv(
            args.per_utterance,
            [(utt, s.metric_id, "%.9f" % s.raw, "%.9f" % s.normalized) for utt, _, s in rows],
        )
    by_condition = {}
    for utt, condition, score in rows:
        by_condition.setdefault(condition, []).append(score)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "metric_id", "mean_raw", "mean_normalized", "count"])
        for condition in sorted(by_condition):
            scores = by_condition[condition]
            writer.writerow(
                [
                    condition,
                    "ESTOI",
                    "%.9f" % np.mean([s.raw for s in scores]),
                    "%.9f" % np.mean([s.normalized for s in scores]),
                    len(scores),
                ]
            )
    return 0


def cmd_analyze(args):
    signal_path, reference_path = Path(args.signal), Path(args.reference)
    if signal_path.is_dir() != reference_path.is_dir():
        raise MissingPair("signal and reference must both be files or both directories")
    if signal_path.is_dir():
        pairs = _paired_wavs(reference_path, signal_path)
        signals = [(read_wav(proc), read_wav(clean)) for _, clean, proc in pairs]
    else:
        signals = [(read_wav(signal_path), read_wav(reference_path))]
    gain_curves = np.stack([metrics.ltas_gain(sig, ref) for sig, ref in signals])
    mean_gain = np.mean(gain_curves, axis=0)
    if args.ltas_out:
        freqs = np.arange(mean_gain.size) * 8000.0 / (mean_gain.size - 1)
        with open(args.ltas_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["freq_hz", "gain_db"])
            for f, g in zip(freqs, mean_gain):
                writer.writerow(["%.3f" % f, "%.6f" % g])
    stats = metrics.rms_ratio_stats(signals)
    print("rms_ratio_mean=%.6f rms_ratio_std=%.6f n=%d" % (stats["mean"], stats["std"], len(signals)))
    if args.rms_out:
        counts, edges = stats["histogram"]
        with open(args.rms_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_low", "bin_high", "count"])
            for lo, hi, c in zip(edges[:-1], edges[1:], counts):
                writer.writerow(["%.2f" % lo, "%.2f" % hi, int(c)])
            writer.writerow(["mean", "%.6f" % stats["mean"], ""])
            writer.writerow(["std", "%.6f" % stats["std"], ""])
    return 0


def cmd_baseline(args):
    cfg = SsdrcConfig.from_file(args.config) if args.config else SsdrcConfig()
    write_wav(args.out, ssdrc(read_wav(args.speech), cfg))
    return 0


def cmd_psd(args):
    save_matrix(estimate_noise_psd(read_wav(args.reference)), args.out)
    return 0


def cmd_fb_dump(args):
    build_filterbank().dump_csv(args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="nele", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="enhance one utterance")
    p.add_argument("speech")
    p.add_argument("--out", required=True)
    p.add_argument("--weights")
    p.add_argument("--mode", default="ul", help="ul, fl, or soft:<gamma>")
    p.add_argument("--noise-ref", help="reference-microphone WAV for noise tracking")
    p.add_argument("--noise-psd", help="precomputed PSD matrix dump")
    p.add_argument("--error-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--identity-gains", action="store_true",
                   help="debug bypass: unit gains, no weights needed")
    p.add_argument("--dump-gains", help="write the normalized gain matrix dump here")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("mix", help="build the observed noisy(-reverberant) signal")
    p.add_argument("speech")
    p.add_argument("noise")
    p.add_argument("--rir", help="room impulse response WAV (default: identity)")
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--seed", type=int, help="random noise offset when noise is longer")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("evaluate", help="score processed utterances against clean ones")
    p.add_argument("clean_dir")
    p.add_argument("processed_dir")
    p.add_argument("--conditions", help="CSV utterance_id,condition")
    p.add_argument("--out", required=True, help="per-condition mean score CSV")
    p.add_argument("--per-utterance", help="also write per-utterance scores here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="LTAS gain and RMS-ratio statistics")
    p.add_argument("signal", help="processed WAV or directory")
    p.add_argument("reference", help="unmodified WAV or directory")
    p.add_argument("--ltas-out", help="LTAS gain CSV")
    p.add_argument("--rms-out", help="RMS ratio histogram CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("baseline", help="run the ssdrc-lite reference modification")
    p.add_argument("speech")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("psd", help="estimate and dump a noise PSD matrix")
    p.add_argument("reference")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("fb-dump", help="dump the ERB filterbank as CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fb_dump)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NeleError as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print("error: IoError: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
