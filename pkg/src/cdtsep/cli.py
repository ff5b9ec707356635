"""Command-line pipeline: mix, train, separate, evaluate, spectrogram, experiment.

Every randomized stage takes an explicit --seed (default 0; wall-clock
entropy is never used), so any subcommand rerun with the same flags
produces identical outputs.  A plain-text config file (``key = value`` per
line, same keys as the long flags) can be passed with --config; explicit
flags override file values, which override the --desk preset.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .audio_io import AudioBuffer, decimate, denormalize, normalize_unit, read_wav, write_wav
from .errors import CdtsepError
from .framing import build_training_set, extract_frames
from .metrics import bss_eval, spectrogram, write_metrics_csv, write_spectrogram_csv, write_spectrogram_pgm, _csv_db
from .mlp import TrainConfig, init_mlp, load_mlp, save_mlp, train_sgd
from .report import plot_metrics_vs_n, plot_spectrogram_panels
from .resynth import ResynthesisConfig, separate_signal, separate_signal_sweep
from .scene import HrirPair, equalize_rms, load_hrir_pair, monaural_scene, spatialize_and_mix, synth_hrir

log = logging.getLogger("cdtsep")

# Paper-scale defaults and the quick desk-scale preset selected by --desk.
_DEFAULTS = {
    "window": 1000, "hop": 10, "hidden": 2500, "epochs": 300,
    "train_seconds": 120.0, "test_seconds": 10.0, "n_list": "1,10,100",
}
_DESK = {
    "window": 128, "hop": 16, "hidden": 256, "epochs": 50,
    "train_seconds": 60.0, "test_seconds": 5.0, "n_list": "4,16,64",
}


def _parse_hrir_spec(spec: str, rate: int) -> HrirPair:
    """Accept ``synth:+45`` (synthetic, azimuth degrees) or
    ``file:left.wav,right.wav``."""
    kind, _, rest = spec.partition(":")
    if kind == "synth":
        return synth_hrir(float(rest), rate)
    if kind == "file":
        paths = rest.split(",")
        if len(paths) != 2:
            raise ValueError(f"HRIR spec {spec!r} needs two comma-separated paths")
        return load_hrir_pair(paths[0], paths[1], rate)
    raise ValueError(f"unknown HRIR spec {spec!r}; use synth:<deg> or file:<l>,<r>")


def _read_mono(path) -> AudioBuffer:
    buf = read_wav(path)
    if buf.num_channels != 1:
        raise ValueError(f"{path}: expected a mono file, got {buf.num_channels} channels")
    return buf


def _slice_buffer(buf: AudioBuffer, start: int, stop: int) -> AudioBuffer:
    return AudioBuffer(buf.samples[:, start:stop].copy(), buf.sample_rate)


def _parse_n_list(text: str) -> list[int]:
    values = [int(tok) for tok in text.split(",") if tok.strip()]
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"--n-list must be strictly increasing, got {text!r}")
    return values


def _resolve_preset(args, keys) -> None:
    """Fill sentinel (None) values from the desk preset or the defaults."""
    table = _DESK if getattr(args, "desk", False) else _DEFAULTS
    for key in keys:
        if getattr(args, key) is None:
            setattr(args, key, table[key])


# ---------------------------------------------------------------------------
# subcommands

def cmd_mix(args) -> None:
    voice_a = decimate(_read_mono(args.voice_a), args.rate)
    voice_b = decimate(_read_mono(args.voice_b), args.rate)
    if args.seconds is not None:
        n = int(args.seconds * args.rate)
        voice_a = _slice_buffer(voice_a, 0, n)
        voice_b = _slice_buffer(voice_b, 0, n)
    voice_a, voice_b = equalize_rms(voice_a, voice_b)

    if args.mode == "monaural":
        result = monaural_scene(voice_a, voice_b)
    else:
        hrir_a = _parse_hrir_spec(args.hrir_a, args.rate)
        hrir_b = _parse_hrir_spec(args.hrir_b, args.rate)
        result = spatialize_and_mix(voice_a, voice_b, hrir_a, hrir_b)

    write_wav(result.mixture, args.out_mixture)
    write_wav(result.reference_a, args.out_ref_a)
    write_wav(result.reference_b, args.out_ref_b)
    log.info("mix: wrote %s mixture (%d ch, %d samples) and reference stems",
             result.mode, result.mixture.num_channels, result.mixture.num_samples)


def _training_frames(mixture: AudioBuffer, ref_a: AudioBuffer, ref_b: AudioBuffer,
                     window: int, hop: int):
    norm_mix, _ = normalize_unit(mixture)
    norm_a, _ = normalize_unit(ref_a)
    norm_b, _ = normalize_unit(ref_b)
    if norm_mix.num_channels == 1:
        mix_frames = extract_frames(norm_mix.mono(), window, hop)
    else:
        mix_frames = (extract_frames(norm_mix.samples[0], window, hop),
                      extract_frames(norm_mix.samples[1], window, hop))
    frames_a = extract_frames(norm_a.mono(), window, hop)
    frames_b = extract_frames(norm_b.mono(), window, hop)
    return build_training_set(mix_frames, frames_a, frames_b)


def cmd_train(args) -> None:
    _resolve_preset(args, ["window", "hop", "hidden", "epochs"])
    mixture = read_wav(args.mixture)
    ref_a = _read_mono(args.ref_a)
    ref_b = _read_mono(args.ref_b)

    data = _training_frames(mixture, ref_a, ref_b, args.window, args.hop)
    log.info("train: %d training frames (window %d, hop %d, input dim %d)",
             data.num_examples, args.window, args.hop, data.inputs.shape[1])

    layer_sizes = [data.inputs.shape[1], args.hidden, 2 * args.window]
    net = init_mlp(layer_sizes, args.seed)
    config = TrainConfig(epochs=args.epochs, learning_rate=args.lr,
                         seed=args.seed, shuffle=not args.no_shuffle)
    net, history = train_sgd(net, data, config)

    save_mlp(net, args.model)
    loss_csv = args.loss_csv or str(args.model) + ".loss.csv"
    with open(loss_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_loss"])
        for epoch, loss in enumerate(history):
            writer.writerow([epoch, f"{loss:.10e}"])
    log.info("train: final mean loss %.6e; model -> %s", history[-1], args.model)


def cmd_separate(args) -> None:
    net = load_mlp(args.model)
    mixture = read_wav(args.mixture)
    window = net.output_dim // 2
    if net.input_dim != window * mixture.num_channels:
        raise ValueError(
            f"model expects input dim {net.input_dim} but mixture has "
            f"{mixture.num_channels} channel(s) for window {window}")

    norm_mix, params = normalize_unit(mixture)
    config = ResynthesisConfig(n_passes=args.n, perturb_fraction=args.perturb,
                               seed=args.seed)
    est_a, est_b = separate_signal(net, norm_mix, window, config)
    gain = float(params.scale.mean())
    write_wav(AudioBuffer(est_a.samples * gain, est_a.sample_rate), args.out_a)
    write_wav(AudioBuffer(est_b.samples * gain, est_b.sample_rate), args.out_b)
    log.info("separate: N=%d over %d frames -> %s, %s",
             args.n, norm_mix.num_samples - window + 1, args.out_a, args.out_b)


def cmd_evaluate(args) -> None:
    est_a, est_b = _read_mono(args.est_a), _read_mono(args.est_b)
    ref_a, ref_b = _read_mono(args.ref_a), _read_mono(args.ref_b)
    result = bss_eval([est_a.mono(), est_b.mono()], [ref_a.mono(), ref_b.mono()],
                      filter_len=args.filter_len, n_passes=args.n)
    write_metrics_csv(result, args.out)
    for i, name in enumerate("ab"):
        log.info("evaluate: source %s SDR %.2f dB, SIR %.2f dB, SAR %.2f dB",
                 name, result.sdr_db[i], result.sir_db[i], result.sar_db[i])


def cmd_spectrogram(args) -> None:
    signal = _read_mono(args.input)
    spec = spectrogram(signal.mono(), args.fft, args.hop)
    out = Path(args.out)
    if out.suffix.lower() == ".pgm":
        write_spectrogram_pgm(spec, out, floor_db=args.floor, ceil_db=args.ceil)
    else:
        write_spectrogram_csv(spec, out)
    log.info("spectrogram: %d frames x %d bins -> %s", spec.shape[0], spec.shape[1], out)


def cmd_experiment(args) -> None:
    _resolve_preset(args, ["window", "hop", "hidden", "epochs",
                           "train_seconds", "test_seconds", "n_list"])
    n_list = _parse_n_list(args.n_list)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    # scene ----------------------------------------------------------------
    voice_a = decimate(_read_mono(args.voice_a), args.rate)
    voice_b = decimate(_read_mono(args.voice_b), args.rate)
    n_train = int(args.train_seconds * args.rate)
    n_test = int(args.test_seconds * args.rate)
    total = n_train + n_test
    if min(voice_a.num_samples, voice_b.num_samples) < total:
        raise ValueError(
            f"voices too short: need {total} samples at {args.rate} Hz for "
            f"{args.train_seconds}+{args.test_seconds} s")
    voice_a = _slice_buffer(voice_a, 0, total)
    voice_b = _slice_buffer(voice_b, 0, total)
    voice_a, voice_b = equalize_rms(voice_a, voice_b)

    if args.mode == "monaural":
        sc = monaural_scene(voice_a, voice_b)
    else:
        sc = spatialize_and_mix(voice_a, voice_b,
                                _parse_hrir_spec(args.hrir_a, args.rate),
                                _parse_hrir_spec(args.hrir_b, args.rate))

    train_mix = _slice_buffer(sc.mixture, 0, n_train)
    train_a = _slice_buffer(sc.reference_a, 0, n_train)
    train_b = _slice_buffer(sc.reference_b, 0, n_train)
    test_mix = _slice_buffer(sc.mixture, n_train, total)
    test_a = _slice_buffer(sc.reference_a, n_train, total)
    test_b = _slice_buffer(sc.reference_b, n_train, total)
    write_wav(test_mix, outdir / "mixture.wav")
    write_wav(test_a, outdir / "ref_a.wav")
    write_wav(test_b, outdir / "ref_b.wav")

    # train ------------------------------------------------------------------
    data = _training_frames(train_mix, train_a, train_b, args.window, args.hop)
    log.info("experiment: %d training frames (window %d, hop %d)",
             data.num_examples, args.window, args.hop)
    net = init_mlp([data.inputs.shape[1], args.hidden, 2 * args.window], args.seed)
    config = TrainConfig(epochs=args.epochs, learning_rate=args.lr, seed=args.seed)
    net, history = train_sgd(net, data, config)
    save_mlp(net, outdir / "model.cdt")
    with open(outdir / "loss.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_loss"])
        for epoch, loss in enumerate(history):
            writer.writerow([epoch, f"{loss:.10e}"])

    # separate + evaluate per N ----------------------------------------------
    norm_test, params = normalize_unit(test_mix)
    resynth_config = ResynthesisConfig(n_passes=n_list[-1],
                                       perturb_fraction=args.perturb,
                                       seed=args.seed)
    sweep = separate_signal_sweep(net, norm_test, args.window, resynth_config, n_list)
    gain = float(params.scale.mean())

    rows = []
    for n in n_list:
        est_a, est_b = sweep[n]
        est_a = AudioBuffer(est_a.samples * gain, est_a.sample_rate)
        est_b = AudioBuffer(est_b.samples * gain, est_b.sample_rate)
        write_wav(est_a, outdir / f"est_a_n{n}.wav")
        write_wav(est_b, outdir / f"est_b_n{n}.wav")
        result = bss_eval([est_a.mono(), est_b.mono()],
                          [test_a.mono(), test_b.mono()],
                          filter_len=args.filter_len, n_passes=n)
        for i, name in enumerate("ab"):
            rows.append({
                "n": n, "source": name,
                "sdr_db": f"{_csv_db(result.sdr_db[i]):.6f}",
                "sir_db": f"{_csv_db(result.sir_db[i]):.6f}",
                "sar_db": f"{_csv_db(result.sar_db[i]):.6f}",
            })
        log.info("experiment: N=%-4d SDR a/b %.2f/%.2f dB, SIR %.2f/%.2f dB",
                 n, result.sdr_db[0], result.sdr_db[1],
                 result.sir_db[0], result.sir_db[1])

    with open(outdir / "experiment_metrics.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["n", "source", "sdr_db",
                                                "sir_db", "sar_db"])
        writer.writeheader()
        writer.writerows(rows)

    # report figures -----------------------------------------------------------
    plot_metrics_vs_n(rows, outdir / "metrics_vs_n.png")
    best_a, best_b = sweep[n_list[-1]]
    panels = [("reference a", test_a), ("reference b", test_b)]
    if test_mix.num_channels == 1:
        panels.append(("mixture", test_mix))
    else:
        panels.append(("mixture (left)", AudioBuffer.from_mono(
            test_mix.samples[0], test_mix.sample_rate)))
        panels.append(("mixture (right)", AudioBuffer.from_mono(
            test_mix.samples[1], test_mix.sample_rate)))
    panels += [(f"estimate a (N={n_list[-1]})", best_a),
               (f"estimate b (N={n_list[-1]})", best_b)]
    fft_size = 256 if args.rate >= 2000 else 128
    plot_spectrogram_panels(panels, outdir / "spectrograms.png", fft_size=fft_size)
    log.info("experiment: outputs in %s", outdir)


# ---------------------------------------------------------------------------
# parser and dispatch

def _add_common_scene_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rate", type=int, default=4000,
                   help="target sample rate in Hz (default 4000)")
    p.add_argument("--mode", choices=["monaural", "binaural"], default="monaural")
    p.add_argument("--hrir-a", default="synth:+45",
                   help="HRIR for voice a: synth:<deg> or file:<left>,<right>")
    p.add_argument("--hrir-b", default="synth:-45")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, default=None,
                   help=f"window length in samples (default {_DEFAULTS['window']})")
    p.add_argument("--hop", type=int, default=None,
                   help=f"training hop in samples (default {_DEFAULTS['hop']})")
    p.add_argument("--hidden", type=int, default=None,
                   help=f"hidden layer size (default {_DEFAULTS['hidden']})")
    p.add_argument("--epochs", type=int, default=None,
                   help=f"training sweeps (default {_DEFAULTS['epochs']})")
    p.add_argument("--lr", type=float, default=0.05, help="learning rate")
    p.add_argument("--desk", action="store_true",
                   help="desk-scale preset: window 128, hidden 256, epochs 50, "
                        "hop 16, 60 s train / 5 s test, n-list 4,16,64")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdtsep",
        description="Two-talker time-domain separation: synthesize mixtures, "
                    "train the windowed autoencoder, separate by probabilistic "
                    "re-synthesis, and score with SDR/SIR/SAR.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mix", help="build a mixture and reference stems")
    p.add_argument("--voice-a", required=True)
    p.add_argument("--voice-b", required=True)
    _add_common_scene_flags(p)
    p.add_argument("--seconds", type=float, default=None,
                   help="truncate voices to this many seconds")
    p.add_argument("--out-mixture", required=True)
    p.add_argument("--out-ref-a", required=True)
    p.add_argument("--out-ref-b", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("train", help="train the autoencoder on a mixture")
    p.add_argument("--mixture", required=True)
    p.add_argument("--ref-a", required=True)
    p.add_argument("--ref-b", required=True)
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-shuffle", action="store_true")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--loss-csv", default=None,
                   help="per-epoch loss CSV (default <model>.loss.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("separate", help="separate a mixture with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--mixture", required=True)
    p.add_argument("--n", type=int, default=100, help="re-synthesis passes")
    p.add_argument("--perturb", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-a", required=True)
    p.add_argument("--out-b", required=True)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("evaluate", help="score estimates against references")
    p.add_argument("--est-a", required=True)
    p.add_argument("--est-b", required=True)
    p.add_argument("--ref-a", required=True)
    p.add_argument("--ref-b", required=True)
    p.add_argument("--filter-len", type=int, default=512)
    p.add_argument("--n", type=int, default=0,
                   help="pass count recorded in the CSV")
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("spectrogram", help="write a spectrogram as CSV or PGM")
    p.add_argument("--input", required=True)
    p.add_argument("--fft", type=int, default=256)
    p.add_argument("--hop", type=int, default=64)
    p.add_argument("--floor", type=float, default=-80.0)
    p.add_argument("--ceil", type=float, default=0.0)
    p.add_argument("--out", required=True, help=".pgm for an image, else CSV")
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("experiment",
                       help="full pipeline with an N sweep and report figures")
    p.add_argument("--voice-a", required=True)
    p.add_argument("--voice-b", required=True)
    _add_common_scene_flags(p)
    _add_train_flags(p)
    p.add_argument("--train-seconds", type=float, default=None)
    p.add_argument("--test-seconds", type=float, default=None)
    p.add_argument("--n-list", default=None,
                   help=f"comma-separated pass counts (default {_DEFAULTS['n_list']})")
    p.add_argument("--perturb", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--filter-len", type=int, default=512)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_experiment)

    for sp in sub.choices.values():
        sp.add_argument("--config", default=None,
                        help="key = value file supplying flag defaults")
    return parser


def _config_tokens(path) -> list[str]:
    """Turn a key = value config file into CLI tokens."""
    tokens: list[str] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = key.strip().replace("_", "-"), value.strip()
        if value.lower() == "true":
            tokens.append(f"--{key}")
        elif value.lower() == "false":
            continue
        else:
            tokens.extend([f"--{key}", value])
    return tokens


def _apply_config(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise ValueError("--config needs a path")
    tokens = _config_tokens(argv[i + 1])
    rest = argv[:i] + argv[i + 2:]
    # file tokens go right after the subcommand so explicit flags win
    return rest[:1] + tokens + rest[1:]


def run_cli(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        argv = _apply_config(argv)
    except (OSError, ValueError) as exc:
        log.error("config: %s", exc)
        return 1
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (CdtsepError, ValueError, OSError) as exc:
        log.error("%s: %s", args.command, exc)
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
