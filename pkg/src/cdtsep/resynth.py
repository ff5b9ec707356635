"""Probabilistic re-synthesis: separate a mixture with a trained network.

Each hop-1 test frame is pushed through the network N times, each time with
a random half of its samples replaced by noise matched to the mixture's
statistics; the N outputs are averaged.  Per-frame randomness comes from a
stream derived from (seed, frame_index, pass_index), so results are
bit-identical however frames or passes are scheduled, and a run at a
smaller N is an exact prefix of a run at a larger N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .framing import FrameSet, extract_frames, overlap_add_average, remove_dc
from .mlp import Mlp, forward


@dataclass
class ResynthesisConfig:
    """Knobs of the re-synthesis loop.

    ``perturb_mean``/``perturb_std`` may be left unset (None); the
    separation entry point then fills them with the mixture's own sample
    mean and standard deviation.
    """

    n_passes: int
    perturb_fraction: float = 0.5
    perturb_mean: float | None = None
    perturb_std: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_passes < 1:
            raise ValueError("n_passes must be >= 1")
        if not 0.0 <= self.perturb_fraction <= 1.0:
            raise ValueError("perturb_fraction must be in [0, 1]")
        if self.perturb_std is not None and self.perturb_std < 0:
            raise ValueError("perturb_std must be >= 0")


@dataclass
class SeparatedFrames:
    """Per-source frame estimates produced by the re-synthesis stage."""

    voice_a: FrameSet
    voice_b: FrameSet


def _require_stats(config: ResynthesisConfig) -> tuple[float, float]:
    if config.perturb_mean is None or config.perturb_std is None:
        raise ValueError("perturb_mean and perturb_std must be set "
                         "(separate_signal fills them from the mixture)")
    return config.perturb_mean, config.perturb_std


def perturb_frame(frame: np.ndarray, config: ResynthesisConfig,
                  rng: np.random.Generator) -> np.ndarray:
    """Replace a fixed random fraction of the frame with clipped Gaussian noise.

    Exactly floor(perturb_fraction * dim) distinct positions are drawn
    without replacement and overwritten with draws from
    Normal(perturb_mean, perturb_std) clipped to [0, 1]; the rest of the
    frame is untouched.
    """
    mean, std = _require_stats(config)
    dim = len(frame)
    k = int(config.perturb_fraction * dim)
    out = np.array(frame, dtype=np.float64)
    if k == 0:
        return out
    positions = rng.choice(dim, size=k, replace=False)
    out[positions] = np.clip(rng.normal(mean, std, size=k), 0.0, 1.0)
    return out


def _pass_rng(seed: int, frame_index: int, pass_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, frame_index, pass_index])


def _passes_mean(mlp: Mlp, frame: np.ndarray, config: ResynthesisConfig,
                 frame_index: int, checkpoints: list[int]) -> dict[int, np.ndarray]:
    """Average the network output over perturbation passes.

    Returns the running mean at each requested pass count; passes are
    summed in pass order, so the mean at checkpoint n only depends on
    passes 0..n-1.
    """
    acc = np.zeros(mlp.output_dim)
    wanted = set(checkpoints)
    means: dict[int, np.ndarray] = {}
    for p in range(max(checkpoints)):
        rng = _pass_rng(config.seed, frame_index, p)
        perturbed = perturb_frame(frame, config, rng)
        _, output = forward(mlp, perturbed)
        acc += output
        if p + 1 in wanted:
            means[p + 1] = acc / (p + 1)
    return means


def cdt_frame(mlp: Mlp, frame: np.ndarray, config: ResynthesisConfig,
              frame_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Estimate both source windows for one mixture frame.

    Runs n_passes independently perturbed forward passes, averages the
    outputs, and splits the result into the two source halves (voice a
    first).
    """
    frame = np.asarray(frame, dtype=np.float64)
    if len(frame) != mlp.input_dim:
        raise ValueError(f"frame dim {len(frame)} does not match d_in={mlp.input_dim}")
    if mlp.output_dim % 2 != 0:
        raise ValueError("network output dim must be even (two stacked sources)")
    mean = _passes_mean(mlp, frame, config, frame_index, [config.n_passes])
    est = mean[config.n_passes]
    half = mlp.output_dim // 2
    return est[:half], est[half:]


def invariant_correction(frame_set: FrameSet) -> FrameSet:
    """Subtract the across-frames mean frame from every frame.

    Cancels output units that are active regardless of input; afterwards
    every position has zero mean over the frame set.
    """
    if frame_set.num_frames < 1:
        raise ValueError("empty FrameSet")
    mean_frame = frame_set.frames.mean(axis=0)
    return FrameSet(frame_set.frames - mean_frame, frame_set.window_len,
                    frame_set.hop, frame_set.source_len)


def _mixture_frames(mixture: AudioBuffer, window_len: int) -> tuple[np.ndarray, int]:
    """Hop-1 network input rows for a mono or two-channel mixture."""
    if mixture.num_channels == 1:
        fs = extract_frames(mixture.mono(), window_len, hop=1)
        return fs.frames, fs.source_len
    if mixture.num_channels == 2:
        left = extract_frames(mixture.samples[0], window_len, hop=1)
        right = extract_frames(mixture.samples[1], window_len, hop=1)
        return np.hstack([left.frames, right.frames]), left.source_len
    raise ValueError("mixture must have 1 or 2 channels")


def _resolve_config(config: ResynthesisConfig,
                    mixture: AudioBuffer) -> ResynthesisConfig:
    if config.perturb_mean is not None and config.perturb_std is not None:
        return config
    mean = float(mixture.samples.mean())
    std = float(mixture.samples.std())
    return ResynthesisConfig(
        n_passes=config.n_passes,
        perturb_fraction=config.perturb_fraction,
        perturb_mean=config.perturb_mean if config.perturb_mean is not None else mean,
        perturb_std=config.perturb_std if config.perturb_std is not None else std,
        seed=config.seed,
    )


def separate_signal_sweep(mlp: Mlp, mixture: AudioBuffer, window_len: int,
                          config: ResynthesisConfig,
                          n_list: list[int]) -> dict[int, tuple[AudioBuffer, AudioBuffer]]:
    """Separate once per pass count in n_list, sharing perturbation passes.

    Because pass p of frame i uses the stream (seed, i, p) regardless of
    the total pass count, the result at each n is bit-identical to an
    independent :func:`separate_signal` call with n_passes=n.
    """
    if not n_list or sorted(set(n_list)) != sorted(n_list):
        raise ValueError("n_list must be strictly increasing and nonempty")
    if mixture.num_samples < window_len:
        raise ValueError("mixture shorter than one window")
    expected_dim = window_len * mixture.num_channels
    if expected_dim != mlp.input_dim:
        raise ValueError(
            f"window {window_len} x {mixture.num_channels} channels does not "
            f"match network input dim {mlp.input_dim}")

    cfg = _resolve_config(config, mixture)
    rows, source_len = _mixture_frames(mixture, window_len)
    num_frames = rows.shape[0]
    half = mlp.output_dim // 2

    estimates = {n: np.empty((num_frames, mlp.output_dim)) for n in n_list}
    for i in range(num_frames):
        means = _passes_mean(mlp, rows[i], cfg, i, n_list)
        for n, est in means.items():
            estimates[n][i] = est

    out: dict[int, tuple[AudioBuffer, AudioBuffer]] = {}
    covered_len = num_frames - 1 + window_len
    for n in n_list:
        channels = []
        for sl in (slice(0, half), slice(half, 2 * half)):
            fs = FrameSet(estimates[n][:, sl], window_len, 1, covered_len)
            signal = remove_dc(overlap_add_average(invariant_correction(fs)))
            channels.append(AudioBuffer.from_mono(signal, mixture.sample_rate))
        out[n] = (channels[0], channels[1])
    return out


def separate_signal(mlp: Mlp, mixture: AudioBuffer, window_len: int,
                    config: ResynthesisConfig) -> tuple[AudioBuffer, AudioBuffer]:
    """Run the full separation pipeline on a normalized mixture.

    Frames the mixture at hop 1, averages n_passes perturbed network
    outputs per frame, subtracts the across-frames mean (per source),
    reconstructs by averaged overlap-add and removes DC.  Outputs are mono,
    zero-mean, at the mixture rate.
    """
    result = separate_signal_sweep(mlp, mixture, window_len, config,
                                   [config.n_passes])
    return result[config.n_passes]
