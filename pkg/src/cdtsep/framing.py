"""Overlapping fixed-length windows and averaged overlap-add reconstruction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FrameAlignmentError


@dataclass
class FrameSet:
    """Overlapping windows cut from one signal.

    ``frames`` has shape (num_frames, window_len); row i is the slice
    signal[i*hop : i*hop + window_len].  ``source_len`` remembers the
    original length so reconstruction can report coverage.
    """

    frames: np.ndarray
    window_len: int
    hop: int
    source_len: int

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


@dataclass
class TrainingSet:
    """Aligned (input, target) rows for autoencoder training.

    Input rows are mixture windows (window_len wide, or twice that for a
    two-channel mixture with left before right); target rows are the two
    source windows concatenated, voice a first.
    """

    inputs: np.ndarray
    targets: np.ndarray

    @property
    def num_examples(self) -> int:
        return self.inputs.shape[0]


def extract_frames(signal: np.ndarray, window_len: int, hop: int) -> FrameSet:
    """Cut a 1-D signal into overlapping windows of ``window_len`` every ``hop``.

    num_frames = floor((len - window_len) / hop) + 1; a trailing remainder
    shorter than a window is dropped.  Raises ValueError if the signal is
    shorter than one window.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise ValueError("signal must be 1-D")
    if hop < 1:
        raise ValueError("hop must be >= 1")
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    if len(signal) < window_len:
        raise ValueError(
            f"signal length {len(signal)} is shorter than window {window_len}"
        )
    windows = np.lib.stride_tricks.sliding_window_view(signal, window_len)[::hop]
    return FrameSet(windows.copy(), window_len, hop, len(signal))


def overlap_add_average(frame_set: FrameSet) -> np.ndarray:
    """Rebuild a signal by placing frames at their offsets and averaging.

    Output position t is the mean of frames[i][t - i*hop] over every frame
    covering t; length is the covered region (num_frames - 1) * hop +
    window_len.  Unmodified frames from :func:`extract_frames` reconstruct
    the source on that region to rounding error.
    """
    if frame_set.num_frames == 0:
        raise ValueError("cannot reconstruct from an empty FrameSet")
    hop, window_len = frame_set.hop, frame_set.window_len
    out_len = (frame_set.num_frames - 1) * hop + window_len
    acc = np.zeros(out_len)
    count = np.zeros(out_len)
    for i, frame in enumerate(frame_set.frames):
        start = i * hop
        acc[start:start + window_len] += frame
        count[start:start + window_len] += 1.0
    return acc / count


def remove_dc(signal: np.ndarray) -> np.ndarray:
    """Subtract the mean so the result is zero-mean."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.size == 0:
        raise ValueError("signal must be nonempty")
    return signal - signal.mean()


def build_training_set(mixture_frames, voice_a_frames: FrameSet,
                       voice_b_frames: FrameSet) -> TrainingSet:
    """Assemble aligned training rows from mixture and source frame sets.

    ``mixture_frames`` is one FrameSet (monaural) or a (left, right) pair
    (binaural); all frame sets must share num_frames, window_len and hop,
    otherwise :class:`~cdtsep.errors.FrameAlignmentError` is raised.
    """
    if isinstance(mixture_frames, FrameSet):
        mix_sets = [mixture_frames]
    else:
        mix_sets = list(mixture_frames)
        if len(mix_sets) != 2:
            raise FrameAlignmentError("binaural mixture needs exactly two frame sets")

    all_sets = mix_sets + [voice_a_frames, voice_b_frames]
    geometry = {(fs.num_frames, fs.window_len, fs.hop) for fs in all_sets}
    if len(geometry) != 1:
        raise FrameAlignmentError(
            f"frame sets disagree on (num_frames, window_len, hop): {sorted(geometry)}"
        )

    inputs = mix_sets[0].frames if len(mix_sets) == 1 else np.hstack(
        [mix_sets[0].frames, mix_sets[1].frames])
    targets = np.hstack([voice_a_frames.frames, voice_b_frames.frames])
    return TrainingSet(inputs.copy(), targets)
