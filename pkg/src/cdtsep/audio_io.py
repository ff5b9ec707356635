"""Reading, writing, resampling and amplitude-normalizing audio signals.

All signals travel through the pipeline as :class:`AudioBuffer` values:
float64 samples in a (channels, num_samples) array plus a sample rate.
WAV I/O supports 16-bit PCM and 32-bit IEEE float, mono or stereo.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io.wavfile
import scipy.signal

from .errors import (
    AudioFormatError,
    DegenerateSignalError,
    UnsupportedEncodingError,
    UnsupportedRateError,
)

log = logging.getLogger(__name__)

# Anti-alias FIR for decimate(): Hann-windowed sinc, cutoff just below the
# target Nyquist so the transition band fits under it (~16 Hz wide at a
# 4 kHz target).  Tap count scales with the decimation factor to keep the
# transition width constant in Hz.
_LOWPASS_CUTOFF = 0.4875  # cycles per output sample
_LOWPASS_TAPS_PER_FACTOR = 512


@dataclass
class AudioBuffer:
    """A multichannel sampled signal.

    Parameters
    ----------
    samples : np.ndarray, shape=(channels, num_samples)
        Real amplitudes, float64.  All channels share one length.
    sample_rate : int
        Sampling rate in Hz, positive.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if self.samples.ndim != 2 or self.samples.shape[0] < 1:
            raise ValueError("samples must be a (channels, num_samples) array")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    @property
    def num_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate

    def mono(self) -> np.ndarray:
        """Return the single channel as a 1-D array; error if multichannel."""
        if self.num_channels != 1:
            raise ValueError(f"expected mono buffer, got {self.num_channels} channels")
        return self.samples[0]

    @classmethod
    def from_mono(cls, samples: np.ndarray, sample_rate: int) -> "AudioBuffer":
        return cls(np.asarray(samples, dtype=np.float64)[np.newaxis, :], sample_rate)


@dataclass
class NormalizationParams:
    """Affine parameters removed by :func:`normalize_unit`, one per channel.

    ``offset`` is the removed mean, ``scale`` the peak divisor (twice the
    largest deviation from the mean); both are arrays of shape (channels,).
    """

    offset: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        self.offset = np.atleast_1d(np.asarray(self.offset, dtype=np.float64))
        self.scale = np.atleast_1d(np.asarray(self.scale, dtype=np.float64))
        if np.any(self.scale <= 0):
            raise ValueError("scale must be positive")


def read_wav(path) -> AudioBuffer:
    """Read a RIFF/WAVE file into an AudioBuffer.

    16-bit PCM samples are scaled by 1/32768 into [-1, 1); float32 samples
    are taken as-is.  Other encodings raise
    :class:`~cdtsep.errors.UnsupportedEncodingError`; malformed files raise
    :class:`~cdtsep.errors.AudioFormatError`.
    """
    path = Path(path)
    try:
        rate, data = scipy.io.wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise AudioFormatError(f"{path}: not a readable WAV file ({exc})") from exc

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedEncodingError(
            f"{path}: unsupported sample encoding {data.dtype}; "
            "expected 16-bit PCM or 32-bit float"
        )

    if samples.ndim == 1:
        samples = samples[np.newaxis, :]
    else:
        samples = samples.T  # scipy returns (num_samples, channels)
    if samples.shape[0] > 2:
        raise UnsupportedEncodingError(
            f"{path}: {samples.shape[0]} channels; only mono or stereo supported"
        )
    return AudioBuffer(samples, int(rate))


def write_wav(buffer: AudioBuffer, path, encoding: str = "float32") -> None:
    """Write an AudioBuffer as a WAV file.

    ``encoding`` is ``"pcm16"`` or ``"float32"``.  For pcm16, samples
    outside [-1, 1] are saturated and the clip count is logged; +1.0 maps
    to the maximum code 32767.  float32 output round-trips bit-exactly
    through :func:`read_wav` for float32-representable samples.
    """
    path = Path(path)
    samples = buffer.samples
    if encoding == "pcm16":
        clipped = int(np.count_nonzero((samples < -1.0) | (samples > 1.0)))
        if clipped:
            log.warning("%s: %d samples clipped to [-1, 1] for pcm16", path, clipped)
        scaled = np.clip(samples, -1.0, 1.0) * 32768.0
        data = np.clip(np.round(scaled), -32768, 32767).astype(np.int16)
    elif encoding == "float32":
        data = samples.astype(np.float32)
    else:
        raise ValueError(f"unknown encoding {encoding!r}; use 'pcm16' or 'float32'")

    out = data[0] if buffer.num_channels == 1 else data.T
    try:
        scipy.io.wavfile.write(path, buffer.sample_rate, out)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _lowpass_taps(factor: int) -> np.ndarray:
    num_taps = _LOWPASS_TAPS_PER_FACTOR * factor + 1
    mid = num_taps // 2
    # cutoff in cycles per *input* sample
    fc = _LOWPASS_CUTOFF / factor
    n = np.arange(num_taps) - mid
    taps = 2.0 * fc * np.sinc(2.0 * fc * n) * np.hanning(num_taps)
    return taps / taps.sum()


def decimate(buffer: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Reduce the sample rate by an integer factor with anti-alias filtering.

    The rate must divide the buffer's rate exactly; anything else raises
    :class:`~cdtsep.errors.UnsupportedRateError`.  Output length is
    ceil(len / factor).  The FIR group delay is compensated by trimming, so
    decimated content stays time-aligned with the input.
    """
    if target_rate <= 0 or buffer.sample_rate % target_rate != 0:
        raise UnsupportedRateError(
            f"cannot decimate {buffer.sample_rate} Hz to {target_rate} Hz: "
            "not an integer factor"
        )
    factor = buffer.sample_rate // target_rate
    if factor == 1:
        return AudioBuffer(buffer.samples.copy(), buffer.sample_rate)

    taps = _lowpass_taps(factor)
    delay = len(taps) // 2
    n = buffer.num_samples
    out = []
    for channel in buffer.samples:
        filtered = scipy.signal.fftconvolve(channel, taps, mode="full")
        out.append(filtered[delay:delay + n:factor])
    return AudioBuffer(np.vstack(out), target_rate)


def normalize_unit(buffer: AudioBuffer) -> tuple[AudioBuffer, NormalizationParams]:
    """Map each channel into [0, 1] with mean exactly 0.5.

    y = (x - mean(x)) / (2 * max|x - mean(x)|) + 0.5.  Constant channels
    raise :class:`~cdtsep.errors.DegenerateSignalError`.  The removed
    offset and scale are returned so :func:`denormalize` can invert the map.
    """
    mean = buffer.samples.mean(axis=1, keepdims=True)
    dev = buffer.samples - mean
    peak = np.max(np.abs(dev), axis=1, keepdims=True)
    if np.any(peak == 0):
        raise DegenerateSignalError("constant signal cannot be normalized")
    scale = 2.0 * peak
    normalized = dev / scale + 0.5
    params = NormalizationParams(mean.ravel(), scale.ravel())
    return AudioBuffer(normalized, buffer.sample_rate), params


def denormalize(buffer: AudioBuffer, params: NormalizationParams) -> AudioBuffer:
    """Invert :func:`normalize_unit`: x = (y - 0.5) * scale + offset."""
    if len(params.scale) != buffer.num_channels:
        raise ValueError("params channel count does not match buffer")
    restored = (buffer.samples - 0.5) * params.scale[:, None] + params.offset[:, None]
    return AudioBuffer(restored, buffer.sample_rate)
