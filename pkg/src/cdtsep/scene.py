"""Two-talker mixture construction, monaural and binaural.

The binaural path convolves each mono voice with a per-ear impulse response
pair and sums the ears separately.  Impulse responses come either from a
pair of WAV files or from a small synthetic model (spherical-head time
difference, broadband level difference, far-ear lowpass) so the pipeline
runs without any external measurement data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer, decimate, read_wav
from .errors import DegenerateSignalError

SPEED_OF_SOUND = 343.0  # m/s

_FRACTIONAL_DELAY_TAPS = 33
_FAR_EAR_LOWPASS_HZ = 1200.0


@dataclass
class HrirPair:
    """Left/right ear impulse responses for one source direction."""

    left: np.ndarray
    right: np.ndarray
    sample_rate: int
    azimuth_deg: float | None = None

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=np.float64)
        self.right = np.asarray(self.right, dtype=np.float64)
        if self.left.size == 0 or self.right.size == 0:
            raise ValueError("impulse responses must be nonempty")
        if not (np.all(np.isfinite(self.left)) and np.all(np.isfinite(self.right))):
            raise ValueError("impulse responses must be finite")


@dataclass
class MixtureScene:
    """A mixture plus the mono ground-truth stems it was built from.

    ``mixture`` is 1 channel (monaural) or 2 (binaural); the references are
    the pre-spatialization mono stems, zero-padded to the mixture length.
    """

    mode: str
    mixture: AudioBuffer
    reference_a: AudioBuffer
    reference_b: AudioBuffer


def rms(buffer: AudioBuffer) -> float:
    return float(np.sqrt(np.mean(buffer.samples ** 2)))


def equalize_rms(a: AudioBuffer, b: AudioBuffer) -> tuple[AudioBuffer, AudioBuffer]:
    """Scale b so both voices have equal average intensity; a is unchanged."""
    if a.num_channels != 1 or b.num_channels != 1:
        raise ValueError("equalize_rms expects mono buffers")
    if a.sample_rate != b.sample_rate:
        raise ValueError("sample rates differ")
    rms_a, rms_b = rms(a), rms(b)
    if rms_a == 0 or rms_b == 0:
        raise DegenerateSignalError("cannot equalize a silent signal")
    scaled = AudioBuffer(b.samples * (rms_a / rms_b), b.sample_rate)
    return a, scaled


def _pad_to(samples: np.ndarray, length: int) -> np.ndarray:
    if len(samples) >= length:
        return samples[:length]
    return np.concatenate([samples, np.zeros(length - len(samples))])


def mix_monaural(a: AudioBuffer, b: AudioBuffer) -> AudioBuffer:
    """Samplewise sum of two mono voices; the shorter is zero-padded."""
    if a.num_channels != 1 or b.num_channels != 1:
        raise ValueError("mix_monaural expects mono buffers")
    if a.sample_rate != b.sample_rate:
        raise ValueError("sample rates differ")
    n = max(a.num_samples, b.num_samples)
    mixed = _pad_to(a.mono(), n) + _pad_to(b.mono(), n)
    return AudioBuffer.from_mono(mixed, a.sample_rate)


def monaural_scene(a: AudioBuffer, b: AudioBuffer) -> MixtureScene:
    """Bundle the summed mixture with its stems, padded to mixture length."""
    mixture = mix_monaural(a, b)
    n = mixture.num_samples
    return MixtureScene(
        "monaural",
        mixture,
        AudioBuffer.from_mono(_pad_to(a.mono(), n), a.sample_rate),
        AudioBuffer.from_mono(_pad_to(b.mono(), n), b.sample_rate),
    )


def _fractional_delay_taps(delay: float) -> np.ndarray:
    # Windowed-sinc interpolator; delay is added to the bulk center delay,
    # so both ears share latency (taps-1)/2 and differ only by the split.
    center = _FRACTIONAL_DELAY_TAPS // 2
    x = np.arange(_FRACTIONAL_DELAY_TAPS) - (center + delay)
    window = np.where(np.abs(x) <= center,
                      0.5 + 0.5 * np.cos(np.pi * x / center), 0.0)
    taps = np.sinc(x) * window
    return taps / taps.sum()


def _one_pole_lowpass(taps: np.ndarray, cutoff_hz: float, rate: int) -> np.ndarray:
    a = float(np.exp(-2.0 * np.pi * cutoff_hz / rate))
    out = np.empty_like(taps)
    prev = 0.0
    for i, v in enumerate(taps):
        prev = (1.0 - a) * v + a * prev
        out[i] = prev
    return out


def synth_hrir(azimuth_deg: float, sample_rate: int,
               head_radius_m: float = 0.0875, ild_db: float = 6.0) -> HrirPair:
    """Generate a synthetic binaural impulse-response pair for one azimuth.

    Positive azimuth places the source toward the right ear.  The
    interaural time difference follows the spherical-head formula
    tau = (r/c) * (sin|theta| + |theta|), split half to each ear (near ear
    advanced) via a windowed-sinc fractional delay.  The near ear is
    boosted and the far ear attenuated by ild_db*|sin theta|/2 dB each, and
    the far ear is additionally lowpassed (one pole, 1.2 kHz) to mimic head
    shadow.  Azimuth is limited to [-90, +90] degrees.
    """
    if abs(azimuth_deg) > 90:
        raise ValueError(f"azimuth {azimuth_deg} out of range [-90, 90]")
    theta = np.radians(abs(azimuth_deg))
    itd = (head_radius_m / SPEED_OF_SOUND) * (np.sin(theta) + theta)
    half_delay = 0.5 * itd * sample_rate  # samples

    near = _fractional_delay_taps(-half_delay)
    far = _fractional_delay_taps(+half_delay)
    gain = 10.0 ** (ild_db * np.sin(theta) / 2.0 / 20.0)
    near = near * gain
    far = far / gain
    if azimuth_deg != 0:
        far = _one_pole_lowpass(far, _FAR_EAR_LOWPASS_HZ, sample_rate)

    if azimuth_deg > 0:
        left, right = far, near
    elif azimuth_deg < 0:
        left, right = near, far
    else:
        left, right = near, near.copy()
    return HrirPair(left, right, sample_rate, azimuth_deg)


def load_hrir_pair(path_left, path_right, target_rate: int) -> HrirPair:
    """Load per-ear impulse responses from two mono WAV files.

    Files at a higher rate are decimated to target_rate (integer factor
    required).
    """
    responses = []
    for path in (path_left, path_right):
        buf = read_wav(path)
        if buf.sample_rate != target_rate:
            buf = decimate(buf, target_rate)
        responses.append(buf.mono())
    return HrirPair(responses[0], responses[1], target_rate)


def spatialize_and_mix(a: AudioBuffer, b: AudioBuffer,
                       hrir_a: HrirPair, hrir_b: HrirPair) -> MixtureScene:
    """Convolve each voice with its ear pair and sum per ear.

    Full linear convolution, tail kept, so the mixture is longer than the
    stems; the stored references are the unconvolved mono stems zero-padded
    to the mixture length.
    """
    if a.num_channels != 1 or b.num_channels != 1:
        raise ValueError("spatialize_and_mix expects mono buffers")
    rates = {a.sample_rate, b.sample_rate, hrir_a.sample_rate, hrir_b.sample_rate}
    if len(rates) != 1:
        raise ValueError(f"sample rates differ: {sorted(rates)}")

    sig_a, sig_b = a.mono(), b.mono()
    left_parts = [np.convolve(sig_a, hrir_a.left), np.convolve(sig_b, hrir_b.left)]
    right_parts = [np.convolve(sig_a, hrir_a.right), np.convolve(sig_b, hrir_b.right)]
    n = max(len(p) for p in left_parts + right_parts)
    left = _pad_to(left_parts[0], n) + _pad_to(left_parts[1], n)
    right = _pad_to(right_parts[0], n) + _pad_to(right_parts[1], n)

    mixture = AudioBuffer(np.vstack([left, right]), a.sample_rate)
    return MixtureScene(
        "binaural",
        mixture,
        AudioBuffer.from_mono(_pad_to(sig_a, n), a.sample_rate),
        AudioBuffer.from_mono(_pad_to(sig_b, n), a.sample_rate),
    )
