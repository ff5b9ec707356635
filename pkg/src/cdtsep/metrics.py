"""Source-separation scoring by least-squares projection, plus spectrograms.

An estimate is decomposed into a target part (its projection onto delayed
copies of the true source), an interference part (the extra contribution of
the other sources' delays) and an artefact residual.  Energy ratios of
those parts give SDR, SIR and SAR in dB.  The projections solve the Gram
normal equations built from FFT cross-correlations, with a small ridge for
near-collinear references.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.signal

from .errors import DegenerateReferencesError

# CSV encoding of infinite dB values (files stay parseable).
DB_SENTINEL = 1.0e9

# Denominator energies below this fraction of the decomposition energy are
# treated as zero; they are at the level the ridge itself injects, so the
# true ratio is unbounded.
_ZERO_ENERGY_REL = 1e-18

_RIDGE_REL = 1e-10


@dataclass
class BssDecomposition:
    """Additive split of one estimate: estimate = s_target + e_interf + e_artif.

    All three parts live in the zero-padded domain of length
    n + filter_len - 1.  s_target lies in the span of the target source
    delayed by 0..filter_len-1 samples; s_target + e_interf lies in the
    span of all sources' delays.
    """

    s_target: np.ndarray
    e_interf: np.ndarray
    e_artif: np.ndarray
    filter_len: int


@dataclass
class SeparationMetrics:
    """Per-source SDR/SIR/SAR in dB (math.inf allowed), plus the pass count."""

    sdr_db: list[float]
    sir_db: list[float]
    sar_db: list[float]
    n_passes: int | None = None


def _shift_correlations(x: np.ndarray, y: np.ndarray, flen: int,
                        nfft: int, xf: np.ndarray, yf: np.ndarray) -> np.ndarray:
    """corr[d] = sum_t x[t + d] y[t] for d in -(flen-1)..(flen-1), d indexed
    circularly (negative lags at the tail)."""
    return np.fft.irfft(xf * np.conj(yf), nfft)


def _gram_and_rhs(references: np.ndarray, estimate: np.ndarray,
                  flen: int) -> tuple[np.ndarray, np.ndarray]:
    """Normal equations for projecting onto all references' 0..flen-1 delays."""
    nsrc, nsampl = references.shape
    nfft = 1 << int(np.ceil(np.log2(nsampl + flen - 1)))
    ref_f = np.fft.rfft(references, nfft)
    est_f = np.fft.rfft(estimate, nfft)

    gram = np.zeros((nsrc * flen, nsrc * flen))
    for i in range(nsrc):
        for j in range(i, nsrc):
            corr = _shift_correlations(references[i], references[j], flen,
                                       nfft, ref_f[i], ref_f[j])
            block = scipy.linalg.toeplitz(
                np.concatenate([[corr[0]], corr[-1:-flen:-1]]), corr[:flen])
            gram[i * flen:(i + 1) * flen, j * flen:(j + 1) * flen] = block
            gram[j * flen:(j + 1) * flen, i * flen:(i + 1) * flen] = block.T

    rhs = np.zeros(nsrc * flen)
    for i in range(nsrc):
        corr = _shift_correlations(references[i], estimate, flen,
                                   nfft, ref_f[i], est_f)
        rhs[i * flen:(i + 1) * flen] = np.concatenate(
            [[corr[0]], corr[-1:-flen:-1]])
    return gram, rhs


def _project(references: np.ndarray, estimate: np.ndarray, flen: int) -> np.ndarray:
    """Least-squares projection of the estimate onto the span of delayed
    (0..flen-1) copies of every reference; all signals already padded to
    n + flen - 1."""
    nsrc = references.shape[0]
    gram, rhs = _gram_and_rhs(references, estimate, flen)
    ridge = _RIDGE_REL * np.trace(gram) / gram.shape[0]
    gram[np.diag_indices_from(gram)] += ridge
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise DegenerateReferencesError(
            f"references too collinear to project onto ({exc})") from exc
    coeffs = scipy.linalg.cho_solve(factor, rhs).reshape(nsrc, flen)

    n_out = references.shape[1] + flen - 1
    projection = np.zeros(n_out)
    for i in range(nsrc):
        projection += scipy.signal.fftconvolve(coeffs[i], references[i])[:n_out]
    return projection


def decompose_projection(estimate: np.ndarray, references: list[np.ndarray],
                         target_index: int, filter_len: int) -> BssDecomposition:
    """Split an estimate into target, interference and artefact parts.

    Parameters
    ----------
    estimate : np.ndarray, shape=(n,)
        Estimated source signal.
    references : list of np.ndarray, shape=(n,)
        True source signals, equal length n > filter_len.
    target_index : int
        Which reference the estimate is supposed to be.
    filter_len : int
        Number of delays (taps) the projection may use.

    Returns
    -------
    BssDecomposition
        s_target + e_interf + e_artif equals the zero-padded estimate.
    """
    refs = np.asarray(references, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if refs.ndim != 2 or estimate.ndim != 1 or refs.shape[1] != len(estimate):
        raise ValueError("estimate and references must be 1-D and equal length")
    n = len(estimate)
    if n <= filter_len:
        raise ValueError(f"signals of length {n} too short for filter_len={filter_len}")
    if not 0 <= target_index < refs.shape[0]:
        raise ValueError(f"target_index {target_index} out of range")

    padded_estimate = np.concatenate([estimate, np.zeros(filter_len - 1)])
    s_target = _project(refs[target_index:target_index + 1], estimate, filter_len)
    p_all = _project(refs, estimate, filter_len)
    return BssDecomposition(
        s_target=s_target,
        e_interf=p_all - s_target,
        e_artif=padded_estimate - p_all,
        filter_len=filter_len,
    )


def _safe_db(num: float, den: float, scale: float) -> float:
    if den <= _ZERO_ENERGY_REL * scale:
        return math.inf
    if num == 0.0:
        return -math.inf
    return 10.0 * math.log10(num / den)


def bss_eval(estimates: list[np.ndarray], references: list[np.ndarray],
             filter_len: int = 512, n_passes: int | None = None) -> SeparationMetrics:
    """Score each estimate against its same-index reference.

    Parameters
    ----------
    estimates, references : lists of np.ndarray
        Equal counts and lengths; estimate i is scored against reference i
        (no permutation search).
    filter_len : int
        Allowed distortion filter length in taps.
    n_passes : int, optional
        Recorded in the result for bookkeeping only.

    Returns
    -------
    SeparationMetrics
        Per-source SDR, SIR, SAR in dB.  A vanishing denominator yields
        math.inf (written to CSV as ``DB_SENTINEL``).
    """
    if len(estimates) != len(references):
        raise ValueError("estimate and reference counts differ")
    sdr, sir, sar = [], [], []
    for i, estimate in enumerate(estimates):
        d = decompose_projection(estimate, references, i, filter_len)
        e_target = float(d.s_target @ d.s_target)
        e_interf = float(d.e_interf @ d.e_interf)
        e_artif = float(d.e_artif @ d.e_artif)
        distortion = d.e_interf + d.e_artif
        with_interf = d.s_target + d.e_interf
        scale = e_target + e_interf + e_artif
        sdr.append(_safe_db(e_target, float(distortion @ distortion), scale))
        sir.append(_safe_db(e_target, e_interf, scale))
        sar.append(_safe_db(float(with_interf @ with_interf), e_artif, scale))
    return SeparationMetrics(sdr, sir, sar, n_passes)


def spectrogram(signal: np.ndarray, fft_size: int, hop: int) -> np.ndarray:
    """Hann-windowed magnitude spectrogram in dB.

    Rows are frames, columns the fft_size/2 + 1 non-negative-frequency
    bins; magnitude is 20*log10(|X| + 1e-12), so silence sits at -240 dB.
    fft_size must be a power of two.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if fft_size < 2 or fft_size & (fft_size - 1) != 0:
        raise ValueError(f"fft_size {fft_size} is not a power of two")
    if len(signal) < fft_size:
        raise ValueError("signal shorter than one FFT frame")
    frames = np.lib.stride_tricks.sliding_window_view(signal, fft_size)[::hop]
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(fft_size) / fft_size)
    spectrum = np.fft.rfft(frames * window, axis=1)
    return 20.0 * np.log10(np.abs(spectrum) + 1e-12)


def _csv_db(value: float) -> float:
    if math.isinf(value):
        return DB_SENTINEL if value > 0 else -DB_SENTINEL
    return value


def write_metrics_csv(metrics: SeparationMetrics, path,
                      source_names: tuple[str, str] = ("a", "b")) -> None:
    """Write one row per source: source,n_passes,sdr_db,sir_db,sar_db."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "n_passes", "sdr_db", "sir_db", "sar_db"])
        for i, name in enumerate(source_names):
            writer.writerow([
                name,
                metrics.n_passes if metrics.n_passes is not None else 0,
                f"{_csv_db(metrics.sdr_db[i]):.6f}",
                f"{_csv_db(metrics.sir_db[i]):.6f}",
                f"{_csv_db(metrics.sar_db[i]):.6f}",
            ])


def write_spectrogram_csv(spec_db: np.ndarray, path) -> None:
    """Write the dB matrix row-per-frame."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in spec_db:
            writer.writerow([f"{v:.4f}" for v in row])


def write_spectrogram_pgm(spec_db: np.ndarray, path,
                          floor_db: float = -80.0, ceil_db: float = 0.0) -> None:
    """Write the dB matrix as a binary 8-bit PGM image, row-per-frame.

    dB values are mapped linearly from [floor_db, ceil_db] onto 0..255 and
    clipped.
    """
    if ceil_db <= floor_db:
        raise ValueError("ceil_db must exceed floor_db")
    scaled = (spec_db - floor_db) / (ceil_db - floor_db)
    pixels = (np.clip(scaled, 0.0, 1.0) * 255.0).round().astype(np.uint8)
    height, width = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
