"""Time-frequency features: log-mel spectrograms for the encoders and the
CQT + 2D Fourier transform similarity baseline.

Conventions, fixed here for reproducibility:

* STFT framing for log-mel is non-centered: frame t covers samples
  [t*hop, t*hop + window), so frames = (n_samples - window)//hop + 1.
  The analysis window is a periodic Hann window.
* The CQT uses direct per-bin windowed complex kernels evaluated as a
  circular cross-correlation over the whole clip, sampled every `hop`
  samples (frames = n_samples // hop).  The circular framing makes the
  magnitude CQT rotate exactly with circular time shifts of the waveform
  when the shift is a multiple of the hop, which the 2DFT baseline relies
  on for its shift invariance.
* The 2D DFT is numpy's unnormalized forward transform, so total output
  energy equals rows*cols times input energy (Parseval).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .audio_io import AudioClip
from .exceptions import DegenerateInputError


@dataclass(frozen=True)
class LogMelConfig:
    """Parameters of the encoder-facing log-mel front end.

    Defaults mirror a 32 kHz tagging-style pipeline: 25 ms window,
    10 ms hop, 128 mel bins spanning 0..16 kHz.
    """

    window: int = 800
    hop: int = 320
    n_mels: int = 128
    f_min: float = 0.0
    f_max: float = 16000.0
    log_offset: float = 1e-5


@dataclass(frozen=True)
class CqtConfig:
    """Parameters of the constant-Q transform used by the 2DFT baseline.

    f_min defaults to C1; 12 bins per octave over 8 octaves spans
    32.7 Hz .. 8.4 kHz.  log_compress applies ln(1+x) to the magnitudes
    before the 2DFT, which stabilizes the dynamic range (CLI flag
    --no-log-compress disables it).
    """

    f_min: float = 32.70
    bins_per_octave: int = 12
    n_octaves: int = 8
    hop: int = 640
    log_compress: bool = True

    @property
    def n_bins(self) -> int:
        return self.bins_per_octave * self.n_octaves

    def bin_frequencies(self) -> np.ndarray:
        k = np.arange(self.n_bins)
        return self.f_min * 2.0 ** (k / self.bins_per_octave)

    @property
    def q_factor(self) -> float:
        return 1.0 / (2.0 ** (1.0 / self.bins_per_octave) - 1.0)


@dataclass
class Spectrogram:
    """2-D time-frequency array, [freq_bins x frames].

    kind is "log_mel" or "cqt_magnitude"; bin_frequencies gives the center
    frequency of each row in Hz and frame_hop the hop in samples.
    """

    values: np.ndarray
    bin_frequencies: np.ndarray
    frame_hop: int
    kind: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("Spectrogram values must be 2-D")
        if not np.isfinite(self.values).all():
            raise ValueError("Spectrogram values must be finite")

    @property
    def n_bins(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


@dataclass
class FeatureVector:
    values: np.ndarray
    kind: str = "twodft"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("FeatureVector values must be 1-D")
        if not np.isfinite(self.values).all():
            raise ValueError("FeatureVector values must be finite")


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_center_frequencies(config: LogMelConfig) -> np.ndarray:
    """Center frequency (Hz) of each mel bin."""
    pts = np.linspace(hz_to_mel(config.f_min), hz_to_mel(config.f_max), config.n_mels + 2)
    return mel_to_hz(pts[1:-1])


@lru_cache(maxsize=16)
def _mel_filterbank_cached(config: LogMelConfig, sample_rate: int) -> np.ndarray:
    n_freqs = config.window // 2 + 1
    fft_freqs = np.linspace(0.0, sample_rate / 2.0, n_freqs)
    pts = mel_to_hz(np.linspace(hz_to_mel(config.f_min), hz_to_mel(config.f_max), config.n_mels + 2))
    fb = np.zeros((config.n_mels, n_freqs))
    for m in range(config.n_mels):
        lo, ctr, hi = pts[m], pts[m + 1], pts[m + 2]
        rising = (fft_freqs - lo) / max(ctr - lo, 1e-12)
        falling = (hi - fft_freqs) / max(hi - ctr, 1e-12)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    fb.setflags(write=False)
    return fb


def mel_filterbank(config: LogMelConfig, sample_rate: int) -> np.ndarray:
    """Triangular mel filterbank, [n_mels x (window//2 + 1)], peak height 1.

    Precomputed once per (config, rate) and shared read-only."""
    if config.n_mels < 1:
        raise ValueError("n_mels must be >= 1")
    return _mel_filterbank_cached(config, sample_rate)


def _periodic_hann(n: int) -> np.ndarray:
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


def _frame(samples: np.ndarray, window: int, hop: int) -> np.ndarray:
    """Non-centered framing: [n_frames x window]."""
    n = len(samples)
    if window > n:
        raise ValueError(f"window ({window}) exceeds clip length ({n})")
    n_frames = (n - window) // hop + 1
    idx = np.arange(window)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]


def log_mel(clip: AudioClip, config: LogMelConfig = LogMelConfig()) -> Spectrogram:
    """Log mel-power spectrogram: ln(mel(|STFT|^2) + log_offset).

    The clip is expected to be conformed to the canonical rate/length
    already; frames follow the non-centered formula documented above.
    """
    frames = _frame(clip.samples, config.window, config.hop)
    win = _periodic_hann(config.window)
    spectrum = np.fft.rfft(frames * win, axis=1)
    power = np.abs(spectrum) ** 2
    fb = mel_filterbank(config, clip.sample_rate)
    mel_power = power @ fb.T
    values = np.log(mel_power + config.log_offset).T
    return Spectrogram(
        values=values,
        bin_frequencies=mel_center_frequencies(config),
        frame_hop=config.hop,
        kind="log_mel",
    )


def _cqt_kernels(config: CqtConfig, sample_rate: int):
    """Complex per-bin kernels, each length ceil(Q * sr / f_k), Hann-windowed
    and normalized by the window sum."""
    kernels = []
    q = config.q_factor
    for fk in config.bin_frequencies():
        n_k = int(np.ceil(q * sample_rate / fk))
        win = _periodic_hann(n_k)
        phase = np.exp(2j * np.pi * fk * np.arange(n_k) / sample_rate)
        kernels.append(win * phase / win.sum())
    return kernels


def cqt(clip: AudioClip, config: CqtConfig = CqtConfig()) -> Spectrogram:
    """Magnitude constant-Q transform with circular framing.

    Bin k is centered at f_min * 2^(k / bins_per_octave) with constant
    Q = 1 / (2^(1/bins_per_octave) - 1).  Frame t correlates the kernel
    with the waveform starting at t*hop, wrapping around the clip end, so
    n_frames = n_samples // hop.
    """
    freqs = config.bin_frequencies()
    nyquist = clip.sample_rate / 2.0
    if freqs[-1] > nyquist:
        raise ValueError(
            f"CQT range exceeds Nyquist: top bin {freqs[-1]:.1f} Hz > {nyquist:.1f} Hz"
        )
    n = len(clip.samples)
    if config.hop > n:
        raise ValueError(f"hop ({config.hop}) exceeds clip length ({n})")
    kernels = _cqt_kernels(config, clip.sample_rate)
    if len(kernels[0]) > n:
        raise ValueError(
            f"lowest CQT kernel ({len(kernels[0])} samples) exceeds clip length ({n}); "
            "raise f_min or use a longer clip"
        )
    n_frames = n // config.hop
    x_fft = np.fft.fft(clip.samples)
    values = np.empty((config.n_bins, n_frames))
    for k, kern in enumerate(kernels):
        # circular cross-correlation x * conj(kernel), sampled every hop
        corr = np.fft.ifft(x_fft * np.conj(np.fft.fft(kern, n)))
        values[k] = np.abs(corr[: n_frames * config.hop : config.hop])
    return Spectrogram(
        values=values, bin_frequencies=freqs, frame_hop=config.hop, kind="cqt_magnitude"
    )


def two_dft(spec: Spectrogram) -> FeatureVector:
    """Flattened magnitude of the 2-D DFT of a spectrogram.

    The magnitude is invariant to circular shifts of the input along
    either axis (DFT shift theorem), which is the point of the baseline:
    it removes absolute time and pitch position.
    """
    if spec.values.size == 0:
        raise ValueError("empty spectrogram")
    mag = np.abs(np.fft.fft2(spec.values))
    return FeatureVector(values=mag.ravel(), kind="twodft")


def twodft_feature(clip: AudioClip, config: CqtConfig = CqtConfig()) -> FeatureVector:
    """CQT -> optional ln(1+x) compression -> 2DFT magnitude."""
    spec = cqt(clip, config)
    if config.log_compress:
        spec = Spectrogram(
            values=np.log1p(spec.values),
            bin_frequencies=spec.bin_frequencies,
            frame_hop=spec.frame_hop,
            kind=spec.kind,
        )
    return two_dft(spec)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity with plain l2 norms, clamped to [-1, 1].

    Zero-norm input raises DegenerateInputError.
    """
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("zero-norm feature vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def baseline_similarity(a: AudioClip, v: AudioClip, config: CqtConfig = CqtConfig()) -> float:
    """Cosine similarity between the 2DFT-of-CQT features of two clips."""
    fa = twodft_feature(a, config)
    fv = twodft_feature(v, config)
    return cosine(fa.values, fv.values)
