"""Training-time augmentations: waveform time shift, spectrogram masking
and frequency MixStyle.

All operations preserve array shape and are deterministic given their
explicit arguments; randomness lives in `random_augment_*`, driven by a
caller-supplied numpy Generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip
from .dsp import Spectrogram

MIXSTYLE_EPS = 1e-5


@dataclass(frozen=True)
class AugmentConfig:
    max_shift: int = 4000          # waveform samples
    max_time_mask: int = 400       # spectrogram frames
    max_freq_mask: int = 4         # mel bins
    mixstyle_p: float = 0.3
    mixstyle_alpha: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if min(self.max_shift, self.max_time_mask, self.max_freq_mask) < 0:
            raise ValueError("augmentation maxima must be >= 0")
        if not 0.0 <= self.mixstyle_p <= 1.0:
            raise ValueError("mixstyle_p must be in [0, 1]")
        if self.mixstyle_alpha <= 0.0:
            raise ValueError("mixstyle_alpha must be > 0")


def time_shift(clip: AudioClip, shift: int, max_shift: int = 4000) -> AudioClip:
    """Circular rotation of the waveform by `shift` samples.

    Positive shifts move content forward in time.  Rotation preserves
    length and energy and is exactly invertible by -shift.
    """
    if abs(shift) > max_shift:
        raise ValueError(f"|shift| = {abs(shift)} exceeds max_shift = {max_shift}")
    return AudioClip(samples=np.roll(clip.samples, shift), sample_rate=clip.sample_rate, id=clip.id)


def spec_mask(
    spec: Spectrogram,
    axis: str,
    length: int,
    start: int,
    config: AugmentConfig = AugmentConfig(),
    fill: float = 0.0,
) -> Spectrogram:
    """Mask a band of frames (axis="time") or bins (axis="frequency").

    The masked band is set to `fill` (0 in the log domain); everything
    else is untouched.
    """
    if axis == "time":
        size, cap = spec.n_frames, config.max_time_mask
    elif axis == "frequency":
        size, cap = spec.n_bins, config.max_freq_mask
    else:
        raise ValueError(f"axis must be 'time' or 'frequency', got {axis!r}")
    if length < 0 or length > cap:
        raise ValueError(f"mask length {length} outside [0, {cap}]")
    if start < 0 or start + length > size:
        raise ValueError(f"mask [{start}, {start + length}) outside axis of size {size}")
    values = spec.values.copy()
    if axis == "time":
        values[:, start : start + length] = fill
    else:
        values[start : start + length, :] = fill
    return Spectrogram(values=values, bin_frequencies=spec.bin_frequencies,
                       frame_hop=spec.frame_hop, kind=spec.kind)


def freq_mixstyle(batch: list[Spectrogram], lam: float, permutation: np.ndarray) -> list[Spectrogram]:
    """Re-normalize per-frequency statistics with stats mixed across the batch.

    For each spectrogram b and bin f, with mean mu and std sigma taken over
    time (sigma carries the +eps stabilizer so lam=1 is the exact identity):

        x_hat = (x - mu) / sigma
        mu'    = lam * mu_b    + (1 - lam) * mu_perm(b)
        sigma' = lam * sigma_b + (1 - lam) * sigma_perm(b)
        out    = x_hat * sigma' + mu'
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must be in [0, 1]")
    n = len(batch)
    permutation = np.asarray(permutation)
    if sorted(permutation.tolist()) != list(range(n)):
        raise ValueError("permutation must be a bijection over the batch")
    shape = batch[0].values.shape
    if any(s.values.shape != shape for s in batch):
        raise ValueError("all spectrograms in the batch must share a shape")

    stack = np.stack([s.values for s in batch])              # [n, bins, frames]
    mu = stack.mean(axis=2, keepdims=True)                   # [n, bins, 1]
    sigma = stack.std(axis=2, keepdims=True) + MIXSTYLE_EPS
    normed = (stack - mu) / sigma
    mu_mix = lam * mu + (1.0 - lam) * mu[permutation]
    sigma_mix = lam * sigma + (1.0 - lam) * sigma[permutation]
    mixed = normed * sigma_mix + mu_mix
    return [
        Spectrogram(values=mixed[i], bin_frequencies=b.bin_frequencies,
                    frame_hop=b.frame_hop, kind=b.kind)
        for i, b in enumerate(batch)
    ]


def random_time_shift(clip: AudioClip, config: AugmentConfig, rng: np.random.Generator) -> AudioClip:
    shift = int(rng.integers(-config.max_shift, config.max_shift + 1))
    return time_shift(clip, shift, config.max_shift)


def random_masks(spec: Spectrogram, config: AugmentConfig, rng: np.random.Generator) -> Spectrogram:
    """One random time mask and one random frequency mask."""
    t_len = int(rng.integers(0, min(config.max_time_mask, spec.n_frames) + 1))
    t_start = int(rng.integers(0, spec.n_frames - t_len + 1))
    spec = spec_mask(spec, "time", t_len, t_start, config)
    f_len = int(rng.integers(0, min(config.max_freq_mask, spec.n_bins) + 1))
    f_start = int(rng.integers(0, spec.n_bins - f_len + 1))
    return spec_mask(spec, "frequency", f_len, f_start, config)


def random_mixstyle(batch: list[Spectrogram], config: AugmentConfig, rng: np.random.Generator) -> list[Spectrogram]:
    """Apply freq_mixstyle to the whole batch with probability mixstyle_p,
    lam ~ Beta(alpha, alpha), permutation uniform."""
    if rng.random() >= config.mixstyle_p:
        return batch
    lam = float(rng.beta(config.mixstyle_alpha, config.mixstyle_alpha))
    perm = rng.permutation(len(batch))
    return freq_mixstyle(batch, lam, perm)
