"""Load, resample and length-conform audio into canonical mono waveforms.

Only RIFF/WAVE input is supported (PCM 8/16/32-bit and IEEE float32),
which keeps decoding dependency-free via scipy.io.wavfile.  Resampling is
polyphase (scipy.signal.resample_poly) with the rational up/down factors
reduced by their gcd.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

DEFAULT_SAMPLE_RATE = 32000
DEFAULT_DURATION = 10.0


@dataclass
class AudioClip:
    """Mono waveform with amplitudes in [-1, 1].

    samples are float64, always finite; sample_rate is a positive integer.
    """

    samples: np.ndarray
    sample_rate: int
    id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("AudioClip samples must be one-dimensional")
        if not np.isfinite(self.samples).all():
            raise ValueError("AudioClip samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


_PCM_SCALE = {
    np.dtype(np.int16): 32768.0,
    np.dtype(np.int32): 2147483648.0,
}


def _to_float(data: np.ndarray) -> np.ndarray:
    """Scale integer PCM to [-1, 1]; pass floats through."""
    if data.dtype in _PCM_SCALE:
        return data.astype(np.float64) / _PCM_SCALE[data.dtype]
    if data.dtype == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64)
    raise ValueError(f"unsupported WAV sample format: {data.dtype}")


def load_audio(path, target_rate: int = DEFAULT_SAMPLE_RATE, clip_id: str | None = None) -> AudioClip:
    """Decode a RIFF/WAVE file to a mono AudioClip at target_rate.

    Multichannel input is averaged to mono.  Amplitudes are clipped to
    [-1, 1] after resampling (polyphase filtering can overshoot slightly).

    Raises ValueError for unreadable files, unsupported codecs and
    zero-length audio.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:
        raise ValueError(f"cannot read WAV file {path!r}: {exc}") from exc
    if data.size == 0:
        raise ValueError(f"zero-length audio in {path!r}")

    samples = _to_float(data)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)

    if rate != target_rate:
        g = math.gcd(int(target_rate), int(rate))
        samples = resample_poly(samples, target_rate // g, rate // g)
    samples = np.clip(samples, -1.0, 1.0)

    if clip_id is None:
        clip_id = str(path)
    return AudioClip(samples=samples, sample_rate=int(target_rate), id=clip_id)


def load_audio_bytes(payload: bytes, target_rate: int = DEFAULT_SAMPLE_RATE, clip_id: str = "upload") -> AudioClip:
    """Decode WAV bytes (e.g. an HTTP upload) via the same path as load_audio."""
    return load_audio(io.BytesIO(payload), target_rate=target_rate, clip_id=clip_id)


def conform_length(clip: AudioClip, target_seconds: float = DEFAULT_DURATION) -> AudioClip:
    """Truncate or zero-pad to exactly target_seconds.

    Truncation keeps the head of the clip; padding appends zeros at the
    tail.  Idempotent for a fixed target.
    """
    if target_seconds <= 0:
        raise ValueError("target_seconds must be positive")
    target_len = int(round(target_seconds * clip.sample_rate))
    samples = clip.samples
    if len(samples) >= target_len:
        samples = samples[:target_len]
    else:
        samples = np.concatenate([samples, np.zeros(target_len - len(samples))])
    return AudioClip(samples=samples, sample_rate=clip.sample_rate, id=clip.id)


def wav_bytes(clip: AudioClip, dtype: str = "int16") -> bytes:
    """Serialize a clip as RIFF/WAVE (PCM 16-bit or IEEE float32)."""
    buf = io.BytesIO()
    write_wav(buf, clip, dtype=dtype)
    return buf.getvalue()


def write_wav(path, clip: AudioClip, dtype: str = "int16") -> None:
    if dtype == "int16":
        data = np.clip(clip.samples, -1.0, 1.0)
        wavfile.write(path, clip.sample_rate, (data * 32767.0).astype(np.int16))
    elif dtype == "float32":
        wavfile.write(path, clip.sample_rate, clip.samples.astype(np.float32))
    else:
        raise ValueError(f"unsupported output dtype: {dtype}")
