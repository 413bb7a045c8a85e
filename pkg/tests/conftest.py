import numpy as np
import pytest

from qbv.audio_io import AudioClip


@pytest.fixture
def sine_clip():
    def make(freq=440.0, sr=16000, seconds=1.0, amp=0.5, clip_id="sine"):
        t = np.arange(int(seconds * sr)) / sr
        return AudioClip(amp * np.sin(2 * np.pi * freq * t), sr, id=clip_id)
    return make


def rel_err(analytic, numeric, floor=1e-6):
    """Elementwise relative error with a floor against finite-difference
    noise on near-zero gradients."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def normwise_err(analytic, numeric):
    """Max absolute difference relative to the largest gradient entry."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(numeric).max(), 1e-12)
    return np.abs(analytic - numeric).max() / scale
