import numpy as np
import pytest
from scipy.io import wavfile

from qbv.audio_io import AudioClip, conform_length, load_audio, load_audio_bytes, wav_bytes, write_wav


def test_silence_resampled_to_target_length(tmp_path):
    path = tmp_path / "silence.wav"
    wavfile.write(path, 44100, np.zeros(44100, dtype=np.int16))
    clip = load_audio(path, target_rate=32000)
    assert clip.sample_rate == 32000
    assert len(clip.samples) == 32000
    assert np.all(clip.samples == 0.0)


def test_stereo_opposite_channels_average_to_zero(tmp_path):
    path = tmp_path / "stereo.wav"
    data = np.stack([np.full(8000, 0.5), np.full(8000, -0.5)], axis=1).astype(np.float32)
    wavfile.write(path, 16000, data)
    clip = load_audio(path, target_rate=16000)
    assert np.allclose(clip.samples, 0.0)


def test_resampling_preserves_dominant_frequency(tmp_path, sine_clip):
    # oracle: FFT peak frequency before and after resampling
    clip = sine_clip(freq=440.0, sr=16000, seconds=1.0)
    path = tmp_path / "sine.wav"
    write_wav(path, clip)
    out = load_audio(path, target_rate=32000)

    def peak_hz(samples, sr):
        spectrum = np.abs(np.fft.rfft(samples))
        return np.fft.rfftfreq(len(samples), 1.0 / sr)[np.argmax(spectrum)]

    before = peak_hz(clip.samples, 16000)
    after = peak_hz(out.samples, 32000)
    assert abs(before - 440.0) <= 1.0
    assert abs(after - before) <= 32000 / len(out.samples)  # one bin


def test_pcm16_roundtrip_close(tmp_path, sine_clip):
    clip = sine_clip()
    path = tmp_path / "s.wav"
    write_wav(path, clip, dtype="int16")
    out = load_audio(path, target_rate=16000)
    assert np.abs(out.samples - clip.samples).max() < 1e-3


def test_float32_roundtrip_bit_faithful(tmp_path, sine_clip):
    clip = sine_clip()
    path = tmp_path / "s.wav"
    write_wav(path, clip, dtype="float32")
    out = load_audio(path, target_rate=16000)
    np.testing.assert_array_equal(out.samples, clip.samples.astype(np.float32).astype(np.float64))


def test_load_audio_bytes_matches_file(tmp_path, sine_clip):
    clip = sine_clip()
    payload = wav_bytes(clip, dtype="float32")
    out = load_audio_bytes(payload, target_rate=16000)
    path = tmp_path / "s.wav"
    write_wav(path, clip, dtype="float32")
    np.testing.assert_array_equal(out.samples, load_audio(path, target_rate=16000).samples)


def test_unreadable_and_zero_length_errors(tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"not a wav at all")
    with pytest.raises(ValueError):
        load_audio(bad, target_rate=16000)
    with pytest.raises(ValueError):
        load_audio(tmp_path / "missing.wav", target_rate=16000)


def test_conform_truncates_head_aligned():
    sr = 32000
    samples = np.arange(12 * sr, dtype=np.float64) / (12 * sr)
    clip = AudioClip(samples, sr)
    out = conform_length(clip, 10.0)
    assert len(out.samples) == 10 * sr
    np.testing.assert_array_equal(out.samples, samples[: 10 * sr])


def test_conform_identity_when_exact(sine_clip):
    clip = sine_clip(sr=32000, seconds=10.0)
    out = conform_length(clip, 10.0)
    np.testing.assert_array_equal(out.samples, clip.samples)


def test_conform_pads_tail_with_zeros():
    sr = 32000
    clip = AudioClip(np.ones(3 * sr), sr)
    out = conform_length(clip, 10.0)
    assert len(out.samples) == 320000
    np.testing.assert_array_equal(out.samples[:96000], np.ones(96000))
    np.testing.assert_array_equal(out.samples[96000:], np.zeros(224000))


def test_conform_idempotent(sine_clip):
    clip = sine_clip(seconds=0.7)
    once = conform_length(clip, 2.0)
    twice = conform_length(once, 2.0)
    np.testing.assert_array_equal(once.samples, twice.samples)


def test_truncation_never_gains_energy(sine_clip):
    clip = sine_clip(seconds=3.0)
    out = conform_length(clip, 1.0)
    assert np.sum(out.samples ** 2) <= np.sum(clip.samples ** 2)


def test_clip_validation():
    with pytest.raises(ValueError):
        AudioClip(np.array([np.nan]), 16000)
    with pytest.raises(ValueError):
        AudioClip(np.zeros(4), 0)
