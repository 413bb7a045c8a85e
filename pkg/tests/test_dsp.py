import numpy as np
import pytest

from qbv.audio_io import AudioClip
from qbv.dsp import (CqtConfig, LogMelConfig, Spectrogram, baseline_similarity,
                     cosine, cqt, log_mel, mel_center_frequencies, two_dft,
                     twodft_feature)
from qbv.exceptions import DegenerateInputError

MEL_CFG = LogMelConfig(window=512, hop=256, n_mels=40, f_min=0.0, f_max=4000.0)
CQT_CFG = CqtConfig(f_min=55.0, bins_per_octave=12, n_octaves=6, hop=200)


def make_clip(samples, sr=8000, clip_id="c"):
    return AudioClip(np.asarray(samples, dtype=np.float64), sr, id=clip_id)


# --- log_mel -----------------------------------------------------------------

def test_logmel_zero_clip_is_log_offset():
    clip = make_clip(np.zeros(8000))
    spec = log_mel(clip, MEL_CFG)
    np.testing.assert_allclose(spec.values, np.log(MEL_CFG.log_offset))


def test_logmel_sine_peak_bin_matches_center_frequencies():
    sr = 8000
    t = np.arange(sr) / sr
    clip = make_clip(0.5 * np.sin(2 * np.pi * 1000.0 * t), sr)
    spec = log_mel(clip, MEL_CFG)
    centers = mel_center_frequencies(MEL_CFG)
    expected_bin = int(np.argmin(np.abs(centers - 1000.0)))
    peak_bins = spec.values.argmax(axis=0)
    assert np.all(np.abs(peak_bins - expected_bin) <= 1)


def test_logmel_frame_count_formula():
    sr = 32000
    clip = make_clip(np.zeros(10 * sr), sr)
    cfg = LogMelConfig(window=800, hop=320, n_mels=8, f_max=16000.0)
    spec = log_mel(clip, cfg)
    assert spec.n_frames == (10 * sr - 800) // 320 + 1 == 998


def test_logmel_monotone_in_amplitude():
    rng = np.random.default_rng(3)
    # keep 2.5x within [-1, 1] so both inputs are valid clips
    x = np.clip(0.2 * rng.standard_normal(8000), -0.39, 0.39)
    small = log_mel(make_clip(x), MEL_CFG)
    large = log_mel(make_clip(2.5 * x), MEL_CFG)
    assert np.all(large.values >= small.values - 1e-12)


def test_logmel_window_larger_than_clip_errors():
    with pytest.raises(ValueError):
        log_mel(make_clip(np.zeros(256)), MEL_CFG)


# --- cqt ---------------------------------------------------------------------

def test_cqt_zero_clip():
    spec = cqt(make_clip(np.zeros(8000)), CQT_CFG)
    assert spec.values.shape == (72, 40)
    np.testing.assert_allclose(spec.values, 0.0, atol=1e-12)


def test_cqt_bin_frequencies_closed_form():
    freqs = CQT_CFG.bin_frequencies()
    k = np.arange(72)
    np.testing.assert_allclose(freqs, 55.0 * 2.0 ** (k / 12.0))


def test_cqt_sine_peak_bin():
    sr = 8000
    t = np.arange(sr) / sr
    spec = cqt(make_clip(0.5 * np.sin(2 * np.pi * 440.0 * t), sr), CQT_CFG)
    freqs = CQT_CFG.bin_frequencies()
    expected = int(np.argmin(np.abs(freqs - 440.0)))
    assert np.all(spec.values.argmax(axis=0) == expected)


def test_cqt_octave_up_moves_peak_by_bins_per_octave():
    sr = 8000
    t = np.arange(sr) / sr
    lo = cqt(make_clip(0.5 * np.sin(2 * np.pi * 440.0 * t), sr), CQT_CFG)
    hi = cqt(make_clip(0.5 * np.sin(2 * np.pi * 880.0 * t), sr), CQT_CFG)
    lo_bin = int(np.bincount(lo.values.argmax(axis=0)).argmax())
    hi_bin = int(np.bincount(hi.values.argmax(axis=0)).argmax())
    assert hi_bin - lo_bin == CQT_CFG.bins_per_octave


def test_cqt_matches_direct_windowed_sum():
    # oracle: direct evaluation of the circular windowed kernel dot product
    rng = np.random.default_rng(7)
    sr = 2000
    n = 2000
    x = 0.3 * rng.standard_normal(n)
    cfg = CqtConfig(f_min=110.0, bins_per_octave=4, n_octaves=3, hop=250)
    spec = cqt(make_clip(x, sr), cfg)

    q = cfg.q_factor
    for k, fk in enumerate(cfg.bin_frequencies()):
        nk = int(np.ceil(q * sr / fk))
        win = 0.5 * (1.0 - np.cos(2 * np.pi * np.arange(nk) / nk))
        kern = win * np.exp(2j * np.pi * fk * np.arange(nk) / sr) / win.sum()
        for t in range(spec.n_frames):
            idx = (t * cfg.hop + np.arange(nk)) % n
            direct = abs(np.dot(x[idx], np.conj(kern)))
            assert abs(direct - spec.values[k, t]) < 1e-9


def test_cqt_range_exceeding_nyquist_errors():
    with pytest.raises(ValueError):
        cqt(make_clip(np.zeros(8000)), CqtConfig(f_min=55.0, n_octaves=8, hop=200))


# --- two_dft -----------------------------------------------------------------

def rand_spec(rng, rows=4, cols=4):
    return Spectrogram(values=rng.random((rows, cols)), bin_frequencies=np.arange(rows),
                       frame_hop=1, kind="cqt_magnitude")


def test_two_dft_matches_brute_force_double_sum():
    # oracle: O(n^4) direct summation of the 2-D DFT definition
    rng = np.random.default_rng(11)
    spec = rand_spec(rng)
    x = spec.values
    rows, cols = x.shape
    brute = np.zeros((rows, cols), dtype=complex)
    for u in range(rows):
        for v in range(cols):
            for m in range(rows):
                for n in range(cols):
                    brute[u, v] += x[m, n] * np.exp(-2j * np.pi * (u * m / rows + v * n / cols))
    np.testing.assert_allclose(two_dft(spec).values, np.abs(brute).ravel(), atol=1e-9)


def test_two_dft_invariant_to_circular_shifts():
    rng = np.random.default_rng(12)
    spec = rand_spec(rng, rows=6, cols=10)
    shifted = Spectrogram(values=np.roll(np.roll(spec.values, 7, axis=1), 2, axis=0),
                          bin_frequencies=spec.bin_frequencies, frame_hop=1,
                          kind="cqt_magnitude")
    a, b = two_dft(spec).values, two_dft(shifted).values
    assert np.abs(a - b).max() / np.abs(a).max() < 1e-9


def test_two_dft_constant_input_all_energy_in_dc():
    c = 0.37
    spec = Spectrogram(values=np.full((5, 8), c), bin_frequencies=np.arange(5),
                       frame_hop=1, kind="cqt_magnitude")
    mag = two_dft(spec).values.reshape(5, 8)
    assert abs(mag[0, 0] - c * 5 * 8) < 1e-9
    rest = mag.copy()
    rest[0, 0] = 0.0
    assert np.abs(rest).max() < 1e-9


def test_two_dft_parseval():
    rng = np.random.default_rng(13)
    spec = rand_spec(rng, rows=9, cols=17)
    energy_in = np.sum(spec.values ** 2)
    energy_out = np.sum(two_dft(spec).values ** 2)
    assert abs(energy_out - 9 * 17 * energy_in) / (9 * 17 * energy_in) < 1e-6


def test_two_dft_empty_errors():
    with pytest.raises(ValueError):
        two_dft(Spectrogram(values=np.zeros((0, 4)), bin_frequencies=np.zeros(0),
                            frame_hop=1, kind="cqt_magnitude"))


# --- baseline_similarity -----------------------------------------------------

def noise_clip(seed, sr=8000, seconds=1.0):
    rng = np.random.default_rng(seed)
    return make_clip(0.4 * rng.standard_normal(int(sr * seconds)), sr, clip_id=f"n{seed}")


def test_identical_clips_similarity_one():
    clip = noise_clip(0)
    assert abs(baseline_similarity(clip, clip, CQT_CFG) - 1.0) < 1e-9


def test_hop_multiple_circular_shift_similarity_one():
    clip = noise_clip(1)
    shifted = make_clip(np.roll(clip.samples, 20 * CQT_CFG.hop), clip.sample_rate, "sh")
    assert baseline_similarity(clip, shifted, CQT_CFG) >= 1.0 - 1e-6


def test_half_second_shift_similarity_one():
    # 0.5 s at 8 kHz = 4000 samples = 20 hops of 200
    clip = noise_clip(2)
    shifted = make_clip(np.roll(clip.samples, 4000), clip.sample_rate, "sh")
    assert baseline_similarity(clip, shifted, CQT_CFG) >= 1.0 - 1e-6


def test_zero_clip_degenerate():
    clip = noise_clip(3)
    zero = make_clip(np.zeros(8000))
    with pytest.raises(DegenerateInputError):
        baseline_similarity(zero, clip, CQT_CFG)


def test_similarity_symmetric():
    a, b = noise_clip(4), noise_clip(5)
    assert abs(baseline_similarity(a, b, CQT_CFG) - baseline_similarity(b, a, CQT_CFG)) < 1e-12


def test_cosine_zero_norm():
    with pytest.raises(DegenerateInputError):
        cosine(np.zeros(4), np.ones(4))


def test_twodft_feature_log_compression_flag():
    clip = noise_clip(6)
    with_log = twodft_feature(clip, CQT_CFG)
    without = twodft_feature(clip, CqtConfig(f_min=55.0, bins_per_octave=12,
                                             n_octaves=6, hop=200, log_compress=False))
    assert with_log.values.shape == without.values.shape
    assert not np.allclose(with_log.values, without.values)
