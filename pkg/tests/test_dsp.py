import unittest

import numpy as np
from scipy import signal

from assrbci.dsp import (
    DspConfig,
    FeatureVector,
    FilterKind,
    FilterSpec,
    acquisition_gain,
    analytic,
    channel_pairs,
    design_taps,
    effective_samples,
    feature_vector,
    n_channels_for,
    narrowband,
    noise_floor_plv,
    numtaps_for,
    phase_diff,
    plv,
    preprocess_raw,
    trim_edges,
    zero_phase_filter,
)
from assrbci.eegsim import SimConfig, simulate_epoch
from assrbci.epochs import Epoch
from assrbci.stimgen import Direction, StimulusKind

RATE = 512.0
# Long enough for the widest filter
FILTER_LENGTH = 1537
# 0.5, 1 and 3 s at 512 Hz
EPOCH_LENGTHS = (256, 512, 1536)


def make_epoch(data, f_m=40.0):
    return Epoch(
        data=np.atleast_2d(data),
        eeg_rate=RATE,
        f_m=f_m,
        direction=Direction.center,
        attended=True,
        kind=StimulusKind.sam,
        length=data.shape[-1] / RATE,
    )


def tones(*freqs, n=FILTER_LENGTH):
    t = np.arange(n) / RATE
    return np.array([np.sin(2 * np.pi * f * t) for f in freqs])


def rms(x):
    return np.sqrt(np.mean(np.square(x), axis=-1))


def gain(before, after):
    """RMS ratio over the middle half of the epoch"""
    n = before.shape[-1]
    middle = slice(n // 4, n - n // 4)
    return np.sqrt(np.mean(after[..., middle] ** 2, axis=-1)) / np.sqrt(
        np.mean(before[..., middle] ** 2, axis=-1)
    )


def direct_phases(data, f_m, dft):
    """Trimmed instantaneous phases of the narrow band, step by step"""
    n = data.shape[-1]
    numtaps = numtaps_for(n)
    pad = 3 * numtaps
    taps = signal.firwin(
        numtaps, [f_m - 2, f_m + 2], pass_zero=False, window="hamming", fs=RATE
    )
    weights = np.zeros(n)
    weights[0] = weights[n // 2] = 1.0
    weights[1 : n // 2] = 2.0
    k = int(np.floor(0.1 * n))
    phases = []
    for row in data:
        head = 2 * row[0] - row[pad:0:-1]
        tail = 2 * row[-1] - row[-2 : -pad - 2 : -1]
        ext = np.concatenate([head, row, tail])
        forward = np.convolve(ext, taps)[: ext.size]
        backward = np.convolve(forward[::-1], taps)[: ext.size][::-1]
        filtered = backward[pad : pad + n]
        z = ((filtered @ dft) * weights) @ dft.conj() / n
        phases.append(np.arctan2(z.imag, z.real)[k : n - k])
    return np.array(phases)


class TestFilterDesign(unittest.TestCase):
    def test_numtaps(self):
        """check filter lengths follow the epoch length"""
        self.assertEqual(numtaps_for(1536), 511)
        self.assertEqual(numtaps_for(1537), 511)
        self.assertEqual(numtaps_for(512), 169)
        self.assertEqual(numtaps_for(256), 85)
        self.assertEqual(numtaps_for(94), 31)
        self.assertEqual(numtaps_for(1536, max_numtaps=101), 101)
        with self.assertRaises(ValueError):
            numtaps_for(93)

    def test_filter_spec(self):
        """check filter edges must fit below Nyquist"""
        FilterSpec(5, 100, FilterKind.bandpass, RATE)
        for lo, hi in ((0, 10), (10, 5), (200, 256), (-1, 2)):
            with self.subTest(lo=lo, hi=hi):
                with self.assertRaises(ValueError):
                    FilterSpec(lo, hi, FilterKind.bandpass, RATE)

    def test_dsp_config(self):
        """check invalid extraction settings are rejected"""
        cases = [
            dict(half_width=0),
            dict(edge_trim=0.5),
            dict(edge_trim=-0.1),
            dict(n=0),
            dict(m=0),
            dict(max_numtaps=30),
            dict(max_numtaps=32),
        ]
        for kwargs in cases:
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(ValueError):
                    DspConfig(**kwargs)

    def test_matches_filtfilt(self):
        """check the zero-phase filter equals forward-backward filtering"""
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 700))
        taps = design_taps((38.0, 42.0), RATE, numtaps_for(700))
        expected = signal.filtfilt(
            taps, 1.0, x, axis=-1, padtype="odd", padlen=3 * len(taps)
        )
        np.testing.assert_allclose(zero_phase_filter(x, taps), expected, atol=1e-10)

    def test_too_short(self):
        """check signals shorter than the padding are rejected"""
        taps = design_taps((38.0, 42.0), RATE, 31)
        with self.assertRaises(ValueError):
            zero_phase_filter(np.zeros((2, 93)), taps)


class TestFilters(unittest.TestCase):
    def test_preprocess_passband(self):
        """check the acquisition band keeps 25, 40 and 60 Hz within 1 dB"""
        for n in EPOCH_LENGTHS:
            with self.subTest(n=n):
                x = tones(25, 40, 60, n=n)
                y = preprocess_raw(make_epoch(x)).data
                np.testing.assert_allclose(20 * np.log10(gain(x, y)), 0.0, atol=1.0)

    def test_preprocess_line_noise(self):
        """check 50 Hz loses at least 40 dB at every stimulus length"""
        for n in EPOCH_LENGTHS:
            with self.subTest(n=n):
                x = tones(50, 50, n=n)
                y = preprocess_raw(make_epoch(x)).data
                self.assertTrue(np.all(rms(y) <= 0.01 * rms(x)), rms(y) / rms(x))

    def test_preprocess_stopbands(self):
        """check the acquisition filter removes drift and high frequencies"""
        for n in EPOCH_LENGTHS:
            with self.subTest(n=n):
                x = tones(2, 150, n=n)
                y = preprocess_raw(make_epoch(x)).data
                self.assertTrue(np.all(rms(y) <= 0.01 * rms(x)), rms(y) / rms(x))

    def test_preprocess_zero(self):
        """check silence stays silent"""
        y = preprocess_raw(make_epoch(np.zeros((3, 256)))).data
        np.testing.assert_array_equal(y, np.zeros((3, 256)))

    def test_preprocess_short_epoch(self):
        """check epochs too short to resolve the notch are rejected"""
        with self.assertRaisesRegex(ValueError, "at least 256 samples"):
            preprocess_raw(make_epoch(tones(40, 40, n=255)))
        gains = acquisition_gain(256, RATE)
        self.assertEqual(gains.shape, (129,))
        self.assertLess(gains[25], 1e-4)

    def test_narrowband(self):
        """check only the modulation band survives"""
        x = tones(40, 25, 60, 36, 45)
        y = narrowband(make_epoch(x, f_m=40.0)).data
        g = gain(x, y)
        self.assertAlmostEqual(g[0], 1.0, delta=0.05)
        self.assertTrue(np.all(g[1:] < 0.05), g)

    def test_zero_phase(self):
        """check filtering does not shift the in-band tone"""
        x = tones(40, 40)
        y = narrowband(make_epoch(x)).data
        middle = slice(400, FILTER_LENGTH - 400)
        np.testing.assert_allclose(y[0, middle], x[0, middle], atol=0.05)

    def test_explicit_frequency(self):
        """check narrowband can be centred away from the epoch's own f_m"""
        x = tones(25, 40)
        y = narrowband(make_epoch(x, f_m=40.0), f_m=25.0).data
        g = gain(x, y)
        self.assertAlmostEqual(g[0], 1.0, delta=0.05)
        self.assertLess(g[1], 0.05)

    def test_band_outside_nyquist(self):
        """check bands that do not fit are rejected"""
        x = tones(40, 40)
        for f_m in (1.0, 255.0):
            with self.subTest(f_m=f_m):
                with self.assertRaises(ValueError):
                    narrowband(make_epoch(x), f_m=f_m)

    def test_short_epoch(self):
        """check epochs too short for the filter are rejected"""
        with self.assertRaises(ValueError):
            narrowband(make_epoch(tones(40, 40, n=64)))


class TestAnalytic(unittest.TestCase):
    def test_tone(self):
        """check the analytic signal of a cosine is a unit phasor"""
        t = np.arange(512) / RATE
        series = analytic(np.cos(2 * np.pi * 40 * t))
        np.testing.assert_allclose(series.real, np.cos(2 * np.pi * 40 * t), atol=1e-9)
        np.testing.assert_allclose(series.imag, np.sin(2 * np.pi * 40 * t), atol=1e-9)
        np.testing.assert_allclose(series.magnitude, 1.0, atol=1e-9)
        self.assertFalse(series.degenerate)

    def test_phase_convention(self):
        """check phase is atan2 and zero where the signal vanishes"""
        series = analytic(np.zeros((2, 16)))
        self.assertTrue(series.degenerate)
        np.testing.assert_array_equal(series.phase, np.zeros((2, 16)))
        t = np.arange(512) / RATE
        phase = analytic(np.cos(2 * np.pi * 8 * t)).phase
        self.assertTrue(np.all(np.abs(phase) <= np.pi))
        self.assertAlmostEqual(phase[0], 0.0, places=9)

    def test_invalid(self):
        """check short or non-finite input is rejected"""
        with self.assertRaises(ValueError):
            analytic(np.ones(7))
        with self.assertRaises(ValueError):
            analytic(np.array([0.0, 1.0, np.nan, 0, 0, 0, 0, 0]))


class TestPlv(unittest.TestCase):
    def test_constant_difference(self):
        """check a constant phase difference locks perfectly"""
        self.assertAlmostEqual(plv(np.full(100, 0.7)), 1.0, places=12)
        self.assertLessEqual(plv(np.full(1000, 2.3)), 1.0)

    def test_uniform_difference(self):
        """check evenly spread differences do not lock"""
        delta = 2 * np.pi * np.arange(64) / 64
        self.assertAlmostEqual(plv(delta), 0.0, places=12)

    def test_known_value(self):
        """check two opposite-weighted phases"""
        self.assertAlmostEqual(plv([0.0, 0.0, 0.0, np.pi]), 0.5, places=12)

    def test_offset_invariance(self):
        """check adding a constant to every phase leaves PLV unchanged"""
        rng = np.random.default_rng(1)
        delta = rng.normal(0, 0.5, 200)
        self.assertAlmostEqual(plv(delta), plv(delta + 1.234), places=12)
        self.assertAlmostEqual(plv(delta), plv(-delta), places=12)

    def test_random_phases(self):
        """check independent phases give a Rayleigh-small PLV"""
        rng = np.random.default_rng(2)
        n = 2000
        value = plv(rng.uniform(-np.pi, np.pi, n))
        # N * PLV^2 is exponentially distributed with unit mean.
        self.assertLess(n * value ** 2, 10.0)

    def test_alternation(self):
        """check alternating 0 and pi cancels exactly"""
        self.assertAlmostEqual(plv(np.tile([0.0, np.pi], 512)), 0.0, delta=1e-12)

    def test_rayleigh_mean(self):
        """check the mean PLV of uniform phases is sqrt(pi / 4L)"""
        rng = np.random.default_rng(3)
        draws = rng.uniform(0, 2 * np.pi, (1000, 1024))
        mean = np.mean([plv(delta) for delta in draws])
        expected = np.sqrt(np.pi / 4096)
        self.assertAlmostEqual(mean, expected, delta=0.1 * expected)

    def test_circular_shift_invariance(self):
        """check shifting both channels of a pair leaves their PLV unchanged"""
        # 40 and 44 Hz make whole cycles in 1536 samples; the phase difference
        # repeats every 128 samples and the trimmed window holds 10 repeats.
        t = np.arange(1536) / RATE
        x = np.array(
            [
                np.sin(2 * np.pi * 40 * t),
                np.sin(2 * np.pi * 40 * t + 0.6) + 0.5 * np.sin(2 * np.pi * 44 * t),
            ]
        )

        def pair_plv(data):
            phases = trim_edges(analytic(data).phase, 0.0835)
            self.assertEqual(phases.shape[-1], 1280)
            return plv(phase_diff(phases[0], phases[1]))

        base = pair_plv(x)
        self.assertLess(base, 0.999)
        for shift in (1, 37, 500):
            with self.subTest(shift=shift):
                shifted = np.roll(x, shift, axis=-1)
                self.assertAlmostEqual(pair_plv(shifted), base, delta=1e-6)

    def test_empty(self):
        """check an empty phase series is rejected"""
        with self.assertRaises(ValueError):
            plv(np.array([]))

    def test_phase_diff(self):
        """check n:m phase differences"""
        a = np.array([0.1, 0.2, 0.3])
        b = np.array([0.3, 0.2, 0.1])
        np.testing.assert_allclose(phase_diff(a, b), a - b)
        np.testing.assert_allclose(phase_diff(a, b, n=2, m=3), 2 * a - 3 * b)
        with self.assertRaises(ValueError):
            phase_diff(a, b[:2])

    def test_trim_edges(self):
        """check floor(fraction * L) samples go from each end"""
        x = np.arange(20).reshape(2, 10)
        np.testing.assert_array_equal(trim_edges(x, 0.1), x[:, 1:9])
        np.testing.assert_array_equal(trim_edges(x, 0.19), x[:, 1:9])
        np.testing.assert_array_equal(trim_edges(x, 0.0), x)


class TestFeatureVector(unittest.TestCase):
    def test_pairs(self):
        """check pair order and counts"""
        pairs = channel_pairs(16)
        self.assertEqual(len(pairs), 120)
        self.assertEqual(pairs[:3], ((1, 2), (1, 3), (1, 4)))
        self.assertEqual(pairs[-1], (15, 16))
        self.assertEqual(n_channels_for(120), 16)
        self.assertEqual(n_channels_for(1), 2)
        with self.assertRaises(ValueError):
            n_channels_for(7)

    def test_noiseless_epoch_locks(self):
        """check a response without 1/f noise gives PLVs near one"""
        cfg = SimConfig(noise_level=0)
        for length in (0.5, 3):
            for f_m in (25, 40, 60):
                epoch = simulate_epoch(cfg, f_m, length, True, seed=0)
                vector = feature_vector(epoch)
                self.assertEqual(len(vector), 120)
                self.assertTrue(
                    np.all(vector.values >= 0.999), (length, vector.values.min())
                )
                self.assertTrue(np.all(vector.values <= 1.0))

    def test_sensor_floor_separates_attention(self):
        """check the sensor floor is what tells noiseless responses apart"""
        silent = SimConfig(noise_level=0, sensor_noise=0)
        attended = feature_vector(simulate_epoch(silent, 40, 1, True, seed=2))
        ignored = feature_vector(simulate_epoch(silent, 40, 1, False, seed=2))
        np.testing.assert_allclose(attended.values, ignored.values, atol=1e-9)

        cfg = SimConfig(noise_level=0)
        attended = feature_vector(simulate_epoch(cfg, 40, 1, True, seed=2))
        ignored = feature_vector(simulate_epoch(cfg, 40, 1, False, seed=2))
        self.assertGreater(attended.values.mean(), ignored.values.mean())

    def test_labels(self):
        """check feature vectors carry the epoch labels"""
        epoch = simulate_epoch(
            SimConfig(n_channels=4),
            25,
            1,
            False,
            seed=3,
            direction=Direction.left,
            kind=StimulusKind.clicks,
            trial=8,
        )
        vector = feature_vector(epoch)
        self.assertEqual(vector.pairs, channel_pairs(4))
        self.assertEqual(vector.direction, Direction.left)
        self.assertFalse(vector.attended)
        self.assertEqual(vector.condition, (StimulusKind.clicks, 1.0))
        self.assertEqual(vector.trial, 8)
        self.assertEqual(vector.f_m, 25)

    def test_matches_reference_pipeline(self):
        """check PLVs against filtfilt, Hilbert and trimming done by hand"""
        epoch = simulate_epoch(SimConfig(n_channels=5), 60, 1, True, seed=4)
        vector = feature_vector(epoch)

        n = epoch.n_samples
        numtaps = numtaps_for(n)
        taps = signal.firwin(
            numtaps, [58, 62], pass_zero=False, window="hamming", fs=RATE
        )
        filtered = signal.filtfilt(
            taps, 1.0, epoch.data.astype(np.float64), padlen=3 * numtaps
        )
        phases = np.angle(signal.hilbert(filtered))
        k = int(0.1 * n)
        phases = phases[:, k : n - k]
        expected = [
            np.abs(np.mean(np.exp(1j * (phases[a - 1] - phases[b - 1]))))
            for a, b in channel_pairs(5)
        ]
        np.testing.assert_allclose(vector.values, expected, atol=1e-8)

    def test_matches_direct_computation(self):
        """check 3 s PLVs against convolution, DFT and arctan written out"""
        n = 1536
        dft = np.exp(-2j * np.pi * (np.outer(np.arange(n), np.arange(n)) % n) / n)
        for seed in range(20):
            f_m = (25, 40, 60)[seed % 3]
            epoch = simulate_epoch(SimConfig(), f_m, 3, seed % 2 == 0, seed=seed)
            self.assertEqual(epoch.data.shape, (16, n))
            vector = feature_vector(epoch)
            phases = direct_phases(epoch.data.astype(np.float64), f_m, dft)
            expected = []
            for a, b in channel_pairs(16):
                delta = phases[a - 1] - phases[b - 1]
                total = np.sum(np.cos(delta)) ** 2 + np.sum(np.sin(delta)) ** 2
                expected.append(np.sqrt(total) / delta.size)
            np.testing.assert_allclose(vector.values, expected, atol=1e-9)

    def test_attention_contrast(self):
        """check attended epochs lock more than ignored ones on average"""
        cfg = SimConfig()
        attended, ignored = [], []
        for seed in range(30):
            epoch = simulate_epoch(cfg, 40, 3, True, seed=seed)
            attended.append(feature_vector(epoch).values.mean())
            epoch = simulate_epoch(cfg, 40, 3, False, seed=seed)
            ignored.append(feature_vector(epoch).values.mean())
        self.assertGreater(np.mean(attended), np.mean(ignored))

    def test_snr_monotonic(self):
        """check mean PLV grows with the response amplitude"""
        means = []
        for amplitude in (0.0, 2.0, 4.0, 8.0):
            cfg = SimConfig(n_channels=4, assr_amplitude=amplitude)
            values = [
                feature_vector(simulate_epoch(cfg, 40, 1, True, seed=s)).values
                for s in range(10)
            ]
            means.append(np.mean(values))
        self.assertTrue(np.all(np.diff(means) > 0), means)

    def test_noise_floor(self):
        """check noise-only PLVs average near sqrt(pi / (4 * L_eff))"""
        cfg = SimConfig(n_channels=2, assr_amplitude=0.0)
        values = [
            feature_vector(simulate_epoch(cfg, 40, 3, False, seed=s)).values[0]
            for s in range(1000)
        ]
        self.assertAlmostEqual(effective_samples(1536, RATE), 4 * 1230 / RATE)
        expected = noise_floor_plv(1536, RATE)
        self.assertAlmostEqual(expected, np.sqrt(np.pi * RATE / (16 * 1230)))
        self.assertLess(abs(np.mean(values) - expected), 0.2 * expected)
        # Raw sample count would put the floor near 0.025
        self.assertGreater(np.mean(values), 4 * np.sqrt(np.pi / (4 * 1230)))

    def test_amplitude_invariance(self):
        """check scaling an epoch leaves its PLVs unchanged"""
        epoch = simulate_epoch(SimConfig(n_channels=4), 40, 1, True, seed=6)
        scaled = epoch.with_data(epoch.data.astype(np.float64) * 3.0)
        np.testing.assert_allclose(
            feature_vector(epoch).values, feature_vector(scaled).values, atol=1e-9
        )

    def test_time_shift_invariance(self):
        """check a common phase lag on every channel leaves PLVs unchanged"""
        base = SimConfig(n_channels=4, noise_level=0, sensor_noise=0)
        shifted = SimConfig(
            n_channels=4,
            noise_level=0,
            sensor_noise=0,
            channel_phase_lags=(1.0, 1.1, 1.2, 1.3),
        )
        a = feature_vector(simulate_epoch(base, 40, 1, True, seed=0))
        b = feature_vector(simulate_epoch(shifted, 40, 1, True, seed=0))
        np.testing.assert_allclose(a.values, b.values, atol=1e-3)

    def test_synchrony_ratio(self):
        """check n:m settings change the phase difference"""
        epoch = simulate_epoch(
            SimConfig(n_channels=3, noise_level=0), 40, 1, True, seed=0
        )
        locked = feature_vector(epoch, config=DspConfig(n=2, m=2))
        self.assertTrue(np.all(locked.values > 0.99))
        unlocked = feature_vector(epoch, config=DspConfig(n=1, m=2))
        self.assertTrue(np.all(unlocked.values < 0.5), unlocked.values)

    def test_explicit_vector(self):
        """check hand-built feature vectors derive their pairs"""
        vector = FeatureVector(
            np.zeros(6), 40.0, Direction.right, True, StimulusKind.fam, 3, 1
        )
        self.assertEqual(vector.pairs, channel_pairs(4))
        self.assertEqual(vector.length, 3.0)
        with self.assertRaises(ValueError):
            FeatureVector(
                np.zeros(5), 40.0, Direction.right, True, StimulusKind.fam, 3, 1
            )
