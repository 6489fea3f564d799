"""
This module turns epochs into phase locking value (PLV) feature vectors.

The pipeline for one epoch is:

  1. optional acquisition filtering: 5-100 Hz band-pass with a 48-52 Hz
     notch (:func:`preprocess_raw`);
  2. a band-pass of +/- 2 Hz around the modulation frequency
     (:func:`narrowband`);
  3. the analytic signal of every channel (:func:`analytic`);
  4. edge trimming, then the PLV of the phase difference of every channel
     pair (:func:`phase_diff`, :func:`plv`).

The band-pass around ``f_m`` is a linear-phase FIR design (Hamming window)
applied forward and backward, so the net phase shift is zero. The number
of taps is the largest odd value not exceeding ``max_numtaps`` whose
three-fold padding still fits in the epoch, so short epochs get wider
transition bands.

The acquisition filters are IIR designs whose squared magnitude response is
applied to the DFT of the epoch. A 0.5 s epoch has no room for a FIR long
enough to resolve a 4 Hz wide notch.
"""

import enum
import functools
import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from assrbci.epochs import Epoch
from assrbci.mypy_types import ComplexArray, FloatArray
from assrbci.stimgen import Direction, StimulusKind

logger = logging.getLogger(__name__)

MIN_NUMTAPS = 31
MAX_NUMTAPS = 511
PAD_FACTOR = 3
WINDOW = "hamming"
DEGENERATE_MAGNITUDE = 1e-12
DEGENERATE_FRACTION = 0.01
MIN_ANALYTIC_LENGTH = 8


class FilterKind(enum.Enum):
    bandpass = "bandpass"
    notch = "notch"


@dataclass(frozen=True)
class FilterSpec:
    f_lo: float
    f_hi: float
    kind: FilterKind
    rate: float

    def __post_init__(self) -> None:
        if not 0 < self.f_lo < self.f_hi < self.rate / 2:
            raise ValueError(
                f"{self.kind.value} edges must satisfy 0 < {self.f_lo} < "
                f"{self.f_hi} < {self.rate / 2} (half the sampling rate)"
            )


ACQUISITION_BAND = (5.0, 100.0)
LINE_NOTCH = (48.0, 52.0)
ACQUISITION_ORDER = 4


@dataclass(frozen=True)
class DspConfig:
    """
    Feature extraction settings.

    :param preprocess: apply :func:`preprocess_raw` before extraction.

    :param half_width: half width in Hz of the band around ``f_m``.

    :param edge_trim: fraction of samples dropped at each end of the
      analytic signal before the PLV is taken.

    :param n: synchrony ratio applied to the first channel of a pair.

    :param m: synchrony ratio applied to the second channel of a pair.

    :param max_numtaps: upper bound on the FIR length.
    """

    preprocess: bool = True
    half_width: float = 2.0
    edge_trim: float = 0.1
    n: int = 1
    m: int = 1
    max_numtaps: int = MAX_NUMTAPS

    def __post_init__(self) -> None:
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if not 0 <= self.edge_trim < 0.5:
            raise ValueError(f"edge_trim must be in [0, 0.5), got {self.edge_trim}")
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive integers")
        if self.max_numtaps < MIN_NUMTAPS or self.max_numtaps % 2 == 0:
            raise ValueError(
                f"max_numtaps must be odd and >= {MIN_NUMTAPS}, got {self.max_numtaps}"
            )


@dataclass(frozen=True)
class AnalyticSeries:
    """
    Analytic signal of one or more channels (last axis is time).

    ``phase`` is ``atan2(imag, real)``, which is 0 wherever the magnitude is
    0. ``degenerate`` is set when more than 1% of the samples have a
    magnitude below 1e-12, i.e. when much of the phase is only a convention.
    """

    values: ComplexArray
    degenerate: bool = False

    @property
    def real(self) -> FloatArray:
        return self.values.real

    @property
    def imag(self) -> FloatArray:
        return self.values.imag

    @property
    def phase(self) -> FloatArray:
        return np.arctan2(self.values.imag, self.values.real)

    @property
    def magnitude(self) -> FloatArray:
        return np.abs(self.values)


@dataclass(frozen=True)
class FeatureVector:
    """Pairwise PLVs of one epoch, ordered (1,2), (1,3), ..., (15,16), plus
    the labels of the epoch they came from."""

    values: FloatArray
    f_m: float
    direction: Direction
    attended: bool
    kind: StimulusKind
    length: float
    trial: int
    pairs: Tuple[Tuple[int, int], ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("Feature values must be one dimensional")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "length", float(self.length))
        if not self.pairs:
            pairs = channel_pairs(n_channels_for(values.size))
            object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return self.values.size

    @property
    def condition(self) -> Tuple[StimulusKind, float]:
        return (self.kind, self.length)


def channel_pairs(n_channels: int) -> Tuple[Tuple[int, int], ...]:
    """1-based channel pairs in feature order"""
    return tuple(itertools.combinations(range(1, n_channels + 1), 2))


def n_channels_for(n_features: int) -> int:
    """Invert C(n, 2) = n_features"""
    n = int(round((1 + np.sqrt(1 + 8 * n_features)) / 2))
    if n * (n - 1) // 2 != n_features:
        raise ValueError(f"{n_features} is not a pair count C(n, 2)")
    return n


@functools.lru_cache(maxsize=64)
def numtaps_for(n_samples: int, max_numtaps: int = MAX_NUMTAPS) -> int:
    """FIR length used for an epoch of ``n_samples``.

    :raises: ValueError if the epoch cannot hold the shortest filter.
    """
    n = min(max_numtaps, (n_samples - 1) // PAD_FACTOR)
    if n % 2 == 0:
        n -= 1
    if n < MIN_NUMTAPS:
        raise ValueError(
            f"Epoch of {n_samples} samples is too short to filter: at least "
            f"{PAD_FACTOR * MIN_NUMTAPS + 1} samples are required"
        )
    return n


@functools.lru_cache(maxsize=64)
def design_taps(edges: Tuple[float, ...], rate: float, numtaps: int) -> FloatArray:
    """Band-pass FIR passing the bands between successive edge pairs"""
    return signal.firwin(numtaps, list(edges), pass_zero=False, window=WINDOW, fs=rate)


def zero_phase_filter(x: np.ndarray, taps: FloatArray) -> FloatArray:
    """Apply ``taps`` forward and backward along the last axis.

    The input is extended at both ends by odd reflection of
    ``3 * len(taps)`` samples, so inside the epoch the result equals
    ``scipy.signal.filtfilt(taps, 1.0, x)``. The two passes are folded into
    one FFT convolution with the autocorrelation of the taps.
    """
    pad = PAD_FACTOR * len(taps)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] <= pad:
        raise ValueError(
            f"Signal of {x.shape[-1]} samples is too short for {len(taps)} taps"
        )
    widths = [(0, 0)] * (x.ndim - 1) + [(pad, pad)]
    padded = np.pad(x, widths, mode="reflect", reflect_type="odd")
    kernel = np.convolve(taps, taps[::-1])
    kernel = kernel.reshape((1,) * (x.ndim - 1) + (-1,))
    y = signal.fftconvolve(padded, kernel, mode="same", axes=-1)
    return y[..., pad:-pad]


def _filter_epoch(
    epoch: Epoch, specs: Sequence[FilterSpec], config: DspConfig
) -> Epoch:
    edges = []  # type: list
    for spec in specs:
        edges.extend((spec.f_lo, spec.f_hi))
    edges = sorted(edges)
    numtaps = numtaps_for(epoch.n_samples, config.max_numtaps)
    taps = design_taps(tuple(edges), float(epoch.eeg_rate), numtaps)
    logger.debug(f"filtering {epoch.n_samples} samples, edges {edges}, {numtaps} taps")
    return epoch.with_data(zero_phase_filter(epoch.data, taps))


@functools.lru_cache(maxsize=64)
def acquisition_gain(n_samples: int, rate: float) -> FloatArray:
    """Zero-phase gain of the acquisition filters at the ``rfft`` bins of an
    epoch of ``n_samples``.

    The band-pass is a 4th order Butterworth design and the notch a second
    order IIR notch centred on the line band with the band as its -3 dB
    width. Each contributes its squared magnitude response, which is what
    forward-backward filtering applies to a stationary input.

    :raises: ValueError if the bins are too coarse to resolve the notch.
    """
    band = FilterSpec(*ACQUISITION_BAND, FilterKind.bandpass, rate)
    notch = FilterSpec(*LINE_NOTCH, FilterKind.notch, rate)
    width = notch.f_hi - notch.f_lo
    min_samples = int(np.ceil(2 * rate / width))
    if n_samples < min_samples:
        raise ValueError(
            f"Epoch of {n_samples} samples is too short for the "
            f"{notch.f_lo:g}-{notch.f_hi:g} Hz notch: at least {min_samples} "
            "samples are required"
        )
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / rate)
    sos = signal.butter(
        ACQUISITION_ORDER,
        [band.f_lo, band.f_hi],
        btype="bandpass",
        output="sos",
        fs=rate,
    )
    _, h_band = signal.sosfreqz(sos, worN=freqs, fs=rate)
    centre = (notch.f_lo + notch.f_hi) / 2
    b, a = signal.iirnotch(centre, centre / width, fs=rate)
    _, h_notch = signal.freqz(b, a, worN=freqs, fs=rate)
    return np.abs(h_band * h_notch) ** 2


def preprocess_raw(epoch: Epoch) -> Epoch:
    """Acquisition filtering: 5-100 Hz band-pass with a 48-52 Hz notch.

    The gain of :func:`acquisition_gain` is applied to the DFT of every
    channel. The gain is real, so no phase shift is introduced, and the
    epoch is treated as one period of a periodic signal, so no padding or
    edge transient is involved.

    :raises: ValueError if the epoch is shorter than ``2 * eeg_rate / 4``
      samples (256 at 512 Hz) or the band does not fit below the Nyquist
      frequency.
    """
    n = epoch.n_samples
    gain = acquisition_gain(n, float(epoch.eeg_rate))
    logger.debug(f"acquisition filtering {n} samples")
    spectrum = np.fft.rfft(np.asarray(epoch.data, dtype=np.float64), axis=-1)
    return epoch.with_data(np.fft.irfft(spectrum * gain, n=n, axis=-1))


def narrowband(
    epoch: Epoch, f_m: Optional[float] = None, config: Optional[DspConfig] = None
) -> Epoch:
    """Band-pass ``[f_m - 2, f_m + 2]`` Hz, zero phase.

    :param f_m: centre frequency; defaults to the epoch's own ``f_m``.

    :raises: ValueError if the band does not fit in ``(0, eeg_rate / 2)``
      or the epoch is too short for the filter.
    """
    config = config or DspConfig()
    f_m = epoch.f_m if f_m is None else f_m
    band = FilterSpec(
        f_m - config.half_width,
        f_m + config.half_width,
        FilterKind.bandpass,
        epoch.eeg_rate,
    )
    return _filter_epoch(epoch, (band,), config)


def analytic(x: np.ndarray) -> AnalyticSeries:
    """Analytic signal along the last axis.

    The imaginary part is the Hilbert transform: negative frequencies are
    zeroed, positive ones doubled, then transformed back.

    :raises: ValueError if ``x`` is shorter than 8 samples or not finite.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < MIN_ANALYTIC_LENGTH:
        raise ValueError(
            f"analytic signal needs at least {MIN_ANALYTIC_LENGTH} samples, "
            f"got {x.shape[-1]}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("analytic signal input contains non-finite samples")
    values = signal.hilbert(x, axis=-1)
    small = np.abs(values) < DEGENERATE_MAGNITUDE
    return AnalyticSeries(values, degenerate=bool(small.mean() > DEGENERATE_FRACTION))


def phase_diff(
    theta_a: np.ndarray, theta_b: np.ndarray, n: int = 1, m: int = 1
) -> FloatArray:
    """n:m phase difference ``n * theta_a - m * theta_b``

    :raises: ValueError if the series lengths differ.
    """
    theta_a = np.asarray(theta_a, dtype=np.float64)
    theta_b = np.asarray(theta_b, dtype=np.float64)
    if theta_a.shape != theta_b.shape:
        raise ValueError(
            f"phase series lengths differ: {theta_a.shape} != {theta_b.shape}"
        )
    return n * theta_a - m * theta_b


def plv(delta: np.ndarray) -> float:
    """Phase locking value ``|mean(exp(i * delta))|``, in [0, 1]

    :raises: ValueError if ``delta`` is empty.
    """
    delta = np.asarray(delta, dtype=np.float64)
    if delta.size == 0:
        raise ValueError("plv of an empty phase series")
    value = float(np.abs(np.mean(np.exp(1j * delta))))
    return min(value, 1.0)


def trim_edges(x: np.ndarray, fraction: float) -> np.ndarray:
    """Drop ``floor(fraction * L)`` samples from both ends of the last axis"""
    k = int(np.floor(fraction * x.shape[-1]))
    return x[..., k : x.shape[-1] - k]


def feature_vector(
    epoch: Epoch, f_m: Optional[float] = None, config: Optional[DspConfig] = None
) -> FeatureVector:
    """PLV of every channel pair of an epoch at ``f_m``.

    ``preprocess_raw`` is not applied here; see
    :func:`assrbci.features.extract_features`.

    For epochs without a response the values scatter around
    :func:`noise_floor_plv`, which counts the trimmed window in independent
    samples of the narrow band (``L_eff``), not in raw samples.
    """
    config = config or DspConfig()
    f_m = epoch.f_m if f_m is None else f_m
    filtered = narrowband(epoch, f_m, config)
    series = analytic(filtered.data)
    if series.degenerate:
        logger.debug(f"trial {epoch.trial} {epoch.direction.value}: degenerate phase")
    phases = trim_edges(series.phase, config.edge_trim)
    if phases.shape[-1] == 0:
        raise ValueError("edge trimming leaves no samples")

    pairs = channel_pairs(epoch.n_channels)
    values = np.array(
        [
            plv(phase_diff(phases[a - 1], phases[b - 1], config.n, config.m))
            for a, b in pairs
        ]
    )
    return FeatureVector(
        values=values,
        f_m=f_m,
        direction=epoch.direction,
        attended=epoch.attended,
        kind=epoch.kind,
        length=epoch.length,
        trial=epoch.trial,
        pairs=pairs,
    )


def effective_samples(
    n_samples: int, eeg_rate: float, config: Optional[DspConfig] = None
) -> float:
    """Number of independent phase samples a PLV of noise averages over.

    Band-passing to ``2 * half_width`` Hz correlates the phase of
    neighbouring samples over about ``1 / (2 * half_width)`` s, so an
    analysis window of ``T`` seconds left after edge trimming holds
    ``L_eff = 2 * half_width * T`` independent samples rather than one per
    sample.
    """
    config = config or DspConfig()
    k = int(np.floor(config.edge_trim * n_samples))
    return 2 * config.half_width * (n_samples - 2 * k) / eeg_rate


def noise_floor_plv(
    n_samples: int, eeg_rate: float, config: Optional[DspConfig] = None
) -> float:
    """Expected PLV of a channel pair carrying independent noise only,
    ``sqrt(pi / (4 * L_eff))`` with ``L_eff`` from
    :func:`effective_samples`.

    The value is asymptotic in ``L_eff`` and assumes a rectangular band, so
    it is a guide to within about 20%, not an exact mean.
    """
    return float(np.sqrt(np.pi / (4 * effective_samples(n_samples, eeg_rate, config))))
