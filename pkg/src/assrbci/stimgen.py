"""
This module synthesizes the auditory steady-state response (ASSR) stimuli:
sinusoidal AM (SAM), flutter AM (FAM), periodic clicks and the alternating
carrier AM/FM tone. Waveforms can be routed to a spatial direction and
written to 16-bit PCM WAV files.

All synthesis functions are pure: the same :class:`StimulusSpec` always
yields bit-identical samples.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Union

import numpy as np
from scipy.io import wavfile

from assrbci.mypy_types import FloatArray

logger = logging.getLogger(__name__)

PCM_FULL_SCALE = 32767
DEFAULT_AUDIO_RATE = 44100
DEFAULT_CARRIER = 440.0
DEFAULT_CARRIERS = (440.0, 880.0)
NYQUIST_MARGIN = 4


class StimulusKind(enum.Enum):
    sam = "sam"
    fam = "fam"
    clicks = "clicks"
    amfm = "amfm"

    @property
    def title(self) -> str:
        """Name used in report tables"""
        return _KIND_TITLES[self]


_KIND_TITLES = {
    StimulusKind.sam: "SAM",
    StimulusKind.fam: "FAM",
    StimulusKind.clicks: "Clicks",
    StimulusKind.amfm: "AM/FM",
}


class Direction(enum.Enum):
    """Spatial direction of a stimulus. The integer code is used by the
    binary epoch header."""

    left = "left"
    center = "center"
    right = "right"

    @property
    def code(self) -> int:
        return list(Direction).index(self)

    @classmethod
    def from_code(cls, code: int) -> "Direction":
        members = list(cls)
        if not 0 <= code < len(members):
            raise ValueError(f"Invalid direction code: {code}")
        return members[code]


def _sample_count(duration: float, rate: float) -> int:
    """round(duration * rate), rounding halves up."""
    return int(math.floor(duration * rate + 0.5))


@dataclass(frozen=True)
class StimulusSpec:
    """
    Parameters of a single stimulus.

    :param kind: the modulation type.

    :param f_m: the modulation frequency in Hz. For clicks this is the click
      rate.

    :param duration: the stimulus length in seconds.

    :param f_c: carrier frequency for SAM and FAM stimuli.

    :param f_c1: carrier used while the AM/FM envelope sine is positive.

    :param f_c2: carrier used on the alternate envelope half-cycles.

    :param audio_rate: samples per second of the synthesized waveform.

    :param amplitude: scalar gain in (0, 1].

    :param click_width: samples per click phase. A click is ``click_width``
      samples at +amplitude followed by ``click_width`` at -amplitude.

    :raises: ValueError if any parameter is out of range.
    """

    kind: StimulusKind
    f_m: float
    duration: float
    f_c: Optional[float] = DEFAULT_CARRIER
    f_c1: Optional[float] = DEFAULT_CARRIERS[0]
    f_c2: Optional[float] = DEFAULT_CARRIERS[1]
    audio_rate: int = DEFAULT_AUDIO_RATE
    amplitude: float = 1.0
    click_width: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.kind, StimulusKind):
            raise ValueError(f"Invalid stimulus kind: {self.kind}")
        if not self.f_m > 0:
            raise ValueError(f"f_m must be positive, got {self.f_m}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if not 0 < self.amplitude <= 1:
            raise ValueError(f"amplitude must be in (0, 1], got {self.amplitude}")
        if not self.audio_rate > 0 or int(self.audio_rate) != self.audio_rate:
            raise ValueError(
                f"audio_rate must be a positive integer, got {self.audio_rate}"
            )
        if self.click_width < 1:
            raise ValueError(f"click_width must be >= 1, got {self.click_width}")

        if self.kind is StimulusKind.clicks:
            if self.f_m * 2 * self.click_width >= self.audio_rate:
                raise ValueError(
                    f"click rate {self.f_m} Hz overlaps clicks at "
                    f"{self.audio_rate} samples/s"
                )
            return

        for name in self._carrier_names():
            value = getattr(self, name)
            if value is None:
                raise ValueError(f"{name} is required for {self.kind.value} stimuli")
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
            if self.audio_rate < NYQUIST_MARGIN * value:
                raise ValueError(
                    f"audio_rate {self.audio_rate} is below {NYQUIST_MARGIN} x "
                    f"{name} ({value} Hz)"
                )

        if self.kind is StimulusKind.amfm and self.f_c1 == self.f_c2:
            raise ValueError("f_c1 and f_c2 must differ for amfm stimuli")

    def _carrier_names(self):
        if self.kind is StimulusKind.amfm:
            return ("f_c1", "f_c2")
        return ("f_c",)

    @property
    def n_samples(self) -> int:
        return _sample_count(self.duration, self.audio_rate)

    def time(self) -> FloatArray:
        """Sample instants t = k / audio_rate"""
        return np.arange(self.n_samples, dtype=np.float64) / self.audio_rate

    def describe(self) -> str:
        """A one line summary"""
        if self.kind is StimulusKind.clicks:
            carriers = "no carrier"
        elif self.kind is StimulusKind.amfm:
            carriers = f"carriers {self.f_c1:g}/{self.f_c2:g} Hz"
        else:
            carriers = f"carrier {self.f_c:g} Hz"
        return (
            f"{self.kind.title} f_m={self.f_m:g} Hz, {carriers}, "
            f"{self.duration:g} s at {self.audio_rate} samples/s "
            f"({self.n_samples} samples), amplitude {self.amplitude:g}"
        )


@dataclass(frozen=True)
class MonoWaveform:
    samples: FloatArray
    rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("Waveform samples must be one dimensional")
        if not np.all(np.isfinite(samples)):
            raise ValueError("Waveform contains non-finite samples")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise ValueError("Waveform samples must lie within [-1, 1]")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class StereoWaveform:
    left: MonoWaveform
    right: MonoWaveform

    def __post_init__(self) -> None:
        if len(self.left) != len(self.right):
            raise ValueError(
                f"Channel lengths differ: {len(self.left)} != {len(self.right)}"
            )
        if self.left.rate != self.right.rate:
            raise ValueError(
                f"Channel rates differ: {self.left.rate} != {self.right.rate}"
            )

    @property
    def rate(self) -> int:
        return self.left.rate

    def __len__(self) -> int:
        return len(self.left)


def _check_kind(spec: StimulusSpec, kind: StimulusKind) -> None:
    if spec.kind is not kind:
        raise ValueError(f"Expected a {kind.value} spec, got {spec.kind.value}")


def synth_sam(spec: StimulusSpec) -> MonoWaveform:
    """Sinusoidal amplitude modulation.

    ``s(t) = amplitude * sin(2 pi f_c t) * sin(pi f_m t)``

    The envelope magnitude repeats at ``f_m`` and the spectrum holds two
    lines at ``f_c +/- f_m / 2``.
    """
    _check_kind(spec, StimulusKind.sam)
    t = spec.time()
    samples = (
        spec.amplitude
        * np.sin(2 * np.pi * spec.f_c * t)
        * np.sin(np.pi * spec.f_m * t)
    )
    return MonoWaveform(samples, spec.audio_rate)


def synth_fam(spec: StimulusSpec) -> MonoWaveform:
    """Flutter amplitude modulation.

    The carrier is gated by the positive half-cycles of ``sin(2 pi f_m t)``
    and is exactly zero elsewhere, including where the envelope sine is
    exactly zero.
    """
    _check_kind(spec, StimulusKind.fam)
    t = spec.time()
    envelope = np.sin(2 * np.pi * spec.f_m * t)
    carrier = np.sin(2 * np.pi * spec.f_c * t)
    samples = np.where(envelope > 0, spec.amplitude * carrier * envelope, 0.0)
    return MonoWaveform(samples, spec.audio_rate)


def synth_clicks(spec: StimulusSpec) -> MonoWaveform:
    """Periodic biphasic click train.

    ``round(f_m * duration)`` clicks (halves round up) start at the sample
    nearest to ``k / f_m``. A click that would run past the end of the
    waveform is moved back so that it fits whole.
    """
    _check_kind(spec, StimulusKind.clicks)
    n = spec.n_samples
    width = spec.click_width
    samples = np.zeros(n, dtype=np.float64)
    n_clicks = _sample_count(spec.duration, spec.f_m)
    for k in range(n_clicks):
        onset = _sample_count(k / spec.f_m, spec.audio_rate)
        onset = max(0, min(onset, n - 2 * width))
        samples[onset : onset + width] = spec.amplitude
        samples[onset + width : onset + 2 * width] = -spec.amplitude
    return MonoWaveform(samples, spec.audio_rate)


def synth_amfm(spec: StimulusSpec) -> MonoWaveform:
    """Alternating carrier AM/FM tone.

    The SAM envelope ``sin(pi f_m t)`` carries ``f_c1`` on its positive
    lobes and ``f_c2`` on the others, so the magnitude envelope matches SAM.
    """
    _check_kind(spec, StimulusKind.amfm)
    t = spec.time()
    envelope = np.sin(np.pi * spec.f_m * t)
    carrier = np.where(
        envelope > 0,
        np.sin(2 * np.pi * spec.f_c1 * t),
        np.sin(2 * np.pi * spec.f_c2 * t),
    )
    return MonoWaveform(spec.amplitude * carrier * envelope, spec.audio_rate)


SYNTHESIZERS = {
    StimulusKind.sam: synth_sam,
    StimulusKind.fam: synth_fam,
    StimulusKind.clicks: synth_clicks,
    StimulusKind.amfm: synth_amfm,
}  # type: Dict[StimulusKind, Callable[[StimulusSpec], MonoWaveform]]


def synthesize(spec: StimulusSpec) -> MonoWaveform:
    """Synthesize any stimulus kind"""
    return SYNTHESIZERS[spec.kind](spec)


def stimulus_spec_for(
    kind: Union[StimulusKind, str], f_m: float, duration: float, **kwargs
) -> StimulusSpec:
    """Build a spec with the default carriers (440 Hz for SAM and FAM,
    440/880 Hz for AM/FM). Extra keyword arguments override any field.
    """
    return StimulusSpec(kind=StimulusKind(kind), f_m=f_m, duration=duration, **kwargs)


def spatialize(wave: MonoWaveform, direction: Direction) -> StereoWaveform:
    """Route a mono waveform to a direction.

    Left and right use a single channel with the other one silent; center
    duplicates the waveform on both channels.
    """
    silence = MonoWaveform(np.zeros(len(wave)), wave.rate)
    if direction is Direction.left:
        return StereoWaveform(wave, silence)
    if direction is Direction.right:
        return StereoWaveform(silence, wave)
    if direction is Direction.center:
        return StereoWaveform(wave, MonoWaveform(wave.samples.copy(), wave.rate))
    raise ValueError(f"Invalid direction: {direction}")


def write_wav(stereo: StereoWaveform, path) -> None:
    """Write a 16-bit linear PCM stereo file.

    Samples map to ``round(sample * 32767)``.

    :raises: ValueError if a sample lies outside [-1, 1].
    :raises: OSError if the file cannot be written.
    """
    frames = np.column_stack((stereo.left.samples, stereo.right.samples))
    if frames.size and np.max(np.abs(frames)) > 1.0:
        raise ValueError("Samples must lie within [-1, 1]")
    pcm = np.rint(frames * PCM_FULL_SCALE).astype("<i2")
    wavfile.write(path, int(stereo.rate), pcm)
    logger.debug(f"wrote {len(stereo)} stereo frames at {stereo.rate} Hz to {path}")


def read_wav(path) -> StereoWaveform:
    """Read a 16-bit stereo file written by :func:`write_wav`.

    :raises: ValueError if the file is not 16-bit stereo PCM.
    """
    rate, pcm = wavfile.read(path)
    if pcm.dtype != np.int16 or pcm.ndim != 2 or pcm.shape[1] != 2:
        raise ValueError(f"{path} is not a 16-bit stereo PCM file")
    samples = pcm.astype(np.float64) / PCM_FULL_SCALE
    # -32768 cannot come from write_wav but is legal PCM.
    samples = np.clip(samples, -1.0, 1.0)
    return StereoWaveform(
        MonoWaveform(samples[:, 0], int(rate)), MonoWaveform(samples[:, 1], int(rate))
    )
