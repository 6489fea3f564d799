"""
This module generates labeled synthetic EEG epochs.

Every channel is the sum of three parts:

  - 1/f^alpha noise, independent per channel, scaled by ``noise_level``;
  - white sensor noise, independent per channel, scaled by ``sensor_noise``;
  - the steady-state response ``A * sin(2 pi f_m t + phi_c)``, where ``A``
    is multiplied by ``attention_gain`` for attended stimuli and ``phi_c``
    is a constant per-channel lag, so channels are phase locked at ``f_m``.

The 1/f noise is made by scaling the real FFT of seeded white noise by
``(f / 1 Hz) ** (-alpha / 2)`` with the DC bin set to zero and transforming
back. A unit ``noise_level`` therefore has a one-sided power spectral
density of ``(2 / eeg_rate) * f ** -alpha`` regardless of epoch length.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from assrbci.epochs import Epoch, EpochSet
from assrbci.protocol import (
    ProtocolConfig,
    condition_seed,
    epoch_seed,
    schedule_trials,
    stimulus_timeline,
)
from assrbci.stimgen import Direction, StimulusKind

logger = logging.getLogger(__name__)

NOISE_REFERENCE_HZ = 1.0
CHANNEL_LAG_STEP = 0.1


@dataclass(frozen=True)
class SimConfig:
    """
    Parameters of the synthetic EEG generator.

    The defaults place the response close to the in-band noise for 0.5 s
    epochs, where the short filters pass a wide band, so that direction
    accuracy rises with stimulus length.

    :param n_channels: number of electrodes.

    :param eeg_rate: samples per second.

    :param assr_amplitude: amplitude of an ignored steady-state response.

    :param attention_gain: amplitude multiplier for attended responses.

    :param noise_level: scale of the 1/f noise.

    :param noise_exponent: the spectral slope alpha of the 1/f noise.

    :param sensor_noise: standard deviation of the white sensor noise. It
      is not scaled by ``noise_level``: PLV ignores amplitude, so attended
      and ignored responses with no noise at all give identical features.
      The default keeps every PLV of a noiseless attended epoch above 0.999.

    :param phase_jitter: random-walk phase drift of ignored responses in
      rad per square-root second, independent per channel. Zero disables it.

    :param channel_phase_lags: per-channel response lag in radians. None
      selects ``0.1 * c`` for channel ``c``.

    :param rng_seed: salt mixed into every epoch seed, so that two configs
      differing only here produce unrelated noise.
    """

    n_channels: int = 16
    eeg_rate: float = 512.0
    assr_amplitude: float = 1.0
    attention_gain: float = 2.0
    noise_level: float = 120.0
    noise_exponent: float = 1.0
    sensor_noise: float = 0.1
    phase_jitter: float = 0.0
    channel_phase_lags: Optional[Tuple[float, ...]] = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_channels < 2:
            raise ValueError(f"n_channels must be >= 2, got {self.n_channels}")
        if not self.eeg_rate > 0:
            raise ValueError(f"eeg_rate must be positive, got {self.eeg_rate}")
        if self.assr_amplitude < 0:
            raise ValueError("assr_amplitude must not be negative")
        if self.attention_gain < 1:
            raise ValueError(
                f"attention_gain must be >= 1, got {self.attention_gain}"
            )
        if self.noise_level < 0:
            raise ValueError(f"noise_level must be >= 0, got {self.noise_level}")
        if self.sensor_noise < 0:
            raise ValueError(f"sensor_noise must be >= 0, got {self.sensor_noise}")
        if self.phase_jitter < 0:
            raise ValueError(f"phase_jitter must be >= 0, got {self.phase_jitter}")
        if self.channel_phase_lags is not None:
            lags = tuple(float(v) for v in self.channel_phase_lags)
            if len(lags) != self.n_channels:
                raise ValueError(
                    f"channel_phase_lags holds {len(lags)} values "
                    f"for {self.n_channels} channels"
                )
            object.__setattr__(self, "channel_phase_lags", lags)

    @property
    def phase_lags(self) -> np.ndarray:
        if self.channel_phase_lags is None:
            return CHANNEL_LAG_STEP * np.arange(self.n_channels)
        return np.asarray(self.channel_phase_lags, dtype=np.float64)


def epoch_samples(length: float, eeg_rate: float) -> int:
    """round(length * eeg_rate), halves rounding up"""
    return int(math.floor(length * eeg_rate + 0.5))


def pink_noise(
    rng: np.random.Generator, shape: Tuple[int, int], rate: float, exponent: float
) -> np.ndarray:
    """Independent rows of zero-mean 1/f^exponent noise"""
    white = rng.standard_normal(shape)
    spectrum = np.fft.rfft(white, axis=-1)
    freqs = np.fft.rfftfreq(shape[-1], d=1.0 / rate)
    scale = np.zeros_like(freqs)
    scale[1:] = (freqs[1:] / NOISE_REFERENCE_HZ) ** (-exponent / 2)
    return np.fft.irfft(spectrum * scale, n=shape[-1], axis=-1)


def simulate_epoch(
    cfg: SimConfig,
    f_m: float,
    length: float,
    attended: bool,
    seed: int,
    direction: Direction = Direction.center,
    kind: StimulusKind = StimulusKind.sam,
    trial: int = 0,
    onset: float = 0.0,
) -> Epoch:
    """Generate one epoch.

    The result is fully determined by ``cfg`` and ``seed``; the remaining
    keyword arguments only label it.

    :raises: ValueError if ``f_m`` is not below the Nyquist frequency or
      ``length`` is not positive.
    """
    if not f_m > 0:
        raise ValueError(f"f_m must be positive, got {f_m}")
    if not cfg.eeg_rate > 2 * f_m:
        raise ValueError(
            f"eeg_rate {cfg.eeg_rate} must exceed twice the modulation "
            f"frequency {f_m}"
        )
    if not length > 0:
        raise ValueError(f"length must be positive, got {length}")
    n_samples = epoch_samples(length, cfg.eeg_rate)
    if n_samples < 1:
        raise ValueError(f"length {length} s yields no samples")

    shape = (cfg.n_channels, n_samples)
    rng = np.random.default_rng(seed)
    data = np.zeros(shape)
    # Draw order: 1/f noise, sensor noise, then jitter.
    data += cfg.noise_level * pink_noise(rng, shape, cfg.eeg_rate, cfg.noise_exponent)
    data += cfg.sensor_noise * rng.standard_normal(shape)

    t = np.arange(n_samples) / cfg.eeg_rate
    phase = 2 * np.pi * f_m * t[np.newaxis, :] + cfg.phase_lags[:, np.newaxis]
    if cfg.phase_jitter > 0 and not attended:
        step = cfg.phase_jitter / math.sqrt(cfg.eeg_rate)
        steps = step * rng.standard_normal(shape)
        phase = phase + np.cumsum(steps, axis=-1)
    amplitude = cfg.assr_amplitude * (cfg.attention_gain if attended else 1.0)
    data += amplitude * np.sin(phase)

    return Epoch(
        data=data.astype(np.float32),
        eeg_rate=cfg.eeg_rate,
        f_m=f_m,
        direction=direction,
        attended=attended,
        kind=kind,
        length=length,
        trial=trial,
        onset=onset,
    )


def simulate_condition(
    protocol: ProtocolConfig,
    cfg: SimConfig,
    kind: StimulusKind,
    length: float,
    seed: int,
) -> EpochSet:
    """Simulate every epoch of one (kind, length) condition.

    The trial plan and all epoch noise derive from ``seed``, the kind and
    the length. The stimulus kind only labels the epochs: the generator has
    no kind-specific response model.
    """
    cond_seed = condition_seed(seed, kind, length)
    plan = schedule_trials(protocol, cond_seed)
    timeline = stimulus_timeline(protocol, plan, length)
    targets = {trial.index: trial.target for trial in plan}

    eset = EpochSet(
        kind=kind,
        length=float(length),
        seed=int(seed),
        metadata={
            "condition_seed": cond_seed,
            "inter_stimulus_gap": protocol.inter_stimulus_gap,
            "block_break": protocol.block_break,
            "trials": protocol.n_trials,
        },
    )
    for entry in timeline:
        eset.epochs.append(
            simulate_epoch(
                cfg,
                protocol.frequency(entry.direction),
                length,
                attended=entry.direction is targets[entry.trial],
                seed=epoch_seed(cond_seed, entry.trial, entry.direction, cfg.rng_seed),
                direction=entry.direction,
                kind=kind,
                trial=entry.trial,
                onset=entry.onset,
            )
        )
    logger.debug(
        f"simulated {len(eset)} epochs for {kind.value} {length:g} s, seed {seed}"
    )
    return eset


def simulate_session(
    protocol: ProtocolConfig, cfg: SimConfig, seed: Optional[int] = None
) -> List[EpochSet]:
    """Simulate every condition of the protocol, kinds outermost.

    :param seed: session seed; defaults to ``protocol.rng_seed``.
    """
    if seed is None:
        seed = protocol.rng_seed
    return [
        simulate_condition(protocol, cfg, kind, length, seed)
        for kind, length in protocol.conditions
    ]
