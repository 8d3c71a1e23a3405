"""Attack waveform synthesis and spectral stealth analysis.

The attack embeds short resonant tone bursts in an ordinary audio carrier.
The carrier first has the sensor's resonant band notched out so the bursts
are the only in-band energy, then bursts are spliced in on a fixed interval.
Every burst ends exactly on a positive waveform peak: the transducer is
released from its maximum and rings down instead of being driven back to
zero, which is what leaves a one-signed pressure residue between bursts.

Also here: the time-averaged forged pressure estimator, which couples a
synthesized burst train through the acoustic path into the transducer model,
and the packaged calibration carrier used for repeatable spectral checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.io import wavfile
from scipy.signal import lfilter

SUPPORTED_RATES = (44100, 48000)
PSD_RATIO_CAP = 1.0e9

# Warm-up discarded before the steady averaging window of the forged
# pressure estimate, seconds.
ESTIMATE_WARMUP_S = 0.3


class ClippingError(ValueError):
    """Raised when burst insertion would push samples beyond full scale."""


class ScheduleError(ValueError):
    """Raised for burst schedules that cannot be realized."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio at a supported sample rate, samples within [-1, 1]."""

    sample_rate_hz: int
    samples: np.ndarray
    channels: int = 1

    def __post_init__(self) -> None:
        if self.sample_rate_hz not in SUPPORTED_RATES:
            raise ValueError(
                f"sample rate must be one of {SUPPORTED_RATES}, got {self.sample_rate_hz}"
            )
        if self.channels != 1:
            raise ValueError("only mono buffers are supported")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if samples.size and float(np.max(np.abs(samples))) > 1.0 + 1e-9:
            raise ValueError("samples exceed full scale [-1, 1]")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class SegmentSchedule:
    """Timing plan for the inserted resonant bursts.

    band_hz brackets the target resonance.  duration_s is the nominal burst
    length and must hold at least one period of the band's upper edge;
    bursts shorter than one period are rejected here rather than clamped.
    interval_s is the burst repetition period.  cycles pins each burst to a
    whole number of tone cycles; a sequence cycles through the values on
    consecutive bursts.  When cycles is None, as many whole cycles as fit
    in duration_s are used.

    Bursts hold whole cycles so each one integrates to nearly zero, like
    any loudspeaker output.  fade_in_s defaults to zero because an onset
    ramp removes part of the first cycle and leaves the burst with a net
    area, which shows up downstream as a spurious DC term in the sensor
    response.  A short ramp (at most 1 ms) can be enabled to soften the
    onset click at that cost.
    """

    band_hz: tuple[float, float]
    duration_s: float
    interval_s: float
    cycles: int | tuple[int, ...] | None = None
    amplitude_scale: float = 0.9
    fade_in_s: float = 0.0

    def __post_init__(self) -> None:
        lo, hi = self.band_hz
        if not 0.0 < lo < hi:
            raise ValueError(f"band must satisfy 0 < lower < upper, got ({lo}, {hi})")
        if self.duration_s < 1.0 / hi:
            raise ValueError(
                f"burst duration {self.duration_s * 1e3:.3f} ms is shorter than one "
                f"period of {hi:.0f} Hz; bursts must hold at least one full cycle"
            )
        if self.interval_s <= self.duration_s:
            raise ValueError(
                f"interval {self.interval_s} s must exceed burst duration {self.duration_s} s"
            )
        if not 0.0 < self.amplitude_scale <= 1.0:
            raise ValueError(f"amplitude scale must be in (0, 1], got {self.amplitude_scale}")
        if not 0.0 <= self.fade_in_s <= 0.001:
            raise ValueError(f"fade-in must be within [0, 1] ms, got {self.fade_in_s}")
        if self.cycles is not None:
            seq = (self.cycles,) if isinstance(self.cycles, int) else tuple(self.cycles)
            if not seq or any((not isinstance(c, int)) or c < 1 for c in seq):
                raise ValueError(f"cycles must be positive integers, got {self.cycles}")
            object.__setattr__(self, "cycles", seq if len(seq) > 1 else seq[0])

    def target_hz(self) -> float:
        return 0.5 * (self.band_hz[0] + self.band_hz[1])

    def cycle_sequence(self, frequency_hz: float) -> tuple[int, ...]:
        """Cycle counts applied round-robin to consecutive bursts."""
        if self.cycles is None:
            n = max(1, int(math.floor(self.duration_s * frequency_hz + 1e-9)))
            return (n,)
        seq = (self.cycles,) if isinstance(self.cycles, int) else self.cycles
        for c in seq:
            if c / frequency_hz > self.duration_s + 1e-12:
                raise ScheduleError(
                    f"{c} cycles of {frequency_hz:.1f} Hz need {c / frequency_hz * 1e3:.2f} ms, "
                    f"longer than the {self.duration_s * 1e3:.2f} ms burst duration"
                )
        return seq


def read_wav(path: str | Path) -> AudioBuffer:
    """Read a 16-bit PCM WAV file, downmixing stereo to mono by averaging."""
    rate, data = wavfile.read(path)
    if rate not in SUPPORTED_RATES:
        raise ValueError(f"{path}: sample rate {rate} not in {SUPPORTED_RATES}")
    if data.dtype != np.int16:
        raise ValueError(f"{path}: expected 16-bit PCM, got dtype {data.dtype}")
    samples = data.astype(float) / 32768.0
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioBuffer(sample_rate_hz=int(rate), samples=samples)


def write_wav(path: str | Path, audio: AudioBuffer) -> None:
    """Write mono 16-bit PCM little-endian WAV."""
    pcm = np.round(np.clip(audio.samples, -1.0, 1.0) * 32767.0).astype("<i2")
    wavfile.write(path, audio.sample_rate_hz, pcm)


def suppress_band(audio: AudioBuffer, band_hz: tuple[float, float]) -> AudioBuffer:
    """Notch a frequency band out of the carrier.

    The band interior is zeroed in the frequency domain; raised-cosine
    transitions just outside the band edges avoid ringing.  Energy outside
    the band (beyond the narrow transitions) is untouched.
    """
    lo, hi = band_hz
    nyquist = audio.sample_rate_hz / 2.0
    if not 0.0 < lo < hi < nyquist:
        raise ValueError(f"band ({lo}, {hi}) must lie inside (0, {nyquist}) Hz")
    n = audio.samples.size
    spectrum = np.fft.rfft(audio.samples)
    freqs = np.fft.rfftfreq(n, 1.0 / audio.sample_rate_hz)
    taper = max(2.0, 0.1 * (hi - lo))
    gain = np.ones_like(freqs)
    gain[(freqs >= lo) & (freqs <= hi)] = 0.0
    rise = (freqs >= lo - taper) & (freqs < lo)
    gain[rise] = 0.5 * (1.0 + np.cos(np.pi * (freqs[rise] - (lo - taper)) / taper))
    fall = (freqs > hi) & (freqs <= hi + taper)
    gain[fall] = 0.5 * (1.0 - np.cos(np.pi * (freqs[fall] - hi) / taper))
    out = np.fft.irfft(spectrum * gain, n)
    # Gibbs overshoot can poke a hair past full scale; clamp it.
    np.clip(out, -1.0, 1.0, out=out)
    return AudioBuffer(sample_rate_hz=audio.sample_rate_hz, samples=out)


def _burst_spans(
    schedule: SegmentSchedule, frequency_hz: float, n_samples: int, sample_rate_hz: int
) -> list[tuple[int, int]]:
    """Half-open sample index spans of every burst that fits in n_samples."""
    cycles = schedule.cycle_sequence(frequency_hz)
    spans: list[tuple[int, int]] = []
    k = 0
    while True:
        start = int(round(k * schedule.interval_s * sample_rate_hz))
        c = cycles[k % len(cycles)]
        length = int(round(c / frequency_hz * sample_rate_hz))
        if length < 2:
            raise ScheduleError(f"burst of {c} cycles at {frequency_hz:.0f} Hz spans under 2 samples")
        if start + length > n_samples:
            break
        spans.append((start, start + length))
        k += 1
    return spans


def _burst_samples(
    schedule: SegmentSchedule,
    frequency_hz: float,
    length: int,
    sample_rate_hz: int,
    amplitude: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One burst and its carrier-duck weight.

    The phase is anchored to the final sample: the burst is
    amplitude*cos(2*pi*f*(t - t_last)), so the last sample sits exactly on a
    positive peak.  Only the onset is faded; the end is never faded, since
    the abrupt release from the peak is the attack mechanism.
    """
    t_rel = (np.arange(length) - (length - 1)) / sample_rate_hz
    burst = amplitude * np.cos(2.0 * math.pi * frequency_hz * t_rel)
    weight = np.ones(length)
    n_fade = min(int(round(schedule.fade_in_s * sample_rate_hz)), length // 3)
    if n_fade > 0:
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(n_fade) / n_fade))
        weight[:n_fade] = ramp
        burst[:n_fade] *= ramp
    return burst, weight


def synthesize_attack(
    carrier: AudioBuffer,
    schedule: SegmentSchedule,
    target_f_hz: float | None = None,
) -> AudioBuffer:
    """Embed a resonant burst train in a carrier.

    The carrier's target band is suppressed first; each burst then replaces
    the carrier over its span (crossfaded over the onset ramp).  Burst
    amplitude is amplitude_scale times the carrier peak, or amplitude_scale
    itself for a silent carrier.  Output length and rate equal the input's.
    Raises ClippingError if the result would leave full scale.
    """
    f = schedule.target_hz() if target_f_hz is None else float(target_f_hz)
    if not schedule.band_hz[0] <= f <= schedule.band_hz[1]:
        raise ScheduleError(f"target {f:.1f} Hz lies outside band {schedule.band_hz}")
    fs = carrier.sample_rate_hz
    peak = float(np.max(np.abs(carrier.samples))) if carrier.samples.size else 0.0
    amplitude = schedule.amplitude_scale * (peak if peak > 0.0 else 1.0)
    base = suppress_band(carrier, schedule.band_hz) if peak > 0.0 else carrier
    out = base.samples.copy()
    for start, stop in _burst_spans(schedule, f, out.size, fs):
        burst, weight = _burst_samples(schedule, f, stop - start, fs, amplitude)
        out[start:stop] = burst + (1.0 - weight) * out[start:stop]
    worst = float(np.max(np.abs(out))) if out.size else 0.0
    if worst > 1.0 + 1e-9:
        raise ClippingError(
            f"amplitude scale {schedule.amplitude_scale} drives samples to {worst:.3f} FS"
        )
    return AudioBuffer(sample_rate_hz=fs, samples=np.clip(out, -1.0, 1.0))


def segment_mask(
    schedule: SegmentSchedule,
    frequency_hz: float,
    n_samples: int,
    sample_rate_hz: int,
) -> np.ndarray:
    """Boolean mask over samples, True inside burst spans.

    Reproduces the exact spans :func:`synthesize_attack` uses, so analysis
    code can classify samples without re-deriving the schedule arithmetic.
    """
    mask = np.zeros(n_samples, dtype=bool)
    for start, stop in _burst_spans(schedule, frequency_hz, n_samples, sample_rate_hz):
        mask[start:stop] = True
    return mask


def psd_ratio(
    audio: AudioBuffer,
    band_hz: tuple[float, float],
    mask: np.ndarray,
    nperseg: int | None = None,
) -> float:
    """Band power density inside masked spans over band power outside.

    Short Hann-windowed frames are classified as inside (>= 80% masked
    samples) or outside (<= 20%); straddling frames are dropped.  The ratio
    of mean band-bin power between the two groups is returned.  A silent
    outside group returns the PSD_RATIO_CAP sentinel.
    """
    lo, hi = band_hz
    if not 0.0 < lo < hi < audio.sample_rate_hz / 2.0:
        raise ValueError(f"band ({lo}, {hi}) outside valid range")
    mask = np.asarray(mask, dtype=bool)
    if mask.size != audio.samples.size:
        raise ValueError("mask length must match sample count")
    if nperseg is None:
        runs = _true_run_lengths(mask)
        nperseg = int(np.clip(int(np.median(runs)) if runs.size else 96, 32, 512))
    hop = max(1, nperseg // 4)
    window = np.hanning(nperseg)
    freqs = np.fft.rfftfreq(nperseg, 1.0 / audio.sample_rate_hz)
    df = audio.sample_rate_hz / nperseg
    band_bins = (freqs >= lo - 0.5 * df) & (freqs <= hi + 0.5 * df)
    inside = []
    outside = []
    for start in range(0, audio.samples.size - nperseg + 1, hop):
        frac = mask[start : start + nperseg].mean()
        if 0.2 < frac < 0.8:
            continue
        seg = audio.samples[start : start + nperseg] * window
        power = float(np.sum(np.abs(np.fft.rfft(seg)[band_bins]) ** 2))
        (inside if frac >= 0.8 else outside).append(power)
    if not inside or not outside:
        raise ValueError("mask leaves one of the frame groups empty")
    num = float(np.mean(inside))
    den = float(np.mean(outside))
    if den <= num / PSD_RATIO_CAP:
        return PSD_RATIO_CAP
    return num / den


def _true_run_lengths(mask: np.ndarray) -> np.ndarray:
    edges = np.diff(mask.astype(int))
    starts = np.flatnonzero(edges == 1) + 1
    stops = np.flatnonzero(edges == -1) + 1
    if mask.size and mask[0]:
        starts = np.concatenate([[0], starts])
    if mask.size and mask[-1]:
        stops = np.concatenate([stops, [mask.size]])
    return stops - starts


def attack_response_trace(
    schedule: SegmentSchedule,
    model,
    tube,
    source,
    *,
    target_f_hz: float | None = None,
    duration_s: float = 2.5,
    post_filter: Callable[[np.ndarray, int], np.ndarray] | None = None,
    extra_loss_db: float = 0.0,
):
    """Transducer response to the scheduled burst train arriving at the port.

    Synthesizes the burst train in pascals (amplitude = path attenuation
    times the source amplitude), integrates the transducer, and optionally
    runs the output through a post-sensor filter.  extra_loss_db models any
    added barrier in the path, like a damped enclosure.  The suppressed
    carrier is omitted: by design it carries no resonant-band energy, and
    its off-band residue has no noticeable effect on the forged pressure.

    Returns (trace, spans, port_amplitude_pa).
    """
    from . import acoustics
    from . import sensor as sensor_mod

    f = schedule.target_hz() if target_f_hz is None else float(target_f_hz)
    path_tube = tube if tube is not None else sensor_mod.NO_TUBE
    path = acoustics.PathModel(tube=path_tube, extra_loss_db=extra_loss_db)
    h, _delay = acoustics.propagate(source, path, frequency_hz=f)
    amplitude = h * acoustics.spl_to_pressure_amp(source.spl_db)
    if path.max_port_pa is not None:
        amplitude = min(amplitude, path.max_port_pa)
    fs = model.sample_rate_hz
    n = int(round(duration_s * fs))
    inlet = np.zeros(n)
    spans = _burst_spans(schedule, f, n, fs)
    if not spans:
        raise ScheduleError("trace window too short to hold a single burst")
    for start, stop in spans:
        burst, _weight = _burst_samples(schedule, f, stop - start, fs, amplitude)
        inlet[start:stop] = burst
    trace = sensor_mod.step_response(model, tube, inlet, 1.0 / fs)
    if post_filter is not None:
        trace.p_out_pa = post_filter(trace.p_out_pa, fs)
    return trace, spans, amplitude


def forged_pressure_estimate(
    schedule: SegmentSchedule,
    model,
    tube,
    source,
    *,
    target_f_hz: float | None = None,
    window_s: float = 2.0,
    post_filter: Callable[[np.ndarray, int], np.ndarray] | None = None,
    extra_loss_db: float = 0.0,
) -> float:
    """Steady displayed pressure offset produced by the burst train, Pa.

    Time-averaged rectified transducer output over a whole number of burst
    intervals after a warm-up, scaled by the model's reading gain.  Grows
    toward a plateau as bursts pack closer (smaller interval) and falls off
    roughly as 1/interval as they spread out, reaching zero in the limit of
    a lone burst.
    """
    if window_s < 2.0:
        raise ValueError(f"averaging window must be at least 2 s, got {window_s}")
    t_i = schedule.interval_s
    k0 = int(math.ceil(ESTIMATE_WARMUP_S / t_i))
    n_periods = max(1, int(math.floor(window_s / t_i)))
    fs = model.sample_rate_hz
    start = int(round(k0 * t_i * fs))
    stop = int(round((k0 + n_periods) * t_i * fs))
    duration_s = (stop + 2) / fs
    trace, _spans, _amp = attack_response_trace(
        schedule, model, tube, source,
        target_f_hz=target_f_hz, duration_s=duration_s, post_filter=post_filter,
        extra_loss_db=extra_loss_db,
    )
    return model.reading_gain * float(np.mean(np.abs(trace.p_out_pa[start:stop])))


def calibration_carrier(
    duration_s: float = 5.0,
    sample_rate_hz: int = 48000,
    seed: int = 7,
) -> AudioBuffer:
    """Deterministic music-like carrier for spectral checks.

    A stationary chord of steady tones plus low-passed noise.  Stationarity
    keeps windowed band-power estimates stable, which matters for the
    null-case behavior of :func:`psd_ratio`.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    tones = [
        (220.0, 0.30), (330.0, 0.24), (440.0, 0.20), (523.25, 0.16),
        (659.25, 0.13), (685.0, 0.11), (783.99, 0.09), (880.0, 0.07),
    ]
    x = np.zeros(n)
    for k, (f, a) in enumerate(tones):
        x += a * np.sin(2.0 * math.pi * f * t + 0.7 * k)
    # One-pole smoothing tilts the noise toward low frequencies.
    alpha = 0.05
    smooth = lfilter([alpha], [1.0, alpha - 1.0], rng.standard_normal(n))
    x += 0.8 * smooth
    x *= 0.95 / float(np.max(np.abs(x)))
    return AudioBuffer(sample_rate_hz=sample_rate_hz, samples=x)
