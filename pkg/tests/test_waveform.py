import math

import numpy as np
import pytest

from nprsim import (
    AcousticSource,
    AudioBuffer,
    ScheduleError,
    SegmentSchedule,
    archetype,
    attack_response_trace,
    calibration_carrier,
    forged_pressure_estimate,
    natural_resonant_hz,
    psd_ratio,
    read_wav,
    segment_mask,
    suppress_band,
    synthesize_attack,
    write_wav,
)
from nprsim.waveform import _burst_spans


def _source(spl_db=65.0, distance_m=0.002, f_hz=685.0):
    return AcousticSource(spl_db=spl_db, ref_distance_m=0.002,
                          position_distance_m=distance_m, tone_hz=f_hz)


def test_schedule_rejects_subperiod_bursts():
    with pytest.raises(ValueError):
        SegmentSchedule(band_hz=(680.0, 690.0), duration_s=0.0005, interval_s=0.015)


def test_schedule_rejects_interval_not_exceeding_burst():
    with pytest.raises(ValueError):
        SegmentSchedule(band_hz=(680.0, 690.0), duration_s=0.01, interval_s=0.01)


def test_schedule_rejects_long_fade_and_bad_cycles():
    with pytest.raises(ValueError):
        SegmentSchedule(band_hz=(680.0, 690.0), duration_s=0.002,
                        interval_s=0.015, fade_in_s=0.002)
    with pytest.raises(ValueError):
        SegmentSchedule(band_hz=(680.0, 690.0), duration_s=0.002,
                        interval_s=0.015, cycles=0)
    with pytest.raises(ValueError):
        SegmentSchedule(band_hz=(690.0, 680.0), duration_s=0.002, interval_s=0.015)


def test_every_burst_ends_at_a_tone_peak():
    sched = SegmentSchedule(band_hz=(680.0, 690.0), duration_s=0.002, interval_s=0.015)
    carrier = calibration_carrier()
    attacked = synthesize_attack(carrier, sched)
    spans = _burst_spans(sched, sched.target_hz(), attacked.samples.size,
                         attacked.sample_rate_hz)
    assert len(spans) > 100
    for start, stop in spans:
        segment = attacked.samples[start:stop]
        assert abs(segment[-1]) == pytest.approx(float(np.max(np.abs(segment))), rel=1e-6)


def test_psd_ratio_exceeds_stealth_threshold_on_calibration_carrier():
    sched = SegmentSchedule(band_hz=(680.0, 690.0), duration_s=0.002, interval_s=0.015)
    carrier = calibration_carrier()
    attacked = synthesize_attack(carrier, sched)
    mask = segment_mask(sched, sched.target_hz(), attacked.samples.size,
                        attacked.sample_rate_hz)
    ratio = psd_ratio(attacked, sched.band_hz, mask)
    assert 3.0 <= ratio <= 30.0


def test_suppress_band_removes_band_energy():
    fs = 48000
    t = np.arange(fs) / fs
    tone = 0.5 * np.sin(2.0 * math.pi * 685.0 * t)
    audio = AudioBuffer(sample_rate_hz=fs, samples=tone)
    cleaned = suppress_band(audio, (660.0, 710.0))
    # steady-state section, away from filter edge transients
    mid = slice(fs // 4, 3 * fs // 4)
    before = float(np.sqrt(np.mean(audio.samples[mid] ** 2)))
    after = float(np.sqrt(np.mean(cleaned.samples[mid] ** 2)))
    assert after < 0.02 * before


def test_wav_roundtrip_is_16_bit_faithful(tmp_path):
    fs = 44100
    rng = np.random.default_rng(5)
    samples = np.clip(rng.normal(scale=0.2, size=fs // 2), -1.0, 1.0)
    path = tmp_path / "roundtrip.wav"
    write_wav(path, AudioBuffer(sample_rate_hz=fs, samples=samples))
    back = read_wav(path)
    assert back.sample_rate_hz == fs
    assert back.samples.size == samples.size
    # writer rounds at 32767, reader divides by 32768: two LSBs of slack
    assert float(np.max(np.abs(back.samples - samples))) <= 2.0 / 32768.0


def test_synthesize_rejects_out_of_band_target():
    sched = SegmentSchedule(band_hz=(680.0, 690.0), duration_s=0.002, interval_s=0.015)
    with pytest.raises(ScheduleError):
        synthesize_attack(calibration_carrier(), sched, target_f_hz=900.0)


def test_synthesized_output_stays_within_full_scale():
    """Burst insertion replaces the carrier, so full-scale input stays legal."""
    fs = 48000
    t = np.arange(fs) / fs
    sched = SegmentSchedule(band_hz=(680.0, 690.0), duration_s=0.002,
                            interval_s=0.015, amplitude_scale=1.0,
                            fade_in_s=0.0005)
    for carrier_samples in (
        0.999 * np.ones(fs),
        0.999 * np.sin(2.0 * math.pi * 675.0 * t),
        np.clip(np.random.default_rng(3).normal(scale=0.5, size=fs), -1.0, 1.0),
    ):
        out = synthesize_attack(AudioBuffer(sample_rate_hz=fs, samples=carrier_samples),
                                sched)
        assert float(np.max(np.abs(out.samples))) <= 1.0


def test_forged_estimate_scales_inversely_with_interval():
    model = archetype("A1011-00")
    f = natural_resonant_hz(model)
    src = _source(f_hz=f)
    base = SegmentSchedule(band_hz=(0.9 * f, 1.1 * f), duration_s=0.002, interval_s=0.015)
    p15 = forged_pressure_estimate(base, model, None, src, target_f_hz=f)
    p60 = forged_pressure_estimate(
        SegmentSchedule(band_hz=(0.9 * f, 1.1 * f), duration_s=0.002, interval_s=0.060),
        model, None, src, target_f_hz=f)
    assert p60 == pytest.approx(p15 / 4.0, rel=0.01)


def test_forged_estimate_scales_exactly_with_level():
    model = archetype("A1011-00")
    f = natural_resonant_hz(model)
    sched = SegmentSchedule(band_hz=(0.9 * f, 1.1 * f), duration_s=0.002, interval_s=0.015)
    quiet = forged_pressure_estimate(sched, model, None, _source(spl_db=55.0, f_hz=f),
                                     target_f_hz=f)
    loud = forged_pressure_estimate(sched, model, None, _source(spl_db=75.0, f_hz=f),
                                    target_f_hz=f)
    assert loud / quiet == pytest.approx(10.0, rel=1e-9)


def test_response_trace_spans_follow_the_interval():
    model = archetype("A1011-00")
    f = natural_resonant_hz(model)
    sched = SegmentSchedule(band_hz=(0.9 * f, 1.1 * f), duration_s=0.002, interval_s=0.015)
    _trace, spans, amp = attack_response_trace(sched, model, None, _source(f_hz=f),
                                               target_f_hz=f, duration_s=0.2)
    assert amp > 0.0
    starts = np.array([s for s, _ in spans], dtype=float) / model.sample_rate_hz
    gaps = np.diff(starts)
    assert np.allclose(gaps, 0.015, atol=1.0 / model.sample_rate_hz)


def test_response_trace_needs_room_for_one_burst():
    model = archetype("A1011-00")
    f = natural_resonant_hz(model)
    sched = SegmentSchedule(band_hz=(0.9 * f, 1.1 * f), duration_s=0.002, interval_s=1.0)
    with pytest.raises(ScheduleError):
        attack_response_trace(sched, model, None, _source(f_hz=f),
                              target_f_hz=f, duration_s=0.001)
