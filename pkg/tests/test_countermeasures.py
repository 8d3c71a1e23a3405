import numpy as np
import pytest

from nprsim import (
    AcousticAttackSetup,
    AcousticSource,
    AlarmConfig,
    AttackPlan,
    ControllerConfig,
    Countermeasure,
    CutoffError,
    NprScenario,
    PortWiring,
    RoomConfig,
    SegmentSchedule,
    apply_lpf,
    archetype,
    enclosure_lag_s,
    evaluate_countermeasure,
    lpf_cascade,
    measurement_settle_time_s,
)
from nprsim.sensor import TubeAssembly

FS = 50000.0
DT = 1.0 / FS


def _attack_setup():
    """The 65 dB burst-train attack through a 1 m sense tube."""
    model = archetype("A1011-00")
    schedule = SegmentSchedule(band_hz=(540.0, 670.0), duration_s=0.002, interval_s=0.015)
    source = AcousticSource(
        spl_db=65.0, ref_distance_m=0.002, position_distance_m=0.002,
        tone_hz=schedule.target_hz(),
    )
    return AcousticAttackSetup(
        model=model, tube=TubeAssembly(length_m=1.0), source=source,
        schedule=schedule, placement="high_port", affects="both",
    )


def _scenario(setpoint=-2.5, attack=None):
    wiring = PortWiring() if attack is None else PortWiring(attack=attack)
    return NprScenario(
        rooms=(RoomConfig(name="iso1", controller=ControllerConfig(setpoint_pa=setpoint)),),
        wiring=wiring,
        alarm=AlarmConfig(threshold_pa=2.0, dwell_s=5.0),
    )


def test_lpf_passes_dc_exactly():
    x = np.full(1000, 3.75)
    assert np.array_equal(apply_lpf(x, 120.0, DT), x)


def test_lpf_gain_at_cutoff_is_half_power():
    t = np.arange(int(FS * 2)) / FS
    y = apply_lpf(np.sin(2 * np.pi * 120.0 * t), 120.0, DT)
    settled = np.max(np.abs(y[int(FS):]))
    assert settled == pytest.approx(1.0 / np.sqrt(2.0), abs=0.01)


def test_lpf_rolls_off_a_decade_up():
    t = np.arange(int(FS * 2)) / FS
    x = np.sin(2 * np.pi * 1200.0 * t)
    one = np.max(np.abs(apply_lpf(x, 120.0, DT)[int(FS):]))
    three = np.max(np.abs(lpf_cascade(x, 120.0, DT, 3)[int(FS):]))
    assert one == pytest.approx(0.1, abs=0.02)
    assert three < one / 50.0


def test_lpf_cutoff_bounds():
    x = np.zeros(10)
    with pytest.raises(CutoffError):
        apply_lpf(x, 0.0, DT)
    with pytest.raises(CutoffError):
        apply_lpf(x, FS, DT)
    with pytest.raises(ValueError):
        apply_lpf(x, 120.0, 0.0)


def test_cascade_keeps_unit_dc_gain():
    step = np.ones(int(FS * 0.5))
    for order in (1, 2, 3, 4):
        assert lpf_cascade(step, 120.0, DT, order)[-1] == pytest.approx(1.0, abs=1e-3)


def test_enclosure_lag_scaling():
    assert enclosure_lag_s(0.0) == 0.0
    assert enclosure_lag_s(20.0) == pytest.approx(9e-3, rel=1e-12)
    assert enclosure_lag_s(40.0) == pytest.approx(99e-3, rel=1e-12)


def test_settle_time_penalties_are_positive():
    model = archetype("A1011-00")
    tube = TubeAssembly(length_m=1.0)
    base = measurement_settle_time_s(model, tube)
    assert base > 0.0
    assert measurement_settle_time_s(model, tube, lpf_cutoff_hz=120.0, lpf_order=3) > base
    assert measurement_settle_time_s(model, tube, extra_lag_s=9e-3) > base + 8e-3
    assert measurement_settle_time_s(model, TubeAssembly(length_m=7.5)) > base


def test_countermeasure_validation():
    with pytest.raises(ValueError):
        Countermeasure(kind="magnet")
    with pytest.raises(ValueError):
        Countermeasure(kind="lpf")                 # parameter missing
    with pytest.raises(ValueError):
        Countermeasure.long_tube(0.0)
    with pytest.raises(ValueError):
        Countermeasure.lpf(120.0, order=0)
    with pytest.raises(ValueError):
        Countermeasure.raised_setpoint(5.0)
    with pytest.raises(ValueError):
        Countermeasure(kind="enclosure", extra_loss_db=-1.0)


def test_acoustic_defenses_need_the_attack_setup():
    attack = AttackPlan(placement="high_port", forged_pa=8.0, affects="both")
    with pytest.raises(ValueError):
        evaluate_countermeasure(_scenario(attack=attack), Countermeasure.lpf(120.0))


def test_enclosure_attenuates_forged_reading_linearly():
    report = evaluate_countermeasure(_scenario(), Countermeasure.enclosure(20.0), _attack_setup())
    assert report.residual_forged_pa == pytest.approx(report.baseline_forged_pa / 10.0, rel=1e-9)
    assert report.sensitivity_penalty_s > 8e-3


def test_long_tube_buries_the_attack_in_the_noise():
    report = evaluate_countermeasure(_scenario(), Countermeasure.long_tube(7.5), _attack_setup())
    assert report.below_noise_floor
    assert not report.attack_success
    assert report.sensitivity_penalty_s > 0.0


def test_filter_strips_most_of_the_burst_energy():
    report = evaluate_countermeasure(_scenario(), Countermeasure.lpf(120.0, order=3), _attack_setup())
    reduction = 1.0 - report.residual_forged_pa / report.baseline_forged_pa
    assert reduction >= 0.9
    assert not report.attack_success


def test_raised_setpoint_restores_margin_against_direct_forging():
    attack = AttackPlan(placement="high_port", forged_pa=8.0, affects="both")
    scenario = _scenario(attack=attack)

    undefended = evaluate_countermeasure(scenario, Countermeasure.raised_setpoint(-2.5))
    assert undefended.attack_success

    defended = evaluate_countermeasure(scenario, Countermeasure.raised_setpoint(-20.0))
    assert not defended.attack_success
    assert defended.residual_forged_pa == defended.baseline_forged_pa == 8.0
    assert defended.sensitivity_penalty_s == 0.0
