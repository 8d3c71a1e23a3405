"""Defenses against acoustic sensor spoofing, with their costs.

Four defenses are modeled.  A longer sampling tube detunes the resonance
away from the deployed burst frequency and adds per-meter loss.  A damped
enclosure around the sensor inserts broadband loss in the path.  A
low-pass filter after the transducer strips the resonant ring, which sits
far above the pressure band a room controller cares about.  A deeper
setpoint leaves the forged offset short of positive pressure.  Each one
is scored by recomputing the forged reading through the modified chain,
rerunning the closed loop, and measuring what the defense costs on a
legitimate pressure step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .acoustics import AcousticSource
from .plant import ATTACK_TARGETS, AttackPlan, NprScenario, simulate_scenario
from .sensor import REFERENCE_TUBE_ID_M, DpsModel, TubeAssembly, step_response
from .waveform import SegmentSchedule, forged_pressure_estimate

NOISE_FLOOR_PA = 0.1
"""Residual forged pressure below this is indistinguishable from noise."""

SETTLE_BAND_FRACTION = 0.05
ENCLOSURE_LAG_S_PER_UNIT = 1e-3
COUNTERMEASURE_KINDS = ("long_tube", "enclosure", "lpf", "raised_setpoint")
ATTACK_PORT_PLACEMENTS = ("low_port", "high_port", "common_high_port")


class CutoffError(ValueError):
    """Low-pass cutoff at or beyond the Nyquist rate of the series."""


@dataclass(frozen=True)
class Countermeasure:
    """One defense with its single tunable parameter.

    Use the classmethod constructors; the generic initializer mostly
    exists for config loaders.
    """

    kind: str
    tube_length_m: float | None = None
    extra_loss_db: float | None = None
    cutoff_hz: float | None = None
    order: int = 1
    setpoint_pa: float | None = None
    applied_to: str = "hvac"

    def __post_init__(self) -> None:
        if self.kind not in COUNTERMEASURE_KINDS:
            raise ValueError(f"unknown countermeasure kind {self.kind!r}")
        if self.applied_to not in ATTACK_TARGETS:
            raise ValueError(f"applied_to must be one of {ATTACK_TARGETS}")
        if self.order < 1:
            raise ValueError(f"filter order must be >= 1, got {self.order}")
        required = {
            "long_tube": self.tube_length_m,
            "enclosure": self.extra_loss_db,
            "lpf": self.cutoff_hz,
            "raised_setpoint": self.setpoint_pa,
        }[self.kind]
        if required is None:
            raise ValueError(f"countermeasure {self.kind!r} is missing its parameter")
        if self.kind == "long_tube" and self.tube_length_m <= 0.0:
            raise ValueError("tube length must be > 0")
        if self.kind == "enclosure" and self.extra_loss_db < 0.0:
            raise ValueError("enclosure loss must be >= 0 dB")
        if self.kind == "lpf" and self.cutoff_hz <= 0.0:
            raise ValueError("cutoff must be > 0 Hz")
        if self.kind == "raised_setpoint" and self.setpoint_pa >= 0.0:
            raise ValueError("raised setpoint must still be negative")

    @classmethod
    def long_tube(cls, length_m: float) -> Countermeasure:
        return cls(kind="long_tube", tube_length_m=float(length_m))

    @classmethod
    def enclosure(cls, extra_loss_db: float) -> Countermeasure:
        return cls(kind="enclosure", extra_loss_db=float(extra_loss_db))

    @classmethod
    def lpf(cls, cutoff_hz: float, order: int = 1) -> Countermeasure:
        return cls(kind="lpf", cutoff_hz=float(cutoff_hz), order=int(order))

    @classmethod
    def raised_setpoint(cls, setpoint_pa: float) -> Countermeasure:
        return cls(kind="raised_setpoint", setpoint_pa=float(setpoint_pa))


@dataclass(frozen=True)
class AcousticAttackSetup:
    """The deployed attack: source, burst plan, and the chain it reaches.

    target_f_hz is the frequency the attacker tuned the bursts to when the
    system was characterized.  Countermeasure evaluation keeps it fixed:
    a defense that moves the resonance is judged against the attack as
    deployed, not against an attacker who re-characterizes afterwards.
    """

    model: DpsModel
    tube: TubeAssembly | None
    source: AcousticSource
    schedule: SegmentSchedule
    placement: str = "high_port"
    affects: str = "both"
    target_f_hz: float | None = None

    def __post_init__(self) -> None:
        if self.placement not in ATTACK_PORT_PLACEMENTS:
            raise ValueError(f"placement must be one of {ATTACK_PORT_PLACEMENTS}")
        if self.affects not in ATTACK_TARGETS:
            raise ValueError(f"affects must be one of {ATTACK_TARGETS}")


@dataclass(frozen=True)
class CountermeasureReport:
    kind: str
    baseline_forged_pa: float
    residual_forged_pa: float
    attack_success: bool
    sensitivity_penalty_s: float

    @property
    def below_noise_floor(self) -> bool:
        return self.residual_forged_pa < NOISE_FLOOR_PA


def apply_lpf(signal: np.ndarray, cutoff_hz: float, dt: float) -> np.ndarray:
    """First-order discrete low-pass with unit DC gain.

    The state starts at the first input value, so a series that begins
    settled passes through without a spurious startup transient; in
    particular a constant series is returned unchanged.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    nyquist = 0.5 / dt
    if not 0.0 < cutoff_hz < nyquist:
        raise CutoffError(f"cutoff {cutoff_hz} Hz must lie in (0, {nyquist:.0f}) Hz")
    x = np.asarray(signal, dtype=float)
    if x.size == 0:
        return x.copy()
    a = 1.0 - math.exp(-2.0 * math.pi * cutoff_hz * dt)
    y, _state = lfilter([a], [1.0, a - 1.0], x, zi=[(1.0 - a) * x[0]])
    return y


def lpf_cascade(signal: np.ndarray, cutoff_hz: float, dt: float, order: int = 1) -> np.ndarray:
    """apply_lpf repeated order times (identical sections in series)."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    out = np.asarray(signal, dtype=float)
    for _ in range(order):
        out = apply_lpf(out, cutoff_hz, dt)
    return out


def enclosure_lag_s(extra_loss_db: float) -> float:
    """Equalization lag a gasketed enclosure adds to slow pressure changes.

    The same sealing that blocks airborne sound slows static equalization
    through the enclosure's leak path.  Modeled as a first-order lag that
    grows with the insertion loss and vanishes at 0 dB.
    """
    if extra_loss_db < 0.0:
        raise ValueError("enclosure loss must be >= 0 dB")
    return ENCLOSURE_LAG_S_PER_UNIT * (10.0 ** (extra_loss_db / 20.0) - 1.0)


def measurement_settle_time_s(
    model: DpsModel,
    tube: TubeAssembly | None,
    *,
    lpf_cutoff_hz: float | None = None,
    lpf_order: int = 1,
    extra_lag_s: float = 0.0,
    step_pa: float = 1.0,
    duration_s: float = 0.5,
) -> float:
    """Time for the measurement chain to settle within 5% of a step.

    Drives the transducer with a legitimate pressure step and follows it
    through any post-sensor filter and enclosure equalization lag; the
    result is the sensitivity cost metric countermeasure reports carry.
    """
    fs = model.sample_rate_hz
    n = int(round(duration_s * fs))
    dt = 1.0 / fs
    trace = step_response(model, tube, np.full(n, step_pa), dt)
    out = trace.p_out_pa
    if extra_lag_s > 0.0:
        a = 1.0 - math.exp(-dt / extra_lag_s)
        out, _state = lfilter([a], [1.0, a - 1.0], out, zi=[0.0])
    if lpf_cutoff_hz is not None:
        out = lpf_cascade(out, lpf_cutoff_hz, dt, lpf_order)
    tolerance = SETTLE_BAND_FRACTION * abs(step_pa)
    outside = np.flatnonzero(np.abs(out - step_pa) >= tolerance)
    if outside.size == 0:
        return 0.0
    if outside[-1] == n - 1:
        raise ValueError("step response did not settle within the window")
    return float((outside[-1] + 1) * dt)


def _attacked_tube(attack: AcousticAttackSetup) -> TubeAssembly:
    if attack.tube is not None:
        return attack.tube
    return TubeAssembly(length_m=0.0, inner_diameter_m=REFERENCE_TUBE_ID_M)


def evaluate_countermeasure(
    scenario: NprScenario,
    cm: Countermeasure,
    attack: AcousticAttackSetup | None = None,
    horizon_s: float | None = None,
) -> CountermeasureReport:
    """Score one defense against one deployed attack.

    The forged reading is recomputed through the defended chain, the
    closed loop is rerun with that residual injected at the attack's
    port, and the report states whether the room still crosses into
    positive pressure plus what the defense costs in settle time on a
    1 Pa legitimate step.

    When attack is None the scenario's wired-in forged magnitude is used
    directly; only raised_setpoint can be evaluated that way, since the
    other defenses act on the acoustic path itself.
    """
    if attack is None:
        if cm.kind != "raised_setpoint":
            raise ValueError(f"{cm.kind} evaluation needs the acoustic attack setup")
        baseline = scenario.wiring.attack.forged_pa
        placement = scenario.wiring.attack.placement
        affects = scenario.wiring.attack.affects
        if placement == "none":
            raise ValueError("scenario carries no attack to defend against")
    else:
        baseline = forged_pressure_estimate(
            attack.schedule, attack.model, attack.tube, attack.source,
            target_f_hz=attack.target_f_hz,
        )
        placement = attack.placement
        affects = attack.affects

    residual = baseline
    run_scenario = scenario
    penalty_s = 0.0

    if cm.kind == "long_tube":
        base_tube = _attacked_tube(attack)
        new_tube = replace(base_tube, length_m=cm.tube_length_m)
        residual = forged_pressure_estimate(
            attack.schedule, attack.model, new_tube, attack.source,
            target_f_hz=attack.target_f_hz,
        )
        penalty_s = measurement_settle_time_s(attack.model, new_tube) - measurement_settle_time_s(
            attack.model, attack.tube
        )
    elif cm.kind == "enclosure":
        residual = forged_pressure_estimate(
            attack.schedule, attack.model, attack.tube, attack.source,
            target_f_hz=attack.target_f_hz, extra_loss_db=cm.extra_loss_db,
        )
        lag = enclosure_lag_s(cm.extra_loss_db)
        penalty_s = measurement_settle_time_s(
            attack.model, attack.tube, extra_lag_s=lag
        ) - measurement_settle_time_s(attack.model, attack.tube)
    elif cm.kind == "lpf":

        def post(series: np.ndarray, fs: int) -> np.ndarray:
            return lpf_cascade(series, cm.cutoff_hz, 1.0 / fs, cm.order)

        residual = forged_pressure_estimate(
            attack.schedule, attack.model, attack.tube, attack.source,
            target_f_hz=attack.target_f_hz, post_filter=post,
        )
        penalty_s = measurement_settle_time_s(
            attack.model, attack.tube, lpf_cutoff_hz=cm.cutoff_hz, lpf_order=cm.order
        ) - measurement_settle_time_s(attack.model, attack.tube)
    elif cm.kind == "raised_setpoint":
        rooms = tuple(
            replace(room, controller=replace(room.controller, setpoint_pa=cm.setpoint_pa))
            for room in scenario.rooms
        )
        run_scenario = replace(scenario, rooms=rooms)

    plan = AttackPlan(placement=placement, forged_pa=residual, affects=affects)
    run_scenario = replace(run_scenario, wiring=replace(run_scenario.wiring, attack=plan))
    trace = simulate_scenario(run_scenario, horizon_s)
    success = bool(np.any(trace.steady_true_pd_pa() > 0.0))
    return CountermeasureReport(
        kind=cm.kind,
        baseline_forged_pa=float(baseline),
        residual_forged_pa=float(residual),
        attack_success=success,
        sensitivity_penalty_s=float(max(0.0, penalty_s)),
    )
