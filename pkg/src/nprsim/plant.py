"""Closed-loop negative-pressure room simulation.

A room is one lumped pressure node on the same gauge scale as the hallway
datum.  Supply and exhaust fans inject and remove air with a first-order
speed lag, leakage flows through the envelope in proportion to the
room-to-hallway difference, and a periodic controller trims the fan
commands from the differential pressure it reads.  The reading can be
biased per port, which is how an acoustic spoofing attack enters the
loop: the upstream sensor pipeline reduces to a per-port offset on the
true pressures, and everything downstream reacts as if it were real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sensor import DpsModel, TubeAssembly

HALLWAY_PA = 12.5
"""Hallway absolute gauge pressure, the datum all rooms are read against."""

ADIABATIC_BULK_MODULUS_PA = 1.4 * 101325.0
"""Stiffness of air for fast volume changes, gamma times atmospheric."""

SUBSTEPS_PER_PERIOD = 20
STEADY_SLOPE_PA_PER_S = 1e-3
STEADY_HOLD_S = 5.0

ATTACK_PLACEMENTS = ("none", "low_port", "high_port", "common_high_port")
ATTACK_TARGETS = ("hvac", "rpm", "both")


class WiringError(ValueError):
    """Scenario wiring that cannot be simulated as declared."""


@dataclass(frozen=True)
class RoomState:
    """Snapshot of one room: gauge pressure plus its physical constants."""

    pressure_pa: float
    volume_m3: float = 50.0
    leak_coeff_m3ps_per_pa: float = 0.004

    def __post_init__(self) -> None:
        if self.volume_m3 <= 0.0:
            raise ValueError(f"volume must be > 0, got {self.volume_m3}")
        if not math.isfinite(self.pressure_pa):
            raise ValueError("pressure must be finite")
        if self.leak_coeff_m3ps_per_pa <= 0.0:
            raise ValueError("leak coefficient must be > 0")


@dataclass(frozen=True)
class FanState:
    """Fan operating point: unit-range speed, capacity, and response lag."""

    speed_frac: float = 0.5
    max_flow_m3ps: float = 0.4
    time_constant_s: float = 2.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.speed_frac <= 1.0:
            raise ValueError(f"speed must lie in [0, 1], got {self.speed_frac}")
        if self.max_flow_m3ps <= 0.0:
            raise ValueError("fan capacity must be > 0")
        if self.time_constant_s <= 0.0:
            raise ValueError("fan time constant must be > 0")


@dataclass(frozen=True)
class ControllerConfig:
    """Periodic differential-pressure regulator settings.

    The controller wakes every control_period_s, compares the measured
    differential against the setpoint, and when the error is outside the
    deadband it shifts the two fan commands in opposite directions by
    gain times the part of the error that sticks out past the deadband
    edge.  The increment vanishes as the reading approaches the edge, so
    the loop parks there instead of hunting across the band.
    """

    setpoint_pa: float = -2.5
    gain: float = 0.0025
    control_period_s: float = 1.0
    deadband_pa: float = 0.2

    def __post_init__(self) -> None:
        if self.setpoint_pa >= 0.0:
            raise ValueError(f"negative-pressure setpoint required, got {self.setpoint_pa}")
        if self.gain <= 0.0:
            raise ValueError("gain must be > 0")
        if self.control_period_s <= 0.0:
            raise ValueError("control period must be > 0")
        if self.deadband_pa < 0.0:
            raise ValueError("deadband must be >= 0")


@dataclass(frozen=True)
class AlarmConfig:
    """Pressure monitor trip rule: sustained deviation beyond a threshold."""

    threshold_pa: float = 2.0
    dwell_s: float = 5.0

    def __post_init__(self) -> None:
        if self.threshold_pa <= 0.0:
            raise ValueError("alarm threshold must be > 0")
        if self.dwell_s < 0.0:
            raise ValueError("alarm dwell must be >= 0")


@dataclass(frozen=True)
class DpsBinding:
    """A sensor archetype plus the tube it samples through."""

    model: DpsModel
    tube: TubeAssembly | None = None


@dataclass(frozen=True)
class AttackPlan:
    """Forged-pressure injection as the plant sees it.

    The acoustic pipeline collapses to a reading offset at one port.
    forged_pa is that steady offset; offsets_pa optionally supplies one
    value per control period instead, for attacks whose average wanders.
    affects picks which sensing chain is exposed when the monitor has
    its own sensor: a source near the supervisory sensor's port does not
    reach an HVAC sensor plumbed elsewhere.
    """

    placement: str = "none"
    forged_pa: float = 0.0
    affects: str = "both"
    offsets_pa: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.placement not in ATTACK_PLACEMENTS:
            raise ValueError(f"unknown placement {self.placement!r}")
        if self.affects not in ATTACK_TARGETS:
            raise ValueError(f"unknown attack target {self.affects!r}")
        if self.forged_pa < 0.0:
            raise ValueError("forged pressure is a magnitude, must be >= 0")

    def offset_at(self, period_index: int) -> float:
        if self.offsets_pa is None:
            return self.forged_pa
        if not self.offsets_pa:
            return 0.0
        return self.offsets_pa[min(period_index, len(self.offsets_pa) - 1)]


@dataclass(frozen=True)
class PortWiring:
    """Sensor topology: which chains exist and where the attack couples."""

    hvac: DpsBinding | None = None
    rpm: DpsBinding | None = None
    common_high_port: bool = False
    attack: AttackPlan = field(default_factory=AttackPlan)

    @property
    def separate_rpm(self) -> bool:
        return self.rpm is not None


@dataclass(frozen=True)
class RoomConfig:
    """One room with its regulator; fans default to a balanced operating
    point that holds the setpoint exactly."""

    name: str = "room"
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    volume_m3: float = 50.0
    leak_coeff_m3ps_per_pa: float = 0.004
    supply_fan: FanState | None = None
    exhaust_fan: FanState | None = None
    initial_pressure_pa: float | None = None

    def __post_init__(self) -> None:
        if self.volume_m3 <= 0.0:
            raise ValueError("room volume must be > 0")
        if self.leak_coeff_m3ps_per_pa <= 0.0:
            raise ValueError("leak coefficient must be > 0")


@dataclass(frozen=True)
class NprScenario:
    """Everything one closed-loop run needs."""

    rooms: tuple[RoomConfig, ...]
    wiring: PortWiring = field(default_factory=PortWiring)
    alarm: AlarmConfig = field(default_factory=AlarmConfig)
    hallway_pa: float = HALLWAY_PA
    horizon_s: float = 120.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.rooms:
            raise ValueError("scenario needs at least one room")
        names = [r.name for r in self.rooms]
        if len(set(names)) != len(names):
            raise ValueError(f"room names must be unique, got {names}")
        periods = {r.controller.control_period_s for r in self.rooms}
        if len(periods) != 1:
            raise WiringError("all rooms must share one control period")
        placement = self.wiring.attack.placement
        if placement == "common_high_port" and not self.wiring.common_high_port:
            raise WiringError("common_high_port attack needs common_high_port wiring")
        if self.wiring.common_high_port and len(self.rooms) < 2:
            raise WiringError("a common high port implies at least 2 rooms")
        if self.wiring.attack.affects == "rpm" and not self.wiring.separate_rpm:
            raise WiringError("attack targets the monitor sensor but none is wired")

    @property
    def control_period_s(self) -> float:
        return self.rooms[0].controller.control_period_s


@dataclass(frozen=True)
class AlarmEvent:
    time_s: float
    room: str
    kind: str


@dataclass
class SimulationTrace:
    """Closed-loop run output, one row per control period."""

    times_s: np.ndarray
    true_pd_pa: np.ndarray
    measured_hvac_pa: np.ndarray
    measured_rpm_pa: np.ndarray
    supply_speed: np.ndarray
    exhaust_speed: np.ndarray
    alarm_events: list[AlarmEvent]
    converged: bool
    room_names: tuple[str, ...]
    hallway_pa: float

    def steady_true_pd_pa(self) -> np.ndarray:
        """Final true differential per room (meaningful once converged)."""
        return self.true_pd_pa[-1].copy()

    def raised_alarm_count(self) -> int:
        return sum(1 for e in self.alarm_events if e.kind == "raised")


def measured_differential(
    room: RoomState,
    hallway_pa: float,
    forged_low_pa: float = 0.0,
    forged_high_pa: float = 0.0,
) -> float:
    """Differential reading: low-port minus high-port, each with its bias.

    The sensor subtracts whatever its ports carry, so a spurious offset
    on either side lands directly in the reading.
    """
    for value in (room.pressure_pa, hallway_pa, forged_low_pa, forged_high_pa):
        if not math.isfinite(value):
            raise ValueError("measured_differential needs finite inputs")
    return (room.pressure_pa + forged_low_pa) - (hallway_pa + forged_high_pa)


def controller_step(
    cfg: ControllerConfig,
    measured_pa: float,
    supply_cmd: float,
    exhaust_cmd: float,
) -> tuple[float, float]:
    """One controller wakeup: trim fan commands toward the deadband edge.

    Reading above the setpoint band (not negative enough) slows supply
    and speeds exhaust; below it the opposite.  Commands clamp to [0, 1].
    """
    error = measured_pa - cfg.setpoint_pa
    if abs(error) <= cfg.deadband_pa:
        return supply_cmd, exhaust_cmd
    correction = cfg.gain * (error - math.copysign(cfg.deadband_pa, error))
    supply = min(1.0, max(0.0, supply_cmd - correction))
    exhaust = min(1.0, max(0.0, exhaust_cmd + correction))
    return supply, exhaust


def balanced_fans(room: RoomConfig) -> tuple[FanState, FanState]:
    """Fan pair whose steady flows hold the room exactly at its setpoint."""
    supply = room.supply_fan or FanState()
    exhaust = room.exhaust_fan or FanState()
    if room.supply_fan is None or room.exhaust_fan is None:
        shift = room.leak_coeff_m3ps_per_pa * room.controller.setpoint_pa / (2.0 * supply.max_flow_m3ps)
        if abs(shift) > 0.5:
            raise WiringError(
                f"room {room.name!r}: setpoint {room.controller.setpoint_pa} Pa "
                "exceeds what the default fans can hold"
            )
        if room.supply_fan is None:
            supply = FanState(0.5 + shift, supply.max_flow_m3ps, supply.time_constant_s)
        if room.exhaust_fan is None:
            exhaust = FanState(0.5 - shift, exhaust.max_flow_m3ps, exhaust.time_constant_s)
    return supply, exhaust


def _port_offsets(attack: AttackPlan, chain: str, period_index: int) -> tuple[float, float]:
    """(low, high) reading bias for one sensing chain at one period."""
    if attack.placement == "none":
        return 0.0, 0.0
    if attack.affects != "both" and attack.affects != chain:
        return 0.0, 0.0
    value = attack.offset_at(period_index)
    if attack.placement == "low_port":
        return value, 0.0
    return 0.0, value


def simulate_scenario(scenario: NprScenario, horizon_s: float | None = None) -> SimulationTrace:
    """Run the closed loop and return its per-period trace.

    Rooms integrate exactly between controller wakeups: within each of
    the SUBSTEPS_PER_PERIOD slices the fan flows are frozen, the room
    pressure relaxes exponentially toward the balance point those flows
    define, then the fan speeds take their own exact first-order step
    toward the commands.  Convergence means the pressure slope stayed
    under STEADY_SLOPE_PA_PER_S for STEADY_HOLD_S; a run that never gets
    there is returned with converged False rather than raised.
    """
    horizon = scenario.horizon_s if horizon_s is None else horizon_s
    period = scenario.control_period_s
    n_periods = int(round(horizon / period))
    if n_periods < 10:
        raise ValueError(f"horizon must cover at least 10 control periods, got {n_periods}")

    rooms = scenario.rooms
    n_rooms = len(rooms)
    attack = scenario.wiring.attack
    hall = scenario.hallway_pa

    pressure = np.empty(n_rooms)
    sup_speed = np.empty(n_rooms)
    exh_speed = np.empty(n_rooms)
    sup_cmd = np.empty(n_rooms)
    exh_cmd = np.empty(n_rooms)
    flow_cap = np.empty(n_rooms)
    leak = np.empty(n_rooms)
    decay_room = np.empty(n_rooms)
    decay_fan = np.empty(n_rooms)

    dt_sub = period / SUBSTEPS_PER_PERIOD
    for i, room in enumerate(rooms):
        supply, exhaust = balanced_fans(room)
        sup_speed[i] = sup_cmd[i] = supply.speed_frac
        exh_speed[i] = exh_cmd[i] = exhaust.speed_frac
        flow_cap[i] = supply.max_flow_m3ps
        leak[i] = room.leak_coeff_m3ps_per_pa
        tau_room = room.volume_m3 / (ADIABATIC_BULK_MODULUS_PA * leak[i])
        decay_room[i] = math.exp(-dt_sub / tau_room)
        decay_fan[i] = math.exp(-dt_sub / supply.time_constant_s)
        if room.initial_pressure_pa is None:
            pressure[i] = hall + room.controller.setpoint_pa
        else:
            pressure[i] = room.initial_pressure_pa

    n_rows = n_periods + 1
    times = np.arange(n_rows) * period
    true_pd = np.empty((n_rows, n_rooms))
    meas_hvac = np.empty((n_rows, n_rooms))
    meas_rpm = np.empty((n_rows, n_rooms))
    sup_trace = np.empty((n_rows, n_rooms))
    exh_trace = np.empty((n_rows, n_rooms))

    for k in range(n_rows):
        hvac_low, hvac_high = _port_offsets(attack, "hvac", k)
        if scenario.wiring.separate_rpm:
            rpm_low, rpm_high = _port_offsets(attack, "rpm", k)
        else:
            rpm_low, rpm_high = hvac_low, hvac_high
        true_pd[k] = pressure - hall
        meas_hvac[k] = true_pd[k] + hvac_low - hvac_high
        meas_rpm[k] = true_pd[k] + rpm_low - rpm_high
        sup_trace[k] = sup_speed
        exh_trace[k] = exh_speed
        if k == n_periods:
            break

        for i, room in enumerate(rooms):
            sup_cmd[i], exh_cmd[i] = controller_step(
                room.controller, float(meas_hvac[k, i]), float(sup_cmd[i]), float(exh_cmd[i])
            )
        for _ in range(SUBSTEPS_PER_PERIOD):
            balance = hall + (sup_speed - exh_speed) * flow_cap / leak
            pressure = balance + (pressure - balance) * decay_room
            sup_speed = sup_cmd + (sup_speed - sup_cmd) * decay_fan
            exh_speed = exh_cmd + (exh_speed - exh_cmd) * decay_fan

    events: list[AlarmEvent] = []
    for i, room in enumerate(rooms):
        events.extend(
            rpm_alarm(times, meas_rpm[:, i], room.controller.setpoint_pa, scenario.alarm, room.name)
        )
    events.sort(key=lambda e: (e.time_s, e.room))

    hold_rows = max(1, int(math.ceil(STEADY_HOLD_S / period)))
    converged = False
    if n_rows > hold_rows:
        slopes = np.abs(np.diff(true_pd[-(hold_rows + 1):], axis=0)) / period
        converged = bool(np.all(slopes < STEADY_SLOPE_PA_PER_S))

    return SimulationTrace(
        times_s=times,
        true_pd_pa=true_pd,
        measured_hvac_pa=meas_hvac,
        measured_rpm_pa=meas_rpm,
        supply_speed=sup_trace,
        exhaust_speed=exh_trace,
        alarm_events=events,
        converged=converged,
        room_names=tuple(r.name for r in rooms),
        hallway_pa=hall,
    )


def simulate_dual_dps(scenario: NprScenario, horizon_s: float | None = None) -> tuple[SimulationTrace, bool]:
    """Run a scenario whose monitor has its own sensor chain.

    Returns the trace plus the alarm verdict (True when any alarm was
    raised).  The interesting cases: spoofing only the control chain
    moves the room while the clean monitor catches it, and spoofing both
    chains equally moves the room silently.
    """
    if not scenario.wiring.separate_rpm:
        raise WiringError("dual-sensor run needs wiring with its own monitor sensor")
    trace = simulate_scenario(scenario, horizon_s)
    return trace, trace.raised_alarm_count() > 0


def simulate_multi_room(scenario: NprScenario, horizon_s: float | None = None) -> SimulationTrace:
    """Run several rooms whose high-port reference is one shared point."""
    if len(scenario.rooms) < 2:
        raise WiringError("multi-room run needs at least 2 rooms")
    if not scenario.wiring.common_high_port:
        raise WiringError("multi-room run needs common_high_port wiring")
    return simulate_scenario(scenario, horizon_s)


def rpm_alarm(
    times_s: np.ndarray,
    measured_pa: np.ndarray,
    setpoint_pa: float,
    cfg: AlarmConfig,
    room: str = "room",
) -> list[AlarmEvent]:
    """Trip events for a measured-differential series.

    Raised once the deviation from setpoint exceeds the threshold
    continuously for the dwell; cleared when it falls back under 90% of
    the threshold, so a reading chattering right at the limit does not
    retrigger.
    """
    times = np.asarray(times_s, dtype=float)
    series = np.asarray(measured_pa, dtype=float)
    if times.shape != series.shape or times.ndim != 1:
        raise ValueError("times and measured series must be 1-D and equal length")
    deviation = np.abs(series - setpoint_pa)
    events: list[AlarmEvent] = []
    active = False
    violation_start: float | None = None
    for t, dev in zip(times, deviation):
        if active:
            if dev < 0.9 * cfg.threshold_pa:
                events.append(AlarmEvent(float(t), room, "cleared"))
                active = False
                violation_start = None
            continue
        if dev > cfg.threshold_pa:
            if violation_start is None:
                violation_start = float(t)
            if t - violation_start >= cfg.dwell_s:
                events.append(AlarmEvent(float(t), room, "raised"))
                active = True
        else:
            violation_start = None
    return events


def period_average_offsets(
    p_out_pa: np.ndarray,
    sample_rate_hz: float,
    control_period_s: float,
    reading_gain: float = 1.0,
) -> tuple[float, ...]:
    """Signed per-period averages of a sensor output series.

    This is the reading a slow controller extracts from an audio-rate
    sensor trace: the plain moving average over one control period.  A
    symmetric oscillation averages out here, which is why an unscheduled
    resonance barely moves the loop, while a burst train shaped to decay
    from its peak holds a one-sided average.
    """
    samples = np.asarray(p_out_pa, dtype=float)
    chunk = int(round(control_period_s * sample_rate_hz))
    if chunk < 1:
        raise ValueError("control period must cover at least one sample")
    n_chunks = samples.size // chunk
    if n_chunks == 0:
        raise ValueError("series shorter than one control period")
    trimmed = samples[: n_chunks * chunk].reshape(n_chunks, chunk)
    return tuple(float(v) for v in reading_gain * trimmed.mean(axis=1))
