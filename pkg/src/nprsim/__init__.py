"""Simulation toolkit for acoustic resonance attacks on negative-pressure rooms.

Models the full chain: an audio source emitting resonant tone bursts, the
acoustic path into a differential pressure sensor, the sensor's second-order
response, the room's ventilation control loop acting on the corrupted
reading, and candidate countermeasures.
"""

__version__ = "0.1.0"

from .sensor import (
    DpsModel,
    NO_TUBE,
    NoResonanceError,
    SweepResult,
    Transducer,
    TransducerTrace,
    TubeAssembly,
    UnstableStepError,
    archetype,
    frequency_sweep,
    helmholtz_resonant_hz,
    load_archetypes,
    natural_resonant_hz,
    peak_decay,
    step_response,
    step_response_fn,
    system_resonant_hz,
)
from .acoustics import (
    AcousticSource,
    PathModel,
    port_pressure,
    propagate,
    spl_to_pressure_amp,
)
from .waveform import (
    AudioBuffer,
    ClippingError,
    ScheduleError,
    SegmentSchedule,
    attack_response_trace,
    calibration_carrier,
    forged_pressure_estimate,
    psd_ratio,
    read_wav,
    segment_mask,
    suppress_band,
    synthesize_attack,
    write_wav,
)
from .plant import (
    AlarmConfig,
    AlarmEvent,
    AttackPlan,
    ControllerConfig,
    DpsBinding,
    FanState,
    NprScenario,
    PortWiring,
    RoomConfig,
    RoomState,
    SimulationTrace,
    WiringError,
    balanced_fans,
    controller_step,
    measured_differential,
    period_average_offsets,
    rpm_alarm,
    simulate_dual_dps,
    simulate_multi_room,
    simulate_scenario,
)
from .countermeasures import (
    AcousticAttackSetup,
    Countermeasure,
    CountermeasureReport,
    CutoffError,
    apply_lpf,
    enclosure_lag_s,
    evaluate_countermeasure,
    lpf_cascade,
    measurement_settle_time_s,
)
from .scenario import LoadedScenario, ScenarioError, load_scenario, parse_scenario

__all__ = [
    "AcousticAttackSetup",
    "AcousticSource",
    "AlarmConfig",
    "AlarmEvent",
    "AttackPlan",
    "AudioBuffer",
    "ClippingError",
    "ControllerConfig",
    "Countermeasure",
    "CountermeasureReport",
    "CutoffError",
    "DpsBinding",
    "DpsModel",
    "FanState",
    "LoadedScenario",
    "NO_TUBE",
    "NoResonanceError",
    "NprScenario",
    "PathModel",
    "PortWiring",
    "RoomConfig",
    "RoomState",
    "ScenarioError",
    "ScheduleError",
    "SegmentSchedule",
    "SimulationTrace",
    "SweepResult",
    "Transducer",
    "TransducerTrace",
    "TubeAssembly",
    "UnstableStepError",
    "WiringError",
    "apply_lpf",
    "archetype",
    "attack_response_trace",
    "balanced_fans",
    "calibration_carrier",
    "controller_step",
    "enclosure_lag_s",
    "evaluate_countermeasure",
    "forged_pressure_estimate",
    "frequency_sweep",
    "helmholtz_resonant_hz",
    "load_archetypes",
    "load_scenario",
    "lpf_cascade",
    "measured_differential",
    "measurement_settle_time_s",
    "natural_resonant_hz",
    "parse_scenario",
    "peak_decay",
    "period_average_offsets",
    "port_pressure",
    "propagate",
    "psd_ratio",
    "read_wav",
    "rpm_alarm",
    "segment_mask",
    "simulate_dual_dps",
    "simulate_multi_room",
    "simulate_scenario",
    "spl_to_pressure_amp",
    "step_response",
    "step_response_fn",
    "suppress_band",
    "synthesize_attack",
    "system_resonant_hz",
    "write_wav",
]
