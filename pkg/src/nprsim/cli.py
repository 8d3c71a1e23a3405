"""Command line front end.

One executable with five subcommands: run a closed-loop scenario, embed
an attack burst train in audio, characterize a sensor's resonance, sweep
one attack parameter, and evaluate a countermeasure.  Every run is
deterministic: the same inputs produce byte-identical output files, and
all validation happens before anything is written.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .countermeasures import Countermeasure, evaluate_countermeasure
from .plant import SimulationTrace, simulate_scenario
from .scenario import ScenarioError, load_scenario
from .sensor import (
    NoResonanceError,
    TubeAssembly,
    archetype,
    frequency_sweep,
    load_archetypes,
    system_resonant_hz,
)
from .waveform import (
    AudioBuffer,
    ClippingError,
    ScheduleError,
    SegmentSchedule,
    forged_pressure_estimate,
    psd_ratio,
    read_wav,
    segment_mask,
    synthesize_attack,
    write_wav,
)

SWEEP_AXES = ("tube_length", "tube_diameter", "spl", "distance", "ti", "td", "pickup")


class CliError(Exception):
    """A user-input problem; main() turns it into exit code 2."""


def _num(value: float) -> str:
    return "%.6g" % value


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _alarm_flags(trace: SimulationTrace, room: str) -> np.ndarray:
    """0/1 alarm-active flag per trace row, rebuilt from the event log."""
    flags = np.zeros(trace.times_s.size, dtype=int)
    active_from: float | None = None
    spans = []
    for event in trace.alarm_events:
        if event.room != room:
            continue
        if event.kind == "raised" and active_from is None:
            active_from = event.time_s
        elif event.kind == "cleared" and active_from is not None:
            spans.append((active_from, event.time_s))
            active_from = None
    if active_from is not None:
        spans.append((active_from, float(trace.times_s[-1]) + 1.0))
    for start, stop in spans:
        flags[(trace.times_s >= start) & (trace.times_s < stop)] = 1
    return flags


def cmd_simulate(args: argparse.Namespace) -> int:
    loaded = load_scenario(args.scenario)
    scenario = loaded.resolved()
    trace = simulate_scenario(scenario)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    header = ["time_s"]
    for name in trace.room_names:
        header += [
            f"true_pd_{name}", f"hvac_pd_{name}", f"rpm_pd_{name}",
            f"supply_{name}", f"exhaust_{name}", f"alarm_{name}",
        ]
    flags = {name: _alarm_flags(trace, name) for name in trace.room_names}
    rows = []
    for k in range(trace.times_s.size):
        row = [_num(float(trace.times_s[k]))]
        for j, name in enumerate(trace.room_names):
            row += [
                _num(float(trace.true_pd_pa[k, j])),
                _num(float(trace.measured_hvac_pa[k, j])),
                _num(float(trace.measured_rpm_pa[k, j])),
                _num(float(trace.supply_speed[k, j])),
                _num(float(trace.exhaust_speed[k, j])),
                str(int(flags[name][k])),
            ]
        rows.append(row)
    _write_csv(out_dir / "trace.csv", header, rows)

    plan = scenario.wiring.attack
    steady = trace.steady_true_pd_pa()
    lines = [
        f"scenario: {loaded.source_path if loaded.source_path else '<inline>'}",
        f"converged: {'yes' if trace.converged else 'no'}",
        f"hallway_pa: {_num(scenario.hallway_pa)}",
    ]
    if plan.placement == "none":
        lines.append("attack: none")
    else:
        lines.append(
            f"attack: placement={plan.placement} affects={plan.affects} "
            f"forged_pa={_num(plan.forged_pa)}"
        )
    for j, name in enumerate(trace.room_names):
        room = scenario.rooms[j]
        lines.append(
            f"room {name}: setpoint_pa={_num(room.controller.setpoint_pa)} "
            f"steady_true_pd_pa={_num(float(steady[j]))} "
            f"steady_hvac_pd_pa={_num(float(trace.measured_hvac_pa[-1, j]))} "
            f"steady_rpm_pd_pa={_num(float(trace.measured_rpm_pa[-1, j]))}"
        )
    lines.append(f"alarms_raised: {trace.raised_alarm_count()}")
    for event in trace.alarm_events:
        lines.append(f"  t={_num(event.time_s)} room={event.room} {event.kind}")
    lost = bool(np.any(steady > 0.0))
    lines.append(f"containment_lost: {'yes' if lost else 'no'}")
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    return 0 if trace.converged else 3


def _synth_schedule(args: argparse.Namespace) -> SegmentSchedule:
    cycles: int | tuple[int, ...] | None = None
    if args.cycles:
        try:
            parsed = tuple(int(part) for part in args.cycles.split(","))
        except ValueError as exc:
            raise CliError(f"--cycles expects integers, got {args.cycles!r}") from exc
        cycles = parsed[0] if len(parsed) == 1 else parsed
    try:
        return SegmentSchedule(
            band_hz=(args.band[0], args.band[1]),
            duration_s=args.td_ms / 1e3,
            interval_s=args.ti_ms / 1e3,
            cycles=cycles,
            amplitude_scale=args.amplitude_scale,
            fade_in_s=args.fade_in_ms / 1e3,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_synth(args: argparse.Namespace) -> int:
    schedule = _synth_schedule(args)
    if args.carrier is not None:
        try:
            carrier = read_wav(args.carrier)
        except (OSError, ValueError) as exc:
            raise CliError(f"cannot read carrier {args.carrier}: {exc}") from exc
    else:
        n = int(round(args.silence * args.rate))
        if n <= 0:
            raise CliError("--silence must cover at least one sample")
        carrier = AudioBuffer(sample_rate_hz=args.rate, samples=np.zeros(n))

    try:
        attacked = synthesize_attack(carrier, schedule, target_f_hz=args.target_hz)
    except (ScheduleError, ClippingError) as exc:
        raise CliError(str(exc)) from exc

    target = args.target_hz if args.target_hz is not None else schedule.target_hz()
    mask = segment_mask(schedule, target, attacked.samples.size, attacked.sample_rate_hz)
    ratio = psd_ratio(attacked, schedule.band_hz, mask)

    out_path = Path(args.out)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    write_wav(out_path, attacked)
    report_path = Path(args.report) if args.report else out_path.with_suffix(
        out_path.suffix + ".psd.txt")
    report = [
        f"output: {out_path}",
        f"band_hz: {_num(schedule.band_hz[0])} {_num(schedule.band_hz[1])}",
        f"target_hz: {_num(target)}",
        f"burst_ms: {_num(schedule.duration_s * 1e3)}",
        f"interval_ms: {_num(schedule.interval_s * 1e3)}",
        f"psd_ratio: {_num(ratio)}",
    ]
    report_path.write_text("\n".join(report) + "\n", encoding="utf-8")
    print("\n".join(report))
    return 0


def _characterize_one(
    part_id: str,
    tube: TubeAssembly | None,
    damping: float,
    lo: float | None,
    hi: float | None,
    step: float,
    dwell: float,
) -> list[str]:
    model = archetype(part_id).with_damping(damping)
    analytic = system_resonant_hz(model, tube)
    if lo is None or hi is None:
        if tube is None:
            lo_hz, hi_hz = 50.0, 40_000.0
        else:
            lo_hz, hi_hz = 0.7 * analytic, 1.3 * analytic
    else:
        lo_hz, hi_hz = lo, hi
    length = tube.length_m if tube is not None else 0.0
    try:
        sweep = frequency_sweep(model, tube, lo_hz, hi_hz, step, dwell_s=dwell)
    except NoResonanceError:
        return [part_id, _num(length), _num(analytic), "", "", "", "", "not_found"]
    delta = sweep.center_hz - analytic
    return [
        part_id, _num(length), _num(analytic), _num(sweep.center_hz),
        _num(sweep.band_hz[0]), _num(sweep.band_hz[1]), _num(delta), "found",
    ]


def cmd_characterize(args: argparse.Namespace) -> int:
    if args.archetype == "all":
        part_ids = sorted(load_archetypes())
    else:
        try:
            archetype(args.archetype)
        except (KeyError, ValueError) as exc:
            raise CliError(str(exc)) from exc
        part_ids = [args.archetype]

    tube = None
    if args.tube_length is not None:
        if args.tube_length <= 0.0:
            raise CliError("--tube-length must be positive; omit it for a bare port")
        tube = TubeAssembly(
            length_m=args.tube_length,
            inner_diameter_m=args.tube_diameter,
            pickup_device=args.pickup,
        )

    header = ["archetype", "tube_length_m", "analytic_hz", "detected_hz",
              "band_low_hz", "band_high_hz", "delta_hz", "status"]
    rows = [
        _characterize_one(part_id, tube, args.damping, args.lo, args.hi,
                          args.step, args.dwell)
        for part_id in part_ids
    ]
    print(",".join(header))
    for row in rows:
        print(",".join(row))
    if args.out:
        _write_csv(Path(args.out), header, rows)
    return 0


def _parse_grid(args: argparse.Namespace) -> list[float]:
    if args.values is not None:
        try:
            grid = [float(part) for part in args.values.split(",") if part.strip()]
        except ValueError as exc:
            raise CliError(f"--values expects numbers, got {args.values!r}") from exc
        if not grid:
            raise CliError("--values is empty")
        return grid
    if args.start is None or args.stop is None or args.step_by is None:
        raise CliError("give either --values or all of --start/--stop/--step")
    if args.step_by <= 0.0 or args.stop < args.start:
        raise CliError("grid needs --step > 0 and --stop >= --start")
    count = int(round((args.stop - args.start) / args.step_by)) + 1
    return [args.start + k * args.step_by for k in range(count)]


def cmd_sweep(args: argparse.Namespace) -> int:
    loaded = load_scenario(args.scenario)
    setup = loaded.attack_setup
    if setup is None:
        raise CliError("scenario declares no acoustic attack; nothing to sweep")
    grid = _parse_grid(args)

    if args.axis in ("tube_length", "tube_diameter", "pickup") and setup.tube is None:
        raise CliError(f"axis {args.axis} needs a sampling tube in the scenario")

    rows: list[list[str]] = []
    for value in grid:
        model, tube = setup.model, setup.tube
        source, schedule = setup.source, setup.schedule
        target = setup.target_f_hz
        if args.axis == "tube_length":
            tube = replace(tube, length_m=value)
            target = system_resonant_hz(model, tube)
        elif args.axis == "tube_diameter":
            tube = replace(tube, inner_diameter_m=value, cross_section_m2=None)
            target = system_resonant_hz(model, tube)
        elif args.axis == "spl":
            source = replace(source, spl_db=value)
        elif args.axis == "distance":
            source = replace(source, position_distance_m=value)
        elif args.axis == "ti":
            schedule = replace(schedule, interval_s=value / 1e3)
        elif args.axis == "td":
            schedule = replace(schedule, duration_s=value / 1e3)
        elif args.axis == "pickup":
            if value not in (0.0, 1.0):
                raise CliError("pickup axis takes values 0 or 1")
            tube = replace(tube, pickup_device=bool(value))
        try:
            forged = forged_pressure_estimate(
                schedule, model, tube, source, target_f_hz=target)
        except (ValueError, ScheduleError, ClippingError) as exc:
            raise CliError(f"{args.axis}={value:g}: {exc}") from exc
        rows.append([_num(value), _num(forged)])

    _write_csv(Path(args.out), [args.axis, "forged_pressure_pa"], rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _countermeasure_from_args(args: argparse.Namespace) -> Countermeasure | None:
    if args.kind is None:
        return None
    try:
        return Countermeasure(
            kind=args.kind,
            tube_length_m=args.cm_tube_length,
            extra_loss_db=args.extra_loss_db,
            cutoff_hz=args.cutoff_hz,
            order=args.order,
            setpoint_pa=args.setpoint_pa,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_evaluate_cm(args: argparse.Namespace) -> int:
    loaded = load_scenario(args.scenario)
    cm = _countermeasure_from_args(args)
    if cm is None:
        cm = loaded.countermeasure
    if cm is None:
        raise CliError("no countermeasure: give --kind or a countermeasure block")

    try:
        report = evaluate_countermeasure(loaded.scenario, cm, attack=loaded.attack_setup)
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ["kind", "baseline_forged_pa", "residual_forged_pa",
              "attack_success", "sensitivity_penalty_s", "below_noise_floor"]
    row = [
        report.kind, _num(report.baseline_forged_pa), _num(report.residual_forged_pa),
        "1" if report.attack_success else "0", _num(report.sensitivity_penalty_s),
        "1" if report.below_noise_floor else "0",
    ]
    _write_csv(out_dir / "report.csv", header, [row])
    text = [
        f"countermeasure: {report.kind}",
        f"baseline_forged_pa: {_num(report.baseline_forged_pa)}",
        f"residual_forged_pa: {_num(report.residual_forged_pa)}",
        f"attack_success: {'yes' if report.attack_success else 'no'}",
        f"sensitivity_penalty_s: {_num(report.sensitivity_penalty_s)}",
        f"residual_below_noise_floor: {'yes' if report.below_noise_floor else 'no'}",
    ]
    (out_dir / "report.txt").write_text("\n".join(text) + "\n", encoding="utf-8")
    print("\n".join(text))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nprsim",
        description="Acoustic attacks on negative-pressure room sensing, simulated.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario and export trace + summary")
    p_sim.add_argument("scenario", help="scenario YAML path")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_synth = sub.add_parser("synth", help="embed a resonant burst train in audio")
    src = p_synth.add_mutually_exclusive_group(required=True)
    src.add_argument("--carrier", help="input WAV to modify")
    src.add_argument("--silence", type=float, metavar="SECONDS",
                     help="synthesize over silence of this length instead")
    p_synth.add_argument("--rate", type=int, default=44_100,
                         help="sample rate for --silence (default 44100)")
    p_synth.add_argument("--out", required=True, help="output WAV path")
    p_synth.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"),
                         required=True, help="target band in Hz")
    p_synth.add_argument("--td-ms", type=float, required=True, help="burst length, ms")
    p_synth.add_argument("--ti-ms", type=float, required=True,
                         help="burst repetition interval, ms")
    p_synth.add_argument("--cycles", default=None,
                         help="whole tone cycles per burst, e.g. 1 or 1,2")
    p_synth.add_argument("--amplitude-scale", type=float, default=0.9)
    p_synth.add_argument("--fade-in-ms", type=float, default=0.0)
    p_synth.add_argument("--target-hz", type=float, default=None,
                         help="tone frequency (default band center)")
    p_synth.add_argument("--report", default=None,
                         help="PSD report path (default <out>.psd.txt)")
    p_synth.set_defaults(func=cmd_synth)

    p_char = sub.add_parser("characterize", help="locate a sensor's resonance by sweep")
    p_char.add_argument("--archetype", required=True,
                        help="catalog part number, or 'all'")
    p_char.add_argument("--damping", type=float, default=0.05,
                        help="damping ratio for the sweep (default 0.05)")
    p_char.add_argument("--tube-length", type=float, default=None,
                        help="sampling tube length in m (omit for bare port)")
    p_char.add_argument("--tube-diameter", type=float,
                        default=TubeAssembly(length_m=0.0).inner_diameter_m,
                        help="tube inner diameter in m")
    p_char.add_argument("--pickup", action="store_true",
                        help="include a pickup device on the tube")
    p_char.add_argument("--lo", type=float, default=None, help="sweep start, Hz")
    p_char.add_argument("--hi", type=float, default=None, help="sweep stop, Hz")
    p_char.add_argument("--step", type=float, default=10.0, help="grid step, Hz")
    p_char.add_argument("--dwell", type=float, default=0.003,
                        help="scored dwell per tone, s")
    p_char.add_argument("--out", default=None, help="also write rows to this CSV")
    p_char.set_defaults(func=cmd_characterize)

    p_sweep = sub.add_parser("sweep", help="forged pressure vs one attack parameter")
    p_sweep.add_argument("scenario", help="scenario YAML with an acoustic attack")
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--values", default=None,
                         help="comma-separated grid, e.g. 30,40,50")
    p_sweep.add_argument("--start", type=float, default=None)
    p_sweep.add_argument("--stop", type=float, default=None)
    p_sweep.add_argument("--step", dest="step_by", type=float, default=None)
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cm = sub.add_parser("evaluate-cm", help="evaluate a countermeasure against a scenario")
    p_cm.add_argument("scenario", help="scenario YAML path")
    p_cm.add_argument("--kind", default=None,
                      choices=("long_tube", "enclosure", "lpf", "raised_setpoint"),
                      help="override the scenario's countermeasure block")
    p_cm.add_argument("--tube-length", dest="cm_tube_length", type=float, default=None)
    p_cm.add_argument("--extra-loss-db", type=float, default=None)
    p_cm.add_argument("--cutoff-hz", type=float, default=None)
    p_cm.add_argument("--order", type=int, default=1)
    p_cm.add_argument("--setpoint-pa", type=float, default=None)
    p_cm.add_argument("--out", required=True, help="output directory")
    p_cm.set_defaults(func=cmd_evaluate_cm)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        for message in exc.messages:
            print(f"nprsim: {message}", file=sys.stderr)
        return 2
    except CliError as exc:
        print(f"nprsim: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"nprsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
