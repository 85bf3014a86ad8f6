"""Decision-rule recovery for evolved controllers.

A controller's behavior over the 36-point input lattice is a finite
truth table. This module enumerates that table directly from weights,
rebuilds it from trial logs, renders it in implication style, and runs
the inverse problem: given a stated rule set, find discretization
thresholds (and a listening direction) under which a weight set
reproduces them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .controller import (
    FALLBACK_POLICY,
    HIGH_IS_ONE,
    LOW_IS_ONE,
    ActuatorCommand,
    ControllerWeights,
    DiscretizationPolicy,
    SensorFrame,
    discretize,
    forward,
    input_lattice,
)

LATTICE_SIZE = 36


class RuleExtractionError(ValueError):
    """Malformed log input or a nondeterministic input->output mapping."""


@dataclass(frozen=True)
class RuleRecord:
    """One input frame and the command it maps to."""

    inputs: SensorFrame
    outputs: ActuatorCommand
    support: int = 1


@dataclass(frozen=True)
class RuleTable:
    """Deduplicated input->output mapping, sorted by input frame."""

    records: tuple[RuleRecord, ...]
    source_weights: Optional[ControllerWeights] = None
    policy: Optional[DiscretizationPolicy] = None

    def __post_init__(self) -> None:
        frames = [r.inputs for r in self.records]
        if len(set(frames)) != len(frames):
            raise RuleExtractionError("duplicate input frames in rule table")

    def mapping(self) -> dict[SensorFrame, ActuatorCommand]:
        return {r.inputs: r.outputs for r in self.records}

    def is_subset_of(self, other: "RuleTable") -> bool:
        theirs = other.mapping()
        return all(theirs.get(r.inputs) == r.outputs for r in self.records)


def _sorted_records(records: Iterable[RuleRecord]) -> tuple[RuleRecord, ...]:
    return tuple(sorted(records, key=lambda r: r.inputs.as_tuple()))


def enumerate_lattice(weights: ControllerWeights,
                      policy: DiscretizationPolicy) -> RuleTable:
    """Exhaustive rule table: one record per lattice frame."""
    records = [
        RuleRecord(inputs=frame, outputs=discretize(forward(weights, frame), policy))
        for frame in input_lattice()
    ]
    return RuleTable(records=_sorted_records(records),
                     source_weights=weights, policy=policy)


def extract_from_logs(lines: Iterable[str]) -> RuleTable:
    """Rebuild the observed rule table from trial-log lines.

    Accepts the world module's per-light log format (``tick,nodeId,I0..I3,
    Out0..Out2,lampEmitted,energyAccrued``); a leading header line is
    skipped. Two different outputs for one input frame raise, since the
    controller is deterministic.
    """
    from .world import parse_log_row

    seen: dict[SensorFrame, ActuatorCommand] = {}
    support: dict[SensorFrame, int] = {}
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        if line_no == 1 and line.startswith("tick"):
            continue
        row = parse_log_row(line)
        frame = SensorFrame(row.i0, row.i1, row.i2, row.i3)
        command = ActuatorCommand(row.out0, row.out1, row.out2)
        if frame in seen:
            if seen[frame] != command:
                raise RuleExtractionError(
                    f"line {line_no}: conflicting outputs for frame {frame.as_tuple()}: "
                    f"{seen[frame].as_tuple()} vs {command.as_tuple()}")
            support[frame] += 1
        else:
            seen[frame] = command
            support[frame] = 1
    records = [RuleRecord(inputs=f, outputs=c, support=support[f])
               for f, c in seen.items()]
    return RuleTable(records=_sorted_records(records))


def format_rules(table: RuleTable, include_support: bool = False) -> str:
    """Implication-style rendering, one rule per line, sorted by inputs."""
    lines = []
    for record in _sorted_records(table.records):
        i0, i1, i2, i3 = record.inputs.as_tuple()
        o0, o1, o2 = record.outputs.as_tuple()
        line = (f"(I_0 = {i0:.1f} ∧ I_1 = {i1:.1f} ∧ "
                f"I_2 = {i2:.1f} ∧ I_3 = {i3:.1f}) ⇒ "
                f"(Out_0 = {o0:.1f} ∧ Out_1 = {o1:.1f} ∧ Out_2 = {o2:.1f})")
        if include_support:
            line += f"  [support {record.support}]"
        lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")


def table_to_json_records(table: RuleTable) -> list[dict]:
    records = []
    for record in _sorted_records(table.records):
        records.append({
            "inputs": {
                "previousListeningDecision": record.inputs.previous_listening,
                "lightSensor": record.inputs.light_sensor,
                "motionSensor": record.inputs.motion_sensor,
                "wirelessReceiver": record.inputs.wireless_receiver,
            },
            "outputs": {
                "wirelessTransmitter": record.outputs.transmitter,
                "listeningDecision": record.outputs.listening,
                "lightDecision": record.outputs.light,
            },
            "support": record.support,
        })
    return records


# --- Consistency search -------------------------------------------------

# Feasibility of a threshold ladder against demanded outputs only depends
# on how thresholds order relative to the realized raw values, so the
# search works on exact interval bounds instead of a fixed-step sweep.

@dataclass(frozen=True)
class ThresholdInterval:
    """Half-open feasible interval [lo, hi) for one threshold."""

    lo: float
    hi: float

    @property
    def feasible(self) -> bool:
        return self.lo < self.hi

    def midpoint(self) -> float:
        return (self.lo + self.hi) / 2.0

    def contains(self, value: float) -> bool:
        return self.lo <= value < self.hi


@dataclass(frozen=True)
class ChannelFeasibility:
    """Feasible (t1, t2) region for one tri-level output channel."""

    t1: ThresholdInterval
    t2: ThresholdInterval

    @property
    def feasible(self) -> bool:
        # t1 < t2 must be satisfiable inside the two intervals.
        return (self.t1.feasible and self.t2.feasible
                and self.t1.lo < self.t2.hi)


@dataclass(frozen=True)
class RuleResidual:
    """Realized raw outputs for one stated rule."""

    inputs: SensorFrame
    demanded: ActuatorCommand
    transmitter_raw: float
    listening_raw: float
    light_raw: float


@dataclass(frozen=True)
class PolicySearchReport:
    found: bool
    policy: Optional[DiscretizationPolicy]
    per_rule: tuple[RuleResidual, ...]
    transmitter: ChannelFeasibility
    light: ChannelFeasibility
    listening_intervals: dict = field(default_factory=dict)
    feasible_directions: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "found": self.found,
            "policy": None if self.policy is None else {
                "lightThresholds": list(self.policy.light_thresholds),
                "transmitterThresholds": list(self.policy.transmitter_thresholds),
                "listeningThreshold": self.policy.listening_threshold,
                "listeningDirection": self.policy.listening_direction,
            },
            "perRule": [
                {
                    "inputs": list(r.inputs.as_tuple()),
                    "demanded": list(r.demanded.as_tuple()),
                    "raws": [r.transmitter_raw, r.listening_raw, r.light_raw],
                }
                for r in self.per_rule
            ],
            "feasibleIntervals": {
                "transmitterT1": [self.transmitter.t1.lo, self.transmitter.t1.hi],
                "transmitterT2": [self.transmitter.t2.lo, self.transmitter.t2.hi],
                "lightT1": [self.light.t1.lo, self.light.t1.hi],
                "lightT2": [self.light.t2.lo, self.light.t2.hi],
                "listening": {
                    direction: [interval.lo, interval.hi]
                    for direction, interval in self.listening_intervals.items()
                },
            },
            "feasibleDirections": list(self.feasible_directions),
        }


def _tri_channel_intervals(pairs: Sequence[tuple[float, float]]) -> ChannelFeasibility:
    """Feasible (t1, t2) for a strict-greater ladder.

    demanded 0.0 needs raw <= t1; demanded 0.5 needs t1 < raw <= t2;
    demanded 1.0 needs raw > t2.
    """
    t1_lo, t1_hi = 0.0, 1.0
    t2_lo, t2_hi = 0.0, 1.0
    for raw, demanded in pairs:
        if demanded == 0.0:
            t1_lo = max(t1_lo, raw)
        elif demanded == 0.5:
            t1_hi = min(t1_hi, raw)
            t2_lo = max(t2_lo, raw)
        else:
            t2_hi = min(t2_hi, raw)
    t2_lo = max(t2_lo, t1_lo)  # ladder needs t1 < t2
    return ChannelFeasibility(
        t1=ThresholdInterval(t1_lo, t1_hi),
        t2=ThresholdInterval(t2_lo, t2_hi),
    )


def _listening_intervals(pairs: Sequence[tuple[float, float]]) -> dict:
    """Feasible threshold per direction; ties map to the ``1`` side."""
    hi_lo, hi_hi = 0.0, 1.0  # highIsOne: 1 iff raw >= th
    lo_lo, lo_hi = 0.0, 1.0  # lowIsOne:  1 iff raw <= th
    for raw, demanded in pairs:
        if demanded == 1.0:
            hi_hi = min(hi_hi, raw)
            lo_lo = max(lo_lo, raw)
        else:
            hi_lo = max(hi_lo, raw)
            lo_hi = min(lo_hi, raw)
    return {
        HIGH_IS_ONE: ThresholdInterval(hi_lo, hi_hi),
        LOW_IS_ONE: ThresholdInterval(lo_lo, lo_hi),
    }


def _pick_t1_t2(channel: ChannelFeasibility) -> tuple[float, float]:
    t1 = channel.t1.midpoint()
    t2 = channel.t2.midpoint()
    if t1 >= t2:  # overlapping intervals; split the gap deterministically
        lo = max(channel.t1.lo, channel.t2.lo)
        hi = min(channel.t1.hi, channel.t2.hi)
        t1 = lo + (hi - lo) / 3.0
        t2 = lo + 2.0 * (hi - lo) / 3.0
    return t1, t2


def search_consistent_policy(weights: ControllerWeights,
                             target_rules: Sequence[RuleRecord]) -> PolicySearchReport:
    """Find a discretization policy under which all target rules hold.

    Infeasibility is a report outcome, not an error: the report always
    carries the per-rule raw values and the feasible threshold intervals
    per channel and listening direction.
    """
    residuals = []
    for rule in target_rules:
        raw = forward(weights, rule.inputs)
        residuals.append(RuleResidual(
            inputs=rule.inputs, demanded=rule.outputs,
            transmitter_raw=raw.transmitter,
            listening_raw=raw.listening,
            light_raw=raw.light,
        ))

    transmitter = _tri_channel_intervals(
        [(r.transmitter_raw, r.demanded.transmitter) for r in residuals])
    light = _tri_channel_intervals(
        [(r.light_raw, r.demanded.light) for r in residuals])
    listening = _listening_intervals(
        [(r.listening_raw, r.demanded.listening) for r in residuals])

    feasible_directions = tuple(
        direction for direction in (HIGH_IS_ONE, LOW_IS_ONE)
        if listening[direction].feasible)

    found = bool(feasible_directions) and transmitter.feasible and light.feasible
    policy = None
    if found:
        direction = feasible_directions[0]
        policy = DiscretizationPolicy(
            light_thresholds=_pick_t1_t2(light),
            transmitter_thresholds=_pick_t1_t2(transmitter),
            listening_threshold=listening[direction].midpoint(),
            listening_direction=direction,
        )
    return PolicySearchReport(
        found=found, policy=policy, per_rule=tuple(residuals),
        transmitter=transmitter, light=light,
        listening_intervals=listening,
        feasible_directions=feasible_directions,
    )


# The four decision rules the reference controller is known for; the
# consistency search recovers the default ladder from them.
REFERENCE_RULES = (
    RuleRecord(inputs=SensorFrame(1.0, 0.5, 0.0, 0.0),
               outputs=ActuatorCommand(0.0, 1.0, 0.0)),
    RuleRecord(inputs=SensorFrame(1.0, 0.5, 1.0, 0.0),
               outputs=ActuatorCommand(0.0, 1.0, 0.5)),
    RuleRecord(inputs=SensorFrame(0.0, 0.0, 0.0, 0.0),
               outputs=ActuatorCommand(0.5, 0.0, 0.0)),
    RuleRecord(inputs=SensorFrame(1.0, 0.0, 0.0, 0.5),
               outputs=ActuatorCommand(0.0, 1.0, 0.5)),
)


def derive_default_policy(weights: ControllerWeights,
                          target_rules: Sequence[RuleRecord]) -> DiscretizationPolicy:
    """Search-backed policy with a plain-ladder fallback when infeasible."""
    report = search_consistent_policy(weights, target_rules)
    if report.found and report.policy is not None:
        return report.policy
    return FALLBACK_POLICY
