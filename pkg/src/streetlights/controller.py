"""Fixed-topology neural controller for a smart street light.

Every light runs the same three-layer feedforward network: four inputs
(previous listening decision, light sensor, motion sensor, wireless
receiver), two hidden units, three outputs (wireless transmitter,
listening decision, lamp decision). There are no bias terms. Raw sigmoid
outputs are discretized onto small actuator lattices by a threshold
policy, and the fresh listening decision feeds back as next tick's first
input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator

BINARY_LEVELS = (0.0, 1.0)
TRI_LEVELS = (0.0, 0.5, 1.0)

HIGH_IS_ONE = "highIsOne"
LOW_IS_ONE = "lowIsOne"
LISTENING_DIRECTIONS = (HIGH_IS_ONE, LOW_IS_ONE)


class ControllerError(ValueError):
    """Invalid weights, frame or policy."""


def _check_level(name: str, value: float, levels: tuple[float, ...]) -> None:
    if value not in levels:
        raise ControllerError(f"{name} must be one of {levels}, got {value!r}")


def nearest_level(value: float) -> float:
    """Clamp to [0, 1] and snap to the closest tri-level; ties round up."""
    v = min(1.0, max(0.0, value))
    return min(TRI_LEVELS, key=lambda level: (abs(v - level), -level))


@dataclass(frozen=True)
class ControllerWeights:
    """The 14 weights of the fixed topology.

    ``hidden0``/``hidden1`` each hold the four input weights of one hidden
    unit; the three output pairs hold the (H0, H1) weights of one output
    unit each.
    """

    hidden0: tuple[float, float, float, float]
    hidden1: tuple[float, float, float, float]
    out_transmitter: tuple[float, float]
    out_listening: tuple[float, float]
    out_light: tuple[float, float]

    def __post_init__(self) -> None:
        for name, expected in (("hidden0", 4), ("hidden1", 4),
                               ("out_transmitter", 2), ("out_listening", 2),
                               ("out_light", 2)):
            values = getattr(self, name)
            if len(values) != expected:
                raise ControllerError(f"{name} needs {expected} weights, got {len(values)}")
            if not all(math.isfinite(w) for w in values):
                raise ControllerError(f"{name} contains a non-finite weight")
            object.__setattr__(self, name, tuple(float(w) for w in values))

    def as_flat(self) -> tuple[float, ...]:
        """Flatten in genome order: hidden0, hidden1, transmitter, listening, light."""
        return (*self.hidden0, *self.hidden1, *self.out_transmitter,
                *self.out_listening, *self.out_light)

    @classmethod
    def from_flat(cls, values) -> "ControllerWeights":
        values = tuple(float(v) for v in values)
        if len(values) != 14:
            raise ControllerError(f"expected 14 weights, got {len(values)}")
        return cls(hidden0=values[0:4], hidden1=values[4:8],
                   out_transmitter=values[8:10], out_listening=values[10:12],
                   out_light=values[12:14])

    def within_range(self, lo: float, hi: float) -> bool:
        return all(lo <= w <= hi for w in self.as_flat())


@dataclass(frozen=True)
class SensorFrame:
    """One discretized input vector (I0..I3)."""

    previous_listening: float
    light_sensor: float
    motion_sensor: float
    wireless_receiver: float

    def __post_init__(self) -> None:
        _check_level("previous_listening", self.previous_listening, BINARY_LEVELS)
        _check_level("light_sensor", self.light_sensor, TRI_LEVELS)
        _check_level("motion_sensor", self.motion_sensor, BINARY_LEVELS)
        _check_level("wireless_receiver", self.wireless_receiver, TRI_LEVELS)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.previous_listening, self.light_sensor,
                self.motion_sensor, self.wireless_receiver)


@dataclass(frozen=True)
class RawOutputs:
    """Post-sigmoid, pre-discretization output values, each in (0, 1)."""

    transmitter: float
    listening: float
    light: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.transmitter, self.listening, self.light)


@dataclass(frozen=True)
class ActuatorCommand:
    """One discretized output vector (Out0..Out2)."""

    transmitter: float
    listening: float
    light: float

    def __post_init__(self) -> None:
        _check_level("transmitter", self.transmitter, TRI_LEVELS)
        _check_level("listening", self.listening, BINARY_LEVELS)
        _check_level("light", self.light, TRI_LEVELS)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.transmitter, self.listening, self.light)


@dataclass(frozen=True)
class DiscretizationPolicy:
    """Thresholds mapping raw outputs onto the actuator lattices.

    Tri-level outputs use a strictly-greater ladder (raw > t2 -> 1.0,
    raw > t1 -> 0.5, else 0.0). The binary listening output compares
    against a single threshold; ties resolve to the "1" side in either
    direction.
    """

    light_thresholds: tuple[float, float]
    transmitter_thresholds: tuple[float, float]
    listening_threshold: float
    listening_direction: str = HIGH_IS_ONE

    def __post_init__(self) -> None:
        for name in ("light_thresholds", "transmitter_thresholds"):
            t1, t2 = getattr(self, name)
            if not (0.0 < t1 < t2 < 1.0):
                raise ControllerError(f"{name} must satisfy 0 < t1 < t2 < 1, got {(t1, t2)}")
            object.__setattr__(self, name, (float(t1), float(t2)))
        if not 0.0 < self.listening_threshold < 1.0:
            raise ControllerError(
                f"listening_threshold must lie in (0, 1), got {self.listening_threshold!r}")
        if self.listening_direction not in LISTENING_DIRECTIONS:
            raise ControllerError(
                f"listening_direction must be one of {LISTENING_DIRECTIONS}, "
                f"got {self.listening_direction!r}")

    @classmethod
    def default(cls) -> "DiscretizationPolicy":
        return DEFAULT_POLICY


def sigmoid(x: float) -> float:
    """Logistic function 1 / (1 + exp(-x)), overflow-safe on both tails."""
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def forward(weights: ControllerWeights, frame: SensorFrame) -> RawOutputs:
    """Run the network: two hidden sigmoids, then one sigmoid per output.

    Term order matches the flat weight layout so results are bit-stable
    across reimplementations of the same expression.
    """
    i0, i1, i2, i3 = frame.as_tuple()
    w0 = weights.hidden0
    w1 = weights.hidden1
    h0 = sigmoid(i0 * w0[0] + i1 * w0[1] + i2 * w0[2] + i3 * w0[3])
    h1 = sigmoid(i0 * w1[0] + i1 * w1[1] + i2 * w1[2] + i3 * w1[3])
    wt = weights.out_transmitter
    wl = weights.out_listening
    wa = weights.out_light
    return RawOutputs(
        transmitter=sigmoid(h0 * wt[0] + h1 * wt[1]),
        listening=sigmoid(h0 * wl[0] + h1 * wl[1]),
        light=sigmoid(h0 * wa[0] + h1 * wa[1]),
    )


def _tri_level(raw: float, thresholds: tuple[float, float]) -> float:
    t1, t2 = thresholds
    if raw > t2:
        return 1.0
    if raw > t1:
        return 0.5
    return 0.0


def _binary_level(raw: float, threshold: float, direction: str) -> float:
    if direction == HIGH_IS_ONE:
        return 1.0 if raw >= threshold else 0.0
    return 1.0 if raw <= threshold else 0.0


def discretize(raw: RawOutputs, policy: DiscretizationPolicy) -> ActuatorCommand:
    """Map raw outputs onto the actuator lattices per the policy."""
    return ActuatorCommand(
        transmitter=_tri_level(raw.transmitter, policy.transmitter_thresholds),
        listening=_binary_level(raw.listening, policy.listening_threshold,
                                policy.listening_direction),
        light=_tri_level(raw.light, policy.light_thresholds),
    )


def step(weights: ControllerWeights, policy: DiscretizationPolicy,
         frame: SensorFrame) -> tuple[ActuatorCommand, float]:
    """One controller activation.

    Returns the discretized command plus the value the caller must feed
    back as ``previous_listening`` on the next frame (the fresh listening
    decision; the controller itself is stateless).
    """
    command = discretize(forward(weights, frame), policy)
    return command, command.listening


def input_lattice() -> Iterator[SensorFrame]:
    """All 36 sensor frames (2 x 3 x 2 x 3), in sorted tuple order."""
    for i0, i1, i2, i3 in product(BINARY_LEVELS, TRI_LEVELS, BINARY_LEVELS, TRI_LEVELS):
        yield SensorFrame(i0, i1, i2, i3)


# The evolved reference controller bundled with the package; used by the
# rule-extraction demos, the transfer fixtures and the cross-check suite.
REFERENCE_WEIGHTS = ControllerWeights(
    hidden0=(1.2, -0.8, 1.6, -0.5),
    hidden1=(1.6, -0.8, 1.5, -0.3),
    out_transmitter=(-0.6, -0.2),
    out_listening=(-0.9, -0.7),
    out_light=(1.7, -0.4),
)

# Threshold ladder used when a policy is not stated explicitly. The values
# are the midpoints of the feasible intervals found by the rule-consistency
# search over REFERENCE_WEIGHTS and REFERENCE_RULES (the search lives in
# streetlights.rules; a regression test re-derives these numbers).
# Listening must be low-is-one there: no high-is-one threshold reproduces
# the reference rules.
DEFAULT_POLICY = DiscretizationPolicy(
    light_thresholds=(0.7075786395585435, 0.8828148023659487),
    transmitter_thresholds=(0.38154121886840475, 0.700656169943774),
    listening_threshold=0.27444233416541125,
    listening_direction=LOW_IS_ONE,
)

# Fallback ladder for searches that come back infeasible: plain tri-level
# thresholds, balanced listening, high-is-one.
FALLBACK_POLICY = DiscretizationPolicy(
    light_thresholds=(0.6, 0.8),
    transmitter_thresholds=(0.6, 0.8),
    listening_threshold=0.5,
    listening_direction=HIGH_IS_ONE,
)
