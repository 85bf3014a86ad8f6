"""Unit tests for the fixed-topology controller."""
import math
import random

import pytest

from streetlights.controller import (
    DEFAULT_POLICY,
    HIGH_IS_ONE,
    LOW_IS_ONE,
    REFERENCE_WEIGHTS,
    ActuatorCommand,
    ControllerError,
    ControllerWeights,
    DiscretizationPolicy,
    SensorFrame,
    discretize,
    forward,
    input_lattice,
    nearest_level,
    sigmoid,
    step,
)

# Frozen oracle values: 1 / (1 + exp(-x)) evaluated at 40 decimal digits
# with mpmath, then rounded to the nearest double.
SIGMOID_ORACLE = {
    -0.8: 0.31002551887238755,
    -0.4: 0.401312339887548,
    0.0: 0.5,
    0.65: 0.6570104626734988,
}

ZERO_WEIGHTS = ControllerWeights(
    hidden0=(0.0, 0.0, 0.0, 0.0),
    hidden1=(0.0, 0.0, 0.0, 0.0),
    out_transmitter=(0.0, 0.0),
    out_listening=(0.0, 0.0),
    out_light=(0.0, 0.0),
)

ZERO_FRAME = SensorFrame(0.0, 0.0, 0.0, 0.0)

LADDER_POLICY = DiscretizationPolicy(
    light_thresholds=(0.6, 0.8),
    transmitter_thresholds=(0.6, 0.8),
    listening_threshold=0.5,
    listening_direction=HIGH_IS_ONE,
)


def mp_sigmoid(x):
    """Independent high-precision oracle for the logistic function."""
    from mpmath import mp, mpf

    with mp.workdps(40):
        return float(1 / (1 + mp.exp(-mpf(x))))


class TestSigmoid:
    def test_frozen_oracle_values(self):
        for x, expected in SIGMOID_ORACLE.items():
            assert sigmoid(x) == pytest.approx(expected, abs=1e-15)

    def test_matches_high_precision_oracle(self):
        rng = random.Random(7)
        for _ in range(200):
            x = rng.uniform(-30.0, 30.0)
            assert sigmoid(x) == pytest.approx(mp_sigmoid(x), abs=1e-15)

    def test_saturates_without_overflow(self):
        assert sigmoid(-1e6) == 0.0
        assert sigmoid(1e6) == 1.0
        assert 0.0 < sigmoid(-700.0) < 1e-200


class TestForward:
    def test_reference_weights_zero_frame(self):
        raw = forward(REFERENCE_WEIGHTS, ZERO_FRAME)
        # hidden sums are zero, so H0 = H1 = 0.5 and the output sums are
        # 0.5 * (w0 + w1) per output pair.
        assert raw.transmitter == pytest.approx(SIGMOID_ORACLE[-0.4], abs=1e-12)
        assert raw.listening == pytest.approx(SIGMOID_ORACLE[-0.8], abs=1e-12)
        assert raw.light == pytest.approx(SIGMOID_ORACLE[0.65], abs=1e-12)

    def test_zero_weights_any_frame(self):
        for frame in input_lattice():
            raw = forward(ZERO_WEIGHTS, frame)
            assert raw.as_tuple() == (0.5, 0.5, 0.5)

    def test_reference_weights_hidden_sums(self):
        frame = SensorFrame(1.0, 0.5, 1.0, 0.0)
        h0 = sigmoid(2.4)
        h1 = sigmoid(2.7)
        raw = forward(REFERENCE_WEIGHTS, frame)
        assert raw.transmitter == pytest.approx(sigmoid(-0.6 * h0 - 0.2 * h1), abs=1e-15)
        assert raw.listening == pytest.approx(sigmoid(-0.9 * h0 - 0.7 * h1), abs=1e-15)
        assert raw.light == pytest.approx(sigmoid(1.7 * h0 - 0.4 * h1), abs=1e-15)

    def test_pure_function(self):
        frame = SensorFrame(1.0, 0.5, 0.0, 1.0)
        assert forward(REFERENCE_WEIGHTS, frame) == forward(REFERENCE_WEIGHTS, frame)

    def test_raws_strictly_inside_unit_interval(self):
        rng = random.Random(11)
        for _ in range(100):
            weights = ControllerWeights.from_flat(
                [rng.uniform(-2.0, 2.0) for _ in range(14)])
            for frame in input_lattice():
                raw = forward(weights, frame)
                assert all(0.0 < r < 1.0 for r in raw.as_tuple())


class TestDiscretize:
    def test_mid_raws_on_ladder_policy(self):
        raw = forward(ZERO_WEIGHTS, ZERO_FRAME)
        command = discretize(raw, LADDER_POLICY)
        assert command.as_tuple() == (0.0, 1.0, 0.0)

    def test_above_t2_is_full_on(self):
        raw = forward(REFERENCE_WEIGHTS, SensorFrame(0.0, 0.0, 1.0, 0.0))
        policy = DiscretizationPolicy(
            light_thresholds=(0.3, 0.6),
            transmitter_thresholds=(0.6, 0.8),
            listening_threshold=0.5,
        )
        assert raw.light > 0.6
        assert discretize(raw, policy).light == 1.0

    def test_listening_tie_resolves_to_one_both_directions(self):
        raw = forward(ZERO_WEIGHTS, ZERO_FRAME)  # listening raw exactly 0.5
        for direction in (HIGH_IS_ONE, LOW_IS_ONE):
            policy = DiscretizationPolicy(
                light_thresholds=(0.6, 0.8),
                transmitter_thresholds=(0.6, 0.8),
                listening_threshold=0.5,
                listening_direction=direction,
            )
            assert discretize(raw, policy).listening == 1.0

    def test_tri_level_tie_stays_below(self):
        # The ladder uses strict comparisons: raw == threshold does not pass.
        raw = forward(ZERO_WEIGHTS, ZERO_FRAME)
        policy = DiscretizationPolicy(
            light_thresholds=(0.5, 0.8),
            transmitter_thresholds=(0.5, 0.8),
            listening_threshold=0.4,
        )
        command = discretize(raw, policy)
        assert command.light == 0.0
        assert command.transmitter == 0.0

    def test_reference_weights_zero_frame_default_policy(self):
        # The reference all-zero rule: only the transmitter fires, at 0.5.
        raw = forward(REFERENCE_WEIGHTS, ZERO_FRAME)
        assert discretize(raw, DEFAULT_POLICY).as_tuple() == (0.5, 0.0, 0.0)

    def test_monotone_in_each_raw_for_high_is_one(self):
        rng = random.Random(23)
        for _ in range(50):
            t1 = rng.uniform(0.05, 0.5)
            t2 = rng.uniform(t1 + 0.01, 0.95)
            policy = DiscretizationPolicy(
                light_thresholds=(t1, t2),
                transmitter_thresholds=(t1, t2),
                listening_threshold=rng.uniform(0.05, 0.95),
                listening_direction=HIGH_IS_ONE,
            )
            raws = sorted(rng.uniform(0.001, 0.999) for _ in range(10))
            from streetlights.controller import RawOutputs

            commands = [discretize(RawOutputs(r, r, r), policy) for r in raws]
            for before, after in zip(commands, commands[1:]):
                assert after.transmitter >= before.transmitter
                assert after.listening >= before.listening
                assert after.light >= before.light


class TestStep:
    def test_feedback_is_fresh_listening_decision(self):
        rng = random.Random(3)
        for _ in range(20):
            weights = ControllerWeights.from_flat(
                [rng.uniform(-2.0, 2.0) for _ in range(14)])
            for frame in input_lattice():
                command, feedback = step(weights, DEFAULT_POLICY, frame)
                assert feedback == command.listening

    def test_feedback_propagates_between_steps(self):
        command, feedback = step(REFERENCE_WEIGHTS, DEFAULT_POLICY, ZERO_FRAME)
        assert command.listening == 0.0
        follow_up = SensorFrame(feedback, 0.0, 0.0, 0.0)
        assert follow_up.previous_listening == 0.0

    def test_reference_weights_match_reference_rule(self):
        frame = SensorFrame(1.0, 0.5, 0.0, 0.0)
        command, _ = step(REFERENCE_WEIGHTS, DEFAULT_POLICY, frame)
        assert command.as_tuple() == (0.0, 1.0, 0.0)

    def test_step_is_discretized_forward_on_whole_lattice(self):
        frames = list(input_lattice())
        assert len(frames) == 36
        assert len(set(frames)) == 36
        for frame in frames:
            command, _ = step(REFERENCE_WEIGHTS, DEFAULT_POLICY, frame)
            assert command == discretize(forward(REFERENCE_WEIGHTS, frame), DEFAULT_POLICY)


class TestValidation:
    def test_weight_count(self):
        with pytest.raises(ControllerError):
            ControllerWeights.from_flat([0.0] * 13)
        with pytest.raises(ControllerError):
            ControllerWeights(hidden0=(0.0,) * 3, hidden1=(0.0,) * 4,
                              out_transmitter=(0.0,) * 2,
                              out_listening=(0.0,) * 2, out_light=(0.0,) * 2)

    def test_non_finite_weight(self):
        with pytest.raises(ControllerError):
            ControllerWeights.from_flat([math.nan] + [0.0] * 13)

    def test_off_lattice_frame(self):
        with pytest.raises(ControllerError):
            SensorFrame(0.3, 0.0, 0.0, 0.0)
        with pytest.raises(ControllerError):
            SensorFrame(0.0, 0.0, 0.5, 0.0)

    def test_off_lattice_command(self):
        with pytest.raises(ControllerError):
            ActuatorCommand(0.0, 0.5, 0.0)

    def test_threshold_ordering(self):
        with pytest.raises(ControllerError):
            DiscretizationPolicy(light_thresholds=(0.8, 0.6),
                                 transmitter_thresholds=(0.6, 0.8),
                                 listening_threshold=0.5)
        with pytest.raises(ControllerError):
            DiscretizationPolicy(light_thresholds=(0.0, 0.8),
                                 transmitter_thresholds=(0.6, 0.8),
                                 listening_threshold=0.5)

    def test_bad_direction(self):
        with pytest.raises(ControllerError):
            DiscretizationPolicy(light_thresholds=(0.6, 0.8),
                                 transmitter_thresholds=(0.6, 0.8),
                                 listening_threshold=0.5,
                                 listening_direction="sideways")

    def test_weight_range_helper(self):
        assert REFERENCE_WEIGHTS.within_range(-2.0, 2.0)
        assert not REFERENCE_WEIGHTS.within_range(-1.0, 1.0)

    def test_flat_round_trip(self):
        flat = REFERENCE_WEIGHTS.as_flat()
        assert len(flat) == 14
        assert ControllerWeights.from_flat(flat) == REFERENCE_WEIGHTS


def test_nearest_level():
    assert nearest_level(0.0) == 0.0
    assert nearest_level(0.5) == 0.5
    assert nearest_level(1.0) == 1.0
    assert nearest_level(2.5) == 1.0
    assert nearest_level(-0.5) == 0.0
    assert nearest_level(0.4) == 0.5
    assert nearest_level(0.25) == 0.5  # exact tie rounds up
    assert nearest_level(0.75) == 1.0
