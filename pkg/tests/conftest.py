"""Shared fixtures: tiny scenarios and forced-behavior controllers."""
import pytest

from streetlights.controller import DEFAULT_POLICY, ControllerWeights
from streetlights.scenario import load_scenario

# Weight pairs that pin one output to a fixed level under DEFAULT_POLICY
# when the hidden weights are zero (both hidden units sit at 0.5, so the
# output raw is sigmoid of half the pair sum, independent of the frame).
_TRI_PAIR = {0.0: (-10.0, 0.0), 0.5: (0.0, 0.0), 1.0: (10.0, 0.0)}
_LISTEN_PAIR = {1.0: (-10.0, 0.0), 0.0: (10.0, 0.0)}  # low raw listens


def const_controller(transmitter: float, listening: float, light: float) -> ControllerWeights:
    """A controller that emits the same command on every frame (DEFAULT_POLICY)."""
    return ControllerWeights(
        hidden0=(0.0, 0.0, 0.0, 0.0),
        hidden1=(0.0, 0.0, 0.0, 0.0),
        out_transmitter=_TRI_PAIR[transmitter],
        out_listening=_LISTEN_PAIR[listening],
        out_light=_TRI_PAIR[light],
    )


def scenario_doc(nodes, edges, *, people=1, broken=0.0, ticks=10,
                 slow=1.5, config=None, name="test-scenario"):
    """Build a scenario document dict; nodes are (id, ambient, dep, dest)."""
    doc = {
        "name": name,
        "simulationTicks": ticks,
        "peopleCount": people,
        "brokenFraction": broken,
        "slowTimeFactor": slow,
        "nodes": [
            {"id": nid, "ambient": ambient, "departure": dep, "destination": dest}
            for nid, ambient, dep, dest in nodes
        ],
        "edges": [list(edge) for edge in edges],
    }
    if config:
        doc["config"] = config
    return doc


def path_scenario(length=4, *, ambient=0.0, people=1, broken=0.0, ticks=10,
                  config=None):
    """A straight path a--b--c--... with departure at one end."""
    ids = [chr(ord("a") + i) for i in range(length)]
    nodes = [(nid, ambient, nid == ids[0], nid == ids[-1]) for nid in ids]
    edges = [(ids[i], ids[i + 1]) for i in range(length - 1)]
    return load_scenario(scenario_doc(nodes, edges, people=people, broken=broken,
                                      ticks=ticks, config=config))


@pytest.fixture
def default_policy():
    return DEFAULT_POLICY


@pytest.fixture
def dark_pair_scenario():
    """Two dark nodes, one edge, one person."""
    return load_scenario(scenario_doc(
        nodes=[("a", 0.0, True, False), ("b", 0.0, False, True)],
        edges=[("a", "b")],
    ))
