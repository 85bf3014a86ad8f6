"""Neighborhood scenario documents: the graph world a trial runs in.

A scenario is a connected graph of street-light nodes plus the trial
parameters (people, broken-lamp fraction, tick budget). Documents are
JSON with ``nodes``/``edges``/top-level config sections; two neighborhoods
ship with the package.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Union

from .controller import TRI_LEVELS

RECEIVER_AGGREGATION_MAX = "max"
RECEIVER_AGGREGATION_RANDOM = "randomNeighbor"
RECEIVER_AGGREGATIONS = (RECEIVER_AGGREGATION_MAX, RECEIVER_AGGREGATION_RANDOM)

BUNDLED_SCENARIOS = ("neighborhood-18", "neighborhood-12")


class ScenarioError(ValueError):
    """Parse failure or violated scenario invariant."""


@dataclass(frozen=True)
class ScenarioNode:
    id: str
    ambient: float = 0.0
    is_departure: bool = False
    is_destination: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    """Behavior switches the world honors but defaults keep off."""

    receiver_aggregation: str = RECEIVER_AGGREGATION_MAX
    reroute_on_block: bool = False
    spawn_stagger_ticks: int = 0


@dataclass(frozen=True)
class Scenario:
    name: str
    nodes: tuple[ScenarioNode, ...]
    edges: tuple[tuple[str, str], ...]
    people_count: int
    broken_fraction: float
    simulation_ticks: int
    slow_time_factor: float = 1.5
    config: ScenarioConfig = field(default_factory=ScenarioConfig)

    def __post_init__(self) -> None:
        validate_scenario(self)

    def node_ids(self) -> tuple[str, ...]:
        return tuple(node.id for node in self.nodes)

    def node(self, node_id: str) -> ScenarioNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise ScenarioError(f"unknown node {node_id!r}")

    def adjacency(self) -> dict[str, tuple[str, ...]]:
        neighbors: dict[str, list[str]] = {node.id: [] for node in self.nodes}
        for a, b in self.edges:
            neighbors[a].append(b)
            neighbors[b].append(a)
        return {nid: tuple(sorted(adj)) for nid, adj in neighbors.items()}

    def departures(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.is_departure)

    def destinations(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.is_destination)

    def edge_key(self, a: str, b: str) -> tuple[str, str]:
        key = (a, b) if a <= b else (b, a)
        if key not in self._edge_set():
            raise ScenarioError(f"unknown edge {a!r}-{b!r}")
        return key

    def _edge_set(self) -> frozenset:
        return frozenset(self.edges)


def validate_scenario(scenario: Scenario) -> None:
    ids = [node.id for node in scenario.nodes]
    if not ids:
        raise ScenarioError("invariant violated: scenario has no nodes")
    if len(set(ids)) != len(ids):
        raise ScenarioError("invariant violated: duplicate node ids")
    id_set = set(ids)

    for node in scenario.nodes:
        if node.ambient not in TRI_LEVELS:
            raise ScenarioError(
                f"invariant violated: node {node.id!r} ambient {node.ambient!r} "
                f"not on the {TRI_LEVELS} lattice")

    seen = set()
    for a, b in scenario.edges:
        if a == b:
            raise ScenarioError(f"invariant violated: self-loop at {a!r}")
        if a not in id_set or b not in id_set:
            raise ScenarioError(f"invariant violated: edge {a!r}-{b!r} references a missing node")
        if a > b:
            raise ScenarioError(f"invariant violated: edge {a!r}-{b!r} not stored sorted")
        if (a, b) in seen:
            raise ScenarioError(f"invariant violated: duplicate edge {a!r}-{b!r}")
        seen.add((a, b))

    adjacency: dict[str, list[str]] = {nid: [] for nid in ids}
    for a, b in scenario.edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    reached = {ids[0]}
    frontier = [ids[0]]
    while frontier:
        current = frontier.pop()
        for nxt in adjacency[current]:
            if nxt not in reached:
                reached.add(nxt)
                frontier.append(nxt)
    if reached != id_set:
        raise ScenarioError("invariant violated: graph is not connected")

    if not any(node.is_departure for node in scenario.nodes):
        raise ScenarioError("invariant violated: no departure node")
    if not any(node.is_destination for node in scenario.nodes):
        raise ScenarioError("invariant violated: no destination node")

    if scenario.people_count < 0:
        raise ScenarioError("invariant violated: negative peopleCount")
    if not 0.0 <= scenario.broken_fraction <= 1.0:
        raise ScenarioError("invariant violated: brokenFraction outside [0, 1]")
    if scenario.simulation_ticks <= 0:
        raise ScenarioError("invariant violated: simulationTicks must be positive")
    if not 1.0 <= scenario.slow_time_factor <= 1.5:
        raise ScenarioError(
            "invariant violated: slowTimeFactor outside [1, 1.5] breaks the trip-time bound")
    if scenario.config.receiver_aggregation not in RECEIVER_AGGREGATIONS:
        raise ScenarioError(
            f"invariant violated: receiverAggregation must be one of {RECEIVER_AGGREGATIONS}")
    if scenario.config.spawn_stagger_ticks < 0:
        raise ScenarioError("invariant violated: negative spawnStaggerTicks")


def scenario_from_document(document: dict, name_hint: str = "scenario") -> Scenario:
    try:
        nodes = tuple(
            ScenarioNode(
                id=str(raw["id"]),
                ambient=float(raw.get("ambient", 0.0)),
                is_departure=bool(raw.get("departure", False)),
                is_destination=bool(raw.get("destination", False)),
            )
            for raw in document["nodes"]
        )
        edges = tuple(
            tuple(sorted((str(a), str(b))))  # type: ignore[misc]
            for a, b in document["edges"]
        )
        config_raw = document.get("config", {})
        config = ScenarioConfig(
            receiver_aggregation=config_raw.get("receiverAggregation",
                                                RECEIVER_AGGREGATION_MAX),
            reroute_on_block=bool(config_raw.get("rerouteOnBlock", False)),
            spawn_stagger_ticks=int(config_raw.get("spawnStaggerTicks", 0)),
        )
        return Scenario(
            name=str(document.get("name", name_hint)),
            nodes=nodes,
            edges=edges,
            people_count=int(document["peopleCount"]),
            broken_fraction=float(document["brokenFraction"]),
            simulation_ticks=int(document["simulationTicks"]),
            slow_time_factor=float(document.get("slowTimeFactor", 1.5)),
            config=config,
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario document: {exc}") from exc


def load_scenario(source: Union[str, Path, dict]) -> Scenario:
    """Load and validate a scenario from a path, JSON text, or dict."""
    if isinstance(source, dict):
        return scenario_from_document(source)
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and source.endswith(".json")):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
        name_hint = path.stem
    else:
        text = str(source)
        name_hint = "scenario"
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario document is not valid JSON: {exc}") from exc
    return scenario_from_document(document, name_hint)


def bundled_scenario_text(name: str) -> str:
    if name not in BUNDLED_SCENARIOS:
        raise ScenarioError(f"no bundled scenario named {name!r}; "
                            f"available: {BUNDLED_SCENARIOS}")
    return (resources.files("streetlights.data") / f"{name}.json").read_text()


def bundled_scenario(name: str) -> Scenario:
    """One of the scenarios shipped with the package."""
    return load_scenario(json.loads(bundled_scenario_text(name)))
