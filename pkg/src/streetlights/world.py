"""Trial simulation: lights, pedestrians, failures and message passing.

A trial advances a scenario for ``simulationTicks`` ticks. Every tick each
light senses its surroundings, runs the shared controller, actuates its
lamp/radio, then people advance along their routes and energy/trip time
accrue. Transmissions become receivable one cycle later. All randomness
(routes, broken-lamp schedule, async clocks and losses) derives from the
trial seed, so a trial is a pure function of its arguments.

Synchronous mode ticks all lights in lockstep; asynchronous mode drives
each light from its own jittered clock through a deterministic event
queue and can drop messages, reporting how far the behavior diverged
from the synchronous run.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .controller import (
    ActuatorCommand,
    ControllerWeights,
    DiscretizationPolicy,
    SensorFrame,
    nearest_level,
    step,
)
from .scenario import RECEIVER_AGGREGATION_RANDOM, Scenario

RADIO_ENERGY_PER_TICK = 0.1  # keeps the 1.1 energy ceiling per light per tick exact

# Sub-stream tags hung off the trial seed.
_STREAM_SETUP = 0
_STREAM_WORLD = 1
_STREAM_CLOCK = 2
_STREAM_LOSS = 3


class TrialError(ValueError):
    """Invalid trial inputs."""


class LogFormatError(ValueError):
    """A trial-log line that does not parse."""


@dataclass
class LightState:
    """Mutable per-light state inside a trial."""

    node_id: str
    lamp_level: float = 0.0
    broken_at_tick: Optional[int] = None
    previous_listening: float = 0.0
    last_transmitted: float = 0.0
    controller: Optional[ControllerWeights] = None

    def lamp_broken(self, tick: float) -> bool:
        return self.broken_at_tick is not None and tick >= self.broken_at_tick

    def emitted(self, tick: float) -> float:
        """Brightness actually emitted: broken lamps go dark for good."""
        return 0.0 if self.lamp_broken(tick) else self.lamp_level


@dataclass
class PersonState:
    """A pedestrian walking a fixed route at light-dependent speed."""

    id: int
    route: tuple[str, ...]
    spawn_node: str
    spawn_tick: int = 0
    leg: int = 0
    on_edge: bool = False
    accrued_trip_time: float = 0.0
    completed: bool = False

    def touched_nodes(self, tick: int) -> tuple[str, ...]:
        if self.completed or self.spawn_tick > tick:
            return ()
        if self.on_edge:
            return (self.route[self.leg], self.route[self.leg + 1])
        return (self.route[self.leg],)


@dataclass(frozen=True)
class TrialStats:
    """The counters the fitness equations consume."""

    completed_people: int
    total_people: int
    total_energy: float
    total_time_trip: float
    time_simulation: int
    total_smart_lights: int

    def __post_init__(self) -> None:
        if self.completed_people > self.total_people:
            raise TrialError("completedPeople exceeds totalPeople")
        energy_cap = 1.1 * self.time_simulation * self.total_smart_lights
        if self.total_energy > energy_cap + 1e-6:
            raise TrialError(f"totalEnergy {self.total_energy} exceeds cap {energy_cap}")
        trip_cap = 1.5 * self.time_simulation * self.total_people
        if self.total_time_trip > trip_cap + 1e-6:
            raise TrialError(f"totalTimeTrip {self.total_time_trip} exceeds cap {trip_cap}")

    def to_json(self) -> dict:
        return {
            "completedPeople": self.completed_people,
            "totalPeople": self.total_people,
            "totalEnergy": self.total_energy,
            "totalTimeTrip": self.total_time_trip,
            "timeSimulation": self.time_simulation,
            "totalSmartLights": self.total_smart_lights,
        }


@dataclass(frozen=True)
class AsyncConfig:
    clock_jitter: float = 0.0
    message_loss_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.clock_jitter < 0.0:
            raise TrialError("clockJitter must be >= 0")
        if not 0.0 <= self.message_loss_rate <= 1.0:
            raise TrialError("messageLossRate must lie in [0, 1]")


# --- Trial logging --------------------------------------------------------

LOG_HEADER = "tick,nodeId,I0,I1,I2,I3,Out0,Out1,Out2,lampEmitted,energyAccrued"


@dataclass(frozen=True)
class LogRow:
    tick: float
    node_id: str
    i0: float
    i1: float
    i2: float
    i3: float
    out0: float
    out1: float
    out2: float
    lamp_emitted: float
    energy_accrued: float


def format_log_row(row: LogRow) -> str:
    values = (row.tick, row.i0, row.i1, row.i2, row.i3,
              row.out0, row.out1, row.out2, row.lamp_emitted, row.energy_accrued)
    rendered = [f"{values[0]:g}", row.node_id] + [f"{v:g}" for v in values[1:]]
    return ",".join(rendered)


def parse_log_row(line: str) -> LogRow:
    parts = line.strip().split(",")
    if len(parts) != 11:
        raise LogFormatError(f"expected 11 comma-separated fields, got {len(parts)}: {line!r}")
    try:
        return LogRow(
            tick=float(parts[0]), node_id=parts[1],
            i0=float(parts[2]), i1=float(parts[3]),
            i2=float(parts[4]), i3=float(parts[5]),
            out0=float(parts[6]), out1=float(parts[7]), out2=float(parts[8]),
            lamp_emitted=float(parts[9]), energy_accrued=float(parts[10]),
        )
    except ValueError as exc:
        raise LogFormatError(f"unparseable log line {line!r}: {exc}") from exc


class TrialRecorder:
    """Collects per-tick log rows plus bookkeeping the tests lean on."""

    def __init__(self) -> None:
        self.rows: list[LogRow] = []
        self.broken_schedule: dict[str, int] = {}
        self.routes: dict[int, tuple[str, ...]] = {}
        # One (completed, moving, waiting) triple per tick, counted after
        # movement; every person lands in exactly one bucket.
        self.people_counts: list[tuple[int, int, int]] = []

    def log_lines(self) -> list[str]:
        return [LOG_HEADER] + [format_log_row(r) for r in self.rows]

    def write_log(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for line in self.log_lines():
                handle.write(line + "\n")


# --- World construction ---------------------------------------------------

def bfs_route(adjacency: Mapping[str, tuple[str, ...]], start: str, goal: str) -> tuple[str, ...]:
    """Hop-count shortest path; sorted neighbor order makes it unique."""
    if start == goal:
        return (start,)
    parent: dict[str, Optional[str]] = {start: None}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        for nxt in adjacency[current]:
            if nxt in parent:
                continue
            parent[nxt] = current
            if nxt == goal:
                path = [goal]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return tuple(reversed(path))
            queue.append(nxt)
    raise TrialError(f"no route from {start!r} to {goal!r}")


def _build_world(scenario: Scenario, weights: ControllerWeights, seed: int):
    """Seeded setup shared by the sync and async engines.

    Consumes the setup stream in a fixed order (broken lamps, failure
    ticks, then per-person departure/destination) so both engines build
    bit-identical worlds from the same seed.
    """
    rng = np.random.default_rng([seed, _STREAM_SETUP])
    node_order = tuple(sorted(scenario.node_ids()))
    lights = {
        nid: LightState(node_id=nid, controller=weights)
        for nid in node_order
    }

    broken_count = int(round(scenario.broken_fraction * len(node_order)))
    broken_schedule: dict[str, int] = {}
    if broken_count > 0:
        chosen = rng.choice(np.array(node_order), size=broken_count, replace=False)
        half = max(1, scenario.simulation_ticks // 2)
        for nid in chosen:
            tick = int(rng.integers(0, half))
            lights[str(nid)].broken_at_tick = tick
            broken_schedule[str(nid)] = tick

    departures = scenario.departures()
    destinations = scenario.destinations()
    people = []
    adjacency = scenario.adjacency()
    for index in range(scenario.people_count):
        start = departures[int(rng.integers(len(departures)))]
        goal = destinations[int(rng.integers(len(destinations)))]
        people.append(PersonState(
            id=index,
            route=bfs_route(adjacency, start, goal),
            spawn_node=start,
            spawn_tick=index * scenario.config.spawn_stagger_ticks,
        ))
    return node_order, lights, people, broken_schedule


# --- Sensing and movement primitives ---------------------------------------

def edge_intensity(scenario: Scenario, lights: Mapping[str, LightState],
                   edge: tuple[str, str], tick: float = 0.0) -> float:
    """Light level on an edge: mean endpoint ambient + both emitted lamps."""
    a, b = scenario.edge_key(*edge)
    ambient = (scenario.node(a).ambient + scenario.node(b).ambient) / 2.0
    return ambient + lights[a].emitted(tick) + lights[b].emitted(tick)


class _EngineBase:
    """State and helpers shared by the sync and async engines."""

    def __init__(self, scenario: Scenario, weights: ControllerWeights,
                 policy: DiscretizationPolicy, seed: int,
                 recorder: Optional[TrialRecorder] = None) -> None:
        if not isinstance(scenario, Scenario):
            raise TrialError("scenario must be a validated Scenario")
        self.scenario = scenario
        self.weights = weights
        self.policy = policy
        self.seed = int(seed)
        if self.seed < 0:
            raise TrialError("seed must be non-negative")
        self.recorder = recorder
        self.adjacency = scenario.adjacency()
        self.ambient = {node.id: node.ambient for node in scenario.nodes}
        self.node_order, self.lights, self.people, self.broken_schedule = _build_world(
            scenario, weights, self.seed)
        self.world_rng = np.random.default_rng([self.seed, _STREAM_WORLD])
        self.total_energy = 0.0
        self.total_time_trip = 0.0
        self.tick_index = 0
        # lamp-level occupancy per light (emitted level -> tick count)
        self.occupancy: dict[str, dict[float, int]] = {
            nid: {0.0: 0, 0.5: 0, 1.0: 0} for nid in self.node_order}
        self.rules_exercised: set[tuple[tuple, tuple]] = set()
        if recorder is not None:
            recorder.broken_schedule = dict(self.broken_schedule)
            recorder.routes = {p.id: p.route for p in self.people}

    # sensing ---------------------------------------------------------------

    def _occupied_nodes(self, tick: int) -> set[str]:
        occupied: set[str] = set()
        for person in self.people:
            occupied.update(person.touched_nodes(tick))
        return occupied

    def _aggregate_received(self, values: list[float]) -> float:
        if not values:
            return 0.0
        if self.scenario.config.receiver_aggregation == RECEIVER_AGGREGATION_RANDOM:
            return values[int(self.world_rng.integers(len(values)))]
        return max(values)

    def _sense(self, nid: str, emitted_prev: Mapping[str, float],
               transmitted_prev: Mapping[str, float], occupied: set[str]) -> SensorFrame:
        light = self.lights[nid]
        i0 = light.previous_listening
        spill = sum(emitted_prev[m] for m in self.adjacency[nid])
        i1 = nearest_level(self.ambient[nid] + spill)
        i2 = 1.0 if nid in occupied else 0.0
        if i0 == 0.0:
            i3 = 0.0
        else:
            i3 = self._aggregate_received(
                [transmitted_prev[m] for m in self.adjacency[nid]])
        return SensorFrame(i0, i1, i2, i3)

    def sense_inputs(self, nid: str) -> SensorFrame:
        """Sense one node against the current world state (tick-start view)."""
        if nid not in self.lights:
            raise TrialError(f"unknown node {nid!r}")
        t = self.tick_index
        emitted_prev = {m: self.lights[m].emitted(t) for m in self.node_order}
        transmitted_prev = {m: self.lights[m].last_transmitted for m in self.node_order}
        return self._sense(nid, emitted_prev, transmitted_prev, self._occupied_nodes(t))

    # movement ----------------------------------------------------------------

    def _edge_intensity_now(self, edge: tuple[str, str], tick: float) -> float:
        a, b = edge
        ambient = (self.ambient[a] + self.ambient[b]) / 2.0
        return ambient + self.lights[a].emitted(tick) + self.lights[b].emitted(tick)

    def _try_reroute(self, person: PersonState, tick: float) -> None:
        """Swap in a shortest path over currently passable edges, if any."""
        current = person.route[person.leg]
        goal = person.route[-1]
        lit: dict[str, list[str]] = {nid: [] for nid in self.node_order}
        for a, b in self.scenario.edges:
            if self._edge_intensity_now((a, b), tick) > 0.0:
                lit[a].append(b)
                lit[b].append(a)
        passable = {nid: tuple(sorted(adj)) for nid, adj in lit.items()}
        try:
            person.route = bfs_route(passable, current, goal)
            person.leg = 0
        except TrialError:
            pass  # still blocked; keep waiting on the old route

    def _move_people(self, tick: int) -> tuple[int, int, int]:
        completed = moving = waiting = 0
        slow = self.scenario.slow_time_factor
        for person in self.people:
            if person.completed:
                completed += 1
                continue
            if person.spawn_tick > tick:
                waiting += 1
                continue
            if not person.on_edge and person.leg == len(person.route) - 1:
                person.completed = True
                completed += 1
                continue
            edge = (person.route[person.leg], person.route[person.leg + 1])
            intensity = self._edge_intensity_now(edge, tick)
            if intensity <= 0.0:
                person.accrued_trip_time += 1.0
                self.total_time_trip += 1.0
                waiting += 1
                if not person.on_edge and self.scenario.config.reroute_on_block:
                    self._try_reroute(person, tick)
                continue
            if person.on_edge:
                person.on_edge = False
                person.leg += 1
                cost = 1.0 if intensity >= 1.0 else slow
            elif intensity >= 1.0:
                person.leg += 1
                cost = 1.0
            else:
                person.on_edge = True
                cost = slow
            person.accrued_trip_time += cost
            self.total_time_trip += cost
            if not person.on_edge and person.leg == len(person.route) - 1:
                person.completed = True
                completed += 1
            else:
                moving += 1
        return completed, moving, waiting

    # accounting ----------------------------------------------------------------

    def _accrue_light(self, nid: str, tick: float) -> tuple[float, float]:
        light = self.lights[nid]
        emitted = light.emitted(tick)
        radio_active = light.previous_listening == 1.0 or light.last_transmitted != 0.0
        energy = emitted + (RADIO_ENERGY_PER_TICK if radio_active else 0.0)
        self.total_energy += energy
        return emitted, energy

    def _record_occupancy(self, tick: float) -> None:
        for nid in self.node_order:
            self.occupancy[nid][self.lights[nid].emitted(tick)] += 1

    def stats(self) -> TrialStats:
        return TrialStats(
            completed_people=sum(1 for p in self.people if p.completed),
            total_people=self.scenario.people_count,
            total_energy=self.total_energy,
            total_time_trip=self.total_time_trip,
            time_simulation=self.scenario.simulation_ticks,
            total_smart_lights=len(self.node_order),
        )


class TrialEngine(_EngineBase):
    """Synchronous lockstep execution: sense all, step all, act, move, accrue."""

    def run_tick(self) -> None:
        t = self.tick_index
        if t >= self.scenario.simulation_ticks:
            raise TrialError("trial already finished")
        emitted_prev = {m: self.lights[m].emitted(t) for m in self.node_order}
        transmitted_prev = {m: self.lights[m].last_transmitted for m in self.node_order}
        occupied = self._occupied_nodes(t)

        frames = {nid: self._sense(nid, emitted_prev, transmitted_prev, occupied)
                  for nid in self.node_order}
        commands: dict[str, ActuatorCommand] = {}
        for nid in self.node_order:
            command, _ = step(self.weights, self.policy, frames[nid])
            commands[nid] = command
            self.rules_exercised.add((frames[nid].as_tuple(), command.as_tuple()))

        for nid in self.node_order:
            command = commands[nid]
            light = self.lights[nid]
            light.lamp_level = command.light
            light.previous_listening = command.listening
            light.last_transmitted = command.transmitter

        counts = self._move_people(t)

        for nid in self.node_order:
            emitted, energy = self._accrue_light(nid, t)
            if self.recorder is not None:
                frame, command = frames[nid], commands[nid]
                self.recorder.rows.append(LogRow(
                    tick=float(t), node_id=nid,
                    i0=frame.previous_listening, i1=frame.light_sensor,
                    i2=frame.motion_sensor, i3=frame.wireless_receiver,
                    out0=command.transmitter, out1=command.listening,
                    out2=command.light,
                    lamp_emitted=emitted, energy_accrued=energy,
                ))
        self._record_occupancy(t)
        if self.recorder is not None:
            self.recorder.people_counts.append(counts)
        self.tick_index = t + 1

    def run(self) -> TrialStats:
        for _ in range(self.scenario.simulation_ticks):
            self.run_tick()
        return self.stats()


class AsyncTrialEngine(_EngineBase):
    """Event-queue execution with per-light clocks and lossy messaging.

    With zero jitter and zero loss the event order degenerates to the
    synchronous schedule, so the trial reproduces ``TrialEngine`` exactly.
    """

    _LIGHT = 0
    _ENV = 1

    def __init__(self, scenario, weights, policy, seed, async_config: AsyncConfig,
                 recorder: Optional[TrialRecorder] = None) -> None:
        super().__init__(scenario, weights, policy, seed, recorder)
        self.async_config = async_config
        self.mailboxes: dict[str, list[float]] = {nid: [] for nid in self.node_order}
        self._clock_rngs = {
            nid: np.random.default_rng([self.seed, _STREAM_CLOCK, i])
            for i, nid in enumerate(self.node_order)}
        self._loss_rngs = {
            nid: np.random.default_rng([self.seed, _STREAM_LOSS, i])
            for i, nid in enumerate(self.node_order)}

    def _next_period(self, nid: str) -> float:
        jitter = self.async_config.clock_jitter
        if jitter == 0.0:
            return 1.0
        return max(0.1, 1.0 + float(self._clock_rngs[nid].uniform(-jitter, jitter)))

    def _deliver(self, sender: str, value: float) -> None:
        loss = self.async_config.message_loss_rate
        for neighbor in self.adjacency[sender]:
            if loss > 0.0 and float(self._loss_rngs[sender].random()) < loss:
                continue
            self.mailboxes[neighbor].append(value)

    def _sense_at_wake(self, nid: str, now: float, occupied: set[str]) -> SensorFrame:
        light = self.lights[nid]
        i0 = light.previous_listening
        spill = sum(self.lights[m].emitted(now) for m in self.adjacency[nid])
        i1 = nearest_level(self.ambient[nid] + spill)
        i2 = 1.0 if nid in occupied else 0.0
        arrived = self.mailboxes[nid]
        i3 = 0.0 if i0 == 0.0 else self._aggregate_received(arrived)
        self.mailboxes[nid] = []
        return SensorFrame(i0, i1, i2, i3)

    def run(self) -> TrialStats:
        ticks = self.scenario.simulation_ticks
        events: list[tuple[float, int, str]] = []
        for nid in self.node_order:
            heapq.heappush(events, (0.0, self._LIGHT, nid))
        for t in range(ticks):
            heapq.heappush(events, (float(t), self._ENV, ""))

        while events:
            now, kind, _ = events[0]
            if kind == self._LIGHT:
                batch = []
                while events and events[0][0] == now and events[0][1] == self._LIGHT:
                    batch.append(heapq.heappop(events)[2])
                batch.sort()
                occupied = self._occupied_nodes(int(now))
                frames = {nid: self._sense_at_wake(nid, now, occupied) for nid in batch}
                for nid in batch:
                    command, _ = step(self.weights, self.policy, frames[nid])
                    self.rules_exercised.add((frames[nid].as_tuple(), command.as_tuple()))
                    light = self.lights[nid]
                    light.lamp_level = command.light
                    light.previous_listening = command.listening
                    light.last_transmitted = command.transmitter
                    self._deliver(nid, command.transmitter)
                    next_wake = now + self._next_period(nid)
                    if next_wake < ticks:
                        heapq.heappush(events, (next_wake, self._LIGHT, nid))
                    if self.recorder is not None:
                        frame = frames[nid]
                        self.recorder.rows.append(LogRow(
                            tick=now, node_id=nid,
                            i0=frame.previous_listening, i1=frame.light_sensor,
                            i2=frame.motion_sensor, i3=frame.wireless_receiver,
                            out0=command.transmitter, out1=command.listening,
                            out2=command.light,
                            lamp_emitted=light.emitted(now),
                            energy_accrued=0.0,
                        ))
            else:
                heapq.heappop(events)
                t = int(now)
                counts = self._move_people(t)
                for nid in self.node_order:
                    self._accrue_light(nid, t)
                self._record_occupancy(t)
                if self.recorder is not None:
                    self.recorder.people_counts.append(counts)
                self.tick_index = t + 1
        return self.stats()


@dataclass(frozen=True)
class DivergenceReport:
    """Sync-vs-async comparison for one seed."""

    sync_stats: TrialStats
    async_stats: TrialStats
    sync_occupancy: dict
    async_occupancy: dict
    mean_total_variation: float
    sync_rule_count: int
    async_rule_count: int
    async_rules_subset_of_sync: bool
    novel_async_rules: tuple = ()

    def to_json(self) -> dict:
        return {
            "syncStats": self.sync_stats.to_json(),
            "asyncStats": self.async_stats.to_json(),
            "syncOccupancy": {nid: {str(k): v for k, v in hist.items()}
                              for nid, hist in self.sync_occupancy.items()},
            "asyncOccupancy": {nid: {str(k): v for k, v in hist.items()}
                               for nid, hist in self.async_occupancy.items()},
            "meanTotalVariation": self.mean_total_variation,
            "syncRuleCount": self.sync_rule_count,
            "asyncRuleCount": self.async_rule_count,
            "asyncRulesSubsetOfSync": self.async_rules_subset_of_sync,
            "novelAsyncRules": [list(map(list, pair)) for pair in self.novel_async_rules],
        }


def _occupancy_divergence(sync_occ: dict, async_occ: dict) -> float:
    distances = []
    for nid, sync_hist in sync_occ.items():
        async_hist = async_occ[nid]
        sync_total = sum(sync_hist.values()) or 1
        async_total = sum(async_hist.values()) or 1
        distance = 0.5 * sum(
            abs(sync_hist[level] / sync_total - async_hist[level] / async_total)
            for level in (0.0, 0.5, 1.0))
        distances.append(distance)
    return sum(distances) / len(distances)


def run_trial(scenario: Scenario, weights: ControllerWeights,
              policy: DiscretizationPolicy, seed: int,
              recorder: Optional[TrialRecorder] = None) -> TrialStats:
    """One seeded synchronous trial; identical arguments, identical stats."""
    return TrialEngine(scenario, weights, policy, seed, recorder).run()


def run_trial_async(scenario: Scenario, weights: ControllerWeights,
                    policy: DiscretizationPolicy, seed: int,
                    async_config: AsyncConfig,
                    recorder: Optional[TrialRecorder] = None
                    ) -> tuple[TrialStats, DivergenceReport]:
    """One seeded asynchronous trial plus its divergence report.

    The report compares lamp-level occupancy histograms and the exercised
    rule sets against the synchronous run with the same seed.
    """
    sync_engine = TrialEngine(scenario, weights, policy, seed)
    sync_stats = sync_engine.run()
    async_engine = AsyncTrialEngine(scenario, weights, policy, seed,
                                    async_config, recorder)
    async_stats = async_engine.run()
    novel = tuple(sorted(async_engine.rules_exercised - sync_engine.rules_exercised))
    report = DivergenceReport(
        sync_stats=sync_stats,
        async_stats=async_stats,
        sync_occupancy=sync_engine.occupancy,
        async_occupancy=async_engine.occupancy,
        mean_total_variation=_occupancy_divergence(sync_engine.occupancy,
                                                   async_engine.occupancy),
        sync_rule_count=len(sync_engine.rules_exercised),
        async_rule_count=len(async_engine.rules_exercised),
        async_rules_subset_of_sync=not novel,
        novel_async_rules=novel,
    )
    return async_stats, report
