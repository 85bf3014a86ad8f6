"""Scenario loading and invariant validation."""
import json

import pytest

from streetlights.scenario import (
    ScenarioError,
    bundled_scenario,
    load_scenario,
)

from conftest import scenario_doc


class TestBundledScenarios:
    def test_main_neighborhood_shape(self):
        scenario = bundled_scenario("neighborhood-18")
        assert len(scenario.nodes) == 18
        assert len(scenario.edges) == 34
        assert len(scenario.departures()) == 4
        assert len(scenario.destinations()) == 2
        assert scenario.people_count == 10
        assert scenario.broken_fraction == 0.2

    def test_second_neighborhood_differs(self):
        scenario = bundled_scenario("neighborhood-12")
        assert len(scenario.nodes) == 12
        assert len(scenario.edges) == 18
        assert scenario.departures() and scenario.destinations()

    def test_unknown_bundled_name(self):
        with pytest.raises(ScenarioError):
            bundled_scenario("nowhere")


class TestValidation:
    def base_doc(self):
        return scenario_doc(
            nodes=[("a", 0.0, True, False), ("b", 0.5, False, True)],
            edges=[("a", "b")],
        )

    def test_valid_document_loads(self):
        scenario = load_scenario(self.base_doc())
        assert scenario.node_ids() == ("a", "b")
        assert scenario.adjacency() == {"a": ("b",), "b": ("a",)}

    def test_loads_from_json_text(self):
        scenario = load_scenario(json.dumps(self.base_doc()) + "\n")
        assert scenario.people_count == 1

    def test_edge_to_missing_node(self):
        doc = self.base_doc()
        doc["edges"].append(["a", "ghost"])
        with pytest.raises(ScenarioError, match="missing node"):
            load_scenario(doc)

    def test_no_destination(self):
        doc = scenario_doc(
            nodes=[("a", 0.0, True, False), ("b", 0.0, False, False)],
            edges=[("a", "b")],
        )
        with pytest.raises(ScenarioError, match="destination"):
            load_scenario(doc)

    def test_no_departure(self):
        doc = scenario_doc(
            nodes=[("a", 0.0, False, False), ("b", 0.0, False, True)],
            edges=[("a", "b")],
        )
        with pytest.raises(ScenarioError, match="departure"):
            load_scenario(doc)

    def test_self_loop(self):
        doc = self.base_doc()
        doc["edges"].append(["b", "b"])
        with pytest.raises(ScenarioError, match="self-loop"):
            load_scenario(doc)

    def test_duplicate_edge(self):
        doc = self.base_doc()
        doc["edges"].append(["b", "a"])  # same undirected edge
        with pytest.raises(ScenarioError, match="duplicate edge"):
            load_scenario(doc)

    def test_disconnected_graph(self):
        doc = scenario_doc(
            nodes=[("a", 0.0, True, False), ("b", 0.0, False, True),
                   ("c", 0.0, False, False), ("d", 0.0, False, False)],
            edges=[("a", "b"), ("c", "d")],
        )
        with pytest.raises(ScenarioError, match="not connected"):
            load_scenario(doc)

    def test_off_lattice_ambient(self):
        doc = self.base_doc()
        doc["nodes"][0]["ambient"] = 0.3
        with pytest.raises(ScenarioError, match="ambient"):
            load_scenario(doc)

    def test_bad_broken_fraction(self):
        doc = self.base_doc()
        doc["brokenFraction"] = 1.5
        with pytest.raises(ScenarioError, match="brokenFraction"):
            load_scenario(doc)

    def test_bad_slow_factor(self):
        doc = self.base_doc()
        doc["slowTimeFactor"] = 0.5
        with pytest.raises(ScenarioError, match="slowTimeFactor"):
            load_scenario(doc)

    def test_zero_ticks(self):
        doc = self.base_doc()
        doc["simulationTicks"] = 0
        with pytest.raises(ScenarioError, match="simulationTicks"):
            load_scenario(doc)

    def test_malformed_document(self):
        with pytest.raises(ScenarioError, match="malformed"):
            load_scenario({"nodes": [{"id": "a"}]})

    def test_invalid_json_text(self):
        with pytest.raises(ScenarioError, match="JSON"):
            load_scenario("{not json\n")

    def test_unknown_aggregation(self):
        doc = self.base_doc()
        doc["config"] = {"receiverAggregation": "nearest"}
        with pytest.raises(ScenarioError, match="receiverAggregation"):
            load_scenario(doc)
