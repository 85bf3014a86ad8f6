"""Bundle serialization and controller source generation."""
import json
from pathlib import Path

import pytest

from streetlights.controller import (
    DEFAULT_POLICY,
    FALLBACK_POLICY,
    REFERENCE_WEIGHTS,
    ControllerWeights,
)
from streetlights.export import (
    EXTERNAL_PROVENANCE,
    BundleError,
    Provenance,
    WeightBundle,
    canonical_digest,
    export_bundle,
    generate_controller_source,
    import_bundle,
    load_bundle,
    reference_bundle,
    reference_bundle_text,
    write_bundle,
)

DATA = Path(__file__).parent / "data"


def random_bundle(seed=1234):
    import random

    rng = random.Random(seed)
    weights = ControllerWeights.from_flat([rng.uniform(-2, 2) for _ in range(14)])
    provenance = Provenance(master_seed=7, ga_config_digest=canonical_digest({"g": 1}),
                            scenario_digest=canonical_digest({"s": 2}),
                            generation=12, fitness=41.5)
    return WeightBundle(weights=weights, policy=DEFAULT_POLICY, provenance=provenance)


class TestBundleRoundTrip:
    def test_export_import_bit_identical(self):
        bundle = random_bundle()
        assert import_bundle(export_bundle(bundle)) == bundle

    def test_file_round_trip(self, tmp_path):
        bundle = random_bundle(99)
        path = tmp_path / "bundle.json"
        write_bundle(bundle, path)
        assert load_bundle(path) == bundle

    def test_reference_fixture_imports_cleanly(self):
        bundle = import_bundle(reference_bundle_text())
        assert bundle == reference_bundle()
        assert bundle.weights == REFERENCE_WEIGHTS
        assert bundle.policy == DEFAULT_POLICY

    def test_truncated_document_is_schema_error(self):
        document = json.loads(export_bundle(random_bundle()))
        del document["weights"]["outLight"]
        with pytest.raises(BundleError, match="schema"):
            import_bundle(document)

    def test_invalid_json_text(self):
        with pytest.raises(BundleError, match="JSON"):
            import_bundle("{nope")

    def test_missing_provenance_digests(self):
        with pytest.raises(BundleError, match="digest"):
            Provenance(master_seed=0, ga_config_digest="", scenario_digest="x",
                       generation=0, fitness=0.0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(BundleError, match="cannot read"):
            load_bundle(tmp_path / "absent.json")


class TestCanonicalDigest:
    def test_stable_and_order_insensitive(self):
        assert canonical_digest({"a": 1, "b": 2}) == canonical_digest({"b": 2, "a": 1})
        assert canonical_digest({"a": 1}) != canonical_digest({"a": 2})
        assert len(canonical_digest({})) == 64


class TestGenerateControllerSource:
    def test_reference_bundle_matches_golden_file(self):
        source = generate_controller_source(reference_bundle())
        golden = (DATA / "reference_controller_golden.cpp").read_text()
        assert source == golden

    def test_weight_literals_inlined(self):
        source = generate_controller_source(reference_bundle())
        assert "double weightsH0[4] = { 1.2, -0.8, 1.6, -0.5 };" in source
        assert "double weightsH1[4] = { 1.6, -0.8, 1.5, -0.3 };" in source
        assert "{ -0.6, -0.2 }" in source
        assert "{ -0.9, -0.7 }" in source
        assert "{ 1.7, -0.4 }" in source

    def test_zero_bundle_matches_golden_file(self):
        zero = WeightBundle(weights=ControllerWeights.from_flat([0.0] * 14),
                            policy=FALLBACK_POLICY, provenance=EXTERNAL_PROVENANCE)
        source = generate_controller_source(zero)
        golden = (DATA / "zero_controller_golden.cpp").read_text()
        assert source == golden
        assert "{ 0.0, 0.0, 0.0, 0.0 }" in source
        assert "int listeningHighIsOne = 1;" in source

    def test_generation_is_deterministic(self):
        bundle = random_bundle(5)
        assert generate_controller_source(bundle) == generate_controller_source(bundle)

    def test_lf_line_endings_and_all_parameters_present(self):
        bundle = random_bundle(6)
        source = generate_controller_source(bundle)
        assert "\r" not in source
        assert source.endswith("\n")
        for value in bundle.weights.as_flat():
            assert repr(value) in source
        for value in (*bundle.policy.light_thresholds,
                      *bundle.policy.transmitter_thresholds,
                      bundle.policy.listening_threshold):
            assert repr(value) in source
