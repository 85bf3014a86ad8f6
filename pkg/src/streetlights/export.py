"""Controller bundles and firmware-source generation.

A weight bundle is the portable form of an evolved controller: the 14
weights, the discretization policy, and provenance describing where it
came from. Bundles serialize to JSON losslessly and can be rendered as a
self-contained C++ source file for a microcontroller-style runtime; the
firmware harness compiles that file unchanged and the ``xcheck`` command
verifies it agrees with this package on every lattice frame.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Union

from .controller import (
    HIGH_IS_ONE,
    ControllerError,
    ControllerWeights,
    DiscretizationPolicy,
    DEFAULT_POLICY,
    REFERENCE_WEIGHTS,
)


class BundleError(ValueError):
    """Schema mismatch or round-trip failure on a bundle document."""


def canonical_digest(obj) -> str:
    """sha256 over a canonical JSON rendering; used for provenance."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Provenance:
    master_seed: int
    ga_config_digest: str
    scenario_digest: str
    generation: int
    fitness: float

    def __post_init__(self) -> None:
        if not self.ga_config_digest or not self.scenario_digest:
            raise BundleError("provenance digests must be present")


@dataclass(frozen=True)
class WeightBundle:
    weights: ControllerWeights
    policy: DiscretizationPolicy
    provenance: Provenance


EXTERNAL_PROVENANCE = Provenance(
    master_seed=0, ga_config_digest="external", scenario_digest="external",
    generation=0, fitness=0.0)


def bundle_to_document(bundle: WeightBundle) -> dict:
    w, p, prov = bundle.weights, bundle.policy, bundle.provenance
    return {
        "weights": {
            "hidden0": list(w.hidden0),
            "hidden1": list(w.hidden1),
            "outTransmitter": list(w.out_transmitter),
            "outListening": list(w.out_listening),
            "outLight": list(w.out_light),
        },
        "policy": {
            "lightThresholds": list(p.light_thresholds),
            "transmitterThresholds": list(p.transmitter_thresholds),
            "listeningThreshold": p.listening_threshold,
            "listeningDirection": p.listening_direction,
        },
        "provenance": {
            "masterSeed": prov.master_seed,
            "gaConfigDigest": prov.ga_config_digest,
            "scenarioDigest": prov.scenario_digest,
            "generation": prov.generation,
            "fitness": prov.fitness,
        },
    }


def import_bundle(document: Union[str, dict]) -> WeightBundle:
    """Parse and validate a bundle document (JSON text or dict)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise BundleError(f"bundle document is not valid JSON: {exc}") from exc
    try:
        w = document["weights"]
        p = document["policy"]
        prov = document["provenance"]
        weights = ControllerWeights(
            hidden0=tuple(w["hidden0"]),
            hidden1=tuple(w["hidden1"]),
            out_transmitter=tuple(w["outTransmitter"]),
            out_listening=tuple(w["outListening"]),
            out_light=tuple(w["outLight"]),
        )
        policy = DiscretizationPolicy(
            light_thresholds=tuple(p["lightThresholds"]),
            transmitter_thresholds=tuple(p["transmitterThresholds"]),
            listening_threshold=float(p["listeningThreshold"]),
            listening_direction=str(p["listeningDirection"]),
        )
        provenance = Provenance(
            master_seed=int(prov["masterSeed"]),
            ga_config_digest=str(prov["gaConfigDigest"]),
            scenario_digest=str(prov["scenarioDigest"]),
            generation=int(prov["generation"]),
            fitness=float(prov["fitness"]),
        )
    except (KeyError, TypeError, ValueError, ControllerError) as exc:
        raise BundleError(f"bundle schema mismatch: {exc}") from exc
    return WeightBundle(weights=weights, policy=policy, provenance=provenance)


def export_bundle(bundle: WeightBundle) -> str:
    """Serialize with full float precision and verify the round trip."""
    text = json.dumps(bundle_to_document(bundle), indent=2, sort_keys=True) + "\n"
    if import_bundle(text) != bundle:
        raise BundleError("precision loss detected on round-trip check")
    return text


def load_bundle(path: Union[str, Path]) -> WeightBundle:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise BundleError(f"cannot read bundle file {path}: {exc}") from exc
    return import_bundle(text)


def write_bundle(bundle: WeightBundle, path: Union[str, Path]) -> None:
    Path(path).write_text(export_bundle(bundle), newline="\n")


def reference_bundle() -> WeightBundle:
    """The bundled reference controller with the searched ladder."""
    return WeightBundle(weights=REFERENCE_WEIGHTS, policy=DEFAULT_POLICY,
                        provenance=EXTERNAL_PROVENANCE)


def reference_bundle_text() -> str:
    return (resources.files("streetlights.data") / "reference_controller.json").read_text()


# --- Source generation ------------------------------------------------------

def _literal(value: float) -> str:
    return repr(float(value))


def _array(values) -> str:
    return "{ " + ", ".join(_literal(v) for v in values) + " }"


def generate_controller_source(bundle: WeightBundle) -> str:
    """Render the bundle as one compilable C++ controller source file.

    The file carries exactly the 14 weights and 5 threshold/direction
    parameters, the sigmoid/hidden/output functions, the discretization
    ladder, and the collect/decide/enforce cycle. Sensor and actuator
    access stays behind extern declarations the firmware provides.
    Generation is deterministic: same bundle, same bytes.
    """
    w, p = bundle.weights, bundle.policy
    high_is_one = 1 if p.listening_direction == HIGH_IS_ONE else 0
    lines = [
        "/* Smart street light controller (generated; do not edit). */",
        "",
        "#include <math.h>",
        "",
        "/* Hardware boundary, provided by the enclosing firmware. */",
        "extern double readLightSensor(void);",
        "extern double readMotionSensor(void);",
        "extern double receiveWirelessData(void);",
        "extern void sendWirelessData(double value);",
        "extern void writeLamp(double value);",
        "",
        "/* Evolved network parameters. */",
        f"double weightsH0[4] = {_array(w.hidden0)};",
        f"double weightsH1[4] = {_array(w.hidden1)};",
        f"double weightsTransmitterOutput[2] = {_array(w.out_transmitter)};",
        f"double weightsListeningDecision[2] = {_array(w.out_listening)};",
        f"double weightsLightDecision[2] = {_array(w.out_light)};",
        "",
        "/* Discretization ladder. */",
        f"double lightThreshold1 = {_literal(p.light_thresholds[0])};",
        f"double lightThreshold2 = {_literal(p.light_thresholds[1])};",
        f"double transmitterThreshold1 = {_literal(p.transmitter_thresholds[0])};",
        f"double transmitterThreshold2 = {_literal(p.transmitter_thresholds[1])};",
        f"double listeningThreshold = {_literal(p.listening_threshold)};",
        f"int listeningHighIsOne = {high_is_one};",
        "",
        "/* Sensor snapshot and decisions. */",
        "double previousListeningDecision = 0.0;",
        "double lightSensor = 0.0;",
        "double motionSensor = 0.0;",
        "double wirelessReceiver = 0.0;",
        "",
        "double transmitterSignal = 0.0;",
        "double listeningDecision = 0.0;",
        "double lightDecision = 0.0;",
        "",
        "double transmitterRaw = 0.0;",
        "double listeningRaw = 0.0;",
        "double lightRaw = 0.0;",
        "",
        "double fSigmoide(double x) {",
        "    double output = 1 / (1 + exp(-x));",
        "    return output;",
        "}",
        "",
        "double calculateHiddenUnitOutput(double w[4]) {",
        "    double H = previousListeningDecision * w[0] + lightSensor * w[1]",
        "        + motionSensor * w[2] + wirelessReceiver * w[3];",
        "    double HOutput = fSigmoide(H);",
        "    return HOutput;",
        "}",
        "",
        "double calculateOutputDecisions(double w[2], double h0, double h1) {",
        "    double outputSum = h0 * w[0] + h1 * w[1];",
        "    double output = fSigmoide(outputSum);",
        "    return output;",
        "}",
        "",
        "double discretizeTriLevel(double raw, double threshold1, double threshold2) {",
        "    if (raw > threshold2) {",
        "        return 1.0;",
        "    }",
        "    if (raw > threshold1) {",
        "        return 0.5;",
        "    }",
        "    return 0.0;",
        "}",
        "",
        "double discretizeListening(double raw) {",
        "    if (listeningHighIsOne) {",
        "        return raw >= listeningThreshold ? 1.0 : 0.0;",
        "    }",
        "    return raw <= listeningThreshold ? 1.0 : 0.0;",
        "}",
        "",
        "/* Data collection: refresh the sensor snapshot and the feedback input. */",
        "void getInputs(void) {",
        "    lightSensor = readLightSensor();",
        "    motionSensor = readMotionSensor();",
        "    previousListeningDecision = listeningDecision;",
        "    if (listeningDecision == 1) {",
        "        wirelessReceiver = receiveWirelessData();",
        "    } else {",
        "        wirelessReceiver = 0;",
        "    }",
        "}",
        "",
        "/* Decision making: forward pass plus the threshold ladder. */",
        "void makeDecisions(void) {",
        "    double H0 = calculateHiddenUnitOutput(weightsH0);",
        "    double H1 = calculateHiddenUnitOutput(weightsH1);",
        "    transmitterRaw = calculateOutputDecisions(weightsTransmitterOutput, H0, H1);",
        "    listeningRaw = calculateOutputDecisions(weightsListeningDecision, H0, H1);",
        "    lightRaw = calculateOutputDecisions(weightsLightDecision, H0, H1);",
        "    transmitterSignal = discretizeTriLevel(transmitterRaw,",
        "        transmitterThreshold1, transmitterThreshold2);",
        "    listeningDecision = discretizeListening(listeningRaw);",
        "    lightDecision = discretizeTriLevel(lightRaw,",
        "        lightThreshold1, lightThreshold2);",
        "}",
        "",
        "/* Action enforcement. */",
        "void setOutputs(void) {",
        "    sendWirelessData(transmitterSignal);",
        "    writeLamp(lightDecision);",
        "}",
        "",
        "void runControlCycle(void) {",
        "    getInputs();",
        "    makeDecisions();",
        "    setOutputs();",
        "}",
    ]
    return "\n".join(lines) + "\n"
