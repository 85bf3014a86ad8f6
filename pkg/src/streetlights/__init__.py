"""Deterministic simulator and evolution toolchain for cooperative smart street lights."""

__version__ = "0.1.0"

from .controller import (  # noqa: F401
    DEFAULT_POLICY,
    FALLBACK_POLICY,
    REFERENCE_WEIGHTS,
    ActuatorCommand,
    ControllerWeights,
    DiscretizationPolicy,
    RawOutputs,
    SensorFrame,
    discretize,
    forward,
    input_lattice,
    sigmoid,
    step,
)
from .evolution import (  # noqa: F401
    FitnessBreakdown,
    GaConfig,
    compute_fitness,
    evaluate_candidate,
    evolve,
)
from .export import (  # noqa: F401
    WeightBundle,
    export_bundle,
    generate_controller_source,
    import_bundle,
    load_bundle,
    reference_bundle,
)
from .rules import (  # noqa: F401
    REFERENCE_RULES,
    RuleRecord,
    RuleTable,
    enumerate_lattice,
    extract_from_logs,
    format_rules,
    search_consistent_policy,
)
from .scenario import Scenario, bundled_scenario, load_scenario  # noqa: F401
from .world import (  # noqa: F401
    AsyncConfig,
    TrialRecorder,
    TrialStats,
    run_trial,
    run_trial_async,
)
