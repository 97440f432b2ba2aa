"""Feature-selection ground truth, analytic mixture oracles and a method zoo.

Exact instance-wise selection solving on finite labeled relations, synthetic
task generation with provably unique ground-truth selections, closed-form
Gaussian-mixture classifiers to attribute against, fifteen attribution
methods under one interface, and threshold tuning plus scoring on top.
"""

from .evaluate import (
    CSV_HEADER,
    EvalReport,
    Prediction,
    TuneResult,
    ci_half_width,
    correlate,
    family_of,
    run_benchmark,
    run_methods,
    score,
    select_from_features,
    tune,
    tune_all,
)
from .fanova import fanova_decompose, fanova_reconstruct
from .oracle import LinearGaussianDensity, MixtureOracle, conditional_variance
from .relation import (
    LabeledRelation,
    NotFunctionalError,
    SelectionSolution,
    check_property1,
    check_property2,
    functional_domain,
    project,
    proxy_sets,
    solve_global_selection,
    solve_instance_selection,
)
from .methods import METHOD_IDS, Method, MethodConfig, build_zoo
from .seeding import derive_seed, rng_for, splitmix64
from .subsets import FeatureSet
from .taskgen import (
    GENERATOR_VERSION,
    Centroid,
    GenConfig,
    GenerationError,
    Hypercube,
    Task,
    TaskFormatError,
    build_hypercube,
    erode,
    generate_task,
    load_task,
    save_task,
    task_from_dict,
    task_to_dict,
    task_to_relation,
)

__version__ = "0.1.0"

__all__ = [
    "CSV_HEADER",
    "Centroid",
    "EvalReport",
    "FeatureSet",
    "GENERATOR_VERSION",
    "GenConfig",
    "GenerationError",
    "Hypercube",
    "LabeledRelation",
    "LinearGaussianDensity",
    "METHOD_IDS",
    "Method",
    "MethodConfig",
    "MixtureOracle",
    "NotFunctionalError",
    "Prediction",
    "SelectionSolution",
    "Task",
    "TaskFormatError",
    "TuneResult",
    "build_hypercube",
    "build_zoo",
    "check_property1",
    "check_property2",
    "ci_half_width",
    "conditional_variance",
    "correlate",
    "derive_seed",
    "erode",
    "family_of",
    "fanova_decompose",
    "fanova_reconstruct",
    "functional_domain",
    "generate_task",
    "load_task",
    "project",
    "proxy_sets",
    "rng_for",
    "run_benchmark",
    "run_methods",
    "save_task",
    "score",
    "select_from_features",
    "solve_global_selection",
    "solve_instance_selection",
    "splitmix64",
    "task_from_dict",
    "task_to_dict",
    "task_to_relation",
    "tune",
    "tune_all",
    "__version__",
]
