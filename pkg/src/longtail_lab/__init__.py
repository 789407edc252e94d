"""Laboratory for feature learning on long-tailed concept-sequence data.

Exact evaluation of the optimal feature-map kernel and its generalization
lower bound, Monte Carlo nearest-neighbor experiments for fixed and learned
feature maps, a from-scratch neural network, and brute-force oracles for
tiny instances.
"""

from .bounds import BoundReport, best_ell, error_lower_bound, moment_bound
from .combinatorics import (
    AdmissibleMatrix,
    ComponentSignature,
    big_multinomial,
    count_equipartitions,
    enumerate_admissible,
    enumerate_signatures,
    stirling2,
)
from .datamodel import (
    Equipartition,
    ModelParams,
    SdmInstance,
    Task,
    TrainingSet,
    generate_sentence,
    make_rng,
    sample_sdm,
    sample_task,
    sample_test_sentence,
    sample_test_set,
    sample_training_set,
    validate_params,
)
from .graphkernel import (
    PairGraph,
    component_signature,
    concept_features,
    count_cut_free,
    f_of_signature,
    kstar,
    onehot_features,
    pair_epsilon,
    perturbed_kstar,
    rescale_log,
    zeta,
)
from .moment import lambda_moment_bound, permuted_moment, permuted_moment_exact

__all__ = [
    "AdmissibleMatrix",
    "BoundReport",
    "ComponentSignature",
    "Equipartition",
    "ModelParams",
    "PairGraph",
    "SdmInstance",
    "Task",
    "TrainingSet",
    "best_ell",
    "big_multinomial",
    "component_signature",
    "concept_features",
    "count_cut_free",
    "count_equipartitions",
    "enumerate_admissible",
    "enumerate_signatures",
    "error_lower_bound",
    "f_of_signature",
    "generate_sentence",
    "kstar",
    "lambda_moment_bound",
    "make_rng",
    "moment_bound",
    "onehot_features",
    "pair_epsilon",
    "permuted_moment",
    "permuted_moment_exact",
    "perturbed_kstar",
    "rescale_log",
    "sample_sdm",
    "sample_task",
    "sample_test_sentence",
    "sample_test_set",
    "sample_training_set",
    "stirling2",
    "validate_params",
    "zeta",
]
