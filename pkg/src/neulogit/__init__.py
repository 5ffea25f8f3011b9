"""Neural logistic bandits: UCB algorithms over a hand-rolled ReLU network,
linear and worst-case baselines, synthetic and dataset environments, and a
Monte Carlo validator for self-normalized concentration bounds."""

from .algorithms import (
    ALGORITHMS,
    AdaOfuEcolog,
    AlgorithmConfig,
    LogisticUcb1,
    NcbfUcb,
    NeuralLogUcb1,
    NeuralLogUcb2,
    make_algorithm,
)
from .concentration import TrialConfig, bound_value, run_martingale_trial, violation_report
from .design import DesignMatrix, ShermanMorrisonInverse, effective_dimension
from .environments import DatasetEnv, SyntheticEnv, make_env, symmetrize_context
from .harness import (
    AlgorithmSpec,
    EnvConfig,
    ExperimentConfig,
    export_csv,
    load_config,
    run_experiment,
    sweep,
)
from .link import LinkEval, kappa_for_bound, link_eval, sigmoid
from .network import (
    NetworkParams,
    forward,
    gradient,
    init_network,
    load_params,
    loss_value,
    save_params,
    train_nn,
)
from .ntk import NtkMatrix, norm_param_S, ntk_matrix
from .schedules import Schedule, init_lambda0

__version__ = "0.1.0"
