"""Delay-resolved Q-learning for multi-product inventory replenishment."""

from .catalog import (
    Catalog,
    CatalogError,
    FileDemand,
    Product,
    SyntheticDemand,
    forecast,
    generate_demand,
    load_catalog,
    load_demand_series,
    make_synthetic_catalog,
)
from .delay import (
    ActionDelayEnv,
    ActionPipeline,
    DelayConfig,
    InFlightOrder,
    Observation,
    ObservationDelayEnv,
    augment,
    sample_episode_delay,
)
from .exact import (
    CertificationReport,
    DelayedDiscreteEnv,
    ExplicitMDP,
    certify,
    enumerate_augmented,
    tiny_inventory_mdp,
    value_iteration,
)
from .experiment import (
    CatalogSource,
    ConfigError,
    ExperimentConfig,
    build_setup,
    config_from_json,
    config_to_json,
    figure_act_vs_obs,
    figure_delay_sweep,
    figure_stochastic,
    load_config,
    run_experiment,
    run_oracle_suite,
)
from .qnet import (
    QNetwork,
    act_epsilon_greedy,
    gradient,
    sync_target,
    td_loss,
    td_targets,
)
from .replay import Batch, ReplayBuffer
from .store import (
    ACTION_MULTIPLIERS,
    ConstraintConfig,
    FeatureScales,
    NUM_ACTIONS,
    RewardParams,
    StepOutcome,
    StoreState,
    build_features,
    business_reward,
    decode_action,
    decode_actions,
    default_constraints,
    feature_matrix,
    project_actions,
    step,
    step_rewards,
)
from .training import EnvSetup, QTable, TrainConfig, tabular_q_learning, train
