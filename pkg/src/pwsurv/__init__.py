"""Piecewise-defined neural survival models trained by censored maximum likelihood.

Four model heads (constant/linear density, constant/linear hazard) share one
time grid, one feed-forward network, and one censored log-likelihood loss.
"""

from .data import (
    CensoringConfig,
    Dataset,
    SurvivalRecord,
    WeibullParams,
    generate_dataset,
    read_csv,
    sample_weibull,
    weibull_survival,
    write_csv,
)
from .grid import TimeGrid, make_uniform_grid
from .heads import HeadEvaluation, HeadKind, evaluate, output_dim
from .loss import dataset_loss, loss_grad_z, record_log_likelihood
from .numerics import log1m_exp, log_sum_exp
from .training import (
    StudySettings,
    SweepResult,
    TrainConfig,
    TrainedModel,
    TrainingDivergedError,
    evaluate as evaluate_model,
    load_model,
    lr_sweep,
    replication_study,
    save_model,
    train,
)

__version__ = "0.1.0"
