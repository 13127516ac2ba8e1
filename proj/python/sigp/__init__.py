"""Supervised-dimension-reduction inverse Gaussian process regression."""

from ._sigp import (
    DataError,
    DimensionError,
    DomainError,
    Error,
    GpModel,
    KernelSpec,
    Model,
    RankError,
    SdrBasis,
    SingularityError,
    TrainOptions,
    accuracy,
    estimate_basis,
    f1,
    four_class,
    gram,
    load_model,
    median_heuristic,
    mse,
    nlpd,
    rank_bound,
    sinusoid,
    suggest_rank,
    train,
    train_gp,
)

__all__ = [
    "DataError",
    "DimensionError",
    "DomainError",
    "Error",
    "GpModel",
    "KernelSpec",
    "Model",
    "RankError",
    "SdrBasis",
    "SingularityError",
    "TrainOptions",
    "accuracy",
    "estimate_basis",
    "f1",
    "four_class",
    "gram",
    "load_model",
    "median_heuristic",
    "mse",
    "nlpd",
    "rank_bound",
    "sinusoid",
    "suggest_rank",
    "train",
    "train_gp",
]
