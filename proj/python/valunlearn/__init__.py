"""Certified machine unlearning with data value-weighted Newton updates."""

from ._core import (
    ConfigError,
    Dataset,
    BudgetExhausted,
    InvalidArgument,
    Metrics,
    Model,
    evaluate,
    gauss_constant,
    gen_synthetic,
    gradient_residual,
    knn_sv,
    load_csv,
    loo_values,
    loss_value,
    newton_round,
    norm_bound,
    parameter_gap_bound,
    residual_bound,
    run,
    train,
    weight_from_value,
    weights_from_values,
    zero_weight_residual_bound,
)

__all__ = [
    "ConfigError",
    "Dataset",
    "BudgetExhausted",
    "InvalidArgument",
    "Metrics",
    "Model",
    "evaluate",
    "gauss_constant",
    "gen_synthetic",
    "gradient_residual",
    "knn_sv",
    "load_csv",
    "loo_values",
    "loss_value",
    "newton_round",
    "norm_bound",
    "parameter_gap_bound",
    "residual_bound",
    "run",
    "train",
    "weight_from_value",
    "weights_from_values",
    "zero_weight_residual_bound",
]
