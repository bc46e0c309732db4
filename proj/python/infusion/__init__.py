"""Markov-chain denoising generator: infusion training, sampling and
likelihood estimation. Thin wrapper over the C++ core."""

from infusion._core import (  # noqa: F401
    ChainTrace,
    EvalConfig,
    EvalReport,
    FactorialGaussian,
    InfusionSchedule,
    OperatorConfig,
    TrainConfig,
    TransitionOperator,
    alpha_at,
    average_lower_bound,
    chain_log_joint,
    elbo_samples,
    eta_at,
    evaluate_model,
    fit_isotropic_variance,
    fit_prior,
    infusion_log_density,
    infusion_step,
    is_estimate,
    load_checkpoint,
    lower_bound_estimate,
    parzen_log_density,
    run_clamped_chain,
    run_infusion_chain,
    run_model_chain,
    sample_prior,
    save_checkpoint,
    toy_two_gaussians,
    train,
    write_grid,
)

__all__ = [name for name in dir() if not name.startswith("_")]
