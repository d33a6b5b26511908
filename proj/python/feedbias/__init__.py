"""Yule-Simon position-bias models, NLL@K fitting, a feed simulator and IPS evaluation."""

from ._feedbias import (
    ContextVector,
    Family,
    FitConfig,
    FitError,
    FitResult,
    ImpressionRecord,
    LinkKind,
    OnlineReward,
    Policy,
    PositionBiasModel,
    QualityModel,
    SimConfig,
    StopReason,
    UndefinedCorrelationError,
    __version__,
    fit,
    fit_empirical,
    link,
    link_inverse,
    log_survival,
    nll_at_k,
    nll_gradient,
    online_reward,
    parse_family,
    pearson_correlation,
    pmf,
    read_dataset,
    run_cli,
    sample_depths,
    simulate_dataset,
    survival,
    true_rho,
    unbiased_dcg,
    write_dataset,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
