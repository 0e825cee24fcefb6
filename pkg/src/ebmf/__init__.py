"""Regularized matrix-factorization recommender with empirical-Bayes
hyperparameter tuning by Metropolis-Hastings stochastic approximation."""

from .als import (
    FactorPair,
    HyperParams,
    TrainReport,
    als_train,
    boltzmann_energy,
    energy_parts,
    init_factors,
    init_moments,
    item_sweep,
    load_model,
    rmse,
    save_model,
    solve_item_row,
    solve_user_row,
    user_sweep,
)
from .data import (
    DataError,
    ParseError,
    RatingTriple,
    SparseRatings,
    SplitPair,
    build_sparse,
    parse_csv,
    parse_tab,
    split,
    write_split_manifest,
)
from .gridsearch import DEFAULT_GRID, GridCell, GridReport, GridSpec, grid_tune, write_grid_csv
from .numerics import (
    NumericalError,
    derive_stream,
    frobenius_sq,
    normal_sample,
    solve_spd,
)
from .sampler import ChainState, ProposalConfig, acceptance_prob, chain_state, mh_step, propose_ar1
from .trace import SmoothedTrace, smooth, write_smoothed_csv
from .tuner import (
    LAMBDA_FLOOR,
    SAConfig,
    SaTrace,
    TuneResult,
    log_prior_grad_item,
    log_prior_grad_user,
    sa_update,
    step_size,
    tune_eb,
    write_trace_csv,
)

__version__ = "0.1.0"
