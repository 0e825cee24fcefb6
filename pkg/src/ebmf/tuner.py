"""Empirical-Bayes tuning of the regularization weights by stochastic
approximation: one MH move, one gradient-style weight update, repeat."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .als import HyperParams, init_factors
from .numerics import derive_stream, frobenius_sq
from .sampler import ProposalConfig, chain_state, mh_step

logger = logging.getLogger(__name__)

# Keeps the weights strictly positive: the posterior stays proper and the
# ALS normal equations stay positive definite even if the updates would
# drive a weight through zero.
LAMBDA_FLOOR = 1e-8


@dataclass
class SAConfig:
    """Settings for the stochastic-approximation tuning loop."""

    a: float = 5e-5
    tol: float = 1e-5
    max_iters: int = 200000
    proposal: ProposalConfig = field(default_factory=lambda: ProposalConfig(0.9, 0.5, 0.5))
    lambda0: HyperParams = field(default_factory=lambda: HyperParams(10.0, 10.0))
    seed: int = 0

    def __post_init__(self):
        if self.a <= 0 or self.tol <= 0:
            raise ValueError(f"a and tol must be > 0, got ({self.a}, {self.tol})")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass
class SaTrace:
    """Per-iteration record of the tuning loop (1-based iterations)."""

    iteration: np.ndarray
    energy: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    accepted: np.ndarray

    def __len__(self):
        return int(self.iteration.size)


@dataclass
class TuneResult:
    lambda_hat: HyperParams
    iterations: int
    converged: bool
    trace: SaTrace
    final_factors: object
    accept_count: int = 0


def log_prior_grad_user(U):
    """Gradient of the log prior density wrt the user weight: -||U||_F^2."""
    return -frobenius_sq(U)


def log_prior_grad_item(V):
    """Gradient of the log prior density wrt the item weight: -||V||_F^2."""
    return -frobenius_sq(V)


def step_size(a, n):
    """Decaying step a/n for iteration n >= 1."""
    if n < 1:
        raise ValueError(f"iteration must be >= 1, got {n}")
    return a / n


def sa_update(hyper, factors, a_n):
    """One stochastic-approximation update of both weights.

    lambda1' = lambda1 - a_n*||U||_F^2 and likewise for lambda2 with V;
    results are floored at LAMBDA_FLOOR to stay positive.
    """
    l1 = hyper.lambda1 + a_n * log_prior_grad_user(factors.U)
    l2 = hyper.lambda2 + a_n * log_prior_grad_item(factors.V)
    if l1 < LAMBDA_FLOOR or l2 < LAMBDA_FLOOR:
        logger.warning(
            "weight update floored at %g (raw values %g, %g)", LAMBDA_FLOOR, l1, l2
        )
    return HyperParams(max(l1, LAMBDA_FLOOR), max(l2, LAMBDA_FLOOR))


def tune_eb(data, k, cfg):
    """Tune the regularization weights by the interleaved MH/update loop.

    Starting from heuristically initialized factors and ``cfg.lambda0``,
    each iteration n takes one MH step at the current weights and then
    moves the weights by step a/n times the log-prior gradient at the
    post-step factors.  Stops once the larger weight change stays below
    ``cfg.tol`` for two consecutive iterations, or at ``cfg.max_iters``
    (reported as converged=False).  Fully deterministic per seed.
    """
    if data.size == 0:
        raise ValueError("cannot tune on empty data")
    factors = init_factors(data.n, data.p, k, derive_stream(cfg.seed, "init"))
    state = chain_state(data, factors)
    prop_rng = derive_stream(cfg.seed, "proposal")
    acc_rng = derive_stream(cfg.seed, "accept")

    hyper = cfg.lambda0
    below = 0
    converged = False
    iters, energies, l1s, l2s, accepts = [], [], [], [], []
    for n in range(1, cfg.max_iters + 1):
        prev_accepts = state.accept_count
        state = mh_step(state, data, hyper, cfg.proposal, prop_rng, acc_rng)
        new_hyper = sa_update(hyper, state.factors, step_size(cfg.a, n))
        delta = max(
            abs(new_hyper.lambda1 - hyper.lambda1),
            abs(new_hyper.lambda2 - hyper.lambda2),
        )
        iters.append(n)
        energies.append(state.energy_at(new_hyper))
        l1s.append(new_hyper.lambda1)
        l2s.append(new_hyper.lambda2)
        accepts.append(state.accept_count > prev_accepts)
        hyper = new_hyper
        if delta < cfg.tol:
            below += 1
            if below >= 2:
                converged = True
                break
        else:
            below = 0

    trace = SaTrace(
        iteration=np.array(iters, dtype=np.int64),
        energy=np.array(energies),
        lambda1=np.array(l1s),
        lambda2=np.array(l2s),
        accepted=np.array(accepts, dtype=bool),
    )
    return TuneResult(
        lambda_hat=hyper,
        iterations=len(trace),
        converged=converged,
        trace=trace,
        final_factors=state.factors,
        accept_count=state.accept_count,
    )


def write_trace_csv(trace, path):
    """Write the tuning trace as ``iter,energy,lambda1,lambda2,accepted``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iter,energy,lambda1,lambda2,accepted\n")
        for i in range(len(trace)):
            fh.write(
                f"{int(trace.iteration[i])},{trace.energy[i]:.12g},"
                f"{trace.lambda1[i]:.12g},{trace.lambda2[i]:.12g},"
                f"{int(trace.accepted[i])}\n"
            )
