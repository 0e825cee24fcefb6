"""Metropolis-Hastings kernel over factor pairs targeting the Boltzmann
posterior exp(-energy) at fixed regularization weights."""

import math
from dataclasses import dataclass

from .als import FactorPair, energy_parts


@dataclass
class ProposalConfig:
    """Entrywise AR(1) proposal: new = alpha * current + normal noise.

    ``sigma1`` scales the user-side noise, ``sigma2`` the item side.
    alpha = 1 gives a pure symmetric random walk and is admitted here
    (the kernel's exactness oracle runs in that regime); alpha = 0 is not.
    """

    alpha: float
    sigma1: float
    sigma2: float

    def __post_init__(self):
        if not (0.0 < abs(self.alpha) <= 1.0):
            raise ValueError(f"alpha must satisfy 0 < |alpha| <= 1, got {self.alpha}")
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ValueError(f"sigmas must be > 0, got ({self.sigma1}, {self.sigma2})")


@dataclass
class ChainState:
    """Current factors plus cached energy components and step counters.

    The loss splits as data_term + lambda1*sq_norm_u + lambda2*sq_norm_v,
    so the cache stays valid under any change of the regularization
    weights; ``energy_at`` recombines it exactly.
    """

    factors: FactorPair
    data_term: float
    sq_norm_u: float
    sq_norm_v: float
    step_count: int = 0
    accept_count: int = 0

    def energy_at(self, hyper):
        return self.data_term + hyper.lambda1 * self.sq_norm_u + hyper.lambda2 * self.sq_norm_v


def chain_state(data, factors):
    """Build a ChainState with freshly computed energy components."""
    data_term, uu, vv = energy_parts(data, factors)
    return ChainState(factors=factors, data_term=data_term, sq_norm_u=uu, sq_norm_v=vv)


def propose_ar1(state, cfg, rng):
    """Draw an AR(1) proposal for every entry of both factor matrices.

    U* = alpha*U + noise(sigma1), V* = alpha*V + noise(sigma2); the user
    side is drawn first so a fixed stream fixes the proposal.
    """
    U = cfg.alpha * state.factors.U + rng.normal(0.0, cfg.sigma1, size=state.factors.U.shape)
    V = cfg.alpha * state.factors.V + rng.normal(0.0, cfg.sigma2, size=state.factors.V.shape)
    return FactorPair(U, V)


def acceptance_prob(energy_current, energy_proposed):
    """min(1, exp(energy_current - energy_proposed)), the symmetric-proposal
    acceptance probability for the Boltzmann target.

    The exponent is clamped at 0 before exponentiation so large energies
    never overflow.
    """
    if not (math.isfinite(energy_current) and math.isfinite(energy_proposed)):
        raise ValueError(
            f"energies must be finite, got ({energy_current}, {energy_proposed})"
        )
    return math.exp(min(0.0, energy_current - energy_proposed))


def mh_step(state, data, hyper, cfg, rng, accept_rng=None):
    """One Metropolis-Hastings transition at the given weights.

    Proposes via ``propose_ar1``, accepts with ``acceptance_prob`` under
    the current ``hyper``; rejection leaves the factors bit-identical.
    ``accept_rng`` lets the accept/reject draw come from its own stream;
    by default it shares ``rng``.
    """
    proposal = propose_ar1(state, cfg, rng)
    data_term, uu, vv = energy_parts(data, proposal)
    e_prop = data_term + hyper.lambda1 * uu + hyper.lambda2 * vv
    rho = acceptance_prob(state.energy_at(hyper), e_prop)
    draw = (accept_rng if accept_rng is not None else rng).uniform()
    if draw < rho:
        return ChainState(
            factors=proposal,
            data_term=data_term,
            sq_norm_u=uu,
            sq_norm_v=vv,
            step_count=state.step_count + 1,
            accept_count=state.accept_count + 1,
        )
    return ChainState(
        factors=state.factors,
        data_term=state.data_term,
        sq_norm_u=state.sq_norm_u,
        sq_norm_v=state.sq_norm_v,
        step_count=state.step_count + 1,
        accept_count=state.accept_count,
    )
