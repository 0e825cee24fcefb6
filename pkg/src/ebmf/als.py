"""Regularized matrix factorization: loss, ALS training, and RMSE."""

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import NumericalError, solve_spd, frobenius_sq


@dataclass
class HyperParams:
    """Regularization weights (prior precisions) for the two factor sides."""

    lambda1: float
    lambda2: float

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")


@dataclass
class FactorPair:
    """User (n x k) and item (p x k) latent feature matrices."""

    U: np.ndarray
    V: np.ndarray

    @property
    def k(self):
        return int(self.U.shape[1])

    def copy(self):
        return FactorPair(self.U.copy(), self.V.copy())


@dataclass
class TrainReport:
    iterations: int
    train_loss_history: list
    final_test_rmse: float
    converged: bool


def energy_parts(data, factors):
    """(data term, ||U||_F^2, ||V||_F^2) of the regularized loss.

    The data term is the sum of squared residuals over the observed
    ratings; combining the parts with any (lambda1, lambda2) gives the
    full loss without re-touching the rating triples.
    """
    U, V = factors.U, factors.V
    if U.shape[0] != data.n or V.shape[0] != data.p or U.shape[1] != V.shape[1]:
        raise ValueError(
            f"factor dims ({U.shape}, {V.shape}) do not match data ({data.n}, {data.p})"
        )
    pred = np.einsum("tk,tk->t", U[data.user_index], V[data.item_index])
    resid = data.rating - pred
    return float(resid @ resid), frobenius_sq(U), frobenius_sq(V)


def boltzmann_energy(data, factors, hyper):
    """Regularized squared-error loss of a factor pair on observed ratings.

    Computes sum of squared residuals plus lambda1*||U||_F^2 +
    lambda2*||V||_F^2.  Exponentiating the negative of this energy gives
    the (unnormalized) Boltzmann posterior density over the factors that
    the MH sampler targets; the ALS sweeps below decrease it monotonically.
    """
    data_term, uu, vv = energy_parts(data, factors)
    return data_term + hyper.lambda1 * uu + hyper.lambda2 * vv


def solve_user_row(i, data, V, lambda1):
    """Ridge solution for user i's feature vector with items fixed.

    Solves (V_k^T V_k + lambda1 I) u_i = V_k^T m_i over the items k rated
    by user i.  Raises ValueError when the user has no ratings.
    """
    pos = data.by_user[i]
    if pos.size == 0:
        raise ValueError(f"user {i} has no ratings; caller must skip or zero-fill")
    Vk = V[data.item_index[pos]]
    k = Vk.shape[1]
    A = Vk.T @ Vk + lambda1 * np.eye(k)
    b = Vk.T @ data.rating[pos]
    return solve_spd(A, b)


def solve_item_row(j, data, U, lambda2):
    """Ridge solution for item j's feature vector with users fixed."""
    pos = data.by_item[j]
    if pos.size == 0:
        raise ValueError(f"item {j} has no ratings; caller must skip or zero-fill")
    Uk = U[data.user_index[pos]]
    k = Uk.shape[1]
    A = Uk.T @ Uk + lambda2 * np.eye(k)
    b = Uk.T @ data.rating[pos]
    return solve_spd(A, b)


def _solve_side(out, feats, group_index, cross_index, rating, lam):
    """Batched ridge solve of all rows on one side of the alternation.

    Groups the triples by ``group_index``, accumulates each row's k-by-k
    gram matrix and right-hand side with segmented reductions, and solves
    all systems at once.  Rows with no ratings keep their current values.
    """
    size = out.shape[0]
    k = out.shape[1]
    order = np.argsort(group_index, kind="stable")
    counts = np.bincount(group_index, minlength=size)
    bounds = np.concatenate(([0], np.cumsum(counts)))
    rows = np.flatnonzero(counts > 0)
    if rows.size == 0:
        return
    offs = bounds[rows]

    Fg = feats[cross_index[order]]
    rg = rating[order]
    A = np.empty((rows.size, k, k))
    for a in range(k):
        cols = np.add.reduceat(Fg[:, a:a + 1] * Fg[:, a:], offs, axis=0)
        A[:, a, a:] = cols
        A[:, a:, a] = cols
    A[:, np.arange(k), np.arange(k)] += lam
    B = np.add.reduceat(Fg * rg[:, None], offs, axis=0)
    try:
        out[rows] = np.linalg.solve(A, B[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "row solve failed: normal equations not positive definite "
            "(is the regularization weight positive?)"
        ) from exc


def user_sweep(data, factors, lambda1):
    """One full user half-step: re-solve every user row with V fixed."""
    _solve_side(factors.U, factors.V, data.user_index, data.item_index, data.rating, lambda1)


def item_sweep(data, factors, lambda2):
    """One full item half-step: re-solve every item row with U fixed."""
    _solve_side(factors.V, factors.U, data.item_index, data.user_index, data.rating, lambda2)


def als_train(data, k, hyper, init, max_sweeps=100, loss_tol=1e-6, test=None):
    """Alternating least squares on the regularized loss.

    Each sweep runs a full user half-step then a full item half-step; both
    are exact minimizers of the loss in their block, so the recorded loss
    history never increases.  Stops when the loss change between sweeps
    falls below ``loss_tol`` or after ``max_sweeps``.

    Args:
        data: training ratings.
        k: latent dimension (must match ``init``).
        hyper: regularization weights.
        init: starting FactorPair, copied, not mutated.
        test: optional (m, 3) array of held-out (user, item, rating) rows;
            when given, the report carries the final test RMSE.

    Returns:
        (FactorPair, TrainReport)
    """
    if max_sweeps < 1:
        raise ValueError(f"max_sweeps must be >= 1, got {max_sweeps}")
    if init.k != k:
        raise ValueError(f"init has k={init.k}, expected {k}")
    factors = init.copy()
    history = []
    converged = False
    prev = boltzmann_energy(data, factors, hyper)
    for _ in range(max_sweeps):
        user_sweep(data, factors, hyper.lambda1)
        item_sweep(data, factors, hyper.lambda2)
        loss = boltzmann_energy(data, factors, hyper)
        history.append(loss)
        if abs(prev - loss) < loss_tol:
            converged = True
            break
        prev = loss
    final_rmse = rmse(test, factors) if test is not None and len(test) else float("nan")
    report = TrainReport(
        iterations=len(history),
        train_loss_history=history,
        final_test_rmse=final_rmse,
        converged=converged,
    )
    return factors, report


def rmse(test, factors):
    """Root mean squared error of raw dot-product predictions.

    Predictions are u_i . v_j with no clipping to the rating scale.
    ``test`` is an (m, 3) array or sequence of (user, item, rating) rows.
    """
    test = np.asarray(test, dtype=np.float64)
    if test.size == 0:
        raise ValueError("rmse needs a non-empty test set")
    ui = test[:, 0].astype(np.int64)
    vi = test[:, 1].astype(np.int64)
    pred = np.einsum("tk,tk->t", factors.U[ui], factors.V[vi])
    resid = test[:, 2] - pred
    return float(np.sqrt(resid @ resid / resid.size))


def init_moments(k):
    """(mean, sd) for iid factor entries so U.V^T entries have mean 3, var 1.

    With entries iid normal(mu, s^2) the dot product of two independent
    rows has mean k*mu^2 and variance k*(s^4 + 2*mu^2*s^2); solving those
    for 3 and 1 gives mu = sqrt(3/k) and s^2 = -3/k + sqrt(9/k^2 + 1/k).
    """
    mu = math.sqrt(3.0 / k)
    var = -3.0 / k + math.sqrt(9.0 / k**2 + 1.0 / k)
    return mu, math.sqrt(var)


def init_factors(n, p, k, rng):
    """Heuristic normal initialization of the factor pair.

    Entries are iid normal with the ``init_moments`` parameters, so each
    entry of the predicted matrix U.V^T has expectation 3 and variance 1.
    U is drawn before V; identical streams give identical pairs.
    """
    if min(n, p, k) < 1:
        raise ValueError(f"n, p, k must all be >= 1, got ({n}, {p}, {k})")
    mu, sd = init_moments(k)
    U = rng.normal(mu, sd, size=(n, k))
    V = rng.normal(mu, sd, size=(p, k))
    return FactorPair(U, V)


def save_model(path, data, factors, hyper):
    """Write a factor model as text: header ``n p k lambda1 lambda2``,
    then the n rows of U and p rows of V, space-separated full precision."""
    n, kdim = factors.U.shape
    p = factors.V.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {p} {kdim} {hyper.lambda1!r} {hyper.lambda2!r}\n")
        for row in factors.U:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        for row in factors.V:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_model(path):
    """Read a model file written by ``save_model``.

    Returns:
        (FactorPair, HyperParams)
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 5:
            raise ValueError(f"bad model header: {header!r}")
        n, p, kdim = int(header[0]), int(header[1]), int(header[2])
        hyper = HyperParams(float(header[3]), float(header[4]))
        rows = [np.array(fh.readline().split(), dtype=np.float64) for _ in range(n + p)]
    mat = np.vstack(rows)
    if mat.shape != (n + p, kdim):
        raise ValueError(f"model body shape {mat.shape} does not match header")
    return FactorPair(mat[:n].copy(), mat[n:].copy()), hyper
