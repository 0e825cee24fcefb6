"""Small dense linear algebra and reproducible random-stream helpers."""

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class NumericalError(ArithmeticError):
    """A linear solve or numeric kernel could not be completed."""


# Each logical component of a run draws from its own stream so that adding
# or reordering draws in one place never perturbs the others.
STREAM_LABELS = {
    "init": 0,
    "proposal": 1,
    "accept": 2,
    "split": 3,
    "grid": 4,
    "synth": 5,
}


def derive_stream(seed, label, index=0):
    """Return an independent ``numpy.random.Generator`` for one component.

    The stream is a PCG64 generator keyed by (seed, label, index); the same
    key yields the identical sequence on every platform.  ``label`` is one
    of the names in ``STREAM_LABELS`` (or a raw integer key), ``index``
    distinguishes repeated uses such as grid cells.
    """
    key = STREAM_LABELS[label] if isinstance(label, str) else int(label)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(key, int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def solve_spd(A, b):
    """Solve A x = b for a symmetric positive definite k-by-k matrix A.

    Uses a Cholesky factorization; A is SPD by construction wherever this
    is called with a positive ridge weight.

    Raises:
        NumericalError: on non-finite input or a failed factorization
            (the latter signals a non-positive ridge weight upstream).
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (np.isfinite(A).all() and np.isfinite(b).all()):
        raise NumericalError("non-finite entries in linear system")
    try:
        factor = cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "Cholesky factorization failed: matrix is not positive definite "
            "(is the regularization weight positive?)"
        ) from exc
    return cho_solve(factor, b, check_finite=False)


def frobenius_sq(X):
    """Sum of squared entries of X (squared Frobenius norm)."""
    X = np.asarray(X, dtype=np.float64)
    out = float(np.vdot(X, X))
    if not np.isfinite(out):
        raise NumericalError("non-finite entries in frobenius_sq input")
    return out


def normal_sample(rng, mean, sd, count):
    """Draw ``count`` iid normal(mean, sd**2) values from ``rng``.

    sd = 0 returns the constant ``mean``; negative sd is an error.
    """
    if sd < 0:
        raise ValueError(f"standard deviation must be >= 0, got {sd}")
    return rng.normal(mean, sd, size=count)
