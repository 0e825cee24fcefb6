import numpy as np
import pytest

from ebmf import (
    FactorPair,
    HyperParams,
    RatingTriple,
    als_train,
    boltzmann_energy,
    build_sparse,
    derive_stream,
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
from conftest import random_ratings


def energy_by_loop(data, factors, hyper):
    """Term-by-term summation oracle for the regularized loss."""
    total = 0.0
    for u, i, r in data.triples():
        pred = float(np.dot(factors.U[u], factors.V[i]))
        total += (r - pred) ** 2
    total += hyper.lambda1 * float((factors.U**2).sum())
    total += hyper.lambda2 * float((factors.V**2).sum())
    return total


def subproblem_objective(data, i, u_vec, V, lambda1):
    """The user-row ridge objective, written independently of the solver."""
    total = lambda1 * float(np.dot(u_vec, u_vec))
    for pos in data.by_user[i]:
        j = int(data.item_index[pos])
        total += (data.rating[pos] - float(np.dot(u_vec, V[j]))) ** 2
    return total


class TestHyperParams:
    def test_positive_required(self):
        for bad in (0.0, -1.0, np.nan, np.inf):
            with pytest.raises(ValueError):
                HyperParams(bad, 1.0)
            with pytest.raises(ValueError):
                HyperParams(1.0, bad)


class TestBoltzmannEnergy:
    def test_exact_fit_no_regularization_is_minimal(self):
        data = build_sparse([RatingTriple(1, 1, 3.0, 0)])
        f = FactorPair(np.array([[1.0]]), np.array([[3.0]]))
        # lambda must stay positive; shrink it until the value is pure data term
        assert boltzmann_energy(data, f, HyperParams(1e-300, 1e-300)) == pytest.approx(0.0, abs=1e-290)

    def test_hand_arithmetic(self):
        data = build_sparse([RatingTriple(1, 1, 4.0, 0)])
        f = FactorPair(np.array([[1.0]]), np.array([[1.0]]))
        assert boltzmann_energy(data, f, HyperParams(0.5, 0.5)) == pytest.approx(10.0)

    def test_against_loop_oracle(self):
        rng = np.random.default_rng(11)
        data = build_sparse([
            RatingTriple(1, 1, 4.0, 0),
            RatingTriple(1, 2, 2.0, 0),
            RatingTriple(2, 1, 3.0, 0),
            RatingTriple(3, 2, 5.0, 0),
        ])
        f = FactorPair(rng.normal(size=(3, 2)), rng.normal(size=(2, 2)))
        h = HyperParams(0.3, 0.7)
        want = energy_by_loop(data, f, h)
        assert boltzmann_energy(data, f, h) == pytest.approx(want, rel=1e-12)

    def test_dimension_mismatch(self, tiny_data):
        f = FactorPair(np.ones((5, 2)), np.ones((3, 2)))
        with pytest.raises(ValueError, match="match"):
            boltzmann_energy(tiny_data, f, HyperParams(1.0, 1.0))


class TestRowSolvers:
    def test_scalar_least_squares(self):
        data = build_sparse([RatingTriple(1, 1, 4.0, 0)])
        V = np.array([[2.0]])
        u = solve_user_row(0, data, V, 0.0)
        assert u[0] == pytest.approx(2.0)

    def test_ridge_shrinkage(self):
        data = build_sparse([RatingTriple(1, 1, 4.0, 0)])
        V = np.array([[1.0]])
        u = solve_user_row(0, data, V, 1.0)
        assert u[0] == pytest.approx(2.0)  # (1 + 1) u = 4

    def test_item_side_scalar(self):
        data = build_sparse([RatingTriple(1, 1, 6.0, 0)])
        U = np.array([[2.0]])
        v = solve_item_row(0, data, U, 0.0)
        assert v[0] == pytest.approx(3.0)

    def test_item_side_ridge(self):
        data = build_sparse([RatingTriple(1, 1, 4.0, 0)])
        U = np.array([[1.0]])
        v = solve_item_row(0, data, U, 1.0)
        assert v[0] == pytest.approx(2.0)

    def test_gradient_vanishes_at_solution(self):
        # central finite differences of the row objective at the returned point
        rng = np.random.default_rng(5)
        data = build_sparse([
            RatingTriple(1, 1, 4.0, 0),
            RatingTriple(1, 2, 2.5, 0),
            RatingTriple(1, 3, 3.5, 0),
        ])
        V = rng.normal(size=(3, 2))
        lam = 0.6
        u = solve_user_row(0, data, V, lam)
        h = 1e-4
        for d in range(2):
            e = np.zeros(2)
            e[d] = h
            grad = (
                subproblem_objective(data, 0, u + e, V, lam)
                - subproblem_objective(data, 0, u - e, V, lam)
            ) / (2 * h)
            assert abs(grad) <= 1e-5

    def test_transpose_equivalence(self):
        # the item solver is the user solver on the transposed problem
        rng = np.random.default_rng(17)
        triples = [
            RatingTriple(u + 1, j + 1, float(rng.uniform(1, 5)), 0)
            for u, j in [(0, 0), (0, 1), (1, 0), (2, 0), (2, 1)]
        ]
        data = build_sparse(triples)
        flipped = build_sparse([RatingTriple(t.item_id, t.user_id, t.rating, 0) for t in triples])
        U = rng.normal(size=(3, 2))
        lam = 0.4
        for j in range(2):
            got = solve_item_row(j, data, U, lam)
            want = solve_user_row(j, flipped, U, lam)
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_empty_row_rejected(self):
        import ebmf.data as d

        data = build_sparse([RatingTriple(1, 1, 3.0, 0), RatingTriple(2, 1, 4.0, 0)])
        lonely = d._subset(data, np.array([True, False]))
        with pytest.raises(ValueError, match="no ratings"):
            solve_user_row(1, lonely, np.ones((1, 1)), 1.0)

    def test_randomized_residuals(self):
        # normal-equation residual stays below the relative tolerance
        rng = np.random.default_rng(100)
        for trial in range(100):
            k = int(rng.integers(1, 9))
            n_items = int(rng.integers(k, 12))
            triples = [
                RatingTriple(1, j + 1, float(rng.uniform(0.5, 5)), 0) for j in range(n_items)
            ]
            data = build_sparse(triples)
            V = rng.normal(size=(n_items, k))
            lam = float(rng.uniform(0.05, 5.0))
            u = solve_user_row(0, data, V, lam)
            A = V.T @ V + lam * np.eye(k)
            b = V.T @ data.rating
            assert np.max(np.abs(A @ u - b)) <= 1e-8 * (1 + np.max(np.abs(b)))


class TestSweeps:
    def test_sweep_matches_row_solver(self):
        rng = np.random.default_rng(23)
        data = random_ratings(rng, 6, 5)
        f = init_factors(data.n, data.p, 3, derive_stream(1, "init"))
        expected = np.vstack([solve_user_row(i, data, f.V, 0.7) for i in range(data.n)])
        user_sweep(data, f, 0.7)
        np.testing.assert_allclose(f.U, expected, atol=1e-10)
        expected_v = np.vstack([solve_item_row(j, data, f.U, 0.3) for j in range(data.p)])
        item_sweep(data, f, 0.3)
        np.testing.assert_allclose(f.V, expected_v, atol=1e-10)

    def test_rows_without_ratings_untouched(self):
        data = build_sparse([RatingTriple(1, 1, 3.0, 0), RatingTriple(2, 1, 4.0, 0)])
        pair = FactorPair(np.full((2, 1), 0.5), np.full((1, 1), 0.5))
        # drop user 1's ratings to make an empty row
        import ebmf.data as d

        lonely = d._subset(data, np.array([True, False]))
        f = FactorPair(pair.U.copy(), pair.V.copy())
        user_sweep(lonely, f, 0.5)
        assert f.U[1, 0] == 0.5  # kept the initialized value

    def test_half_step_monotonicity_randomized(self):
        # the core descent property: neither half-step may raise the loss
        rng = np.random.default_rng(31)
        for trial in range(50):
            n = int(rng.integers(2, 21))
            p = int(rng.integers(2, 21))
            k = int(rng.integers(1, 4))
            data = random_ratings(rng, n, p, density=float(rng.uniform(0.2, 0.9)))
            h = HyperParams(float(rng.uniform(0.01, 5)), float(rng.uniform(0.01, 5)))
            f = init_factors(data.n, data.p, k, derive_stream(trial, "init"))
            energy = boltzmann_energy(data, f, h)
            for _ in range(3):
                user_sweep(data, f, h.lambda1)
                e1 = boltzmann_energy(data, f, h)
                assert e1 <= energy * (1 + 1e-10) + 1e-10
                item_sweep(data, f, h.lambda2)
                e2 = boltzmann_energy(data, f, h)
                assert e2 <= e1 * (1 + 1e-10) + 1e-10
                energy = e2


class TestAlsTrain:
    def test_rank1_exact_recovery(self):
        # a complete 2x2 rank-1 matrix factors exactly at k=1
        data = build_sparse([
            RatingTriple(1, 1, 1.0, 0),
            RatingTriple(1, 2, 2.0, 0),
            RatingTriple(2, 1, 2.0, 0),
            RatingTriple(2, 2, 4.0, 0),
        ])
        init = init_factors(2, 2, 1, derive_stream(3, "init"))
        f, report = als_train(data, 1, HyperParams(1e-12, 1e-12), init, max_sweeps=50)
        train_rmse = rmse(np.array([[u, i, r] for u, i, r in data.triples()]), f)
        assert train_rmse < 1e-6

    def test_single_sweep_contract(self, tiny_data):
        init = init_factors(2, 3, 1, derive_stream(4, "init"))
        f, report = als_train(tiny_data, 1, HyperParams(0.1, 0.1), init, max_sweeps=1)
        assert report.iterations == 1
        # matches one user half-step then one item half-step, by hand
        g = init.copy()
        user_sweep(tiny_data, g, 0.1)
        item_sweep(tiny_data, g, 0.1)
        np.testing.assert_allclose(f.U, g.U, atol=1e-12)
        np.testing.assert_allclose(f.V, g.V, atol=1e-12)

    def test_loss_history_non_increasing(self, tiny_data):
        init = init_factors(2, 3, 2, derive_stream(5, "init"))
        _, report = als_train(tiny_data, 2, HyperParams(0.2, 0.2), init, max_sweeps=40)
        hist = report.train_loss_history
        assert all(a >= b - 1e-10 * max(1, abs(a)) for a, b in zip(hist, hist[1:]))

    def test_init_not_mutated(self, tiny_data):
        init = init_factors(2, 3, 1, derive_stream(6, "init"))
        before = init.U.copy()
        als_train(tiny_data, 1, HyperParams(0.1, 0.1), init, max_sweeps=5)
        np.testing.assert_array_equal(init.U, before)

    def test_bad_arguments(self, tiny_data):
        init = init_factors(2, 3, 1, derive_stream(6, "init"))
        with pytest.raises(ValueError):
            als_train(tiny_data, 1, HyperParams(0.1, 0.1), init, max_sweeps=0)
        with pytest.raises(ValueError):
            als_train(tiny_data, 2, HyperParams(0.1, 0.1), init)


class TestRmse:
    def test_perfect_predictions(self):
        f = FactorPair(np.array([[1.0]]), np.array([[3.0]]))
        assert rmse([(0, 0, 3.0)], f) == 0.0

    def test_hand_arithmetic(self):
        f = FactorPair(np.array([[1.0], [1.0]]), np.array([[3.0]]))
        # residuals +1 and -1
        assert rmse([(0, 0, 4.0), (1, 0, 2.0)], f) == pytest.approx(1.0)

    def test_against_loop_oracle(self):
        rng = np.random.default_rng(12)
        f = FactorPair(rng.normal(size=(4, 3)), rng.normal(size=(5, 3)))
        test = [(int(rng.integers(4)), int(rng.integers(5)), float(rng.uniform(1, 5))) for _ in range(20)]
        sq = 0.0
        for u, i, r in test:
            sq += (r - float(np.dot(f.U[u], f.V[i]))) ** 2
        assert rmse(test, f) == pytest.approx(np.sqrt(sq / len(test)), rel=1e-12)

    def test_rotation_invariance(self):
        # predictions depend on U V^T only, so any orthogonal k-rotation
        # of both factors leaves the rmse unchanged
        rng = np.random.default_rng(13)
        k = 3
        f = FactorPair(rng.normal(size=(6, k)), rng.normal(size=(7, k)))
        test = [(int(rng.integers(6)), int(rng.integers(7)), float(rng.uniform(1, 5))) for _ in range(30)]
        base = rmse(test, f)
        for _ in range(5):
            Q, _ = np.linalg.qr(rng.normal(size=(k, k)))
            rotated = FactorPair(f.U @ Q, f.V @ Q)
            assert rmse(test, rotated) == pytest.approx(base, rel=1e-10)

    def test_empty_rejected(self):
        f = FactorPair(np.ones((1, 1)), np.ones((1, 1)))
        with pytest.raises(ValueError):
            rmse([], f)


class TestInitFactors:
    def test_moment_constants_k5(self):
        # solving k*mu^2 = 3 and k*(s^4 + 2 mu^2 s^2) = 1 for k = 5
        mu, sd = init_moments(5)
        assert mu == pytest.approx(0.7745966692414834, rel=1e-12)
        assert sd**2 == pytest.approx(0.14833147735478827, rel=1e-12)

    def test_product_moments_monte_carlo(self):
        # dot products of independent rows: mean 3, variance 1
        n = 10**6
        rng = derive_stream(2, "init")
        f = init_factors(n, n, 5, rng)
        dots = np.einsum("ij,ij->i", f.U, f.V)
        assert abs(dots.mean() - 3.0) <= 4.0 / np.sqrt(n)
        assert abs(dots.var() - 1.0) <= 0.02

    def test_full_matrix_mean(self):
        # mean over all n*p dot products equals ubar . vbar; with n = p =
        # 200000 four standard errors stay inside the 0.01 window
        n = 200000
        f = init_factors(n, n, 3, derive_stream(9, "init"))
        grand_mean = float(f.U.mean(axis=0) @ f.V.mean(axis=0))
        assert abs(grand_mean - 3.0) <= 0.01

    def test_determinism(self):
        a = init_factors(4, 5, 2, derive_stream(7, "init"))
        b = init_factors(4, 5, 2, derive_stream(7, "init"))
        np.testing.assert_array_equal(a.U, b.U)
        np.testing.assert_array_equal(a.V, b.V)

    def test_bad_dims(self):
        with pytest.raises(ValueError):
            init_factors(0, 1, 1, derive_stream(0, "init"))


class TestModelFile:
    def test_round_trip(self, tiny_data, tmp_path):
        init = init_factors(2, 3, 2, derive_stream(8, "init"))
        h = HyperParams(0.1, 0.25)
        path = tmp_path / "model.txt"
        save_model(path, tiny_data, init, h)
        loaded, h2 = load_model(path)
        np.testing.assert_array_equal(loaded.U, init.U)
        np.testing.assert_array_equal(loaded.V, init.V)
        assert (h2.lambda1, h2.lambda2) == (0.1, 0.25)

    def test_header_shape(self, tiny_data, tmp_path):
        init = init_factors(2, 3, 1, derive_stream(8, "init"))
        path = tmp_path / "model.txt"
        save_model(path, tiny_data, init, HyperParams(0.1, 0.1))
        first = path.read_text().splitlines()[0]
        assert first == "2 3 1 0.1 0.1"
