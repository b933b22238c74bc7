"""Prior maps: oracle error models, analytic gradients, MMSE and joint training."""

import numpy as np
import pytest

from nullprior.errors import NullPriorError
from nullprior.nullspace import NullSpaceBasis, qr_nullspace
from nullprior.operators import DenseOperator
from nullprior.priors import (
    GaussianError,
    LipschitzError,
    OraclePrior,
    TwoLayerNet,
    ZeroError,
    _net_forward_backward,
    realize_error,
    train_joint,
    train_mmse,
)


def small_basis(seed=7):
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((4, 10))
    return H, qr_nullspace(H, p=3, seed=seed)


class TestOracle:
    def test_zero_error_exact(self):
        H, basis = small_basis()
        rng = np.random.default_rng(0)
        x = rng.standard_normal(10)
        prior = OraclePrior(basis, ZeroError())
        np.testing.assert_array_equal(prior.predict(H @ x, x), basis.project(x))

    def test_requires_ground_truth(self):
        _, basis = small_basis()
        with pytest.raises(NullPriorError):
            OraclePrior(basis).predict(np.zeros(4))

    def test_gaussian_error_second_moment(self):
        # Monte-Carlo against the closed form E||N||^2 = p * eps^2
        p, eps = 3, 0.7
        draws = np.array([np.linalg.norm(GaussianError(p, eps, seed=s).vector) ** 2
                          for s in range(10_000)])
        assert np.mean(draws) == pytest.approx(p * eps ** 2, rel=0.05)

    def test_gaussian_reproducible(self):
        a = GaussianError(5, 0.3, seed=42).vector
        b = GaussianError(5, 0.3, seed=42).vector
        np.testing.assert_array_equal(a, b)


class TestLipschitzError:
    def test_zero_eps_is_zero_map(self):
        err = LipschitzError(4, 6, eps=0.0, K=0.5, seed=0)
        np.testing.assert_array_equal(err(np.ones(6)), np.zeros(4))

    def test_certified_constant(self):
        err = LipschitzError(4, 6, eps=0.2, K=0.5, seed=1)
        assert err.certify(probes=1000, seed=2) <= 0.5 + 1e-8

    def test_range_bound(self):
        p, eps = 5, 0.3
        err = LipschitzError(p, 6, eps=eps, K=2.0, seed=3)
        rng = np.random.default_rng(4)
        for _ in range(50):
            u = 100.0 * rng.standard_normal(6)
            assert np.linalg.norm(err(u)) <= eps * np.sqrt(p) + 1e-12

    def test_realize_dispatch(self):
        assert isinstance(realize_error({"kind": "zero"}, 3, 4), ZeroError)
        assert isinstance(realize_error({"kind": "gaussian", "eps": 0.1}, 3, 4),
                          GaussianError)
        assert isinstance(realize_error({"kind": "lipschitz", "eps": 0.1, "K": 1.0}, 3, 4),
                          LipschitzError)


class TestGradients:
    @pytest.mark.parametrize("activation", ["tanh", "relu"])
    def test_analytic_matches_central_differences(self, activation):
        rng = np.random.default_rng(11)
        for trial in range(20):
            net = TwoLayerNet(4, 3, hidden=6, activation=activation, seed=trial)
            Y = rng.standard_normal((5, 4))
            T = rng.standard_normal((5, 3))
            _, dW, dV, _ = _net_forward_backward(net, Y, T)
            h = 1e-6

            def loss_at(W, V):
                saved_w, saved_v = net.W, net.V
                net.W, net.V = W, V
                val = _net_forward_backward(net, Y, T)[0]
                net.W, net.V = saved_w, saved_v
                return val

            for arr, grad in ((net.W, dW), (net.V, dV)):
                flat_idx = rng.integers(0, arr.size, size=4)
                for fi in flat_idx:
                    Wp = net.W.copy()
                    Vp = net.V.copy()
                    tgt = Wp if arr is net.W else Vp
                    tgt.reshape(-1)[fi] += h
                    up = loss_at(Wp, Vp)
                    Wm = net.W.copy()
                    Vm = net.V.copy()
                    tgt = Wm if arr is net.W else Vm
                    tgt.reshape(-1)[fi] -= h
                    down = loss_at(Wm, Vm)
                    numeric = (up - down) / (2 * h)
                    analytic = grad.reshape(-1)[fi]
                    assert analytic == pytest.approx(numeric, rel=1e-5, abs=1e-7)


class TestTrainMmse:
    def test_single_point_interpolation(self):
        # standardization would zero a single sample, so it is disabled here
        H, basis = small_basis(3)
        x = np.random.default_rng(5).standard_normal(10)
        net = TwoLayerNet(4, 3, hidden=40, seed=0)
        report = train_mmse(net, x[None, :], DenseOperator(H), basis,
                            epochs=3000, lr=1e-2, holdout_frac=0.0,
                            normalize=False)
        assert report.fit_loss < 1e-6

    def test_linear_consistent_data(self):
        # construct data where S x = M (H x) exactly, M known: a relu net
        # with paired hidden units can represent any linear map
        rng = np.random.default_rng(8)
        H = rng.standard_normal((4, 10))
        M = rng.standard_normal((3, 4))
        S = M @ H  # then S x = M H x for every x
        S /= np.linalg.norm(S, axis=1, keepdims=True)
        basis = NullSpaceBasis(S, "learned", 0.0, 0.0)
        xs = rng.standard_normal((200, 10))
        net = TwoLayerNet(4, 3, hidden=64, activation="relu", seed=1)
        report = train_mmse(net, xs, DenseOperator(H), basis,
                            epochs=6000, lr=1e-2, holdout_frac=0.1, seed=2,
                            normalize=False)
        assert report.holdout_projection_error < 1e-2
        assert report.fit_loss < 1e-4

    def test_divergence_detected(self):
        H, basis = small_basis(4)
        xs = np.random.default_rng(1).standard_normal((20, 10)) * 1e6
        net = TwoLayerNet(4, 3, hidden=8, seed=0)
        net.W *= 1e160  # force overflow in the first forward pass
        net.V *= 1e160
        with pytest.raises(Exception):
            train_mmse(net, xs, DenseOperator(H), basis, epochs=5, lr=1e3,
                       normalize=False)


class TestTrainJoint:
    def test_zero_penalties_keep_s_fixed(self):
        rng = np.random.default_rng(9)
        H = rng.standard_normal((4, 10))
        basis = qr_nullspace(H, p=3, seed=9)
        S_before = basis.matrix.copy()
        xs = rng.standard_normal((30, 10))
        net = TwoLayerNet(4, 3, hidden=8, seed=2)
        _, out_basis, _ = train_joint(net, basis, xs, H, lam1=0.0, lam2=0.0,
                                      epochs=20, lr=1e-3, seed=3)
        np.testing.assert_array_equal(out_basis.matrix, S_before)

    def test_penalty_only_descent(self):
        # with the fit term disabled and m + p = n, the gram residual
        # ||A'A - I||_F must fall by at least 10x (its floor is zero)
        rng = np.random.default_rng(12)
        n, m = 12, 3
        p = n - m
        H = np.linalg.qr(rng.standard_normal((n, m)))[0].T
        S0 = 0.5 * rng.standard_normal((p, n))
        xs = rng.standard_normal((40, n))
        net = TwoLayerNet(m, p, hidden=8, seed=4)

        def gram_norm(S):
            A = np.vstack([H, S])
            return np.linalg.norm(A.T @ A - np.eye(n))

        before = gram_norm(S0)
        _, out_basis, _ = train_joint(net, S0.copy(), xs, H, lam1=1.0, lam2=1.0,
                                      epochs=2000, lr=1e-2, seed=5,
                                      fit_weight=0.0)
        assert gram_norm(out_basis.matrix) <= before / 10.0

    def test_learned_s_more_orthogonal_than_random_init(self):
        rng = np.random.default_rng(13)
        n, m, p = 40, 6, 6
        H = rng.standard_normal((m, n)) / np.sqrt(n)
        S0 = rng.standard_normal((p, n)) / np.sqrt(n)
        xs = rng.standard_normal((60, n))
        net = TwoLayerNet(m, p, hidden=16, seed=6)
        init_residual = np.linalg.norm(S0 @ H.T)
        _, out_basis, _ = train_joint(net, S0.copy(), xs, H, lam1=0.001,
                                      lam2=0.01, epochs=800, lr=5e-3, seed=7)
        assert out_basis.ortho_to_H_residual < init_residual

    def test_gram_penalty_trend_under_training(self):
        # full-epoch average of the gram penalty must not increase
        rng = np.random.default_rng(14)
        n, m, p = 12, 3, 4
        H = np.linalg.qr(rng.standard_normal((n, m)))[0].T
        S0 = 0.3 * rng.standard_normal((p, n))
        xs = rng.standard_normal((40, n))
        net = TwoLayerNet(m, p, hidden=8, seed=8)
        _, _, report = train_joint(net, S0, xs, H, lam1=0.0, lam2=0.5,
                                   epochs=600, lr=2e-3, seed=9)
        gram_series = [row[3] for row in report.history]
        first_quarter = np.mean(gram_series[: len(gram_series) // 4])
        last_quarter = np.mean(gram_series[-len(gram_series) // 4:])
        assert last_quarter <= first_quarter + 1e-9


class TestSubspacePlacement:
    def test_adjacent_beats_disjoint_frequencies(self):
        # null directions adjacent to the measured band are predictable from
        # the measurements; distant ones are mostly independent texture, so
        # the learned map degrades and its output norm collapses
        from nullprior.nullspace import fourier_complement
        from nullprior.operators import MaskedFrequencyOperator, lowpass_mask

        side, m = 8, 12
        mask = lowpass_mask((side, side), m, "dct")
        op = MaskedFrequencyOperator((side, side), mask, "dct")
        full = fourier_complement(op)
        latent_dim = 6
        rng = np.random.default_rng(5)
        F_meas = rng.standard_normal((m, latent_dim)) / np.sqrt(latent_dim)
        F_comp = rng.standard_normal((full.p, latent_dim)) / np.sqrt(latent_dim)
        share = np.exp(-np.arange(full.p) / 10.0)

        def draw(count, seed):
            r = np.random.default_rng(seed)
            Z = r.standard_normal((count, latent_dim))
            W = r.standard_normal((count, full.p))
            c_meas = np.tanh(Z @ F_meas.T)
            c_comp = share * np.tanh(Z @ F_comp.T) + (1 - share) * 0.6 * W
            return np.array([op.adjoint(cm) + full.matrix.T @ cc
                             for cm, cc in zip(c_meas, c_comp)])

        xs = draw(400, 9)
        xs_test = draw(200, 10)
        Y_test = np.array([op.forward(x) for x in xs_test])
        p = 8
        results = {}
        for label, S in (("adjacent", full.matrix[:p]),
                         ("disjoint", full.matrix[-p:])):
            basis = NullSpaceBasis(S, "fourier-complement", 0.0, 0.0)
            net = TwoLayerNet(m, p, hidden=48, activation="tanh", seed=3)
            train_mmse(net, xs, op, basis, epochs=1000, lr=3e-3, seed=4,
                       holdout_frac=0.0, normalize=False)
            preds = net.predict(Y_test)
            targets = xs_test @ S.T
            rel = np.mean(np.linalg.norm(preds - targets, axis=1)
                          / np.linalg.norm(targets, axis=1))
            norm_ratio = np.linalg.norm(preds) / np.linalg.norm(targets)
            results[label] = (rel, norm_ratio)
        assert results["adjacent"][0] < results["disjoint"][0]
        assert results["adjacent"][0] < 0.6
        assert results["disjoint"][0] > 0.9
        assert results["disjoint"][1] < results["adjacent"][1]


class TestReportOutput:
    def test_history_csv(self, tmp_path):
        H, basis = small_basis(6)
        xs = np.random.default_rng(2).standard_normal((30, 10))
        net = TwoLayerNet(4, 3, hidden=8, seed=1)
        report = train_mmse(net, xs, DenseOperator(H), basis, epochs=50,
                            lr=1e-3, seed=3)
        path = tmp_path / "history.csv"
        report.save_history_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch,fit,invertibility,gram,holdout_error"
        assert len(lines) > 2


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        net = TwoLayerNet(4, 3, hidden=6, activation="relu", seed=5)
        net.mu = np.arange(4.0)
        net.sd = np.full(4, 2.0)
        path = tmp_path / "net.npz"
        net.save(path)
        loaded = TwoLayerNet.load(path)
        rng = np.random.default_rng(0)
        y = rng.standard_normal(4)
        np.testing.assert_array_equal(loaded.predict(y), net.predict(y))

    def test_net_with_zero_output_layer(self):
        net = TwoLayerNet(4, 3, hidden=6, seed=0)
        net.V[:] = 0.0
        np.testing.assert_array_equal(net.predict(np.ones(4)), np.zeros(3))
