"""Operator correctness: adjoint pairing, densification, linearity, factories."""

import numpy as np
import pytest

from nullprior.errors import DimensionMismatchError, NullPriorError, SizeCapError
from nullprior.operators import (
    CirculantConvOperator,
    DecimatedConvOperator,
    DenseOperator,
    MaskedFrequencyOperator,
    RadonOperator,
    all_representatives,
    bilinear_kernel,
    dft_real_rows,
    dot_test,
    embed_kernel,
    gaussian_kernel,
    lowpass_mask,
    make_operator,
    random_mask,
)


def sample_operators(seed=0):
    """One instance of each variant, sized small enough for dense checks."""
    rng = np.random.default_rng(seed)
    side = 8
    n = side * side
    return {
        "dense": DenseOperator(rng.standard_normal((10, 40))),
        "dct": MaskedFrequencyOperator((side, side), random_mask((side, side), 16, seed), "dct"),
        "dft": MaskedFrequencyOperator((side, side),
                                       random_mask((side, side), 12, seed, transform="dft"),
                                       "dft"),
        "blur": CirculantConvOperator((side, side), gaussian_kernel(1.5, radius=3, ndim=2), "center"),
        "sr": DecimatedConvOperator((side, side), bilinear_kernel(2, ndim=2), 2),
        "ct": RadonOperator(side, [0.0, 30.0, 45.0, 90.0, 120.0]),
    }


class TestDotTest:
    @pytest.mark.parametrize("name", ["dense", "dct", "dft", "blur", "sr", "ct"])
    def test_adjoint_pairing(self, name):
        for seed in range(5):
            op = sample_operators(seed + 1)[name]
            assert dot_test(op, trials=5, seed=seed) < 1e-10

    def test_identity_case(self):
        op = DenseOperator(np.eye(2))
        np.testing.assert_array_equal(op.forward([3.0, 4.0]), [3.0, 4.0])
        np.testing.assert_array_equal(op.adjoint([3.0, 4.0]), [3.0, 4.0])


class TestToDense:
    @pytest.mark.parametrize("name", ["dense", "dct", "dft", "blur", "sr", "ct"])
    def test_matches_forward(self, name):
        op = sample_operators(3)[name]
        H = op.to_dense()
        rng = np.random.default_rng(7)
        for _ in range(100):
            x = rng.standard_normal(op.n)
            ref = H @ x
            got = op.forward(x)
            assert np.linalg.norm(got - ref) <= 1e-12 * max(np.linalg.norm(ref), 1.0)

    def test_identity_n3(self):
        np.testing.assert_array_equal(DenseOperator(np.eye(3)).to_dense(), np.eye(3))

    def test_circulant_rows_by_enumeration(self):
        # kernel (1,1)/2 on n=4: y[i] = (x[i] + x[i+1])/2, rows (.5,.5,0,0) shifted
        op = CirculantConvOperator(4, np.array([0.5, 0.5]), anchor="start")
        H = op.to_dense()
        expected = np.zeros((4, 4))
        for i in range(4):
            expected[i, i] = 0.5
            expected[i, (i + 1) % 4] = 0.5
        np.testing.assert_allclose(H, expected, atol=1e-14)

    def test_direct_convolution_enumeration(self):
        # independent O(n^2) oracle for the circular correlation
        rng = np.random.default_rng(5)
        n = 12
        kernel = rng.random(5)
        op = CirculantConvOperator(n, kernel, anchor="start")
        x = rng.standard_normal(n)
        expected = np.array([sum(kernel[j] * x[(i + j) % n] for j in range(5))
                             for i in range(n)])
        np.testing.assert_allclose(op.forward(x), expected, atol=1e-12)

    def test_radon_axis_aligned_is_column_sums(self):
        rng = np.random.default_rng(11)
        img = rng.random((8, 8))
        op = RadonOperator(8, [0.0])
        np.testing.assert_allclose(op.forward(img.reshape(-1)), img.sum(axis=0), atol=1e-10)

    def test_size_cap(self):
        op = CirculantConvOperator(8192, np.array([1.0]))
        with pytest.raises(SizeCapError):
            op.to_dense()


class TestSpectralNorm:
    def test_identity(self):
        assert DenseOperator(np.eye(5)).spectral_norm() == pytest.approx(1.0, abs=1e-12)

    def test_diagonal(self):
        assert DenseOperator(np.diag([3.0, 1.0])).spectral_norm() == pytest.approx(3.0, abs=1e-9)

    def test_matches_dense_svd(self):
        rng = np.random.default_rng(7)
        mat = rng.standard_normal((4, 10))
        ref = np.linalg.svd(mat, compute_uv=False)[0]
        assert DenseOperator(mat).spectral_norm(iters=500, tol=1e-13) == pytest.approx(ref, abs=1e-8)

    def test_nonconvergence_flagged(self):
        rng = np.random.default_rng(8)
        op = DenseOperator(rng.standard_normal((6, 12)))
        with pytest.warns(RuntimeWarning, match="did not converge"):
            estimate = op.spectral_norm(iters=2, tol=1e-16)
        assert estimate > 0


class TestLinearity:
    @pytest.mark.parametrize("name", ["dense", "dct", "dft", "blur", "sr", "ct"])
    def test_zero_and_superposition(self, name):
        op = sample_operators(2)[name]
        rng = np.random.default_rng(0)
        assert np.all(op.forward(np.zeros(op.n)) == 0.0)
        x, z = rng.standard_normal(op.n), rng.standard_normal(op.n)
        a, b = 0.7, -1.3
        lhs = op.forward(a * x + b * z)
        rhs = a * op.forward(x) + b * op.forward(z)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(np.linalg.norm(rhs), 1.0)


class TestMaskedFrequency:
    def test_rows_orthonormal_after_stacking(self):
        op = sample_operators(4)["dft"]
        H = op.to_dense()
        np.testing.assert_allclose(H @ H.T, np.eye(op.m_eff), atol=1e-10)

    def test_forward_adjoint_identity_on_measurements(self):
        for name in ("dct", "dft"):
            op = sample_operators(5)[name]
            rng = np.random.default_rng(1)
            u = rng.standard_normal(op.m_eff)
            np.testing.assert_allclose(op.forward(op.adjoint(u)), u, atol=1e-10)

    def test_full_mask_is_unitary(self):
        n = 16
        op = MaskedFrequencyOperator(n, range(n), "dct")
        rng = np.random.default_rng(2)
        x = rng.standard_normal(n)
        np.testing.assert_allclose(op.adjoint(op.forward(x)), x, atol=1e-10)
        reps = all_representatives((4, 4))
        op2 = MaskedFrequencyOperator((4, 4), reps, "dft")
        assert op2.m_eff == 16
        x = rng.standard_normal(16)
        np.testing.assert_allclose(op2.adjoint(op2.forward(x)), x, atol=1e-10)

    def test_dft_real_rows_match_operator(self):
        shape = (4, 4)
        reps = all_representatives(shape)[:5]
        op = MaskedFrequencyOperator(shape, reps, "dft")
        np.testing.assert_allclose(dft_real_rows(shape, op.kept), op.to_dense(), atol=1e-12)

    @pytest.mark.parametrize("shape", [7, (5, 5), (5, 6)])
    def test_dft_stacking_odd_sizes(self, shape):
        # odd axes have no Nyquist row; only DC is self-conjugate
        reps = all_representatives(shape)
        op = MaskedFrequencyOperator(shape, reps, "dft")
        assert op.m_eff == op.n
        H = op.to_dense()
        np.testing.assert_allclose(H @ H.T, np.eye(op.n), atol=1e-10)
        assert dot_test(op, trials=3, seed=1) < 1e-12


class TestFactory:
    def test_cs_binary_entries(self):
        op = make_operator("cs", {"n": 100, "m": 10, "dist": "binary"}, seed=1)
        H = op.to_dense()
        assert H.shape == (10, 100)
        assert set(np.unique(H)) <= {0.0, 1.0}

    def test_cs_reproducible(self):
        a = make_operator("cs", {"n": 30, "m": 5}, seed=9).to_dense()
        b = make_operator("cs", {"n": 30, "m": 5}, seed=9).to_dense()
        np.testing.assert_array_equal(a, b)
        c = make_operator("cs", {"n": 30, "m": 5}, seed=10).to_dense()
        assert np.linalg.norm(a - c) > 0

    def test_mri_full_mask_unitary(self):
        op = make_operator("mri", {"shape": (4, 4), "transform": "dct",
                                   "mask": list(range(16))})
        rng = np.random.default_rng(3)
        u = rng.standard_normal(16)
        np.testing.assert_allclose(op.forward(op.adjoint(u)), u, atol=1e-12)

    def test_blur_rows_sum_to_kernel_mass(self):
        op = make_operator("blur", {"shape": (16, 16),
                                    "kernel": {"kind": "gaussian", "sigma": 2.0}})
        H = op.to_dense()
        np.testing.assert_allclose(H.sum(axis=1), 1.0, atol=1e-10)

    def test_invalid_params(self):
        with pytest.raises(DimensionMismatchError):
            make_operator("cs", {"n": 5, "m": 9})
        with pytest.raises(NullPriorError):
            make_operator("cs", {"n": 5, "m": 2, "bogus": 1})
        with pytest.raises(DimensionMismatchError):
            make_operator("sr", {"shape": (9, 9), "factor": 2})
        with pytest.raises(DimensionMismatchError):
            RadonOperator(8, [0.0, 0.0])

    def test_dense_column_read(self):
        op = make_operator("cs", {"n": 10, "m": 4}, seed=7)
        H = op.to_dense()
        e1 = np.zeros(10)
        e1[0] = 1.0
        np.testing.assert_allclose(op.forward(e1), H[:, 0], atol=1e-14)


class TestKernels:
    def test_embed_center_rolls_center_to_origin(self):
        full = embed_kernel(np.array([1.0, 2.0, 3.0]), 6, anchor="center")
        np.testing.assert_array_equal(full, [2.0, 3.0, 0.0, 0.0, 0.0, 1.0])

    def test_identity_kernel_is_identity_operator(self):
        op = CirculantConvOperator(6, np.array([1.0]))
        x = np.arange(6.0)
        np.testing.assert_allclose(op.forward(x), x, atol=1e-13)

    def test_lowpass_mask_orders_by_frequency(self):
        assert lowpass_mask(8, 3, "dct") == [0, 1, 2]
        reps = lowpass_mask((4, 4), 3, "dft")
        assert reps[0] == 0
