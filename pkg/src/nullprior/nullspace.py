"""Construction of projection bases aligned with the sensing operator's null space.

Exact complements come from QR orthogonalization of the null space (dense
matrices) or from the unsampled rows of an orthonormal transform (masked
frequency operators).  The Radon and convolution complements are structured
approximations: their rows are not exactly in Null(H), so the orthogonality
residuals are recorded rather than forced to zero.
"""

import io
from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.linalg

from .errors import (
    DimensionMismatchError,
    EmptyComplementError,
    InfeasibleDimensionError,
    NullPriorError,
    RankDeficientError,
    SizeCapError,
)
from .operators import (
    DENSE_CAP,
    CirculantConvOperator,
    MaskedFrequencyOperator,
    RadonOperator,
    ScaledOperator,
    all_representatives,
    dft_real_rows,
    embed_kernel,
)

RANK_RTOL = 1e-10  # singular values below RANK_RTOL * sigma_max count as zero

EXACT_METHODS = ("qr-random", "fourier-complement")


@dataclass(frozen=True)
class NullSpaceBasis:
    """A p x n projection matrix with its construction provenance and residuals."""

    matrix: np.ndarray
    method: str
    ortho_to_H_residual: float
    row_gram_residual: float

    @property
    def p(self):
        return self.matrix.shape[0]

    @property
    def n(self):
        return self.matrix.shape[1]

    def project(self, x):
        return self.matrix @ np.asarray(x, dtype=float).reshape(-1)

    def backproject(self, coeffs):
        return self.matrix.T @ np.asarray(coeffs, dtype=float).reshape(-1)

    def scaled(self, factor):
        """Rescaled copy (used by the contraction-rate experiments)."""
        mat = float(factor) * self.matrix
        return NullSpaceBasis(mat, f"{self.method}-scaled",
                              abs(factor) * self.ortho_to_H_residual,
                              float(np.linalg.norm(mat @ mat.T - np.eye(self.p))))


@dataclass(frozen=True)
class OrthogonalityReport:
    ortho_residual: float
    row_gram_residual: float
    rank_of_stack: int
    invertibility_loss: float


def _residuals(S, op=None, H_dense=None):
    if H_dense is None and op is not None:
        # ||S H^T||_F via forward applied to rows of S; avoids densifying H
        SHt = np.array([op.forward(row) for row in S])
    elif H_dense is not None:
        SHt = S @ H_dense.T
    else:
        raise NullPriorError("need an operator or a dense matrix")
    ortho = float(np.linalg.norm(SHt))
    gram = float(np.linalg.norm(S @ S.T - np.eye(S.shape[0])))
    return ortho, gram


def qr_nullspace(H_dense, p, seed=0):
    """Orthonormal rows spanning a random p-dimensional subspace of Null(H).

    A full QR factorization of H^T yields an orthonormal null-space basis N;
    a seeded Gaussian matrix, orthonormalized by a second QR, selects the
    subspace.  Requires rank(H) = m and p <= n - m.
    """
    H = np.asarray(H_dense, dtype=float)
    m, n = H.shape
    if n > DENSE_CAP:
        raise SizeCapError(f"n={n} exceeds dense cap {DENSE_CAP}")
    svals = np.linalg.svd(H, compute_uv=False)
    rank = int(np.sum(svals > RANK_RTOL * svals[0])) if svals.size else 0
    if rank < m:
        raise RankDeficientError(f"H has numerical rank {rank} < m={m}")
    if p < 1 or p > n - m:
        raise InfeasibleDimensionError(f"p={p} not in [1, n-m={n - m}]")
    Q, _ = scipy.linalg.qr(H.T, mode="full")
    N = Q[:, m:]
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((n - m, p))
    U, _ = scipy.linalg.qr(P, mode="economic")
    S = (N @ U).T
    ortho, gram = _residuals(S, H_dense=H)
    return NullSpaceBasis(S, "qr-random", ortho, gram)


def fourier_complement(op):
    """Rows of the transform at the frequencies the mask left out.

    Works on a MaskedFrequencyOperator (or a scaled wrapper around one); the
    complement rows are orthonormal and exactly orthogonal to the kept rows.
    Rows are ordered by ascending frequency index.
    """
    base = op.base if isinstance(op, ScaledOperator) else op
    if not isinstance(base, MaskedFrequencyOperator):
        raise NullPriorError("fourier_complement requires a masked frequency operator")
    shape = base.shape_in
    if base.transform == "dct":
        missing = sorted(set(range(base.n)) - set(base.kept))
        if not missing:
            raise EmptyComplementError("mask keeps every frequency")
        S = np.zeros((len(missing), base.n))
        coef = np.zeros(base.n)
        for i, k in enumerate(missing):
            coef[k] = 1.0
            S[i] = scipy.fft.idctn(coef.reshape(shape), type=2, norm="ortho").reshape(-1)
            coef[k] = 0.0
    else:
        missing = sorted(set(all_representatives(shape)) - set(base.kept))
        if not missing:
            raise EmptyComplementError("mask keeps every frequency")
        S = dft_real_rows(shape, missing)
    ortho, gram = _residuals(S, op=base)
    return NullSpaceBasis(S, "fourier-complement", ortho, gram)


def radon_complement(side, full_angles, acquired_angles):
    """Radon rows at the non-acquired angles; an approximate complement."""
    full = [float(a) for a in full_angles]
    acq = {float(a) for a in acquired_angles}
    if not acq <= set(full):
        raise NullPriorError("acquired angles must be a subset of the full set")
    missing = [a for a in full if a not in acq]
    if not missing:
        raise EmptyComplementError("all angles acquired")
    S = RadonOperator(side, missing).to_dense()
    acquired_op = RadonOperator(side, sorted(acq))
    ortho, gram = _residuals(S, op=acquired_op)
    return NullSpaceBasis(S, "radon-complement", ortho, gram)


def _complement_circulant(kernel, shape, anchor, method, H_op):
    kernel = np.asarray(kernel, dtype=float)
    if np.any(kernel < 0) or not np.isclose(kernel.sum(), 1.0):
        raise NullPriorError("kernel must be nonnegative and sum to 1")
    full = embed_kernel(kernel, shape, anchor)
    gen = -full
    gen.reshape(-1)[0] += 1.0  # complement response 1 - K(w) at every bin
    S = CirculantConvOperator(shape, gen.reshape(-1) if gen.ndim == 1 else gen,
                              anchor="start").to_dense()
    ortho, gram = _residuals(S, op=H_op)
    return NullSpaceBasis(S, method, ortho, gram)


def toeplitz_complement(kernel, shape, anchor="center"):
    """Circulant complement of a blur kernel: frequency response 1 - K at every bin.

    Rows follow the blur's shift structure but pass what the kernel attenuates,
    so they concentrate on the high frequencies the measurements lose.
    """
    H_op = CirculantConvOperator(shape, kernel, anchor)
    return _complement_circulant(kernel, shape, anchor, "toeplitz-complement", H_op)


def sr_complement(kernel, factor, shape, anchor="center"):
    """Complement for decimated convolution, built from the low-pass kernel alone."""
    shape_t = (int(shape),) if np.isscalar(shape) else tuple(shape)
    factor = int(factor)
    if any(s % factor for s in shape_t):
        raise DimensionMismatchError(f"factor {factor} must divide every axis of {shape_t}")
    from .operators import DecimatedConvOperator

    H_op = DecimatedConvOperator(shape, kernel, factor, anchor)
    return _complement_circulant(kernel, shape, anchor, "sr-complement", H_op)


def pseudoinverse(A):
    """SVD pseudoinverse with the package-wide relative rank cutoff."""
    return np.linalg.pinv(A, rcond=RANK_RTOL)


def orthogonality_report(S, H_dense, sample_signals):
    """Residuals, stacked rank, and the data-driven invertibility loss.

    invertibility_loss is the mean of ||x - A^+ A x||^2 over the samples,
    where A stacks the sensing rows over the projection rows.
    """
    S = S.matrix if isinstance(S, NullSpaceBasis) else np.asarray(S, dtype=float)
    H = np.asarray(H_dense, dtype=float)
    if S.shape[1] != H.shape[1]:
        raise DimensionMismatchError("S and H must share the signal dimension")
    A = np.vstack([H, S])
    svals = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(svals > RANK_RTOL * svals[0])) if svals.size and svals[0] > 0 else 0
    proj = pseudoinverse(A) @ A
    samples = np.atleast_2d(np.asarray(sample_signals, dtype=float))
    residual = samples - samples @ proj.T
    loss = float(np.mean(np.sum(residual ** 2, axis=1)))
    ortho, gram = _residuals(S, H_dense=H)
    return OrthogonalityReport(ortho, gram, rank, loss)


# ---------------------------------------------------------------------------
# serialization: commented header line + CSV rows
# ---------------------------------------------------------------------------

def save_basis(basis, path):
    with open(path, "w") as fh:
        fh.write(f"# method={basis.method} p={basis.p} n={basis.n} "
                 f"ortho_to_H_residual={basis.ortho_to_H_residual:.17g} "
                 f"row_gram_residual={basis.row_gram_residual:.17g}\n")
        np.savetxt(fh, basis.matrix, delimiter=",", fmt="%.17g")


def load_basis(path):
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# method="):
            raise NullPriorError(f"{path} is not a basis dump")
        fields = dict(item.split("=", 1) for item in header[2:].split())
        matrix = np.loadtxt(io.StringIO(fh.read()), delimiter=",", ndmin=2)
    basis = NullSpaceBasis(matrix, fields["method"],
                           float(fields["ortho_to_H_residual"]),
                           float(fields["row_gram_residual"]))
    if basis.p != int(fields["p"]) or basis.n != int(fields["n"]):
        raise NullPriorError("basis dump header disagrees with matrix shape")
    return basis
