"""Prior maps from measurements to null-space coefficients.

Two families: an oracle that returns the true projection plus a controlled
error term (for validating the convergence theory independent of training
quality), and a trainable two-layer network V phi(W y).  Training minimizes
the mean-squared projection error, optionally augmented with an invertibility
penalty on the stacked system ||x - A^+ A x||^2 and an orthogonality penalty
||A^T A - I||_F^2, where A stacks the sensing rows over the projection rows.
Gradients are analytic; the optimizer is Adam.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, NullPriorError, TrainingDivergedError
from .nullspace import NullSpaceBasis, pseudoinverse


# ---------------------------------------------------------------------------
# controlled error terms
# ---------------------------------------------------------------------------

class ZeroError:
    """No mismatch: the oracle returns the exact projection."""

    norm_bound = 0.0
    lipschitz = 0.0

    def __call__(self, y):
        return 0.0


class GaussianError:
    """Fixed Gaussian error vector, drawn once per seed (constant in y)."""

    lipschitz = 0.0

    def __init__(self, p, eps, seed=0):
        rng = np.random.default_rng(seed)
        self.vector = float(eps) * rng.standard_normal(p)
        self.norm_bound = float(np.linalg.norm(self.vector))

    def __call__(self, y):
        return self.vector


class LipschitzError:
    """Smooth bounded error eps * tanh(B y) with certified Lipschitz constant.

    B is a seeded Gaussian matrix rescaled so the map's Lipschitz constant is
    at most K; `certify` measures the constant on random probe pairs.
    """

    def __init__(self, p, dim_in, eps, K, seed=0):
        if K <= 0:
            raise NullPriorError("K must be positive")
        self.eps = float(eps)
        self.K = float(K)
        rng = np.random.default_rng(seed)
        B = rng.standard_normal((p, dim_in))
        if eps > 0:
            B *= K / (eps * np.linalg.norm(B, 2))
        self.B = B
        self.norm_bound = self.eps * np.sqrt(p)  # tanh saturation
        self.lipschitz = self.K if eps > 0 else 0.0

    def __call__(self, y):
        if self.eps == 0.0:
            return np.zeros(self.B.shape[0])
        return self.eps * np.tanh(self.B @ np.asarray(y, dtype=float))

    def certify(self, probes=1000, seed=0):
        """Max empirical ratio ||N(u)-N(v)|| / ||u-v|| over seeded probe pairs."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        dim = self.B.shape[1]
        for _ in range(probes):
            u = rng.standard_normal(dim)
            v = rng.standard_normal(dim)
            duv = np.linalg.norm(u - v)
            if duv == 0:
                continue
            worst = max(worst, np.linalg.norm(self(u) - self(v)) / duv)
        return worst


def realize_error(spec, p, dim_in, seed=0):
    """Build an error term from a spec dict {"kind": zero|gaussian|lipschitz, ...}."""
    spec = dict(spec)
    kind = spec.pop("kind", "zero")
    if kind == "zero":
        return ZeroError()
    if kind == "gaussian":
        return GaussianError(p, float(spec.pop("eps")), int(spec.pop("seed", seed)))
    if kind == "lipschitz":
        return LipschitzError(p, dim_in, float(spec.pop("eps")),
                              float(spec.pop("K", 1.0)), int(spec.pop("seed", seed)))
    raise NullPriorError(f"unknown error kind {kind!r}")


class OraclePrior:
    """Returns S x* plus the realized error term; needs the ground truth."""

    def __init__(self, basis, error=None):
        self.basis = basis
        self.error = error if error is not None else ZeroError()

    @property
    def p(self):
        return self.basis.p

    def predict(self, y, x_star=None):
        if x_star is None:
            raise NullPriorError("oracle prior needs the ground-truth signal")
        return self.basis.project(x_star) + self.error(y)

    def error_norm(self, y):
        """Exact ||N(y)|| for this realization (the improvement-zone threshold)."""
        return float(np.linalg.norm(np.atleast_1d(self.error(y))))


# ---------------------------------------------------------------------------
# two-layer network
# ---------------------------------------------------------------------------

def _activation(name):
    if name == "tanh":
        return np.tanh, lambda z: 1.0 - np.tanh(z) ** 2
    if name == "relu":
        return (lambda z: np.maximum(z, 0.0)), (lambda z: (z > 0).astype(float))
    raise NullPriorError(f"unknown activation {name!r}")


class TwoLayerNet:
    """V phi(W y): hidden width k, no biases, optional input standardization.

    init_scale shrinks the first-layer initialization; small values keep the
    hidden pre-activations in the near-linear regime of tanh, which matters
    when the net must extrapolate beyond its training range.
    """

    def __init__(self, dim_in, dim_out, hidden, activation="tanh", seed=0,
                 init_scale=1.0):
        rng = np.random.default_rng(seed)
        self.W = init_scale * rng.standard_normal((hidden, dim_in)) / np.sqrt(dim_in)
        self.V = rng.standard_normal((dim_out, hidden)) / np.sqrt(hidden)
        self.activation = activation
        self.mu = np.zeros(dim_in)
        self.sd = np.ones(dim_in)

    @property
    def k(self):
        return self.W.shape[0]

    @property
    def p(self):
        return self.V.shape[0]

    def predict(self, y):
        y = np.asarray(y, dtype=float)
        phi, _ = _activation(self.activation)
        yn = (y - self.mu) / self.sd
        return phi(yn @ self.W.T) @ self.V.T

    def save(self, path):
        np.savez(path, W=self.W, V=self.V, mu=self.mu, sd=self.sd,
                 activation=np.array(self.activation),
                 k=self.k, m_eff=self.W.shape[1], p=self.p)

    @classmethod
    def load(cls, path):
        data = np.load(path)
        net = cls(int(data["m_eff"]), int(data["p"]), int(data["k"]),
                  str(data["activation"]))
        net.W = data["W"]
        net.V = data["V"]
        net.mu = data["mu"]
        net.sd = data["sd"]
        return net


def _net_forward_backward(net, Y, targets):
    """Mean squared fit loss and its analytic gradients for a batch.

    Y: (N, dim_in) standardized measurements; targets: (N, p).
    Returns (loss, dW, dV, residual) with loss = mean_i ||G(y_i) - t_i||^2.
    """
    phi, dphi = _activation(net.activation)
    N = Y.shape[0]
    Z = Y @ net.W.T             # (N, k)
    Hh = phi(Z)                 # (N, k)
    out = Hh @ net.V.T          # (N, p)
    R = out - targets           # (N, p)
    loss = float(np.sum(R ** 2) / N)
    dV = 2.0 * R.T @ Hh / N
    dH = R @ net.V              # (N, k)
    dZ = dH * dphi(Z)
    dW = 2.0 * dZ.T @ Y / N
    return loss, dW, dV, R


class Adam:
    """Standard Adam updates over a list of parameter arrays."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g ** 2
            mhat = self.m[i] / (1 - self.beta1 ** self.t)
            vhat = self.v[i] / (1 - self.beta2 ** self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass
class TrainReport:
    final_loss: float
    fit_loss: float
    invertibility_loss: float
    gram_loss: float
    epochs: int
    holdout_projection_error: float
    history: list = field(default_factory=list, repr=False)

    def save_history_csv(self, path):
        with open(path, "w") as fh:
            fh.write("epoch,fit,invertibility,gram,holdout_error\n")
            for row in self.history:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _holdout_error(net, Y, targets):
    """Relative projection error ||t - G(y)|| / ||t|| averaged over a set."""
    preds = np.array([net.predict(y) for y in Y])
    num = np.linalg.norm(preds - targets, axis=1)
    den = np.linalg.norm(targets, axis=1)
    ok = den > 0
    if not np.any(ok):
        return float(np.mean(num))
    return float(np.mean(num[ok] / den[ok]))


def _standardize(net, Y, normalize):
    if normalize:
        net.mu = Y.mean(axis=0)
        sd = Y.std(axis=0)
        net.sd = np.where(sd > 1e-12, sd, 1.0)
    return (Y - net.mu) / net.sd


def _split(xs, holdout_frac, seed):
    n = xs.shape[0]
    n_hold = int(round(holdout_frac * n))
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    return order[n_hold:], order[:n_hold]


def train_mmse(net, xs, operator, basis, epochs=200, lr=1e-3, batch_size=None,
               seed=0, holdout_frac=0.2, normalize=True, noise_std=0.0):
    """Fit the network to map measurements to projections, S held fixed.

    xs: (N, n) training signals.  Measurements are H x (optionally perturbed
    by Gaussian noise of std `noise_std`); targets are S x.  Returns a
    TrainReport with the held-out relative projection error.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[0] == 0:
        raise NullPriorError("dataset is empty")
    S = basis.matrix if isinstance(basis, NullSpaceBasis) else np.asarray(basis)
    Y = np.array([operator.forward(x) for x in xs])
    rng = np.random.default_rng(seed)
    if noise_std > 0:
        Y = Y + noise_std * rng.standard_normal(Y.shape)
    T = xs @ S.T
    train_idx, hold_idx = _split(xs, holdout_frac, seed)
    Yn = _standardize(net, Y[train_idx], normalize)
    Tn = T[train_idx]

    if epochs < 1:
        raise NullPriorError("epochs must be >= 1")
    opt = Adam([net.W, net.V], lr=lr)
    history = []
    epoch_loss = np.nan
    nb = max(1, len(train_idx) // batch_size) if batch_size else 1
    for epoch in range(epochs):
        order = rng.permutation(len(train_idx)) if batch_size else np.arange(len(train_idx))
        epoch_loss = 0.0
        for chunk in np.array_split(order, nb):
            loss, dW, dV, _ = _net_forward_backward(net, Yn[chunk], Tn[chunk])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"loss became {loss} at epoch {epoch} (lr={lr})")
            opt.step([net.W, net.V], [dW, dV])
            epoch_loss += loss * len(chunk)
        epoch_loss /= len(train_idx)
        if epoch % max(1, epochs // 50) == 0 or epoch == epochs - 1:
            hold = (_holdout_error(net, Y[hold_idx], T[hold_idx])
                    if len(hold_idx) else np.nan)
            history.append((epoch, epoch_loss, 0.0, 0.0, hold))
    holdout = (_holdout_error(net, Y[hold_idx], T[hold_idx])
               if len(hold_idx) else _holdout_error(net, Y[train_idx], Tn))
    return TrainReport(epoch_loss, epoch_loss, 0.0, 0.0, epochs, holdout, history)


def train_joint(net, S_init, xs, H_dense, lam1=0.0, lam2=0.0, epochs=200,
                lr=1e-3, batch_size=None, seed=0, holdout_frac=0.2,
                normalize=True, fit_weight=1.0, noise_std=0.0):
    """Jointly optimize the network and the projection matrix.

    Adds lam1 * mean ||x - A^+ A x||^2 (A^+ frozen per step) and
    lam2 * ||A^T A - I||_F^2 to the fit loss, with A = [H; S].  With
    lam1 = lam2 = 0 the projection matrix is held fixed and this reduces to
    train_mmse.  Returns (net, learned basis, report).
    """
    if lam1 < 0 or lam2 < 0:
        raise NullPriorError("penalty weights must be nonnegative")
    H = np.asarray(H_dense, dtype=float)
    S = np.array(S_init.matrix if isinstance(S_init, NullSpaceBasis) else S_init,
                 dtype=float)
    m, n = H.shape
    p = S.shape[0]
    if S.shape[1] != n:
        raise DimensionMismatchError("S and H must share the signal dimension")
    if lam2 > 0 and m + p > n:
        warnings.warn("m + p > n: exact orthonormality of [H; S] is unreachable",
                      RuntimeWarning)

    if lam1 == 0.0 and lam2 == 0.0:
        from .operators import DenseOperator
        basis = S_init if isinstance(S_init, NullSpaceBasis) else \
            NullSpaceBasis(S, "learned", float(np.linalg.norm(S @ H.T)),
                           float(np.linalg.norm(S @ S.T - np.eye(p))))
        report = train_mmse(net, xs, DenseOperator(H), basis, epochs=epochs,
                            lr=lr, batch_size=batch_size, seed=seed,
                            holdout_frac=holdout_frac, normalize=normalize,
                            noise_std=noise_std)
        return net, basis, report

    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    rng = np.random.default_rng(seed)
    Y = xs @ H.T
    if noise_std > 0:
        Y = Y + noise_std * rng.standard_normal(Y.shape)
    train_idx, hold_idx = _split(xs, holdout_frac, seed)
    Yn = _standardize(net, Y[train_idx], normalize)
    Xt = xs[train_idx]

    opt = Adam([net.W, net.V, S], lr=lr)
    history = []
    fit = l1 = l2 = 0.0
    nb = max(1, len(train_idx) // batch_size) if batch_size else 1
    for epoch in range(epochs):
        order = rng.permutation(len(train_idx)) if batch_size else np.arange(len(train_idx))
        for chunk in np.array_split(order, nb):
            Yb, Xb = Yn[chunk], Xt[chunk]
            Tb = Xb @ S.T
            fit, dW, dV, R = _net_forward_backward(net, Yb, Tb)
            # fit residual also drives S: d mean||G - Sx||^2 / dS = -2/N R^T X
            dS = -2.0 * R.T @ Xb / Xb.shape[0]
            dW *= fit_weight
            dV *= fit_weight
            dS *= fit_weight
            fit *= fit_weight

            A = np.vstack([H, S])
            l1 = l2 = 0.0
            if lam2 > 0:
                E = A.T @ A - np.eye(n)
                l2 = float(np.sum(E ** 2))
                dS += lam2 * 4.0 * S @ E
            if lam1 > 0:
                Adag = pseudoinverse(A)  # frozen within the step
                Rx = Xb - (Xb @ A.T) @ Adag.T
                l1 = float(np.mean(np.sum(Rx ** 2, axis=1)))
                dA = -2.0 * Adag.T @ (Rx.T @ Xb) / Xb.shape[0]
                dS += lam1 * dA[m:]
            total = fit + lam1 * l1 + lam2 * l2
            if not np.isfinite(total):
                raise TrainingDivergedError(
                    f"loss became {total} at epoch {epoch} (lr={lr})")
            opt.step([net.W, net.V, S], [dW, dV, dS])
        if epoch % max(1, epochs // 50) == 0 or epoch == epochs - 1:
            hold = (_holdout_error(net, Y[hold_idx], xs[hold_idx] @ S.T)
                    if len(hold_idx) else np.nan)
            history.append((epoch, fit, l1, l2, hold))

    basis = NullSpaceBasis(S, "learned", float(np.linalg.norm(S @ H.T)),
                           float(np.linalg.norm(S @ S.T - np.eye(p))))
    holdout = (_holdout_error(net, Y[hold_idx], xs[hold_idx] @ S.T)
               if len(hold_idx) else np.nan)
    report = TrainReport(fit + lam1 * l1 + lam2 * l2, fit, l1, l2, epochs,
                         holdout, history)
    return net, basis, report
