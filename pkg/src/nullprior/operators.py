"""Linear sensing operators with a uniform forward/adjoint interface.

Five measurement models are provided: dense random matrices (compressed
sensing), masked frequency transforms (MRI-style, DCT or real-stacked DFT),
circular convolution (deblurring), decimated convolution (super-resolution),
and a parallel-beam Radon subset (limited-angle CT).  Every operator maps a
flat real vector of length n to a flat real measurement vector and exposes
an exact adjoint, a dense materialization (n <= 4096), and a power-iteration
spectral norm estimate.

All operators are immutable after construction; forward/adjoint are pure.
"""

import warnings

import numpy as np
import scipy.fft

from .errors import DimensionMismatchError, NullPriorError, SizeCapError

DENSE_CAP = 4096


def _as_flat(x, n, what="input"):
    x = np.asarray(x, dtype=float)
    if x.size != n:
        raise DimensionMismatchError(f"{what} has size {x.size}, expected {n}")
    return x.reshape(-1)


class LinearOperator:
    """Base class: subclasses set .shape_in, .m, .m_eff and implement _apply/_apply_adjoint."""

    shape_in = None  # (n,) or (h, w)
    m = None         # logical measurement count
    m_eff = None     # length of the real measurement vector

    @property
    def n(self):
        return int(np.prod(self.shape_in))

    def forward(self, x):
        """Apply the operator to a signal (flat or shaped); returns a flat measurement."""
        return self._apply(_as_flat(x, self.n, "signal"))

    def adjoint(self, u):
        """Apply the transpose to a measurement vector; returns a flat signal."""
        return self._apply_adjoint(_as_flat(u, self.m_eff, "measurement"))

    def to_dense(self):
        """Materialize the (m_eff, n) matrix by applying forward to basis vectors."""
        if self.n > DENSE_CAP:
            raise SizeCapError(f"n={self.n} exceeds dense cap {DENSE_CAP}")
        out = np.empty((self.m_eff, self.n))
        e = np.zeros(self.n)
        for i in range(self.n):
            e[i] = 1.0
            out[:, i] = self._apply(e)
            e[i] = 0.0
        return out

    def spectral_norm(self, iters=200, tol=1e-10, seed=0):
        """Largest singular value by power iteration on the normal operator.

        Warns (and returns the best estimate) if the relative change has not
        dropped below tol within `iters` iterations.
        """
        if iters < 1:
            raise NullPriorError("iters must be >= 1")
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.n)
        v /= np.linalg.norm(v)
        sigma = 0.0
        for _ in range(iters):
            w = self._apply_adjoint(self._apply(v))
            nw = np.linalg.norm(w)
            if nw == 0.0:
                return 0.0
            sigma_new = np.sqrt(nw)
            v = w / nw
            if abs(sigma_new - sigma) <= tol * max(sigma_new, 1e-300):
                return sigma_new
            sigma = sigma_new
        warnings.warn(f"spectral_norm did not converge in {iters} iterations "
                      f"(last estimate {sigma})", RuntimeWarning)
        return sigma


class DenseOperator(LinearOperator):
    """Explicit (m, n) matrix, used for compressed sensing."""

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise DimensionMismatchError("matrix must be 2-D")
        self.matrix = matrix
        self.shape_in = (matrix.shape[1],)
        self.m = self.m_eff = matrix.shape[0]

    def _apply(self, x):
        return self.matrix @ x

    def _apply_adjoint(self, u):
        return self.matrix.T @ u

    def to_dense(self):
        return self.matrix.copy()


# ---------------------------------------------------------------------------
# masked frequency transforms
# ---------------------------------------------------------------------------

def _as_shape(shape):
    return (int(shape),) if np.isscalar(shape) else tuple(int(s) for s in shape)


def conjugate_partner(flat_index, shape):
    """Flat index of the mirrored (negated) frequency for a real-input DFT."""
    shape = _as_shape(shape)
    idx = np.unravel_index(flat_index, shape)
    mirrored = tuple((-k) % s for k, s in zip(idx, shape))
    return int(np.ravel_multi_index(mirrored, shape))


def canonical_representatives(indices, shape):
    """Map DFT frequency indices to conjugate-pair representatives, deduped and sorted."""
    shape = _as_shape(shape)
    reps = {min(int(k), conjugate_partner(int(k), shape)) for k in indices}
    return sorted(reps)


def all_representatives(shape):
    shape = _as_shape(shape)
    return canonical_representatives(range(int(np.prod(shape))), shape)


def _dct_matrix(n):
    # rows of the orthonormal DCT-II matrix: row k picks coefficient k
    return scipy.fft.dct(np.eye(n), type=2, norm="ortho", axis=0)


def dft_real_rows(shape, representatives):
    """Real orthonormal rows for the given DFT representatives.

    Each non-self-conjugate frequency contributes two rows (sqrt(2) x real
    part, sqrt(2) x imaginary part of the unitary DFT row); self-conjugate
    frequencies (DC / Nyquist) contribute their single real row.
    """
    shape = tuple(shape)
    n = int(np.prod(shape))
    rows = []
    grids = np.meshgrid(*[np.arange(s) for s in shape], indexing="ij")
    for k in representatives:
        idx = np.unravel_index(k, shape)
        phase = sum(g * (ki / s) for g, ki, s in zip(grids, idx, shape))
        row = np.exp(-2j * np.pi * phase).reshape(-1) / np.sqrt(n)
        if conjugate_partner(k, shape) == k:
            rows.append(row.real)
        else:
            rows.append(np.sqrt(2.0) * row.real)
            rows.append(np.sqrt(2.0) * row.imag)
    return np.array(rows)


class MaskedFrequencyOperator(LinearOperator):
    """Rows of an orthonormal transform restricted to a kept frequency set.

    transform="dct": orthonormal DCT-II coefficients at the kept flat indices
    (all-real, m_eff = m).  transform="dft": unitary DFT coefficients at the
    kept conjugate-pair representatives, stacked into real rows (real and
    imaginary parts scaled by sqrt(2), self-conjugate rows kept once), so the
    resulting real matrix still has orthonormal rows.
    """

    def __init__(self, shape, kept, transform="dct"):
        self.shape_in = _as_shape(shape)
        n = self.n
        kept = [int(k) for k in kept]
        if len(kept) == 0:
            raise DimensionMismatchError("mask must keep at least one frequency")
        if any(k < 0 or k >= n for k in kept):
            raise DimensionMismatchError("mask index out of range")
        if transform not in ("dct", "dft"):
            raise NullPriorError(f"unknown transform {transform!r}")
        self.transform = transform
        if transform == "dct":
            if len(set(kept)) != len(kept):
                raise DimensionMismatchError("mask indices must be distinct")
            self.kept = sorted(kept)
            self.m = self.m_eff = len(self.kept)
        else:
            self.kept = canonical_representatives(kept, self.shape_in)
            self._selfconj = [conjugate_partner(k, self.shape_in) == k for k in self.kept]
            self.m = len(self.kept)
            self.m_eff = sum(1 if sc else 2 for sc in self._selfconj)

    def _apply(self, x):
        xs = x.reshape(self.shape_in)
        if self.transform == "dct":
            return scipy.fft.dctn(xs, type=2, norm="ortho").reshape(-1)[self.kept]
        spec = scipy.fft.fftn(xs, norm="ortho").reshape(-1)
        out = np.empty(self.m_eff)
        j = 0
        for k, sc in zip(self.kept, self._selfconj):
            if sc:
                out[j] = spec[k].real
                j += 1
            else:
                out[j] = np.sqrt(2.0) * spec[k].real
                out[j + 1] = np.sqrt(2.0) * spec[k].imag
                j += 2
        return out

    def _apply_adjoint(self, u):
        if self.transform == "dct":
            coef = np.zeros(self.n)
            coef[self.kept] = u
            return scipy.fft.idctn(coef.reshape(self.shape_in), type=2,
                                   norm="ortho").reshape(-1)
        spec = np.zeros(self.n, dtype=complex)
        j = 0
        for k, sc in zip(self.kept, self._selfconj):
            if sc:
                spec[k] = u[j]
                j += 1
            else:
                w = (u[j] + 1j * u[j + 1]) / np.sqrt(2.0)
                spec[k] = w
                spec[conjugate_partner(k, self.shape_in)] = np.conj(w)
                j += 2
        x = scipy.fft.ifftn(spec.reshape(self.shape_in), norm="ortho")
        return x.real.reshape(-1)


# ---------------------------------------------------------------------------
# convolution operators
# ---------------------------------------------------------------------------

def embed_kernel(kernel, shape, anchor="start"):
    """Place a (possibly short) kernel into a full-size circular array.

    anchor="start" puts kernel tap j at offset j, matching row structure
    H[i, i+j] = h[j]; anchor="center" wraps the kernel so its central tap
    sits at offset 0 (symmetric blurs).
    """
    kernel = np.asarray(kernel, dtype=float)
    shape = _as_shape(shape)
    if kernel.ndim != len(shape):
        raise DimensionMismatchError("kernel dimensionality must match signal shape")
    if any(ks > s for ks, s in zip(kernel.shape, shape)):
        raise DimensionMismatchError("kernel longer than signal")
    full = np.zeros(shape)
    full[tuple(slice(0, ks) for ks in kernel.shape)] = kernel
    if anchor == "center":
        full = np.roll(full, [-(ks // 2) for ks in kernel.shape],
                       axis=tuple(range(len(shape))))
    elif anchor != "start":
        raise NullPriorError(f"unknown anchor {anchor!r}")
    return full


class CirculantConvOperator(LinearOperator):
    """Circular correlation y[i] = sum_j h[j] x[(i+j) mod n], i.e. H[i, i+j] = h[j].

    Circulant, hence diagonalized by the DFT; forward multiplies the spectrum
    by conj(K), the adjoint by K, where K is the FFT of the embedded kernel.
    """

    def __init__(self, shape, kernel, anchor="start"):
        self.shape_in = _as_shape(shape)
        self.kernel_full = embed_kernel(kernel, self.shape_in, anchor)
        self._spectrum = scipy.fft.fftn(self.kernel_full)
        self.m = self.m_eff = self.n

    def _apply(self, x):
        spec = scipy.fft.fftn(x.reshape(self.shape_in))
        return scipy.fft.ifftn(spec * np.conj(self._spectrum)).real.reshape(-1)

    def _apply_adjoint(self, u):
        spec = scipy.fft.fftn(u.reshape(self.shape_in))
        return scipy.fft.ifftn(spec * self._spectrum).real.reshape(-1)


class DecimatedConvOperator(LinearOperator):
    """Low-pass circular convolution followed by factor-d decimation on every axis."""

    def __init__(self, shape, kernel, factor, anchor="center"):
        shape = _as_shape(shape)
        factor = int(factor)
        if factor < 1 or any(s % factor for s in shape):
            raise DimensionMismatchError(f"decimation factor {factor} must divide every axis of {shape}")
        self._conv = CirculantConvOperator(shape, kernel, anchor)
        self.shape_in = shape
        self.factor = factor
        self.shape_out = tuple(s // factor for s in shape)
        self.m = self.m_eff = int(np.prod(self.shape_out))

    def _apply(self, x):
        blurred = self._conv._apply(x).reshape(self.shape_in)
        sl = tuple(slice(None, None, self.factor) for _ in self.shape_in)
        return blurred[sl].reshape(-1)

    def _apply_adjoint(self, u):
        up = np.zeros(self.shape_in)
        sl = tuple(slice(None, None, self.factor) for _ in self.shape_in)
        up[sl] = u.reshape(self.shape_out)
        return self._conv._apply_adjoint(up.reshape(-1))


# ---------------------------------------------------------------------------
# parallel-beam Radon subset
# ---------------------------------------------------------------------------

class RadonOperator(LinearOperator):
    """Discrete parallel-beam Radon transform at a fixed angle set.

    Line integrals are taken by bilinear interpolation at unit steps along
    each ray; the detector count equals the image side.  Angle 0 integrates
    along image rows, so each detector reads one column sum.
    """

    def __init__(self, side, angles_deg):
        side = int(side)
        angles = [float(a) for a in angles_deg]
        if len(angles) == 0:
            raise DimensionMismatchError("need at least one angle")
        if len(set(angles)) != len(angles):
            raise DimensionMismatchError("angles must be distinct")
        self.side = side
        self.angles_deg = tuple(angles)
        self.shape_in = (side, side)
        self.m = self.m_eff = side * len(angles)
        self._tables = [self._build_table(a) for a in angles]

    def _build_table(self, angle_deg):
        # sample points p = center + r*(cos,sin) + tau*(-sin,cos) in (x, y)
        side = self.side
        c = (side - 1) / 2.0
        th = np.deg2rad(angle_deg)
        r = np.arange(side) - c          # detector offsets
        tau = np.arange(side) - c        # steps along the ray
        px = c + r[:, None] * np.cos(th) - tau[None, :] * np.sin(th)
        py = c + r[:, None] * np.sin(th) + tau[None, :] * np.cos(th)
        x0 = np.floor(px).astype(int)
        y0 = np.floor(py).astype(int)
        fx = px - x0
        fy = py - y0
        idx, wts, dets = [], [], []
        det_grid = np.broadcast_to(np.arange(side)[:, None], px.shape)
        for dx, dy, w in ((0, 0, (1 - fx) * (1 - fy)), (1, 0, fx * (1 - fy)),
                          (0, 1, (1 - fx) * fy), (1, 1, fx * fy)):
            xs, ys = x0 + dx, y0 + dy
            ok = (xs >= 0) & (xs < side) & (ys >= 0) & (ys < side) & (w > 0)
            idx.append((ys[ok] * side + xs[ok]))
            wts.append(w[ok])
            dets.append(det_grid[ok])
        return (np.concatenate(idx), np.concatenate(wts), np.concatenate(dets))

    def _apply(self, x):
        out = np.zeros(self.m_eff)
        for a, (idx, wts, dets) in enumerate(self._tables):
            acc = np.zeros(self.side)
            np.add.at(acc, dets, wts * x[idx])
            out[a * self.side:(a + 1) * self.side] = acc
        return out

    def _apply_adjoint(self, u):
        out = np.zeros(self.n)
        for a, (idx, wts, dets) in enumerate(self._tables):
            ua = u[a * self.side:(a + 1) * self.side]
            np.add.at(out, idx, wts * ua[dets])
        return out


# ---------------------------------------------------------------------------
# kernels, masks, factory
# ---------------------------------------------------------------------------

def gaussian_kernel(sigma, radius=None, ndim=1):
    """Normalized Gaussian kernel (sum 1), truncated at `radius` taps per side."""
    if radius is None:
        radius = max(1, int(np.ceil(3.0 * sigma)))
    t = np.arange(-radius, radius + 1)
    g = np.exp(-0.5 * (t / float(sigma)) ** 2)
    g /= g.sum()
    if ndim == 1:
        return g
    if ndim == 2:
        return np.outer(g, g)
    raise NullPriorError("ndim must be 1 or 2")


def bilinear_kernel(factor, ndim=1):
    """Triangular (bilinear) low-pass kernel for factor-d decimation, sum 1."""
    factor = int(factor)
    t = np.arange(-factor + 1, factor)
    g = (factor - np.abs(t)).astype(float)
    g /= g.sum()
    if ndim == 1:
        return g
    return np.outer(g, g)


def _freq_distance(flat_index, shape, wrapped):
    idx = np.unravel_index(flat_index, shape)
    if wrapped:  # DFT frequencies alias around the Nyquist rate
        return np.sqrt(sum(min(k, s - k) ** 2 for k, s in zip(idx, shape)))
    return np.sqrt(sum(k ** 2 for k in idx))


def lowpass_mask(shape, count, transform="dct"):
    """Indices of the `count` lowest frequencies (DCT) or representatives (DFT)."""
    shape = _as_shape(shape)
    if transform == "dct":
        pool = range(int(np.prod(shape)))
        order = sorted(pool, key=lambda k: (_freq_distance(k, shape, False), k))
        return order[:count]
    reps = all_representatives(shape)
    order = sorted(reps, key=lambda k: (_freq_distance(k, shape, True), k))
    return order[:count]


def random_mask(shape, count, seed, transform="dct", include_dc=True):
    """Random frequency subset; the DC term is kept by default so means are observed."""
    shape = _as_shape(shape)
    pool = (list(range(int(np.prod(shape)))) if transform == "dct"
            else all_representatives(shape))
    rng = np.random.default_rng(seed)
    chosen = list(rng.choice(len(pool), size=count, replace=False))
    picked = sorted(pool[i] for i in chosen)
    if include_dc and 0 not in picked:
        picked = [0] + picked[:-1]
    return sorted(set(picked))


def make_operator(problem, params, seed=0):
    """Build the sensing operator for one of the five inverse problems.

    problem: "cs" | "mri" | "blur" | "sr" | "ct".  params is a dict; see each
    branch for the accepted keys.  Construction is reproducible per seed.
    """
    params = dict(params)
    scale = float(params.pop("scale", 1.0))

    if problem == "cs":
        n = int(params.pop("n"))
        m = int(params.pop("m"))
        dist = params.pop("dist", "gaussian")
        normalize = bool(params.pop("normalize", False))
        _reject_extra(params, "cs")
        if m > n:
            raise DimensionMismatchError(f"m={m} exceeds n={n}")
        rng = np.random.default_rng(seed)
        if dist == "binary":
            mat = rng.integers(0, 2, size=(m, n)).astype(float)
        elif dist == "gaussian":
            mat = rng.standard_normal((m, n))
        else:
            raise NullPriorError(f"unknown cs dist {dist!r}")
        if normalize:
            mat /= np.sqrt(n)
        op = DenseOperator(scale * mat)

    elif problem == "mri":
        shape = params.pop("shape")
        transform = params.pop("transform", "dct")
        mask = params.pop("mask")
        _reject_extra(params, "mri")
        if isinstance(mask, dict):
            mask = dict(mask)
            kind = mask.pop("kind")
            count = int(mask.pop("count"))
            mseed = mask.pop("seed", seed)
            _reject_extra(mask, "mri mask")
            if kind == "lowpass":
                kept = lowpass_mask(shape, count, transform)
            elif kind == "random":
                kept = random_mask(shape, count, mseed, transform)
            else:
                raise NullPriorError(f"unknown mask kind {kind!r}")
        else:
            kept = list(mask)
        op = MaskedFrequencyOperator(shape, kept, transform)
        op = _maybe_scale(op, scale)

    elif problem == "blur":
        shape = params.pop("shape")
        ndim = 1 if np.isscalar(shape) else len(shape)
        kernel = _kernel_from_params(params.pop("kernel"), ndim, shape)
        anchor = params.pop("anchor", "center")
        _reject_extra(params, "blur")
        op = CirculantConvOperator(shape, kernel, anchor)
        op = _maybe_scale(op, scale)

    elif problem == "sr":
        shape = params.pop("shape")
        factor = int(params.pop("factor"))
        ndim = 1 if np.isscalar(shape) else len(shape)
        kernel_spec = params.pop("kernel", {"kind": "bilinear"})
        anchor = params.pop("anchor", "center")
        _reject_extra(params, "sr")
        if isinstance(kernel_spec, dict) and kernel_spec.get("kind") == "bilinear":
            kernel = bilinear_kernel(factor, ndim)
        else:
            kernel = _kernel_from_params(kernel_spec, ndim, shape)
        op = DecimatedConvOperator(shape, kernel, factor, anchor)
        op = _maybe_scale(op, scale)

    elif problem == "ct":
        side = int(params.pop("side"))
        angles = params.pop("angles")
        _reject_extra(params, "ct")
        op = RadonOperator(side, angles)
        op = _maybe_scale(op, scale)

    else:
        raise NullPriorError(f"unknown problem {problem!r}")
    return op


def _kernel_from_params(spec, ndim, shape):
    if isinstance(spec, dict):
        spec = dict(spec)
        kind = spec.pop("kind")
        if kind == "gaussian":
            sigma = float(spec.pop("sigma"))
            radius = spec.pop("radius", None)
            _reject_extra(spec, "kernel")
            return gaussian_kernel(sigma, radius, ndim)
        if kind == "bilinear":
            factor = int(spec.pop("factor"))
            _reject_extra(spec, "kernel")
            return bilinear_kernel(factor, ndim)
        raise NullPriorError(f"unknown kernel kind {kind!r}")
    return np.asarray(spec, dtype=float)


class ScaledOperator(LinearOperator):
    """Wrap an operator with a positive scalar factor (used by theory configs)."""

    def __init__(self, base, scale):
        self.base = base
        self.scale = float(scale)
        self.shape_in = base.shape_in
        self.m = base.m
        self.m_eff = base.m_eff

    def _apply(self, x):
        return self.scale * self.base._apply(x)

    def _apply_adjoint(self, u):
        return self.scale * self.base._apply_adjoint(u)


def _maybe_scale(op, scale):
    return op if scale == 1.0 else ScaledOperator(op, scale)


def _reject_extra(params, where):
    if params:
        raise NullPriorError(f"unknown {where} parameter(s): {sorted(params)}")


def dot_test(op, trials=5, seed=0):
    """Max relative adjoint residual |<Hx,u> - <x,H'u>| / (|Hx||u| + |x||H'u|) over random probes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(op.n)
        u = rng.standard_normal(op.m_eff)
        hx = op.forward(x)
        htu = op.adjoint(u)
        lhs = float(hx @ u)
        rhs = float(x @ htu)
        denom = np.linalg.norm(hx) * np.linalg.norm(u) + np.linalg.norm(x) * np.linalg.norm(htu)
        if denom == 0.0:
            continue
        worst = max(worst, abs(lhs - rhs) / denom)
    return worst
