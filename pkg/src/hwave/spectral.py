"""Band decomposition of radial fields, Sobolev norms, the speed-twisted
quadratic form, real-space synthesis and L^4 norms.

A radial field is stored as a collection of bands (k, sign, profile): the
s-Fourier transform of the field restricted to frequency sign ``sign`` and
radial oscillator band 2k is profile(|sigma|) times the normalized radial
eigenfunction R_k(q, |sigma|) = pi^{-1/2} L_k(2|sigma| q) exp(-|sigma| q),
q = x^2 + y^2.  Profiles are functions of |sigma| > 0.
"""

import json
import math
import warnings

import numpy as np

from . import kernels
from .errors import AliasError, DomainError, NonConvergence, TruncationWarning
from .numerics import QuadratureSpec, integrate_halfline

__all__ = [
    "SigmaProfile",
    "BandField",
    "GridField",
    "default_sigma_grid",
    "make_grid",
    "hermite_function",
    "radial_band",
    "hk_norm",
    "quad_form_beta",
    "synthesize",
    "analyze",
    "l4_norm_v0",
    "l4_norm_grid",
    "project_v0plus",
    "profile_to_json",
    "profile_from_json",
]

_GLX32, _GLW32 = kernels.gauss_legendre(32)


def default_sigma_grid(n=512, lo=1e-4, hi=40.0):
    """Log-spaced sigma grid used throughout for sampled profiles."""
    return np.geomspace(lo, hi, n)


class SigmaProfile:
    """Complex function f on sigma > 0, sampled on an increasing grid.

    Optional exact evaluators:
      * ``closed_form=(K, alpha)`` marks f(sigma) = K*exp(-alpha*sigma);
      * ``evaluator`` is an arbitrary vectorized callable.
    When neither is present, evaluation between nodes is cubic interpolation
    (zero beyond the last node).
    """

    __slots__ = ("sigma", "values", "closed_form", "evaluator")

    def __init__(self, sigma, values, closed_form=None, evaluator=None):
        sigma = np.asarray(sigma, dtype=np.float64)
        values = np.asarray(values, dtype=np.complex128)
        if sigma.ndim != 1 or sigma.size < 2:
            raise DomainError("sigma grid needs at least two nodes")
        if sigma[0] <= 0 or np.any(np.diff(sigma) <= 0):
            raise DomainError("sigma grid must be strictly increasing and positive")
        if values.shape != sigma.shape:
            raise DomainError("values shape does not match the grid")
        if not np.all(np.isfinite(values)):
            raise DomainError("profile values must be finite")
        if closed_form is not None:
            K, alpha = closed_form
            if not alpha > 0:
                raise DomainError("closed-form decay rate must be positive")
            ref = K * np.exp(-alpha * sigma)
            scale = max(np.max(np.abs(ref)), 1e-300)
            if np.max(np.abs(ref - values)) > 1e-12 * scale:
                raise DomainError("samples disagree with the declared closed form")
        self.sigma = sigma
        self.values = values
        self.closed_form = closed_form
        self.evaluator = evaluator

    @classmethod
    def from_exponential(cls, K, alpha, sigma=None):
        sigma = default_sigma_grid() if sigma is None else np.asarray(sigma, float)
        vals = K * np.exp(-alpha * sigma)
        return cls(sigma, vals, closed_form=(complex(K), float(alpha)))

    @classmethod
    def from_callable(cls, fn, sigma=None):
        sigma = default_sigma_grid() if sigma is None else np.asarray(sigma, float)
        return cls(sigma, np.asarray(fn(sigma), dtype=np.complex128), evaluator=fn)

    @classmethod
    def zero(cls, sigma=None):
        sigma = default_sigma_grid() if sigma is None else np.asarray(sigma, float)
        return cls(sigma, np.zeros_like(sigma, dtype=np.complex128))

    def eval(self, s):
        s = np.asarray(s, dtype=np.float64)
        if self.closed_form is not None:
            K, alpha = self.closed_form
            return K * np.exp(-alpha * s)
        if self.evaluator is not None:
            return np.asarray(self.evaluator(s), dtype=np.complex128)
        return kernels.cubic_interp(self.sigma, self.values, s)

    def exact(self):
        """True when evaluation does not go through interpolation."""
        return self.closed_form is not None or self.evaluator is not None

    def scaled(self, c):
        cf = None
        if self.closed_form is not None:
            cf = (c * self.closed_form[0], self.closed_form[1])
        ev = None
        if self.evaluator is not None:
            base = self.evaluator
            ev = lambda s: c * np.asarray(base(s))
        return SigmaProfile(self.sigma, c * self.values, closed_form=cf, evaluator=ev)

    def plus(self, other):
        if not np.array_equal(self.sigma, other.sigma):
            raise DomainError("profiles live on different grids")
        ev = None
        if self.exact() and other.exact():
            a, b = self.eval, other.eval
            ev = lambda s: a(s) + b(s)
        return SigmaProfile(self.sigma, self.values + other.values, evaluator=ev)


class BandField:
    """Truncated radial field: bands (k >= 0, sign in {+1,-1}, profile)."""

    __slots__ = ("bands",)

    def __init__(self, bands):
        seen = set()
        clean = []
        for k, sign, prof in bands:
            k = int(k)
            sign = int(sign)
            if k < 0 or sign not in (1, -1):
                raise DomainError("band labels are k >= 0 and sign in {+1, -1}")
            if (k, sign) in seen:
                raise DomainError("duplicate band (%d, %+d)" % (k, sign))
            seen.add((k, sign))
            clean.append((k, sign, prof))
        self.bands = tuple(clean)

    @classmethod
    def from_v0(cls, profile):
        return cls([(0, 1, profile)])

    def get(self, k, sign):
        for kk, ss, prof in self.bands:
            if kk == k and ss == sign:
                return prof
        return None

    def map_profiles(self, fn):
        return BandField([(k, s, fn(k, s, p)) for k, s, p in self.bands])


class GridField:
    """Real-space samples u(q_i, s_j) of a radial field.

    ``r2_nodes`` are the values of q = x^2+y^2 (with quadrature weights when
    the grid was produced by :func:`make_grid`), ``s_nodes`` a uniform grid
    on [-L/2, L/2).
    """

    __slots__ = ("r2_nodes", "r2_weights", "s_nodes", "samples")

    def __init__(self, r2_nodes, s_nodes, samples, r2_weights=None):
        r2_nodes = np.asarray(r2_nodes, dtype=np.float64)
        s_nodes = np.asarray(s_nodes, dtype=np.float64)
        samples = np.asarray(samples, dtype=np.complex128)
        if samples.shape != (r2_nodes.size, s_nodes.size):
            raise DomainError("sample matrix must be (n_q, n_s)")
        if np.any(r2_nodes <= 0):
            raise DomainError("r2 nodes must be positive")
        self.r2_nodes = r2_nodes
        self.r2_weights = None if r2_weights is None else np.asarray(r2_weights, float)
        self.s_nodes = s_nodes
        self.samples = samples

    @property
    def ds(self):
        return self.s_nodes[1] - self.s_nodes[0]

    def template(self):
        return GridField(
            self.r2_nodes,
            self.s_nodes,
            np.zeros((self.r2_nodes.size, self.s_nodes.size), complex),
            r2_weights=self.r2_weights,
        )


_Q_PANEL_EDGES = (0.0, 0.05, 0.15, 0.4, 1.0, 2.5, 6.0, 12.0, 25.0, 60.0)


def _graded_gl(edges, order=16):
    glx, glw = kernels.gauss_legendre(order)
    edges = np.asarray(edges, float)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * glx[None, :]).ravel()
    weights = (half[:, None] * glw[None, :]).ravel()
    return nodes, weights


def make_grid(ls=200.0, ns=4096, q_edges=_Q_PANEL_EDGES, q_order=16):
    """Empty grid template: graded Gauss-Legendre q-nodes, uniform s-box."""
    q, wq = _graded_gl(q_edges, q_order)
    s = -ls / 2.0 + ls / ns * np.arange(ns)
    return GridField(q, s, np.zeros((q.size, s.size), complex), r2_weights=wq)


def hermite_function(m, x):
    """L^2(R)-normalized Hermite function h_m(x)."""
    if m < 0:
        raise DomainError("Hermite index must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if m == 0:
        return h_prev
    h = math.sqrt(2.0) * x * h_prev
    for n in range(2, m + 1):
        h, h_prev = math.sqrt(2.0 / n) * x * h - math.sqrt((n - 1.0) / n) * h_prev, h
    return h


def _laguerre(k, t):
    l_prev = np.ones_like(t)
    if k == 0:
        return l_prev
    l = 1.0 - t
    for n in range(1, k):
        l, l_prev = ((2.0 * n + 1.0 - t) * l - n * l_prev) / (n + 1.0), l
    return l


def radial_band(k, sigma, r2):
    """Radial oscillator eigenfunction of band 2k at frequency sigma.

    R_k(q, sigma) = pi^{-1/2} L_k(2 sigma q) exp(-sigma q); its L^2(R^2)
    norm squared is 1/(2 sigma), matching the k = 0 normalization.
    """
    if k < 0:
        raise DomainError("band index must be >= 0")
    t = 2.0 * np.asarray(sigma, float) * np.asarray(r2, float)
    return np.pi ** -0.5 * _laguerre(k, t) * np.exp(-0.5 * t)


def _simpson_nonuniform(x, y):
    """Composite Simpson on an arbitrary increasing grid (complex ok)."""
    n = x.size
    if n < 3:
        return np.trapezoid(y, x)
    m = (n - 1) // 2 * 2
    x0, x1, x2 = x[0:m - 1:2], x[1:m:2], x[2:m + 1:2]
    y0, y1, y2 = y[0:m - 1:2], y[1:m:2], y[2:m + 1:2]
    h0 = x1 - x0
    h1 = x2 - x1
    total = np.sum(
        (h0 + h1) / 6.0 * ((2.0 - h1 / h0) * y0 + (h0 + h1) ** 2 / (h0 * h1) * y1 + (2.0 - h0 / h1) * y2)
    )
    if (n - 1) % 2 == 1:
        h0 = x[-2] - x[-3]
        h1 = x[-1] - x[-2]
        total += y[-1] * (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1))
        total += y[-2] * (h1 * h1 + 3.0 * h1 * h0) / (6.0 * h0)
        total -= y[-3] * h1 ** 3 / (6.0 * h0 * (h0 + h1))
    return total


def sigma_integral(grid, integrand, power, strip=True):
    """int_0^inf integrand(sigma) sigma^power d sigma from samples.

    The [0, grid[0]] strip is added by fitting A*sigma^p to the first nodes;
    NonConvergence is raised when the fitted local power makes the integral
    divergent at 0.
    """
    g = np.asarray(integrand)
    vals = g * grid ** float(power)
    total = _simpson_nonuniform(grid, vals)
    if not strip:
        return total
    a0, a1 = np.abs(vals[0]), np.abs(vals[1])
    top = max(np.max(np.abs(vals)), 1e-300)
    strip_scale = a0 * grid[0]
    if a0 <= 1e-14 * top or strip_scale <= 1e-12 * max(abs(total), 1e-300):
        return total
    p_hat = math.log(max(a1, 1e-300) / a0) / math.log(grid[1] / grid[0])
    if power >= 0.0:
        # integrand sigma^power * g with bounded g: never divergent at 0
        p_hat = min(max(p_hat, float(power)), 6.0)
    elif p_hat <= -1.0 + 1e-9:
        if strip_scale > 1e-6 * abs(total):
            raise NonConvergence("integral diverges at sigma -> 0 (local power %.3f)" % p_hat)
        return total
    total += vals[0] * grid[0] / (p_hat + 1.0)
    return total


def _profile_moment(profile, power):
    """int |f|^2 sigma^power d sigma, exact path when available."""
    if profile.exact():
        f = profile.eval
        return integrate_halfline(
            lambda s: np.abs(f(s)) ** 2 * s ** float(power), QuadratureSpec(1e-13, 1e-13, 10)
        ).real
    return sigma_integral(profile.sigma, np.abs(profile.values) ** 2, power).real


def _as_bands(u):
    if isinstance(u, SigmaProfile):
        return BandField.from_v0(u)
    return u


def hk_norm(u, k):
    """Homogeneous Sobolev norm of order k in {-1, 0, 1}.

    ||u||^2 = sum over bands of ((2k_band+1)|sigma|)^k |f|^2 d sigma/(2|sigma|).
    """
    if k not in (-1, 0, 1):
        raise DomainError("only k in {-1, 0, 1} is supported")
    total = 0.0
    for kb, _sign, prof in _as_bands(u).bands:
        total += (2 * kb + 1) ** k / 2.0 * _profile_moment(prof, k - 1)
    return math.sqrt(total)


def quad_form_beta(u, beta):
    """Quadratic form of -(Delta_H + beta D_s): sum of
    ((2k+1)|sigma| - beta*sign*|sigma|) |f|^2 d sigma / (2 |sigma|)."""
    if not -1.0 < beta < 1.0:
        raise DomainError("beta must lie in (-1, 1)")
    total = 0.0
    for kb, sign, prof in _as_bands(u).bands:
        total += (2 * kb + 1 - beta * sign) / 2.0 * _profile_moment(prof, 0)
    return total


def _q_blocks(q_nodes, sig_max, rel_tol):
    """Partition the q-range so each block shares one fine sigma grid.

    The sigma-integrand carries exp(-(1+q) sigma), so the Filon spacing must
    shrink like 1/(1+q); past q ~ 3 the usable sigma range shrinks at the
    same rate, keeping the per-block node count roughly constant.
    """
    target = (72.0 * rel_tol) ** 0.25  # (h (1+q))^4 / 72 ~ rel error
    order = np.argsort(q_nodes)
    blocks = []
    i = 0
    while i < order.size:
        q_lo = q_nodes[order[i]]
        q_hi_lim = max(2.0 * (1.0 + q_lo) - 1.0, q_lo + 1e-9)
        j = i
        while j < order.size and q_nodes[order[j]] <= q_hi_lim:
            j += 1
        idx = order[i:j]
        q_hi = q_nodes[idx[-1]]
        cut = sig_max if q_lo < 1.0 else min(sig_max, 45.0 / (1.0 + q_lo))
        h = target / (1.0 + q_hi)
        n = int(math.ceil(cut / h)) + 1
        n = max(n + 1 - n % 2, 33)  # odd, with a floor
        blocks.append((idx, np.linspace(0.0, cut, n)))
        i = j
    return blocks


def _block_sum(bands, qb, fine, s_nodes):
    h = fine[1] - fine[0]
    Wp = None
    acc = np.zeros((qb.size, s_nodes.size), dtype=np.complex128)
    for sign in (1, -1):
        g = None
        for kb, bsign, prof in bands:
            if bsign != sign:
                continue
            fvals = prof.eval(fine)
            fvals[fine > prof.sigma[-1]] = 0.0
            term = fvals[None, :] * radial_band(kb, fine[None, :], qb[:, None])
            g = term if g is None else g + term
        if g is None:
            continue
        if Wp is None:
            Wp = kernels.filon_weights(0.0, h, fine.size, s_nodes)
        acc += g @ (Wp.T if sign > 0 else np.conj(Wp.T))
    return acc


def synthesize(u, grid, rel_tol=1e-9):
    """Real-space samples of a band field on a grid template.

    Per q-block, the sigma-integral of e^{i s sigma} f(sigma) R_k(q, sigma)
    uses Filon-Simpson weights on a uniform fine grid; the absolute error is
    O(h^4 (1+q)^4) uniformly in s, and the blocks keep that product at
    rel_tol of the row scale.
    """
    u = _as_bands(u)
    if not u.bands:
        return grid.template()
    sig_max = max(prof.sigma[-1] for _k, _s, prof in u.bands)
    ns = grid.s_nodes.size
    ls = grid.ds * ns
    if sig_max > np.pi * ns / ls * (1.0 + 1e-12):
        raise AliasError(
            "sigma support %.3f exceeds the grid Nyquist frequency %.3f" % (sig_max, np.pi * ns / ls)
        )
    out = np.zeros((grid.r2_nodes.size, ns), dtype=np.complex128)
    for idx, fine in _q_blocks(grid.r2_nodes, sig_max, rel_tol):
        out[idx] = _block_sum(u.bands, grid.r2_nodes[idx], fine, grid.s_nodes)
    out /= math.sqrt(2.0 * math.pi)
    return GridField(grid.r2_nodes, grid.s_nodes, out, r2_weights=grid.r2_weights)


def analyze(g, kmax, sigma_max=None):
    """Band coefficients of a sampled radial field (inverse of synthesize
    for band-limited fields resolved by the box).

    Returns a BandField on the FFT frequency grid sigma_m = 2 pi m / L,
    m >= 1.  Requires q-quadrature weights on the grid.
    """
    if g.r2_weights is None:
        raise DomainError("analyze needs a grid built by make_grid (q weights)")
    ns = g.s_nodes.size
    ls = g.ds * ns
    dsig = 2.0 * math.pi / ls
    mmax = ns // 2 - 1
    if sigma_max is not None:
        mmax = min(mmax, int(sigma_max / dsig))
    spec = np.fft.fft(g.samples, axis=1)
    signs_m = (-1.0) ** np.arange(ns)
    spec = spec * (g.ds / math.sqrt(2.0 * math.pi)) * signs_m[None, :]
    sig = dsig * np.arange(1, mmax + 1)
    bands = []
    for kb in range(kmax + 1):
        R = radial_band(kb, sig[None, :], g.r2_nodes[:, None])
        base = 2.0 * sig * math.pi
        plus = base * np.einsum("q,qm,qm->m", g.r2_weights, R, spec[:, 1 : mmax + 1])
        minus = base * np.einsum("q,qm,qm->m", g.r2_weights, R, spec[:, ns - 1 : ns - mmax - 1 : -1])
        bands.append((kb, 1, SigmaProfile(sig, plus)))
        bands.append((kb, -1, SigmaProfile(sig, minus)))
    return BandField(bands)


def l4_norm_v0(profile, n_gl=32):
    """L^4 norm of the lowest-band field with profile f:
    ||u||_4^4 = (1/(2 pi^2)) int |(f*f)(sigma)|^2 d sigma/(2 sigma)."""
    grid = profile.sigma
    conv = kernels.self_convolution(grid, grid, profile.values, _GLX32, _GLW32)
    fourth = sigma_integral(grid, np.abs(conv) ** 2, -1.0).real / (4.0 * math.pi ** 2)
    return fourth ** 0.25


def l4_norm_grid(g, decay_tol=1e-6):
    """L^4 norm from real-space samples: (pi * sum wq ds |u|^4)^(1/4)."""
    if g.r2_weights is None:
        raise DomainError("l4_norm_grid needs q-quadrature weights")
    a = np.abs(g.samples)
    top = a.max()
    if top > 0:
        edge = max(a[:, 0].max(), a[:, -1].max(), a[-1, :].max())
        if edge > decay_tol * top:
            warnings.warn(
                "field has not decayed at the grid boundary (%.2e of max)" % (edge / top),
                TruncationWarning,
            )
    fourth = math.pi * g.ds * float(np.einsum("q,qs->", g.r2_weights, a ** 4))
    return fourth ** 0.25


def project_v0plus(u):
    """Split a band field into its (k, sign) = (0, +) part and the rest."""
    u = _as_bands(u)
    part = u.get(0, 1)
    rest = BandField([(k, s, p) for k, s, p in u.bands if not (k == 0 and s == 1)])
    if part is None:
        grids = [p.sigma for _k, _s, p in u.bands]
        part = SigmaProfile.zero(grids[0] if grids else None)
    return part, rest


def profile_to_json(profile):
    """Shared profile JSON: {"sigma", "re", "im", "meta"}."""
    meta = {}
    if profile.closed_form is not None:
        K, alpha = profile.closed_form
        meta = {"alpha": alpha, "K_re": K.real, "K_im": K.imag}
    return {
        "sigma": profile.sigma.tolist(),
        "re": profile.values.real.tolist(),
        "im": profile.values.imag.tolist(),
        "meta": meta,
    }


def profile_from_json(obj):
    sigma = np.asarray(obj["sigma"], dtype=np.float64)
    vals = np.asarray(obj["re"], dtype=np.float64) + 1j * np.asarray(obj["im"], dtype=np.float64)
    meta = obj.get("meta") or {}
    cf = None
    if "alpha" in meta and meta["alpha"] is not None:
        cf = (complex(meta.get("K_re", 0.0), meta.get("K_im", 0.0)), float(meta["alpha"]))
    return SigmaProfile(sigma, vals, closed_form=cf)


def dump_profile(profile, path):
    with open(path, "w") as fh:
        json.dump(profile_to_json(profile), fh)


def load_profile(path):
    with open(path) as fh:
        return profile_from_json(json.load(fh))
