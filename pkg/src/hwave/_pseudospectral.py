"""Internal pseudo-spectral discretization for the traveling-wave solver
and the linearized operator around its solutions.

Coefficients live on half-offset frequency bins sigma_m = (m + 1/2) dsig,
m = 0..M-1, dsig = 2 pi / L_s, for every radial band k = 0..kmax and both
frequency signs.  Half-offset bins avoid a zero-frequency bin entirely, so
the plain rectangle sum in sigma is second-order accurate and the discrete
Euler-Lagrange equation is weight-consistent at every node.

The synthesis map S (coefficients -> samples on the (q, s) grid) is linear;
its Euclidean adjoint is implemented exactly, which makes the discrete
gradient of the quartic term exact and the discrete linearized operator
symmetric.  Cubic products are alias-free as long as 3*sigma_max stays
below the s-grid Nyquist frequency, which the constructor checks.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import AliasError, DomainError
from .spectral import BandField, SigmaProfile, _graded_gl, radial_band

_SQ2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SolverGrid:
    kmax: int = 7
    ls: float = 60.0
    ns: int = 2048
    sigma_max: float = 25.0
    q_edges: tuple = (0.0, 0.02, 0.08, 0.2, 0.5, 1.2, 2.8, 6.0, 12.0, 24.0, 50.0)
    q_order: int = 14

    def refined(self):
        """One uniform refinement level (for convergence studies)."""
        return SolverGrid(
            kmax=self.kmax + 2,
            ls=self.ls,
            ns=2 * self.ns,
            sigma_max=self.sigma_max * 1.5,
            q_edges=self.q_edges,
            q_order=self.q_order + 6,
        )


class Workspace:
    """Precomputed tensors for one SolverGrid."""

    def __init__(self, grid):
        self.grid = grid
        self.dsig = 2.0 * math.pi / grid.ls
        self.M = int(round(grid.sigma_max / self.dsig))
        self.sig = (np.arange(self.M) + 0.5) * self.dsig
        if 3.0 * self.sig[-1] > math.pi * grid.ns / grid.ls:
            raise AliasError("cubic products would alias: enlarge ns or shrink sigma_max")
        self.q, self.wq = _graded_gl(np.asarray(grid.q_edges), grid.q_order)
        self.s = -grid.ls / 2.0 + grid.ls / grid.ns * np.arange(grid.ns)
        self.ds = grid.ls / grid.ns
        self.nb = grid.kmax + 1
        # R[k, i, m] radial band functions on the q nodes
        self.R = np.empty((self.nb, self.q.size, self.M))
        for k in range(self.nb):
            self.R[k] = radial_band(k, self.sig[None, :], self.q[:, None])
        self.alt = (-1.0) ** np.arange(self.M)
        self.half_phase = np.exp(1j * self.s * (self.dsig / 2.0))
        # multiplier (2k+1) -/+ beta is formed on demand; store band labels
        self.kvec = np.arange(self.nb)
        self.grid_weight = math.pi * self.ds * self.wq  # L^2(H^1) measure per q row

    # -- coefficient containers -------------------------------------------
    def zeros(self):
        return np.zeros((2, self.nb, self.M), dtype=np.complex128)

    def from_bandfield(self, u):
        F = self.zeros()
        for k, sign, prof in u.bands:
            if k >= self.nb:
                raise DomainError("band %d exceeds the workspace truncation" % k)
            F[0 if sign > 0 else 1, k] = prof.eval(self.sig)
        return F

    def to_bandfield(self, F, drop_tol=0.0):
        bands = []
        for idx, sign in ((0, 1), (1, -1)):
            for k in range(self.nb):
                vals = F[idx, k]
                if drop_tol and np.max(np.abs(vals)) <= drop_tol:
                    continue
                bands.append((k, sign, SigmaProfile(self.sig, vals)))
        return BandField(bands)

    # -- synthesis and its exact adjoint ----------------------------------
    def synth(self, F):
        """u(q_i, s_j) = (dsig/sqrt(2 pi)) sum over bins of F R e^{+-i s sigma}."""
        ns = self.grid.ns
        pad = np.zeros((self.q.size, ns), dtype=np.complex128)
        np.einsum("km,kim->im", F[0] * self.alt, self.R, out=pad[:, : self.M])
        bp = np.fft.ifft(pad, axis=1) * ns
        pad[:, : self.M] = np.einsum("km,kim->im", F[1] * self.alt, self.R)
        pad[:, self.M :] = 0.0
        bm = np.fft.fft(pad, axis=1)
        return (self.dsig / _SQ2PI) * (self.half_phase * bp + np.conj(self.half_phase) * bm)

    def synth_adjoint(self, w):
        """Exact Euclidean adjoint of synth."""
        ns = self.grid.ns
        yp = np.fft.fft(w * np.conj(self.half_phase), axis=1)[:, : self.M]
        ym = np.fft.ifft(w * self.half_phase, axis=1)[:, : self.M] * ns
        out = np.empty((2, self.nb, self.M), dtype=np.complex128)
        out[0] = np.einsum("kim,im->km", self.R, yp) * self.alt
        out[1] = np.einsum("kim,im->km", self.R, ym) * self.alt
        return out * (self.dsig / _SQ2PI)

    # -- discrete functionals ----------------------------------------------
    def multiplier(self, beta):
        """((2k+1) - sign*beta) per (sign, band), shape (2, nb, 1)."""
        m = np.empty((2, self.nb, 1))
        m[0, :, 0] = 2 * self.kvec + 1 - beta
        m[1, :, 0] = 2 * self.kvec + 1 + beta
        return m

    def quad_form(self, F, beta):
        return float(np.sum(self.multiplier(beta) / 2.0 * np.abs(F) ** 2) * self.dsig)

    def h1_sq(self, F):
        return self.quad_form(F, 0.0)

    def l4_quartic(self, F, u=None):
        u = self.synth(F) if u is None else u
        return float(np.einsum("i,ij->", self.grid_weight, np.abs(u) ** 4).real)

    def cubic_density(self, w):
        """Band densities f_N/(2 sigma) of a pointwise field w on the grid
        (band coefficient = 2 sigma pi int w-hat R dq; density divides 2 sigma)."""
        return self.synth_adjoint(self.grid_weight[:, None] * w) / self.dsig

    def el_residual(self, F, beta, u=None):
        """H = multiplier/(2(1-beta)) F - N(F); zero at a solution of the
        normalized traveling-wave equation."""
        u = self.synth(F) if u is None else u
        N = self.cubic_density(np.abs(u) ** 2 * u)
        return self.multiplier(beta) / (2.0 * (1.0 - beta)) * F - N

    def hminus1_sq_density(self, H):
        """||residual||^2 in the dual norm from densities H = f/(2 sigma)."""
        w = 2.0 / (2.0 * self.kvec + 1.0)
        return float(np.einsum("k,skm->", w, np.abs(H) ** 2) * self.dsig)

    def h1_inner(self, F, G):
        return float(np.sum(self.multiplier(0.0) / 2.0 * (F * np.conj(G)).real) * self.dsig)

    # -- symmetry action ----------------------------------------------------
    def apply_symmetry_coef(self, F, s0=0.0, theta=0.0, alpha=1.0):
        """T: f(sigma) -> e^{i theta} e^{i s0 sign sigma} alpha^{-1} f(sigma/alpha^2)."""
        from .kernels import cubic_interp

        target = self.sig / alpha ** 2
        out = self.zeros()
        for idx, sign in ((0, 1), (1, -1)):
            ph = np.exp(1j * (theta + sign * s0 * self.sig)) / alpha
            for k in range(self.nb):
                out[idx, k] = ph * cubic_interp(self.sig, F[idx, k], target)
        return out

    def d_salpha_generators(self, F):
        """Tangent directions of the symmetry action at the identity:
        (d/ds0, d/dtheta, d/dalpha) T F.  The dilation tangent is the
        analytic -(1 + 2 sigma d/dsigma) F with a central-difference
        sigma-derivative on the uniform bins."""
        g_s = self.zeros()
        g_s[0] = 1j * self.sig * F[0]
        g_s[1] = -1j * self.sig * F[1]
        g_th = 1j * F
        dF = np.gradient(F, self.dsig, axis=2)
        g_al = -F - 2.0 * self.sig[None, None, :] * dF
        return g_s, g_th, g_al


def pairing_rows(ws):
    """Coefficient arrays of the three constraint directions (the limiting
    state's s-derivative, phase and scaling tangents) on the workspace bins."""
    fq = 2.0 * math.pi * np.exp(-ws.sig)
    dirs = []
    for vals in (1j * ws.sig * fq, 1j * fq, (1.0 - 2.0 * ws.sig) * fq):
        D = ws.zeros()
        D[0, 0] = vals
        dirs.append(D)
    return dirs


def pack(F):
    return np.concatenate([F.real.ravel(), F.imag.ravel()])


def unpack(ws, x):
    n = x.size // 2
    shape = (2, ws.nb, ws.M)
    return x[:n].reshape(shape) + 1j * x[n:].reshape(shape)


class AugmentedOperator:
    """Real-linear least-squares operator [D^(1/2) L_beta ; pairing rows].

    L_beta h = multiplier/(2(1-beta)) h - (2|Q|^2 h + Q^2 conj(h))-density is
    real-symmetric in the packed Euclidean coordinates because the synthesis
    adjoint is exact; D^(1/2) carries the dual-norm weights, so singular
    values measure H^1-coefficients -> H^{-1} x pairings.
    """

    def __init__(self, ws, u, beta):
        self.ws = ws
        self.u = u
        self.beta = beta
        self.mult = ws.multiplier(beta) / (2.0 * (1.0 - beta))
        w = 2.0 / (2.0 * ws.kvec + 1.0)
        self.dhalf = np.sqrt(w[None, :, None] * ws.dsig * np.ones((2, ws.nb, ws.M)))
        self.pair_dirs = pairing_rows(ws)
        self.pair_weight = ws.multiplier(0.0) / 2.0 * ws.dsig
        self.ncoef = 2 * 2 * ws.nb * ws.M
        self.shape = (self.ncoef + 3, self.ncoef)

    def apply_linearized(self, F):
        v = self.ws.synth(F)
        cubic = self.ws.cubic_density(
            2.0 * np.abs(self.u) ** 2 * v + self.u * self.u * np.conj(v)
        )
        return self.mult * F - cubic

    def pairings(self, F):
        return np.array(
            [float(np.sum((self.pair_weight * (F * np.conj(D))).real)) for D in self.pair_dirs]
        )

    def matvec(self, x):
        F = unpack(self.ws, x)
        return np.concatenate([pack(self.dhalf * self.apply_linearized(F)), self.pairings(F)])

    def rmatvec(self, y):
        ycoef = unpack(self.ws, y[: self.ncoef])
        out = self.apply_linearized(self.dhalf * ycoef)
        for lam, D in zip(y[self.ncoef :], self.pair_dirs):
            out = out + lam * self.pair_weight * D
        return pack(out)


def _residual_state(ws, F, beta):
    """Returns (u, H, rel_total, rel_perp).

    rel_perp removes the component of H along the dilation tangent before
    measuring: the discrete problem breaks dilation invariance only through
    box/truncation effects, which tilt an almost-flat valley of the discrete
    functional; the exact discrete stationary point is displaced far along
    that valley and is a discretization artifact.  Everything physical is
    measured by the deflected residual, and the full residual is reported.
    """
    u = ws.synth(F)
    H = ws.el_residual(F, beta, u)
    lin = ws.multiplier(beta) / (2.0 * (1.0 - beta)) * F
    scale = max(ws.hminus1_sq_density(lin), 1e-300)
    rel = math.sqrt(ws.hminus1_sq_density(H) / scale)
    Hp = _deflate_tangents(ws, F, H)
    rel_perp = math.sqrt(ws.hminus1_sq_density(Hp) / scale)
    return u, Hp, rel, rel_perp


def _deflate_tangents(ws, F, H):
    """Remove the components of H along the three symmetry tangents of F in
    the dual-weighted geometry (the almost-flat valley directions of the
    discrete problem)."""
    tangents = ws.d_salpha_generators(F)
    w = (2.0 / (2.0 * ws.kvec + 1.0))[None, :, None] * ws.dsig
    G = np.empty((3, 3), dtype=np.complex128)
    rhs = np.empty(3, dtype=np.complex128)
    for i, ti in enumerate(tangents):
        rhs[i] = np.sum(w * H * np.conj(ti))
        for j, tj in enumerate(tangents):
            G[i, j] = np.sum(w * tj * np.conj(ti))
    try:
        coef = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        return H
    out = H.copy()
    for c, t in zip(coef, tangents):
        out = out - c * t
    return out


def newton_direction(ws, F, beta, iter_lim=250):
    """Gauss-Newton correction for the normalized stationary equation at the
    current (already normalized) F, from the augmented system with the three
    pairing rows and inverse-multiplier column scaling."""
    from scipy.sparse.linalg import LinearOperator, lsqr

    u = ws.synth(F)
    H = ws.el_residual(F, beta, u)
    op = AugmentedOperator(ws, u, beta)
    col = 1.0 / op.mult

    def matvec(x):
        return op.matvec(pack(col * unpack(ws, x)))

    def rmatvec(y):
        return pack(col * unpack(ws, op.rmatvec(y)))

    rhs = np.concatenate([pack(op.dhalf * H), np.zeros(3)])
    lin_op = LinearOperator(op.shape, matvec=matvec, rmatvec=rmatvec)
    sol = lsqr(lin_op, rhs, atol=1e-13, btol=1e-13, iter_lim=iter_lim)
    return col * unpack(ws, sol[0])


def quotient_descent(ws, F, beta, tol, max_iter=6000, newton_every=60, slice_dirs=None):
    """Minimize the discrete quotient A^2/B by monotone (backtracked) BB
    steps in the fixed-point direction, with periodic Gauss-Newton jump
    candidates accepted only when they do not increase the quotient.  Stops
    when the normalized equation residual (all components, dual norm,
    relative to the linear term) falls below tol.

    At the exact discrete minimizer the rescaled stationary equation holds
    identically, so driving the quotient down drives the full residual down;
    the Newton jumps collapse the slow crawl along the almost-flat dilation
    valley of the discrete functional.

    ``slice_dirs`` (fixed coefficient arrays) restricts the iteration to the
    affine slice through the start that is H^1-orthogonal to them, and the
    stopping residual is measured with those components removed: used for
    parameter-derivative studies where nearby solves must share their
    position along the almost-flat symmetry directions.
    """
    mult = ws.multiplier(beta)
    if slice_dirs:
        Gs = np.array([[ws.h1_inner(a, b) for b in slice_dirs] for a in slice_dirs])

    def deflate(V):
        if not slice_dirs:
            return V
        rhs = np.array([ws.h1_inner(V, t) for t in slice_dirs])
        coef = np.linalg.solve(Gs, rhs)
        out = V.copy()
        for c, t in zip(coef, slice_dirs):
            out = out - c * t
        return out

    def parts(F):
        u = ws.synth(F)
        return ws.quad_form(F, beta), ws.l4_quartic(F, u), u

    def picard_gap(F, a, b, u):
        N = ws.cubic_density(np.abs(u) ** 2 * u)
        return deflate(F - (a / b) * 2.0 * N / mult)

    def residual_total(F, a, b):
        c = math.sqrt(a / ((1.0 - beta) * b))
        u = ws.synth(c * F)
        H = ws.el_residual(c * F, beta, u)
        lin = ws.multiplier(beta) / (2.0 * (1.0 - beta)) * (c * F)
        scale = max(ws.hminus1_sq_density(lin), 1e-300)
        if slice_dirs:
            H = _deflate_tangents(ws, c * F, H)
        return math.sqrt(ws.hminus1_sq_density(H) / scale)

    a, b, u = parts(F)
    J = a * a / b
    grad = picard_gap(F, a, b, u)
    eta = 1.0
    prev = None
    res = math.inf
    for it in range(1, max_iter + 1):
        if it % newton_every == 0:
            c = math.sqrt(a / ((1.0 - beta) * b))
            delta = deflate(newton_direction(ws, c * F, beta) / c)
            t = 1.0
            while t > 1e-3:
                F_try = F - t * delta
                a_t, b_t, u_t = parts(F_try)
                if a_t * a_t / b_t <= J * (1.0 + 1e-12):
                    F, a, b, u, J = F_try, a_t, b_t, u_t, a_t * a_t / b_t
                    grad = picard_gap(F, a, b, u)
                    prev = None
                    break
                t *= 0.5
        if prev is not None:
            df = F - prev[0]
            dg = grad - prev[1]
            den = ws.h1_inner(df, dg)
            if den > 0:
                eta = min(max(ws.h1_inner(df, df) / den, 1e-4), 1e3)
        accepted = False
        for _ in range(40):
            F_new = F - eta * grad
            a_n, b_n, u_n = parts(F_new)
            J_new = a_n * a_n / b_n
            if J_new <= J * (1.0 + 1e-13):
                accepted = True
                break
            eta *= 0.5
        if accepted:
            prev = (F, grad)
            F, a, b, u, J = F_new, a_n, b_n, u_n, J_new
            grad = picard_gap(F, a, b, u)
            eta_reset = False
        res = residual_total(F, a, b)
        if res <= tol:
            return math.sqrt(a / ((1.0 - beta) * b)) * F, res, it
        if not accepted:
            eta = 1.0
    return math.sqrt(a / ((1.0 - beta) * b)) * F, res, max_iter
