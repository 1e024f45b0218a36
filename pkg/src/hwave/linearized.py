"""The linearized operator around the limiting ground state (on the lowest
band) and around the traveling waves; kernel and matrix structure; the
sphere reformulation; assembly of the coercivity constant and gap; Rayleigh
sampling; and the parameter-derivative linear system.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bergman import HoloFn, holo_from_v0, pw_correction_inner, projected_diag_inner, inner_uhp, plane_test_fn
from .errors import (
    CoercivityViolation,
    DegenerateSample,
    DomainError,
    OrthogonalityViolation,
    SingularSystem,
    TruncationWarning,
)
from .numerics import QuadratureSpec, integrate_uhp
from .spectral import SigmaProfile, default_sigma_grid
from ._pseudospectral import AugmentedOperator, pack, unpack, pairing_rows
from .variational import GroundStateResult, QBetaConfig, solve_qbeta

__all__ = [
    "CoercivityReport",
    "OrthoBasisV",
    "v0_profile_catalog",
    "apply_L",
    "matrix_on_V",
    "pairing_functionals",
    "quadratic_form_L",
    "sphere_eigencheck",
    "assemble_coercivity",
    "rayleigh_sample",
    "apply_Lbeta",
    "invertibility_margin",
    "solve_qdot",
    "fd_compare",
    "symmetry_jacobian",
]

_TWO_PI = 2.0 * math.pi
_COEFF = 1.0 / (math.pi * math.sqrt(2.0))  # lowest-band projection prefactor

# quadrature nodes shared by all lowest-band operator evaluations
_EDGES = np.array([0.0, 0.05, 0.15, 0.4, 1.0, 2.0, 4.0, 7.0, 11.0, 16.0, 22.0, 30.0, 40.0, 50.0, 60.0])
_GLX16, _GLW16 = kernels.gauss_legendre(16)
_GLX32, _GLW32 = kernels.gauss_legendre(32)


def _nodes_weights():
    mid = 0.5 * (_EDGES[1:] + _EDGES[:-1])
    half = 0.5 * (_EDGES[1:] - _EDGES[:-1])
    nodes = (mid[:, None] + half[:, None] * _GLX16[None, :]).ravel()
    weights = (half[:, None] * _GLW16[None, :]).ravel()
    return nodes, weights


_NODES, _WEIGHTS = _nodes_weights()


def _as_eval(h):
    if isinstance(h, SigmaProfile):
        return h.eval
    return h  # assume vectorized callable


def v0_profile_catalog():
    """Closed-form lowest-band profiles of the ground state and the three
    symmetry directions (plus the fourth real direction i d_s)."""
    g = default_sigma_grid()
    two_pi = _TWO_PI
    return {
        "Q": SigmaProfile.from_callable(lambda s: two_pi * np.exp(-s) + 0.0j, g),
        "iQ": SigmaProfile.from_callable(lambda s: 1j * two_pi * np.exp(-s), g),
        "dsQ": SigmaProfile.from_callable(lambda s: 1j * s * two_pi * np.exp(-s), g),
        "idsQ": SigmaProfile.from_callable(lambda s: -s * two_pi * np.exp(-s) + 0.0j, g),
        "scaling": SigmaProfile.from_callable(lambda s: (1.0 - 2.0 * s) * two_pi * np.exp(-s) + 0.0j, g),
        "iQ_minus_dsQ": SigmaProfile.from_callable(
            lambda s: (1j - 1j * s) * two_pi * np.exp(-s), g
        ),
    }


@dataclass(frozen=True)
class LFieldV0:
    """Result of applying the linearized operator on the lowest band:
    dual-density samples d(sigma) = f(sigma)/sigma on the shared nodes."""

    nodes: np.ndarray
    density: np.ndarray

    @property
    def values(self):
        return self.nodes * self.density

    def h_minus1_norm(self):
        return math.sqrt(0.5 * float(_WEIGHTS @ np.abs(self.density) ** 2))

    def pair_h1_field(self, h):
        """Duality pairing (this, h) for h given as profile/callable."""
        fh = _as_eval(h)(_NODES)
        return 0.5 * float(np.real(_WEIGHTS @ (self.density * np.conj(fh))))

    def h1_inner_as_field(self, h):
        """Treat the result as an H^1 field and take Re<., h>_{H^1}."""
        fh = _as_eval(h)(_NODES)
        return 0.5 * float(np.real(_WEIGHTS @ (self.values * np.conj(fh))))

    def profile(self):
        return SigmaProfile(_NODES, self.values)


def _conv_at(fa, fb, s_points, n_gl=32):
    """(fa * fb)(s) = int_0^s fa(s-t) fb(t) dt at arbitrary points (vectorized)."""
    s = np.asarray(s_points)
    half = 0.5 * s[..., None]
    t = half * (_GLX32 + 1.0)
    vals = fa(s[..., None] - t) * fb(t)
    return (vals @ _GLW32) * half[..., 0]


def _project_product_density(fa_vals_shift, fb_vals, shift_den):
    """Density of the lowest-band projection of a*conj(b):
    (1/(pi sqrt2)) int fa(y+m) conj(fb(m)) / (y+m) dm on the shared nodes."""
    integrand = fa_vals_shift * np.conj(fb_vals)[None, :] / shift_den
    return _COEFF * (integrand @ _WEIGHTS)


def apply_L(h):
    """Linearized operator at the canonical limiting ground state:
    L h = D_s h - 2 P(|Q|^2 h) - P(Q^2 conj(h)), on the lowest band.

    Everything reduces to one-dimensional sigma-integrals: products of
    lowest-band fields are sigma-convolutions and the projection of a
    holomorphic-antiholomorphic product is a half-line correlation.
    Returns dual densities on the module's shared quadrature nodes.
    """
    fh = _as_eval(h)
    fq = lambda s: _TWO_PI * np.exp(-s) + 0.0j
    # f_{Q^2}(s) = 2 sqrt(2) pi s e^{-s} (exact convolution of the exponential)
    fq2 = lambda s: 2.0 * math.sqrt(2.0) * math.pi * s * np.exp(-s) + 0.0j
    y = _NODES[:, None]
    m = _NODES[None, :]
    shift = y + m
    fqh_shift = _COEFF * _conv_at(fq, fh, shift)  # f_{Q h}(y+m), product prefactor included
    dens = fh(_NODES).astype(complex)
    dens -= 2.0 * _project_product_density(fqh_shift, fq(_NODES), shift)
    dens -= _project_product_density(fq2(shift), fh(_NODES), shift)
    return LFieldV0(_NODES, dens)


def _h1_norm_sq(h):
    fh = _as_eval(h)(_NODES)
    return 0.5 * float(_WEIGHTS @ np.abs(fh) ** 2)


def _h1_inner(h1, h2):
    f1 = _as_eval(h1)(_NODES)
    f2 = _as_eval(h2)(_NODES)
    return 0.5 * float(np.real(_WEIGHTS @ (f1 * np.conj(f2))))


@dataclass(frozen=True)
class OrthoBasisV:
    """The orthogonal basis (d_s Q, iQ - d_s Q, Q + 2i d_s Q, Q) of the real
    span of the ground state and its symmetry derivatives."""

    members: tuple
    names: tuple = ("dsQ", "iQ_minus_dsQ", "scaling", "Q")

    @classmethod
    def build(cls, tol=1e-10):
        cat = v0_profile_catalog()
        members = (cat["dsQ"], cat["iQ_minus_dsQ"], cat["scaling"], cat["Q"])
        for i in range(4):
            for j in range(i + 1, 4):
                ip = _h1_inner(members[i], members[j])
                sc = math.sqrt(_h1_norm_sq(members[i]) * _h1_norm_sq(members[j]))
                if abs(ip) > tol * sc:
                    raise DomainError("basis is not orthogonal: (%d,%d) -> %.3e" % (i, j, ip / sc))
        return cls(members)


def matrix_on_V(basis=None):
    """Matrix of the linearized operator restricted to the symmetry span, in
    the orthogonal basis (expansion by H^1 projections)."""
    basis = OrthoBasisV.build() if basis is None else basis
    norms = [_h1_norm_sq(b) for b in basis.members]
    M = np.zeros((4, 4))
    for n, bn in enumerate(basis.members):
        img = apply_L(bn)
        for mrow, bm in enumerate(basis.members):
            M[mrow, n] = img.h1_inner_as_field(bm) / norms[mrow]
    return M


def pairing_functionals(h):
    """(c0, c1) with c0 = pi int e^{-s} f ds  and c1 = -i pi int s e^{-s} f ds.

    c0 is the complex H^1 pairing of h with the ground state, c1 with its
    s-derivative; their real/imaginary parts are the four orthogonality
    conditions.
    """
    fh = _as_eval(h)(_NODES)
    c0 = math.pi * complex(_WEIGHTS @ (np.exp(-_NODES) * fh))
    c1 = -1j * math.pi * complex(_WEIGHTS @ (_NODES * np.exp(-_NODES) * fh))
    return c0, c1


def quadratic_form_L(h, orth_tol=1e-6, spec=QuadratureSpec(1e-10, 1e-10, 6)):
    """(L h, h) for h orthogonal to Q and iQ:
    ||h||_{H^1}^2 - 2 pi int_{C+} |F_Q|^2 |F_h|^2 dA."""
    nrm2 = _h1_norm_sq(h)
    c0, _c1 = pairing_functionals(h)
    if abs(c0) > orth_tol * math.pi * math.sqrt(max(nrm2, 1e-300)):
        raise OrthogonalityViolation("pairing with the ground state is %.3e" % abs(c0))
    prof = h if isinstance(h, SigmaProfile) else SigmaProfile.from_callable(h)
    Fh = holo_from_v0(prof)
    pot = integrate_uhp(lambda z: 2.0 / np.abs(z + 1j) ** 2 * np.abs(Fh(z)) ** 2, spec).real
    return nrm2 - _TWO_PI * pot


# ---------------------------------------------------------------------------
# sphere spectrum through the conformal equivalence


def _sphere_test_fn(name):
    """h = sqrt(2)|Q| v(C(.)) for the four lowest sphere modes, as a function
    of (q, s) through D = s + i(q+1)."""

    def base(q, s):
        D = s + 1j * (q + 1.0)
        absD = np.abs(D)
        if name == "one":
            return 2.0 / absD + 0.0j
        if name == "zeta2bar":  # pullback sqrt(2) Q - 1
            return (2.0 / absD) * (2j / D - 1.0)
        if name == "zeta2":  # pullback sqrt(2) conj(Q) - 1
            return (2.0 / absD) * (-2j / np.conj(D) - 1.0)
        if name == "zeta2sq":  # pullback 2|zeta2|^2 - 1
            v = 2.0 * (s * s + (q - 1.0) ** 2) / (absD * absD) - 1.0
            return (2.0 / absD) * v
        raise DomainError("unknown sphere mode %r" % (name,))

    return base


SPHERE_MODES = {"one": 0.25, "zeta2bar": 0.75, "zeta2": 0.75, "zeta2sq": 2.25}


def sphere_eigencheck(name, n_pan=28):
    """Rayleigh quotient (1/2)<-Delta h, h> / int |h|^2 |Q|^2 for the pullback
    test functions; equals the conformal sub-Laplacian eigenvalue.

    The Dirichlet form is pi * int q (|d_q h|^2 + |d_s h|^2) dq ds, evaluated
    on a substituted Gauss-Legendre grid with derivatives by central
    differences of the closed forms.
    """
    h = _sphere_test_fn(name)
    geo = 1.0 - np.power(2.0, -np.arange(1.0, 31.0))
    ue = np.concatenate((np.linspace(0.0, 0.5, n_pan + 1)[:-1], geo, [1.0]))
    glx, glw = kernels.gauss_legendre(12)
    umid, uhalf = 0.5 * (ue[1:] + ue[:-1]), 0.5 * (ue[1:] - ue[:-1])
    u = (umid[:, None] + uhalf[:, None] * glx[None, :]).ravel()
    wu = (uhalf[:, None] * glw[None, :]).ravel()
    q = 2.0 * u / (1.0 - u)
    jq = 2.0 / (1.0 - u) ** 2
    we = np.concatenate((-ue[::-1], ue[1:]))
    wmid, whalf = 0.5 * (we[1:] + we[:-1]), 0.5 * (we[1:] - we[:-1])
    w = (wmid[:, None] + whalf[:, None] * glx[None, :]).ravel()
    ww = (whalf[:, None] * glw[None, :]).ravel()
    s = 3.0 * w / (1.0 - w * w)
    js = 3.0 * (1.0 + w * w) / (1.0 - w * w) ** 2

    Q, S = np.meshgrid(q, s, indexing="ij")
    dq = 1e-5 * (1.0 + Q)
    dsd = 1e-5 * (1.0 + np.abs(S))
    hq = (h(Q + dq, S) - h(Q - dq, S)) / (2.0 * dq)
    hs = (h(Q, S + dsd) - h(Q, S - dsd)) / (2.0 * dsd)
    hv = h(Q, S)
    q2abs = 2.0 / ((Q + 1.0) ** 2 + S * S)  # |ground state|^2
    wgt = (wu * jq * q)[:, None] * (ww * js)[None, :]
    num = 0.5 * math.pi * float(np.sum(wgt * (np.abs(hq) ** 2 + np.abs(hs) ** 2)))
    den = math.pi * float(np.sum((wu * jq)[:, None] * (ww * js)[None, :] * np.abs(hv) ** 2 * q2abs))
    return num / den


# ---------------------------------------------------------------------------
# Rayleigh sampling of the coercivity bound


_BUMP_P = (1, 2, 3, 4)
_BUMP_A = (0.55, 0.8, 1.0, 1.35, 1.9, 3.0)


def _bump_labels():
    return [(p, a) for p in _BUMP_P for a in _BUMP_A]


def _factorial(n):
    return math.factorial(n)


def _bump_grams(spec=QuadratureSpec(1e-11, 1e-11, 5)):
    """Analytic H^1 Gram and constraint vectors; quadrature Gram of the
    potential term 2 pi <|F_Q|^2 F_j, F_k> for the bump dictionary."""
    labels = _bump_labels()
    n = len(labels)
    G1 = np.empty((n, n))
    for i, (p, a) in enumerate(labels):
        for j, (pp, aa) in enumerate(labels):
            G1[i, j] = 0.5 * _factorial(p + pp) / (a + aa) ** (p + pp + 1)
    L1 = np.array([_factorial(p) / (a + 1.0) ** (p + 1) for p, a in labels])
    L2 = np.array([_factorial(p + 1) / (a + 1.0) ** (p + 2) for p, a in labels])

    # Gram of the potential term: all pairs in one weighted pass over the
    # quadrature nodes, verified against one panel-doubling
    from .numerics import uhp_nodes

    def batch(zflat):
        col = np.empty((n, zflat.size), dtype=np.complex128)
        for i, (p, a) in enumerate(labels):
            col[i] = _factorial(p) / (math.pi * math.sqrt(2.0)) / (a - 1j * zflat) ** (p + 1)
        return col

    def gram_at(n_pan):
        z, wt = uhp_nodes(n_pan)
        cols = batch(z)
        return (cols * (wt * 2.0 / np.abs(z + 1j) ** 2)) @ np.conj(cols.T)

    Ga, Gb = gram_at(8), gram_at(16)
    if np.max(np.abs(Ga - Gb)) > 1e-9 * max(np.max(np.abs(Gb)), 1e-30):
        raise DomainError("potential Gram failed to converge")
    return labels, G1, L1, L2, Gb


_GRAM_CACHE = {}


def _grams():
    if "data" not in _GRAM_CACHE:
        _GRAM_CACHE["data"] = _bump_grams()
    return _GRAM_CACHE["data"]


def rayleigh_sample(n_samples, seed):
    """Minimum over seeded random constrained draws of
    (L h, h) / ||h||_{H^1}^2 on the lowest band.

    Draws are complex Gaussian coefficients over a smooth bump dictionary;
    the two complex constraints (pairings with the ground state and its
    derivative, i.e. the four real orthogonality conditions) are projected
    out in the H^1 geometry before evaluating the form.
    """
    if n_samples < 1:
        raise DomainError("need at least one sample")
    labels, G1, L1, L2, GV = _grams()
    n = len(labels)
    Lmat = np.stack([L1, L2], axis=0)  # complex-linear constraint rows
    rho = np.linalg.solve(G1, np.conj(Lmat.T))  # representers, (n, 2)
    Mc = Lmat @ rho  # 2x2
    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(n_samples):
        c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        alpha = np.linalg.solve(Mc, Lmat @ c)
        c = c - rho @ alpha
        nrm2 = float(np.real(np.conj(c) @ G1 @ c))
        if nrm2 <= 1e-20:
            raise DegenerateSample("constraint projection annihilated a draw")
        pot = float(np.real(np.conj(c) @ GV @ c))
        best = min(best, 1.0 - _TWO_PI * pot / nrm2)
    return best


# ---------------------------------------------------------------------------
# full assembly


@dataclass
class CoercivityReport:
    p0_inners: list
    table_inners: dict
    C: float
    delta: float
    kernel_residuals: list
    rayleigh_min: float
    samples: int
    seed: int
    extras: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "p0_inners": self.p0_inners,
            "table_inners": self.table_inners,
            "C": self.C,
            "delta": self.delta,
            "kernel_residuals": self.kernel_residuals,
            "rayleigh_min": self.rayleigh_min,
            "samples": self.samples,
            "seed": self.seed,
            "extras": self.extras,
        }


TABLE_EXACT = {
    "<F1,F1>": math.pi / 4.0,
    "<F2,F2>": math.pi / 8.0,
    "<F3,F3>": math.pi / 8.0,
    "<F1,FQ'>": -2.0 * math.sqrt(2.0) / 3.0,
    "<F2,FQ'>": -2.0 * math.sqrt(2.0) / 9.0,
    "<F3,FQ'>": 2.0 * math.sqrt(2.0) / 15.0,
    "<F1,Ftilde>": -2.0 * math.sqrt(2.0) / 15.0,
    "<F2,Ftilde>": 14.0 * math.sqrt(2.0) / 45.0,
    "<F3,Ftilde>": 2.0 * math.sqrt(2.0) / 35.0,
}


def assemble_coercivity(spec=QuadratureSpec(1e-11, 1e-11, 6), samples=200, seed=7):
    """Full numerical re-derivation of the coercivity constant:

    * the three projected diagonal inner products, by quadrature of the
      closed-form projections;
    * the nine inner products of the comparison functions with themselves
      and with the two derivative directions;
    * the constant C (weights 2, 1, 1 against the squared norms), the gap
      delta = 2(1 - 1/(1 + (1-2C)/4));
    * kernel residuals of the three symmetry directions;
    * the minimum sampled Rayleigh quotient on the constrained complement.
    """
    p0 = [math.pi * projected_diag_inner(j, spec).real for j in (1, 2, 3)]
    fqp = HoloFn.catalog("F_Q'")
    ftil = HoloFn.catalog("F_tilde")
    table = {}
    for j in (1, 2, 3):
        Fj = plane_test_fn(j)
        table["<F%d,F%d>" % (j, j)] = inner_uhp(Fj, Fj, spec).real
        table["<F%d,FQ'>" % j] = _realish(inner_uhp(Fj, fqp, spec))
        table["<F%d,Ftilde>" % j] = _realish(inner_uhp(Fj, ftil, spec))
    pw = []
    for j, norm_sq in ((1, table["<F1,F1>"]), (2, table["<F2,F2>"]), (3, table["<F3,F3>"])):
        val = (
            p0[j - 1] / math.pi
            - (2.0 / math.pi) * abs(table["<F%d,FQ'>" % j]) ** 2
            - (4.0 / math.pi) * abs(table["<F%d,Ftilde>" % j]) ** 2
        )
        pw.append(val / norm_sq)
    C = 2.0 * pw[0] + pw[1] + pw[2]
    if not C < 0.5:
        raise CoercivityViolation("assembled constant C = %.6f >= 1/2" % C)
    delta = 2.0 * (1.0 - 1.0 / (1.0 + (1.0 - 2.0 * C) / 4.0))
    cat = v0_profile_catalog()
    kernel_residuals = []
    for name in ("dsQ", "iQ", "scaling"):
        img = apply_L(cat[name])
        kernel_residuals.append(img.h_minus1_norm() / math.sqrt(_h1_norm_sq(cat[name])))
    r_min = rayleigh_sample(samples, seed)
    return CoercivityReport(
        p0_inners=p0,
        table_inners=table,
        C=C,
        delta=delta,
        kernel_residuals=kernel_residuals,
        rayleigh_min=r_min,
        samples=samples,
        seed=seed,
        extras={"pw_inners_normalized": pw},
    )


def _realish(z):
    return float(z.real)


def symmetry_jacobian():
    """Numeric 3x3 matrix of H^1 pairings between the symmetry generators
    (d/ds0, d/dtheta, d/dalpha at the identity) and the three constraint
    directions (dsQ, iQ, scaling)."""
    cat = v0_profile_catalog()
    gens = (cat["dsQ"], cat["iQ"], cat["scaling"].scaled(-1.0))
    cons = (cat["dsQ"], cat["iQ"], cat["scaling"])
    return np.array([[_h1_inner(g, c) for g in gens] for c in cons])


# ---------------------------------------------------------------------------
# linearized operator around a traveling wave


class DualBandField:
    """Banded dual densities d = f/(2 sigma) on a solver workspace."""

    def __init__(self, ws, density):
        self.ws = ws
        self.density = density

    def h_minus1_norm(self):
        return math.sqrt(self.ws.hminus1_sq_density(self.density))

    def values(self):
        return 2.0 * self.ws.sig[None, None, :] * self.density

    def to_bandfield(self):
        return self.ws.to_bandfield(self.values())


def _lbeta_ingredients(result):
    ws = result._ws
    if ws is None or result._coef is None:
        raise DomainError("result does not carry solver internals")
    u = ws.synth(result._coef)
    return ws, u


def apply_Lbeta(h, result, beta=None):
    """L_{Q_beta} h = -(Delta + beta D_s) h /(1-beta) - 2|Q|^2 h - Q^2 conj(h)
    on the solver discretization; h may be a BandField or a coefficient array."""
    beta = result.beta if beta is None else beta
    ws, u = _lbeta_ingredients(result)
    F = h if isinstance(h, np.ndarray) else ws.from_bandfield(h)
    v = ws.synth(F)
    cubic = ws.cubic_density(2.0 * np.abs(u) ** 2 * v + u * u * np.conj(v))
    dens = ws.multiplier(beta) / (2.0 * (1.0 - beta)) * F - cubic
    return DualBandField(ws, dens)


def _augmented(result, beta=None):
    ws, u = _lbeta_ingredients(result)
    return AugmentedOperator(ws, u, result.beta if beta is None else beta)


def invertibility_margin(result, beta=None, basis_size=240, check_stability=True):
    """Smallest singular value of the augmented linearized operator on an
    H^1-orthonormalized truncated basis (H^{-1} norm on the output side,
    three rank-one pairing rows appended)."""
    op = _augmented(result, beta)
    ws = op.ws
    basis = _reduced_basis(ws, result, basis_size)
    cols = []
    for F in basis:
        cols.append(op.matvec(pack(F)))
        cols.append(op.matvec(pack(1j * F)))
    A = np.stack(cols, axis=1)
    margin = float(np.linalg.svd(A, compute_uv=False)[-1])
    if check_stability:
        refined = invertibility_margin(result, beta, basis_size + 8, check_stability=False)
        if abs(refined - margin) > 0.1 * max(margin, 1e-300):
            import warnings

            warnings.warn(
                "margin not stable under basis refinement: %.3e -> %.3e" % (margin, refined),
                TruncationWarning,
            )
    return margin


def margin_without_rows(result, beta=None, basis_size=240):
    """Same as invertibility_margin but without the pairing rows (exposes the
    symmetry kernel)."""
    op = _augmented(result, beta)
    ws = op.ws
    basis = _reduced_basis(ws, result, basis_size)
    cols = []
    for F in basis:
        for G in (F, 1j * F):
            HD = op.dhalf * op.apply_linearized(G)
            cols.append(pack(HD))
    A = np.stack(cols, axis=1)
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def _reduced_basis(ws, result, basis_size):
    """H^1-orthonormal truncated dictionary: per-band smooth sigma-shapes,
    augmented with the discrete symmetry directions of the solution."""
    shapes = [(p, c) for p in (1, 2, 3, 4, 5) for c in (0.5, 0.75, 1.1, 1.6, 2.4, 3.5, 5.0, 7.5)]
    fields = []
    F0 = result._coef
    g_s, g_th, g_al = ws.d_salpha_generators(F0)
    fields.extend([g_s, g_th, g_al])
    order = [(i, idx) for i in range(len(shapes)) for idx in range(2 * ws.nb)]
    for i, idx in order[: max(basis_size - 3, 1)]:
        p, c = shapes[i]
        F = ws.zeros()
        sgn, k = divmod(idx, ws.nb)
        F[sgn, k] = ws.sig ** p * np.exp(-c * ws.sig)
        fields.append(F)
    # H^1 Gram and orthonormalization (drop near-dependent directions)
    stack = np.stack(fields)  # (n, 2, nb, M)
    wts = (ws.multiplier(0.0) / 2.0 * ws.dsig)[None]
    G = np.einsum("iskm,jskm->ij", np.conj(stack) * wts, stack).real.T
    G = 0.5 * (G + G.T)
    vals, vecs = np.linalg.eigh(G)
    keep = vals > 1e-10 * vals.max()
    T = vecs[:, keep] / np.sqrt(vals[keep])
    combo = np.einsum("nj,nskm->jskm", T, stack)
    return [combo[j] for j in range(combo.shape[0])]


def solve_qdot(beta, result, config=None, iter_lim=4000):
    """Parameter derivative of the traveling-wave family: least-squares
    solution of the augmented system

        L_{Q_beta} x = -(Delta + D_s) Q_beta / (1-beta)^2,
        (x, dsQ) = (x, iQ) = (x, scaling) = 0   (H^1 pairings),

    solved matrix-free over the full coefficient space."""
    from scipy.sparse.linalg import LinearOperator, lsqr

    op = _augmented(result, beta)
    ws = op.ws
    F0 = result._coef
    mult1 = np.empty((2, ws.nb, 1))
    mult1[0, :, 0] = 2.0 * ws.kvec          # (2k+1) - 1
    mult1[1, :, 0] = 2.0 * ws.kvec + 2.0    # (2k+1) + 1
    # d/dbeta of the equation: L(qdot) = -d_beta[-(Delta+beta D_s)/(1-beta)]Q,
    # i.e. +(Delta + D_s) Q / (1-beta)^2; density of (Delta + D_s)Q is
    # -((2k+1) -/+ 1)/2 f, so the packed right side carries a minus sign.
    rhs_dens = -mult1 / (2.0 * (1.0 - beta) ** 2) * F0
    b = np.concatenate([pack(op.dhalf * rhs_dens), np.zeros(3)])
    lin = LinearOperator(op.shape, matvec=op.matvec, rmatvec=op.rmatvec)
    sol = lsqr(lin, b, atol=1e-12, btol=1e-12, iter_lim=iter_lim)
    x, istop, itn, r1norm = sol[0], sol[1], sol[2], sol[3]
    if istop not in (1, 2):
        raise SingularSystem("least-squares solve stopped with flag %d" % istop)
    X = unpack(ws, x)
    normal_res = np.linalg.norm(op.rmatvec(op.matvec(x) - b)) / max(np.linalg.norm(op.rmatvec(b)), 1e-300)
    return ws.to_bandfield(X), {
        "lsqr_iters": itn,
        "residual_norm": r1norm,
        "normal_eq_residual": normal_res,
        "coef": X,
    }


def pin_orthogonality(result, tol=1e-11, max_iter=60):
    """Move a solved traveling wave along the symmetry family so that it is
    H^1-orthogonal to the three constraint directions (Newton in the three
    symmetry parameters).  Returns the pinned coefficient array."""
    ws = result._ws
    F = result._coef.copy()
    dirs = pairing_rows(ws)
    weight = ws.multiplier(0.0) / 2.0 * ws.dsig

    def constraints(F):
        return np.array([float(np.sum((weight * (F * np.conj(D))).real)) for D in dirs])

    def at(params):
        return ws.apply_symmetry_coef(F, s0=params[0], theta=params[1], alpha=math.exp(params[2]))

    params = np.zeros(3)
    Fc = at(params)
    c = constraints(Fc)
    for _ in range(max_iter):
        if np.max(np.abs(c)) < tol * math.pi ** 2:
            return Fc
        gens = ws.d_salpha_generators(Fc)
        J = np.empty((3, 3))
        for col, g in enumerate(gens):
            gc = g if col != 2 else g * math.exp(params[2])
            for row, D in enumerate(dirs):
                J[row, col] = float(np.sum((weight * (gc * np.conj(D))).real))
        try:
            step = np.linalg.solve(J, -c)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem("orthogonality pinning Jacobian is singular") from exc
        big = np.max(np.abs(step))
        if big > 0.4:
            step *= 0.4 / big
        nrm0 = ws.h1_sq(Fc)
        t = 1.0
        while t > 1e-6:
            trial = params + t * step
            F_try = at(trial)
            c_try = constraints(F_try)
            if np.max(np.abs(c_try)) < np.max(np.abs(c)) and ws.h1_sq(F_try) > 0.25 * nrm0:
                params, Fc, c = trial, F_try, c_try
                break
            t *= 0.5
        else:
            raise SingularSystem("orthogonality pinning stalled")
    raise SingularSystem("orthogonality pinning did not converge")


def _with_coef(result, F):
    import copy

    r = copy.copy(result)
    r._coef = F
    return r


def _project_out_tangents(ws, V, base):
    """H^1-orthogonal projection of V against the three symmetry tangents of
    ``base`` (the canonicalization of a parameter derivative: the equation
    determines it only transversally to the symmetry orbit)."""
    tangents = ws.d_salpha_generators(base)
    G = np.array([[ws.h1_inner(a, b) for b in tangents] for a in tangents])
    rhs = np.array([ws.h1_inner(V, t) for t in tangents])
    coef = np.linalg.solve(G, rhs)
    out = V.copy()
    for c, t in zip(coef, tangents):
        out = out - c * t
    return out


def fd_compare(beta, dbeta, config=None, result=None):
    """Relative H^1 error between the linear-system parameter derivative and
    a central finite difference of two nearby solves.

    Both derivatives are canonicalized by projecting out the symmetry
    tangents at the center solution (the equation determines the derivative
    only transversally to the symmetry orbit, and the discrete solves may
    wander along the almost-flat dilation direction between speeds)."""
    config = QBetaConfig() if config is None else config
    if result is None:
        result = solve_qbeta(beta, config)
    ws = result._ws
    center = result._coef
    _field, info = solve_qdot(beta, result)
    Xdot = _project_out_tangents(ws, info["coef"], center)
    slice_dirs = list(ws.d_salpha_generators(center))
    sols = {}
    for b in (beta - dbeta, beta + dbeta):
        r = solve_qbeta(b, config, ws=ws, init=center, slice_dirs=slice_dirs)
        sols[b] = r._coef
    fd = (sols[beta + dbeta] - sols[beta - dbeta]) / (2.0 * dbeta)
    fd = _project_out_tangents(ws, fd, center)
    diff = fd - Xdot
    return math.sqrt(ws.h1_sq(diff)) / max(math.sqrt(ws.h1_sq(Xdot)), 1e-300)
