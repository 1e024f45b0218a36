"""Reference numpy implementations of the numeric inner-loop kernels.

Every function here has a numba twin in :mod:`hwave.kernels.fast` with the
same signature and semantics; :mod:`hwave.kernels` picks the backend.
All kernels are pure functions of ndarray inputs so the two paths can be
compared bit-for-bit in the benchmark and in tests.
"""

import numpy as np

__all__ = [
    "cubic_interp",
    "self_convolution",
    "el_correlation",
    "filon_weights",
]


def cubic_interp(xg, yg, x):
    """4-point Lagrange interpolation of samples ``yg`` on the increasing
    grid ``xg``, evaluated at the points ``x``.

    Below ``xg[0]`` the first cubic is extrapolated (profiles in this
    package are smooth at 0); above ``xg[-1]`` the value is 0 (decaying
    tails).
    """
    x = np.asarray(x, dtype=np.float64)
    n = xg.shape[0]
    out = np.zeros(x.shape, dtype=np.complex128)
    inside = x <= xg[-1]
    xi = x[inside]
    # stencil start: bracket index clipped to [0, n-4]
    j = np.searchsorted(xg, xi, side="right") - 1
    j = np.clip(j - 1, 0, n - 4)
    x0 = xg[j]
    x1 = xg[j + 1]
    x2 = xg[j + 2]
    x3 = xg[j + 3]
    y0 = yg[j]
    y1 = yg[j + 1]
    y2 = yg[j + 2]
    y3 = yg[j + 3]
    l0 = ((xi - x1) * (xi - x2) * (xi - x3)) / ((x0 - x1) * (x0 - x2) * (x0 - x3))
    l1 = ((xi - x0) * (xi - x2) * (xi - x3)) / ((x1 - x0) * (x1 - x2) * (x1 - x3))
    l2 = ((xi - x0) * (xi - x1) * (xi - x3)) / ((x2 - x0) * (x2 - x1) * (x2 - x3))
    l3 = ((xi - x0) * (xi - x1) * (xi - x2)) / ((x3 - x0) * (x3 - x1) * (x3 - x2))
    out[inside] = y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3
    return out


def self_convolution(sig_out, xg, yg, glx, glw):
    """g(s) = int_0^s f(s-t) f(t) dt at each s in ``sig_out``.

    ``f`` is the cubic interpolant of (``xg``, ``yg``); Gauss-Legendre
    nodes/weights (``glx``, ``glw``) on [-1, 1] are mapped to [0, s].
    """
    s = np.asarray(sig_out, dtype=np.float64)
    half = 0.5 * s[:, None]
    t = half * (glx[None, :] + 1.0)
    vals = cubic_interp(xg, yg, t) * cubic_interp(xg, yg, s[:, None] - t)
    return (vals * glw[None, :]).sum(axis=1) * half[:, 0]


def el_correlation(tau_out, xg_g, yg_g, xg_f, yg_f, upper, edges, glx, glw):
    """K(tau) = int_tau^upper g(s) conj(f(s - tau)) / s ds.

    The integration range [tau, upper] is split at tau + ``edges`` (only
    edges below the range length are used) and each panel gets the supplied
    Gauss-Legendre rule. g and f are cubic interpolants of their samples.
    """
    tau = np.asarray(tau_out, dtype=np.float64)
    out = np.zeros(tau.shape[0], dtype=np.complex128)
    full_edges = np.concatenate((np.array([0.0]), edges))
    for j in range(tau.shape[0]):
        length = upper - tau[j]
        if length <= 0.0:
            continue
        cuts = np.concatenate((full_edges[full_edges < length], np.array([length])))
        acc = 0.0 + 0.0j
        for p in range(cuts.shape[0] - 1):
            a = tau[j] + cuts[p]
            b = tau[j] + cuts[p + 1]
            mid = 0.5 * (a + b)
            half = 0.5 * (b - a)
            sg = mid + half * glx
            vals = (
                cubic_interp(xg_g, yg_g, sg)
                * np.conj(cubic_interp(xg_f, yg_f, sg - tau[j]))
                / sg
            )
            acc += half * np.sum(vals * glw)
        out[j] = acc
    return out


def _filon_moments(theta):
    """Moments m_k = int_{-1}^{1} xi^k e^{i theta xi} d xi for k = 0, 1, 2."""
    theta = np.asarray(theta, dtype=np.float64)
    m0 = np.empty(theta.shape, dtype=np.complex128)
    m1 = np.empty(theta.shape, dtype=np.complex128)
    m2 = np.empty(theta.shape, dtype=np.complex128)
    small = np.abs(theta) < 0.05
    t = theta[small]
    t2 = t * t
    m0[small] = 2.0 * (1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0)
    m1[small] = 2.0j * t * (1.0 / 3.0 - t2 / 30.0 + t2 * t2 / 840.0)
    m2[small] = 2.0 * (1.0 / 3.0 - t2 / 10.0 + t2 * t2 / 168.0)
    t = theta[~small]
    st = np.sin(t)
    ct = np.cos(t)
    m0[~small] = 2.0 * st / t
    m1[~small] = 2.0j * (st - t * ct) / (t * t)
    m2[~small] = 2.0 * ((t * t - 2.0) * st + 2.0 * t * ct) / (t * t * t)
    return m0, m1, m2


def filon_weights(sigma0, h, nsig, svals):
    """Weight matrix W with  int g(sigma) e^{i s sigma} d sigma = W @ g.

    Quadratic (Filon-Simpson) interpolation of g on the uniform grid
    sigma0 + h*[0..nsig-1] (nsig odd); the oscillatory factor is integrated
    exactly, so the error is O(h^4) uniformly in s.  Shape: (len(svals), nsig).
    """
    if nsig % 2 != 1 or nsig < 3:
        raise ValueError("filon_weights needs an odd number of nodes >= 3")
    s = np.asarray(svals, dtype=np.float64)
    m0, m1, m2 = _filon_moments(s * h)
    wl = 0.5 * (m2 - m1)
    wm = m0 - m2
    wr = 0.5 * (m2 + m1)
    W = np.zeros((s.shape[0], nsig), dtype=np.complex128)
    centers = np.arange(1, nsig - 1, 2)
    phase = np.exp(1j * np.outer(s, sigma0 + h * centers)) * h
    W[:, centers - 1] += phase * wl[:, None]
    W[:, centers] += phase * wm[:, None]
    W[:, centers + 1] += phase * wr[:, None]
    return W
