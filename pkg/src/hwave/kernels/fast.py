"""Numba-jitted kernels, signature-compatible with :mod:`hwave.kernels.pure`."""

import numpy as np
from numba import njit


@njit(cache=True)
def _interp_one(xg, yg, x):
    n = xg.shape[0]
    if x > xg[n - 1]:
        return 0.0 + 0.0j
    j = np.searchsorted(xg, x) - 1
    if j < 0:
        j = 0
    j -= 1
    if j < 0:
        j = 0
    if j > n - 4:
        j = n - 4
    x0 = xg[j]
    x1 = xg[j + 1]
    x2 = xg[j + 2]
    x3 = xg[j + 3]
    l0 = ((x - x1) * (x - x2) * (x - x3)) / ((x0 - x1) * (x0 - x2) * (x0 - x3))
    l1 = ((x - x0) * (x - x2) * (x - x3)) / ((x1 - x0) * (x1 - x2) * (x1 - x3))
    l2 = ((x - x0) * (x - x1) * (x - x3)) / ((x2 - x0) * (x2 - x1) * (x2 - x3))
    l3 = ((x - x0) * (x - x1) * (x - x2)) / ((x3 - x0) * (x3 - x1) * (x3 - x2))
    return yg[j] * l0 + yg[j + 1] * l1 + yg[j + 2] * l2 + yg[j + 3] * l3


@njit(cache=True)
def cubic_interp(xg, yg, x):
    flat = x.ravel()
    out = np.empty(flat.shape[0], dtype=np.complex128)
    for i in range(flat.shape[0]):
        out[i] = _interp_one(xg, yg, flat[i])
    return out.reshape(x.shape)


@njit(cache=True)
def self_convolution(sig_out, xg, yg, glx, glw):
    out = np.empty(sig_out.shape[0], dtype=np.complex128)
    for i in range(sig_out.shape[0]):
        s = sig_out[i]
        half = 0.5 * s
        acc = 0.0 + 0.0j
        for k in range(glx.shape[0]):
            t = half * (glx[k] + 1.0)
            acc += glw[k] * _interp_one(xg, yg, t) * _interp_one(xg, yg, s - t)
        out[i] = acc * half
    return out


@njit(cache=True)
def el_correlation(tau_out, xg_g, yg_g, xg_f, yg_f, upper, edges, glx, glw):
    out = np.zeros(tau_out.shape[0], dtype=np.complex128)
    ne = edges.shape[0]
    for j in range(tau_out.shape[0]):
        tau = tau_out[j]
        length = upper - tau
        if length <= 0.0:
            continue
        acc = 0.0 + 0.0j
        lo = 0.0
        for p in range(ne + 1):
            hi = length if p == ne else min(edges[p], length)
            if hi <= lo:
                continue
            a = tau + lo
            b = tau + hi
            mid = 0.5 * (a + b)
            half = 0.5 * (b - a)
            for k in range(glx.shape[0]):
                sg = mid + half * glx[k]
                acc += (
                    half
                    * glw[k]
                    * _interp_one(xg_g, yg_g, sg)
                    * np.conj(_interp_one(xg_f, yg_f, sg - tau))
                    / sg
                )
            lo = hi
            if hi >= length:
                break
        out[j] = acc
    return out


@njit(cache=True)
def filon_weights(sigma0, h, nsig, svals):
    ns = svals.shape[0]
    W = np.zeros((ns, nsig), dtype=np.complex128)
    for i in range(ns):
        t = svals[i] * h
        if abs(t) < 0.05:
            t2 = t * t
            m0 = 2.0 * (1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0)
            m1 = 2.0j * t * (1.0 / 3.0 - t2 / 30.0 + t2 * t2 / 840.0)
            m2 = 2.0 * (1.0 / 3.0 - t2 / 10.0 + t2 * t2 / 168.0)
        else:
            st = np.sin(t)
            ct = np.cos(t)
            m0 = 2.0 * st / t + 0.0j
            m1 = 2.0j * (st - t * ct) / (t * t)
            m2 = 2.0 * ((t * t - 2.0) * st + 2.0 * t * ct) / (t * t * t) + 0.0j
        wl = 0.5 * (m2 - m1)
        wm = m0 - m2
        wr = 0.5 * (m2 + m1)
        for c in range(1, nsig - 1, 2):
            phase = h * np.exp(1j * svals[i] * (sigma0 + h * c))
            W[i, c - 1] += phase * wl
            W[i, c] += phase * wm
            W[i, c + 1] += phase * wr
    return W
